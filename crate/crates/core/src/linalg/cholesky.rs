//! Up-looking sparse Cholesky factorization `P A P^T = L L^H`.

use super::ordering::nested_dissection;
use super::sparse::CsrMatrix;
use super::Scalar;
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Ordering, elimination tree and column layout of `L` for one sparsity
/// pattern; reusable for every matrix sharing that pattern.
#[derive(Debug, Clone)]
pub struct Symbolic {
    n: usize,
    perm: Vec<usize>,
    parent: Vec<usize>,
    lp: Vec<usize>,
    pattern_rows: Vec<usize>,
    pattern_cols: Vec<usize>,
}

impl Symbolic {
    pub fn analyze<T: Scalar>(a: &CsrMatrix<T>) -> Self {
        let n = a.n;
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| a.row(i).0.iter().copied().filter(|&j| j != i).collect())
            .collect();
        let perm = nested_dissection(&adj);
        let c = permuted_pattern(a, &perm);
        let parent = etree(n, &c.row_ptr, &c.col_idx);

        let mut counts = vec![1usize; n];
        let mut stack = vec![0usize; n];
        let mut mark = vec![NONE; n];
        for k in 0..n {
            let top = ereach(&c.row_ptr, &c.col_idx, k, &parent, &mut stack, &mut mark);
            for &i in &stack[top..] {
                counts[i] += 1;
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + counts[k];
        }
        Self {
            n,
            perm,
            parent,
            lp,
            pattern_rows: c.row_ptr,
            pattern_cols: c.col_idx,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz_l(&self) -> usize {
        self.lp[self.n]
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }
}

struct Pattern {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

fn permuted_pattern<T: Scalar>(a: &CsrMatrix<T>, perm: &[usize]) -> Pattern {
    let n = a.n;
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            rows[inv[i]].push(inv[j]);
        }
    }
    let mut row_ptr = vec![0];
    let mut col_idx = Vec::with_capacity(a.nnz());
    for mut r in rows {
        r.sort_unstable();
        col_idx.extend(r);
        row_ptr.push(col_idx.len());
    }
    Pattern { row_ptr, col_idx }
}

/// Elimination tree of a symmetric pattern given by rows (entries `j < k` of
/// row `k` are used).
fn etree(n: usize, row_ptr: &[usize], col_idx: &[usize]) -> Vec<usize> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for &j in &col_idx[row_ptr[k]..row_ptr[k + 1]] {
            let mut i = j;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Pattern of row `k` of `L` (excluding the diagonal) in `stack[top..]`,
/// topologically ordered.
fn ereach(
    row_ptr: &[usize],
    col_idx: &[usize],
    k: usize,
    parent: &[usize],
    stack: &mut [usize],
    mark: &mut [usize],
) -> usize {
    let n = parent.len();
    let mut top = n;
    mark[k] = k;
    for &j in &col_idx[row_ptr[k]..row_ptr[k + 1]] {
        if j > k {
            break;
        }
        let mut i = j;
        let mut len = 0;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

/// Numeric factor; `solve` applies `A^{-1}`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    sym: std::sync::Arc<Symbolic>,
    li: Vec<usize>,
    lx: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        Self::factor_with(std::sync::Arc::new(Symbolic::analyze(a)), a)
    }

    pub fn factor_with(sym: std::sync::Arc<Symbolic>, a: &CsrMatrix<T>) -> Result<Self> {
        let n = sym.n;
        if a.n != n {
            return Err(Error::Domain(format!(
                "matrix of order {} for a symbolic factor of order {n}",
                a.n
            )));
        }
        let mut inv = vec![0usize; n];
        for (new, &old) in sym.perm.iter().enumerate() {
            inv[old] = new;
        }
        // upper triangle of P A P^T by columns: column k holds C(i, k), i <= k,
        // read from row perm[k] of A as conj(A(perm[k], perm[i]))
        let mut li = vec![0usize; sym.lp[n]];
        let mut lx = vec![T::zero(); sym.lp[n]];
        let mut next: Vec<usize> = sym.lp[..n].to_vec();
        let mut x = vec![T::zero(); n];
        let mut stack = vec![0usize; n];
        let mut mark = vec![NONE; n];
        for k in 0..n {
            let top = ereach(
                &sym.pattern_rows,
                &sym.pattern_cols,
                k,
                &sym.parent,
                &mut stack,
                &mut mark,
            );
            let (cols, vals) = a.row(sym.perm[k]);
            for (j, v) in cols.iter().zip(vals) {
                let i = inv[*j];
                if i <= k {
                    x[i] = v.conj();
                }
            }
            let mut d = x[k].re();
            x[k] = T::zero();
            for &i in &stack[top..] {
                let lki = x[i].scale(1.0 / lx[sym.lp[i]].re());
                x[i] = T::zero();
                for p in sym.lp[i] + 1..next[i] {
                    let r = li[p];
                    x[r] -= lx[p] * lki;
                }
                d -= lki.abs2();
                let p = next[i];
                next[i] += 1;
                li[p] = k;
                lx[p] = lki.conj();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { column: k, pivot: d });
            }
            let p = next[k];
            next[k] += 1;
            li[p] = k;
            lx[p] = T::from_real(d.sqrt());
        }
        Ok(Self { sym, li, lx })
    }

    pub fn n(&self) -> usize {
        self.sym.n
    }

    pub fn symbolic(&self) -> &std::sync::Arc<Symbolic> {
        &self.sym
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.sym.n;
        assert_eq!(b.len(), n);
        let lp = &self.sym.lp;
        let mut y: Vec<T> = self.sym.perm.iter().map(|&o| b[o]).collect();
        for j in 0..n {
            let yj = y[j].scale(1.0 / self.lx[lp[j]].re());
            y[j] = yj;
            for p in lp[j] + 1..lp[j + 1] {
                let r = self.li[p];
                y[r] -= self.lx[p] * yj;
            }
        }
        for j in (0..n).rev() {
            let mut s = y[j];
            for p in lp[j] + 1..lp[j + 1] {
                s -= self.lx[p].conj() * y[self.li[p]];
            }
            y[j] = s.scale(1.0 / self.lx[lp[j]].re());
        }
        let mut x = vec![T::zero(); n];
        for (new, &old) in self.sym.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::super::{norm2, TripletBuilder};
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Periodic 2D Laplacian plus identity with a complex twist on the seam.
    fn twisted(nx: usize, ny: usize, eta: f64) -> CsrMatrix<Complex64> {
        let id = |i: usize, j: usize| j * nx + (i % nx);
        let phase = Complex64::from_polar(1.0, eta);
        let mut b = TripletBuilder::new(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let p = id(i, j);
                b.push(p, p, Complex64::new(5.0, 0.0));
                let w = if i + 1 == nx { phase } else { Complex64::new(1.0, 0.0) };
                let q = id(i + 1, j);
                b.push(p, q, -w);
                b.push(q, p, -w.conj());
                if j + 1 < ny {
                    let q = id(i, j + 1);
                    b.push(p, q, Complex64::new(-1.0, 0.0));
                    b.push(q, p, Complex64::new(-1.0, 0.0));
                }
            }
        }
        b.build()
    }

    #[test]
    fn solves_complex_hermitian_system() {
        let a = twisted(30, 17, 0.7);
        assert!(a.hermitian_defect() < 1e-15);
        let chol = Cholesky::factor(&a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Complex64> = (0..a.n).map(|_| Complex64::new(rng.random(), rng.random())).collect();
        let b = a.mul_vec(&x);
        let y = chol.solve(&b);
        let err: Vec<Complex64> = x.iter().zip(&y).map(|(p, q)| p - q).collect();
        assert!(norm2(&err) < 1e-12 * norm2(&x));
    }

    #[test]
    fn solves_real_system_and_reuses_symbolic() {
        let n = 200;
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.push(i, i, 2.5);
            if i + 1 < n {
                b.push(i, i + 1, -1.0);
                b.push(i + 1, i, -1.0);
            }
        }
        let a = b.build();
        let chol = Cholesky::factor(&a).unwrap();
        let a2 = a.combine_same_pattern(2.0, &a, 0.0);
        let chol2 = Cholesky::factor_with(chol.symbolic().clone(), &a2).unwrap();
        let rhs = vec![1.0; n];
        let x = chol.solve(&rhs);
        let x2 = chol2.solve(&rhs);
        for (p, q) in x.iter().zip(&x2) {
            assert!((p - 2.0 * q).abs() < 1e-12);
        }
        let r: Vec<f64> = a.mul_vec(&x).iter().zip(&rhs).map(|(p, q)| p - q).collect();
        assert!(norm2(&r) < 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let mut b = TripletBuilder::new(2);
        b.push(0, 0, 1.0);
        b.push(0, 1, 2.0);
        b.push(1, 0, 2.0);
        b.push(1, 1, 1.0);
        assert!(matches!(
            Cholesky::factor(&b.build()),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }
}
