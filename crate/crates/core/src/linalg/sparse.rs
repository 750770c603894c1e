use super::Scalar;

/// Accumulates `(row, col, value)` entries; duplicates are summed.
#[derive(Debug, Clone)]
pub struct TripletBuilder<T> {
    n: usize,
    entries: Vec<(u32, u32, T)>,
}

impl<T: Scalar> TripletBuilder<T> {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self {
            n,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i as u32, j as u32, v));
    }

    pub fn build(mut self) -> CsrMatrix<T> {
        self.entries.sort_unstable_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<T> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(u32, u32)> = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(j as usize);
                vals.push(v);
                row_ptr[i as usize + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            col_idx,
            vals,
        }
    }
}

/// Square compressed-sparse-row matrix with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (c, v) = self.row(i);
        match c.binary_search(&j) {
            Ok(p) => v[p],
            Err(_) => T::zero(),
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            let mut s = T::zero();
            for (j, a) in c.iter().zip(v) {
                s += *a * x[*j];
            }
            *yi = s;
        }
    }

    /// `x^H A y`
    pub fn form(&self, x: &[T], y: &[T]) -> T {
        super::dot(x, &self.mul_vec(y))
    }

    /// `alpha A + beta B` for two matrices with identical pattern.
    pub fn combine_same_pattern(&self, alpha: f64, other: &CsrMatrix<T>, beta: f64) -> CsrMatrix<T> {
        assert!(
            self.row_ptr == other.row_ptr && self.col_idx == other.col_idx,
            "patterns differ"
        );
        let vals = self
            .vals
            .iter()
            .zip(&other.vals)
            .map(|(a, b)| a.scale(alpha) + b.scale(beta))
            .collect();
        CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            vals,
        }
    }

    /// Largest `|A_ij - conj(A_ji)|` relative to the largest entry.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self
            .vals
            .iter()
            .map(|v| v.abs2())
            .fold(0.0, f64::max)
            .sqrt()
            .max(1e-300);
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                worst = worst.max((*a - self.get(*j, i).conj()).abs2().sqrt());
            }
        }
        worst / scale
    }

    /// `P A P^T` with `perm[new] = old`.
    pub fn permute(&self, perm: &[usize]) -> CsrMatrix<T> {
        let mut inv = vec![0usize; self.n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut b = TripletBuilder::with_capacity(self.n, self.nnz());
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                b.push(inv[i], inv[*j], *a);
            }
        }
        b.build()
    }

    /// Principal submatrix on the kept indices, renumbered in order.
    pub fn principal_submatrix(&self, keep: &[bool]) -> (CsrMatrix<T>, Vec<usize>) {
        let mut map = vec![usize::MAX; self.n];
        let mut kept = Vec::new();
        for i in 0..self.n {
            if keep[i] {
                map[i] = kept.len();
                kept.push(i);
            }
        }
        let mut b = TripletBuilder::new(kept.len());
        for (ni, &i) in kept.iter().enumerate() {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                if map[*j] != usize::MAX {
                    b.push(ni, map[*j], *a);
                }
            }
        }
        (b.build(), kept)
    }
}
