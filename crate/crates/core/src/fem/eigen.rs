//! Lowest eigenpairs of `K v = lambda M v`.
//!
//! The iteration works with `B = (K + M)^{-1} M`, whose eigenvalues
//! `mu = 1 / (1 + lambda)` are largest for the smallest `lambda`. Each cycle
//! builds a block Krylov space of `B` from the current block, orthonormalizes
//! it in the `M` inner product and extracts Ritz pairs from `V^H K V`. The
//! best Ritz vectors seed the next cycle.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::HermitianPair;
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, CsrMatrix, Symbolic};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Bound on the relative residual, measured in the norm dual to
    /// `K + M`: `||K v - lambda M v||_* / ||v||_{K+M}`.
    pub tol: f64,
    pub max_cycles: usize,
    /// Extra block columns beyond the requested count.
    pub guard: usize,
    /// Krylov blocks per cycle.
    pub krylov_blocks: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_cycles: 50,
            guard: 3,
            krylov_blocks: 5,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct EigResult {
    pub values: Vec<f64>,
    /// `M`-orthonormal reduced coefficient vectors.
    pub vectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    pub cycles: usize,
}

impl std::fmt::Debug for EigResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EigResult")
            .field("values", &self.values)
            .field("residuals", &self.residuals)
            .field("cycles", &self.cycles)
            .field("n_dofs", &self.vectors.first().map_or(0, Vec::len))
            .finish_non_exhaustive()
    }
}

impl EigResult {
    /// Eigenvalues `1 / (1 + lambda)` of the operator `(K + M)^{-1} M`.
    pub fn operator_values(&self) -> Vec<f64> {
        self.values.iter().map(|l| 1.0 / (1.0 + l)).collect()
    }
}

fn m_dot(mx: &[Complex64], y: &[Complex64]) -> Complex64 {
    // y^H (M x)
    let mut s = Complex64::new(0.0, 0.0);
    for (a, b) in mx.iter().zip(y) {
        s += b.conj() * a;
    }
    s
}

/// Appends the columns of `block` to `basis` after `M`-orthonormalization;
/// near-dependent columns are dropped.
fn extend_basis(
    m: &CsrMatrix<Complex64>,
    basis: &mut Vec<Vec<Complex64>>,
    m_basis: &mut Vec<Vec<Complex64>>,
    block: Vec<Vec<Complex64>>,
) {
    for mut w in block {
        let norm0 = m_dot(&m.mul_vec(&w), &w).re.max(0.0).sqrt();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for (v, mv) in basis.iter().zip(m_basis.iter()) {
                // coefficient v^H M w = (M v)^H w
                let c = m_dot(&w, mv);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let mw = m.mul_vec(&w);
        let norm = m_dot(&mw, &w).re.max(0.0).sqrt();
        if norm <= 1e-10 * norm0 {
            continue;
        }
        let inv = 1.0 / norm;
        w.iter_mut().for_each(|x| *x *= inv);
        basis.push(w);
        m_basis.push(mw.into_iter().map(|x| x * inv).collect());
    }
}

fn random_block(n: usize, b: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..b)
        .map(|_| {
            (0..n)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect()
        })
        .collect()
}

/// Rotates `v` so that its largest component is real and positive.
fn fix_phase(v: &mut [Complex64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.norm_sqr() > v[best].norm_sqr() * (1.0 + 1e-9) {
            best = i;
        }
    }
    let a = v[best];
    if a.norm() > 0.0 {
        let rot = a.conj() / a.norm();
        v.iter_mut().for_each(|x| *x *= rot);
    }
}

/// The `count` smallest eigenpairs of the pair.
pub fn solve_lowest(pair: &HermitianPair, count: usize, opts: EigenOptions) -> Result<EigResult> {
    solve_lowest_with(pair, count, opts, None)
}

/// Same as [`solve_lowest`], reusing the symbolic factorization when given.
pub fn solve_lowest_with(
    pair: &HermitianPair,
    count: usize,
    opts: EigenOptions,
    symbolic: Option<Arc<Symbolic>>,
) -> Result<EigResult> {
    let n = pair.n_dofs();
    if count == 0 || count > n {
        return Err(Error::Domain(format!(
            "cannot compute {count} eigenpairs of a {n}-dof problem"
        )));
    }
    let a = pair.energy_matrix();
    let chol = match symbolic {
        Some(s) => Cholesky::factor_with(s, &a)?,
        None => Cholesky::factor(&a)?,
    };
    let b = (count + opts.guard).min(n);
    let max_basis = n.min(b * opts.krylov_blocks);
    let mut block = random_block(n, b, opts.seed);
    let mut last: Option<EigResult> = None;
    let mut worst = f64::INFINITY;

    for cycle in 1..=opts.max_cycles {
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(max_basis);
        let mut m_basis: Vec<Vec<Complex64>> = Vec::with_capacity(max_basis);
        let mut w = block;
        loop {
            let start = basis.len();
            extend_basis(&pair.m, &mut basis, &mut m_basis, w);
            if basis.len() >= max_basis || basis.len() == start {
                break;
            }
            // next block: B applied to the vectors just added
            w = m_basis[start..].iter().map(|mv| chol.solve(mv)).collect();
            let room = max_basis - basis.len();
            w.truncate(room);
        }
        let p = basis.len();
        if p < count {
            return Err(Error::Domain("Krylov space collapsed below the requested size".into()));
        }

        let k_basis: Vec<Vec<Complex64>> = basis.iter().map(|v| pair.k.mul_vec(v)).collect();
        let g = DMatrix::from_fn(p, p, |i, j| {
            let gij = m_dot(&k_basis[j], &basis[i]);
            let gji = m_dot(&k_basis[i], &basis[j]);
            (gij + gji.conj()) * 0.5
        });
        let eig = nalgebra::SymmetricEigen::new(g);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

        let ritz = |k: usize| -> Vec<Complex64> {
            let col = order[k];
            let mut x = vec![Complex64::new(0.0, 0.0); n];
            for (i, v) in basis.iter().enumerate() {
                let c = eig.eigenvectors[(i, col)];
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += c * vi;
                }
            }
            x
        };
        let keep = b.min(p);
        let vectors: Vec<Vec<Complex64>> = (0..keep).map(ritz).collect();
        let values: Vec<f64> = (0..keep).map(|k| eig.eigenvalues[order[k]].max(0.0)).collect();

        let mut residuals = Vec::with_capacity(count);
        for (x, &lam) in vectors.iter().zip(&values).take(count) {
            let kx = pair.k.mul_vec(x);
            let mx = pair.m.mul_vec(x);
            let r: Vec<Complex64> = kx.iter().zip(&mx).map(|(a, b)| a - b * lam).collect();
            // r^H (K + M)^{-1} r over x^H (K + M) x, with x M-normalized
            let dual = m_dot(&chol.solve(&r), &r).re.max(0.0);
            let energy = m_dot(&kx, x).re + m_dot(&mx, x).re;
            residuals.push((dual / energy.max(f64::MIN_POSITIVE)).sqrt());
        }
        worst = residuals.iter().copied().fold(0.0, f64::max);
        let mut out_vecs: Vec<Vec<Complex64>> = vectors[..count].to_vec();
        out_vecs.iter_mut().for_each(|v| fix_phase(v));
        let result = EigResult {
            values: values[..count].to_vec(),
            vectors: out_vecs,
            residuals,
            cycles: cycle,
        };
        if worst <= opts.tol {
            return Ok(result);
        }
        last = Some(result);
        block = vectors;
    }
    Err(Error::NotConverged {
        iterations: opts.max_cycles,
        residual: worst,
        partial: last.map(Box::new),
    })
}
