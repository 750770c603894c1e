//! Two-level extrapolation of P1 eigenvalues.
//!
//! P1 eigenvalue errors scale like `h^2` for smooth eigenfunctions, so
//! `(4 lambda_{h/2} - lambda_h) / 3` removes the leading term. The fine mesh
//! comes from a uniform 4-split, which keeps the boundary polygon fixed.

use std::sync::Arc;

use super::{assemble, eigen::solve_lowest_with, EigResult, EigenOptions};
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::linalg::Symbolic;

#[derive(Debug, Clone, PartialEq)]
pub struct Extrapolated {
    pub value: f64,
    pub coarse: f64,
    pub fine: f64,
    /// `|fine - coarse| / 3`, the size of the correction.
    pub error_bar: f64,
}

pub fn richardson(coarse: f64, fine: f64) -> Extrapolated {
    Extrapolated {
        value: (4.0 * fine - coarse) / 3.0,
        coarse,
        fine,
        error_bar: (fine - coarse).abs() / 3.0,
    }
}

/// Groups of indices whose values are not separated by more than the
/// threshold `max(10 tol (1 + lambda), error_bar)` of either neighbour.
/// Discretization splits exact multiplicities by roughly the error bar.
pub fn clusters(values: &[Extrapolated], tol: f64) -> Vec<Vec<usize>> {
    let thr = |x: &Extrapolated| (10.0 * tol * (1.0 + x.value.abs())).max(x.error_bar);
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, x) in values.iter().enumerate() {
        match out.last_mut() {
            Some(last)
                if {
                    let prev = &values[*last.last().unwrap()];
                    (x.value - prev.value).abs() <= thr(x).max(thr(prev))
                } =>
            {
                last.push(i)
            }
            _ => out.push(vec![i]),
        }
    }
    out
}

/// A mesh, its uniform refinement and their symbolic factorizations, which
/// do not depend on `eta`.
#[derive(Debug, Clone)]
pub struct RichardsonSolver {
    pub coarse: Mesh,
    pub fine: Mesh,
    sym: [Arc<Symbolic>; 2],
}

impl RichardsonSolver {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let fine = mesh.refine_uniform();
        let analyze =
            |m: &Mesh| -> Result<Arc<Symbolic>> { Ok(Arc::new(Symbolic::analyze(&assemble(m, 0.0)?.energy_matrix()))) };
        let sym = [analyze(mesh)?, analyze(&fine)?];
        Ok(Self {
            coarse: mesh.clone(),
            fine,
            sym,
        })
    }

    /// Extrapolated lowest `count` eigenvalues and the two raw solves.
    pub fn solve(
        &self,
        eta: f64,
        count: usize,
        opts: EigenOptions,
    ) -> Result<(Vec<Extrapolated>, EigResult, EigResult)> {
        let coarse = solve_lowest_with(&assemble(&self.coarse, eta)?, count, opts, Some(self.sym[0].clone()))?;
        let fine = solve_lowest_with(&assemble(&self.fine, eta)?, count, opts, Some(self.sym[1].clone()))?;
        if coarse.values.len() != fine.values.len() {
            return Err(Error::Domain("coarse and fine solves returned different counts".into()));
        }
        let ex = coarse
            .values
            .iter()
            .zip(&fine.values)
            .map(|(&c, &f)| richardson(c, f))
            .collect();
        Ok((ex, coarse, fine))
    }
}

/// One-shot [`RichardsonSolver::solve`].
pub fn solve_extrapolated(
    mesh: &Mesh,
    eta: f64,
    count: usize,
    opts: EigenOptions,
) -> Result<(Vec<Extrapolated>, EigResult, EigResult)> {
    RichardsonSolver::new(mesh)?.solve(eta, count, opts)
}
