//! Approximate eigenpairs built from limit modes and the boundary layer.
//!
//! For a limit mode `U(x1) = exp(i kappa x1)`, `kappa = eta + 2 pi j`, the
//! quasimode is
//!
//! ```text
//! X(x1) U(x1) + (1 - X(x1)) (U(0) + x1 U'(0)) + eps chi0(x1) U'(0) W(x / eps)
//! ```
//!
//! with `X(x1) = chi_+(x1/eps) + chi_-(x1/eps)`, which vanishes on the hole
//! column and equals one for `|x1| > 2 R eps`. Its companion eigenvalue of
//! `(K + M)^{-1} M` is `1 / (1 + kappa^2)`.

use std::fmt::Write as _;

use num_complex::Complex64;

use rayon::prelude::*;

use crate::cell::{solve_cell, CellSolution};
use crate::dispersion::{sorted_spectrum, FloquetPoint, ModeLabel, TOL_MULT};
use crate::error::{Error, Result};
use crate::fem::{assemble, solve_lowest, EigResult, EigenOptions, HermitianPair};
use crate::geometry::{build_strip_mesh, Mesh, MeshOptions, PerforatedCell};
use crate::linalg::Cholesky;

/// `6u^5 - 15u^4 + 10u^3`, clamped to `[0, 1]` outside the unit interval.
pub fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (u * (6.0 * u - 15.0) + 10.0)
}

/// Cutoffs of the quasimode construction for a given enclosing half-width `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub r: f64,
}

impl CutoffSpec {
    /// `chi_+(t)`: 0 for `t < R`, 1 for `t > 2R`; a unit step when `R = 0`.
    pub fn chi_plus(&self, t: f64) -> f64 {
        if self.r == 0.0 {
            return if t > 0.0 { 1.0 } else { 0.0 };
        }
        smoothstep((t - self.r) / self.r)
    }

    pub fn chi_minus(&self, t: f64) -> f64 {
        self.chi_plus(-t)
    }

    /// `X(x1) = chi_+(x1/eps) + chi_-(x1/eps)`.
    pub fn outer(&self, x1: f64, eps: f64) -> f64 {
        self.chi_plus(x1 / eps) + self.chi_minus(x1 / eps)
    }

    /// `chi0(x1)`: 1 for `|x1| <= 1/6`, 0 for `|x1| >= 1/3`.
    pub fn chi0(x1: f64) -> f64 {
        1.0 - smoothstep((x1.abs() - 1.0 / 6.0) * 6.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quasimode {
    pub label: ModeLabel,
    pub eta: f64,
    pub epsilon: f64,
    /// `(1 + Lambda0)^{-1}`.
    pub m_as: f64,
    pub lambda0: f64,
    pub height: f64,
    /// Reduced coefficients (master values).
    pub field: Vec<Complex64>,
    /// Values at every mesh vertex.
    pub nodal: Vec<Complex64>,
}

/// Interpolates the quasimode of `label` at `eta` on a mesh of `cell`.
///
/// `sol` must come from a strip mesh whose hole polygon matches the one of
/// `mesh` (same segment count, see [`PerforatedCell::hole_segments`]), so that
/// every vertex of `mesh` maps into the strip domain.
pub fn build_quasimode(
    label: ModeLabel,
    eta: f64,
    cell: &PerforatedCell,
    sol: &CellSolution,
    mesh: &Mesh,
    pair: &HermitianPair,
) -> Result<Quasimode> {
    if label.k != 0 {
        return Err(Error::Domain(format!(
            "quasimodes exist only for x2-independent modes, got {label}"
        )));
    }
    if (sol.height - cell.height).abs() > 1e-12 * cell.height || sol.hole != cell.hole {
        return Err(Error::Domain(
            "boundary-layer solution belongs to a different cell".into(),
        ));
    }
    if pair.dofmap.dof_of_vertex.len() != mesh.n_vertices() {
        return Err(Error::Domain("matrix pair was assembled on a different mesh".into()));
    }
    let turns = (pair.eta - eta) / (2.0 * std::f64::consts::PI);
    if (turns - turns.round()).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "matrix pair was assembled at eta = {}, not {eta}",
            pair.eta
        )));
    }
    let eps = cell.epsilon();
    let kappa = label.wavenumber(eta);
    let du0 = Complex64::new(0.0, kappa);
    let cut = CutoffSpec { r: sol.r_enclose };
    let eval = sol.evaluator();

    let mut nodal = Vec::with_capacity(mesh.n_vertices());
    for p in &mesh.vertices {
        let x1 = p[0];
        let outer = cut.outer(x1, eps);
        let mut v = Complex64::from_polar(1.0, kappa * x1) * outer + (1.0 - outer) * (1.0 + du0 * x1);
        let c0 = CutoffSpec::chi0(x1);
        if c0 > 0.0 && kappa != 0.0 {
            let w = eval.value([x1 / eps, p[1] / eps]).ok_or_else(|| {
                Error::Domain(format!(
                    "vertex ({}, {}) falls into the strip hole; hole polygons differ",
                    p[0], p[1]
                ))
            })?;
            v += eps * c0 * w * du0;
        }
        nodal.push(v);
    }
    let field = pair.dofmap.restrict(&nodal);
    let lambda0 = kappa * kappa;
    Ok(Quasimode {
        label,
        eta,
        epsilon: eps,
        m_as: 1.0 / (1.0 + lambda0),
        lambda0,
        height: cell.height,
        field,
        nodal,
    })
}

/// Factorized `K + M` for repeated residual evaluations at one `eta`.
pub struct ResidualSolver<'a> {
    pair: &'a HermitianPair,
    chol: Cholesky<Complex64>,
}

impl<'a> ResidualSolver<'a> {
    pub fn new(pair: &'a HermitianPair) -> Result<Self> {
        Ok(Self {
            pair,
            chol: Cholesky::factor(&pair.energy_matrix())?,
        })
    }

    /// `||B q - M_as q||_{K+M} / ||q||_{K+M}` with `B = (K + M)^{-1} M`.
    pub fn residual(&self, q: &Quasimode) -> Result<f64> {
        let f = &q.field;
        let w = self.chol.solve(&self.pair.m.mul_vec(f));
        let d: Vec<Complex64> = w.iter().zip(f).map(|(a, b)| a - b * q.m_as).collect();
        let num = self.pair.h1_product(&d, &d)?.re.max(0.0).sqrt();
        let den = self.pair.h1_product(f, f)?.re.sqrt();
        Ok(num / den)
    }
}

pub fn residual(q: &Quasimode, pair: &HermitianPair) -> Result<f64> {
    ResidualSolver::new(pair)?.residual(q)
}

/// `|<q1, q2>_{K+M}|` after normalizing both in the same product.
pub fn almost_orthogonality(q1: &Quasimode, q2: &Quasimode, pair: &HermitianPair) -> Result<f64> {
    if q1.label == q2.label {
        return Err(Error::Domain(format!("both quasimodes carry label {}", q1.label)));
    }
    let n1 = pair.h1_product(&q1.field, &q1.field)?.re.sqrt();
    let n2 = pair.h1_product(&q2.field, &q2.field)?.re.sqrt();
    Ok(pair.h1_product(&q1.field, &q2.field)?.norm() / (n1 * n2))
}

/// `||q||^2_{K+M} / ((1 + Lambda0) H)`; tends to one as `eps -> 0`.
pub fn norm_check(q: &Quasimode, pair: &HermitianPair) -> Result<f64> {
    Ok(pair.h1_product(&q.field, &q.field)?.re / ((1.0 + q.lambda0) * q.height))
}

/// Distance from `M_as` to the nearest computed `(1 + Lambda_p)^{-1}`.
pub fn nearest_operator_gap(q: &Quasimode, eig: &EigResult) -> f64 {
    eig.values
        .iter()
        .map(|l| (1.0 / (1.0 + l) - q.m_as).abs())
        .fold(f64::INFINITY, f64::min)
}

/// One row of the residual report.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub epsilon: f64,
    pub eta: f64,
    pub label: ModeLabel,
    pub delta: f64,
    pub norm_ratio: f64,
    pub ortho_max: f64,
}

/// CSV with columns `epsilon,eta,sign,j,delta,norm_ratio,ortho_max`.
pub fn residual_csv(rows: &[ResidualRow]) -> String {
    let mut s = String::from("epsilon,eta,sign,j,delta,norm_ratio,ortho_max\n");
    for r in rows {
        let sign = if r.label.j < 0 { '-' } else { '+' };
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.epsilon,
            r.eta,
            sign,
            r.label.j.unsigned_abs(),
            r.delta,
            r.norm_ratio,
            r.ortho_max
        )
        .unwrap();
    }
    s
}

/// Boundary-layer solution on a strip mesh whose hole polygon matches the one
/// of the perforated mesh built from `cell` with `opts`.
pub fn boundary_layer_for(
    cell: &PerforatedCell,
    opts: MeshOptions,
    strip_h: f64,
    length: Option<f64>,
) -> Result<CellSolution> {
    let hole = &cell.hole;
    let length = match length {
        Some(l) => l,
        None if hole.is_empty() => 2.0 * cell.height,
        None => PerforatedCell::default_strip_length(hole, cell.height)?,
    };
    let strip_opts = MeshOptions::new(strip_h).with_hole_segments(cell.hole_segments(opts));
    solve_cell(&build_strip_mesh(cell.height, hole, length, strip_opts)?, hole)
}

/// Accuracy of computed `(1 + Lambda)^{-1}` values. An exact quasimode
/// (the constant at `eta = 0`) has `delta` near `1e-13`, below the roundoff in
/// the eigenvalue itself.
pub const EIGEN_FLOOR: f64 = 1e-9;

/// A residual row together with the eigenvalue check it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualCheck {
    pub row: ResidualRow,
    /// Distance from `M_as` to the nearest discrete `(1 + Lambda_p)^{-1}`.
    pub lemma_gap: f64,
}

impl ResidualCheck {
    /// Some discrete eigenvalue lies within `delta` of the quasimode value,
    /// up to [`EIGEN_FLOOR`].
    pub fn lemma_holds(&self) -> bool {
        self.lemma_gap <= self.row.delta + EIGEN_FLOOR
    }
}

/// Residuals of every label at every `eta` on one perforated mesh.
/// `ortho_max` is taken over the other labels at the same `eta`.
pub fn residual_report(
    cell: &PerforatedCell,
    sol: &CellSolution,
    mesh: &Mesh,
    etas: &[f64],
    labels: &[ModeLabel],
    opts: EigenOptions,
) -> Result<Vec<ResidualCheck>> {
    let per_eta: Vec<Vec<ResidualCheck>> = etas
        .par_iter()
        .map(|&eta| {
            let pair = assemble(mesh, eta)?;
            let rs = ResidualSolver::new(&pair)?;
            let qs = labels
                .iter()
                .map(|&l| build_quasimode(l, eta, cell, sol, mesh, &pair))
                .collect::<Result<Vec<_>>>()?;
            let spec = sorted_spectrum(FloquetPoint::new(eta, cell.height)?, 64, TOL_MULT);
            let count = labels
                .iter()
                .map(|l| spec.levels.iter().position(|v| v.label == *l).map_or(64, |p| p + 2))
                .max()
                .unwrap_or(1)
                .min(pair.n_dofs());
            let eig = solve_lowest(&pair, count, opts)?;
            qs.iter()
                .enumerate()
                .map(|(i, q)| {
                    let mut ortho_max = 0.0f64;
                    for (k, other) in qs.iter().enumerate() {
                        if k != i && other.label != q.label {
                            ortho_max = ortho_max.max(almost_orthogonality(q, other, &pair)?);
                        }
                    }
                    let row = ResidualRow {
                        epsilon: q.epsilon,
                        eta,
                        label: q.label,
                        delta: rs.residual(q)?,
                        norm_ratio: norm_check(q, &pair)?,
                        ortho_max,
                    };
                    Ok(ResidualCheck {
                        row,
                        lemma_gap: nearest_operator_gap(q, &eig),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_eta.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::{build_perforated_mesh, HoleShape};

    struct Setup {
        cell: PerforatedCell,
        mesh: Mesh,
        sol: CellSolution,
    }

    fn setup(height: f64, n: usize, hole: HoleShape, h: f64) -> Setup {
        let cell = PerforatedCell::new(height, n, hole.clone()).unwrap();
        let opts = MeshOptions::new(h);
        let mesh = build_perforated_mesh(&cell, opts).unwrap();
        let sol = boundary_layer_for(&cell, opts, height / 20.0, None).unwrap();
        Setup { cell, mesh, sol }
    }

    fn quasimode(s: &Setup, j: i64, eta: f64) -> (Quasimode, HermitianPair) {
        let pair = assemble(&s.mesh, eta).unwrap();
        (
            build_quasimode(ModeLabel::new(j, 0), eta, &s.cell, &s.sol, &s.mesh, &pair).unwrap(),
            pair,
        )
    }

    #[test]
    fn cutoffs_have_the_right_supports() {
        let c = CutoffSpec { r: 0.1 };
        assert_eq!(c.chi_plus(0.05), 0.0);
        assert_eq!(c.chi_plus(0.25), 1.0);
        assert_eq!(c.chi_minus(-0.25), 1.0);
        assert_eq!(c.outer(0.0, 0.5), 0.0);
        assert_eq!(CutoffSpec::chi0(0.1), 1.0);
        assert_eq!(CutoffSpec::chi0(0.4), 0.0);
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_mode_is_untouched() {
        let s = setup(0.5, 4, HoleShape::canonical(0.5), 0.05);
        let (q, pair) = quasimode(&s, 0, 0.0);
        assert!(q.nodal.iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        assert!(residual(&q, &pair).unwrap() < 1e-12);
        let ratio = norm_check(&q, &pair).unwrap();
        assert!((ratio - s.mesh.area() / 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_hole_reproduces_limit_mode() {
        let s = setup(0.5, 4, HoleShape::empty(), 0.05);
        let eta = 0.7;
        let (q, pair) = quasimode(&s, 1, eta);
        let kappa = eta + 2.0 * PI;
        let eps = s.cell.epsilon();
        let err = s
            .mesh
            .vertices
            .iter()
            .zip(&q.nodal)
            .map(|(p, v)| (v - Complex64::from_polar(1.0, kappa * p[0])).norm())
            .fold(0.0, f64::max);
        // Taylor remainder over |x1| < 2 R eps with R = 0
        assert!(err < 1e-14 + kappa * kappa * eps * eps, "{err}");
        let d = residual(&q, &pair).unwrap();
        assert!(d < 1e-3, "delta {d}");
        assert!((norm_check(&q, &pair).unwrap() - 1.0).abs() < 0.02);
    }

    #[test]
    fn field_is_quasi_periodic() {
        let s = setup(0.3, 8, HoleShape::canonical(0.3), 0.03);
        let eta = 0.5;
        let (q, pair) = quasimode(&s, 1, eta);
        let phase = Complex64::from_polar(1.0, eta);
        for &(m, sl) in &s.mesh.pairs {
            assert!((q.nodal[sl] - phase * q.nodal[m]).norm() < 1e-12);
        }
        assert_eq!(pair.dofmap.expand(&q.field).len(), q.nodal.len());
    }

    #[test]
    fn residual_is_phase_invariant_and_bounds_an_eigenvalue() {
        let s = setup(0.3, 8, HoleShape::canonical(0.3), 0.03);
        let eta = 0.5;
        let (q, pair) = quasimode(&s, 1, eta);
        let d = residual(&q, &pair).unwrap();
        let mut rotated = q.clone();
        let z = Complex64::from_polar(1.0, 1.1);
        rotated.field.iter_mut().for_each(|v| *v *= z);
        assert!((residual(&rotated, &pair).unwrap() - d).abs() < 1e-12 * d.max(1e-300));
        let eig = solve_lowest(&pair, 4, EigenOptions::default()).unwrap();
        assert!(nearest_operator_gap(&q, &eig) <= d);
    }

    #[test]
    fn empty_hole_modes_are_orthogonal() {
        let s = setup(0.5, 4, HoleShape::empty(), 0.05);
        let pair = assemble(&s.mesh, 0.0).unwrap();
        let qp = build_quasimode(ModeLabel::new(1, 0), 0.0, &s.cell, &s.sol, &s.mesh, &pair).unwrap();
        let qm = build_quasimode(ModeLabel::new(-1, 0), 0.0, &s.cell, &s.sol, &s.mesh, &pair).unwrap();
        assert!(almost_orthogonality(&qp, &qm, &pair).unwrap() < 1e-3);
        assert!(almost_orthogonality(&qp, &qp, &pair).is_err());
    }

    #[test]
    fn x2_dependent_labels_are_refused() {
        let s = setup(0.5, 2, HoleShape::canonical(0.5), 0.1);
        let pair = assemble(&s.mesh, 0.0).unwrap();
        assert!(build_quasimode(ModeLabel::new(0, 1), 0.0, &s.cell, &s.sol, &s.mesh, &pair).is_err());
    }

    #[test]
    fn csv_has_one_row_per_quasimode() {
        let row = ResidualRow {
            epsilon: 0.125,
            eta: 0.5,
            label: ModeLabel::new(-1, 0),
            delta: 0.01,
            norm_ratio: 1.0,
            ortho_max: 0.1,
        };
        assert_eq!(
            residual_csv(&[row]),
            "epsilon,eta,sign,j,delta,norm_ratio,ortho_max\n0.125,0.5,-,1,0.01,1,0.1\n"
        );
    }

    #[test]
    fn report_covers_every_label_and_meets_the_eigenvalue_bound() {
        let s = setup(0.3, 4, HoleShape::canonical(0.3), 0.04);
        let labels = [ModeLabel::new(0, 0), ModeLabel::new(1, 0), ModeLabel::new(-1, 0)];
        let rep = residual_report(&s.cell, &s.sol, &s.mesh, &[0.0, 2.0], &labels, EigenOptions::default()).unwrap();
        assert_eq!(rep.len(), 6);
        assert!(rep.iter().all(ResidualCheck::lemma_holds));
        assert!(rep[0].row.delta < 1e-10);
        assert!(rep.iter().all(|c| c.row.ortho_max > 0.0));
    }
}
