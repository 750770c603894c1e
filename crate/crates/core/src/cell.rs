//! Boundary-layer problem on the perforated strip.
//!
//! `W` solves `-Lap W = 0` in the strip `(-L, L) x (0, H)` minus the hole,
//! periodic in `xi2`, with `dW/dnu = -nu1` on the hole boundary (`nu` the
//! outward normal of the strip domain) and zero flux at `xi1 = +-L`. The
//! solution is fixed by zero mean over `|xi1| < 2R` and tends to constants
//! `C_+-` at the two ends.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fem::{assemble_generic, DofMap};
use crate::geometry::{EdgeTag, HoleShape, Mesh, Periodicity, PointLocator};
use crate::linalg::Cholesky;

/// Largest admissible `|sum of nu1 ds|` over the hole boundary.
pub const COMPAT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct CellSolution {
    pub mesh: Mesh,
    pub hole: HoleShape,
    /// Nodal values of `W` at every mesh vertex.
    pub w: Vec<f64>,
    pub c_plus: f64,
    pub c_minus: f64,
    /// Fitted exponential decay rate of `W - C_+-`; `None` when `W` vanishes.
    pub decay_rate: Option<f64>,
    pub r_enclose: f64,
    /// Actual half-length of the strip mesh.
    pub length: f64,
    pub height: f64,
    /// Discrete `sum of nu1 ds` over the hole boundary.
    pub residual_compat: f64,
    /// The load vector, kept for the energy identity.
    load: Vec<f64>,
}

fn strip_height(mesh: &Mesh) -> Result<f64> {
    match mesh.periodicity {
        Periodicity::Vertical { period } => Ok(period),
        Periodicity::Lateral => Err(Error::Mesh("boundary-layer problem needs a strip mesh".into())),
    }
}

/// Solves for `W` and extracts `C_+-` with the default margin `H/4`.
pub fn solve_cell(mesh: &Mesh, hole: &HoleShape) -> Result<CellSolution> {
    let height = strip_height(mesh)?;
    let rep = hole.validate(height)?;
    let length = mesh.vertices.iter().map(|p| p[0].abs()).fold(0.0, f64::max);

    let dofmap = DofMap::new(mesh, 1.0)?;
    let (k, _) = assemble_generic::<f64>(mesh, &dofmap)?;
    let n = dofmap.n_dofs();

    // (grad W, grad V) = (-nu1, V) on the hole; with the domain to the left of
    // a -> b the outward normal times the length is (t2, -t1)
    let mut load = vec![0.0; n];
    let mut compat = 0.0;
    for e in mesh.edges.iter().filter(|e| e.tag == EdgeTag::Hole) {
        let (a, b) = (mesh.vertices[e.v[0]], mesh.vertices[e.v[1]]);
        let t2 = b[1] - a[1];
        compat += t2;
        for v in e.v {
            load[dofmap.dof_of_vertex[v]] -= 0.5 * t2;
        }
    }
    if compat.abs() > COMPAT_TOL {
        return Err(Error::Geometry(format!(
            "hole boundary flux {compat:e} does not vanish; is the loop closed?"
        )));
    }

    let mut w = vec![0.0; mesh.n_vertices()];
    if load.iter().any(|&f| f != 0.0) {
        let mut keep = vec![true; n];
        keep[n - 1] = false;
        let (kk, kept) = k.principal_submatrix(&keep);
        let rhs: Vec<f64> = kept.iter().map(|&i| load[i]).collect();
        let x = Cholesky::factor(&kk)?.solve(&rhs);
        let mut u = vec![0.0; n];
        for (&i, xi) in kept.iter().zip(x) {
            u[i] = xi;
        }
        w = dofmap.expand(&u);
        let mean = region_mean(mesh, &w, 2.0 * rep.r_enclose);
        w.iter_mut().for_each(|x| *x -= mean);
    }

    let mut sol = CellSolution {
        mesh: mesh.clone(),
        hole: hole.clone(),
        w,
        c_plus: 0.0,
        c_minus: 0.0,
        decay_rate: None,
        r_enclose: rep.r_enclose,
        length,
        height,
        residual_compat: compat,
        load,
    };
    let (cp, cm, rate) = extract_constants(&sol, height / 4.0)?;
    sol.c_plus = cp;
    sol.c_minus = cm;
    sol.decay_rate = rate;
    Ok(sol)
}

/// Mean of a nodal field over triangles whose centroid has `|xi1| < half_width`.
fn region_mean(mesh: &Mesh, w: &[f64], half_width: f64) -> f64 {
    let (mut s, mut a) = (0.0, 0.0);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if mesh.centroid(t)[0].abs() < half_width {
            let area = mesh.triangle_area(t);
            s += area * (w[tri[0]] + w[tri[1]] + w[tri[2]]) / 3.0;
            a += area;
        }
    }
    if a > 0.0 {
        s / a
    } else {
        0.0
    }
}

/// Pieces `(length, value at lower end, value at upper end)` of the field
/// along the vertical line `xi1 = x`. A triangle contributes when
/// `min xi1 <= x < max xi1`, so lines through vertices are counted once.
fn vertical_section(mesh: &Mesh, w: &[f64], x: f64) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for tri in &mesh.triangles {
        let p = tri.map(|i| mesh.vertices[i]);
        let lo = p.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min);
        let hi = p.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max);
        if !(lo <= x && x < hi) {
            continue;
        }
        let mut hits: Vec<(f64, f64)> = Vec::with_capacity(4);
        for k in 0..3 {
            let (a, b) = (p[k], p[(k + 1) % 3]);
            let (wa, wb) = (w[tri[k]], w[tri[(k + 1) % 3]]);
            if a[0] == b[0] {
                continue;
            }
            let s = (x - a[0]) / (b[0] - a[0]);
            if (0.0..=1.0).contains(&s) {
                hits.push((a[1] + s * (b[1] - a[1]), wa + s * (wb - wa)));
            }
        }
        hits.sort_by(|u, v| u.0.total_cmp(&v.0));
        if let (Some(&(y0, w0)), Some(&(y1, w1))) = (hits.first(), hits.last()) {
            if y1 > y0 {
                out.push((y1 - y0, w0, w1));
            }
        }
    }
    out
}

fn section_mean(mesh: &Mesh, w: &[f64], x: f64, height: f64) -> f64 {
    vertical_section(mesh, w, x)
        .iter()
        .map(|(l, a, b)| 0.5 * l * (a + b))
        .sum::<f64>()
        / height
}

/// `L2` norm of `W - c` along the vertical line `xi1 = x`.
fn section_deviation(mesh: &Mesh, w: &[f64], x: f64, c: f64) -> f64 {
    vertical_section(mesh, w, x)
        .iter()
        .map(|(l, a, b)| {
            let (a, b) = (a - c, b - c);
            l * (a * a + a * b + b * b) / 3.0
        })
        .sum::<f64>()
        .sqrt()
}

/// `C_+-` as cross-sectional means at `xi1 = +-(L - margin)`, and the decay
/// rate fitted to `log ||W - C_+-||` over `2R + H/4 <= |xi1| <= L - H/4`.
pub fn extract_constants(sol: &CellSolution, margin: f64) -> Result<(f64, f64, Option<f64>)> {
    let (l, h, r) = (sol.length, sol.height, sol.r_enclose);
    if !(margin > 0.0 && margin < l - 2.0 * r) {
        return Err(Error::Domain(format!(
            "margin {margin} must lie in (0, L - 2R) = (0, {})",
            l - 2.0 * r
        )));
    }
    let c_plus = section_mean(&sol.mesh, &sol.w, l - margin, h);
    let c_minus = section_mean(&sol.mesh, &sol.w, -(l - margin), h);

    let (x0, x1) = (2.0 * r + h / 4.0, l - h / 4.0);
    if x1 - x0 < h / 4.0 {
        return Err(Error::Domain(format!(
            "decay window [{x0}, {x1}] is too short; lengthen the strip"
        )));
    }
    let samples = 24;
    let mut pts = Vec::with_capacity(2 * samples);
    for i in 0..samples {
        let x = x0 + (x1 - x0) * i as f64 / (samples - 1) as f64;
        for (sign, c) in [(1.0, c_plus), (-1.0, c_minus)] {
            let d = section_deviation(&sol.mesh, &sol.w, sign * x, c);
            if d > 0.0 {
                pts.push((x, d.ln()));
            }
        }
    }
    let scale = sol.w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rate = if scale == 0.0 || pts.len() < 2 * samples {
        None
    } else {
        Some(-least_squares_slope(&pts))
    };
    Ok((c_plus, c_minus, rate))
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Largest `|dW/dxi2|` over triangles with an edge on `xi2 = 0` or `xi2 = H`.
pub fn verify_mirror(sol: &CellSolution) -> Result<f64> {
    if !sol.hole.mirror_symmetric {
        return Err(Error::Domain(
            "hole is not flagged mirror symmetric; the trace property is not expected".into(),
        ));
    }
    let h = sol.height;
    let mut worst = 0.0f64;
    for tri in &sol.mesh.triangles {
        let p = tri.map(|i| sol.mesh.vertices[i]);
        let on = |y: f64| p.iter().filter(|q| q[1] == y).count() >= 2;
        if !(on(0.0) || on(h)) {
            continue;
        }
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let (d1, d2) = (sol.w[tri[1]] - sol.w[tri[0]], sol.w[tri[2]] - sol.w[tri[0]]);
        let dy = ((p[1][0] - p[0][0]) * d2 - (p[2][0] - p[0][0]) * d1) / det;
        worst = worst.max(dy.abs());
    }
    Ok(worst)
}

impl CellSolution {
    /// `(grad W, grad W)` minus the boundary term `-(nu1, W)` on the hole.
    pub fn energy_defect(&self) -> Result<f64> {
        let dofmap = DofMap::new(&self.mesh, 1.0)?;
        let (k, _) = assemble_generic::<f64>(&self.mesh, &dofmap)?;
        let u = dofmap.restrict(&self.w);
        let energy = k.form(&u, &u);
        let boundary: f64 = u.iter().zip(&self.load).map(|(a, b)| a * b).sum();
        Ok(energy - boundary)
    }

    /// Summary line `H,hole_hash,L,h,C_plus,C_minus,decay_rate,residual_compat`.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("H,hole_hash,L,h,C_plus,C_minus,decay_rate,residual_compat\n");
        let rate = self.decay_rate.map_or_else(|| "NA".to_string(), |r| r.to_string());
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            self.height,
            self.hole.hash_hex(),
            self.length,
            self.mesh.h,
            self.c_plus,
            self.c_minus,
            rate,
            self.residual_compat
        )
        .unwrap();
        s
    }

    pub fn evaluator(&self) -> CellEvaluator<'_> {
        CellEvaluator {
            sol: self,
            locator: PointLocator::new(&self.mesh),
        }
    }
}

/// Point evaluation of `W` on the whole periodic strip.
#[derive(Debug)]
pub struct CellEvaluator<'a> {
    sol: &'a CellSolution,
    locator: PointLocator,
}

impl CellEvaluator<'_> {
    /// `W(xi)` with `xi2` taken modulo `H` and `W = C_+-` beyond `|xi1| > L`.
    /// `None` inside the hole.
    pub fn value(&self, xi: [f64; 2]) -> Option<f64> {
        let s = self.sol;
        if xi[0] > s.length {
            return Some(s.c_plus);
        }
        if xi[0] < -s.length {
            return Some(s.c_minus);
        }
        let y = xi[1] - (xi[1] / s.height).floor() * s.height;
        let (t, b) = self.locator.locate(&s.mesh, [xi[0], y.clamp(0.0, s.height)], 1e-9)?;
        let tri = s.mesh.triangles[t];
        Some(b[0] * s.w[tri[0]] + b[1] * s.w[tri[1]] + b[2] * s.w[tri[2]])
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::{build_strip_mesh, MeshOptions, PerforatedCell};

    fn canonical(height: f64, h: f64) -> (CellSolution, HoleShape) {
        let hole = HoleShape::canonical(height);
        let l = PerforatedCell::default_strip_length(&hole, height).unwrap();
        let mesh = build_strip_mesh(height, &hole, l, MeshOptions::new(h)).unwrap();
        (solve_cell(&mesh, &hole).unwrap(), hole)
    }

    #[test]
    fn empty_hole_gives_zero() {
        let hole = HoleShape::empty();
        let mesh = build_strip_mesh(1.0, &hole, 2.0, MeshOptions::new(0.1)).unwrap();
        let sol = solve_cell(&mesh, &hole).unwrap();
        assert!(sol.w.iter().all(|&v| v == 0.0));
        assert_eq!((sol.c_plus, sol.c_minus, sol.decay_rate), (0.0, 0.0, None));
    }

    #[test]
    fn centered_disk_is_odd_and_decays() {
        let height = 1.0;
        let (sol, _) = canonical(height, 0.05);
        assert!(sol.residual_compat.abs() <= COMPAT_TOL);
        assert!((sol.c_plus + sol.c_minus).abs() <= 1e-6 * sol.c_plus.abs());
        let rate = sol.decay_rate.unwrap();
        assert!((rate / (2.0 * PI / height) - 1.0).abs() < 0.2, "rate {rate}");
        // a small disk acts like a dipole of strength r^2, amplified by the
        // field of its periodic images: C_+ ~ (pi r^2 / H) / (1 - pi^2 r^2 / (3 H^2))
        let r = sol.hole.radius();
        let dipole = PI * r * r / height / (1.0 - PI * PI * r * r / (3.0 * height * height));
        assert!(
            (sol.c_plus / dipole - 1.0).abs() < 0.03,
            "C+ {} vs {dipole}",
            sol.c_plus
        );
        assert!(sol.energy_defect().unwrap().abs() < 1e-10 * sol.c_plus.abs());
    }

    #[test]
    fn doubling_length_barely_moves_constants() {
        let height = 0.3;
        let hole = HoleShape::canonical(height);
        let l = PerforatedCell::default_strip_length(&hole, height).unwrap();
        let opts = MeshOptions::new(0.015);
        let a = solve_cell(&build_strip_mesh(height, &hole, l, opts).unwrap(), &hole).unwrap();
        let b = solve_cell(&build_strip_mesh(height, &hole, 2.0 * l, opts).unwrap(), &hole).unwrap();
        let d = (a.c_plus - b.c_plus).abs() / b.c_plus.abs();
        assert!(d < 1e-5, "relative change {d}");
    }

    #[test]
    fn mirror_trace_shrinks_with_h() {
        let (coarse, _) = canonical(1.0, 0.1);
        let (fine, _) = canonical(1.0, 0.05);
        let (a, b) = (verify_mirror(&coarse).unwrap(), verify_mirror(&fine).unwrap());
        assert!(b < a, "{a} -> {b}");
        assert!(b < 0.1 * fine.c_plus.abs() / 0.05, "{b}");
    }

    #[test]
    fn mirror_check_refuses_unflagged_hole() {
        let height = 1.0;
        let hole = HoleShape::disk([0.0, 0.3], 0.1, false);
        let mesh = build_strip_mesh(height, &hole, 2.0, MeshOptions::new(0.1)).unwrap();
        let sol = solve_cell(&mesh, &hole).unwrap();
        assert!(verify_mirror(&sol).is_err());
        assert!(sol.residual_compat.abs() <= COMPAT_TOL);
    }

    #[test]
    fn ellipse_trace_is_small() {
        let height = 1.0;
        let hole = HoleShape::ellipse([0.0, 0.5], [0.15, 0.25], true);
        let mesh = build_strip_mesh(height, &hole, 2.0, MeshOptions::new(0.05)).unwrap();
        let sol = solve_cell(&mesh, &hole).unwrap();
        assert!(verify_mirror(&sol).unwrap() < 0.1 * sol.c_plus.abs() / 0.05);
    }

    #[test]
    fn evaluator_wraps_and_extends() {
        let (sol, _) = canonical(1.0, 0.1);
        let ev = sol.evaluator();
        let p = [0.4, 0.1];
        let a = ev.value(p).unwrap();
        let b = ev.value([p[0], p[1] + 3.0]).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert_eq!(ev.value([sol.length + 1.0, 0.2]), Some(sol.c_plus));
        assert!(ev.value([0.0, 0.5]).is_none());
    }

    #[test]
    fn bad_margin_is_rejected() {
        let (sol, _) = canonical(1.0, 0.1);
        assert!(extract_constants(&sol, sol.length).is_err());
    }
}
