//! Closed-form spectrum of the homogenized cell problem.
//!
//! On the unperforated rectangle `(-1/2, 1/2) x (0, H)` with Neumann
//! conditions on the horizontal sides and the phase-shift condition
//! `U(1/2, x2) = e^{i eta} U(-1/2, x2)` on the vertical ones, separation of
//! variables gives the eigenpairs
//!
//! ```text
//! lambda_{jk}(eta) = (eta + 2 pi j)^2 + pi^2 k^2 / H^2
//! U_{jk}(x; eta)   = exp(i (eta + 2 pi j) x1) cos(pi k x2 / H)
//! ```
//!
//! for `j` in Z and `k` in N0. Everything here is exact up to floating point
//! rounding; it serves both as the limit the perturbed bands converge to and
//! as the oracle for the finite element solver on the unperforated cell.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default relative tolerance for grouping analytic levels into clusters.
pub const TOL_MULT: f64 = 1e-12;

/// Tolerance used when merging curve crossings into a single node.
const TOL_NODE: f64 = 1e-10;

/// `(j, k)` label of a limit dispersion curve.
///
/// `j` is the horizontal Fourier index, `k` the vertical cosine index. For
/// `k = 0` the modes are independent of `x2`; the sign of `j` then tells the
/// `+` branch `(eta + 2 pi |j|)^2` from the `-` branch `(eta - 2 pi |j|)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeLabel {
    pub j: i64,
    pub k: u32,
}

impl ModeLabel {
    pub const fn new(j: i64, k: u32) -> Self {
        Self { j, k }
    }

    /// Horizontal wavenumber `eta + 2 pi j`.
    pub fn wavenumber(&self, eta: f64) -> f64 {
        eta + 2.0 * PI * self.j as f64
    }

    /// Slope of the curve `eta -> lambda_{jk}(eta)`.
    pub fn slope(&self, eta: f64) -> f64 {
        2.0 * self.wavenumber(eta)
    }

    /// Minimum of the curve over `eta` in `[-pi, pi]`.
    pub fn min_value(&self, height: f64) -> f64 {
        let horizontal = if self.j == 0 {
            0.0
        } else {
            let d = 2.0 * PI * self.j.unsigned_abs() as f64 - PI;
            d * d
        };
        horizontal + vertical_term(self.k, height)
    }
}

impl std::fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.j, self.k)
    }
}

/// Floquet parameter together with the cell height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetPoint {
    eta: f64,
    height: f64,
}

impl FloquetPoint {
    pub fn new(eta: f64, height: f64) -> Result<Self> {
        if !eta.is_finite() || eta < -PI - 1e-14 || eta > PI + 1e-14 {
            return Err(Error::domain(format!("Floquet parameter {eta} outside [-pi, pi]")));
        }
        if !(height.is_finite() && height > 0.0) {
            return Err(Error::domain(format!("cell height must be positive, got {height}")));
        }
        Ok(Self {
            eta: eta.clamp(-PI, PI),
            height,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn height(&self) -> f64 {
        self.height
    }
}

/// A limit eigenvalue tagged with the curve it comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledLevel {
    pub label: ModeLabel,
    pub value: f64,
}

/// The lowest limit eigenvalues in non-decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSpectrum {
    pub levels: Vec<LabeledLevel>,
    /// Partition of `0..levels.len()` into runs of (numerically) equal values.
    pub clusters: Vec<Vec<usize>>,
}

impl SortedSpectrum {
    pub fn values(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.value).collect()
    }

    pub fn labels(&self) -> Vec<ModeLabel> {
        self.levels.iter().map(|l| l.label).collect()
    }

    /// Size of the cluster that contains level `p` (zero based), counted
    /// within the truncated list.
    pub fn cluster_size(&self, p: usize) -> usize {
        self.clusters.iter().find(|c| c.contains(&p)).map(Vec::len).unwrap_or(0)
    }
}

fn vertical_term(k: u32, height: f64) -> f64 {
    let k = k as f64;
    PI * PI * k * k / (height * height)
}

/// `(eta + 2 pi j)^2 + pi^2 k^2 / H^2`.
pub fn lambda0(label: ModeLabel, pt: FloquetPoint) -> f64 {
    let w = label.wavenumber(pt.eta);
    w * w + vertical_term(label.k, pt.height)
}

/// Value of the limit mode `exp(i (eta + 2 pi j) x1) cos(pi k x2 / H)`.
pub fn evaluate_mode(label: ModeLabel, pt: FloquetPoint, x: [f64; 2]) -> Result<Complex64> {
    let tol = 1e-12;
    if !(x[0].abs() <= 0.5 + tol && x[1] >= -tol && x[1] <= pt.height + tol) {
        return Err(Error::domain(format!(
            "point ({}, {}) outside the cell [-1/2, 1/2] x [0, {}]",
            x[0], x[1], pt.height
        )));
    }
    let phase = Complex64::from_polar(1.0, label.wavenumber(pt.eta) * x[0]);
    Ok(phase * (PI * label.k as f64 * x[1] / pt.height).cos())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// All labels whose value at `pt` does not exceed `bound` (relative slack `tol`).
fn labels_below(pt: FloquetPoint, bound: f64, tol: f64) -> Vec<LabeledLevel> {
    let limit = bound + tol * bound.abs().max(1.0);
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let vert = vertical_term(k, pt.height);
        if vert > limit {
            break;
        }
        // (eta + 2 pi j)^2 <= limit - vert  <=>  |eta + 2 pi j| <= r
        let r = (limit - vert).sqrt();
        let j_lo = ((-r - pt.eta) / (2.0 * PI)).floor() as i64 - 1;
        let j_hi = ((r - pt.eta) / (2.0 * PI)).ceil() as i64 + 1;
        for j in j_lo..=j_hi {
            let label = ModeLabel::new(j, k);
            let value = lambda0(label, pt);
            if value <= limit {
                out.push(LabeledLevel { label, value });
            }
        }
        k += 1;
    }
    out
}

/// Deterministic ordering: by value, and among values equal within `tol` by
/// `k` then `j` ascending.
fn sort_levels(levels: &mut [LabeledLevel], tol: f64) {
    levels.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut start = 0;
    while start < levels.len() {
        let mut end = start + 1;
        while end < levels.len() && close(levels[end - 1].value, levels[end].value, tol) {
            end += 1;
        }
        levels[start..end].sort_by_key(|l| (l.label.k, l.label.j));
        start = end;
    }
}

fn cluster_runs(levels: &[LabeledLevel], tol: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, level) in levels.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if close(levels[c[0]].value, level.value, tol) => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    clusters
}

/// The `count` smallest limit eigenvalues at `pt`, repeated by multiplicity.
///
/// Completeness: the `count`-th smallest value over the box `|j| <= count`,
/// `k <= count` bounds the true `count`-th value from above, and every label
/// below that bound is then enumerated using the monotone growth of the
/// formula in `|eta + 2 pi j|` and `k`.
pub fn sorted_spectrum(pt: FloquetPoint, count: usize, tol_mult: f64) -> SortedSpectrum {
    if count == 0 {
        return SortedSpectrum {
            levels: Vec::new(),
            clusters: Vec::new(),
        };
    }
    let span = count as i64;
    let mut seed: Vec<f64> = (-span..=span)
        .flat_map(|j| (0..=count as u32).map(move |k| ModeLabel::new(j, k)))
        .map(|l| lambda0(l, pt))
        .collect();
    seed.sort_by(f64::total_cmp);
    let bound = seed[count - 1];

    let mut levels = labels_below(pt, bound, tol_mult);
    sort_levels(&mut levels, tol_mult);
    levels.truncate(count);
    let clusters = cluster_runs(&levels, tol_mult);
    SortedSpectrum { levels, clusters }
}

/// Number of labels whose value equals `value` within `tol_mult`, counted over
/// the whole (untruncated) spectrum.
pub fn multiplicity(pt: FloquetPoint, value: f64, tol_mult: f64) -> usize {
    labels_below(pt, value, tol_mult)
        .iter()
        .filter(|l| close(l.value, value, tol_mult))
        .count()
}

/// Crossing of two or more limit dispersion curves.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePoint {
    pub eta0: f64,
    pub value: f64,
    pub labels: Vec<ModeLabel>,
    /// True when one of the meeting curves has `k > 0`.
    pub has_x2_dependent: bool,
}

impl NodePoint {
    pub fn multiplicity(&self) -> usize {
        self.labels.len()
    }
}

/// All crossings in `[-pi, pi]` of curves that reach below `lambda_max`.
///
/// Two curves with `j1 != j2` meet where
/// `4 pi (j1 - j2) eta = pi^2 (k2^2 - k1^2) / H^2 - 4 pi^2 (j1^2 - j2^2)`,
/// a linear equation in `eta`; curves with equal `j` are vertical translates
/// and never meet.
pub fn find_nodes(height: f64, lambda_max: f64) -> Vec<NodePoint> {
    assert!(height > 0.0 && lambda_max > 0.0);
    let mut labels = Vec::new();
    let mut k = 0u32;
    while vertical_term(k, height) <= lambda_max {
        let mut j = 0i64;
        loop {
            let mut any = false;
            for jj in if j == 0 { vec![0] } else { vec![-j, j] } {
                let l = ModeLabel::new(jj, k);
                if l.min_value(height) <= lambda_max {
                    labels.push(l);
                    any = true;
                }
            }
            if !any {
                break;
            }
            j += 1;
        }
        k += 1;
    }

    let mut raw: Vec<(f64, f64, ModeLabel, ModeLabel)> = Vec::new();
    for (a, la) in labels.iter().enumerate() {
        for lb in &labels[a + 1..] {
            if la.j == lb.j {
                continue;
            }
            let dj = (la.j - lb.j) as f64;
            let rhs = vertical_term(lb.k, height)
                - vertical_term(la.k, height)
                - 4.0 * PI * PI * ((la.j * la.j) as f64 - (lb.j * lb.j) as f64);
            let eta0 = rhs / (4.0 * PI * dj);
            if eta0 < -PI - 1e-12 || eta0 > PI + 1e-12 {
                continue;
            }
            let eta0 = eta0.clamp(-PI, PI);
            let pt = FloquetPoint { eta: eta0, height };
            let value = lambda0(*la, pt);
            if value <= lambda_max * (1.0 + 1e-12) {
                raw.push((eta0, value, *la, *lb));
            }
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut nodes: Vec<NodePoint> = Vec::new();
    for (eta0, value, la, lb) in raw {
        let existing = nodes
            .iter_mut()
            .find(|n| (n.eta0 - eta0).abs() <= TOL_NODE && close(n.value, value, TOL_NODE));
        match existing {
            Some(n) => {
                for l in [la, lb] {
                    if !n.labels.contains(&l) {
                        n.labels.push(l);
                    }
                }
            }
            None => nodes.push(NodePoint {
                eta0,
                value,
                labels: vec![la, lb],
                has_x2_dependent: false,
            }),
        }
    }
    for n in &mut nodes {
        n.labels.sort_by_key(|l| (l.k, l.j));
        n.has_x2_dependent = n.labels.iter().any(|l| l.k > 0);
    }
    nodes
}

/// The four height regimes in which the low limit curves behave differently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HRegime {
    /// `H < 1/sqrt(8)`
    A,
    /// `1/sqrt(8) <= H < 1/2`
    B,
    /// `1/2 <= H < 1`
    C,
    /// `H >= 1`
    D,
}

impl HRegime {
    /// Largest band index whose uniform convergence rate is established in
    /// this regime.
    pub fn max_verified_band(&self) -> usize {
        match self {
            HRegime::A => 3,
            HRegime::B => 2,
            HRegime::C | HRegime::D => 1,
        }
    }
}

pub fn h_regime(height: f64) -> Result<HRegime> {
    if !(height.is_finite() && height > 0.0) {
        return Err(Error::domain(format!("cell height must be positive, got {height}")));
    }
    let first = 1.0 / 8f64.sqrt();
    Ok(if height < first {
        HRegime::A
    } else if height < 0.5 {
        HRegime::B
    } else if height < 1.0 {
        HRegime::C
    } else {
        HRegime::D
    })
}

/// `count` uniformly spaced points covering `[-pi, pi]`, endpoints included.
pub fn uniform_eta_grid(count: usize) -> Vec<f64> {
    assert!(count >= 2);
    (0..count)
        .map(|i| {
            if i == count - 1 {
                PI
            } else {
                -PI + 2.0 * PI * i as f64 / (count - 1) as f64
            }
        })
        .collect()
}

/// CSV with columns `eta,p,lambda0,j,k,multiplicity`, one row per grid point
/// and band index (`p` is one based).
pub fn dispersion_csv(height: f64, etas: &[f64], bands: usize) -> Result<String> {
    let mut out = String::from("eta,p,lambda0,j,k,multiplicity\n");
    for &eta in etas {
        let pt = FloquetPoint::new(eta, height)?;
        let spec = sorted_spectrum(pt, bands, TOL_MULT);
        for (p, level) in spec.levels.iter().enumerate() {
            let mult = multiplicity(pt, level.value, TOL_MULT);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                eta,
                p + 1,
                level.value,
                level.label.j,
                level.label.k,
                mult
            )
            .expect("writing to a String");
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(eta: f64, h: f64) -> FloquetPoint {
        FloquetPoint::new(eta, h).unwrap()
    }

    #[test]
    fn lambda0_examples() {
        assert_eq!(lambda0(ModeLabel::new(0, 0), pt(0.0, 1.0)), 0.0);
        assert_relative_eq!(lambda0(ModeLabel::new(0, 0), pt(PI, 0.7)), PI * PI);
        assert_relative_eq!(
            lambda0(ModeLabel::new(0, 1), pt(0.0, 0.5)),
            4.0 * PI * PI,
            max_relative = 1e-15
        );
    }

    #[test]
    fn mode_examples() {
        let one = evaluate_mode(ModeLabel::new(0, 0), pt(0.0, 1.0), [0.3, 0.1]).unwrap();
        assert_relative_eq!(one.re, 1.0);
        assert_eq!(one.im, 0.0);
        let minus = evaluate_mode(ModeLabel::new(0, 1), pt(0.0, 1.0), [0.0, 1.0]).unwrap();
        assert_relative_eq!(minus.re, -1.0);

        let q = pt(PI / 2.0, 0.4);
        let l = ModeLabel::new(1, 0);
        let right = evaluate_mode(l, q, [0.5, 0.2]).unwrap();
        let left = evaluate_mode(l, q, [-0.5, 0.2]).unwrap();
        let ratio = right / left;
        assert_relative_eq!(ratio.re, (PI / 2.0).cos(), epsilon = 1e-14);
        assert_relative_eq!(ratio.im, (PI / 2.0).sin(), epsilon = 1e-14);

        assert!(evaluate_mode(l, q, [0.6, 0.2]).is_err());
        assert!(evaluate_mode(l, q, [0.0, 0.5]).is_err());
    }

    #[test]
    fn sorted_examples() {
        let s = sorted_spectrum(pt(0.0, 0.3), 4, TOL_MULT);
        let v = s.values();
        let four_pi2 = 4.0 * PI * PI;
        assert_eq!(v[0], 0.0);
        assert_relative_eq!(v[1], four_pi2);
        assert_relative_eq!(v[2], four_pi2);
        assert_relative_eq!(v[3], 109.66227112321508, max_relative = 1e-12);
        assert_eq!(
            s.labels(),
            vec![
                ModeLabel::new(0, 0),
                ModeLabel::new(-1, 0),
                ModeLabel::new(1, 0),
                ModeLabel::new(0, 1)
            ]
        );
        assert_eq!(s.clusters, vec![vec![0], vec![1, 2], vec![3]]);

        let s = sorted_spectrum(pt(PI, 0.3), 2, TOL_MULT);
        assert_relative_eq!(s.values()[0], PI * PI);
        assert_relative_eq!(s.values()[1], PI * PI);
        let mut labels = s.labels();
        labels.sort();
        assert_eq!(labels, vec![ModeLabel::new(-1, 0), ModeLabel::new(0, 0)]);

        let s = sorted_spectrum(pt(0.0, 0.5), 4, TOL_MULT);
        assert_eq!(s.clusters, vec![vec![0], vec![1, 2, 3]]);
        for v in &s.values()[1..] {
            assert_relative_eq!(*v, four_pi2, max_relative = 1e-14);
        }
    }

    #[test]
    fn nodes_examples() {
        let nodes = find_nodes(0.3, 50.0);
        let at = |eta: f64, value: f64| {
            nodes
                .iter()
                .find(|n| (n.eta0 - eta).abs() < 1e-12 && (n.value - value).abs() < 1e-9)
                .cloned()
        };
        let n = at(-PI, PI * PI).expect("node at -pi");
        assert_eq!(n.labels, vec![ModeLabel::new(0, 0), ModeLabel::new(1, 0)]);
        let n = at(0.0, 4.0 * PI * PI).expect("node at 0");
        assert_eq!(n.labels, vec![ModeLabel::new(-1, 0), ModeLabel::new(1, 0)]);
        assert!(!n.has_x2_dependent);

        let h: f64 = 0.45;
        let nodes = find_nodes(h, 60.0);
        let eta0 = PI / (4.0 * h * h) - PI;
        let n = nodes
            .iter()
            .find(|n| n.labels == vec![ModeLabel::new(1, 0), ModeLabel::new(0, 1)])
            .expect("x2-dependent crossing");
        assert_relative_eq!(n.eta0, eta0, epsilon = 1e-14);
        assert_relative_eq!(n.eta0, 0.7369, epsilon = 1e-4);
        assert_relative_eq!(n.value, 49.282, epsilon = 1e-3);
        assert!(n.has_x2_dependent);

        // sampling oracle: the two curves change order across eta0
        let grid: Vec<f64> = (0..=20000).map(|i| -PI + 2.0 * PI * i as f64 / 20000.0).collect();
        let diff = |eta: f64| lambda0(ModeLabel::new(1, 0), pt(eta, h)) - lambda0(ModeLabel::new(0, 1), pt(eta, h));
        let sign_change = grid
            .windows(2)
            .find(|w| diff(w[0]).signum() != diff(w[1]).signum())
            .unwrap();
        assert!(sign_change[0] <= eta0 && eta0 <= sign_change[1]);
    }

    #[test]
    fn triple_point_at_half_height() {
        let nodes = find_nodes(0.5, 45.0);
        let n = nodes
            .iter()
            .find(|n| n.eta0.abs() < 1e-12 && (n.value - 4.0 * PI * PI).abs() < 1e-9)
            .unwrap();
        assert_eq!(n.multiplicity(), 3);
        assert!(n.has_x2_dependent);
    }

    #[test]
    fn regimes() {
        assert_eq!(h_regime(0.3).unwrap(), HRegime::A);
        assert_eq!(h_regime(0.45).unwrap(), HRegime::B);
        assert_eq!(h_regime(0.75).unwrap(), HRegime::C);
        assert_eq!(h_regime(2.0).unwrap(), HRegime::D);
        assert_eq!(h_regime(1.0 / 8f64.sqrt()).unwrap(), HRegime::B);
        assert_eq!(h_regime(0.5).unwrap(), HRegime::C);
        assert!(h_regime(0.0).is_err());
        assert!(h_regime(-1.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let csv = dispersion_csv(0.3, &[0.0], 3).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "eta,p,lambda0,j,k,multiplicity");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,1,0,0,0,1"));
        assert!(lines[2].ends_with(",-1,0,2"));
    }

    #[test]
    fn grid_contains_landmarks() {
        let g = uniform_eta_grid(33);
        assert_eq!(g[0], -PI);
        assert_eq!(g[32], PI);
        assert_eq!(g[16], 0.0);
    }
}
