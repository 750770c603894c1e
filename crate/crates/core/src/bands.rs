//! Perturbed bands, spectral gaps and the convergence harness.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::cell::least_squares_slope;
use crate::dispersion::{h_regime, lambda0, sorted_spectrum, uniform_eta_grid, FloquetPoint, NodePoint, TOL_MULT};
use crate::error::{Error, Result};
use crate::fem::{EigenOptions, RichardsonSolver};
use crate::geometry::{build_perforated_mesh, HoleShape, MeshOptions, PerforatedCell};

/// Sorted Floquet parameters in `[-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaGrid {
    points: Vec<f64>,
}

impl EtaGrid {
    /// `count` uniform points with both endpoints; zero is always included.
    pub fn uniform(count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::Domain("an eta grid needs at least two points".into()));
        }
        Self::from_points(uniform_eta_grid(count).into_iter().chain([0.0]).collect())
    }

    pub fn from_points(mut points: Vec<f64>) -> Result<Self> {
        if let Some(bad) = points.iter().find(|e| !(e.abs() <= PI)) {
            return Err(Error::Domain(format!("eta = {bad} lies outside [-pi, pi]")));
        }
        points.sort_by(f64::total_cmp);
        points.dedup_by(|a, b| (*a - *b).abs() <= 1e-14);
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Adds `per_window` evenly spaced points across each window, clipped to
    /// `[-pi, pi]`.
    pub fn with_windows(&self, windows: &[NodeWindow], per_window: usize) -> Self {
        let mut pts = self.points.clone();
        for w in windows {
            let lo = (w.eta0 - w.half_width).max(-PI);
            let hi = (w.eta0 + w.half_width).min(PI);
            for i in 0..per_window {
                pts.push(lo + (hi - lo) * (i as f64 + 0.5) / per_window as f64);
            }
        }
        Self::from_points(pts).expect("window points lie in [-pi, pi]")
    }
}

/// Neighbourhood of a double node in which the perturbed curves interact.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeWindow {
    pub eta0: f64,
    pub value: f64,
    pub slopes: [f64; 2],
    /// `2 C0 eps / |s1 - s2|`, where the two shifted curves cross.
    pub offset: f64,
    /// Half the window width, `2 * offset`.
    pub half_width: f64,
}

/// Window around a node where exactly two curves meet.
pub fn node_window(node: &NodePoint, epsilon: f64, c0: f64) -> Result<NodeWindow> {
    if node.multiplicity() != 2 {
        return Err(Error::Domain(format!(
            "node at eta = {} joins {} curves; only double nodes are in scope",
            node.eta0,
            node.multiplicity()
        )));
    }
    let slopes = [node.labels[0].slope(node.eta0), node.labels[1].slope(node.eta0)];
    let ds = (slopes[0] - slopes[1]).abs();
    if ds == 0.0 {
        return Err(Error::Domain("curves meet tangentially".into()));
    }
    let offset = 2.0 * c0 * epsilon / ds;
    Ok(NodeWindow {
        eta0: node.eta0,
        value: node.value,
        slopes,
        offset,
        half_width: 2.0 * offset,
    })
}

/// Base grid plus windows around every double node below `lambda_max`.
pub fn refined_grid(base: &EtaGrid, height: f64, epsilon: f64, c0: f64, lambda_max: f64) -> Result<EtaGrid> {
    let windows = crate::dispersion::find_nodes(height, lambda_max)
        .iter()
        .filter(|n| n.multiplicity() == 2)
        .map(|n| node_window(n, epsilon, c0))
        .collect::<Result<Vec<_>>>()?;
    Ok(base.with_windows(&windows, WINDOW_POINTS))
}

/// Samples added per node window.
pub const WINDOW_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    /// One based band index.
    pub p: usize,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandStructure {
    pub bands: Vec<Band>,
    pub gaps: Vec<(f64, f64)>,
}

/// Eigenvalues at one grid point; `error_bars` is empty for analytic data.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSample {
    pub eta: f64,
    pub values: Vec<f64>,
    pub error_bars: Vec<f64>,
}

/// Band extents over the samples and the gaps between them.
pub fn band_structure(samples: &[BandSample]) -> Result<BandStructure> {
    let count = samples.iter().map(|s| s.values.len()).min().unwrap_or(0);
    if count == 0 {
        return Err(Error::Domain("no band samples".into()));
    }
    let bands: Vec<Band> = (0..count)
        .map(|p| {
            let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.values[p]), hi.max(s.values[p]))
            });
            Band {
                p: p + 1,
                min: lo,
                max: hi,
            }
        })
        .collect();
    let top = bands.iter().map(|b| b.max).fold(f64::NEG_INFINITY, f64::max);
    let gaps = detect_gaps(&bands, top);
    Ok(BandStructure { bands, gaps })
}

/// Maximal open intervals of `[0, up_to]` covered by no closed band.
pub fn detect_gaps(bands: &[Band], up_to: f64) -> Vec<(f64, f64)> {
    let mut iv: Vec<(f64, f64)> = bands.iter().map(|b| (b.min, b.max)).collect();
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut gaps = Vec::new();
    let mut reach = 0.0f64;
    for (lo, hi) in iv {
        if lo > reach && reach < up_to {
            gaps.push((reach, lo.min(up_to)));
        }
        reach = reach.max(hi);
    }
    if reach < up_to {
        gaps.push((reach, up_to));
    }
    gaps
}

/// Limit-problem samples from the closed-form spectrum.
pub fn analytic_samples(height: f64, grid: &EtaGrid, count: usize) -> Result<Vec<BandSample>> {
    grid.points()
        .iter()
        .map(|&eta| {
            let pt = FloquetPoint::new(eta, height)?;
            Ok(BandSample {
                eta,
                values: sorted_spectrum(pt, count, TOL_MULT).values(),
                error_bars: vec![],
            })
        })
        .collect()
}

/// Extrapolated eigenvalues at every grid point. The spectrum at `-eta` is
/// the complex conjugate problem of the one at `eta`, so only `|eta|` is
/// solved.
pub fn solve_samples(
    solver: &RichardsonSolver,
    epsilon: f64,
    etas: &[f64],
    count: usize,
    opts: EigenOptions,
) -> Result<Vec<BandSample>> {
    let mut keys: Vec<f64> = etas.iter().map(|e| e.abs()).collect();
    keys.sort_by(f64::total_cmp);
    keys.dedup_by(|a, b| (*a - *b).abs() <= 1e-14);
    let solved: Vec<BandSample> = keys
        .par_iter()
        .map(|&eta| {
            let (ex, _, _) = solver.solve(eta, count, opts).map_err(|e| Error::AtSample {
                eta,
                epsilon,
                source: Box::new(e),
            })?;
            Ok(BandSample {
                eta,
                values: ex.iter().map(|x| x.value).collect(),
                error_bars: ex.iter().map(|x| x.error_bar).collect(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(etas
        .iter()
        .map(|&eta| {
            let i = keys.partition_point(|k| *k < eta.abs() - 1e-14);
            BandSample {
                eta,
                ..solved[i].clone()
            }
        })
        .collect())
}

/// Bands of the perforated cell from Richardson-extrapolated eigenvalues.
pub fn compute_bands(
    cell: &PerforatedCell,
    grid: &EtaGrid,
    count: usize,
    mesh: MeshOptions,
    opts: EigenOptions,
) -> Result<(BandStructure, Vec<BandSample>)> {
    if count == 0 {
        return Err(Error::Domain("band count must be positive".into()));
    }
    let solver = RichardsonSolver::new(&build_perforated_mesh(cell, mesh)?)?;
    let samples = solve_samples(&solver, cell.epsilon(), grid.points(), count, opts)?;
    Ok((band_structure(&samples)?, samples))
}

/// CSV with columns `p,band_min,band_max,gap_lo,gap_hi`; band rows leave the
/// gap columns empty and gap rows leave the band columns empty.
pub fn bands_csv(bs: &BandStructure) -> String {
    let mut s = String::from("p,band_min,band_max,gap_lo,gap_hi\n");
    for b in &bs.bands {
        writeln!(s, "{},{},{},,", b.p, b.min, b.max).unwrap();
    }
    for (lo, hi) in &bs.gaps {
        writeln!(s, ",,,{lo},{hi}").unwrap();
    }
    s
}

/// One `(epsilon, eta, m)` comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSample {
    pub m: usize,
    pub epsilon: f64,
    pub eta: f64,
    pub lambda: f64,
    pub lambda0: f64,
    pub error_bar: f64,
}

impl SweepSample {
    pub fn signed(&self) -> f64 {
        self.lambda - self.lambda0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub m: usize,
    pub epsilon: f64,
    /// `sup_eta |Lambda_eps - Lambda_0|`.
    pub sup_err: f64,
    /// `max_eta (Lambda_eps - Lambda_0)`.
    pub signed_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub m: usize,
    /// Least-squares slope of `log sup_err` against `log eps`.
    pub slope: f64,
    /// `max_eps sup_err / eps`.
    pub c0: f64,
    /// Least-squares `c` in `max(signed_max, 0) ~ c eps`.
    pub c_upper: f64,
    /// Every sample satisfies `signed <= c_upper eps + error_bar`.
    pub pass_upper: bool,
    /// At least three `eps` and slope in `[0.9, 1.3]`.
    pub pass_rate: bool,
    /// Largest `eps` below which every sample meets the upper bound.
    pub eps0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub height: f64,
    pub rows: Vec<RateRow>,
    pub fits: Vec<RateFit>,
    /// `max_m c0`, used for node windows.
    pub c0: f64,
    pub samples: Vec<SweepSample>,
}

pub const RATE_SLOPE_RANGE: (f64, f64) = (0.9, 1.3);

/// Relative slack for floating-point noise in the Rayleigh quotients; the
/// exact zero level at `eta = 0` comes out near `1e-11` on fine meshes.
pub const ROUNDOFF_FLOOR: f64 = 1e-9;

/// Rejects band indices beyond those with an established rate at `height`.
pub fn check_band_scope(height: f64, ms: &[usize]) -> Result<()> {
    let regime = h_regime(height)?;
    let top = regime.max_verified_band();
    for &m in ms {
        if m == 0 || m > top {
            return Err(Error::Domain(format!(
                "band m = {m} is outside the verified range at H = {height} (regime {regime:?} allows m <= {top})"
            )));
        }
    }
    Ok(())
}

/// Compares extrapolated `Lambda^eps_m` with `Lambda^0_m` over `1/N` for each
/// `N` in `ns`. A first pass on `grid` fixes `C0`; a second pass adds the
/// node windows that `C0` implies.
pub fn convergence_sweep(
    height: f64,
    hole: &HoleShape,
    ns: &[usize],
    ms: &[usize],
    grid: &EtaGrid,
    mesh: MeshOptions,
    opts: EigenOptions,
) -> Result<RateReport> {
    check_band_scope(height, ms)?;
    if ns.is_empty() || ms.is_empty() {
        return Err(Error::Domain("sweep needs at least one N and one m".into()));
    }
    let count = *ms.iter().max().unwrap();
    let solvers: Vec<(f64, RichardsonSolver)> = ns
        .iter()
        .map(|&n| {
            let cell = PerforatedCell::new(height, n, hole.clone())?;
            Ok((
                cell.epsilon(),
                RichardsonSolver::new(&build_perforated_mesh(&cell, mesh)?)?,
            ))
        })
        .collect::<Result<_>>()?;

    let mut per_eps: Vec<Vec<BandSample>> = solvers
        .iter()
        .map(|(eps, s)| solve_samples(s, *eps, grid.points(), count, opts))
        .collect::<Result<_>>()?;
    let first = collect_samples(height, &solvers, &per_eps, ms)?;
    let c0 = rate_rows(ms, &solvers, &first)
        .iter()
        .map(|r| r.sup_err / r.epsilon)
        .fold(0.0, f64::max);

    let lambda_max = analytic_samples(height, grid, count)?
        .iter()
        .map(|s| s.values[count - 1])
        .fold(0.0, f64::max);
    for ((eps, solver), samples) in solvers.iter().zip(per_eps.iter_mut()) {
        let refined = refined_grid(grid, height, *eps, c0, lambda_max)?;
        let extra: Vec<f64> = refined
            .points()
            .iter()
            .copied()
            .filter(|e| !grid.points().iter().any(|g| (g - e).abs() <= 1e-14))
            .collect();
        samples.extend(solve_samples(solver, *eps, &extra, count, opts)?);
        samples.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    }
    let samples = collect_samples(height, &solvers, &per_eps, ms)?;
    let rows = rate_rows(ms, &solvers, &samples);
    let fits = ms.iter().map(|&m| fit_rates(m, &rows, &samples)).collect();
    let c0 = rows.iter().map(|r| r.sup_err / r.epsilon).fold(0.0, f64::max);
    Ok(RateReport {
        height,
        rows,
        fits,
        c0,
        samples,
    })
}

fn collect_samples(
    height: f64,
    solvers: &[(f64, RichardsonSolver)],
    per_eps: &[Vec<BandSample>],
    ms: &[usize],
) -> Result<Vec<SweepSample>> {
    let mut out = Vec::new();
    for ((eps, _), samples) in solvers.iter().zip(per_eps) {
        for s in samples {
            let exact = sorted_spectrum(FloquetPoint::new(s.eta, height)?, s.values.len(), TOL_MULT).values();
            for &m in ms {
                out.push(SweepSample {
                    m,
                    epsilon: *eps,
                    eta: s.eta,
                    lambda: s.values[m - 1],
                    lambda0: exact[m - 1],
                    error_bar: s.error_bars[m - 1],
                });
            }
        }
    }
    Ok(out)
}

fn rate_rows(ms: &[usize], solvers: &[(f64, RichardsonSolver)], samples: &[SweepSample]) -> Vec<RateRow> {
    let mut rows = Vec::new();
    for &m in ms {
        for (eps, _) in solvers {
            let sel = samples.iter().filter(|s| s.m == m && s.epsilon == *eps);
            let (sup, smax) = sel.fold((0.0f64, f64::NEG_INFINITY), |(a, b), s| {
                (a.max(s.signed().abs()), b.max(s.signed()))
            });
            rows.push(RateRow {
                m,
                epsilon: *eps,
                sup_err: sup,
                signed_max: smax,
            });
        }
    }
    rows
}

fn fit_rates(m: usize, rows: &[RateRow], samples: &[SweepSample]) -> RateFit {
    let mine: Vec<&RateRow> = rows.iter().filter(|r| r.m == m).collect();
    let pts: Vec<(f64, f64)> = mine
        .iter()
        .filter(|r| r.sup_err > 0.0)
        .map(|r| (r.epsilon.ln(), r.sup_err.ln()))
        .collect();
    let slope = if pts.len() >= 2 {
        least_squares_slope(&pts)
    } else {
        f64::NAN
    };
    let c0 = mine.iter().map(|r| r.sup_err / r.epsilon).fold(0.0, f64::max);
    let num: f64 = mine.iter().map(|r| r.epsilon * r.signed_max.max(0.0)).sum();
    let den: f64 = mine.iter().map(|r| r.epsilon * r.epsilon).sum();
    let c_upper = num / den;
    let meets = |s: &SweepSample| s.signed() <= c_upper * s.epsilon + s.error_bar + ROUNDOFF_FLOOR * (1.0 + s.lambda0);
    let mine_samples: Vec<&SweepSample> = samples.iter().filter(|s| s.m == m).collect();
    let pass_upper = mine_samples.iter().all(|s| meets(s));
    let mut eps_sorted: Vec<f64> = mine.iter().map(|r| r.epsilon).collect();
    eps_sorted.sort_by(f64::total_cmp);
    let mut eps0 = None;
    for e in eps_sorted {
        if mine_samples.iter().filter(|s| s.epsilon == e).all(|s| meets(s)) {
            eps0 = Some(e);
        } else {
            break;
        }
    }
    let pass_rate = pts.len() >= 3 && slope >= RATE_SLOPE_RANGE.0 && slope <= RATE_SLOPE_RANGE.1;
    RateFit {
        m,
        slope,
        c0,
        c_upper,
        pass_upper,
        pass_rate,
        eps0,
    }
}

/// CSV with columns `m,epsilon,sup_err,signed_max,slope,C0,pass_upper,pass_rate`.
pub fn rate_csv(report: &RateReport) -> String {
    let mut s = String::from("m,epsilon,sup_err,signed_max,slope,C0,pass_upper,pass_rate\n");
    for r in &report.rows {
        let f = report.fits.iter().find(|f| f.m == r.m).expect("fit per band");
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.m, r.epsilon, r.sup_err, r.signed_max, f.slope, f.c0, f.pass_upper, f.pass_rate
        )
        .unwrap();
    }
    s
}

/// One sampled `eta` of a node check.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSample {
    pub eta: f64,
    pub values: Vec<f64>,
    /// Eigenvalues within `C0 eps` of one of the two limit curves at `eta`.
    pub near_curves: usize,
    /// Eigenvalues within `C0 eps` of the node value.
    pub near_node: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeReport {
    pub epsilon: f64,
    pub c0: f64,
    pub window: NodeWindow,
    pub samples: Vec<NodeSample>,
    /// Width of the `eta` interval around the node on which both perturbed
    /// eigenvalues stay within `C0 eps` of the node value.
    pub empirical_width: f64,
    /// Every sample sees exactly two eigenvalues near the limit curves.
    pub pass_count: bool,
}

/// Counts perturbed eigenvalues near a double node and measures the `eta`
/// interval on which the pair stays within `C0 eps` of the node value.
///
/// Only the side of the window inside `[-pi, pi]` (or `eta >= 0` at the
/// origin) is sampled; the other side is its mirror image.
pub fn node_multiplicity_check(
    solver: &RichardsonSolver,
    cell: &PerforatedCell,
    node: &NodePoint,
    c0: f64,
    opts: EigenOptions,
) -> Result<NodeReport> {
    if node.has_x2_dependent {
        return Err(Error::Domain(
            "node involves an x2-dependent curve; out of verified scope".into(),
        ));
    }
    let eps = cell.epsilon();
    let window = node_window(node, eps, c0)?;
    let height = cell.height;
    let spec = sorted_spectrum(FloquetPoint::new(node.eta0, height)?, 64, TOL_MULT);
    let first = spec
        .levels
        .iter()
        .position(|l| (l.value - node.value).abs() <= 1e-9 * (1.0 + node.value))
        .ok_or_else(|| Error::Domain("node value not found in the limit spectrum".into()))?;
    let count = first + 3;
    let tol = c0 * eps;
    let dir = if node.eta0 < PI - 1e-12 { 1.0 } else { -1.0 };

    let solve = |eta: f64| -> Result<Vec<f64>> {
        let (ex, _, _) = solver.solve(eta, count, opts).map_err(|e| Error::AtSample {
            eta,
            epsilon: eps,
            source: Box::new(e),
        })?;
        Ok(ex.iter().map(|x| x.value).collect())
    };
    let at_node = |v: &[f64]| (v[first] - node.value).abs() <= tol && (v[first + 1] - node.value).abs() <= tol;

    let etas: Vec<f64> = (0..=WINDOW_POINTS)
        .map(|k| node.eta0 + dir * window.half_width * k as f64 / WINDOW_POINTS as f64)
        .collect();
    let values: Vec<Vec<f64>> = etas.par_iter().map(|&e| solve(e)).collect::<Result<_>>()?;
    let mut samples = Vec::with_capacity(etas.len());
    for (&eta, v) in etas.iter().zip(values) {
        let pt = FloquetPoint::new(eta.clamp(-PI, PI), height)?;
        let curves = [lambda0(node.labels[0], pt), lambda0(node.labels[1], pt)];
        let near_curves = v
            .iter()
            .filter(|x| curves.iter().any(|c| (*x - c).abs() <= tol))
            .count();
        let near_node = v.iter().filter(|x| (*x - node.value).abs() <= tol).count();
        samples.push(NodeSample {
            eta,
            values: v,
            near_curves,
            near_node,
        });
    }
    let pass_count = samples.iter().all(|s| s.near_curves == 2);

    // bracket the edge of the interval where the pair sits at the node value
    let step = window.half_width / WINDOW_POINTS as f64;
    let mut inside = 0.0;
    let mut outside = None;
    for (k, s) in samples.iter().enumerate() {
        if at_node(&s.values) {
            inside = k as f64 * step;
        } else {
            outside = Some(k as f64 * step);
            break;
        }
    }
    if !at_node(&samples[0].values) {
        return Ok(NodeReport {
            epsilon: eps,
            c0,
            window,
            samples,
            empirical_width: 0.0,
            pass_count,
        });
    }
    let mut d = inside;
    while outside.is_none() {
        d += step;
        if d > PI {
            return Err(Error::Domain("perturbed pair never leaves the node window".into()));
        }
        if at_node(&solve(node.eta0 + dir * d)?) {
            inside = d;
        } else {
            outside = Some(d);
        }
    }
    let mut hi = outside.unwrap();
    for _ in 0..12 {
        let mid = 0.5 * (inside + hi);
        if at_node(&solve(node.eta0 + dir * mid)?) {
            inside = mid;
        } else {
            hi = mid;
        }
    }
    Ok(NodeReport {
        epsilon: eps,
        c0,
        window,
        samples,
        empirical_width: inside + hi,
        pass_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::find_nodes;

    fn band(p: usize, min: f64, max: f64) -> Band {
        Band { p, min, max }
    }

    #[test]
    fn gap_detector_unit_cases() {
        assert_eq!(
            detect_gaps(&[band(1, 0.0, 1.0), band(2, 2.0, 3.0)], 3.0),
            vec![(1.0, 2.0)]
        );
        assert!(detect_gaps(&[band(1, 0.0, 2.0), band(2, 1.0, 3.0)], 3.0).is_empty());
        assert!(detect_gaps(&[band(1, 0.0, 1.0), band(2, 1.0, 3.0)], 3.0).is_empty());
    }

    #[test]
    fn analytic_bands_touch_at_pi_squared() {
        let grid = EtaGrid::uniform(33).unwrap();
        let bs = band_structure(&analytic_samples(0.3, &grid, 2).unwrap()).unwrap();
        let pi2 = PI * PI;
        assert!((bs.bands[0].min).abs() < 1e-12 && (bs.bands[0].max - pi2).abs() < 1e-9);
        assert!((bs.bands[1].min - pi2).abs() < 1e-9 && (bs.bands[1].max - 4.0 * pi2).abs() < 1e-9);
        assert!(bs.gaps.is_empty());
        assert!(bands_csv(&bs).starts_with("p,band_min,band_max,gap_lo,gap_hi\n1,0,"));
    }

    #[test]
    fn grid_contains_endpoints_and_zero() {
        let g = EtaGrid::uniform(4).unwrap();
        assert_eq!(g.points().first(), Some(&-PI));
        assert_eq!(g.points().last(), Some(&PI));
        assert!(g.points().contains(&0.0));
        assert!(EtaGrid::from_points(vec![4.0]).is_err());
    }

    #[test]
    fn node_windows_follow_the_crossing_slopes() {
        let nodes = find_nodes(0.3, 50.0);
        let n = nodes
            .iter()
            .find(|n| n.eta0 == -PI && (n.value - PI * PI).abs() < 1e-9)
            .unwrap();
        let w = node_window(n, 0.125, 4.0).unwrap();
        // slopes -2 pi and 2 pi
        assert!((w.offset - 2.0 * 4.0 * 0.125 / (4.0 * PI)).abs() < 1e-12);
        let grid = EtaGrid::uniform(33).unwrap().with_windows(&[w.clone()], WINDOW_POINTS);
        let inside = grid
            .points()
            .iter()
            .filter(|e| (*e - w.eta0).abs() <= w.half_width)
            .count();
        assert!(inside >= WINDOW_POINTS);
        let triple = find_nodes(0.5, 50.0)
            .into_iter()
            .find(|n| n.multiplicity() == 3)
            .unwrap();
        assert!(node_window(&triple, 0.125, 4.0).is_err());
    }

    #[test]
    fn out_of_regime_bands_are_refused() {
        assert!(check_band_scope(0.45, &[3]).is_err());
        assert!(check_band_scope(0.45, &[2]).is_ok());
        assert!(check_band_scope(0.3, &[1, 2, 3]).is_ok());
        assert!(check_band_scope(0.75, &[2]).is_err());
    }

    #[test]
    fn mirrored_samples_share_values() {
        let cell = PerforatedCell::new(0.5, 2, HoleShape::canonical(0.5)).unwrap();
        let solver = RichardsonSolver::new(&build_perforated_mesh(&cell, MeshOptions::new(0.1)).unwrap()).unwrap();
        let s = solve_samples(&solver, 0.5, &[-1.0, 1.0, 0.0], 2, EigenOptions::default()).unwrap();
        assert_eq!(s[0].values, s[1].values);
        let direct = solver.solve(-1.0, 2, EigenOptions::default()).unwrap().0;
        for (a, b) in direct.iter().zip(&s[0].values) {
            assert!((a.value - b).abs() < 1e-8 * (1.0 + b));
        }
    }

    #[test]
    fn small_sweep_reports_linear_rate() {
        let grid = EtaGrid::from_points(vec![-PI, 0.0, 2.0, PI]).unwrap();
        let hole = HoleShape::canonical(0.3);
        let report = convergence_sweep(
            0.3,
            &hole,
            &[4, 8, 16],
            &[1],
            &grid,
            MeshOptions::new(0.03),
            EigenOptions::default(),
        )
        .unwrap();
        let fit = &report.fits[0];
        assert!(fit.slope > 0.9 && fit.slope < 1.3, "slope {}", fit.slope);
        assert!(fit.pass_upper);
        assert!(rate_csv(&report).lines().count() == 4);
    }

    #[test]
    fn node_check_sees_two_curves_near_pi() {
        let cell = PerforatedCell::new(0.3, 4, HoleShape::canonical(0.3)).unwrap();
        let solver = RichardsonSolver::new(&build_perforated_mesh(&cell, MeshOptions::new(0.04)).unwrap()).unwrap();
        let node = find_nodes(0.3, 20.0)
            .into_iter()
            .find(|n| (n.value - PI * PI).abs() < 1e-9)
            .unwrap();
        let rep = node_multiplicity_check(&solver, &cell, &node, 4.0, EigenOptions::default()).unwrap();
        assert!(rep.pass_count);
        assert!(rep.empirical_width > 0.0);
        assert!(rep.empirical_width < 4.0 * rep.window.half_width);
        let triple = find_nodes(0.5, 50.0)
            .into_iter()
            .find(|n| n.multiplicity() == 3)
            .unwrap();
        assert!(node_multiplicity_check(&solver, &cell, &triple, 4.0, EigenOptions::default()).is_err());
    }
}
