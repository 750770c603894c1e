use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;

use perfband::bands::{analytic_samples, band_structure, detect_gaps, Band, EtaGrid};
use perfband::dispersion::{lambda0, sorted_spectrum, FloquetPoint, ModeLabel, TOL_MULT};
use perfband::fem::assemble;
use perfband::geometry::{build_perforated_mesh, HoleShape, Mesh, MeshOptions, PerforatedCell};

fn mesh() -> &'static Mesh {
    static MESH: OnceLock<Mesh> = OnceLock::new();
    MESH.get_or_init(|| {
        let cell = PerforatedCell::new(0.5, 2, HoleShape::canonical(0.5)).unwrap();
        build_perforated_mesh(&cell, MeshOptions::new(0.08)).unwrap()
    })
}

fn brute_force(eta: f64, height: f64, count: usize) -> Vec<f64> {
    let pt = FloquetPoint::new(eta, height).unwrap();
    let span = count as i64 + 2;
    let mut all: Vec<f64> = (-span..=span)
        .flat_map(|j| (0..=span as u32).map(move |k| ModeLabel::new(j, k)))
        .map(|l| lambda0(l, pt))
        .collect();
    all.sort_by(f64::total_cmp);
    all.truncate(count);
    all
}

fn random_vector(seed: &[(f64, f64)]) -> Vec<Complex64> {
    seed.iter().map(|&(a, b)| Complex64::new(a, b)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sorted_spectrum_agrees_with_enumeration(eta in -PI..=PI, height in 0.1f64..2.0, count in 1usize..12) {
        let pt = FloquetPoint::new(eta, height).unwrap();
        let got = sorted_spectrum(pt, count, TOL_MULT).values();
        let want = brute_force(eta, height, count);
        prop_assert_eq!(got.len(), count);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b), "{} vs {}", a, b);
        }
        prop_assert!(got.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn spectrum_is_even_in_eta(eta in 0.0..=PI, height in 0.1f64..2.0) {
        let a = sorted_spectrum(FloquetPoint::new(eta, height).unwrap(), 8, TOL_MULT).values();
        let b = sorted_spectrum(FloquetPoint::new(-eta, height).unwrap(), 8, TOL_MULT).values();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x));
        }
    }

    #[test]
    fn clusters_partition_the_levels(eta in -PI..=PI, height in 0.1f64..2.0, count in 1usize..16) {
        let s = sorted_spectrum(FloquetPoint::new(eta, height).unwrap(), count, TOL_MULT);
        let flat: Vec<usize> = s.clusters.iter().flatten().copied().collect();
        prop_assert_eq!(flat, (0..count).collect::<Vec<_>>());
    }

    #[test]
    fn band_extents_grow_under_refinement(
        height in 0.2f64..1.5,
        extra in proptest::collection::vec(-PI..=PI, 1..8),
    ) {
        let coarse = EtaGrid::uniform(9).unwrap();
        let fine = EtaGrid::from_points(coarse.points().iter().copied().chain(extra).collect()).unwrap();
        let a = band_structure(&analytic_samples(height, &coarse, 6).unwrap()).unwrap();
        let b = band_structure(&analytic_samples(height, &fine, 6).unwrap()).unwrap();
        for (c, f) in a.bands.iter().zip(&b.bands) {
            prop_assert!(f.min <= c.min && f.max >= c.max);
        }
    }

    #[test]
    fn gaps_avoid_every_band(
        raw in proptest::collection::vec((0.0f64..50.0, 0.0f64..10.0), 1..8),
        up_to in 1.0f64..80.0,
    ) {
        let bands: Vec<Band> =
            raw.iter().enumerate().map(|(i, &(lo, w))| Band { p: i + 1, min: lo, max: lo + w }).collect();
        let gaps = detect_gaps(&bands, up_to);
        for &(lo, hi) in &gaps {
            prop_assert!(0.0 <= lo && lo < hi && hi <= up_to);
            for b in &bands {
                prop_assert!(hi <= b.min || lo >= b.max, "gap ({}, {}) meets band {:?}", lo, hi, b);
            }
        }
        prop_assert!(gaps.windows(2).all(|w| w[0].1 < w[1].0));
        // gaps plus bands cover [0, up_to]
        let covered: f64 = gaps.iter().map(|g| g.1 - g.0).sum::<f64>()
            + union_length(&bands, up_to);
        prop_assert!((covered - up_to).abs() <= 1e-9 * up_to);
    }

    #[test]
    fn stiffness_and_mass_are_hermitian(eta in -PI..=PI) {
        let pair = assemble(mesh(), eta).unwrap();
        prop_assert!(pair.k.hermitian_defect() <= 1e-12);
        prop_assert!(pair.m.hermitian_defect() <= 1e-12);
    }

    #[test]
    fn opposite_parameters_give_conjugate_matrices(eta in -PI..=PI, i in 0usize..1000) {
        let a = assemble(mesh(), eta).unwrap();
        let b = assemble(mesh(), -eta).unwrap();
        let n = a.n_dofs();
        let row = i % n;
        let (cols, vals) = a.k.row(row);
        for (&c, v) in cols.iter().zip(vals) {
            prop_assert!((b.k.get(row, c) - v.conj()).norm() <= 1e-12);
        }
    }

    #[test]
    fn forms_are_nonnegative(
        eta in -PI..=PI,
        seed in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..400),
    ) {
        let pair = assemble(mesh(), eta).unwrap();
        let n = pair.n_dofs();
        let u = random_vector(&seed.iter().cycle().take(n).copied().collect::<Vec<_>>());
        let k = pair.k.form(&u, &u);
        let m = pair.l2_product(&u, &u).unwrap();
        prop_assert!(k.im.abs() <= 1e-10 * (1.0 + k.re.abs()));
        prop_assert!(k.re >= -1e-10 && m.re > 0.0);
    }
}

fn union_length(bands: &[Band], up_to: f64) -> f64 {
    let mut iv: Vec<(f64, f64)> = bands.iter().map(|b| (b.min.min(up_to), b.max.min(up_to))).collect();
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut total, mut reach) = (0.0, 0.0f64);
    for (lo, hi) in iv {
        let start = lo.max(reach);
        if hi > start {
            total += hi - start;
        }
        reach = reach.max(hi);
    }
    total
}
