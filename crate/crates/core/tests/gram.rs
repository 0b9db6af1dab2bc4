use approx::assert_relative_eq;
use lis_core::capacity::sum_capacity_logdet;
use lis_core::experiments::equispaced_line;
use lis_core::fields::fraction_nu;
use lis_core::gram::{build_gram, effective_rank, GramMatrix, GramMode};
use lis_core::quadrature::{approximation_audit, QuadratureConfig};
use lis_core::{NoiseModel, SurfaceSpec, Terminal, Wavelength};
use proptest::prelude::*;

fn wl(v: f64) -> Wavelength {
    Wavelength::new(v).unwrap()
}

#[test]
fn single_terminal() {
    let s = SurfaceSpec::finite(2.0, 1.0).unwrap();
    let t = Terminal::new(0.0, 0.0, 1.0, 3.0).unwrap();
    let g = build_gram(&[t], &s, wl(0.5), &QuadratureConfig::default(), GramMode::Numeric).unwrap();
    let nu = fraction_nu(&s, 1.0).unwrap();
    assert_relative_eq!(g.get(0, 0).re, 3.0 * nu, max_relative = 1e-7);
    let c = sum_capacity_logdet(&g, NoiseModel::new(1.0).unwrap(), None);
    assert_relative_eq!(c.total, (3.0 * nu).ln_1p(), max_relative = 1e-7);
}

#[test]
fn colocated_pair_is_rank_one() {
    let s = SurfaceSpec::finite(2.0, 1.0).unwrap();
    let t = Terminal::new(0.3, 0.1, 1.2, 2.0).unwrap();
    let g = build_gram(&[t, t], &s, wl(0.5), &QuadratureConfig::default(), GramMode::Numeric).unwrap();
    let pnu = 2.0 * lis_core::fields::fraction_nu_at(&s, &t).unwrap();
    let ev = g.eigenvalues();
    assert!(ev[0].abs() < 1e-9 * pnu);
    assert_relative_eq!(ev[1], 2.0 * pnu, max_relative = 1e-7);
    assert_eq!(effective_rank(&g, 1e-3, None).unwrap().effective_rank, 1);
    let c = sum_capacity_logdet(&g, NoiseModel::new(0.5).unwrap(), None);
    assert_relative_eq!(c.total, (2.0 * pnu / 0.5).ln_1p(), max_relative = 1e-7);
}

#[test]
fn half_wavelength_line_is_full_rank() {
    let lam = 0.4;
    let terms = equispaced_line(21, lam / 2.0, 2.0, 1.0).unwrap();
    let g = build_gram(
        &terms,
        &SurfaceSpec::infinite(),
        wl(lam),
        &QuadratureConfig::default(),
        GramMode::SincApprox,
    )
    .unwrap();
    let d = effective_rank(&g, 1e-3, Some(10.0 * lam / 2.0)).unwrap();
    assert_eq!(d.effective_rank, 21);
    assert_relative_eq!(d.density.unwrap(), 21.0 / 2.0, max_relative = 1e-12);
    for (i, j) in [(0, 1), (3, 9), (0, 20)] {
        assert!(g.get(i, j).norm() < 1e-15);
    }
}

#[test]
fn sinc_mode_needs_common_height() {
    let terms = [
        Terminal::new(0.0, 0.0, 1.0, 1.0).unwrap(),
        Terminal::new(0.1, 0.0, 1.1, 1.0).unwrap(),
    ];
    let r = build_gram(
        &terms,
        &SurfaceSpec::infinite(),
        wl(0.4),
        &QuadratureConfig::default(),
        GramMode::SincApprox,
    );
    assert!(r.is_err());
    let empty: [Terminal; 0] = [];
    assert!(build_gram(&empty, &SurfaceSpec::infinite(), wl(0.4), &QuadratureConfig::default(), GramMode::SincApprox).is_err());
}

#[test]
fn numeric_and_sinc_agree_within_audit_deviation() {
    let (lam, z) = (0.4, 2.0);
    let cfg = QuadratureConfig::default();
    let surface = SurfaceSpec::infinite();
    let xs = [0.0, 0.13, 0.31, 0.52, 0.9];
    let terms: Vec<Terminal> = xs.iter().map(|&x| Terminal::new(x, 0.0, z, 1.0).unwrap()).collect();
    let numeric = build_gram(&terms, &surface, wl(lam), &cfg, GramMode::Numeric).unwrap();
    let sinc = build_gram(&terms, &surface, wl(lam), &cfg, GramMode::SincApprox).unwrap();
    let grid: Vec<f64> = (0..=90).map(|i| i as f64 / 100.0).collect();
    let audit = approximation_audit(z, wl(lam), &grid, &cfg).unwrap();
    let nu = fraction_nu(&surface, z).unwrap();
    let allowed = audit.max_deviation * nu + 1e-6;
    for i in 0..xs.len() {
        for j in 0..xs.len() {
            let d = (numeric.get(i, j) - sinc.get(i, j)).norm();
            assert!(d <= allowed, "entry ({i},{j}) differs by {d:.3e} > {allowed:.3e}");
        }
    }
}

#[test]
fn text_round_trip() {
    let terms = equispaced_line(4, 0.13, 1.0, 2.0).unwrap();
    let g = build_gram(&terms, &SurfaceSpec::infinite(), wl(0.4), &QuadratureConfig::default(), GramMode::SincApprox).unwrap();
    let mut buf = Vec::new();
    g.write_text(&mut buf).unwrap();
    let back = GramMatrix::read_text(buf.as_slice()).unwrap();
    assert_eq!(back.len(), 4);
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(back.get(i, j), g.get(i, j));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sinc_gram_is_psd_and_rank_is_scale_free(
        xs in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..40),
        c in 0.01f64..100.0,
    ) {
        let terms: Vec<Terminal> = xs.iter().map(|&(x, y)| Terminal::new(x, y, 1.5, 1.0).unwrap()).collect();
        let g = build_gram(&terms, &SurfaceSpec::infinite(), wl(0.4), &QuadratureConfig::default(), GramMode::SincApprox).unwrap();
        let ev = g.eigenvalues();
        let top = ev[ev.len() - 1];
        prop_assert!(ev[0] >= -1e-10 * top);
        let scaled = g.scaled(c).unwrap();
        for (a, b) in scaled.eigenvalues().iter().zip(ev.iter()) {
            prop_assert!((a - c * b).abs() <= 1e-9 * c * top);
        }
        let powered: Vec<Terminal> = terms.iter().map(|t| Terminal { power: c, ..*t }).collect();
        let gp = build_gram(&powered, &SurfaceSpec::infinite(), wl(0.4), &QuadratureConfig::default(), GramMode::SincApprox).unwrap();
        for th in [1e-3, 0.1, 0.5] {
            let r = effective_rank(&g, th, None).unwrap().effective_rank;
            prop_assert!(r >= 1 && r <= terms.len());
            prop_assert_eq!(r, effective_rank(&gp, th, None).unwrap().effective_rank);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn numeric_gram_is_hermitian_psd(
        pts in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0, 0.1f64..4.0, 0.1f64..10.0), 2..12),
    ) {
        let cfg = QuadratureConfig::default();
        let s = SurfaceSpec::finite(2.0, 1.0).unwrap();
        let terms: Vec<Terminal> = pts.iter().map(|&(x, y, z, p)| Terminal::new(x, y, z, p).unwrap()).collect();
        let g = build_gram(&terms, &s, wl(0.5), &cfg, GramMode::Numeric).unwrap();
        let ev = g.eigenvalues();
        let top = ev[ev.len() - 1];
        prop_assert!(ev[0] >= -10.0 * cfg.rel_tol * top);
        for i in 0..terms.len() {
            let nu = lis_core::fields::fraction_nu_at(&s, &terms[i]).unwrap();
            prop_assert!((g.get(i, i).re - terms[i].power * nu).abs() <= 10.0 * cfg.rel_tol * terms[i].power * nu);
            for j in 0..terms.len() {
                prop_assert_eq!(g.get(i, j), g.get(j, i).conj());
            }
        }
    }
}
