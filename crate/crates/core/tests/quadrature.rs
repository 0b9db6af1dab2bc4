use std::f64::consts::PI;

use approx::assert_relative_eq;
use lis_core::capacity::{psd_2d, PsdValue};
use lis_core::fields::{fraction_nu, fraction_nu_at};
use lis_core::quadrature::{
    approximation_audit, correlation_integral, hankel_sinc_transform, integrate,
    line_correlation, sinc_model, QuadratureConfig,
};
use lis_core::{Error, SurfaceSpec, Terminal, Wavelength};
use proptest::prelude::*;

fn wl(v: f64) -> Wavelength {
    Wavelength::new(v).unwrap()
}

fn unit(x: f64, y: f64, z: f64) -> Terminal {
    Terminal::new(x, y, z, 1.0).unwrap()
}

#[test]
fn adaptive_rule_handles_endpoint_singularity() {
    let v = integrate(|x: f64| -x.ln(), 0.0, 1.0, 1e-12, 0.0, 1, 10_000).unwrap();
    assert_relative_eq!(v.value, 1.0, max_relative = 1e-11);
    let v = integrate(|x: f64| (50.0 * x).cos(), 0.0, PI, 1e-12, 1e-14, 1, 10_000).unwrap();
    assert!((v.value - (50.0 * PI).sin() / 50.0).abs() < 1e-12);
}

#[test]
fn panel_budget_is_reported() {
    match integrate(|x: f64| (1e4 * x).sin(), 0.0, 10.0, 1e-12, 0.0, 1, 8) {
        Err(Error::BudgetExceeded { panels, .. }) => assert!(panels <= 8),
        other => panic!("expected budget error, got {other:?}"),
    }
}

#[test]
fn diagonal_equals_nu() {
    let cfg = QuadratureConfig::default();
    let s = SurfaceSpec::finite(2.0, 1.0).unwrap();
    for t in [unit(0.0, 0.0, 1.0), unit(1.5, -0.8, 0.4), unit(-3.0, 2.0, 2.5)] {
        let v = correlation_integral(&t, &t, &s, wl(0.5), &cfg).unwrap();
        let nu = fraction_nu_at(&s, &t).unwrap();
        assert!((v.value.re - nu).abs() <= 10.0 * cfg.rel_tol * nu);
        assert!(v.value.im.abs() <= 10.0 * cfg.rel_tol * nu);
        assert!(v.est_error <= cfg.rel_tol * v.value.norm() + cfg.abs_tol);
    }
}

#[test]
fn diagonal_on_unbounded_surface_is_half() {
    let cfg = QuadratureConfig::default();
    let t = unit(0.2, 0.1, 1.5);
    let v = correlation_integral(&t, &t, &SurfaceSpec::infinite(), wl(0.4), &cfg).unwrap();
    assert!((v.value.re - 0.5).abs() <= 10.0 * cfg.rel_tol);
}

#[test]
fn half_wavelength_pair_is_nearly_orthogonal() {
    let (lam, z) = (0.4, 2.0);
    let cfg = QuadratureConfig::default();
    let s = SurfaceSpec::effectively_infinite(z, wl(lam), cfg.effective_infinity_factor).unwrap();
    let a = unit(0.0, 0.0, z);
    let b = unit(lam / 2.0, 0.0, z);
    let off = correlation_integral(&a, &b, &s, wl(lam), &cfg).unwrap().value.norm();
    let diag = fraction_nu(&s, z).unwrap();
    assert!(off < 0.03 * diag, "|phi| / phi_kk = {}", off / diag);
}

#[test]
fn line_integral_examples() {
    let cfg = QuadratureConfig::default();
    let lam = wl(0.4);
    let peak = line_correlation(0.0, 2.0, lam, &cfg).unwrap();
    assert_relative_eq!(peak.value, 0.5, max_relative = 1e-3);
    assert!(peak.imag.abs() < 1e-9);
    let null = line_correlation(0.2, 2.0, lam, &cfg).unwrap();
    assert!(null.value.abs() < 0.01 * peak.value);
    for dx in [0.05, 0.33, 1.7] {
        let p = line_correlation(dx, 2.0, lam, &cfg).unwrap().value;
        let m = line_correlation(-dx, 2.0, lam, &cfg).unwrap().value;
        assert!((p - m).abs() <= 1e-9 * peak.value);
    }
}

#[test]
fn sinc_model_examples() {
    let lam = wl(0.4);
    assert_eq!(sinc_model(0.0, 2.0, lam).unwrap(), 0.5);
    assert!(sinc_model(0.2, 2.0, lam).unwrap().abs() < 1e-16);
    assert_relative_eq!(sinc_model(0.1, 1.0, lam).unwrap(), 4.0 / PI, max_relative = 1e-14);
    assert!(sinc_model(0.1, 0.0, lam).is_err());
}

#[test]
fn single_point_audit() {
    let cfg = QuadratureConfig::default();
    let rep = approximation_audit(2.0, wl(0.4), &[0.0], &cfg).unwrap();
    let direct = line_correlation(0.0, 2.0, wl(0.4), &cfg).unwrap().value;
    assert_relative_eq!(rep.max_deviation, (direct - 0.5).abs() / 0.5, epsilon = 1e-15);
    assert!(approximation_audit(2.0, wl(0.4), &[], &cfg).is_err());
}

#[test]
fn audit_csv_columns() {
    let cfg = QuadratureConfig::default();
    let rep = approximation_audit(2.0, wl(0.4), &[0.0, 0.1], &cfg).unwrap();
    let mut buf = Vec::new();
    rep.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "delta_x,numeric_value,sinc_value,abs_error");
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn hankel_transform_matches_plane_spectrum() {
    let lam = 0.5;
    let cfg = QuadratureConfig::default();
    for frac in [0.0, 0.5, 0.8] {
        let s = frac / lam;
        let v = hankel_sinc_transform(s, wl(lam), &cfg).unwrap().value;
        let PsdValue::Finite(g) = psd_2d(s, wl(lam)).unwrap() else { panic!() };
        assert_relative_eq!(v, g, max_relative = 1e-4);
    }
}

#[test]
fn config_rejects_bad_values() {
    let bad = QuadratureConfig {
        rel_tol: 0.0,
        ..QuadratureConfig::default()
    };
    assert!(bad.validate().is_err());
    let t = unit(0.0, 0.0, 1.0);
    let s = SurfaceSpec::finite(1.0, 1.0).unwrap();
    assert!(matches!(
        correlation_integral(&t, &t, &s, wl(0.5), &bad),
        Err(Error::InvalidInput(_))
    ));
    let parsed: Result<QuadratureConfig, _> = serde_json::from_str(r#"{"rel_tol": 1e-6, "bogus": 1}"#);
    assert!(parsed.is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn correlation_is_hermitian_and_resolution_invariant(
        xa in -1.5f64..1.5, ya in -1.0f64..1.0, za in 0.2f64..2.0,
        xb in -1.5f64..1.5, yb in -1.0f64..1.0, zb in 0.2f64..2.0,
    ) {
        let cfg = QuadratureConfig::default();
        let fine = QuadratureConfig { max_panel_fraction_of_lambda: cfg.max_panel_fraction_of_lambda / 2.0, ..cfg };
        let s = SurfaceSpec::finite(1.0, 0.5).unwrap();
        let lam = wl(0.5);
        let (a, b) = (unit(xa, ya, za), unit(xb, yb, zb));
        let ab = correlation_integral(&a, &b, &s, lam, &cfg).unwrap().value;
        let ba = correlation_integral(&b, &a, &s, lam, &cfg).unwrap().value;
        let ab_fine = correlation_integral(&a, &b, &s, lam, &fine).unwrap().value;
        let scale = (fraction_nu_at(&s, &a).unwrap() * fraction_nu_at(&s, &b).unwrap()).sqrt();
        let tol = 10.0 * cfg.rel_tol * scale + cfg.abs_tol;
        prop_assert!((ab - ba.conj()).norm() <= tol);
        prop_assert!((ab - ab_fine).norm() <= tol);
        prop_assert!(ab.norm() <= scale * (1.0 + 10.0 * cfg.rel_tol));
    }
}
