use std::f64::consts::{E, FRAC_PI_2, FRAC_PI_4, LN_2, PI};

use uav_outage::quadrature::{integrate_finite, integrate_semi_infinite, Tolerance};

type Integrand = fn(f64) -> f64;

// (name, f, a, b, exact)
fn finite_cases() -> Vec<(&'static str, Integrand, f64, f64, f64)> {
    vec![
        ("x", |x| x, 0.0, 1.0, 0.5),
        ("x^7", |x| x.powi(7), 0.0, 2.0, 32.0),
        ("exp", f64::exp, 0.0, 1.0, E - 1.0),
        ("sin", f64::sin, 0.0, PI, 2.0),
        ("cos^2", |x| x.cos().powi(2), 0.0, PI, FRAC_PI_2),
        ("1/(1+x^2)", |x| 1.0 / (1.0 + x * x), 0.0, 1.0, FRAC_PI_4),
        ("1/x", |x| 1.0 / x, 1.0, E, 1.0),
        ("ln", f64::ln, 1.0, 2.0, 2.0 * LN_2 - 1.0),
        ("sqrt", f64::sqrt, 0.0, 1.0, 2.0 / 3.0),
        ("x^-1/2", |x| 1.0 / x.sqrt(), 1e-300, 1.0, 2.0),
        ("|x-1/3|", |x| (x - 1.0 / 3.0).abs(), 0.0, 1.0, 5.0 / 18.0),
        (
            "z exp(-z^2)",
            |z| z * (-z * z).exp(),
            0.0,
            10.0,
            0.5 * (1.0 - (-100f64).exp()),
        ),
        // √π·erf(5)
        (
            "gaussian",
            |x| (-x * x).exp(),
            -5.0,
            5.0,
            1.772_453_850_902_791,
        ),
        (
            "sharp peak",
            |x| 1e-2 / (1e-4 + (x - 0.3) * (x - 0.3)),
            0.0,
            1.0,
            70f64.atan() + 30f64.atan(),
        ),
        (
            "oscillatory",
            |x| (50.0 * x).sin(),
            0.0,
            1.0,
            (1.0 - 50f64.cos()) / 50.0,
        ),
        ("x sin x", |x| x * x.sin(), 0.0, PI, PI),
    ]
}

// (name, f, a, decay exponent, exact)
const SEMI: &[(&str, Integrand, f64, f64, f64)] = &[
    ("z^-2", |z| z.powi(-2), 1.0, 2.0, 1.0),
    ("z^-3", |z| z.powi(-3), 2.0, 3.0, 0.125),
    ("z/(z^4+1)", |z| z / (z.powi(4) + 1.0), 0.0, 3.0, FRAC_PI_4),
    ("1/(1+z^2)", |z| 1.0 / (1.0 + z * z), 0.0, 2.0, FRAC_PI_2),
    ("exp(-z)", |z| (-z).exp(), 0.0, 8.0, 1.0),
    ("z^-1.5", |z| z.powf(-1.5), 1.0, 1.5, 2.0),
    ("z exp(-z^2)", |z| z * (-z * z).exp(), 0.0, 8.0, 0.5),
    ("(1+z)^-2.5", |z| (1.0 + z).powf(-2.5), 0.0, 2.5, 1.0 / 1.5),
];

fn check(name: &str, value: f64, error_estimate: f64, exact: f64, tol: Tolerance) {
    let err = (value - exact).abs();
    let slack = 8.0 * f64::EPSILON * exact.abs().max(1e-300);
    assert!(
        err <= error_estimate + slack,
        "{name}: true error {err:e} exceeds estimate {error_estimate:e}"
    );
    assert!(
        err <= tol.abs.max(tol.rel * exact.abs()) * 10.0,
        "{name}: true error {err:e} beyond requested tolerance"
    );
}

#[test]
fn finite_estimates_never_undershoot() {
    let tol = Tolerance::new(1e-10, 1e-13);
    for (name, f, a, b, exact) in finite_cases() {
        let r = integrate_finite(f, a, b, tol);
        assert!(r.converged, "{name}");
        check(name, r.value, r.error_estimate, exact, tol);
    }
}

#[test]
fn semi_infinite_estimates_never_undershoot() {
    let tol = Tolerance::new(1e-8, 1e-12);
    for &(name, f, a, p, exact) in SEMI {
        for hint in [None, Some(p)] {
            let r = integrate_semi_infinite(f, a, tol, hint);
            check(name, r.value, r.error_estimate, exact, tol);
        }
    }
}

#[test]
fn battery_is_large_enough() {
    assert!(finite_cases().len() + SEMI.len() >= 20);
}

#[test]
fn power_law_tail_from_interference_shape() {
    // ∫₀^∞ (1 − 1/(1 + z⁻⁴)) z dz = ∫₀^∞ z/(z⁴ + 1) dz = π/4
    let r = integrate_semi_infinite(
        |z| (1.0 - 1.0 / (1.0 + z.powi(-4))) * z,
        0.0,
        Tolerance::new(1e-9, 1e-13),
        Some(3.0),
    );
    assert!((r.value - FRAC_PI_4).abs() < 1e-8, "{}", r.value);
}
