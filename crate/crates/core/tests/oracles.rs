//! Sanity of the reference oracles against tabulated values and closed forms.

mod common;

use common::*;

#[test]
fn bessel_tabulated_values() {
    assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
    assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-14);
    assert!((bessel_j(0, 5.0) + 0.177_596_771_314_338_3).abs() < 1e-13);
    assert!((j0_first_zero() - 2.404_825_557_695_773).abs() < 1e-12);
}

#[test]
fn robin_eigenvalue_limits() {
    // Dirichlet limit and the small-beta asymptote beta |dOmega| / |Omega| = 2 beta.
    assert!((robin_disk_eigenvalue(1e8) - 2.404_825_557_695_773_f64.powi(2)).abs() < 1e-6);
    let small = robin_disk_eigenvalue(1e-4);
    assert!((small / 1e-4 - 2.0).abs() < 1e-3);
    let l1 = robin_disk_eigenvalue(1.0);
    assert!((l1 - 1.5770).abs() < 1e-3, "{l1}");
}

#[test]
fn shooting_matches_closed_form_profile() {
    // w(s) = -2 ln(1 + s^2 / 8) solves w'' + w'/r = -e^w with w(0) = 0.
    for s in [0.5, 1.0, 2.828, 5.0] {
        let (w, dw) = gelfand_profile(s);
        let exact = -2.0 * (1.0 + s * s / 8.0).ln();
        let dexact = -(s / 2.0) / (1.0 + s * s / 8.0);
        assert!((w - exact).abs() < 1e-9, "{s}: {w} vs {exact}");
        assert!((dw - dexact).abs() < 1e-9);
    }
}

#[test]
fn extremal_parameters() {
    assert!((gelfand_lambda_star(f64::INFINITY) - 2.0).abs() < 1e-8);
    let l1 = gelfand_lambda_star(1.0);
    let l10 = gelfand_lambda_star(10.0);
    assert!((l1 - 0.5747).abs() < 2e-3, "{l1}");
    assert!((l10 - 1.6549).abs() < 2e-3, "{l10}");
    assert!(l1 < l10 && l10 < 2.0);
    // Minimal solution at lambda -> 0 is small and positive.
    let c = gelfand_minimal_center(0.2, 1.0);
    assert!(c > 0.0 && c < 1.0, "{c}");
}

#[test]
fn agm_perimeter() {
    assert!((ellipse_perimeter(1.0, 1.0) - 2.0 * std::f64::consts::PI).abs() < 1e-13);
    let direct: f64 = {
        let n = 200_000;
        (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
                (4.0 * t.sin().powi(2) + t.cos().powi(2)).sqrt()
            })
            .sum::<f64>()
            * 2.0
            * std::f64::consts::PI
            / n as f64
    };
    assert!((ellipse_perimeter(2.0, 1.0) - direct).abs() < 1e-9, "{} vs {direct}", ellipse_perimeter(2.0, 1.0));
    assert!((ellipse_perimeter(2.0, 1.0) - 9.688_448_220_547_675).abs() < 1e-12);
}
