//! Worked examples per operation, checked against analytic or oracle values.

mod common;

use nalgebra::Vector2;
use robinlab::critpoints::{adaptive_census, census, hopf_sign_check, recover_gradient, Kind};
use robinlab::geometry::{make_domain, DomainSpec};
use robinlab::mesh::{triangulate, Mesh};
use robinlab::solvers::*;
use robinlab::stability::{assess, bmmp_check};
use robinlab::{BoundaryCurve, Field, Nonlinearity};

fn domain(spec: DomainSpec, h: f64) -> (BoundaryCurve, Mesh) {
    let c = make_domain(&spec).unwrap();
    let m = triangulate(&c, h).unwrap();
    (c, m)
}

#[test]
fn robin_eigenvalue_extremes() {
    let (_, mesh) = domain(DomainSpec::disk(1.0), 0.04);
    let opts = SolverOptions::default();
    let big = robin_eigenpair(&mesh, 1e4, &opts).unwrap().lambda;
    let j = common::j0_first_zero().powi(2);
    assert!((big - j).abs() / j < 1e-2, "{big} vs {j}");
    let small = robin_eigenpair(&mesh, 1e-3, &opts).unwrap();
    assert!((small.lambda / 1e-3 - 2.0).abs() / 2.0 < 2e-2);
    assert!(small.field.min() > 0.0 && (small.field.max() - 1.0).abs() < 1e-15);
}

#[test]
fn ellipse_dirichlet_torsion_peak() {
    let (_, mesh) = domain(DomainSpec::ellipse(2.0, 1.0), 0.05);
    let s = solve_dirichlet(&mesh, &Problem::Torsion, &SolverOptions::default()).unwrap();
    assert!((s.field.max() - 0.4).abs() / 0.4 < 1e-2);
    let p = mesh.node(s.field.argmax());
    assert!(p.coords.norm() < 0.1);
}

#[test]
fn beta_sweep_rates_and_eigen_monotonicity() {
    let (_, mesh) = domain(DomainSpec::disk(1.0), 0.04);
    let opts = SolverOptions::default();
    let sweep = beta_sweep(&mesh, &Problem::Torsion, &[10.0, 20.0, 40.0, 80.0], &opts).unwrap();
    let errs: Vec<f64> = sweep.entries.iter().map(|e| e.linf_to_dirichlet).collect();
    for (e, b) in errs.iter().zip([10.0, 20.0, 40.0, 80.0]) {
        assert!((e - 0.5 / b).abs() / (0.5 / b) < 0.1, "{e} at beta {b}");
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..=2.4).contains(&ratio), "{ratio}");
    }
    let eig = beta_sweep(&mesh, &Problem::Eigen, &[0.5, 2.0, 8.0, 32.0], &opts).unwrap();
    let lams: Vec<f64> = eig.entries.iter().map(|e| e.solution.eigenvalue.unwrap()).collect();
    let lam_d = eig.dirichlet.eigenvalue.unwrap();
    assert!(lams.windows(2).all(|w| w[0] < w[1]));
    assert!(lams.iter().all(|l| *l <= lam_d));
}

#[test]
fn picard_matches_radial_shooting() {
    let (_, mesh) = domain(DomainSpec::disk(1.0), 0.04);
    let out = picard_minimal(&mesh, Boundary::Robin(1.0), 0.2, Nonlinearity::GelfandExp, &SolverOptions::default()).unwrap();
    let u = out.field().expect("converges below the extremal parameter");
    let center = common::gelfand_minimal_center(0.2, 1.0);
    assert!((u.max() - center).abs() / center < 5e-3, "{} vs {center}", u.max());
}

#[test]
fn power_branch_is_stable_and_monotone() {
    let (_, mesh) = domain(DomainSpec::disk(1.0), 0.08);
    let opts = SolverOptions::default();
    let branch = continue_branch(&mesh, Boundary::Robin(1.0), Nonlinearity::Power { p: 2.0 }, &StepPolicy::default(), &opts).unwrap();
    let star = branch.lambda_star.expect("superlinear growth has a finite extremal parameter");
    assert!(star.relative_width() <= 0.01);
    assert!(branch.points.iter().all(|p| p.stable));
    for w in branch.points.windows(2) {
        assert!(w[1].lambda > w[0].lambda);
        assert!(w[1].field.values().iter().zip(w[0].field.values()).all(|(a, b)| a >= b));
    }
    // Linear-growth bound: (1 + t)^2 >= 2t gives lambda* <= lambda_beta / 2.
    assert!(star.lo <= 0.5 * branch.scale);
}

#[test]
fn gelfand_comparison_is_strict() {
    let (_, mesh) = domain(DomainSpec::disk(1.0), 0.08);
    let opts = SolverOptions::default();
    let u = solve(&mesh, Boundary::Robin(1.0), &Problem::Gelfand { lambda: 0.3, g: Nonlinearity::GelfandExp }, &opts)
        .unwrap()
        .field;
    let r = comparison_bound(&mesh, 1.0, Nonlinearity::GelfandExp, 0.3, &u, &opts).unwrap();
    assert!(r.holds && r.max_excess < 0.0);
}

#[test]
fn gradient_of_paraboloid_vanishes_at_origin() {
    let (_, mesh) = domain(DomainSpec::disk(1.0), 0.05);
    let u = Field::interpolate(&mesh, |p| p.coords.norm_squared());
    let g = recover_gradient(&mesh, &u).unwrap();
    let i = (0..mesh.n_nodes()).min_by(|&a, &b| mesh.node(a).coords.norm().total_cmp(&mesh.node(b).coords.norm())).unwrap();
    let exact = 2.0 * mesh.node(i).coords;
    assert!((g[i] - exact).norm() <= 2.0 * mesh.h());
    assert!(g[i].norm() <= 2.0 * mesh.h() + exact.norm());
}

#[test]
fn ellipse_census_is_a_single_max() {
    let (curve, mesh) = domain(DomainSpec::ellipse(2.0, 1.0), 0.05);
    let opts = SolverOptions::default();
    for problem in [Problem::Torsion, Problem::Eigen] {
        let u = solve(&mesh, Boundary::Robin(4.0), &problem, &opts).unwrap().field;
        let c = census(&mesh, &u, Some(4.0)).unwrap();
        assert!(c.is_unique_max(), "{problem:?}: {:?}", c.points);
        let p = c.points[0].position;
        assert!(Vector2::new(p[0], p[1]).norm() < 0.1);
        let (fine, _, _) = adaptive_census(&mesh, &curve, &u, Some(4.0), |m| Ok(solve(m, Boundary::Robin(4.0), &problem, &opts)?.field)).unwrap();
        assert_eq!(fine.signature(), c.signature());
        assert_eq!(fine.count(Kind::Max), 1);
    }
}

#[test]
fn eigenfunction_passes_hopf_check() {
    let (_, mesh) = domain(DomainSpec::disk(1.0), 0.08);
    let e = robin_eigenpair(&mesh, 1.0, &SolverOptions::default()).unwrap();
    assert!(hopf_sign_check(&mesh, &e.field, Some(1.0)).unwrap().ok);
}

#[test]
fn ellipse_bmmp_and_rayleigh_certificate() {
    let (curve, mesh) = domain(DomainSpec::ellipse(2.0, 1.0), 0.06);
    let opts = SolverOptions::default();
    let u = solve_torsion(&mesh, 1.0, &opts).unwrap();
    let r = bmmp_check(&mesh, &curve, 1.0, &u, &Reaction::TORSION).unwrap();
    assert!(r.integral > 0.0 && r.condition2 && !r.unstable_flag);

    let lambda = 0.3;
    let reaction = Reaction::Scaled { lambda, g: Nonlinearity::GelfandExp };
    let v = solve(&mesh, Boundary::Robin(1.0), &Problem::Gelfand { lambda, g: Nonlinearity::GelfandExp }, &opts).unwrap().field;
    let disc = Discretization::new(&mesh, Boundary::Robin(1.0)).unwrap();
    let scale = robin_eigenpair(&mesh, 1.0, &opts).unwrap().lambda;
    let report = assess(&disc, &curve, &v, &reaction, scale, &opts.eigen).unwrap();
    assert!(report.stable && report.mu1 > 0.0 && report.mu1 < scale);
    assert!(report.rayleigh_gap <= 10.0 * opts.eigen.tol, "{}", report.rayleigh_gap);
}

#[test]
fn mu1_decreases_towards_the_fold() {
    let (_, mesh) = domain(DomainSpec::disk(1.0), 0.08);
    let branch = continue_branch(&mesh, Boundary::Robin(1.0), Nonlinearity::GelfandExp, &StepPolicy::default(), &SolverOptions::default()).unwrap();
    let mus: Vec<f64> = branch.points.iter().map(|p| p.mu1).collect();
    assert!(mus.windows(2).all(|w| w[1] <= w[0]));
    // Near the fold mu1 is a small fraction of the spectral scale.
    assert!(*mus.last().unwrap() < 0.2 * branch.scale);
}
