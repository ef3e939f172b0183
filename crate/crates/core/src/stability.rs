//! Linearized stability and the boundary-integral instability test.

use serde::Serialize;

use crate::assembly::{weighted_mass, Field, FieldError};
use crate::geometry::{convexity_report, BoundaryCurve};
use crate::linalg::EigenOptions;
use crate::mesh::Mesh;
use crate::solvers::{Boundary, Discretization, Reaction, SolveError, STABILITY_RTOL};

/// Smallest eigenvalue `mu1` of `(A - W(f'(u))) phi = mu M phi` and its
/// `M`-normalized eigenvector, where `A` is the system operator of `disc`.
pub fn linearized_mu1(
    disc: &Discretization,
    u: &Field,
    reaction: &Reaction,
    opts: &EigenOptions,
) -> Result<(f64, Field), SolveError> {
    let mesh = disc.mesh();
    if !u.belongs_to(mesh) {
        return Err(FieldError::MeshMismatch.into());
    }
    let w = u.map(|t| reaction.df(t));
    if let Some(i) = w.values().iter().position(|x| !x.is_finite()) {
        return Err(FieldError::NonFinite(i).into());
    }
    let wmax = w.max().max(0.0);
    let wm = (wmax > 0.0 || w.min() < 0.0).then(|| weighted_mass(mesh, &w));
    // A is positive definite and W <= wmax M, so this sits below the spectrum.
    let (mu, v, _) = disc.smallest_eigenpair(wm.as_ref(), -wmax - 1.0, opts)?;
    Ok((mu, Field::new(mesh, v)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BmmpReport {
    /// Edge-midpoint quadrature of `beta^2 u^2 (beta - kappa + f(u)/(beta u))`.
    pub integral: f64,
    pub min_kappa: f64,
    /// `beta + min kappa >= 0`.
    pub condition2: bool,
    pub unstable_flag: bool,
}

/// Evaluates the boundary-integral instability criterion. The flag is
/// raised only when the integral is negative and `beta + min kappa >= 0`.
pub fn bmmp_check(
    mesh: &Mesh,
    curve: &BoundaryCurve,
    beta: f64,
    u: &Field,
    reaction: &Reaction,
) -> Result<BmmpReport, SolveError> {
    if !u.belongs_to(mesh) {
        return Err(FieldError::MeshMismatch.into());
    }
    if !(beta > 0.0) {
        return Err(SolveError::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    let vals = u.values();
    let mut integral = 0.0;
    let mut min_kappa = convexity_report(curve, (4 * mesh.n_boundary()).max(4096)).min_kappa;
    for (e, edge) in mesh.boundary_edges().iter().enumerate() {
        let um = 0.5 * (vals[edge.nodes[0]] + vals[edge.nodes[1]]);
        if !(um > 0.0) {
            return Err(SolveError::NonPositiveBoundary { edge: e, value: um });
        }
        let kappa = curve.curvature(edge.midpoint_param());
        min_kappa = min_kappa.min(kappa);
        let integrand = beta * beta * um * um * (beta - kappa + reaction.f(um) / (beta * um));
        integral += edge.length * integrand;
    }
    let condition2 = beta + min_kappa >= 0.0;
    Ok(BmmpReport {
        integral,
        min_kappa,
        condition2,
        unstable_flag: integral < 0.0 && condition2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub mu1: f64,
    /// Spectral scale for the stability tolerance (the principal eigenvalue).
    pub scale: f64,
    pub stable: bool,
    /// `|Q(phi) - mu1 phi^T M phi|` for the returned eigenvector.
    pub rayleigh_gap: f64,
    #[serde(skip)]
    pub eigfield: Field,
    /// Present for Robin problems only.
    pub bmmp: Option<BmmpReport>,
}

/// Full stability assessment of a converged solution. `scale` is normally
/// the principal eigenvalue of the same operator.
pub fn assess(
    disc: &Discretization,
    curve: &BoundaryCurve,
    u: &Field,
    reaction: &Reaction,
    scale: f64,
    opts: &EigenOptions,
) -> Result<StabilityReport, SolveError> {
    let (mu1, eigfield) = linearized_mu1(disc, u, reaction, opts)?;
    let mesh = disc.mesh();
    let w = weighted_mass(mesh, &u.map(|t| reaction.df(t)));
    let a = disc.operator().combine(1.0, &disc.reduce_matrix(&w), -1.0);
    let phi = disc.restrict(eigfield.values());
    let m = disc.reduce_matrix(disc.mass());
    let rayleigh_gap = (a.bilinear(&phi, &phi) - mu1 * m.bilinear(&phi, &phi)).abs();
    let bmmp = match disc.boundary() {
        Boundary::Robin(beta) => Some(bmmp_check(mesh, curve, beta, u, reaction)?),
        Boundary::Dirichlet => None,
    };
    Ok(StabilityReport {
        mu1,
        scale,
        stable: mu1 >= -STABILITY_RTOL * scale,
        rayleigh_gap,
        eigfield,
        bmmp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::Nonlinearity;
    use crate::geometry::{make_domain, DomainSpec};
    use crate::mesh::triangulate;
    use crate::solvers::{robin_eigenpair, solve_torsion, SolverOptions};
    use std::f64::consts::PI;

    #[test]
    fn torsion_reduces_to_robin_eigenvalue() {
        let curve = make_domain(&DomainSpec::disk(1.0)).unwrap();
        let mesh = triangulate(&curve, 0.1).unwrap();
        let opts = SolverOptions::default();
        let lam = robin_eigenpair(&mesh, 1.0, &opts).unwrap().lambda;
        let u = solve_torsion(&mesh, 1.0, &opts).unwrap();
        let disc = Discretization::new(&mesh, Boundary::Robin(1.0)).unwrap();
        let r = assess(&disc, &curve, &u, &Reaction::TORSION, lam, &opts.eigen).unwrap();
        assert!((r.mu1 - lam).abs() <= 1e-8 * lam, "{} vs {lam}", r.mu1);
        assert!(r.stable);
        assert!(r.rayleigh_gap < 1e-8);
    }

    #[test]
    fn eigenfunction_is_in_the_kernel() {
        let mesh = triangulate(&make_domain(&DomainSpec::disk(1.0)).unwrap(), 0.1).unwrap();
        let opts = SolverOptions::default();
        let e = robin_eigenpair(&mesh, 2.0, &opts).unwrap();
        let disc = Discretization::new(&mesh, Boundary::Robin(2.0)).unwrap();
        let (mu, _) = linearized_mu1(&disc, &e.field, &Reaction::Linear { lambda: e.lambda }, &opts.eigen).unwrap();
        assert!(mu.abs() <= 1e-6 * e.lambda, "{mu}");
    }

    #[test]
    fn bmmp_disk_torsion_integral() {
        let curve = make_domain(&DomainSpec::disk(1.0)).unwrap();
        let mesh = triangulate(&curve, 0.05).unwrap();
        for beta in [1.0, 5.0] {
            let u = solve_torsion(&mesh, beta, &SolverOptions::default()).unwrap();
            let r = bmmp_check(&mesh, &curve, beta, &u, &Reaction::TORSION).unwrap();
            let exact = PI * (beta + 1.0) / 2.0;
            assert!((r.integral - exact).abs() / exact < 1e-2, "{} vs {exact}", r.integral);
            assert!(r.condition2 && !r.unstable_flag);
        }
    }

    #[test]
    fn bmmp_rejects_nonpositive_boundary() {
        let curve = make_domain(&DomainSpec::disk(1.0)).unwrap();
        let mesh = triangulate(&curve, 0.2).unwrap();
        let u = Field::constant(&mesh, 0.0);
        let g = Reaction::Scaled {
            lambda: 1.0,
            g: Nonlinearity::GelfandExp,
        };
        assert!(matches!(
            bmmp_check(&mesh, &curve, 1.0, &u, &g),
            Err(SolveError::NonPositiveBoundary { .. })
        ));
    }

    #[test]
    fn condition2_gates_the_flag() {
        let curve = make_domain(&DomainSpec::corrugated_default()).unwrap();
        let mesh = triangulate(&curve, 0.1).unwrap();
        let beta = 0.1;
        let u = solve_torsion(&mesh, beta, &SolverOptions::default()).unwrap();
        let r = bmmp_check(&mesh, &curve, beta, &u, &Reaction::TORSION).unwrap();
        assert!(r.min_kappa < -beta);
        assert!(!r.condition2 && !r.unstable_flag);
    }
}
