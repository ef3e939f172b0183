//! Torsion, principal eigenpair and minimal-branch solvers for
//! `-Lap u = f(u)` with Robin (`d_nu u + beta u = 0`) or Dirichlet data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{interior_mass, load_values, robin_operator, stiffness, Field, FieldError, Nonlinearity};
use crate::linalg::{cg_solve_from, norm_inf, smallest_eigpair, CgOptions, CsrMatrix, EigenOptions, LinalgError};
use crate::mesh::Mesh;
use crate::stability::linearized_mu1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("Picard iteration diverged at lambda = {lambda}: {reason}")]
    Diverged { lambda: f64, reason: DivergenceReason },
    #[error("solution is not positive on the boundary (u = {value:e} at edge {edge})")]
    NonPositiveBoundary { edge: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Robin(f64),
    Dirichlet,
}

impl Boundary {
    pub fn beta(&self) -> Option<f64> {
        match *self {
            Boundary::Robin(b) => Some(b),
            Boundary::Dirichlet => None,
        }
    }

    fn validate(&self) -> Result<(), SolveError> {
        match *self {
            Boundary::Robin(b) if !(b > 0.0 && b.is_finite()) => {
                Err(SolveError::InvalidInput(format!("beta must be positive, got {b}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum Problem {
    /// `-Lap u = 1`.
    Torsion,
    /// Principal eigenpair, normalized to `max u = 1`.
    Eigen,
    /// Minimal solution of `-Lap u = lambda g(u)`.
    Gelfand { lambda: f64, g: Nonlinearity },
}

/// The right-hand side `f(u)` of a solved problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reaction", rename_all = "snake_case")]
pub enum Reaction {
    /// `f = lambda * g(u)`; torsion is `g = 1`, `lambda = 1`.
    Scaled { lambda: f64, g: Nonlinearity },
    /// `f(u) = lambda u`, the eigenvalue problem.
    Linear { lambda: f64 },
}

impl Reaction {
    pub const TORSION: Reaction = Reaction::Scaled {
        lambda: 1.0,
        g: Nonlinearity::Torsion,
    };

    pub fn f(&self, u: f64) -> f64 {
        match *self {
            Reaction::Scaled { lambda, g } => lambda * g.g(u),
            Reaction::Linear { lambda } => lambda * u,
        }
    }

    pub fn df(&self, u: f64) -> f64 {
        match *self {
            Reaction::Scaled { lambda, g } => lambda * g.dg(u),
            Reaction::Linear { lambda } => lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    /// Converged when `||u_{n+1} - u_n||_inf <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Divergence is declared once the max nodal value exceeds this.
    pub cap: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            cap: 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverOptions {
    pub cg: CgOptions,
    pub eigen: EigenOptions,
    pub picard: PicardOptions,
}

/// A system matrix with boundary conditions applied. Dirichlet nodes are
/// eliminated; vectors in and out of this type are always full-length.
pub struct Discretization<'m> {
    mesh: &'m Mesh,
    boundary: Boundary,
    operator: CsrMatrix,
    mass: CsrMatrix,
    free: Option<Vec<usize>>,
}

impl<'m> Discretization<'m> {
    pub fn new(mesh: &'m Mesh, boundary: Boundary) -> Result<Self, SolveError> {
        boundary.validate()?;
        let (operator, free) = match boundary {
            Boundary::Robin(beta) => (robin_operator(mesh, beta), None),
            Boundary::Dirichlet => {
                let free: Vec<usize> = (mesh.n_boundary()..mesh.n_nodes()).collect();
                (stiffness(mesh).principal_submatrix(&free), Some(free))
            }
        };
        Ok(Self {
            mesh,
            boundary,
            operator,
            mass: interior_mass(mesh),
            free,
        })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// The (reduced) system operator.
    pub fn operator(&self) -> &CsrMatrix {
        &self.operator
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn reduce_matrix(&self, full: &CsrMatrix) -> CsrMatrix {
        match &self.free {
            Some(free) => full.principal_submatrix(free),
            None => full.clone(),
        }
    }

    /// Drops eliminated entries from a full-length vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        match &self.free {
            Some(free) => free.iter().map(|&i| full[i]).collect(),
            None => full.to_vec(),
        }
    }

    fn expand(&self, reduced: Vec<f64>) -> Vec<f64> {
        match &self.free {
            Some(free) => {
                let mut out = vec![0.0; self.mesh.n_nodes()];
                for (&i, v) in free.iter().zip(reduced) {
                    out[i] = v;
                }
                out
            }
            None => reduced,
        }
    }

    /// Solves `A u = rhs` for a full-length load vector.
    pub fn solve(&self, rhs: &[f64], guess: Option<&[f64]>, cg: &CgOptions) -> Result<Vec<f64>, SolveError> {
        let b = self.restrict(rhs);
        let x0 = guess.map(|g| self.restrict(g));
        let sol = cg_solve_from(&self.operator, &b, x0.as_deref(), cg)?;
        Ok(self.expand(sol.x))
    }

    /// Smallest eigenpair of `(A - W, M)` where `W` is an already assembled
    /// full-size weighted mass matrix. The vector is returned full-length.
    pub fn smallest_eigenpair(
        &self,
        weighted: Option<&CsrMatrix>,
        shift: f64,
        opts: &EigenOptions,
    ) -> Result<(f64, Vec<f64>, f64), SolveError> {
        let a = match weighted {
            Some(w) => self.operator.combine(1.0, &self.reduce_matrix(w), -1.0),
            None => self.operator.clone(),
        };
        let m = self.reduce_matrix(&self.mass);
        let opts = EigenOptions {
            shift: opts.shift.or(Some(shift)),
            ..*opts
        };
        let pair = smallest_eigpair(&a, &m, &opts)?;
        Ok((pair.value, self.expand(pair.vector), pair.residual))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub field: Field,
    /// Principal eigenvalue for [`Problem::Eigen`].
    pub eigenvalue: Option<f64>,
    pub picard_iterations: Option<usize>,
    pub reaction: Reaction,
}

pub fn solve(mesh: &Mesh, boundary: Boundary, problem: &Problem, opts: &SolverOptions) -> Result<Solution, SolveError> {
    let disc = Discretization::new(mesh, boundary)?;
    match *problem {
        Problem::Torsion => Ok(Solution {
            field: torsion_with(&disc, 1.0, &opts.cg)?,
            eigenvalue: None,
            picard_iterations: None,
            reaction: Reaction::TORSION,
        }),
        Problem::Eigen => {
            let e = eigenpair_with(&disc, &opts.eigen)?;
            Ok(Solution {
                field: e.field,
                eigenvalue: Some(e.lambda),
                picard_iterations: None,
                reaction: Reaction::Linear { lambda: e.lambda },
            })
        }
        Problem::Gelfand { lambda, g } => match picard_with(&disc, lambda, g, None, opts)? {
            PicardOutcome::Converged { field, iterations, .. } => Ok(Solution {
                field,
                eigenvalue: None,
                picard_iterations: Some(iterations),
                reaction: Reaction::Scaled { lambda, g },
            }),
            PicardOutcome::Diverged { reason, .. } => Err(SolveError::Diverged { lambda, reason }),
        },
    }
}

fn torsion_with(disc: &Discretization, scale: f64, cg: &CgOptions) -> Result<Field, SolveError> {
    let rhs = load_values(disc.mesh, &vec![scale; disc.mesh.n_nodes()]);
    let u = disc.solve(&rhs, None, cg)?;
    Ok(Field::new(disc.mesh, u)?)
}

/// Robin torsion function: `(K + beta B) u = load(1)`.
pub fn solve_torsion(mesh: &Mesh, beta: f64, opts: &SolverOptions) -> Result<Field, SolveError> {
    torsion_with(&Discretization::new(mesh, Boundary::Robin(beta))?, 1.0, &opts.cg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub lambda: f64,
    /// Positive eigenfunction with `max = 1`.
    pub field: Field,
    pub residual: f64,
}

fn eigenpair_with(disc: &Discretization, opts: &EigenOptions) -> Result<EigenResult, SolveError> {
    // The operator is positive definite, so any negative shift is safe.
    let (lambda, v, residual) = disc.smallest_eigenpair(None, -1.0, opts)?;
    let peak = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let field = Field::new(disc.mesh, v.iter().map(|x| x / peak).collect())?;
    Ok(EigenResult {
        lambda,
        field,
        residual,
    })
}

/// First Robin eigenpair of `(K + beta B, M)`.
pub fn robin_eigenpair(mesh: &Mesh, beta: f64, opts: &SolverOptions) -> Result<EigenResult, SolveError> {
    eigenpair_with(&Discretization::new(mesh, Boundary::Robin(beta))?, &opts.eigen)
}

/// First Dirichlet eigenpair.
pub fn dirichlet_eigenpair(mesh: &Mesh, opts: &SolverOptions) -> Result<EigenResult, SolveError> {
    eigenpair_with(&Discretization::new(mesh, Boundary::Dirichlet)?, &opts.eigen)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceReason {
    ExceededCap,
    NonFinite,
    MaxIterations,
}

impl std::fmt::Display for DivergenceReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DivergenceReason::ExceededCap => "iterate exceeded the cap",
            DivergenceReason::NonFinite => "non-finite nonlinearity",
            DivergenceReason::MaxIterations => "iteration limit reached",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PicardOutcome {
    Converged {
        field: Field,
        iterations: usize,
        /// Largest nodal decrease seen between successive iterates.
        max_decrease: f64,
    },
    Diverged {
        reason: DivergenceReason,
        iterations: usize,
        last_max: f64,
    },
}

impl PicardOutcome {
    pub fn field(&self) -> Option<&Field> {
        match self {
            PicardOutcome::Converged { field, .. } => Some(field),
            PicardOutcome::Diverged { .. } => None,
        }
    }
}

/// Monotone Picard iteration `A u_{n+1} = load(lambda g(u_n))` from
/// `u_0 = 0`, which converges to the minimal solution when one exists.
pub fn picard_minimal(
    mesh: &Mesh,
    boundary: Boundary,
    lambda: f64,
    g: Nonlinearity,
    opts: &SolverOptions,
) -> Result<PicardOutcome, SolveError> {
    picard_with(&Discretization::new(mesh, boundary)?, lambda, g, None, opts)
}

/// Picard iteration started from `start`, which must be a subsolution below
/// the minimal solution (for example the minimal solution at a smaller lambda).
/// Loads beyond this are treated as blow-up; squares of it stay far from overflow.
const LOAD_LIMIT: f64 = 1e100;

pub fn picard_from(
    disc: &Discretization,
    lambda: f64,
    g: Nonlinearity,
    start: Option<&Field>,
    opts: &SolverOptions,
) -> Result<PicardOutcome, SolveError> {
    picard_with(disc, lambda, g, start, opts)
}

fn picard_with(
    disc: &Discretization,
    lambda: f64,
    g: Nonlinearity,
    start: Option<&Field>,
    opts: &SolverOptions,
) -> Result<PicardOutcome, SolveError> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(SolveError::InvalidInput(format!("lambda must be non-negative, got {lambda}")));
    }
    if !g.is_admissible() {
        return Err(SolveError::InvalidInput(format!("inadmissible nonlinearity {g:?}")));
    }
    let mesh = disc.mesh;
    let popts = &opts.picard;
    let mut u = match start {
        Some(s) if s.belongs_to(mesh) => s.values().to_vec(),
        Some(_) => return Err(FieldError::MeshMismatch.into()),
        None => vec![0.0; mesh.n_nodes()],
    };
    let mut max_decrease: f64 = 0.0;
    for iteration in 1..=popts.max_iter {
        let source: Vec<f64> = u.iter().map(|&t| lambda * g.g(t)).collect();
        let rhs = load_values(mesh, &source);
        // CG forms products of the load with stiffness entries and squared
        // norms, so a finite but enormous load still overflows inside CG.
        if !(norm_inf(&rhs) <= LOAD_LIMIT) {
            return Ok(PicardOutcome::Diverged {
                reason: DivergenceReason::NonFinite,
                iterations: iteration,
                last_max: norm_inf(&u),
            });
        }
        let next = disc.solve(&rhs, Some(&u), &opts.cg)?;
        let peak = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(peak <= popts.cap) {
            return Ok(PicardOutcome::Diverged {
                reason: DivergenceReason::ExceededCap,
                iterations: iteration,
                last_max: peak,
            });
        }
        let mut change: f64 = 0.0;
        for (a, b) in next.iter().zip(&u) {
            change = change.max((a - b).abs());
            max_decrease = max_decrease.max(b - a);
        }
        u = next;
        if change <= popts.tol {
            return Ok(PicardOutcome::Converged {
                field: Field::new(mesh, u)?,
                iterations: iteration,
                max_decrease,
            });
        }
    }
    Ok(PicardOutcome::Diverged {
        reason: DivergenceReason::MaxIterations,
        iterations: popts.max_iter,
        last_max: norm_inf(&u),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub lambda: f64,
    pub field: Field,
    pub picard_iterations: usize,
    /// Smallest eigenvalue of the linearized operator.
    pub mu1: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaStar {
    /// Largest lambda at which Picard converged.
    pub lo: f64,
    /// Smallest lambda at which Picard diverged.
    pub hi: f64,
}

impl LambdaStar {
    pub fn relative_width(&self) -> f64 {
        (self.hi - self.lo) / self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    /// `None` when no divergence was met below `max_lambda`.
    pub lambda_star: Option<LambdaStar>,
    /// Spectral scale used for the stability tolerance.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    /// First step; `None` uses a tenth of the principal eigenvalue.
    pub initial_step: Option<f64>,
    /// Target relative width of the extremal-parameter bracket.
    pub rel_width: f64,
    pub max_lambda: f64,
    pub max_points: usize,
    /// Compute the linearized eigenvalue at every branch point.
    pub stability: bool,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            initial_step: None,
            rel_width: 0.01,
            max_lambda: 1e4,
            max_points: 400,
            stability: true,
        }
    }
}

/// Relative stability tolerance: stable iff `mu1 >= -STABILITY_RTOL * scale`.
pub const STABILITY_RTOL: f64 = 1e-8;

/// Marches lambda up from zero along the minimal branch, halving the step on
/// divergence, until the extremal parameter is bracketed to `rel_width`.
/// Each Picard solve starts from the previous branch point, which is a
/// subsolution below the next minimal solution.
pub fn continue_branch(
    mesh: &Mesh,
    boundary: Boundary,
    g: Nonlinearity,
    policy: &StepPolicy,
    opts: &SolverOptions,
) -> Result<Branch, SolveError> {
    if !g.is_admissible() {
        return Err(SolveError::InvalidInput(format!("inadmissible nonlinearity {g:?}")));
    }
    let disc = Discretization::new(mesh, boundary)?;
    let scale = eigenpair_with(&disc, &opts.eigen)?.lambda;
    let mut step = policy.initial_step.unwrap_or(0.1 * scale);
    if !(step > 0.0) {
        return Err(SolveError::InvalidInput(format!("initial step must be positive, got {step}")));
    }
    let mut points: Vec<BranchPoint> = Vec::new();
    let (mut lo, mut hi): (f64, Option<f64>) = (0.0, None);
    for _ in 0..policy.max_points {
        if let Some(hi) = hi {
            if lo > 0.0 && hi - lo <= policy.rel_width * lo {
                break;
            }
            step = 0.5 * (hi - lo);
        }
        let lambda = lo + step;
        if hi.is_none() && lambda > policy.max_lambda {
            break;
        }
        let start = points.last().map(|p| &p.field);
        match picard_with(&disc, lambda, g, start, opts)? {
            PicardOutcome::Converged { field, iterations, .. } => {
                let mu1 = if policy.stability {
                    linearized_mu1(&disc, &field, &Reaction::Scaled { lambda, g }, &opts.eigen)?.0
                } else {
                    f64::NAN
                };
                points.push(BranchPoint {
                    lambda,
                    field,
                    picard_iterations: iterations,
                    mu1,
                    stable: mu1 >= -STABILITY_RTOL * scale,
                });
                lo = lambda;
            }
            PicardOutcome::Diverged { .. } => hi = Some(lambda),
        }
    }
    Ok(Branch {
        points,
        lambda_star: hi.filter(|_| lo > 0.0).map(|hi| LambdaStar { lo, hi }),
        scale,
    })
}

/// Solves the Dirichlet counterpart with boundary values eliminated.
pub fn solve_dirichlet(mesh: &Mesh, problem: &Problem, opts: &SolverOptions) -> Result<Solution, SolveError> {
    solve(mesh, Boundary::Dirichlet, problem, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub beta: f64,
    pub solution: Solution,
    /// `max_nodes |u_beta - u_D|`.
    pub linf_to_dirichlet: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    pub dirichlet: Solution,
}

pub fn beta_sweep(mesh: &Mesh, problem: &Problem, betas: &[f64], opts: &SolverOptions) -> Result<SweepResult, SolveError> {
    if betas.is_empty() {
        return Err(SolveError::InvalidInput("beta grid is empty".into()));
    }
    if betas.iter().any(|b| !(*b > 0.0)) || betas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SolveError::InvalidInput(format!("beta grid must be positive and increasing: {betas:?}")));
    }
    let dirichlet = solve_dirichlet(mesh, problem, opts)?;
    let entries = betas
        .iter()
        .map(|&beta| {
            let solution = solve(mesh, Boundary::Robin(beta), problem, opts)?;
            let linf_to_dirichlet = solution
                .field
                .values()
                .iter()
                .zip(dirichlet.field.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok(SweepEntry {
                beta,
                solution,
                linf_to_dirichlet,
            })
        })
        .collect::<Result<Vec<_>, SolveError>>()?;
    Ok(SweepResult { entries, dirichlet })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// `M = lambda * max g` over the range of the solution.
    pub bound: f64,
    /// `max (u - v)` over nodes; non-positive when the bound holds exactly.
    pub max_excess: f64,
    pub holds: bool,
}

/// Absolute slack allowed in the nodal comparison `u <= v`.
pub const COMPARISON_SLACK: f64 = 1e-8;

/// Compares a solution of `-Lap u = lambda g(u)` with `M` times the torsion
/// function, `M = lambda * max_{[0, max u]} g`.
pub fn comparison_bound(
    mesh: &Mesh,
    beta: f64,
    g: Nonlinearity,
    lambda: f64,
    u: &Field,
    opts: &SolverOptions,
) -> Result<ComparisonReport, SolveError> {
    if !u.belongs_to(mesh) {
        return Err(FieldError::MeshMismatch.into());
    }
    // g is increasing, so its maximum over [0, max u] sits at the top.
    let bound = lambda * g.g(u.max().max(0.0));
    let disc = Discretization::new(mesh, Boundary::Robin(beta))?;
    let v = torsion_with(&disc, bound, &opts.cg)?;
    let max_excess = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ComparisonReport {
        bound,
        max_excess,
        holds: max_excess <= COMPARISON_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_domain, DomainSpec};
    use crate::mesh::triangulate;

    fn disk_mesh(h: f64) -> Mesh {
        triangulate(&make_domain(&DomainSpec::disk(1.0)).unwrap(), h).unwrap()
    }

    #[test]
    fn torsion_radial_value() {
        let mesh = disk_mesh(0.05);
        for beta in [1.0, 10.0] {
            let u = solve_torsion(&mesh, beta, &SolverOptions::default()).unwrap();
            let exact = 0.25 + 0.5 / beta;
            assert!((u.max() - exact).abs() / exact < 1e-2, "beta {beta}: {}", u.max());
            assert!(u.min() > 0.0);
        }
    }

    #[test]
    fn galerkin_energy_equals_work() {
        let mesh = disk_mesh(0.08);
        let beta = 2.0;
        let u = solve_torsion(&mesh, beta, &SolverOptions::default()).unwrap();
        let energy = robin_operator(&mesh, beta).bilinear(u.values(), u.values());
        let work: f64 = load_values(&mesh, &vec![1.0; mesh.n_nodes()])
            .iter()
            .zip(u.values())
            .map(|(a, b)| a * b)
            .sum();
        assert!((energy - work).abs() <= 1e-9 * work);
    }

    #[test]
    fn torsion_picard_takes_two_iterations() {
        let mesh = disk_mesh(0.1);
        let out = picard_minimal(&mesh, Boundary::Robin(1.0), 3.0, Nonlinearity::Torsion, &SolverOptions::default()).unwrap();
        match out {
            PicardOutcome::Converged { iterations, .. } => assert_eq!(iterations, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gelfand_small_lambda_converges_large_diverges() {
        let mesh = disk_mesh(0.1);
        let opts = SolverOptions::default();
        let small = picard_minimal(&mesh, Boundary::Robin(1.0), 0.2, Nonlinearity::GelfandExp, &opts).unwrap();
        assert!(small.field().is_some_and(|u| u.max().is_finite() && u.min() > 0.0));
        let large = picard_minimal(&mesh, Boundary::Robin(1.0), 10.0, Nonlinearity::GelfandExp, &opts).unwrap();
        assert!(matches!(large, PicardOutcome::Diverged { .. }));
    }

    #[test]
    fn rejects_bad_inputs() {
        let mesh = disk_mesh(0.2);
        let opts = SolverOptions::default();
        assert!(solve_torsion(&mesh, 0.0, &opts).is_err());
        assert!(picard_minimal(&mesh, Boundary::Robin(1.0), -1.0, Nonlinearity::GelfandExp, &opts).is_err());
        assert!(picard_minimal(&mesh, Boundary::Robin(1.0), 1.0, Nonlinearity::Power { p: -1.0 }, &opts).is_err());
        assert!(beta_sweep(&mesh, &Problem::Torsion, &[], &opts).is_err());
        assert!(beta_sweep(&mesh, &Problem::Torsion, &[2.0, 1.0], &opts).is_err());
    }

    #[test]
    fn dirichlet_torsion_and_eigen() {
        let mesh = disk_mesh(0.05);
        let opts = SolverOptions::default();
        let t = solve_dirichlet(&mesh, &Problem::Torsion, &opts).unwrap();
        assert!((t.field.max() - 0.25).abs() / 0.25 < 1e-2);
        assert!(t.field.values()[..mesh.n_boundary()].iter().all(|v| *v == 0.0));
        let e = solve_dirichlet(&mesh, &Problem::Eigen, &opts).unwrap();
        assert!((e.eigenvalue.unwrap() - 5.783_185_962_946_784).abs() / 5.783 < 1e-2);
    }

    #[test]
    fn comparison_with_torsion_is_equality() {
        let mesh = disk_mesh(0.1);
        let opts = SolverOptions::default();
        let u = solve_torsion(&mesh, 1.0, &opts).unwrap();
        let r = comparison_bound(&mesh, 1.0, Nonlinearity::Torsion, 1.0, &u, &opts).unwrap();
        assert!(r.holds && r.max_excess.abs() < 1e-9);
        let zero = Field::constant(&mesh, 0.0);
        let r0 = comparison_bound(&mesh, 1.0, Nonlinearity::GelfandExp, 0.0, &zero, &opts).unwrap();
        assert!(r0.holds);
    }
}
