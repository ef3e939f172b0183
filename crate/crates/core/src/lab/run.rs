//! Executes an experiment: one cell per (boundary condition, lambda), then
//! run-level checks across cells.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use super::config::{Check, ConfigError, ExperimentConfig, LambdaPolicy, ProblemSpec};
use super::output::emit_contour_data;
use crate::assembly::{Field, Nonlinearity};
use crate::critpoints::{adaptive_census, census, CritCensus, Kind};
use crate::geometry::{make_domain, BoundaryCurve, DomainSpec, GeometryError};
use crate::mesh::{triangulate, Mesh, MeshError};
use crate::solvers::{
    comparison_bound, continue_branch, dirichlet_eigenpair, robin_eigenpair, solve, Boundary, ComparisonReport,
    Discretization, LambdaStar, Problem, SolveError, SolverOptions, StepPolicy, STABILITY_RTOL,
};
use crate::stability::{assess, BmmpReport};

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Nodal slack for the ordering checks.
pub const ORDERING_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: Check,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(check: Check, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            check,
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellSpec {
    pub index: usize,
    pub boundary: Boundary,
    /// Index into the lambda list for nonlinear problems.
    pub slot: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    pub boundary: Boundary,
    pub lambda: Option<f64>,
    pub lambda_star: Option<LambdaStar>,
    pub error: Option<String>,
    pub sup_norm: Option<f64>,
    pub max_location: Option<[f64; 2]>,
    /// Principal eigenvalue of the operator, the spectral scale.
    pub lambda_beta: Option<f64>,
    pub picard_iterations: Option<usize>,
    pub mu1: Option<f64>,
    pub census: Option<CritCensus>,
    pub census_error: Option<String>,
    pub bmmp: Option<BmmpReport>,
    pub comparison: Option<ComparisonReport>,
    pub linf_to_dirichlet: Option<f64>,
    pub checks: Vec<CheckResult>,
}

impl CellRecord {
    fn empty(boundary: Boundary) -> Self {
        Self {
            boundary,
            lambda: None,
            lambda_star: None,
            error: None,
            sup_norm: None,
            max_location: None,
            lambda_beta: None,
            picard_iterations: None,
            mu1: None,
            census: None,
            census_error: None,
            bmmp: None,
            comparison: None,
            linf_to_dirichlet: None,
            checks: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub record: CellRecord,
    pub field: Option<Field>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshSummary {
    pub h: f64,
    pub nodes: usize,
    pub triangles: usize,
    pub boundary_nodes: usize,
    pub min_angle_degrees: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Pass,
    Fail,
    Error,
}

impl RunStatus {
    /// 0 when every check passes, 1 on a check failure, 2 on a solver or
    /// infrastructure error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Pass => 0,
            RunStatus::Fail => 1,
            RunStatus::Error => 2,
        }
    }
}

/// Deterministic result of a run; wall-clock timings are kept apart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub name: String,
    pub config_hash: String,
    pub domain: DomainSpec,
    pub problem: ProblemSpec,
    pub mesh: MeshSummary,
    pub cells: Vec<CellRecord>,
    pub checks: Vec<CheckResult>,
    pub status: RunStatus,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckResult> {
        self.cells
            .iter()
            .flat_map(|c| c.checks.iter())
            .chain(&self.checks)
            .filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub record: RunRecord,
    pub fields: Vec<Option<Field>>,
    pub seconds: Vec<f64>,
}

pub struct Context {
    pub config: ExperimentConfig,
    pub curve: BoundaryCurve,
    pub mesh: Mesh,
    opts: SolverOptions,
}

impl Context {
    pub fn new(config: ExperimentConfig) -> Result<Self, LabError> {
        let curve = make_domain(&config.domain)?;
        let mesh = triangulate(&curve, config.h)?;
        let opts = config.tolerances.solver_options();
        Ok(Self {
            config,
            curve,
            mesh,
            opts,
        })
    }

    /// Cells in config order: Robin cells by beta then lambda, Dirichlet last.
    pub fn cells(&self) -> Vec<CellSpec> {
        let slots: Vec<Option<usize>> = match &self.config.problem {
            ProblemSpec::Gelfand { lambda, .. } => (0..lambda.values().len()).map(Some).collect(),
            _ => vec![None],
        };
        let mut boundaries: Vec<Boundary> = self.config.betas.iter().map(|&b| Boundary::Robin(b)).collect();
        if self.config.dirichlet {
            boundaries.push(Boundary::Dirichlet);
        }
        boundaries
            .into_iter()
            .flat_map(|b| slots.iter().map(move |&s| (b, s)))
            .enumerate()
            .map(|(index, (boundary, slot))| CellSpec { index, boundary, slot })
            .collect()
    }

    fn principal(&self, boundary: Boundary) -> Result<f64, SolveError> {
        Ok(match boundary {
            Boundary::Robin(beta) => robin_eigenpair(&self.mesh, beta, &self.opts)?.lambda,
            Boundary::Dirichlet => dirichlet_eigenpair(&self.mesh, &self.opts)?.lambda,
        })
    }

    pub fn run_cell(&self, cell: &CellSpec) -> CellOutcome {
        let start = Instant::now();
        let mut record = CellRecord::empty(cell.boundary);
        let field = match self.fill_cell(cell, &mut record) {
            Ok(f) => Some(f),
            Err(e) => {
                record.error = Some(e.to_string());
                None
            }
        };
        CellOutcome {
            record,
            field,
            seconds: start.elapsed().as_secs_f64(),
        }
    }

    fn fill_cell(&self, cell: &CellSpec, rec: &mut CellRecord) -> Result<Field, SolveError> {
        let cfg = &self.config;
        let mesh = &self.mesh;
        let boundary = cell.boundary;
        let scale = self.principal(boundary)?;
        rec.lambda_beta = Some(scale);
        let problem = match &cfg.problem {
            ProblemSpec::Torsion => Problem::Torsion,
            ProblemSpec::Eigen => Problem::Eigen,
            ProblemSpec::Gelfand { g, lambda } => {
                let slot = cell.slot.expect("nonlinear cells carry a slot");
                let value = match lambda {
                    LambdaPolicy::Fixed(v) => v[slot],
                    LambdaPolicy::FractionOfStar(v) => {
                        let policy = StepPolicy {
                            rel_width: cfg.tolerances.branch_rel_width,
                            stability: false,
                            ..StepPolicy::default()
                        };
                        let branch = continue_branch(mesh, boundary, *g, &policy, &self.opts)?;
                        let star = branch.lambda_star.ok_or_else(|| {
                            SolveError::InvalidInput(format!("no extremal parameter below {}", policy.max_lambda))
                        })?;
                        rec.lambda_star = Some(star);
                        v[slot] * star.lo
                    }
                };
                rec.lambda = Some(value);
                Problem::Gelfand { lambda: value, g: *g }
            }
        };
        let sol = solve(mesh, boundary, &problem, &self.opts)?;
        let u = sol.field;
        rec.picard_iterations = sol.picard_iterations;
        rec.sup_norm = Some(u.max());
        let p = mesh.node(u.argmax());
        rec.max_location = Some([p.x, p.y]);

        if cfg.wants(Check::Stability) || cfg.wants(Check::Bmmp) {
            let disc = Discretization::new(mesh, boundary)?;
            let report = assess(&disc, &self.curve, &u, &sol.reaction, scale, &self.opts.eigen)?;
            rec.mu1 = Some(report.mu1);
            rec.bmmp = report.bmmp;
            if cfg.wants(Check::Stability) {
                rec.checks.push(CheckResult::new(
                    Check::Stability,
                    report.stable,
                    format!("mu1 = {:.6e}, threshold {:.3e}", report.mu1, -STABILITY_RTOL * scale),
                ));
            }
            if let (true, Some(b)) = (cfg.wants(Check::Bmmp), report.bmmp) {
                // A raised flag must come with a negative mu1.
                let consistent = !b.unstable_flag || report.mu1 < 0.0;
                rec.checks.push(CheckResult::new(
                    Check::Bmmp,
                    consistent,
                    format!(
                        "integral = {:.6e}, beta + min kappa >= 0: {}, flag: {}",
                        b.integral, b.condition2, b.unstable_flag
                    ),
                ));
            }
        }

        if cfg.wants(Check::Census) || cfg.wants(Check::Winding) || cfg.wants(Check::Hopf) {
            let beta = boundary.beta();
            let result = if cfg.adaptive {
                adaptive_census(mesh, &self.curve, &u, beta, |m| Ok(solve(m, boundary, &problem, &self.opts)?.field))
                    .map(|(c, _, _)| c)
            } else {
                census(mesh, &u, beta)
            };
            match result {
                Ok(c) => {
                    self.census_checks(&c, rec);
                    rec.census = Some(c);
                }
                Err(e) => {
                    let msg = e.to_string();
                    for check in [Check::Census, Check::Winding, Check::Hopf] {
                        if cfg.wants(check) {
                            rec.checks.push(CheckResult::new(check, false, msg.clone()));
                        }
                    }
                    rec.census_error = Some(msg);
                }
            }
        }

        if let (true, Boundary::Robin(beta)) = (cfg.wants(Check::Comparison), boundary) {
            let gl = match problem {
                Problem::Torsion => Some((Nonlinearity::Torsion, 1.0)),
                Problem::Gelfand { lambda, g } => Some((g, lambda)),
                Problem::Eigen => None,
            };
            if let Some((g, lambda)) = gl {
                let c = comparison_bound(mesh, beta, g, lambda, &u, &self.opts)?;
                rec.checks.push(CheckResult::new(
                    Check::Comparison,
                    c.holds,
                    format!("M = {:.6e}, max(u - v) = {:.3e}", c.bound, c.max_excess),
                ));
                rec.comparison = Some(c);
            }
        }
        Ok(u)
    }

    fn census_checks(&self, c: &CritCensus, rec: &mut CellRecord) {
        let cfg = &self.config;
        if cfg.wants(Check::Census) {
            let mut problems = Vec::new();
            if c.degenerate {
                problems.push("degenerate point".to_string());
            }
            if c.count(Kind::Min) > 0 {
                problems.push("interior minimum".to_string());
            }
            if c.index_sum != 1 {
                problems.push(format!("index sum {}", c.index_sum));
            }
            if let Some(spec) = cfg.max_count.filter(|s| !s.accepts(c.count(Kind::Max))) {
                problems.push(format!("{} maxima, expected {spec}", c.count(Kind::Max)));
            }
            if let Some(spec) = cfg.saddle_count.filter(|s| !s.accepts(c.count(Kind::Saddle))) {
                problems.push(format!("{} saddles, expected {spec}", c.count(Kind::Saddle)));
            }
            let summary = format!(
                "{} max, {} saddle, {} min, {} degenerate, index sum {}",
                c.count(Kind::Max),
                c.count(Kind::Saddle),
                c.count(Kind::Min),
                c.count(Kind::Degenerate),
                c.index_sum
            );
            let detail = if problems.is_empty() {
                summary
            } else {
                format!("{summary}: {}", problems.join(", "))
            };
            rec.checks.push(CheckResult::new(Check::Census, problems.is_empty(), detail));
        }
        if cfg.wants(Check::Winding) {
            rec.checks.push(CheckResult::new(
                Check::Winding,
                c.boundary_winding == 1 && c.index_sum == c.boundary_winding,
                format!("winding {}, index sum {}", c.boundary_winding, c.index_sum),
            ));
        }
        if cfg.wants(Check::Hopf) {
            rec.checks.push(CheckResult::new(Check::Hopf, c.hopf_ok, "u > 0 and normal derivative < 0"));
        }
    }

    /// Run-level checks and the final record.
    pub fn finish(&self, outcomes: Vec<CellOutcome>) -> RunOutput {
        let cells = self.cells();
        let mut records: Vec<CellRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
        let fields: Vec<Option<Field>> = outcomes.iter().map(|o| o.field.clone()).collect();

        // Distance to the Dirichlet solution with the same lambda slot.
        let fixed_lambda = !matches!(
            self.config.problem,
            ProblemSpec::Gelfand {
                lambda: LambdaPolicy::FractionOfStar(_),
                ..
            }
        );
        for (i, cell) in cells.iter().enumerate() {
            let dir = cells
                .iter()
                .position(|c| c.boundary == Boundary::Dirichlet && c.slot == cell.slot);
            if let (Some(d), Boundary::Robin(_), true) = (dir, cell.boundary, fixed_lambda) {
                if let (Some(u), Some(v)) = (&fields[i], &fields[d]) {
                    let linf = u.values().iter().zip(v.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    records[i].linf_to_dirichlet = Some(linf);
                }
            }
        }

        let mut checks = Vec::new();
        if self.config.wants(Check::Monotonicity) {
            checks.extend(self.monotonicity(&cells, &records, &fields));
        }
        let any_error = records.iter().any(|r| r.error.is_some());
        let any_fail = records.iter().flat_map(|r| &r.checks).chain(&checks).any(|c| !c.passed);
        let status = if any_error {
            RunStatus::Error
        } else if any_fail {
            RunStatus::Fail
        } else {
            RunStatus::Pass
        };
        let mesh = &self.mesh;
        RunOutput {
            record: RunRecord {
                name: self.config.name.clone(),
                config_hash: self.config.hash(),
                domain: self.config.domain,
                problem: self.config.problem.clone(),
                mesh: MeshSummary {
                    h: mesh.h(),
                    nodes: mesh.n_nodes(),
                    triangles: mesh.triangles().len(),
                    boundary_nodes: mesh.n_boundary(),
                    min_angle_degrees: mesh.min_angle_degrees(),
                },
                cells: records,
                checks,
                status,
            },
            fields,
            seconds: outcomes.iter().map(|o| o.seconds).collect(),
        }
    }

    fn monotonicity(&self, cells: &[CellSpec], records: &[CellRecord], fields: &[Option<Field>]) -> Vec<CheckResult> {
        let mut out = Vec::new();
        let slots: Vec<Option<usize>> = {
            let mut s: Vec<_> = cells.iter().map(|c| c.slot).collect();
            s.dedup();
            s.sort();
            s.dedup();
            s
        };
        for slot in slots {
            // Robin cells in increasing beta, then the Dirichlet cell.
            let idx: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].slot == slot).collect();
            if idx.iter().any(|&i| records[i].error.is_some()) {
                out.push(CheckResult::new(Check::Monotonicity, false, "a cell of this slot failed to solve"));
                continue;
            }
            let tag = slot.map(|s| format!("slot {s}: ")).unwrap_or_default();
            match &self.config.problem {
                ProblemSpec::Eigen => {
                    let lams: Vec<f64> = idx.iter().map(|&i| records[i].lambda_beta.unwrap_or(f64::NAN)).collect();
                    let ok = lams.windows(2).all(|w| w[0] < w[1]);
                    out.push(CheckResult::new(
                        Check::Monotonicity,
                        ok,
                        format!("{tag}principal eigenvalues increase in beta towards the Dirichlet value: {lams:?}"),
                    ));
                }
                ProblemSpec::Gelfand {
                    lambda: LambdaPolicy::FractionOfStar(_),
                    ..
                } => {
                    let stars: Vec<LambdaStar> = idx.iter().filter_map(|&i| records[i].lambda_star).collect();
                    // Larger beta gives larger solutions at fixed lambda, hence an earlier fold.
                    let ok = stars.len() == idx.len() && stars.windows(2).all(|w| w[0].lo <= w[1].hi);
                    let mids: Vec<f64> = stars.iter().map(|s| s.midpoint()).collect();
                    out.push(CheckResult::new(
                        Check::Monotonicity,
                        ok,
                        format!("{tag}extremal parameters non-decreasing in beta within brackets: {mids:?}"),
                    ));
                }
                _ => {
                    let mut worst: f64 = f64::NEG_INFINITY;
                    for w in idx.windows(2) {
                        let (Some(a), Some(b)) = (&fields[w[0]], &fields[w[1]]) else { continue };
                        // Each later cell (larger beta, then Dirichlet) lies below the earlier one.
                        let excess = b.values().iter().zip(a.values()).map(|(x, y)| x - y).fold(f64::NEG_INFINITY, f64::max);
                        worst = worst.max(excess);
                    }
                    out.push(CheckResult::new(
                        Check::Monotonicity,
                        worst <= ORDERING_SLACK,
                        format!("{tag}largest nodal increase with beta: {worst:.3e}"),
                    ));
                }
            }
        }
        out
    }
}

/// Runs every cell sequentially.
pub fn run(config: ExperimentConfig) -> Result<RunOutput, LabError> {
    let ctx = Context::new(config)?;
    let outcomes = ctx.cells().iter().map(|c| ctx.run_cell(c)).collect();
    Ok(ctx.finish(outcomes))
}

/// Writes `record.json`, `timings.json` and, if requested, contour files.
pub fn write_outputs(ctx: &Context, out: &RunOutput, dir: &Path) -> Result<(), LabError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("record.json"), out.record.to_json() + "\n")?;
    let timings = serde_json::to_string_pretty(&out.seconds).expect("timings serialize");
    fs::write(dir.join("timings.json"), timings + "\n")?;
    if ctx.config.contours {
        for (i, f) in out.fields.iter().enumerate() {
            if let Some(f) = f {
                emit_contour_data(&ctx.mesh, f, &dir.join(format!("cell{i:02}")))?;
            }
        }
    }
    Ok(())
}
