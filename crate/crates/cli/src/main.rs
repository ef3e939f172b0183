use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use robinlab::geometry::{geometric_measures, make_domain, DomainSpec};
use robinlab::lab::{compare_records, write_outputs, Context, ExperimentConfig, RunOutput};
use robinlab::mesh::triangulate;

#[derive(Parser)]
#[command(name = "lab", version, about = "Robin-problem finite-element laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config sequentially.
    Run {
        config: PathBuf,
        /// Output directory; overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment config with cells spread over a worker pool.
    Sweep {
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mesh a domain and print its statistics.
    Mesh {
        /// `disk[:r]`, `ellipse[:a,b]`, `corrugated[:L,delta,k,N]` or a config file.
        domain: String,
        #[arg(long, default_value_t = 0.05)]
        h: f64,
        /// Write the mesh in the text dump format.
        #[arg(long)]
        dump_mesh: Option<PathBuf>,
    },
    /// Compare two run records, numbers within a relative tolerance.
    Compare {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        rtol: f64,
        #[arg(long, default_value_t = 0.0)]
        atol: f64,
    },
}

/// Exit status for infrastructure failures.
const INFRA: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(INFRA)
        }
    }
}

fn execute(cmd: Command) -> Result<u8, String> {
    match cmd {
        Command::Run { config, out } => experiment(&config, out, None),
        Command::Sweep { config, jobs, out } => experiment(&config, out, Some(jobs.max(1))),
        Command::Mesh { domain, h, dump_mesh } => mesh(&domain, h, dump_mesh.as_deref()),
        Command::Compare {
            left,
            right,
            rtol,
            atol,
        } => compare(&left, &right, rtol, atol),
    }
}

fn experiment(path: &Path, out: Option<PathBuf>, jobs: Option<usize>) -> Result<u8, String> {
    let config = ExperimentConfig::from_file(path).map_err(|e| e.to_string())?;
    let dir = out
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&config.name));
    let ctx = Context::new(config).map_err(|e| e.to_string())?;
    let cells = ctx.cells();
    let outcomes = match jobs {
        None => cells.iter().map(|c| ctx.run_cell(c)).collect(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| e.to_string())?;
            // par_iter().collect() keeps config order.
            pool.install(|| cells.par_iter().map(|c| ctx.run_cell(c)).collect())
        }
    };
    let output = ctx.finish(outcomes);
    write_outputs(&ctx, &output, &dir).map_err(|e| e.to_string())?;
    report(&output, &dir);
    Ok(output.record.status.exit_code() as u8)
}

fn report(out: &RunOutput, dir: &Path) {
    let rec = &out.record;
    println!("{} ({} nodes, {} cells)", rec.name, rec.mesh.nodes, rec.cells.len());
    for (cell, secs) in rec.cells.iter().zip(&out.seconds) {
        let label = match cell.boundary.beta() {
            Some(b) => format!("beta={b}"),
            None => "dirichlet".to_string(),
        };
        let lambda = cell.lambda.map(|l| format!(" lambda={l:.6}")).unwrap_or_default();
        match &cell.error {
            Some(e) => println!("  {label}{lambda}: ERROR {e}"),
            None => {
                let sup = cell.sup_norm.unwrap_or(f64::NAN);
                println!("  {label}{lambda}: sup={sup:.6} ({secs:.2}s)");
                for c in &cell.checks {
                    let mark = if c.passed { "pass" } else { "FAIL" };
                    println!("    {mark} {}: {}", c.check.name(), c.detail);
                }
            }
        }
    }
    for c in &rec.checks {
        let mark = if c.passed { "pass" } else { "FAIL" };
        println!("  {mark} {}: {}", c.check.name(), c.detail);
    }
    println!("status: {:?}; record written to {}", rec.status, dir.join("record.json").display());
}

fn parse_domain(arg: &str) -> Result<DomainSpec, String> {
    let path = Path::new(arg);
    if path.is_file() {
        return ExperimentConfig::from_file(path).map(|c| c.domain).map_err(|e| e.to_string());
    }
    let (family, params) = arg.split_once(':').unwrap_or((arg, ""));
    let nums: Vec<f64> = params
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad number `{s}` in `{arg}`")))
        .collect::<Result<_, _>>()?;
    let spec = match (family, nums.as_slice()) {
        ("disk", []) => DomainSpec::disk(1.0),
        ("disk", [r]) => DomainSpec::disk(*r),
        ("ellipse", []) => DomainSpec::ellipse(2.0, 1.0),
        ("ellipse", [a, b]) => DomainSpec::ellipse(*a, *b),
        ("corrugated", []) => DomainSpec::corrugated_default(),
        ("corrugated", [l, d, k, n]) => DomainSpec::corrugated_strip(*l, *d, *k as usize, *n as usize),
        _ => return Err(format!("cannot parse domain `{arg}`")),
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn mesh(domain: &str, h: f64, dump: Option<&Path>) -> Result<u8, String> {
    let spec = parse_domain(domain)?;
    let curve = make_domain(&spec).map_err(|e| e.to_string())?;
    let mesh = triangulate(&curve, h).map_err(|e| e.to_string())?;
    let g = geometric_measures(&curve);
    println!("domain: {}", serde_json::to_string(&spec).map_err(|e| e.to_string())?);
    println!("h: {h}");
    println!("nodes: {}", mesh.n_nodes());
    println!("triangles: {}", mesh.triangles().len());
    println!("boundary nodes: {}", mesh.n_boundary());
    println!("min angle: {:.2} deg", mesh.min_angle_degrees());
    println!("area: {:.8} (curve {:.8})", mesh.area(), g.area);
    println!("perimeter: {:.8} (curve {:.8})", mesh.boundary_length(), g.perimeter);
    if let Some(path) = dump {
        std::fs::write(path, mesh.to_dump()).map_err(|e| format!("{}: {e}", path.display()))?;
        println!("mesh written to {}", path.display());
    }
    Ok(0)
}

fn compare(left: &Path, right: &Path, rtol: f64, atol: f64) -> Result<u8, String> {
    let read = |p: &Path| -> Result<serde_json::Value, String> {
        let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))
    };
    let diffs = compare_records(&read(left)?, &read(right)?, rtol, atol);
    for d in &diffs {
        println!("{d}");
    }
    if diffs.is_empty() {
        println!("records agree (rtol {rtol:e}, atol {atol:e})");
        Ok(0)
    } else {
        println!("{} difference(s)", diffs.len());
        Ok(1)
    }
}
