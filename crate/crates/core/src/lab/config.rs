//! Experiment configuration: flat `key = value` lines under `[section]`
//! headers, `#` comments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::assembly::Nonlinearity;
use crate::geometry::{DomainFamily, DomainSpec};
use crate::linalg::{CgOptions, EigenOptions};
use crate::solvers::{PicardOptions, SolverOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{key}` in [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("missing key `{key}` in [{section}]")]
    Missing { section: String, key: String },
    #[error("invalid value for `{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error("cannot read config: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Census,
    Stability,
    Winding,
    Hopf,
    Monotonicity,
    Comparison,
    Bmmp,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::Census,
        Check::Stability,
        Check::Winding,
        Check::Hopf,
        Check::Monotonicity,
        Check::Comparison,
        Check::Bmmp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Check::Census => "census",
            Check::Stability => "stability",
            Check::Winding => "winding",
            Check::Hopf => "hopf",
            Check::Monotonicity => "monotonicity",
            Check::Comparison => "comparison",
            Check::Bmmp => "bmmp",
        }
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown check `{s}`"))
    }
}

/// Expected number of critical points of one kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CountSpec {
    Exactly(usize),
    AtLeast(usize),
}

impl CountSpec {
    pub fn accepts(&self, n: usize) -> bool {
        match *self {
            CountSpec::Exactly(k) => n == k,
            CountSpec::AtLeast(k) => n >= k,
        }
    }
}

impl FromStr for CountSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (at_least, num) = match s.strip_prefix(">=") {
            Some(rest) => (true, rest.trim()),
            None => (false, s),
        };
        let n: usize = num.parse().map_err(|_| format!("expected a count like `1` or `>=3`, got `{s}`"))?;
        Ok(if at_least { CountSpec::AtLeast(n) } else { CountSpec::Exactly(n) })
    }
}

impl fmt::Display for CountSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountSpec::Exactly(n) => write!(f, "{n}"),
            CountSpec::AtLeast(n) => write!(f, ">={n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "policy", content = "values", rename_all = "snake_case")]
pub enum LambdaPolicy {
    Fixed(Vec<f64>),
    /// Fractions of the extremal parameter estimated by continuation.
    FractionOfStar(Vec<f64>),
}

impl LambdaPolicy {
    pub fn values(&self) -> &[f64] {
        match self {
            LambdaPolicy::Fixed(v) | LambdaPolicy::FractionOfStar(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    Torsion,
    Eigen,
    Gelfand { g: Nonlinearity, lambda: LambdaPolicy },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub cg_tol: f64,
    pub eig_tol: f64,
    pub picard_tol: f64,
    pub picard_cap: f64,
    pub picard_max_iter: usize,
    pub branch_rel_width: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SolverOptions::default();
        Self {
            cg_tol: s.cg.tol,
            eig_tol: s.eigen.tol,
            picard_tol: s.picard.tol,
            picard_cap: s.picard.cap,
            picard_max_iter: s.picard.max_iter,
            branch_rel_width: 0.01,
        }
    }
}

impl Tolerances {
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            cg: CgOptions {
                tol: self.cg_tol,
                ..CgOptions::default()
            },
            eigen: EigenOptions {
                tol: self.eig_tol,
                ..EigenOptions::default()
            },
            picard: PicardOptions {
                tol: self.picard_tol,
                max_iter: self.picard_max_iter,
                cap: self.picard_cap,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub domain: DomainSpec,
    pub problem: ProblemSpec,
    pub betas: Vec<f64>,
    /// Also solve the Dirichlet problem (needed by the monotonicity check).
    pub dirichlet: bool,
    pub h: f64,
    pub adaptive: bool,
    pub tolerances: Tolerances,
    pub checks: Vec<Check>,
    pub max_count: Option<CountSpec>,
    pub saddle_count: Option<CountSpec>,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
    pub contours: bool,
}

type Entries = BTreeMap<String, (usize, String)>;

struct Section<'a> {
    name: &'static str,
    entries: Option<&'a Entries>,
    used: Vec<&'static str>,
}

impl<'a> Section<'a> {
    fn raw(&mut self, key: &'static str) -> Option<&'a str> {
        self.used.push(key);
        self.entries?.get(key).map(|(_, v)| v.as_str())
    }

    fn required(&mut self, key: &'static str) -> Result<&'a str, ConfigError> {
        self.raw(key).ok_or_else(|| ConfigError::Missing {
            section: self.name.into(),
            key: key.into(),
        })
    }

    fn parse<T: FromStr>(&mut self, key: &'static str) -> Result<Option<T>, ConfigError> {
        self.raw(key)
            .map(|v| {
                v.parse().map_err(|_| ConfigError::Invalid {
                    key: key.into(),
                    msg: format!("cannot parse `{v}`"),
                })
            })
            .transpose()
    }

    fn list(&mut self, key: &'static str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.raw(key)
            .map(|v| {
                v.split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>().map_err(|_| ConfigError::Invalid {
                            key: key.into(),
                            msg: format!("`{s}` is not a number"),
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some(entries) = self.entries {
            if let Some(key) = entries.keys().find(|k| !self.used.contains(&k.as_str())) {
                return Err(ConfigError::UnknownKey {
                    section: self.name.into(),
                    key: key.clone(),
                });
            }
        }
        Ok(())
    }
}

const SECTIONS: [&str; 7] = ["experiment", "domain", "problem", "mesh", "sweep", "tolerances", "checks"];
const OUTPUT: &str = "output";

fn split_sections(text: &str) -> Result<BTreeMap<String, Entries>, ConfigError> {
    let mut out: BTreeMap<String, Entries> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if !SECTIONS.contains(&name.as_str()) && name != OUTPUT {
                return Err(ConfigError::UnknownSection(name));
            }
            if out.contains_key(&name) {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("section [{name}] repeated"),
                });
            }
            out.insert(name.clone(), Entries::new());
            current = Some(name);
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            });
        };
        let Some(section) = current.as_ref() else {
            return Err(ConfigError::Syntax {
                line,
                msg: "key outside of any section".into(),
            });
        };
        let entries = out.get_mut(section).expect("section inserted on header");
        let key = k.trim().to_string();
        if entries.insert(key.clone(), (line, v.trim().to_string())).is_some() {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("key `{key}` repeated"),
            });
        }
    }
    Ok(out)
}

fn parse_nonlinearity(s: &str) -> Result<Nonlinearity, ConfigError> {
    let invalid = |msg: String| ConfigError::Invalid { key: "g".into(), msg };
    let mut words = s.split_whitespace();
    let g = match (words.next(), words.next(), words.next()) {
        (Some("exp"), None, _) => Nonlinearity::GelfandExp,
        (Some("torsion"), None, _) => Nonlinearity::Torsion,
        (Some("power"), Some(p), None) => Nonlinearity::Power {
            p: p.parse().map_err(|_| invalid(format!("bad exponent `{p}`")))?,
        },
        _ => return Err(invalid(format!("expected `exp`, `torsion` or `power <p>`, got `{s}`"))),
    };
    if !g.is_admissible() {
        return Err(invalid(format!("{s} is not admissible")));
    }
    Ok(g)
}

fn positive(key: &str, values: &[f64]) -> Result<(), ConfigError> {
    if values.is_empty() {
        return Err(ConfigError::Invalid {
            key: key.into(),
            msg: "list is empty".into(),
        });
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(ConfigError::Invalid {
            key: key.into(),
            msg: format!("{v} is not positive"),
        });
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if cfg.name.is_empty() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let sections = split_sections(text)?;
        let section = |name: &'static str| Section {
            name,
            entries: sections.get(name),
            used: Vec::new(),
        };

        let mut s = section("experiment");
        let name = s.raw("name").unwrap_or("").to_string();
        s.finish()?;

        let mut s = section("domain");
        let family = s.required("family")?;
        let num = |s: &mut Section, key: &'static str| -> Result<f64, ConfigError> {
            s.parse::<f64>(key)?.ok_or_else(|| ConfigError::Missing {
                section: "domain".into(),
                key: key.into(),
            })
        };
        let mut domain = match family {
            "disk" => DomainSpec::disk(num(&mut s, "radius")?),
            "ellipse" => DomainSpec::ellipse(num(&mut s, "a")?, num(&mut s, "b")?),
            "corrugated_strip" => {
                let d = DomainSpec::corrugated_default();
                let DomainFamily::CorrugatedStrip {
                    half_length,
                    amplitude,
                    waves,
                    degree,
                } = d.family
                else {
                    unreachable!("default is corrugated")
                };
                DomainSpec::corrugated_strip(
                    s.parse("half_length")?.unwrap_or(half_length),
                    s.parse("amplitude")?.unwrap_or(amplitude),
                    s.parse("waves")?.unwrap_or(waves),
                    s.parse("degree")?.unwrap_or(degree),
                )
            }
            other => {
                return Err(ConfigError::Invalid {
                    key: "family".into(),
                    msg: format!("unknown domain family `{other}`"),
                })
            }
        };
        if let Some(c) = s.list("center")? {
            let [x, y] = c[..] else {
                return Err(ConfigError::Invalid {
                    key: "center".into(),
                    msg: "expected two numbers".into(),
                });
            };
            domain = domain.with_center([x, y]);
        }
        s.finish()?;
        domain.validate().map_err(|e| ConfigError::Invalid {
            key: "domain".into(),
            msg: e.to_string(),
        })?;

        let mut s = section("problem");
        let problem = match s.required("kind")? {
            "torsion" => ProblemSpec::Torsion,
            "eigen" => ProblemSpec::Eigen,
            "gelfand" => {
                let g = parse_nonlinearity(s.required("g")?)?;
                let fixed = s.list("lambda")?;
                let fraction = s.list("lambda_fraction")?;
                let lambda = match (fixed, fraction) {
                    (Some(v), None) => {
                        positive("lambda", &v)?;
                        LambdaPolicy::Fixed(v)
                    }
                    (None, Some(v)) => {
                        positive("lambda_fraction", &v)?;
                        if let Some(f) = v.iter().find(|f| **f >= 1.0) {
                            return Err(ConfigError::Invalid {
                                key: "lambda_fraction".into(),
                                msg: format!("{f} is not below 1"),
                            });
                        }
                        LambdaPolicy::FractionOfStar(v)
                    }
                    _ => {
                        return Err(ConfigError::Invalid {
                            key: "lambda".into(),
                            msg: "give exactly one of `lambda` or `lambda_fraction`".into(),
                        })
                    }
                };
                ProblemSpec::Gelfand { g, lambda }
            }
            other => {
                return Err(ConfigError::Invalid {
                    key: "kind".into(),
                    msg: format!("unknown problem `{other}`"),
                })
            }
        };
        s.finish()?;

        let mut s = section("mesh");
        let h: f64 = s.parse("h")?.ok_or_else(|| ConfigError::Missing {
            section: "mesh".into(),
            key: "h".into(),
        })?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(ConfigError::Invalid {
                key: "h".into(),
                msg: format!("{h} is not positive"),
            });
        }
        let adaptive = s.parse("adaptive")?.unwrap_or(false);
        s.finish()?;

        let mut s = section("sweep");
        let betas = s.list("beta")?.ok_or_else(|| ConfigError::Missing {
            section: "sweep".into(),
            key: "beta".into(),
        })?;
        positive("beta", &betas)?;
        if betas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::Invalid {
                key: "beta".into(),
                msg: "grid must be strictly increasing".into(),
            });
        }
        let mut dirichlet = s.parse("dirichlet")?.unwrap_or(false);
        s.finish()?;

        let mut s = section("tolerances");
        let d = Tolerances::default();
        let tolerances = Tolerances {
            cg_tol: s.parse("cg_tol")?.unwrap_or(d.cg_tol),
            eig_tol: s.parse("eig_tol")?.unwrap_or(d.eig_tol),
            picard_tol: s.parse("picard_tol")?.unwrap_or(d.picard_tol),
            picard_cap: s.parse("picard_cap")?.unwrap_or(d.picard_cap),
            picard_max_iter: s.parse("picard_max_iter")?.unwrap_or(d.picard_max_iter),
            branch_rel_width: s.parse("branch_rel_width")?.unwrap_or(d.branch_rel_width),
        };
        s.finish()?;

        let mut s = section("checks");
        let mut checks: Vec<Check> = match s.raw("run") {
            Some(list) => list
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|w| !w.is_empty())
                .map(|w| w.parse().map_err(|msg| ConfigError::Invalid { key: "run".into(), msg }))
                .collect::<Result<_, _>>()?,
            None => Vec::new(),
        };
        checks.sort();
        checks.dedup();
        let max_count = s.parse("max_count")?;
        let saddle_count = s.parse("saddle_count")?;
        s.finish()?;
        if checks.contains(&Check::Monotonicity) {
            dirichlet = true;
        }

        let mut s = section("output");
        let output_dir = s.raw("dir").map(PathBuf::from);
        let contours = s.parse("contours")?.unwrap_or(false);
        s.finish()?;

        Ok(Self {
            name,
            domain,
            problem,
            betas,
            dirichlet,
            h,
            adaptive,
            tolerances,
            checks,
            max_count,
            saddle_count,
            output_dir,
            contours,
        })
    }

    pub fn wants(&self, check: Check) -> bool {
        self.checks.contains(&check)
    }

    /// Hex SHA-256 of the canonical JSON form; insensitive to layout,
    /// comments and key order in the source file.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
