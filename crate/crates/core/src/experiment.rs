//! Batch experiments: a TOML config names a problem, a starting point and a
//! list of solvers; each run writes `trace_<label>.csv` and the batch writes
//! `summary.json`.
//!
//! ```toml
//! seed = 1
//! output_dir = "out/circle"
//!
//! [problem]
//! name = "circle"
//!
//! [x0]
//! coords = [1.3, 0.4]
//!
//! [[solvers]]
//! algorithm = "arc"
//! subsolver = "exact_secular"
//!
//! [analyses]
//! rate = true
//! ```

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{fit_rate, measure_decrease, LojaParams, DEFAULT_TAIL};
use crate::conditions::{
    check_mb, estimate_all, verify_implications, ConditionEstimates, ImplicationReport, MbReport, RegionSpec,
    DEFAULT_SLACK,
};
use crate::geometry::Point;
use crate::problems::{build_problem, Problem, ProblemSpec};
use crate::solvers::{run, SolverConfig, Termination, Trace};
use crate::{Error, Result};

/// Environment variable capping the number of concurrent runs.
pub const THREADS_ENV: &str = "SINGOPT_THREADS";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub problem: ProblemSpec,
    pub x0: StartSpec,
    pub solvers: Vec<SolverConfig>,
    #[serde(default)]
    pub analyses: AnalysisFlags,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Either explicit coordinates or a random point at distance `near_s` from
/// the solution set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    pub coords: Option<Vec<f64>>,
    pub near_s: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisFlags {
    pub rate: bool,
    pub decrease: bool,
    pub mb_check: bool,
    pub conditions: Option<RegionSpec>,
}

impl Default for AnalysisFlags {
    fn default() -> Self {
        Self { rate: true, decrease: false, mb_check: false, conditions: None }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let raw: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(toml::Value::Table(t)) = raw.get("problem") {
            problem_from_table(t.clone()).map_err(|e| Error::Config(format!("[problem]: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::Config("at least one [[solvers]] entry is required".into()));
        }
        let mut labels: Vec<&str> = self.solvers.iter().map(|s| s.label.as_str()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate solver label `{}`; set `label` to disambiguate", w[0])));
        }
        let bad = |l: &str| l.is_empty() || !l.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if let Some(l) = labels.iter().find(|l| bad(l)) {
            return Err(Error::Config(format!("label `{l}` must be non-empty ASCII letters, digits, `_` or `-`")));
        }
        match (&self.x0.coords, self.x0.near_s) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => Err(Error::Config("x0 needs exactly one of `coords` or `near_s`".into())),
        }
    }
}

/// Random point at distance about `radius` from `S`, moving away from a
/// point of `S` along a normal direction.
pub fn point_near_s(p: &Problem, radius: f64, seed: u64) -> Result<Point> {
    let o = p
        .oracle()
        .ok_or_else(|| Error::Config(format!("problem `{}` has no oracle; give x0 coords", p.name())))?;
    if !(radius > 0.0) {
        return Err(Error::Config("near_s must be positive".into()));
    }
    let m = p.manifold();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let z = DVector::from_fn(m.ambient_dim(), |_, _| StandardNormal.sample(&mut rng));
        let z = m.project_point(&z);
        let foot = o.project(&z);
        let normal = m.log(&foot, &z)?;
        if normal.norm() > 1e-8 {
            return m.exp(&foot, &(normal.normalize() * radius));
        }
    }
    Err(Error::Config("could not draw a starting point off S".into()))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub label: String,
    pub algorithm: &'static str,
    pub termination: Termination,
    pub iterations: usize,
    pub final_point: Vec<f64>,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub final_dist_s: Option<f64>,
    /// Fitted convergence orders, or the reason a fit was impossible.
    pub rate: Option<serde_json::Value>,
    pub decrease: Option<serde_json::Value>,
    pub csv: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionsReport {
    pub problem: String,
    pub region: RegionSpec,
    pub estimates: ConditionEstimates,
    pub theta_hat: Option<f64>,
    pub mb: Option<MbReport>,
    pub implications: ImplicationReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub version: &'static str,
    pub timestamp: u64,
    pub seed: u64,
    pub problem: String,
    pub x0: Vec<f64>,
    pub config: serde_json::Value,
    pub runs: Vec<RunReport>,
    pub conditions: Option<ConditionsReport>,
    pub mb: Option<MbReport>,
}

impl RunSummary {
    pub fn diverged(&self) -> bool {
        self.runs.iter().any(|r| matches!(r.termination, Termination::Divergence(_)))
    }
}

fn fit_json(seq: Option<Vec<f64>>) -> serde_json::Value {
    match seq.map(|s| fit_rate(&s, DEFAULT_TAIL)) {
        Some(Ok(r)) => serde_json::to_value(r).unwrap_or_default(),
        Some(Err(e)) => serde_json::json!({ "error": e.to_string() }),
        None => serde_json::Value::Null,
    }
}

fn rate_json(p: &Problem, trace: &Trace) -> serde_json::Value {
    let it = trace.iterate_rows();
    let grads = it.iter().map(|r| r.grad_norm).collect();
    let gaps = p.f_star().map(|fs| it.iter().map(|r| (r.f - fs).max(0.0)).collect());
    serde_json::json!({
        "dist_s": fit_json(trace.dist_sequence()),
        "grad_norm": fit_json(Some(grads)),
        "f_gap": fit_json(gaps),
    })
}

/// The conditions analysis shared by `run` and `conditions`.
pub fn conditions_report(p: &Problem, region: &RegionSpec) -> Result<ConditionsReport> {
    let estimates = estimate_all(p, region)?;
    let mb = if p.smoothness().has_hessian() {
        let o = p.oracle().ok_or_else(|| Error::Precondition("no oracle".into()))?;
        let anchor = o.project(&DVector::from_column_slice(&region.center));
        Some(check_mb(p, &anchor, 10, region.seed)?)
    } else {
        None
    };
    let implications = verify_implications(&estimates.as_list(), mb.as_ref(), DEFAULT_SLACK, p.smoothness())?;
    Ok(ConditionsReport {
        problem: p.name().to_string(),
        region: region.clone(),
        theta_hat: estimates.loja.as_ref().and_then(|l| l.theta_hat),
        estimates,
        mb,
        implications,
    })
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(e.to_string()))
}

/// Run every solver of the config, write the traces and the summary, and
/// return the summary.
pub fn run_experiment(cfg: &ExperimentConfig, raw: &toml::Table, out: &Path) -> Result<RunSummary> {
    let p = build_problem(&cfg.problem).map_err(|e| Error::Config(e.to_string()))?;
    let x0 = match (&cfg.x0.coords, cfg.x0.near_s) {
        (Some(c), _) => DVector::from_column_slice(c),
        (None, Some(r)) => point_near_s(&p, r, cfg.x0.seed.unwrap_or(cfg.seed))?,
        _ => unreachable!("validated"),
    };
    p.manifold().check_point(&x0).map_err(|e| Error::Config(format!("x0: {e}")))?;

    // conditions need an oracle; a missing one is a config error
    let conditions = match &cfg.analyses.conditions {
        Some(region) => Some(conditions_report(&p, region).map_err(|e| Error::Config(e.to_string()))?),
        None => None,
    };
    let mb = if cfg.analyses.mb_check {
        let o = p.oracle().ok_or_else(|| Error::Config("mb_check needs an oracle".into()))?;
        Some(check_mb(&p, &o.project(&x0), 10, cfg.seed).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };
    let loja = conditions.as_ref().and_then(|c| {
        c.estimates.loja.as_ref().map(|l| LojaParams { theta: l.theta_hat.unwrap_or(0.5), mu: l.mu_hat })
    });

    let traces: Vec<Result<Trace>> =
        thread_pool()?.install(|| cfg.solvers.par_iter().map(|s| run(&p, &x0, s)).collect());

    std::fs::create_dir_all(out)?;
    let mut runs = Vec::with_capacity(traces.len());
    for (s, trace) in cfg.solvers.iter().zip(traces) {
        let trace = trace.map_err(|e| Error::Config(format!("solver `{}`: {e}", s.label)))?;
        let csv = format!("trace_{}.csv", s.label);
        trace.write_csv(&out.join(&csv))?;
        let last = trace.last();
        runs.push(RunReport {
            label: s.label.clone(),
            algorithm: s.method.name(),
            termination: trace.termination.clone(),
            iterations: trace.iterations(),
            final_point: trace.final_point.iter().copied().collect(),
            final_f: last.f,
            final_grad_norm: last.grad_norm,
            final_dist_s: last.dist_s,
            rate: cfg.analyses.rate.then(|| rate_json(&p, &trace)),
            decrease: cfg.analyses.decrease.then(|| match measure_decrease(&trace, &p, loja) {
                Ok(r) => serde_json::to_value(r).unwrap_or_default(),
                Err(e) => serde_json::json!({ "error": e.to_string() }),
            }),
            csv,
        });
    }
    let summary = RunSummary {
        version: env!("CARGO_PKG_VERSION"),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        seed: cfg.seed,
        problem: p.name().to_string(),
        x0: x0.iter().copied().collect(),
        config: serde_json::to_value(raw)?,
        runs,
        conditions,
        mb,
    };
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}

/// Load a config file and run it; `out` overrides the configured directory.
pub fn run_config_file(path: &Path, out: Option<&Path>) -> Result<RunSummary> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let raw: toml::Table =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let cfg = ExperimentConfig::load(path)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone());
    run_experiment(&cfg, &raw, &dir)
}

/// Parse `name` and `key=value` pairs (values in TOML syntax) into a problem spec.
pub fn parse_problem(name: &str, params: &[String]) -> Result<ProblemSpec> {
    let mut table = toml::Table::new();
    table.insert("name".into(), toml::Value::String(name.into()));
    for kv in params {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{kv}`")))?;
        let value: toml::Value = toml::from_str::<toml::Table>(&format!("v = {v}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .ok_or_else(|| Error::Config(format!("cannot parse value of `{k}`: `{v}`")))?;
        table.insert(k.trim().into(), value);
    }
    problem_from_table(table)
}

/// Parameterless problems are unit variants, for which serde ignores extra
/// keys; reject them explicitly.
fn problem_from_table(table: toml::Table) -> Result<ProblemSpec> {
    let spec: ProblemSpec = table.clone().try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let known = toml::Table::try_from(&spec).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(k) = table.keys().find(|k| !known.contains_key(*k)) {
        return Err(Error::Config(format!("unknown parameter `{k}` for problem `{}`", spec.label())));
    }
    Ok(spec)
}

/// Canonical center for a problem's conditions analysis: the projection of
/// the origin (Euclidean) or of the first basis vector (sphere) onto `S`.
pub fn default_center(p: &Problem) -> Result<Vec<f64>> {
    let o = p.oracle().ok_or_else(|| Error::Config(format!("problem `{}` has no oracle", p.name())))?;
    let m = p.manifold();
    let mut seed = DVector::zeros(m.ambient_dim());
    if !m.is_euclidean() {
        seed[0] = 1.0;
    }
    Ok(o.project(&seed).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CIRCLE: &str = r#"
seed = 3
[problem]
name = "circle"
[x0]
coords = [1.3, 0.4]
[[solvers]]
algorithm = "arc"
[[solvers]]
algorithm = "arc"
label = "arc_inexact"
subsolver = "inexact_gradient"
[[solvers]]
algorithm = "gd"
step = "armijo"
alpha_bar = 1.0
beta = 0.5
sigma_a = 0.1
max_iters = 2000
"#;

    #[test]
    fn parses_solver_tables() {
        let cfg = ExperimentConfig::from_toml(CIRCLE).unwrap();
        assert_eq!(cfg.solvers.len(), 3);
        assert_eq!(cfg.solvers[1].label, "arc_inexact");
        assert_eq!(cfg.solvers[2].stop.max_iters, 2000);
        assert!(cfg.analyses.rate);
    }

    #[test]
    fn config_errors() {
        let missing_name = CIRCLE.replace("name = \"circle\"", "");
        assert!(matches!(ExperimentConfig::from_toml(&missing_name), Err(Error::Config(_))));
        let typo = CIRCLE.replace("sigma_a", "sigma_aa");
        assert!(matches!(ExperimentConfig::from_toml(&typo), Err(Error::Config(_))));
        let dup = CIRCLE.replace("label = \"arc_inexact\"\n", "");
        assert!(matches!(ExperimentConfig::from_toml(&dup), Err(Error::Config(_))));
        let bad_value = CIRCLE.replace("beta = 0.5", "beta = 1.5");
        assert!(matches!(ExperimentConfig::from_toml(&bad_value), Err(Error::Config(_))));
        let extra = CIRCLE.replace("name = \"circle\"", "name = \"circle\"\nradius = 2.0");
        assert!(matches!(ExperimentConfig::from_toml(&extra), Err(Error::Config(_))));
        let both = CIRCLE.replace("coords = [1.3, 0.4]", "coords = [1.3, 0.4]\nnear_s = 0.1");
        assert!(matches!(ExperimentConfig::from_toml(&both), Err(Error::Config(_))));
    }

    #[test]
    fn near_s_start() {
        for spec in [ProblemSpec::Circle, ProblemSpec::OverparamRegression { m: 6, n: 3, seed: 1 }, ProblemSpec::SphereBand]
        {
            let p = build_problem(&spec).unwrap();
            let x = point_near_s(&p, 0.1, 5).unwrap();
            let d = p.dist_to_s(&x).unwrap();
            assert!((d - 0.1).abs() < 0.02, "{}: {d}", p.name());
        }
    }

    #[test]
    fn problem_from_flags() {
        let spec = parse_problem("aniso_quad", &["a=2".into(), "b=8.0".into()]).unwrap();
        assert_eq!(spec, ProblemSpec::AnisoQuad { a: 2.0, b: 8.0 });
        let spec = parse_problem("quadratic", &["diag=[2.0]".into()]).unwrap();
        assert_eq!(spec, ProblemSpec::Quadratic { diag: vec![2.0] });
        assert!(parse_problem("circle", &["a=2".into()]).is_err());
        assert!(parse_problem("nope", &[]).is_err());
    }

    #[test]
    fn writes_traces_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::from_toml(CIRCLE).unwrap();
        let raw: toml::Table = toml::from_str(CIRCLE).unwrap();
        let s = run_experiment(&cfg, &raw, dir.path()).unwrap();
        assert!(!s.diverged());
        for label in ["arc", "arc_inexact", "gd"] {
            let csv = std::fs::read_to_string(dir.path().join(format!("trace_{label}.csv"))).unwrap();
            assert!(csv.starts_with(crate::solvers::CSV_HEADER));
        }
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(json["runs"][0]["rate"]["dist_s"]["classification"], "quadratic");
    }
}
