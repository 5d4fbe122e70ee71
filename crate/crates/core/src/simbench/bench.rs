//! Benchmark runner: every method on identically seeded replicates, with
//! per-cell metrics and per-method aggregates.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{mean, median, metric_cpve, metric_rss_error, metric_support, MetricsReport, SUPPORT_THRESHOLD};
use super::scenario::{generate_scenario, GroundTruth, ScenarioSpec};
use super::tune::{SmootherCache, TuneGrid};
use crate::deflation::{DeflationKind, DeflationScheme};
use crate::error::{Result, SfpcaError};
use crate::linalg::{thin_svd, DenseMatrix};
use crate::mansfpca::{fit_manifold, objective_manifold, Engine, EngineStats, ManConfig};
use crate::pipeline::{fit_pipeline, PipelineConfig};
use crate::rank1::Rank1Config;

pub const BENCH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Svd,
    Hd,
    Pd,
    Sd,
    Madmm,
    Manpg,
    Amanpg,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Svd,
        Method::Hd,
        Method::Pd,
        Method::Sd,
        Method::Madmm,
        Method::Manpg,
        Method::Amanpg,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Method::Svd => "svd",
            Method::Hd => "hd",
            Method::Pd => "pd",
            Method::Sd => "sd",
            Method::Madmm => "madmm",
            Method::Manpg => "manpg",
            Method::Amanpg => "amanpg",
        }
    }

    pub fn engine(self) -> Option<Engine> {
        match self {
            Method::Madmm => Some(Engine::Madmm),
            Method::Manpg => Some(Engine::Manpg),
            Method::Amanpg => Some(Engine::Amanpg),
            _ => None,
        }
    }

    pub fn deflation(self) -> Option<DeflationKind> {
        match self {
            Method::Hd => Some(DeflationKind::Hotelling),
            Method::Pd => Some(DeflationKind::Projection),
            Method::Sd => Some(DeflationKind::Schur),
            _ => None,
        }
    }

    /// Parses a comma-separated token list such as `hd,pd,sd,madmm`.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let m: Method = tok.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(SfpcaError::Config("empty method list".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Method {
    type Err = SfpcaError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.token() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                let valid: Vec<_> = Method::ALL.iter().map(|m| m.token()).collect();
                SfpcaError::Config(format!(
                    "unknown method '{s}'; valid methods: {}",
                    valid.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub scenario: u8,
    pub target_snr: f64,
    pub replicates: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub k: usize,
    pub lambda_u: f64,
    pub lambda_v: f64,
    pub alpha_u: f64,
    pub alpha_v: f64,
    pub penalty_order: usize,
    /// BIC-tune every component of the deflation pipelines.
    pub tune: bool,
    pub record_timing: bool,
    pub max_outer: usize,
}

impl BenchConfig {
    pub fn new(scenario: u8, replicates: usize, seed: u64, methods: Vec<Method>) -> Self {
        Self {
            scenario,
            target_snr: ScenarioSpec::default_snr(scenario),
            replicates,
            seed,
            methods,
            k: 3,
            lambda_u: 1.0,
            lambda_v: 1.0,
            alpha_u: 3.0,
            alpha_v: 3.0,
            penalty_order: 2,
            tune: false,
            record_timing: false,
            max_outer: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    pub replicate: usize,
    pub seed: u64,
    pub method: Method,
    pub metrics: Option<MetricsReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub median: Option<f64>,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        Self {
            mean: mean(values),
            median: median(values),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodAggregate {
    pub method: Method,
    pub ok: usize,
    pub failed: usize,
    pub converged: usize,
    pub cpve: Vec<Summary>,
    pub rss_error_u: Summary,
    pub rss_error_v: Summary,
    pub tpr_u: Summary,
    pub tpr_v: Summary,
    pub fpr_u: Summary,
    pub fpr_v: Summary,
    pub objective: Summary,
    pub suboptimality: Summary,
    pub svd_calls: Summary,
    pub retractions: Summary,
    pub descent_solves: Summary,
    pub wall_time: Summary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub config: BenchConfig,
    pub cells: Vec<CellResult>,
    pub aggregates: Vec<MethodAggregate>,
}

struct Estimate {
    u: DenseMatrix,
    v: DenseMatrix,
    converged: bool,
    stats: Option<EngineStats>,
}

/// Fits, shared by the CLI and the benchmark.
pub struct MethodRunner {
    pub cfg: BenchConfig,
    cache: SmootherCache,
}

impl MethodRunner {
    pub fn new(cfg: BenchConfig) -> Self {
        let cache = SmootherCache::new(cfg.penalty_order);
        Self { cfg, cache }
    }

    fn man_config(&mut self, n: usize, p: usize, engine: Engine) -> Result<ManConfig> {
        let mut c = ManConfig::new(
            self.cfg.k,
            self.cfg.lambda_u,
            self.cfg.lambda_v,
            self.cache.get(n, self.cfg.alpha_u)?,
            self.cache.get(p, self.cfg.alpha_v)?,
            engine,
        );
        c.max_outer = self.cfg.max_outer;
        Ok(c)
    }

    fn estimate(&mut self, x: &DenseMatrix, method: Method) -> Result<Estimate> {
        let (n, p) = x.shape();
        if let Some(engine) = method.engine() {
            let cfg = self.man_config(n, p, engine)?;
            let fit = fit_manifold(x, &cfg)?;
            return Ok(Estimate {
                u: fit.u,
                v: fit.v,
                converged: fit.converged,
                stats: Some(fit.engine_stats),
            });
        }
        if let Some(kind) = method.deflation() {
            let rank1 = Rank1Config::new(
                self.cfg.lambda_u,
                self.cfg.lambda_v,
                self.cache.get(n, self.cfg.alpha_u)?,
                self.cache.get(p, self.cfg.alpha_v)?,
            );
            let tune = if self.cfg.tune { Some(TuneGrid::default_for(x)?) } else { None };
            let fit = fit_pipeline(
                x,
                &PipelineConfig {
                    k: self.cfg.k,
                    rank1,
                    scheme: DeflationScheme::new(kind),
                    tune,
                    penalty_order: self.cfg.penalty_order,
                },
            )?;
            return Ok(Estimate {
                u: fit.u,
                v: fit.v,
                converged: fit.converged,
                stats: None,
            });
        }
        let (u, v) = thin_svd(x)?.leading(self.cfg.k);
        Ok(Estimate {
            u,
            v,
            converged: true,
            stats: None,
        })
    }

    fn evaluate(&mut self, gt: &GroundTruth, svd: &(DenseMatrix, DenseMatrix), method: Method) -> Result<MetricsReport> {
        let x = &gt.x_noisy;
        let start = Instant::now();
        let est = self.estimate(x, method)?;
        let elapsed = start.elapsed().as_secs_f64();
        let cpve = metric_cpve(x, &est.u, &est.v)?;
        let (tpr_u, fpr_u) = metric_support(&est.u, &gt.u_star, SUPPORT_THRESHOLD)?;
        let (tpr_v, fpr_v) = metric_support(&est.v, &gt.v_star, SUPPORT_THRESHOLD)?;
        let objective = match method.engine() {
            Some(engine) => {
                let (n, p) = x.shape();
                let cfg = self.man_config(n, p, engine)?;
                Some(-objective_manifold(x, &est.u, &est.v, &cfg)?)
            }
            None => None,
        };
        Ok(MetricsReport {
            cpve,
            rss_error_u: metric_rss_error(&est.u, &gt.u_star, &svd.0)?,
            rss_error_v: metric_rss_error(&est.v, &gt.v_star, &svd.1)?,
            tpr_u,
            tpr_v,
            fpr_u,
            fpr_v,
            objective,
            suboptimality: None,
            wall_time: self.cfg.record_timing.then_some(elapsed),
            engine_stats: est.stats,
            converged: est.converged,
        })
    }
}

pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.replicates < 1 {
        return Err(SfpcaError::Config("replicates must be ≥ 1".into()));
    }
    if cfg.methods.is_empty() {
        return Err(SfpcaError::Config("no methods requested".into()));
    }
    let base = ScenarioSpec::new(cfg.scenario, cfg.target_snr, cfg.seed)?;
    let mut runner = MethodRunner::new(cfg.clone());
    let mut cells = Vec::with_capacity(cfg.replicates * cfg.methods.len());
    for r in 0..cfg.replicates {
        let seed = cfg.seed.wrapping_add(r as u64);
        let gt = generate_scenario(&base.with_seed(seed))?;
        let svd = thin_svd(&gt.x_noisy)?.leading(cfg.k);
        let first = cells.len();
        for &method in &cfg.methods {
            log::info!("replicate {r} method {method}");
            let (metrics, error) = match runner.evaluate(&gt, &svd, method) {
                Ok(m) => (Some(m), None),
                Err(e) => {
                    log::warn!("replicate {r} method {method} failed: {e}");
                    (None, Some(e.to_string()))
                }
            };
            cells.push(CellResult {
                replicate: r,
                seed,
                method,
                metrics,
                error,
            });
        }
        let best = cells[first..]
            .iter()
            .filter_map(|c| c.metrics.as_ref().and_then(|m| m.objective))
            .fold(f64::INFINITY, f64::min);
        for c in &mut cells[first..] {
            if let Some(m) = c.metrics.as_mut() {
                m.suboptimality = m.objective.map(|o| o - best);
            }
        }
    }
    let aggregates = cfg.methods.iter().map(|&m| aggregate(m, cfg.k, &cells)).collect();
    Ok(BenchReport {
        schema_version: BENCH_SCHEMA_VERSION,
        config: cfg.clone(),
        cells,
        aggregates,
    })
}

fn aggregate(method: Method, k: usize, cells: &[CellResult]) -> MethodAggregate {
    let ok: Vec<&MetricsReport> = cells
        .iter()
        .filter(|c| c.method == method)
        .filter_map(|c| c.metrics.as_ref())
        .collect();
    let failed = cells.iter().filter(|c| c.method == method && c.metrics.is_none()).count();
    let col = |f: &dyn Fn(&MetricsReport) -> Option<f64>| -> Summary {
        Summary::of(&ok.iter().filter_map(|m| f(m)).collect::<Vec<_>>())
    };
    let stat = |f: fn(&EngineStats) -> usize| -> Summary {
        Summary::of(
            &ok.iter()
                .filter_map(|m| m.engine_stats.as_ref().map(|s| f(s) as f64))
                .collect::<Vec<_>>(),
        )
    };
    MethodAggregate {
        method,
        ok: ok.len(),
        failed,
        converged: ok.iter().filter(|m| m.converged).count(),
        cpve: (0..k).map(|r| col(&|m| m.cpve.get(r).copied())).collect(),
        rss_error_u: col(&|m| Some(m.rss_error_u)),
        rss_error_v: col(&|m| Some(m.rss_error_v)),
        tpr_u: col(&|m| Some(m.tpr_u)),
        tpr_v: col(&|m| Some(m.tpr_v)),
        fpr_u: col(&|m| Some(m.fpr_u)),
        fpr_v: col(&|m| Some(m.fpr_v)),
        objective: col(&|m| m.objective),
        suboptimality: col(&|m| m.suboptimality),
        svd_calls: stat(|s| s.svd_calls),
        retractions: stat(|s| s.retractions),
        descent_solves: stat(|s| s.descent_solves),
        wall_time: col(&|m| m.wall_time),
    }
}

impl BenchReport {
    pub fn aggregate_for(&self, method: Method) -> Option<&MethodAggregate> {
        self.aggregates.iter().find(|a| a.method == method)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aggregate table, one row per method.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["method".to_string(), "ok".into(), "failed".into(), "converged".into()];
        for r in 1..=self.config.k {
            header.push(format!("cpve{r}_mean"));
            header.push(format!("cpve{r}_median"));
        }
        let named = [
            "rss_error_u",
            "rss_error_v",
            "tpr_u",
            "tpr_v",
            "fpr_u",
            "fpr_v",
            "objective",
            "suboptimality",
            "svd_calls",
            "retractions",
            "descent_solves",
        ];
        for n in named {
            header.push(format!("{n}_mean"));
            header.push(format!("{n}_median"));
        }
        if self.config.record_timing {
            header.push("wall_time_mean".into());
            header.push("wall_time_median".into());
        }
        w.write_record(&header)?;
        let fmt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x}"));
        for a in &self.aggregates {
            let mut row = vec![a.method.token().to_string(), a.ok.to_string(), a.failed.to_string(), a.converged.to_string()];
            let mut push = |s: &Summary| {
                row.push(fmt(s.mean));
                row.push(fmt(s.median));
            };
            for s in &a.cpve {
                push(s);
            }
            for s in [
                &a.rss_error_u,
                &a.rss_error_v,
                &a.tpr_u,
                &a.tpr_v,
                &a.fpr_u,
                &a.fpr_v,
                &a.objective,
                &a.suboptimality,
                &a.svd_calls,
                &a.retractions,
                &a.descent_solves,
            ] {
                push(s);
            }
            if self.config.record_timing {
                push(&a.wall_time);
            }
            w.write_record(&row)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| SfpcaError::Io(std::io::Error::other(e.to_string())))?;
        String::from_utf8(bytes).map_err(|e| SfpcaError::Parse(e.to_string()))
    }
}
