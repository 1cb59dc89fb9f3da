//! Multi-trial noise sweeps: simulate once, then for every (level, trial)
//! add seeded noise, identify and score.
//!
//! Config files are TOML:
//!
//! ```toml
//! equation = "kdv"
//! levels = [0.0, 0.1, 0.2, 0.3]
//! trials = 20            # default 20
//! seed = 7               # base seed, default 0
//! method = "ident_wv"    # or "uniform"
//! reuse_clean = true     # default true
//!
//! [simulation]           # any SimulationSpec field
//! n_x = 256
//! [library]
//! alpha_max = 6
//! [test_functions]
//! halfwidth_x = 16
//! [solver]
//! trim_threshold = 0.01
//! [voting]
//! rho = 0.25
//! ```

use std::fmt::Write as _;

use identwv_core::{add_noise, identify, score, Dataset, EquationId, NoiseSpec, TestFunctionGrid};
use rayon::prelude::*;
use serde::Deserialize;

use crate::config::{
    library_entries, parse_equation, solver_entries, voting_entries, LibraryOptions, Method, SimulationOptions,
    SolverOptions, TestFunctionOptions, VotingOptions,
};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, Metadata};
use crate::sim::{simulate, SimulationSpec};

fn default_trials() -> usize {
    20
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub equation: String,
    pub levels: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub method: Method,
    /// Simulate once and reuse the trajectory for every trial.
    #[serde(default = "default_true")]
    pub reuse_clean: bool,
    #[serde(default)]
    pub simulation: SimulationOptions,
    #[serde(default)]
    pub library: LibraryOptions,
    #[serde(default)]
    pub test_functions: TestFunctionOptions,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub voting: VotingOptions,
}

impl BenchConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.levels.is_empty() || self.levels.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(Error::Config("levels must be a nonempty list of nonnegative numbers".into()));
        }
        parse_equation(&self.equation)?;
        Ok(())
    }
}

/// Everything a trial needs, resolved once.
struct Plan {
    equation: EquationId,
    spec: SimulationSpec,
    library: identwv_core::FeatureLibrary,
    tf: TestFunctionOptions,
    solver: identwv_core::SparseSolveParams,
    voting: identwv_core::VotingConfig,
    refs: Vec<identwv_core::ReferenceFeature>,
    truth: identwv_core::Coefficients,
}

impl Plan {
    fn new(cfg: &BenchConfig) -> Result<Self> {
        let equation = parse_equation(&cfg.equation)?;
        let library = cfg.library.resolve(equation.spatial_dims())?;
        Ok(Self {
            equation,
            spec: cfg.simulation.resolve(equation)?,
            truth: equation.true_coefficients(&library)?,
            refs: cfg.method.references(equation.spatial_dims())?,
            library,
            tf: cfg.test_functions,
            solver: cfg.solver.resolve()?,
            voting: cfg.voting.resolve()?,
        })
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Noise seed of one trial: `base ⊕ mix(level index, trial index)`.
pub fn trial_seed(base: u64, level: usize, trial: usize) -> u64 {
    base ^ mix(((level as u64) << 32) | trial as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub level_index: usize,
    pub level: f64,
    pub trial: usize,
    pub seed: u64,
    /// NaN when the trial failed.
    pub tpr: f64,
    pub ppv: f64,
    pub e2: f64,
    /// `;`-separated: `empty`, `rank_deficient`, `error=<message>`.
    pub flags: String,
}

impl TrialRecord {
    pub fn ok(&self) -> bool {
        !self.flags.contains("error=")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub level: f64,
    pub mean_tpr: f64,
    pub std_tpr: f64,
    pub mean_ppv: f64,
    pub std_ppv: f64,
    pub mean_e2: f64,
    pub std_e2: f64,
    /// Successful trials.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub equation: EquationId,
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    /// Effective configuration.
    pub manifest: Metadata,
}

fn run_trial(plan: &Plan, clean: &Dataset, level_index: usize, level: f64, trial: usize, seed: u64) -> TrialRecord {
    let mut rec = TrialRecord { level_index, level, trial, seed, tpr: f64::NAN, ppv: f64::NAN, e2: f64::NAN, flags: String::new() };
    let outcome = (|| -> Result<(identwv_core::Score, bool)> {
        let noisy = add_noise(clean, NoiseSpec { sigma_nsr: level, seed })?;
        let tfs = TestFunctionGrid::for_library(noisy.grid(), &plan.library, &plan.tf.config())?;
        let r = identify(&noisy, &plan.library, &tfs, &plan.refs, &plan.solver, &plan.voting)?;
        Ok((score(&plan.truth, &r.coefficients)?, r.diagnostics.rank_deficient))
    })();
    match outcome {
        Ok((s, rank_deficient)) => {
            rec.tpr = s.tpr;
            rec.ppv = s.ppv;
            rec.e2 = s.e2;
            let mut flags = Vec::new();
            if s.empty_recovery {
                flags.push("empty".to_string());
            }
            if rank_deficient {
                flags.push("rank_deficient".to_string());
            }
            rec.flags = flags.join(";");
        }
        Err(e) => rec.flags = format!("error={}", e.to_string().replace([',', '\n'], " ")),
    }
    rec
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-level mean and (population) standard deviation over successful trials,
/// accumulated in trial order.
pub fn summarize(levels: &[f64], trials: &[TrialRecord]) -> Vec<SummaryRow> {
    levels
        .iter()
        .enumerate()
        .map(|(li, &level)| {
            let ok: Vec<&TrialRecord> = trials.iter().filter(|t| t.level_index == li && t.ok()).collect();
            let col = |f: fn(&TrialRecord) -> f64| mean_std(&ok.iter().map(|t| f(t)).collect::<Vec<_>>());
            let (mean_tpr, std_tpr) = col(|t| t.tpr);
            let (mean_ppv, std_ppv) = col(|t| t.ppv);
            let (mean_e2, std_e2) = col(|t| t.e2);
            SummaryRow { level, mean_tpr, std_tpr, mean_ppv, std_ppv, mean_e2, std_e2, n: ok.len() }
        })
        .collect()
}

/// Runs the sweep on `jobs` worker threads; the output does not depend on `jobs`.
pub fn run_benchmark(cfg: &BenchConfig, jobs: usize) -> Result<BenchResult> {
    cfg.validate()?;
    let plan = Plan::new(cfg)?;
    let shared = if cfg.reuse_clean { Some(simulate(&plan.spec)?) } else { None };
    let units: Vec<(usize, f64, usize)> = cfg
        .levels
        .iter()
        .enumerate()
        .flat_map(|(li, &l)| (0..cfg.trials).map(move |t| (li, l, t)))
        .collect();
    let work = |&(li, level, trial): &(usize, f64, usize)| -> TrialRecord {
        let seed = trial_seed(cfg.seed, li, trial);
        match &shared {
            Some(clean) => run_trial(&plan, clean, li, level, trial, seed),
            None => match simulate(&plan.spec) {
                Ok(clean) => run_trial(&plan, &clean, li, level, trial, seed),
                Err(e) => TrialRecord {
                    level_index: li,
                    level,
                    trial,
                    seed,
                    tpr: f64::NAN,
                    ppv: f64::NAN,
                    e2: f64::NAN,
                    flags: format!("error={e}"),
                },
            },
        }
    };
    let trials: Vec<TrialRecord> = if jobs <= 1 {
        units.iter().map(work).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| units.par_iter().map(work).collect())
    };
    let summary = summarize(&cfg.levels, &trials);
    Ok(BenchResult { equation: plan.equation, trials, summary, manifest: manifest(cfg, &plan)? })
}

fn manifest(cfg: &BenchConfig, plan: &Plan) -> Result<Metadata> {
    let kv = |k: &str, v: String| (k.to_string(), v);
    let mut m = vec![
        kv("command", "bench".into()),
        kv("levels", cfg.levels.iter().map(|l| fmt_f64(*l)).collect::<Vec<_>>().join(",")),
        kv("trials", cfg.trials.to_string()),
        kv("seed", cfg.seed.to_string()),
        kv("method", cfg.method.as_str().into()),
        kv("reuse_clean", cfg.reuse_clean.to_string()),
    ];
    m.extend(plan.spec.metadata().into_iter().map(|(k, v)| (format!("sim.{k}"), v)));
    m.extend(library_entries(&plan.library));
    let tf_entries = plan.tf.entries(&plan.spec.grid()?, &plan.library);
    m.extend(tf_entries);
    m.extend(solver_entries(&plan.solver));
    m.extend(voting_entries(&plan.voting));
    m.push(kv("references", plan.refs.iter().map(|r| r.name()).collect::<Vec<_>>().join(",")));
    Ok(m)
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

pub const TRIALS_HEADER: &str = "equation,level,trial,seed,tpr,ppv,e2,flags";
pub const SUMMARY_HEADER: &str = "equation,level,mean_tpr,std_tpr,mean_ppv,std_ppv,mean_e2,std_e2,n";

pub fn trials_csv(result: &BenchResult) -> String {
    let mut out = format!("{TRIALS_HEADER}\n");
    for t in &result.trials {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            result.equation,
            num(t.level),
            t.trial,
            t.seed,
            num(t.tpr),
            num(t.ppv),
            num(t.e2),
            t.flags
        );
    }
    out
}

pub fn summary_csv(result: &BenchResult) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in &result.summary {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            result.equation,
            num(r.level),
            num(r.mean_tpr),
            num(r.std_tpr),
            num(r.mean_ppv),
            num(r.std_ppv),
            num(r.mean_e2),
            num(r.std_e2),
            r.n
        );
    }
    out
}

/// Parses a summary CSV written by [`summary_csv`].
pub fn parse_summary_csv(text: &str) -> Result<Vec<(String, SummaryRow)>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Config(format!("csv: {e}")))?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != SUMMARY_HEADER {
        return Err(Error::Config(format!("expected summary header `{SUMMARY_HEADER}`")));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Config(format!("csv: {e}")))?;
        let f = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| Error::Config(format!("csv: bad number `{}`", &rec[i])))
        };
        let n = rec[8].parse().map_err(|_| Error::Config(format!("csv: bad count `{}`", &rec[8])))?;
        rows.push((
            rec[0].to_string(),
            SummaryRow {
                level: f(1)?,
                mean_tpr: f(2)?,
                std_tpr: f(3)?,
                mean_ppv: f(4)?,
                std_ppv: f(5)?,
                mean_e2: f(6)?,
                std_e2: f(7)?,
                n,
            },
        ));
    }
    Ok(rows)
}
