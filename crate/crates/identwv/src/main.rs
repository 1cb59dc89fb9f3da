use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use identwv::bench::{run_benchmark, summary_csv, trials_csv, parse_summary_csv, BenchConfig};
use identwv::config::{
    library_entries, parse_equation, solver_entries, voting_entries, LibraryOptions, Method, SimulationOptions,
    SolverOptions, TestFunctionOptions, VotingOptions,
};
use identwv::io::{self, fmt_f64, Metadata};
use identwv::plot::{render_svg, Series};
use identwv::sim::simulate;
use identwv::{Error, Result};
use identwv_core::{add_noise, identify, score, NoiseSpec, TestFunctionGrid};

/// Weighted weak-form PDE identification with occurrence and coefficient voting.
#[derive(Parser)]
#[command(name = "identwv", version, about)]
struct Cli {
    /// Manifest path (defaults next to the main output).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a benchmark equation and write a dataset file.
    Simulate(SimulateArgs),
    /// Identify the governing equation of a dataset.
    Identify(IdentifyArgs),
    /// Run a noise sweep from a TOML config.
    Bench(BenchArgs),
    /// Render summary CSVs as an SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    equation: String,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    x_min: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long)]
    y_min: Option<f64>,
    #[arg(long)]
    y_max: Option<f64>,
    #[arg(long)]
    n_x: Option<usize>,
    #[arg(long)]
    n_y: Option<usize>,
    #[arg(long)]
    n_t: Option<usize>,
    #[arg(long)]
    oversample_x: Option<usize>,
    #[arg(long)]
    oversample_t: Option<usize>,
    /// Add noise before writing (clean values are kept in the file).
    #[arg(long, default_value_t = 0.0)]
    nsr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IdentifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Noise added at identification time.
    #[arg(long, default_value_t = 0.0)]
    nsr: f64,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the single uniform reference `u` instead of the default set.
    #[arg(long)]
    uniform: bool,
    /// Score against this equation (defaults to the dataset's `sim.equation`).
    #[arg(long)]
    equation: Option<String>,
    #[arg(long)]
    alpha_max: Option<usize>,
    #[arg(long)]
    beta_max: Option<usize>,
    #[arg(long)]
    include_constant: bool,
    #[arg(long)]
    tf_halfwidth_x: Option<usize>,
    #[arg(long)]
    tf_halfwidth_t: Option<usize>,
    #[arg(long)]
    tf_stride_x: Option<usize>,
    #[arg(long)]
    tf_stride_t: Option<usize>,
    #[arg(long)]
    tf_order_x: Option<usize>,
    #[arg(long)]
    tf_order_t: Option<usize>,
    #[arg(long)]
    s_max: Option<usize>,
    #[arg(long)]
    cv_fraction: Option<f64>,
    #[arg(long)]
    trim: Option<f64>,
    #[arg(long)]
    max_sp_iters: Option<usize>,
    #[arg(long)]
    slack: Option<f64>,
    /// Holdout residual treated as an exact fit.
    #[arg(long)]
    residual_floor: Option<f64>,
    /// Seed of the holdout split.
    #[arg(long)]
    cv_seed: Option<u64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    v: Option<f64>,
    /// Result file.
    #[arg(long, default_value = "identify.result")]
    out: PathBuf,
    #[arg(long)]
    dump_system: Option<PathBuf>,
    #[arg(long)]
    dump_indicators: Option<PathBuf>,
    /// Print per-reference results and holdout residuals.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct PlotArgs {
    /// Summary CSV; repeat to overlay series.
    #[arg(long = "in", required = true)]
    input: Vec<PathBuf>,
    /// Series labels, in the order of `--in` (default: file stem).
    #[arg(long)]
    label: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn manifest_path(explicit: &Option<PathBuf>, out: &Path) -> PathBuf {
    explicit.clone().unwrap_or_else(|| {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest");
        PathBuf::from(s)
    })
}

fn run_simulate(a: SimulateArgs, manifest: &Option<PathBuf>) -> Result<()> {
    let equation = parse_equation(&a.equation)?;
    let opts = SimulationOptions {
        omega: a.omega,
        t_max: a.t_max,
        x_min: a.x_min,
        x_max: a.x_max,
        y_min: a.y_min,
        y_max: a.y_max,
        n_x: a.n_x,
        n_y: a.n_y,
        n_t: a.n_t,
        oversample_x: a.oversample_x,
        oversample_t: a.oversample_t,
    };
    let spec = opts.resolve(equation)?;
    let mut data = simulate(&spec)?;
    if a.nsr > 0.0 {
        data = add_noise(&data, NoiseSpec { sigma_nsr: a.nsr, seed: a.seed })?;
    }
    let mut meta = spec.metadata();
    meta.push(kv("nsr", fmt_f64(a.nsr)));
    meta.push(kv("seed", a.seed));
    io::write_dataset(&a.out, &data, &meta)?;
    let mut m: Metadata = vec![kv("command", "simulate"), kv("out", a.out.display())];
    m.extend(meta);
    io::write_manifest(&manifest_path(manifest, &a.out), &m)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn run_identify(a: IdentifyArgs, manifest: &Option<PathBuf>) -> Result<()> {
    let file = io::read_dataset(&a.input)?;
    let dims = file.dataset.grid().spatial_dims();
    let library = LibraryOptions {
        alpha_max: a.alpha_max,
        beta_max: a.beta_max,
        include_constant: Some(a.include_constant),
    }
    .resolve(dims)?;
    let tf = TestFunctionOptions {
        halfwidth_x: a.tf_halfwidth_x,
        halfwidth_t: a.tf_halfwidth_t,
        stride_x: a.tf_stride_x,
        stride_t: a.tf_stride_t,
        order_x: a.tf_order_x,
        order_t: a.tf_order_t,
    };
    let solver = SolverOptions {
        s_max: a.s_max,
        cv_fraction: a.cv_fraction,
        trim_threshold: a.trim,
        max_sp_iters: a.max_sp_iters,
        parsimony_slack: a.slack,
        residual_floor: a.residual_floor,
        seed: a.cv_seed,
    }
    .resolve()?;
    let voting = VotingOptions { rho: a.rho, v: a.v }.resolve()?;
    let method = if a.uniform { Method::Uniform } else { Method::IdentWv };
    let refs = method.references(dims)?;

    let data = if a.nsr > 0.0 {
        add_noise(&file.dataset, NoiseSpec { sigma_nsr: a.nsr, seed: a.seed })?
    } else {
        file.dataset.clone()
    };
    let tfs = TestFunctionGrid::for_library(data.grid(), &library, &tf.config())?;
    let result = identify(&data, &library, &tfs, &refs, &solver, &voting)?;

    let mut config: Metadata = vec![
        kv("command", "identify"),
        kv("in", a.input.display()),
        kv("nsr", fmt_f64(a.nsr)),
        kv("seed", a.seed),
        kv("method", method.as_str()),
        kv("references", refs.iter().map(|r| r.name()).collect::<Vec<_>>().join(",")),
    ];
    config.extend(library_entries(&library));
    config.extend(tf.entries(data.grid(), &library));
    config.extend(solver_entries(&solver));
    config.extend(voting_entries(&voting));

    println!("{}", result.coefficients.format_equation(&library));
    let equation = a.equation.as_deref().or(file.get("equation"));
    let mut summary = Vec::new();
    if let Some(eq) = equation {
        let truth = parse_equation(eq)?.true_coefficients(&library)?;
        let s = score(&truth, &result.coefficients)?;
        println!("tpr={} ppv={} e2={}", s.tpr, s.ppv, fmt_f64(s.e2));
        summary = vec![
            kv("truth", eq),
            kv("tpr", s.tpr),
            kv("ppv", s.ppv),
            kv("e2", fmt_f64(s.e2)),
            kv("empty_recovery", s.empty_recovery),
        ];
    }
    if a.verbose {
        for sub in &result.subresults {
            let res: Vec<String> = sub.diagnostics.holdout_residuals.iter().map(|v| format!("{v:.4e}")).collect();
            eprintln!(
                "  [{}] {} | s*={} holdout=[{}]",
                sub.reference.name(),
                sub.coefficients.format_equation(&library),
                sub.diagnostics.selected_sparsity,
                res.join(", ")
            );
        }
        eprintln!("  H={} residual={:.3e} cond={:.3e}", result.diagnostics.rows, result.diagnostics.relative_residual, result.diagnostics.condition_number);
    }
    let mut with_score = config.clone();
    with_score.extend(summary);
    io::write_text(&a.out, &io::format_result(&result, &library, &with_score))?;
    if let Some(p) = &a.dump_system {
        let sys = identwv_core::assemble(&data, &library, &tfs)?;
        io::write_text(p, &io::format_system(&sys))?;
        config.push(kv("dump_system", p.display()));
    }
    if let Some(p) = &a.dump_indicators {
        io::write_text(p, &io::format_indicators(&result, &tfs))?;
        config.push(kv("dump_indicators", p.display()));
    }
    config.push(kv("out", a.out.display()));
    io::write_manifest(&manifest_path(manifest, &a.out), &config)?;
    Ok(())
}

fn run_bench(a: BenchArgs, manifest: &Option<PathBuf>) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| Error::Io { path: a.config.clone(), source: e })?;
    let cfg = BenchConfig::parse(&text)?;
    let result = run_benchmark(&cfg, a.jobs.max(1))?;
    io::write_text(&a.out_dir.join("trials.csv"), &trials_csv(&result))?;
    io::write_text(&a.out_dir.join("summary.csv"), &summary_csv(&result))?;
    let mut m = result.manifest.clone();
    m.insert(1, kv("config", a.config.display()));
    m.push(kv("jobs", a.jobs));
    m.push(kv("out_dir", a.out_dir.display()));
    let path = manifest.clone().unwrap_or_else(|| a.out_dir.join("manifest.txt"));
    io::write_manifest(&path, &m)?;
    print!("{}", summary_csv(&result));
    Ok(())
}

fn run_plot(a: PlotArgs, manifest: &Option<PathBuf>) -> Result<()> {
    let mut series = Vec::new();
    for (i, p) in a.input.iter().enumerate() {
        let text = std::fs::read_to_string(p).map_err(|e| Error::Io { path: p.clone(), source: e })?;
        let rows = parse_summary_csv(&text)?.into_iter().map(|(_, r)| r).collect();
        let label = a
            .label
            .get(i)
            .cloned()
            .unwrap_or_else(|| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
        series.push(Series { label, rows });
    }
    io::write_text(&a.out, &render_svg(&series)?)?;
    let mut m: Metadata = vec![kv("command", "plot"), kv("out", a.out.display())];
    for (i, s) in series.iter().enumerate() {
        m.push((format!("in.{i}"), a.input[i].display().to_string()));
        m.push((format!("label.{i}"), s.label.clone()));
    }
    io::write_manifest(&manifest_path(manifest, &a.out), &m)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => run_simulate(a, &cli.manifest),
        Command::Identify(a) => run_identify(a, &cli.manifest),
        Command::Bench(a) => run_bench(a, &cli.manifest),
        Command::Plot(a) => run_plot(a, &cli.manifest),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
