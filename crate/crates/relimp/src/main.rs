use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use relimp::io;
use relimp::pipeline::{self, PermutationConfig, PipelineConfig, RunManifest};
use relimp_core::{
    dominance_analysis, fit_gbm, ols_fit, partial_dependence, r_squared, relative_weights,
    significant_features, usefulness_all, Dataset, GbmConfig, GbmModel, Metric,
};

#[derive(Parser)]
#[command(name = "relimp", version, about = "Relative importance analysis: OLS screening, boosted regression trees, importance scores")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate a CSV file and print column summaries.
    LoadCheck(DataArgs),
    /// OLS regression with significance tests, beta weights and usefulness.
    Regress(EconArgs),
    /// General dominance weights.
    Dominance(EconArgs),
    /// Relative weights.
    Relweights(EconArgs),
    /// Fit the boosted-tree model; writes model.json and mse_trace.csv.
    Fit(FitArgs),
    /// Frequency, split and permutation importance.
    Importance(ModelArgs),
    /// Centered partial dependence curves for every predictor.
    Pdp(ModelArgs),
    /// Full three-step pipeline.
    Run(RunArgs),
    /// Print the report of a completed run.
    Report(ReportArgs),
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    response: String,
    /// Rescale predictors to mean 0 and unit sample standard deviation.
    #[arg(long)]
    standardize: bool,
}

#[derive(Args)]
struct EconArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Write the result as JSON into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GbmArgs {
    #[arg(long, default_value_t = 50_000)]
    trees: usize,
    #[arg(long, default_value_t = 0.0001)]
    learn_rate: f64,
    #[arg(long, default_value_t = 0.95)]
    subsample: f64,
    #[arg(long, default_value_t = 6)]
    max_leaves: usize,
    #[arg(long, default_value_t = 3)]
    min_leaf: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl GbmArgs {
    fn config(&self) -> GbmConfig {
        GbmConfig {
            n_trees: self.trees,
            learn_rate: self.learn_rate,
            subsample_fraction: self.subsample,
            max_leaves: self.max_leaves,
            min_obs_leaf: self.min_leaf,
            seed: self.seed,
            ..GbmConfig::default()
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    gbm: GbmArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Mse,
    Rmse,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Mse => Metric::Mse,
            MetricArg::Rmse => Metric::Rmse,
        }
    }
}

#[derive(Args)]
struct ScoringArgs {
    #[arg(long, value_enum, default_value_t = MetricArg::Mse)]
    metric: MetricArg,
    #[arg(long, default_value_t = 10)]
    shuffles: usize,
    #[arg(long, default_value_t = 100)]
    pdp_grid: usize,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    gbm: GbmArgs,
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Use a saved model instead of fitting one.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Keep every predictor instead of screening by p-value.
    #[arg(long)]
    skip_step1: bool,
    #[command(flatten)]
    gbm: GbmArgs,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory of a completed run.
    #[arg(long)]
    out: PathBuf,
}

fn load(args: &DataArgs) -> Result<Dataset> {
    let d = io::load_csv(&args.input, &args.response)?;
    Ok(if args.standardize { d.standardize(false)? } else { d })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(dir: &Path, file: &str, contents: &str) -> Result<()> {
    ensure_dir(dir)?;
    let path = dir.join(file);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_check(args: &DataArgs) -> Result<()> {
    let d = load(args)?;
    println!("rows: {}, columns: {}, response: {}", d.n_rows(), d.n_cols(), d.response_name());
    if let Some(labels) = d.row_labels() {
        println!("periods: {} .. {}", labels[0], labels[labels.len() - 1]);
    }
    println!("{:<14} {:>6} {:>8} {:>12} {:>12} {:>12} {:>12}", "column", "count", "missing", "mean", "std_dev", "min", "max");
    for (c, name) in d.column_names().iter().enumerate() {
        match d.column_stats(c) {
            Some(s) => println!(
                "{:<14} {:>6} {:>8} {:>12.4} {:>12.4} {:>12.4} {:>12.4}",
                name, s.count, s.missing_count, s.mean, s.std_dev, s.min, s.max
            ),
            None => println!("{name:<14} {:>6} {:>8}", 0, d.n_rows()),
        }
    }
    Ok(())
}

fn regress(args: &EconArgs) -> Result<()> {
    let d = load(&args.data)?;
    let s = ols_fit(&d)?;
    let kept = significant_features(&s, args.alpha)?;
    let useful = usefulness_all(&d)?;
    println!(
        "{} on {} predictors: n = {} ({} rows dropped), R-squared = {:.4}, residual SE = {:.4}",
        s.response,
        s.coefficients.len(),
        s.n_used,
        s.dropped_rows.len(),
        s.r_squared,
        s.residual_std_error
    );
    println!("{:<14} {:>12} {:>10} {:>8} {:>10} {:>8} {:>8} {:>10}", "feature", "coefficient", "std_err", "t", "p", "beta", "r", "useful");
    println!("{:<14} {:>12.5} {:>10.5}", "(intercept)", s.intercept, s.intercept_std_error);
    for (c, u) in s.coefficients.iter().zip(&useful) {
        println!(
            "{:<14} {:>12.5} {:>10.5} {:>8.3} {:>10.4} {:>8.4} {:>8.4} {:>10.5}{}",
            c.feature, c.coefficient, c.std_error, c.t_stat, c.p_value, c.beta_weight, c.zero_order_r, u,
            if kept.contains(&c.feature) { "  *" } else { "" }
        );
    }
    println!("* p < {}", args.alpha);
    if let Some(dir) = &args.out {
        write(dir, "regression.json", &io::to_json_pretty(&s))?;
    }
    Ok(())
}

fn dominance(args: &EconArgs) -> Result<()> {
    let d = load(&args.data)?;
    let r = dominance_analysis(&d)?;
    println!("general dominance over {} submodels (full R-squared {:.4})", r.n_submodels, r.full_r_squared);
    for (f, w) in r.features.iter().zip(&r.general_dominance) {
        println!("{f:<14} {w:>10.5}");
    }
    if let Some(dir) = &args.out {
        write(dir, "dominance.json", &io::to_json_pretty(&r))?;
    }
    Ok(())
}

fn relweights(args: &EconArgs) -> Result<()> {
    let d = load(&args.data)?;
    let r = relative_weights(&d)?;
    println!("relative weights (R-squared {:.4})", r.r_squared);
    for (f, w) in r.features.iter().zip(&r.epsilons) {
        println!("{f:<14} {w:>10.5}");
    }
    if let Some(dir) = &args.out {
        write(dir, "relative_weights.json", &io::to_json_pretty(&r))?;
    }
    Ok(())
}

fn print_fit(model: &GbmModel, d: &Dataset) -> Result<()> {
    println!(
        "{} trees: training R-squared {:.4}, MSE {:.6} -> {:.6}",
        model.trees.len(),
        r_squared(model, d)?,
        model.mse_trace.first().map_or(f64::NAN, |p| p.mse),
        model.final_mse()
    );
    Ok(())
}

fn fit(args: &FitArgs) -> Result<()> {
    let d = load(&args.data)?;
    let model = fit_gbm(&d, &args.gbm.config())?;
    print_fit(&model, &d)?;
    write(&args.out, "model.json", &io::model_json(&model))?;
    write(&args.out, "mse_trace.csv", &pipeline::mse_trace_csv(&model))
}

fn model_for(args: &ModelArgs, d: &Dataset) -> Result<GbmModel> {
    let model = match &args.model {
        Some(path) => io::load_model(path)?,
        None => fit_gbm(d, &args.gbm.config())?,
    };
    print_fit(&model, d)?;
    Ok(model)
}

fn importance(args: &ModelArgs) -> Result<()> {
    let d = load(&args.data)?;
    let model = model_for(args, &d)?;
    let permutation = PermutationConfig {
        metric: args.scoring.metric.into(),
        n_shuffles: args.scoring.shuffles,
        seed: args.gbm.seed,
    };
    let reports = pipeline::importance_reports(&model, &d, &permutation)?;
    let tables: Vec<pipeline::ImportanceTable> = reports.iter().map(Into::into).collect();
    if tables.len() < 3 {
        println!("no splits: split-based importance is undefined for this model");
    }
    for t in &tables {
        println!("{} importance", t.method.as_str());
        for s in &t.scores {
            println!("  {:>2}  {:<14} {:>7.2}  (raw {})", s.rank, s.feature, s.scaled, s.raw);
        }
    }
    if let Some(dir) = &args.out {
        write(dir, "importance.json", &io::to_json_pretty(&tables))?;
        write(dir, "importance.csv", &pipeline::importance_csv(&tables))?;
    }
    Ok(())
}

fn pdp(args: &ModelArgs) -> Result<()> {
    let d = load(&args.data)?;
    let model = model_for(args, &d)?;
    let curves = model
        .feature_names
        .iter()
        .map(|f| partial_dependence(&model, &d, f, args.scoring.pdp_grid))
        .collect::<Result<Vec<_>, _>>()?;
    for c in &curves {
        let (lo, hi) = c.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        println!("{:<14} {:>4} grid points, range {:.4} .. {:.4}", c.feature, c.grid.len(), lo, hi);
    }
    if let Some(dir) = &args.out {
        for c in &curves {
            write(dir, &pipeline::pdp_file_name(&c.feature), &pipeline::pdp_csv(c))?;
        }
        write(dir, "pdp_panel.svg", &relimp::svg::pdp_panel(&curves))?;
    }
    Ok(())
}

fn run(args: &RunArgs) -> Result<()> {
    let config = PipelineConfig {
        alpha: args.alpha,
        skip_step1: args.skip_step1,
        gbm: args.gbm.config(),
        permutation: PermutationConfig {
            metric: args.scoring.metric.into(),
            n_shuffles: args.scoring.shuffles,
            seed: args.gbm.seed,
        },
        pdp_grid_size: args.scoring.pdp_grid,
        standardize: args.data.standardize,
        ..PipelineConfig::new(&args.data.input, &args.data.response, &args.out)
    };
    let manifest = pipeline::run_pipeline(&config)?;
    print!("{}", relimp::emit_report(&manifest));
    println!("\n{} files written to {}", manifest.outputs.len(), args.out.display());
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let path = args.out.join("manifest.json");
    let manifest: RunManifest = io::read_json(&path)?;
    if manifest.tool != env!("CARGO_PKG_NAME") {
        bail!("{} was not written by this tool", path.display());
    }
    print!("{}", relimp::emit_report(&manifest));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::LoadCheck(a) => load_check(a),
        Command::Regress(a) => regress(a),
        Command::Dominance(a) => dominance(a),
        Command::Relweights(a) => relweights(a),
        Command::Fit(a) => fit(a),
        Command::Importance(a) => importance(a),
        Command::Pdp(a) => pdp(a),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
