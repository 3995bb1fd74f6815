//! The three-step run: OLS screening, boosted-tree fit, importance scoring.
//!
//! Every artifact is a pure function of the input bytes and the config, so
//! two runs agree byte for byte apart from the `timings` field of the
//! manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use relimp_core::{
    dominance_analysis, fit_gbm, ols_fit, partial_dependence, permutation_importance, r_squared,
    relative_weights, selection_frequency, significant_features, split_importance, usefulness_all,
    Dataset, DatasetError, DominanceResult, EconometricsError, GbmConfig, GbmError, GbmModel,
    ImportanceError, ImportanceMethod, ImportanceReport, Metric, PdpCurve, PdpError,
    RegressionSummary, RelativeWeightsResult,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::io::{self, format_value, IoError};
use crate::svg;

/// Relative tolerance defining the point where the training MSE flatlines.
pub const FLATLINE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("step 1: {0}")]
    Econometrics(#[from] EconometricsError),
    #[error("step 2: {0}")]
    Gbm(#[from] GbmError),
    #[error("step 3: {0}")]
    Importance(#[from] ImportanceError),
    #[error("step 3: {0}")]
    Pdp(#[from] PdpError),
    #[error("no predictor is significant at alpha = {alpha}")]
    NoSignificantFeatures { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationConfig {
    pub metric: Metric,
    pub n_shuffles: usize,
    pub seed: u64,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        PermutationConfig { metric: Metric::Mse, n_shuffles: 10, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input_path: PathBuf,
    pub response_name: String,
    pub alpha: f64,
    pub skip_step1: bool,
    pub gbm: GbmConfig,
    pub permutation: PermutationConfig,
    pub pdp_grid_size: usize,
    pub standardize: bool,
    /// Not echoed into the manifest: the destination does not affect results.
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub pdp_panel: bool,
}

impl PipelineConfig {
    pub fn new(input_path: impl Into<PathBuf>, response_name: impl Into<String>, output_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            input_path: input_path.into(),
            response_name: response_name.into(),
            alpha: 0.05,
            skip_step1: false,
            gbm: GbmConfig::default(),
            permutation: PermutationConfig::default(),
            pdp_grid_size: 100,
            standardize: false,
            output_dir: output_dir.into(),
            pdp_panel: true,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !self.skip_step1 && !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(EconometricsError::InvalidAlpha(self.alpha).into());
        }
        self.gbm.validate()?;
        if self.permutation.n_shuffles == 0 {
            return Err(ImportanceError::NoShuffles.into());
        }
        if self.pdp_grid_size < 2 {
            return Err(PdpError::InvalidGridSize.into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub sha256: String,
    pub n_rows: usize,
    pub n_columns: usize,
    pub missing_cells: usize,
}

impl DatasetFingerprint {
    pub fn of(bytes: &[u8], dataset: &Dataset) -> Self {
        let digest = Sha256::digest(bytes);
        DatasetFingerprint {
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            n_rows: dataset.n_rows(),
            n_columns: dataset.n_cols(),
            missing_cells: (0..dataset.n_cols())
                .map(|c| dataset.column(c).iter().filter(|v| v.is_none()).count())
                .sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step1Row {
    pub feature: String,
    pub coefficient: f64,
    pub p_value: f64,
    pub beta_weight: f64,
    pub zero_order_r: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step1Outcome {
    pub skipped: bool,
    pub alpha: Option<f64>,
    /// Empty when the regression could not be fitted.
    pub table: Vec<Step1Row>,
    pub r_squared: Option<f64>,
    pub selected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step2Outcome {
    pub r_squared: f64,
    pub initial_mse: f64,
    pub final_mse: f64,
    pub flatline_iteration: Option<usize>,
    pub flatline_tolerance: f64,
    pub n_splits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedScore {
    pub feature: String,
    pub raw: f64,
    pub scaled: f64,
    pub rank: usize,
}

/// An importance report with scores sorted by scaled value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceTable {
    pub method: ImportanceMethod,
    pub metric: Option<Metric>,
    pub n_shuffles: Option<usize>,
    pub seed: Option<u64>,
    pub scores: Vec<RankedScore>,
}

impl From<&ImportanceReport> for ImportanceTable {
    fn from(r: &ImportanceReport) -> Self {
        ImportanceTable {
            method: r.method,
            metric: r.metric,
            n_shuffles: r.n_shuffles,
            seed: r.seed,
            scores: r
                .ranked()
                .into_iter()
                .map(|(rank, s)| RankedScore { feature: s.feature.clone(), raw: s.raw, scaled: s.scaled, rank })
                .collect(),
        }
    }
}

impl ImportanceTable {
    pub fn score(&self, feature: &str) -> Option<&RankedScore> {
        self.scores.iter().find(|s| s.feature == feature)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step3Outcome {
    /// Split-based methods are absent when the ensemble never split.
    pub no_splits: bool,
    pub importance: Vec<ImportanceTable>,
    pub pdp_features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub format: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTiming {
    pub step: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: PipelineConfig,
    pub dataset: DatasetFingerprint,
    pub step1: Step1Outcome,
    pub step2: Step2Outcome,
    pub step3: Step3Outcome,
    /// Econometric baselines that could not be computed, with the reason.
    pub baseline_failures: Vec<String>,
    pub outputs: Vec<OutputFile>,
    /// Wall-clock durations; the only non-reproducible field.
    pub timings: Vec<StepTiming>,
}

impl RunManifest {
    pub fn importance(&self, method: ImportanceMethod) -> Option<&ImportanceTable> {
        self.step3.importance.iter().find(|t| t.method == method)
    }
}

/// Replaces characters that are unsafe in file names.
pub fn pdp_file_name(feature: &str) -> String {
    let safe: String = feature
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("pdp_{safe}.csv")
}

struct Writer<'a> {
    dir: &'a Path,
    outputs: Vec<OutputFile>,
}

impl Writer<'_> {
    fn write(&mut self, file: &str, format: &str, description: &str, contents: &str) -> Result<(), IoError> {
        io::write_file(&self.dir.join(file), contents.as_bytes())?;
        self.outputs.push(OutputFile { file: file.into(), format: format.into(), description: description.into() });
        Ok(())
    }
}

struct Timer(Vec<StepTiming>);

impl Timer {
    fn time<T>(&mut self, step: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.push(StepTiming { step: step.into(), seconds: start.elapsed().as_secs_f64() });
        out
    }
}

/// Loads the input named in `config`, applying standardization if asked.
pub fn load_input(config: &PipelineConfig) -> Result<(Vec<u8>, Dataset), PipelineError> {
    let bytes = std::fs::read(&config.input_path)
        .map_err(|source| IoError::File { path: config.input_path.clone(), source })?;
    let text = String::from_utf8_lossy(&bytes);
    let mut dataset = io::parse_csv(&text, &config.response_name, &config.input_path)?;
    if config.standardize {
        dataset = dataset.standardize(false)?;
    }
    Ok((bytes, dataset))
}

/// Runs all three steps and writes every artifact into `config.output_dir`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunManifest, PipelineError> {
    config.validate()?;
    let mut timer = Timer(Vec::new());
    let (bytes, dataset) = timer.time("load", || load_input(config))?;
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|source| IoError::File { path: config.output_dir.clone(), source })?;
    let mut out = Writer { dir: &config.output_dir, outputs: Vec::new() };
    let mut baseline_failures = Vec::new();

    // Step 1: screening regression on every predictor.
    let regression = timer.time("step1_regression", || ols_fit(&dataset));
    let step1 = match (&regression, config.skip_step1) {
        (Err(e), false) => return Err(e.clone().into()),
        (Err(e), true) => {
            baseline_failures.push(format!("regression: {e}"));
            Step1Outcome {
                skipped: true,
                alpha: None,
                table: Vec::new(),
                r_squared: None,
                selected: dataset.predictor_names(),
            }
        }
        (Ok(summary), skipped) => {
            let selected = if skipped {
                dataset.predictor_names()
            } else {
                significant_features(summary, config.alpha)?
            };
            Step1Outcome {
                skipped,
                alpha: (!skipped).then_some(config.alpha),
                table: summary
                    .coefficients
                    .iter()
                    .map(|c| Step1Row {
                        feature: c.feature.clone(),
                        coefficient: c.coefficient,
                        p_value: c.p_value,
                        beta_weight: c.beta_weight,
                        zero_order_r: c.zero_order_r,
                        selected: selected.contains(&c.feature),
                    })
                    .collect(),
                r_squared: Some(summary.r_squared),
                selected,
            }
        }
    };
    if step1.selected.is_empty() {
        return Err(PipelineError::NoSignificantFeatures { alpha: config.alpha });
    }
    if let Ok(summary) = &regression {
        out.write("regression.json", "json", "step 1 OLS fit on all predictors", &io::to_json_pretty(summary))?;
    }

    let working = dataset.select_predictors(&step1.selected)?;
    let baselines = timer.time("baselines", || Baselines::compute(&working, &mut baseline_failures));
    if let Some(d) = &baselines.dominance {
        out.write("dominance.json", "json", "general dominance weights", &io::to_json_pretty(d))?;
    }
    if let Some(r) = &baselines.relative_weights {
        out.write("relative_weights.json", "json", "relative weights", &io::to_json_pretty(r))?;
    }
    out.write("baselines.csv", "csv", "econometric baselines per feature", &baselines.to_csv(&step1.selected))?;

    // Step 2: exploratory boosted-tree model on the surviving predictors.
    let model = timer.time("step2_fit", || fit_gbm(&working, &config.gbm))?;
    let step2 = Step2Outcome {
        r_squared: r_squared(&model, &working)?,
        initial_mse: model.mse_trace.first().map_or(f64::NAN, |p| p.mse),
        final_mse: model.final_mse(),
        flatline_iteration: model.flatline_iteration(FLATLINE_TOLERANCE),
        flatline_tolerance: FLATLINE_TOLERANCE,
        n_splits: model.trees.iter().map(|t| t.splits().count()).sum(),
    };
    out.write("model.json", "json", "fitted boosted-tree ensemble", &io::model_json(&model))?;
    out.write("mse_trace.csv", "csv", "training MSE by iteration", &mse_trace_csv(&model))?;

    // Step 3: importance scores and partial dependence.
    let reports = timer.time("step3_importance", || importance_reports(&model, &working, &config.permutation))?;
    let tables: Vec<ImportanceTable> = reports.iter().map(ImportanceTable::from).collect();
    out.write("importance.json", "json", "importance reports by method", &io::to_json_pretty(&tables))?;
    out.write("importance.csv", "csv", "importance reports by method", &importance_csv(&tables))?;

    let curves = timer.time("step3_pdp", || {
        step1
            .selected
            .iter()
            .map(|f| partial_dependence(&model, &working, f, config.pdp_grid_size))
            .collect::<Result<Vec<_>, _>>()
    })?;
    for c in &curves {
        let name = pdp_file_name(&c.feature);
        out.write(&name, "csv", &format!("centered partial dependence of {}", c.feature), &pdp_csv(c))?;
    }
    if config.pdp_panel {
        out.write("pdp_panel.svg", "svg", "partial dependence panel", &svg::pdp_panel(&curves))?;
    }

    let step3 = Step3Outcome {
        no_splits: step2.n_splits == 0,
        importance: tables,
        pdp_features: curves.iter().map(|c| c.feature.clone()).collect(),
    };
    let mut manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        dataset: DatasetFingerprint::of(&bytes, &dataset),
        step1,
        step2,
        step3,
        baseline_failures,
        outputs: Vec::new(),
        timings: Vec::new(),
    };
    let report = crate::report::emit_report(&manifest);
    out.write("report.txt", "text", "human-readable summary", &report)?;
    out.outputs.push(OutputFile {
        file: "manifest.json".into(),
        format: "json".into(),
        description: "run manifest".into(),
    });
    manifest.outputs = out.outputs;
    manifest.timings = timer.0;
    io::write_file(&config.output_dir.join("manifest.json"), io::to_json_pretty(&manifest).as_bytes())?;
    Ok(manifest)
}

/// Frequency, split and permutation reports. Split-based reports are
/// omitted when the model has no splits.
pub fn importance_reports(
    model: &GbmModel,
    dataset: &Dataset,
    permutation: &PermutationConfig,
) -> Result<Vec<ImportanceReport>, PipelineError> {
    let mut reports = Vec::new();
    for method in [selection_frequency, split_importance] {
        match method(model) {
            Ok(r) => reports.push(r),
            Err(ImportanceError::NoSplitsInModel) => {}
            Err(e) => return Err(e.into()),
        }
    }
    reports.push(permutation_importance(
        model,
        dataset,
        permutation.metric,
        permutation.n_shuffles,
        permutation.seed,
    )?);
    Ok(reports)
}

/// Econometric comparison measures on the surviving predictors.
pub struct Baselines {
    pub regression: Option<RegressionSummary>,
    pub usefulness: Option<Vec<f64>>,
    pub dominance: Option<DominanceResult>,
    pub relative_weights: Option<RelativeWeightsResult>,
}

impl Baselines {
    pub fn compute(dataset: &Dataset, failures: &mut Vec<String>) -> Self {
        fn keep<T>(failures: &mut Vec<String>, label: &str, r: Result<T, EconometricsError>) -> Option<T> {
            r.map_err(|e| failures.push(format!("{label}: {e}"))).ok()
        }
        Baselines {
            regression: keep(failures, "beta weights", ols_fit(dataset)),
            usefulness: keep(failures, "usefulness", usefulness_all(dataset)),
            dominance: keep(failures, "dominance", dominance_analysis(dataset)),
            relative_weights: keep(failures, "relative weights", relative_weights(dataset)),
        }
    }

    pub fn to_csv(&self, features: &[String]) -> String {
        let header =
            ["feature", "beta_weight", "zero_order_r", "usefulness", "general_dominance", "relative_weight"];
        let rows = features.iter().enumerate().map(|(j, f)| {
            let row = self.regression.as_ref().and_then(|s| s.row(f));
            vec![
                f.clone(),
                format_value(row.map(|r| r.beta_weight)),
                format_value(row.map(|r| r.zero_order_r)),
                format_value(self.usefulness.as_ref().map(|u| u[j])),
                format_value(self.dominance.as_ref().and_then(|d| d.of(f))),
                format_value(self.relative_weights.as_ref().and_then(|r| r.of(f))),
            ]
        });
        io::csv_string(&header, rows)
    }
}

pub fn mse_trace_csv(model: &GbmModel) -> String {
    io::csv_string(
        &["iteration", "mse"],
        model.mse_trace.iter().map(|p| [p.iteration.to_string(), format_value(Some(p.mse))]),
    )
}

pub fn importance_csv(tables: &[ImportanceTable]) -> String {
    let rows = tables.iter().flat_map(|t| {
        t.scores.iter().map(move |s| {
            [
                t.method.as_str().to_owned(),
                s.feature.clone(),
                format_value(Some(s.raw)),
                format_value(Some(s.scaled)),
                s.rank.to_string(),
            ]
        })
    });
    io::csv_string(&["method", "feature", "raw", "scaled", "rank"], rows)
}

pub fn pdp_csv(curve: &PdpCurve) -> String {
    io::csv_string(
        &["grid_value", "centered_dependence"],
        curve.grid.iter().zip(&curve.values).map(|(g, v)| [format_value(Some(*g)), format_value(Some(*v))]),
    )
}
