//! Plain-text run summary.

use std::fmt::Write;

use relimp_core::ImportanceMethod;

use crate::pipeline::{ImportanceTable, RunManifest};

const METHODS: [(ImportanceMethod, &str); 3] = [
    (ImportanceMethod::Frequency, "Selection frequency"),
    (ImportanceMethod::Split, "Split importance"),
    (ImportanceMethod::Permutation, "Permutation importance"),
];

/// Renders the Step-1 table, Step-2 fit statistics and the three importance
/// rankings side by side. Wall-clock timings are not included.
pub fn emit_report(manifest: &RunManifest) -> String {
    let mut s = String::new();
    let cfg = &manifest.config;
    let _ = writeln!(s, "{} {} relative importance report", manifest.tool, manifest.version);
    let _ = writeln!(s, "input: {} (sha256 {})", cfg.input_path.display(), manifest.dataset.sha256);
    let _ = writeln!(
        s,
        "rows: {}, columns: {}, missing cells: {}, response: {}{}",
        manifest.dataset.n_rows,
        manifest.dataset.n_columns,
        manifest.dataset.missing_cells,
        cfg.response_name,
        if cfg.standardize { ", predictors standardized" } else { "" }
    );

    let _ = writeln!(s, "\nStep 1: significance screening");
    let step1 = &manifest.step1;
    match step1.alpha {
        None => {
            let _ = writeln!(s, "  skipped (variables supplied a priori)");
        }
        Some(alpha) => {
            let _ = writeln!(s, "  alpha = {alpha}, individual coefficient t-tests");
        }
    }
    if step1.table.is_empty() {
        let _ = writeln!(s, "  regression unavailable");
    } else {
        let width = name_width(step1.table.iter().map(|r| r.feature.as_str()));
        let _ = writeln!(
            s,
            "  {:<width$}  {:>12}  {:>10}  {:>9}  {:>9}  {}",
            "feature", "coefficient", "p", "beta", "r", "kept"
        );
        for r in &step1.table {
            let _ = writeln!(
                s,
                "  {:<width$}  {:>12.5}  {:>10.4}  {:>9.4}  {:>9.4}  {}",
                r.feature,
                r.coefficient,
                r.p_value,
                r.beta_weight,
                r.zero_order_r,
                if r.selected { "yes" } else { "no" }
            );
        }
        if let Some(r2) = step1.r_squared {
            let _ = writeln!(s, "  OLS R-squared: {r2:.4}");
        }
    }
    for failure in &manifest.baseline_failures {
        let _ = writeln!(s, "  note: {failure}");
    }

    let step2 = &manifest.step2;
    let g = &cfg.gbm;
    let _ = writeln!(s, "\nStep 2: boosted regression trees");
    let _ = writeln!(
        s,
        "  trees {}, learn rate {}, subsample {}, max leaves {}, min leaf {}, seed {}",
        g.n_trees, g.learn_rate, g.subsample_fraction, g.max_leaves, g.min_obs_leaf, g.seed
    );
    let _ = writeln!(s, "  training R-squared: {:.4}", step2.r_squared);
    let _ = writeln!(s, "  training MSE: {:.6} -> {:.6}", step2.initial_mse, step2.final_mse);
    match step2.flatline_iteration {
        Some(it) => {
            let _ = writeln!(
                s,
                "  MSE within {}% of final from iteration {it}",
                step2.flatline_tolerance * 100.0
            );
        }
        None => {
            let _ = writeln!(s, "  MSE never settles within {}% of final", step2.flatline_tolerance * 100.0);
        }
    }

    let _ = writeln!(s, "\nStep 3: relative importance (scaled 0-100)");
    if manifest.step3.no_splits {
        let _ = writeln!(
            s,
            "  no splits: the ensemble never split, so split-based importance is undefined"
        );
    }
    let tables: Vec<(&str, &ImportanceTable)> = METHODS
        .iter()
        .filter_map(|(m, label)| manifest.importance(*m).map(|t| (*label, t)))
        .collect();
    write_side_by_side(&mut s, &tables);
    if let Some(p) = manifest.importance(ImportanceMethod::Permutation) {
        let _ = writeln!(
            s,
            "  permutation: metric {}, {} shuffles, seed {}",
            p.metric.map_or("-", |m| m.as_str()),
            p.n_shuffles.unwrap_or(0),
            p.seed.unwrap_or(0)
        );
    }
    if !manifest.step3.pdp_features.is_empty() {
        let _ = writeln!(s, "  partial dependence: {}", manifest.step3.pdp_features.join(", "));
    }
    s
}

fn name_width<'a>(names: impl Iterator<Item = &'a str>) -> usize {
    names.map(str::len).max().unwrap_or(0).max(7)
}

fn write_side_by_side(s: &mut String, tables: &[(&str, &ImportanceTable)]) {
    let width = name_width(tables.iter().flat_map(|(_, t)| t.scores.iter().map(|r| r.feature.as_str())));
    let col = (width + 10).max(24);
    let _ = write!(s, "  {:>4}", "rank");
    for (label, _) in tables {
        let _ = write!(s, "  {label:<col$}");
    }
    trim_line_end(s);
    let rows = tables.iter().map(|(_, t)| t.scores.len()).max().unwrap_or(0);
    for i in 0..rows {
        let _ = write!(s, "  {:>4}", i + 1);
        for (_, t) in tables {
            let cell = t
                .scores
                .get(i)
                .map(|r| format!("{:<width$} {:>6.1} ({})", r.feature, r.scaled, r.rank))
                .unwrap_or_default();
            let _ = write!(s, "  {cell:<col$}");
        }
        trim_line_end(s);
    }
}

fn trim_line_end(s: &mut String) {
    let trimmed = s.trim_end_matches(' ').len();
    s.truncate(trimmed);
    s.push('\n');
}
