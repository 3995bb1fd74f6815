//! Partial dependence panel: one subplot per feature on a shared vertical
//! scale so curve amplitudes compare directly.

use std::fmt::Write;

use relimp_core::PdpCurve;

const CELL_W: f64 = 240.0;
const CELL_H: f64 = 180.0;
const PAD_L: f64 = 52.0;
const PAD_R: f64 = 12.0;
const PAD_T: f64 = 26.0;
const PAD_B: f64 = 30.0;
const MAX_COLUMNS: usize = 4;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Shortest label that still distinguishes typical axis values.
fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

pub fn pdp_panel(curves: &[PdpCurve]) -> String {
    let columns = curves.len().clamp(1, MAX_COLUMNS);
    let rows = curves.len().div_ceil(columns).max(1);
    let (width, height) = (columns as f64 * CELL_W, rows as f64 * CELL_H);

    let all = curves.iter().flat_map(|c| c.values.iter().copied());
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(lo < hi) {
        let mid = if lo.is_finite() { lo } else { 0.0 };
        (lo, hi) = (mid - 1.0, mid + 1.0);
    }

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    for (i, c) in curves.iter().enumerate() {
        let x0 = (i % columns) as f64 * CELL_W + PAD_L;
        let y0 = (i / columns) as f64 * CELL_H + PAD_T;
        let (w, h) = (CELL_W - PAD_L - PAD_R, CELL_H - PAD_T - PAD_B);
        let (gmin, gmax) = (c.grid[0], c.grid[c.grid.len() - 1]);
        let span = if gmax > gmin { gmax - gmin } else { 1.0 };
        let px = |g: f64| x0 + (g - gmin) / span * w;
        let py = |v: f64| y0 + (hi - v) / (hi - lo) * h;

        let _ = writeln!(s, r#"<g>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-weight="bold">{}</text>"#,
            x0 + w / 2.0,
            y0 - 8.0,
            escape(&c.feature)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{x0:.2}" y="{y0:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="#888"/>"##
        );
        if lo < 0.0 && hi > 0.0 {
            let z = py(0.0);
            let _ = writeln!(
                s,
                r##"<line x1="{x0:.2}" y1="{z:.2}" x2="{:.2}" y2="{z:.2}" stroke="#ccc" stroke-dasharray="3,3"/>"##,
                x0 + w
            );
        }
        for (v, anchor_y) in [(hi, y0 + 4.0), (lo, y0 + h)] {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{anchor_y:.2}" text-anchor="end">{}</text>"#,
                x0 - 4.0,
                tick(v)
            );
        }
        for (g, anchor) in [(gmin, "start"), (gmax, "end")] {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{}</text>"#,
                px(g),
                y0 + h + 14.0,
                tick(g)
            );
        }
        let points: Vec<String> = c
            .grid
            .iter()
            .zip(&c.values)
            .map(|(&g, &v)| format!("{:.2},{:.2}", px(g), py(v)))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#1f5fa8" stroke-width="1.5"/>"##,
            points.join(" ")
        );
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(name: &str, values: Vec<f64>) -> PdpCurve {
        PdpCurve {
            feature: name.into(),
            grid: (0..values.len()).map(|i| i as f64).collect(),
            n_records_averaged: 3,
            values,
        }
    }

    #[test]
    fn shared_scale_and_escaping() {
        let svg = pdp_panel(&[curve("a<b", vec![-1.0, 0.0, 1.0]), curve("c", vec![0.0, 0.0, 0.0])]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        // Flat curve sits on the shared zero line, mid-height of its cell.
        let mid = PAD_T + (CELL_H - PAD_T - PAD_B) / 2.0;
        assert!(svg.contains(&format!("{:.2},{mid:.2}", PAD_L + CELL_W)));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(pdp_panel(&[]).contains("</svg>"));
        let svg = pdp_panel(&[curve("flat", vec![0.0, 0.0])]);
        assert!(!svg.contains("NaN"));
        assert_eq!(tick(-0.0001), "0");
        assert_eq!(tick(2.5), "2.5");
    }
}
