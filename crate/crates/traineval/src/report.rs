use std::fmt::Write as _;
use std::path::Path;

use crate::error::TrainError;
use crate::metrics::Metrics;
use crate::train::History;

/// One line of the metrics table: which split and model the numbers
/// belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub split: String,
    pub model: String,
    pub metrics: Metrics,
}

pub const METRICS_HEADER: &str = "split,model,mae_flow,rmse_flow,mae_ratio,rmse_ratio,lc_norm";
pub const HISTORY_HEADER: &str = "epoch,l_alpha,l_f,l_c,l_total,val_mae_ratio";

/// Renders metric rows as CSV under [`METRICS_HEADER`].
pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for row in rows {
        let m = &row.metrics;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.split, row.model, m.mae_flow, m.rmse_flow, m.mae_ratio, m.rmse_ratio,
            m.normalized_conservation
        )
        .expect("string writes are infallible");
    }
    out
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<(), TrainError> {
    std::fs::write(path, metrics_csv(rows))?;
    Ok(())
}

/// Renders a training history as CSV under [`HISTORY_HEADER`], one row
/// per epoch.
pub fn history_csv(history: &History) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for (epoch, record) in history.epochs.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            epoch,
            record.l_alpha,
            record.l_flow,
            record.l_conservation,
            record.l_total,
            record.val.mae_ratio
        )
        .expect("string writes are infallible");
    }
    out
}

pub fn write_history_csv(path: &Path, history: &History) -> Result<(), TrainError> {
    std::fs::write(path, history_csv(history))?;
    Ok(())
}

const PLOT_SIZE: f64 = 480.0;
const PLOT_MARGIN: f64 = 56.0;

/// Scatter plot of predicted versus true link flow as a standalone SVG
/// document, with the identity line for reference.
pub fn scatter_svg(points: &[(f64, f64)]) -> String {
    let span = PLOT_SIZE - 2.0 * PLOT_MARGIN;
    let max_value = points
        .iter()
        .flat_map(|&(t, p)| [t, p])
        .fold(0.0_f64, f64::max)
        .max(1e-9)
        * 1.05;
    let to_x = |v: f64| PLOT_MARGIN + v / max_value * span;
    let to_y = |v: f64| PLOT_SIZE - PLOT_MARGIN - v / max_value * span;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_SIZE}" height="{PLOT_SIZE}" viewBox="0 0 {PLOT_SIZE} {PLOT_SIZE}">"#
    )
    .unwrap();
    writeln!(
        out,
        r##"<rect width="{PLOT_SIZE}" height="{PLOT_SIZE}" fill="#ffffff"/>"##
    )
    .unwrap();
    writeln!(
        out,
        r##"<rect x="{m}" y="{m}" width="{span}" height="{span}" fill="none" stroke="#333333"/>"##,
        m = PLOT_MARGIN,
    )
    .unwrap();
    for i in 0..=4 {
        let value = max_value * i as f64 / 4.0;
        let x = to_x(value);
        let y = to_y(value);
        writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{tick}" stroke="#333333"/>"##,
            bottom = PLOT_SIZE - PLOT_MARGIN,
            tick = PLOT_SIZE - PLOT_MARGIN + 5.0,
        )
        .unwrap();
        writeln!(
            out,
            r##"<text x="{x:.2}" y="{label}" font-size="11" text-anchor="middle">{value:.1}</text>"##,
            label = PLOT_SIZE - PLOT_MARGIN + 18.0,
        )
        .unwrap();
        writeln!(
            out,
            r##"<line x1="{left}" y1="{y:.2}" x2="{tick}" y2="{y:.2}" stroke="#333333"/>"##,
            left = PLOT_MARGIN,
            tick = PLOT_MARGIN - 5.0,
        )
        .unwrap();
        writeln!(
            out,
            r##"<text x="{label}" y="{baseline:.2}" font-size="11" text-anchor="end">{value:.1}</text>"##,
            label = PLOT_MARGIN - 8.0,
            baseline = y + 4.0,
        )
        .unwrap();
    }
    writeln!(
        out,
        r##"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}" stroke="#888888" stroke-dasharray="4 3"/>"##,
        x0 = to_x(0.0),
        y0 = to_y(0.0),
        x1 = to_x(max_value / 1.05),
        y1 = to_y(max_value / 1.05),
    )
    .unwrap();
    for &(truth, pred) in points {
        writeln!(
            out,
            r##"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="#1f6fb2" fill-opacity="0.55"/>"##,
            x = to_x(truth),
            y = to_y(pred),
        )
        .unwrap();
    }
    writeln!(
        out,
        r##"<text x="{cx}" y="{by}" font-size="13" text-anchor="middle">true link flow</text>"##,
        cx = PLOT_SIZE / 2.0,
        by = PLOT_SIZE - 14.0,
    )
    .unwrap();
    writeln!(
        out,
        r##"<text x="16" y="{cy}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {cy})">predicted link flow</text>"##,
        cy = PLOT_SIZE / 2.0,
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

pub fn write_scatter_svg(path: &Path, points: &[(f64, f64)]) -> Result<(), TrainError> {
    std::fs::write(path, scatter_svg(points))?;
    Ok(())
}
