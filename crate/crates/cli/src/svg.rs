use std::fmt::Write as _;

use crate::error::{CliError, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

/// Pulls two numeric columns out of CSV text. Under `log_y`, rows with a
/// non-positive y are dropped.
pub fn read_series(csv_text: &str, x: &str, y: &str, log_y: bool) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::config("csv", e.to_string()))?
        .clone();
    let col = |key: &str, name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::config(key, format!("no column named {name:?}")))
    };
    let (xi, yi) = (col("x", x)?, col("y", y)?);
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::config("csv", e.to_string()))?;
        let value = |key: &str, i: usize| -> Result<f64> {
            let cell = record.get(i).unwrap_or("");
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    CliError::config(key, format!("row {}: {cell:?} is not a number", row + 1))
                })
        };
        let (px, py) = (value("x", xi)?, value("y", yi)?);
        if log_y && py <= 0.0 {
            continue;
        }
        points.push((px, if log_y { py.log10() } else { py }));
    }
    if points.is_empty() {
        return Err(CliError::config("csv", "no data rows to plot"));
    }
    Ok(points)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if hi - lo > 0.0 {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Single-series SVG 1.1 line chart. Output depends only on the inputs.
pub fn render(points: &[(f64, f64)], x_label: &str, y_label: &str, log_y: bool) -> String {
    let (x0, x1) = range(points.iter().map(|p| p.0));
    let (y0, y1) = range(points.iter().map(|p| p.1));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT} {TOP} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw
    );
    for k in 0..TICKS {
        let t = k as f64 / (TICKS - 1) as f64;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let ylab = if log_y {
            format!("{:.1e}", 10f64.powf(yv))
        } else {
            tick_label(yv)
        };
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{ylab}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0
        );
    }
    let line: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
        line.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let y_title = if log_y {
        format!("{y_label} (log scale)")
    } else {
        y_label.to_string()
    };
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&y_title)
    );
    s.push_str("</svg>\n");
    s
}

/// Renders columns `x` and `y` of `csv_text` as an SVG line chart.
pub fn emit_svg(csv_text: &str, x: &str, y: &str, log_y: bool) -> Result<String> {
    let points = read_series(csv_text, x, y, log_y)?;
    Ok(render(&points, x, y, log_y))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRACE: &str = "epoch,loss,energy\n1,2.0,-1\n2,0.5,-2\n3,0.0,-3\n";

    fn key_of(e: CliError) -> String {
        match e {
            CliError::Config { key, .. } => key,
            other => panic!("not a config error: {other}"),
        }
    }

    #[test]
    fn output_is_deterministic() {
        let a = emit_svg(TRACE, "epoch", "loss", false).unwrap();
        let b = emit_svg(TRACE, "epoch", "loss", false).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<?xml"));
        assert!(a.contains("<polyline"));
        assert!(a.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn log_axis_skips_non_positive_values() {
        let pts = read_series(TRACE, "epoch", "loss", true).unwrap();
        assert_eq!(pts.len(), 2);
        assert!((pts[1].1 - 0.5f64.log10()).abs() < 1e-15);
    }

    #[test]
    fn missing_column_is_a_config_error() {
        assert_eq!(
            key_of(emit_svg(TRACE, "epoch", "nope", false).unwrap_err()),
            "y"
        );
        assert_eq!(
            key_of(emit_svg(TRACE, "step", "loss", false).unwrap_err()),
            "x"
        );
    }

    #[test]
    fn empty_and_non_numeric_inputs_are_config_errors() {
        assert_eq!(
            key_of(emit_svg("", "epoch", "loss", false).unwrap_err()),
            "x"
        );
        assert_eq!(
            key_of(emit_svg("epoch,loss\n", "epoch", "loss", false).unwrap_err()),
            "csv"
        );
        assert_eq!(
            key_of(emit_svg("epoch,loss\n1,abc\n", "epoch", "loss", false).unwrap_err()),
            "y"
        );
    }

    #[test]
    fn flat_series_still_renders() {
        let svg = emit_svg("a,b\n1,3\n2,3\n", "a", "b", false).unwrap();
        assert!(!svg.contains("NaN"));
    }
}
