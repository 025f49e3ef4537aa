//! Minimal SVG plotting: terminal-profile overlays and space–time heatmap
//! triptychs, written without a plotting dependency so the output is stable
//! and diffable.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::BenchError;

/// One curve in an overlay plot.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
    /// Dashed stroke; used for reference curves such as the target.
    pub dashed: bool,
}

impl Series {
    pub fn solid(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            values,
            dashed: false,
        }
    }

    pub fn dashed(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            values,
            dashed: true,
        }
    }
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 48.0;

fn check_finite(values: &[f64], what: &str) -> Result<(), BenchError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(BenchError::Config(format!(
            "{what} contains a non-finite value, refusing to plot it"
        )));
    }
    Ok(())
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        // flat data: pad so the curve sits mid-panel instead of dividing by zero
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Writes an overlay of curves over a shared abscissa, with a legend and
/// min/max axis labels.
pub fn write_overlay_svg(
    path: &Path,
    title: &str,
    xs: &[f64],
    series: &[Series],
) -> Result<(), BenchError> {
    if xs.len() < 2 {
        return Err(BenchError::Config(
            "an overlay plot needs at least two abscissa points".into(),
        ));
    }
    check_finite(xs, "abscissa")?;
    for s in series {
        if s.values.len() != xs.len() {
            return Err(BenchError::Config(format!(
                "series `{}` has {} points but the abscissa has {}",
                s.label,
                s.values.len(),
                xs.len()
            )));
        }
        check_finite(&s.values, &s.label)?;
    }

    let (x_lo, x_hi) = range(xs.iter().copied());
    let (y_lo, y_hi) = range(series.iter().flat_map(|s| s.values.iter().copied()));
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" \
         text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
    // frame
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>"
    );
    // axis extremes
    for (value, x, y, anchor) in [
        (x_lo, sx(x_lo), HEIGHT - 28.0, "middle"),
        (x_hi, sx(x_hi), HEIGHT - 28.0, "middle"),
        (y_lo, MARGIN_LEFT - 8.0, sy(y_lo) + 4.0, "end"),
        (y_hi, MARGIN_LEFT - 8.0, sy(y_hi) + 4.0, "end"),
    ] {
        let _ = writeln!(
            svg,
            "<text x=\"{x:.1}\" y=\"{y:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"{anchor}\">{value:.3}</text>"
        );
    }

    for (idx, s) in series.iter().enumerate() {
        let color = if s.dashed {
            "#555"
        } else {
            PALETTE[idx % PALETTE.len()]
        };
        let dash = if s.dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        let mut points = String::new();
        for (x, y) in xs.iter().zip(&s.values) {
            let _ = write!(points, "{:.2},{:.2} ", sx(*x), sy(*y));
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{dash}/>",
            points.trim_end()
        );
        // legend swatch + label, stacked inside the top-left of the frame
        let ly = MARGIN_TOP + 16.0 + 18.0 * idx as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" \
             stroke-width=\"1.8\"{dash}/>",
            MARGIN_LEFT + 10.0,
            MARGIN_LEFT + 34.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            MARGIN_LEFT + 40.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");

    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, svg)?;
    Ok(())
}

/// Maps `t` in `[0, 1]` through a dark-blue → teal → yellow ramp.
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let stops = [(68.0, 1.0, 84.0), (33.0, 145.0, 140.0), (253.0, 231.0, 37.0)];
    let (a, b, local) = if t < 0.5 {
        (stops[0], stops[1], t * 2.0)
    } else {
        (stops[1], stops[2], (t - 0.5) * 2.0)
    };
    let r = a.0 + (b.0 - a.0) * local;
    let g = a.1 + (b.1 - a.1) * local;
    let b = a.2 + (b.2 - a.2) * local;
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

/// Rows kept in a heatmap panel; taller fields are strided down to this.
const MAX_HEAT_ROWS: usize = 160;

fn downsample_rows(field: &DMatrix<f64>) -> Vec<usize> {
    let rows = field.nrows();
    let stride = rows.div_ceil(MAX_HEAT_ROWS).max(1);
    (0..rows).step_by(stride).collect()
}

fn heat_panel(
    svg: &mut String,
    field: &DMatrix<f64>,
    rows: &[usize],
    origin_x: f64,
    origin_y: f64,
    panel_w: f64,
    panel_h: f64,
    lo: f64,
    hi: f64,
    label: &str,
) {
    let cols = field.ncols();
    let cell_w = panel_w / cols as f64;
    let cell_h = panel_h / rows.len() as f64;
    let span = if hi - lo < 1e-300 { 1.0 } else { hi - lo };
    for (ri, &row) in rows.iter().enumerate() {
        // rows are time steps; draw early times at the bottom
        let y = origin_y + panel_h - (ri + 1) as f64 * cell_h;
        for col in 0..cols {
            let t = (field[(row, col)] - lo) / span;
            let _ = writeln!(
                svg,
                "<rect x=\"{:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                origin_x + col as f64 * cell_w,
                cell_w + 0.5,
                cell_h + 0.5,
                ramp(t)
            );
        }
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{} [{:.2e}, {:.2e}]</text>",
        origin_x + panel_w / 2.0,
        origin_y - 8.0,
        escape(label),
        lo,
        hi
    );
}

/// Writes three space–time heatmaps side by side: the exact field, the
/// predicted field (on a shared color scale), and their absolute error
/// (on its own scale starting at zero).
pub fn write_heatmap_triptych_svg(
    path: &Path,
    title: &str,
    exact: &DMatrix<f64>,
    predicted: &DMatrix<f64>,
) -> Result<(), BenchError> {
    if exact.shape() != predicted.shape() {
        return Err(BenchError::Config(format!(
            "exact field is {:?} but the prediction is {:?}",
            exact.shape(),
            predicted.shape()
        )));
    }
    if exact.is_empty() {
        return Err(BenchError::Config("cannot plot an empty field".into()));
    }
    check_finite(exact.as_slice(), "exact field")?;
    check_finite(predicted.as_slice(), "predicted field")?;

    let error = (exact - predicted).abs();
    let (lo, hi) = range(exact.iter().chain(predicted.iter()).copied());
    let err_hi = error.max().max(1e-300);
    let rows = downsample_rows(exact);

    let panel_w = 240.0;
    let panel_h = 300.0;
    let gap = 28.0;
    let margin = 32.0;
    let width = margin * 2.0 + panel_w * 3.0 + gap * 2.0;
    let height = margin + 40.0 + panel_h + 28.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" \
         text-anchor=\"middle\">{}</text>",
        width / 2.0,
        escape(title)
    );

    let top = margin + 40.0;
    heat_panel(
        &mut svg, exact, &rows, margin, top, panel_w, panel_h, lo, hi, "exact",
    );
    heat_panel(
        &mut svg,
        predicted,
        &rows,
        margin + panel_w + gap,
        top,
        panel_w,
        panel_h,
        lo,
        hi,
        "predicted",
    );
    heat_panel(
        &mut svg,
        &error,
        &rows,
        margin + (panel_w + gap) * 2.0,
        top,
        panel_w,
        panel_h,
        0.0,
        err_hi,
        "abs error",
    );
    svg.push_str("</svg>\n");

    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_draws_one_polyline_per_series() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("overlay.svg");
        let xs: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let series = vec![
            Series::dashed("target", xs.iter().map(|x| x + 0.5).collect()),
            Series::solid("direct", xs.iter().map(|x| x * x).collect()),
        ];
        write_overlay_svg(&path, "demo", &xs, &series).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert_eq!(text.matches("<polyline").count(), 2);
        assert_eq!(text.matches("stroke-dasharray").count(), 2); // curve + legend swatch
        assert!(text.contains("target"));
    }

    #[test]
    fn overlay_rejects_mismatched_series() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.svg");
        let xs = [0.0, 1.0];
        let series = vec![Series::solid("short", vec![1.0])];
        let err = write_overlay_svg(&path, "demo", &xs, &series).unwrap_err();
        assert!(err.to_string().contains("short"));
        assert!(!path.exists());
    }

    #[test]
    fn triptych_downsamples_tall_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("heat.svg");
        let exact = DMatrix::from_fn(400, 5, |i, j| (i as f64 / 400.0) * (j as f64 + 1.0));
        let predicted = exact.map(|v| v + 0.01);
        write_heatmap_triptych_svg(&path, "field", &exact, &predicted).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        // 400 rows stride to ceil(400/160)=3 → 134 kept rows, 5 columns, 3 panels
        let kept = (0..400usize).step_by(3).count();
        assert_eq!(
            text.matches("<rect").count(),
            kept * 5 * 3 + 1, // cells + the background, nothing else
        );
        assert!(text.contains("abs error"));
    }

    #[test]
    fn flat_fields_still_render() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flat.svg");
        let exact = DMatrix::from_element(4, 4, 1.0);
        write_heatmap_triptych_svg(&path, "flat", &exact, &exact.clone()).unwrap();
        assert!(path.exists());
    }
}
