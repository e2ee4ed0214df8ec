//! Minimal deterministic SVG line plots.
//!
//! One polyline per algorithm over (index, mean) points, linear axes, a
//! legend, and axis labels. No timestamps or randomness are embedded, so
//! identical input produces identical bytes.

use std::fmt::Write as _;

use super::records::Summary;
use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Render summaries (one metric, grouped at least by algorithm and index)
/// into an SVG document.
pub fn plot_svg(summaries: &[Summary]) -> Result<String> {
    if summaries.is_empty() {
        return Err(Error::Config("plot: no summaries".into()));
    }
    let metric = summaries[0]
        .metric
        .clone()
        .ok_or_else(|| Error::Config("plot: summaries must be grouped by metric".into()))?;
    if summaries.iter().any(|s| s.metric.as_deref() != Some(&*metric)) {
        return Err(Error::Config("plot: summaries mix metrics".into()));
    }

    // Series per algorithm, sorted by label; points sorted by index.
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for s in summaries {
        let label = s
            .algorithm
            .clone()
            .ok_or_else(|| Error::Config("plot: summaries must be grouped by algorithm".into()))?;
        let index = s
            .index
            .ok_or_else(|| Error::Config("plot: summaries must be grouped by index".into()))?;
        match series.iter_mut().find(|(l, _)| *l == label) {
            Some((_, points)) => points.push((index as f64, s.mean)),
            None => series.push((label, vec![(index as f64, s.mean)])),
        }
    }
    series.sort_by(|a, b| a.0.cmp(&b.0));
    for (_, points) in &mut series {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let all_points = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all_points {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
    }

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    // axes
    let _ = writeln!(
        svg,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
        MARGIN_LEFT,
        MARGIN_TOP + plot_h,
        MARGIN_LEFT + plot_w,
        MARGIN_TOP + plot_h
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
        MARGIN_LEFT,
        MARGIN_TOP,
        MARGIN_LEFT,
        MARGIN_TOP + plot_h
    );
    // tick labels at the range ends and midpoints
    for (t, value) in [(0.0, x_min), (0.5, (x_min + x_max) / 2.0), (1.0, x_max)] {
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
            MARGIN_LEFT + t * plot_w,
            MARGIN_TOP + plot_h + 18.0,
            trim_number(value)
        );
    }
    for (t, value) in [(0.0, y_min), (0.5, (y_min + y_max) / 2.0), (1.0, y_max)] {
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{}</text>",
            MARGIN_LEFT - 6.0,
            MARGIN_TOP + plot_h - t * plot_h + 4.0,
            trim_number(value)
        );
    }
    // axis names
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">index</text>",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{}</text>",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        metric
    );
    // series
    for (k, (label, points)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut path = String::new();
        for (x, y) in points {
            let _ = write!(path, "{:.2},{:.2} ", sx(*x), sy(*y));
        }
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            path.trim_end()
        );
        let ly = MARGIN_TOP + 16.0 * k as f64 + 10.0;
        let lx = MARGIN_LEFT + plot_w + 12.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            lx + 18.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" class=\"legend\">{label}</text>",
            lx + 24.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn write_plot(summaries: &[Summary], path: impl AsRef<std::path::Path>) -> Result<()> {
    std::fs::write(path, plot_svg(summaries)?)?;
    Ok(())
}

fn trim_number(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(algorithm: &str, index: u64, mean: f64) -> Summary {
        Summary {
            experiment: None,
            algorithm: Some(algorithm.into()),
            seed: None,
            index: Some(index),
            metric: Some("max_q".into()),
            mean,
            std: 0.0,
            count: 3,
        }
    }

    #[test]
    fn one_series_two_points_has_one_polyline() {
        let svg = plot_svg(&[summary("ql", 0, 1.0), summary("ql", 10, 2.0)]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn five_series_have_five_legend_entries() {
        let mut summaries = Vec::new();
        for name in ["a1", "a2", "a3", "a4", "a5"] {
            summaries.push(summary(name, 0, 0.0));
            summaries.push(summary(name, 1, 1.0));
        }
        let svg = plot_svg(&summaries).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 5);
        assert_eq!(svg.matches("class=\"legend\"").count(), 5);
    }

    #[test]
    fn identical_input_gives_identical_bytes() {
        let summaries = vec![summary("ql", 0, 1.5), summary("ql", 5, -0.5)];
        assert_eq!(plot_svg(&summaries).unwrap(), plot_svg(&summaries).unwrap());
    }

    #[test]
    fn mixed_metrics_are_rejected() {
        let mut a = summary("ql", 0, 1.0);
        a.metric = Some("episode_return".into());
        let b = summary("ql", 1, 1.0);
        assert!(plot_svg(&[a, b]).is_err());
    }
}
