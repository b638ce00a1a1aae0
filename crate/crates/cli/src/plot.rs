//! Minimal self-contained SVG line charts.

use std::fmt::Write;

use aae_core::EntropyReport64;

const W: f64 = 640.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;

struct Series<'a> {
    label: &'a str,
    color: &'a str,
    /// `None` breaks the line.
    points: Vec<Option<f64>>,
}

fn chart(title: &str, x_labels: &[String], series: &[Series], log_y: bool) -> String {
    let tf = |v: f64| if log_y { v.max(1e-12).log10() } else { v };
    let values: Vec<f64> = series.iter().flat_map(|s| s.points.iter().flatten().map(|&v| tf(v))).collect();
    let (mut lo, mut hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        hi = lo + 1.0;
    }
    let margin = 0.05 * (hi - lo);
    let (lo, hi) = (lo - margin, hi + margin);
    let n = series.iter().map(|s| s.points.len()).max().unwrap_or(1).max(2);
    let x = |i: usize| PAD + (W - 2.0 * PAD) * i as f64 / (n - 1) as f64;
    let y = |v: f64| H - PAD - (H - 2.0 * PAD) * (tf(v) - lo) / (hi - lo);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#, W / 2.0);
    let _ = writeln!(
        svg,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let yy = H - PAD - (H - 2.0 * PAD) * k as f64 / 4.0;
        let shown = if log_y { format!("1e{v:.1}") } else { format!("{v:.3}") };
        let _ = writeln!(svg, r#"<text x="{}" y="{yy:.1}" text-anchor="end">{shown}</text>"#, PAD - 4.0);
    }
    let step = (x_labels.len() / 12).max(1);
    for (i, label) in x_labels.iter().enumerate().step_by(step) {
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{}" text-anchor="middle">{label}</text>"#, x(i), H - PAD + 16.0);
    }
    for (k, s) in series.iter().enumerate() {
        let mut d = String::new();
        let mut pen_down = false;
        for (i, p) in s.points.iter().enumerate() {
            match p {
                Some(v) => {
                    let _ = write!(d, "{}{:.1} {:.1} ", if pen_down { "L" } else { "M" }, x(i), y(*v));
                    pen_down = true;
                }
                None => pen_down = false,
            }
        }
        let _ = writeln!(svg, r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#, d.trim_end(), s.color);
        let ly = PAD + 14.0 * k as f64;
        let _ = writeln!(svg, r#"<text x="{}" y="{ly}" fill="{}">{}</text>"#, W - PAD - 90.0, s.color, s.label);
    }
    svg.push_str("</svg>\n");
    svg
}

/// Exact, loaded and sign-blind entropies per term.
pub fn entropy_chart(report: &EntropyReport64) -> String {
    let labels: Vec<String> = report.terms.iter().map(|t| t.term.clone()).collect();
    let series = [
        Series { label: "exact", color: "#1f77b4", points: report.terms.iter().map(|t| t.exact).collect() },
        Series { label: "AAE + qSVD", color: "#d62728", points: report.terms.iter().map(|t| t.aae.as_ref().map(|c| c.entropy)).collect() },
        Series { label: "naive", color: "#2ca02c", points: report.terms.iter().map(|t| t.naive.as_ref().map(|c| c.entropy)).collect() },
    ];
    chart("SVD entropy", &labels, &series, false)
}

/// Training curve `L` of the winning trial of every term.
pub fn cost_chart(report: &EntropyReport64) -> String {
    const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];
    let series: Vec<Series> = report
        .terms
        .iter()
        .enumerate()
        .filter_map(|(i, t)| {
            let c = t.aae.as_ref()?;
            Some(Series { label: &t.term, color: PALETTE[i % PALETTE.len()], points: c.cost_curve.iter().map(|&v| Some(v)).collect() })
        })
        .collect();
    let n = series.iter().map(|s| s.points.len()).max().unwrap_or(0);
    let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    chart("Loader cost L (best trial)", &labels, &series, true)
}
