//! Minimal log-log SVG plots.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Line `y = c·x^rate` through `anchor`, drawn over the x-range of the plot.
pub struct Guide {
    pub label: String,
    pub rate: f64,
    pub anchor: (f64, f64),
}

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x.log10() - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_B - (y.log10() - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn loglog(title: &str, xlabel: &str, ylabel: &str, series: &[Series], guides: &[Guide]) -> String {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|&(x, y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
        .collect();
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (1.0f64, 10.0f64, 1.0f64, 10.0f64);
    if !pts.is_empty() {
        xmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        xmax = pts.iter().map(|p| p.0).fold(0.0, f64::max);
        ymin = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        ymax = pts.iter().map(|p| p.1).fold(0.0, f64::max);
    }
    let ax = Axes {
        x0: xmin.log10().floor(),
        x1: xmax.log10().ceil().max(xmin.log10().floor() + 1.0),
        y0: ymin.log10().floor(),
        y1: ymax.log10().ceil().max(ymin.log10().floor() + 1.0),
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        escape(title)
    );
    let (left, right, top, bottom) = (MARGIN_L, WIDTH - MARGIN_R, MARGIN_T, HEIGHT - MARGIN_B);
    let _ = writeln!(
        out,
        r#"<rect x="{left}" y="{top}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );
    for e in (ax.x0 as i32)..=(ax.x1 as i32) {
        let x = ax.px(10f64.powi(e));
        let _ = writeln!(out, r##"<line x1="{x:.1}" y1="{top}" x2="{x:.1}" y2="{bottom}" stroke="#ddd"/>"##);
        let _ = writeln!(out, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{e}</text>"#, bottom + 16.0);
        for m in 2..10 {
            let v = m as f64 * 10f64.powi(e);
            if v.log10() < ax.x1 {
                let xm = ax.px(v);
                let _ = writeln!(out, r#"<line x1="{xm:.1}" y1="{bottom}" x2="{xm:.1}" y2="{:.1}" stroke="black"/>"#, bottom - 4.0);
            }
        }
    }
    for e in (ax.y0 as i32)..=(ax.y1 as i32) {
        let y = ax.py(10f64.powi(e));
        let _ = writeln!(out, r##"<line x1="{left}" y1="{y:.1}" x2="{right}" y2="{y:.1}" stroke="#ddd"/>"##);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{e}</text>"#, left - 6.0, y + 4.0);
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 20.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(ylabel)
    );

    let mut legend_y = top + 10.0;
    let mut legend = |out: &mut String, label: &str, color: &str, dash: bool| {
        let style = if dash { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{legend_y:.1}" x2="{:.1}" y2="{legend_y:.1}" stroke="{color}"{style}/>"#,
            right + 10.0,
            right + 34.0
        );
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, right + 40.0, legend_y + 4.0, escape(label));
        legend_y += 18.0;
    };

    for (i, g) in guides.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        // clip y = c·x^rate to the plot box
        let c = g.anchor.1 / g.anchor.0.powf(g.rate);
        let (mut xa, mut xb) = (10f64.powf(ax.x0), 10f64.powf(ax.x1));
        if g.rate != 0.0 {
            let lo = (10f64.powf(ax.y0) / c).powf(1.0 / g.rate);
            let hi = (10f64.powf(ax.y1) / c).powf(1.0 / g.rate);
            xa = xa.max(lo.min(hi));
            xb = xb.min(lo.max(hi));
        }
        if xa < xb && c > 0.0 {
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-opacity="0.5" stroke-dasharray="6 4"/>"#,
                ax.px(xa),
                ax.py(c * xa.powf(g.rate)),
                ax.px(xb),
                ax.py(c * xb.powf(g.rate))
            );
        }
    }
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let valid: Vec<&(f64, f64)> = s.points.iter().filter(|&&(x, y)| x > 0.0 && y > 0.0).collect();
        let path: Vec<String> = valid.iter().map(|&&(x, y)| format!("{:.1},{:.1}", ax.px(x), ax.py(y))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.join(" "));
        for &&(x, y) in &valid {
            let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, ax.px(x), ax.py(y));
        }
        legend(&mut out, &s.label, color, false);
    }
    for (i, g) in guides.iter().enumerate() {
        legend(&mut out, &g.label, COLORS[i % COLORS.len()], true);
    }
    out.push_str("</svg>\n");
    out
}
