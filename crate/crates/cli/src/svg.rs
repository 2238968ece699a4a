//! Minimal hand-written SVG output: grouped bars and polylines. No plotting
//! dependency; figures are display-only artifacts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 60.0;

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{title}</text>\n",
        W / 2.0
    )
}

fn axes() -> String {
    format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = H - MARGIN,
        r = W - 20.0,
        t = 30.0
    )
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Grouped bar chart: one group per label, two bars per group.
pub fn grouped_bars(
    title: &str,
    groups: &[(String, f64, f64)],
    series_a: &str,
    series_b: &str,
) -> String {
    let mut s = header(title);
    s.push_str(&axes());
    let max = groups
        .iter()
        .map(|&(_, a, b)| a.max(b))
        .fold(1e-9, f64::max);
    let plot_w = W - MARGIN - 20.0;
    let plot_h = H - MARGIN - 30.0;
    let group_w = plot_w / groups.len() as f64;
    let bar_w = group_w * 0.3;
    for (gi, (label, a, b)) in groups.iter().enumerate() {
        let cx = MARGIN + group_w * (gi as f64 + 0.5);
        for (si, v) in [a, b].into_iter().enumerate() {
            let h = v / max * plot_h;
            let x = cx - bar_w + si as f64 * bar_w;
            let _ = write!(
                s,
                "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{bar_w:.1}\" height=\"{h:.1}\" fill=\"{}\"/>\n",
                H - MARGIN - h,
                COLORS[si]
            );
            let _ = write!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{:.2}</text>\n",
                x + bar_w / 2.0,
                H - MARGIN - h - 4.0,
                v
            );
        }
        let _ = write!(
            s,
            "<text x=\"{cx:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{label}</text>\n",
            H - MARGIN + 16.0
        );
    }
    for (si, name) in [series_a, series_b].into_iter().enumerate() {
        let y = 40.0 + si as f64 * 16.0;
        let _ = write!(
            s,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{}\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{name}</text>\n",
            W - 170.0,
            y,
            COLORS[si],
            W - 152.0,
            y + 10.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Polyline chart; one line per named series of `(x, y)` points.
pub fn polylines(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut s = header(title);
    s.push_str(&axes());
    let all = series.iter().flat_map(|(_, pts)| pts.iter());
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    if !xmin.is_finite() || xmax <= xmin {
        xmin = 0.0;
        xmax = 1.0;
    }
    if !ymin.is_finite() || ymax <= ymin {
        ymin = 0.0;
        ymax = 1.0;
    }
    let sx = |x: f64| MARGIN + (x - xmin) / (xmax - xmin) * (W - MARGIN - 20.0);
    let sy = |y: f64| (H - MARGIN) - (y - ymin) / (ymax - ymin) * (H - MARGIN - 30.0);
    for (si, (name, pts)) in series.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        let color = COLORS[si % COLORS.len()];
        let _ = write!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        );
        let y = 40.0 + si as f64 * 16.0;
        let _ = write!(
            s,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{name}</text>\n",
            W - 200.0,
            y,
            W - 182.0,
            y + 10.0
        );
    }
    let _ = write!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\">{xmin:.0}</text>\
         <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{xmax:.0}</text>\
         <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{ymin:.2}</text>\
         <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{ymax:.2}</text>\n",
        MARGIN,
        H - MARGIN + 14.0,
        W - 20.0,
        H - MARGIN + 14.0,
        MARGIN - 6.0,
        H - MARGIN,
        MARGIN - 6.0,
        38.0
    );
    s.push_str("</svg>\n");
    s
}
