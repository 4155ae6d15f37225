//! Minimal SVG line plots and heatmaps.

use std::fmt::Write as _;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub log_y: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) =
        values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        let pad = lo.abs().max(1.0) * 1e-3;
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// About five round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step && out.len() < 20 {
        out.push(t);
        t += step;
    }
    out
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.3e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, width: f64) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{H}" viewBox="0 0 {width} {H}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>
<text x="{}" y="{}" text-anchor="middle">{}</text>
<text transform="translate(18,{}) rotate(-90)" text-anchor="middle">{}</text>
"#,
        width / 2.0,
        escape(title),
        LEFT + (width - LEFT - RIGHT) / 2.0,
        H - 14.0,
        escape(x_label),
        TOP + (H - TOP - BOTTOM) / 2.0,
        escape(y_label)
    );
}

fn axes(out: &mut String, (x0, x1): (f64, f64), (y0, y1): (f64, f64), log_y: bool, right: f64) {
    let pw = right - LEFT;
    let ph = H - TOP - BOTTOM;
    let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for t in ticks(x0, x1) {
        let x = LEFT + (t - x0) / (x1 - x0) * pw;
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            label(t)
        );
    }
    for t in ticks(y0, y1) {
        let y = TOP + ph - (t - y0) / (y1 - y0) * ph;
        let shown = if log_y { label(10f64.powf(t)) } else { label(t) };
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            shown
        );
    }
}

impl LinePlot {
    pub fn to_svg(&self) -> String {
        let ty = |y: f64| if self.log_y { y.log10() } else { y };
        let pts = || self.series.iter().flat_map(|s| s.points.iter());
        let xr = extent(pts().map(|p| p.0));
        let yr = extent(pts().map(|p| ty(p.1)));
        let mut out = String::new();
        frame(&mut out, &self.title, &self.x_label, &self.y_label, W);
        axes(&mut out, xr, yr, self.log_y, W - RIGHT);
        let pw = W - RIGHT - LEFT;
        let ph = H - TOP - BOTTOM;
        for (k, s) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let mut path = String::new();
            let mut pen_down = false;
            for &(x, y) in &s.points {
                let yv = ty(y);
                if !(x.is_finite() && yv.is_finite()) {
                    pen_down = false;
                    continue;
                }
                let px = LEFT + (x - xr.0) / (xr.1 - xr.0) * pw;
                let py = TOP + ph - (yv - yr.0) / (yr.1 - yr.0) * ph;
                let _ = write!(path, "{}{px:.2},{py:.2} ", if pen_down { "L" } else { "M" });
                pen_down = true;
            }
            let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.trim_end());
            let ly = TOP + 16.0 + 16.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                W - RIGHT - 150.0,
                W - RIGHT - 130.0,
                W - RIGHT - 124.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

pub struct Heatmap<'a> {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Row-major, `rows` along y, `cols` along x, row 0 at the bottom.
    pub values: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Cells per axis after max-pooling.
    pub max_cells: usize,
}

/// Sequential white-to-dark-blue ramp.
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * (1.0 - t) + 8.0 * t) as u8;
    let g = (255.0 * (1.0 - t) + 48.0 * t) as u8;
    let b = (255.0 * (1.0 - t) + 107.0 * t) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

impl Heatmap<'_> {
    pub fn to_svg(&self) -> String {
        let fy = self.rows.div_ceil(self.max_cells.max(1));
        let fx = self.cols.div_ceil(self.max_cells.max(1));
        let (pr, pc) = (self.rows.div_ceil(fy), self.cols.div_ceil(fx));
        let mut pooled = vec![0.0f64; pr * pc];
        for r in 0..self.rows {
            for c in 0..self.cols {
                let k = (r / fy) * pc + c / fx;
                pooled[k] = pooled[k].max(self.values[r * self.cols + c]);
            }
        }
        let peak = pooled.iter().copied().fold(0.0, f64::max);
        let width = W - 60.0;
        let mut out = String::new();
        frame(&mut out, &self.title, &self.x_label, &self.y_label, width);
        let right = width - RIGHT;
        let pw = right - LEFT;
        let ph = H - TOP - BOTTOM;
        let (cw, chh) = (pw / pc as f64, ph / pr as f64);
        for r in 0..pr {
            for c in 0..pc {
                let v = pooled[r * pc + c];
                if v <= 0.0 || peak <= 0.0 {
                    continue;
                }
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    LEFT + c as f64 * cw,
                    TOP + ph - (r + 1) as f64 * chh,
                    cw + 0.05,
                    chh + 0.05,
                    ramp(v / peak)
                );
            }
        }
        axes(&mut out, self.x_range, self.y_range, false, right);
        out.push_str("</svg>\n");
        out
    }
}
