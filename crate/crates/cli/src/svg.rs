//! Minimal deterministic SVG drawing.

use std::fmt::Write;

/// A plotting panel: data ranges mapped onto a pixel rectangle.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl Frame {
    pub fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    pub fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y.0) / (self.y.1 - self.y.0) * self.height
    }
}

/// `[min, max]` of `values` widened by 5% on each side.
pub fn padded_range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.into_iter().filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.4}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A line segment between two data points.
pub type Segment = ((f64, f64), (f64, f64));

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Svg { width, height, body: String::new() }
    }

    pub fn text(&mut self, x: f64, y: f64, s: &str, anchor: &str, size: f64) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="{size}" text-anchor="{anchor}">{}</text>"#,
            escape(s)
        );
    }

    pub fn axes(&mut self, f: &Frame, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            f.left, f.top, f.width, f.height
        );
        for t in nice_ticks(f.x.0, f.x.1, 5) {
            let x = f.px(t);
            let y = f.top + f.height;
            let _ = writeln!(self.body, r#"<line x1="{x:.2}" y1="{y:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, y + 4.0);
            self.text(x, y + 16.0, &tick_label(t), "middle", 10.0);
        }
        for t in nice_ticks(f.y.0, f.y.1, 5) {
            let y = f.py(t);
            let _ = writeln!(self.body, r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#, f.left - 4.0, f.left);
            self.text(f.left - 6.0, y + 3.0, &tick_label(t), "end", 10.0);
        }
        self.text(f.left + f.width / 2.0, f.top + f.height + 32.0, xlabel, "middle", 12.0);
        let (x, y) = (f.left - 44.0, f.top + f.height / 2.0);
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 {x:.2} {y:.2})">{}</text>"#,
            escape(ylabel)
        );
    }

    pub fn points(&mut self, f: &Frame, pts: &[(f64, f64)], color: &str, radius: f64) {
        for &(x, y) in pts {
            let _ = writeln!(
                self.body,
                r#"<circle cx="{:.2}" cy="{:.2}" r="{radius}" fill="{color}"/>"#,
                f.px(x),
                f.py(y)
            );
        }
    }

    pub fn marker(&mut self, f: &Frame, at: (f64, f64), label: &str, color: &str) {
        let (x, y) = (f.px(at.0), f.py(at.1));
        let _ = writeln!(
            self.body,
            r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="{color}" stroke-width="2"/>"#,
            x - 5.0, y - 5.0, x + 5.0, y + 5.0, x - 5.0, y + 5.0, x + 5.0, y - 5.0
        );
        self.text(x + 8.0, y - 6.0, label, "start", 11.0);
    }

    pub fn polyline(&mut self, f: &Frame, pts: &[(f64, f64)], color: &str, dashed: bool) {
        if pts.len() < 2 {
            return;
        }
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
        let dash = if dashed { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}"{dash}/>"#,
            coords.join(" ")
        );
    }

    pub fn segments(&mut self, f: &Frame, segs: &[Segment], color: &str) {
        if segs.is_empty() {
            return;
        }
        let mut d = String::new();
        for &((x0, y0), (x1, y1)) in segs {
            let _ = write!(d, "M{:.2},{:.2}L{:.2},{:.2}", f.px(x0), f.py(y0), f.px(x1), f.py(y1));
        }
        let _ = writeln!(self.body, r#"<path d="{d}" fill="none" stroke="{color}"/>"#);
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_range() {
        assert_eq!(nice_ticks(0.0, 10.0, 5), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let t = nice_ticks(0.13, 0.62, 5);
        assert_eq!(t.len(), 5);
        for (a, b) in t.iter().zip([0.2, 0.3, 0.4, 0.5, 0.6]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_maps_corners() {
        let f = Frame { x: (0.0, 2.0), y: (10.0, 20.0), left: 50.0, top: 10.0, width: 100.0, height: 200.0 };
        assert_eq!((f.px(0.0), f.py(10.0)), (50.0, 210.0));
        assert_eq!((f.px(2.0), f.py(20.0)), (150.0, 10.0));
    }
}
