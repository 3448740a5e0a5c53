//! Minimal standalone SVG writer. Coordinates are rounded to 3 decimals so
//! output is stable and compact.

use std::fmt::Write as _;

pub const CLASS_COLOURS: [&str; 3] = ["#1f77b4", "#ff7f0e", "#d62728"];
pub const REGION_COLOURS: [&str; 3] = ["#dbe9f6", "#fde5cc", "#f7d4d4"];

const MARGIN: f64 = 50.0;

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn r(v: f64) -> String {
    let s = format!("{v:.3}");
    // avoid "-0.000"
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0".into()
    } else {
        s
    }
}

/// Maps a data interval onto a pixel interval.
#[derive(Debug, Clone, Copy)]
pub struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    /// Pads `[lo, hi]` by 5% and widens empty ranges.
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if hi - lo > 1e-12 { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
        let pad = 0.05 * (hi - lo);
        Axis {
            lo: lo - pad,
            hi: hi + pad,
            px_lo,
            px_hi,
        }
    }

    pub fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

pub struct Plot {
    width: f64,
    height: f64,
    pub x: Axis,
    pub y: Axis,
    body: String,
}

impl Plot {
    /// A plot whose axes cover the given data ranges.
    pub fn new(width: f64, height: f64, xr: (f64, f64), yr: (f64, f64)) -> Self {
        Plot {
            width,
            height,
            x: Axis::new(xr.0, xr.1, MARGIN, width - MARGIN / 2.0),
            y: Axis::new(yr.0, yr.1, height - MARGIN, MARGIN / 2.0),
            body: String::new(),
        }
    }

    pub fn rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, fill: &str, class: &str) {
        let (a, b) = (self.x.map(x0), self.x.map(x1));
        let (c, d) = (self.y.map(y0), self.y.map(y1));
        let _ = writeln!(
            self.body,
            r#"<rect class="{class}" x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
            r(a.min(b)),
            r(c.min(d)),
            r((b - a).abs()),
            r((d - c).abs())
        );
    }

    pub fn marker(&mut self, x: f64, y: f64, fill: &str, class: &str, title: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle class="{class}" cx="{}" cy="{}" r="3" fill="{fill}"><title>{}</title></circle>"#,
            r(self.x.map(x)),
            r(self.y.map(y)),
            escape(title)
        );
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, class: &str) {
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{},{}", r(self.x.map(x)), r(self.y.map(y))))
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline class="{class}" points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#,
            coords.join(" ")
        );
    }

    pub fn polygon(&mut self, pts: &[(f64, f64)], fill: &str, class: &str) {
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{},{}", r(self.x.map(x)), r(self.y.map(y))))
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polygon class="{class}" points="{}" fill="{fill}" fill-opacity="0.3"/>"#,
            coords.join(" ")
        );
    }

    pub fn legend(&mut self, entries: &[(&str, &str)]) {
        for (i, (label, colour)) in entries.iter().enumerate() {
            let y = MARGIN / 2.0 + 14.0 * i as f64 + 6.0;
            let x = self.width - MARGIN / 2.0 - 90.0;
            let _ = writeln!(
                self.body,
                r#"<rect class="legend" x="{}" y="{}" width="8" height="8" fill="{colour}"/><text x="{}" y="{}" font-size="11">{}</text>"#,
                r(x),
                r(y),
                r(x + 12.0),
                r(y + 8.0),
                escape(label)
            );
        }
    }

    /// Frame, axis labels and min/max tick values; returns the document.
    pub fn finish(self, title: &str, xlabel: &str, ylabel: &str) -> String {
        let (w, h) = (self.width, self.height);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
        s.push_str(&self.body);
        let (x0, x1) = (self.x.px_lo, self.x.px_hi);
        let (y0, y1) = (self.y.px_lo, self.y.px_hi);
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            r(x0),
            r(y1),
            r(x1 - x0),
            r(y0 - y1)
        );
        let text = |s: &mut String, x: f64, y: f64, anchor: &str, extra: &str, t: &str| {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="{anchor}" font-size="11"{extra}>{}</text>"#,
                r(x),
                r(y),
                escape(t)
            );
        };
        text(&mut s, x0, y0 + 14.0, "start", "", &r(self.x.lo));
        text(&mut s, x1, y0 + 14.0, "end", "", &r(self.x.hi));
        text(&mut s, x0 - 4.0, y0, "end", "", &r(self.y.lo));
        text(&mut s, x0 - 4.0, y1 + 8.0, "end", "", &r(self.y.hi));
        text(&mut s, (x0 + x1) / 2.0, h - 12.0, "middle", "", xlabel);
        let (lx, ly) = (14.0, (y0 + y1) / 2.0);
        let rot = format!(r#" transform="rotate(-90 {} {})""#, r(lx), r(ly));
        text(&mut s, lx, ly, "middle", &rot, ylabel);
        text(&mut s, w / 2.0, 16.0, "middle", "", title);
        s.push_str("</svg>\n");
        s
    }
}

/// Min and max of finite values, or (0, 1) when there are none.
pub fn range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if lo > hi {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_and_escaping() {
        assert_eq!(r(-0.0001), "0");
        assert_eq!(r(1.23456), "1.235");
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }

    #[test]
    fn axes_are_padded_and_flipped() {
        let p = Plot::new(400.0, 300.0, (0.0, 10.0), (5.0, 5.0));
        assert!(p.x.map(0.0) > MARGIN && p.x.map(10.0) < 400.0 - MARGIN / 2.0);
        assert!(p.y.map(4.0) > p.y.map(6.0));
        assert_eq!(range([f64::NAN, 2.0, -1.0]), (-1.0, 2.0));
        assert_eq!(range([]), (0.0, 1.0));
    }

    #[test]
    fn document_counts_markers() {
        let mut p = Plot::new(200.0, 200.0, (0.0, 1.0), (0.0, 1.0));
        for i in 0..5 {
            p.marker(i as f64 / 4.0, 0.5, CLASS_COLOURS[0], "quote", "q");
        }
        let doc = p.finish("t", "x", "y");
        assert_eq!(doc.matches(r#"class="quote""#).count(), 5);
        assert!(doc.starts_with("<svg") && doc.ends_with("</svg>\n"));
    }
}
