//! Minimal deterministic SVG writer for figures.
//!
//! Fixed canvas, fixed decimal formatting, no timestamps: outputs are
//! byte-stable across runs so figures can be diffed.

use crate::geom::Vec2;
use std::fmt::Write;

pub struct SvgCanvas {
    width: f64,
    height: f64,
    lo: Vec2,
    hi: Vec2,
    body: String,
}

impl SvgCanvas {
    /// Canvas mapping the world box `[lo, hi]` onto `width x height` pixels
    /// (y up in world, y down in SVG).
    pub fn new(lo: Vec2, hi: Vec2, width: f64) -> SvgCanvas {
        let aspect = (hi.y - lo.y) / (hi.x - lo.x);
        SvgCanvas {
            width,
            height: width * aspect,
            lo,
            hi,
            body: String::new(),
        }
    }

    fn map(&self, p: Vec2) -> (f64, f64) {
        let sx = (p.x - self.lo.x) / (self.hi.x - self.lo.x) * self.width;
        let sy = (self.hi.y - p.y) / (self.hi.y - self.lo.y) * self.height;
        (sx, sy)
    }

    pub fn polyline(&mut self, points: &[Vec2], color: &str, stroke: f64, closed: bool) {
        if points.is_empty() {
            return;
        }
        let mut d = String::new();
        for (i, p) in points.iter().enumerate() {
            let (x, y) = self.map(*p);
            let _ = write!(d, "{}{x:.3},{y:.3} ", if i == 0 { "M" } else { "L" });
        }
        if closed {
            d.push('Z');
        }
        let _ = writeln!(
            self.body,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="{stroke:.2}"/>"#,
            d.trim_end()
        );
    }

    pub fn circle(&mut self, center: Vec2, radius_px: f64, color: &str) {
        let (x, y) = self.map(center);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.3}" cy="{y:.3}" r="{radius_px:.2}" fill="{color}"/>"#
        );
    }

    pub fn segment(&mut self, a: Vec2, b: Vec2, color: &str, stroke: f64) {
        self.polyline(&[a, b], color, stroke, false);
    }

    pub fn text(&mut self, at: Vec2, size_px: f64, content: &str) {
        let (x, y) = self.map(at);
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.3}" y="{y:.3}" font-size="{size_px:.1}" font-family="monospace">{content}</text>"#
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.width, self.height, self.width, self.height, self.body
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_stable_output() {
        let draw = || {
            let mut c = SvgCanvas::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0), 400.0);
            c.polyline(
                &[Vec2::new(0.0, 0.0), Vec2::new(0.5, 0.25)],
                "#204080",
                1.5,
                false,
            );
            c.circle(Vec2::new(0.1, -0.2), 3.0, "red");
            c.text(Vec2::new(-0.9, 0.9), 12.0, "label");
            c.finish()
        };
        assert_eq!(draw(), draw());
        assert!(draw().starts_with("<svg"));
    }
}
