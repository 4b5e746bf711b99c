//! Compact planar domains `{w >= 0}` with traced boundary curves.
//!
//! The boundary `{w = 0}` is traced by predictor–corrector continuation from
//! grid seeds, one closed polyline per component, then resampled to uniform
//! arc length. Components are oriented so the domain interior lies on the
//! left of the forward tangent.

use crate::expr::{Expr, Program};
use crate::geom::Vec2;
use crate::jet;

#[derive(Debug, thiserror::Error)]
pub enum DomainError {
    #[error("no boundary component found inside the bounding box")]
    NoBoundary,
    #[error("boundary component leaves the bounding box")]
    OpenBoundary,
    #[error("boundary tracing stalled near ({0}, {1})")]
    TraceStalled(f64, f64),
    #[error("0 is not a regular value of w: |∇w| = {grad} at ({x}, {y})")]
    IrregularValue { x: f64, y: f64, grad: f64 },
    #[error("domain has empty interior on the sample grid")]
    EmptyInterior,
    #[error("jet evaluation failed: {0}")]
    Jet(#[from] jet::JetError),
}

/// One closed boundary component, cached as a uniformly spaced polyline.
#[derive(Clone, Debug)]
pub struct BoundaryComponent {
    /// Equally spaced points along the curve (closed; the segment from the
    /// last point back to the first is implied).
    pub points: Vec<Vec2>,
    pub length: f64,
}

impl BoundaryComponent {
    fn spacing(&self) -> f64 {
        self.length / self.points.len() as f64
    }

    /// Point at arc-length coordinate `s` (wrapped), linear on segments.
    pub fn point_at_raw(&self, s: f64) -> Vec2 {
        let n = self.points.len();
        let spacing = self.spacing();
        let mut s = s.rem_euclid(self.length);
        if !s.is_finite() {
            s = 0.0;
        }
        let idx = ((s / spacing) as usize).min(n - 1);
        let t = (s - idx as f64 * spacing) / spacing;
        let a = self.points[idx];
        let b = self.points[(idx + 1) % n];
        a + (b - a) * t
    }

    /// Arc-length coordinate of the boundary point nearest `p`.
    pub fn arc_coord(&self, p: Vec2) -> f64 {
        let n = self.points.len();
        let spacing = self.spacing();
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            let ab = b - a;
            let t = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
            let q = a + ab * t;
            let d = p.dist(q);
            if d < best.0 {
                best = (d, (i as f64 + t) * spacing);
            }
        }
        best.1
    }

    /// Cyclic arc-length distance.
    pub fn arc_dist(&self, s1: f64, s2: f64) -> f64 {
        let d = (s1 - s2).rem_euclid(self.length);
        d.min(self.length - d)
    }
}

#[derive(Clone, Debug)]
pub struct Domain2D {
    w: Expr,
    w_prog: Program,
    pub bbox_lo: Vec2,
    pub bbox_hi: Vec2,
    pub components: Vec<BoundaryComponent>,
}

impl Domain2D {
    /// Trace `{w = 0}` inside the box and build the component caches.
    /// `resolution` is the number of polyline samples per component.
    pub fn new(
        w: Expr,
        bbox_lo: Vec2,
        bbox_hi: Vec2,
        resolution: usize,
    ) -> Result<Domain2D, DomainError> {
        let w_prog = Program::compile(&w);
        let resolution = resolution.max(256);
        let mut domain = Domain2D {
            w,
            w_prog,
            bbox_lo,
            bbox_hi,
            components: Vec::new(),
        };
        domain.trace_boundary(resolution)?;
        domain.validate()?;
        Ok(domain)
    }

    pub fn w(&self) -> &Expr {
        &self.w
    }

    pub fn eval_w(&self, p: Vec2) -> f64 {
        self.w_prog.eval(p)
    }

    pub fn diameter(&self) -> f64 {
        (self.bbox_hi - self.bbox_lo).norm()
    }

    pub fn gradient_w(&self, p: Vec2) -> Result<Vec2, DomainError> {
        Ok(jet::gradient(&self.w, p)?)
    }

    /// Newton-project `p` onto `{w = 0}` along the gradient.
    pub fn project_to_boundary(&self, mut p: Vec2) -> Result<Vec2, DomainError> {
        for _ in 0..8 {
            let value = self.eval_w(p);
            let grad = self.gradient_w(p)?;
            let g2 = grad.norm_sq();
            if g2 < 1e-18 {
                return Err(DomainError::IrregularValue {
                    x: p.x,
                    y: p.y,
                    grad: g2.sqrt(),
                });
            }
            let step = grad * (value / g2);
            p = p - step;
            if step.norm() < 1e-14 * self.diameter() {
                break;
            }
        }
        Ok(p)
    }

    /// On-curve point at arc coordinate `s` of component `comp`.
    pub fn point_at(&self, comp: usize, s: f64) -> Result<Vec2, DomainError> {
        self.project_to_boundary(self.components[comp].point_at_raw(s))
    }

    /// `(component, s)` of the boundary point nearest `p`.
    pub fn locate(&self, p: Vec2) -> (usize, f64) {
        let mut best = (0usize, 0.0f64, f64::INFINITY);
        for (ci, comp) in self.components.iter().enumerate() {
            let s = comp.arc_coord(p);
            let q = comp.point_at_raw(s);
            let d = p.dist(q);
            if d < best.2 {
                best = (ci, s, d);
            }
        }
        (best.0, best.1)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.eval_w(p) > 0.0
    }

    fn grid_point(&self, i: usize, j: usize, n: usize) -> Vec2 {
        Vec2::new(
            self.bbox_lo.x + (self.bbox_hi.x - self.bbox_lo.x) * i as f64 / (n - 1) as f64,
            self.bbox_lo.y + (self.bbox_hi.y - self.bbox_lo.y) * j as f64 / (n - 1) as f64,
        )
    }

    fn trace_boundary(&mut self, resolution: usize) -> Result<(), DomainError> {
        const GRID: usize = 160;
        let mut values = vec![0.0f64; GRID * GRID];
        for i in 0..GRID {
            for j in 0..GRID {
                values[i * GRID + j] = self.eval_w(self.grid_point(i, j, GRID));
            }
        }
        // seeds: grid edges with a sign change
        let mut seeds: Vec<Vec2> = Vec::new();
        for i in 0..GRID {
            for j in 0..GRID {
                let a = values[i * GRID + j];
                if i + 1 < GRID {
                    let b = values[(i + 1) * GRID + j];
                    if a * b < 0.0 {
                        let pa = self.grid_point(i, j, GRID);
                        let pb = self.grid_point(i + 1, j, GRID);
                        seeds.push(pa + (pb - pa) * (a / (a - b)));
                    }
                }
                if j + 1 < GRID {
                    let b = values[i * GRID + j + 1];
                    if a * b < 0.0 {
                        let pa = self.grid_point(i, j, GRID);
                        let pb = self.grid_point(i, j + 1, GRID);
                        seeds.push(pa + (pb - pa) * (a / (a - b)));
                    }
                }
            }
        }
        if seeds.is_empty() {
            return Err(DomainError::NoBoundary);
        }

        let step = self.diameter() / 1500.0;
        let mut used = vec![false; seeds.len()];
        for start_idx in 0..seeds.len() {
            if used[start_idx] {
                continue;
            }
            let raw = self.trace_loop(seeds[start_idx], step)?;
            for (k, seed) in seeds.iter().enumerate() {
                if !used[k] {
                    // cheap coarse cull followed by the exact check
                    if raw
                        .iter()
                        .step_by(4)
                        .any(|p| p.dist(*seed) < 6.0 * step)
                        && raw.iter().any(|p| p.dist(*seed) < 2.0 * step)
                    {
                        used[k] = true;
                    }
                }
            }
            used[start_idx] = true;
            self.components.push(resample_closed(&raw, resolution));
        }
        // deterministic component order: by ascending length, then centroid
        self.components.sort_by(|a, b| {
            b.length
                .total_cmp(&a.length)
                .then_with(|| centroid(a).x.total_cmp(&centroid(b).x))
        });
        Ok(())
    }

    /// Predictor–corrector continuation around one closed loop. The tangent
    /// `(w_y, -w_x)` keeps `{w > 0}` on the left.
    fn trace_loop(&self, seed: Vec2, step: f64) -> Result<Vec<Vec2>, DomainError> {
        let start = self.project_to_boundary(seed)?;
        let mut points = vec![start];
        let mut p = start;
        let max_steps = 400_000usize;
        for step_count in 0..max_steps {
            let grad = self.gradient_w(p)?;
            let gnorm = grad.norm();
            if gnorm < 1e-9 {
                return Err(DomainError::IrregularValue {
                    x: p.x,
                    y: p.y,
                    grad: gnorm,
                });
            }
            let tangent = Vec2::new(grad.y, -grad.x) / gnorm;
            let predicted = p + tangent * step;
            let corrected = self.project_to_boundary(predicted)?;
            if corrected.dist(p) < step * 1e-3 {
                return Err(DomainError::TraceStalled(p.x, p.y));
            }
            if corrected.x < self.bbox_lo.x
                || corrected.x > self.bbox_hi.x
                || corrected.y < self.bbox_lo.y
                || corrected.y > self.bbox_hi.y
            {
                return Err(DomainError::OpenBoundary);
            }
            p = corrected;
            if step_count >= 4 && p.dist(start) < 0.8 * step {
                return Ok(points);
            }
            points.push(p);
        }
        Err(DomainError::TraceStalled(p.x, p.y))
    }

    fn validate(&self) -> Result<(), DomainError> {
        const GRID: usize = 64;
        let mut interior = 0usize;
        for i in 0..GRID {
            for j in 0..GRID {
                if self.contains(self.grid_point(i, j, GRID)) {
                    interior += 1;
                }
            }
        }
        if interior == 0 {
            return Err(DomainError::EmptyInterior);
        }
        for comp in &self.components {
            for p in comp.points.iter().step_by(16) {
                let g = self.gradient_w(*p)?;
                if g.norm() < 1e-6 {
                    return Err(DomainError::IrregularValue {
                        x: p.x,
                        y: p.y,
                        grad: g.norm(),
                    });
                }
            }
        }
        Ok(())
    }
}

fn centroid(c: &BoundaryComponent) -> Vec2 {
    let mut acc = Vec2::default();
    for p in &c.points {
        acc = acc + *p;
    }
    acc / c.points.len() as f64
}

fn resample_closed(raw: &[Vec2], n: usize) -> BoundaryComponent {
    let mut cum = Vec::with_capacity(raw.len() + 1);
    cum.push(0.0);
    for i in 0..raw.len() {
        let next = raw[(i + 1) % raw.len()];
        cum.push(cum[i] + raw[i].dist(next));
    }
    let total = *cum.last().unwrap();
    let mut points = Vec::with_capacity(n);
    let mut seg = 0usize;
    for k in 0..n {
        let target = total * k as f64 / n as f64;
        while seg + 1 < cum.len() && cum[seg + 1] < target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 { (target - cum[seg]) / span } else { 0.0 };
        let a = raw[seg % raw.len()];
        let b = raw[(seg + 1) % raw.len()];
        points.push(a + (b - a) * t);
    }
    BoundaryComponent {
        points,
        length: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk() -> Domain2D {
        Domain2D::new(
            Expr::parse("1 - x^2 - y^2").unwrap(),
            Vec2::new(-1.5, -1.5),
            Vec2::new(1.5, 1.5),
            2048,
        )
        .unwrap()
    }

    #[test]
    fn disk_has_one_component_of_circumference_tau() {
        let d = disk();
        assert_eq!(d.components.len(), 1);
        let len = d.components[0].length;
        assert!(
            (len - std::f64::consts::TAU).abs() < 1e-4,
            "length {len} vs 2π"
        );
        for p in d.components[0].points.iter().step_by(64) {
            assert!((p.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn annulus_has_two_components() {
        let d = Domain2D::new(
            Expr::parse("(4 - x^2 - y^2) * (x^2 + y^2 - 1)").unwrap(),
            Vec2::new(-2.5, -2.5),
            Vec2::new(2.5, 2.5),
            2048,
        )
        .unwrap();
        assert_eq!(d.components.len(), 2);
        // sorted by descending length: outer first
        assert!((d.components[0].length - 2.0 * std::f64::consts::TAU).abs() < 1e-3);
        assert!((d.components[1].length - std::f64::consts::TAU).abs() < 1e-3);
        assert!(d.contains(Vec2::new(1.5, 0.0)));
        assert!(!d.contains(Vec2::new(0.0, 0.0)));
        assert!(!d.contains(Vec2::new(2.2, 0.0)));
    }

    #[test]
    fn orientation_keeps_interior_left() {
        let d = disk();
        let comp = &d.components[0];
        for i in (0..comp.points.len()).step_by(128) {
            let a = comp.points[i];
            let b = comp.points[(i + 1) % comp.points.len()];
            let tangent = (b - a).normalized();
            let left = tangent.perp();
            assert!(d.contains(a + left * 1e-3), "interior not on the left at {a:?}");
        }
    }

    #[test]
    fn arc_coordinates_round_trip() {
        let d = disk();
        let comp = &d.components[0];
        for k in 0..32 {
            let s = comp.length * k as f64 / 32.0;
            let p = d.point_at(0, s).unwrap();
            assert!((d.eval_w(p)).abs() < 1e-10);
            let s_back = comp.arc_coord(p);
            assert!(comp.arc_dist(s, s_back) < 1e-5 * comp.length);
        }
    }

    #[test]
    fn locate_picks_nearest_component() {
        let d = Domain2D::new(
            Expr::parse("(4 - x^2 - y^2) * (x^2 + y^2 - 1)").unwrap(),
            Vec2::new(-2.5, -2.5),
            Vec2::new(2.5, 2.5),
            1024,
        )
        .unwrap();
        let (ci, _) = d.locate(Vec2::new(1.05, 0.0));
        assert_eq!(ci, 1, "near the inner circle");
        let (ci, _) = d.locate(Vec2::new(1.95, 0.0));
        assert_eq!(ci, 0, "near the outer circle");
    }
}
