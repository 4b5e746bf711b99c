//! Flat-metric geodesic scattering on planar tables.
//!
//! Geodesics are straight chords, so scattering reduces to exact
//! ray–curve intersection: closed form for circles and ellipses, bracketed
//! Newton along the ray for implicit curves. The billiard map is the
//! scattering map composed with the normal-flip involution; a tangential
//! reflection is the identity.

use crate::expr::{Expr, Program};
use crate::geom::Vec2;
use crate::jet;
use crate::local_model::{Divisor, Polarity};
use rand::Rng;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum BilliardError {
    #[error("ray found no exit within the length budget")]
    NoExit,
    #[error("state is not inward (normal component {0})")]
    NotInward(f64),
    #[error("no tangent line from a point inside the inner conic")]
    NoTangent,
    #[error("malformed table: {0}")]
    BadTable(String),
}

/// A closed convex-ish boundary curve.
#[derive(Clone, Debug)]
pub enum Curve {
    Circle {
        center: Vec2,
        radius: f64,
    },
    /// Axis-aligned ellipse.
    Ellipse {
        center: Vec2,
        a: f64,
        b: f64,
    },
    /// Zero set of an expression, negative inside.
    Implicit {
        expr: Expr,
        prog: Program,
        bbox_lo: Vec2,
        bbox_hi: Vec2,
    },
}

impl Curve {
    pub fn circle(center: Vec2, radius: f64) -> Curve {
        Curve::Circle { center, radius }
    }

    pub fn ellipse(center: Vec2, a: f64, b: f64) -> Curve {
        Curve::Ellipse { center, a, b }
    }

    pub fn implicit(expr: Expr, bbox_lo: Vec2, bbox_hi: Vec2) -> Curve {
        let prog = Program::compile(&expr);
        Curve::Implicit {
            expr,
            prog,
            bbox_lo,
            bbox_hi,
        }
    }

    /// Implicit value, negative inside the enclosed region.
    pub fn value(&self, p: Vec2) -> f64 {
        match self {
            Curve::Circle { center, radius } => (p - *center).norm_sq() - radius * radius,
            Curve::Ellipse { center, a, b } => {
                let d = p - *center;
                (d.x / a) * (d.x / a) + (d.y / b) * (d.y / b) - 1.0
            }
            Curve::Implicit { prog, .. } => prog.eval(p),
        }
    }

    pub fn gradient(&self, p: Vec2) -> Vec2 {
        match self {
            Curve::Circle { center, .. } => (p - *center) * 2.0,
            Curve::Ellipse { center, a, b } => {
                let d = p - *center;
                Vec2::new(2.0 * d.x / (a * a), 2.0 * d.y / (b * b))
            }
            Curve::Implicit { expr, .. } => {
                jet::gradient(expr, p).unwrap_or_else(|_| Vec2::new(f64::NAN, f64::NAN))
            }
        }
    }

    /// Rough diameter for tolerance scaling.
    fn extent(&self) -> f64 {
        match self {
            Curve::Circle { radius, .. } => 2.0 * radius,
            Curve::Ellipse { a, b, .. } => 2.0 * a.max(*b),
            Curve::Implicit {
                bbox_lo, bbox_hi, ..
            } => (*bbox_hi - *bbox_lo).norm(),
        }
    }

    /// Transversal intersections of the ray `p + t u`, ascending `t` in
    /// `(t_min, t_max)`.
    fn ray_hits(&self, p: Vec2, u: Vec2, t_min: f64, t_max: f64) -> Vec<f64> {
        match self {
            Curve::Circle { center, radius } => {
                let d = p - *center;
                let b = d.dot(u);
                let c = d.norm_sq() - radius * radius;
                let disc = b * b - c;
                if disc <= 0.0 {
                    return Vec::new();
                }
                let sq = disc.sqrt();
                [-b - sq, -b + sq]
                    .into_iter()
                    .filter(|t| *t > t_min && *t < t_max)
                    .collect()
            }
            Curve::Ellipse { center, a, b } => {
                let d = p - *center;
                let (dx, dy) = (d.x / a, d.y / b);
                let (ux, uy) = (u.x / a, u.y / b);
                let qa = ux * ux + uy * uy;
                let qb = dx * ux + dy * uy;
                let qc = dx * dx + dy * dy - 1.0;
                let disc = qb * qb - qa * qc;
                if disc <= 0.0 {
                    return Vec::new();
                }
                let sq = disc.sqrt();
                [(-qb - sq) / qa, (-qb + sq) / qa]
                    .into_iter()
                    .filter(|t| *t > t_min && *t < t_max)
                    .collect()
            }
            Curve::Implicit { prog, .. } => {
                let mut hits = Vec::new();
                let step = self.extent() / 4096.0;
                let mut t = t_min.max(0.0);
                let mut prev = prog.eval(p + u * t);
                while t < t_max {
                    let t_next = t + step;
                    let next = prog.eval(p + u * t_next);
                    if prev * next < 0.0 {
                        let mut lo = t;
                        let mut hi = t_next;
                        for _ in 0..60 {
                            let mid = 0.5 * (lo + hi);
                            if prog.eval(p + u * mid) * prev > 0.0 {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        hits.push(0.5 * (lo + hi));
                    }
                    prev = next;
                    t = t_next;
                }
                hits
            }
        }
    }

    /// Closest approach of the ray to the curve within `(t_min, t_max)`:
    /// `(t, signed_distance_estimate)`.
    fn closest_approach(&self, p: Vec2, u: Vec2, t_min: f64, t_max: f64) -> Option<(f64, f64)> {
        match self {
            Curve::Circle { center, radius } => {
                let t = (*center - p).dot(u);
                if t <= t_min || t >= t_max {
                    return None;
                }
                let q = p + u * t;
                Some((t, (q - *center).norm() - radius))
            }
            Curve::Ellipse { center, a, b } => {
                let d = p - *center;
                let (dx, dy) = (d.x / a, d.y / b);
                let (ux, uy) = (u.x / a, u.y / b);
                let qa = ux * ux + uy * uy;
                let qb = dx * ux + dy * uy;
                let t = -qb / qa;
                if t <= t_min || t >= t_max {
                    return None;
                }
                let q = p + u * t;
                let g = self.value(q);
                let gn = self.gradient(q).norm().max(1e-12);
                Some((t, g / gn))
            }
            Curve::Implicit { prog, .. } => {
                let step = self.extent() / 2048.0;
                let mut best: Option<(f64, f64)> = None;
                let mut t = t_min.max(0.0);
                while t < t_max {
                    let g = prog.eval(p + u * t);
                    if best.map_or(true, |(_, bg)| g.abs() < bg.abs()) {
                        best = Some((t, g));
                    }
                    t += step;
                }
                best.map(|(t, g)| {
                    let gn = self.gradient(p + u * t).norm().max(1e-12);
                    (t, g / gn)
                })
            }
        }
    }

    /// Point at curve parameter `theta` (angle-like).
    pub fn point_at_param(&self, theta: f64) -> Vec2 {
        match self {
            Curve::Circle { center, radius } => {
                *center + Vec2::new(theta.cos(), theta.sin()) * *radius
            }
            Curve::Ellipse { center, a, b } => {
                *center + Vec2::new(a * theta.cos(), b * theta.sin())
            }
            Curve::Implicit { .. } => panic!("implicit curves have no angle parameter"),
        }
    }
}

/// Billiard table: a compact region between the outer curve and the
/// obstacles.
#[derive(Clone, Debug)]
pub struct BilliardTable {
    pub outer: Curve,
    pub obstacles: Vec<Curve>,
}

impl BilliardTable {
    pub fn new(outer: Curve, obstacles: Vec<Curve>) -> Result<BilliardTable, BilliardError> {
        let table = BilliardTable { outer, obstacles };
        for (i, obs) in table.obstacles.iter().enumerate() {
            for k in 0..64 {
                let theta = k as f64 * std::f64::consts::TAU / 64.0;
                let p = match obs {
                    Curve::Implicit { .. } => continue,
                    _ => obs.point_at_param(theta),
                };
                if table.outer.value(p) >= 0.0 {
                    return Err(BilliardError::BadTable(format!(
                        "obstacle {i} reaches the outer boundary"
                    )));
                }
                for (j, other) in table.obstacles.iter().enumerate() {
                    if i != j && other.value(p) <= 0.0 {
                        return Err(BilliardError::BadTable(format!(
                            "obstacles {i} and {j} overlap"
                        )));
                    }
                }
            }
        }
        Ok(table)
    }

    pub fn diameter(&self) -> f64 {
        self.outer.extent()
    }

    /// Outward normal of the *table* at a boundary point of curve `id`
    /// (for obstacles this points into the obstacle).
    pub fn outward_normal(&self, curve: usize, p: Vec2) -> Vec2 {
        if curve == 0 {
            self.outer.gradient(p).normalized()
        } else {
            -self.obstacles[curve - 1].gradient(p).normalized()
        }
    }

    fn curve(&self, id: usize) -> &Curve {
        if id == 0 {
            &self.outer
        } else {
            &self.obstacles[id - 1]
        }
    }
}

/// A unit tangent vector based at a boundary point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct UnitState {
    pub curve: usize,
    pub point: Vec2,
    pub dir: Vec2,
}

impl UnitState {
    pub fn new(curve: usize, point: Vec2, dir: Vec2) -> UnitState {
        UnitState {
            curve,
            point,
            dir: dir.normalized(),
        }
    }

    /// Component of the direction along the table's outward normal.
    pub fn normal_component(&self, table: &BilliardTable) -> f64 {
        self.dir.dot(table.outward_normal(self.curve, self.point))
    }

    pub fn is_inward(&self, table: &BilliardTable, tol: f64) -> bool {
        self.normal_component(table) < -tol
    }

    pub fn is_tangent(&self, table: &BilliardTable, tol: f64) -> bool {
        self.normal_component(table).abs() <= tol
    }
}

/// The normal-flip involution: negate the normal component, keep the
/// tangential one. Tangent states are fixed.
pub fn tau(table: &BilliardTable, state: UnitState) -> UnitState {
    let n = table.outward_normal(state.curve, state.point);
    let dir = state.dir - n * (2.0 * state.dir.dot(n));
    UnitState {
        curve: state.curve,
        point: state.point,
        dir: dir.normalized(),
    }
}

/// One scattering flight: entry state, grazing contacts en route, exit.
#[derive(Clone, Debug, Serialize)]
pub struct ScatterResult {
    pub exit: UnitState,
    /// Chord divisor: `position` is the ray parameter of each contact.
    pub divisor: Divisor,
    pub chord_length: f64,
    /// Tangency contacts along the chord (curve id and point).
    pub grazes: Vec<(usize, Vec2)>,
}

/// Straight flight from an inward state to the first transversal boundary
/// hit; grazing contacts with obstacles get multiplicity-2 divisor entries.
pub fn scatter(table: &BilliardTable, state: UnitState) -> Result<ScatterResult, BilliardError> {
    let diam = table.diameter();
    let tol = 1e-9 * diam;
    let tau_graze = 1e-7 * diam;
    let nc = state.normal_component(table);
    if nc >= -1e-12 {
        return Err(BilliardError::NotInward(nc));
    }
    let p = state.point;
    let u = state.dir;
    let t_eps = 1e-9 * diam;
    let t_budget = 8.0 * diam;

    // first transversal hit over all curves
    let mut first: Option<(usize, f64)> = None;
    for id in 0..=table.obstacles.len() {
        for t in table.curve(id).ray_hits(p, u, t_eps, t_budget) {
            let q = p + u * t;
            let g = table.curve(id).gradient(q).normalized();
            if g.dot(u).abs() <= 1e-7 {
                continue; // tangential contact, not an exit
            }
            if first.map_or(true, |(_, tf)| t < tf) {
                first = Some((id, t));
            }
        }
    }
    let Some((exit_curve, t_exit)) = first else {
        return Err(BilliardError::NoExit);
    };

    // grazing contacts strictly inside the chord
    let mut contacts: Vec<(f64, usize, Vec2, u8)> = Vec::new();
    for (k, obs) in table.obstacles.iter().enumerate() {
        if let Some((t, miss)) = obs.closest_approach(p, u, t_eps, t_exit - t_eps) {
            if miss.abs() <= tau_graze {
                let q = p + u * t;
                contacts.push((t, k + 1, q, 2));
            }
        }
    }
    contacts.sort_by(|a, b| a.0.total_cmp(&b.0));

    let q_exit = p + u * t_exit;
    let exit = UnitState {
        curve: exit_curve,
        point: q_exit,
        dir: u,
    };

    let mut pairs = vec![(0.0, 1usize)];
    for (t, _, _, m) in &contacts {
        pairs.push((*t, *m as usize));
    }
    pairs.push((t_exit, 1));
    let divisor = Divisor::from_multiplicities(&pairs);
    debug_assert_eq!(divisor.points.first().map(|d| d.polarity), Some(Polarity::Plus));

    let _ = tol;
    Ok(ScatterResult {
        exit,
        divisor,
        chord_length: t_exit,
        grazes: contacts.iter().map(|(_, id, q, _)| (*id, *q)).collect(),
    })
}

/// The billiard map: scatter, then reflect at the exit.
pub fn billiard_map(table: &BilliardTable, state: UnitState) -> Result<UnitState, BilliardError> {
    let result = scatter(table, state)?;
    Ok(tau(table, result.exit))
}

/// Per-chord tangency statistics over random chords.
#[derive(Clone, Debug, Default, Serialize)]
pub struct TangencyCensus {
    pub chords: usize,
    /// Histogram over reduced multiplicity m' = number of tangencies.
    pub reduced_multiplicity_histogram: Vec<usize>,
    pub max_reduced_multiplicity: usize,
    pub max_simple_tangencies: usize,
    /// Chords violating the planar bounds m' <= 2 / tangencies <= 2.
    pub violations: usize,
}

pub fn tangency_census<R: Rng>(
    table: &BilliardTable,
    lines: usize,
    rng: &mut R,
) -> Result<TangencyCensus, BilliardError> {
    let mut census = TangencyCensus::default();
    census.reduced_multiplicity_histogram = vec![0; 8];
    let mut tried = 0usize;
    while census.chords < lines && tried < lines * 4 {
        tried += 1;
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let p = match &table.outer {
            Curve::Implicit { .. } => return Err(BilliardError::BadTable(
                "census over implicit outer curves is unsupported".into(),
            )),
            c => c.point_at_param(theta),
        };
        let n = table.outward_normal(0, p);
        let angle = rng.gen_range(0.05..std::f64::consts::PI - 0.05);
        let tangent = n.perp();
        let dir = tangent * angle.cos() - n * angle.sin();
        let state = UnitState::new(0, p, dir);
        if !state.is_inward(table, 1e-9) {
            continue;
        }
        let Ok(result) = scatter(table, state) else {
            continue;
        };
        let m_reduced = result.divisor.reduced_multiplicity();
        let simple_tangencies = result.grazes.len();
        census.chords += 1;
        if m_reduced < census.reduced_multiplicity_histogram.len() {
            census.reduced_multiplicity_histogram[m_reduced] += 1;
        }
        census.max_reduced_multiplicity = census.max_reduced_multiplicity.max(m_reduced);
        census.max_simple_tangencies = census.max_simple_tangencies.max(simple_tangencies);
        if m_reduced > 2 || simple_tangencies > 2 {
            census.violations += 1;
        }
    }
    Ok(census)
}

/// Tangent line from an external point to an ellipse: the two tangency
/// points in closed form (polar-line intersection). The "forward" choice
/// advances counterclockwise around the conic.
pub fn tangent_points(conic: &Curve, p: Vec2) -> Result<(Vec2, Vec2), BilliardError> {
    let (center, a, b) = match conic {
        Curve::Circle { center, radius } => (*center, *radius, *radius),
        Curve::Ellipse { center, a, b } => (*center, *a, *b),
        Curve::Implicit { .. } => {
            return Err(BilliardError::BadTable(
                "tangent construction needs a conic".into(),
            ))
        }
    };
    let d = p - center;
    let (px, py) = (d.x / a, d.y / b);
    let r = (px * px + py * py).sqrt();
    if r <= 1.0 {
        return Err(BilliardError::NoTangent);
    }
    let phi = py.atan2(px);
    let delta = (1.0 / r).acos();
    let t1 = phi + delta;
    let t2 = phi - delta;
    let q1 = center + Vec2::new(a * t1.cos(), b * t1.sin());
    let q2 = center + Vec2::new(a * t2.cos(), b * t2.sin());
    Ok((q1, q2))
}

fn forward_tangent(conic: &Curve, p: Vec2) -> Result<Vec2, BilliardError> {
    let center = match conic {
        Curve::Circle { center, .. } | Curve::Ellipse { center, .. } => *center,
        Curve::Implicit { .. } => unreachable!(),
    };
    let (q1, q2) = tangent_points(conic, p)?;
    // counterclockwise advance keeps the conic center on the left of the ray
    let pick = |q: Vec2| (q - p).cross(center - p) > 0.0;
    if pick(q1) {
        Ok(q1)
    } else if pick(q2) {
        Ok(q2)
    } else {
        Err(BilliardError::NoTangent)
    }
}

/// One Poncelet step: from a vertex on `q1`, draw the forward tangent chord
/// to `q2` and return the next vertex on `q1`.
pub fn poncelet_step(q1: &Curve, q2: &Curve, vertex: Vec2) -> Result<Vec2, BilliardError> {
    let t = forward_tangent(q2, vertex)?;
    let dir = (t - vertex).normalized();
    let span = q1.extent() * 4.0;
    let hits = q1.ray_hits(vertex, dir, 1e-9 * q1.extent(), span);
    hits.last()
        .map(|&th| vertex + dir * th)
        .ok_or(BilliardError::NoExit)
}

/// Closure residuals of `k`-step Poncelet polygons from each start.
pub fn poncelet_check(
    q1: &Curve,
    q2: &Curve,
    k: usize,
    starts: &[Vec2],
) -> Result<Vec<f64>, BilliardError> {
    let mut residuals = Vec::with_capacity(starts.len());
    for &start in starts {
        let mut vertex = start;
        for _ in 0..k {
            vertex = poncelet_step(q1, q2, vertex)?;
        }
        residuals.push(vertex.dist(start));
    }
    Ok(residuals)
}

/// Search a confocal family `x²/(A-λ) + y²/(B-λ) = 1` for the inner conic
/// closing `k`-gons inscribed in `q1`, by bisection on the angular defect.
pub fn find_confocal_closure(
    a2: f64,
    b2: f64,
    k: usize,
) -> Result<Curve, BilliardError> {
    let q1 = Curve::ellipse(Vec2::default(), a2.sqrt(), b2.sqrt());
    let start = q1.point_at_param(0.3);
    let defect = |lambda: f64| -> Result<f64, BilliardError> {
        let q2 = Curve::ellipse(
            Vec2::default(),
            (a2 - lambda).sqrt(),
            (b2 - lambda).sqrt(),
        );
        let mut vertex = start;
        let mut total = 0.0;
        let mut prev_angle = vertex.y.atan2(vertex.x);
        for _ in 0..k {
            vertex = poncelet_step(&q1, &q2, vertex)?;
            let angle = vertex.y.atan2(vertex.x);
            let mut step = angle - prev_angle;
            while step <= 0.0 {
                step += std::f64::consts::TAU;
            }
            total += step;
            prev_angle = angle;
        }
        Ok(total - std::f64::consts::TAU)
    };
    // large λ: small inner conic, big angular steps; small λ: tight fit
    let mut lo = 1e-3 * b2;
    let mut hi = 0.999 * b2;
    let (d_lo, d_hi) = (defect(lo)?, defect(hi)?);
    if d_lo * d_hi > 0.0 {
        return Err(BilliardError::NoTangent);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let d = defect(mid)?;
        if d * d_lo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    Ok(Curve::ellipse(
        Vec2::default(),
        (a2 - lambda).sqrt(),
        (b2 - lambda).sqrt(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_disk_table() -> BilliardTable {
        BilliardTable::new(Curve::circle(Vec2::default(), 1.0), vec![]).unwrap()
    }

    fn shell() -> BilliardTable {
        BilliardTable::new(
            Curve::circle(Vec2::default(), 2.0),
            vec![Curve::circle(Vec2::default(), 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn tau_is_an_involution() {
        let table = unit_disk_table();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let p = table.outer.point_at_param(theta);
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let dir = Vec2::new(angle.cos(), angle.sin());
            let state = UnitState::new(0, p, dir);
            let back = tau(&table, tau(&table, state));
            assert!((back.dir - state.dir).norm() < 1e-14);
        }
        // pure normal incidence flips to pure normal exit at the same point
        let p = Vec2::new(1.0, 0.0);
        let state = UnitState::new(0, p, Vec2::new(-1.0, 0.0));
        let flipped = tau(&table, state);
        assert!((flipped.dir - Vec2::new(1.0, 0.0)).norm() < 1e-14);
        // tangent states are fixed
        let tangent = UnitState::new(0, p, Vec2::new(0.0, 1.0));
        let fixed = tau(&table, tangent);
        assert!((fixed.dir - tangent.dir).norm() < 1e-14);
    }

    #[test]
    fn circle_chord_formula() {
        let table = unit_disk_table();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let e = table.outer.point_at_param(theta);
            let n = table.outward_normal(0, e);
            let angle = rng.gen_range(0.1..std::f64::consts::PI - 0.1);
            let dir = n.perp() * angle.cos() - n * angle.sin();
            let state = UnitState::new(0, e, dir);
            let result = scatter(&table, state).unwrap();
            let expect = e - dir * (2.0 * e.dot(dir));
            assert!(
                result.exit.point.dist(expect) < 1e-9,
                "{:?} vs {expect:?}",
                result.exit.point
            );
            assert_eq!(result.divisor.word().to_string(), "11");
        }
    }

    #[test]
    fn shell_tangency_detection() {
        let table = shell();
        // line y = 1 grazes the inner circle at (0, 1)
        let entry = Vec2::new(-(3.0f64).sqrt(), 1.0);
        let state = UnitState::new(0, entry, Vec2::new(1.0, 0.0));
        let result = scatter(&table, state).unwrap();
        assert_eq!(result.divisor.word().to_string(), "121");
        assert_eq!(result.grazes.len(), 1);
        let (id, q) = result.grazes[0];
        assert_eq!(id, 1);
        assert!(q.x.abs() < 1e-7 && (q.y - 1.0).abs() < 1e-7);

        // line y = 1.5 misses it
        let entry = Vec2::new(-(4.0 - 2.25f64).sqrt(), 1.5);
        let state = UnitState::new(0, entry, Vec2::new(1.0, 0.0));
        let result = scatter(&table, state).unwrap();
        assert_eq!(result.divisor.word().to_string(), "11");
        assert!(result.grazes.is_empty());

        // line y = 0.5 hits the obstacle transversally: chord ends there
        let entry = Vec2::new(-(4.0 - 0.25f64).sqrt(), 0.5);
        let state = UnitState::new(0, entry, Vec2::new(1.0, 0.0));
        let result = scatter(&table, state).unwrap();
        assert_eq!(result.exit.curve, 1);
        assert!(result.exit.point.x < 0.0);
    }

    #[test]
    fn circle_billiard_conserves_incidence_angle() {
        let table = unit_disk_table();
        let p = table.outer.point_at_param(0.7);
        let n = table.outward_normal(0, p);
        let psi = 0.83f64;
        let dir = n.perp() * psi.cos() - n * psi.sin();
        let mut state = UnitState::new(0, p, dir);
        let initial = state.normal_component(&table).abs();
        let mut prev_angle = state.point.y.atan2(state.point.x);
        for _ in 0..10_000 {
            state = billiard_map(&table, state).unwrap();
            assert!(state.is_inward(&table, 0.0));
            // each bounce advances the boundary position by 2ψ
            let angle = state.point.y.atan2(state.point.x);
            let advance = (angle - prev_angle).rem_euclid(std::f64::consts::TAU);
            assert!((advance - 2.0 * psi).abs() < 1e-9, "advance {advance}");
            prev_angle = angle;
        }
        let final_angle = state.normal_component(&table).abs();
        assert!(
            (final_angle - initial).abs() < 1e-9,
            "{final_angle} vs {initial}"
        );
    }

    #[test]
    fn billiard_map_preserves_inwardness_on_shell() {
        let table = shell();
        let p = table.outer.point_at_param(1.1);
        let n = table.outward_normal(0, p);
        let dir = n.perp() * 0.2 - n * 0.98;
        let mut state = UnitState::new(0, p, dir.normalized());
        for _ in 0..1000 {
            state = billiard_map(&table, state).unwrap();
            assert!(state.is_inward(&table, 0.0), "at {:?}", state.point);
        }
    }

    #[test]
    fn poncelet_triangle_closure_for_half_radius() {
        let q1 = Curve::circle(Vec2::default(), 1.0);
        let q2 = Curve::circle(Vec2::default(), 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let starts: Vec<Vec2> = (0..10)
            .map(|_| q1.point_at_param(rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let residuals = poncelet_check(&q1, &q2, 3, &starts).unwrap();
        for r in &residuals {
            assert!(*r <= 1e-6, "triangle residual {r}");
        }
        let residuals = poncelet_check(&q1, &q2, 4, &starts).unwrap();
        for r in &residuals {
            assert!(*r > 0.1, "square should not close: {r}");
        }
    }

    #[test]
    fn confocal_three_closure_found_by_bisection() {
        let q2 = find_confocal_closure(4.0, 2.25, 3).unwrap();
        let q1 = Curve::ellipse(Vec2::default(), 2.0, 1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let starts: Vec<Vec2> = (0..10)
            .map(|_| q1.point_at_param(rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let residuals = poncelet_check(&q1, &q2, 3, &starts).unwrap();
        for r in residuals {
            assert!(r <= 1e-6, "closure residual {r}");
        }
    }

    #[test]
    fn census_on_shell_respects_bounds() {
        let table = shell();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let census = tangency_census(&table, 20_000, &mut rng).unwrap();
        assert_eq!(census.violations, 0);
        assert!(census.max_reduced_multiplicity <= 1);

        // convex table without obstacles: no tangencies at all
        let disk = unit_disk_table();
        let census = tangency_census(&disk, 5_000, &mut rng).unwrap();
        assert_eq!(census.max_reduced_multiplicity, 0);
    }

    #[test]
    fn common_tangent_line_counts_two_tangencies() {
        let table = BilliardTable::new(
            Curve::circle(Vec2::default(), 4.0),
            vec![
                Curve::circle(Vec2::new(-1.5, 0.0), 0.7),
                Curve::circle(Vec2::new(1.5, 0.0), 0.7),
            ],
        )
        .unwrap();
        // the external common tangent y = 0.7
        let entry = Vec2::new(-(16.0 - 0.49f64).sqrt(), 0.7);
        let state = UnitState::new(0, entry, Vec2::new(1.0, 0.0));
        let result = scatter(&table, state).unwrap();
        assert_eq!(result.grazes.len(), 2);
        assert_eq!(result.divisor.word().to_string(), "1221");
        assert_eq!(result.divisor.reduced_multiplicity(), 2);

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let census = tangency_census(&table, 20_000, &mut rng).unwrap();
        assert_eq!(census.violations, 0);
        assert!(census.max_reduced_multiplicity <= 2);
    }

    /// Shell scattering matches the flow-simulator causality on the annulus
    /// with the horizontal field, where both are defined.
    #[test]
    fn shell_matches_flow_causality() {
        use crate::domain::Domain2D;
        use crate::flow::{trace_trajectory, Controls, FlowField};

        let table = shell();
        let domain = Domain2D::new(
            Expr::parse("(4 - x^2 - y^2) * (x^2 + y^2 - 1)").unwrap(),
            Vec2::new(-2.5, -2.5),
            Vec2::new(2.5, 2.5),
            2048,
        )
        .unwrap();
        let field = FlowField::new(Expr::parse("1").unwrap(), Expr::parse("0").unwrap());
        let ctl = Controls::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut compared = 0;
        for _ in 0..100 {
            let y0: f64 = rng.gen_range(-1.95..1.95);
            if (y0.abs() - 1.0).abs() < 1e-3 {
                continue; // skip the tangent chords themselves
            }
            let entry = Vec2::new(-(4.0 - y0 * y0).sqrt(), y0);
            let state = UnitState::new(0, entry, Vec2::new(1.0, 0.0));
            let chord = scatter(&table, state).unwrap();
            let traj = trace_trajectory(&domain, &field, entry, &ctl).unwrap();
            // flow causality ends at the next divisor point; the chord ends at
            // the first transversal hit
            let flow_next = traj.divisor[1].point;
            assert!(
                chord.exit.point.dist(flow_next) < 1e-6,
                "chord {:?} vs flow {:?}",
                chord.exit.point,
                flow_next
            );
            compared += 1;
        }
        assert!(compared > 80);
    }
}
