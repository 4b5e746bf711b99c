//! Ground-truth trajectory integration for planar traversing fields.
//!
//! Trajectories of `x' = v(x)` through a domain `{w >= 0}` are integrated
//! with an adaptive embedded Runge–Kutta pair; boundary events (transversal
//! crossings and interior grazes of `{w = 0}`) are bracketed on the dense
//! output and refined by bisection, with divisor points Newton-polished onto
//! the boundary.
//!
//! Stratum convention: a boundary point is `(j, sign)` where `j >= 1` is the
//! smallest order with `|L_v^j w| > tol` and `sign` is the sign of that
//! derivative; `L_v` is the flow derivative. `∂_1^+` (first derivative
//! positive, `w` increasing into the domain) is the entry set; singleton
//! tangencies sit in `∂_2^-`, pass-through tangencies in `∂_2^+`.

use crate::domain::{Domain2D, DomainError};
use crate::expr::{Expr, Program};
use crate::geom::Vec2;
use crate::jet::{self, JetError};
use crate::omega::OmegaWord;
use rand::Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Stratum {
    pub order: u8,
    /// +1 or -1.
    pub sign: i8,
}

impl Stratum {
    pub fn is_entry(&self) -> bool {
        self.order == 1 && self.sign > 0 || self.order == 2 && self.sign > 0
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundaryPoint {
    pub component: usize,
    pub s: f64,
    pub point: Vec2,
    pub stratum: Stratum,
}

/// One trajectory divisor entry: a boundary intersection with multiplicity.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrajectoryPoint {
    pub component: usize,
    pub s: f64,
    pub point: Vec2,
    pub multiplicity: u8,
    /// Sign of the first nonvanishing flow derivative of `w`.
    pub sign: i8,
    pub time: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub divisor: Vec<TrajectoryPoint>,
    pub omega: OmegaWord,
    pub transit_time: f64,
    /// Sampled states (time, position) for dumps and rendering.
    pub polyline: Vec<(f64, Vec2)>,
}

impl Trajectory {
    pub fn is_singleton(&self) -> bool {
        self.divisor.len() == 1
    }

    pub fn entry(&self) -> &TrajectoryPoint {
        &self.divisor[0]
    }

    pub fn exit(&self) -> &TrajectoryPoint {
        self.divisor.last().unwrap()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FlowError {
    #[error("point is not on the boundary (w = {0})")]
    NotOnBoundary(f64),
    #[error("no flow derivative of w up to order 4 exceeds tolerance at ({x}, {y})")]
    Degenerate { x: f64, y: f64 },
    #[error("tangency of multiplicity >= 3 within tolerance at ({x}, {y}): field is not generic here")]
    NonGenericTangency { x: f64, y: f64 },
    #[error("entry point lies in stratum ({order}, {sign}); tracing starts on ∂_1^+ or ∂_2^+")]
    NotEntry { order: u8, sign: i8 },
    #[error("time budget exceeded after t = {0}: field may not be traversing")]
    TimeBudgetExceeded(f64),
    #[error("df(v) = {0} <= 0 along a trajectory: height function is not monotone")]
    MonotonicityViolation(f64),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// A planar field given by component expressions.
#[derive(Clone, Debug)]
pub struct FlowField {
    pub vx: Expr,
    pub vy: Expr,
    px: Program,
    py: Program,
}

impl FlowField {
    pub fn new(vx: Expr, vy: Expr) -> FlowField {
        let px = Program::compile(&vx);
        let py = Program::compile(&vy);
        FlowField { vx, vy, px, py }
    }

    pub fn eval(&self, p: Vec2) -> Vec2 {
        Vec2::new(self.px.eval(p), self.py.eval(p))
    }

    pub fn reversed(&self) -> FlowField {
        FlowField::new(self.vx.clone().neg(), self.vy.clone().neg())
    }

    /// Flow derivatives `(w, L_v w, ..., L_v^k w)` at `p`.
    pub fn lie_jet(&self, w: &Expr, p: Vec2, order: usize) -> Result<Vec<f64>, JetError> {
        jet::lie_jet(w, (&self.vx, &self.vy), p, order)
    }
}

/// Integration and event tolerances, scaled by the domain diameter where
/// dimensional.
#[derive(Clone, Copy, Debug)]
pub struct Controls {
    pub tau_bnd_rel: f64,
    pub tau_graze_rel: f64,
    pub tau_lie_rel: f64,
    pub ode_rtol: f64,
    pub ode_atol_rel: f64,
    pub max_time_factor: f64,
}

impl Default for Controls {
    fn default() -> Self {
        Controls {
            tau_bnd_rel: 1e-9,
            tau_graze_rel: 1e-7,
            tau_lie_rel: 1e-6,
            ode_rtol: 1e-10,
            ode_atol_rel: 1e-12,
            max_time_factor: 60.0,
        }
    }
}

/// Classify a boundary point by the first nonvanishing flow derivative.
pub fn classify_boundary_point(
    domain: &Domain2D,
    field: &FlowField,
    p: Vec2,
    ctl: &Controls,
) -> Result<Stratum, FlowError> {
    let w_here = domain.eval_w(p);
    if w_here.abs() > ctl.tau_bnd_rel * domain.diameter() * 1e3 {
        return Err(FlowError::NotOnBoundary(w_here));
    }
    let jets = field.lie_jet(domain.w(), p, 4)?;
    let scale = jets[1..]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    for (k, &value) in jets.iter().enumerate().skip(1) {
        if value.abs() > ctl.tau_lie_rel * scale {
            return Ok(Stratum {
                order: k as u8,
                sign: if value > 0.0 { 1 } else { -1 },
            });
        }
    }
    Err(FlowError::Degenerate { x: p.x, y: p.y })
}

// Dormand–Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Step {
    t0: f64,
    h: f64,
    y0: Vec2,
    y1: Vec2,
    f0: Vec2,
    f1: Vec2,
}

impl Step {
    /// Cubic Hermite dense output; used only to seed event refinement.
    fn at(&self, t: f64) -> Vec2 {
        let s = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        self.y0 * h00 + self.f0 * (h10 * self.h) + self.y1 * h01 + self.f1 * (h11 * self.h)
    }

    /// Re-integrated state at `t` within the step: one embedded-pair step
    /// from the step start, so the local error matches the accepted step's.
    fn at_exact(&self, field: &FlowField, t: f64) -> Vec2 {
        let dt = (t - self.t0).clamp(0.0, self.h);
        if dt == 0.0 {
            return self.y0;
        }
        rk_step(field, self.t0, self.y0, dt).0
    }
}

fn rk_step(field: &FlowField, t: f64, y: Vec2, h: f64) -> (Vec2, f64, Vec2, Vec2) {
    let mut k = [Vec2::default(); 7];
    k[0] = field.eval(y);
    for stage in 0..6 {
        let mut acc = Vec2::default();
        for j in 0..=stage {
            acc = acc + k[j] * A[stage][j];
        }
        k[stage + 1] = field.eval(y + acc * h);
    }
    let mut y5 = y;
    let mut y4 = y;
    for j in 0..7 {
        y5 = y5 + k[j] * (B5[j] * h);
        y4 = y4 + k[j] * (B4[j] * h);
    }
    let _ = t;
    ((y5), (y5 - y4).norm(), k[0], k[6])
}

enum Event {
    /// Transversal exit at time t.
    Crossing(f64),
    /// Interior graze (local minimum of w within the graze band) at time t.
    Graze(f64),
}

/// Scan one accepted step for the earliest boundary event. Events are
/// bracketed on the Hermite interpolant, then polished against re-integrated
/// states so positions are integrator-accurate rather than
/// interpolant-accurate.
fn scan_step(
    domain: &Domain2D,
    field: &FlowField,
    step: &Step,
    w0: f64,
    w1: f64,
    dw0: f64,
    dw1: f64,
    tau_graze: f64,
) -> Result<Option<Event>, FlowError> {
    // interior local minimum of w: flow derivative changes - to +
    if dw0 < 0.0 && dw1 > 0.0 {
        let mut lo = step.t0;
        let mut hi = step.t0 + step.h;
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            let d = field.lie_jet(domain.w(), step.at(mid), 1)?[1];
            if d < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // polish the critical time on re-integrated states
        let mut t_min = 0.5 * (lo + hi);
        for _ in 0..4 {
            let p = step.at_exact(field, t_min);
            let jets = field.lie_jet(domain.w(), p, 2)?;
            if jets[2].abs() < 1e-300 {
                break;
            }
            t_min = (t_min - jets[1] / jets[2]).clamp(step.t0, step.t0 + step.h);
        }
        let w_min = domain.eval_w(step.at_exact(field, t_min));
        if w_min < -tau_graze {
            // actual crossing happened before the minimum
            let t_cross = refine_crossing(domain, field, step, step.t0, t_min)?;
            return Ok(Some(Event::Crossing(t_cross)));
        }
        if w_min <= tau_graze {
            return Ok(Some(Event::Graze(t_min)));
        }
        let _ = w0;
    }
    if w1 < 0.0 {
        let t_cross = refine_crossing(domain, field, step, step.t0, step.t0 + step.h)?;
        return Ok(Some(Event::Crossing(t_cross)));
    }
    Ok(None)
}

/// Crossing time of `{w = 0}` inside `[lo, hi]`: Hermite bisection to seed,
/// Newton on re-integrated states to finish.
fn refine_crossing(
    domain: &Domain2D,
    field: &FlowField,
    step: &Step,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64, FlowError> {
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if domain.eval_w(step.at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..4 {
        let p = step.at_exact(field, t);
        let jets = field.lie_jet(domain.w(), p, 1)?;
        if jets[1].abs() < 1e-300 {
            break;
        }
        let next = t - jets[0] / jets[1];
        if next.is_finite() {
            t = next.clamp(step.t0, step.t0 + step.h);
        }
    }
    Ok(t)
}

/// Integrate the trajectory of `field` through the entry point `entry`
/// (given on the boundary), collecting its boundary divisor.
pub fn trace_trajectory(
    domain: &Domain2D,
    field: &FlowField,
    entry: Vec2,
    ctl: &Controls,
) -> Result<Trajectory, FlowError> {
    let diam = domain.diameter();
    let entry = domain.project_to_boundary(entry)?;
    let stratum = classify_boundary_point(domain, field, entry, ctl)?;
    if stratum.order >= 3 {
        return Err(FlowError::NonGenericTangency {
            x: entry.x,
            y: entry.y,
        });
    }
    let (comp, s) = domain.locate(entry);
    let entry_point = TrajectoryPoint {
        component: comp,
        s,
        point: entry,
        multiplicity: stratum.order,
        sign: stratum.sign,
        time: 0.0,
    };
    if stratum.order == 2 && stratum.sign < 0 {
        // boundary singleton
        return Ok(Trajectory {
            divisor: vec![entry_point],
            omega: OmegaWord::new(vec![2]),
            transit_time: 0.0,
            polyline: vec![(0.0, entry)],
        });
    }
    if !stratum.is_entry() {
        return Err(FlowError::NotEntry {
            order: stratum.order,
            sign: stratum.sign,
        });
    }

    let mut divisor = vec![entry_point];
    let mut polyline = vec![(0.0, entry)];
    let speed = field.eval(entry).norm().max(1e-6);
    let t_max = ctl.max_time_factor * diam / speed;
    let tau_graze = ctl.tau_graze_rel * diam;
    let tau_arm = (10.0f64 * ctl.tau_bnd_rel * diam).max(0.3 * tau_graze);
    let atol = ctl.ode_atol_rel * diam;
    let h_max = diam / 24.0;

    let mut t = 0.0;
    let mut y = entry;
    let mut h = diam / 1e4;
    let mut armed = false;
    let mut w_cur = domain.eval_w(y);
    let mut dw_cur = field.lie_jet(domain.w(), y, 1)?[1];

    while t < t_max {
        h = h.min(h_max).min(t_max - t + h_max * 1e-6);
        let (y1, err, f0, f1) = rk_step(field, t, y, h);
        let tol = atol + ctl.ode_rtol * y.norm().max(y1.norm());
        if err > tol && h > 1e-13 * diam {
            h *= (0.9 * (tol / err).powf(0.2)).clamp(0.2, 1.0);
            continue;
        }
        let step = Step {
            t0: t,
            h,
            y0: y,
            y1,
            f0,
            f1,
        };
        let w_next = domain.eval_w(y1);
        let dw_next = field.lie_jet(domain.w(), y1, 1)?[1];

        if armed {
            match scan_step(
                domain, field, &step, w_cur, w_next, dw_cur, dw_next, tau_graze,
            )? {
                Some(Event::Crossing(t_ev)) => {
                    let p = domain.project_to_boundary(step.at_exact(field, t_ev))?;
                    let st = classify_boundary_point(domain, field, p, ctl)?;
                    if st.order >= 3 {
                        return Err(FlowError::NonGenericTangency { x: p.x, y: p.y });
                    }
                    let (comp, s) = domain.locate(p);
                    divisor.push(TrajectoryPoint {
                        component: comp,
                        s,
                        point: p,
                        multiplicity: 1,
                        sign: -1,
                        time: t_ev,
                    });
                    polyline.push((t_ev, p));
                    let word =
                        OmegaWord::new(divisor.iter().map(|d| d.multiplicity as u32).collect());
                    return Ok(Trajectory {
                        divisor,
                        omega: word,
                        transit_time: t_ev,
                        polyline,
                    });
                }
                Some(Event::Graze(t_ev)) => {
                    let p = domain.project_to_boundary(step.at_exact(field, t_ev))?;
                    let st = classify_boundary_point(domain, field, p, ctl)?;
                    if st.order >= 3 {
                        return Err(FlowError::NonGenericTangency { x: p.x, y: p.y });
                    }
                    let (comp, s) = domain.locate(p);
                    divisor.push(TrajectoryPoint {
                        component: comp,
                        s,
                        point: p,
                        multiplicity: 2,
                        sign: st.sign,
                        time: t_ev,
                    });
                    polyline.push((t_ev, p));
                    armed = false;
                }
                None => {}
            }
        }
        if !armed && w_next > tau_arm {
            armed = true;
        }

        t += h;
        y = y1;
        w_cur = w_next;
        dw_cur = dw_next;
        polyline.push((t, y));
        if err > 0.0 {
            h *= (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0);
        } else {
            h *= 5.0;
        }
    }
    Err(FlowError::TimeBudgetExceeded(t_max))
}

/// An oriented arc of `∂_1^±` between consecutive tangency points.
#[derive(Clone, Debug, Serialize)]
pub struct StratumArc {
    pub component: usize,
    pub s_start: f64,
    pub s_end: f64,
    /// +1 entry arc, -1 exit arc.
    pub sign: i8,
    /// True when the arc is a whole boundary component without tangencies.
    pub full_cycle: bool,
}

impl StratumArc {
    pub fn arc_length(&self, comp_len: f64) -> f64 {
        if self.full_cycle {
            comp_len
        } else {
            (self.s_end - self.s_start).rem_euclid(comp_len)
        }
    }

    pub fn contains(&self, s: f64, comp_len: f64) -> bool {
        if self.full_cycle {
            return true;
        }
        let rel = (s - self.s_start).rem_euclid(comp_len);
        rel <= self.arc_length(comp_len)
    }
}

/// Boundary stratification: `∂_2^±` points and the `∂_1^±` arcs between them.
#[derive(Clone, Debug, Serialize)]
pub struct Strata {
    pub tangencies: Vec<BoundaryPoint>,
    pub arcs: Vec<StratumArc>,
}

impl Strata {
    pub fn entry_arcs(&self) -> impl Iterator<Item = &StratumArc> {
        self.arcs.iter().filter(|a| a.sign > 0)
    }

    pub fn tangencies_on(&self, component: usize) -> impl Iterator<Item = &BoundaryPoint> {
        self.tangencies
            .iter()
            .filter(move |t| t.component == component)
    }
}

/// Locate `∂_2` points (sign changes of `L_v w` along each component) and
/// label the arcs between them.
pub fn strata(
    domain: &Domain2D,
    field: &FlowField,
    samples_per_component: usize,
    ctl: &Controls,
) -> Result<Strata, FlowError> {
    let n = samples_per_component.max(16);
    let mut tangencies = Vec::new();
    let mut arcs = Vec::new();
    for (ci, comp) in domain.components.iter().enumerate() {
        let lw = |s: f64| -> Result<f64, FlowError> {
            let p = domain.point_at(ci, s)?;
            Ok(field.lie_jet(domain.w(), p, 1)?[1])
        };
        let mut values = Vec::with_capacity(n);
        for k in 0..n {
            values.push(lw(comp.length * k as f64 / n as f64)?);
        }
        let mut zeros = Vec::new();
        for k in 0..n {
            let a = values[k];
            let b = values[(k + 1) % n];
            if a == 0.0 || a * b < 0.0 {
                let mut lo = comp.length * k as f64 / n as f64;
                let mut hi = comp.length * (k + 1) as f64 / n as f64;
                let sign_lo = if a != 0.0 { a.signum() } else { -b.signum() };
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if lw(mid)?.signum() == sign_lo {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let s_t = 0.5 * (lo + hi);
                let p = domain.point_at(ci, s_t)?;
                let st = classify_boundary_point(domain, field, p, ctl)?;
                if st.order < 2 {
                    // sampling artifact: L_v w grazes zero without crossing
                    continue;
                }
                if st.order >= 3 {
                    return Err(FlowError::NonGenericTangency { x: p.x, y: p.y });
                }
                zeros.push(BoundaryPoint {
                    component: ci,
                    s: s_t,
                    point: p,
                    stratum: st,
                });
            }
        }
        zeros.sort_by(|a, b| a.s.total_cmp(&b.s));
        if zeros.is_empty() {
            let sign = if values[0] > 0.0 { 1 } else { -1 };
            arcs.push(StratumArc {
                component: ci,
                s_start: 0.0,
                s_end: comp.length,
                sign,
                full_cycle: true,
            });
        } else {
            for k in 0..zeros.len() {
                let s_start = zeros[k].s;
                let s_end = zeros[(k + 1) % zeros.len()].s;
                let span = (s_end - s_start).rem_euclid(comp.length);
                let mid = (s_start + 0.5 * span.max(comp.length * 1e-9)).rem_euclid(comp.length);
                let sign = if lw(mid)? > 0.0 { 1 } else { -1 };
                arcs.push(StratumArc {
                    component: ci,
                    s_start,
                    s_end,
                    sign,
                    full_cycle: false,
                });
            }
            tangencies.extend(zeros);
        }
    }
    Ok(Strata { tangencies, arcs })
}

/// Traversing check: integrate forward and backward from interior probes;
/// pass iff every probe exits the domain within the time budget.
#[derive(Clone, Debug, Serialize)]
pub struct TraversingReport {
    pub pass: bool,
    pub probes: usize,
    pub failures: Vec<(f64, f64, String)>,
}

pub fn check_traversing(
    domain: &Domain2D,
    field: &FlowField,
    probes: usize,
    seed: u64,
    ctl: &Controls,
) -> TraversingReport {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let diam = domain.diameter();
    let reversed = field.reversed();
    let mut failures = Vec::new();
    let mut found = 0usize;
    let mut attempts = 0usize;
    while found < probes && attempts < probes * 200 {
        attempts += 1;
        let p = Vec2::new(
            rng.gen_range(domain.bbox_lo.x..domain.bbox_hi.x),
            rng.gen_range(domain.bbox_lo.y..domain.bbox_hi.y),
        );
        if domain.eval_w(p) < 1e-3 * diam {
            continue;
        }
        found += 1;
        for (dir, f) in [("forward", field), ("backward", &reversed)] {
            if !exits_domain(domain, f, p, ctl) {
                failures.push((p.x, p.y, format!("{dir} orbit stayed interior")));
            }
        }
    }
    TraversingReport {
        pass: failures.is_empty() && found == probes,
        probes: found,
        failures,
    }
}

fn exits_domain(domain: &Domain2D, field: &FlowField, start: Vec2, ctl: &Controls) -> bool {
    let diam = domain.diameter();
    let speed = field.eval(start).norm().max(1e-9);
    let t_max = ctl.max_time_factor * diam / speed;
    let mut t = 0.0;
    let mut y = start;
    let mut h = diam / 1e3;
    while t < t_max {
        let (y1, err, _, _) = rk_step(field, t, y, h);
        let tol = ctl.ode_atol_rel * diam + 1e-8 * y.norm().max(1.0);
        if err > tol && h > 1e-12 * diam {
            h *= 0.5;
            continue;
        }
        if domain.eval_w(y1) < 0.0 {
            return true;
        }
        t += h;
        y = y1;
        h = (h * 1.5).min(diam / 24.0);
    }
    false
}

/// Per-trajectory interval of a height function `f` with `df(v) > 0`,
/// with the divisor marks: the vertical-segment picture of the domain
/// embedded in (trajectory space) × ℝ.
#[derive(Clone, Debug, Serialize)]
pub struct AlphaInterval {
    pub trajectory: usize,
    pub f_entry: f64,
    pub f_exit: f64,
    pub marks: Vec<f64>,
}

pub fn embed_alpha(
    trajectories: &[Trajectory],
    f: &Expr,
    field: &FlowField,
) -> Result<Vec<AlphaInterval>, FlowError> {
    let mut out = Vec::with_capacity(trajectories.len());
    for (idx, traj) in trajectories.iter().enumerate() {
        for &(_, p) in traj.polyline.iter().step_by(4.max(traj.polyline.len() / 16)) {
            let df = jet::lie_jet(f, (&field.vx, &field.vy), p, 1)?[1];
            if df <= 0.0 {
                return Err(FlowError::MonotonicityViolation(df));
            }
        }
        let marks: Result<Vec<f64>, _> = traj.divisor.iter().map(|d| f.eval(d.point)).collect();
        let marks = marks.map_err(|_| FlowError::MonotonicityViolation(f64::NAN))?;
        out.push(AlphaInterval {
            trajectory: idx,
            f_entry: *marks.first().unwrap(),
            f_exit: *marks.last().unwrap(),
            marks,
        });
    }
    Ok(out)
}
