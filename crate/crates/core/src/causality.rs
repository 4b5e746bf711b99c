//! The discrete boundary causality table.
//!
//! For sampled entry points on the `∂_1^+` arcs (plus the tangency points
//! themselves), the table records the *next* boundary point along the
//! trajectory. Pass-through tangencies get explicit continuation rows, so the
//! multi-step structure of the map is kept as "map plus iterations" rather
//! than a multi-valued image. Fixed rows mark the boundary singletons.

use crate::domain::Domain2D;
use crate::expr::Expr;
use crate::flow::{
    self, strata, trace_trajectory, Controls, FlowError, Strata, Stratum, Trajectory,
};
use crate::geom::Vec2;
use crate::omega::OmegaWord;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RowKind {
    /// Uniform sample on an entry arc.
    Sample,
    /// Exact preimage of a pass-through tangency (head of its chain).
    TangencyHead,
    /// Continuation at a pass-through tangency.
    Continuation,
    /// Boundary singleton.
    Fixed,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub enum RowImage {
    Point {
        component: usize,
        s: f64,
        point: Vec2,
    },
    Fixed,
}

#[derive(Clone, Debug, Serialize)]
pub struct CausalityRow {
    pub kind: RowKind,
    pub component: usize,
    pub s: f64,
    pub point: Vec2,
    pub stratum: Stratum,
    pub image: RowImage,
    pub transit_time: f64,
    /// Word of the full trajectory this row's entry lies on (ground truth
    /// annotation; reconstruction code must not read it).
    pub word: OmegaWord,
    pub f_entry: f64,
    pub f_image: f64,
}

impl CausalityRow {
    pub fn image_key(&self) -> Option<(usize, f64)> {
        match self.image {
            RowImage::Point { component, s, .. } => Some((component, s)),
            RowImage::Fixed => None,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self.image, RowImage::Fixed)
    }
}

/// Height function used for the semicontinuity data.
#[derive(Clone, Debug, Serialize)]
pub enum Height {
    /// Inner product with a fixed direction (the field's average direction).
    Direction { x: f64, y: f64 },
    /// An expression with `df(v) > 0`.
    Function(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct CausalityTable {
    pub rows: Vec<CausalityRow>,
    pub height: Height,
    /// Arc length of each boundary component.
    pub component_lengths: Vec<f64>,
    pub samples_per_arc: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Domain(#[from] crate::domain::DomainError),
    #[error("height function failed to evaluate")]
    Height,
}

fn height_value(height: &HeightEval, p: Vec2) -> Result<f64, TableError> {
    match height {
        HeightEval::Direction(d) => Ok(d.dot(p)),
        HeightEval::Function(f) => f.eval(p).map_err(|_| TableError::Height),
    }
}

enum HeightEval {
    Direction(Vec2),
    Function(Expr),
}

/// Average field direction over the boundary samples, normalized; the
/// default height is the inner product with it.
fn average_direction(domain: &Domain2D, field: &flow::FlowField) -> Vec2 {
    let mut acc = Vec2::default();
    for comp in &domain.components {
        for p in comp.points.iter().step_by(16) {
            let v = field.eval(*p);
            let n = v.norm();
            if n > 1e-12 {
                acc = acc + v / n;
            }
        }
    }
    if acc.norm() < 1e-9 {
        Vec2::new(1.0, 0.0)
    } else {
        acc.normalized()
    }
}

/// Emit the rows a traced trajectory contributes: the entry row plus one
/// continuation row per interior tangency.
fn rows_from_trajectory(
    traj: &Trajectory,
    kind: RowKind,
    height: &HeightEval,
) -> Result<Vec<CausalityRow>, TableError> {
    let mut rows = Vec::new();
    if traj.is_singleton() {
        let d = &traj.divisor[0];
        let f = height_value(height, d.point)?;
        rows.push(CausalityRow {
            kind: RowKind::Fixed,
            component: d.component,
            s: d.s,
            point: d.point,
            stratum: Stratum { order: 2, sign: -1 },
            image: RowImage::Fixed,
            transit_time: 0.0,
            word: traj.omega.clone(),
            f_entry: f,
            f_image: f,
        });
        return Ok(rows);
    }
    for k in 0..traj.divisor.len() - 1 {
        let from = &traj.divisor[k];
        let to = &traj.divisor[k + 1];
        if from.multiplicity == 1 && from.sign < 0 {
            continue; // exits are not in the domain of the map
        }
        let row_kind = if k == 0 { kind } else { RowKind::Continuation };
        rows.push(CausalityRow {
            kind: row_kind,
            component: from.component,
            s: from.s,
            point: from.point,
            stratum: Stratum {
                order: from.multiplicity,
                sign: from.sign,
            },
            image: RowImage::Point {
                component: to.component,
                s: to.s,
                point: to.point,
            },
            transit_time: to.time - from.time,
            word: traj.omega.clone(),
            f_entry: height_value(height, from.point)?,
            f_image: height_value(height, to.point)?,
        });
    }
    Ok(rows)
}

/// Build the causality table: `samples_per_arc` uniform samples on every
/// entry arc, plus exact rows at every tangency (fixed rows at `∂_2^-`
/// singletons; head and continuation rows through `∂_2^+` junctions).
pub fn compute_table(
    domain: &Domain2D,
    field: &flow::FlowField,
    samples_per_arc: usize,
    height_fn: Option<&Expr>,
    ctl: &Controls,
) -> Result<CausalityTable, TableError> {
    let st = strata(domain, field, (samples_per_arc * 2).max(512), ctl)?;
    compute_table_with_strata(domain, field, &st, samples_per_arc, height_fn, ctl)
}

pub fn compute_table_with_strata(
    domain: &Domain2D,
    field: &flow::FlowField,
    st: &Strata,
    samples_per_arc: usize,
    height_fn: Option<&Expr>,
    ctl: &Controls,
) -> Result<CausalityTable, TableError> {
    let height_meta;
    let height = match height_fn {
        Some(f) => {
            height_meta = Height::Function(f.to_string());
            HeightEval::Function(f.clone())
        }
        None => {
            let d = average_direction(domain, field);
            height_meta = Height::Direction { x: d.x, y: d.y };
            HeightEval::Direction(d)
        }
    };

    let mut rows: Vec<CausalityRow> = Vec::new();

    for arc in st.entry_arcs() {
        let comp_len = domain.components[arc.component].length;
        let len = arc.arc_length(comp_len);
        for i in 0..samples_per_arc {
            let s = (arc.s_start + len * (i as f64 + 0.5) / samples_per_arc as f64)
                .rem_euclid(comp_len);
            let p = domain.point_at(arc.component, s)?;
            // skip samples that collapse into a tangency within classification
            // tolerance; the exact rows below cover those points
            match trace_trajectory(domain, field, p, ctl) {
                Ok(traj) if !traj.is_singleton() => {
                    rows.extend(rows_from_trajectory(&traj, RowKind::Sample, &height)?);
                }
                Ok(_) => {}
                Err(FlowError::NotEntry { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }

    let reversed = field.reversed();
    for tangency in &st.tangencies {
        if tangency.stratum.sign < 0 {
            let f = height_value(&height, tangency.point)?;
            rows.push(CausalityRow {
                kind: RowKind::Fixed,
                component: tangency.component,
                s: tangency.s,
                point: tangency.point,
                stratum: tangency.stratum,
                image: RowImage::Fixed,
                transit_time: 0.0,
                word: OmegaWord::new(vec![2]),
                f_entry: f,
                f_image: f,
            });
        } else {
            // head of the chain: walk backward to the true entry, then trace
            // the full trajectory forward from it
            let back = trace_trajectory(domain, &reversed, tangency.point, ctl)?;
            let head = back.exit().point;
            let traj = trace_trajectory(domain, field, head, ctl)?;
            rows.extend(rows_from_trajectory(&traj, RowKind::TangencyHead, &height)?);
        }
    }

    // deduplicate continuation rows traced more than once
    rows.sort_by(|a, b| {
        (a.component, a.s)
            .partial_cmp(&(b.component, b.s))
            .unwrap()
    });
    let mut deduped: Vec<CausalityRow> = Vec::new();
    for row in rows {
        if let Some(last) = deduped.last() {
            let same_spot = last.component == row.component
                && domain.components[row.component].arc_dist(last.s, row.s)
                    < 1e-9 * domain.components[row.component].length.max(1.0)
                && last.kind == row.kind;
            if same_spot {
                continue;
            }
        }
        deduped.push(row);
    }

    Ok(CausalityTable {
        rows: deduped,
        height: height_meta,
        component_lengths: domain.components.iter().map(|c| c.length).collect(),
        samples_per_arc,
    })
}

/// Synthetic causality table of a single local-model fiber: the boundary is
/// the fiber divisor on one pseudo-component, the map is the fiberwise
/// causality. Lets the reconstruction pipeline run on model data.
pub fn table_from_local_model(
    model: &crate::local_model::LocalModel,
    x: &[f64],
) -> Result<CausalityTable, crate::local_model::ModelError> {
    use crate::local_model::{causality_of, components_of, ModelCausality, Polarity};

    let divisor = model.fiber_divisor(x)?;
    let comps = components_of(&divisor);
    let u_min = divisor.points.first().map_or(0.0, |p| p.position);
    let u_max = divisor.points.last().map_or(1.0, |p| p.position);
    let margin = (u_max - u_min).max(1.0);
    let to_s = |u: f64| u - u_min + margin;
    let length = (u_max - u_min) + 2.0 * margin;

    let mut rows = Vec::new();
    for (k, point) in divisor.points.iter().enumerate() {
        let comp_word = comps
            .iter()
            .find(|c| c.point_indices.contains(&k))
            .map(|c| {
                OmegaWord::new(
                    c.point_indices
                        .iter()
                        .map(|&i| divisor.points[i].multiplicity as u32)
                        .collect(),
                )
            })
            .unwrap();
        match causality_of(&divisor, &comps, k) {
            Ok(ModelCausality::Fixed) => rows.push(CausalityRow {
                kind: RowKind::Fixed,
                component: 0,
                s: to_s(point.position),
                point: Vec2::new(point.position, 0.0),
                stratum: Stratum { order: 2, sign: -1 },
                image: RowImage::Fixed,
                transit_time: 0.0,
                word: comp_word,
                f_entry: point.position,
                f_image: point.position,
            }),
            Ok(ModelCausality::Next(next)) => {
                let even = point.multiplicity % 2 == 0;
                rows.push(CausalityRow {
                    kind: if even { RowKind::Continuation } else { RowKind::Sample },
                    component: 0,
                    s: to_s(point.position),
                    point: Vec2::new(point.position, 0.0),
                    stratum: Stratum {
                        order: point.multiplicity.min(255) as u8,
                        sign: if point.polarity == Polarity::Plus { 1 } else { -1 },
                    },
                    image: RowImage::Point {
                        component: 0,
                        s: to_s(next),
                        point: Vec2::new(next, 0.0),
                    },
                    transit_time: next - point.position,
                    word: comp_word,
                    f_entry: point.position,
                    f_image: next,
                });
            }
            Err(crate::local_model::ModelError::NotInDomain) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(CausalityTable {
        rows,
        height: Height::Function("u".into()),
        component_lengths: vec![length],
        samples_per_arc: divisor.points.len().max(8),
    })
}

/// Table for the reversed field.
pub fn mirror_table(
    domain: &Domain2D,
    field: &flow::FlowField,
    samples_per_arc: usize,
    height_fn: Option<&Expr>,
    ctl: &Controls,
) -> Result<CausalityTable, TableError> {
    compute_table(domain, &field.reversed(), samples_per_arc, height_fn, ctl)
}

impl CausalityTable {
    pub fn arc_dist(&self, component: usize, s1: f64, s2: f64) -> f64 {
        let len = self.component_lengths[component];
        let d = (s1 - s2).rem_euclid(len);
        d.min(len - d)
    }

    /// Rows acting as chain junctions (continuation rows at `∂_2^+`).
    pub fn continuation_rows(&self) -> impl Iterator<Item = (usize, &CausalityRow)> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.kind == RowKind::Continuation)
    }

    /// Index of the continuation row matching a point, if any.
    pub fn find_continuation(&self, component: usize, s: f64, tol: f64) -> Option<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.kind == RowKind::Continuation && r.component == component)
            .find(|(_, r)| self.arc_dist(component, r.s, s) <= tol)
            .map(|(i, _)| i)
    }

    /// Structural invariants of the table; violations are returned as
    /// messages rather than panicking so reports can carry them.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            match row.kind {
                RowKind::Fixed => {
                    if !(row.stratum.order == 2 && row.stratum.sign < 0) {
                        problems.push(format!("row {i}: fixed row not at a (2,-) point"));
                    }
                    if !row.is_fixed() {
                        problems.push(format!("row {i}: fixed row with a non-fixed image"));
                    }
                }
                RowKind::Sample | RowKind::TangencyHead => {
                    if !(row.stratum.order == 1 && row.stratum.sign > 0) {
                        problems.push(format!("row {i}: entry not in the entry stratum"));
                    }
                }
                RowKind::Continuation => {
                    if !(row.stratum.order == 2 && row.stratum.sign > 0) {
                        problems.push(format!("row {i}: continuation not at a (2,+) point"));
                    }
                }
            }
            if row.f_image - row.f_entry < -1e-9 {
                problems.push(format!(
                    "row {i}: height decreases along the arrow by {}",
                    row.f_entry - row.f_image
                ));
            }
        }
        problems
    }

    /// The reachability relation is a strict partial order: following images
    /// never returns to an earlier point.
    pub fn is_acyclic(&self, tol: f64) -> bool {
        for (start, row) in self.rows.iter().enumerate() {
            let mut visited = vec![start];
            let mut current = row;
            for _ in 0..self.rows.len() {
                let Some((comp, s)) = current.image_key() else {
                    break;
                };
                let Some(next) = self.find_continuation(comp, s, tol) else {
                    break;
                };
                if visited.contains(&next) {
                    return false;
                }
                visited.push(next);
                current = &self.rows[next];
            }
        }
        true
    }
}

/// A maximal chain of causality arrows.
#[derive(Clone, Debug, Serialize)]
pub struct Chain {
    /// Row indices, in arrow order; empty for zero-arrow (fixed) chains.
    pub rows: Vec<usize>,
    /// Boundary points visited, including the final image.
    pub points: Vec<(usize, f64)>,
    /// Multiplicity word along the chain.
    pub word: OmegaWord,
    pub fixed: bool,
}

impl Chain {
    pub fn arrows(&self) -> usize {
        self.rows.len()
    }
}

/// Maximal chains under composition: start at rows that are not
/// continuations, follow images through matching continuation rows.
pub fn chains(table: &CausalityTable) -> Vec<Chain> {
    let link_tol: Vec<f64> = table
        .component_lengths
        .iter()
        .map(|l| 1e-5 * l.max(1.0))
        .collect();
    let mut out = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        match row.kind {
            RowKind::Continuation => continue,
            RowKind::Fixed => {
                out.push(Chain {
                    rows: Vec::new(),
                    points: vec![(row.component, row.s)],
                    word: OmegaWord::new(vec![2]),
                    fixed: true,
                });
                continue;
            }
            _ => {}
        }
        let mut rows_in_chain = vec![i];
        let mut points = vec![(row.component, row.s)];
        let mut mults = vec![1u32];
        let mut current = row;
        loop {
            let Some((comp, s)) = current.image_key() else {
                break;
            };
            points.push((comp, s));
            match table.find_continuation(comp, s, link_tol[comp]) {
                Some(next) => {
                    mults.push(2);
                    rows_in_chain.push(next);
                    current = &table.rows[next];
                }
                None => {
                    mults.push(1);
                    break;
                }
            }
        }
        out.push(Chain {
            rows: rows_in_chain,
            points,
            word: OmegaWord::new(mults),
            fixed: false,
        });
    }
    out
}

/// Block-structured graph of the map: one block per (entry arc, exit arc)
/// pair, with per-block curves and the discontinuity list.
#[derive(Clone, Debug, Serialize)]
pub struct GvRecord {
    pub entry_arcs: usize,
    pub exit_arcs: usize,
    pub blocks: Vec<GvBlock>,
    pub discontinuities: Vec<GvDiscontinuity>,
    /// Total variation of the image coordinate in exit-arc units; the value
    /// is measured and reported, not asserted.
    pub total_variation_normalized: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GvBlock {
    pub entry_arc: usize,
    pub exit_arc: usize,
    /// `(s_entry, s_image)` normalized to `[0, 1]` within each arc.
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GvDiscontinuity {
    pub entry_arc: usize,
    pub s: f64,
    pub left_image: (usize, f64),
    pub right_image: (usize, f64),
}

pub fn export_gv(table: &CausalityTable, st: &Strata, domain: &Domain2D) -> GvRecord {
    let arcs: Vec<_> = st.arcs.iter().collect();
    let entry_arc_ids: Vec<usize> = (0..arcs.len()).filter(|&i| arcs[i].sign > 0).collect();
    let exit_arc_ids: Vec<usize> = (0..arcs.len()).filter(|&i| arcs[i].sign < 0).collect();

    let locate_arc = |ids: &[usize], comp: usize, s: f64| -> Option<(usize, f64)> {
        for (k, &ai) in ids.iter().enumerate() {
            let arc = arcs[ai];
            if arc.component != comp {
                continue;
            }
            let comp_len = domain.components[comp].length;
            if arc.contains(s, comp_len) {
                let rel = (s - arc.s_start).rem_euclid(comp_len) / arc.arc_length(comp_len);
                return Some((k, rel));
            }
        }
        None
    };

    let mut blocks: Vec<GvBlock> = Vec::new();
    let mut per_entry_rows: Vec<Vec<(f64, usize, f64)>> = vec![Vec::new(); entry_arc_ids.len()];
    for row in &table.rows {
        if row.kind != RowKind::Sample && row.kind != RowKind::TangencyHead {
            continue;
        }
        let Some((ea, s_rel)) = locate_arc(&entry_arc_ids, row.component, row.s) else {
            continue;
        };
        let Some((comp, s_img)) = row.image_key() else {
            continue;
        };
        // images at junctions chart to the exit arc bounded by the junction
        let (xa, x_rel) = match locate_arc(&exit_arc_ids, comp, s_img) {
            Some(v) => v,
            None => continue,
        };
        per_entry_rows[ea].push((s_rel, xa, x_rel));
        match blocks
            .iter_mut()
            .find(|b| b.entry_arc == ea && b.exit_arc == xa)
        {
            Some(b) => b.points.push((s_rel, x_rel)),
            None => blocks.push(GvBlock {
                entry_arc: ea,
                exit_arc: xa,
                points: vec![(s_rel, x_rel)],
            }),
        }
    }
    for b in &mut blocks {
        b.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let mut discontinuities = Vec::new();
    let mut total_variation = 0.0;
    for (ea, rows) in per_entry_rows.iter_mut().enumerate() {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let gaps: Vec<f64> = rows
            .windows(2)
            .filter(|w| w[0].1 == w[1].1)
            .map(|w| (w[1].2 - w[0].2).abs())
            .collect();
        let mut median_gap = gaps.clone();
        median_gap.sort_by(f64::total_cmp);
        let median = median_gap.get(median_gap.len() / 2).copied().unwrap_or(0.0);
        for w in rows.windows(2) {
            let jump = w[0].1 != w[1].1 || (w[1].2 - w[0].2).abs() > (10.0 * median).max(1e-6);
            if jump {
                discontinuities.push(GvDiscontinuity {
                    entry_arc: ea,
                    s: 0.5 * (w[0].0 + w[1].0),
                    left_image: (w[0].1, w[0].2),
                    right_image: (w[1].1, w[1].2),
                });
            } else {
                total_variation += (w[1].2 - w[0].2).abs();
            }
        }
    }

    GvRecord {
        entry_arcs: entry_arc_ids.len(),
        exit_arcs: exit_arc_ids.len(),
        blocks,
        discontinuities,
        total_variation_normalized: total_variation,
    }
}

/// CSV dump of the table (entry, image, transit time, word).
pub fn table_to_csv(table: &CausalityTable) -> String {
    let mut out = String::from(
        "kind,component,s,x,y,image_component,image_s,image_x,image_y,transit_time,word,f_entry,f_image\n",
    );
    for row in &table.rows {
        let (ic, is_, ix, iy) = match row.image {
            RowImage::Point {
                component,
                s,
                point,
            } => (
                component.to_string(),
                format!("{s:.9}"),
                format!("{:.9}", point.x),
                format!("{:.9}", point.y),
            ),
            RowImage::Fixed => (
                "fixed".into(),
                "".into(),
                "".into(),
                "".into(),
            ),
        };
        out.push_str(&format!(
            "{:?},{},{:.9},{:.9},{:.9},{},{},{},{},{:.9},{},{:.9},{:.9}\n",
            row.kind,
            row.component,
            row.s,
            row.point.x,
            row.point.y,
            ic,
            is_,
            ix,
            iy,
            row.transit_time,
            row.word,
            row.f_entry,
            row.f_image
        ));
    }
    out
}

/// DOT graph of the reachability relation restricted to `∂_2` points.
pub fn strata_reachability_dot(table: &CausalityTable) -> String {
    let mut out = String::from("digraph reachability {\n");
    let specials: Vec<(usize, &CausalityRow)> = table
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.stratum.order >= 2)
        .collect();
    for (i, row) in &specials {
        out.push_str(&format!(
            "  n{} [label=\"({}, {:.4}) {}\"];\n",
            i,
            row.component,
            row.s,
            if row.stratum.sign > 0 { "+" } else { "-" }
        ));
    }
    for (i, row) in &specials {
        if let Some((comp, s)) = row.image_key() {
            for (j, other) in &specials {
                if other.component == comp && table.arc_dist(comp, other.s, s) < 1e-6 {
                    out.push_str(&format!("  n{i} -> n{j};\n"));
                }
            }
        }
    }
    out.push_str("}\n");
    out
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

    fn annulus() -> Domain2D {
        Domain2D::new(
            Expr::parse("(4 - x^2 - y^2) * (x^2 + y^2 - 1)").unwrap(),
            Vec2::new(-2.5, -2.5),
            Vec2::new(2.5, 2.5),
            2048,
        )
        .unwrap()
    }

    fn horizontal() -> flow::FlowField {
        flow::FlowField::new(Expr::parse("1").unwrap(), Expr::parse("0").unwrap())
    }

    #[test]
    fn disk_table_maps_by_symmetry() {
        let d = disk();
        let v = horizontal();
        let table = compute_table(&d, &v, 64, None, &Controls::default()).unwrap();
        assert!(table.validate().is_empty(), "{:?}", table.validate());
        let entry = Vec2::new(-0.6, 0.8);
        let row = table
            .rows
            .iter()
            .filter(|r| r.kind == RowKind::Sample)
            .min_by(|a, b| {
                a.point
                    .dist(entry)
                    .total_cmp(&b.point.dist(entry))
            })
            .unwrap();
        if let RowImage::Point { point, .. } = row.image {
            assert!((point.x + row.point.x).abs() < 1e-6);
            assert!((point.y - row.point.y).abs() < 1e-6);
        } else {
            panic!("sample row should have a point image");
        }
        // two fixed rows at (0, ±1)
        let fixed: Vec<_> = table.rows.iter().filter(|r| r.is_fixed()).collect();
        assert_eq!(fixed.len(), 2);
        for f in fixed {
            assert!(f.point.x.abs() < 1e-8);
        }
    }

    #[test]
    fn annulus_chain_rows() {
        let d = annulus();
        let v = horizontal();
        let table = compute_table(&d, &v, 48, None, &Controls::default()).unwrap();
        assert!(table.validate().is_empty(), "{:?}", table.validate());
        let sqrt3 = 3.0f64.sqrt();

        // head row at (-sqrt3, 1) mapping to the tangency (0, 1)
        let head = table
            .rows
            .iter()
            .find(|r| r.kind == RowKind::TangencyHead && r.point.y > 0.0)
            .expect("head row");
        assert!((head.point.x + sqrt3).abs() < 1e-6, "{:?}", head.point);
        if let RowImage::Point { point, .. } = head.image {
            assert!(point.x.abs() < 1e-6 && (point.y - 1.0).abs() < 1e-6);
        }
        // continuation row (0,1) -> (sqrt3, 1)
        let cont = table
            .rows
            .iter()
            .find(|r| r.kind == RowKind::Continuation && r.point.y > 0.0)
            .expect("continuation row");
        assert!(cont.point.x.abs() < 1e-6);
        if let RowImage::Point { point, .. } = cont.image {
            assert!((point.x - sqrt3).abs() < 1e-6 && (point.y - 1.0).abs() < 1e-6);
        }
        assert_eq!(cont.word, OmegaWord::new(vec![1, 2, 1]));
    }

    #[test]
    fn chain_words() {
        let d = annulus();
        let v = horizontal();
        let table = compute_table(&d, &v, 48, None, &Controls::default()).unwrap();
        let all = chains(&table);
        let words: Vec<String> = all.iter().map(|c| c.word.to_string()).collect();
        assert!(words.iter().any(|w| w == "121"), "words: {words:?}");
        assert!(words.iter().any(|w| w == "2"));
        assert!(words.iter().any(|w| w == "11"));
        for chain in &all {
            if chain.word.to_string() == "121" {
                assert_eq!(chain.arrows(), 2);
            }
        }
        // chain words match the traced trajectory words on exact rows
        for chain in &all {
            if let Some(&first) = chain.rows.first() {
                if table.rows[first].kind == RowKind::TangencyHead {
                    assert_eq!(chain.word, table.rows[first].word);
                }
            }
        }
    }

    #[test]
    fn disk_semicontinuity_and_acyclicity() {
        let d = disk();
        let v = horizontal();
        let table = compute_table(&d, &v, 128, None, &Controls::default()).unwrap();
        for row in &table.rows {
            assert!(row.f_image - row.f_entry >= -1e-9);
        }
        assert!(table.is_acyclic(1e-6));
    }

    #[test]
    fn mirror_inverts_non_fixed_pairs() {
        let d = disk();
        let v = horizontal();
        let ctl = Controls::default();
        let table = compute_table(&d, &v, 32, None, &ctl).unwrap();
        let rev = v.reversed();
        for row in table.rows.iter().filter(|r| !r.is_fixed()) {
            let RowImage::Point { point, .. } = row.image else {
                continue;
            };
            let back = trace_trajectory(&d, &rev, point, &ctl).unwrap();
            assert!(
                back.exit().point.dist(row.point) < 1e-6,
                "{:?} not inverted",
                row.point
            );
        }
    }

    #[test]
    fn gv_export_shapes() {
        let d = disk();
        let v = horizontal();
        let ctl = Controls::default();
        let st = strata(&d, &v, 512, &ctl).unwrap();
        let table = compute_table_with_strata(&d, &v, &st, 64, None, &ctl).unwrap();
        let gv = export_gv(&table, &st, &d);
        assert_eq!(gv.entry_arcs, 1);
        assert_eq!(gv.exit_arcs, 1);
        assert_eq!(gv.blocks.len(), 1);
        assert!(gv.discontinuities.is_empty());
        // single strictly monotone curve
        let pts = &gv.blocks[0].points;
        assert!(pts.windows(2).all(|w| w[1].1 != w[0].1));

        let a = annulus();
        let st = strata(&a, &v, 512, &ctl).unwrap();
        let table = compute_table_with_strata(&a, &v, &st, 64, None, &ctl).unwrap();
        let gv = export_gv(&table, &st, &a);
        assert_eq!(gv.entry_arcs, 2);
        assert_eq!(gv.exit_arcs, 2);
        // outer entries split between outer and inner exits; inner entries
        // exit on the outer arc only: 3 occupied blocks
        assert_eq!(gv.blocks.len(), 3);
        // discontinuities exactly at the two tangency preimages
        assert_eq!(
            gv.discontinuities
                .iter()
                .filter(|disc| disc.left_image.0 != disc.right_image.0)
                .count(),
            2
        );
    }

    #[test]
    fn refinement_is_consistent() {
        let d = disk();
        let v = horizontal();
        let ctl = Controls::default();
        let t1 = compute_table(&d, &v, 32, None, &ctl).unwrap();
        let t2 = compute_table(&d, &v, 64, None, &ctl).unwrap();
        // every row of the coarse table has a matching image in the fine one
        for row in t1.rows.iter().filter(|r| r.kind == RowKind::Sample) {
            let twin = t2
                .rows
                .iter()
                .filter(|r| r.kind == RowKind::Sample && r.component == row.component)
                .min_by(|a, b| {
                    t2.arc_dist(row.component, a.s, row.s)
                        .total_cmp(&t2.arc_dist(row.component, b.s, row.s))
                })
                .unwrap();
            let (c1, s1) = row.image_key().unwrap();
            let (c2, s2) = twin.image_key().unwrap();
            assert_eq!(c1, c2);
            // nearest fine sample sits half a coarse step away at worst
            let entry_gap = t2.arc_dist(row.component, twin.s, row.s);
            let image_gap = t2.arc_dist(c1, s1, s2);
            assert!(image_gap < entry_gap * 20.0 + 1e-6, "{image_gap} vs {entry_gap}");
        }
    }
}
