//! Boundary-only reconstruction.
//!
//! Everything in this module reads a [`CausalityTable`] through its
//! *boundary data only*: entry coordinates, image coordinates, fixed flags,
//! and the continuation structure (which is the iterated map). The stratum
//! and word annotations the table also carries are ground truth for
//! comparison; reconstruction never touches them.
//!
//! From that data we recover: the `∂_2^-` points (fixed-point clusters), the
//! `∂_2^+` points (chain junctions), tangency multiplicities (via localized
//! chain counts), the labeled trajectory-space graph, and the Euler
//! characteristic of the domain.

use crate::causality::{CausalityRow, CausalityTable, RowImage, RowKind};
use crate::domain::Domain2D;
use crate::flow::{self, trace_trajectory, Controls, FlowError, Strata};
use crate::geom::Vec2;
use crate::omega::OmegaWord;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum HoloError {
    #[error("localized chains near ({x}, {y}) exceed the generic bound: multiplicity is ambiguous")]
    Ambiguous { x: f64, y: f64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Domain(#[from] crate::domain::DomainError),
    #[error(transparent)]
    Table(#[from] crate::causality::TableError),
}

/// A `∂_2` point estimated from boundary data.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TangencyEstimate {
    pub component: usize,
    pub s: f64,
    pub point: Vec2,
    pub multiplicity: u8,
    /// +1 pass-through (junction), -1 singleton (fixed cluster).
    pub sign: i8,
}

/// Fixed-point clusters of the table, refined to point estimates.
pub fn detect_fixed_points(table: &CausalityTable) -> Vec<TangencyEstimate> {
    let mut estimates = Vec::new();
    for comp in 0..table.component_lengths.len() {
        let len = table.component_lengths[comp];
        let tol = 1e-6 * (1.0 + len);
        let mut fixed: Vec<&CausalityRow> = table
            .rows
            .iter()
            .filter(|r| r.component == comp)
            .filter(|r| match r.image {
                RowImage::Fixed => true,
                RowImage::Point { component, s, .. } => {
                    component == comp && table.arc_dist(comp, s, r.s) <= tol
                }
            })
            .collect();
        if fixed.is_empty() {
            continue;
        }
        fixed.sort_by(|a, b| a.s.total_cmp(&b.s));
        // cluster cyclically: rows within a few sample spacings belong to
        // the same singleton
        let spacing = len / (table.samples_per_arc.max(8) as f64);
        let gap_tol = 4.0 * spacing;
        let mut clusters: Vec<Vec<&CausalityRow>> = Vec::new();
        for row in fixed {
            match clusters.last_mut() {
                Some(cluster)
                    if table.arc_dist(comp, cluster.last().unwrap().s, row.s) <= gap_tol =>
                {
                    cluster.push(row)
                }
                _ => clusters.push(vec![row]),
            }
        }
        // wraparound merge
        if clusters.len() > 1 {
            let first_s = clusters.first().unwrap().first().unwrap().s;
            let last_s = clusters.last().unwrap().last().unwrap().s;
            if table.arc_dist(comp, first_s, last_s) <= gap_tol {
                let tail = clusters.pop().unwrap();
                clusters.first_mut().unwrap().splice(0..0, tail);
            }
        }
        for cluster in clusters {
            // cyclic midpoint via the run span
            let s0 = cluster.first().unwrap().s;
            let span = cluster
                .iter()
                .map(|r| (r.s - s0).rem_euclid(len))
                .fold(0.0f64, f64::max);
            let s_mid = (s0 + 0.5 * span).rem_euclid(len);
            let rep = cluster
                .iter()
                .min_by(|a, b| {
                    table
                        .arc_dist(comp, a.s, s_mid)
                        .total_cmp(&table.arc_dist(comp, b.s, s_mid))
                })
                .unwrap();
            estimates.push(TangencyEstimate {
                component: comp,
                s: s_mid,
                point: rep.point,
                multiplicity: 2,
                sign: -1,
            });
        }
    }
    estimates
}

/// Chain junctions: points that are simultaneously an image of one row and
/// the entry of another. Multiplicity is the unique `m` consistent with the
/// localized chain count (in 2D every detected interior tangency is `m = 2`);
/// the parity split comes from the local topology: fixed cluster means even
/// with `-`, pass-through junction means even with `+`.
pub fn detect_tangency_chains(table: &CausalityTable) -> Result<Vec<TangencyEstimate>, HoloError> {
    let mut estimates = detect_fixed_points(table);
    for comp in 0..table.component_lengths.len() {
        let len = table.component_lengths[comp];
        let link_tol = 1e-5 * len.max(1.0);
        // junction candidates: entries that are also images
        let mut junctions: Vec<(f64, Vec2)> = Vec::new();
        for row in table.rows.iter().filter(|r| r.component == comp) {
            if row.is_fixed() {
                continue;
            }
            let is_image_of_some = table.rows.iter().any(|other| match other.image {
                RowImage::Point { component, s, .. } => {
                    component == comp && table.arc_dist(comp, s, row.s) <= link_tol
                }
                RowImage::Fixed => false,
            });
            if is_image_of_some && row.kind == RowKind::Continuation {
                if !junctions
                    .iter()
                    .any(|(s, _)| table.arc_dist(comp, *s, row.s) <= link_tol)
                {
                    junctions.push((row.s, row.point));
                }
            }
        }
        for (s, point) in junctions {
            estimates.push(TangencyEstimate {
                component: comp,
                s,
                point,
                multiplicity: 2,
                sign: 1,
            });
        }
    }
    // localized chain guard: arrows with both endpoints near one estimate
    // must not chain deeper than the generic 2D bound floor(3/2) = 1.
    // "Near" means closer than half the gap to the nearest other structure
    // (another estimate or a distinct table point), so chains through
    // well-separated points never count as localized.
    for est in &estimates {
        let len = table.component_lengths[est.component];
        let link_tol = 1e-5 * len.max(1.0);
        let mut gap = len;
        for other in &estimates {
            if other.component == est.component {
                let d = table.arc_dist(est.component, other.s, est.s);
                if d > link_tol {
                    gap = gap.min(d);
                }
            }
        }
        for row in table.rows.iter().filter(|r| r.component == est.component) {
            let d = table.arc_dist(est.component, row.s, est.s);
            if d > link_tol {
                gap = gap.min(d);
            }
        }
        let delta = 0.5 * gap;
        let near = |s: f64| table.arc_dist(est.component, s, est.s) <= delta;
        let localized: Vec<&CausalityRow> = table
            .rows
            .iter()
            .filter(|r| {
                r.component == est.component
                    && near(r.s)
                    && match r.image {
                        RowImage::Point { component, s, .. } => {
                            component == est.component && near(s)
                        }
                        RowImage::Fixed => false,
                    }
            })
            .collect();
        // compose localized arrows
        let mut max_chain = 0usize;
        for row in &localized {
            let mut arrows = 1usize;
            let mut current = *row;
            while let RowImage::Point { component, s, .. } = current.image {
                match localized.iter().find(|r| {
                    r.component == component
                        && table.arc_dist(component, r.s, s) <= 1e-5 * len.max(1.0)
                        && !std::ptr::eq::<CausalityRow>(**r, current)
                }) {
                    Some(next) => {
                        arrows += 1;
                        current = next;
                        if arrows > 8 {
                            break;
                        }
                    }
                    None => break,
                }
            }
            max_chain = max_chain.max(arrows);
        }
        if max_chain > 1 {
            return Err(HoloError::Ambiguous {
                x: est.point.x,
                y: est.point.y,
            });
        }
    }
    estimates.sort_by(|a, b| (a.component, a.s).partial_cmp(&(b.component, b.s)).unwrap());
    Ok(estimates)
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// The quotient of the table's boundary points by the iterated map: two
/// points are equivalent when some point reaches both under iteration.
/// Returns, per row, the class id of its entry point, plus the class count.
pub struct Quotient {
    /// Distinct boundary points (component, s), indexed by point id.
    pub points: Vec<(usize, f64)>,
    /// Class representative per point id.
    pub class_of_point: Vec<usize>,
    /// Point id of each row's entry and image (image = None for fixed rows).
    pub row_entry_point: Vec<usize>,
    pub row_image_point: Vec<Option<usize>>,
    pub class_count: usize,
}

pub fn quotient_classes(table: &CausalityTable) -> Quotient {
    // cluster coincident coordinates into point ids
    let mut points: Vec<(usize, f64)> = Vec::new();
    let locate = |points: &mut Vec<(usize, f64)>, comp: usize, s: f64, tol: f64| -> usize {
        for (i, &(c, ps)) in points.iter().enumerate() {
            if c == comp && table.arc_dist(comp, ps, s) <= tol {
                return i;
            }
        }
        points.push((comp, s));
        points.len() - 1
    };
    let mut row_entry_point = Vec::with_capacity(table.rows.len());
    let mut row_image_point = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let tol = 1e-7 * table.component_lengths[row.component].max(1.0);
        let e = locate(&mut points, row.component, row.s, tol);
        row_entry_point.push(e);
        match row.image {
            RowImage::Fixed => row_image_point.push(None),
            RowImage::Point { component, s, .. } => {
                let tol = 1e-7 * table.component_lengths[component].max(1.0);
                row_image_point.push(Some(locate(&mut points, component, s, tol)));
            }
        }
    }
    let mut uf = UnionFind::new(points.len());
    for (row_idx, &entry) in row_entry_point.iter().enumerate() {
        if let Some(image) = row_image_point[row_idx] {
            uf.union(entry, image);
        }
    }
    let class_of_point: Vec<usize> = (0..points.len()).map(|i| uf.find(i)).collect();
    let mut reps: Vec<usize> = class_of_point.clone();
    reps.sort_unstable();
    reps.dedup();
    Quotient {
        points,
        class_of_point,
        row_entry_point,
        row_image_point,
        class_count: reps.len(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Leaf,
    Junction,
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphNode {
    pub label: OmegaWord,
    pub kind: NodeKind,
    pub witness: (usize, f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphEdge {
    pub label: OmegaWord,
    pub a: usize,
    pub b: usize,
    pub witnesses: usize,
}

/// The labeled trajectory-space graph of a 2D flow: leaves at boundary
/// singletons, trivalent junctions at pass-through tangencies, edges for the
/// 1-parameter families of generic trajectories.
#[derive(Clone, Debug, Default, Serialize)]
pub struct TrajectoryGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    /// Node-free circle components of the trajectory space.
    pub closed_edges: Vec<OmegaWord>,
}

impl TrajectoryGraph {
    pub fn euler_characteristic(&self) -> i64 {
        self.nodes.len() as i64 - self.edges.len() as i64 - self.closed_edges.len() as i64
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .map(|e| (e.a == node) as usize + (e.b == node) as usize)
            .sum()
    }

    pub fn mirror_words(&self) -> TrajectoryGraph {
        let mut g = self.clone();
        for n in &mut g.nodes {
            n.label = n.label.mirror();
        }
        for e in &mut g.edges {
            e.label = e.label.mirror();
        }
        for w in &mut g.closed_edges {
            *w = w.mirror();
        }
        g
    }
}

/// Marker kinds used while cutting exit arcs into edge charts.
#[derive(Clone, Copy, Debug)]
enum Marker {
    Node(usize),
    /// Exit witness of the chain through junction node `usize`.
    JunctionExit(usize),
}

/// Reconstruct the trajectory graph from the table alone.
///
/// Exit points chart the edges: the map from a trajectory class to its final
/// exit point is injective off the tangencies, so maximal runs of exits
/// between markers (detected `∂_2` points and junction-chain exits) are the
/// edges, and the marker adjacency resolves the attachment of edge ends to
/// nodes.
pub fn build_trajectory_graph(table: &CausalityTable) -> Result<TrajectoryGraph, HoloError> {
    let estimates = detect_tangency_chains(table)?;
    let quotient = quotient_classes(table);
    let mut graph = TrajectoryGraph::default();

    for est in &estimates {
        graph.nodes.push(GraphNode {
            label: if est.sign < 0 {
                OmegaWord::new(vec![2])
            } else {
                OmegaWord::new(vec![1, 2, 1])
            },
            kind: if est.sign < 0 {
                NodeKind::Leaf
            } else {
                NodeKind::Junction
            },
            witness: (est.component, est.s),
        });
    }

    // junction chain exits: follow the continuation rows
    let mut markers: Vec<(usize, f64, Marker)> = Vec::new(); // (component, s, marker)
    for (ni, est) in estimates.iter().enumerate() {
        markers.push((est.component, est.s, Marker::Node(ni)));
        if est.sign > 0 {
            let len = table.component_lengths[est.component];
            let link_tol = 1e-5 * len.max(1.0);
            if let Some(idx) = table.find_continuation(est.component, est.s, link_tol) {
                if let Some((comp, s)) = table.rows[idx].image_key() {
                    markers.push((comp, s, Marker::JunctionExit(ni)));
                }
            }
        }
    }

    // exit witnesses: image points that are not junctions
    let is_junction_point = |comp: usize, s: f64| {
        estimates.iter().any(|e| {
            e.sign > 0 && e.component == comp && table.arc_dist(comp, e.s, s) <= 1e-5 * table.component_lengths[comp].max(1.0)
        })
    };
    #[derive(Clone, Copy)]
    struct Exit {
        s: f64,
        head_kind: RowKind,
        class: usize,
    }
    let mut exits_per_comp: BTreeMap<usize, Vec<Exit>> = BTreeMap::new();
    for (row_idx, row) in table.rows.iter().enumerate() {
        if row.kind == RowKind::Continuation && is_junction_point(row.component, row.s) {
            continue; // its image is a junction-exit marker, already placed
        }
        if row.kind == RowKind::Fixed {
            continue;
        }
        if let RowImage::Point { component, s, .. } = row.image {
            if !is_junction_point(component, s) {
                let point = quotient.row_image_point[row_idx].expect("non-fixed image");
                exits_per_comp.entry(component).or_default().push(Exit {
                    s,
                    head_kind: row.kind,
                    class: quotient.class_of_point[point],
                });
            }
        }
    }

    for (comp, exits) in exits_per_comp.iter_mut() {
        let len = table.component_lengths[*comp];
        exits.sort_by(|a, b| a.s.total_cmp(&b.s));
        let mut comp_markers: Vec<(f64, Marker)> = markers
            .iter()
            .filter(|(c, _, _)| c == comp)
            .map(|(_, s, m)| (*s, *m))
            .collect();
        comp_markers.sort_by(|a, b| a.0.total_cmp(&b.0));

        if comp_markers.is_empty() {
            // node-free circle family
            if !exits.is_empty() {
                graph.closed_edges.push(OmegaWord::new(vec![1, 1]));
            }
            continue;
        }

        // runs of exits between consecutive markers (cyclically)
        let m = comp_markers.len();
        for k in 0..m {
            let (s_a, marker_a) = comp_markers[k];
            let (s_b, marker_b) = comp_markers[(k + 1) % m];
            let span = (s_b - s_a).rem_euclid(len);
            let span = if span == 0.0 && m == 1 { len } else { span };
            let link_tol = 1e-5 * len.max(1.0);
            // one witness per trajectory class in the run
            let mut classes: Vec<usize> = exits
                .iter()
                .filter(|e| {
                    let rel = (e.s - s_a).rem_euclid(len);
                    rel > link_tol && rel < span - link_tol
                })
                .filter(|e| e.head_kind == RowKind::Sample)
                .map(|e| e.class)
                .collect();
            classes.sort_unstable();
            classes.dedup();
            let count = classes.len();
            if count == 0 {
                continue;
            }
            let node_of = |marker: Marker| match marker {
                Marker::Node(n) | Marker::JunctionExit(n) => n,
            };
            graph.edges.push(GraphEdge {
                label: OmegaWord::new(vec![1, 1]),
                a: node_of(marker_a),
                b: node_of(marker_b),
                witnesses: count,
            });
        }
    }

    Ok(graph)
}

/// Euler characteristic from boundary data: (number of entry arcs) minus
/// (number of pass-through tangencies). Whole-circle entry components
/// contribute zero to the first term.
pub fn euler_characteristic(table: &CausalityTable) -> Result<i64, HoloError> {
    let estimates = detect_tangency_chains(table)?;
    let mut entry_arcs = 0i64;
    for comp in 0..table.component_lengths.len() {
        let len = table.component_lengths[comp];
        let entries: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| {
                r.component == comp && matches!(r.kind, RowKind::Sample | RowKind::TangencyHead)
            })
            .map(|r| r.s)
            .collect();
        if entries.is_empty() {
            continue;
        }
        let cuts: Vec<f64> = estimates
            .iter()
            .filter(|e| e.component == comp)
            .map(|e| e.s)
            .collect();
        if cuts.is_empty() {
            // entry set covers the whole circle: χ contribution 0
            continue;
        }
        // count maximal runs of entries between consecutive cuts
        let mut sorted_cuts = cuts.clone();
        sorted_cuts.sort_by(f64::total_cmp);
        let m = sorted_cuts.len();
        let spacing = len / (table.samples_per_arc.max(8) as f64);
        for k in 0..m {
            let a = sorted_cuts[k];
            let b = sorted_cuts[(k + 1) % m];
            let span = {
                let s = (b - a).rem_euclid(len);
                if s == 0.0 { len } else { s }
            };
            let has_entries = entries.iter().any(|&s| {
                let rel = (s - a).rem_euclid(len);
                rel > spacing * 0.01 && rel < span - spacing * 0.01
            });
            if has_entries {
                entry_arcs += 1;
            }
        }
    }
    let junctions = estimates.iter().filter(|e| e.sign > 0).count() as i64;
    Ok(entry_arcs - junctions)
}

/// Ground-truth graph from interior data: traced trajectories swept along
/// the entry arcs, cut where the trajectory word or exit arc changes, with
/// nodes from the classified strata. Independent of the boundary-only path.
pub fn interior_graph(
    domain: &Domain2D,
    field: &flow::FlowField,
    st: &Strata,
    samples_per_arc: usize,
    ctl: &Controls,
) -> Result<TrajectoryGraph, HoloError> {
    let mut graph = TrajectoryGraph::default();
    for t in &st.tangencies {
        graph.nodes.push(GraphNode {
            label: if t.stratum.sign < 0 {
                OmegaWord::new(vec![2])
            } else {
                OmegaWord::new(vec![1, 2, 1])
            },
            kind: if t.stratum.sign < 0 {
                NodeKind::Leaf
            } else {
                NodeKind::Junction
            },
            witness: (t.component, t.s),
        });
    }
    let node_at = |comp: usize, p: Vec2, tol: f64| -> Option<usize> {
        st.tangencies
            .iter()
            .position(|t| t.component == comp && t.point.dist(p) <= tol)
    };

    let reversed = field.reversed();
    let diam = domain.diameter();
    for arc in st.entry_arcs() {
        let comp_len = domain.components[arc.component].length;
        let len = arc.arc_length(comp_len);
        if arc.full_cycle {
            graph.closed_edges.push(OmegaWord::new(vec![1, 1]));
            continue;
        }
        // cut positions: entry coordinates of junction trajectories heading
        // from this arc
        let mut cuts: Vec<(f64, usize)> = Vec::new(); // (rel position, node)
        for (ni, t) in st.tangencies.iter().enumerate() {
            if t.stratum.sign < 0 {
                continue;
            }
            let back = trace_trajectory(domain, &reversed, t.point, ctl)?;
            let head = back.exit();
            if head.component == arc.component && arc.contains(head.s, comp_len) {
                let rel = (head.s - arc.s_start).rem_euclid(comp_len);
                if rel > 1e-9 && rel < len - 1e-9 {
                    cuts.push((rel, ni));
                }
            }
        }
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));

        // nodes at the two ends of the arc
        let end_a = node_at(
            arc.component,
            domain.point_at(arc.component, arc.s_start)?,
            1e-5 * diam,
        );
        let end_b = node_at(
            arc.component,
            domain.point_at(arc.component, arc.s_end)?,
            1e-5 * diam,
        );

        // sample a witness per run to confirm nonemptiness and the word
        let mut stations: Vec<(f64, Option<usize>)> = Vec::new();
        stations.push((0.0, end_a));
        for (rel, ni) in &cuts {
            stations.push((*rel, Some(*ni)));
        }
        stations.push((len, end_b));
        for w in stations.windows(2) {
            let (rel_a, node_a) = w[0];
            let (rel_b, node_b) = w[1];
            if rel_b - rel_a < 1e-7 * comp_len {
                continue;
            }
            let mid = (arc.s_start + 0.5 * (rel_a + rel_b)).rem_euclid(comp_len);
            let p = domain.point_at(arc.component, mid)?;
            let traj = trace_trajectory(domain, field, p, ctl)?;
            let (Some(a), Some(b)) = (node_a, node_b) else {
                return Err(HoloError::Ambiguous { x: p.x, y: p.y });
            };
            graph.edges.push(GraphEdge {
                label: traj.omega.clone(),
                a,
                b,
                witnesses: samples_per_arc.max(1),
            });
        }
    }
    Ok(graph)
}

/// Interior-route Euler characteristic: entry arcs minus `∂_2^+` points,
/// from the classified strata.
pub fn interior_euler_characteristic(st: &Strata) -> i64 {
    let arcs = st.arcs.iter().filter(|a| a.sign > 0 && !a.full_cycle).count() as i64;
    let junctions = st.tangencies.iter().filter(|t| t.stratum.sign > 0).count() as i64;
    arcs - junctions
}

/// Label-preserving multigraph isomorphism by backtracking with degree and
/// label pruning. Graphs here are tiny (well under the 64-node cap).
pub fn graph_isomorphic(g1: &TrajectoryGraph, g2: &TrajectoryGraph) -> (bool, Option<Vec<usize>>) {
    assert!(g1.nodes.len() <= 64 && g2.nodes.len() <= 64);
    if g1.nodes.len() != g2.nodes.len()
        || g1.edges.len() != g2.edges.len()
        || g1.closed_edges.len() != g2.closed_edges.len()
    {
        return (false, None);
    }
    let mut c1 = g1.closed_edges.clone();
    let mut c2 = g2.closed_edges.clone();
    c1.sort();
    c2.sort();
    if c1 != c2 {
        return (false, None);
    }

    let n = g1.nodes.len();
    // adjacency with edge-label multisets
    let adj = |g: &TrajectoryGraph, a: usize, b: usize| -> Vec<OmegaWord> {
        let mut labels: Vec<OmegaWord> = g
            .edges
            .iter()
            .filter(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
            .map(|e| e.label.clone())
            .collect();
        labels.sort();
        labels
    };

    let mut mapping = vec![usize::MAX; n];
    let mut used = vec![false; n];

    fn backtrack(
        g1: &TrajectoryGraph,
        g2: &TrajectoryGraph,
        adj: &dyn Fn(&TrajectoryGraph, usize, usize) -> Vec<OmegaWord>,
        mapping: &mut Vec<usize>,
        used: &mut Vec<bool>,
        depth: usize,
    ) -> bool {
        let n = g1.nodes.len();
        if depth == n {
            return true;
        }
        for candidate in 0..n {
            if used[candidate] {
                continue;
            }
            let a = &g1.nodes[depth];
            let b = &g2.nodes[candidate];
            if a.label != b.label || a.kind != b.kind {
                continue;
            }
            if g1.degree(depth) != g2.degree(candidate) {
                continue;
            }
            // edges to already-mapped nodes must match as label multisets
            let consistent = (0..depth).all(|prev| {
                adj(g1, depth, prev) == adj(g2, candidate, mapping[prev])
            }) && adj(g1, depth, depth) == adj(g2, candidate, candidate);
            if !consistent {
                continue;
            }
            mapping[depth] = candidate;
            used[candidate] = true;
            if backtrack(g1, g2, adj, mapping, used, depth + 1) {
                return true;
            }
            mapping[depth] = usize::MAX;
            used[candidate] = false;
        }
        false
    }

    if backtrack(g1, g2, &adj, &mut mapping, &mut used, 0) {
        (true, Some(mapping))
    } else {
        (false, None)
    }
}

/// DOT rendering of a trajectory graph.
pub fn graph_to_dot(g: &TrajectoryGraph) -> String {
    let mut out = String::from("graph trajectory_space {\n");
    for (i, node) in g.nodes.iter().enumerate() {
        let shape = match node.kind {
            NodeKind::Leaf => "circle",
            NodeKind::Junction => "triangle",
        };
        out.push_str(&format!(
            "  n{i} [label=\"{}\", shape={shape}];\n",
            node.label
        ));
    }
    for e in &g.edges {
        out.push_str(&format!(
            "  n{} -- n{} [label=\"{}\"];\n",
            e.a, e.b, e.label
        ));
    }
    for w in &g.closed_edges {
        out.push_str(&format!("  // closed edge: {w}\n"));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causality::compute_table;
    use crate::expr::Expr;

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
    fn disk_fixed_points_detected() {
        let d = disk();
        let v = horizontal();
        let n = 128;
        let table = compute_table(&d, &v, n, None, &Controls::default()).unwrap();
        let fixed = detect_fixed_points(&table);
        assert_eq!(fixed.len(), 2);
        let budget = d.components[0].length / n as f64 * 2.0;
        for f in &fixed {
            assert!(f.point.x.abs() < budget, "{:?}", f.point);
            assert!((f.point.y.abs() - 1.0).abs() < budget);
        }
    }

    #[test]
    fn annulus_junctions_detected() {
        let d = annulus();
        let v = horizontal();
        let table = compute_table(&d, &v, 96, None, &Controls::default()).unwrap();
        let estimates = detect_tangency_chains(&table).unwrap();
        let junctions: Vec<_> = estimates.iter().filter(|e| e.sign > 0).collect();
        let fixed: Vec<_> = estimates.iter().filter(|e| e.sign < 0).collect();
        assert_eq!(junctions.len(), 2);
        assert_eq!(fixed.len(), 2);
        for j in junctions {
            assert_eq!(j.multiplicity, 2);
            assert!(j.point.x.abs() < 1e-5);
            assert!((j.point.y.abs() - 1.0).abs() < 1e-5);
        }
        for f in fixed {
            assert!((f.point.y.abs() - 2.0).abs() < 0.1);
        }
    }

    #[test]
    fn disk_graph_is_a_labeled_path() {
        let d = disk();
        let v = horizontal();
        let table = compute_table(&d, &v, 96, None, &Controls::default()).unwrap();
        let g = build_trajectory_graph(&table).unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges.len(), 1);
        assert!(g.nodes.iter().all(|n| n.kind == NodeKind::Leaf));
        assert!(g.nodes.iter().all(|n| n.label == OmegaWord::new(vec![2])));
        assert_eq!(g.edges[0].label, OmegaWord::new(vec![1, 1]));
        assert_eq!(g.euler_characteristic(), 1);
    }

    #[test]
    fn annulus_graph_is_a_circle_with_whiskers() {
        let d = annulus();
        let v = horizontal();
        let table = compute_table(&d, &v, 96, None, &Controls::default()).unwrap();
        let g = build_trajectory_graph(&table).unwrap();
        let leaves = g.nodes.iter().filter(|n| n.kind == NodeKind::Leaf).count();
        let junctions = g
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Junction)
            .count();
        assert_eq!(leaves, 2, "{g:?}");
        assert_eq!(junctions, 2);
        assert_eq!(g.edges.len(), 4);
        assert_eq!(g.euler_characteristic(), 0);
        // junctions are trivalent, leaves univalent
        for (i, n) in g.nodes.iter().enumerate() {
            match n.kind {
                NodeKind::Leaf => assert_eq!(g.degree(i), 1),
                NodeKind::Junction => assert_eq!(g.degree(i), 3),
            }
        }
        // the two junctions share a double edge
        let j: Vec<usize> = g
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind == NodeKind::Junction)
            .map(|(i, _)| i)
            .collect();
        let between = g
            .edges
            .iter()
            .filter(|e| {
                (e.a == j[0] && e.b == j[1]) || (e.a == j[1] && e.b == j[0])
            })
            .count();
        assert_eq!(between, 2);
    }

    #[test]
    fn boundary_chi_matches_known_values() {
        let ctl = Controls::default();
        let d = disk();
        let v = horizontal();
        let table = compute_table(&d, &v, 96, None, &ctl).unwrap();
        assert_eq!(euler_characteristic(&table).unwrap(), 1);

        let a = annulus();
        let table = compute_table(&a, &v, 96, None, &ctl).unwrap();
        assert_eq!(euler_characteristic(&table).unwrap(), 0);

        // χ is invariant under field reversal
        let table = crate::causality::mirror_table(&d, &v, 96, None, &ctl).unwrap();
        assert_eq!(euler_characteristic(&table).unwrap(), 1);
        let table = crate::causality::mirror_table(&a, &v, 96, None, &ctl).unwrap();
        assert_eq!(euler_characteristic(&table).unwrap(), 0);
    }

    #[test]
    fn round_trip_disk_and_annulus() {
        let ctl = Controls::default();
        let v = horizontal();
        for domain in [disk(), annulus()] {
            let st = flow::strata(&domain, &v, 512, &ctl).unwrap();
            let table =
                crate::causality::compute_table_with_strata(&domain, &v, &st, 96, None, &ctl)
                    .unwrap();
            let reconstructed = build_trajectory_graph(&table).unwrap();
            let interior = interior_graph(&domain, &v, &st, 96, &ctl).unwrap();
            let (iso, witness) = graph_isomorphic(&reconstructed, &interior);
            assert!(
                iso,
                "reconstructed {reconstructed:?}\ninterior {interior:?}"
            );
            assert!(witness.is_some());
            assert_eq!(
                euler_characteristic(&table).unwrap(),
                interior_euler_characteristic(&st)
            );
        }
    }

    #[test]
    fn non_isomorphic_graphs_rejected() {
        let ctl = Controls::default();
        let v = horizontal();
        let table_d = compute_table(&disk(), &v, 64, None, &ctl).unwrap();
        let table_a = compute_table(&annulus(), &v, 64, None, &ctl).unwrap();
        let gd = build_trajectory_graph(&table_d).unwrap();
        let ga = build_trajectory_graph(&table_a).unwrap();
        let (iso, _) = graph_isomorphic(&gd, &ga);
        assert!(!iso);
    }

    #[test]
    fn synthetic_local_model_table_detects_the_middle_tangency() {
        use crate::local_model::LocalModel;
        use crate::omega::OmegaWord;
        let model = LocalModel::new(
            OmegaWord::new(vec![1, 2, 1]),
            vec![-1.0, 0.0, 1.0],
            0.05,
            1.0,
        )
        .unwrap();
        let table = crate::causality::table_from_local_model(&model, &[0.0]).unwrap();
        let estimates = detect_tangency_chains(&table).unwrap();
        let junctions: Vec<_> = estimates.iter().filter(|e| e.sign > 0).collect();
        assert_eq!(junctions.len(), 1);
        assert_eq!(junctions[0].multiplicity, 2);
        assert!(junctions[0].point.x.abs() < 1e-9, "{:?}", junctions[0]);

        // an atom fiber yields a fixed-point estimate instead
        let atom = LocalModel::new(OmegaWord::new(vec![2]), vec![0.0], 0.3, 1.0).unwrap();
        let table = crate::causality::table_from_local_model(&atom, &[0.0]).unwrap();
        let estimates = detect_tangency_chains(&table).unwrap();
        assert_eq!(estimates.len(), 1);
        assert_eq!(estimates[0].sign, -1);
        // and no fixed rows means no estimates at all
        let table = crate::causality::table_from_local_model(&atom, &[-0.04]).unwrap();
        assert!(detect_fixed_points(&table).is_empty());
    }

    #[test]
    fn quotient_classes_are_trajectory_classes() {
        let d = annulus();
        let v = horizontal();
        let table = compute_table(&d, &v, 48, None, &Controls::default()).unwrap();
        let q = quotient_classes(&table);
        // each junction chain merges its three points into one class
        let mut class_sizes = std::collections::BTreeMap::new();
        for &c in &q.class_of_point {
            *class_sizes.entry(c).or_insert(0usize) += 1;
        }
        let chains_of_three = class_sizes.values().filter(|&&n| n == 3).count();
        assert_eq!(chains_of_three, 2, "two tangent chords through the hole");
        // fixed rows are singleton classes
        let fixed_points = table.rows.iter().filter(|r| r.is_fixed()).count();
        let singletons = class_sizes.values().filter(|&&n| n == 1).count();
        assert_eq!(singletons, fixed_points);
        // everything else pairs an entry with its exit
        assert!(class_sizes.values().all(|&n| n <= 3));
        // class count = generic samples + 2 chains + 2 singletons
        let samples = table
            .rows
            .iter()
            .filter(|r| r.kind == RowKind::Sample)
            .count();
        assert_eq!(q.class_count, samples + 2 + 2);
    }

    #[test]
    fn reversal_graph_is_mirror_isomorphic() {
        let ctl = Controls::default();
        let v = horizontal();
        let a = annulus();
        let table = compute_table(&a, &v, 96, None, &ctl).unwrap();
        let table_rev = crate::causality::mirror_table(&a, &v, 96, None, &ctl).unwrap();
        let g = build_trajectory_graph(&table).unwrap();
        let g_rev = build_trajectory_graph(&table_rev).unwrap();
        let (iso, _) = graph_isomorphic(&g_rev, &g.mirror_words());
        assert!(iso);
    }
}
