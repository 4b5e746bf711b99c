//! Scenario configuration schema and runners.

use anyhow::{anyhow, bail, Result};
use serde::{Deserialize, Serialize};
use traverse_core::billiards::{self, BilliardTable, Curve, UnitState};
use traverse_core::causality;
use traverse_core::domain::Domain2D;
use traverse_core::expr::Expr;
use traverse_core::flow::{self, Controls, FlowField};
use traverse_core::geom::Vec2;
use traverse_core::holography;
use traverse_core::local_model::{self, LocalModel};
use traverse_core::omega::{self, OmegaWord};
use traverse_core::svg::SvgCanvas;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub field: Option<FieldConfig>,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub table: Option<TableConfig>,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub poset: Option<PosetConfig>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Flow,
    Billiard,
    LocalModel,
    Poset,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub w: String,
    pub bbox: [f64; 4],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub vx: String,
    pub vy: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    #[serde(default = "default_resolution")]
    pub boundary_resolution: usize,
    #[serde(default = "default_causality")]
    pub causality_samples: usize,
    #[serde(default = "default_probes")]
    pub interior_probes: usize,
}

fn default_resolution() -> usize {
    2048
}
fn default_causality() -> usize {
    256
}
fn default_probes() -> usize {
    50
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            boundary_resolution: default_resolution(),
            causality_samples: default_causality(),
            interior_probes: default_probes(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub tau_bnd_rel: Option<f64>,
    pub tau_graze_rel: Option<f64>,
    pub tau_lie_rel: Option<f64>,
    pub ode_rtol: Option<f64>,
    pub max_time_factor: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, ctl: &mut Controls) {
        if let Some(v) = self.tau_bnd_rel {
            ctl.tau_bnd_rel = v;
        }
        if let Some(v) = self.tau_graze_rel {
            ctl.tau_graze_rel = v;
        }
        if let Some(v) = self.tau_lie_rel {
            ctl.tau_lie_rel = v;
        }
        if let Some(v) = self.ode_rtol {
            ctl.ode_rtol = v;
        }
        if let Some(v) = self.max_time_factor {
            ctl.max_time_factor = v;
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_emit")]
    pub emit: Vec<String>,
    /// Optional height function expression with df(v) > 0.
    pub height: Option<String>,
}

fn default_emit() -> Vec<String> {
    vec![
        "report".into(),
        "table".into(),
        "graph".into(),
        "figures".into(),
    ]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            emit: default_emit(),
            height: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub outer: CurveConfig,
    #[serde(default)]
    pub obstacles: Vec<CurveConfig>,
    #[serde(default)]
    pub census_lines: Option<usize>,
    #[serde(default)]
    pub orbit: Option<OrbitConfig>,
    #[serde(default)]
    pub poncelet: Option<PonceletConfig>,
}

#[derive(Debug, Deserialize)]
pub struct CurveConfig {
    /// `[cx, cy, r]`
    pub circle: Option<[f64; 3]>,
    /// `[cx, cy, a, b]`
    pub ellipse: Option<[f64; 4]>,
    /// implicit expression, negative inside, with `bbox`
    pub w: Option<String>,
    pub bbox: Option<[f64; 4]>,
}

impl CurveConfig {
    fn build(&self) -> Result<Curve> {
        match (&self.circle, &self.ellipse, &self.w) {
            (Some([cx, cy, r]), None, None) => Ok(Curve::circle(Vec2::new(*cx, *cy), *r)),
            (None, Some([cx, cy, a, b]), None) => {
                Ok(Curve::ellipse(Vec2::new(*cx, *cy), *a, *b))
            }
            (None, None, Some(w)) => {
                let bbox = self
                    .bbox
                    .ok_or_else(|| anyhow!("implicit curve needs a bbox"))?;
                let expr = Expr::parse(w).map_err(|e| anyhow!("curve expression: {e}"))?;
                Ok(Curve::implicit(
                    expr,
                    Vec2::new(bbox[0], bbox[1]),
                    Vec2::new(bbox[2], bbox[3]),
                ))
            }
            _ => bail!("curve must be exactly one of circle/ellipse/w"),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitConfig {
    pub start_angle: f64,
    pub direction_angle: f64,
    pub iterations: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PonceletConfig {
    pub r1: f64,
    pub r2: f64,
    pub k: usize,
    #[serde(default = "default_starts")]
    pub starts: usize,
}

fn default_starts() -> usize {
    10
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub omega: String,
    pub roots: Vec<f64>,
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub x: Option<Vec<f64>>,
    #[serde(default = "default_model_samples")]
    pub samples: usize,
}

fn default_model_samples() -> usize {
    200
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosetConfig {
    pub max_reduced_norm: u32,
    pub max_support: usize,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            Kind::Flow => {
                let d = self
                    .domain
                    .as_ref()
                    .ok_or_else(|| anyhow!("flow scenario needs [domain]"))?;
                Expr::parse(&d.w).map_err(|e| anyhow!("domain.w: {e}"))?;
                let f = self
                    .field
                    .as_ref()
                    .ok_or_else(|| anyhow!("flow scenario needs [field]"))?;
                Expr::parse(&f.vx).map_err(|e| anyhow!("field.vx: {e}"))?;
                Expr::parse(&f.vy).map_err(|e| anyhow!("field.vy: {e}"))?;
                if let Some(h) = &self.output.height {
                    Expr::parse(h).map_err(|e| anyhow!("output.height: {e}"))?;
                }
            }
            Kind::Billiard => {
                let t = self
                    .table
                    .as_ref()
                    .ok_or_else(|| anyhow!("billiard scenario needs [table]"))?;
                t.outer.build()?;
                for o in &t.obstacles {
                    o.build()?;
                }
            }
            Kind::LocalModel => {
                let m = self
                    .model
                    .as_ref()
                    .ok_or_else(|| anyhow!("local_model scenario needs [model]"))?;
                m.omega
                    .parse::<OmegaWord>()
                    .map_err(|e| anyhow!("model.omega: {e}"))?;
            }
            Kind::Poset => {
                self.poset
                    .as_ref()
                    .ok_or_else(|| anyhow!("poset scenario needs [poset]"))?;
            }
        }
        Ok(())
    }
}

/// One checked claim in a scenario report.
#[derive(Debug, Serialize)]
pub struct Claim {
    pub module: &'static str,
    pub name: String,
    pub passed: bool,
    pub details: String,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub claims: Vec<Claim>,
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.claims.iter().all(|c| c.passed)
    }
}

pub fn fnv1a64(data: &[u8]) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in data {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

pub struct RunOutput {
    pub report: Report,
    /// (relative file name, contents)
    pub files: Vec<(String, Vec<u8>)>,
}

pub fn run_scenario(scenario: &Scenario, raw_text: &str, seed_override: Option<u64>) -> Result<RunOutput> {
    let seed = seed_override.unwrap_or(scenario.seed);
    let hash = fnv1a64(raw_text.as_bytes());
    match scenario.kind {
        Kind::Flow => run_flow(scenario, seed, hash),
        Kind::Billiard => run_billiard(scenario, seed, hash),
        Kind::LocalModel => run_local_model(scenario, seed, hash),
        Kind::Poset => run_poset(scenario, seed, hash),
    }
}

fn emit_wanted(scenario: &Scenario, what: &str) -> bool {
    scenario.output.emit.iter().any(|e| e == what)
}

fn run_flow(scenario: &Scenario, seed: u64, hash: String) -> Result<RunOutput> {
    let dcfg = scenario.domain.as_ref().unwrap();
    let fcfg = scenario.field.as_ref().unwrap();
    let w = Expr::parse(&dcfg.w).unwrap();
    let vx = Expr::parse(&fcfg.vx).unwrap();
    let vy = Expr::parse(&fcfg.vy).unwrap();
    let mut ctl = Controls::default();
    scenario.tolerances.apply(&mut ctl);

    let bbox_lo = Vec2::new(dcfg.bbox[0], dcfg.bbox[1]);
    let bbox_hi = Vec2::new(dcfg.bbox[2], dcfg.bbox[3]);

    // division lint on the boundary function
    let mut claims = Vec::new();
    let lint = w.lint_division(bbox_lo, bbox_hi, 32);
    claims.push(Claim {
        module: "field_expr",
        name: "division lint".into(),
        passed: lint.is_empty(),
        details: if lint.is_empty() {
            "no vanishing denominators".into()
        } else {
            lint.join("; ")
        },
    });

    let domain = Domain2D::new(w, bbox_lo, bbox_hi, scenario.sampling.boundary_resolution)
        .map_err(|e| anyhow!("domain construction: {e}"))?;
    let field = FlowField::new(vx, vy);

    let traversing =
        flow::check_traversing(&domain, &field, scenario.sampling.interior_probes, seed, &ctl);
    claims.push(Claim {
        module: "flow_sim",
        name: "traversing".into(),
        passed: traversing.pass,
        details: format!(
            "{} probes, {} failures",
            traversing.probes,
            traversing.failures.len()
        ),
    });
    if !traversing.pass {
        return finish_flow_report(scenario, seed, hash, claims, Vec::new());
    }

    let strata = flow::strata(&domain, &field, 1024, &ctl)
        .map_err(|e| anyhow!("strata: {e}"))?;
    claims.push(Claim {
        module: "flow_sim",
        name: "strata".into(),
        passed: true,
        details: format!(
            "{} tangencies ({} pass-through), {} entry arcs",
            strata.tangencies.len(),
            strata.tangencies.iter().filter(|t| t.stratum.sign > 0).count(),
            strata.entry_arcs().count()
        ),
    });

    let height = scenario
        .output
        .height
        .as_ref()
        .map(|h| Expr::parse(h).unwrap());
    let table = causality::compute_table_with_strata(
        &domain,
        &field,
        &strata,
        scenario.sampling.causality_samples,
        height.as_ref(),
        &ctl,
    )
    .map_err(|e| anyhow!("causality table: {e}"))?;

    let violations = table.validate();
    claims.push(Claim {
        module: "causality",
        name: "table invariants".into(),
        passed: violations.is_empty(),
        details: if violations.is_empty() {
            format!("{} rows", table.rows.len())
        } else {
            violations.join("; ")
        },
    });
    let min_slack = table
        .rows
        .iter()
        .map(|r| r.f_image - r.f_entry)
        .fold(f64::INFINITY, f64::min);
    claims.push(Claim {
        module: "causality",
        name: "semicontinuity".into(),
        passed: min_slack >= -1e-9,
        details: format!("min height slack {min_slack:.3e}"),
    });
    claims.push(Claim {
        module: "causality",
        name: "acyclic reachability".into(),
        passed: table.is_acyclic(1e-6),
        details: "no cycles under iterated images".into(),
    });

    let graph = holography::build_trajectory_graph(&table)
        .map_err(|e| anyhow!("graph reconstruction: {e}"))?;
    let interior = holography::interior_graph(&domain, &field, &strata, 32, &ctl)
        .map_err(|e| anyhow!("interior graph: {e}"))?;
    let (iso, _) = holography::graph_isomorphic(&graph, &interior);
    claims.push(Claim {
        module: "holography",
        name: "round-trip isomorphism".into(),
        passed: iso,
        details: format!(
            "reconstructed {} nodes / {} edges",
            graph.nodes.len(),
            graph.edges.len()
        ),
    });
    let chi = holography::euler_characteristic(&table).map_err(|e| anyhow!("chi: {e}"))?;
    let chi_interior = holography::interior_euler_characteristic(&strata);
    claims.push(Claim {
        module: "holography",
        name: "euler characteristic".into(),
        passed: chi == chi_interior,
        details: format!("boundary {chi}, interior {chi_interior}"),
    });

    let gv = causality::export_gv(&table, &strata, &domain);
    claims.push(Claim {
        module: "causality",
        name: "total variation (measured)".into(),
        passed: true,
        details: format!(
            "{:.4} in exit-arc units over {} entry arcs ({} discontinuities)",
            gv.total_variation_normalized,
            gv.entry_arcs,
            gv.discontinuities.len()
        ),
    });

    // artifacts
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    if emit_wanted(scenario, "table") {
        files.push((
            "table.csv".into(),
            causality::table_to_csv(&table).into_bytes(),
        ));
        files.push((
            "table.json".into(),
            serde_json::to_vec_pretty(&table)?,
        ));
        files.push((
            "reachability.dot".into(),
            causality::strata_reachability_dot(&table).into_bytes(),
        ));
    }
    if emit_wanted(scenario, "graph") {
        files.push(("gv.json".into(), serde_json::to_vec_pretty(&gv)?));
        files.push((
            "graph.dot".into(),
            holography::graph_to_dot(&graph).into_bytes(),
        ));
        files.push(("graph.json".into(), serde_json::to_vec_pretty(&graph)?));
    }
    if emit_wanted(scenario, "figures") {
        files.push((
            "strata.svg".into(),
            render_strata_svg(&domain, &field, &strata, &ctl).into_bytes(),
        ));
        files.push((
            "gv.svg".into(),
            render_gv_svg(&gv).into_bytes(),
        ));
        if let Ok(svg) = render_alpha_svg(&domain, &field, &strata, &ctl) {
            files.push(("alpha.svg".into(), svg.into_bytes()));
        }
        let (csv, divisors) = dump_trajectories(&domain, &field, &strata, &ctl)?;
        files.push(("trajectories.csv".into(), csv.into_bytes()));
        files.push(("divisors.json".into(), divisors.into_bytes()));
    }

    finish_flow_report(scenario, seed, hash, claims, files)
}

fn finish_flow_report(
    scenario: &Scenario,
    seed: u64,
    hash: String,
    claims: Vec<Claim>,
    files: Vec<(String, Vec<u8>)>,
) -> Result<RunOutput> {
    let report = Report {
        scenario: scenario.name.clone(),
        scenario_hash: hash,
        seed,
        claims,
        artifacts: files.iter().map(|(n, _)| n.clone()).collect(),
    };
    Ok(RunOutput { report, files })
}

fn render_strata_svg(
    domain: &Domain2D,
    field: &FlowField,
    strata: &flow::Strata,
    ctl: &Controls,
) -> String {
    let mut canvas = SvgCanvas::new(domain.bbox_lo, domain.bbox_hi, 640.0);
    for arc in &strata.arcs {
        let comp = &domain.components[arc.component];
        let len = arc.arc_length(comp.length);
        let n = 160;
        let pts: Vec<Vec2> = (0..=n)
            .map(|k| comp.point_at_raw((arc.s_start + len * k as f64 / n as f64) % comp.length))
            .collect();
        let color = if arc.sign > 0 { "#1a7f37" } else { "#c43333" };
        canvas.polyline(&pts, color, 2.0, false);
    }
    for t in &strata.tangencies {
        let color = if t.stratum.sign > 0 { "#e8a023" } else { "#3355cc" };
        canvas.circle(t.point, 4.0, color);
    }
    // a few trajectories
    for arc in strata.entry_arcs() {
        let comp_len = domain.components[arc.component].length;
        let len = arc.arc_length(comp_len);
        for k in 0..6 {
            let s = (arc.s_start + len * (k as f64 + 0.5) / 6.0) % comp_len;
            if let Ok(p) = domain.point_at(arc.component, s) {
                if let Ok(traj) = flow::trace_trajectory(domain, field, p, ctl) {
                    let pts: Vec<Vec2> = traj.polyline.iter().map(|&(_, q)| q).collect();
                    canvas.polyline(&pts, "#8899aa", 0.8, false);
                }
            }
        }
    }
    canvas.finish()
}

fn render_gv_svg(gv: &causality::GvRecord) -> String {
    let cols = gv.entry_arcs.max(1) as f64;
    let rows = gv.exit_arcs.max(1) as f64;
    let mut canvas = SvgCanvas::new(Vec2::new(0.0, 0.0), Vec2::new(cols, rows), 560.0);
    for i in 0..=gv.entry_arcs {
        canvas.segment(
            Vec2::new(i as f64, 0.0),
            Vec2::new(i as f64, rows),
            "#666666",
            1.0,
        );
    }
    for j in 0..=gv.exit_arcs {
        canvas.segment(
            Vec2::new(0.0, j as f64),
            Vec2::new(cols, j as f64),
            "#666666",
            1.0,
        );
    }
    for block in &gv.blocks {
        let origin = Vec2::new(block.entry_arc as f64, block.exit_arc as f64);
        let pts: Vec<Vec2> = block
            .points
            .iter()
            .map(|&(s, t)| origin + Vec2::new(s, t))
            .collect();
        for w in pts.windows(2) {
            if (w[1].y - w[0].y).abs() < 0.2 {
                canvas.segment(w[0], w[1], "#204080", 1.2);
            }
        }
    }
    canvas.finish()
}

fn render_alpha_svg(
    domain: &Domain2D,
    field: &FlowField,
    strata: &flow::Strata,
    ctl: &Controls,
) -> Result<String> {
    // one vertical f-interval per sampled trajectory, ordered by entry
    let mut trajectories = Vec::new();
    for arc in strata.entry_arcs() {
        let comp_len = domain.components[arc.component].length;
        let len = arc.arc_length(comp_len);
        for k in 0..48 {
            let s = (arc.s_start + len * (k as f64 + 0.5) / 48.0) % comp_len;
            let p = domain.point_at(arc.component, s)?;
            if let Ok(traj) = flow::trace_trajectory(domain, field, p, ctl) {
                trajectories.push(traj);
            }
        }
    }
    let d = {
        // height along the average field direction
        let mut acc = Vec2::default();
        for t in &trajectories {
            for &(_, p) in t.polyline.iter().step_by(8) {
                let v = field.eval(p);
                acc = acc + v / v.norm().max(1e-12);
            }
        }
        acc.normalized()
    };
    let f_of = |p: Vec2| d.dot(p);
    let n = trajectories.len().max(1) as f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for t in &trajectories {
        lo = lo.min(f_of(t.entry().point));
        hi = hi.max(f_of(t.exit().point));
    }
    let mut canvas = SvgCanvas::new(Vec2::new(0.0, lo), Vec2::new(n, hi), 640.0);
    for (i, t) in trajectories.iter().enumerate() {
        let x = i as f64 + 0.5;
        canvas.segment(
            Vec2::new(x, f_of(t.entry().point)),
            Vec2::new(x, f_of(t.exit().point)),
            "#204080",
            1.4,
        );
        for dpt in &t.divisor {
            canvas.circle(Vec2::new(x, f_of(dpt.point)), 2.0, "#c43333");
        }
    }
    Ok(canvas.finish())
}

fn dump_trajectories(
    domain: &Domain2D,
    field: &FlowField,
    strata: &flow::Strata,
    ctl: &Controls,
) -> Result<(String, String)> {
    let mut out = String::from("trajectory,t,x,y\n");
    let mut divisors: Vec<serde_json::Value> = Vec::new();
    let mut idx = 0usize;
    for arc in strata.entry_arcs() {
        let comp_len = domain.components[arc.component].length;
        let len = arc.arc_length(comp_len);
        for k in 0..12 {
            let s = (arc.s_start + len * (k as f64 + 0.5) / 12.0) % comp_len;
            let p = domain.point_at(arc.component, s)?;
            if let Ok(traj) = flow::trace_trajectory(domain, field, p, ctl) {
                for &(t, q) in &traj.polyline {
                    out.push_str(&format!("{idx},{t:.9},{:.9},{:.9}\n", q.x, q.y));
                }
                divisors.push(serde_json::json!({
                    "trajectory": idx,
                    "word": traj.omega.to_string(),
                    "transit_time": traj.transit_time,
                    "divisor": traj.divisor,
                }));
                idx += 1;
            }
        }
    }
    Ok((out, serde_json::to_string_pretty(&divisors)?))
}

fn run_billiard(scenario: &Scenario, seed: u64, hash: String) -> Result<RunOutput> {
    let tcfg = scenario.table.as_ref().unwrap();
    let outer = tcfg.outer.build()?;
    let obstacles: Result<Vec<Curve>> = tcfg.obstacles.iter().map(|c| c.build()).collect();
    let table = BilliardTable::new(outer, obstacles?).map_err(|e| anyhow!("table: {e}"))?;

    let mut claims = Vec::new();
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();

    if let Some(lines) = tcfg.census_lines {
        use traverse_core::selftest::seeded_rng;
        let mut rng = seeded_rng(seed);
        let census = billiards::tangency_census(&table, lines, &mut rng)
            .map_err(|e| anyhow!("census: {e}"))?;
        claims.push(Claim {
            module: "billiards",
            name: "tangency bounds".into(),
            passed: census.violations == 0,
            details: format!(
                "{} chords, max m'={}, violations={}",
                census.chords, census.max_reduced_multiplicity, census.violations
            ),
        });
        files.push(("census.json".into(), serde_json::to_vec_pretty(&census)?));
    }

    if let Some(orbit) = &tcfg.orbit {
        let p = table.outer.point_at_param(orbit.start_angle);
        let n = table.outward_normal(0, p);
        let t = n.perp();
        let dir = t * orbit.direction_angle.cos() - n * orbit.direction_angle.sin();
        let mut state = UnitState::new(0, p, dir);
        let mut csv = String::from("step,x,y,dir_x,dir_y\n");
        let mut pts = vec![state.point];
        let mut inward_ok = true;
        for step in 0..orbit.iterations {
            csv.push_str(&format!(
                "{step},{:.9},{:.9},{:.9},{:.9}\n",
                state.point.x, state.point.y, state.dir.x, state.dir.y
            ));
            state = billiards::billiard_map(&table, state).map_err(|e| anyhow!("orbit: {e}"))?;
            inward_ok &= state.is_inward(&table, 0.0);
            pts.push(state.point);
        }
        claims.push(Claim {
            module: "billiards",
            name: "orbit stays inward".into(),
            passed: inward_ok,
            details: format!("{} reflections", orbit.iterations),
        });
        files.push(("orbit.csv".into(), csv.into_bytes()));
        if emit_wanted(scenario, "figures") {
            let half = table.diameter() / 2.0 * 1.1;
            let mut canvas =
                SvgCanvas::new(Vec2::new(-half, -half), Vec2::new(half, half), 640.0);
            let outer_pts: Vec<Vec2> = (0..=256)
                .map(|k| table.outer.point_at_param(k as f64 * std::f64::consts::TAU / 256.0))
                .collect();
            canvas.polyline(&outer_pts, "#333333", 1.5, true);
            for obs in &table.obstacles {
                let pts: Vec<Vec2> = (0..=128)
                    .map(|k| obs.point_at_param(k as f64 * std::f64::consts::TAU / 128.0))
                    .collect();
                canvas.polyline(&pts, "#333333", 1.5, true);
            }
            canvas.polyline(&pts, "#204080", 0.8, false);
            files.push(("orbit.svg".into(), canvas.finish().into_bytes()));
        }
    }

    if let Some(pcfg) = &tcfg.poncelet {
        use traverse_core::selftest::seeded_rng;
        use rand::Rng as _;
        let mut rng = seeded_rng(seed.wrapping_add(1));
        let q1 = Curve::circle(Vec2::default(), pcfg.r1);
        let q2 = Curve::circle(Vec2::default(), pcfg.r2);
        let starts: Vec<Vec2> = (0..pcfg.starts)
            .map(|_| q1.point_at_param(rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let residuals = billiards::poncelet_check(&q1, &q2, pcfg.k, &starts)
            .map_err(|e| anyhow!("poncelet: {e}"))?;
        let max = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
        claims.push(Claim {
            module: "billiards",
            name: format!("poncelet k={}", pcfg.k),
            passed: true,
            details: format!("max residual {max:.3e} over {} starts", pcfg.starts),
        });
        #[derive(Serialize)]
        struct PonceletReport {
            k: usize,
            r1: f64,
            r2: f64,
            residuals: Vec<f64>,
        }
        files.push((
            "poncelet.json".into(),
            serde_json::to_vec_pretty(&PonceletReport {
                k: pcfg.k,
                r1: pcfg.r1,
                r2: pcfg.r2,
                residuals,
            })?,
        ));
    }

    let report = Report {
        scenario: scenario.name.clone(),
        scenario_hash: hash,
        seed,
        claims,
        artifacts: files.iter().map(|(n, _)| n.clone()).collect(),
    };
    Ok(RunOutput { report, files })
}

fn run_local_model(scenario: &Scenario, seed: u64, hash: String) -> Result<RunOutput> {
    let mcfg = scenario.model.as_ref().unwrap();
    let word: OmegaWord = mcfg.omega.parse().map_err(|e| anyhow!("omega: {e}"))?;
    let model = match mcfg.epsilon {
        Some(eps) => LocalModel::new(word.clone(), mcfg.roots.clone(), eps, 1.0),
        None => LocalModel::with_auto_box(word.clone(), mcfg.roots.clone()),
    }
    .map_err(|e| anyhow!("model: {e}"))?;

    let mut claims = Vec::new();
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();

    let x0 = mcfg.x.clone().unwrap_or_else(|| vec![0.0; model.coeff_dim()]);
    let divisor = model.fiber_divisor(&x0).map_err(|e| anyhow!("fiber: {e}"))?;
    let comps = local_model::components_of(&divisor);
    files.push(("divisor.json".into(), serde_json::to_vec_pretty(&divisor)?));
    files.push(("components.json".into(), serde_json::to_vec_pretty(&comps)?));

    claims.push(Claim {
        module: "local_model",
        name: "fiber at x".into(),
        passed: true,
        details: format!(
            "word {}, {} components, {} arrows max",
            divisor.word(),
            comps.len(),
            local_model::max_chain_arrows(&comps)
        ),
    });

    // sampled admissibility and the chain bound of the model word
    use rand::Rng as _;
    let mut rng = traverse_core::selftest::seeded_rng(seed);
    let bound = word
        .entries()
        .iter()
        .map(|&m| omega::chain_bound(m))
        .max()
        .unwrap_or(0) as usize;
    let mut max_arrows = 0usize;
    let mut admissible_ok = true;
    let mut sampled = 0usize;
    while sampled < mcfg.samples {
        let x: Vec<f64> = (0..model.coeff_dim())
            .map(|_| rng.gen_range(-model.epsilon()..model.epsilon()))
            .collect();
        let Ok(d) = model.fiber_divisor(&x) else { continue };
        sampled += 1;
        let cs = local_model::components_of(&d);
        max_arrows = max_arrows.max(local_model::max_chain_arrows(&cs));
        for comp in &cs {
            if comp.lo.is_some() && !comp.point_indices.is_empty() {
                let cw = OmegaWord::new(
                    comp.point_indices
                        .iter()
                        .map(|&i| d.points[i].multiplicity as u32)
                        .collect(),
                );
                admissible_ok &= cw.is_admissible();
            }
        }
    }
    claims.push(Claim {
        module: "local_model",
        name: "component words admissible".into(),
        passed: admissible_ok,
        details: format!("{sampled} sampled fibers"),
    });
    claims.push(Claim {
        module: "local_model",
        name: "chain bound".into(),
        passed: max_arrows <= bound.max(divisor.points.len().saturating_sub(1)),
        details: format!("max arrows {max_arrows}"),
    });

    if model.coeff_dim() > 0 {
        let x_star: Vec<f64> = (0..model.coeff_dim())
            .map(|i| if i == 0 { -model.epsilon() / 2.0 } else { 0.0 })
            .collect();
        let ts: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        if let Ok(chart) = model.separating_coordinates(&x_star, &ts) {
            files.push(("chart.json".into(), serde_json::to_vec_pretty(&chart)?));
        }
    }

    let report = Report {
        scenario: scenario.name.clone(),
        scenario_hash: hash,
        seed,
        claims,
        artifacts: files.iter().map(|(n, _)| n.clone()).collect(),
    };
    Ok(RunOutput { report, files })
}

fn run_poset(scenario: &Scenario, seed: u64, hash: String) -> Result<RunOutput> {
    let pcfg = scenario.poset.as_ref().unwrap();
    let words = omega::enumerate_admissible(pcfg.max_reduced_norm, pcfg.max_support);
    let listing: Vec<String> = words.iter().map(|w| w.to_string()).collect();
    let report = Report {
        scenario: scenario.name.clone(),
        scenario_hash: hash,
        seed,
        claims: vec![Claim {
            module: "omega",
            name: "enumeration".into(),
            passed: true,
            details: format!("{} admissible words", words.len()),
        }],
        artifacts: vec!["words.json".into()],
    };
    Ok(RunOutput {
        report,
        files: vec![("words.json".into(), serde_json::to_vec_pretty(&listing)?)],
    })
}
