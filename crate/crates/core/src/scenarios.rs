//! Built-in scenarios used by the acceptance suite and the CLI.

use crate::billiards::{BilliardTable, Curve};
use crate::domain::{Domain2D, DomainError};
use crate::expr::Expr;
use crate::flow::FlowField;
use crate::geom::Vec2;

pub struct FlowScenario {
    pub name: &'static str,
    pub w: &'static str,
    pub vx: &'static str,
    pub vy: &'static str,
    pub bbox: (f64, f64, f64, f64),
    pub expected_chi: i64,
}

/// Unit disk with the horizontal field: trajectory space is an interval.
pub const DISK: FlowScenario = FlowScenario {
    name: "disk",
    w: "1 - x^2 - y^2",
    vx: "1",
    vy: "0",
    bbox: (-1.5, -1.5, 1.5, 1.5),
    expected_chi: 1,
};

/// Concentric annulus shell: two pass-through tangencies on the hole,
/// trajectory space is a circle with two whiskers.
pub const ANNULUS: FlowScenario = FlowScenario {
    name: "annulus",
    w: "(4 - x^2 - y^2) * (x^2 + y^2 - 1)",
    vx: "1",
    vy: "0",
    bbox: (-2.5, -2.5, 2.5, 2.5),
    expected_chi: 0,
};

/// Asymmetric blob with an off-center hole and a non-constant field. The
/// outer curve is a tilted ellipse whose minimum curvature exceeds the
/// trajectory curvature bound of the field, so both outer tangencies are
/// singletons and both hole tangencies are pass-throughs.
pub const BLOB: FlowScenario = FlowScenario {
    name: "blob",
    w: "(1 - 0.3*x^2 - 0.55*y^2 - 0.13*x*y) * ((x - 0.35)^2 + (y - 0.2)^2 - 0.1764)",
    vx: "1",
    vy: "0.2 + 0.2*sin(x)",
    bbox: (-2.2, -1.6, 2.2, 1.6),
    expected_chi: 0,
};

pub const FLOW_SCENARIOS: [&FlowScenario; 3] = [&DISK, &ANNULUS, &BLOB];

impl FlowScenario {
    pub fn build(&self, resolution: usize) -> Result<(Domain2D, FlowField), DomainError> {
        let w = Expr::parse(self.w).expect("scenario boundary function parses");
        let vx = Expr::parse(self.vx).expect("scenario field parses");
        let vy = Expr::parse(self.vy).expect("scenario field parses");
        let domain = Domain2D::new(
            w,
            Vec2::new(self.bbox.0, self.bbox.1),
            Vec2::new(self.bbox.2, self.bbox.3),
            resolution,
        )?;
        Ok((domain, FlowField::new(vx, vy)))
    }
}

/// Concentric circular shell table (outer radius 2, obstacle radius 1).
pub fn shell_table() -> BilliardTable {
    BilliardTable::new(
        Curve::circle(Vec2::default(), 2.0),
        vec![Curve::circle(Vec2::default(), 1.0)],
    )
    .expect("shell table is well formed")
}

/// Two equal obstacles sharing external common tangent lines.
pub fn two_obstacle_table() -> BilliardTable {
    BilliardTable::new(
        Curve::circle(Vec2::default(), 4.0),
        vec![
            Curve::circle(Vec2::new(-1.5, 0.0), 0.7),
            Curve::circle(Vec2::new(1.5, 0.0), 0.7),
        ],
    )
    .expect("two-obstacle table is well formed")
}

/// Elliptic shell with an off-center circular obstacle.
pub fn elliptic_table() -> BilliardTable {
    BilliardTable::new(
        Curve::ellipse(Vec2::default(), 3.0, 2.0),
        vec![Curve::circle(Vec2::new(0.6, -0.3), 0.8)],
    )
    .expect("elliptic table is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{check_traversing, strata, Controls};

    #[test]
    fn blob_scenario_is_generic_and_traversing() {
        let (domain, field) = BLOB.build(2048).unwrap();
        assert_eq!(domain.components.len(), 2);
        let ctl = Controls::default();
        let report = check_traversing(&domain, &field, 60, 0, &ctl);
        assert!(report.pass, "failures: {:?}", report.failures);
        let st = strata(&domain, &field, 1024, &ctl).unwrap();
        // two singletons on the outer curve, two pass-throughs on the hole
        let outer: Vec<_> = st.tangencies_on(0).collect();
        let hole: Vec<_> = st.tangencies_on(1).collect();
        assert_eq!(outer.len(), 2, "{outer:?}");
        assert!(outer.iter().all(|t| t.stratum.sign < 0));
        assert_eq!(hole.len(), 2, "{hole:?}");
        assert!(hole.iter().all(|t| t.stratum.sign > 0));
        assert_eq!(st.entry_arcs().count(), 2);
    }

    #[test]
    fn all_scenarios_build() {
        for sc in FLOW_SCENARIOS {
            let (domain, field) = sc.build(1024).unwrap();
            let report = check_traversing(&domain, &field, 30, 1, &Controls::default());
            assert!(report.pass, "{} not traversing", sc.name);
        }
    }
}
