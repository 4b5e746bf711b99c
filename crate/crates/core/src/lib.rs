//! Traversing flows on compact planar domains, seen from their boundary.
//!
//! A *traversing* vector field on a compact domain with boundary has every
//! trajectory equal to a boundary-to-boundary arc or a boundary singleton.
//! This crate simulates such flows, builds the discrete *causality table*
//! (entry point → next boundary point along the trajectory), and then
//! reconstructs interior invariants — boundary strata, tangency
//! multiplicities, the labeled trajectory-space graph, and the Euler
//! characteristic — from that boundary table alone.
//!
//! Sign convention used throughout: the domain is `{w >= 0}` for a boundary
//! defining function `w` with `0` a regular value. The stratum `∂_j^±` of a
//! boundary point is `(j, sign)` where `j` is the smallest order with a
//! nonvanishing flow derivative of `w` and `sign` is the sign of that
//! derivative. With this convention `∂_1^+` is the entry set, and isolated
//! (singleton) tangencies land in `∂_2^-` while interior pass-through
//! tangencies land in `∂_2^+`.
//!
//! Modules:
//! - [`omega`]: combinatorics of multiplicity words.
//! - [`expr`] and [`jet`]: the small expression language for fields and
//!   boundary functions, with exact flow-directional derivatives.
//! - [`roots`]: real roots of low-degree polynomials with multiplicities.
//! - [`local_model`]: semi-algebraic local models of boundary tangency and
//!   their fiberwise causality.
//! - [`domain`] and [`flow`]: implicit boundary tracing and the ground-truth
//!   trajectory integrator.
//! - [`causality`]: the sampled boundary causality table.
//! - [`holography`]: boundary-only reconstruction and graph comparison.
//! - [`billiards`]: flat-metric scattering, billiard map, Poncelet closures.
//! - [`scenarios`]: the built-in disk / annulus / blob-with-hole scenarios.
//! - [`selftest`]: the acceptance suite shared by `cargo test` and the CLI.

pub mod billiards;
pub mod causality;
pub mod domain;
pub mod expr;
pub mod flow;
pub mod geom;
pub mod holography;
pub mod jet;
pub mod local_model;
pub mod omega;
pub mod roots;
pub mod scenarios;
pub mod selftest;
pub mod svg;

pub use geom::Vec2;
pub use omega::OmegaWord;
