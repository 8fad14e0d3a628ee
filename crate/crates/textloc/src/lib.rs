//! textloc: a text-to-point-cloud localization toolkit.
//!
//! The library turns instance-annotated 3D point clouds into localization
//! benchmarks and evaluates localizers on them:
//!
//! - [`cloud`] / [`trajectory`] / [`taxonomy`]: canonical inputs.
//! - [`map_builder`]: S x S local maps of discrete instances (DBSCAN for
//!   stuff, a completeness rule for objects).
//! - [`query_gen`]: templated text queries ("The pose is east of gray
//!   building.") sampled around map centers.
//! - [`bev`] / [`scene_graph`]: the paired dense and structured map
//!   representations fed to localizers.
//! - [`pna`]: ground-truth partial node assignments, plus the forced
//!   full-assignment variant.
//! - [`localize`]: a deterministic constraint-grid oracle and a client
//!   for an OpenAI-compatible vision-language endpoint.
//! - [`eval`]: Recall@K m, assignment accuracy, and error buckets.
//! - [`pipeline`] / [`dataset`]: batch orchestration over a reproducible
//!   on-disk layout.
//!
//! Start with the runnable examples:
//!
//! ```text
//! cargo run --example build_maps
//! cargo run --example generate_queries
//! cargo run --example render_bev
//! cargo run --example label_assignments
//! cargo run --example oracle_localization
//! cargo run --example evaluate_run
//! cargo run --example full_pipeline
//! cargo run --example vlm_client        # needs a reachable endpoint
//! ```
//!
//! Every random decision flows from a master seed through per-(map,
//! query) derived streams ([`rng`]), so outputs are byte-identical across
//! reruns and worker counts.

// `!(x > 0.0)` guards reject NaN along with non-positive values; the
// suggested `x <= 0.0` would silently accept NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bev;
pub mod cloud;
pub mod color;
pub mod dataset;
pub mod direction;
pub mod error;
pub mod eval;
pub mod geom;
pub mod localize;
pub mod map_builder;
pub mod pipeline;
pub mod pna;
pub mod query_gen;
pub mod rng;
pub mod scene_graph;
pub mod synth;
pub mod taxonomy;
pub mod trajectory;

pub use error::{Error, Result};
