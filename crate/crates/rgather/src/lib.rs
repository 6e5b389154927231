//! Min-size clustering (r-gather) toolkit.
//!
//! The crate covers the offline pipelines (plain, with outliers, pointwise and
//! total power cost), the graph-power primitives they are built from, an MPC
//! round and space accounting harness, and a fully dynamic structure based on
//! navigating nets. Every approximation guarantee has a brute-force oracle in
//! [`metric`] so it can be checked on small inputs.

pub mod cluster;
pub mod dynamic;
pub mod error;
pub mod io;
pub mod lsh;
pub mod metric;
pub mod mpc;
pub mod nn_graph;
pub mod power_graph;
pub mod rng;

pub use cluster::{
    brute_force_opt_power_cost, rgather, rgather_at_scale, rgather_outliers, rgather_pointwise,
    total_power_cost, GraphMode, RGatherOptions, ScaleGrid,
};
pub use dynamic::{DynRGather, IncrementalRGather, NavigatingNet};
pub use error::{Error, Result};
pub use metric::{
    brute_force_opt_radius, brute_force_opt_radius_outliers, dist, lower_bound_check, rho_hat,
    rho_hat_k, rho_r, validate, Center, Cluster, Clustering, PointSet, RGatherParams,
    ValidationReport,
};
pub use mpc::{CostLedger, CostModel, CostReport};
pub use nn_graph::{Graph, NeighborGraph};
