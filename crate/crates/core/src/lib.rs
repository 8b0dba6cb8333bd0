//! Low-memory Frank–Wolfe solvers for Max-k-Cut and Max-Agree correlation
//! clustering.
//!
//! The SDP iterate is represented by Gaussian samples plus the vector of its
//! constrained entries; no `n × n` matrix is formed outside shadow mode.

pub mod cost;
pub mod error;
pub mod graph;
pub mod harness;
pub mod lanczos;
pub mod linalg;
pub mod memory;
pub mod oracle;
pub mod penalty;
pub mod rng;
pub mod rounding;
pub mod sampler;
pub mod sparsify;

pub use cost::{build_cost_maxagree, build_cost_maxkcut, CostOperator};
pub use error::{Error, Result};
pub use graph::{
    jaccard_signed_graph, parse_gset, read_gset, Edge, Sign, SignedGraph, WeightedGraph,
};
pub use harness::{emit_report, run_maxagree, run_maxkcut, RunConfig, RunKind, RunReport};
pub use oracle::{alpha_k, alpha_k_oracle, brute_force_maxagree, brute_force_maxkcut, AlphaOracle};
pub use penalty::{
    gradient_operator, objective_value, phi, phi_gradient, residuals, ConstraintImage,
    GradientOperator, PenaltyConfig, ProblemKind, DEFAULT_ETA,
};
pub use rounding::{
    agree_value, cut_value, fj_round, repair_samples, round_maxagree, round_maxkcut,
    sign_pattern_round, BestOf, Clustering, Partition, RepairPlan,
};
pub use sampler::{
    fw_gaussian, fw_gaussian_observed, fw_gaussian_resume, lmo, update_variable, Checkpoint,
    IterationRecord, LmoResult, Problem, SampleSet, SolverOptions, SolverOutput, SolverStats,
};
pub use sparsify::{audit_closeness, sparsify_stream, SparsifierState};
