//! Analytical false-positive model for the segment filter.

pub mod objective;
pub mod occupancy;
pub mod substitution;
pub mod table;

pub use objective::{
    collision_probs, conditional_fp, expected_fp, optimal_k1, optimize_k2, optimize_k2_in, required_m2, size_bf1,
    FpEstimate, FpParams, K2Optimum, SearchMethod,
};
pub use occupancy::{occupancy_distribution, pr_alpha, Occupancy};
pub use substitution::{c_x1, c_x1_oracle, c_xj_lower, c_xj_oracle};
pub use table::{build_c_table, CTable, DEFAULT_TABLE_CAP};
