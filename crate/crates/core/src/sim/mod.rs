//! Monte-Carlo experiments.

pub mod config;
pub mod flow;
pub mod fp;
pub mod jammer;
pub mod report;
pub mod timing;

pub use config::{Placement, ScenarioConfig};
pub use flow::{clbf_provenance_bits, gps_baseline, simulate_compressed_flow, ProvenanceSize, GPS_BLOB_BYTES};
pub use fp::{draw_spatial_map, simulate_fp_curve, simulate_fp_rate, trial_rng, Scenario, TrialRecord};
pub use jammer::{jammer_scenario, JammerTopology, JammerVerdict};
pub use report::{RateEstimate, SimReport};
pub use timing::{dict_pfail, ArrivalModel, DictTimingConfig};
