//! Training and feedback budgeting for the multiuser MIMO downlink with
//! zero-forcing beamforming under imperfect channel state information at
//! the transmitter.
//!
//! * [`model`]: closed-form rates, rate gaps and feedback error laws.
//! * [`optimizer`]: training/feedback split when both consume the downlink block.
//! * [`tradeoff`]: downlink rate against uplink feedback spend and its Pareto boundary.
//! * [`doppler`]: temporally correlated fading with delayed (predicted) CSIT.
//! * [`lab`]: Monte Carlo validation, RVQ, user selection.

pub mod doppler;
pub mod error;
pub mod lab;
pub mod model;
pub mod optimizer;
pub mod search;
pub mod special;
pub mod tradeoff;

pub use error::{Error, Result};
pub use model::{FeedbackScheme, RateResult, ResourceSplit, SchemeKind, SystemConfig};
pub use optimizer::OptimizationResult;
