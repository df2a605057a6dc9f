//! Interaction-aware decision making for highway forced merging.
//!
//! The crate models an on-ramp ego vehicle negotiating its way into mainline
//! traffic. Interacting drivers are modeled as reward maximizers whose social
//! cooperativeness (social value orientation) and personal objectives are
//! latent parameters; a Bayesian filter estimates them online, an attention
//! network can imitate the analytic policy for cheap inference, and the ego
//! plans over a finite trajectory library with an interaction-guided tree
//! search.
//!
//! Module map:
//! - [`geometry`]: bicycle kinematics, road layout, shared constants
//! - [`trajectory`]: the 225-entry control library and state-dependent action space
//! - [`scene`]: subject-centric snapshots of nearby traffic
//! - [`reward`]: personal and SVO-weighted social rewards
//! - [`behavior`]: cumulative reward, argmax choice, softmax policy
//! - [`inference`]: recursive Bayesian posterior over driver parameters
//! - [`sann`]: social-attention network, training, and dataset synthesis
//! - [`planner`]: ego decision-tree search with branch trimming
//! - [`sim`]: closed-loop simulation, traffic agents, replay, metrics

pub mod behavior;
pub mod error;
pub mod geometry;
pub mod inference;
pub mod planner;
pub mod reward;
pub mod sann;
pub mod scene;
pub mod sim;
pub mod trajectory;

pub use error::{Error, Result};
