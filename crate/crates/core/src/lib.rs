//! A recurrent attention meta-controller that decomposes a four-room
//! gridworld into 5×5 views and hands subgoals to an optimal base agent,
//! trained with REINFORCE.
//!
//! Module map:
//! - [`numeric`]: tensors, layers with hand-written backward passes, Adam,
//!   finite-difference checks
//! - [`env`]: the 10×5 rooms gridworld
//! - [`attention`]: the 5×5 crop and its up/down/noop control
//! - [`oracle`]: the optimal goal-conditioned base agent and its gates
//! - [`controller`]: attention and no-attention meta-controller networks
//! - [`reinforce`]: rollouts, returns, baseline and the training loop
//! - [`harness`]: experiments, configuration, CSV output and summaries

pub mod attention;
pub mod controller;
pub mod env;
pub mod error;
pub mod harness;
pub mod numeric;
pub mod oracle;
pub mod reinforce;
pub mod rng;

pub use error::{Error, Result};
