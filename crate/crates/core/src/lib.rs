//! Closed-loop simulator for massive random access with access class barring.
//!
//! Active users are detected from multi-antenna measurements by sparse
//! recovery ([`saud`]), and the per-class barring factors are driven by either
//! a tabular Q-learning agent ([`rl`]) or a TD3 actor-critic ([`td3`]) built on
//! a small self-contained network stack ([`nn`]). [`bounds`] evaluates the
//! analytical accuracy/utility/complexity results and [`harness`] runs
//! experiments end to end.

pub mod bounds;
pub mod env;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod nn;
pub mod rl;
pub mod rng;
pub mod saud;
pub mod sim;
pub mod td3;

pub use error::{Error, Result};
