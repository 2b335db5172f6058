//! Low-rank matrix recovery from linear measurements with quadratic-envelope
//! regularization of the rank penalty and of the fixed-rank indicator.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`] wraps the SVD with a fixed sign convention and lifts
//!   absolutely symmetric vector functions to matrices.
//! * [`envelopes`] evaluates the penalties and their proximal maps.
//! * [`problem`] holds measurement operators, instances, generators and the
//!   normalization to `‖𝒜‖ < 1`; [`io`] reads and writes them.
//! * [`solvers`] runs forward-backward splitting, ADMM, nuclear-norm
//!   bisection and a best-rank-`K` reference oracle.
//! * [`certificates`] checks stationarity and the uniqueness and
//!   global-optimality conditions.
//! * [`experiments`] drives the seeded synthetic sweeps and writes CSV.
//! * [`cli`] backs the `lowrank` binary.
//!
//! ```
//! use lowrank_envelope::envelopes::{prox_q2_mucard, ProxParams};
//!
//! let p = ProxParams::new(4.0).unwrap();
//! assert_eq!(prox_q2_mucard(&[2.0, 0.75, 0.4], 1.0, p), vec![2.0, 0.5, 0.0]);
//! ```

pub mod certificates;
pub mod cli;
pub mod envelopes;
pub mod error;
pub mod experiments;
pub mod io;
pub mod oracle;
pub mod problem;
pub mod solvers;
pub mod spectral;

pub use envelopes::{ProxParams, Regularizer};
pub use error::{Error, Result};
pub use problem::{LinearOp, ProblemInstance, RngSeed};
pub use spectral::Matrix;
