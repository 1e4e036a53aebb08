//! Multiplicative Bell inequalities for two-qubit systems.
//!
//! The crate covers the full pipeline around the product-of-correlators Bell
//! functional `B_n = prod_j v_j . c_j`:
//!
//! * [`quantum`]: two-qubit density matrices, Bloch-vector observables,
//!   correlators and local (Pearson) statistics.
//! * [`functionals`]: the `V` matrix, the multiplicative and additive
//!   functionals, CHSH and the AM-GM relation between them.
//! * [`bounds`]: classical bounds by vertex enumeration and interior search,
//!   the fully deterministic `FD_n` family and its large-`n` ratio to `n!`.
//! * [`strategies`]: the `n!`-saturating measurement construction and a
//!   numerical optimizer over Bloch-sphere settings.
//! * [`experiment`]: coincidence-count Monte Carlo with waveplate, efficiency
//!   and depolarizing noise.
//! * [`richer`]: local-correlation (`eta`) dependent bounds, the PSD
//!   constraint and correlation-ellipse geometry.
//! * [`cli`]: the `multibell` command line front end.

pub mod bounds;
pub mod cli;
mod error;
pub mod experiment;
pub mod functionals;
pub mod io;
pub mod quantum;
pub mod richer;
pub mod rng;
pub mod strategies;

pub use error::{Error, Result};
pub use functionals::{BellKind, BellResult, CorrelationMatrix};
pub use num_complex::Complex64;
pub use quantum::{BlochVector, Party, TwoQubitState};
pub use strategies::Strategy;
