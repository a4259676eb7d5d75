//! Numerical laboratory for Hamilton–Jacobi equations and optimal transport
//! on finite metric spaces, with experiments that witness stability of the
//! Hopf–Lax semigroup and of Kantorovich maximizers under
//! Gromov–Hausdorff approximation.
//!
//! * [`metric`]: finite metric spaces, graph generators and validation.
//! * [`maps`]: ε-isometries, their certificates and ε-inverses.
//! * [`hopf_lax`]: the Hopf–Lax semigroup, d²/2-transforms and slopes.
//! * [`kantorovich`]: exact W₂ and dual Kantorovich maximizers.
//! * [`harness`]: refinement families and convergence experiments.
//! * [`format`]: line-oriented text formats for all of the above.

pub mod error;
pub mod format;
pub mod harness;
pub mod hopf_lax;
pub mod kantorovich;
pub mod maps;
pub mod metric;
pub mod simplex;

pub use error::{Error, Result};
