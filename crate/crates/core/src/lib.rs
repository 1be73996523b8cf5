//! Analysis toolkit for central-force Hamiltonians
//!
//!   h0 = |p|^2/2 + V(|q|),
//!
//! written in the two actions (I1, I2) = (radial action, total angular
//! momentum modulus). The crate verifies a fourth-order condition on V under
//! which h0 is a quasi-convex function of the actions (so small perturbations
//! leave the actions nearly frozen for very long times), computes the action
//! map and Arnold determinant numerically, and runs long-horizon
//! structure-preserving integrations measuring the actual action drift.
//!
//! Modules:
//! - [`potentials`]: analytic V(r) families with exact derivatives, window
//!   validation (V' > 0, V'' + 3V'/r > 0), homogeneous classification.
//! - [`circular`]: everything at circular orbits: normal-form coefficients,
//!   the degeneracy residuals, the Arnold determinant on the I1 = 0 slice,
//!   exceptional-set scans.
//! - [`actions`]: turning points, action quadrature, the inverse energy map
//!   E(I1, I2), finite-difference frequencies/Hessians, the bordered
//!   determinant and quasi-convexity test at general action points.
//! - [`dynamics`]: 4th-order symplectic integration of h0 + eps f, action
//!   reconstruction along trajectories, drift experiments.
//! - [`config`] / [`report`]: JSON run configuration and the CSV-writing
//!   analysis stages used by the CLI.

pub mod actions;
pub mod circular;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod numerics;
pub mod potentials;
pub mod report;

pub use actions::{ActionPoint, Convexity, StepPolicy, TurningPair};
pub use circular::{CircularOrbit, Classification, ResidualReport, ScanOutcome};
pub use config::RunConfig;
pub use dynamics::{CartesianState, DriftReport, DriftSetup, Perturbation};
pub use error::{Error, ErrorCategory, Result};
pub use potentials::{
    AdmissibleWindow, CentralPotential, Derivs, Homogeneous, LennardJones, PotentialSpec,
    PowerSum, ScreenedCoulomb,
};
