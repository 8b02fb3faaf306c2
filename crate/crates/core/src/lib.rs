//! Geometric simulation and almost-global tracking control of the pendubot
//! and of planar serial chains with passive joints.
//!
//! Everything lives on products of SO(2): configurations are [`Rotation2`]
//! matrices, velocities are body rates, and the integrator advances rotations
//! with the group exponential.

pub mod acceptance;
pub mod agat;
pub mod error;
pub mod integrator;
pub mod nlink;
pub mod oracle;
pub mod pendubot;
pub mod scenario;
pub mod so2;

pub use agat::{AgatController, ErrorState, GainSet, ReferenceTrajectory};
pub use error::{Error, Result};
pub use integrator::{IntegratorSpec, TrajectoryRecord};
pub use pendubot::{CoeffSet, PendubotParams, PendubotState, PotentialPairing};
pub use so2::Rotation2;
