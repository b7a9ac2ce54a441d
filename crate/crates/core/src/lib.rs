//! Dynamics of a point particle in the gravitational field of a fixed
//! homogeneous circle.
//!
//! * [`special`] — AGM, the elliptic kernel `f(t)`, its derivative and the χ-series.
//! * [`potential`] — the 3D potential and its gradient, scaling identities.
//! * [`planar`] — effective potential in the plane of the circle, critical
//!   radii and regime classification.
//! * [`simulate`] — 3D and reduced integrators with collision detection.
//! * [`wire`] — the large-radius (straight wire) limit of the field.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Tabulated nodes and oracle values keep their published digits.
#![allow(clippy::excessive_precision)]

pub mod error;
pub mod ode;
pub mod planar;
pub mod potential;
pub mod quadrature;
pub mod roots;
pub mod simulate;
pub mod special;
pub mod wire;

pub use error::{Error, Result};
pub use planar::{CriticalData, Regime, RegimeClassification, RegionLabel, Side};
pub use potential::{CartesianPoint, Circle, DistancePair};
pub use simulate::{
    CartesianState, CollisionReport, CylindricalState, IntegratorOptions, Termination, Trajectory,
};
pub use special::AgmResult;
pub use wire::WireLimitPoint;
