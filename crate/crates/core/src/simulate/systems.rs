use crate::ode::OdeSystem;
use crate::potential::{self, Circle};

use super::CartesianState;

/// An ODE system whose states map back to Cartesian phase space.
pub(crate) trait Model<const N: usize>: OdeSystem<N> {
    fn lift(&self, t: f64, y: &[f64; N]) -> CartesianState;
    fn circle(&self) -> &Circle;
}

/// `(x, y, z, ẋ, ẏ, ż)`.
pub(crate) struct CartesianSystem {
    pub circle: Circle,
}

impl OdeSystem<6> for CartesianSystem {
    fn rhs(&self, _t: f64, y: &[f64; 6], dy: &mut [f64; 6]) -> Result<(), String> {
        let (_, g) = potential::evaluate([y[0], y[1], y[2]], &self.circle).map_err(|e| e.to_string())?;
        dy[0] = y[3];
        dy[1] = y[4];
        dy[2] = y[5];
        dy[3] = -g[0];
        dy[4] = -g[1];
        dy[5] = -g[2];
        Ok(())
    }

    fn block_size(&self) -> usize {
        3
    }
}

impl Model<6> for CartesianSystem {
    fn lift(&self, t: f64, y: &[f64; 6]) -> CartesianState {
        CartesianState::new(t, [y[0], y[1], y[2]], [y[3], y[4], y[5]])
    }

    fn circle(&self) -> &Circle {
        &self.circle
    }
}

/// `(r, z, ṙ, ż, φ)` with constant `K`. For `K = 0` the radial coordinate is
/// allowed to change sign, which is motion through the axis within the
/// meridian plane `φ = const`.
pub(crate) struct ReducedSystem {
    pub circle: Circle,
    pub k: f64,
}

impl OdeSystem<5> for ReducedSystem {
    fn rhs(&self, _t: f64, y: &[f64; 5], dy: &mut [f64; 5]) -> Result<(), String> {
        let [r, z, rdot, zdot, _] = *y;
        let (centrifugal, phidot) = if self.k == 0.0 {
            (0.0, 0.0)
        } else {
            if !(r > 0.0) {
                return Err(format!("r = {r} left the domain r > 0"));
            }
            let r2 = r * r;
            (self.k * self.k / (r2 * r), self.k / r2)
        };
        let (_, g) = potential::evaluate([r, 0.0, z], &self.circle).map_err(|e| e.to_string())?;
        dy[0] = rdot;
        dy[1] = zdot;
        dy[2] = centrifugal - g[0];
        dy[3] = -g[2];
        dy[4] = phidot;
        Ok(())
    }
}

impl Model<5> for ReducedSystem {
    fn lift(&self, t: f64, y: &[f64; 5]) -> CartesianState {
        let [r, z, rdot, zdot, phi] = *y;
        super::CylindricalState {
            t,
            r,
            z,
            rdot,
            zdot,
            k: self.k,
            phi,
        }
        .to_cartesian()
    }

    fn circle(&self) -> &Circle {
        &self.circle
    }
}
