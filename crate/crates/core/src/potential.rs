//! Newtonian potential of a homogeneous circle of radius `ρ` and linear
//! density `λ` lying in the plane `z = 0`, centred at the origin.
//!
//! All evaluations go through the extreme distances `(d, D)` from the field
//! point to the circle: `V = −M / σ(d, D)` and the gradient follows from the
//! χ-series, `∂V/∂D = (χ − 1) V / D`, `∂V/∂d = −χ V / d`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::simulate::CartesianState;
use crate::special;

/// Below this squared cylindrical radius the point is treated as lying on the
/// symmetry axis.
pub const AXIS_EPS_SQ: f64 = 1e-24;

/// A fixed homogeneous circle. The mass is always derived, `M = 2πλρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    rho: f64,
    lambda: f64,
}

impl Circle {
    pub fn new(rho: f64, lambda: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return domain(format!("circle radius must be positive, got {rho}"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return domain(format!("circle density must be positive, got {lambda}"));
        }
        Ok(Self { rho, lambda })
    }

    pub fn with_mass(rho: f64, mass: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return domain(format!("circle radius must be positive, got {rho}"));
        }
        Self::new(rho, mass / (2.0 * PI * rho))
    }

    /// `ρ = 1`, `M = 1`.
    pub fn normalized() -> Self {
        Self {
            rho: 1.0,
            lambda: 1.0 / (2.0 * PI),
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mass(&self) -> f64 {
        2.0 * PI * self.lambda * self.rho
    }
}

impl Default for Circle {
    fn default() -> Self {
        Self::normalized()
    }
}

/// Minimum and maximum distance from a point to the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistancePair {
    pub d: f64,
    #[serde(rename = "D")]
    pub big_d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartesianPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for CartesianPoint {
    fn from(p: [f64; 3]) -> Self {
        Self::new(p[0], p[1], p[2])
    }
}

/// `D² = (s + ρ)² + z²`, `d² = (s − ρ)² + z²` with `s = √(x² + y²)`.
pub fn dist_extremes(p: CartesianPoint, c: &Circle) -> DistancePair {
    let s = p.x.hypot(p.y);
    DistancePair {
        d: (s - c.rho).hypot(p.z),
        big_d: (s + c.rho).hypot(p.z),
    }
}

/// `V(p) = −M / σ(d, D)`.
pub fn potential(p: CartesianPoint, c: &Circle) -> Result<f64> {
    let DistancePair { d, big_d } = dist_extremes(p, c);
    if !(d > 0.0) {
        return Err(Error::OnCircle);
    }
    Ok(-c.mass() / special::agm(big_d, d)?.value)
}

/// `∇V(p)`. The acceleration of a test particle is `−∇V`.
pub fn gradient(p: CartesianPoint, c: &Circle) -> Result<[f64; 3]> {
    evaluate(p.to_array(), c).map(|(_, g)| g)
}

/// Potential and gradient from one pass over the AGM iterates.
pub fn evaluate(p: [f64; 3], c: &Circle) -> Result<(f64, [f64; 3])> {
    let [x, y, z] = p;
    let m = c.mass();
    let rho = c.rho;
    let s2 = x * x + y * y;
    if s2 < AXIS_EPS_SQ {
        // d = D on the axis: V = −M/√(ρ²+z²), ∇V = (0, 0, Mz/(ρ²+z²)^{3/2}).
        let r2 = rho * rho + z * z;
        let r = r2.sqrt();
        return Ok((-m / r, [0.0, 0.0, m * z / (r2 * r)]));
    }
    let s = s2.sqrt();
    let d = (s - rho).hypot(z);
    let big_d = (s + rho).hypot(z);
    if !(d > 0.0) {
        return Err(Error::OnCircle);
    }
    let (sigma, chi) = special::sigma_chi_unchecked(big_d, d);
    let v = -m / sigma;
    let dv_dbig = (chi - 1.0) / big_d * v;
    let dv_dsmall = -chi / d * v;
    // ∂/∂s and ∂/∂z through D(s, z) and d(s, z)
    let dv_ds = dv_dbig * (s + rho) / big_d + dv_dsmall * (s - rho) / d;
    let dv_dz = (dv_dbig / big_d + dv_dsmall / d) * z;
    Ok((v, [dv_ds * x / s, dv_ds * y / s, dv_dz]))
}

/// Maps a solution of the `(ρ, M)` problem to the `(ζ, N)` problem:
/// `s(t) = (ζ/ρ) r(√(Nρ³/(Mζ³)) t)`.
pub fn rescale_solution(
    samples: &[CartesianState],
    from: &Circle,
    to: &Circle,
) -> Vec<CartesianState> {
    let length = to.rho / from.rho;
    // r-time τ corresponds to s-time τ / rate
    let rate = (to.mass() * from.rho.powi(3) / (from.mass() * to.rho.powi(3))).sqrt();
    samples
        .iter()
        .map(|s| CartesianState {
            t: s.t / rate,
            position: s.position.map(|v| v * length),
            velocity: s.velocity.map(|v| v * length * rate),
        })
        .collect()
}

/// Scaling factors `(length, time)` that take the `(ρ, M)` problem to the
/// `(ζ, N)` problem; periods scale by `time`.
pub fn scaling_factors(from: &Circle, to: &Circle) -> (f64, f64) {
    let length = to.rho / from.rho;
    let time = (from.mass() * to.rho.powi(3) / (to.mass() * from.rho.powi(3))).sqrt();
    (length, time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::SQRT_2;

    // −2π / σ(1, 3) at 40 digits.
    const V_2_0_0: f64 = -3.371_500_709_625_192_085_742_407_315_598_154;

    fn unit() -> Circle {
        Circle::new(1.0, 1.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn circle_mass_and_validation() {
        let c = Circle::new(2.0, 0.5).unwrap();
        assert_eq!(c.mass(), 2.0 * PI * 0.5 * 2.0);
        let m = Circle::with_mass(3.0, 7.0).unwrap();
        assert!(rel(m.mass(), 7.0) < 1e-15);
        assert!(Circle::new(0.0, 1.0).is_err());
        assert!(Circle::new(1.0, -1.0).is_err());
        assert!(Circle::with_mass(-1.0, 1.0).is_err());
        assert_eq!(Circle::normalized().mass(), 1.0);
    }

    #[test]
    fn distance_pairs() {
        let c = unit();
        assert_eq!(dist_extremes(CartesianPoint::default(), &c), DistancePair { d: 1.0, big_d: 1.0 });
        let p = dist_extremes(CartesianPoint::new(0.0, 0.0, 2.0), &c);
        assert_eq!(p.d, p.big_d);
        assert!((p.d - 5f64.sqrt()).abs() < 1e-15);
        let p = dist_extremes(CartesianPoint::new(2.0, 0.0, 0.0), &c);
        assert_eq!((p.d, p.big_d), (1.0, 3.0));
        let q = CartesianPoint::new(0.3, -1.2, 0.7);
        let p = dist_extremes(q, &c);
        let s = q.x.hypot(q.y);
        assert!((p.big_d * p.big_d - p.d * p.d - 4.0 * s).abs() < 1e-14);
        assert_eq!(dist_extremes(CartesianPoint::new(1.0, 0.0, 0.0), &c).d, 0.0);
    }

    #[test]
    fn potential_values() {
        let c = unit();
        assert!(rel(potential(CartesianPoint::default(), &c).unwrap(), -2.0 * PI) < 1e-15);
        let z: f64 = 1.7;
        let v = potential(CartesianPoint::new(0.0, 0.0, z), &c).unwrap();
        assert!(rel(v, -2.0 * PI / (1.0 + z * z).sqrt()) < 1e-15);
        let v = potential(CartesianPoint::new(2.0, 0.0, 0.0), &c).unwrap();
        assert!(rel(v, V_2_0_0) < 1e-15);
        assert!(matches!(
            potential(CartesianPoint::new(0.0, 1.0, 0.0), &c),
            Err(Error::OnCircle)
        ));
    }

    #[test]
    fn potential_matches_defining_integral() {
        let c = Circle::new(1.3, 0.7).unwrap();
        for p in [[0.2, 0.1, 0.0], [2.0, -1.0, 0.5], [0.0, 1.29, 0.01], [5.0, 5.0, -5.0]] {
            let pair = dist_extremes(p.into(), &c);
            let q = crate::quadrature::integrate(
                |psi: f64| {
                    let (s, co) = psi.sin_cos();
                    1.0 / (pair.d * pair.d * co * co + pair.big_d * pair.big_d * s * s).sqrt()
                },
                0.0,
                PI / 2.0,
                0.0,
                1e-14,
            );
            let oracle = -4.0 * c.lambda() * c.rho() * q.value;
            assert!(rel(potential(p.into(), &c).unwrap(), oracle) < 1e-10);
        }
    }

    #[test]
    fn gradient_special_points() {
        let c = unit();
        assert_eq!(gradient(CartesianPoint::default(), &c).unwrap(), [0.0; 3]);
        let g = gradient(CartesianPoint::new(0.0, 0.0, 1.0), &c).unwrap();
        assert_eq!(g[0], 0.0);
        assert!(rel(g[2], c.mass() / (2.0 * SQRT_2)) < 1e-15);
        assert!(gradient(CartesianPoint::new(-1.0, 0.0, 0.0), &c).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let c = unit();
        let p = [1.7, 0.3, 0.4];
        let g = gradient(p.into(), &c).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut a = p;
            let mut b = p;
            a[i] += h;
            b[i] -= h;
            let fd = (potential(a.into(), &c).unwrap() - potential(b.into(), &c).unwrap()) / (2.0 * h);
            assert!(rel(g[i], fd) < 1e-7, "component {i}: {} vs {fd}", g[i]);
        }
    }

    #[test]
    fn near_axis_branch_is_continuous() {
        let c = unit();
        let on = gradient(CartesianPoint::new(0.0, 0.0, 0.8), &c).unwrap();
        let off = gradient(CartesianPoint::new(1e-9, 0.0, 0.8), &c).unwrap();
        assert!(rel(off[2], on[2]) < 1e-12);
        assert!(off[0].abs() < 1e-8);
    }

    #[test]
    fn level_set_sandwich() {
        let c = unit();
        for r in [1.5, 3.0, 10.0, 1e3, 1e6] {
            for (ux, uz) in [(1.0, 0.0), (0.6, 0.8), (0.0, 1.0)] {
                let p = CartesianPoint::new(r * ux, 0.0, r * uz);
                let v = potential(p, &c).unwrap();
                assert!(v >= -c.mass() / (r - 1.0) && v <= -c.mass() / (r + 1.0));
            }
        }
        // −V ≤ M / dist(p, C), and V diverges as the circle is approached.
        let mut prev = 0.0;
        for k in 1..12 {
            let dist = 10f64.powi(-k);
            let p = CartesianPoint::new(1.0 + dist * 0.6, 0.0, dist * 0.8);
            let v = potential(p, &c).unwrap();
            assert!(-v <= c.mass() / dist);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn identity_rescale_is_noop() {
        let c = unit();
        let traj = vec![CartesianState {
            t: 0.5,
            position: [0.1, 0.2, 0.3],
            velocity: [1.0, -1.0, 0.5],
        }];
        assert_eq!(rescale_solution(&traj, &c, &c), traj);
        let (l, t) = scaling_factors(&c, &Circle::with_mass(2.0, c.mass()).unwrap());
        assert_eq!(l, 2.0);
        assert!((t - 8f64.sqrt()).abs() < 1e-14);
    }

    fn rotate(p: [f64; 3], a: f64) -> [f64; 3] {
        let (s, co) = a.sin_cos();
        [co * p[0] - s * p[1], s * p[0] + co * p[1], p[2]]
    }

    proptest! {
        #[test]
        fn rotation_invariance(x in -3.0f64..3.0, y in -3.0f64..3.0, z in -3.0f64..3.0, a in 0.0f64..6.3) {
            let c = unit();
            let p = [x, y, z];
            prop_assume!(dist_extremes(p.into(), &c).d > 1e-3);
            let v = potential(p.into(), &c).unwrap();
            let vr = potential(rotate(p, a).into(), &c).unwrap();
            prop_assert!(((v - vr) / v).abs() < 1e-14);
            let g = gradient(p.into(), &c).unwrap();
            let gr = gradient(rotate(p, a).into(), &c).unwrap();
            let rg = rotate(g, a);
            let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
            for i in 0..3 {
                prop_assert!((gr[i] - rg[i]).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn reflection_invariance(x in -3.0f64..3.0, y in -3.0f64..3.0, z in 0.001f64..3.0) {
            let c = unit();
            let up = potential([x, y, z].into(), &c).unwrap();
            let down = potential([x, y, -z].into(), &c).unwrap();
            prop_assert_eq!(up, down);
            let g = gradient([x, y, z].into(), &c).unwrap();
            prop_assert!(g[2] > 0.0);
        }

        #[test]
        fn scaling_identities(x in -3.0f64..3.0, y in -3.0f64..3.0, z in -3.0f64..3.0) {
            let base = unit();
            let p = [x, y, z];
            prop_assume!(dist_extremes(p.into(), &base).d > 1e-3);
            let v = potential(p.into(), &base).unwrap();
            let g = gradient(p.into(), &base).unwrap();
            for k in [0.5, 2.0, 10.0] {
                let heavy = Circle::with_mass(1.0, k * base.mass()).unwrap();
                prop_assert!(rel(potential(p.into(), &heavy).unwrap(), k * v) < 1e-13);
                let big = Circle::with_mass(k, base.mass()).unwrap();
                let q = p.map(|u| u * k);
                prop_assert!(rel(potential(q.into(), &big).unwrap(), v / k) < 1e-13);
                let gq = gradient(q.into(), &big).unwrap();
                for i in 0..3 {
                    prop_assert!((gq[i] - g[i] / (k * k)).abs() <= 1e-13 * g[i].abs().max(1e-300) + 1e-300);
                }
            }
        }
    }
}
