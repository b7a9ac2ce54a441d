//! Large-radius limit of the circle field.
//!
//! A circle of radius `1/ε` and density `λ` is placed in the plane `y = 0`
//! of the field point so that it passes through the origin and through
//! `(c, 0)` with `c = 2/ε`. In the vertical plane `(x, z)` the extreme
//! distances are `d² = x² + z²` and `D² = (c − x)² + z²` (valid for
//! `x ≤ 1/ε`), and the potential is `W = −πλc / σ(D, d)`.
//!
//! With `t = d²/D²` the gradient has the closed form
//!
//! ```text
//! ∇W = 2λc f(t)/D³ (x − c, z) − 4λc² f'(t)/D⁵ [c (x, z) + (z² − x², −2xz)]
//! ```
//!
//! As `ε → 0` the field tends to that of an infinite straight wire,
//! `2λ (x, z)/(x² + z²)`. The extension constant `64λ` used by
//! [`grad_w_limit`] does not match that limit; see [`straight_wire_field`].

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use crate::error::{domain, Result};
use crate::special;

/// Constant of the extended field `∇W(x, z; 0) = C λ (x, z)/(x² + z²)`.
pub const LIMIT_CONSTANT: f64 = 64.0;

/// Constant of the infinite straight wire, the actual `ε → 0` limit.
pub const WIRE_CONSTANT: f64 = 2.0;

/// A point `(x, z)` of the vertical plane together with `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireLimitPoint {
    pub x: f64,
    pub z: f64,
    pub epsilon: f64,
}

impl WireLimitPoint {
    /// Rejects points outside the domain: the origin, the far point
    /// `(2/ε, 0)`, and `x > 1/ε` where the distance formulas change branch.
    pub fn new(x: f64, z: f64, epsilon: f64) -> Result<Self> {
        let p = Self { x, z, epsilon };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let Self { x, z, epsilon } = *self;
        if !(x.is_finite() && z.is_finite() && epsilon.is_finite()) || epsilon < 0.0 {
            return domain(format!("invalid wire point ({x}, {z}; {epsilon})"));
        }
        if x == 0.0 && z == 0.0 {
            return domain("the origin lies on the circle");
        }
        if epsilon > 0.0 {
            if x == 2.0 / epsilon && z == 0.0 {
                return domain("the point (2/ε, 0) lies on the circle");
            }
            if x > 1.0 / epsilon {
                return domain(format!("x = {x} exceeds 1/ε = {}", 1.0 / epsilon));
            }
        }
        Ok(())
    }

    fn distances(&self) -> (f64, f64, f64) {
        let c = 2.0 / self.epsilon;
        let d = self.x.hypot(self.z);
        let big = (c - self.x).hypot(self.z);
        (c, d, big)
    }
}

/// `W = −πλc / σ(D, d)`.
pub fn w_potential(p: &WireLimitPoint, lambda: f64) -> Result<f64> {
    p.validate()?;
    if p.epsilon == 0.0 {
        return domain("the potential diverges in the limit ε = 0");
    }
    let (c, d, big) = p.distances();
    Ok(-PI * lambda * c / special::agm(big, d)?.value)
}

/// The closed-form gradient; `ε = 0` returns the extension [`grad_w_limit`].
pub fn grad_w(p: &WireLimitPoint, lambda: f64) -> Result<[f64; 2]> {
    p.validate()?;
    if p.epsilon == 0.0 {
        return grad_w_limit(p.x, p.z, lambda);
    }
    let (c, d, big) = p.distances();
    let t = (d / big).powi(2);
    let f = special::elliptic_f(t)?;
    let fp = special::elliptic_f_prime(t)?;
    let (x, z) = (p.x, p.z);
    let a = 2.0 * lambda * c * f / big.powi(3);
    let b = 4.0 * lambda * c * c * fp / big.powi(5);
    Ok([
        a * (x - c) - b * (c * x + z * z - x * x),
        a * z - b * (c * z - 2.0 * x * z),
    ])
}

fn central(constant: f64, x: f64, z: f64, lambda: f64) -> Result<[f64; 2]> {
    if !(x.is_finite() && z.is_finite()) || (x == 0.0 && z == 0.0) {
        return domain(format!("field undefined at ({x}, {z})"));
    }
    let r2 = x * x + z * z;
    Ok([constant * lambda * x / r2, constant * lambda * z / r2])
}

/// `∇W(x, z; 0) = 64λ (x, z)/(x² + z²)`.
pub fn grad_w_limit(x: f64, z: f64, lambda: f64) -> Result<[f64; 2]> {
    central(LIMIT_CONSTANT, x, z, lambda)
}

/// `2λ (x, z)/(x² + z²)`, the gradient of the infinite straight wire and
/// the value `∇W(·; ε)` actually converges to.
pub fn straight_wire_field(x: f64, z: f64, lambda: f64) -> Result<[f64; 2]> {
    central(WIRE_CONSTANT, x, z, lambda)
}

/// Splitting of the closed form into terms with bounded coefficients:
///
/// ```text
/// ∇W = ε^{3/2} h₁ (x, z) − 2√ε h₁ (1, 0) + h (x, z)/(x² + z²) + √ε h₃ (x² − z², 2xz)
/// h₁ = 4λ f/(ε^{5/2} D³),  h₂ = −32λ/(ε⁵ D⁵),  h₃ = 16λ f'/(ε^{5/2} D⁵),
/// h  = (x² + z²) ε² f' h₂
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h: f64,
    pub terms: [[f64; 2]; 4],
}

impl Decomposition {
    pub fn total(&self) -> [f64; 2] {
        let mut s = [0.0; 2];
        for t in &self.terms {
            s[0] += t[0];
            s[1] += t[1];
        }
        s
    }
}

pub fn decomposition(p: &WireLimitPoint, lambda: f64) -> Result<Decomposition> {
    p.validate()?;
    if p.epsilon == 0.0 {
        return domain("the decomposition needs ε > 0");
    }
    let (_, d, big) = p.distances();
    let eps = p.epsilon;
    let t = (d / big).powi(2);
    let f = special::elliptic_f(t)?;
    let fp = special::elliptic_f_prime(t)?;
    let se = eps.sqrt();
    let e52 = eps * eps * se;
    let h1 = 4.0 * lambda * f / (e52 * big.powi(3));
    let h2 = -32.0 * lambda / ((eps * big).powi(5));
    let h3 = 16.0 * lambda * fp / (e52 * big.powi(5));
    let (x, z) = (p.x, p.z);
    let r2 = x * x + z * z;
    let h = r2 * eps * eps * fp * h2;
    let e32 = eps * se;
    Ok(Decomposition {
        h1,
        h2,
        h3,
        h,
        terms: [
            [e32 * h1 * x, e32 * h1 * z],
            [-2.0 * se * h1, 0.0],
            [h * x / r2, h * z / r2],
            [se * h3 * (x * x - z * z), se * h3 * 2.0 * x * z],
        ],
    })
}

/// One row of a convergence scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub x: f64,
    pub z: f64,
    pub epsilon: f64,
    pub gx: f64,
    pub gz: f64,
    /// `‖∇W(p; ε) − ∇W(p; 0)‖` against the `64λ` extension.
    pub deviation: f64,
    pub relative_deviation: f64,
    /// Same against the straight-wire field `2λ p/|p|²`.
    pub wire_deviation: f64,
    pub wire_relative_deviation: f64,
    pub h: f64,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Evaluates every point at every `ε`, row-major in point then `ε`.
pub fn convergence_scan(points: &[(f64, f64)], eps_sequence: &[f64], lambda: f64) -> Result<Vec<ScanRow>> {
    let mut rows = Vec::with_capacity(points.len() * eps_sequence.len());
    for &(x, z) in points {
        let limit = grad_w_limit(x, z, lambda)?;
        let wire = straight_wire_field(x, z, lambda)?;
        for &eps in eps_sequence {
            if !(eps > 0.0) {
                return domain(format!("scan needs ε > 0, got {eps}"));
            }
            let p = WireLimitPoint::new(x, z, eps)?;
            let g = grad_w(&p, lambda)?;
            let h = decomposition(&p, lambda)?.h;
            let deviation = dist(g, limit);
            let wire_deviation = dist(g, wire);
            rows.push(ScanRow {
                x,
                z,
                epsilon: eps,
                gx: g[0],
                gz: g[1],
                deviation,
                relative_deviation: deviation / limit[0].hypot(limit[1]),
                wire_deviation,
                wire_relative_deviation: wire_deviation / wire[0].hypot(wire[1]),
                h,
            });
        }
    }
    Ok(rows)
}

pub fn write_scan_csv<W: Write>(rows: &[ScanRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `ε_k = 10^{-k}` for `k = from..=to`.
pub fn decades(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 10f64.powi(-k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{self, CartesianPoint, Circle};
    use proptest::prelude::*;

    fn unit_circle_points() -> Vec<(f64, f64)> {
        (0..8)
            .map(|k| {
                let a = k as f64 * PI / 4.0;
                (a.cos(), a.sin())
            })
            .collect()
    }

    #[test]
    fn domain_checks() {
        assert!(WireLimitPoint::new(0.0, 0.0, 1e-3).is_err());
        assert!(WireLimitPoint::new(2000.0, 0.0, 1e-3).is_err());
        assert!(WireLimitPoint::new(1000.5, 0.3, 1e-3).is_err());
        assert!(WireLimitPoint::new(1000.0, 0.3, 1e-3).is_ok());
        assert!(WireLimitPoint::new(1.0, 0.0, -1.0).is_err());
        assert!(grad_w_limit(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn limit_field_values() {
        assert_eq!(grad_w_limit(1.0, 0.0, 1.0).unwrap(), [64.0, 0.0]);
        assert_eq!(grad_w_limit(0.0, 2.0, 1.0).unwrap(), [0.0, 32.0]);
        assert_eq!(straight_wire_field(1.0, 0.0, 1.0).unwrap(), [2.0, 0.0]);
        let p = WireLimitPoint::new(0.3, 0.4, 0.0).unwrap();
        assert_eq!(grad_w(&p, 2.0).unwrap(), grad_w_limit(0.3, 0.4, 2.0).unwrap());
    }

    #[test]
    fn closed_form_matches_finite_differences() {
        let lambda = 1.0;
        let p = WireLimitPoint::new(0.7, 0.4, 1e-3).unwrap();
        let g = grad_w(&p, lambda).unwrap();
        let h = 1e-6;
        let w = |x: f64, z: f64| w_potential(&WireLimitPoint::new(x, z, p.epsilon).unwrap(), lambda).unwrap();
        let fx = (w(p.x + h, p.z) - w(p.x - h, p.z)) / (2.0 * h);
        let fz = (w(p.x, p.z + h) - w(p.x, p.z - h)) / (2.0 * h);
        assert!(((g[0] - fx) / fx).abs() < 1e-7, "{} vs {fx}", g[0]);
        assert!(((g[1] - fz) / fz).abs() < 1e-7, "{} vs {fz}", g[1]);
    }

    #[test]
    fn matches_translated_circle_gradient() {
        let lambda = 0.8;
        for eps in [1e-1, 1e-2, 1e-3] {
            let circle = Circle::new(1.0 / eps, lambda).unwrap();
            for (x, z) in [(0.7, 0.4), (-1.5, 0.2), (0.1, -2.0)] {
                let g = grad_w(&WireLimitPoint::new(x, z, eps).unwrap(), lambda).unwrap();
                let q = potential::gradient(CartesianPoint::new(x - 1.0 / eps, 0.0, z), &circle).unwrap();
                let scale = g[0].hypot(g[1]);
                assert!((g[0] - q[0]).abs() < 1e-9 * scale, "eps {eps}: {g:?} vs {q:?}");
                assert!((g[1] - q[2]).abs() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn decomposition_reassembles() {
        for eps in [1e-1, 1e-3, 1e-5] {
            for (x, z) in unit_circle_points() {
                let p = WireLimitPoint::new(x, z, eps).unwrap();
                let g = grad_w(&p, 1.0).unwrap();
                let s = decomposition(&p, 1.0).unwrap().total();
                let scale = g[0].hypot(g[1]);
                assert!((g[0] - s[0]).abs() <= 1e-12 * scale && (g[1] - s[1]).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn converges_to_straight_wire() {
        let rows = convergence_scan(&unit_circle_points(), &decades(2, 6), 1.0).unwrap();
        for chunk in rows.chunks(5) {
            for w in chunk.windows(2) {
                assert!(w[1].wire_deviation < w[0].wire_deviation);
            }
            let last = chunk.last().unwrap();
            assert!(last.wire_relative_deviation < 1e-3, "{last:?}");
            assert!((last.h - 2.0).abs() < 1e-3, "{last:?}");
        }
    }

    #[test]
    fn h_terms_bounded_on_annulus() {
        // Using f(t) ≤ (π/2) t^{-1/4}, |f'(t)| ≤ (π/4) t^{-5/4} and εD ≥ 2 − ε|p|.
        let (lambda, c1, c2, eps0): (f64, f64, f64, f64) = (1.0, 0.5, 2.0, 0.1);
        let base = 2.0 - eps0 * c2;
        let k1 = 2.0 * PI * lambda / (base.powf(2.5) * c1.sqrt());
        let k2 = 32.0 * lambda / base.powi(5);
        let k3 = 4.0 * PI * lambda / (base.powf(2.5) * c1.powf(2.5));
        for eps in [1e-1, 1e-2, 1e-4, 1e-6] {
            for i in 0..6 {
                let rad = c1 + (c2 - c1) * i as f64 / 5.0;
                for j in 0..12 {
                    let a = j as f64 * PI / 6.0 + 0.1;
                    let p = WireLimitPoint::new(rad * a.cos(), rad * a.sin(), eps).unwrap();
                    let dcp = decomposition(&p, lambda).unwrap();
                    assert!(dcp.h1.abs() <= k1 && dcp.h2.abs() <= k2 && dcp.h3.abs() <= k3, "{dcp:?}");
                }
            }
        }
    }

    #[test]
    fn scan_csv_has_header_and_rows() {
        let rows = convergence_scan(&[(1.0, 0.0)], &decades(2, 4), 1.0).unwrap();
        let mut buf = Vec::new();
        write_scan_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,z,epsilon,gx,gz,deviation"));
        assert_eq!(text.lines().count(), 4);
    }

    proptest! {
        #[test]
        fn reflection_symmetry(x in -3.0f64..3.0, z in 0.05f64..3.0, k in 1i32..6) {
            let eps = 10f64.powi(-k);
            let g = grad_w(&WireLimitPoint::new(x, z, eps).unwrap(), 1.0).unwrap();
            let m = grad_w(&WireLimitPoint::new(x, -z, eps).unwrap(), 1.0).unwrap();
            prop_assert_eq!(g[0], m[0]);
            prop_assert_eq!(g[1], -m[1]);
        }

        #[test]
        fn limit_is_radial(x in -5.0f64..5.0, z in -5.0f64..5.0) {
            prop_assume!(x.hypot(z) > 1e-3);
            let g = grad_w_limit(x, z, 1.0).unwrap();
            prop_assert!((g[0] * z - g[1] * x).abs() <= 1e-12 * g[0].hypot(g[1]) * x.hypot(z));
        }
    }
}
