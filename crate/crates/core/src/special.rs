//! Arithmetic-geometric mean, the elliptic kernel
//! `f(t) = ∫₀^{π/2} dθ / √(cos²θ + t·sin²θ)` and its derivative, and the
//! AGM-iterate series `χ(D, d)` that gives the partial derivatives of the
//! circle potential with respect to the extreme distances.

use std::f64::consts::FRAC_PI_2;

use crate::error::{domain, Result};
use crate::quadrature;

/// Relative stopping tolerance of the AGM iteration (four ulps).
pub const AGM_RTOL: f64 = 4.0 * f64::EPSILON;

/// Iteration cap for the AGM and for the χ-series.
pub const MAX_TERMS: usize = 64;

/// Relative cutoff of the χ-series: stop once a term is below this fraction
/// of the partial sum.
pub const CHI_RTOL: f64 = 1e-16;

const FPRIME_ATOL: f64 = 1e-12;
const FPRIME_RTOL: f64 = 1e-14;

/// Outcome of an AGM evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct AgmResult {
    pub value: f64,
    pub iterations: usize,
    /// Successive (arithmetic, geometric) pairs, starting with the inputs.
    /// Only filled by [`agm_sequence`].
    pub sequence: Option<Vec<(f64, f64)>>,
}

fn check_positive(m: f64, n: f64) -> Result<()> {
    if !(m > 0.0 && n > 0.0) || !m.is_finite() || !n.is_finite() {
        return domain(format!("agm requires finite positive arguments, got ({m}, {n})"));
    }
    Ok(())
}

fn agm_impl(m: f64, n: f64, mut record: Option<&mut Vec<(f64, f64)>>) -> usize {
    let (mut a, mut g) = (m, n);
    if let Some(seq) = record.as_deref_mut() {
        seq.push((a, g));
    }
    let mut iterations = 0;
    while (a - g).abs() > AGM_RTOL * a.max(g) && iterations < MAX_TERMS {
        let next = (0.5 * (a + g), (a * g).sqrt());
        a = next.0;
        g = next.1;
        iterations += 1;
        if let Some(seq) = record.as_deref_mut() {
            seq.push((a, g));
        }
    }
    iterations
}

/// The arithmetic-geometric mean `σ(m, n)`.
pub fn agm(m: f64, n: f64) -> Result<AgmResult> {
    let mut r = agm_sequence(m, n)?;
    r.sequence = None;
    Ok(r)
}

/// Same as [`agm`] but keeps the iterates.
pub fn agm_sequence(m: f64, n: f64) -> Result<AgmResult> {
    check_positive(m, n)?;
    let mut seq = Vec::with_capacity(8);
    let iterations = agm_impl(m, n, Some(&mut seq));
    let &(a, g) = seq.last().expect("sequence holds the inputs");
    Ok(AgmResult {
        value: final_value(a, g),
        iterations,
        sequence: Some(seq),
    })
}

fn final_value(a: f64, g: f64) -> f64 {
    if a == g {
        a
    } else {
        0.5 * (a + g)
    }
}

/// `f(t) = π / (2 σ(√t, 1))` for `0 < t ≤ 1`.
pub fn elliptic_f(t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return domain(format!("elliptic_f requires 0 < t <= 1, got {t}"));
    }
    Ok(FRAC_PI_2 / agm(t.sqrt(), 1.0)?.value)
}

/// `f'(t) = -½ ∫₀^{π/2} sin²θ dθ / (cos²θ + t sin²θ)^{3/2}`, by adaptive
/// quadrature. With `φ = π/2 − θ` the integrand peaks at `φ = 0` with width
/// `√t`, which [`quadrature::integrate_peaked`] flattens.
pub fn elliptic_f_prime(t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return domain(format!("elliptic_f_prime requires 0 < t <= 1, got {t}"));
    }
    let q = quadrature::integrate_peaked(
        |phi| {
            let (s, c) = phi.sin_cos();
            let den = s * s + t * c * c;
            c * c / (den * den.sqrt())
        },
        t.sqrt(),
        FPRIME_ATOL,
        FPRIME_RTOL,
    );
    Ok(-0.5 * q.value)
}

fn check_chi_args(big: f64, small: f64) -> Result<()> {
    if !(small > 0.0) || !small.is_finite() || !big.is_finite() {
        return domain(format!("chi requires 0 < d <= D, got D = {big}, d = {small}"));
    }
    if small > big {
        return domain(format!("chi requires d <= D, got D = {big}, d = {small}"));
    }
    Ok(())
}

/// `χ = Σ_{n≥1} 2⁻ⁿ (d_{n−1}/D_n) Π_{j=1}^{n−1} (1 − d_{j−1}/D_j)` where
/// `(D_n, d_n)` are the arithmetic/geometric iterates started from `(D, d)`.
pub fn chi(big: f64, small: f64) -> Result<f64> {
    check_chi_args(big, small)?;
    Ok(sigma_chi_unchecked(big, small).1)
}

/// `(σ(D, d), χ(D, d))` from a single pass over the AGM iterates.
pub fn sigma_chi(big: f64, small: f64) -> Result<(f64, f64)> {
    check_chi_args(big, small)?;
    Ok(sigma_chi_unchecked(big, small))
}

pub(crate) fn sigma_chi_unchecked(big: f64, small: f64) -> (f64, f64) {
    if big == small {
        return (big, 0.5);
    }
    let (mut a, mut g) = (big, small);
    let mut sum = 0.0;
    let mut prod = 1.0;
    let mut weight = 1.0;
    let mut series_done = false;
    let mut agm_done = false;
    for _ in 0..MAX_TERMS {
        let next_a = 0.5 * (a + g);
        let next_g = (a * g).sqrt();
        if !series_done {
            weight *= 0.5;
            let term = weight * (g / next_a) * prod;
            sum += term;
            // 1 − d_{j−1}/D_j = (D_{j−1} − d_{j−1}) / (2 D_j)
            prod *= (a - g) / (2.0 * next_a);
            series_done = term < CHI_RTOL * sum || prod == 0.0;
        }
        if !agm_done {
            agm_done = (next_a - next_g).abs() <= AGM_RTOL * next_a;
        }
        a = next_a;
        g = next_g;
        if series_done && agm_done {
            break;
        }
    }
    (final_value(a, g), sum)
}
