//! Motion in the plane of the circle.
//!
//! With angular momentum `K` the radial motion is governed by the effective
//! potential `U(r) = K²/(2r²) + V(r)`. Outside the circle the circular orbits
//! are the solutions of `g(r) = K²` with `g(r) = r³ V'(r)`; `g` has a single
//! minimum at `r0` and `K0 = √g(r0)` is the smallest angular momentum that
//! admits one. For `|K| > K0` there are two such radii, `r1 < r0 < r2`.
//!
//! On the unit circle `V(r)` depends on `λ` only, and a circle of radius `ρ`
//! is related to it by `V_ρ(r) = V_1(r/ρ)`, so `g_ρ(r) = ρ² g_1(r/ρ)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use crate::error::{domain, Result};
use crate::potential::Circle;
use crate::quadrature;
use crate::roots;
use crate::special;

/// Lower end of the bracket used for `r0`, in units of `ρ`.
pub const G_PRIME_CLIP: f64 = 1.0 + 1e-9;

/// Lowest radius (units of `ρ`) searched for `r1`.
const R1_FLOOR: f64 = 1.0 + 1e-12;

/// Band around zero inside which `Ē` is treated as zero.
pub const E_BAR_ZERO_TOL: f64 = 1e-12;

const QUAD_RTOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Inside,
    Outside,
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "inside" | "in" => Ok(Side::Inside),
            "outside" | "out" => Ok(Side::Outside),
            other => Err(format!("expected 'inside' or 'outside', got '{other}'")),
        }
    }
}

/// Angular momentum together with the source circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub k: f64,
    pub circle: Circle,
}

impl EffectiveParams {
    pub fn new(k: f64, circle: Circle) -> Self {
        Self { k, circle }
    }
}

fn check_inside(r: f64, c: &Circle) -> Result<()> {
    if !(r >= 0.0 && r < c.rho()) {
        return domain(format!("inside radius must satisfy 0 <= r < {}, got {r}", c.rho()));
    }
    Ok(())
}

fn check_outside(r: f64, c: &Circle) -> Result<()> {
    if !(r > c.rho() && r.is_finite()) {
        return domain(format!("outside radius must satisfy r > {}, got {r}", c.rho()));
    }
    Ok(())
}

/// `V(r)` for `0 ≤ r < ρ` in the plane: `−M / σ(ρ − r, ρ + r)`.
pub fn potential_inside(r: f64, c: &Circle) -> Result<f64> {
    check_inside(r, c)?;
    Ok(-c.mass() / special::agm(c.rho() + r, c.rho() - r)?.value)
}

/// `V(r)` for `r > ρ` in the plane: `−M / σ(r − ρ, r + ρ)`.
pub fn potential_outside(r: f64, c: &Circle) -> Result<f64> {
    check_outside(r, c)?;
    Ok(-c.mass() / special::agm(r + c.rho(), r - c.rho())?.value)
}

/// `dV/dr` in the plane, from the χ-series.
pub fn dv_dr(r: f64, side: Side, c: &Circle) -> Result<f64> {
    let rho = c.rho();
    match side {
        Side::Inside => {
            check_inside(r, c)?;
            let (big, small) = (rho + r, rho - r);
            let (sigma, chi) = special::sigma_chi(big, small)?;
            let v = -c.mass() / sigma;
            // D = ρ + r, d = ρ − r
            Ok(v * ((chi - 1.0) / big + chi / small))
        }
        Side::Outside => {
            check_outside(r, c)?;
            let (big, small) = (r + rho, r - rho);
            let (sigma, chi) = special::sigma_chi(big, small)?;
            let v = -c.mass() / sigma;
            Ok(v * ((chi - 1.0) / big - chi / small))
        }
    }
}

fn radial_potential(r: f64, side: Side, c: &Circle) -> Result<f64> {
    match side {
        Side::Inside => potential_inside(r, c),
        Side::Outside => potential_outside(r, c),
    }
}

/// Inside the circle with `K = 0` the radial line through the centre is
/// allowed, `r ∈ (−ρ, ρ)`, using the even extension `U(r) = U(|r|)`.
fn effective_radius(r: f64, k: f64, side: Side) -> Result<f64> {
    match side {
        Side::Inside if k == 0.0 => Ok(r.abs()),
        Side::Inside if !(r > 0.0) => domain(format!("inside radius must be positive for K != 0, got {r}")),
        _ => Ok(r),
    }
}

/// `U(r) = K²/(2r²) + V(r)`.
pub fn effective_potential(r: f64, params: &EffectiveParams, side: Side) -> Result<f64> {
    let k = params.k;
    let r = effective_radius(r, k, side)?;
    let v = radial_potential(r, side, &params.circle)?;
    if k == 0.0 {
        return Ok(v);
    }
    Ok(0.5 * k * k / (r * r) + v)
}

/// `dU/dr = −K²/r³ + dV/dr` (odd in `r` for the inside `K = 0` extension).
pub fn effective_potential_dr(r: f64, params: &EffectiveParams, side: Side) -> Result<f64> {
    let k = params.k;
    let ra = effective_radius(r, k, side)?;
    let dv = dv_dr(ra, side, &params.circle)?;
    if k == 0.0 {
        return Ok(if r < 0.0 { -dv } else { dv });
    }
    Ok(-k * k / (ra * ra * ra) + dv)
}

/// `g(r) = r³ V'(r)` for `r > ρ`; `g(r)` is the squared angular momentum of
/// the circular orbit of radius `r`.
pub fn g(r: f64, c: &Circle) -> Result<f64> {
    Ok(r.powi(3) * dv_dr(r, Side::Outside, c)?)
}

/// `g'(r)` on the unit circle with `λ = 1`:
/// `4u³ ∫₀^{π/2} (u² − 4 sin²θ) / (u² − sin²θ)^{5/2} dθ`.
fn g_prime_unit(u: f64) -> f64 {
    let a2 = u * u - 1.0;
    let q = quadrature::integrate_peaked(
        |phi| {
            // θ = π/2 − φ: u² − sin²θ = (u² − 1) + sin²φ
            let s = phi.sin();
            let den = a2 + s * s;
            let num = u * u - 4.0 * (1.0 - s * s);
            num / (den * den * den.sqrt())
        },
        a2.sqrt(),
        0.0,
        QUAD_RTOL,
    );
    4.0 * u.powi(3) * q.value
}

/// `g'(r)` by quadrature. The argument is clipped to `(1 + 10⁻⁹)ρ`, below
/// which the integral is too steep to resolve.
pub fn g_prime(r: f64, c: &Circle) -> Result<f64> {
    check_outside(r, c)?;
    let u = (r / c.rho()).max(G_PRIME_CLIP);
    Ok(c.lambda() * c.rho() * g_prime_unit(u))
}

/// `−4λ ∫₀^{π/2} dθ / √(1 − u² sin²θ)`, `u = r/ρ`.
pub fn potential_inside_by_quadrature(r: f64, c: &Circle) -> Result<f64> {
    check_inside(r, c)?;
    let u = r / c.rho();
    let a2 = 1.0 - u * u;
    let q = quadrature::integrate_peaked(
        |phi| {
            let s = phi.sin();
            1.0 / (a2 + u * u * s * s).sqrt()
        },
        a2.sqrt().max(1e-300),
        0.0,
        QUAD_RTOL,
    );
    Ok(-4.0 * c.lambda() * q.value)
}

/// `−4λ ∫₀^{π/2} dθ / √(u² − sin²θ)`, `u = r/ρ`.
pub fn potential_outside_by_quadrature(r: f64, c: &Circle) -> Result<f64> {
    check_outside(r, c)?;
    let u = r / c.rho();
    let a2 = u * u - 1.0;
    let q = quadrature::integrate_peaked(
        |phi| {
            let s = phi.sin();
            1.0 / (a2 + s * s).sqrt()
        },
        a2.sqrt().min(FRAC_PI_2),
        0.0,
        QUAD_RTOL,
    );
    Ok(-4.0 * c.lambda() * q.value)
}

/// `4λρ² ∫₀^{π/2} u⁴ dθ / (u² − sin²θ)^{3/2}`.
pub fn g_by_quadrature(r: f64, c: &Circle) -> Result<f64> {
    check_outside(r, c)?;
    let u = r / c.rho();
    let a2 = u * u - 1.0;
    let q = quadrature::integrate_peaked(
        |phi| {
            let s = phi.sin();
            let den = a2 + s * s;
            1.0 / (den * den.sqrt())
        },
        a2.sqrt().min(FRAC_PI_2),
        0.0,
        QUAD_RTOL,
    );
    Ok(4.0 * c.lambda() * c.rho() * c.rho() * u.powi(4) * q.value)
}

/// The critical radius `r0` and momentum `K0` of a circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalData {
    pub circle: Circle,
    pub r0: f64,
    #[serde(rename = "K0")]
    pub k0: f64,
}

impl CriticalData {
    /// `Ē = U(r1(K))`, when `|K| ≥ K0`.
    pub fn e_bar(&self, k: f64) -> Result<Option<f64>> {
        Ok(match critical_radii(k, self)? {
            Some((r1, _)) => Some(effective_potential(
                r1,
                &EffectiveParams::new(k, self.circle),
                Side::Outside,
            )?),
            None => None,
        })
    }
}

/// Locates the minimum of `g` as the root of `g'` on `(1 + 10⁻⁹, 2)ρ`.
pub fn critical_data(c: &Circle) -> Result<CriticalData> {
    let u0 = roots::brent(g_prime_unit, G_PRIME_CLIP, 2.0, 1e-15)?;
    let r0 = u0 * c.rho();
    let k0 = g(r0, c)?.sqrt();
    Ok(CriticalData { circle: *c, r0, k0 })
}

/// The circular-orbit radii `(r1, r2)` for angular momentum `K`, or `None`
/// when `|K| < K0`.
pub fn critical_radii(k: f64, data: &CriticalData) -> Result<Option<(f64, f64)>> {
    let k = k.abs();
    let c = &data.circle;
    let rho = c.rho();
    if !k.is_finite() {
        return domain(format!("angular momentum must be finite, got {k}"));
    }
    if k < data.k0 {
        return Ok(None);
    }
    if (k - data.k0) <= 4.0 * f64::EPSILON * data.k0 {
        return Ok(Some((data.r0, data.r0)));
    }
    let target = k * k;
    let residual = |r: f64| g(r, c).map(|v| v - target).unwrap_or(f64::NAN);

    let lo = R1_FLOOR * rho;
    if residual(lo) <= 0.0 {
        return domain(format!("K = {k} too large: r1 lies closer than 1e-12 to the circle"));
    }
    let r1 = roots::brent(residual, lo, data.r0, 1e-15 * rho)?;

    let mut hi = 2.0 * data.r0;
    while residual(hi) <= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return domain(format!("failed to bracket r2 for K = {k}"));
        }
    }
    let r2 = roots::brent(residual, data.r0, hi, 1e-15 * hi)?;
    Ok(Some((r1.min(data.r0), r2.max(data.r0))))
}

/// Qualitative fate of a planar orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Collide,
    Escape,
    /// `|K| < K0` outside: every level set has a branch that collides and
    /// one that escapes (or both ends on the circle when `E < 0`).
    CollideOrEscape,
    BoundedAnnulus,
    AsymptoticToR1Circular,
    CircularStable,
    CircularUnstable,
    RestAtOrigin,
    RadialOscillation,
    /// Inside, `K = 0`, `E = −M`, moving towards the centre: reaches it only
    /// as `t → ∞`.
    AsymptoticToOrigin,
}

/// Region tags of the outside phase portraits for `|K| > K0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    I,
    II,
    III,
    IV,
    V,
}

/// Which outside phase portrait applies for `|K| > K0`, by the sign of `Ē`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Portrait {
    /// `Ē > 0`
    BarrierAboveZero,
    /// `Ē = 0`
    BarrierAtZero,
    /// `Ē < 0`
    BarrierBelowZero,
}

impl Portrait {
    pub fn from_e_bar(e_bar: f64) -> Self {
        if e_bar > E_BAR_ZERO_TOL {
            Portrait::BarrierAboveZero
        } else if e_bar < -E_BAR_ZERO_TOL {
            Portrait::BarrierBelowZero
        } else {
            Portrait::BarrierAtZero
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeClassification {
    pub regime: Regime,
    pub region_label: Option<RegionLabel>,
    pub portrait: Option<Portrait>,
}

impl RegimeClassification {
    fn plain(regime: Regime) -> Self {
        Self {
            regime,
            region_label: None,
            portrait: None,
        }
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

const CLASSIFY_TOL: f64 = 1e-12;
const RADIUS_TOL: f64 = 1e-9;

/// Classifies the planar orbit through `r_init` with energy `E`, angular
/// momentum `K` and radial velocity of sign `rdot`.
///
/// Outside with `|K| > K0` the decision uses `Ē = U(r1)`:
///
/// | condition                         | regime           | label `Ē>0` | `Ē≤0` |
/// |-----------------------------------|------------------|-------------|-------|
/// | `E < Ē`, `r < r1`                 | collide          | I           | I     |
/// | `E < Ē`, `r > r1`, `E < 0`        | bounded annulus  | V           | IV    |
/// | `0 ≤ E < Ē`, `r > r1`             | escape           | IV          | —     |
/// | `Ē < E < 0`                       | bounded annulus  | —           | —     |
/// | `E > Ē`, `E ≥ 0` or `Ē > 0`, `ṙ>0`| escape           | III         | II    |
/// | same, `ṙ < 0`                     | collide          | II          | III   |
///
/// On the separatrix `E = Ē` the orbit either tends to the `r1` circle or
/// leaves it, according to side and direction.
pub fn classify_regime(
    side: Side,
    k: f64,
    e: f64,
    r_init: f64,
    rdot: f64,
    data: &CriticalData,
) -> Result<RegimeClassification> {
    let c = data.circle;
    let params = EffectiveParams::new(k, c);
    let u_init = effective_potential(r_init, &params, side)?;
    if e < u_init - CLASSIFY_TOL * u_init.abs().max(1.0) {
        return domain(format!("energy {e} is below the effective potential {u_init} at r = {r_init}"));
    }
    match side {
        Side::Inside => classify_inside(k, e, r_init, rdot, &c),
        Side::Outside => classify_outside(k, e, r_init, rdot, data, &params, u_init),
    }
}

fn classify_inside(k: f64, e: f64, r: f64, rdot: f64, c: &Circle) -> Result<RegimeClassification> {
    use Regime::*;
    if k != 0.0 {
        return Ok(RegimeClassification::plain(Collide));
    }
    let e0 = -2.0 * std::f64::consts::PI * c.lambda();
    let regime = if close(e, e0, CLASSIFY_TOL) {
        if r.abs() <= RADIUS_TOL * c.rho() && rdot == 0.0 {
            RestAtOrigin
        } else if r * rdot < 0.0 {
            AsymptoticToOrigin
        } else {
            Collide
        }
    } else if e < e0 {
        RadialOscillation
    } else {
        Collide
    };
    Ok(RegimeClassification::plain(regime))
}

fn classify_outside(
    k: f64,
    e: f64,
    r: f64,
    rdot: f64,
    data: &CriticalData,
    params: &EffectiveParams,
    u_init: f64,
) -> Result<RegimeClassification> {
    use Regime::*;
    let Some((r1, r2)) = critical_radii(k, data)? else {
        return Ok(RegimeClassification::plain(CollideOrEscape));
    };
    let e_bar = effective_potential(r1, params, Side::Outside)?;
    let at_rest = rdot == 0.0;
    let rtol = RADIUS_TOL * data.circle.rho();

    if r1 == r2 {
        // |K| = K0: U is increasing with an inflection at r0.
        if at_rest && (r - r1).abs() <= rtol && close(e, e_bar, CLASSIFY_TOL) {
            return Ok(RegimeClassification::plain(CircularUnstable));
        }
        if close(e, e_bar, CLASSIFY_TOL) && ((r < r1 && rdot > 0.0) || (r > r1 && rdot < 0.0)) {
            return Ok(RegimeClassification::plain(AsymptoticToR1Circular));
        }
        return Ok(RegimeClassification::plain(CollideOrEscape));
    }

    let portrait = Portrait::from_e_bar(e_bar);
    let above = portrait == Portrait::BarrierAboveZero;
    let labelled = |regime, label| RegimeClassification {
        regime,
        region_label: label,
        portrait: Some(portrait),
    };

    if at_rest && (r - r2).abs() <= rtol && close(e, u_init, CLASSIFY_TOL) {
        return Ok(labelled(CircularStable, None));
    }
    if at_rest && (r - r1).abs() <= rtol && close(e, e_bar, CLASSIFY_TOL) {
        return Ok(labelled(CircularUnstable, None));
    }

    if close(e, e_bar, CLASSIFY_TOL) {
        let regime = if r < r1 {
            if rdot > 0.0 {
                AsymptoticToR1Circular
            } else {
                Collide
            }
        } else if rdot < 0.0 || e_bar < 0.0 {
            // Inward, or outward to a turning point and back.
            AsymptoticToR1Circular
        } else {
            Escape
        };
        return Ok(labelled(regime, None));
    }

    if e < e_bar {
        if r < r1 {
            return Ok(labelled(Collide, Some(RegionLabel::I)));
        }
        if e < 0.0 {
            let label = if above { RegionLabel::V } else { RegionLabel::IV };
            return Ok(labelled(BoundedAnnulus, Some(label)));
        }
        return Ok(labelled(Escape, Some(RegionLabel::IV)));
    }

    // E > Ē: the barrier at r1 is passed.
    if e < 0.0 {
        return Ok(labelled(BoundedAnnulus, None));
    }
    let outward = if at_rest {
        effective_potential_dr(r, params, Side::Outside)? < 0.0
    } else {
        rdot > 0.0
    };
    Ok(if outward {
        labelled(Escape, Some(if above { RegionLabel::III } else { RegionLabel::II }))
    } else {
        labelled(Collide, Some(if above { RegionLabel::II } else { RegionLabel::III }))
    })
}

/// Table of `E(r, ṙ) = ½ṙ² + U(r)`, row-major in `r` then `ṙ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePortrait {
    pub side: Side,
    #[serde(rename = "K")]
    pub k: f64,
    pub r: Vec<f64>,
    pub rdot: Vec<f64>,
    pub energy: Vec<f64>,
}

impl PhasePortrait {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.energy[i * self.rdot.len() + j]
    }

    /// Writes `r,rdot,E` rows with a header line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "rdot", "E"])?;
        for (i, r) in self.r.iter().enumerate() {
            for (j, v) in self.rdot.iter().enumerate() {
                w.write_record([r.to_string(), v.to_string(), self.at(i, j).to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn phase_portrait(
    side: Side,
    k: f64,
    r_grid: &[f64],
    rdot_grid: &[f64],
    c: &Circle,
) -> Result<PhasePortrait> {
    let params = EffectiveParams::new(k, *c);
    let mut energy = Vec::with_capacity(r_grid.len() * rdot_grid.len());
    for &r in r_grid {
        let u = effective_potential(r, &params, side)?;
        energy.extend(rdot_grid.iter().map(|v| 0.5 * v * v + u));
    }
    Ok(PhasePortrait {
        side,
        k,
        r: r_grid.to_vec(),
        rdot: rdot_grid.to_vec(),
        energy,
    })
}

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
