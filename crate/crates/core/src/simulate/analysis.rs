use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::planar::{self, EffectiveParams, Side};
use crate::potential::Circle;
use crate::quadrature;

use super::{
    integrate_cartesian, integrate_reduced, CartesianState, CollisionReport, CylindricalState,
    IntegratorOptions, Termination, Trajectory,
};

/// `t = ∫ dr / √(2(E − U(r)))` from `r_start` to the circle along a path on
/// which `r` is monotone (outwards for `Inside`, inwards for `Outside`).
///
/// With `r = r_start + L s²` the integrand stays bounded even when `r_start`
/// is a turning point; at the circle it vanishes because `U → −∞`.
pub fn time_to_collision_quadrature(
    r_start: f64,
    e: f64,
    k: f64,
    side: Side,
    c: &Circle,
) -> Result<f64> {
    let rho = c.rho();
    let params = EffectiveParams::new(k, *c);
    let r_start = match side {
        Side::Inside if k == 0.0 => r_start.abs(),
        _ => r_start,
    };
    let u0 = planar::effective_potential(r_start, &params, side)?;
    let slack = 1e-12 * u0.abs().max(1.0);
    if e < u0 - slack {
        return domain(format!("energy {e} below U(r_start) = {u0}"));
    }
    if side == Side::Outside {
        let data = planar::critical_data(c)?;
        if let Some((r1, r2)) = planar::critical_radii(k, &data)? {
            if r1 < r2 && r1 < r_start {
                let barrier = planar::effective_potential(r1, &params, side)?;
                if barrier >= e {
                    return domain(format!(
                        "turning point between r_start = {r_start} and the circle \
                         (U(r1 = {r1}) = {barrier} >= E = {e}); split the path there"
                    ));
                }
            }
        }
    }
    let span = rho - r_start;
    if span == 0.0 {
        return Ok(0.0);
    }
    let du0 = planar::effective_potential_dr(r_start, &params, side)?;
    let excess0 = (e - u0).max(0.0);
    let integrand = |s: f64| {
        let r = r_start + span * s * s;
        let gap = match planar::effective_potential(r, &params, side) {
            Ok(u) => e - u,
            Err(_) => return 0.0,
        };
        // Close to a turning-point start, fall back to the linearisation.
        let gap = if gap > 0.0 {
            gap
        } else {
            excess0 - du0 * (r - r_start)
        };
        if gap <= 0.0 {
            return 0.0;
        }
        2.0 * span.abs() * s / (2.0 * gap).sqrt()
    };
    let q = quadrature::integrate(integrand, 0.0, 1.0, 0.0, 1e-12);
    if !q.value.is_finite() {
        return Err(Error::Domain("collision-time integral did not converge".into()));
    }
    Ok(q.value)
}

/// A planar orbit inside the circle, rotated so that its closest approach
/// to the centre lies on the positive y-axis at `t = 0`, integrated in both
/// time directions up to the two collisions.
#[derive(Debug, Clone)]
pub struct NormalizedOrbit {
    pub trajectory: Trajectory,
    pub forward: CollisionReport,
    pub backward: CollisionReport,
}

/// Builds the normalized orbit with perigee radius `r_p` and momentum `K`.
pub fn normalized_inside_orbit(
    r_p: f64,
    k: f64,
    c: &Circle,
    opts: &IntegratorOptions,
) -> Result<NormalizedOrbit> {
    if k == 0.0 {
        return domain("a normalized orbit needs K != 0");
    }
    if !(r_p > 0.0 && r_p < c.rho()) {
        return domain(format!("perigee radius must lie in (0, {}), got {r_p}", c.rho()));
    }
    // Long enough for any inside orbit to reach the circle.
    let t_max = 1e3 * (c.rho().powi(3) / c.mass()).sqrt() * (1.0 + 1.0 / k.abs());
    let fwd = CartesianState::new(0.0, [0.0, r_p, 0.0], [-k / r_p, 0.0, 0.0]);
    let bwd = CartesianState::new(0.0, [0.0, r_p, 0.0], [k / r_p, 0.0, 0.0]);
    let a = integrate_cartesian(&fwd, c, t_max, opts)?;
    let b = integrate_cartesian(&bwd, c, t_max, opts)?;
    let (Some(forward), Some(back)) = (a.collision.clone(), b.collision.clone()) else {
        return Err(Error::State("inside orbit did not reach the circle".into()));
    };

    // Undo the time reversal of the backward run.
    let flip = |s: &CartesianState| CartesianState::new(-s.t, s.position, s.velocity.map(|v| -v));
    let mut samples: Vec<CartesianState> = b.samples.iter().skip(1).rev().map(flip).collect();
    samples.extend(a.samples.iter().copied());
    let mut backward = back;
    backward.t_collision = -backward.t_collision;
    backward.t_cutoff = -backward.t_cutoff;
    for s in &mut backward.tail {
        s.t = -s.t;
        s.state = flip(&s.state);
    }

    let mut stats = a.stats;
    stats.accepted += b.stats.accepted;
    stats.rejected += b.stats.rejected;
    stats.evaluations += b.stats.evaluations;
    Ok(NormalizedOrbit {
        trajectory: Trajectory {
            circle: *c,
            options: *opts,
            samples,
            termination: Termination::Collision,
            collision: Some(forward.clone()),
            stats,
        },
        forward,
        backward,
    })
}

/// Geometry of a normalized inside orbit viewed as a graph `y = y(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    /// `ẋ` has one strict sign over the whole orbit.
    pub x_monotone: bool,
    pub vx_sign: f64,
    /// `max |y(x) − y(−x)|` over the common range.
    pub evenness_defect: f64,
    /// Smallest divided second difference of `y(x)`.
    pub min_second_difference: f64,
    /// `|r̂ · v̂|` at the perigee sample (zero for an exact perigee).
    pub perigee_alignment: f64,
    pub samples: usize,
}

fn hermite(x0: f64, y0: f64, m0: f64, x1: f64, y1: f64, m1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * m0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * m1
}

/// Checks that a normalized inside orbit traces the graph of an even convex
/// function.
pub fn trajectory_shape_check(traj: &Trajectory) -> Result<ShapeReport> {
    let rho = traj.circle.rho();
    let samples = &traj.samples;
    if samples.len() < 5 {
        return domain("too few samples for a shape check");
    }
    let k = samples[0].angular_momentum();
    if k == 0.0 {
        return domain("shape check needs K != 0");
    }
    for s in samples {
        let [x, y, z] = s.position;
        if z.abs() > 1e-12 * rho || s.velocity[2].abs() > 1e-12 {
            return domain("shape check needs a planar orbit in z = 0");
        }
        if x.hypot(y) >= rho {
            return domain("shape check needs an orbit inside the circle");
        }
    }
    let perigee = samples
        .iter()
        .min_by(|a, b| {
            let ra = a.position[0].hypot(a.position[1]);
            let rb = b.position[0].hypot(b.position[1]);
            ra.total_cmp(&rb)
        })
        .expect("non-empty");
    let [px, py, _] = perigee.position;
    if px.abs() > 1e-6 * rho || py <= 0.0 {
        return domain("orbit is not normalized: perigee off the positive y-axis");
    }
    let alignment = (px * perigee.velocity[0] + py * perigee.velocity[1]).abs()
        / (px.hypot(py) * perigee.speed());

    let vx_sign = samples[0].velocity[0].signum();
    let x_monotone = samples.iter().all(|s| s.velocity[0] != 0.0 && s.velocity[0].signum() == vx_sign);

    // (x, y, dy/dx), ascending in x.
    let mut pts: Vec<(f64, f64, f64)> = samples
        .iter()
        .map(|s| (s.position[0], s.position[1], s.velocity[1] / s.velocity[0]))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);

    let left: Vec<_> = pts.iter().copied().filter(|p| p.0 <= 0.0).collect();
    let right: Vec<_> = pts.iter().copied().filter(|p| p.0 >= 0.0).collect();
    let reach = right.last().map_or(0.0, |p| p.0).min(left.first().map_or(0.0, |p| -p.0));
    let mut defect: f64 = 0.0;
    for &(x, y, _) in right.iter().filter(|p| p.0 <= reach) {
        let target = -x;
        let i = left.partition_point(|p| p.0 < target);
        let mirrored = if i < left.len() && left[i].0 == target {
            left[i].1
        } else if i == 0 || i >= left.len() {
            continue;
        } else {
            let (a, b) = (left[i - 1], left[i]);
            hermite(a.0, a.1, a.2, b.0, b.1, b.2, target)
        };
        defect = defect.max((y - mirrored).abs());
    }

    // Divided second differences on a grid thinned enough to rise above
    // rounding noise.
    let width = pts.last().expect("non-empty").0 - pts[0].0;
    let min_dx = 1e-3 * width;
    let mut thin = vec![pts[0]];
    for &p in &pts[1..] {
        if p.0 - thin.last().expect("non-empty").0 >= min_dx {
            thin.push(p);
        }
    }
    let mut min_d2 = f64::INFINITY;
    for w in thin.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        let d2 = 2.0 * ((c.1 - b.1) / (c.0 - b.0) - (b.1 - a.1) / (b.0 - a.0)) / (c.0 - a.0);
        min_d2 = min_d2.min(d2);
    }

    Ok(ShapeReport {
        x_monotone,
        vx_sign,
        evenness_defect: defect,
        min_second_difference: min_d2,
        perigee_alignment: alignment,
        samples: thin.len(),
    })
}

/// Peak excursion of a perturbed circular orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub radius: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// `2π R² / K`.
    pub period: f64,
    pub max_radial: f64,
    pub max_vertical: f64,
    pub termination: Termination,
}

impl StabilityReport {
    pub fn excursion(&self) -> f64 {
        self.max_radial.max(self.max_vertical)
    }
}

/// Integrates the reduced system from the circular orbit of radius `radius`
/// perturbed by `(δr, δz, δṙ, δż)` with the circular angular momentum
/// `K = √g(radius)`, and reports the largest deviations `|r − R|`, `|z|`.
pub fn stability_probe(
    radius: f64,
    perturbation: [f64; 4],
    c: &Circle,
    t_end: f64,
) -> Result<StabilityReport> {
    let k = planar::g(radius, c)?.sqrt();
    let [dr, dz, drdot, dzdot] = perturbation;
    let s0 = CylindricalState {
        t: 0.0,
        r: radius + dr,
        z: dz,
        rdot: drdot,
        zdot: dzdot,
        k,
        phi: 0.0,
    };
    let traj = integrate_reduced(&s0, c, t_end, &IntegratorOptions::default())?;
    let mut max_radial: f64 = 0.0;
    let mut max_vertical: f64 = 0.0;
    for s in &traj.samples {
        let [x, y, z] = s.position;
        max_radial = max_radial.max((x.hypot(y) - radius).abs());
        max_vertical = max_vertical.max(z.abs());
    }
    Ok(StabilityReport {
        radius,
        k,
        period: 2.0 * PI * radius * radius / k,
        max_radial,
        max_vertical,
        termination: traj.termination,
    })
}
