//! Trajectory integration of `r̈ = −∇V(r)`, in Cartesian coordinates or in
//! the reduced cylindrical system
//!
//! ```text
//! r̈ = K²/r³ − ∂V/∂r,   z̈ = −∂V/∂z,   φ̇ = K/r²
//! ```
//!
//! Integration stops at `t_end` or when the distance to the circle drops to
//! `d_stop`; the collision time and hit point are then extrapolated from a
//! ladder of decreasing distance levels.

mod analysis;
mod collision;
mod io;
mod systems;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ode::{Dopri5, Stats, Tolerances};
use crate::potential::{self, CartesianPoint, Circle};

pub use analysis::{
    normalized_inside_orbit, stability_probe, time_to_collision_quadrature, trajectory_shape_check,
    NormalizedOrbit, ShapeReport, StabilityReport,
};
pub use collision::{detect_collision, CollisionReport, TailSample};
pub use io::{read_csv, summarize, write_csv, CircleParams, CollisionSummary, TrajectorySummary};

use systems::{CartesianSystem, Model, ReducedSystem};

/// Position, velocity and time of a particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianState {
    pub t: f64,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
}

impl CartesianState {
    pub fn new(t: f64, position: [f64; 3], velocity: [f64; 3]) -> Self {
        Self { t, position, velocity }
    }

    pub fn at_rest(position: [f64; 3]) -> Self {
        Self::new(0.0, position, [0.0; 3])
    }

    pub fn speed(&self) -> f64 {
        norm(&self.velocity)
    }

    /// `K = x ẏ − ẋ y`.
    pub fn angular_momentum(&self) -> f64 {
        let [x, y, _] = self.position;
        let [vx, vy, _] = self.velocity;
        x * vy - vx * y
    }

    /// `E = ½|v|² + V(r)`.
    pub fn energy(&self, c: &Circle) -> Result<f64> {
        let v = potential::potential(CartesianPoint::from(self.position), c)?;
        Ok(0.5 * dot(&self.velocity, &self.velocity) + v)
    }

    /// Distance to the circle.
    pub fn distance_to_circle(&self, c: &Circle) -> f64 {
        potential::dist_extremes(CartesianPoint::from(self.position), c).d
    }

    /// Rotation by `angle` about the z-axis.
    pub fn rotated_z(&self, angle: f64) -> Self {
        Self::new(self.t, rotate_z(self.position, angle), rotate_z(self.velocity, angle))
    }
}

/// Reduced state in cylindrical coordinates. `K` is conserved and `φ` is
/// recovered from `φ̇ = K/r²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylindricalState {
    pub t: f64,
    pub r: f64,
    pub z: f64,
    pub rdot: f64,
    pub zdot: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub phi: f64,
}

impl CylindricalState {
    /// On the axis the azimuth is taken along the horizontal velocity, so the
    /// particle leaves the axis with `ṙ ≥ 0`.
    pub fn from_cartesian(s: &CartesianState) -> Self {
        let [x, y, z] = s.position;
        let [vx, vy, vz] = s.velocity;
        let r = x.hypot(y);
        let (phi, rdot) = if r > 0.0 {
            (y.atan2(x), (x * vx + y * vy) / r)
        } else {
            (vy.atan2(vx), vx.hypot(vy))
        };
        Self {
            t: s.t,
            r,
            z,
            rdot,
            zdot: vz,
            k: s.angular_momentum(),
            phi,
        }
    }

    pub fn to_cartesian(&self) -> CartesianState {
        let (sp, cp) = self.phi.sin_cos();
        let phidot = if self.k == 0.0 { 0.0 } else { self.k / (self.r * self.r) };
        CartesianState::new(
            self.t,
            [self.r * cp, self.r * sp, self.z],
            [
                self.rdot * cp - self.r * phidot * sp,
                self.rdot * sp + self.r * phidot * cp,
                self.zdot,
            ],
        )
    }

    /// `E = ½(ṙ² + ż²) + K²/(2r²) + V(r, 0, z)`.
    pub fn energy(&self, c: &Circle) -> Result<f64> {
        let v = potential::potential(CartesianPoint::new(self.r, 0.0, self.z), c)?;
        let centrifugal = if self.k == 0.0 { 0.0 } else { 0.5 * self.k * self.k / (self.r * self.r) };
        Ok(0.5 * (self.rdot * self.rdot + self.zdot * self.zdot) + centrifugal + v)
    }
}

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Collision cutoff, in units of the circle radius.
    pub d_stop: f64,
    /// Output spacing; `None` records every accepted step.
    pub sample_dt: Option<f64>,
    /// Stop gracefully after this many accepted steps.
    pub max_steps: Option<usize>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            d_stop: 1e-8,
            sample_dt: None,
            max_steps: None,
        }
    }
}

impl IntegratorOptions {
    pub fn with_sample_dt(mut self, dt: f64) -> Self {
        self.sample_dt = Some(dt);
        self
    }

    pub fn with_d_stop(mut self, d_stop: f64) -> Self {
        self.d_stop = d_stop;
        self
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_max_steps(mut self, n: usize) -> Self {
        self.max_steps = Some(n);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return domain("tolerances must be positive");
        }
        // Below this the controller settles on ulp-sized steps that are all
        // accepted, and the run crawls instead of failing.
        if self.rtol < MIN_RTOL {
            return domain(format!("rtol must be at least {MIN_RTOL:e}, got {:e}", self.rtol));
        }
        if !(self.d_stop > 0.0 && self.d_stop < 1e-2) {
            return domain(format!("d_stop must lie in (0, 1e-2), got {}", self.d_stop));
        }
        if let Some(dt) = self.sample_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return domain(format!("sample_dt must be positive, got {dt}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    #[serde(rename = "t_end reached")]
    TEndReached,
    #[serde(rename = "collision")]
    Collision,
    #[serde(rename = "step limit")]
    StepLimit,
    #[serde(rename = "failure")]
    Failure,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Termination::TEndReached => "t_end reached",
            Termination::Collision => "collision",
            Termination::StepLimit => "step limit",
            Termination::Failure => "failure",
        };
        f.write_str(s)
    }
}

/// Output of an integration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub circle: Circle,
    pub options: IntegratorOptions,
    pub samples: Vec<CartesianState>,
    pub termination: Termination,
    pub collision: Option<CollisionReport>,
    pub stats: Stats,
}

impl Trajectory {
    pub fn first(&self) -> &CartesianState {
        &self.samples[0]
    }

    pub fn last(&self) -> &CartesianState {
        self.samples.last().expect("a trajectory holds its initial state")
    }

    /// `max |E(t) − E(0)| / |E(0)|` over the samples.
    pub fn max_energy_drift(&self) -> f64 {
        let e: Vec<f64> = self
            .samples
            .iter()
            .map(|s| s.energy(&self.circle).unwrap_or(f64::NAN))
            .collect();
        let e0 = e[0];
        let scale = e0.abs().max(f64::MIN_POSITIVE);
        e.iter().map(|v| (v - e0).abs() / scale).fold(0.0, f64::max)
    }

    /// `max |K(t) − K(0)|` over the samples.
    pub fn max_angular_momentum_drift(&self) -> f64 {
        let k0 = self.samples[0].angular_momentum();
        self.samples
            .iter()
            .map(|s| (s.angular_momentum() - k0).abs())
            .fold(0.0, f64::max)
    }

    /// Recomputes the collision report from the recorded tail.
    pub fn detect_collision(&self) -> Result<CollisionReport> {
        match (&self.termination, &self.collision) {
            (Termination::Collision, Some(c)) => detect_collision(&c.tail, &self.circle),
            _ => Err(Error::State(format!(
                "trajectory ended by '{}', not by a collision",
                self.termination
            ))),
        }
    }
}

/// Integrates the full 3D system from `s0` up to `t_end`.
pub fn integrate_cartesian(
    s0: &CartesianState,
    c: &Circle,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let y0 = [
        s0.position[0],
        s0.position[1],
        s0.position[2],
        s0.velocity[0],
        s0.velocity[1],
        s0.velocity[2],
    ];
    run(CartesianSystem { circle: *c }, s0.t, y0, t_end, opts)
}

/// Integrates the reduced `(r, z)` system; the output is lifted back to
/// Cartesian coordinates.
pub fn integrate_reduced(
    s0: &CylindricalState,
    c: &Circle,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    if !(s0.r > 0.0) {
        return domain(format!("reduced integration needs r(0) > 0, got {}", s0.r));
    }
    let y0 = [s0.r, s0.z, s0.rdot, s0.zdot, s0.phi];
    run(ReducedSystem { circle: *c, k: s0.k }, s0.t, y0, t_end, opts)
}

/// Distance levels recorded on the way into a collision: decades from
/// `10⁻²ρ` down to `d_stop`.
fn tail_levels(rho: f64, d_stop: f64) -> Vec<f64> {
    let mut levels = Vec::new();
    let mut level = 1e-2;
    while level > d_stop * 1.000_001 {
        levels.push(level * rho);
        level /= 10.0;
    }
    levels.push(d_stop * rho);
    levels
}

/// Smallest accepted relative tolerance, `10 ε`.
pub const MIN_RTOL: f64 = 10.0 * f64::EPSILON;

fn run<const N: usize, M: Model<N>>(
    model: M,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    let circle = *model.circle();
    if !(t_end >= t0) || !t_end.is_finite() {
        return domain(format!("t_end must be finite and >= t0, got {t_end}"));
    }
    let start = model.lift(t0, &y0);
    let levels = tail_levels(circle.rho(), opts.d_stop);
    let d_stop = *levels.last().expect("levels are non-empty");
    if !(start.distance_to_circle(&circle) > d_stop) {
        return domain("initial point lies within the collision cutoff");
    }
    let mut traj = Trajectory {
        circle,
        options: *opts,
        samples: vec![start],
        termination: Termination::TEndReached,
        collision: None,
        stats: Stats::default(),
    };
    if t_end == t0 {
        return Ok(traj);
    }

    let span = t_end - t0;
    let tol = Tolerances {
        rtol: opts.rtol,
        atol: opts.atol,
    };
    let mut ode = Dopri5::new(model, t0, y0, tol, span).map_err(Error::Domain)?;
    let mut tail: Vec<TailSample> = Vec::new();
    let mut next_index = 1usize;

    loop {
        if opts.max_steps.is_some_and(|n| ode.stats.accepted >= n) {
            traj.termination = Termination::StepLimit;
            if opts.sample_dt.is_some() {
                traj.samples.push(ode.system().lift(ode.t(), ode.y()));
            }
            break;
        }
        let floor = 1e-15 * ode.t().abs().max(span);
        let step = match ode.step(t_end, floor) {
            Ok(s) => s,
            Err(reason) => {
                traj.termination = Termination::Failure;
                traj.stats = ode.stats;
                return Err(Error::IntegrationFailure {
                    t: ode.t(),
                    reason,
                    partial: Box::new(traj),
                });
            }
        };
        let sys = ode.system();
        let at = |t: f64| sys.lift(t, &step.interpolate(t));
        let end_state = sys.lift(step.t1, &step.y1);
        let d1 = end_state.distance_to_circle(&circle);

        // Forget levels the particle has climbed back above (a graze).
        tail.retain(|s| s.level > d1);
        let mut t_cut = None;
        for &level in &levels {
            if d1 > level || tail.iter().any(|s| s.level == level) {
                continue;
            }
            let t_cross = collision::crossing_time(&at, &circle, level, step.t0, step.t1);
            tail.push(TailSample::new(level, &at(t_cross), &circle));
            if level == d_stop {
                t_cut = Some(t_cross);
            }
        }

        let t_last = t_cut.unwrap_or(step.t1);
        match opts.sample_dt {
            Some(dt) => {
                loop {
                    let t = t0 + dt * next_index as f64;
                    if t > t_last {
                        break;
                    }
                    traj.samples.push(at(t));
                    next_index += 1;
                }
            }
            None if t_cut.is_none() => traj.samples.push(end_state),
            None => {}
        }

        if let Some(t) = t_cut {
            let final_state = at(t);
            if traj.last().t < t {
                traj.samples.push(final_state);
            }
            traj.termination = Termination::Collision;
            traj.collision = Some(detect_collision(&tail, &circle)?);
            break;
        }
        if step.t1 >= t_end {
            if traj.last().t < t_end {
                traj.samples.push(end_state);
            }
            break;
        }
    }
    traj.stats = ode.stats;
    Ok(traj)
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn rotate_z(v: [f64; 3], angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

#[cfg(test)]
mod tests;
