use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::planar::Side;
use crate::potential::Circle;

use super::{dot, CartesianState};

/// State recorded when the distance to the circle first drops below `level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSample {
    pub level: f64,
    pub d: f64,
    pub t: f64,
    /// Azimuth of the nearest point of the circle.
    pub theta: f64,
    pub speed: f64,
    /// Angle between the velocity and the circle's tangent at `theta`, in
    /// degrees; 90° is a head-on hit.
    pub velocity_angle: f64,
    pub side: Side,
    pub state: CartesianState,
}

impl TailSample {
    pub fn new(level: f64, state: &CartesianState, c: &Circle) -> Self {
        let [x, y, _] = state.position;
        let theta = y.atan2(x);
        Self {
            level,
            d: state.distance_to_circle(c),
            t: state.t,
            theta,
            speed: state.speed(),
            velocity_angle: angle_to_tangent(state, theta),
            side: if x.hypot(y) < c.rho() { Side::Inside } else { Side::Outside },
            state: *state,
        }
    }
}

fn angle_to_tangent(state: &CartesianState, theta: f64) -> f64 {
    let tangent = [-theta.sin(), theta.cos(), 0.0];
    let speed = state.speed();
    if speed == 0.0 {
        return 90.0;
    }
    let cos = (dot(&state.velocity, &tangent).abs() / speed).min(1.0);
    cos.acos().to_degrees()
}

/// Terminal data of a collision with the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    /// Extrapolated time at which the distance reaches zero.
    pub t_collision: f64,
    /// Time at which the cutoff was crossed.
    pub t_cutoff: f64,
    /// Extrapolated azimuth of the hit point.
    pub theta: f64,
    pub hit_point: [f64; 3],
    /// Side of the circle, in its plane, from which the particle arrives.
    pub side: Side,
    pub terminal_speed: f64,
    pub terminal_distance: f64,
    /// Velocity angle to the tangent at the cutoff, degrees.
    pub velocity_angle_to_circle: f64,
    /// Whether the speed grew strictly across the recorded levels.
    pub speed_increasing: bool,
    pub tail: Vec<TailSample>,
}

fn wrap(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Builds the collision report from the tail of a trajectory that ended at
/// the cutoff. The limits `t*` and `θ*` are extrapolated linearly in `d` from
/// the last two levels.
pub fn detect_collision(tail: &[TailSample], c: &Circle) -> Result<CollisionReport> {
    let Some(last) = tail.last() else {
        return Err(Error::State("no approach to the circle was recorded".into()));
    };
    if last.d > 1.01 * last.level {
        return Err(Error::State(format!(
            "trajectory did not reach its last cutoff level {} (d = {})",
            last.level, last.d
        )));
    }
    let (t_star, theta_star) = match tail.len() {
        1 => (last.t, last.theta),
        n => {
            let prev = &tail[n - 2];
            let w = last.d / (prev.d - last.d);
            let dtheta = wrap(last.theta - prev.theta);
            (last.t + (last.t - prev.t) * w, wrap(last.theta + dtheta * w))
        }
    };
    let rho = c.rho();
    Ok(CollisionReport {
        t_collision: t_star,
        t_cutoff: last.t,
        theta: theta_star,
        hit_point: [rho * theta_star.cos(), rho * theta_star.sin(), 0.0],
        side: last.side,
        terminal_speed: last.speed,
        terminal_distance: last.d,
        velocity_angle_to_circle: last.velocity_angle,
        speed_increasing: tail.windows(2).all(|w| w[1].speed > w[0].speed),
        tail: tail.to_vec(),
    })
}

/// Bisection for the time in `[t0, t1]` at which the distance to the circle
/// equals `level`, given `d(t0) ≥ level ≥ d(t1)`.
pub(crate) fn crossing_time<F: Fn(f64) -> CartesianState>(
    at: &F,
    c: &Circle,
    level: f64,
    t0: f64,
    t1: f64,
) -> f64 {
    let (mut lo, mut hi) = (t0, t1);
    if at(lo).distance_to_circle(c) <= level {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid).distance_to_circle(c) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}
