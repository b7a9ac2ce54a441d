//! Trajectory files: a `# {json}` header line followed by CSV rows
//! `t,x,y,z,vx,vy,vz,E,K`. Floats are written in shortest round-trip form,
//! so reading a file back reproduces the samples bit for bit.

use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::ode::Stats;
use crate::potential::Circle;

use super::{CartesianState, CollisionReport, IntegratorOptions, Termination, Trajectory};

const COLUMNS: [&str; 9] = ["t", "x", "y", "z", "vx", "vy", "vz", "E", "K"];

/// Circle parameters as echoed in headers and summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleParams {
    pub rho: f64,
    pub lambda: f64,
    pub mass: f64,
}

impl From<&Circle> for CircleParams {
    fn from(c: &Circle) -> Self {
        Self {
            rho: c.rho(),
            lambda: c.lambda(),
            mass: c.mass(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    circle: CircleParams,
    options: IntegratorOptions,
    termination: Termination,
    collision: Option<CollisionReport>,
    stats: Stats,
}

pub fn write_csv<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    let header = Header {
        circle: CircleParams::from(&traj.circle),
        options: traj.options,
        termination: traj.termination,
        collision: traj.collision.clone(),
        stats: traj.stats,
    };
    writeln!(out, "# {}", serde_json::to_string(&header)?)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for s in &traj.samples {
        let e = s.energy(&traj.circle).unwrap_or(f64::NAN);
        let row = [
            s.t,
            s.position[0],
            s.position[1],
            s.position[2],
            s.velocity[0],
            s.velocity[1],
            s.velocity[2],
            e,
            s.angular_momentum(),
        ];
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: BufRead>(mut input: R) -> Result<Trajectory> {
    let mut first = String::new();
    input.read_line(&mut first)?;
    let json = first
        .strip_prefix('#')
        .ok_or_else(|| Error::State("trajectory file lacks its '# {json}' header".into()))?;
    let header: Header = serde_json::from_str(json.trim())?;
    let circle = Circle::new(header.circle.rho, header.circle.lambda)?;

    let mut rdr = csv::Reader::from_reader(input);
    let names = rdr.headers()?.clone();
    if names.iter().ne(COLUMNS.iter().copied()) {
        return Err(Error::State(format!("unexpected columns: {names:?}")));
    }
    let mut samples = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let mut v = [0.0; 7];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = record[i]
                .parse()
                .map_err(|e| Error::State(format!("bad number '{}': {e}", &record[i])))?;
        }
        samples.push(CartesianState::new(v[0], [v[1], v[2], v[3]], [v[4], v[5], v[6]]));
    }
    if samples.is_empty() {
        return Err(Error::State("trajectory file has no samples".into()));
    }
    Ok(Trajectory {
        circle,
        options: header.options,
        samples,
        termination: header.termination,
        collision: header.collision,
        stats: header.stats,
    })
}

/// Run summary; computed from the samples alone so that a trajectory read
/// back from disk summarizes identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub circle: CircleParams,
    pub rtol: f64,
    pub atol: f64,
    pub d_stop: f64,
    pub termination: Termination,
    pub t_start: f64,
    pub t_final: f64,
    pub samples: usize,
    pub energy_initial: f64,
    pub max_relative_energy_drift: f64,
    #[serde(rename = "K_initial")]
    pub k_initial: f64,
    #[serde(rename = "max_K_drift")]
    pub max_k_drift: f64,
    pub steps: Stats,
    pub collision: Option<CollisionSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionSummary {
    pub t_collision: f64,
    pub theta: f64,
    pub hit_point: [f64; 3],
    pub terminal_speed: f64,
    pub velocity_angle_to_circle: f64,
    pub speed_increasing: bool,
}

pub fn summarize(traj: &Trajectory) -> TrajectorySummary {
    let first = traj.first();
    TrajectorySummary {
        circle: CircleParams::from(&traj.circle),
        rtol: traj.options.rtol,
        atol: traj.options.atol,
        d_stop: traj.options.d_stop,
        termination: traj.termination,
        t_start: first.t,
        t_final: traj.last().t,
        samples: traj.samples.len(),
        energy_initial: first.energy(&traj.circle).unwrap_or(f64::NAN),
        max_relative_energy_drift: traj.max_energy_drift(),
        k_initial: first.angular_momentum(),
        max_k_drift: traj.max_angular_momentum_drift(),
        steps: traj.stats,
        collision: traj.collision.as_ref().map(|c| CollisionSummary {
            t_collision: c.t_collision,
            theta: c.theta,
            hit_point: c.hit_point,
            terminal_speed: c.terminal_speed,
            velocity_angle_to_circle: c.velocity_angle_to_circle,
            speed_increasing: c.speed_increasing,
        }),
    }
}
