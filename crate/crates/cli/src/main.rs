use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use circle_dynamics::planar::{self, EffectiveParams, Portrait, Side};
use circle_dynamics::potential::{self, CartesianPoint, Circle};
use circle_dynamics::simulate::{
    self, integrate_cartesian, integrate_reduced, summarize, CartesianState, CircleParams,
    CylindricalState, IntegratorOptions, Termination, Trajectory,
};
use circle_dynamics::{special, wire, Error};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

mod report;

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_COLLIDED: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "circdyn", version, about = "Particle dynamics around a fixed homogeneous circle")]
struct Cli {
    #[command(flatten)]
    circle: CircleArgs,

    /// Machine-readable JSON instead of aligned text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CircleArgs {
    /// Circle radius ρ.
    #[arg(long, global = true, default_value_t = 1.0)]
    rho: f64,

    /// Linear density λ (default: the density giving M = 1).
    #[arg(long, global = true, conflicts_with = "mass")]
    lambda: Option<f64>,

    /// Total mass M = 2πλρ.
    #[arg(long, global = true)]
    mass: Option<f64>,
}

impl CircleArgs {
    fn circle(&self) -> circle_dynamics::Result<Circle> {
        match (self.lambda, self.mass) {
            (Some(l), _) => Circle::new(self.rho, l),
            (None, Some(m)) => Circle::with_mass(self.rho, m),
            (None, None) => Circle::with_mass(self.rho, 1.0),
        }
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct ToleranceArgs {
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    atol: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Potential, gradient and the distance pair at a point.
    Potential {
        /// x,y,z
        #[arg(long, value_parser = parse_vec::<3>, allow_hyphen_values = true)]
        point: [f64; 3],
    },
    /// Critical radius r0 and momentum K0; circular-orbit radii for --K.
    Critical {
        #[arg(long = "K", allow_hyphen_values = true)]
        k: Option<f64>,
    },
    /// Integrate an orbit, write the trajectory CSV and print a summary.
    Simulate {
        /// x,y,z,vx,vy,vz
        #[arg(long, value_parser = parse_vec::<6>, allow_hyphen_values = true)]
        state: [f64; 6],
        #[arg(long)]
        t_end: f64,
        /// Output spacing (default: every accepted step).
        #[arg(long)]
        dt: Option<f64>,
        #[command(flatten)]
        tol: ToleranceArgs,
        /// Collision cutoff in units of ρ.
        #[arg(long, default_value_t = 1e-8)]
        d_stop: f64,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Integrate the reduced (r, z) system instead of the 3D one.
        #[arg(long)]
        reduced: bool,
        /// Trajectory CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-read a trajectory CSV and print its summary.
    Summarize { file: PathBuf },
    /// Classify a planar orbit from (r, ṙ, K) and optionally E.
    Classify {
        #[arg(long, default_value = "outside")]
        side: Side,
        #[arg(long = "K", allow_hyphen_values = true)]
        k: f64,
        #[arg(long, allow_hyphen_values = true)]
        r: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        rdot: f64,
        /// Energy (default: ½ṙ² + U(r)).
        #[arg(long = "E", allow_hyphen_values = true)]
        e: Option<f64>,
    },
    /// Energy table E(r, ṙ) over a grid, row-major in r then ṙ.
    Portrait {
        #[arg(long, default_value = "inside")]
        side: Side,
        #[arg(long = "K", default_value_t = 0.0, allow_hyphen_values = true)]
        k: f64,
        /// from:to:count
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        r: Grid,
        /// from:to:count
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        rdot: Grid,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence of the translated-circle field towards the wire limit.
    Wire {
        /// x,z (repeatable; default: 8 points on the unit circle)
        #[arg(long = "point", value_parser = parse_vec::<2>, allow_hyphen_values = true)]
        points: Vec<[f64; 2]>,
        /// Comma-separated ε values (default: 1e-2 … 1e-6).
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy)]
struct Grid {
    from: f64,
    to: f64,
    n: usize,
}

impl Grid {
    fn values(&self) -> Vec<f64> {
        planar::linspace(self.from, self.to, self.n)
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}")))
        .collect()
}

fn parse_vec<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v = parse_list(s)?;
    let n = v.len();
    v.try_into().map_err(|_| format!("expected {N} comma-separated numbers, got {n}"))
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(format!("expected from:to:count, got '{s}'"));
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"));
    let n: usize = n.trim().parse().map_err(|e| format!("'{n}': {e}"))?;
    if n == 0 {
        return Err("grid count must be positive".into());
    }
    Ok(Grid { from: num(a)?, to: num(b)?, n })
}

/// A failure with its exit code; numerical failures may still have printed
/// partial results.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::IntegrationFailure { .. } | Error::State(_) => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: EXIT_USAGE, message: e.to_string() }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("circdyn: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> CmdResult {
    let circle = cli.circle.circle()?;
    let print = |v: &Value| report::print(v, cli.json);
    match &cli.command {
        Command::Potential { point } => cmd_potential(*point, &circle, print),
        Command::Critical { k } => cmd_critical(*k, &circle, print),
        Command::Simulate { state, t_end, dt, tol, d_stop, max_steps, reduced, out } => {
            let mut opts = IntegratorOptions::default()
                .with_tolerances(tol.rtol, tol.atol)
                .with_d_stop(*d_stop);
            if let Some(dt) = dt {
                opts = opts.with_sample_dt(*dt);
            }
            if let Some(n) = max_steps {
                opts = opts.with_max_steps(*n);
            }
            cmd_simulate(*state, *t_end, &opts, *reduced, out.as_deref(), &circle, print)
        }
        Command::Summarize { file } => {
            let traj = simulate::read_csv(BufReader::new(File::open(file)?))?;
            print(&serde_json::to_value(summarize(&traj)).expect("summary serializes"));
            Ok(0)
        }
        Command::Classify { side, k, r, rdot, e } => cmd_classify(*side, *k, *r, *rdot, *e, &circle, print),
        Command::Portrait { side, k, r, rdot, out } => cmd_portrait(*side, *k, r, rdot, out.as_deref(), &circle),
        Command::Wire { points, eps, out } => cmd_wire(points, eps, out.as_deref(), &circle, print),
    }
}

fn circle_json(c: &Circle) -> Value {
    serde_json::to_value(CircleParams::from(c)).expect("circle serializes")
}

fn cmd_potential(p: [f64; 3], c: &Circle, print: impl Fn(&Value)) -> CmdResult {
    let (v, grad) = potential::evaluate(p, c)?;
    let pair = potential::dist_extremes(CartesianPoint::new(p[0], p[1], p[2]), c);
    let sigma = special::agm(pair.big_d, pair.d)?.value;
    print(&json!({
        "circle": circle_json(c),
        "point": p,
        "V": v,
        "grad_V": grad,
        "d": pair.d,
        "D": pair.big_d,
        "sigma": sigma,
    }));
    Ok(0)
}

fn cmd_critical(k: Option<f64>, c: &Circle, print: impl Fn(&Value)) -> CmdResult {
    let data = planar::critical_data(c)?;
    let k0_sq = data.k0 * data.k0;
    let mut out = json!({
        "circle": circle_json(c),
        "r0": data.r0,
        "K0": data.k0,
        // g'(r0) made dimensionless by K0²/ρ
        "r0_residual": (planar::g_prime(data.r0, c)? * c.rho() / k0_sq).abs(),
        "K0_residual": ((planar::g(data.r0, c)? - k0_sq) / k0_sq).abs(),
    });
    if let Some(k) = k {
        out["K"] = json!(k);
        match planar::critical_radii(k, &data)? {
            Some((r1, r2)) => {
                let res = |r: f64| planar::g(r, c).map(|g| ((g - k * k) / (k * k)).abs());
                let e_bar = data.e_bar(k)?.expect("radii exist");
                out["r1"] = json!(r1);
                out["r2"] = json!(r2);
                out["r1_residual"] = json!(res(r1)?);
                out["r2_residual"] = json!(res(r2)?);
                out["E_bar"] = json!(e_bar);
                out["portrait"] = serde_json::to_value(Portrait::from_e_bar(e_bar)).expect("serializes");
            }
            None => {
                out["critical_radii"] = Value::Null;
                out["message"] = json!("no critical radii");
            }
        }
    }
    print(&out);
    Ok(0)
}

fn cmd_simulate(
    state: [f64; 6],
    t_end: f64,
    opts: &IntegratorOptions,
    reduced: bool,
    out: Option<&Path>,
    c: &Circle,
    print: impl Fn(&Value),
) -> CmdResult {
    let s0 = CartesianState::new(0.0, [state[0], state[1], state[2]], [state[3], state[4], state[5]]);
    let result = if reduced {
        integrate_reduced(&CylindricalState::from_cartesian(&s0), c, t_end, opts)
    } else {
        integrate_cartesian(&s0, c, t_end, opts)
    };
    let (traj, failure): (Trajectory, Option<Failure>) = match result {
        Ok(t) => (t, None),
        Err(Error::IntegrationFailure { t, reason, partial }) => (
            *partial,
            Some(Failure {
                code: EXIT_NUMERICAL,
                message: format!("integration failure at t = {t}: {reason}"),
            }),
        ),
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = out {
        let mut w = BufWriter::new(File::create(path)?);
        simulate::write_csv(&traj, &mut w)?;
        w.flush()?;
    }
    print(&serde_json::to_value(summarize(&traj)).expect("summary serializes"));
    match failure {
        Some(f) => Err(f),
        None if traj.termination == Termination::Collision => Ok(EXIT_COLLIDED),
        None => Ok(0),
    }
}

fn cmd_classify(
    side: Side,
    k: f64,
    r: f64,
    rdot: f64,
    e: Option<f64>,
    c: &Circle,
    print: impl Fn(&Value),
) -> CmdResult {
    let data = planar::critical_data(c)?;
    let u = planar::effective_potential(r, &EffectiveParams::new(k, *c), side)?;
    let e = e.unwrap_or(0.5 * rdot * rdot + u);
    let class = planar::classify_regime(side, k, e, r, rdot, &data)?;
    let mut out = json!({
        "circle": circle_json(c),
        "side": side,
        "K": k,
        "E": e,
        "r": r,
        "rdot": rdot,
        "U": u,
        "K0": data.k0,
    });
    if let Some((r1, r2)) = planar::critical_radii(k, &data)? {
        out["r1"] = json!(r1);
        out["r2"] = json!(r2);
        out["E_bar"] = json!(data.e_bar(k)?);
    }
    out["regime"] = serde_json::to_value(class.regime).expect("serializes");
    out["region_label"] = serde_json::to_value(class.region_label).expect("serializes");
    out["portrait"] = serde_json::to_value(class.portrait).expect("serializes");
    print(&out);
    Ok(0)
}

fn cmd_portrait(side: Side, k: f64, r: &Grid, rdot: &Grid, out: Option<&Path>, c: &Circle) -> CmdResult {
    let table = planar::phase_portrait(side, k, &r.values(), &rdot.values(), c)?;
    match out {
        Some(path) => table.write_csv(BufWriter::new(File::create(path)?))?,
        None => table.write_csv(io::stdout().lock())?,
    }
    Ok(0)
}

fn unit_circle_points() -> Vec<(f64, f64)> {
    (0..8)
        .map(|k| (k as f64 * std::f64::consts::FRAC_PI_4).sin_cos())
        .map(|(s, co)| (co, s))
        .collect()
}

fn cmd_wire(
    points: &[[f64; 2]],
    eps: &[f64],
    out: Option<&Path>,
    c: &Circle,
    print: impl Fn(&Value),
) -> CmdResult {
    let points: Vec<(f64, f64)> = if points.is_empty() {
        unit_circle_points()
    } else {
        points.iter().map(|p| (p[0], p[1])).collect()
    };
    let eps = if eps.is_empty() { wire::decades(2, 6) } else { eps.to_vec() };
    let rows = wire::convergence_scan(&points, &eps, c.lambda())?;
    match out {
        None => wire::write_scan_csv(&rows, io::stdout().lock())?,
        Some(path) => {
            wire::write_scan_csv(&rows, BufWriter::new(File::create(path)?))?;
            let finals: Vec<Value> = rows
                .chunks(eps.len())
                .map(|seq| {
                    let last = seq.last().expect("non-empty ε list");
                    json!({
                        "x": last.x,
                        "z": last.z,
                        "epsilon": last.epsilon,
                        "relative_deviation": last.relative_deviation,
                        "wire_relative_deviation": last.wire_relative_deviation,
                        "h": last.h,
                    })
                })
                .collect();
            print(&json!({
                "lambda": c.lambda(),
                "rows": rows.len(),
                "out": path.display().to_string(),
                "final": finals,
            }));
        }
    }
    Ok(0)
}
