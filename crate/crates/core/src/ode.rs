//! Dormand–Prince 5(4) integrator with PI step-size control and the
//! fourth-order continuous extension.

use serde::{Deserialize, Serialize};

/// Right-hand side `dy/dt = f(t, y)`.
pub trait OdeSystem<const N: usize> {
    /// Fails when the state is outside the domain of the vector field.
    fn rhs(&self, t: f64, y: &[f64; N], dy: &mut [f64; N]) -> Result<(), String>;

    /// Error control measures contiguous blocks of this size with the
    /// Euclidean norm, so a block holding a 3-vector is rotation invariant.
    fn block_size(&self) -> usize {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - 0.75 * BETA;
const MAX_GROW: f64 = 10.0;
const MAX_SHRINK: f64 = 5.0;

/// One accepted step with its interpolant.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    rcont: [[f64; N]; 4],
}

impl<const N: usize> DenseStep<N> {
    /// Fourth-order interpolant, valid for `t ∈ [t0, t1]`.
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let s1 = 1.0 - s;
        let [r2, r3, r4, r5] = &self.rcont;
        std::array::from_fn(|i| {
            self.y0[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i])))
        })
    }
}

/// Integrator state; advance with [`Dopri5::step`].
pub struct Dopri5<const N: usize, S: OdeSystem<N>> {
    system: S,
    tol: Tolerances,
    t: f64,
    y: [f64; N],
    f: [f64; N],
    h: f64,
    err_old: f64,
    pub stats: Stats,
}

impl<const N: usize, S: OdeSystem<N>> Dopri5<N, S> {
    pub fn new(system: S, t0: f64, y0: [f64; N], tol: Tolerances, h_max: f64) -> Result<Self, String> {
        let mut f = [0.0; N];
        system.rhs(t0, &y0, &mut f)?;
        let mut me = Self {
            system,
            tol,
            t: t0,
            y: y0,
            f,
            h: 0.0,
            err_old: 1e-4,
            stats: Stats {
                evaluations: 1,
                ..Stats::default()
            },
        };
        me.h = me.initial_step(h_max)?;
        Ok(me)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn system(&self) -> &S {
        &self.system
    }

    fn norm(&self, v: &[f64; N], y0: &[f64; N], y1: &[f64; N]) -> f64 {
        let b = self.system.block_size().max(1);
        let mut acc = 0.0;
        let mut i = 0;
        while i < N {
            let j = (i + b).min(N);
            let sq = |a: &[f64]| a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let scale = self.tol.atol + self.tol.rtol * sq(&y0[i..j]).max(sq(&y1[i..j]));
            let e = sq(&v[i..j]) / scale;
            acc += e * e;
            i = j;
        }
        (acc / N as f64).sqrt()
    }

    fn initial_step(&mut self, h_max: f64) -> Result<f64, String> {
        let zero = [0.0; N];
        let d0 = self.norm(&self.y, &self.y, &self.y);
        let d1 = self.norm(&self.f, &self.y, &self.y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(h_max);
        let y1: [f64; N] = std::array::from_fn(|i| self.y[i] + h0 * self.f[i]);
        let mut f1 = zero;
        self.system.rhs(self.t + h0, &y1, &mut f1)?;
        self.stats.evaluations += 1;
        let diff: [f64; N] = std::array::from_fn(|i| f1[i] - self.f[i]);
        let d2 = self.norm(&diff, &self.y, &self.y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(h_max))
    }

    fn stages(&self, h: f64) -> Result<([[f64; N]; 7], [f64; N]), String> {
        let (t, y) = (self.t, &self.y);
        let mut k = [[0.0; N]; 7];
        k[0] = self.f;
        let mut tmp = [0.0; N];
        let sys = &self.system;

        for i in 0..N {
            tmp[i] = y[i] + h * A21 * k[0][i];
        }
        sys.rhs(t + C2 * h, &tmp, &mut k[1])?;
        for i in 0..N {
            tmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
        }
        sys.rhs(t + C3 * h, &tmp, &mut k[2])?;
        for i in 0..N {
            tmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        sys.rhs(t + C4 * h, &tmp, &mut k[3])?;
        for i in 0..N {
            tmp[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        sys.rhs(t + C5 * h, &tmp, &mut k[4])?;
        for i in 0..N {
            tmp[i] = y[i]
                + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
        }
        sys.rhs(t + h, &tmp, &mut k[5])?;
        let mut y_new = [0.0; N];
        for i in 0..N {
            y_new[i] = y[i]
                + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
        }
        sys.rhs(t + h, &y_new, &mut k[6])?;
        Ok((k, y_new))
    }

    /// Takes one accepted step, never past `t_limit`. Fails when the step
    /// size would drop below `h_min`.
    pub fn step(&mut self, t_limit: f64, h_min: f64) -> Result<DenseStep<N>, String> {
        let mut rejected_last = false;
        loop {
            let mut h = self.h;
            let mut last = false;
            if self.t + h >= t_limit {
                h = t_limit - self.t;
                last = true;
            }
            if h < h_min && !last {
                return Err(format!("step size {h:e} below floor {h_min:e}"));
            }
            if h <= 0.0 {
                return Err("no room left before t_limit".into());
            }
            let attempt = self.stages(h);
            self.stats.evaluations += 6;
            let (k, y_new) = match attempt {
                Ok(v) => v,
                Err(_) => {
                    // A stage left the domain: shrink hard and retry.
                    self.stats.rejected += 1;
                    self.h = 0.2 * h;
                    rejected_last = true;
                    continue;
                }
            };
            let err_vec: [f64; N] = std::array::from_fn(|i| {
                h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i])
            });
            let err = self.norm(&err_vec, &self.y, &y_new);
            if !err.is_finite() {
                self.stats.rejected += 1;
                self.h = 0.2 * h;
                rejected_last = true;
                continue;
            }
            let fac11 = err.powf(EXPO);
            if err <= 1.0 {
                let fac = (fac11 / self.err_old.powf(BETA) / SAFETY).clamp(1.0 / MAX_GROW, MAX_SHRINK);
                let mut h_new = h / fac;
                if rejected_last {
                    h_new = h_new.min(h);
                }
                self.err_old = err.max(1e-4);

                let y0 = self.y;
                let rcont = dense_coefficients(&y0, &y_new, &k, h);
                let t0 = self.t;
                self.t = if last { t_limit } else { t0 + h };
                self.y = y_new;
                self.f = k[6];
                if !last {
                    self.h = h_new;
                } else {
                    self.h = self.h.max(h_new);
                }
                self.stats.accepted += 1;
                return Ok(DenseStep {
                    t0,
                    t1: self.t,
                    y0,
                    y1: y_new,
                    rcont,
                });
            }
            self.stats.rejected += 1;
            self.h = h / (fac11 / SAFETY).min(MAX_SHRINK);
            rejected_last = true;
        }
    }
}

fn dense_coefficients<const N: usize>(
    y0: &[f64; N],
    y1: &[f64; N],
    k: &[[f64; N]; 7],
    h: f64,
) -> [[f64; N]; 4] {
    let mut r = [[0.0; N]; 4];
    for i in 0..N {
        let ydiff = y1[i] - y0[i];
        let bspl = h * k[0][i] - ydiff;
        r[0][i] = ydiff;
        r[1][i] = bspl;
        r[2][i] = ydiff - h * k[6][i] - bspl;
        r[3][i] = h
            * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
    }
    r
}
