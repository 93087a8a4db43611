//! Sampled processes from an explicit finite-difference rigid heat conductor.
//!
//! The field obeys `ρc ϑ,t = (κ(ϑ) ϑ,x),x`, integrated with forward Euler in
//! time and central differences in space. At every interior node and every
//! time level that has a successor, one sample is recorded:
//!
//! * `ϑ,x`, `ϑ,xx`: central differences at the current level,
//! * `ϑ,t`: the right-hand side of the PDE at the current level,
//! * `ϑ,xt`: forward time difference of `ϑ,x`.
//!
//! Boundary nodes are never sampled; one-sided stencils there would pollute
//! the entropy production.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::{Classification, Sample, Trajectory};
use crate::error::{Error, Result};
use crate::kernel::{Context, HigherVector, Layout, StatePoint};
use crate::models::FourierParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Boundary {
    /// Ends held at the given temperatures.
    Dirichlet { left: f64, right: f64 },
    /// Insulated ends.
    NeumannZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub nx: usize,
    pub dx: f64,
    pub dt: f64,
    pub steps: usize,
    pub boundary: Boundary,
}

impl Grid1D {
    /// Uniform grid on `[0, length]`.
    pub fn new(nx: usize, length: f64, dt: f64, steps: usize, boundary: Boundary) -> Result<Self> {
        if nx < 3 {
            return Err(Error::Config(format!("need at least 3 grid points, got {nx}")));
        }
        let g = Grid1D {
            nx,
            dx: length / (nx - 1) as f64,
            dt,
            steps,
            boundary,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn length(&self) -> f64 {
        self.dx * (self.nx - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.dx * i as f64
    }

    fn validate(&self) -> Result<()> {
        if self.nx < 3 {
            return Err(Error::Config(format!("need at least 3 grid points, got {}", self.nx)));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::Config(format!("dx = {} must be positive", self.dx)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt = {} must be positive", self.dt)));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        Ok(())
    }

    /// Largest stable step of the explicit scheme for diffusivity `|κ|/(ρc)`.
    pub fn max_stable_dt(&self, rho_c: f64, kappa_abs: f64) -> f64 {
        if kappa_abs == 0.0 {
            f64::INFINITY
        } else {
            self.dx * self.dx * rho_c / (2.0 * kappa_abs)
        }
    }
}

/// Named initial temperature profiles on `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    Uniform { theta: f64 },
    /// `base + amplitude·sin(πx/L)`.
    Sine { base: f64, amplitude: f64 },
    /// `base + amplitude·sin(πx/(2L))`, monotone on the interior.
    QuarterSine { base: f64, amplitude: f64 },
}

impl Profile {
    pub fn at(&self, x: f64, length: f64) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Profile::Uniform { theta } => theta,
            Profile::Sine { base, amplitude } => base + amplitude * (PI * x / length).sin(),
            Profile::QuarterSine { base, amplitude } => {
                base + amplitude * (0.5 * PI * x / length).sin()
            }
        }
    }

    pub fn sample(&self, grid: &Grid1D) -> Vec<f64> {
        (0..grid.nx).map(|i| self.at(grid.x(i), grid.length())).collect()
    }
}

struct Derivs {
    dx1: Vec<f64>,
    dx2: Vec<f64>,
}

fn space_derivatives(theta: &[f64], dx: f64) -> Derivs {
    let n = theta.len();
    let mut dx1 = vec![0.0; n];
    let mut dx2 = vec![0.0; n];
    for i in 1..n - 1 {
        dx1[i] = (theta[i + 1] - theta[i - 1]) / (2.0 * dx);
        dx2[i] = (theta[i + 1] - 2.0 * theta[i] + theta[i - 1]) / (dx * dx);
    }
    Derivs { dx1, dx2 }
}

/// Integrates the rigid conductor from `initial` and records the interior
/// samples of every time level that has a successor.
pub fn simulate_fourier_1d(
    grid: &Grid1D,
    params: &FourierParams,
    initial: &[f64],
) -> Result<Trajectory> {
    grid.validate()?;
    if initial.len() != grid.nx {
        return Err(Error::Config(format!(
            "initial profile has {} points, grid has {}",
            initial.len(),
            grid.nx
        )));
    }
    if let Some(bad) = initial.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Precondition(format!(
            "initial temperature {bad} is not positive"
        )));
    }
    let rho_c = params.rho * params.c;
    let kappa_max = initial
        .iter()
        .map(|&t| params.kappa.at(t).abs())
        .fold(0.0, f64::max);
    let dt_max = grid.max_stable_dt(rho_c, kappa_max);
    if grid.dt > dt_max {
        return Err(Error::Config(format!(
            "dt = {} violates the stability limit {dt_max}",
            grid.dt
        )));
    }

    let layout = Layout::new(1, 1)?;
    let (dx, dt) = (grid.dx, grid.dt);
    let rate = |theta: f64, g: f64, lap: f64| {
        (params.kappa.at(theta) * lap + params.kappa.slope() * g * g) / rho_c
    };

    let mut theta = initial.to_vec();
    let mut samples = Vec::with_capacity(grid.steps * (grid.nx - 2));
    for step in 0..grid.steps {
        let t = step as f64 * dt;
        let cur = space_derivatives(&theta, dx);
        let theta_t: Vec<f64> = (0..grid.nx)
            .map(|i| {
                if i == 0 || i == grid.nx - 1 {
                    0.0
                } else {
                    rate(theta[i], cur.dx1[i], cur.dx2[i])
                }
            })
            .collect();

        let mut next = theta.clone();
        for i in 1..grid.nx - 1 {
            next[i] = theta[i] + dt * theta_t[i];
        }
        match grid.boundary {
            Boundary::Dirichlet { left, right } => {
                next[0] = left;
                next[grid.nx - 1] = right;
            }
            Boundary::NeumannZero => {
                // mirrored ghost node
                let end = grid.nx - 1;
                let lap0 = 2.0 * (theta[1] - theta[0]) / (dx * dx);
                let lap1 = 2.0 * (theta[end - 1] - theta[end]) / (dx * dx);
                next[0] = theta[0] + dt * rate(theta[0], 0.0, lap0);
                next[end] = theta[end] + dt * rate(theta[end], 0.0, lap1);
            }
        }
        if let Some(i) = next.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::BlowUp {
                t: t + dt,
                x: grid.x(i),
            });
        }
        let nxt = space_derivatives(&next, dx);

        for i in 1..grid.nx - 1 {
            let x = grid.x(i);
            samples.push(Sample {
                t,
                x: vec![x],
                state: StatePoint::new(layout, vec![theta[i]], vec![cur.dx1[i]])?,
                ctx: Context::new(params.rho, vec![0.0], t, vec![x])?,
                y: HigherVector::new(
                    layout,
                    vec![theta_t[i]],
                    vec![(nxt.dx1[i] - cur.dx1[i]) / dt],
                    vec![cur.dx2[i]],
                )?,
            });
        }
        theta = next;
    }
    Trajectory::new(samples)
}

pub const CSV_HEADER: &str = "t,x,theta,theta_x,theta_t,theta_xt,theta_xx,sigma,class";

/// One exported sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub theta: f64,
    pub theta_x: f64,
    pub theta_t: f64,
    pub theta_xt: f64,
    pub theta_xx: f64,
    pub sigma: f64,
    pub class: String,
}

/// Pairs each sample of a scalar 1D trajectory with its classification.
pub fn trajectory_rows(traj: &Trajectory, cls: &[Classification]) -> Result<Vec<TrajectoryRow>> {
    if cls.len() != traj.len() {
        return Err(Error::Layout(format!(
            "{} classifications for {} samples",
            cls.len(),
            traj.len()
        )));
    }
    traj.samples()
        .iter()
        .zip(cls)
        .map(|(s, c)| {
            let l = s.state.layout();
            if l.omega() != 1 || l.n() != 1 {
                return Err(Error::Layout("CSV export needs a scalar 1D trajectory".into()));
            }
            Ok(TrajectoryRow {
                t: s.t,
                x: s.x[0],
                theta: s.state.z(0),
                theta_x: s.state.grad(0, 0),
                theta_t: s.y.dt[0],
                theta_xt: s.y.dgrad[0],
                theta_xx: s.y.hess[0],
                sigma: c.sigma,
                class: c.class.as_str().to_string(),
            })
        })
        .collect()
}

pub fn write_csv<W: Write>(out: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.t, r.x, r.theta, r.theta_x, r.theta_t, r.theta_xt, r.theta_xx, r.sigma, r.class
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the classified trajectory to `path` in `t`-major, `x`-minor order.
pub fn trajectory_export(
    traj: &Trajectory,
    cls: &[Classification],
    path: impl AsRef<Path>,
) -> Result<()> {
    let rows = trajectory_rows(traj, cls)?;
    write_csv(std::fs::File::create(path)?, &rows)
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<TrajectoryRow>> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim) != Some(CSV_HEADER) {
        return Err(Error::Config("missing trajectory CSV header".into()));
    }
    let bad = |ln: usize| Error::Config(format!("malformed trajectory CSV row {ln}"));
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(bad(ln + 2));
        }
        let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(ln + 2));
        rows.push(TrajectoryRow {
            t: num(0)?,
            x: num(1)?,
            theta: num(2)?,
            theta_x: num(3)?,
            theta_t: num(4)?,
            theta_xt: num(5)?,
            theta_xx: num(6)?,
            sigma: num(7)?,
            class: f[8].to_string(),
        });
    }
    Ok(rows)
}

pub fn read_trajectory_csv(path: impl AsRef<Path>) -> Result<Vec<TrajectoryRow>> {
    read_csv(std::fs::File::open(path)?)
}
