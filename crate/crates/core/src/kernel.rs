//! State-space layout, higher-derivative vectors and the equilibrium test.
//!
//! A model has `omega` fields `z_α` living in `n` spatial dimensions. The
//! pointwise state holds the fields and their gradients; the higher-derivative
//! vector holds everything a balance law can only determine algebraically at a
//! point: time derivatives, mixed space-time derivatives and the symmetric
//! second spatial derivatives.
//!
//! Flat ordering of a higher-derivative vector is block-major:
//!
//! ```text
//! | dt[α] (ω) | dgrad[α][j] (ω·n) | hess[α][j≤k] (ω·n(n+1)/2) |
//! ```
//!
//! with `α` outermost inside each block and `(j,k)` enumerated row-major on
//! `j ≤ k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    omega: usize,
    n: usize,
}

impl Layout {
    pub fn new(omega: usize, n: usize) -> Result<Self> {
        if omega == 0 {
            return Err(Error::Layout("omega must be positive".into()));
        }
        if !(1..=3).contains(&n) {
            return Err(Error::Layout(format!("spatial dimension {n} not in 1..=3")));
        }
        Ok(Layout { omega, n })
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of independent second derivatives per field.
    pub fn sym_dim(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn state_dim(&self) -> usize {
        self.omega * (1 + self.n)
    }

    pub fn higher_dim(&self) -> usize {
        self.omega * (1 + self.n + self.sym_dim())
    }

    pub fn dt_offset(&self, alpha: usize) -> usize {
        debug_assert!(alpha < self.omega);
        alpha
    }

    pub fn dgrad_offset(&self, alpha: usize, j: usize) -> usize {
        debug_assert!(alpha < self.omega && j < self.n);
        self.omega + alpha * self.n + j
    }

    /// Position of the pair `(j, k)` inside one field's hess block; symmetric in its arguments.
    pub fn sym_index(&self, j: usize, k: usize) -> usize {
        let (j, k) = if j <= k { (j, k) } else { (k, j) };
        debug_assert!(k < self.n);
        // rows before j contribute n + (n-1) + ... + (n-j+1) entries
        j * self.n - j * j.saturating_sub(1) / 2 + (k - j)
    }

    pub fn hess_offset(&self, alpha: usize, j: usize, k: usize) -> usize {
        debug_assert!(alpha < self.omega);
        self.omega * (1 + self.n) + alpha * self.sym_dim() + self.sym_index(j, k)
    }

    /// Upper-triangular pairs `(j, k)` in storage order.
    pub fn sym_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.sym_dim());
        for j in 0..self.n {
            for k in j..self.n {
                out.push((j, k));
            }
        }
        out
    }

    pub(crate) fn check_alpha(&self, alpha: usize) -> Result<()> {
        if alpha >= self.omega {
            return Err(Error::Index {
                what: "alpha",
                index: alpha,
                limit: self.omega,
            });
        }
        Ok(())
    }
}

/// A coordinate of the state space: a field value or one gradient component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    Field(usize),
    Grad(usize, usize),
}

impl Var {
    /// All state coordinates of a layout, fields first.
    pub fn all(layout: &Layout) -> Vec<Var> {
        let mut v: Vec<Var> = (0..layout.omega()).map(Var::Field).collect();
        for a in 0..layout.omega() {
            for j in 0..layout.n() {
                v.push(Var::Grad(a, j));
            }
        }
        v
    }
}

impl std::fmt::Display for Var {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Var::Field(a) => write!(f, "z[{a}]"),
            Var::Grad(a, j) => write!(f, "z[{a}],{j}"),
        }
    }
}

/// Field values and their first spatial gradients at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePoint {
    layout: Layout,
    z: Vec<f64>,
    /// Row-major `ω × n`.
    grad: Vec<f64>,
}

impl StatePoint {
    pub fn new(layout: Layout, z: Vec<f64>, grad: Vec<f64>) -> Result<Self> {
        if z.len() != layout.omega() || grad.len() != layout.omega() * layout.n() {
            return Err(Error::Layout(format!(
                "state expects {} values and {} gradient entries, got {} and {}",
                layout.omega(),
                layout.omega() * layout.n(),
                z.len(),
                grad.len()
            )));
        }
        if z.iter().chain(grad.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Layout("state entries must be finite".into()));
        }
        Ok(StatePoint { layout, z, grad })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn z(&self, alpha: usize) -> f64 {
        self.z[alpha]
    }

    pub fn grad(&self, alpha: usize, j: usize) -> f64 {
        self.grad[alpha * self.layout.n() + j]
    }

    pub fn z_values(&self) -> &[f64] {
        &self.z
    }

    pub fn grad_values(&self) -> &[f64] {
        &self.grad
    }

    pub fn get(&self, var: Var) -> f64 {
        match var {
            Var::Field(a) => self.z(a),
            Var::Grad(a, j) => self.grad(a, j),
        }
    }

    /// Copy with one coordinate replaced.
    pub fn with(&self, var: Var, value: f64) -> StatePoint {
        let mut out = self.clone();
        match var {
            Var::Field(a) => out.z[a] = value,
            Var::Grad(a, j) => out.grad[a * self.layout.n() + j] = value,
        }
        out
    }
}

/// Prescribed kinematic data at the point: density, velocity, time, position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub rho: f64,
    pub v: Vec<f64>,
    pub t: f64,
    pub x: Vec<f64>,
}

impl Context {
    pub fn new(rho: f64, v: Vec<f64>, t: f64, x: Vec<f64>) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Layout(format!("density must be positive, got {rho}")));
        }
        if v.len() != x.len() {
            return Err(Error::Layout("velocity and position lengths differ".into()));
        }
        if v.iter().chain(x.iter()).any(|c| !c.is_finite()) || !t.is_finite() {
            return Err(Error::Layout("context entries must be finite".into()));
        }
        Ok(Context { rho, v, t, x })
    }

    /// Body at rest at the origin, `t = 0`.
    pub fn at_rest(rho: f64, n: usize) -> Result<Self> {
        Context::new(rho, vec![0.0; n], 0.0, vec![0.0; n])
    }

    pub(crate) fn check(&self, layout: &Layout) -> Result<()> {
        if self.v.len() != layout.n() {
            return Err(Error::Layout(format!(
                "context has {} velocity components, layout needs {}",
                self.v.len(),
                layout.n()
            )));
        }
        Ok(())
    }
}

/// Time, mixed and second spatial derivatives of every field at one point.
///
/// The same type serves both the balance-compatible space and its
/// entropy-admissible subset; membership in the latter is a predicate, see
/// [`crate::classify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HigherVector {
    layout: Layout,
    pub dt: Vec<f64>,
    /// Row-major `ω × n`.
    pub dgrad: Vec<f64>,
    /// `ω × n(n+1)/2`, upper triangle per field.
    pub hess: Vec<f64>,
}

impl HigherVector {
    pub fn new(layout: Layout, dt: Vec<f64>, dgrad: Vec<f64>, hess: Vec<f64>) -> Result<Self> {
        let o = layout.omega();
        if dt.len() != o || dgrad.len() != o * layout.n() || hess.len() != o * layout.sym_dim() {
            return Err(Error::Layout(format!(
                "higher vector blocks ({}, {}, {}) do not match ({}, {}, {})",
                dt.len(),
                dgrad.len(),
                hess.len(),
                o,
                o * layout.n(),
                o * layout.sym_dim()
            )));
        }
        Ok(HigherVector {
            layout,
            dt,
            dgrad,
            hess,
        })
    }

    pub fn zeros(layout: Layout) -> Self {
        HigherVector {
            layout,
            dt: vec![0.0; layout.omega()],
            dgrad: vec![0.0; layout.omega() * layout.n()],
            hess: vec![0.0; layout.omega() * layout.sym_dim()],
        }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Flat coordinates in `(dt | dgrad | hess)` order.
    pub fn pack(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.layout.higher_dim());
        flat.extend_from_slice(&self.dt);
        flat.extend_from_slice(&self.dgrad);
        flat.extend_from_slice(&self.hess);
        flat
    }

    pub fn unpack(flat: &[f64], layout: Layout) -> Result<Self> {
        if flat.len() != layout.higher_dim() {
            return Err(Error::Layout(format!(
                "flat vector has {} entries, layout needs {}",
                flat.len(),
                layout.higher_dim()
            )));
        }
        let a = layout.omega();
        let b = a + a * layout.n();
        Ok(HigherVector {
            layout,
            dt: flat[..a].to_vec(),
            dgrad: flat[a..b].to_vec(),
            hess: flat[b..].to_vec(),
        })
    }

    pub fn hess_entry(&self, alpha: usize, j: usize, k: usize) -> f64 {
        self.hess[alpha * self.layout.sym_dim() + self.layout.sym_index(j, k)]
    }

    /// The full symmetric `n × n` second-derivative matrix of field `alpha`.
    pub fn hess_full(&self, alpha: usize) -> Result<Vec<Vec<f64>>> {
        self.layout.check_alpha(alpha)?;
        let n = self.layout.n();
        let mut m = vec![vec![0.0; n]; n];
        for (j, k) in self.layout.sym_pairs() {
            let v = self.hess_entry(alpha, j, k);
            m[j][k] = v;
            m[k][j] = v;
        }
        Ok(m)
    }

    /// Membership in the equilibrium subspace: only second spatial
    /// derivatives may be nonzero.
    pub fn is_equilibrium_vector(&self, tol: f64) -> bool {
        self.dt
            .iter()
            .chain(self.dgrad.iter())
            .all(|v| v.abs() <= tol)
    }

    pub fn norm_inf(&self) -> f64 {
        self.dt
            .iter()
            .chain(&self.dgrad)
            .chain(&self.hess)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
