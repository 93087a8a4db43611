//! Built-in heat-conduction models with closed-form ground truth.
//!
//! Units are SI by convention but never checked.
//!
//! # Fourier rigid conductor
//!
//! One field, the absolute temperature `ϑ`. Energy density `ρcϑ`, heat flux
//! `q_k = −κ(ϑ) ϑ,k`, entropy `s = (1+ε) c ln ϑ`, entropy flux `J_k = q_k/ϑ`.
//! With `ε = 0` the entropy covector is exactly `B = Aᵀ/ϑ`, so the multiplier
//! is `Λ = 1/ϑ` and the production on every balance solution is
//! `κ|∇ϑ|²/ϑ²`. Any `ε ≠ 0` breaks the Gibbs relation `∂s/∂e = 1/ϑ` and
//! pushes `B` out of the row space of `A`.
//!
//! # Cattaneo conductor
//!
//! Fields `(ϑ, q_1..q_n)`. Balances
//!
//! ```text
//! ρc ϑ,t + q_k,k = 0
//! τ q_i,t + (κϑ),i = −q_i
//! ```
//!
//! with entropy `s = c ln ϑ − τ q²/(2ρκϑ²)` and `J_k = q_k/ϑ`. The balance
//! matrix has its time-derivative block `diag(ρc, τ, …, τ)`, and the entropy
//! covector lives entirely in that block, so `B` lies in the row space of `A`
//! for any `τ > 0` (and for `τ = 0`, where the flux rows of `A` and the flux
//! components of `B` both vanish). Eliminating gives
//!
//! ```text
//! Λ_ϑ   = 1/ϑ + τ q²/(ρcκϑ³)
//! Λ_q_i = −q_i/(κϑ²)
//! σ     = q²/(κϑ²) − τ q² (∇·q)/(ρcκϑ³)
//! ```
//!
//! The second term comes from the temperature dependence of the
//! nonequilibrium entropy; it vanishes for divergence-free flux and for
//! `τ = 0`, where the model reduces to Fourier at `q = −κ∇ϑ`.

use serde::{Deserialize, Serialize};

use crate::constitutive::ConstitutiveModel;
use crate::error::{Error, Result};
use crate::kernel::{Context, Layout, StatePoint, Var};

/// `κ(ϑ) = k0 + k1·ϑ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conductivity {
    pub k0: f64,
    pub k1: f64,
}

impl Conductivity {
    pub fn constant(k: f64) -> Self {
        Conductivity { k0: k, k1: 0.0 }
    }

    pub fn at(&self, theta: f64) -> f64 {
        self.k0 + self.k1 * theta
    }

    pub fn slope(&self) -> f64 {
        self.k1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierParams {
    pub rho: f64,
    pub c: f64,
    pub kappa: Conductivity,
    /// Gibbs mismatch: `s' = (1+ε) c/ϑ`.
    pub epsilon: f64,
}

impl Default for FourierParams {
    fn default() -> Self {
        FourierParams {
            rho: 1.0,
            c: 1.0,
            kappa: Conductivity::constant(1.0),
            epsilon: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CattaneoParams {
    pub rho: f64,
    pub c: f64,
    pub kappa: f64,
    pub tau: f64,
}

impl Default for CattaneoParams {
    fn default() -> Self {
        CattaneoParams {
            rho: 1.0,
            c: 1.0,
            kappa: 1.0,
            tau: 1.0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must be positive, got {v}")))
    }
}

fn check_temperature(state: &StatePoint) -> Result<()> {
    let theta = state.z(0);
    if theta > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("temperature {theta} is not positive")))
    }
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct Fourier {
    name: String,
    params: FourierParams,
    layout: Layout,
}

/// Fourier rigid conductor in `n` dimensions.
pub fn fourier(params: FourierParams, n: usize) -> Result<Fourier> {
    positive("rho", params.rho)?;
    positive("c", params.c)?;
    if !params.kappa.k0.is_finite() || !params.kappa.k1.is_finite() || !params.epsilon.is_finite()
    {
        return Err(Error::InvalidParams("conductivity and epsilon must be finite".into()));
    }
    Ok(Fourier {
        name: "fourier".into(),
        params,
        layout: Layout::new(1, n)?,
    })
}

impl Fourier {
    pub fn params(&self) -> &FourierParams {
        &self.params
    }

    /// Body at rest with the model's density.
    pub fn context(&self) -> Context {
        Context::at_rest(self.params.rho, self.layout.n()).expect("validated density")
    }

    pub fn state(&self, theta: f64, grad: &[f64]) -> Result<StatePoint> {
        StatePoint::new(self.layout, vec![theta], grad.to_vec())
    }

    fn named(mut self, name: &str) -> Self {
        self.name = name.into();
        self
    }
}

impl ConstitutiveModel for Fourier {
    fn name(&self) -> &str {
        &self.name
    }

    fn layout(&self) -> Layout {
        self.layout
    }

    fn check_domain(&self, state: &StatePoint, _ctx: &Context) -> Result<()> {
        check_temperature(state)
    }

    fn density(&self, _beta: usize, state: &StatePoint, ctx: &Context) -> f64 {
        ctx.rho * self.params.c * state.z(0)
    }

    fn flux(&self, _beta: usize, k: usize, state: &StatePoint, _ctx: &Context) -> f64 {
        -self.params.kappa.at(state.z(0)) * state.grad(0, k)
    }

    fn production(&self, _beta: usize, _state: &StatePoint, _ctx: &Context) -> f64 {
        0.0
    }

    fn entropy(&self, state: &StatePoint, _ctx: &Context) -> f64 {
        (1.0 + self.params.epsilon) * self.params.c * state.z(0).ln()
    }

    fn entropy_flux(&self, k: usize, state: &StatePoint, ctx: &Context) -> f64 {
        self.flux(0, k, state, ctx) / state.z(0)
    }

    fn d_density(&self, _beta: usize, var: Var, _state: &StatePoint, ctx: &Context) -> f64 {
        match var {
            Var::Field(_) => ctx.rho * self.params.c,
            Var::Grad(..) => 0.0,
        }
    }

    fn d_flux(&self, _beta: usize, k: usize, var: Var, state: &StatePoint, _ctx: &Context) -> f64 {
        let theta = state.z(0);
        match var {
            Var::Field(_) => -self.params.kappa.slope() * state.grad(0, k),
            Var::Grad(_, j) => -self.params.kappa.at(theta) * delta(j, k),
        }
    }

    fn d_entropy(&self, var: Var, state: &StatePoint, _ctx: &Context) -> f64 {
        match var {
            Var::Field(_) => (1.0 + self.params.epsilon) * self.params.c / state.z(0),
            Var::Grad(..) => 0.0,
        }
    }

    fn d_entropy_flux(&self, k: usize, var: Var, state: &StatePoint, _ctx: &Context) -> f64 {
        let theta = state.z(0);
        let kappa = self.params.kappa.at(theta);
        let g = state.grad(0, k);
        match var {
            Var::Field(_) => -self.params.kappa.slope() * g / theta + kappa * g / (theta * theta),
            Var::Grad(_, j) => -kappa * delta(j, k) / theta,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cattaneo {
    params: CattaneoParams,
    layout: Layout,
}

/// Cattaneo (relaxed-flux) conductor in `n` dimensions; fields `(ϑ, q)`.
pub fn cattaneo(params: CattaneoParams, n: usize) -> Result<Cattaneo> {
    positive("rho", params.rho)?;
    positive("c", params.c)?;
    positive("kappa", params.kappa)?;
    if !(params.tau >= 0.0 && params.tau.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "tau must be non-negative, got {}",
            params.tau
        )));
    }
    Ok(Cattaneo {
        params,
        layout: Layout::new(1 + n, n)?,
    })
}

impl Cattaneo {
    pub fn params(&self) -> &CattaneoParams {
        &self.params
    }

    pub fn context(&self) -> Context {
        Context::at_rest(self.params.rho, self.layout.n()).expect("validated density")
    }

    /// `grad` is row-major over fields `(ϑ, q_1..q_n)`.
    pub fn state(&self, theta: f64, q: &[f64], grad: &[f64]) -> Result<StatePoint> {
        let mut z = vec![theta];
        z.extend_from_slice(q);
        StatePoint::new(self.layout, z, grad.to_vec())
    }

    fn q_squared(&self, state: &StatePoint) -> f64 {
        (1..self.layout.omega()).map(|a| state.z(a).powi(2)).sum()
    }
}

impl ConstitutiveModel for Cattaneo {
    fn name(&self) -> &str {
        "cattaneo"
    }

    fn layout(&self) -> Layout {
        self.layout
    }

    fn check_domain(&self, state: &StatePoint, _ctx: &Context) -> Result<()> {
        check_temperature(state)
    }

    fn density(&self, beta: usize, state: &StatePoint, ctx: &Context) -> f64 {
        if beta == 0 {
            ctx.rho * self.params.c * state.z(0)
        } else {
            self.params.tau * state.z(beta)
        }
    }

    fn flux(&self, beta: usize, k: usize, state: &StatePoint, _ctx: &Context) -> f64 {
        if beta == 0 {
            state.z(1 + k)
        } else {
            self.params.kappa * state.z(0) * delta(beta - 1, k)
        }
    }

    fn production(&self, beta: usize, state: &StatePoint, _ctx: &Context) -> f64 {
        if beta == 0 {
            0.0
        } else {
            -state.z(beta)
        }
    }

    fn entropy(&self, state: &StatePoint, ctx: &Context) -> f64 {
        let p = &self.params;
        let theta = state.z(0);
        p.c * theta.ln() - p.tau * self.q_squared(state) / (2.0 * ctx.rho * p.kappa * theta * theta)
    }

    fn entropy_flux(&self, k: usize, state: &StatePoint, _ctx: &Context) -> f64 {
        state.z(1 + k) / state.z(0)
    }

    fn d_density(&self, beta: usize, var: Var, _state: &StatePoint, ctx: &Context) -> f64 {
        match var {
            Var::Field(a) if a == beta => {
                if beta == 0 {
                    ctx.rho * self.params.c
                } else {
                    self.params.tau
                }
            }
            _ => 0.0,
        }
    }

    fn d_flux(&self, beta: usize, k: usize, var: Var, _state: &StatePoint, _ctx: &Context) -> f64 {
        match var {
            Var::Field(a) if beta == 0 => delta(a, 1 + k),
            Var::Field(0) => self.params.kappa * delta(beta - 1, k),
            _ => 0.0,
        }
    }

    fn d_entropy(&self, var: Var, state: &StatePoint, ctx: &Context) -> f64 {
        let p = &self.params;
        let theta = state.z(0);
        match var {
            Var::Field(0) => {
                p.c / theta + p.tau * self.q_squared(state) / (ctx.rho * p.kappa * theta.powi(3))
            }
            Var::Field(a) => -p.tau * state.z(a) / (ctx.rho * p.kappa * theta * theta),
            Var::Grad(..) => 0.0,
        }
    }

    fn d_entropy_flux(&self, k: usize, var: Var, state: &StatePoint, _ctx: &Context) -> f64 {
        let theta = state.z(0);
        match var {
            Var::Field(0) => -state.z(1 + k) / (theta * theta),
            Var::Field(a) => delta(a, 1 + k) / theta,
            Var::Grad(..) => 0.0,
        }
    }
}

/// Closed-form `(Λ, σ_res)` for the Fourier model with matched Gibbs relation.
pub fn expected_liu(params: &FourierParams, state: &StatePoint) -> Result<(f64, f64)> {
    if params.epsilon != 0.0 {
        return Err(Error::Precondition(format!(
            "closed form needs epsilon = 0, got {}",
            params.epsilon
        )));
    }
    check_temperature(state)?;
    let theta = state.z(0);
    let g2: f64 = state.grad_values().iter().map(|g| g * g).sum();
    Ok((1.0 / theta, params.kappa.at(theta) * g2 / (theta * theta)))
}

/// Closed-form multipliers `(Λ_ϑ, Λ_q…)` and production for the Cattaneo model.
pub fn cattaneo_expected_liu(
    params: &CattaneoParams,
    state: &StatePoint,
) -> Result<(Vec<f64>, f64)> {
    check_temperature(state)?;
    let n = state.layout().n();
    let theta = state.z(0);
    let q: Vec<f64> = (0..n).map(|i| state.z(1 + i)).collect();
    let q2: f64 = q.iter().map(|v| v * v).sum();
    let div_q: f64 = (0..n).map(|i| state.grad(1 + i, i)).sum();
    let CattaneoParams { rho, c, kappa, tau } = *params;
    let mut lambda = vec![1.0 / theta + tau * q2 / (rho * c * kappa * theta.powi(3))];
    lambda.extend(q.iter().map(|qi| -qi / (kappa * theta * theta)));
    let sigma = q2 / (kappa * theta * theta) - tau * q2 * div_q / (rho * c * kappa * theta.powi(3));
    Ok((lambda, sigma))
}

/// Model names understood by [`build`].
pub const MODEL_NAMES: [&str; 4] = [
    "fourier",
    "cattaneo",
    "fourier-negkappa",
    "fourier-gibbs-mismatch",
];

/// Parameter table for [`build`]; fields a model does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub rho: f64,
    pub c: f64,
    pub kappa: f64,
    /// `dκ/dϑ` for the Fourier family.
    pub kappa_slope: f64,
    pub epsilon: Option<f64>,
    pub tau: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            rho: 1.0,
            c: 1.0,
            kappa: 1.0,
            kappa_slope: 0.0,
            epsilon: None,
            tau: 1.0,
        }
    }
}

/// Instantiates a built-in model by name.
///
/// `fourier-negkappa` uses `−|κ|`; `fourier-gibbs-mismatch` defaults to
/// `ε = 0.2` when no epsilon is given.
pub fn build(name: &str, p: &ModelParams, n: usize) -> Result<Box<dyn ConstitutiveModel>> {
    let fp = |kappa: f64, slope: f64, eps: f64| FourierParams {
        rho: p.rho,
        c: p.c,
        kappa: Conductivity { k0: kappa, k1: slope },
        epsilon: eps,
    };
    match name {
        "fourier" => Ok(Box::new(fourier(
            fp(p.kappa, p.kappa_slope, p.epsilon.unwrap_or(0.0)),
            n,
        )?)),
        "fourier-negkappa" => Ok(Box::new(
            fourier(fp(-p.kappa.abs(), -p.kappa_slope.abs(), p.epsilon.unwrap_or(0.0)), n)?
                .named(name),
        )),
        "fourier-gibbs-mismatch" => Ok(Box::new(
            fourier(fp(p.kappa, p.kappa_slope, p.epsilon.unwrap_or(0.2)), n)?.named(name),
        )),
        "cattaneo" => Ok(Box::new(cattaneo(
            CattaneoParams {
                rho: p.rho,
                c: p.c,
                kappa: p.kappa,
                tau: p.tau,
            },
            n,
        )?)),
        other => Err(Error::Config(format!(
            "unknown model {other:?}; expected one of {}",
            MODEL_NAMES.join(", ")
        ))),
    }
}
