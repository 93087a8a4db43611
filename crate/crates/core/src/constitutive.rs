//! Constitutive models and the pointwise linear systems they induce.
//!
//! At a fixed state the balance laws become `A·y = C` and the entropy
//! inequality becomes `B·y ≥ D`, both linear in the higher-derivative vector
//! `y`. Supplies are taken to be zero, so the entropy supply term is absent.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{Context, HigherVector, Layout, StatePoint, Var};

/// Relative step used when a model does not supply an analytic partial.
pub const DEFAULT_FD_REL_STEP: f64 = 1e-6;

/// Central difference of `f` along one state coordinate.
pub fn central_difference<F>(state: &StatePoint, var: Var, h: f64, f: F) -> f64
where
    F: Fn(&StatePoint) -> f64,
{
    let x = state.get(var);
    let plus = state.with(var, x + h);
    let minus = state.with(var, x - h);
    (f(&plus) - f(&minus)) / (2.0 * h)
}

fn default_step<M: ConstitutiveModel + ?Sized>(model: &M, state: &StatePoint, var: Var) -> f64 {
    model.fd_rel_step() * state.get(var).abs().max(1.0)
}

/// A material described by densities `U_β`, fluxes `Φ^β_k`, productions
/// `r_β`, specific entropy `s` and entropy flux `J_k`, all functions of the
/// state point (fields and gradients) and the kinematic context.
///
/// Partials default to central finite differences; models override them
/// with analytic expressions where available. Every method must be a pure
/// function of its arguments.
pub trait ConstitutiveModel: Send + Sync {
    fn name(&self) -> &str;
    fn layout(&self) -> Layout;

    /// Rejects states outside the model's domain (e.g. non-positive temperature).
    fn check_domain(&self, _state: &StatePoint, _ctx: &Context) -> Result<()> {
        Ok(())
    }

    fn density(&self, beta: usize, state: &StatePoint, ctx: &Context) -> f64;
    fn flux(&self, beta: usize, k: usize, state: &StatePoint, ctx: &Context) -> f64;
    fn production(&self, beta: usize, state: &StatePoint, ctx: &Context) -> f64;
    fn entropy(&self, state: &StatePoint, ctx: &Context) -> f64;
    fn entropy_flux(&self, k: usize, state: &StatePoint, ctx: &Context) -> f64;

    fn fd_rel_step(&self) -> f64 {
        DEFAULT_FD_REL_STEP
    }

    fn d_density(&self, beta: usize, var: Var, state: &StatePoint, ctx: &Context) -> f64 {
        let h = default_step(self, state, var);
        central_difference(state, var, h, |s| self.density(beta, s, ctx))
    }

    fn d_flux(&self, beta: usize, k: usize, var: Var, state: &StatePoint, ctx: &Context) -> f64 {
        let h = default_step(self, state, var);
        central_difference(state, var, h, |s| self.flux(beta, k, s, ctx))
    }

    fn d_entropy(&self, var: Var, state: &StatePoint, ctx: &Context) -> f64 {
        let h = default_step(self, state, var);
        central_difference(state, var, h, |s| self.entropy(s, ctx))
    }

    fn d_entropy_flux(&self, k: usize, var: Var, state: &StatePoint, ctx: &Context) -> f64 {
        let h = default_step(self, state, var);
        central_difference(state, var, h, |s| self.entropy_flux(k, s, ctx))
    }
}

impl<M: ConstitutiveModel + ?Sized> ConstitutiveModel for Box<M> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn layout(&self) -> Layout {
        (**self).layout()
    }
    fn check_domain(&self, state: &StatePoint, ctx: &Context) -> Result<()> {
        (**self).check_domain(state, ctx)
    }
    fn density(&self, beta: usize, state: &StatePoint, ctx: &Context) -> f64 {
        (**self).density(beta, state, ctx)
    }
    fn flux(&self, beta: usize, k: usize, state: &StatePoint, ctx: &Context) -> f64 {
        (**self).flux(beta, k, state, ctx)
    }
    fn production(&self, beta: usize, state: &StatePoint, ctx: &Context) -> f64 {
        (**self).production(beta, state, ctx)
    }
    fn entropy(&self, state: &StatePoint, ctx: &Context) -> f64 {
        (**self).entropy(state, ctx)
    }
    fn entropy_flux(&self, k: usize, state: &StatePoint, ctx: &Context) -> f64 {
        (**self).entropy_flux(k, state, ctx)
    }
    fn fd_rel_step(&self) -> f64 {
        (**self).fd_rel_step()
    }
    fn d_density(&self, beta: usize, var: Var, state: &StatePoint, ctx: &Context) -> f64 {
        (**self).d_density(beta, var, state, ctx)
    }
    fn d_flux(&self, beta: usize, k: usize, var: Var, state: &StatePoint, ctx: &Context) -> f64 {
        (**self).d_flux(beta, k, var, state, ctx)
    }
    fn d_entropy(&self, var: Var, state: &StatePoint, ctx: &Context) -> f64 {
        (**self).d_entropy(var, state, ctx)
    }
    fn d_entropy_flux(&self, k: usize, var: Var, state: &StatePoint, ctx: &Context) -> f64 {
        (**self).d_entropy_flux(k, var, state, ctx)
    }
}

/// Wraps a model and replaces all of its partials with central differences.
pub struct NumericPartials<M> {
    pub inner: M,
    pub rel_step: f64,
}

impl<M: ConstitutiveModel> NumericPartials<M> {
    pub fn new(inner: M) -> Self {
        NumericPartials {
            inner,
            rel_step: DEFAULT_FD_REL_STEP,
        }
    }
}

impl<M: ConstitutiveModel> ConstitutiveModel for NumericPartials<M> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn layout(&self) -> Layout {
        self.inner.layout()
    }
    fn check_domain(&self, state: &StatePoint, ctx: &Context) -> Result<()> {
        self.inner.check_domain(state, ctx)
    }
    fn density(&self, beta: usize, state: &StatePoint, ctx: &Context) -> f64 {
        self.inner.density(beta, state, ctx)
    }
    fn flux(&self, beta: usize, k: usize, state: &StatePoint, ctx: &Context) -> f64 {
        self.inner.flux(beta, k, state, ctx)
    }
    fn production(&self, beta: usize, state: &StatePoint, ctx: &Context) -> f64 {
        self.inner.production(beta, state, ctx)
    }
    fn entropy(&self, state: &StatePoint, ctx: &Context) -> f64 {
        self.inner.entropy(state, ctx)
    }
    fn entropy_flux(&self, k: usize, state: &StatePoint, ctx: &Context) -> f64 {
        self.inner.entropy_flux(k, state, ctx)
    }
    fn fd_rel_step(&self) -> f64 {
        self.rel_step
    }
}

/// Pointwise balance laws `A·y = C`.
///
/// Normally `A` has one row per field; pinned coordinates (see
/// [`BalanceSystem::with_fixed`]) append unit rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceSystem {
    pub layout: Layout,
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl BalanceSystem {
    pub fn new(layout: Layout, a: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        if a.ncols() != layout.higher_dim() || a.nrows() != c.len() {
            return Err(Error::Layout(format!(
                "balance matrix {}x{} with rhs {} does not fit higher dimension {}",
                a.nrows(),
                a.ncols(),
                c.len(),
                layout.higher_dim()
            )));
        }
        Ok(BalanceSystem { layout, a, c })
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    /// `A·y − C`.
    pub fn residual(&self, y: &HigherVector) -> DVector<f64> {
        self.residual_flat(&DVector::from_vec(y.pack()))
    }

    pub fn residual_flat(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.a * y - &self.c
    }

    /// Appends constraints `y[index] = value` for each pair.
    pub fn with_fixed(&self, fixed: &[(usize, f64)]) -> Result<BalanceSystem> {
        let h = self.layout.higher_dim();
        if let Some(&(i, _)) = fixed.iter().find(|(i, _)| *i >= h) {
            return Err(Error::Index {
                what: "pinned coordinate",
                index: i,
                limit: h,
            });
        }
        let m = self.rows();
        let mut a = DMatrix::zeros(m + fixed.len(), h);
        a.rows_mut(0, m).copy_from(&self.a);
        let mut c = DVector::zeros(m + fixed.len());
        c.rows_mut(0, m).copy_from(&self.c);
        for (r, &(i, v)) in fixed.iter().enumerate() {
            a[(m + r, i)] = 1.0;
            c[m + r] = v;
        }
        Ok(BalanceSystem {
            layout: self.layout,
            a,
            c,
        })
    }
}

/// Pointwise entropy inequality `B·y ≥ D`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropySystem {
    pub layout: Layout,
    pub b: DVector<f64>,
    pub d: f64,
}

impl EntropySystem {
    pub fn new(layout: Layout, b: DVector<f64>, d: f64) -> Result<Self> {
        if b.len() != layout.higher_dim() {
            return Err(Error::Layout(format!(
                "entropy covector has {} entries, layout needs {}",
                b.len(),
                layout.higher_dim()
            )));
        }
        Ok(EntropySystem { layout, b, d })
    }

    /// `σ = B·y − D`.
    pub fn production_flat(&self, y: &DVector<f64>) -> f64 {
        self.b.dot(y) - self.d
    }
}

fn finite(v: f64, row: impl FnOnce() -> String, term: impl FnOnce() -> String) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation {
            row: row(),
            term: term(),
        })
    }
}

fn check_inputs<M: ConstitutiveModel + ?Sized>(
    model: &M,
    state: &StatePoint,
    ctx: &Context,
) -> Result<Layout> {
    let layout = model.layout();
    if state.layout() != layout {
        return Err(Error::Layout(format!(
            "state layout {:?} differs from model layout {:?}",
            state.layout(),
            layout
        )));
    }
    ctx.check(&layout)?;
    model.check_domain(state, ctx)?;
    Ok(layout)
}

/// Assembles `A` and `C` of the balance laws at one state.
///
/// Columns of the hess block collect the coefficients of both `z_α,jk` and
/// `z_α,kj`, since the two are the same unknown.
pub fn assemble_balance<M: ConstitutiveModel + ?Sized>(
    model: &M,
    state: &StatePoint,
    ctx: &Context,
) -> Result<BalanceSystem> {
    let layout = check_inputs(model, state, ctx)?;
    let (o, n) = (layout.omega(), layout.n());
    let mut a = DMatrix::zeros(o, layout.higher_dim());
    let mut c = DVector::zeros(o);

    for beta in 0..o {
        let row = || format!("balance row {beta}");
        let mut rhs = finite(model.production(beta, state, ctx), row, || "r".into())?;
        for alpha in 0..o {
            let du_dz = finite(
                model.d_density(beta, Var::Field(alpha), state, ctx),
                row,
                || format!("dU/dz[{alpha}]"),
            )?;
            a[(beta, layout.dt_offset(alpha))] = du_dz;

            let mut du_dgrad = vec![0.0; n];
            for j in 0..n {
                du_dgrad[j] = finite(
                    model.d_density(beta, Var::Grad(alpha, j), state, ctx),
                    row,
                    || format!("dU/dz[{alpha}],{j}"),
                )?;
                a[(beta, layout.dgrad_offset(alpha, j))] = du_dgrad[j];
            }

            // coefficient of z_α,kj: dU/dz_α,k v_j + dΦ_j/dz_α,k
            for k in 0..n {
                for j in 0..n {
                    let dphi = finite(
                        model.d_flux(beta, j, Var::Grad(alpha, k), state, ctx),
                        row,
                        || format!("dPhi_{j}/dz[{alpha}],{k}"),
                    )?;
                    a[(beta, layout.hess_offset(alpha, k, j))] += du_dgrad[k] * ctx.v[j] + dphi;
                }
            }

            for j in 0..n {
                let dphi_dz = finite(
                    model.d_flux(beta, j, Var::Field(alpha), state, ctx),
                    row,
                    || format!("dPhi_{j}/dz[{alpha}]"),
                )?;
                let g = state.grad(alpha, j);
                rhs -= du_dz * g * ctx.v[j] + dphi_dz * g;
            }
        }
        c[beta] = rhs;
    }
    BalanceSystem::new(layout, a, c)
}

/// Assembles `B` and `D` of the entropy inequality at one state.
pub fn assemble_entropy<M: ConstitutiveModel + ?Sized>(
    model: &M,
    state: &StatePoint,
    ctx: &Context,
) -> Result<EntropySystem> {
    let layout = check_inputs(model, state, ctx)?;
    let (o, n) = (layout.omega(), layout.n());
    let rho = ctx.rho;
    let row = || "entropy inequality".to_string();
    let mut b = DVector::zeros(layout.higher_dim());
    let mut d = 0.0;

    for alpha in 0..o {
        let ds_dz = finite(model.d_entropy(Var::Field(alpha), state, ctx), row, || {
            format!("ds/dz[{alpha}]")
        })?;
        b[layout.dt_offset(alpha)] = rho * ds_dz;

        let mut ds_dgrad = vec![0.0; n];
        for j in 0..n {
            ds_dgrad[j] = finite(
                model.d_entropy(Var::Grad(alpha, j), state, ctx),
                row,
                || format!("ds/dz[{alpha}],{j}"),
            )?;
            b[layout.dgrad_offset(alpha, j)] = rho * ds_dgrad[j];
        }

        for k in 0..n {
            for i in 0..n {
                let dj = finite(
                    model.d_entropy_flux(i, Var::Grad(alpha, k), state, ctx),
                    row,
                    || format!("dJ_{i}/dz[{alpha}],{k}"),
                )?;
                b[layout.hess_offset(alpha, k, i)] += rho * ds_dgrad[k] * ctx.v[i] + dj;
            }
        }

        for i in 0..n {
            let dj_dz = finite(
                model.d_entropy_flux(i, Var::Field(alpha), state, ctx),
                row,
                || format!("dJ_{i}/dz[{alpha}]"),
            )?;
            let g = state.grad(alpha, i);
            d -= rho * ds_dz * g * ctx.v[i] + dj_dz * g;
        }
    }
    EntropySystem::new(layout, b, d)
}

/// Outcome of comparing declared partials against central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct FdCheck {
    /// `max |analytic − fd| / max(1, |analytic|)` over every partial.
    pub max_discrepancy: f64,
    pub worst_term: String,
}

/// Compares every declared partial of `model` with a central difference of
/// step `h` around `state`.
pub fn fd_check<M: ConstitutiveModel + ?Sized>(
    model: &M,
    state: &StatePoint,
    ctx: &Context,
    h: f64,
) -> Result<FdCheck> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Precondition(format!("step h = {h} must be positive")));
    }
    let layout = check_inputs(model, state, ctx)?;
    let vars = Var::all(&layout);
    for &var in &vars {
        let x = state.get(var);
        for probe in [state.with(var, x + h), state.with(var, x - h)] {
            model
                .check_domain(&probe, ctx)
                .map_err(|e| Error::Probe(format!("{var} ± {h}: {e}")))?;
        }
    }

    let mut report = FdCheck {
        max_discrepancy: 0.0,
        worst_term: String::new(),
    };
    let mut consider = |analytic: f64, numeric: f64, term: &dyn Fn() -> String| {
        let disc = (analytic - numeric).abs() / analytic.abs().max(1.0);
        if !(disc <= report.max_discrepancy) {
            report.max_discrepancy = disc;
            report.worst_term = term();
        }
    };

    let (o, n) = (layout.omega(), layout.n());
    for &var in &vars {
        for beta in 0..o {
            consider(
                model.d_density(beta, var, state, ctx),
                central_difference(state, var, h, |s| model.density(beta, s, ctx)),
                &|| format!("dU_{beta}/d{var}"),
            );
            for k in 0..n {
                consider(
                    model.d_flux(beta, k, var, state, ctx),
                    central_difference(state, var, h, |s| model.flux(beta, k, s, ctx)),
                    &|| format!("dPhi^{beta}_{k}/d{var}"),
                );
            }
        }
        consider(
            model.d_entropy(var, state, ctx),
            central_difference(state, var, h, |s| model.entropy(s, ctx)),
            &|| format!("ds/d{var}"),
        );
        for k in 0..n {
            consider(
                model.d_entropy_flux(k, var, state, ctx),
                central_difference(state, var, h, |s| model.entropy_flux(k, s, ctx)),
                &|| format!("dJ_{k}/d{var}"),
            );
        }
    }
    Ok(report)
}
