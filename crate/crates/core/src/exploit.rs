//! The dichotomy engine.
//!
//! At a fixed state the balance laws pin down only an affine subspace
//! `y_p + span(N)` of higher-derivative vectors. The entropy production
//! `σ(y) = B·y − D` restricted to that subspace is either constant (when `B`
//! lies in the row space of `A`) or unbounded in both directions. That gives
//! four outcomes:
//!
//! | σ on the solution set | verdict                      |
//! |-----------------------|------------------------------|
//! | constant `> 0`        | admissible, non-equilibrium  |
//! | constant `= 0`        | admissible, equilibrium      |
//! | constant `< 0`        | inadmissible (nothing allowed) |
//! | unbounded             | inadmissible (real and over-ideal vectors coexist) |
//!
//! In the unbounded case the engine builds a real vector and an over-ideal
//! vector on the same solution set and the convex combination of the two with
//! zero production, which is the object whose existence contradicts the
//! amended second law.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::classify::{ClassCounts, Tolerance, VectorClass};
use crate::constitutive::{assemble_balance, assemble_entropy, BalanceSystem, ConstitutiveModel, EntropySystem};
use crate::error::{Error, Result};
use crate::kernel::{Context, HigherVector, Layout, StatePoint};
use crate::par::{self, Execution};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Singular value decomposition by one-sided Jacobi rotations.
///
/// Rotating the columns of `A` (`m × h`) until they are mutually orthogonal
/// gives `A·V = W` with `V` a full `h × h` orthogonal matrix, so the columns
/// of `V` whose image vanishes span the kernel even when `A` is wide.
struct Decomposition {
    /// Normalized images `W_i / σ_i`; columns with `σ_i = 0` are left as is.
    u: DMatrix<f64>,
    /// Right singular vectors as rows.
    v_t: DMatrix<f64>,
    sv: DVector<f64>,
    threshold: f64,
}

const JACOBI_MAX_SWEEPS: usize = 100;

impl Decomposition {
    fn new(a: &DMatrix<f64>, rel_tol: f64) -> Self {
        let (m, h) = a.shape();
        let mut w = a.clone();
        let mut v = DMatrix::<f64>::identity(h, h);
        // columns below this squared norm are roundoff and are not rotated
        let negligible = (f64::EPSILON * a.norm()).powi(2);
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..h {
                for q in p + 1..h {
                    let (wp, wq) = (w.column(p), w.column(q));
                    let alpha = wp.norm_squared();
                    let beta = wq.norm_squared();
                    let gamma = wp.dot(&wq);
                    if alpha <= negligible
                        || beta <= negligible
                        || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt()
                    {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    rotate(&mut w, p, q, c, s);
                    rotate(&mut v, p, q, c, s);
                }
            }
            if !rotated {
                break;
            }
        }
        let sv = DVector::from_fn(h, |i, _| w.column(i).norm());
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let mut u = DMatrix::zeros(m, h);
        for i in 0..h {
            if sv[i] > 0.0 {
                u.set_column(i, &(w.column(i) / sv[i]));
            }
        }
        Decomposition {
            u,
            v_t: v.transpose(),
            threshold: rel_tol * smax,
            sv,
        }
    }

    fn in_range(&self, i: usize) -> bool {
        self.sv[i] > self.threshold && self.sv[i] > 0.0
    }

    fn rank(&self) -> usize {
        (0..self.sv.len()).filter(|&i| self.in_range(i)).count()
    }

    /// Minimum-norm least-squares solution of `A x = rhs`.
    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.v_t.ncols());
        for i in (0..self.sv.len()).filter(|&i| self.in_range(i)) {
            let coef = self.u.column(i).dot(rhs) / self.sv[i];
            x += self.v_t.row(i).transpose() * coef;
        }
        x
    }

    /// Minimum-norm least-squares solution of `Aᵀ x = rhs`.
    fn solve_transpose(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.u.nrows());
        for i in (0..self.sv.len()).filter(|&i| self.in_range(i)) {
            let coef = self.v_t.row(i).transpose().dot(rhs) / self.sv[i];
            x += self.u.column(i) * coef;
        }
        x
    }

    fn nullspace(&self) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = (0..self.sv.len())
            .filter(|&i| !self.in_range(i))
            .map(|i| self.v_t.row(i).transpose())
            .collect();
        if cols.is_empty() {
            DMatrix::zeros(self.v_t.ncols(), 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    }
}

fn rotate(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let (x, y) = (m[(r, p)], m[(r, q)]);
        m[(r, p)] = c * x - s * y;
        m[(r, q)] = s * x + c * y;
    }
}

/// All solutions of `A·y = C`: `y_p + N·c` for arbitrary `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSolutionSet {
    pub layout: Layout,
    /// Minimum-norm particular solution.
    pub particular: DVector<f64>,
    /// Orthonormal basis of the kernel of `A`, one column per free direction.
    pub nullspace: DMatrix<f64>,
    pub rank: usize,
}

impl AffineSolutionSet {
    pub fn nullity(&self) -> usize {
        self.nullspace.ncols()
    }

    pub fn point(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        &self.particular + &self.nullspace * coeffs
    }

    pub fn particular_vector(&self) -> HigherVector {
        to_vector(&self.particular, self.layout)
    }
}

fn to_vector(flat: &DVector<f64>, layout: Layout) -> HigherVector {
    HigherVector::unpack(flat.as_slice(), layout).expect("dimension fixed by layout")
}

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Precondition(format!("{what} has non-finite entries")))
    }
}

/// Solves the pointwise balance laws, returning the whole affine solution set.
///
/// Rank is the number of singular values above `rank_tol` times the largest.
/// Inconsistent systems are an error rather than being projected.
pub fn solve_balance(bs: &BalanceSystem, rank_tol: f64) -> Result<AffineSolutionSet> {
    if !(rank_tol > 0.0) {
        return Err(Error::Precondition(format!("rank_tol = {rank_tol} must be positive")));
    }
    check_finite(&bs.a, "balance matrix")?;
    let dec = Decomposition::new(&bs.a, rank_tol);
    let particular = dec.solve(&bs.c);
    let residual = (&bs.a * &particular - &bs.c).norm();
    let smax = dec.sv.iter().copied().fold(0.0, f64::max);
    let scale = 1.0 + bs.c.norm() + smax * particular.norm();
    if residual > rank_tol * scale {
        return Err(Error::Inconsistent { residual });
    }
    Ok(AffineSolutionSet {
        layout: bs.layout,
        particular,
        nullspace: dec.nullspace(),
        rank: dec.rank(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SigmaRange {
    /// `σ` takes this single value on the whole solution set.
    Constant { value: f64 },
    /// `σ` grows without bound along `direction` (unit, in the kernel of `A`)
    /// at rate `slope > 0`, and decreases without bound along its negative.
    UnboundedBothSides {
        direction: Vec<f64>,
        slope: f64,
        /// `σ` at the particular solution.
        at_particular: f64,
    },
}

/// Range of `σ = B·y − D` over the solution set.
///
/// `σ` is constant iff `B` is orthogonal to the kernel, i.e. `‖Nᵀ B‖₂ ≤
/// tol·(1 + ‖B‖₂)`. Otherwise the projection of `B` onto the kernel is the
/// direction of steepest increase.
pub fn sigma_range(es: &EntropySystem, sols: &AffineSolutionSet, tol: f64) -> Result<SigmaRange> {
    if es.layout != sols.layout {
        return Err(Error::Layout("entropy system and solution set differ".into()));
    }
    let at_particular = es.production_flat(&sols.particular);
    let g = sols.nullspace.transpose() * &es.b;
    let gnorm = g.norm();
    if gnorm <= tol * (1.0 + es.b.norm()) {
        return Ok(SigmaRange::Constant {
            value: at_particular,
        });
    }
    let dir = &sols.nullspace * &g / gnorm;
    Ok(SigmaRange::UnboundedBothSides {
        slope: es.b.dot(&dir),
        direction: dir.iter().copied().collect(),
        at_particular,
    })
}

/// Multipliers expressing the entropy covector through the balance rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiuResult {
    pub lambda: Vec<f64>,
    /// `‖AᵀΛ − B‖₂`.
    pub residual_norm: f64,
    /// `Λ·C − D`; the production on every solution when `in_row_space`.
    pub residual_production: f64,
    pub in_row_space: bool,
}

/// Least-squares multipliers `Λ` minimising `‖AᵀΛ − B‖₂` (minimum norm when
/// `A` is rank deficient).
pub fn liu_multipliers(bs: &BalanceSystem, es: &EntropySystem, tol: f64) -> Result<LiuResult> {
    if es.layout != bs.layout {
        return Err(Error::Layout("balance and entropy systems differ".into()));
    }
    check_finite(&bs.a, "balance matrix")?;
    let dec = Decomposition::new(&bs.a, tol);
    let lambda = dec.solve_transpose(&es.b);
    let residual_norm = (bs.a.transpose() * &lambda - &es.b).norm();
    Ok(LiuResult {
        residual_production: lambda.dot(&bs.c) - es.d,
        in_row_space: residual_norm <= tol * (1.0 + es.b.norm()),
        lambda: lambda.iter().copied().collect(),
        residual_norm,
    })
}

/// Weight `λ` with `σ(λ y1 + (1−λ) y2) = 0` for a real `y1` and an over-ideal `y2`.
pub fn ideal_lambda(
    es: &EntropySystem,
    y1: &HigherVector,
    y2: &HigherVector,
    tol: Tolerance,
) -> Result<f64> {
    if y1.layout() != es.layout || y2.layout() != es.layout {
        return Err(Error::Layout("vectors do not match the entropy system".into()));
    }
    let f1 = DVector::from_vec(y1.pack());
    let f2 = DVector::from_vec(y2.pack());
    let s1 = es.production_flat(&f1);
    let s2 = es.production_flat(&f2);
    if !(s1 > tol.resolve(es, y1.norm_inf())) {
        return Err(Error::Precondition(format!("first vector is not real (σ = {s1:e})")));
    }
    if !(s2 < -tol.resolve(es, y2.norm_inf())) {
        return Err(Error::Precondition(format!(
            "second vector is not over-ideal (σ = {s2:e})"
        )));
    }
    lambda_between(es, &f1, &f2)
}

fn lambda_between(es: &EntropySystem, f1: &DVector<f64>, f2: &DVector<f64>) -> Result<f64> {
    let num = es.d - es.b.dot(f2);
    let den = es.b.dot(&(f1 - f2));
    if !(den > 0.0) || !(num > 0.0) {
        return Err(Error::Precondition(format!(
            "no zero-production combination: numerator {num:e}, denominator {den:e}"
        )));
    }
    let lambda = num / den;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Precondition(format!("λ = {lambda} not in (0, 1)")));
    }
    Ok(lambda)
}

/// `λ y1 + (1−λ) y2`.
pub fn convex_combine(y1: &HigherVector, y2: &HigherVector, lambda: f64) -> Result<HigherVector> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Precondition(format!("λ = {lambda} outside [0, 1]")));
    }
    if y1.layout() != y2.layout() {
        return Err(Error::Layout("cannot combine vectors of different layouts".into()));
    }
    let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter()
            .zip(b)
            .map(|(p, q)| lambda * p + (1.0 - lambda) * q)
            .collect()
    };
    HigherVector::new(
        y1.layout(),
        mix(&y1.dt, &y2.dt),
        mix(&y1.dgrad, &y2.dgrad),
        mix(&y1.hess, &y2.hess),
    )
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `y_p + radius·N·c` with `c` standard normal; sample `i` depends only on
/// `(seed, i)`.
pub fn sample_flat(
    sols: &AffineSolutionSet,
    k: usize,
    radius: f64,
    seed: u64,
    exec: Execution,
) -> Vec<DVector<f64>> {
    par::map_indices(exec, k, |i| {
        let mut rng = sample_rng(seed, i);
        let c = DVector::from_fn(sols.nullity(), |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            radius * z
        });
        sols.point(&c)
    })
}

pub fn sample_solutions(
    sols: &AffineSolutionSet,
    k: usize,
    radius: f64,
    seed: u64,
) -> Result<Vec<HigherVector>> {
    if k == 0 {
        return Err(Error::Precondition("sample count must be at least 1".into()));
    }
    Ok(sample_flat(sols, k, radius, seed, Execution::default())
        .iter()
        .map(|f| to_vector(f, sols.layout))
        .collect())
}

/// Statistics of `σ` over sampled balance solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub count: usize,
    pub radius: f64,
    pub seed: u64,
    pub min_sigma: f64,
    pub max_sigma: f64,
    pub mean_sigma: f64,
    pub classes: ClassCounts,
}

impl SampleStats {
    pub fn spread(&self) -> f64 {
        self.max_sigma - self.min_sigma
    }

    pub fn both_signs(&self) -> bool {
        self.classes.real > 0 && self.classes.over_ideal > 0
    }
}

/// Productions of sampled solutions, in sample order.
pub fn sample_sigmas(
    es: &EntropySystem,
    sols: &AffineSolutionSet,
    k: usize,
    radius: f64,
    seed: u64,
    exec: Execution,
) -> Vec<(f64, f64)> {
    par::map_indices(exec, k, |i| {
        let mut rng = sample_rng(seed, i);
        let c = DVector::from_fn(sols.nullity(), |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            radius * z
        });
        let y = sols.point(&c);
        (es.production_flat(&y), y.amax())
    })
}

pub fn sample_stats(
    es: &EntropySystem,
    sols: &AffineSolutionSet,
    k: usize,
    radius: f64,
    seed: u64,
    tol: Tolerance,
    exec: Execution,
) -> SampleStats {
    let sig = sample_sigmas(es, sols, k, radius, seed, exec);
    let classes: ClassCounts = sig
        .iter()
        .map(|&(s, ynorm)| VectorClass::of(s, tol.resolve(es, ynorm)))
        .collect();
    let (min_sigma, max_sigma, sum) = sig.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, 0.0),
        |(lo, hi, sum), &(s, _)| (lo.min(s), hi.max(s), sum + s),
    );
    SampleStats {
        count: k,
        radius,
        seed,
        min_sigma,
        max_sigma,
        mean_sigma: if k > 0 { sum / k as f64 } else { f64::NAN },
        classes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    AdmissibleNonequilibrium,
    AdmissibleEquilibrium,
    InadmissibleNegative,
    InadmissibleMixed,
}

impl Verdict {
    pub fn is_admissible(&self) -> bool {
        matches!(
            self,
            Verdict::AdmissibleNonequilibrium | Verdict::AdmissibleEquilibrium
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::AdmissibleNonequilibrium => "admissible-nonequilibrium",
            Verdict::AdmissibleEquilibrium => "admissible-equilibrium",
            Verdict::InadmissibleNegative => "inadmissible-negative",
            Verdict::InadmissibleMixed => "inadmissible-mixed",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A real vector, an over-ideal vector and their zero-production combination,
/// all solving the same balance laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedWitness {
    pub direction: Vec<f64>,
    pub slope: f64,
    pub y_real: Vec<f64>,
    pub sigma_real: f64,
    pub y_over_ideal: Vec<f64>,
    pub sigma_over_ideal: f64,
    pub lambda: f64,
    pub y_ideal: Vec<f64>,
    pub sigma_ideal: f64,
    /// `‖A·y_ideal − C‖₂`.
    pub balance_residual: f64,
}

/// Builds the witness triple for a solution set on which `σ` is unbounded.
pub fn mixed_witness(
    bs: &BalanceSystem,
    es: &EntropySystem,
    sols: &AffineSolutionSet,
    direction: &[f64],
) -> Result<MixedWitness> {
    let dir = DVector::from_column_slice(direction);
    let slope = es.b.dot(&dir);
    if !(slope > 0.0) {
        return Err(Error::Precondition(format!(
            "direction does not increase σ (slope {slope:e})"
        )));
    }
    let s0 = es.production_flat(&sols.particular);
    // step far enough that both ends clear zero by at least |σ_p| + 1
    let step = (2.0 * s0.abs() + 1.0) / slope;
    let y1 = &sols.particular + &dir * step;
    let y2 = &sols.particular - &dir * step;
    let lambda = lambda_between(es, &y1, &y2)?;
    let y3 = &y1 * lambda + &y2 * (1.0 - lambda);
    Ok(MixedWitness {
        direction: direction.to_vec(),
        slope,
        sigma_real: es.production_flat(&y1),
        sigma_over_ideal: es.production_flat(&y2),
        sigma_ideal: es.production_flat(&y3),
        balance_residual: bs.residual_flat(&y3).norm(),
        y_real: y1.iter().copied().collect(),
        y_over_ideal: y2.iter().copied().collect(),
        lambda,
        y_ideal: y3.iter().copied().collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    /// Row-space and constancy threshold, relative to `1 + ‖B‖₂`.
    pub tol: f64,
    pub rank_tol: f64,
    /// Band that counts as zero production.
    pub class_tol: Tolerance,
    pub samples: usize,
    pub seed: u64,
    pub radius: f64,
    /// Sampling radius grows ×10 up to this while hunting sign changes.
    pub max_radius: f64,
    /// Freeze the second spatial derivatives to these values.
    pub pin_hess: Option<Vec<f64>>,
    pub exec: Execution,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            tol: DEFAULT_TOL,
            rank_tol: DEFAULT_RANK_TOL,
            class_tol: Tolerance::default(),
            samples: 1000,
            seed: 0,
            radius: 1.0,
            max_radius: 1e3,
            pin_hess: None,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub verdict: Verdict,
    /// Constant production, when there is one.
    pub sigma: Option<f64>,
    pub sigma_tol: f64,
    pub range: SigmaRange,
    pub liu: LiuResult,
    pub rank: usize,
    pub nullity: usize,
    pub samples: SampleStats,
    pub witness: Option<MixedWitness>,
}

/// Runs the full analysis on precomputed systems.
pub fn analyze_systems(
    bs: &BalanceSystem,
    es: &EntropySystem,
    opts: &AnalysisOptions,
) -> Result<Report> {
    let bs = match &opts.pin_hess {
        Some(values) => {
            let l = bs.layout;
            let start = l.omega() * (1 + l.n());
            if values.len() != l.higher_dim() - start {
                return Err(Error::Layout(format!(
                    "pinned hess block needs {} values, got {}",
                    l.higher_dim() - start,
                    values.len()
                )));
            }
            let fixed: Vec<(usize, f64)> =
                values.iter().enumerate().map(|(i, &v)| (start + i, v)).collect();
            bs.with_fixed(&fixed)?
        }
        None => bs.clone(),
    };
    let sols = solve_balance(&bs, opts.rank_tol)?;
    let liu = liu_multipliers(&bs, es, opts.tol)?;
    let range = sigma_range(es, &sols, opts.tol)?;
    let sigma_tol = opts.class_tol.resolve(es, sols.particular.amax());

    let sample = |radius: f64| {
        sample_stats(es, &sols, opts.samples, radius, opts.seed, opts.class_tol, opts.exec)
    };

    let (verdict, sigma, witness, samples) = match &range {
        SigmaRange::Constant { value } => {
            let verdict = match VectorClass::of(*value, sigma_tol) {
                VectorClass::Real => Verdict::AdmissibleNonequilibrium,
                VectorClass::Ideal => Verdict::AdmissibleEquilibrium,
                VectorClass::OverIdeal => Verdict::InadmissibleNegative,
            };
            (verdict, Some(*value), None, sample(opts.radius))
        }
        SigmaRange::UnboundedBothSides { direction, .. } => {
            let witness = mixed_witness(&bs, es, &sols, direction)?;
            let mut radius = opts.radius;
            let mut stats = sample(radius);
            while !stats.both_signs() && radius * 10.0 <= opts.max_radius * (1.0 + 1e-12) {
                radius *= 10.0;
                stats = sample(radius);
            }
            (Verdict::InadmissibleMixed, None, Some(witness), stats)
        }
    };

    Ok(Report {
        verdict,
        sigma,
        sigma_tol,
        range,
        liu,
        rank: sols.rank,
        nullity: sols.nullity(),
        samples,
        witness,
    })
}

/// Assembles the pointwise systems of `model` at `state` and decides which
/// side of the dichotomy the model falls on there.
pub fn dichotomy_report<M: ConstitutiveModel + ?Sized>(
    model: &M,
    state: &StatePoint,
    ctx: &Context,
    opts: &AnalysisOptions,
) -> Result<Report> {
    let bs = assemble_balance(model, state, ctx)?;
    let es = assemble_entropy(model, state, ctx)?;
    analyze_systems(&bs, &es, opts)
}
