//! Entropy production, the real/ideal/over-ideal taxonomy of higher-derivative
//! vectors and the irreversible/reversible/over-reversible taxonomy of
//! sampled processes.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::constitutive::{assemble_entropy, ConstitutiveModel, EntropySystem};
use crate::error::{Error, Result};
use crate::kernel::{Context, HigherVector, StatePoint};
use crate::par::{self, Execution};

pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// How the band `|σ| ≤ tol` that counts as zero production is sized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Tolerance {
    /// `tol = rel · (1 + |D| + ‖B‖∞·‖y‖∞)`.
    Relative(f64),
    Absolute(f64),
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::Relative(DEFAULT_REL_TOL)
    }
}

impl Tolerance {
    pub fn resolve(&self, es: &EntropySystem, y_inf_norm: f64) -> f64 {
        match *self {
            Tolerance::Absolute(t) => t,
            Tolerance::Relative(r) => r * (1.0 + es.d.abs() + es.b.amax() * y_inf_norm),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VectorClass {
    Real,
    Ideal,
    OverIdeal,
}

impl VectorClass {
    pub fn of(sigma: f64, tol: f64) -> VectorClass {
        if sigma > tol {
            VectorClass::Real
        } else if sigma < -tol {
            VectorClass::OverIdeal
        } else {
            VectorClass::Ideal
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            VectorClass::Real => "real",
            VectorClass::Ideal => "ideal",
            VectorClass::OverIdeal => "over-ideal",
        }
    }
}

impl std::fmt::Display for VectorClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: VectorClass,
    pub sigma: f64,
    pub tol: f64,
}

fn check_dims(es: &EntropySystem, y: &HigherVector) -> Result<()> {
    if es.layout != y.layout() {
        return Err(Error::Layout(format!(
            "entropy system layout {:?} differs from vector layout {:?}",
            es.layout,
            y.layout()
        )));
    }
    Ok(())
}

/// `σ = B·y − D`.
pub fn entropy_production(es: &EntropySystem, y: &HigherVector) -> Result<f64> {
    check_dims(es, y)?;
    Ok(es.production_flat(&DVector::from_vec(y.pack())))
}

pub fn classify_vector(es: &EntropySystem, y: &HigherVector, tol: Tolerance) -> Result<Classification> {
    let sigma = entropy_production(es, y)?;
    let tol = tol.resolve(es, y.norm_inf());
    Ok(Classification {
        class: VectorClass::of(sigma, tol),
        sigma,
        tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessClass {
    Irreversible,
    Reversible,
    OverReversible,
}

impl ProcessClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProcessClass::Irreversible => "irreversible",
            ProcessClass::Reversible => "reversible",
            ProcessClass::OverReversible => "over-reversible",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub real: usize,
    pub ideal: usize,
    pub over_ideal: usize,
}

impl ClassCounts {
    pub fn add(&mut self, c: VectorClass) {
        match c {
            VectorClass::Real => self.real += 1,
            VectorClass::Ideal => self.ideal += 1,
            VectorClass::OverIdeal => self.over_ideal += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.real + self.ideal + self.over_ideal
    }

    /// Any over-ideal point wins, then any real point; otherwise reversible.
    pub fn process_class(&self) -> ProcessClass {
        if self.over_ideal > 0 {
            ProcessClass::OverReversible
        } else if self.real > 0 {
            ProcessClass::Irreversible
        } else {
            ProcessClass::Reversible
        }
    }
}

impl FromIterator<VectorClass> for ClassCounts {
    fn from_iter<I: IntoIterator<Item = VectorClass>>(iter: I) -> Self {
        let mut c = ClassCounts::default();
        for v in iter {
            c.add(v);
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub state: StatePoint,
    pub ctx: Context,
    pub y: HigherVector,
}

/// Samples of a process, ordered time-major then position-minor.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    samples: Vec<Sample>,
}

impl Trajectory {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        if let Some(first) = samples.first() {
            let layout = first.state.layout();
            for s in &samples {
                if s.state.layout() != layout || s.y.layout() != layout {
                    return Err(Error::Layout("trajectory samples mix layouts".into()));
                }
            }
        }
        for w in samples.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let ordered = a.t < b.t
                || (a.t == b.t
                    && a.x.partial_cmp(&b.x) == Some(std::cmp::Ordering::Less));
            if !ordered {
                return Err(Error::Precondition(format!(
                    "samples out of order at t = {} / {}",
                    a.t, b.t
                )));
            }
        }
        Ok(Trajectory { samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Distinct sample times.
    pub fn times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.samples.iter().map(|s| s.t).collect();
        ts.dedup();
        ts
    }
}

/// Classifies every sample of a trajectory, in sample order.
pub fn classify_samples<M: ConstitutiveModel + ?Sized>(
    traj: &Trajectory,
    model: &M,
    tol: Tolerance,
    exec: Execution,
) -> Result<Vec<Classification>> {
    par::try_map_slice(exec, traj.samples(), |s| {
        let es = assemble_entropy(model, &s.state, &s.ctx)?;
        classify_vector(&es, &s.y, tol)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessReport {
    pub class: ProcessClass,
    pub counts: ClassCounts,
    pub min_sigma: f64,
    pub max_sigma: f64,
}

impl ProcessReport {
    pub fn from_classifications(cls: &[Classification]) -> Result<Self> {
        if cls.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        let counts: ClassCounts = cls.iter().map(|c| c.class).collect();
        let (min_sigma, max_sigma) = cls
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                (lo.min(c.sigma), hi.max(c.sigma))
            });
        Ok(ProcessReport {
            class: counts.process_class(),
            counts,
            min_sigma,
            max_sigma,
        })
    }
}

pub fn classify_process<M: ConstitutiveModel + ?Sized>(
    traj: &Trajectory,
    model: &M,
    tol: Tolerance,
    exec: Execution,
) -> Result<ProcessReport> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    ProcessReport::from_classifications(&classify_samples(traj, model, tol, exec)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Violation {
    /// Negative production at a point.
    OverIdeal,
    /// Zero production away from equilibrium.
    IdealOutsideEquilibrium,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmendmentFlag {
    pub index: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub sigma: f64,
    pub violation: Violation,
}

/// Flags samples that contradict the amended second law: no over-ideal
/// vectors, and zero production only inside the equilibrium subspace.
pub fn amendment_flags(traj: &Trajectory, cls: &[Classification]) -> Vec<AmendmentFlag> {
    traj.samples()
        .iter()
        .zip(cls)
        .enumerate()
        .filter_map(|(index, (s, c))| {
            let violation = match c.class {
                VectorClass::OverIdeal => Violation::OverIdeal,
                VectorClass::Ideal if !s.y.is_equilibrium_vector(c.tol) => {
                    Violation::IdealOutsideEquilibrium
                }
                _ => return None,
            };
            Some(AmendmentFlag {
                index,
                t: s.t,
                x: s.x.clone(),
                sigma: c.sigma,
                violation,
            })
        })
        .collect()
}

pub fn amendment_check<M: ConstitutiveModel + ?Sized>(
    traj: &Trajectory,
    model: &M,
    tol: Tolerance,
    exec: Execution,
) -> Result<Vec<AmendmentFlag>> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let cls = classify_samples(traj, model, tol, exec)?;
    Ok(amendment_flags(traj, &cls))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Layout;
    use proptest::prelude::*;

    fn l11() -> Layout {
        Layout::new(1, 1).unwrap()
    }

    fn es(b: [f64; 3], d: f64) -> EntropySystem {
        EntropySystem::new(l11(), DVector::from_vec(b.to_vec()), d).unwrap()
    }

    fn y(v: [f64; 3]) -> HigherVector {
        HigherVector::unpack(&v, l11()).unwrap()
    }

    #[test]
    fn production_examples() {
        assert_eq!(entropy_production(&es([1.0, 0.0, 0.0], 1.0), &y([2.0, 0.0, 0.0])).unwrap(), 1.0);
        let e = es([0.3, -2.0, 7.0], 0.125);
        assert_eq!(entropy_production(&e, &HigherVector::zeros(l11())).unwrap(), -0.125);
        // off the balance solution set the production is unconstrained
        let fourier = es([0.5, 0.0, -0.5], -0.25);
        assert_eq!(entropy_production(&fourier, &y([0.0, 0.0, 0.5])).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let e = es([1.0, 0.0, 0.0], 0.0);
        let other = HigherVector::zeros(Layout::new(1, 2).unwrap());
        assert!(entropy_production(&e, &other).is_err());
    }

    #[test]
    fn classify_examples() {
        let e = es([1.0, 0.0, 0.0], 0.0);
        let t = Tolerance::Absolute(1e-9);
        assert_eq!(classify_vector(&e, &y([1.0, 0.0, 0.0]), t).unwrap().class, VectorClass::Real);
        assert_eq!(classify_vector(&e, &y([0.0, 5.0, 0.0]), t).unwrap().class, VectorClass::Ideal);
        assert_eq!(
            classify_vector(&e, &y([-1.0, 0.0, 0.0]), t).unwrap().class,
            VectorClass::OverIdeal
        );
    }

    #[test]
    fn relative_tolerance_scales() {
        let e = es([2.0, 0.0, 0.0], -3.0);
        let t = Tolerance::default().resolve(&e, 10.0);
        assert!((t - 1e-9 * (1.0 + 3.0 + 20.0)).abs() < 1e-24);
    }

    #[test]
    fn process_precedence() {
        let counts = |v: &[f64]| -> ClassCounts {
            v.iter().map(|&s| VectorClass::of(s, 1e-9)).collect()
        };
        assert_eq!(counts(&[0.0, 0.0]).process_class(), ProcessClass::Reversible);
        assert_eq!(counts(&[0.0, 0.3]).process_class(), ProcessClass::Irreversible);
        assert_eq!(counts(&[0.3, -0.1]).process_class(), ProcessClass::OverReversible);
    }

    #[test]
    fn empty_trajectory_rejected() {
        assert!(matches!(
            ProcessReport::from_classifications(&[]),
            Err(Error::EmptyTrajectory)
        ));
    }

    proptest! {
        #[test]
        fn production_is_affine(
            b in prop::array::uniform3(-10.0f64..10.0),
            d in -10.0f64..10.0,
            y1 in prop::array::uniform3(-10.0f64..10.0),
            y2 in prop::array::uniform3(-10.0f64..10.0),
            lam in 0.0f64..=1.0,
        ) {
            let e = es(b, d);
            let mix: Vec<f64> = (0..3).map(|i| lam * y1[i] + (1.0 - lam) * y2[i]).collect();
            let s_mix = entropy_production(&e, &HigherVector::unpack(&mix, l11()).unwrap()).unwrap();
            let s1 = entropy_production(&e, &y(y1)).unwrap();
            let s2 = entropy_production(&e, &y(y2)).unwrap();
            prop_assert!((s_mix - (lam * s1 + (1.0 - lam) * s2)).abs() <= 1e-12 * (1.0 + 300.0));
        }

        #[test]
        fn exactly_one_class(sigma in -1e3f64..1e3, tol in 0.0f64..10.0) {
            let c = VectorClass::of(sigma, tol);
            let hits = [sigma > tol, sigma.abs() <= tol, sigma < -tol];
            prop_assert_eq!(hits.iter().filter(|&&h| h).count(), 1);
            match c {
                VectorClass::Real => prop_assert!(hits[0]),
                VectorClass::Ideal => prop_assert!(hits[1]),
                VectorClass::OverIdeal => prop_assert!(hits[2]),
            }
        }

        #[test]
        fn precedence_order_independent(mut sigmas in prop::collection::vec(-1.0f64..1.0, 1..50), seed in any::<u64>()) {
            let before: ClassCounts = sigmas.iter().map(|&s| VectorClass::of(s, 0.1)).collect();
            // deterministic shuffle
            let n = sigmas.len();
            let mut state = seed;
            for i in (1..n).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                sigmas.swap(i, (state >> 33) as usize % (i + 1));
            }
            let after: ClassCounts = sigmas.iter().map(|&s| VectorClass::of(s, 0.1)).collect();
            prop_assert_eq!(before.process_class(), after.process_class());
        }
    }
}
