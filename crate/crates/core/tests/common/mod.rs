#![allow(dead_code)]

use entropy_dichotomy::constitutive::{BalanceSystem, ConstitutiveModel, EntropySystem};
use entropy_dichotomy::kernel::{Context, Layout, StatePoint, Var};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_layout(rng: &mut ChaCha8Rng) -> Layout {
    Layout::new(rng.random_range(1..=3), rng.random_range(1..=3)).unwrap()
}

/// Random `rows × cols` matrix of rank `min(rank, rows, cols)`.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, rank: usize) -> DMatrix<f64> {
    let r = rank.min(rows).min(cols);
    let left = DMatrix::from_fn(rows, r, |_, _| normal(rng));
    let right = DMatrix::from_fn(r, cols, |_, _| normal(rng));
    left * right
}

/// Nullspace basis by Gauss-Jordan elimination with partial pivoting.
/// Columns of the result span `{x : A x = 0}`; they are not orthonormal.
pub fn rref_nullspace(a: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let (rows, cols) = a.shape();
    let mut m = a.clone();
    let scale = a.amax().max(1.0);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, val) = (r..rows)
            .map(|i| (i, m[(i, c)].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= tol * scale {
            continue;
        }
        m.swap_rows(r, best);
        let p = m[(r, c)];
        for j in 0..cols {
            m[(r, j)] /= p;
        }
        for i in 0..rows {
            if i != r {
                let f = m[(i, c)];
                if f != 0.0 {
                    for j in 0..cols {
                        m[(i, j)] -= f * m[(r, j)];
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = DVector::zeros(cols);
            v[f] = 1.0;
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[(row, f)];
            }
            v
        })
        .collect()
}

/// Entropy production written out as an explicit sum.
pub fn sigma_loop(b: &DVector<f64>, d: f64, y: &DVector<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..y.len() {
        s += b[i] * y[i];
    }
    s - d
}

pub fn residual_loop(a: &DMatrix<f64>, c: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..a.nrows() {
        let mut s = 0.0;
        for j in 0..a.ncols() {
            s += a[(r, j)] * y[j];
        }
        worst = worst.max((s - c[r]).abs());
    }
    worst
}

/// A random pointwise structure with a known balance solution `y0`.
pub struct Structure {
    pub bs: BalanceSystem,
    pub es: EntropySystem,
    pub y0: DVector<f64>,
    pub null: Vec<DVector<f64>>,
    pub compliant: bool,
    pub slack: f64,
}

impl Structure {
    /// `y0 + Σ cᵢ·nᵢ` with standard-normal `cᵢ` scaled by `radius`.
    pub fn draw(&self, rng: &mut ChaCha8Rng, radius: f64) -> DVector<f64> {
        let mut y = self.y0.clone();
        for n in &self.null {
            y.axpy(radius * normal(rng), n, 1.0);
        }
        y
    }

    pub fn scale(&self, y: &DVector<f64>) -> f64 {
        1.0 + self.es.d.abs()
            + self.es.b.amax() * y.amax()
            + self.bs.a.amax() * y.amax()
            + self.bs.c.amax()
    }
}

/// Random structure. When `compliant`, `B = AᵀΛ` and `D = Λ·C − slack` so
/// every balance solution has production `slack`.
pub fn random_structure(rng: &mut ChaCha8Rng, compliant: bool) -> Structure {
    let layout = random_layout(rng);
    let rows = layout.omega();
    let cols = layout.higher_dim();
    let rank = if rng.random_bool(0.3) { rng.random_range(0..rows) } else { rows };
    let a = random_matrix(rng, rows, cols, rank);
    let y0 = DVector::from_fn(cols, |_, _| normal(rng));
    let c = &a * &y0;
    let (b, d, slack) = if compliant {
        let lambda = DVector::from_fn(rows, |_, _| normal(rng));
        let slack = match rng.random_range(0..4) {
            0 => 0.0,
            _ => rng.random_range(0.01..10.0),
        };
        (a.transpose() * &lambda, lambda.dot(&c) - slack, slack)
    } else {
        (DVector::from_fn(cols, |_, _| normal(rng)), normal(rng), f64::NAN)
    };
    let null = rref_nullspace(&a, 1e-10);
    Structure {
        bs: BalanceSystem::new(layout, a, c).unwrap(),
        es: EntropySystem::new(layout, b, d).unwrap(),
        y0,
        null,
        compliant,
        slack,
    }
}

/// Smooth test model with gradient-dependent densities and fluxes, so every
/// block of the balance matrix is populated.
pub struct Toy {
    pub layout: Layout,
}

impl ConstitutiveModel for Toy {
    fn name(&self) -> &str {
        "toy"
    }

    fn layout(&self) -> Layout {
        self.layout
    }

    fn density(&self, beta: usize, s: &StatePoint, _: &Context) -> f64 {
        let g: f64 = s.grad_values().iter().enumerate().map(|(i, v)| (i + beta + 1) as f64 * v).sum();
        (s.z(0) + beta as f64).exp() * 0.1 + s.z(s.layout().omega() - 1) * g.sin()
    }

    fn flux(&self, beta: usize, k: usize, s: &StatePoint, _: &Context) -> f64 {
        let o = s.layout().omega();
        let a = s.z((beta + k) % o);
        a * a * s.grad((beta + 1) % o, k) + (s.grad(beta % o, (k + 1) % s.layout().n()) * a).cos()
    }

    fn production(&self, beta: usize, s: &StatePoint, _: &Context) -> f64 {
        s.z(beta % s.layout().omega()).powi(3) - s.grad_values().iter().sum::<f64>()
    }

    fn entropy(&self, s: &StatePoint, _: &Context) -> f64 {
        s.z_values().iter().map(|z| (1.0 + z * z).ln()).sum::<f64>() + 0.3 * s.grad(0, 0).powi(2)
    }

    fn entropy_flux(&self, k: usize, s: &StatePoint, _: &Context) -> f64 {
        s.z(0) * s.grad(0, k) + (s.z(s.layout().omega() - 1) * s.grad(0, 0)).sin()
    }
}

pub fn random_state(rng: &mut ChaCha8Rng, layout: Layout) -> StatePoint {
    let o = layout.omega();
    let n = layout.n();
    let z = (0..o).map(|_| 0.5 * normal(rng)).collect();
    let g = (0..o * n).map(|_| 0.5 * normal(rng)).collect();
    StatePoint::new(layout, z, g).unwrap()
}

pub fn random_context(rng: &mut ChaCha8Rng, n: usize) -> Context {
    let v = (0..n).map(|_| normal(rng)).collect();
    Context::new(rng.random_range(0.5..2.0), v, 0.0, vec![0.0; n]).unwrap()
}

pub fn all_vars(layout: Layout) -> Vec<Var> {
    Var::all(&layout)
}
