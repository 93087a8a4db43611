//! The `dichotomy` command line.
//!
//! Settings come from an optional TOML file with `[model]`, `[state]`,
//! `[analysis]` and `[simulate]` tables; command-line flags override file
//! values. Every report is built once as JSON and the text format is a
//! rendering of that same document.
//!
//! Exit codes: `0` admissible verdict or successful command, `3`
//! inadmissible verdict (or over-reversible process), `2` configuration or
//! precondition error, `4` evaluation or solver error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classify::{
    amendment_flags, classify_samples, classify_vector, entropy_production, ProcessReport,
    Tolerance, VectorClass,
};
use crate::constitutive::{assemble_balance, assemble_entropy, ConstitutiveModel};
use crate::error::{Error, Result};
use crate::exploit::{
    convex_combine, dichotomy_report, ideal_lambda, sample_sigmas, solve_balance,
    AnalysisOptions, DEFAULT_RANK_TOL, DEFAULT_TOL,
};
use crate::kernel::{Context, HigherVector, StatePoint};
use crate::models::{self, Conductivity, FourierParams, ModelParams};
use crate::par::Execution;
use crate::process::{self, Boundary, Grid1D, Profile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INADMISSIBLE: i32 = 3;
pub const EXIT_EVAL: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "dichotomy", version, about = "Second-law admissibility of constitutive models")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Relative tolerance for row-space, constancy and zero-production tests.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide admissibility of the model at one state.
    Analyze(PointArgs),
    /// Classify one higher-derivative vector at a state.
    Classify {
        #[command(flatten)]
        point: PointArgs,
        /// Flat higher-derivative vector (dt | dgrad | hess).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        y: Vec<f64>,
    },
    /// Zero-production convex combination of a real and an over-ideal vector.
    Combine {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        y1: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        y2: Vec<f64>,
    },
    /// Histogram of the production over sampled balance solutions.
    Scan {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 10)]
        bins: usize,
    },
    /// Run the 1D conductor and classify the resulting process.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args, Default)]
pub struct PointArgs {
    /// fourier | cattaneo | fourier-negkappa | fourier-gibbs-mismatch
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub kappa_slope: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Spatial dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grad: Option<Vec<f64>>,
    /// Heat flux (cattaneo).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub q: Option<Vec<f64>>,
    /// Flux gradient, row-major `q_i,j` (cattaneo).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub q_grad: Option<Vec<f64>>,
    /// Freeze the second spatial derivatives to `--hess` (zeros if absent).
    #[arg(long)]
    pub pin_hess: bool,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub hess: Option<Vec<f64>>,
}

#[derive(Debug, Args, Default)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// uniform | sine | quarter-sine
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub base: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
    /// dirichlet | neumann
    #[arg(long)]
    pub boundary: Option<String>,
    /// Trajectory CSV destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSection {
    pub name: Option<String>,
    #[serde(flatten)]
    pub params: ModelParams,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StateSection {
    pub dim: Option<usize>,
    pub theta: Option<f64>,
    pub grad: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    pub q_grad: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisSection {
    pub tol: Option<f64>,
    pub rank_tol: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub radius: Option<f64>,
    pub max_radius: Option<f64>,
    pub pin_hess: Option<bool>,
    pub hess: Option<Vec<f64>>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateSection {
    pub nx: Option<usize>,
    pub length: Option<f64>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub profile: Option<String>,
    pub base: Option<f64>,
    pub amplitude: Option<f64>,
    pub boundary: Option<String>,
    pub out: Option<PathBuf>,
}

/// Contents of a configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub state: StateSection,
    pub analysis: AnalysisSection,
    pub simulate: SimulateSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Folds flag values over the file values.
    fn apply_point(&mut self, p: &PointArgs) {
        fn set<T: Clone>(dst: &mut T, src: &Option<T>) {
            if let Some(v) = src {
                *dst = v.clone();
            }
        }
        if p.model.is_some() {
            self.model.name = p.model.clone();
        }
        let mp = &mut self.model.params;
        set(&mut mp.rho, &p.rho);
        set(&mut mp.c, &p.c);
        set(&mut mp.kappa, &p.kappa);
        set(&mut mp.kappa_slope, &p.kappa_slope);
        set(&mut mp.tau, &p.tau);
        if p.epsilon.is_some() {
            mp.epsilon = p.epsilon;
        }
        let st = &mut self.state;
        if p.dim.is_some() {
            st.dim = p.dim;
        }
        if p.theta.is_some() {
            st.theta = p.theta;
        }
        if p.grad.is_some() {
            st.grad = p.grad.clone();
        }
        if p.q.is_some() {
            st.q = p.q.clone();
        }
        if p.q_grad.is_some() {
            st.q_grad = p.q_grad.clone();
        }
        if p.pin_hess {
            self.analysis.pin_hess = Some(true);
        }
        if p.hess.is_some() {
            self.analysis.hess = p.hess.clone();
        }
    }

    fn apply_globals(&mut self, cli: &Cli) {
        if cli.tol.is_some() {
            self.analysis.tol = cli.tol;
        }
        if cli.seed.is_some() {
            self.analysis.seed = cli.seed;
        }
        if cli.samples.is_some() {
            self.analysis.samples = cli.samples;
        }
        if cli.format.is_some() {
            self.analysis.format = cli.format;
        }
    }

    fn model_name(&self) -> &str {
        self.model.name.as_deref().unwrap_or("fourier")
    }

    fn dim(&self) -> usize {
        self.state
            .dim
            .or_else(|| self.state.grad.as_ref().map(|g| g.len().max(1)))
            .unwrap_or(1)
    }

    pub fn build_model(&self) -> Result<Box<dyn ConstitutiveModel>> {
        models::build(self.model_name(), &self.model.params, self.dim())
    }

    pub fn build_state(&self, model: &dyn ConstitutiveModel) -> Result<(StatePoint, Context)> {
        let layout = model.layout();
        let n = layout.n();
        let theta = self
            .state
            .theta
            .ok_or_else(|| Error::Config("state needs a temperature (theta)".into()))?;
        let grad = self.state.grad.clone().unwrap_or_else(|| vec![0.0; n]);
        if grad.len() != n {
            return Err(Error::Config(format!(
                "grad has {} components, dimension is {n}",
                grad.len()
            )));
        }
        let mut z = vec![theta];
        let mut all_grad = grad;
        if layout.omega() > 1 {
            let q = self.state.q.clone().unwrap_or_else(|| vec![0.0; n]);
            let qg = self.state.q_grad.clone().unwrap_or_else(|| vec![0.0; n * n]);
            if q.len() != n || qg.len() != n * n {
                return Err(Error::Config(format!(
                    "flux needs {n} components and {} gradient entries",
                    n * n
                )));
            }
            z.extend(q);
            all_grad.extend(qg);
        }
        let state = StatePoint::new(layout, z, all_grad).map_err(|e| Error::Config(e.to_string()))?;
        let ctx = Context::at_rest(self.model.params.rho, n).map_err(|e| Error::Config(e.to_string()))?;
        Ok((state, ctx))
    }

    pub fn analysis_options(&self, layout_hess: usize) -> AnalysisOptions {
        let a = &self.analysis;
        let tol = a.tol.unwrap_or(DEFAULT_TOL);
        AnalysisOptions {
            tol,
            rank_tol: a.rank_tol.unwrap_or(DEFAULT_RANK_TOL),
            class_tol: Tolerance::Relative(tol),
            samples: a.samples.unwrap_or(1000),
            seed: a.seed.unwrap_or(0),
            radius: a.radius.unwrap_or(1.0),
            max_radius: a.max_radius.unwrap_or(1e3),
            pin_hess: if a.pin_hess.unwrap_or(false) {
                Some(a.hess.clone().unwrap_or_else(|| vec![0.0; layout_hess]))
            } else {
                None
            },
            exec: Execution::default(),
        }
    }

    fn format(&self) -> Format {
        self.analysis.format.unwrap_or(Format::Text)
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Evaluation { .. } | Error::Inconsistent { .. } | Error::Probe(_) | Error::BlowUp { .. } | Error::Io(_) => {
            EXIT_EVAL
        }
        _ => EXIT_CONFIG,
    }
}

fn model_json(cfg: &RunConfig) -> Value {
    json!({ "name": cfg.model_name(), "params": cfg.model.params })
}

fn state_json(state: &StatePoint) -> Value {
    json!({ "z": state.z_values(), "grad": state.grad_values() })
}

fn vector_from_flat(flat: &[f64], model: &dyn ConstitutiveModel) -> Result<HigherVector> {
    HigherVector::unpack(flat, model.layout()).map_err(|e| Error::Config(e.to_string()))
}

/// A rendered report plus the exit code it implies.
pub struct Outcome {
    pub report: Value,
    pub code: i32,
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let (state, ctx) = cfg.build_state(model.as_ref())?;
    let l = model.layout();
    let opts = cfg.analysis_options(l.higher_dim() - l.state_dim());
    let r = dichotomy_report(model.as_ref(), &state, &ctx, &opts)?;
    let mut report = json!({
        "command": "analyze",
        "verdict": r.verdict,
        "sigma": r.sigma,
        "sigma_tol": r.sigma_tol,
        "lambda_multipliers": r.liu.lambda,
        "residual_norm": r.liu.residual_norm,
        "residual_production": r.liu.residual_production,
        "in_row_space": r.liu.in_row_space,
        "rank": r.rank,
        "nullity": r.nullity,
        "samples": r.samples,
        "seed": opts.seed,
        "model": model_json(cfg),
        "state": state_json(&state),
    });
    if let Some(w) = &r.witness {
        report["lambda_convex"] = json!(w.lambda);
        report["witness"] = json!({
            "direction": w.direction,
            "slope": w.slope,
            "sigma_real": w.sigma_real,
            "sigma_over_ideal": w.sigma_over_ideal,
            "sigma_ideal": w.sigma_ideal,
            "balance_residual": w.balance_residual,
            "y_real": w.y_real,
            "y_over_ideal": w.y_over_ideal,
            "y_ideal": w.y_ideal,
        });
    }
    Ok(Outcome {
        report,
        code: if r.verdict.is_admissible() {
            EXIT_OK
        } else {
            EXIT_INADMISSIBLE
        },
    })
}

pub fn cmd_classify(cfg: &RunConfig, y: &[f64]) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let (state, ctx) = cfg.build_state(model.as_ref())?;
    let es = assemble_entropy(model.as_ref(), &state, &ctx)?;
    let y = vector_from_flat(y, model.as_ref())?;
    let tol = Tolerance::Relative(cfg.analysis.tol.unwrap_or(DEFAULT_TOL));
    let c = classify_vector(&es, &y, tol)?;
    Ok(Outcome {
        report: json!({
            "command": "classify",
            "class": c.class,
            "sigma": c.sigma,
            "sigma_tol": c.tol,
            "equilibrium_vector": y.is_equilibrium_vector(c.tol),
            "y": y.pack(),
            "seed": cfg.analysis.seed.unwrap_or(0),
            "model": model_json(cfg),
            "state": state_json(&state),
        }),
        code: EXIT_OK,
    })
}

pub fn cmd_combine(cfg: &RunConfig, y1: &[f64], y2: &[f64]) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let (state, ctx) = cfg.build_state(model.as_ref())?;
    let bs = assemble_balance(model.as_ref(), &state, &ctx)?;
    let es = assemble_entropy(model.as_ref(), &state, &ctx)?;
    let y1 = vector_from_flat(y1, model.as_ref())?;
    let y2 = vector_from_flat(y2, model.as_ref())?;
    let tol = Tolerance::Relative(cfg.analysis.tol.unwrap_or(DEFAULT_TOL));
    let lambda = ideal_lambda(&es, &y1, &y2, tol)?;
    let y3 = convex_combine(&y1, &y2, lambda)?;
    Ok(Outcome {
        report: json!({
            "command": "combine",
            "lambda_convex": lambda,
            "sigma_y1": entropy_production(&es, &y1)?,
            "sigma_y2": entropy_production(&es, &y2)?,
            "sigma": entropy_production(&es, &y3)?,
            "balance_residual": bs.residual(&y3).norm(),
            "y3": y3.pack(),
            "seed": cfg.analysis.seed.unwrap_or(0),
            "model": model_json(cfg),
            "state": state_json(&state),
        }),
        code: EXIT_OK,
    })
}

/// Equal-width histogram; a zero-width range puts everything in one bin.
pub fn histogram(values: &[f64], bins: usize) -> (f64, f64, Vec<usize>) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = bins.max(1);
    if values.is_empty() {
        return (lo, hi, vec![0; bins]);
    }
    let width = hi - lo;
    if !(width > 0.0) {
        return (lo, hi, vec![values.len()]);
    }
    let mut counts = vec![0; bins];
    for &v in values {
        let i = (((v - lo) / width) * bins as f64) as usize;
        counts[i.min(bins - 1)] += 1;
    }
    (lo, hi, counts)
}

pub fn cmd_scan(cfg: &RunConfig, radius: Option<f64>, bins: usize) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let (state, ctx) = cfg.build_state(model.as_ref())?;
    let l = model.layout();
    let opts = cfg.analysis_options(l.higher_dim() - l.state_dim());
    let mut bs = assemble_balance(model.as_ref(), &state, &ctx)?;
    if let Some(values) = &opts.pin_hess {
        let start = l.state_dim();
        let fixed: Vec<(usize, f64)> = values.iter().enumerate().map(|(i, &v)| (start + i, v)).collect();
        bs = bs.with_fixed(&fixed).map_err(|e| Error::Config(e.to_string()))?;
    }
    let es = assemble_entropy(model.as_ref(), &state, &ctx)?;
    let sols = solve_balance(&bs, opts.rank_tol)?;
    let radius = radius.unwrap_or(opts.radius);
    if !(radius >= 0.0) {
        return Err(Error::Config(format!("radius {radius} must be non-negative")));
    }
    let k = opts.samples.max(1);
    let sig = sample_sigmas(&es, &sols, k, radius, opts.seed, opts.exec);
    let sigmas: Vec<f64> = sig.iter().map(|s| s.0).collect();
    let classes: crate::classify::ClassCounts = sig
        .iter()
        .map(|&(s, n)| VectorClass::of(s, opts.class_tol.resolve(&es, n)))
        .collect();
    let (lo, hi, counts) = histogram(&sigmas, bins);
    Ok(Outcome {
        report: json!({
            "command": "scan",
            "radius": radius,
            "count": k,
            "min_sigma": lo,
            "max_sigma": hi,
            "histogram": counts,
            "classes": classes,
            "both_signs": classes.real > 0 && classes.over_ideal > 0,
            "nullity": sols.nullity(),
            "seed": opts.seed,
            "model": model_json(cfg),
            "state": state_json(&state),
        }),
        code: EXIT_OK,
    })
}

fn parse_profile(cfg: &RunConfig) -> Result<Profile> {
    let s = &cfg.simulate;
    let base = s.base.unwrap_or(300.0);
    let amplitude = s.amplitude.unwrap_or(50.0);
    match s.profile.as_deref().unwrap_or("sine") {
        "uniform" => Ok(Profile::Uniform { theta: base }),
        "sine" => Ok(Profile::Sine { base, amplitude }),
        "quarter-sine" => Ok(Profile::QuarterSine { base, amplitude }),
        other => Err(Error::Config(format!(
            "unknown profile {other:?}; expected uniform, sine or quarter-sine"
        ))),
    }
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome> {
    let name = cfg.model_name();
    if !name.starts_with("fourier") {
        return Err(Error::Config(format!("simulation supports the fourier family, not {name:?}")));
    }
    let p = &cfg.model.params;
    let kappa = match name {
        "fourier-negkappa" => -p.kappa.abs(),
        _ => p.kappa,
    };
    let params = FourierParams {
        rho: p.rho,
        c: p.c,
        kappa: Conductivity {
            k0: kappa,
            k1: if name == "fourier-negkappa" { -p.kappa_slope.abs() } else { p.kappa_slope },
        },
        epsilon: p.epsilon.unwrap_or(if name == "fourier-gibbs-mismatch" { 0.2 } else { 0.0 }),
    };
    let model = models::fourier(params, 1)?;

    let s = &cfg.simulate;
    let nx = s.nx.unwrap_or(101);
    let length = s.length.unwrap_or(1.0);
    let profile = parse_profile(cfg)?;
    // the grid is rebuilt once dt is known; the first pass only fixes dx
    let probe = Grid1D::new(nx, length, 1.0, 1, Boundary::NeumannZero)?;
    let initial = profile.sample(&probe);
    let boundary = match s.boundary.as_deref().unwrap_or("dirichlet") {
        "dirichlet" => Boundary::Dirichlet {
            left: initial[0],
            right: initial[nx - 1],
        },
        "neumann" => Boundary::NeumannZero,
        other => return Err(Error::Config(format!("unknown boundary {other:?}"))),
    };
    let kmax = initial.iter().map(|&t| params.kappa.at(t).abs()).fold(0.0, f64::max);
    let dt = s
        .dt
        .unwrap_or_else(|| 0.8 * probe.max_stable_dt(p.rho * p.c, kmax).min(1.0));
    let grid = Grid1D::new(nx, length, dt, s.steps.unwrap_or(100), boundary)?;
    let traj = process::simulate_fourier_1d(&grid, &params, &initial)?;

    let tol = Tolerance::Relative(cfg.analysis.tol.unwrap_or(DEFAULT_TOL));
    let cls = classify_samples(&traj, &model, tol, Execution::default())?;
    let pr = ProcessReport::from_classifications(&cls)?;
    let flags = amendment_flags(&traj, &cls);
    if let Some(out) = &s.out {
        process::trajectory_export(&traj, &cls, out)?;
    }
    let over = flags
        .iter()
        .filter(|f| f.violation == crate::classify::Violation::OverIdeal)
        .count();
    Ok(Outcome {
        report: json!({
            "command": "simulate",
            "process_class": pr.class,
            "counts": pr.counts,
            "min_sigma": pr.min_sigma,
            "max_sigma": pr.max_sigma,
            "amendment_flags": flags.len(),
            "over_ideal_flags": over,
            "ideal_outside_equilibrium_flags": flags.len() - over,
            "first_flags": flags.iter().take(5).collect::<Vec<_>>(),
            "grid": grid,
            "samples": traj.len(),
            "csv": s.out,
            "seed": cfg.analysis.seed.unwrap_or(0),
            "model": model_json(cfg),
        }),
        code: if pr.class == crate::classify::ProcessClass::OverReversible {
            EXIT_INADMISSIBLE
        } else {
            EXIT_OK
        },
    })
}

fn render_text(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    if let Value::Object(map) = v {
        for (k, val) in map {
            match val {
                Value::Object(_) => {
                    out.push_str(&format!("{pad}{k}:\n"));
                    render_text(val, indent + 1, out);
                }
                _ => out.push_str(&format!("{pad}{k}: {}\n", scalar_text(val))),
            }
        }
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(scalar_text).collect();
            format!("[{}]", parts.join(", "))
        }
        other => other.to_string(),
    }
}

/// Renders a report in the requested format.
pub fn render(report: &Value, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("json values serialize");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut s = String::new();
            render_text(report, 0, &mut s);
            s
        }
    }
}

/// Parses `args`, runs the command, writes the report to `out` and returns
/// the process exit code. Errors go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            if code == EXIT_OK {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    let mut cfg = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_CONFIG;
            }
        },
        None => RunConfig::default(),
    };
    cfg.apply_globals(&cli);

    let result = match &cli.command {
        Command::Analyze(p) => {
            cfg.apply_point(p);
            cmd_analyze(&cfg)
        }
        Command::Classify { point, y } => {
            cfg.apply_point(point);
            cmd_classify(&cfg, y)
        }
        Command::Combine { point, y1, y2 } => {
            cfg.apply_point(point);
            cmd_combine(&cfg, y1, y2)
        }
        Command::Scan { point, radius, bins } => {
            cfg.apply_point(point);
            cmd_scan(&cfg, *radius, *bins)
        }
        Command::Simulate(s) => {
            cfg.apply_point(&s.point);
            let sim = &mut cfg.simulate;
            macro_rules! over {
                ($($f:ident),*) => { $( if s.$f.is_some() { sim.$f = s.$f.clone(); } )* };
            }
            over!(nx, length, dt, steps, profile, base, amplitude, boundary, out);
            cmd_simulate(&cfg)
        }
    };

    match result {
        Ok(o) => {
            let _ = out.write_all(render(&o.report, cfg.format()).as_bytes());
            o.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code_for(&e)
        }
    }
}
