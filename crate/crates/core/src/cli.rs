//! Command-line front end. [`run`] parses arguments, dispatches and maps
//! failures to exit codes: 2 for bad input, 3 for numerical failures.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baxter::{limit_integral, limit_integral_gamma, BaxterSweep};
use crate::duality::ArCoefficient;
use crate::error::{LrdError, Result};
use crate::kernels::{b_closed_form, eval_b, h_closed_form, KernelRoute, KernelTable};
use crate::model::LrdModel;
use crate::montecarlo::{uniform_grid, validate_prediction, PathSimulator};
use crate::prediction::{infinite_error, predict, FinitePredictor, PredictionWindow};
use crate::quad::QuadratureConfig;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "lrd", version, about = "Prediction kernels and errors for long-memory Gaussian processes")]
pub struct Cli {
    /// Model document, e.g. {"kind": "two_index", "H": 0.75, "H0": 0.6}.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Output file; standard output if absent.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Relative quadrature tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 20240601)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// b, b_2, b_3 and h on a grid, for a kernel table at t2.
    Kernel(KernelArgs),
    /// t, a(t), α(t), β(t) on a log grid.
    Ar(ArArgs),
    /// Predictor coefficients and error variances for one window.
    Predict(WindowArgs),
    /// Both sides of the Baxter inequality over a list of t0.
    Baxter(BaxterArgs),
    /// Simulated paths on a uniform grid.
    Simulate(SimulateArgs),
    /// Monte Carlo check of the finite-past predictor.
    Validate(ValidateArgs),
    /// Built-in identity checks.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[arg(long)]
    t2: f64,
    /// Points per axis.
    #[arg(long, default_value_t = 8)]
    points: usize,
    #[arg(long, default_value_t = 0.1)]
    u_lo: f64,
    #[arg(long, default_value_t = 10.0)]
    u_hi: f64,
}

#[derive(Args, Debug)]
struct ArArgs {
    #[arg(long, default_value_t = 1e-2)]
    lo: f64,
    #[arg(long, default_value_t = 1e2)]
    hi: f64,
    #[arg(long, default_value_t = 41)]
    points: usize,
    /// Invert the transform even for fBm.
    #[arg(long)]
    numeric: bool,
}

#[derive(Args, Debug)]
struct WindowArgs {
    #[arg(long)]
    t0: f64,
    #[arg(long, allow_hyphen_values = true)]
    t1: f64,
    #[arg(long = "T")]
    big_t: f64,
    /// Finite-past coefficient samples.
    #[arg(long, default_value_t = 33)]
    samples: usize,
}

#[derive(Args, Debug)]
struct BaxterArgs {
    /// fBm Hurst index; overrides --model.
    #[arg(long = "H")]
    h: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t1: f64,
    #[arg(long = "T")]
    big_t: f64,
    #[arg(long = "t0-list", value_delimiter = ',', required = true)]
    t0_list: Vec<f64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, allow_hyphen_values = true)]
    hi: f64,
    #[arg(long)]
    step: f64,
    #[arg(long, default_value_t = 1)]
    replicates: u64,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    t0: f64,
    #[arg(long, allow_hyphen_values = true)]
    t1: f64,
    #[arg(long = "T")]
    big_t: f64,
    #[arg(long, default_value_t = 1.0 / 256.0)]
    step: f64,
    #[arg(long, default_value_t = 2000)]
    replicates: usize,
    /// Per-replicate residual CSV.
    #[arg(long)]
    residuals: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    FbmClosedForms,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::FbmClosedForms)]
    suite: Suite,
}

fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn model_from(cli: &Cli) -> Result<LrdModel> {
    match &cli.model {
        Some(path) => LrdModel::from_json(&fs::read_to_string(path)?),
        None => Err(LrdError::InvalidArgument("--model is required".into())),
    }
}

fn quad_config(cli: &Cli) -> Result<QuadratureConfig> {
    let q = QuadratureConfig::default();
    let q = match cli.tol {
        Some(t) => q.with_rel_tol(t),
        None => q,
    };
    q.validate()?;
    Ok(q)
}

fn log_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn kernel(cli: &Cli, a: &KernelArgs, out: &mut dyn Write) -> Result<()> {
    let q = quad_config(cli)?;
    let model = model_from(cli)?;
    let ar = Arc::new(ArCoefficient::new(&model)?);
    let table = KernelTable::build(ar, a.t2, &q)?;
    let n = a.points.max(1);
    let d = model.d();
    write!(out, "t_or_s,u,b,b2,b3,h")?;
    if model.is_fbm() {
        write!(out, ",h_closed_form")?;
    }
    writeln!(out)?;
    for i in 0..n {
        let s = a.t2 * (i as f64 + 0.5) / n as f64;
        for u in log_points(a.u_lo, a.u_hi, n) {
            let b = table.eval_b_n(1, a.t2 - s, u)?;
            let b2 = table.eval_b_n(2, s, u)?;
            let b3 = table.eval_b_n(3, a.t2 - s, u)?;
            let h = table.eval_h(s, u)?;
            write!(out, "{},{},{},{},{},{}", num(s), num(u), num(b), num(b2), num(b3), num(h))?;
            if model.is_fbm() {
                write!(out, ",{}", num(h_closed_form(d, a.t2, s, u)))?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

fn ar(cli: &Cli, a: &ArArgs, out: &mut dyn Write) -> Result<()> {
    let q = quad_config(cli)?;
    let model = model_from(cli)?;
    let coeff = if a.numeric {
        ArCoefficient::numeric(&model.as_numeric(), crate::duality::DEFAULT_INVERSION_NODES)?
    } else {
        ArCoefficient::new(&model)?
    };
    writeln!(out, "t,a,alpha,beta")?;
    for t in log_points(a.lo, a.hi, a.points) {
        let beta = coeff.eval_beta(t, &q)?;
        writeln!(out, "{},{},{},{}", num(t), num(coeff.a(t)), num(coeff.alpha(t)), num(beta))?;
    }
    Ok(())
}

fn window_predictor(model: &LrdModel, w: PredictionWindow, q: &QuadratureConfig) -> Result<FinitePredictor> {
    let ar = Arc::new(ArCoefficient::new(model)?);
    let table = Arc::new(KernelTable::build(ar, w.t2(), q)?);
    FinitePredictor::new(table, w, q)
}

fn predict_cmd(cli: &Cli, a: &WindowArgs, out: &mut dyn Write) -> Result<()> {
    let q = quad_config(cli)?;
    let model = model_from(cli)?;
    let w = PredictionWindow::new(a.t0, a.t1, a.big_t)?;
    let pred = window_predictor(&model, w, &q)?;
    let r = predict(&pred, a.samples, &q)?;
    writeln!(out, "t0 = {}", num(w.t0))?;
    writeln!(out, "t1 = {}", num(w.t1))?;
    writeln!(out, "T = {}", num(w.big_t))?;
    writeln!(out, "infinite_error_var = {}", num(r.infinite_error_var))?;
    writeln!(out, "finite_error_var = {}", num(r.finite_error_var))?;
    writeln!(out, "series_terms = {}", r.series_terms)?;
    writeln!(out, "truncation_estimate = {}", num(r.truncation_estimate))?;
    writeln!(out, "infinite_truncation_lag = {}", num(r.infinite_truncation_lag))?;
    writeln!(out, "infinite_truncated_mass = {}", num(r.infinite_truncated_mass))?;
    writeln!(out, "\n[dn_terms]\nn,contribution")?;
    for (n, v) in r.dn_term_contributions.iter().enumerate() {
        writeln!(out, "{},{}", n + 1, num(*v))?;
    }
    writeln!(out, "\n[finite_coefficients]\ns,coefficient")?;
    for (s, v) in &r.finite_coeff_samples {
        writeln!(out, "{},{}", num(*s), num(*v))?;
    }
    writeln!(out, "\n[infinite_coefficients]\ns,coefficient")?;
    for (s, v) in &r.infinite_coeff_samples {
        writeln!(out, "{},{}", num(*s), num(*v))?;
    }
    Ok(())
}

fn baxter_cmd(cli: &Cli, a: &BaxterArgs, out: &mut dyn Write) -> Result<()> {
    let q = quad_config(cli)?;
    let model = match a.h {
        Some(h) => LrdModel::fbm(h)?,
        None => model_from(cli)?,
    };
    let ar = Arc::new(ArCoefficient::new(&model)?);
    let sweep = BaxterSweep::run(ar, a.t1, a.big_t, &a.t0_list, &q)?;
    writeln!(out, "t0,lhs,rhs,ratio,limit_constant")?;
    for (i, t0) in sweep.t0_values.iter().enumerate() {
        let (l, r) = (sweep.lhs_values[i], sweep.rhs_values[i]);
        writeln!(out, "{},{},{},{},{}", num(*t0), num(l), num(r), num(l / r), num(sweep.limit_constant))?;
    }
    Ok(())
}

fn simulate_cmd(cli: &Cli, a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let q = quad_config(cli)?;
    let model = model_from(cli)?;
    let grid = uniform_grid(a.lo, a.hi, a.step)?;
    let sim = PathSimulator::new(&model, &grid, &q)?;
    if sim.jitter() > 0.0 {
        log::warn!("jitter {:e} added to the covariance", sim.jitter());
    }
    writeln!(out, "replicate,t,x")?;
    for r in 0..a.replicates {
        let p = sim.sample(cli.seed, r);
        for (t, x) in p.grid_times.iter().zip(&p.values) {
            writeln!(out, "{r},{},{}", num(*t), num(*x))?;
        }
    }
    Ok(())
}

fn validate_cmd(cli: &Cli, a: &ValidateArgs, out: &mut dyn Write) -> Result<()> {
    let q = quad_config(cli)?;
    let model = model_from(cli)?;
    let w = PredictionWindow::new(a.t0, a.t1, a.big_t)?;
    let pred = window_predictor(&model, w, &q)?;
    let r = validate_prediction(&pred, a.step, a.replicates, cli.seed, &q)?;
    writeln!(out, "replicates = {}", r.replicates)?;
    writeln!(out, "grid_step = {}", num(r.grid_step))?;
    writeln!(out, "empirical_mse = {}", num(r.empirical_mse))?;
    writeln!(out, "theoretical_var = {}", num(r.theoretical_var))?;
    writeln!(out, "standard_error = {}", num(r.standard_error))?;
    writeln!(out, "empirical_bias = {}", num(r.empirical_bias))?;
    writeln!(out, "bias_standard_error = {}", num(r.bias_standard_error))?;
    writeln!(out, "discretized_mse = {}", num(r.discretized_mse))?;
    writeln!(out, "discretization_allowance = {}", num(r.discretization_allowance))?;
    writeln!(out, "trivial_mse = {}", num(r.trivial_mse))?;
    writeln!(out, "jitter = {}", num(r.jitter))?;
    for (s, c) in &r.residual_correlations {
        writeln!(out, "residual_correlation[{}] = {}", num(*s), num(*c))?;
    }
    writeln!(out, "mse_consistent = {}", r.mse_consistent())?;
    writeln!(out, "unbiased = {}", r.unbiased())?;
    writeln!(out, "orthogonal = {}", r.orthogonal())?;
    for msg in &r.warnings {
        writeln!(out, "warning = {msg}")?;
    }
    if let Some(path) = &a.residuals {
        let mut f = BufWriter::new(fs::File::create(path)?);
        writeln!(f, "replicate,residual")?;
        for (i, x) in r.residuals.iter().enumerate() {
            writeln!(f, "{i},{}", num(*x))?;
        }
        f.flush()?;
    }
    Ok(())
}

struct Check {
    name: &'static str,
    value: f64,
    reference: f64,
    tol: f64,
}

impl Check {
    fn passed(&self) -> bool {
        (self.value - self.reference).abs() <= self.tol * self.reference.abs().max(1e-300)
    }
}

fn fbm_checks(q: &QuadratureConfig) -> Result<Vec<Check>> {
    let h = 0.75;
    let d = h - 0.5;
    let model = LrdModel::fbm(h)?;
    let ar = ArCoefficient::new(&model)?;
    let numeric = ArCoefficient::numeric(&model.as_numeric(), crate::duality::DEFAULT_INVERSION_NODES)?;
    let table = KernelTable::build(Arc::new(ArCoefficient::new(&model)?), 2.0, q)?;
    let w = PredictionWindow::new(1.0, 0.0, 1.0)?;
    Ok(vec![
        Check {
            name: "kernel_b_quadrature",
            value: eval_b(&numeric, 1.0, 1.0, q, KernelRoute::Numeric)?,
            reference: b_closed_form(d, 1.0, 1.0),
            tol: 1e-6,
        },
        Check {
            name: "ar_inversion",
            value: numeric.alpha(1.0),
            reference: ar.alpha(1.0),
            tol: 1e-5,
        },
        Check {
            name: "duality_roundtrip",
            value: 1.0 + numeric.duality_residual(1.0, q)?,
            reference: 1.0,
            tol: 1e-5,
        },
        Check {
            name: "h_series",
            value: table.eval_h(1.0, 1.0)?,
            reference: h_closed_form(d, 2.0, 1.0, 1.0),
            tol: 1e-4,
        },
        Check {
            name: "variogram_constant",
            value: model.as_numeric().variogram(1.0, q)?,
            reference: model.variogram(1.0, q)?,
            tol: 1e-6,
        },
        Check {
            name: "infinite_past_error",
            value: infinite_error(&numeric, &w, q)?,
            reference: infinite_error(&ar, &w, q)?,
            tol: 1e-6,
        },
        Check {
            name: "baxter_limit_integral",
            value: limit_integral(d, q)?,
            reference: limit_integral_gamma(d),
            tol: 1e-6,
        },
    ])
}

fn verify(cli: &Cli, a: &VerifyArgs, out: &mut dyn Write) -> Result<bool> {
    let q = quad_config(cli)?;
    let checks = match a.suite {
        Suite::FbmClosedForms => fbm_checks(&q)?,
    };
    let mut all = true;
    for c in &checks {
        let ok = c.passed();
        all &= ok;
        writeln!(
            out,
            "{} {} value={} reference={} tol={}",
            if ok { "PASS" } else { "FAIL" },
            c.name,
            num(c.value),
            num(c.reference),
            c.tol
        )?;
    }
    Ok(all)
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<bool> {
    match &cli.command {
        Command::Kernel(a) => kernel(cli, a, out)?,
        Command::Ar(a) => ar(cli, a, out)?,
        Command::Predict(a) => predict_cmd(cli, a, out)?,
        Command::Baxter(a) => baxter_cmd(cli, a, out)?,
        Command::Simulate(a) => simulate_cmd(cli, a, out)?,
        Command::Validate(a) => validate_cmd(cli, a, out)?,
        Command::Verify(a) => return verify(cli, a, out),
    }
    Ok(true)
}

fn error_line(e: &LrdError) -> String {
    format!("error kind={} message={:?}", e.kind(), e.to_string())
}

/// Run the CLI and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = (|| -> Result<bool> {
        let mut out: Box<dyn Write + Send> = match &cli.output {
            Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.threads {
            pool = pool.num_threads(n);
        }
        let pool = pool
            .build()
            .map_err(|e| LrdError::InvalidArgument(format!("thread pool: {e}")))?;
        let ok = pool.install(|| dispatch(&cli, &mut *out))?;
        out.flush()?;
        Ok(ok)
    })();
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}
