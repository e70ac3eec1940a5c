//! `freeharness`: spectral measures, transition kernels, path simulation and
//! identity checks for the free quadratic harness, from the command line.
//!
//! Exit codes: 0 success (all checks pass), 1 a check reported FAIL,
//! 2 usage error, 3 invalid parameters or domain error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use freeharness::harnesscheck::{run_suite, CheckConfig, CheckReport, Suite, TripleGrid};
use freeharness::kernel::{
    check_chapman_kolmogorov, law_pi, simulate_paths, CkReport, PathConfig, Sampler, DEFAULT_SEED,
};
use freeharness::operator::{check_identity_435, check_identity_439, check_q_commutation, OpReport};
use freeharness::params::HarnessParams;
use freeharness::recurrence::martingale_recurrence;
use freeharness::spectral::moment_oracle;
use freeharness::Error;

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Round-trip formatting: 17 significant digits.
fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Parser)]
#[command(
    name = "freeharness",
    version,
    about = "Free quadratic harness: measures, kernels, simulation, identity checks",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// Parameter η
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    /// Parameter θ
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Parameter σ ≥ 0
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Parameter τ ≥ 0
    #[arg(long, allow_negative_numbers = true)]
    tau: Option<f64>,
    /// JSON file {"eta":…,"theta":…,"sigma":…,"tau":…}; flags override fields
    #[arg(long)]
    params_file: Option<PathBuf>,
}

impl ParamArgs {
    fn resolve(&self) -> Result<HarnessParams, Error> {
        let mut base = if let Some(path) = &self.params_file {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<HarnessParams>(&text)
                .map_err(|e| Error::Domain(format!("cannot parse {}: {e}", path.display())))?
        } else {
            HarnessParams { eta: 0.0, theta: 0.0, sigma: 0.0, tau: 0.0 }
        };
        if let Some(v) = self.eta {
            base.eta = v;
        }
        if let Some(v) = self.theta {
            base.theta = v;
        }
        if let Some(v) = self.sigma {
            base.sigma = v;
        }
        if let Some(v) = self.tau {
            base.tau = v;
        }
        base.validate()?;
        Ok(base)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Density of the marginal law π_t on a grid (CSV columns: x,density)
    Density {
        #[command(flatten)]
        params: ParamArgs,
        /// Time t > 0
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Number of grid points across the support
        #[arg(long, default_value_t = 1001)]
        points: usize,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the atoms CSV (location,weight); derived from
        /// --out as `<stem>_atoms.csv` when omitted and --out is given
        #[arg(long)]
        atoms_out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Atoms of the marginal law π_t (CSV columns: location,weight)
    Atoms {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Moments of π_t from the Jacobi-matrix oracle (CSV columns: degree,moment)
    Moments {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Largest degree to report
        #[arg(long, default_value_t = 12)]
        max_degree: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Draw samples from π_t (CSV columns: index,value)
    Sample {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Number of draws
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Simulate Markov paths (CSV columns: path_id,t,value)
    Path {
        #[command(flatten)]
        params: ParamArgs,
        /// Comma-separated strictly increasing positive times
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        /// Number of independent paths
        #[arg(long, default_value_t = 1)]
        paths: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Verify the Chapman–Kolmogorov equation through moments (JSON report)
    CkCheck {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 2.0)]
        u: f64,
        /// Conditioning value (median quadrature node of the initial law
        /// when omitted)
        #[arg(long, allow_negative_numbers = true)]
        x: Option<f64>,
        /// Highest moment degree compared
        #[arg(long, default_value_t = 10)]
        degree: usize,
        /// Tolerance on scaled moment residuals
        #[arg(long, default_value_t = 1e-7)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the operator identities (q-commutation, quadratic form,
    /// recurrence encoding) on the truncated monomial basis (JSON report)
    OpCheck {
        #[command(flatten)]
        params: ParamArgs,
        /// Matrix truncation dimension
        #[arg(long, default_value_t = 40)]
        n: usize,
        #[arg(long, default_value_t = 0.7)]
        s: f64,
        #[arg(long, default_value_t = 1.3)]
        t: f64,
        #[arg(long, default_value_t = 2.9)]
        u: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a harness verification suite over the standard triple grid
    /// (JSON report)
    Check {
        #[command(flatten)]
        params: ParamArgs,
        /// covariance | linreg | quadvar | condvar | all
        #[arg(long, default_value = "all")]
        suite: String,
        /// Gauss order of every nesting level
        #[arg(long, default_value_t = 64)]
        order: usize,
        /// Degree cap of the polynomial identities
        #[arg(long, default_value_t = 4)]
        max_degree: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::Domain(format!("cannot write to stdout: {e}")))
        }
    }
}

/// Rows → CSV text or a JSON array of objects with the given field names.
fn render_table(format: Format, header: &[&str], rows: &[Vec<String>]) -> String {
    match format {
        Format::Csv => {
            let mut text = String::new();
            text.push_str(&header.join(","));
            text.push('\n');
            for row in rows {
                text.push_str(&row.join(","));
                text.push('\n');
            }
            text
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|row| {
                    let map: serde_json::Map<String, serde_json::Value> = header
                        .iter()
                        .zip(row)
                        .map(|(k, v)| {
                            let value = v
                                .parse::<f64>()
                                .map(|f| serde_json::json!(f))
                                .unwrap_or_else(|_| serde_json::json!(v));
                            (k.to_string(), value)
                        })
                        .collect();
                    serde_json::Value::Object(map)
                })
                .collect();
            let mut text =
                serde_json::to_string_pretty(&items).expect("table serialization cannot fail");
            text.push('\n');
            text
        }
    }
}

#[derive(Serialize)]
struct CkEnvelope<'a> {
    tool_version: &'a str,
    report: &'a CkReport,
}

#[derive(Serialize)]
struct OpEnvelope<'a> {
    tool_version: &'a str,
    params: HarnessParams,
    reports: Vec<OpReport>,
    pass: bool,
    #[serde(skip)]
    _marker: std::marker::PhantomData<&'a ()>,
}

#[derive(Serialize)]
struct SuiteEnvelope<'a> {
    tool_version: &'a str,
    params: HarnessParams,
    suite: &'a str,
    order: usize,
    max_degree: usize,
    reports: Vec<CheckReport>,
    pass: bool,
}

/// Ok(true): all checks passed; Ok(false): a check reported FAIL.
fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Density { params, t, points, out, atoms_out, format } => {
            let p = params.resolve()?;
            if points < 2 {
                return Err(Error::Domain("need at least 2 grid points".into()));
            }
            let m = law_pi(&p, t)?;
            let (am, ap) = m.ac_interval;
            let rows: Vec<Vec<String>> = (0..points)
                .map(|k| {
                    let x = am + (ap - am) * k as f64 / (points - 1) as f64;
                    vec![fmt_f(x), fmt_f(m.density(x))]
                })
                .collect();
            write_text(out.as_deref(), &render_table(format, &["x", "density"], &rows))?;

            let atoms_path = atoms_out.or_else(|| {
                out.as_ref().map(|p| {
                    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("density");
                    p.with_file_name(format!("{stem}_atoms.csv"))
                })
            });
            if let Some(path) = atoms_path {
                let rows: Vec<Vec<String>> = m
                    .atoms
                    .iter()
                    .map(|a| vec![fmt_f(a.location), fmt_f(a.weight)])
                    .collect();
                write_text(Some(&path), &render_table(format, &["location", "weight"], &rows))?;
            }
            Ok(true)
        }
        Command::Atoms { params, t, out, format } => {
            let p = params.resolve()?;
            let m = law_pi(&p, t)?;
            let rows: Vec<Vec<String>> = m
                .atoms
                .iter()
                .map(|a| vec![fmt_f(a.location), fmt_f(a.weight)])
                .collect();
            write_text(out.as_deref(), &render_table(format, &["location", "weight"], &rows))?;
            Ok(true)
        }
        Command::Moments { params, t, max_degree, out, format } => {
            let p = params.resolve()?;
            let rec = martingale_recurrence(&p, t)?;
            let rows: Vec<Vec<String>> = (0..=max_degree)
                .map(|k| vec![k.to_string(), fmt_f(moment_oracle(&rec, k))])
                .collect();
            write_text(out.as_deref(), &render_table(format, &["degree", "moment"], &rows))?;
            Ok(true)
        }
        Command::Sample { params, t, n, seed, out, format } => {
            use rand::SeedableRng;
            let p = params.resolve()?;
            let m = law_pi(&p, t)?;
            let sampler = Sampler::new(&m, 4096)?;
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let rows: Vec<Vec<String>> = (0..n)
                .map(|i| vec![i.to_string(), fmt_f(sampler.draw(&mut rng))])
                .collect();
            write_text(out.as_deref(), &render_table(format, &["index", "value"], &rows))?;
            Ok(true)
        }
        Command::Path { params, times, paths, seed, out, format } => {
            let p = params.resolve()?;
            let cfg = PathConfig::default();
            let all = simulate_paths(&p, &times, paths, seed, &cfg)?;
            let mut rows = Vec::with_capacity(paths * times.len());
            for (id, path) in all.iter().enumerate() {
                for (t, v) in path.times.iter().zip(&path.values) {
                    rows.push(vec![id.to_string(), fmt_f(*t), fmt_f(*v)]);
                }
            }
            write_text(out.as_deref(), &render_table(format, &["path_id", "t", "value"], &rows))?;
            Ok(true)
        }
        Command::CkCheck { params, s, t, u, x, degree, tolerance, out } => {
            let p = params.resolve()?;
            let report = check_chapman_kolmogorov(&p, s, t, u, x, degree, tolerance)?;
            let text = serde_json::to_string_pretty(&CkEnvelope {
                tool_version: VERSION,
                report: &report,
            })
            .expect("report serialization cannot fail");
            write_text(out.as_deref(), &(text + "\n"))?;
            Ok(report.pass)
        }
        Command::OpCheck { params, n, s, t, u, out } => {
            let p = params.resolve()?;
            if !(s < t && t < u) {
                return Err(Error::Domain("need s < t < u".into()));
            }
            let reports = vec![
                check_q_commutation(&p, n, 1e-11),
                check_identity_435(&p, s, t, u, n, 1e-10),
                check_identity_439(&p, t, n, 1e-10),
            ];
            let pass = reports.iter().all(|r| r.pass);
            let text = serde_json::to_string_pretty(&OpEnvelope {
                tool_version: VERSION,
                params: p,
                reports,
                pass,
                _marker: std::marker::PhantomData,
            })
            .expect("report serialization cannot fail");
            write_text(out.as_deref(), &(text + "\n"))?;
            Ok(pass)
        }
        Command::Check { params, suite, order, max_degree, out } => {
            let p = params.resolve()?;
            let suite_kind: Suite = suite.parse().map_err(Error::Domain)?;
            let threads = std::env::var("FREEHARNESS_THREADS")
                .ok()
                .and_then(|v| v.parse::<usize>().ok())
                .filter(|&v| v > 0);
            let cfg = CheckConfig { order, threads, ..CheckConfig::default() };
            let grid = TripleGrid::new(
                vec![(0.5, 1.0, 2.0), (1.0, 2.0, 4.0), (0.25, 0.5, 0.75)],
                max_degree,
            )?;
            let reports = run_suite(&p, suite_kind, &grid, &cfg)?;
            let pass = reports.iter().all(|r| r.pass);
            let text = serde_json::to_string_pretty(&SuiteEnvelope {
                tool_version: VERSION,
                params: p,
                suite: &suite,
                order,
                max_degree,
                reports,
                pass,
            })
            .expect("report serialization cannot fail");
            write_text(out.as_deref(), &(text + "\n"))?;
            Ok(pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
