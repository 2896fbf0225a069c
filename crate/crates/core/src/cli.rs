//! Command-line front end. [`run`] validates a [`RunConfig`], dispatches to
//! the estimators and returns the serialized report.

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::dist::{cdf_mc, laplace_transform, pdf_mc, MvGammaParams};
use crate::error::{Error, Result};
use crate::gci::{
    averaged_correlations, cdf_tau_derivative_decomposed, cdf_tau_derivative_fd, coefficient_table,
    discrepancy_in_se, gci_gap, BlockPartition, Decomposition, GapOptions, DEFAULT_TAUS, MC_FD_STEP,
};
use crate::matrix::{random_correlation, CorrelationMatrix};
use crate::mc::McEstimate;
use crate::oracle::{cdf_oracle, lt_oracle, OracleParams};
use crate::rng::RngStream;
use crate::special::{SeriesControl, ShapeParameter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exact Laplace transform |I + RT|^(-alpha)
    Lt,
    /// Monte Carlo distribution function
    Cdf,
    /// Monte Carlo density
    Pdf,
    /// Gaussian-sampling distribution function (integer 2*alpha)
    OracleCdf,
    /// Gaussian-sampling Laplace transform (integer 2*alpha)
    OracleLt,
    /// Block-product gap with optional tau-derivative checks
    GciCheck,
    /// Decomposed tau-derivative against a finite difference
    GciDerivative,
    /// Subset coefficient table
    Coeffs,
    /// Block-averaged correlations
    AveragedCorr,
    /// Random correlation matrix
    GenMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "mvgamma", version, about = "Multivariate gamma distributions and the Gaussian correlation inequality")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "matrix")]
    pub matrix_path: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub t: Vec<f64>,
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub tau: Vec<f64>,
    /// Add tau-derivative checks at 0.25, 0.5, 0.75 to gci-check
    #[arg(long)]
    pub tau_checks: bool,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub series_eps: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub series_max_terms: usize,
    #[arg(long = "format", value_enum, default_value_t = Format::Json)]
    pub output: Format,
    /// Dimension for gen-matrix
    #[arg(long)]
    pub n: Option<usize>,
    /// Minimal eigenvalue floor for gen-matrix
    #[arg(long, default_value_t = 0.05)]
    pub min_eig_floor: f64,
}

impl RunConfig {
    /// Defaults for `command` with every optional field unset.
    pub fn new(command: Command) -> Self {
        Self {
            command,
            alpha: None,
            matrix_path: None,
            x: Vec::new(),
            t: Vec::new(),
            n1: None,
            tau: Vec::new(),
            tau_checks: false,
            samples: 100_000,
            seed: 42,
            series_eps: 1e-12,
            series_max_terms: 1_000_000,
            output: Format::Json,
            n: None,
            min_eig_floor: 0.05,
        }
    }

    /// Checks that every field the command needs is present.
    pub fn validate(&self) -> Result<()> {
        use Command::*;
        let c = self.command;
        let missing = |what: &str| Err(Error::InvalidInput(format!("{} requires {what}", name(c))));
        let needs_alpha = !matches!(c, AveragedCorr | GenMatrix);
        let needs_matrix = c != GenMatrix;
        let needs_x = matches!(c, Cdf | Pdf | OracleCdf | GciCheck | GciDerivative);
        let needs_t = matches!(c, Lt | OracleLt);
        let needs_n1 = matches!(c, GciCheck | GciDerivative | Coeffs | AveragedCorr);
        if needs_alpha && self.alpha.is_none() {
            return missing("--alpha");
        }
        if needs_matrix && self.matrix_path.is_none() {
            return missing("--matrix");
        }
        if needs_x && self.x.is_empty() {
            return missing("--x");
        }
        if needs_t && self.t.is_empty() {
            return missing("--t");
        }
        if needs_n1 && self.n1.is_none() {
            return missing("--n1");
        }
        if c == GenMatrix && self.n.is_none() {
            return missing("--n");
        }
        if self.output == Format::Csv && !matches!(c, Coeffs | GenMatrix) {
            return Err(Error::InvalidInput(format!(
                "--format csv is only available for coeffs and gen-matrix, not {}",
                name(c)
            )));
        }
        if self.samples == 0 {
            return Err(Error::InvalidInput("--samples must be positive".into()));
        }
        SeriesControl::new(self.series_eps, self.series_max_terms)?;
        Ok(())
    }

    fn series(&self) -> Result<SeriesControl> {
        SeriesControl::new(self.series_eps, self.series_max_terms)
    }

    fn shape(&self) -> Result<ShapeParameter> {
        ShapeParameter::new(self.alpha.expect("validated"))
    }

    fn matrix(&self) -> Result<CorrelationMatrix> {
        CorrelationMatrix::load(self.matrix_path.as_ref().expect("validated"))
    }

    fn partition(&self, n: usize) -> Result<BlockPartition> {
        BlockPartition::new(n, self.n1.expect("validated"))
    }

    fn taus(&self, default: &[f64]) -> Vec<f64> {
        if self.tau.is_empty() {
            default.to_vec()
        } else {
            self.tau.clone()
        }
    }

    fn stream(&self) -> RngStream {
        RngStream::new(self.seed, 0)
    }
}

fn name(c: Command) -> String {
    c.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct EstimateReport<'a> {
    command: Command,
    alpha: f64,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<&'a [f64]>,
    #[serde(flatten)]
    estimate: McEstimate,
}

#[derive(Serialize)]
struct LtReport<'a> {
    command: Command,
    alpha: f64,
    n: usize,
    t: &'a [f64],
    value: f64,
}

#[derive(Serialize)]
struct DerivativeCheck {
    tau: f64,
    decomposition: Decomposition,
    finite_difference: McEstimate,
    fd_step: f64,
    discrepancy_se: f64,
    within_3se: bool,
}

#[derive(Serialize)]
struct DerivativeReport {
    command: Command,
    alpha: f64,
    n: usize,
    n1: usize,
    x: Vec<f64>,
    samples: usize,
    seed: u64,
    checks: Vec<DerivativeCheck>,
}

#[derive(Serialize)]
struct CoefficientRow {
    j1: Vec<usize>,
    j2: Vec<usize>,
    rank: usize,
    c: Vec<f64>,
}

#[derive(Serialize)]
struct CoefficientReport {
    command: Command,
    alpha: f64,
    n: usize,
    n1: usize,
    taus: Vec<f64>,
    rows: Vec<CoefficientRow>,
}

#[derive(Serialize)]
struct AveragedReport {
    command: Command,
    n: usize,
    n1: usize,
    #[serde(flatten)]
    averages: crate::gci::AveragedCorrelations,
}

/// Keys whose value may legitimately be `null` (optional report fields).
const NULLABLE: [&str; 5] = ["rho1", "rho2", "note", "tau_derivative_closed_form_check", "decomposition_check"];

/// serde_json writes non-finite floats as `null`, so any `null` outside the
/// optional fields marks a NaN or infinity.
fn check_finite(key: Option<&str>, value: &serde_json::Value) -> Result<()> {
    match value {
        serde_json::Value::Null if !key.is_some_and(|k| NULLABLE.contains(&k)) => Err(Error::Internal(format!(
            "non-finite number in report field {}",
            key.unwrap_or("<item>")
        ))),
        serde_json::Value::Array(items) => items.iter().try_for_each(|v| check_finite(key, v)),
        serde_json::Value::Object(map) => map.iter().try_for_each(|(k, v)| check_finite(Some(k), v)),
        _ => Ok(()),
    }
}

fn emit<T: Serialize>(value: &T) -> Result<String> {
    let json = serde_json::to_value(value).map_err(|e| Error::Internal(e.to_string()))?;
    check_finite(None, &json)?;
    let mut text = serde_json::to_string_pretty(&json).map_err(|e| Error::Internal(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn fmt_set(idx: &[usize]) -> String {
    idx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

/// Runs one command and returns its serialized output.
pub fn run(config: &RunConfig) -> Result<String> {
    config.validate()?;
    let stream = config.stream();
    match config.command {
        Command::GenMatrix => {
            let r = random_correlation(config.n.expect("validated"), config.seed, config.min_eig_floor)?;
            Ok(match config.output {
                Format::Json => {
                    let mut s = r.to_json();
                    s.push('\n');
                    s
                }
                Format::Csv => r.to_csv(),
            })
        }
        Command::AveragedCorr => {
            let r = config.matrix()?;
            let part = config.partition(r.dim())?;
            emit(&AveragedReport {
                command: config.command,
                n: r.dim(),
                n1: part.n1(),
                averages: averaged_correlations(&r, part)?,
            })
        }
        Command::Lt => {
            let r = config.matrix()?;
            let p = MvGammaParams::new(config.shape()?, r)?;
            let value = laplace_transform(&p, &config.t)?;
            emit(&LtReport {
                command: config.command,
                alpha: p.alpha().alpha(),
                n: p.dim(),
                t: &config.t,
                value,
            })
        }
        Command::Cdf | Command::Pdf => {
            let r = config.matrix()?;
            let p = MvGammaParams::new(config.shape()?, r)?.with_series(config.series()?);
            let estimate = if config.command == Command::Cdf {
                cdf_mc(&p, &config.x, config.samples, stream)?
            } else {
                pdf_mc(&p, &config.x, config.samples, stream)?
            };
            emit(&EstimateReport {
                command: config.command,
                alpha: p.alpha().alpha(),
                n: p.dim(),
                x: Some(&config.x),
                t: None,
                estimate,
            })
        }
        Command::OracleCdf | Command::OracleLt => {
            let r = config.matrix()?;
            let alpha = config.shape()?;
            let n = r.dim();
            let p = OracleParams::from_alpha(alpha.alpha(), r)?;
            let (x, t, estimate) = if config.command == Command::OracleCdf {
                (Some(config.x.as_slice()), None, cdf_oracle(&p, &config.x, config.samples, stream)?)
            } else {
                (None, Some(config.t.as_slice()), lt_oracle(&p, &config.t, config.samples, stream)?)
            };
            emit(&EstimateReport {
                command: config.command,
                alpha: alpha.alpha(),
                n,
                x,
                t,
                estimate,
            })
        }
        Command::GciCheck => {
            let r = config.matrix()?;
            let part = config.partition(r.dim())?;
            let taus = if config.tau_checks || !config.tau.is_empty() {
                config.taus(&DEFAULT_TAUS)
            } else {
                Vec::new()
            };
            let options = GapOptions {
                taus,
                series: config.series()?,
            };
            let report = gci_gap(&r, part, config.shape()?, &config.x, config.samples, stream, &options)?;
            emit(&report)
        }
        Command::GciDerivative => {
            let r = config.matrix()?;
            let part = config.partition(r.dim())?;
            let alpha = config.shape()?;
            let series = config.series()?;
            let mut checks = Vec::new();
            for (i, tau) in config.taus(&[0.5]).into_iter().enumerate() {
                let decomposition = cdf_tau_derivative_decomposed(
                    &r,
                    part,
                    tau,
                    alpha,
                    &config.x,
                    config.samples,
                    stream.with_stream(2 * i as u64),
                    series,
                )?;
                let fd = cdf_tau_derivative_fd(
                    &r,
                    part,
                    tau,
                    alpha,
                    &config.x,
                    MC_FD_STEP,
                    config.samples,
                    stream.with_stream(2 * i as u64 + 1),
                    series,
                )?;
                let discrepancy_se = discrepancy_in_se(&decomposition.total, &fd);
                checks.push(DerivativeCheck {
                    tau,
                    decomposition,
                    finite_difference: fd,
                    fd_step: MC_FD_STEP,
                    discrepancy_se,
                    within_3se: discrepancy_se <= 3.0,
                });
            }
            emit(&DerivativeReport {
                command: config.command,
                alpha: alpha.alpha(),
                n: r.dim(),
                n1: part.n1(),
                x: config.x.clone(),
                samples: config.samples,
                seed: config.seed,
                checks,
            })
        }
        Command::Coeffs => {
            let r = config.matrix()?;
            let part = config.partition(r.dim())?;
            let alpha = config.shape()?;
            let taus = config.taus(&DEFAULT_TAUS);
            let tables = taus
                .iter()
                .map(|&tau| coefficient_table(&r, part, tau, alpha))
                .collect::<Result<Vec<_>>>()?;
            let rows: Vec<CoefficientRow> = (0..tables.first().map_or(0, Vec::len))
                .map(|k| {
                    let e = &tables[0][k];
                    CoefficientRow {
                        j1: e.j1.iter().map(|i| i + 1).collect(),
                        j2: e.j2.iter().map(|i| i + 1).collect(),
                        rank: e.rank,
                        c: tables.iter().map(|t| t[k].c).collect(),
                    }
                })
                .collect();
            match config.output {
                Format::Json => emit(&CoefficientReport {
                    command: config.command,
                    alpha: alpha.alpha(),
                    n: r.dim(),
                    n1: part.n1(),
                    taus,
                    rows,
                }),
                Format::Csv => {
                    let mut out = String::from("J1,J2,rank");
                    for tau in &taus {
                        out.push_str(&format!(",c_J(tau={tau})"));
                    }
                    out.push('\n');
                    for row in &rows {
                        out.push_str(&format!("{},{},{}", fmt_set(&row.j1), fmt_set(&row.j2), row.rank));
                        for c in &row.c {
                            if !c.is_finite() {
                                return Err(Error::Internal("non-finite coefficient".into()));
                            }
                            out.push_str(&format!(",{c}"));
                        }
                        out.push('\n');
                    }
                    Ok(out)
                }
            }
        }
    }
}

/// Exit status for an error: 1 for internal failures, 2 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Internal(_) => 1,
        _ => 2,
    }
}
