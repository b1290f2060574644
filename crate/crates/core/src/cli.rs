//! The `rfcw` command line. Exit codes: 0 success, 2 bad arguments,
//! 3 numerical or I/O failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::RfcwError;
use crate::experiments::{
    chaos_convergence_scan, clt_diagnostic, j_index_statistics, ExperimentConfig, KRule,
};
use crate::field::{mix_seed, sample_field, FieldSpec};
use crate::landscape::{find_global_maxima, DEFAULT_TOL_DEG};
use crate::marginals::{predicted_product, select_j_index, IntegralRepresentation, QuadratureSpec};
use crate::model::{kl_divergence, tv_distance, ModelParams};
use crate::phase::trace_critical_line;
use crate::report::{self, Format};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "rfcw",
    version,
    about = "Curie-Weiss model with random external fields"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Base seed for field realizations and samplers.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Inverse temperature.
    #[arg(long, global = true, default_value_t = 1.0)]
    beta: f64,
    /// Field law: `dichotomous:<h>` or `discrete:<v:p,...>`.
    #[arg(long, global = true, default_value = "dichotomous:0.25")]
    #[serde(serialize_with = "display")]
    field: FieldSpec,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

fn display<S: serde::Serializer>(v: &FieldSpec, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Global maximizers of the limiting free-energy landscape.
    Landscape {
        /// Degeneracy tolerance on derivative magnitudes.
        #[arg(long, default_value_t = DEFAULT_TOL_DEG)]
        tol: f64,
    },
    /// Critical line beta_c(h) of the dichotomous model.
    PhaseDiagram {
        #[arg(long, default_value_t = 0.49)]
        h_max: f64,
        #[arg(long, default_value_t = 49)]
        steps: usize,
    },
    /// Exact k-spin marginal against the predicted product measure.
    Marginal {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// KL/TV convergence of marginals to the product measure (unique maximizer).
    ChaosScan {
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Replica statistics of the selected maximizer index (several maximizers).
    JindexStats {
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Fluctuations of sqrt(N) (G_N - G) at a point.
    Clt {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 2000)]
        replicas: usize,
        /// Evaluation point; defaults to the largest global maximizer.
        #[arg(long)]
        y0: Option<f64>,
    },
    /// Exact spin configurations from the Gibbs measure.
    Sample {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[command(flatten)]
        quad: QuadArgs,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
struct ScanArgs {
    /// Comma-separated system sizes.
    #[arg(long, value_delimiter = ',', default_value = "250,1000,4000")]
    n_grid: Vec<usize>,
    /// Fixed number of compared spins.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Use k(N) = ceil(N^alpha) instead of a fixed k.
    #[arg(long)]
    k_alpha: Option<f64>,
    #[arg(long, default_value_t = 1)]
    replicas: usize,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
struct QuadArgs {
    /// Relative accuracy of the y-integral, in (0, 1e-6].
    #[arg(long, default_value_t = 1e-12)]
    rel_tol: f64,
    /// Adaptive refinement passes, at most 30.
    #[arg(long, default_value_t = 30)]
    max_refinements: usize,
    /// Lower bound on the integration radius; 0 selects it automatically.
    #[arg(long, default_value_t = 0.0)]
    radius: f64,
}

impl QuadArgs {
    fn spec(&self) -> Result<QuadratureSpec, RfcwError> {
        QuadratureSpec::new(self.radius, self.rel_tol, self.max_refinements)
    }
}

impl ScanArgs {
    fn config(&self, common: &Common) -> Result<ExperimentConfig, RfcwError> {
        Ok(ExperimentConfig {
            spec: common.field.clone(),
            beta: common.beta,
            n_grid: self.n_grid.clone(),
            k: match self.k_alpha {
                Some(alpha) => KRule::Growth { alpha },
                None => KRule::Fixed(self.k),
            },
            replicas: self.replicas,
            base_seed: common.seed,
            quad: self.quad.spec()?,
            output_path: common.out.clone(),
        })
    }
}

#[derive(Debug)]
enum Failure {
    Model(RfcwError),
    Io(io::Error),
}

impl From<RfcwError> for Failure {
    fn from(e: RfcwError) -> Self {
        Failure::Model(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Model(e)) => {
            eprintln!("rfcw: {e}");
            if e.is_usage_error() {
                EXIT_USAGE
            } else {
                EXIT_NUMERICAL
            }
        }
        Err(Failure::Io(e)) => {
            eprintln!("rfcw: i/o error: {e}");
            EXIT_NUMERICAL
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let c = &cli.common;
    let format = match c.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    // Render fully before touching the output so failures leave no partial file.
    let mut buf: Vec<u8> = Vec::new();
    let config = json!({ "common": c, "command": &cli.command });
    let w: &mut dyn Write = &mut buf;

    match &cli.command {
        Command::Landscape { tol } => {
            let report = find_global_maxima(&c.field, c.beta, *tol)?;
            match format {
                Format::Csv => report::write_landscape_csv(w, &report)?,
                Format::Json => report::write_json(w, "landscape", &config, &report)?,
            }
        }
        Command::PhaseDiagram { h_max, steps } => {
            let line = trace_critical_line(*h_max, *steps)?;
            match format {
                Format::Csv => report::write_phase_csv(w, &line)?,
                Format::Json => report::write_json(w, "phase-diagram", &config, &line)?,
            }
        }
        Command::Marginal { n, k, quad } => {
            let params = ModelParams::new(c.beta, *n)?;
            let h = sample_field(&c.field, *n, c.seed)?;
            let rep = IntegralRepresentation::new(&params, &h, &quad.spec()?)?;
            let mu = rep.marginal(*k)?;
            let landscape = find_global_maxima(&c.field, c.beta, DEFAULT_TOL_DEG)?;
            let j = select_j_index(&h, &c.field, c.beta, &landscape)?;
            let rho = predicted_product(c.beta, &landscape, j, h.prefix(*k))?;
            let kl = kl_divergence(&mu, &rho)?;
            let tv = tv_distance(&mu, &rho)?;
            match format {
                Format::Csv => {
                    let notes = [
                        format!("j_index={j}"),
                        format!("y_j={}", landscape.maxima[j].location),
                        format!("kl={kl}"),
                        format!("tv={tv}"),
                        format!("log_partition={}", rep.log_partition()),
                    ];
                    report::write_marginal_csv(w, &mu, &rho, &notes)?
                }
                Format::Json => {
                    let records = json!({
                        "j_index": j,
                        "y_j": landscape.maxima[j].location,
                        "kl": kl,
                        "tv": tv,
                        "log_partition": rep.log_partition(),
                        "words": mu.words().map(|(s, _)| s.to_string()).collect::<Vec<_>>(),
                        "mu": mu.probs(),
                        "rho": rho.probs(),
                    });
                    report::write_json(w, "marginal", &config, &records)?
                }
            }
        }
        Command::ChaosScan { scan } => {
            let rows = chaos_convergence_scan(&scan.config(c)?)?;
            match format {
                Format::Csv => report::write_convergence_csv(w, &rows, &[])?,
                Format::Json => report::write_json(w, "chaos-scan", &config, &rows)?,
            }
        }
        Command::JindexStats { scan } => {
            let stats = j_index_statistics(&scan.config(c)?)?;
            match format {
                Format::Csv => {
                    let freqs: Vec<String> =
                        stats.frequencies.iter().map(usize::to_string).collect();
                    let notes = [
                        format!("frequencies={}", freqs.join(":")),
                        format!("median_tv={}", stats.median_tv()),
                        format!("p90_tv={}", stats.tv_quantile(0.9)),
                    ];
                    report::write_convergence_csv(w, &stats.rows, &notes)?
                }
                Format::Json => {
                    let records = json!({
                        "summary": {
                            "median_tv": stats.median_tv(),
                            "p90_tv": stats.tv_quantile(0.9),
                            "frequency_fractions": stats.frequency_fractions(),
                        },
                        "stats": stats,
                    });
                    report::write_json(w, "jindex-stats", &config, &records)?
                }
            }
        }
        Command::Clt { n, replicas, y0 } => {
            let y0 = match y0 {
                Some(y) => *y,
                None => find_global_maxima(&c.field, c.beta, DEFAULT_TOL_DEG)?
                    .locations()
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max),
            };
            let r = clt_diagnostic(&c.field, c.beta, y0, *n, *replicas, c.seed)?;
            match format {
                Format::Csv => report::write_clt_csv(w, &r)?,
                Format::Json => report::write_json(w, "clt", &config, &r)?,
            }
        }
        Command::Sample { n, samples, quad } => {
            let params = ModelParams::new(c.beta, *n)?;
            let h = sample_field(&c.field, *n, c.seed)?;
            let rep = IntegralRepresentation::new(&params, &h, &quad.spec()?)?;
            let draws = rep.sample(*samples, mix_seed(c.seed, *samples))?;
            match format {
                Format::Csv => {
                    let hs: Vec<String> = h.values().iter().map(f64::to_string).collect();
                    report::write_samples_csv(w, &draws, &[format!("h={}", hs.join(":"))])?
                }
                Format::Json => {
                    let records = json!({ "field": h.values(), "samples": draws });
                    report::write_json(w, "sample", &config, &records)?
                }
            }
        }
    }

    match &c.out {
        Some(path) => File::create(path)?.write_all(&buf)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(&buf)?;
            out.flush()?;
        }
    }
    Ok(())
}
