//! `drivestyle` command-line tool.
//!
//! Every stage reads and writes files, so any intermediate result can be
//! inspected. Exit status: 0 success, 2 invalid input, 3 results written
//! but some numerical routine did not converge, 4 I/O failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use drivestyle::dataset::LabeledDataset;
use drivestyle::experiment::{self, ExperimentConfig, ExperimentReport, FeatureSource};
use drivestyle::features::FeatureTable;
use drivestyle::gaussfit::{self, GaussianPair};
use drivestyle::learners::{FittedClassifier, KernelSpec, ModelSpec};
use drivestyle::rules::{classify_braking, BrakeThresholds, BrakeVerdict, STANDARD_GRAVITY};
use drivestyle::selection::{nca_fit, NcaParams, WeightsReport, DEFAULT_THRESHOLD};
use drivestyle::sensor::{load_segments, save_segments, ManeuverKind};
use drivestyle::synth::generate_corpus;
use drivestyle::{Error, Result};

const EXIT_NONCONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "drivestyle", version, about = "Classify driving maneuvers as safe or dangerous")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic corpus as segment CSV.
    Synth {
        #[arg(long)]
        kind: ManeuverKind,
        /// Segments per class.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a feature table from segment CSV.
    Extract {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "wavelet22")]
        source: FeatureSource,
        #[arg(long)]
        out: PathBuf,
    },
    /// Weight features with NCA and write the selection as JSON.
    Select {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[command(flatten)]
        nca: NcaArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one classifier on a whole feature table and save it as JSON.
    Train {
        #[arg(long)]
        features: PathBuf,
        /// Selection JSON from `select`; all columns when absent.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full experiment from a JSON config; flags override the file.
    Eval(EvalArgs),
    /// Apply the braking threshold rule; JSON verdicts per segment.
    Rule {
        #[arg(long)]
        input: PathBuf,
        /// Very-safe bound in g.
        #[arg(long, default_value_t = 0.11)]
        very_safe_g: f64,
        /// Dangerous bound in g.
        #[arg(long, default_value_t = 0.45)]
        dangerous_g: f64,
        #[arg(long, default_value_t = 3.0)]
        window_s: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit two Gaussians to each segment's yaw rate; JSON per segment.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the table of one metrics.json, or compare several.
    Report {
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct NcaArgs {
    #[arg(long)]
    sigma: Option<f64>,
    /// Regularization; defaults to 1/n.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

impl NcaArgs {
    fn apply(&self, p: &mut NcaParams) {
        if let Some(v) = self.sigma {
            p.sigma = v;
        }
        if self.lambda.is_some() {
            p.lambda = self.lambda;
        }
        if let Some(v) = self.lr {
            p.lr = v;
        }
        if let Some(v) = self.max_iters {
            p.max_iters = v;
        }
        if let Some(v) = self.tol {
            p.tol = v;
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Mlp,
    Rbf,
    Svm,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Linear,
    Gaussian,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    algorithm: Algorithm,
    /// MLP hidden neurons.
    #[arg(long, default_value_t = 6)]
    hidden: usize,
    /// RBF hidden units, half per class.
    #[arg(long, default_value_t = 6)]
    centers: usize,
    #[arg(long, default_value = "gaussian")]
    kernel: KernelArg,
    /// Gaussian kernel width; defaults to 1/feature count.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
}

impl ModelArgs {
    fn spec(&self) -> ModelSpec {
        match self.algorithm {
            Algorithm::Mlp => ModelSpec::mlp(self.hidden),
            Algorithm::Rbf => ModelSpec::rbf(self.centers),
            Algorithm::Svm => {
                let kernel = match self.kernel {
                    KernelArg::Linear => KernelSpec::Linear,
                    KernelArg::Gaussian => KernelSpec::Gaussian { gamma: self.gamma },
                };
                ModelSpec::svm(kernel, self.c)
            }
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    source: Option<FeatureSource>,
    #[arg(long)]
    no_selection: bool,
    #[arg(long)]
    threshold: Option<f64>,
}

impl EvalArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.repeats {
            cfg.split.repeats = r;
        }
        if let Some(f) = self.train_fraction {
            cfg.split.train_fraction = f;
        }
        if let Some(s) = self.source {
            cfg.feature_source = s;
        }
        if self.no_selection {
            cfg.selection.enabled = false;
        }
        if let Some(t) = self.threshold {
            cfg.selection.threshold = t;
        }
        Ok(cfg)
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("plain data");
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}")?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct RuleRecord {
    segment_id: String,
    #[serde(flatten)]
    verdict: BrakeVerdict,
    label: drivestyle::sensor::Label,
}

#[derive(Serialize)]
struct FitRecord {
    segment_id: String,
    #[serde(flatten)]
    pair: GaussianPair,
    converged: bool,
}

fn load_report(path: &Path) -> Result<ExperimentReport> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Returns whether everything converged.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Synth { kind, n, seed, out } => {
            if n == 0 {
                return Err(Error::Config("--n must be at least 1".into()));
            }
            save_segments(out, &generate_corpus(kind, n, seed))?;
            Ok(true)
        }
        Command::Extract { input, source, out } => {
            let (table, unconverged) = source.table(&load_segments(input)?)?;
            table.save_csv(out)?;
            Ok(unconverged == 0)
        }
        Command::Select {
            features,
            threshold,
            nca,
            out,
        } => {
            let table = FeatureTable::load_csv(features)?;
            let mut params = NcaParams::default();
            nca.apply(&mut params);
            let fw = nca_fit(&LabeledDataset::from_table(&table)?, &params)?;
            write_json(&WeightsReport::new(&fw, threshold), Some(&out))?;
            Ok(true)
        }
        Command::Train {
            features,
            weights,
            model,
            seed,
            out,
        } => {
            let mut table = FeatureTable::load_csv(features)?;
            if let Some(path) = weights {
                let text = fs::read_to_string(path)?;
                let w: WeightsReport = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
                if w.selected.iter().any(|&c| c == 0 || c > table.dim()) {
                    return Err(Error::Config("selection does not match the feature table".into()));
                }
                table = table.project(&w.columns());
            }
            let ds = LabeledDataset::from_table(&table)?;
            let fitted = FittedClassifier::fit(&model.spec(), &ds, seed)?;
            let converged = fitted.model.converged();
            write_json(&fitted, Some(&out))?;
            Ok(converged)
        }
        Command::Eval(args) => {
            let cfg = args.resolve()?;
            let report = experiment::run_experiment(&cfg)?;
            print!("{}", experiment::render_table(&report));
            Ok(!report.has_nonconvergence())
        }
        Command::Rule {
            input,
            very_safe_g,
            dangerous_g,
            window_s,
            out,
        } => {
            let th = BrakeThresholds {
                very_safe: very_safe_g * STANDARD_GRAVITY,
                dangerous: dangerous_g * STANDARD_GRAVITY,
                window_s,
            };
            let records = load_segments(input)?
                .iter()
                .filter(|s| matches!(s.kind(), ManeuverKind::Brake | ManeuverKind::Gas))
                .map(|s| {
                    let verdict = classify_braking(s, &th)?;
                    Ok(RuleRecord {
                        segment_id: s.id().to_string(),
                        label: verdict.severity.label(),
                        verdict,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            write_json(&records, out.as_deref())?;
            Ok(true)
        }
        Command::Fit { input, out } => {
            let mut all_converged = true;
            let records = load_segments(input)?
                .iter()
                .map(|s| {
                    let fit = gaussfit::fit_segment(s)?;
                    all_converged &= fit.converged;
                    Ok(FitRecord {
                        segment_id: s.id().to_string(),
                        pair: fit.pair,
                        converged: fit.converged,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            write_json(&records, out.as_deref())?;
            Ok(all_converged)
        }
        Command::Report { metrics } => {
            let reports = metrics.iter().map(|p| load_report(p)).collect::<Result<Vec<_>>>()?;
            let text = match reports.as_slice() {
                [one] => experiment::render_table(one),
                many => experiment::render_comparison(many),
            };
            print!("{text}");
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            log::warn!("results written, but a numerical routine did not converge");
            ExitCode::from(EXIT_NONCONVERGED)
        }
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
