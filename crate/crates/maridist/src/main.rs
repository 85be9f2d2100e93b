//! Command-line surface: eval / track / triangulate / simulate / report.
//! Exit codes: 0 success, 1 user error (bad args, bad files, missing GT),
//! 2 internal error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use maridist::geometry::CameraPose;
use maridist::io::{
    self, load_sequence, run_eval, run_track, run_triangulate, save_sequence, EvalConfig,
    PipelineError, ReportDoc, SequenceFile, SequenceHeader,
};
use maridist::matching::DEFAULT_IOU_THRESHOLD;
use maridist::metrics::DEFAULT_OUTLIER_REL_THRESHOLD;
use maridist::norm::{NormalizationConfig, DEFAULT_D_MAX};
use maridist::report::{render, ReportFormat};
use maridist::sim::{corrupt_detections, generate_scenario, NoiseConfig, ScenarioConfig};
use maridist::tracker::{
    TrackerConfig, DEFAULT_MAX_AGE, DEFAULT_MIN_HITS, DEFAULT_SMOOTHING_WINDOW,
};

/// Environment variable naming a directory against which relative config
/// file paths (--scenario, --noise, --pose) are resolved.
pub const CONFIG_DIR_ENV: &str = "MARIDIST_CONFIG_DIR";

const DEFAULT_BINS: &str = "0,100,200,300,400,500";

#[derive(Debug, Parser)]
#[command(name = "maridist", version, about = "Maritime monocular distance estimation: evaluation, tracking, geometric baselines, and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate detections with distances against ground truth
    Eval {
        /// Sequence file (JSON lines)
        sequence: PathBuf,
        /// IoU threshold for matching
        #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
        iou: f64,
        /// Relative error above which a match counts as an outlier
        #[arg(long = "outlier-rel", default_value_t = DEFAULT_OUTLIER_REL_THRESHOLD)]
        outlier_rel: f64,
        /// Distance bin edges in meters, comma separated
        #[arg(long, default_value = DEFAULT_BINS)]
        bins: String,
    },
    /// Track a sequence and compare raw vs smoothed distance errors
    Track {
        /// Sequence file (JSON lines)
        sequence: PathBuf,
        /// Distance smoothing window (frames)
        #[arg(long, default_value_t = DEFAULT_SMOOTHING_WINDOW)]
        window: usize,
        /// Frames a track survives without a detection
        #[arg(long = "max-age", default_value_t = DEFAULT_MAX_AGE)]
        max_age: u32,
        /// Consecutive hits before a track is confirmed
        #[arg(long = "min-hits", default_value_t = DEFAULT_MIN_HITS)]
        min_hits: u32,
    },
    /// Replace detection distances with the flat-sea triangulation baseline
    /// and evaluate against ground truth
    Triangulate {
        /// Sequence file (JSON lines)
        sequence: PathBuf,
        /// Camera pose file (JSON)
        #[arg(long)]
        pose: PathBuf,
    },
    /// Generate a synthetic sequence from a scenario and noise model
    Simulate {
        /// Scenario file (JSON)
        #[arg(long)]
        scenario: PathBuf,
        /// Noise model file (JSON)
        #[arg(long)]
        noise: PathBuf,
        /// RNG seed for detection corruption
        #[arg(long)]
        seed: u64,
        /// Output sequence path
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a report produced by eval/track/triangulate
    Report {
        /// Report file (JSON)
        report: PathBuf,
        /// Output format
        #[arg(long, value_enum, default_value_t = FormatArg::Table)]
        format: FormatArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum FormatArg {
    Table,
    Csv,
    Structured,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Table => ReportFormat::Table,
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Structured => ReportFormat::Structured,
        }
    }
}

#[derive(Debug)]
enum CliError {
    User(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::User(_) => ExitCode::from(1),
            CliError::Internal(_) => ExitCode::from(2),
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::User(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Tracker(_) => CliError::Internal(e.to_string()),
            _ => CliError::User(e.to_string()),
        }
    }
}

/// Resolve a config path: as given if it exists or is absolute, otherwise
/// relative to $MARIDIST_CONFIG_DIR when that is set.
fn resolve_config_path(path: &Path) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.to_path_buf();
    }
    match std::env::var_os(CONFIG_DIR_ENV) {
        Some(dir) => PathBuf::from(dir).join(path),
        None => path.to_path_buf(),
    }
}

fn read_json_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let path = resolve_config_path(path);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::User(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::User(format!("cannot parse {}: {e}", path.display())))
    }

fn parse_bins(s: &str) -> Result<Vec<f64>, CliError> {
    let edges: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let edges = edges.map_err(|e| CliError::User(format!("bad --bins value: {e}")))?;
    if edges.len() < 2 || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::User("--bins needs at least two strictly increasing edges".into()));
    }
    Ok(edges)
}

fn print_doc(doc: &ReportDoc) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(doc)
        .map_err(|e| CliError::Internal(format!("report serialization failed: {e}")))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Eval { sequence, iou, outlier_rel, bins } => {
            let seq = load_sequence(&sequence)?;
            let cfg = EvalConfig {
                iou_threshold: iou,
                outlier_rel_threshold: outlier_rel,
                bin_edges_m: parse_bins(&bins)?,
                ..EvalConfig::default()
            };
            let report = run_eval(&seq, &cfg)?;
            print_doc(&ReportDoc::Eval { report })
        }
        Command::Track { sequence, window, max_age, min_hits } => {
            let seq = load_sequence(&sequence)?;
            let tracker_cfg =
                TrackerConfig::new(maridist::tracker::DEFAULT_IOU_GATE, max_age, min_hits, window)
                    .map_err(|e| CliError::User(e.to_string()))?;
            let (_, raw, smoothed) = run_track(&seq, &tracker_cfg, &EvalConfig::default())?;
            print_doc(&ReportDoc::Track { raw, smoothed })
        }
        Command::Triangulate { sequence, pose } => {
            let seq = load_sequence(&sequence)?;
            let pose: CameraPose = read_json_config(&pose)?;
            let d_max = seq.header.normalization.map(|n| n.d_max).unwrap_or(DEFAULT_D_MAX);
            let tri = run_triangulate(&seq, &pose, d_max)?;
            let report = run_eval(&tri, &EvalConfig::default())?;
            print_doc(&ReportDoc::Eval { report })
        }
        Command::Simulate { scenario, noise, seed, out } => {
            let scenario_cfg: ScenarioConfig = read_json_config(&scenario)?;
            let noise_cfg: NoiseConfig = read_json_config(&noise)?;
            let norm = NormalizationConfig::default();
            let gt = generate_scenario(&scenario_cfg).map_err(|e| CliError::User(e.to_string()))?;
            let frames = corrupt_detections(&gt, &noise_cfg, &norm, seed)
                .map_err(|e| CliError::User(e.to_string()))?;
            let header = SequenceHeader {
                schema_version: io::SCHEMA_VERSION,
                sequence_id: format!("sim-{seed}"),
                camera_pose: Some(scenario_cfg.camera),
                normalization: Some(norm),
            };
            let seq = SequenceFile::new(header, frames)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            save_sequence(&seq, &out)?;
            Ok(())
        }
        Command::Report { report, format } => {
            let doc: ReportDoc = read_json_config(&report)?;
            print!("{}", render(&doc, format.into()));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap already formats usage/help; --help and --version exit 0
            let code = if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_defaults_match_module_constants() {
        let cli = Cli::try_parse_from(["maridist", "eval", "seq.jsonl"]).unwrap();
        match cli.command {
            Command::Eval { iou, outlier_rel, bins, .. } => {
                assert_eq!(iou, DEFAULT_IOU_THRESHOLD);
                assert_eq!(outlier_rel, DEFAULT_OUTLIER_REL_THRESHOLD);
                assert_eq!(parse_bins(&bins).unwrap(), vec![0.0, 100.0, 200.0, 300.0, 400.0, 500.0]);
            }
            _ => unreachable!(),
        }
        let cli = Cli::try_parse_from(["maridist", "track", "seq.jsonl"]).unwrap();
        match cli.command {
            Command::Track { window, max_age, min_hits, .. } => {
                assert_eq!(window, DEFAULT_SMOOTHING_WINDOW);
                assert_eq!(max_age, DEFAULT_MAX_AGE);
                assert_eq!(min_hits, DEFAULT_MIN_HITS);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn help_lists_defaults() {
        let err = Cli::try_parse_from(["maridist", "eval", "--help"]).unwrap_err();
        let text = err.to_string();
        assert!(text.contains(&DEFAULT_IOU_THRESHOLD.to_string()));
        assert!(text.contains(DEFAULT_BINS));
    }

    #[test]
    fn bins_parsing() {
        assert!(parse_bins("0,100,50").is_err());
        assert!(parse_bins("0").is_err());
        assert!(parse_bins("a,b").is_err());
        assert_eq!(parse_bins("0, 250, 500").unwrap(), vec![0.0, 250.0, 500.0]);
    }

    #[test]
    fn unknown_flag_is_error() {
        assert!(Cli::try_parse_from(["maridist", "eval", "s.jsonl", "--bogus"]).is_err());
    }
}
