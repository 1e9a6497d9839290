use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use f0deid::eval::{read_trials, write_scores};
use f0deid::pipeline::{
    cmd_anonymize, cmd_evaluate, cmd_export_curves, cmd_extract_f0, cmd_fit, make_synth_corpus,
    preset, read_exclusions, Manifest, PipelineConfig, RowFilter, SynthCorpusConfig, PRESET_NAMES,
};
use f0deid::{Error, FpcaModel};

#[derive(Parser)]
#[command(name = "f0deid", version, about = "Speaker de-identification by f0 curve replacement and formant shifting")]
struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in method preset, e.g. f0_S-F1-3_20.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Corpus manifest CSV.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed of the synthetic corpus generator.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct FilterArgs {
    /// Keep rows of this group (repeatable).
    #[arg(long = "group")]
    groups: Vec<String>,
    /// Keep rows of this condition (repeatable).
    #[arg(long = "condition")]
    conditions: Vec<String>,
    /// Keep rows of this session (repeatable).
    #[arg(long = "session")]
    sessions: Vec<String>,
    /// File of utterance ids to leave out, one per line.
    #[arg(long)]
    exclude: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an fPCA model on the f0 curves of the selected rows.
    Fit {
        #[command(flatten)]
        filter: FilterArgs,
        /// Read `<id>.f0.csv` tracks from this directory instead of extracting.
        #[arg(long)]
        f0_dir: Option<PathBuf>,
        /// Model file name inside the output directory.
        #[arg(long, default_value = "model.json")]
        name: String,
    },
    /// Anonymize the configured rows into `<out>/<id>.anon.wav`.
    Anonymize {
        /// Model file; repeat for per-group models.
        #[arg(long = "model")]
        models: Vec<PathBuf>,
        #[arg(long)]
        f0_dir: Option<PathBuf>,
        /// Only anonymize this session (repeatable; overrides the config).
        #[arg(long = "session")]
        sessions: Vec<String>,
    },
    /// Score trials on original and anonymized test audio.
    Evaluate {
        #[arg(long)]
        trials: PathBuf,
        /// Anonymized directory as `label=dir` (repeatable).
        #[arg(long = "anon", value_parser = parse_anon)]
        anon: Vec<(String, PathBuf)>,
        /// Leave out the row scoring unmodified test audio.
        #[arg(long)]
        no_baseline: bool,
    },
    /// Write mean ± SD·PC curves and the score scatter of a model.
    ExportCurves {
        #[arg(long)]
        model: PathBuf,
        /// Component index, counting from 1.
        #[arg(long, default_value_t = 1)]
        component: usize,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Generate the synthetic two-group corpus with manifest and trial list.
    MakeSynthCorpus {
        #[arg(long, default_value_t = 12)]
        speakers: usize,
        #[arg(long, default_value_t = 6)]
        sentences: usize,
    },
    /// Write `<out>/<id>.f0.csv` tracks for the selected rows.
    ExtractF0 {
        #[command(flatten)]
        filter: FilterArgs,
    },
}

fn parse_anon(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((l, d)) if !l.is_empty() && !d.is_empty() => Ok((l.to_string(), PathBuf::from(d))),
        _ => Err(format!("expected label=dir, got {s:?}")),
    }
}

/// Exit status of a completed command.
enum Outcome {
    Success,
    PartialFailure,
}

/// Errors that abort a command before or while it runs.
struct Fatal(Error);

impl From<Error> for Fatal {
    fn from(e: Error) -> Self {
        Fatal(e)
    }
}

impl From<std::io::Error> for Fatal {
    fn from(e: std::io::Error) -> Self {
        Fatal(Error::Io(e))
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Fatal> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(p), _) => PipelineConfig::load(p)?,
        (None, Some(name)) => preset(name).ok_or_else(|| {
            Error::Config(format!("unknown preset {name:?}; known: {}", PRESET_NAMES.join(", ")))
        })?,
        (None, None) => PipelineConfig::default(),
    };
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_manifest(cli: &Cli) -> Result<Manifest, Fatal> {
    let path = cli
        .manifest
        .as_ref()
        .ok_or_else(|| Error::Config("--manifest is required".into()))?;
    Ok(Manifest::load(path)?)
}

fn row_filter(args: &FilterArgs, fallback: Option<&PipelineConfig>) -> Result<RowFilter, Fatal> {
    let pick = |given: &Vec<String>, default: Option<&Vec<String>>| {
        if given.is_empty() {
            default.cloned().unwrap_or_default()
        } else {
            given.clone()
        }
    };
    Ok(RowFilter {
        groups: pick(&args.groups, fallback.map(|c| &c.fit.groups)),
        conditions: pick(&args.conditions, fallback.map(|c| &c.fit.conditions)),
        sessions: pick(&args.sessions, fallback.map(|c| &c.fit.sessions)),
        speakers: vec![],
        exclude: match &args.exclude {
            Some(p) => read_exclusions(p)?,
            None => Default::default(),
        },
    })
}

fn report_failures(items: impl IntoIterator<Item = (String, String)>) -> Outcome {
    let mut any = false;
    for (id, err) in items {
        eprintln!("warning: {id}: {err}");
        any = true;
    }
    if any {
        Outcome::PartialFailure
    } else {
        Outcome::Success
    }
}

fn run(cli: &Cli) -> Result<Outcome, Fatal> {
    let out: &Path = &cli.out;
    match &cli.command {
        Command::Fit { filter, f0_dir, name } => {
            let cfg = load_config(cli)?;
            let manifest = load_manifest(cli)?;
            let filter = row_filter(filter, Some(&cfg))?;
            let fit = cmd_fit(&manifest, &cfg, &filter, f0_dir.as_deref())?;
            std::fs::create_dir_all(out)?;
            let path = out.join(name);
            fit.model.save(&path)?;
            println!(
                "fitted {} curves, {} components -> {}",
                fit.used.len(),
                fit.model.n_components(),
                path.display()
            );
            Ok(report_failures(fit.failures.into_iter().map(|f| (f.utterance_id, f.error))))
        }
        Command::Anonymize {
            models,
            f0_dir,
            sessions,
        } => {
            let mut cfg = load_config(cli)?;
            if !sessions.is_empty() {
                cfg.anonymize.sessions = sessions.clone();
            }
            let manifest = load_manifest(cli)?;
            // models are read before any audio
            let models = models
                .iter()
                .map(FpcaModel::load)
                .collect::<Result<Vec<_>, _>>()?;
            let res = cmd_anonymize(&manifest, &cfg, &models, out, f0_dir.as_deref())?;
            println!(
                "{}: anonymized {} of {} utterances -> {}",
                cfg.method.label,
                res.log.len() - res.failures(),
                res.log.len(),
                out.display()
            );
            Ok(report_failures(
                res.log.into_iter().filter(|r| !r.ok()).map(|r| (r.utterance_id, r.error)),
            ))
        }
        Command::Evaluate {
            trials,
            anon,
            no_baseline,
        } => {
            let mut cfg = load_config(cli)?;
            if *no_baseline {
                cfg.evaluation.baseline = false;
            }
            let manifest = load_manifest(cli)?;
            if !trials.exists() {
                return Err(Error::MissingFile(trials.clone()).into());
            }
            let trials = read_trials(std::fs::File::open(trials)?)?;
            let res = cmd_evaluate(&manifest, &cfg, &trials, anon)?;
            std::fs::create_dir_all(out)?;
            std::fs::write(out.join("report.json"), res.report.to_json()?)?;
            let table = res.report.to_table();
            std::fs::write(out.join("report.txt"), &table)?;
            for (label, scores) in &res.scores {
                write_scores(scores, std::fs::File::create(out.join(format!("scores_{label}.csv")))?)?;
            }
            print!("{table}");
            Ok(report_failures(res.report.rows.iter().flat_map(|r| {
                r.errors.iter().map(move |e| (r.method.clone(), e.clone()))
            })))
        }
        Command::ExportCurves {
            model,
            component,
            points,
        } => {
            let model = FpcaModel::load(model)?;
            let exp = cmd_export_curves(&model, *component, *points)?;
            std::fs::create_dir_all(out)?;
            std::fs::write(out.join(format!("pc{component}_curves.csv")), exp.curves_csv)?;
            std::fs::write(out.join("score_scatter.csv"), exp.scatter_csv)?;
            println!("wrote curves of component {component} to {}", out.display());
            Ok(Outcome::Success)
        }
        Command::MakeSynthCorpus { speakers, sentences } => {
            let cfg = SynthCorpusConfig {
                seed: cli.seed,
                speakers_per_group: *speakers,
                sentences: *sentences,
                ..SynthCorpusConfig::default()
            };
            let m = make_synth_corpus(&cfg, out)?;
            println!("wrote {} utterances to {}", m.rows.len(), out.display());
            Ok(Outcome::Success)
        }
        Command::ExtractF0 { filter } => {
            let cfg = load_config(cli)?;
            let manifest = load_manifest(cli)?;
            let filter = row_filter(filter, None)?;
            let failures = cmd_extract_f0(&manifest, &cfg, &filter, out)?;
            Ok(report_failures(failures.into_iter().map(|f| (f.utterance_id, f.error))))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::PartialFailure) => ExitCode::from(1),
        Err(Fatal(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
