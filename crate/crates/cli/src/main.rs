use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use dyadic_bmo::harness::{
    run_on_corpus, generate_corpus, Command, Corpus, ExperimentConfig, GridSample, Generator,
    RunReport, Sample, Witness,
};
use dyadic_bmo::hardy::AtomicCombination;
use dyadic_bmo::multidim::GridFn;
use dyadic_bmo::{Arc, Rat, StepFn};

/// Exact experiments on translated dyadic filtrations and BMO.
///
/// Circle coordinates are fractions of a full turn: `x` stands for the
/// angle `2πx`. All rationals are written `p/q`.
#[derive(Parser, Debug)]
#[command(name = "dyadic-bmo", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON experiment config; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Shift δ (repeatable).
    #[arg(long = "delta", global = true)]
    deltas: Vec<Rat>,
    #[arg(long, global = true)]
    depth: Option<u32>,
    #[arg(long, global = true)]
    grid_per_axis: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of random arcs, cubes or intervals.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    max_q: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Run on a single function file instead of the generated corpus.
    #[arg(long, global = true)]
    function: Option<PathBuf>,
    /// Fit one arc given as `start,length`.
    #[arg(long, global = true)]
    arc: Option<String>,
    /// Directory for witness files (defaults to the report's directory).
    #[arg(long, global = true)]
    witness_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Dyadic distance d(δ) of each shift.
    DDelta,
    /// Fit random arcs by the base or translated filtration.
    Fit,
    /// Dyadic BMO norms of the corpus.
    Norms,
    /// Classical BMO against 4/d(δ) times the two dyadic norms.
    Verify,
    /// The same on the 2-torus with three translates.
    VerifyMd,
    /// Level-offset filtrations on the line.
    VerifyR,
    /// Pointwise maximal and sharp function domination.
    Maximal,
    /// Dyadic atoms and H¹ decompositions.
    Atoms,
    /// Table of d(p/q) for q up to --max-q.
    Scan,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::DDelta => Command::DDelta,
            Cmd::Fit => Command::Fit,
            Cmd::Norms => Command::Norms,
            Cmd::Verify => Command::Verify,
            Cmd::VerifyMd => Command::VerifyMd,
            Cmd::VerifyR => Command::VerifyR,
            Cmd::Maximal => Command::Maximal,
            Cmd::Atoms => Command::Atoms,
            Cmd::Scan => Command::Scan,
        }
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if !cli.deltas.is_empty() {
        config.shifts = cli.deltas.clone();
    }
    if let Some(d) = cli.depth {
        config.depth = d;
    }
    if let Some(k) = cli.grid_per_axis {
        config.grid_per_axis = k;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(n) = cli.samples {
        config.samples = n;
    }
    if let Some(q) = cli.max_q {
        config.max_q = q;
    }
    if let Some(out) = &cli.out {
        config.output = Some(out.display().to_string());
    }
    config.validate()?;
    Ok(config)
}

fn parse_arc(text: &str) -> anyhow::Result<Arc> {
    let Some((start, len)) = text.split_once(',') else {
        bail!("--arc expects start,length");
    };
    Ok(Arc::new(start.trim().parse()?, len.trim().parse()?)?)
}

fn load_corpus(cli: &Cli, command: Command, config: &ExperimentConfig) -> anyhow::Result<Corpus> {
    let mut corpus = match &cli.function {
        None => generate_corpus(&config.corpus, config.seed)?,
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading function {}", path.display()))?;
            let name = path.display().to_string();
            let mut corpus = Corpus::default();
            match command {
                Command::Norms | Command::Verify | Command::Maximal => {
                    corpus.functions.push(Sample {
                        name,
                        generator: Generator::Dyadic,
                        approximate: false,
                        function: serde_json::from_str::<StepFn>(&text)?,
                    });
                }
                Command::VerifyMd => corpus.grids.push(GridSample {
                    name,
                    function: serde_json::from_str::<GridFn>(&text)?,
                }),
                Command::Atoms => {
                    let combo: AtomicCombination = serde_json::from_str(&text)?;
                    corpus.atoms = combo.terms.iter().map(|t| t.atom()).collect();
                }
                other => bail!("--function is not used by {other}"),
            }
            corpus
        }
    };
    if let Some(arc) = &cli.arc {
        if command != Command::Fit {
            bail!("--arc is only used by fit");
        }
        corpus.arcs.push(parse_arc(arc)?);
    }
    Ok(corpus)
}

/// Write each witness's function to a file and print the replay command.
fn dump_witnesses(report: &RunReport, dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    for (i, w) in report.violations.iter().enumerate() {
        eprintln!("violation: {} on {}: {}", w.check, w.subject, w.detail);
        let mut replay = w.replay.clone();
        if let Some(file) = witness_file(w, dir, report.command, i)? {
            replay.push("--function".into());
            replay.push(file.display().to_string());
        }
        if let Some(arc) = &w.arc {
            if report.command == Command::Fit {
                replay.push("--arc".into());
                replay.push(format!("{},{}", arc.start(), arc.length()));
            } else {
                eprintln!("  arc: start {}, length {}", arc.start(), arc.length());
            }
        }
        eprintln!("  replay: dyadic-bmo {}", replay.join(" "));
    }
    Ok(())
}

fn witness_file(w: &Witness, dir: &Path, command: Command, i: usize) -> anyhow::Result<Option<PathBuf>> {
    let body = if let Some(f) = &w.function {
        serde_json::to_string_pretty(f)?
    } else if let Some(g) = &w.grid_function {
        serde_json::to_string_pretty(g)?
    } else if let Some(c) = &w.combination {
        serde_json::to_string_pretty(c)?
    } else {
        return Ok(None);
    };
    let path = dir.join(format!("witness-{command}-{i}.json"));
    fs::write(&path, body)?;
    Ok(Some(path))
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let command = Command::from(cli.command);
    let config = load_config(cli)?;
    let corpus = load_corpus(cli, command, &config)?;
    let report = run_on_corpus(command, &config, &corpus)?;
    let body = match cli.format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv()?,
    };
    match &cli.out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{body}"),
    }
    if !report.passed {
        let dir = match (&cli.witness_dir, &cli.out) {
            (Some(d), _) => d.clone(),
            (None, Some(out)) => out.parent().map(Path::to_path_buf).unwrap_or_default(),
            (None, None) => PathBuf::from("."),
        };
        dump_witnesses(&report, &dir)?;
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
