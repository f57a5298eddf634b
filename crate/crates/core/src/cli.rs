//! The `cgprobe` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.
//! Environment variables are never read.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::cg::{gender_report, generate_cg, write_provenance, CgTriple, GenderCounts, GenerationStats, SourceTriple};
use crate::config::{ProbeInput, RunConfig, DEFAULT_CONFIG};
use crate::conllu::{read_treebank, write_treebank, Split, Treebank};
use crate::embeddings::{validate, ValidationReport};
use crate::probe::{layer_sweep, render_table, write_layer_csv, HyperParams, ProbeReport, SweepTask};
use crate::tasks::{build_task, read_jsonl, summary_tsv, write_jsonl, TaskBuild, TaskKind};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cgprobe", version, about = "Colorless-green treebanks and layer-wise probing")]
struct Cli {
    /// Print the default configuration and exit.
    #[arg(long)]
    print_default_config: bool,

    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Repeat for more log output on stderr.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse CoNLL-U files and print sentence/token counts.
    Ingest {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Fail on invalid trees instead of skipping them.
        #[arg(long)]
        strict: bool,
    },
    /// Generate the colorless-green treebank triple.
    GenerateCg {
        #[arg(long)]
        config: PathBuf,
    },
    /// Build the JSONL probing datasets.
    BuildTasks {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `probe.input`.
        #[arg(long, value_parser = parse_input)]
        input: Option<ProbeInput>,
    },
    /// Train a single probe for one task at one layer.
    ProbeTrain {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        task: TaskKind,
        #[arg(long)]
        layer: usize,
    },
    /// Train probes for every configured task at every layer.
    ProbeSweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Merge sweep reports into one last-layer / best-layer table.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an embedding file against the treebanks it was extracted from.
    ValidateEmbeddings {
        file: PathBuf,
        #[arg(long = "conllu", required = true)]
        treebanks: Vec<PathBuf>,
    },
}

fn parse_input(s: &str) -> std::result::Result<ProbeInput, String> {
    match s {
        "source" => Ok(ProbeInput::Source),
        "cg" => Ok(ProbeInput::Cg),
        _ => Err(format!("expected `source` or `cg`, got `{s}`")),
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose);

    let result = match cli.jobs {
        Some(0) => Err(Error::Config("--jobs must be at least 1".into())),
        Some(jobs) => {
            // The global pool can only be sized once per process.
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
                log::debug!("--jobs ignored: {e}");
            }
            dispatch(cli, out)
        }
        None => dispatch(cli, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                EXIT_USAGE
            } else {
                EXIT_DATA
            }
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .write_style(env_logger::WriteStyle::Never)
        .format_timestamp(None)
        .try_init();
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    if cli.print_default_config {
        out.write_all(DEFAULT_CONFIG.as_bytes())?;
        return Ok(EXIT_OK);
    }
    let Some(command) = cli.command else {
        return Err(Error::Config("no subcommand given (see --help)".into()));
    };
    match command {
        Command::Ingest { files, strict } => ingest(&files, !strict, out),
        Command::GenerateCg { config } => generate(&RunConfig::load(&config)?, out),
        Command::BuildTasks { config, input } => {
            let config = RunConfig::load(&config)?;
            build_tasks(&config, input.unwrap_or(config.probe.input), out)
        }
        Command::ProbeTrain { config, task, layer } => probe_train(&RunConfig::load(&config)?, task, layer, out),
        Command::ProbeSweep { config } => probe_sweep(&RunConfig::load(&config)?, out),
        Command::Report { reports, out: path } => report(&reports, path.as_deref(), out),
        Command::ValidateEmbeddings { file, treebanks } => validate_embeddings(&file, &treebanks, out),
    }
}

fn write_output(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn ingest(files: &[PathBuf], lenient: bool, out: &mut dyn Write) -> Result<i32> {
    writeln!(out, "file\tsplit\tsentences\ttokens\tskipped")?;
    let mut totals = (0, 0, 0);
    for path in files {
        let split = Split::from_file_name(path).unwrap_or(Split::Train);
        let parsed = read_treebank(path, split, lenient)?;
        for s in &parsed.skipped {
            log::warn!("{}:{}: skipped `{}`: {}", path.display(), s.line, s.sent_id, s.reason);
        }
        let split_name = Split::from_file_name(path).map_or("-", Split::as_str);
        let tb = &parsed.treebank;
        writeln!(
            out,
            "{}\t{split_name}\t{}\t{}\t{}",
            path.display(),
            tb.sentences.len(),
            tb.token_count(),
            parsed.skipped.len()
        )?;
        totals.0 += tb.sentences.len();
        totals.1 += tb.token_count();
        totals.2 += parsed.skipped.len();
    }
    writeln!(out, "total\t*\t{}\t{}\t{}", totals.0, totals.1, totals.2)?;
    Ok(EXIT_OK)
}

fn load_sources(config: &RunConfig) -> Result<SourceTriple> {
    let [train, dev, test] = config.source_paths()?;
    let read = |path: &Path, split| -> Result<Treebank> {
        let parsed = read_treebank(path, split, config.ingest.lenient)?;
        for s in &parsed.skipped {
            log::warn!("{}:{}: skipped `{}`: {}", path.display(), s.line, s.sent_id, s.reason);
        }
        Ok(parsed.treebank)
    };
    Ok(SourceTriple {
        train: read(train, Split::Train)?,
        dev: read(dev, Split::Dev)?,
        test: read(test, Split::Test)?,
    })
}

pub fn cg_file(dir: &Path, split: Split) -> PathBuf {
    dir.join(format!("cg-{split}.conllu"))
}

#[derive(Serialize)]
struct SplitStats<'a> {
    split: Split,
    stats: &'a GenerationStats,
}

fn gender_table(rows: &[(String, usize, GenderCounts)]) -> String {
    let mut text = String::from("treebank\tsentences\tmasculine\tfeminine\n");
    for (name, sentences, counts) in rows {
        text.push_str(&format!("{name}\t{sentences}\t{counts}\n"));
    }
    text
}

fn generate(config: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let source = load_sources(config)?;
    let cg: CgTriple = generate_cg(&source, &config.generation_config()?, &config.schema)?;
    let dir = config.cg_dir();

    let mut rows = Vec::new();
    for (split, tb) in [(Split::Train, &source.train), (Split::Dev, &source.dev), (Split::Test, &source.test)] {
        rows.push((format!("source-{split}"), tb.sentences.len(), gender_report(tb)));
    }
    let mut stats = Vec::new();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (split, part) in cg.splits() {
        write_treebank(&cg_file(&dir, split), &part.treebank)?;
        write_provenance(&dir.join(format!("provenance-{split}.jsonl")), &part.provenance)?;
        rows.push((format!("cg-{split}"), part.treebank.sentences.len(), gender_report(&part.treebank)));
        if part.stats.dropped > 0 || part.stats.balance_deficit > 0 {
            log::warn!(
                "cg-{split}: {} sentences dropped, gender balance deficit {}",
                part.stats.dropped,
                part.stats.balance_deficit
            );
        }
        stats.push(SplitStats { split, stats: &part.stats });
    }
    let table = gender_table(&rows);
    write_output(&dir.join("gender_report.tsv"), &table)?;
    write_output(&dir.join("stats.json"), to_json(&stats)?)?;
    out.write_all(table.as_bytes())?;
    Ok(EXIT_OK)
}

fn load_input(config: &RunConfig, input: ProbeInput) -> Result<[Treebank; 3]> {
    match input {
        ProbeInput::Source => {
            let s = load_sources(config)?;
            Ok([s.train, s.dev, s.test])
        }
        ProbeInput::Cg => {
            let dir = config.cg_dir();
            let read = |split| -> Result<Treebank> {
                let path = cg_file(&dir, split);
                if !path.exists() {
                    return Err(Error::Config(format!(
                        "{}: no such file (run generate-cg first)",
                        path.display()
                    )));
                }
                Ok(read_treebank(&path, split, false)?.treebank)
            };
            Ok([read(Split::Train)?, read(Split::Dev)?, read(Split::Test)?])
        }
    }
}

fn build_tasks(config: &RunConfig, input: ProbeInput, out: &mut dyn Write) -> Result<i32> {
    let treebanks = load_input(config, input)?;
    let cases = config.case_map()?;
    let task_config = config.tasks.task_config();
    let dir = config.tasks_dir(input);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut builds: Vec<TaskBuild> = Vec::new();
    for &task in &config.tasks.build {
        for tb in &treebanks {
            let build = build_task(task, tb, &task_config, &cases)?;
            write_jsonl(&dir.join(task.file_name(tb.split)), &build.examples)?;
            builds.push(build);
        }
    }
    let summary = summary_tsv(&builds);
    write_output(&dir.join("summary.tsv"), &summary)?;
    out.write_all(summary.as_bytes())?;
    Ok(EXIT_OK)
}

fn sweep_tasks(config: &RunConfig, tasks: &[TaskKind]) -> Result<Vec<SweepTask>> {
    let dir = config.tasks_dir(config.probe.input);
    tasks
        .iter()
        .map(|&task| {
            let read = |split| -> Result<_> {
                let path = dir.join(task.file_name(split));
                if !path.exists() {
                    return Err(Error::Config(format!(
                        "{}: no such file (run build-tasks first)",
                        path.display()
                    )));
                }
                read_jsonl(&path)
            };
            Ok(SweepTask {
                task,
                train: read(Split::Train)?,
                dev: read(Split::Dev)?,
                test: read(Split::Test)?,
            })
        })
        .collect()
}

fn embedding_files(config: &RunConfig) -> Result<&[PathBuf]> {
    if config.probe.embeddings.is_empty() {
        return Err(Error::Config("probe.embeddings is empty".into()));
    }
    Ok(&config.probe.embeddings)
}

#[derive(Serialize)]
struct Manifest<'a> {
    seed: u64,
    treebank: &'a str,
    input: ProbeInput,
    model: &'a str,
    num_layers: usize,
    hidden_dim: usize,
    embeddings: &'a [PathBuf],
    tasks: Vec<TaskKind>,
    layers: Vec<usize>,
    best_layer_by: crate::probe::BestLayerBy,
    hyperparameters: HyperParams,
}

fn manifest<'a>(config: &'a RunConfig, report: &'a ProbeReport, tasks: &[TaskKind]) -> Manifest<'a> {
    let mut layers: Vec<usize> = report.scores.iter().map(|s| s.layer).collect();
    layers.sort();
    layers.dedup();
    Manifest {
        seed: config.seed,
        treebank: &report.treebank,
        input: config.probe.input,
        model: &report.model,
        num_layers: report.num_layers,
        hidden_dim: report.hidden_dim,
        embeddings: &config.probe.embeddings,
        tasks: tasks.to_vec(),
        layers,
        best_layer_by: report.best_by,
        hyperparameters: config.hyper(),
    }
}

fn write_report(dir: &Path, config: &RunConfig, report: &ProbeReport, tasks: &[TaskKind]) -> Result<()> {
    write_output(&dir.join("report.json"), to_json(report)?)?;
    write_output(&dir.join("layers.csv"), write_layer_csv(report))?;
    write_output(&dir.join("table.tsv"), render_table(std::slice::from_ref(report)))?;
    write_output(&dir.join("manifest.json"), to_json(&manifest(config, report, tasks))?)?;
    Ok(())
}

fn probe_train(config: &RunConfig, task: TaskKind, layer: usize, out: &mut dyn Write) -> Result<i32> {
    let files = embedding_files(config)?;
    let tasks = sweep_tasks(config, &[task])?;
    let report = layer_sweep(
        &config.probe.treebank_name,
        files,
        &tasks,
        Some(&[layer]),
        &config.hyper(),
        config.probe.best_layer_by,
    )?;
    let dir = config
        .probe_dir()
        .join(config.probe.input.as_str())
        .join(format!("{}-layer{layer}", task.as_str().to_lowercase()));
    write_report(&dir, config, &report, &[task])?;
    out.write_all(write_layer_csv(&report).as_bytes())?;
    Ok(EXIT_OK)
}

fn probe_sweep(config: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let files = embedding_files(config)?;
    let tasks = sweep_tasks(config, &config.tasks.build)?;
    let report = layer_sweep(
        &config.probe.treebank_name,
        files,
        &tasks,
        config.probe.layers.as_deref(),
        &config.hyper(),
        config.probe.best_layer_by,
    )?;
    let dir = config.probe_dir().join(config.probe.input.as_str()).join("sweep");
    write_report(&dir, config, &report, &config.tasks.build)?;
    out.write_all(render_table(std::slice::from_ref(&report)).as_bytes())?;
    Ok(EXIT_OK)
}

fn report(paths: &[PathBuf], dest: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let mut reports = Vec::new();
    for path in paths {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let report: ProbeReport = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        reports.push(report);
    }
    let table = render_table(&reports);
    match dest {
        Some(path) => write_output(path, &table)?,
        None => out.write_all(table.as_bytes())?,
    }
    Ok(EXIT_OK)
}

fn validate_embeddings(file: &Path, conllu: &[PathBuf], out: &mut dyn Write) -> Result<i32> {
    if !file.exists() {
        return Err(Error::io(file, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    let mut treebanks = Vec::new();
    for path in conllu {
        let split = Split::from_file_name(path).unwrap_or(Split::Train);
        treebanks.push(read_treebank(path, split, true)?.treebank);
    }
    let refs: Vec<&Treebank> = treebanks.iter().collect();
    let report: ValidationReport = validate(file, &refs)?;
    out.write_all(to_json(&report)?.as_bytes())?;
    if report.passed() {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_DATA)
    }
}
