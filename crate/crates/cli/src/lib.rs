//! `tsqa` command line: build, prompt, score, inspect and validate.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tsqa_core::clock::Clock;
use tsqa_core::dataset::{generate_dataset, load_dataset, read_records, verify_dataset, verify_records, DatasetConfig, SampleRecord};
use tsqa_core::eval::{parse_responses, score_responses, MatchMode};
use tsqa_core::oracle::{build_timeline, locate_at, resolve};
use tsqa_core::plan::{generate_corpus, parse_plan_text};
use tsqa_core::question::{anchor_index, schedule_seed_path, SCHEDULE_VARIANTS};
use tsqa_core::render::{assemble_prompt, event_clause, pick_exemplars, PromptMode};
use tsqa_core::rng::rng_for;
use tsqa_core::schedule::draw_schedule;
use tsqa_core::{EntityId, QuestionType, Tier};

#[derive(Debug, Parser)]
#[command(name = "tsqa", version, about = "Time-sensitive QA generation over logistics schedules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the dataset files and manifest.
    Generate(GenerateArgs),
    /// Emit zero- or few-shot prompts for a dataset.
    Prompt(PromptArgs),
    /// Score a responses file against a dataset.
    Score(ScoreArgs),
    /// Print a scenario's schedule and answer one query with the oracle.
    Inspect(InspectArgs),
    /// Re-verify dataset records against the brute-force simulator.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct Filters {
    /// Only these tiers (comma separated).
    #[arg(long, value_delimiter = ',')]
    tiers: Vec<Tier>,
    /// Only these question types (comma separated).
    #[arg(long, value_delimiter = ',')]
    qtypes: Vec<QuestionType>,
    /// Only these splits (comma separated).
    #[arg(long, value_delimiter = ',')]
    splits: Vec<u32>,
}

impl Filters {
    fn keep(&self, r: &SampleRecord) -> bool {
        (self.tiers.is_empty() || self.tiers.contains(&r.tier))
            && (self.qtypes.is_empty() || self.qtypes.contains(&r.qtype))
            && (self.splits.is_empty() || self.splits.contains(&r.split))
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "TSQA_OUT_DIR", default_value = "data")]
    out: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    filters: Filters,
}

#[derive(Debug, Args)]
struct PromptArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "zero-shot")]
    mode: Mode,
    /// Seed for exemplar selection.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (JSON lines of `{id, prompt}`); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    filters: Filters,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Mode {
    ZeroShot,
    FewShot,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    responses: PathBuf,
    /// Report path.
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    #[arg(long = "match", default_value = "token")]
    match_mode: MatchMode,
    #[command(flatten)]
    filters: Filters,
}

#[derive(Debug, Args)]
struct InspectArgs {
    /// Scenario index in the generated corpus.
    #[arg(long, default_value_t = 0)]
    scenario: u32,
    /// Plan text file to inspect instead of a generated scenario.
    #[arg(long, conflicts_with = "scenario")]
    plan: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tier: Tier,
    #[arg(long, default_value_t = 1)]
    split: u32,
    #[arg(long, default_value_t = 0)]
    variant: u64,
    #[arg(long)]
    package: Option<String>,
    /// Query clock, e.g. "01:15 PM".
    #[arg(long)]
    at: Option<Clock>,
    /// Clock at which the package's first linked event starts.
    #[arg(long)]
    anchor: Option<Clock>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Dataset directory with a manifest.
    #[arg(long, required_unless_present = "file")]
    dataset: Option<PathBuf>,
    /// A single JSON-lines file.
    #[arg(long, conflicts_with = "dataset")]
    file: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<DatasetConfig> {
    match path {
        None => Ok(DatasetConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.jobs.is_some() {
        config.jobs = args.jobs;
    }
    if !args.filters.tiers.is_empty() {
        config.tiers = args.filters.tiers.clone();
    }
    if !args.filters.qtypes.is_empty() {
        config.qtypes = args.filters.qtypes.clone();
    }
    if let Some(&max) = args.filters.splits.iter().max() {
        config.splits = max;
    }
    let manifest = generate_dataset(&config, &args.out)?;
    println!("wrote {} records in {} files to {}", manifest.total_records, manifest.files.len(), args.out.display());
    Ok(())
}

fn filtered(dir: &Path, filters: &Filters) -> Result<Vec<SampleRecord>> {
    Ok(load_dataset(dir)?.into_iter().filter(|r| filters.keep(r)).collect())
}

#[derive(Serialize)]
struct PromptLine<'a> {
    id: &'a str,
    prompt: String,
}

fn prompt(args: PromptArgs) -> Result<()> {
    let pool = load_dataset(&args.dataset)?;
    let mode = match args.mode {
        Mode::ZeroShot => PromptMode::ZeroShot,
        Mode::FewShot => PromptMode::FewShot,
    };
    let mut out = String::new();
    for record in pool.iter().filter(|r| args.filters.keep(r)) {
        let exemplars = match mode {
            PromptMode::ZeroShot => Vec::new(),
            PromptMode::FewShot => pick_exemplars(record, &pool, args.seed),
        };
        let text = assemble_prompt(record, mode, &exemplars).with_context(|| format!("record {}", record.id))?;
        out.push_str(&serde_json::to_string(&PromptLine { id: &record.id, prompt: text })?);
        out.push('\n');
    }
    match args.out {
        Some(path) => fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(out.as_bytes())?,
    }
    Ok(())
}

fn score(args: ScoreArgs) -> Result<()> {
    let records = filtered(&args.dataset, &args.filters)?;
    let text = fs::read_to_string(&args.responses).with_context(|| format!("reading {}", args.responses.display()))?;
    let responses = parse_responses(&text)?;
    let report = score_responses(&records, &responses, args.match_mode)?;
    fs::write(&args.out, serde_json::to_string_pretty(&report)?).with_context(|| format!("writing {}", args.out.display()))?;
    print!("{}", report.table());
    Ok(())
}

fn inspect(args: InspectArgs) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let seed = args.seed.unwrap_or(config.seed);
    let scenario = match &args.plan {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_plan_text(&text)?
        }
        None => {
            let corpus = generate_corpus(seed, config.scenarios.max(args.scenario + 1), &config.planner)?;
            corpus.into_iter().nth(args.scenario as usize).ok_or_else(|| anyhow!("no scenario {}", args.scenario))?
        }
    };
    if args.variant >= SCHEDULE_VARIANTS {
        bail!("variant must be below {SCHEDULE_VARIANTS}");
    }
    let mut rng = rng_for(&schedule_seed_path(seed, args.tier, args.split, args.scenario as usize, args.variant));
    let mut schedule = draw_schedule(&scenario.plan, args.tier, &config.timing, &mut rng)?;
    let package = args.package.as_deref().map(EntityId::from);
    if let Some(anchor) = args.anchor {
        let p = package.as_ref().ok_or_else(|| anyhow!("--anchor needs --package"))?;
        let idx = anchor_index(&schedule, args.tier, p).ok_or_else(|| anyhow!("{p} has no linked events"))?;
        schedule.origin = anchor.offset(-i64::from(schedule.events[idx - 1].start));
    }
    println!(
        "scenario {} ({} events, {} tier, makespan {} min)",
        scenario.scenario_id,
        scenario.plan.len(),
        args.tier,
        schedule.makespan()
    );
    for e in &schedule.events {
        println!(
            "{:>3}  {} - {}  {:>3} min  {}",
            e.index,
            schedule.clock_at(e.start),
            schedule.clock_at(e.end()),
            e.duration,
            event_clause(&e.event)
        );
    }
    if let Some(p) = package {
        let timeline = build_timeline(&scenario.world, &scenario.init, &schedule, &p)?;
        println!("timeline of {p}:");
        for s in &timeline.segments {
            println!("  {} - {}  {}", schedule.clock_at(s.start), schedule.clock_at(s.end), s.answer);
        }
        if let Some(at) = args.at {
            let minute = resolve(&schedule, at)?;
            println!("{p} at {at}: {}", locate_at(&timeline, minute)?);
        }
    } else if args.at.is_some() {
        bail!("--at needs --package");
    }
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<()> {
    let report = match (&args.dataset, &args.file) {
        (Some(dir), _) => verify_dataset(dir)?,
        (None, Some(file)) => verify_records(&read_records(file)?),
        (None, None) => bail!("give --dataset or --file"),
    };
    for (id, reason) in &report.failures {
        eprintln!("{id}: {reason}");
    }
    if !report.ok() {
        bail!("{} of {} records failed re-verification", report.failures.len(), report.records);
    }
    println!("{} records verified", report.records);
    Ok(())
}

/// Runs the command line and returns the process exit status: 0 on
/// success, 1 on runtime errors, 2 on usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Prompt(a) => prompt(a),
        Command::Score(a) => score(a),
        Command::Inspect(a) => inspect(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
