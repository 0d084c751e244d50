//! Dataset builds: question splits rendered to JSON-lines files plus a
//! hashed manifest, and re-verification of persisted files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::clock::Clock;
use crate::domain::EntityId;
use crate::ingest::{ingest_record, RecordText};
use crate::oracle::{simulate_minutes, AnswerSet};
use crate::plan::{generate_corpus, PlanError, PlannerConfig, Scenario, MAX_EVENTS};
use crate::question::{build_split, effective_query, Anchor, Question, QuestionError, QuestionParams, QuestionType, SplitItem};
use crate::render::{render_question_text, render_scenario_text};
use crate::rng::{rng_for, tag};
use crate::schedule::{Perturbation, ScheduleError, Tier, TimingParams};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordMeta {
    pub seed_path: Vec<u64>,
    pub origin: Clock,
    pub package: EntityId,
    pub query_clock: Clock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_clock: Option<Clock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset_hours: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Anchor>,
}

/// One dataset sample, serialized as one JSON line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub id: String,
    pub tier: Tier,
    pub qtype: QuestionType,
    pub split: u32,
    pub depth: u32,
    pub scenario_id: u32,
    pub domain: String,
    pub objects: String,
    pub init: String,
    pub events: String,
    pub question: String,
    pub answers: Vec<String>,
    pub meta: RecordMeta,
}

impl SampleRecord {
    pub fn text(&self) -> RecordText<'_> {
        RecordText { tier: self.tier, objects: &self.objects, init: &self.init, events: &self.events, question: &self.question }
    }

    pub fn gold(&self) -> Option<AnswerSet> {
        AnswerSet::from_answers(&self.answers)
    }
}

pub fn record_id(tier: Tier, qtype: QuestionType, split: u32, depth: u32, slot: u32) -> String {
    format!("{tier}-{qtype}-s{split}-d{depth:02}-k{slot:02}")
}

pub fn file_name(tier: Tier, qtype: QuestionType, split: u32) -> String {
    format!("unseentimeqa_{tier}_{qtype}_split{split}.jsonl")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schema error at {path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

pub fn serialize_record(record: &SampleRecord) -> String {
    serde_json::to_string(record).expect("records serialize")
}

fn json_path(path: &serde_path_to_error::Path, message: &str) -> String {
    let mut out = String::from("$");
    let rendered = path.to_string();
    if rendered != "." {
        out.push('.');
        out.push_str(&rendered);
    }
    if let Some(field) = message.strip_prefix("missing field `").and_then(|m| m.split('`').next()) {
        out.push('.');
        out.push_str(field);
    }
    out
}

/// Parses one JSON line and checks the answer invariants.
pub fn parse_record(line: &str) -> Result<SampleRecord, SchemaError> {
    let mut de = serde_json::Deserializer::from_str(line);
    let record: SampleRecord = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let message = e.inner().to_string();
        SchemaError { path: json_path(e.path(), &message), message }
    })?;
    if record.answers.is_empty() || record.answers.len() > 2 || record.gold().is_none() {
        return Err(SchemaError {
            path: "$.answers".into(),
            message: format!("expected one location and/or one vehicle id, found {:?}", record.answers),
        });
    }
    if !(1..=9).contains(&record.split) {
        return Err(SchemaError { path: "$.split".into(), message: format!("split {} out of range", record.split) });
    }
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub seed: u64,
    pub scenarios: u32,
    pub splits: u32,
    pub tiers: Vec<Tier>,
    pub qtypes: Vec<QuestionType>,
    pub planner: PlannerConfig,
    pub timing: TimingParams,
    pub questions: QuestionParams,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            seed: 0,
            scenarios: 10,
            splits: 3,
            tiers: Tier::ALL.to_vec(),
            qtypes: QuestionType::ALL.to_vec(),
            planner: PlannerConfig::default(),
            timing: TimingParams::default(),
            questions: QuestionParams::default(),
            jobs: None,
        }
    }
}

impl DatasetConfig {
    pub fn check(&self) -> Result<(), DatasetError> {
        self.planner.size.check()?;
        self.timing.check(MAX_EVENTS)?;
        self.questions.check(&self.timing)?;
        if self.scenarios == 0 || self.splits == 0 || !(1..=9).contains(&self.splits) {
            return Err(DatasetError::Config(format!(
                "need at least one scenario and 1..=9 splits (got {} scenarios, {} splits)",
                self.scenarios, self.splits
            )));
        }
        if self.jobs == Some(0) {
            return Err(DatasetError::Config("jobs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub tier: Tier,
    pub qtype: QuestionType,
    pub split: u32,
    pub records: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub total_records: usize,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{file}:{line}: {source}")]
    Schema { file: String, line: usize, source: SchemaError },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Question(#[from] QuestionError),
    #[error("record {id}: {detail}")]
    OracleMismatch { id: String, detail: String },
    #[error("manifest: {0}")]
    Manifest(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

fn tier_code(tier: Tier) -> u64 {
    Tier::ALL.iter().position(|&t| t == tier).unwrap() as u64
}

fn qtype_code(q: QuestionType) -> u64 {
    QuestionType::ALL.iter().position(|&t| t == q).unwrap() as u64
}

/// Renders one split item into a record.
pub fn render_record(item: &SplitItem, scenario: &Scenario, split: u32, seed: u64) -> SampleRecord {
    let q = &item.question;
    let mut rng =
        rng_for(&[tag::RENDER, seed, tier_code(q.tier), qtype_code(q.qtype), u64::from(split), u64::from(q.depth), u64::from(item.slot)]);
    let text = render_scenario_text(scenario, &item.schedule, q.tier, &mut rng);
    SampleRecord {
        id: record_id(q.tier, q.qtype, split, q.depth, item.slot),
        tier: q.tier,
        qtype: q.qtype,
        split,
        depth: q.depth,
        scenario_id: scenario.scenario_id,
        domain: text.domain,
        objects: text.objects,
        init: text.init,
        events: text.events,
        question: render_question_text(q, &item.schedule),
        answers: q.gold.answers(),
        meta: RecordMeta {
            seed_path: item.seed_path.clone(),
            origin: item.schedule.origin,
            package: q.package.clone(),
            query_clock: q.query_clock,
            reference_clock: q.reference_clock,
            offset_hours: q.offset_hours,
            perturbation: q.perturbation,
            anchor: q.anchor,
        },
    }
}

/// Re-derives a record's answers from its text through both the segment
/// timeline and the minute-stepping simulator.
pub fn verify_record(record: &SampleRecord) -> Result<(), String> {
    let gold = record.gold().ok_or("answers are not an answer set")?;
    let ingested = ingest_record(record.text()).map_err(|e| format!("re-ingestion failed: {e}"))?;
    if ingested.question.gold != gold {
        return Err(format!("timeline answers {} but record says {gold}", ingested.question.gold));
    }
    let (effective, minute) = effective_query(&ingested.question, &ingested.schedule).map_err(|e| e.to_string())?;
    let sim = simulate_minutes(&ingested.scenario.world, &ingested.scenario.init, &effective, &ingested.question.package, minute)
        .map_err(|e| e.to_string())?;
    if sim != gold {
        return Err(format!("simulation answers {sim} but record says {gold}"));
    }
    if ingested.question.qtype != record.qtype {
        return Err(format!("question reads as {} but record says {}", ingested.question.qtype, record.qtype));
    }
    Ok(())
}

fn check_item(item: &SplitItem, record: &SampleRecord) -> Result<(), DatasetError> {
    let mismatch = |detail: String| DatasetError::OracleMismatch { id: record.id.clone(), detail };
    let q: &Question = &item.question;
    if record.answers != q.gold.answers() {
        return Err(mismatch("rendered answers differ from the sampled gold".into()));
    }
    verify_record(record).map_err(mismatch)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Cell {
    tier: Tier,
    qtype: QuestionType,
    split: u32,
}

fn build_cell(cell: &Cell, scenarios: &[Scenario], config: &DatasetConfig) -> Result<Vec<SampleRecord>, DatasetError> {
    let items = build_split(scenarios, cell.tier, cell.qtype, cell.split, config.seed, &config.timing, &config.questions)?;
    items
        .iter()
        .map(|item| {
            let record = render_record(item, &scenarios[item.scenario_index], cell.split, config.seed);
            check_item(item, &record)?;
            Ok(record)
        })
        .collect()
}

/// Builds every (tier, qtype, split) cell into `out`. The manifest is
/// written last, so its presence marks a complete build.
pub fn generate_dataset(config: &DatasetConfig, out: &Path) -> Result<Manifest, DatasetError> {
    config.check()?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let scenarios = generate_corpus(config.seed, config.scenarios, &config.planner)?;
    let cells: Vec<Cell> = config
        .tiers
        .iter()
        .flat_map(|&tier| config.qtypes.iter().flat_map(move |&qtype| (1..=config.splits).map(move |split| Cell { tier, qtype, split })))
        .collect();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = config.jobs {
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| DatasetError::Config(e.to_string()))?;
    let built: Vec<Result<ManifestEntry, DatasetError>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let records = build_cell(cell, &scenarios, config)?;
                let mut body = String::new();
                for r in &records {
                    body.push_str(&serialize_record(r));
                    body.push('\n');
                }
                let file = file_name(cell.tier, cell.qtype, cell.split);
                write_atomic(&out.join(&file), body.as_bytes())?;
                Ok(ManifestEntry {
                    file,
                    tier: cell.tier,
                    qtype: cell.qtype,
                    split: cell.split,
                    records: records.len(),
                    sha256: sha256_hex(body.as_bytes()),
                })
            })
            .collect()
    });
    let files = built.into_iter().collect::<Result<Vec<_>, _>>()?;
    let manifest = Manifest { seed: config.seed, total_records: files.iter().map(|f| f.records).sum(), files };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&out.join(MANIFEST_FILE), json.as_bytes())?;
    Ok(manifest)
}

pub fn read_records(path: &Path) -> Result<Vec<SampleRecord>, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file = path.display().to_string();
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_record(l).map_err(|source| DatasetError::Schema { file: file.clone(), line: i + 1, source }))
        .collect()
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, DatasetError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|e| DatasetError::Manifest(e.to_string()))
}

/// Every record listed in the manifest, in manifest order.
pub fn load_dataset(dir: &Path) -> Result<Vec<SampleRecord>, DatasetError> {
    let manifest = read_manifest(dir)?;
    let mut out = Vec::with_capacity(manifest.total_records);
    for entry in &manifest.files {
        out.extend(read_records(&dir.join(&entry.file))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub records: usize,
    /// `(id, reason)` for every record that failed re-verification.
    pub failures: Vec<(String, String)>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn verify_records(records: &[SampleRecord]) -> VerifyReport {
    let failures: Vec<(String, String)> = records.par_iter().filter_map(|r| verify_record(r).err().map(|e| (r.id.clone(), e))).collect();
    VerifyReport { records: records.len(), failures }
}

/// Checks manifest hashes and counts, then re-verifies every record.
pub fn verify_dataset(dir: &Path) -> Result<VerifyReport, DatasetError> {
    let manifest = read_manifest(dir)?;
    let mut all = Vec::new();
    for entry in &manifest.files {
        let path = dir.join(&entry.file);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        if sha256_hex(&bytes) != entry.sha256 {
            return Err(DatasetError::Manifest(format!("{} does not match its hash", entry.file)));
        }
        let records = read_records(&path)?;
        if records.len() != entry.records {
            return Err(DatasetError::Manifest(format!("{} has {} records, manifest says {}", entry.file, records.len(), entry.records)));
        }
        all.extend(records);
    }
    Ok(verify_records(&all))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SampleRecord {
        SampleRecord {
            id: record_id(Tier::Easy, QuestionType::Static, 1, 6, 0),
            tier: Tier::Easy,
            qtype: QuestionType::Static,
            split: 1,
            depth: 6,
            scenario_id: 0,
            domain: "d".into(),
            objects: "o".into(),
            init: "i".into(),
            events: "e".into(),
            question: "q".into(),
            answers: vec!["l1_0".into(), "a1".into()],
            meta: RecordMeta {
                seed_path: vec![3, 7],
                origin: "01:13 AM".parse().unwrap(),
                package: "p3".into(),
                query_clock: "01:34 PM".parse().unwrap(),
                reference_clock: None,
                offset_hours: None,
                perturbation: None,
                anchor: None,
            },
        }
    }

    #[test]
    fn ids_and_names() {
        assert_eq!(sample().id, "easy-static-s1-d06-k00");
        assert_eq!(file_name(Tier::HardParallel, QuestionType::Relative, 2), "unseentimeqa_hard_parallel_relative_split2.jsonl");
    }

    #[test]
    fn record_round_trip() {
        let r = sample();
        let line = serialize_record(&r);
        assert!(line.contains(r#""answers":["l1_0","a1"]"#));
        assert_eq!(parse_record(&line).unwrap(), r);
    }

    #[test]
    fn missing_answers_reports_path() {
        let mut v: serde_json::Value = serde_json::from_str(&serialize_record(&sample())).unwrap();
        v.as_object_mut().unwrap().remove("answers");
        let err = parse_record(&v.to_string()).unwrap_err();
        assert_eq!(err.path, "$.answers");
    }

    #[test]
    fn nested_type_error_reports_path() {
        let mut v: serde_json::Value = serde_json::from_str(&serialize_record(&sample())).unwrap();
        v["meta"]["origin"] = serde_json::json!("25:00 XM");
        assert_eq!(parse_record(&v.to_string()).unwrap_err().path, "$.meta.origin");
    }

    #[test]
    fn bad_answers_rejected() {
        let mut r = sample();
        r.answers = vec!["l1_0".into(), "l2_0".into()];
        assert_eq!(parse_record(&serialize_record(&r)).unwrap_err().path, "$.answers");
        r.answers.clear();
        assert!(parse_record(&serialize_record(&r)).is_err());
    }
}
