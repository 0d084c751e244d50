//! Response parsing, answer matching and accuracy aggregation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::SampleRecord;
use crate::question::QuestionType;
use crate::schedule::Tier;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub reasoning: String,
    pub final_answer: String,
    /// No `Answer:` line was found; the whole text is the final answer.
    pub missing_marker: bool,
}

/// Splits at the last line starting with `Answer:` (any case).
pub fn parse_response(text: &str) -> ParsedResponse {
    let mut offset = 0;
    let mut marker = None;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim_start();
        if trimmed.len() >= 7 && trimmed[..7].eq_ignore_ascii_case("answer:") {
            marker = Some((offset, offset + (line.len() - trimmed.len()) + 7));
        }
        offset += line.len();
    }
    match marker {
        Some((line_start, answer_start)) => ParsedResponse {
            reasoning: text[..line_start].trim().to_string(),
            final_answer: text[answer_start..].trim().to_string(),
            missing_marker: false,
        },
        None => ParsedResponse { reasoning: String::new(), final_answer: text.trim().to_string(), missing_marker: true },
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Gold must appear delimited by non-word characters.
    #[default]
    Token,
    /// Plain case-insensitive containment.
    Substring,
}

impl std::str::FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "token" => Ok(MatchMode::Token),
            "substring" => Ok(MatchMode::Substring),
            other => Err(format!("unknown match mode `{other}` (expected token or substring)")),
        }
    }
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn contains_token(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    haystack.match_indices(needle).any(|(i, m)| {
        let before = haystack[..i].chars().next_back();
        let after = haystack[i + m.len()..].chars().next();
        !before.is_some_and(is_word) && !after.is_some_and(is_word)
    })
}

/// True when any gold answer occurs in the final answer.
pub fn score_sample<S: AsRef<str>>(final_answer: &str, gold: &[S], mode: MatchMode) -> bool {
    let hay = final_answer.to_lowercase();
    gold.iter().any(|g| {
        let g = g.as_ref().trim().to_lowercase();
        match mode {
            MatchMode::Token => contains_token(&hay, &g),
            MatchMode::Substring => !g.is_empty() && hay.contains(&g),
        }
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no verdict for {} record(s): {}", .0.len(), .0.join(", "))]
    Coverage(Vec<String>),
    #[error("responses line {line}: {message}")]
    Responses { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub tier: Tier,
    pub qtype: QuestionType,
    pub split_accuracy: BTreeMap<u32, f64>,
    /// Mean of the split accuracies.
    pub mean: f64,
    /// Population standard deviation of the split accuracies.
    pub std: f64,
    pub depth_accuracy: BTreeMap<u32, f64>,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub mode: MatchMode,
    pub cells: Vec<CellScore>,
    pub verdicts: BTreeMap<String, bool>,
    /// Records whose response had no `Answer:` line.
    pub missing_marker: Vec<String>,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

pub fn population_std(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

fn ratio(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Aggregates verdicts per (tier, qtype) across splits and per depth.
pub fn aggregate_report(records: &[SampleRecord], verdicts: &BTreeMap<String, bool>, mode: MatchMode) -> Result<ScoreReport, EvalError> {
    let missing: Vec<String> = records.iter().filter(|r| !verdicts.contains_key(&r.id)).map(|r| r.id.clone()).collect();
    if !missing.is_empty() || records.is_empty() {
        return Err(EvalError::Coverage(missing));
    }
    type Tally = BTreeMap<u32, (usize, usize)>;
    let mut groups: BTreeMap<(Tier, QuestionType), (Tally, Tally)> = BTreeMap::new();
    for r in records {
        let hit = usize::from(verdicts[&r.id]);
        let (splits, depths) = groups.entry((r.tier, r.qtype)).or_default();
        let s = splits.entry(r.split).or_default();
        s.0 += hit;
        s.1 += 1;
        let d = depths.entry(r.depth).or_default();
        d.0 += hit;
        d.1 += 1;
    }
    let cells = groups
        .into_iter()
        .map(|((tier, qtype), (splits, depths))| {
            let split_accuracy: BTreeMap<u32, f64> = splits.iter().map(|(&k, &(h, n))| (k, ratio(h, n))).collect();
            let accs: Vec<f64> = split_accuracy.values().copied().collect();
            CellScore {
                tier,
                qtype,
                mean: mean(&accs),
                std: population_std(&accs),
                split_accuracy,
                depth_accuracy: depths.iter().map(|(&k, &(h, n))| (k, ratio(h, n))).collect(),
                records: splits.values().map(|s| s.1).sum(),
            }
        })
        .collect();
    let ids: BTreeSet<&String> = records.iter().map(|r| &r.id).collect();
    Ok(ScoreReport {
        mode,
        cells,
        verdicts: verdicts.iter().filter(|(k, _)| ids.contains(k)).map(|(k, v)| (k.clone(), *v)).collect(),
        missing_marker: Vec::new(),
    })
}

#[derive(Debug, Clone, Deserialize)]
struct ResponseLine {
    id: String,
    response: String,
}

/// Reads a JSON-lines responses file into `id → response`.
pub fn parse_responses(text: &str) -> Result<BTreeMap<String, String>, EvalError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: ResponseLine = serde_json::from_str(line).map_err(|e| EvalError::Responses { line: i + 1, message: e.to_string() })?;
        out.insert(r.id, r.response);
    }
    Ok(out)
}

/// Parses and scores every response, then aggregates.
pub fn score_responses(records: &[SampleRecord], responses: &BTreeMap<String, String>, mode: MatchMode) -> Result<ScoreReport, EvalError> {
    let mut verdicts = BTreeMap::new();
    let mut missing_marker = Vec::new();
    for r in records {
        if let Some(text) = responses.get(&r.id) {
            let parsed = parse_response(text);
            if parsed.missing_marker {
                missing_marker.push(r.id.clone());
            }
            verdicts.insert(r.id.clone(), score_sample(&parsed.final_answer, &r.answers, mode));
        }
    }
    let mut report = aggregate_report(records, &verdicts, mode)?;
    report.missing_marker = missing_marker;
    Ok(report)
}

impl ScoreReport {
    /// Plain-text summary: one row per (tier, qtype), then depth curves.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<14} {:<13} {:>7} {:>8} {:>7}", "tier", "qtype", "records", "mean", "std");
        for c in &self.cells {
            let _ = writeln!(out, "{:<14} {:<13} {:>7} {:>8.4} {:>7.4}", c.tier.as_str(), c.qtype.as_str(), c.records, c.mean, c.std);
        }
        for c in &self.cells {
            let curve: Vec<String> = c.depth_accuracy.iter().map(|(d, a)| format!("{d}:{a:.2}")).collect();
            let _ = writeln!(out, "depth {}/{}: {}", c.tier, c.qtype, curve.join(" "));
        }
        if !self.missing_marker.is_empty() {
            let _ = writeln!(out, "responses without an Answer: line: {}", self.missing_marker.len());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn last_marker_wins() {
        let p = parse_response("Reasoning steps: x\nAnswer: l2_0\nmore\nanswer: l1_0");
        assert_eq!(p.final_answer, "l1_0");
        assert!(p.reasoning.ends_with("more"));
        assert!(!p.missing_marker);
    }

    #[test]
    fn missing_marker_flags() {
        let p = parse_response("it is in t0");
        assert!(p.missing_marker);
        assert_eq!(p.final_answer, "it is in t0");
    }

    #[test]
    fn marker_must_start_a_line() {
        let p = parse_response("The Answer: maybe\nthen a1");
        assert!(p.missing_marker);
    }

    #[test]
    fn token_matching() {
        assert!(score_sample("The package is at l1_0 inside a1", &["l1_0", "a1"], MatchMode::Token));
        assert!(score_sample("t0", &["t0"], MatchMode::Token));
        assert!(!score_sample("l1_01", &["l1_0"], MatchMode::Token));
        assert!(score_sample("l1_01", &["l1_0"], MatchMode::Substring));
        assert!(score_sample("(T0).", &["t0"], MatchMode::Token));
    }

    #[test]
    fn population_std_of_three() {
        let xs = [0.4, 0.5, 0.6];
        assert!((mean(&xs) - 0.5).abs() < 1e-12);
        assert!((population_std(&xs) - (0.02f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn appending_gold_never_unscores(prefix in "[ a-z0-9_.,]{0,30}", suffix in "[ a-z0-9_.,]{0,30}") {
            let gold = ["l1_0"];
            let before = score_sample(&prefix, &gold, MatchMode::Token);
            let after = score_sample(&format!("{prefix} l1_0 {suffix}"), &gold, MatchMode::Token);
            prop_assert!(after);
            let extended = format!("{prefix} {suffix}");
            prop_assert!(!before || score_sample(&extended, &gold, MatchMode::Token));
        }
    }
}
