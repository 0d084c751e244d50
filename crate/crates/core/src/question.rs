//! Question sampling at controlled depths, gold answers, and 300-question splits.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::domain::{EntityId, GroundEvent};
use crate::oracle::{build_timeline, locate_at, resolve, AnswerSet, OracleError};
use crate::plan::Scenario;
use crate::rng::{rng_for, tag};
use crate::schedule::{
    apply_perturbation, draw_schedule, Perturbation, PerturbationKind, ScheduleError, Tier, TimedSchedule, TimingParams,
};

pub const MIN_DEPTH: u32 = 6;
pub const MAX_DEPTH: u32 = 20;
pub const PER_DEPTH: u32 = 20;
pub const SPLIT_SIZE: usize = ((MAX_DEPTH - MIN_DEPTH + 1) * PER_DEPTH) as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    Static,
    Relative,
    Hypothetical,
}

impl QuestionType {
    pub const ALL: [QuestionType; 3] = [QuestionType::Static, QuestionType::Relative, QuestionType::Hypothetical];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::Static => "static",
            QuestionType::Relative => "relative",
            QuestionType::Hypothetical => "hypothetical",
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuestionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QuestionType::ALL
            .into_iter()
            .find(|q| q.as_str() == s)
            .ok_or_else(|| format!("unknown question type `{s}` (expected static, relative or hypothetical)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Anchor {
    pub index: usize,
    pub clock: Clock,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub tier: Tier,
    pub qtype: QuestionType,
    pub package: EntityId,
    /// The clock the answer is evaluated at (reference plus offset for
    /// relative questions).
    pub query_clock: Clock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_clock: Option<Clock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset_hours: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Anchor>,
    pub depth: u32,
    pub gold: AnswerSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuestionParams {
    pub offset_hours: RangeInclusive<u32>,
    pub perturbation_minutes: RangeInclusive<u32>,
    /// Attempts per question slot before giving up.
    pub retries: u32,
}

impl Default for QuestionParams {
    fn default() -> Self {
        QuestionParams { offset_hours: 1..=4, perturbation_minutes: 4..=90, retries: 64 }
    }
}

impl QuestionParams {
    pub fn check(&self, timing: &TimingParams) -> Result<(), QuestionError> {
        let bad = |m: String| Err(QuestionError::InvalidParams(m));
        if self.offset_hours.is_empty() || *self.offset_hours.start() == 0 || *self.offset_hours.end() > 22 {
            return bad(format!("offset range {:?} must lie in 1..=22 hours", self.offset_hours));
        }
        if self.perturbation_minutes.is_empty() || *self.perturbation_minutes.start() == 0 {
            return bad(format!("perturbation range {:?} must be non-empty and positive", self.perturbation_minutes));
        }
        // Expedites need some event longer than the smallest perturbation.
        if *timing.durations.end() <= *self.perturbation_minutes.start() {
            return bad(format!(
                "longest duration {} cannot absorb an expedite of {} minutes",
                timing.durations.end(),
                self.perturbation_minutes.start()
            ));
        }
        if self.retries == 0 {
            return bad("retries must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuestionError {
    #[error("target depth {0} outside {MIN_DEPTH}..={MAX_DEPTH}")]
    DepthOutOfRange(u32),
    #[error("minute {minute} precedes the anchor event {anchor}")]
    NegativeDepth { minute: u32, anchor: usize },
    #[error("no package and minute reach depth {depth}")]
    SamplingMiss { depth: u32 },
    #[error("could not fill {tier}/{qtype} split {split} depth {depth} slot {slot} after {attempts} attempts")]
    Exhausted { tier: Tier, qtype: QuestionType, split: u32, depth: u32, slot: u32, attempts: u32 },
    #[error("invalid question parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Index of the latest-started event at `minute` (ties go to the later plan
/// position), minus the anchor index.
pub fn compute_depth(schedule: &TimedSchedule, minute: u32, anchor_index: usize) -> Result<u32, QuestionError> {
    let anchor = schedule.event(anchor_index).ok_or(QuestionError::NegativeDepth { minute, anchor: anchor_index })?;
    if minute < anchor.start {
        return Err(QuestionError::NegativeDepth { minute, anchor: anchor_index });
    }
    let latest = latest_started(schedule, minute).unwrap_or(0);
    latest.checked_sub(anchor_index).map(|d| d as u32).ok_or(QuestionError::NegativeDepth { minute, anchor: anchor_index })
}

fn latest_started(schedule: &TimedSchedule, minute: u32) -> Option<usize> {
    schedule.events.iter().filter(|e| e.start <= minute).max_by_key(|e| (e.start, e.index)).map(|e| e.index)
}

/// Anchor index for a tier: the narrative start, or the package's first
/// linked event on hard tiers.
pub fn anchor_index(schedule: &TimedSchedule, tier: Tier, package: &EntityId) -> Option<usize> {
    if tier.is_hard() {
        schedule.linked_events(package).first().copied()
    } else {
        Some(1)
    }
}

/// Minutes whose depth from `anchor` equals `depth`: the stretch during which
/// event `anchor + depth` is the latest started, clipped to the anchor start.
fn depth_window(schedule: &TimedSchedule, anchor: usize, depth: u32) -> Option<RangeInclusive<u32>> {
    let k = schedule.event(anchor + depth as usize)?;
    let anchor_start = schedule.event(anchor)?.start;
    if schedule.events.iter().any(|e| e.start == k.start && e.index > k.index) {
        return None;
    }
    let hi = match schedule.events.iter().map(|e| e.start).filter(|&s| s > k.start).min() {
        Some(next) => next - 1,
        None => schedule.span_end(),
    };
    let lo = k.start.max(anchor_start);
    (lo <= hi).then_some(lo..=hi)
}

/// Text that names an event in a question. Used to keep perturbation targets
/// unambiguous.
fn event_key(e: &GroundEvent) -> String {
    e.to_string()
}

fn unique_in_plan(schedule: &TimedSchedule, index: usize) -> bool {
    let key = event_key(&schedule.events[index - 1].event);
    schedule.events.iter().filter(|e| event_key(&e.event) == key).count() == 1
}

/// Re-derives the origin from the anchor clock, as a reader of the narration would.
fn anchored(schedule: &TimedSchedule, anchor: Option<Anchor>) -> TimedSchedule {
    let mut s = schedule.clone();
    if let Some(a) = anchor {
        if let Some(e) = schedule.event(a.index) {
            s.origin = a.clock.offset(-i64::from(e.start));
        }
    }
    s
}

/// The schedule a reader of the question works with (perturbed and
/// re-anchored) and the minute it asks about.
pub fn effective_query(question: &Question, schedule: &TimedSchedule) -> Result<(TimedSchedule, u32), QuestionError> {
    let effective = match question.perturbation {
        Some(p) => apply_perturbation(schedule, p)?,
        None => schedule.clone(),
    };
    let effective = anchored(&effective, question.anchor);
    let minute = match (question.reference_clock, question.offset_hours) {
        (Some(reference), Some(hours)) => {
            let r = resolve(&effective, reference)?;
            let m = i64::from(r) + 60 * i64::from(hours);
            u32::try_from(m)
                .ok()
                .filter(|m| (effective.span_start()..=effective.span_end()).contains(m))
                .ok_or(OracleError::OutOfRange { minute: m.max(0) as u32, start: effective.span_start(), end: effective.span_end() })?
        }
        _ => resolve(&effective, question.query_clock)?,
    };
    Ok((effective, minute))
}

/// Gold answers computed from the question's visible fields alone.
pub fn gold_answers(question: &Question, scenario: &Scenario, schedule: &TimedSchedule) -> Result<AnswerSet, QuestionError> {
    let (effective, minute) = effective_query(question, schedule)?;
    let timeline = build_timeline(&scenario.world, &scenario.init, &effective, &question.package)?;
    Ok(locate_at(&timeline, minute)?)
}

/// Samples one question at `target_depth`. Misses are reported so the caller
/// can retry with another stream.
pub fn sample_question(
    scenario: &Scenario,
    schedule: &TimedSchedule,
    tier: Tier,
    qtype: QuestionType,
    target_depth: u32,
    params: &QuestionParams,
    rng: &mut ChaCha8Rng,
) -> Result<Question, QuestionError> {
    if !(MIN_DEPTH..=MAX_DEPTH).contains(&target_depth) {
        return Err(QuestionError::DepthOutOfRange(target_depth));
    }
    let mut packages: Vec<&EntityId> = scenario.world.packages.iter().collect();
    packages.sort_by_key(|p| p.ordinal());
    packages.shuffle(rng);

    for package in packages {
        let Some(anchor_idx) = anchor_index(schedule, tier, package) else { continue };
        if anchor_idx + target_depth as usize > schedule.events.len() {
            continue;
        }
        let perturbation = match qtype {
            QuestionType::Hypothetical => match draw_perturbation(schedule, anchor_idx, target_depth, params, rng) {
                Some(p) => Some(p),
                None => continue,
            },
            _ => None,
        };
        let effective = match perturbation {
            Some(p) => match apply_perturbation(schedule, p) {
                Ok(s) => s,
                Err(_) => continue,
            },
            None => schedule.clone(),
        };
        let Some(window) = depth_window(&effective, anchor_idx, target_depth) else { continue };
        let anchor =
            tier.is_hard().then(|| Anchor { index: anchor_idx, clock: effective.clock_at(effective.events[anchor_idx - 1].start) });
        let (minute, reference_clock, offset_hours) = if qtype == QuestionType::Relative {
            let mut offsets: Vec<i64> = params.offset_hours.clone().flat_map(|h| [i64::from(h), -i64::from(h)]).collect();
            offsets.shuffle(rng);
            let (lo, hi) = (i64::from(effective.span_start()), i64::from(effective.span_end()));
            let picked = offsets.into_iter().find_map(|h| {
                // Reference m - 60h must stay inside the span.
                let from = i64::from(*window.start()).max(lo + 60 * h);
                let to = i64::from(*window.end()).min(hi + 60 * h);
                (from <= to).then(|| (rng.gen_range(from..=to) as u32, h))
            });
            let Some((m, h)) = picked else { continue };
            let reference = effective.clock_at((i64::from(m) - 60 * h) as u32);
            (m, Some(reference), Some(h as i32))
        } else {
            (rng.gen_range(window), None, None)
        };
        let timeline = build_timeline(&scenario.world, &scenario.init, &effective, package)?;
        let gold = locate_at(&timeline, minute)?;
        return Ok(Question {
            tier,
            qtype,
            package: package.clone(),
            query_clock: effective.clock_at(minute),
            reference_clock,
            offset_hours,
            perturbation,
            anchor,
            depth: target_depth,
            gold,
        });
    }
    Err(QuestionError::SamplingMiss { depth: target_depth })
}

fn draw_perturbation(
    schedule: &TimedSchedule,
    anchor: usize,
    depth: u32,
    params: &QuestionParams,
    rng: &mut ChaCha8Rng,
) -> Option<Perturbation> {
    let last = anchor + depth as usize;
    let targets: Vec<usize> = (anchor..=last).filter(|&i| unique_in_plan(schedule, i)).collect();
    let &target = targets.choose(rng)?;
    let duration = schedule.events[target - 1].duration;
    let (lo, hi) = (*params.perturbation_minutes.start(), *params.perturbation_minutes.end());
    let expedite_hi = hi.min(duration.saturating_sub(1));
    let kind = if rng.gen_bool(0.5) && expedite_hi >= lo { PerturbationKind::Expedite } else { PerturbationKind::Delay };
    let minutes = match kind {
        PerturbationKind::Expedite => rng.gen_range(lo..=expedite_hi),
        PerturbationKind::Delay => rng.gen_range(lo..=hi),
    };
    Some(Perturbation { target, kind, minutes })
}

/// One emitted question with the context needed to render and re-check it.
#[derive(Debug, Clone)]
pub struct SplitItem {
    pub question: Question,
    pub scenario_index: usize,
    /// Unperturbed schedule the question was drawn against.
    pub schedule: Arc<TimedSchedule>,
    pub slot: u32,
    pub seed_path: Vec<u64>,
}

fn tier_code(tier: Tier) -> u64 {
    Tier::ALL.iter().position(|&t| t == tier).unwrap() as u64
}

fn qtype_code(q: QuestionType) -> u64 {
    QuestionType::ALL.iter().position(|&t| t == q).unwrap() as u64
}

pub const SCHEDULE_VARIANTS: u64 = 4;

/// Schedules are shared by every question type of a (tier, split).
pub fn schedule_seed_path(seed: u64, tier: Tier, split: u32, scenario: usize, variant: u64) -> Vec<u64> {
    vec![tag::SCHEDULE, seed, tier_code(tier), u64::from(split), scenario as u64, variant]
}

/// Builds 20 questions per depth 6..=20. Scenarios are cycled by slot; a
/// slot that keeps missing moves to other schedule variants and scenarios.
pub fn build_split(
    scenarios: &[Scenario],
    tier: Tier,
    qtype: QuestionType,
    split: u32,
    seed: u64,
    timing: &TimingParams,
    params: &QuestionParams,
) -> Result<Vec<SplitItem>, QuestionError> {
    let mut schedules: HashMap<(usize, u64), Arc<TimedSchedule>> = HashMap::new();
    let mut items = Vec::with_capacity(SPLIT_SIZE);
    for depth in MIN_DEPTH..=MAX_DEPTH {
        for slot in 0..PER_DEPTH {
            let mut found = None;
            for attempt in 0..params.retries {
                let scenario_index = (slot as usize + (attempt / 16) as usize) % scenarios.len();
                let variant = u64::from(attempt / 4) % SCHEDULE_VARIANTS;
                let schedule = match schedules.entry((scenario_index, variant)) {
                    std::collections::hash_map::Entry::Occupied(e) => e.get().clone(),
                    std::collections::hash_map::Entry::Vacant(e) => {
                        let mut rng = rng_for(&schedule_seed_path(seed, tier, split, scenario_index, variant));
                        let s = draw_schedule(&scenarios[scenario_index].plan, tier, timing, &mut rng)?;
                        e.insert(Arc::new(s)).clone()
                    }
                };
                let seed_path = vec![
                    tag::QUESTION,
                    seed,
                    tier_code(tier),
                    qtype_code(qtype),
                    u64::from(split),
                    u64::from(depth),
                    u64::from(slot),
                    u64::from(attempt),
                ];
                let mut rng = rng_for(&seed_path);
                match sample_question(&scenarios[scenario_index], &schedule, tier, qtype, depth, params, &mut rng) {
                    Ok(question) => {
                        found = Some(SplitItem { question, scenario_index, schedule, slot, seed_path });
                        break;
                    }
                    Err(QuestionError::SamplingMiss { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            items.push(found.ok_or(QuestionError::Exhausted { tier, qtype, split, depth, slot, attempts: params.retries })?);
        }
    }
    Ok(items)
}

/// Depth histogram of a split.
pub fn depth_histogram<'a>(questions: impl IntoIterator<Item = &'a Question>) -> BTreeMap<u32, usize> {
    let mut h = BTreeMap::new();
    for q in questions {
        *h.entry(q.depth).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::simulate_minutes;
    use crate::plan::{generate_corpus, generate_scenario, PlannerConfig};

    fn setup(tier: Tier) -> (Scenario, TimedSchedule) {
        let scenario = generate_scenario(42, 0, &PlannerConfig::default()).unwrap();
        let mut rng = rng_for(&[7]);
        let schedule = draw_schedule(&scenario.plan, tier, &TimingParams::default(), &mut rng).unwrap();
        (scenario, schedule)
    }

    fn resolved_minute(q: &Question, s: &TimedSchedule) -> u32 {
        let s = match q.perturbation {
            Some(p) => apply_perturbation(s, p).unwrap(),
            None => s.clone(),
        };
        let s = anchored(&s, q.anchor);
        resolve(&s, q.query_clock).unwrap()
    }

    #[test]
    fn depth_is_index_distance() {
        let (_, s) = setup(Tier::Easy);
        assert_eq!(compute_depth(&s, s.events[0].start, 1), Ok(0));
        assert_eq!(compute_depth(&s, s.events[6].start + 1, 1), Ok(6));
        let late = s.events[4].start;
        assert!(matches!(compute_depth(&s, late, 6), Err(QuestionError::NegativeDepth { .. })));
    }

    #[test]
    fn sampled_questions_hit_their_depth_and_gold() {
        for tier in Tier::ALL {
            let (scenario, s) = setup(tier);
            for qtype in QuestionType::ALL {
                for depth in [6, 13, 20] {
                    let mut rng = rng_for(&[depth as u64, tier_code(tier), qtype_code(qtype)]);
                    let Ok(q) = sample_question(&scenario, &s, tier, qtype, depth, &QuestionParams::default(), &mut rng) else {
                        continue;
                    };
                    let effective = match q.perturbation {
                        Some(p) => apply_perturbation(&s, p).unwrap(),
                        None => s.clone(),
                    };
                    let m = resolved_minute(&q, &s);
                    let anchor = q.anchor.map(|a| a.index).unwrap_or(1);
                    assert_eq!(compute_depth(&effective, m, anchor), Ok(depth));
                    assert_eq!(gold_answers(&q, &scenario, &s).unwrap(), q.gold);
                    let sim = simulate_minutes(&scenario.world, &scenario.init, &effective, &q.package, m).unwrap();
                    assert_eq!(sim, q.gold);
                    assert_eq!(q.anchor.is_some(), tier.is_hard());
                    if let Some(a) = q.anchor {
                        assert_eq!(Some(a.index), s.linked_events(&q.package).first().copied());
                    }
                }
            }
        }
    }

    #[test]
    fn relative_equals_static_at_shifted_clock() {
        let (scenario, s) = setup(Tier::Medium);
        let mut rng = rng_for(&[3]);
        let q = sample_question(&scenario, &s, Tier::Medium, QuestionType::Relative, 10, &QuestionParams::default(), &mut rng).unwrap();
        let hours = q.offset_hours.unwrap();
        let static_q = Question {
            qtype: QuestionType::Static,
            query_clock: q.reference_clock.unwrap().offset(60 * i64::from(hours)),
            reference_clock: None,
            offset_hours: None,
            ..q.clone()
        };
        assert_eq!(gold_answers(&static_q, &scenario, &s).unwrap(), q.gold);
    }

    #[test]
    fn delay_then_mirrored_expedite_gives_static_gold() {
        let (scenario, s) = setup(Tier::HardParallel);
        let mut rng = rng_for(&[5]);
        let q = sample_question(&scenario, &s, Tier::HardParallel, QuestionType::Static, 9, &QuestionParams::default(), &mut rng).unwrap();
        let target = q.anchor.unwrap().index + 2;
        let delay = Perturbation { target, kind: PerturbationKind::Delay, minutes: 30 };
        let there_and_back = apply_perturbation(&apply_perturbation(&s, delay).unwrap(), delay.inverse()).unwrap();
        assert_eq!(gold_answers(&q, &scenario, &there_and_back).unwrap(), q.gold);
    }

    #[test]
    fn late_minimal_expedite_is_inert() {
        let (scenario, s) = setup(Tier::Easy);
        let mut rng = rng_for(&[11]);
        let q = sample_question(&scenario, &s, Tier::Easy, QuestionType::Static, 8, &QuestionParams::default(), &mut rng).unwrap();
        let m = resolved_minute(&q, &s);
        let late = s.events.iter().find(|e| e.start > m && e.duration > 1).unwrap();
        let hypo = Question {
            qtype: QuestionType::Hypothetical,
            perturbation: Some(Perturbation { target: late.index, kind: PerturbationKind::Expedite, minutes: 1 }),
            ..q.clone()
        };
        assert_eq!(gold_answers(&hypo, &scenario, &s).unwrap(), q.gold);
    }

    #[test]
    fn out_of_range_depth_rejected() {
        let (scenario, s) = setup(Tier::Easy);
        let mut rng = rng_for(&[1]);
        let r = sample_question(&scenario, &s, Tier::Easy, QuestionType::Static, 21, &QuestionParams::default(), &mut rng);
        assert_eq!(r, Err(QuestionError::DepthOutOfRange(21)));
    }

    #[test]
    fn split_is_flat_and_deterministic() {
        let scenarios = generate_corpus(1, 10, &PlannerConfig::default()).unwrap();
        let build = || {
            build_split(
                &scenarios,
                Tier::HardSerial,
                QuestionType::Hypothetical,
                2,
                99,
                &TimingParams::default(),
                &QuestionParams::default(),
            )
            .unwrap()
        };
        let a = build();
        assert_eq!(a.len(), SPLIT_SIZE);
        let hist = depth_histogram(a.iter().map(|i| &i.question));
        assert_eq!(hist.len(), 15);
        assert!(hist.values().all(|&n| n == 20));
        let b = build();
        assert!(a.iter().zip(&b).all(|(x, y)| x.question == y.question && x.seed_path == y.seed_path));
    }
}
