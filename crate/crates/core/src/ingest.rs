//! Rebuilds a scenario, its schedule and the question from record text
//! alone, then recomputes the gold answers.

use thiserror::Error;

use crate::clock::Clock;
use crate::clock::MINUTES_PER_DAY;
use crate::domain::{validate_plan, validate_world, DomainError, GroundEvent, PlanValidation};
use crate::oracle::AnswerSet;
use crate::plan::Scenario;
use crate::question::{anchor_index, compute_depth, gold_answers, Anchor, Question, QuestionError, QuestionType};
use crate::render::{
    parse_event_line, parse_init_text, parse_objects_text, parse_question_text, split_event_lines, ParsedEvent, QueryTime, RenderError,
};
use crate::schedule::{apply_perturbation, from_times, schedule_parallel, Perturbation, ScheduleError, Tier, TimedSchedule};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("world is inconsistent: {0}")]
    World(String),
    #[error("events invalid at position {index}: {error}")]
    Plan { index: usize, error: DomainError },
    #[error("event {index}: {reason}")]
    Timing { index: usize, reason: String },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("{tier} questions must state when an event starts")]
    MissingAnchor { tier: Tier },
    #[error("`{0}` does not occur in the narrated events")]
    ClauseNotFound(String),
    #[error(transparent)]
    Question(#[from] QuestionError),
}

/// Record sections needed for ingestion.
#[derive(Debug, Clone, Copy)]
pub struct RecordText<'a> {
    pub tier: Tier,
    pub objects: &'a str,
    pub init: &'a str,
    pub events: &'a str,
    pub question: &'a str,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub scenario: Scenario,
    pub schedule: TimedSchedule,
    pub events: Vec<ParsedEvent>,
    pub question: Question,
}

fn find_event(schedule: &TimedSchedule, ev: &GroundEvent) -> Result<usize, IngestError> {
    schedule.events.iter().find(|e| &e.event == ev).map(|e| e.index).ok_or_else(|| IngestError::ClauseNotFound(ev.to_string()))
}

fn timing(parsed: &[ParsedEvent], tier: Tier, anchor: Option<&(GroundEvent, Clock)>) -> Result<TimedSchedule, IngestError> {
    let plan: Vec<GroundEvent> = parsed.iter().map(|p| p.event.clone()).collect();
    let durations = parsed
        .iter()
        .enumerate()
        .map(|(i, p)| p.minutes().ok_or(IngestError::Timing { index: i + 1, reason: "no duration".into() }))
        .collect::<Result<Vec<u32>, _>>()?;
    if let Some(i) = durations.iter().position(|&d| d == 0) {
        return Err(IngestError::Timing { index: i + 1, reason: "zero duration".into() });
    }
    match tier {
        Tier::Easy | Tier::Medium => {
            let origin = parsed.first().and_then(|p| p.start).unwrap_or_default();
            let starts: Vec<u32> = parsed.iter().map(|p| origin.minutes_until(p.start.unwrap_or(origin))).collect();
            Ok(from_times(tier.mode(), &plan, &starts, &durations, origin)?)
        }
        Tier::HardSerial | Tier::HardParallel => {
            let (anchor_ev, anchor_clock) = anchor.ok_or(IngestError::MissingAnchor { tier })?;
            let unanchored = if tier == Tier::HardSerial {
                let mut t = 0;
                let starts: Vec<u32> = durations
                    .iter()
                    .map(|d| {
                        let s = t;
                        t += d;
                        s
                    })
                    .collect();
                from_times(tier.mode(), &plan, &starts, &durations, Clock::default())?
            } else {
                schedule_parallel(&plan, &durations, Clock::default(), MINUTES_PER_DAY - 1)?
            };
            let index = find_event(&unanchored, anchor_ev)?;
            let mut schedule = unanchored;
            schedule.origin = anchor_clock.offset(-i64::from(schedule.events[index - 1].start));
            Ok(schedule)
        }
    }
}

/// Parses every section and recomputes the question's gold answers.
pub fn ingest_record(text: RecordText<'_>) -> Result<Ingested, IngestError> {
    let world = parse_objects_text(text.objects)?;
    let violations = validate_world(&world);
    if !violations.is_empty() {
        let joined: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(IngestError::World(joined.join("; ")));
    }
    let init = parse_init_text(text.init)?;
    let parsed = split_event_lines(text.events).iter().map(|line| parse_event_line(line, text.tier)).collect::<Result<Vec<_>, _>>()?;
    let plan: Vec<GroundEvent> = parsed.iter().map(|p| p.event.clone()).collect();
    if let PlanValidation::Invalid { index, error } = validate_plan(&world, &init, &plan) {
        return Err(IngestError::Plan { index, error });
    }
    let pq = parse_question_text(text.question)?;
    let schedule = timing(&parsed, text.tier, pq.anchor.as_ref())?;

    let anchor = match &pq.anchor {
        Some((ev, clock)) => Some(Anchor { index: find_event(&schedule, ev)?, clock: *clock }),
        None => None,
    };
    let perturbation = match &pq.perturbation {
        Some((ev, kind, minutes)) => Some(Perturbation { target: find_event(&schedule, ev)?, kind: *kind, minutes: *minutes }),
        None => None,
    };
    let qtype = match (&pq.time, perturbation) {
        (QueryTime::Relative { .. }, _) => QuestionType::Relative,
        (_, Some(_)) => QuestionType::Hypothetical,
        _ => QuestionType::Static,
    };
    let (query_clock, reference_clock, offset_hours) = match pq.time {
        QueryTime::At(c) => (c, None, None),
        QueryTime::Relative { hours, reference } => (reference.offset(60 * i64::from(hours)), Some(reference), Some(hours)),
    };
    let scenario = Scenario { scenario_id: 0, world, init, goals: Default::default(), plan };
    let mut question = Question {
        tier: text.tier,
        qtype,
        package: pq.package,
        query_clock,
        reference_clock,
        offset_hours,
        perturbation,
        anchor,
        depth: 0,
        gold: AnswerSet { location: None, vehicle: None },
    };
    question.gold = gold_answers(&question, &scenario, &schedule)?;
    question.depth = ingested_depth(&question, &schedule).unwrap_or(0);
    Ok(Ingested { scenario, schedule, events: parsed, question })
}

fn ingested_depth(question: &Question, schedule: &TimedSchedule) -> Option<u32> {
    let mut effective = match question.perturbation {
        Some(p) => apply_perturbation(schedule, p).ok()?,
        None => schedule.clone(),
    };
    if let Some(a) = question.anchor {
        effective.origin = a.clock.offset(-i64::from(effective.event(a.index)?.start));
    }
    let minute = effective.origin.minutes_until(question.query_clock);
    let anchor = match question.anchor {
        Some(a) => a.index,
        None => anchor_index(&effective, question.tier, &question.package)?,
    };
    compute_depth(&effective, minute, anchor).ok()
}
