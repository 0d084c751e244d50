//! Record text: event narration, scenario prose, questions and prompts.
//! [`parse`] reads the same text back.

pub mod parse;
pub mod templates;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{format_clock, Clock};
use crate::dataset::SampleRecord;
use crate::domain::{EntityId, GroundEvent, Position, Transfer};
use crate::plan::Scenario;
use crate::question::{Question, QuestionType};
use crate::schedule::{ScheduleMode, Tier, TimedEvent, TimedSchedule};

pub use parse::{
    parse_event_line, parse_init_text, parse_objects_text, parse_question_text, split_event_lines, ParsedEvent, ParsedQuestion, QueryTime,
};
pub use templates::{templates, Category, Temporal, DOMAIN_PARALLEL, DOMAIN_SERIAL, EVENTS_HEADER, REASONING_PROMPT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("unrecognized event line `{line}`: {reason}")]
    UnrecognizedLine { line: String, reason: String },
    #[error("unrecognized {section} sentence `{sentence}`")]
    UnrecognizedSentence { section: &'static str, sentence: String },
    #[error("malformed question `{question}`: {reason}")]
    MalformedQuestion { question: String, reason: String },
    #[error("few-shot prompts need exactly 2 exemplars, got {0}")]
    ExemplarCount(usize),
    #[error("exemplar `{0}` overlaps the test record")]
    Contamination(String),
}

/// Fills one template for one timed event.
pub fn fill_template(template: &str, ev: &TimedEvent, origin: Clock) -> String {
    let mut s = template.to_string();
    match &ev.event {
        GroundEvent::Transfer { op, mode, package, vehicle, at } => {
            let (past, gerund) = match op {
                Transfer::Load => ("loaded", "loading"),
                Transfer::Unload => {
                    s = s.replace("into {truck/airplane}", "from {truck/airplane}");
                    ("unloaded", "unloading")
                }
            };
            s = s
                .replace("{loaded/unloaded}", past)
                .replace("{loading/unloading}", gerund)
                .replace("{truck/airplane}", mode.noun())
                .replace("<package_id>", package.as_str())
                .replace("<vehicle_id>", vehicle.as_str())
                .replace("<location_id>", at.as_str());
        }
        GroundEvent::Move { vehicle, from, to, .. } => {
            s = s
                .replace("<truck_id>", vehicle.as_str())
                .replace("<airplane_id>", vehicle.as_str())
                .replace("<start_location_id>", from.as_str())
                .replace("<end_location_id>", to.as_str());
        }
    }
    s.replace("<event_start_time>", &format_clock(ev.start, origin))
        .replace("<event_end_time>", &format_clock(ev.end(), origin))
        .replace("{event_duration}", &ev.duration.to_string())
}

pub fn render_event_with(ev: &TimedEvent, origin: Clock, tier: Tier, template: usize) -> String {
    let set = templates(tier, Category::of(ev.event.kind()));
    fill_template(set[template % set.len()], ev, origin)
}

/// Narrates one event with a uniformly chosen template.
pub fn render_event_line(ev: &TimedEvent, origin: Clock, tier: Tier, rng: &mut ChaCha8Rng) -> String {
    let choice = rng.gen_range(0..4);
    render_event_with(ev, origin, tier, choice)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioText {
    pub domain: String,
    pub objects: String,
    pub init: String,
    pub events: String,
}

fn list_phrase<T: AsRef<str>>(items: &[T]) -> String {
    match items {
        [] => String::new(),
        [a] => a.as_ref().to_string(),
        [a, b] => format!("{} and {}", a.as_ref(), b.as_ref()),
        [rest @ .., last] => {
            let head: Vec<&str> = rest.iter().map(AsRef::as_ref).collect();
            format!("{}, and {}", head.join(", "), last.as_ref())
        }
    }
}

fn shuffled<'a>(ids: impl IntoIterator<Item = &'a EntityId>, rng: &mut ChaCha8Rng) -> Vec<&'a EntityId> {
    let mut v: Vec<&EntityId> = ids.into_iter().collect();
    v.shuffle(rng);
    v
}

fn there_are(count: usize, noun: &str, list: &str) -> String {
    if list.is_empty() {
        format!("there are {count} {noun}.")
    } else {
        format!("there are {count} {noun}, {list}.")
    }
}

pub fn render_objects_text(scenario: &Scenario, rng: &mut ChaCha8Rng) -> String {
    let w = &scenario.world;
    let cities = shuffled(&w.cities, rng);
    let locations = shuffled(w.locations.keys(), rng);
    let mut parts = vec![
        there_are(cities.len(), "cities", &list_phrase(&cities.iter().map(|c| c.as_str()).collect::<Vec<_>>())),
        there_are(locations.len(), "locations", &list_phrase(&locations.iter().map(|l| l.as_str()).collect::<Vec<_>>())),
    ];
    for city in &cities {
        let members: Vec<&str> = locations.iter().filter(|l| w.city_of(l) == Some(*city)).map(|l| l.as_str()).collect();
        if !members.is_empty() {
            parts.push(format!("locations {} are in city {city}.", list_phrase(&members)));
        }
    }
    let airports: Vec<&str> = locations.iter().filter(|l| w.is_airport(l)).map(|l| l.as_str()).collect();
    parts.push(if airports.is_empty() {
        "there are 0 airports.".to_string()
    } else {
        format!("there are {} airports, The location of the airports are {}.", airports.len(), list_phrase(&airports))
    });
    for (noun, set) in [("airplanes", &w.airplanes), ("trucks", &w.trucks), ("packages", &w.packages)] {
        let ids: Vec<&str> = shuffled(set, rng).iter().map(|i| i.as_str()).collect();
        parts.push(there_are(ids.len(), noun, &list_phrase(&ids)));
    }
    parts.join(" ")
}

pub fn render_init_text(scenario: &Scenario, rng: &mut ChaCha8Rng) -> String {
    let w = &scenario.world;
    let entities = shuffled(scenario.init.position.keys(), rng);
    let sentences: Vec<String> = entities
        .into_iter()
        .map(|id| {
            let noun = w.kind_of(id).map(|k| k.noun()).unwrap_or("object");
            match &scenario.init.position[id] {
                Position::At(l) => format!("{noun} {id} is at the location {l}."),
                Position::In(v) => {
                    let vnoun = w.kind_of(v).map(|k| k.noun()).unwrap_or("vehicle");
                    format!("{noun} {id} is in the {vnoun} {v}.")
                }
            }
        })
        .collect();
    sentences.join(" ")
}

pub fn render_events_text(schedule: &TimedSchedule, tier: Tier, rng: &mut ChaCha8Rng) -> String {
    let mut out = EVENTS_HEADER.to_string();
    for ev in &schedule.events {
        out.push(' ');
        out.push_str(&render_event_line(ev, schedule.origin, tier, rng));
    }
    out
}

pub fn domain_text(mode: ScheduleMode) -> &'static str {
    match mode {
        ScheduleMode::Serial => DOMAIN_SERIAL,
        ScheduleMode::Parallel => DOMAIN_PARALLEL,
    }
}

/// All four context sections of a record.
pub fn render_scenario_text(scenario: &Scenario, schedule: &TimedSchedule, tier: Tier, rng: &mut ChaCha8Rng) -> ScenarioText {
    ScenarioText {
        domain: domain_text(tier.mode()).to_string(),
        objects: render_objects_text(scenario, rng),
        init: render_init_text(scenario, rng),
        events: render_events_text(schedule, tier, rng),
    }
}

/// Gerund phrase naming an event inside a question.
pub fn event_clause(ev: &GroundEvent) -> String {
    match ev {
        GroundEvent::Transfer { op: Transfer::Load, mode, package, vehicle, at } => {
            format!("loading package {package} into {} {vehicle} at location {at}", mode.noun())
        }
        GroundEvent::Transfer { op: Transfer::Unload, mode, package, vehicle, at } => {
            format!("unloading package {package} from {} {vehicle} at location {at}", mode.noun())
        }
        GroundEvent::Move { mode, vehicle, from, to } => {
            let verb = match mode {
                crate::domain::VehicleKind::Truck => "driving truck",
                crate::domain::VehicleKind::Airplane => "flying airplane",
            };
            format!("{verb} {vehicle} from location {from} to location {to}")
        }
    }
}

fn hours_phrase(hours: i32) -> String {
    let n = hours.unsigned_abs();
    let unit = if n == 1 { "hour" } else { "hours" };
    let dir = if hours < 0 { "before" } else { "after" };
    format!("{n} {unit} {dir}")
}

/// Question sentence. Hard tiers lead with the anchor clause.
pub fn render_question_text(question: &Question, schedule: &TimedSchedule) -> String {
    let clause_of = |index: usize| schedule.event(index).map(|e| event_clause(&e.event)).unwrap_or_default();
    let mut conditions = Vec::new();
    if let Some(a) = question.anchor {
        conditions.push(format!("{} starts at {}", clause_of(a.index), a.clock));
    }
    if let Some(p) = question.perturbation {
        conditions.push(format!("{} is {} by {} minutes", clause_of(p.target), p.kind.verb(), p.minutes));
    }
    let when = match (question.qtype, question.reference_clock, question.offset_hours) {
        (QuestionType::Relative, Some(reference), Some(hours)) => format!("{} {reference}", hours_phrase(hours)),
        _ => format!("at {}", question.query_clock),
    };
    let ask = format!("is the package {} {when}?", question.package);
    if conditions.is_empty() {
        format!("Where {ask}")
    } else {
        format!("If {}, where {ask}", conditions.join(" and "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    ZeroShot,
    FewShot,
}

fn record_body(r: &SampleRecord) -> String {
    [r.domain.as_str(), &r.objects, &r.init, &r.events, &r.question].join("\n")
}

/// Full model prompt. Few-shot prompts lead with two solved exemplars, which
/// must not overlap the test record.
pub fn assemble_prompt(record: &SampleRecord, mode: PromptMode, exemplars: &[&SampleRecord]) -> Result<String, RenderError> {
    let test_body = record_body(record);
    let mut out = String::new();
    if mode == PromptMode::FewShot {
        if exemplars.len() != 2 {
            return Err(RenderError::ExemplarCount(exemplars.len()));
        }
        for (i, ex) in exemplars.iter().enumerate() {
            let body = record_body(ex);
            if ex.id == record.id || body == test_body || ex.question == record.question && ex.events == record.events {
                return Err(RenderError::Contamination(ex.id.clone()));
            }
            out.push_str(&format!("Example {}:\n{body}\nAnswer: {}\n\n", i + 1, ex.answers.join(", ")));
        }
    }
    out.push_str(&test_body);
    out.push('\n');
    out.push_str(REASONING_PROMPT);
    Ok(out)
}

/// Two exemplars of the same tier and question type drawn from other splits.
pub fn pick_exemplars<'a>(record: &SampleRecord, pool: &'a [SampleRecord], seed: u64) -> Vec<&'a SampleRecord> {
    let mut candidates: Vec<&SampleRecord> =
        pool.iter().filter(|r| r.tier == record.tier && r.qtype == record.qtype && r.split != record.split && r.id != record.id).collect();
    candidates.sort_by(|a, b| a.id.cmp(&b.id));
    let mut path = vec![crate::rng::tag::FEW_SHOT, seed];
    path.extend(&record.meta.seed_path);
    let mut rng = crate::rng::rng_for(&path);
    candidates.choose_multiple(&mut rng, 2).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::three_city_plan;
    use crate::oracle::AnswerSet;
    use crate::question::Anchor;
    use crate::rng::rng_for;
    use crate::schedule::{from_times, Perturbation, PerturbationKind};

    fn timed(event: GroundEvent, start: u32, duration: u32) -> TimedEvent {
        TimedEvent { index: 1, event, duration, start }
    }

    fn origin() -> Clock {
        "01:13 AM".parse().unwrap()
    }

    #[test]
    fn easy_load_line() {
        let ev = timed(GroundEvent::load_truck("p2", "t1", "l1_1"), 0, 29);
        assert_eq!(
            render_event_with(&ev, origin(), Tier::Easy, 2),
            "loading package p2 into truck t1 at location l1_1 starts at 01:13 AM and ends at 01:42 AM."
        );
    }

    #[test]
    fn hard_drive_line() {
        let ev = timed(GroundEvent::drive_truck("t1", "l1_1", "l1_0"), 14, 51);
        assert_eq!(
            render_event_with(&ev, origin(), Tier::HardSerial, 3),
            "truck t1 transports from location l1_1 to location l1_0 for 51 minutes."
        );
    }

    #[test]
    fn unload_reads_from() {
        let ev = timed(GroundEvent::unload_airplane("p0", "a1", "l0_0"), 0, 43);
        assert_eq!(
            render_event_with(&ev, origin(), Tier::Easy, 2),
            "unloading package p0 from airplane a1 at location l0_0 starts at 01:13 AM and ends at 01:56 AM."
        );
    }

    #[test]
    fn template_choice_is_seeded() {
        let ev = timed(GroundEvent::fly_airplane("a1", "l1_0", "l0_0"), 5, 68);
        let a = render_event_line(&ev, origin(), Tier::Medium, &mut rng_for(&[4, 2]));
        let b = render_event_line(&ev, origin(), Tier::Medium, &mut rng_for(&[4, 2]));
        assert_eq!(a, b);
    }

    #[test]
    fn lists_use_serial_comma() {
        assert_eq!(list_phrase(&["c2", "c0", "c1"]), "c2, c0, and c1");
        assert_eq!(list_phrase(&["a1", "a0"]), "a1 and a0");
        assert_eq!(list_phrase(&["a0"]), "a0");
    }

    fn schedule() -> TimedSchedule {
        let plan = three_city_plan();
        let starts: Vec<u32> = (0..plan.len() as u32).map(|i| i * 60).collect();
        from_times(ScheduleMode::Serial, &plan, &starts, &vec![50; plan.len()], "09:00 AM".parse().unwrap()).unwrap()
    }

    fn question() -> Question {
        Question {
            tier: Tier::Easy,
            qtype: QuestionType::Static,
            package: "p0".into(),
            query_clock: "10:53 PM".parse().unwrap(),
            reference_clock: None,
            offset_hours: None,
            perturbation: None,
            anchor: None,
            depth: 6,
            gold: AnswerSet::at("l0_2".into()),
        }
    }

    #[test]
    fn question_forms() {
        let s = schedule();
        assert_eq!(render_question_text(&question(), &s), "Where is the package p0 at 10:53 PM?");
        let rel = Question {
            qtype: QuestionType::Relative,
            reference_clock: Some("03:50 PM".parse().unwrap()),
            offset_hours: Some(-2),
            ..question()
        };
        assert_eq!(render_question_text(&rel, &s), "Where is the package p0 2 hours before 03:50 PM?");
        let rel1 = Question { offset_hours: Some(1), ..rel };
        assert_eq!(render_question_text(&rel1, &s), "Where is the package p0 1 hour after 03:50 PM?");
    }

    #[test]
    fn composite_hard_question() {
        let plan = vec![GroundEvent::load_truck("p1", "t0", "l0_1"), GroundEvent::drive_truck("t0", "l0_1", "l0_0")];
        let s = from_times(ScheduleMode::Serial, &plan, &[0, 10], &[10, 30], "09:06 AM".parse().unwrap()).unwrap();
        let q = Question {
            tier: Tier::HardSerial,
            qtype: QuestionType::Hypothetical,
            package: "p1".into(),
            query_clock: "12:08 PM".parse().unwrap(),
            perturbation: Some(Perturbation { target: 2, kind: PerturbationKind::Expedite, minutes: 15 }),
            anchor: Some(Anchor { index: 1, clock: "09:06 AM".parse().unwrap() }),
            ..question()
        };
        assert_eq!(
            render_question_text(&q, &s),
            "If loading package p1 into truck t0 at location l0_1 starts at 09:06 AM and driving truck t0 from location l0_1 to location l0_0 is expedited by 15 minutes, where is the package p1 at 12:08 PM?"
        );
    }

    #[test]
    fn empty_plan_events_text_is_header() {
        let s = TimedSchedule { mode: ScheduleMode::Serial, events: vec![], deps: Default::default(), origin: origin() };
        assert_eq!(render_events_text(&s, Tier::Easy, &mut rng_for(&[1])), EVENTS_HEADER);
    }

    #[test]
    fn domain_paragraph_by_mode() {
        assert!(domain_text(Tier::HardSerial.mode()).ends_with("all subsequent events are also delayed or expedited accordingly."));
        assert!(domain_text(Tier::HardParallel.mode()).contains("unloading of packages must occur before loading new packages."));
    }
}
