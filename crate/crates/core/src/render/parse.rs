//! Reads record text back into structure. Event lines are matched against
//! the template set first; anything else goes through a keyword extractor
//! that tolerates the wording drift seen in hand-edited records.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;

use super::templates::{templates, Category, Temporal, EVENTS_HEADER};
use super::RenderError;
use crate::clock::Clock;
use crate::domain::{EntityId, EntityKind, GroundEvent, Position, Transfer, VehicleKind, World, WorldState};
use crate::schedule::{PerturbationKind, Tier};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedEvent {
    pub event: GroundEvent,
    pub start: Option<Clock>,
    pub end: Option<Clock>,
    pub duration: Option<u32>,
    /// Template position when the line matched a template verbatim.
    pub template: Option<usize>,
}

impl ParsedEvent {
    /// Duration, derived from start and end when only those are given.
    pub fn minutes(&self) -> Option<u32> {
        self.duration.or_else(|| Some(self.start?.minutes_until(self.end?)))
    }
}

fn re(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("static pattern"))
}

const ID: &str = r"\b(?:[ptac]\d+|l\d+_\d+)\b";
const CLOCK: &str = r"\b\d{1,2}:\d{2}\s*[AaPp][Mm]\b";

fn ids(text: &str) -> Vec<EntityId> {
    static CELL: OnceLock<Regex> = OnceLock::new();
    re(&CELL, ID).find_iter(text).map(|m| EntityId::from(m.as_str())).collect()
}

fn clocks(text: &str) -> Result<Vec<Clock>, String> {
    static CELL: OnceLock<Regex> = OnceLock::new();
    re(&CELL, CLOCK).find_iter(text).map(|m| m.as_str().parse::<Clock>().map_err(|e| e.to_string())).collect()
}

fn placeholder_pattern(token: &str) -> &'static str {
    match token {
        "<package_id>" => r"(?P<package>p\d+)",
        "<vehicle_id>" | "<truck_id>" | "<airplane_id>" => r"(?P<vehicle>[ta]\d+)",
        "<location_id>" => r"(?P<at>l\d+_\d+)",
        "<start_location_id>" => r"(?P<from>l\d+_\d+)",
        "<end_location_id>" => r"(?P<to>l\d+_\d+)",
        "<event_start_time>" => r"(?P<start>\d{2}:\d{2} [AP]M)",
        "<event_end_time>" => r"(?P<end>\d{2}:\d{2} [AP]M)",
        "{event_duration}" => r"(?P<duration>\d+)",
        "{loaded/unloaded}" => r"(?P<op>loaded|unloaded)",
        "{loading/unloading}" => r"(?P<op>loading|unloading)",
        "{truck/airplane}" => r"(?P<mode>truck|airplane)",
        "{into/from}" => r"(?P<prep>into|from)",
        other => panic!("unknown placeholder {other}"),
    }
}

fn template_regex(template: &str) -> Regex {
    static TOKEN: OnceLock<Regex> = OnceLock::new();
    let token = re(&TOKEN, r"<[a-z_]+>|\{[a-z_/]+\}");
    let template = template.replace("into {truck/airplane}", "{into/from} {truck/airplane}");
    let mut pattern = String::from("^");
    let mut last = 0;
    for m in token.find_iter(&template) {
        pattern.push_str(&regex::escape(&template[last..m.start()]));
        pattern.push_str(placeholder_pattern(m.as_str()));
        last = m.end();
    }
    pattern.push_str(&regex::escape(&template[last..]));
    pattern.push('$');
    Regex::new(&pattern).expect("template pattern")
}

type Compiled = Vec<(Category, usize, Regex)>;

fn compiled(temporal: Temporal) -> &'static Compiled {
    static CELLS: [OnceLock<Compiled>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let (slot, tier) = match temporal {
        Temporal::StartEnd => (0, Tier::Easy),
        Temporal::StartDuration => (1, Tier::Medium),
        Temporal::Duration => (2, Tier::HardSerial),
    };
    CELLS[slot].get_or_init(|| {
        Category::ALL.into_iter().flat_map(|c| templates(tier, c).iter().enumerate().map(move |(i, t)| (c, i, template_regex(t)))).collect()
    })
}

fn strict(line: &str, tier: Tier) -> Option<ParsedEvent> {
    for (category, idx, rx) in compiled(Temporal::of(tier)) {
        let Some(c) = rx.captures(line) else { continue };
        let get = |name: &str| c.name(name).map(|m| m.as_str());
        let vehicle = get("vehicle")?;
        let event = match category {
            Category::Transfer => {
                let op = get("op")?;
                let load = op.starts_with("load");
                if get("prep") != Some(if load { "into" } else { "from" }) {
                    continue;
                }
                let mode = get("mode")?;
                if !vehicle.starts_with(&mode[..1]) {
                    continue;
                }
                let (package, at) = (get("package")?, get("at")?);
                match (load, mode) {
                    (true, "truck") => GroundEvent::load_truck(package, vehicle, at),
                    (false, "truck") => GroundEvent::unload_truck(package, vehicle, at),
                    (true, _) => GroundEvent::load_airplane(package, vehicle, at),
                    (false, _) => GroundEvent::unload_airplane(package, vehicle, at),
                }
            }
            Category::Drive if vehicle.starts_with('t') => GroundEvent::drive_truck(vehicle, get("from")?, get("to")?),
            Category::Fly if vehicle.starts_with('a') => GroundEvent::fly_airplane(vehicle, get("from")?, get("to")?),
            _ => continue,
        };
        return Some(ParsedEvent {
            event,
            start: get("start").and_then(|s| s.parse().ok()),
            end: get("end").and_then(|s| s.parse().ok()),
            duration: get("duration").and_then(|s| s.parse().ok()),
            template: Some(*idx),
        });
    }
    None
}

fn lenient(line: &str) -> Result<ParsedEvent, String> {
    static DURATION: OnceLock<Regex> = OnceLock::new();
    let lower = line.to_ascii_lowercase();
    let found = ids(line);
    let of = |k: EntityKind| found.iter().filter(|i| i.kind() == Some(k)).cloned().collect::<Vec<_>>();
    let (packages, locations) = (of(EntityKind::Package), of(EntityKind::Location));
    let vehicles: Vec<EntityId> =
        found.iter().filter(|i| matches!(i.kind(), Some(EntityKind::Truck | EntityKind::Airplane))).cloned().collect();
    let [vehicle] = vehicles.as_slice() else {
        return Err(format!("expected one vehicle, found {}", vehicles.len()));
    };
    let mode = if vehicle.kind() == Some(EntityKind::Truck) { VehicleKind::Truck } else { VehicleKind::Airplane };
    let event = if lower.contains("load") {
        let op = if lower.contains("unload") { Transfer::Unload } else { Transfer::Load };
        match (packages.as_slice(), locations.as_slice()) {
            ([p], [l]) => GroundEvent::Transfer { op, mode, package: p.clone(), vehicle: vehicle.clone(), at: l.clone() },
            _ => return Err(format!("a transfer names one package and one location, found {} and {}", packages.len(), locations.len())),
        }
    } else {
        match (packages.as_slice(), locations.as_slice()) {
            ([], [from, to]) => GroundEvent::Move { mode, vehicle: vehicle.clone(), from: from.clone(), to: to.clone() },
            _ => return Err(format!("a movement names two locations and no package, found {} location(s)", locations.len())),
        }
    };
    let times = clocks(line)?;
    if times.len() > 2 {
        return Err(format!("too many clock times ({})", times.len()));
    }
    let durations: Vec<u32> = re(&DURATION, r"(\d+)\s+minutes?\b").captures_iter(&lower).filter_map(|c| c[1].parse().ok()).collect();
    if durations.len() > 1 {
        return Err("more than one duration".into());
    }
    Ok(ParsedEvent {
        event,
        start: times.first().copied(),
        end: times.get(1).copied(),
        duration: durations.first().copied(),
        template: None,
    })
}

/// Parses one narrated event and checks it exposes exactly the temporal
/// fields of `tier`.
pub fn parse_event_line(line: &str, tier: Tier) -> Result<ParsedEvent, RenderError> {
    let line = line.trim();
    let fail = |reason: String| RenderError::UnrecognizedLine { line: line.to_string(), reason };
    let parsed = match strict(line, tier) {
        Some(p) => p,
        None => lenient(line).map_err(fail)?,
    };
    let fields = (parsed.start.is_some(), parsed.end.is_some(), parsed.duration.is_some());
    let expected = match Temporal::of(tier) {
        Temporal::StartEnd => (true, true, false),
        Temporal::StartDuration => (true, false, true),
        Temporal::Duration => (false, false, true),
    };
    if fields != expected {
        return Err(fail(format!(
            "{tier} narrations give {}, found start={} end={} duration={}",
            match Temporal::of(tier) {
                Temporal::StartEnd => "a start and an end time",
                Temporal::StartDuration => "a start time and a duration",
                Temporal::Duration => "a duration only",
            },
            fields.0,
            fields.1,
            fields.2
        )));
    }
    Ok(parsed)
}

/// Sentences of an events section, header removed.
pub fn split_event_lines(events: &str) -> Vec<String> {
    let body = events.trim();
    let body = body.strip_prefix(EVENTS_HEADER).unwrap_or(body);
    body.split('.').map(str::trim).filter(|s| !s.is_empty()).map(|s| format!("{s}.")).collect()
}

fn sentences(text: &str) -> impl Iterator<Item = &str> {
    text.split('.').map(str::trim).filter(|s| !s.is_empty())
}

/// Rebuilds the world from the objects section.
pub fn parse_objects_text(objects: &str) -> Result<World, RenderError> {
    static COUNT: OnceLock<Regex> = OnceLock::new();
    static MEMBERS: OnceLock<Regex> = OnceLock::new();
    let count = re(&COUNT, r"(?i)^there (?:are|is) (\d+) (cities|city|locations?|airports?|airplanes?|trucks?|packages?)\b(.*)$");
    let members = re(&MEMBERS, r"(?i)^locations? (.+) (?:are|is) in (?:the )?city (c\d+)$");
    let mut world = World::default();
    let mut declared: BTreeSet<EntityId> = BTreeSet::new();
    let mut membership: BTreeMap<EntityId, EntityId> = BTreeMap::new();
    let bad = |s: &str| RenderError::UnrecognizedSentence { section: "objects", sentence: s.to_string() };
    for s in sentences(objects) {
        if let Some(c) = count.captures(s) {
            let listed = ids(&c[3]);
            if listed.len() != c[1].parse::<usize>().unwrap_or(usize::MAX) {
                return Err(bad(s));
            }
            let noun = c[2].to_ascii_lowercase();
            let target = match noun.trim_end_matches('s') {
                "citie" | "city" => &mut world.cities,
                "location" => &mut declared,
                "airport" => &mut world.airports,
                "airplane" => &mut world.airplanes,
                "truck" => &mut world.trucks,
                "package" => &mut world.packages,
                _ => return Err(bad(s)),
            };
            target.extend(listed);
        } else if let Some(c) = members.captures(s) {
            let city = EntityId::from(&c[2]);
            for l in ids(&c[1]) {
                membership.insert(l, city.clone());
            }
        } else {
            return Err(bad(s));
        }
    }
    for l in declared.iter().chain(membership.keys()) {
        let city = membership.get(l).cloned().or_else(|| l.encoded_city()).ok_or_else(|| bad(l.as_str()))?;
        world.locations.insert(l.clone(), city);
    }
    Ok(world)
}

/// Rebuilds the initial state from the init section.
pub fn parse_init_text(init: &str) -> Result<WorldState, RenderError> {
    static AT: OnceLock<Regex> = OnceLock::new();
    static IN: OnceLock<Regex> = OnceLock::new();
    let at = re(&AT, r"(?i)^(?:the )?(?:airplane|truck|package|product) ([pta]\d+) is at\s+(?:the\s+)?location\s+(l\d+_\d+)$");
    let inside = re(&IN, r"(?i)^(?:the )?(?:package|product) (p\d+) is in\s+(?:the\s+)?(?:truck|airplane)\s+([ta]\d+)$");
    let mut state = WorldState::default();
    for s in sentences(init) {
        if let Some(c) = at.captures(s) {
            state.set(EntityId::from(&c[1]), Position::At(EntityId::from(&c[2])));
        } else if let Some(c) = inside.captures(s) {
            state.set(EntityId::from(&c[1]), Position::In(EntityId::from(&c[2])));
        } else {
            return Err(RenderError::UnrecognizedSentence { section: "init", sentence: s.to_string() });
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryTime {
    At(Clock),
    Relative { hours: i32, reference: Clock },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedQuestion {
    pub package: EntityId,
    pub anchor: Option<(GroundEvent, Clock)>,
    pub perturbation: Option<(GroundEvent, PerturbationKind, u32)>,
    pub time: QueryTime,
}

/// Reads an event clause such as `loading package p1 into truck t0 at
/// location l0_1`.
pub fn parse_clause(clause: &str) -> Option<GroundEvent> {
    static TRANSFER: OnceLock<Regex> = OnceLock::new();
    static MOVE: OnceLock<Regex> = OnceLock::new();
    let transfer = re(
        &TRANSFER,
        r"(?i)^(loading|unloading) (?:package|product) (p\d+) (?:into|from|onto) (?:the )?(truck|airplane) ([ta]\d+) at (?:the )?location (l\d+_\d+)$",
    );
    let movement = re(
        &MOVE,
        r"(?i)^(driving|flying) (?:the )?(truck|airplane) ([ta]\d+) from (?:the )?location (l\d+_\d+) to (?:the )?location (l\d+_\d+)$",
    );
    let clause = clause.trim();
    if let Some(c) = transfer.captures(clause) {
        let load = c[1].eq_ignore_ascii_case("loading");
        let (p, v, l) = (&c[2], &c[4], &c[5]);
        return Some(match (load, c[3].eq_ignore_ascii_case("truck")) {
            (true, true) => GroundEvent::load_truck(p, v, l),
            (false, true) => GroundEvent::unload_truck(p, v, l),
            (true, false) => GroundEvent::load_airplane(p, v, l),
            (false, false) => GroundEvent::unload_airplane(p, v, l),
        });
    }
    let c = movement.captures(clause)?;
    Some(if c[2].eq_ignore_ascii_case("truck") {
        GroundEvent::drive_truck(&c[3], &c[4], &c[5])
    } else {
        GroundEvent::fly_airplane(&c[3], &c[4], &c[5])
    })
}

/// Parses a question sentence in any of the static, relative or
/// hypothetical forms, with or without an anchor clause.
pub fn parse_question_text(question: &str) -> Result<ParsedQuestion, RenderError> {
    static ASK: OnceLock<Regex> = OnceLock::new();
    static ANCHOR: OnceLock<Regex> = OnceLock::new();
    static PERTURB: OnceLock<Regex> = OnceLock::new();
    static WHEN: OnceLock<Regex> = OnceLock::new();
    let fail = |reason: &str| RenderError::MalformedQuestion { question: question.to_string(), reason: reason.to_string() };
    let ask = re(&ASK, r"(?i)^(?:if (.+?),?\s+)?where is (?:the )?(?:package|product) (p\d+) (.+?)\s*\?$");
    let c = ask.captures(question.trim()).ok_or_else(|| fail("expected `... where is the package pN <time>?`"))?;
    let package = EntityId::from(&c[2]);

    let when = re(&WHEN, r"(?i)^(?:at (\d{1,2}:\d{2}\s*[ap]m)|(\d+) hours? (before|after) (\d{1,2}:\d{2}\s*[ap]m))$");
    let w = when.captures(&c[3]).ok_or_else(|| fail("unrecognized time expression"))?;
    let parse_clock = |s: &str| s.parse::<Clock>().map_err(|e| fail(&e.to_string()));
    let time = if let Some(at) = w.get(1) {
        QueryTime::At(parse_clock(at.as_str())?)
    } else {
        let n: i32 = w[2].parse().map_err(|_| fail("hour offset out of range"))?;
        let hours = if w[3].eq_ignore_ascii_case("before") { -n } else { n };
        QueryTime::Relative { hours, reference: parse_clock(&w[4])? }
    };

    let mut anchor = None;
    let mut perturbation = None;
    if let Some(cond) = c.get(1) {
        let anchor_re = re(&ANCHOR, r"(?i)^(.+?) starts at (\d{1,2}:\d{2}\s*[ap]m)(?:\s+and\s+(.+))?$");
        let perturb_re = re(&PERTURB, r"(?i)^(.+?) is (delayed|expedited) by (\d+) minutes?$");
        let mut rest = Some(cond.as_str().trim().to_string());
        if let Some(a) = anchor_re.captures(cond.as_str().trim()) {
            let ev = parse_clause(&a[1]).ok_or_else(|| fail("unrecognized anchor clause"))?;
            anchor = Some((ev, parse_clock(&a[2])?));
            rest = a.get(3).map(|m| m.as_str().to_string());
        }
        if let Some(rest) = rest {
            let p = perturb_re.captures(&rest).ok_or_else(|| fail("unrecognized condition"))?;
            let ev = parse_clause(&p[1]).ok_or_else(|| fail("unrecognized perturbed event clause"))?;
            let kind = if p[2].eq_ignore_ascii_case("delayed") { PerturbationKind::Delay } else { PerturbationKind::Expedite };
            let minutes = p[3].parse().map_err(|_| fail("perturbation out of range"))?;
            perturbation = Some((ev, kind, minutes));
        }
    }
    Ok(ParsedQuestion { package, anchor, perturbation, time })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{render_event_with, render_init_text, render_objects_text};
    use crate::rng::rng_for;
    use crate::schedule::TimedEvent;

    #[test]
    fn every_template_round_trips() {
        let events = [
            GroundEvent::load_truck("p2", "t1", "l1_1"),
            GroundEvent::unload_airplane("p0", "a1", "l0_0"),
            GroundEvent::drive_truck("t1", "l1_1", "l1_0"),
            GroundEvent::fly_airplane("a1", "l1_0", "l0_0"),
        ];
        let origin: Clock = "11:40 PM".parse().unwrap();
        for tier in Tier::ALL {
            for event in &events {
                for idx in 0..4 {
                    let ev = TimedEvent { index: 1, event: event.clone(), duration: 37, start: 12 };
                    let line = render_event_with(&ev, origin, tier, idx);
                    let p = parse_event_line(&line, tier).unwrap();
                    assert_eq!(p.event, *event, "{line}");
                    assert_eq!(p.template, Some(idx), "{line}");
                    assert_eq!(p.minutes(), Some(37));
                    if tier != Tier::HardSerial && tier != Tier::HardParallel {
                        assert_eq!(p.start, Some(origin.offset(12)));
                    }
                }
            }
        }
    }

    #[test]
    fn lenient_lines() {
        let p =
            parse_event_line("starting at 10:37 PM, airplane a0 flys from location l1_0 to location l0_0 for 48 minutes.", Tier::Medium)
                .unwrap();
        assert_eq!(p.event, GroundEvent::fly_airplane("a0", "l1_0", "l0_0"));
        assert_eq!((p.template, p.duration), (None, Some(48)));
        let p =
            parse_event_line("driving truck t0 from location l0_1 to  xocation l0_0 starts at 03:10 AM and ends at 03:36 AM.", Tier::Easy)
                .unwrap();
        assert_eq!(p.event, GroundEvent::drive_truck("t0", "l0_1", "l0_0"));
        let p = parse_event_line(
            "product p3 is unloaded from truck t1 at location l1_1 and it requires 18 minutes to complete.",
            Tier::HardSerial,
        )
        .unwrap();
        assert_eq!(p.event, GroundEvent::unload_truck("p3", "t1", "l1_1"));
    }

    #[test]
    fn tier_fields_enforced() {
        let line = "loading package p2 into truck t1 at location l1_1 starts at 01:13 AM and ends at 01:42 AM.";
        assert!(parse_event_line(line, Tier::Easy).is_ok());
        assert!(matches!(parse_event_line(line, Tier::HardSerial), Err(RenderError::UnrecognizedLine { .. })));
        assert!(parse_event_line("truck t1 waits.", Tier::Easy).is_err());
    }

    #[test]
    fn split_handles_missing_space() {
        let text = format!("{EVENTS_HEADER} a for 53 minutes.package b for 2 minutes.");
        assert_eq!(split_event_lines(&text), vec!["a for 53 minutes.", "package b for 2 minutes."]);
    }

    #[test]
    fn objects_and_init_round_trip() {
        let (world, init) = crate::domain::fixtures::three_city_world();
        let scenario =
            crate::plan::Scenario { scenario_id: 0, world: world.clone(), init: init.clone(), goals: Default::default(), plan: vec![] };
        let mut rng = rng_for(&[3]);
        assert_eq!(parse_objects_text(&render_objects_text(&scenario, &mut rng)).unwrap(), world);
        assert_eq!(parse_init_text(&render_init_text(&scenario, &mut rng)).unwrap(), init);
    }

    #[test]
    fn question_variants() {
        let q = parse_question_text("If loading package p1 into truck t0 at location l0_1 starts at 09:06 AM and driving truck t0 from location l0_1 to location l0_0 is expedited by 15 minutes, where is the package p1 at 12:08 PM?").unwrap();
        assert_eq!(q.anchor, Some((GroundEvent::load_truck("p1", "t0", "l0_1"), "09:06 AM".parse().unwrap())));
        assert_eq!(q.perturbation.as_ref().map(|p| (p.1, p.2)), Some((PerturbationKind::Expedite, 15)));
        let q = parse_question_text(
            "If unloading package p0 from airplane a1 at location l0_0 starts at 11:18 AM Where is the package p4 at 05:11 PM?",
        )
        .unwrap();
        assert_eq!(q.package, EntityId::from("p4"));
        assert!(q.anchor.is_some() && q.perturbation.is_none());
        let q = parse_question_text("Where is the package p0 2 hours before 03:50 PM?").unwrap();
        assert_eq!(q.time, QueryTime::Relative { hours: -2, reference: "03:50 PM".parse().unwrap() });
        let q = parse_question_text(
            "If flying airplane a0 from location l2_0 to location l1_0 is delayed by 78 minutes, Where is the package p2 at 09:02 PM?",
        )
        .unwrap();
        assert_eq!(q.perturbation.unwrap().0, GroundEvent::fly_airplane("a0", "l2_0", "l1_0"));
        assert!(parse_question_text("Where is it?").is_err());
    }
}
