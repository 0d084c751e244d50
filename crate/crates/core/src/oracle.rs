//! Where is a package at a given minute. Two implementations: a segment
//! timeline built from the package's linked events, and a brute-force
//! minute-stepping simulator.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{Clock, ClockParseError};
use crate::domain::{apply_event, DomainError, EntityId, GroundEvent, Position, World, WorldState};
use crate::schedule::{TimedEvent, TimedSchedule};

/// The acceptable answers at one minute: at most one location and at most
/// one vehicle, never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnswerSet {
    pub location: Option<EntityId>,
    pub vehicle: Option<EntityId>,
}

impl AnswerSet {
    pub fn at(location: EntityId) -> Self {
        AnswerSet { location: Some(location), vehicle: None }
    }

    pub fn moving(vehicle: EntityId) -> Self {
        AnswerSet { location: None, vehicle: Some(vehicle) }
    }

    pub fn both(location: EntityId, vehicle: EntityId) -> Self {
        AnswerSet { location: Some(location), vehicle: Some(vehicle) }
    }

    /// Answer strings, location first.
    pub fn answers(&self) -> Vec<String> {
        self.location.iter().chain(&self.vehicle).map(|id| id.as_str().to_string()).collect()
    }

    /// Rebuilds a set from answer strings using the entity naming convention.
    pub fn from_answers<S: AsRef<str>>(answers: &[S]) -> Option<Self> {
        use crate::domain::EntityKind;
        let mut set = AnswerSet { location: None, vehicle: None };
        for a in answers {
            let id = EntityId::from(a.as_ref());
            match id.kind()? {
                EntityKind::Location if set.location.is_none() => set.location = Some(id),
                EntityKind::Truck | EntityKind::Airplane if set.vehicle.is_none() => set.vehicle = Some(id),
                _ => return None,
            }
        }
        (set.location.is_some() || set.vehicle.is_some()).then_some(set)
    }
}

impl fmt::Display for AnswerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.answers().join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: u32,
    pub end: u32,
    pub answer: AnswerSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageTimeline {
    pub package: EntityId,
    /// Half-open `[start, end)` except the last, which also covers its end.
    /// The last may be a single closing minute `[end, end]`.
    pub segments: Vec<Segment>,
    pub linked_event_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("unknown package `{0}`")]
    UnknownPackage(EntityId),
    #[error("package `{0}` has no initial position")]
    NoInitialPosition(EntityId),
    #[error("minute {minute} outside the schedule span [{start}, {end}]")]
    OutOfRange { minute: u32, start: u32, end: u32 },
    #[error(transparent)]
    Clock(#[from] ClockParseError),
    #[error("clock {clock} does not fall within the schedule ({first} to {last})")]
    ClockOutsideSpan { clock: Clock, first: Clock, last: Clock },
    #[error("replaying the schedule failed: {0}")]
    Replay(#[from] DomainError),
}

fn vehicle_answer(schedule: &TimedSchedule, init: &WorldState, vehicle: &EntityId, minute: u32) -> AnswerSet {
    let moves = schedule.events.iter().filter(|e| e.event.is_movement() && e.event.vehicle() == vehicle);
    let mut parked_at = init.location_of(vehicle).cloned();
    let mut last_arrival = None;
    for e in moves {
        if e.active_at(minute) {
            return AnswerSet::moving(vehicle.clone());
        }
        if e.end() <= minute && last_arrival.is_none_or(|t| e.end() >= t) {
            last_arrival = Some(e.end());
            if let GroundEvent::Move { to, .. } = &e.event {
                parked_at = Some(to.clone());
            }
        }
    }
    AnswerSet { location: parked_at, vehicle: Some(vehicle.clone()) }
}

/// Segment rule evaluated at one minute from the package's linked events.
fn answer_from_links(
    schedule: &TimedSchedule,
    init: &WorldState,
    package: &EntityId,
    start: &Position,
    links: &[&TimedEvent],
    minute: u32,
) -> AnswerSet {
    let Some(last) = links.iter().rev().find(|e| e.start <= minute) else {
        return match start {
            Position::At(l) => AnswerSet::at(l.clone()),
            Position::In(v) => vehicle_answer(schedule, init, v, minute),
        };
    };
    let GroundEvent::Transfer { vehicle, at, .. } = &last.event else {
        unreachable!("linked events of {package} are transfers");
    };
    if last.active_at(minute) {
        AnswerSet::both(at.clone(), vehicle.clone())
    } else if last.event.is_load() {
        vehicle_answer(schedule, init, vehicle, minute)
    } else {
        AnswerSet::at(at.clone())
    }
}

/// Builds the package's answer timeline over the whole schedule span.
pub fn build_timeline(
    world: &World,
    init: &WorldState,
    schedule: &TimedSchedule,
    package: &EntityId,
) -> Result<PackageTimeline, OracleError> {
    if !world.packages.contains(package) {
        return Err(OracleError::UnknownPackage(package.clone()));
    }
    let start = init.get(package).ok_or_else(|| OracleError::NoInitialPosition(package.clone()))?;
    let links: Vec<&TimedEvent> = schedule.events.iter().filter(|e| e.event.involves(package)).collect();
    let carriers: BTreeSet<&EntityId> = links
        .iter()
        .map(|e| e.event.vehicle())
        .chain(match start {
            Position::In(v) => Some(v),
            Position::At(_) => None,
        })
        .collect();

    let (lo, hi) = (schedule.span_start(), schedule.span_end());
    let mut cuts: BTreeSet<u32> = BTreeSet::from([lo, hi]);
    for e in &schedule.events {
        if e.event.involves(package) || (e.event.is_movement() && carriers.contains(e.event.vehicle())) {
            cuts.insert(e.start);
            cuts.insert(e.end());
        }
    }
    let cuts: Vec<u32> = cuts.into_iter().filter(|t| (lo..=hi).contains(t)).collect();

    let mut segments: Vec<Segment> = Vec::new();
    for pair in cuts.windows(2) {
        let (s, e) = (pair[0], pair[1]);
        let answer = answer_from_links(schedule, init, package, start, &links, s);
        match segments.last_mut() {
            Some(prev) if prev.answer == answer => prev.end = e,
            _ => segments.push(Segment { start: s, end: e, answer }),
        }
    }
    if segments.is_empty() {
        let answer = answer_from_links(schedule, init, package, start, &links, lo);
        segments.push(Segment { start: lo, end: hi, answer });
    }
    // The closing minute belongs to the state after the last event ends.
    let closing = answer_from_links(schedule, init, package, start, &links, hi);
    if segments.last().is_some_and(|s| s.answer != closing) {
        segments.push(Segment { start: hi, end: hi, answer: closing });
    }
    Ok(PackageTimeline { package: package.clone(), segments, linked_event_indices: links.iter().map(|e| e.index).collect() })
}

/// Looks up the segment containing `minute`.
pub fn locate_at(timeline: &PackageTimeline, minute: u32) -> Result<AnswerSet, OracleError> {
    let (first, last) = (timeline.segments.first(), timeline.segments.last());
    let (Some(first), Some(last)) = (first, last) else {
        return Err(OracleError::OutOfRange { minute, start: 0, end: 0 });
    };
    if minute < first.start || minute > last.end {
        return Err(OracleError::OutOfRange { minute, start: first.start, end: last.end });
    }
    let i = timeline.segments.partition_point(|s| s.end <= minute);
    Ok(timeline.segments.get(i).unwrap_or(last).answer.clone())
}

/// Maps a rendered clock back to its unique minute within the schedule span.
pub fn resolve_clock(schedule: &TimedSchedule, clock: &str) -> Result<u32, OracleError> {
    let clock: Clock = clock.parse()?;
    resolve(schedule, clock)
}

pub fn resolve(schedule: &TimedSchedule, clock: Clock) -> Result<u32, OracleError> {
    let minute = schedule.origin.minutes_until(clock);
    let (lo, hi) = (schedule.span_start(), schedule.span_end());
    if minute < lo || minute > hi {
        return Err(OracleError::ClockOutsideSpan { clock, first: schedule.clock_at(lo), last: schedule.clock_at(hi) });
    }
    Ok(minute)
}

/// Independent oracle: steps minute by minute, applying each event's effects
/// when it ends, then inspects whatever is active at `minute`.
pub fn simulate_minutes(
    world: &World,
    init: &WorldState,
    schedule: &TimedSchedule,
    package: &EntityId,
    minute: u32,
) -> Result<AnswerSet, OracleError> {
    if !world.packages.contains(package) {
        return Err(OracleError::UnknownPackage(package.clone()));
    }
    let (lo, hi) = (schedule.span_start(), schedule.span_end());
    if minute < lo || minute > hi {
        return Err(OracleError::OutOfRange { minute, start: lo, end: hi });
    }
    let mut state = init.clone();
    for t in lo..=minute {
        for e in schedule.events.iter().filter(|e| e.end() == t) {
            state = apply_event(&state, &e.event)?;
        }
    }
    for e in &schedule.events {
        if e.active_at(minute) {
            if let GroundEvent::Transfer { package: p, vehicle, at, .. } = &e.event {
                if p == package {
                    return Ok(AnswerSet::both(at.clone(), vehicle.clone()));
                }
            }
        }
    }
    match state.get(package) {
        None => Err(OracleError::NoInitialPosition(package.clone())),
        Some(Position::At(l)) => Ok(AnswerSet::at(l.clone())),
        Some(Position::In(v)) => {
            let moving = schedule.events.iter().any(|e| e.event.is_movement() && e.event.vehicle() == v && e.active_at(minute));
            if moving {
                Ok(AnswerSet::moving(v.clone()))
            } else {
                let parked = state.location_of(v).cloned();
                Ok(AnswerSet { location: parked, vehicle: Some(v.clone()) })
            }
        }
    }
}
