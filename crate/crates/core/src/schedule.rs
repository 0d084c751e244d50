//! Durations, serial and parallel schedules, and perturbation propagation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{Clock, MINUTES_PER_DAY};
use crate::domain::{EntityId, GroundEvent};

/// Generation cap on `max end - min start`, in minutes.
pub const MAX_SPAN: u32 = 1380;
pub const DEFAULT_SCHEDULE_ATTEMPTS: u32 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Easy,
    Medium,
    HardSerial,
    HardParallel,
}

impl Tier {
    pub const ALL: [Tier; 4] = [Tier::Easy, Tier::Medium, Tier::HardSerial, Tier::HardParallel];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Easy => "easy",
            Tier::Medium => "medium",
            Tier::HardSerial => "hard_serial",
            Tier::HardParallel => "hard_parallel",
        }
    }

    pub fn mode(self) -> ScheduleMode {
        match self {
            Tier::HardParallel => ScheduleMode::Parallel,
            _ => ScheduleMode::Serial,
        }
    }

    pub fn is_hard(self) -> bool {
        matches!(self, Tier::HardSerial | Tier::HardParallel)
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tier::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown tier `{s}` (expected easy, medium, hard_serial or hard_parallel)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    Serial,
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedEvent {
    /// 1-based plan position.
    pub index: usize,
    pub event: GroundEvent,
    pub duration: u32,
    pub start: u32,
}

impl TimedEvent {
    pub fn end(&self) -> u32 {
        self.start + self.duration
    }

    /// Half-open activity window test.
    pub fn active_at(&self, minute: u32) -> bool {
        self.start <= minute && minute < self.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedSchedule {
    pub mode: ScheduleMode,
    pub events: Vec<TimedEvent>,
    /// `(u, v)`: event `v` may not start before `u` ends. Parallel only.
    pub deps: BTreeSet<(usize, usize)>,
    /// Wall clock of absolute minute 0.
    pub origin: Clock,
}

impl TimedSchedule {
    pub fn event(&self, index: usize) -> Option<&TimedEvent> {
        index.checked_sub(1).and_then(|i| self.events.get(i))
    }

    pub fn span_start(&self) -> u32 {
        self.events.iter().map(|e| e.start).min().unwrap_or(0)
    }

    pub fn span_end(&self) -> u32 {
        self.events.iter().map(TimedEvent::end).max().unwrap_or(0)
    }

    pub fn makespan(&self) -> u32 {
        self.span_end() - self.span_start()
    }

    pub fn durations(&self) -> Vec<u32> {
        self.events.iter().map(|e| e.duration).collect()
    }

    pub fn plan(&self) -> Vec<GroundEvent> {
        self.events.iter().map(|e| e.event.clone()).collect()
    }

    pub fn clock_at(&self, minute: u32) -> Clock {
        self.origin.offset(i64::from(minute))
    }

    /// Indices of events involving `package`, in plan order.
    pub fn linked_events(&self, package: &EntityId) -> Vec<usize> {
        self.events.iter().filter(|e| e.event.involves(package)).map(|e| e.index).collect()
    }

    /// All events reachable from `index` along dependency edges (parallel) or
    /// every later event (serial). Excludes `index` itself.
    pub fn descendants(&self, index: usize) -> BTreeSet<usize> {
        match self.mode {
            ScheduleMode::Serial => (index + 1..=self.events.len()).collect(),
            ScheduleMode::Parallel => {
                let children = adjacency(&self.deps);
                let mut seen = BTreeSet::new();
                let mut stack = vec![index];
                while let Some(u) = stack.pop() {
                    for &v in children.get(&u).into_iter().flatten() {
                        if seen.insert(v) {
                            stack.push(v);
                        }
                    }
                }
                seen
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    Delay,
    Expedite,
}

impl PerturbationKind {
    pub fn verb(self) -> &'static str {
        match self {
            PerturbationKind::Delay => "delayed",
            PerturbationKind::Expedite => "expedited",
        }
    }

    pub fn inverse(self) -> Self {
        match self {
            PerturbationKind::Delay => PerturbationKind::Expedite,
            PerturbationKind::Expedite => PerturbationKind::Delay,
        }
    }
}

/// Changes the target event's duration by `minutes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Perturbation {
    pub target: usize,
    pub kind: PerturbationKind,
    pub minutes: u32,
}

impl Perturbation {
    pub fn inverse(self) -> Self {
        Perturbation { kind: self.kind.inverse(), ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("{given} durations for {expected} events")]
    LengthMismatch { expected: usize, given: usize },
    #[error("schedule spans {span} minutes, above the {cap}-minute cap; shrink durations or the plan")]
    SpanOverflow { span: u32, cap: u32 },
    #[error("no schedule within the span cap after {attempts} draws")]
    SpanExhausted { attempts: u32 },
    #[error("dependency cycle through event {index}")]
    Cycle { index: usize },
    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),
    #[error("invalid timing parameters: {0}")]
    InvalidParams(String),
}

/// Ranges used when drawing durations and gaps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingParams {
    pub durations: RangeInclusive<u32>,
    pub gaps: RangeInclusive<u32>,
    pub max_span: u32,
    pub max_attempts: u32,
}

impl Default for TimingParams {
    fn default() -> Self {
        TimingParams { durations: 2..=95, gaps: 1..=8, max_span: MAX_SPAN, max_attempts: DEFAULT_SCHEDULE_ATTEMPTS }
    }
}

impl TimingParams {
    /// `longest_plan` events must be able to fit in the span cap at minimum
    /// durations and gaps.
    pub fn check(&self, longest_plan: usize) -> Result<(), ScheduleError> {
        let bad = |m: String| Err(ScheduleError::InvalidParams(m));
        if self.durations.is_empty() || *self.durations.start() < 1 {
            return bad(format!("duration range {:?} must be non-empty and start at 1 or more", self.durations));
        }
        if self.gaps.is_empty() {
            return bad(format!("gap range {:?} is empty", self.gaps));
        }
        if self.max_span == 0 || self.max_span >= MINUTES_PER_DAY {
            return bad(format!("span cap {} must lie in 1..{MINUTES_PER_DAY}", self.max_span));
        }
        let n = longest_plan as u64;
        let floor = n * u64::from(*self.durations.start()) + n.saturating_sub(1) * u64::from(*self.gaps.start());
        if floor > u64::from(self.max_span) {
            return bad(format!("{longest_plan} events need at least {floor} minutes, above the {}-minute cap", self.max_span));
        }
        Ok(())
    }
}

/// One i.i.d. uniform duration per event.
pub fn assign_durations(n: usize, range: &RangeInclusive<u32>, rng: &mut ChaCha8Rng) -> Vec<u32> {
    (0..n).map(|_| rng.gen_range(range.clone())).collect()
}

/// Idle gap before each event: zero before the first and for hard tiers.
pub fn draw_gaps(n: usize, tier: Tier, range: &RangeInclusive<u32>, rng: &mut ChaCha8Rng) -> Vec<u32> {
    (0..n).map(|i| if i == 0 || tier.is_hard() { 0 } else { rng.gen_range(range.clone()) }).collect()
}

fn timed(plan: &[GroundEvent], durations: &[u32], starts: &[u32]) -> Vec<TimedEvent> {
    plan.iter()
        .zip(durations)
        .zip(starts)
        .enumerate()
        .map(|(i, ((event, &duration), &start))| TimedEvent { index: i + 1, event: event.clone(), duration, start })
        .collect()
}

fn check_span(schedule: TimedSchedule, cap: u32) -> Result<TimedSchedule, ScheduleError> {
    let span = schedule.makespan();
    if span > cap {
        Err(ScheduleError::SpanOverflow { span, cap })
    } else {
        Ok(schedule)
    }
}

fn serial_starts(durations: &[u32], gaps: &[u32]) -> Vec<u32> {
    let mut t = 0;
    durations
        .iter()
        .zip(gaps)
        .map(|(&d, &g)| {
            let start = t + g;
            t = start + d;
            start
        })
        .collect()
}

/// Serial schedule: each event starts after the previous one ends plus its gap.
pub fn schedule_serial(
    plan: &[GroundEvent],
    durations: &[u32],
    gaps: &[u32],
    origin: Clock,
    max_span: u32,
) -> Result<TimedSchedule, ScheduleError> {
    for given in [durations.len(), gaps.len()] {
        if given != plan.len() {
            return Err(ScheduleError::LengthMismatch { expected: plan.len(), given });
        }
    }
    let starts = serial_starts(durations, gaps);
    check_span(
        TimedSchedule { mode: ScheduleMode::Serial, events: timed(plan, durations, &starts), deps: BTreeSet::new(), origin },
        max_span,
    )
}

/// Precedence edges for parallel execution, as `(before, after)` 1-based pairs.
pub fn build_dependency_graph(plan: &[GroundEvent]) -> Result<BTreeSet<(usize, usize)>, ScheduleError> {
    let mut deps = BTreeSet::new();
    let mut last_for_package: BTreeMap<&EntityId, usize> = BTreeMap::new();
    let mut last_move: BTreeMap<&EntityId, usize> = BTreeMap::new();
    let mut since_move: BTreeMap<&EntityId, Vec<usize>> = BTreeMap::new();
    // (vehicle, stop ordinal) -> (unloads, loads)
    let mut stops: BTreeMap<(&EntityId, usize), (Vec<usize>, Vec<usize>)> = BTreeMap::new();

    for (i, ev) in plan.iter().enumerate() {
        let idx = i + 1;
        let vehicle = ev.vehicle();
        if let Some(&m) = last_move.get(vehicle) {
            deps.insert((m, idx));
        }
        if let Some(package) = ev.package() {
            if let Some(prev) = last_for_package.insert(package, idx) {
                deps.insert((prev, idx));
            }
            since_move.entry(vehicle).or_default().push(idx);
            let stop = stops.entry((vehicle, last_move.get(vehicle).copied().unwrap_or(0))).or_default();
            if ev.is_unload() {
                stop.0.push(idx);
            } else {
                stop.1.push(idx);
            }
        } else {
            for t in since_move.remove(vehicle).unwrap_or_default() {
                deps.insert((t, idx));
            }
            last_move.insert(vehicle, idx);
        }
    }
    for (unloads, loads) in stops.values() {
        for &u in unloads {
            for &l in loads {
                deps.insert((u, l));
            }
        }
    }
    topological_order(plan.len(), &deps)?;
    Ok(deps)
}

fn adjacency(deps: &BTreeSet<(usize, usize)>) -> BTreeMap<usize, Vec<usize>> {
    let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(u, v) in deps {
        children.entry(u).or_default().push(v);
    }
    children
}

/// Kahn's algorithm, smallest index first among ready events.
fn topological_order(n: usize, deps: &BTreeSet<(usize, usize)>) -> Result<Vec<usize>, ScheduleError> {
    let children = adjacency(deps);
    let mut indegree = vec![0usize; n + 1];
    for &(_, v) in deps {
        indegree[v] += 1;
    }
    let mut ready: VecDeque<usize> = (1..=n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = ready.pop_front() {
        order.push(u);
        for &v in children.get(&u).into_iter().flatten() {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                ready.push_back(v);
            }
        }
    }
    if order.len() < n {
        let index = (1..=n).find(|&i| indegree[i] > 0).unwrap_or(0);
        return Err(ScheduleError::Cycle { index });
    }
    Ok(order)
}

fn earliest_starts(n: usize, durations: &[u32], deps: &BTreeSet<(usize, usize)>) -> Result<Vec<u32>, ScheduleError> {
    let mut parents: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(u, v) in deps {
        parents.entry(v).or_default().push(u);
    }
    let mut start = vec![0u32; n + 1];
    for v in topological_order(n, deps)? {
        start[v] = parents.get(&v).into_iter().flatten().map(|&u| start[u] + durations[u - 1]).max().unwrap_or(0);
    }
    Ok(start[1..].to_vec())
}

/// Earliest-start parallel schedule; roots start at minute 0.
pub fn schedule_parallel(plan: &[GroundEvent], durations: &[u32], origin: Clock, max_span: u32) -> Result<TimedSchedule, ScheduleError> {
    if durations.len() != plan.len() {
        return Err(ScheduleError::LengthMismatch { expected: plan.len(), given: durations.len() });
    }
    let deps = build_dependency_graph(plan)?;
    let starts = earliest_starts(plan.len(), durations, &deps)?;
    check_span(TimedSchedule { mode: ScheduleMode::Parallel, events: timed(plan, durations, &starts), deps, origin }, max_span)
}

/// Draws durations, gaps and an origin clock until the schedule fits the span cap.
pub fn draw_schedule(
    plan: &[GroundEvent],
    tier: Tier,
    params: &TimingParams,
    rng: &mut ChaCha8Rng,
) -> Result<TimedSchedule, ScheduleError> {
    for _ in 0..params.max_attempts {
        let durations = assign_durations(plan.len(), &params.durations, rng);
        let gaps = draw_gaps(plan.len(), tier, &params.gaps, rng);
        let origin = Clock::from_minutes(rng.gen_range(0..MINUTES_PER_DAY));
        let result = match tier.mode() {
            ScheduleMode::Serial => schedule_serial(plan, &durations, &gaps, origin, params.max_span),
            ScheduleMode::Parallel => schedule_parallel(plan, &durations, origin, params.max_span),
        };
        match result {
            Err(ScheduleError::SpanOverflow { .. }) => continue,
            other => return other,
        }
    }
    Err(ScheduleError::SpanExhausted { attempts: params.max_attempts })
}

/// Applies a delay or expedite to the target's duration and propagates it.
/// The result only needs to stay below one day, not under the generation cap.
pub fn apply_perturbation(schedule: &TimedSchedule, p: Perturbation) -> Result<TimedSchedule, ScheduleError> {
    let target = schedule.event(p.target).ok_or_else(|| ScheduleError::InvalidPerturbation(format!("no event {}", p.target)))?;
    let new_duration = match p.kind {
        PerturbationKind::Delay => target.duration + p.minutes,
        PerturbationKind::Expedite if p.minutes < target.duration => target.duration - p.minutes,
        PerturbationKind::Expedite => {
            return Err(ScheduleError::InvalidPerturbation(format!(
                "expediting event {} by {} minutes leaves no duration (it lasts {})",
                p.target, p.minutes, target.duration
            )));
        }
    };
    let mut durations = schedule.durations();
    durations[p.target - 1] = new_duration;
    let plan = schedule.plan();
    let n = plan.len();
    let starts = match schedule.mode {
        ScheduleMode::Serial => {
            let delta = i64::from(new_duration) - i64::from(target.duration);
            schedule
                .events
                .iter()
                .map(|e| {
                    if e.index > p.target {
                        u32::try_from(i64::from(e.start) + delta)
                            .map_err(|_| ScheduleError::InvalidPerturbation(format!("event {} would start before minute 0", e.index)))
                    } else {
                        Ok(e.start)
                    }
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        ScheduleMode::Parallel => earliest_starts(n, &durations, &schedule.deps)?,
    };
    check_span(
        TimedSchedule {
            mode: schedule.mode,
            events: timed(&plan, &durations, &starts),
            deps: schedule.deps.clone(),
            origin: schedule.origin,
        },
        MINUTES_PER_DAY - 1,
    )
}

/// Builds a schedule from already-known start minutes and durations, as
/// recovered from record text. Parallel schedules get their dependency edges
/// rebuilt from the plan.
pub fn from_times(
    mode: ScheduleMode,
    plan: &[GroundEvent],
    starts: &[u32],
    durations: &[u32],
    origin: Clock,
) -> Result<TimedSchedule, ScheduleError> {
    for given in [starts.len(), durations.len()] {
        if given != plan.len() {
            return Err(ScheduleError::LengthMismatch { expected: plan.len(), given });
        }
    }
    let deps = match mode {
        ScheduleMode::Serial => BTreeSet::new(),
        ScheduleMode::Parallel => build_dependency_graph(plan)?,
    };
    check_span(TimedSchedule { mode, events: timed(plan, durations, starts), deps, origin }, MINUTES_PER_DAY - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::three_city_plan;
    use crate::rng::rng_for;
    use proptest::prelude::*;

    fn origin() -> Clock {
        "01:13 AM".parse().unwrap()
    }

    fn parallel_batch() -> Vec<GroundEvent> {
        vec![
            GroundEvent::fly_airplane("a0", "l2_0", "l1_0"),
            GroundEvent::load_airplane("p5", "a0", "l1_0"),
            GroundEvent::load_airplane("p2", "a0", "l1_0"),
            GroundEvent::load_airplane("p0", "a0", "l1_0"),
            GroundEvent::fly_airplane("a0", "l1_0", "l0_0"),
        ]
    }

    #[test]
    fn durations_stay_in_range() {
        let mut rng = rng_for(&[9]);
        let d = assign_durations(10_000, &(2..=95), &mut rng);
        assert!(d.iter().all(|x| (2..=95).contains(x)));
        assert_eq!(*d.iter().min().unwrap(), 2);
        assert_eq!(*d.iter().max().unwrap(), 95);
        assert_eq!(d[..50], assign_durations(50, &(2..=95), &mut rng_for(&[9]))[..]);
        assert!(assign_durations(0, &(2..=95), &mut rng).is_empty());
    }

    #[test]
    fn serial_with_gaps() {
        let plan = &three_city_plan()[..2];
        let s = schedule_serial(plan, &[29, 73], &[0, 2], origin(), MAX_SPAN).unwrap();
        assert_eq!(s.clock_at(s.events[0].end()).to_string(), "01:42 AM");
        assert_eq!(s.clock_at(s.events[1].start).to_string(), "01:44 AM");
        let hard = schedule_serial(plan, &[29, 73], &[0, 0], origin(), MAX_SPAN).unwrap();
        assert_eq!(hard.events[1].start, hard.events[0].end());
        let single = schedule_serial(&plan[..1], &[17], &[0], origin(), MAX_SPAN).unwrap();
        assert_eq!((single.events[0].start, single.events[0].end()), (0, 17));
    }

    #[test]
    fn span_overflow_is_an_error() {
        let plan = &three_city_plan()[..2];
        assert_eq!(
            schedule_serial(plan, &[900, 600], &[0, 0], origin(), MAX_SPAN),
            Err(ScheduleError::SpanOverflow { span: 1500, cap: MAX_SPAN })
        );
    }

    #[test]
    fn batch_loads_are_unordered_and_flight_waits_for_all() {
        let plan = parallel_batch();
        let deps = build_dependency_graph(&plan).unwrap();
        for (a, b) in [(2, 3), (2, 4), (3, 4)] {
            assert!(!deps.contains(&(a, b)) && !deps.contains(&(b, a)));
        }
        for l in 2..=4 {
            assert!(deps.contains(&(1, l)));
            assert!(deps.contains(&(l, 5)));
        }
        let s = schedule_parallel(&plan, &[39, 63, 2, 62, 18], origin(), MAX_SPAN).unwrap();
        assert_eq!(s.events[4].start - s.events[1].start, 63);
    }

    #[test]
    fn two_event_chain_has_one_edge() {
        let plan = &three_city_plan()[..2];
        assert_eq!(build_dependency_graph(plan).unwrap(), BTreeSet::from([(1, 2)]));
    }

    #[test]
    fn stop_barrier_orders_unloads_before_loads() {
        let plan = vec![
            GroundEvent::fly_airplane("a0", "l0_0", "l2_0"),
            GroundEvent::unload_airplane("p2", "a0", "l2_0"),
            GroundEvent::unload_airplane("p0", "a0", "l2_0"),
            GroundEvent::load_airplane("p3", "a0", "l2_0"),
        ];
        let deps = build_dependency_graph(&plan).unwrap();
        assert!(deps.contains(&(2, 4)) && deps.contains(&(3, 4)));
        assert!(!deps.contains(&(2, 3)));
    }

    #[test]
    fn chain_only_parallel_matches_zero_gap_serial() {
        let plan = vec![
            GroundEvent::load_truck("p2", "t1", "l1_1"),
            GroundEvent::drive_truck("t1", "l1_1", "l1_0"),
            GroundEvent::unload_truck("p2", "t1", "l1_0"),
        ];
        let d = [14, 51, 14];
        let p = schedule_parallel(&plan, &d, origin(), MAX_SPAN).unwrap();
        let s = schedule_serial(&plan, &d, &[0, 0, 0], origin(), MAX_SPAN).unwrap();
        assert_eq!(p.events, s.events);
    }

    #[test]
    fn serial_delay_shifts_later_events() {
        let plan = three_city_plan();
        let mut rng = rng_for(&[1]);
        let s = draw_schedule(&plan, Tier::Easy, &TimingParams::default(), &mut rng).unwrap();
        let k = 5;
        let delayed = apply_perturbation(&s, Perturbation { target: k, kind: PerturbationKind::Delay, minutes: 66 }).unwrap();
        for (a, b) in s.events.iter().zip(&delayed.events) {
            match a.index.cmp(&k) {
                std::cmp::Ordering::Less => assert_eq!(a, b),
                std::cmp::Ordering::Equal => assert_eq!((b.start, b.duration), (a.start, a.duration + 66)),
                std::cmp::Ordering::Greater => assert_eq!(b.start, a.start + 66),
            }
        }
    }

    #[test]
    fn delay_by_zero_is_identity() {
        let plan = three_city_plan();
        let s = schedule_parallel(&plan, &vec![10; plan.len()], origin(), MAX_SPAN).unwrap();
        let same = apply_perturbation(&s, Perturbation { target: 3, kind: PerturbationKind::Delay, minutes: 0 }).unwrap();
        assert_eq!(same, s);
    }

    #[test]
    fn non_maximal_batch_delay_does_not_move_departure() {
        let plan = parallel_batch();
        let s = schedule_parallel(&plan, &[39, 63, 2, 62, 18], origin(), MAX_SPAN).unwrap();
        let p = Perturbation { target: 3, kind: PerturbationKind::Delay, minutes: 50 };
        let d = apply_perturbation(&s, p).unwrap();
        assert_eq!(d.events[4].start, s.events[4].start);
        let p = Perturbation { target: 3, kind: PerturbationKind::Delay, minutes: 70 };
        let d = apply_perturbation(&s, p).unwrap();
        assert_eq!(d.events[4].start, s.events[2].start + 72);
    }

    #[test]
    fn over_expedite_is_rejected() {
        let plan = parallel_batch();
        let s = schedule_parallel(&plan, &[39, 63, 2, 62, 18], origin(), MAX_SPAN).unwrap();
        let p = Perturbation { target: 3, kind: PerturbationKind::Expedite, minutes: 2 };
        assert!(matches!(apply_perturbation(&s, p), Err(ScheduleError::InvalidPerturbation(_))));
        let p = Perturbation { target: 9, kind: PerturbationKind::Delay, minutes: 2 };
        assert!(matches!(apply_perturbation(&s, p), Err(ScheduleError::InvalidPerturbation(_))));
    }

    #[test]
    fn params_must_fit_the_cap() {
        assert!(TimingParams::default().check(33).is_ok());
        let p = TimingParams { durations: 50..=95, ..TimingParams::default() };
        assert!(p.check(33).is_err());
        let p = TimingParams { durations: 0..=5, ..TimingParams::default() };
        assert!(p.check(33).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn parallel_never_slower_than_serial(durs in prop::collection::vec(2u32..=95, 21)) {
            let plan = three_city_plan();
            let p = schedule_parallel(&plan, &durs, origin(), 10_000).unwrap();
            let s = schedule_serial(&plan, &durs, &[0; 21], origin(), 10_000).unwrap();
            prop_assert!(p.makespan() <= s.makespan());
            for &(u, v) in &p.deps {
                prop_assert!(p.events[v - 1].start >= p.events[u - 1].end());
            }
        }

        #[test]
        fn delay_then_expedite_restores(
            durs in prop::collection::vec(2u32..=40, 21),
            target in 1usize..=21,
            minutes in 1u32..=90,
            parallel in any::<bool>(),
        ) {
            let plan = three_city_plan();
            let s = if parallel {
                schedule_parallel(&plan, &durs, origin(), MAX_SPAN).unwrap()
            } else {
                schedule_serial(&plan, &durs, &[1; 21], origin(), MAX_SPAN).unwrap()
            };
            let p = Perturbation { target, kind: PerturbationKind::Delay, minutes };
            let back = apply_perturbation(&apply_perturbation(&s, p).unwrap(), p.inverse()).unwrap();
            prop_assert_eq!(back, s.clone());
            let moved: BTreeSet<usize> = apply_perturbation(&s, p).unwrap().events.iter()
                .zip(&s.events)
                .filter(|(a, b)| a.start != b.start)
                .map(|(a, _)| a.index)
                .collect();
            prop_assert!(moved.is_subset(&s.descendants(target)));
        }
    }
}
