//! Plan sources: a seeded route-then-tour delivery planner and the plain-text
//! plan interchange format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    validate_plan, validate_world, EntityId, EventKind, GroundEvent, PlanValidation, Position, VehicleKind, World, WorldState,
};
use crate::rng::{derive_seed, rng_for, tag};

pub const MIN_EVENTS: usize = 25;
pub const MAX_EVENTS: usize = 33;
pub const DEFAULT_ATTEMPTS: u32 = 100;

/// A world, its initial state, delivery goals and a plan achieving them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub scenario_id: u32,
    pub world: World,
    pub init: WorldState,
    pub goals: BTreeMap<EntityId, EntityId>,
    pub plan: Vec<GroundEvent>,
}

impl Scenario {
    pub fn goals_met(&self, state: &WorldState) -> bool {
        self.goals.iter().all(|(p, l)| state.get(p) == Some(&Position::At(l.clone())))
    }
}

/// World-size ranges the planner draws from on every attempt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SizeHint {
    pub cities: RangeInclusive<usize>,
    pub locations_per_city: RangeInclusive<usize>,
    pub trucks: RangeInclusive<usize>,
    pub airplanes: RangeInclusive<usize>,
    pub packages: RangeInclusive<usize>,
}

impl Default for SizeHint {
    fn default() -> Self {
        SizeHint { cities: 3..=3, locations_per_city: 2..=3, trucks: 3..=3, airplanes: 1..=2, packages: 4..=6 }
    }
}

impl SizeHint {
    const SUPPORTED: [(&'static str, RangeInclusive<usize>); 5] =
        [("cities", 2..=3), ("locations_per_city", 2..=3), ("trucks", 1..=3), ("airplanes", 1..=2), ("packages", 4..=6)];

    fn fields(&self) -> [&RangeInclusive<usize>; 5] {
        [&self.cities, &self.locations_per_city, &self.trucks, &self.airplanes, &self.packages]
    }

    pub fn check(&self) -> Result<(), PlanError> {
        if *self.packages.end() == 0 {
            return Err(PlanError::EmptyGoal);
        }
        for ((name, supported), range) in Self::SUPPORTED.iter().zip(self.fields()) {
            if range.is_empty() || !supported.contains(range.start()) || !supported.contains(range.end()) {
                return Err(PlanError::Unsupported {
                    field: name,
                    value: format!("{}..={}", range.start(), range.end()),
                    supported: format!("{}..={}", supported.start(), supported.end()),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub size: SizeHint,
    pub max_attempts: u32,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig { size: SizeHint::default(), max_attempts: DEFAULT_ATTEMPTS }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("nothing to deliver: the size hint allows no packages")]
    EmptyGoal,
    #[error("unsupported {field} range {value} (supported {supported})")]
    Unsupported { field: &'static str, value: String, supported: String },
    #[error("no plan with {MIN_EVENTS}-{MAX_EVENTS} events after {attempts} attempts")]
    Exhausted { attempts: u32 },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Semantic { line: Option<usize>, message: String },
}

/// Generates one scenario. Deterministic in `(seed, scenario_id, config)`.
pub fn generate_scenario(seed: u64, scenario_id: u32, config: &PlannerConfig) -> Result<Scenario, PlanError> {
    config.size.check()?;
    for attempt in 0..config.max_attempts {
        let mut rng = rng_for(&[tag::SCENARIO, seed, u64::from(scenario_id), u64::from(attempt)]);
        let (world, init, goals) = draw_world(&mut rng, &config.size);
        let plan = plan_deliveries(&world, &init, &goals, &mut rng);
        if (MIN_EVENTS..=MAX_EVENTS).contains(&plan.len()) {
            return Ok(Scenario { scenario_id, world, init, goals, plan });
        }
    }
    Err(PlanError::Exhausted { attempts: config.max_attempts })
}

/// The fixed scenario set of a build: `count` scenarios keyed by the master seed.
pub fn generate_corpus(master_seed: u64, count: u32, config: &PlannerConfig) -> Result<Vec<Scenario>, PlanError> {
    let seed = derive_seed(&[tag::SCENARIO, master_seed]);
    (0..count).map(|id| generate_scenario(seed, id, config)).collect()
}

fn draw(rng: &mut ChaCha8Rng, range: &RangeInclusive<usize>) -> usize {
    rng.gen_range(range.clone())
}

fn draw_world(rng: &mut ChaCha8Rng, size: &SizeHint) -> (World, WorldState, BTreeMap<EntityId, EntityId>) {
    let n_cities = draw(rng, &size.cities);
    let n_trucks = draw(rng, &size.trucks);
    let n_planes = draw(rng, &size.airplanes);
    let n_packages = draw(rng, &size.packages);

    let mut world = World::default();
    let mut city_locations = Vec::new();
    for c in 0..n_cities {
        let city = EntityId::city(c);
        let locs: Vec<EntityId> = (0..draw(rng, &size.locations_per_city)).map(|j| EntityId::location(c, j)).collect();
        for l in &locs {
            world.locations.insert(l.clone(), city.clone());
        }
        world.airports.insert(EntityId::location(c, 0));
        world.cities.insert(city);
        city_locations.push(locs);
    }

    let mut init = WorldState::default();
    let mut has_truck = vec![false; n_cities];
    for t in 0..n_trucks {
        let c = if t < n_cities { t } else { rng.gen_range(0..n_cities) };
        has_truck[c] = true;
        let truck = EntityId::truck(t);
        let at = city_locations[c].choose(rng).expect("cities have locations").clone();
        world.trucks.insert(truck.clone());
        init.set(truck, Position::At(at));
    }
    let airports: Vec<EntityId> = world.airports.iter().cloned().collect();
    for a in 0..n_planes {
        let plane = EntityId::airplane(a);
        world.airplanes.insert(plane.clone());
        init.set(plane, Position::At(airports.choose(rng).expect("airports exist").clone()));
    }

    // Packages in truck-less cities can only sit at the airport.
    let reachable: Vec<EntityId> =
        (0..n_cities).flat_map(|c| if has_truck[c] { city_locations[c].clone() } else { vec![EntityId::location(c, 0)] }).collect();
    let mut goals = BTreeMap::new();
    for p in 0..n_packages {
        let package = EntityId::package(p);
        let origin = reachable.choose(rng).expect("reachable locations").clone();
        let dest = loop {
            let d = reachable.choose(rng).expect("reachable locations");
            if *d != origin {
                break d.clone();
            }
        };
        world.packages.insert(package.clone());
        init.set(package.clone(), Position::At(origin));
        goals.insert(package, dest);
    }
    (world, init, goals)
}

#[derive(Debug, Clone)]
struct Leg {
    vehicle: EntityId,
    from: EntityId,
    to: EntityId,
}

fn route(
    world: &World,
    origin: &EntityId,
    dest: &EntityId,
    trucks_by_city: &BTreeMap<&EntityId, Vec<&EntityId>>,
    rng: &mut ChaCha8Rng,
) -> Vec<Leg> {
    let mut legs = Vec::new();
    let truck_leg = |legs: &mut Vec<Leg>, from: &EntityId, to: &EntityId, rng: &mut ChaCha8Rng| {
        if from != to {
            let city = world.city_of(from).expect("declared location");
            let truck = trucks_by_city[city].choose(rng).expect("truck in city");
            legs.push(Leg { vehicle: (*truck).clone(), from: from.clone(), to: to.clone() });
        }
    };
    let (oc, dc) = (world.city_of(origin).unwrap(), world.city_of(dest).unwrap());
    if oc == dc {
        truck_leg(&mut legs, origin, dest, rng);
        return legs;
    }
    let (oa, da) = (world.airport_of(oc).unwrap().clone(), world.airport_of(dc).unwrap().clone());
    truck_leg(&mut legs, origin, &oa, rng);
    let planes: Vec<&EntityId> = world.airplanes.iter().collect();
    let plane = (*planes.choose(rng).expect("airplane")).clone();
    legs.push(Leg { vehicle: plane, from: oa, to: da.clone() });
    truck_leg(&mut legs, &da, dest, rng);
    legs
}

/// Routes every package, then linearizes with vehicle tours: a dispatched
/// vehicle unloads, loads, and moves on to its next pickup or drop-off until
/// it has nothing left to do.
fn plan_deliveries(world: &World, init: &WorldState, goals: &BTreeMap<EntityId, EntityId>, rng: &mut ChaCha8Rng) -> Vec<GroundEvent> {
    let mut trucks_by_city: BTreeMap<&EntityId, Vec<&EntityId>> = BTreeMap::new();
    for t in &world.trucks {
        if let Some(Position::At(l)) = init.get(t) {
            trucks_by_city.entry(world.city_of(l).unwrap()).or_default().push(t);
        }
    }
    let mut packages: Vec<&EntityId> = goals.keys().collect();
    packages.sort_by_key(|p| p.ordinal());
    let mut legs: BTreeMap<EntityId, Vec<Leg>> = BTreeMap::new();
    for p in &packages {
        let origin = init.location_of(p).expect("package starts on the ground");
        legs.insert((*p).clone(), route(world, origin, &goals[*p], &trucks_by_city, rng));
    }
    // Goal order is shuffled so the narrative does not always follow p0, p1, ...
    packages.shuffle(rng);

    let mut state = init.clone();
    let mut next_leg: BTreeMap<&EntityId, usize> = packages.iter().map(|p| (*p, 0)).collect();
    let mut plan = Vec::new();

    let waiting_leg = |p: &EntityId, next: &BTreeMap<&EntityId, usize>, state: &WorldState| -> Option<Leg> {
        let leg = legs[p].get(next[p])?;
        (state.location_of(p) == Some(&leg.from)).then(|| leg.clone())
    };

    while let Some(vehicle) = packages.iter().find_map(|p| waiting_leg(p, &next_leg, &state).map(|l| l.vehicle)) {
        let mode = if world.trucks.contains(&vehicle) { VehicleKind::Truck } else { VehicleKind::Airplane };
        loop {
            let here = state.location_of(&vehicle).expect("vehicle on the ground").clone();
            for p in &packages {
                let Some(leg) = legs[*p].get(next_leg[*p]) else { continue };
                if leg.vehicle == vehicle && leg.to == here && state.get(p) == Some(&Position::In(vehicle.clone())) {
                    let ev = transfer(false, mode, p, &vehicle, &here);
                    state = crate::domain::apply_event(&state, &ev).expect("planner unload");
                    plan.push(ev);
                    *next_leg.get_mut(*p).unwrap() += 1;
                }
            }
            for p in &packages {
                if let Some(leg) = waiting_leg(p, &next_leg, &state) {
                    if leg.vehicle == vehicle && leg.from == here {
                        let ev = transfer(true, mode, p, &vehicle, &here);
                        state = crate::domain::apply_event(&state, &ev).expect("planner load");
                        plan.push(ev);
                    }
                }
            }
            let pickup = packages.iter().find_map(|p| waiting_leg(p, &next_leg, &state).filter(|l| l.vehicle == vehicle).map(|l| l.from));
            let dropoff = || {
                packages
                    .iter()
                    .find_map(|p| (state.get(p) == Some(&Position::In(vehicle.clone()))).then(|| legs[*p][next_leg[*p]].to.clone()))
            };
            let Some(next) = pickup.or_else(dropoff) else { break };
            let ev = match mode {
                VehicleKind::Truck => GroundEvent::drive_truck(vehicle.as_str(), here.as_str(), next.as_str()),
                VehicleKind::Airplane => GroundEvent::fly_airplane(vehicle.as_str(), here.as_str(), next.as_str()),
            };
            state = crate::domain::apply_event(&state, &ev).expect("planner move");
            plan.push(ev);
        }
    }
    plan
}

fn transfer(load: bool, mode: VehicleKind, p: &EntityId, v: &EntityId, at: &EntityId) -> GroundEvent {
    let (p, v, at) = (p.as_str(), v.as_str(), at.as_str());
    match (load, mode) {
        (true, VehicleKind::Truck) => GroundEvent::load_truck(p, v, at),
        (false, VehicleKind::Truck) => GroundEvent::unload_truck(p, v, at),
        (true, VehicleKind::Airplane) => GroundEvent::load_airplane(p, v, at),
        (false, VehicleKind::Airplane) => GroundEvent::unload_airplane(p, v, at),
    }
}

fn sorted<'a>(ids: impl IntoIterator<Item = &'a EntityId>) -> Vec<&'a EntityId> {
    let mut v: Vec<_> = ids.into_iter().collect();
    v.sort_by_key(|id| (id.ordinal(), id.as_str().to_string()));
    v
}

/// Writes the interchange text. [`parse_plan_text`] inverts it.
pub fn write_plan_text(scenario: &Scenario) -> String {
    let w = &scenario.world;
    let mut out = String::new();
    let _ = writeln!(out, "scenario {}", scenario.scenario_id);
    for c in sorted(&w.cities) {
        let _ = writeln!(out, "city {c}");
    }
    for l in sorted(w.locations.keys()) {
        let _ = writeln!(out, "location {l} {}", w.locations[l]);
    }
    for a in sorted(&w.airports) {
        let _ = writeln!(out, "airport {a}");
    }
    for (word, set) in [("truck", &w.trucks), ("airplane", &w.airplanes), ("package", &w.packages)] {
        for id in sorted(set) {
            let _ = writeln!(out, "{word} {id}");
        }
    }
    for id in sorted(scenario.init.position.keys()) {
        match &scenario.init.position[id] {
            Position::At(l) => {
                let _ = writeln!(out, "at {id} {l}");
            }
            Position::In(v) => {
                let _ = writeln!(out, "in {id} {v}");
            }
        }
    }
    for p in sorted(scenario.goals.keys()) {
        let _ = writeln!(out, "goal {p} {}", scenario.goals[p]);
    }
    for ev in &scenario.plan {
        let _ = writeln!(out, "{ev}");
    }
    out
}

/// Parses the interchange text and checks that the plan is valid and reaches
/// its goals. Event-count bounds are not enforced here.
pub fn parse_plan_text(text: &str) -> Result<Scenario, PlanError> {
    let mut world = World::default();
    let mut init = WorldState::default();
    let mut goals = BTreeMap::new();
    let mut plan = Vec::new();
    let mut event_lines = Vec::new();
    let mut scenario_id = 0;
    let mut declared = BTreeSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let Some((&head, args)) = tokens.split_first() else { continue };
        if head.starts_with('#') {
            continue;
        }
        let syntax = |message: String| PlanError::Syntax { line, message };
        let expect = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(syntax(format!("`{head}` takes {n} argument(s), found {}", args.len())))
            }
        };
        if let Some(kind) = EventKind::from_action_name(head) {
            expect(3)?;
            plan.push(GroundEvent::from_args(kind, [args[0], args[1], args[2]]));
            event_lines.push(line);
            continue;
        }
        if !plan.is_empty() {
            return Err(syntax(format!("header `{head}` after the first event")));
        }
        let semantic_dup = |id: &str| PlanError::Semantic { line: Some(line), message: format!("`{id}` declared twice") };
        match head {
            "scenario" => {
                expect(1)?;
                scenario_id = args[0].parse().map_err(|_| syntax(format!("bad scenario id `{}`", args[0])))?;
            }
            "city" | "truck" | "airplane" | "package" => {
                expect(1)?;
                if !declared.insert(args[0].to_string()) {
                    return Err(semantic_dup(args[0]));
                }
                let set = match head {
                    "city" => &mut world.cities,
                    "truck" => &mut world.trucks,
                    "airplane" => &mut world.airplanes,
                    _ => &mut world.packages,
                };
                set.insert(args[0].into());
            }
            "location" => {
                expect(2)?;
                if !declared.insert(args[0].to_string()) {
                    return Err(semantic_dup(args[0]));
                }
                world.locations.insert(args[0].into(), args[1].into());
            }
            "airport" => {
                expect(1)?;
                world.airports.insert(args[0].into());
            }
            "at" => {
                expect(2)?;
                init.set(args[0].into(), Position::At(args[1].into()));
            }
            "in" => {
                expect(2)?;
                init.set(args[0].into(), Position::In(args[1].into()));
            }
            "goal" => {
                expect(2)?;
                goals.insert(EntityId::from(args[0]), EntityId::from(args[1]));
            }
            other => return Err(syntax(format!("unknown keyword `{other}`"))),
        }
    }

    let semantic = |message: String| PlanError::Semantic { line: None, message };
    if let Some(v) = validate_world(&world).into_iter().next() {
        return Err(semantic(v.to_string()));
    }
    for id in world.trucks.iter().chain(&world.airplanes).chain(&world.packages) {
        match init.get(id) {
            None => return Err(semantic(format!("no initial position for `{id}`"))),
            Some(Position::At(l)) if !world.locations.contains_key(l) => {
                return Err(semantic(format!("`{id}` starts at unknown location `{l}`")));
            }
            Some(Position::In(v)) if !world.packages.contains(id) || world.kind_of(v).is_none() => {
                return Err(semantic(format!("`{id}` cannot start inside `{v}`")));
            }
            _ => {}
        }
    }
    for (p, l) in &goals {
        if !world.packages.contains(p) || !world.locations.contains_key(l) {
            return Err(semantic(format!("goal `{p} {l}` names undeclared entities")));
        }
    }
    let final_state = match validate_plan(&world, &init, &plan) {
        PlanValidation::Valid { final_state } => final_state,
        PlanValidation::Invalid { index, error } => {
            return Err(PlanError::Semantic { line: Some(event_lines[index - 1]), message: error.to_string() });
        }
    };
    let scenario = Scenario { scenario_id, world, init, goals, plan };
    if !scenario.goals_met(&final_state) {
        return Err(semantic("plan does not deliver every goal package".into()));
    }
    Ok(scenario)
}
