//! The logistics world: entities, the six ground events, their
//! preconditions and effects, and plan validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    City,
    Location,
    Truck,
    Airplane,
    Package,
}

impl EntityKind {
    pub fn noun(self) -> &'static str {
        match self {
            EntityKind::City => "city",
            EntityKind::Location => "location",
            EntityKind::Truck => "truck",
            EntityKind::Airplane => "airplane",
            EntityKind::Package => "package",
        }
    }
}

/// Symbolic entity name: `cK`, `lK_J`, `tK`, `aK` or `pK`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

fn all_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

impl EntityId {
    pub fn new(name: impl Into<String>) -> Self {
        EntityId(name.into())
    }

    pub fn city(k: usize) -> Self {
        EntityId(format!("c{k}"))
    }

    pub fn location(city: usize, j: usize) -> Self {
        EntityId(format!("l{city}_{j}"))
    }

    pub fn truck(k: usize) -> Self {
        EntityId(format!("t{k}"))
    }

    pub fn airplane(k: usize) -> Self {
        EntityId(format!("a{k}"))
    }

    pub fn package(k: usize) -> Self {
        EntityId(format!("p{k}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Kind implied by the naming convention, if the name follows it.
    pub fn kind(&self) -> Option<EntityKind> {
        let (head, rest) = self.0.split_at_checked(1)?;
        match head {
            "c" if all_digits(rest) => Some(EntityKind::City),
            "t" if all_digits(rest) => Some(EntityKind::Truck),
            "a" if all_digits(rest) => Some(EntityKind::Airplane),
            "p" if all_digits(rest) => Some(EntityKind::Package),
            "l" => {
                let (k, j) = rest.split_once('_')?;
                (all_digits(k) && all_digits(j)).then_some(EntityKind::Location)
            }
            _ => None,
        }
    }

    /// The city a location name encodes (`l2_1` belongs to `c2`).
    pub fn encoded_city(&self) -> Option<EntityId> {
        if self.kind()? != EntityKind::Location {
            return None;
        }
        let (k, _) = self.0[1..].split_once('_')?;
        Some(EntityId(format!("c{k}")))
    }

    /// Numeric suffix used for natural ordering (`p10` after `p9`).
    pub fn ordinal(&self) -> (u32, u32) {
        let digits = self.0.get(1..).unwrap_or("");
        match digits.split_once('_') {
            Some((a, b)) => (a.parse().unwrap_or(0), b.parse().unwrap_or(0)),
            None => (digits.parse().unwrap_or(0), 0),
        }
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_string())
    }
}

/// The static universe of a scenario.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct World {
    pub cities: BTreeSet<EntityId>,
    /// location → city
    pub locations: BTreeMap<EntityId, EntityId>,
    pub airports: BTreeSet<EntityId>,
    pub trucks: BTreeSet<EntityId>,
    pub airplanes: BTreeSet<EntityId>,
    pub packages: BTreeSet<EntityId>,
}

impl World {
    pub fn city_of(&self, location: &EntityId) -> Option<&EntityId> {
        self.locations.get(location)
    }

    pub fn is_airport(&self, location: &EntityId) -> bool {
        self.airports.contains(location)
    }

    pub fn kind_of(&self, id: &EntityId) -> Option<EntityKind> {
        if self.cities.contains(id) {
            Some(EntityKind::City)
        } else if self.locations.contains_key(id) {
            Some(EntityKind::Location)
        } else if self.trucks.contains(id) {
            Some(EntityKind::Truck)
        } else if self.airplanes.contains(id) {
            Some(EntityKind::Airplane)
        } else if self.packages.contains(id) {
            Some(EntityKind::Package)
        } else {
            None
        }
    }

    pub fn locations_in<'a>(&'a self, city: &'a EntityId) -> impl Iterator<Item = &'a EntityId> + 'a {
        self.locations.iter().filter(move |(_, c)| *c == city).map(|(l, _)| l)
    }

    pub fn airport_of(&self, city: &EntityId) -> Option<&EntityId> {
        self.airports.iter().find(|a| self.city_of(a) == Some(city))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldViolation {
    #[error("entity `{entity}` does not follow the {} naming convention", expected.noun())]
    BadName { entity: EntityId, expected: EntityKind },
    #[error("entity name `{entity}` is declared more than once")]
    DuplicateName { entity: EntityId },
    #[error("location `{location}` refers to undeclared city `{city}`")]
    UndeclaredCity { location: EntityId, city: EntityId },
    #[error("location/city name mismatch: `{location}` assigned to `{city}`")]
    CityMismatch { location: EntityId, city: EntityId },
    #[error("airport `{airport}` is not a declared location")]
    UndeclaredAirport { airport: EntityId },
    #[error("city `{city}` has no locations")]
    EmptyCity { city: EntityId },
    #[error("city `{city}` has no airport but the world has airplanes")]
    MissingAirport { city: EntityId },
}

/// Checks the structural invariants of a world. Empty result means valid.
pub fn validate_world(world: &World) -> Vec<WorldViolation> {
    let mut out = Vec::new();
    let groups: [(&mut dyn Iterator<Item = &EntityId>, EntityKind); 5] = [
        (&mut world.cities.iter(), EntityKind::City),
        (&mut world.locations.keys(), EntityKind::Location),
        (&mut world.trucks.iter(), EntityKind::Truck),
        (&mut world.airplanes.iter(), EntityKind::Airplane),
        (&mut world.packages.iter(), EntityKind::Package),
    ];
    let mut seen = BTreeSet::new();
    for (ids, expected) in groups {
        for id in ids {
            if id.kind() != Some(expected) {
                out.push(WorldViolation::BadName { entity: id.clone(), expected });
            }
            if !seen.insert(id.clone()) {
                out.push(WorldViolation::DuplicateName { entity: id.clone() });
            }
        }
    }
    for (location, city) in &world.locations {
        if !world.cities.contains(city) {
            out.push(WorldViolation::UndeclaredCity { location: location.clone(), city: city.clone() });
        }
        if let Some(encoded) = location.encoded_city() {
            if &encoded != city {
                out.push(WorldViolation::CityMismatch { location: location.clone(), city: city.clone() });
            }
        }
    }
    for airport in &world.airports {
        if !world.locations.contains_key(airport) {
            out.push(WorldViolation::UndeclaredAirport { airport: airport.clone() });
        }
    }
    for city in &world.cities {
        if world.locations_in(city).next().is_none() {
            out.push(WorldViolation::EmptyCity { city: city.clone() });
        } else if !world.airplanes.is_empty() && world.airport_of(city).is_none() {
            out.push(WorldViolation::MissingAirport { city: city.clone() });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleKind {
    Truck,
    Airplane,
}

impl VehicleKind {
    pub fn noun(self) -> &'static str {
        match self {
            VehicleKind::Truck => "truck",
            VehicleKind::Airplane => "airplane",
        }
    }

    pub fn entity_kind(self) -> EntityKind {
        match self {
            VehicleKind::Truck => EntityKind::Truck,
            VehicleKind::Airplane => EntityKind::Airplane,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transfer {
    Load,
    Unload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    LoadTruck,
    UnloadTruck,
    DriveTruck,
    LoadAirplane,
    UnloadAirplane,
    FlyAirplane,
}

impl EventKind {
    pub const ALL: [EventKind; 6] = [
        EventKind::LoadTruck,
        EventKind::UnloadTruck,
        EventKind::DriveTruck,
        EventKind::LoadAirplane,
        EventKind::UnloadAirplane,
        EventKind::FlyAirplane,
    ];

    /// Name used by the plan interchange format.
    pub fn action_name(self) -> &'static str {
        match self {
            EventKind::LoadTruck => "load-truck",
            EventKind::UnloadTruck => "unload-truck",
            EventKind::DriveTruck => "drive-truck",
            EventKind::LoadAirplane => "load-airplane",
            EventKind::UnloadAirplane => "unload-airplane",
            EventKind::FlyAirplane => "fly-airplane",
        }
    }

    pub fn from_action_name(name: &str) -> Option<Self> {
        EventKind::ALL.into_iter().find(|k| k.action_name() == name)
    }

    pub fn vehicle_kind(self) -> VehicleKind {
        match self {
            EventKind::LoadTruck | EventKind::UnloadTruck | EventKind::DriveTruck => VehicleKind::Truck,
            _ => VehicleKind::Airplane,
        }
    }

    pub fn transfer(self) -> Option<Transfer> {
        match self {
            EventKind::LoadTruck | EventKind::LoadAirplane => Some(Transfer::Load),
            EventKind::UnloadTruck | EventKind::UnloadAirplane => Some(Transfer::Unload),
            EventKind::DriveTruck | EventKind::FlyAirplane => None,
        }
    }

    pub fn is_movement(self) -> bool {
        self.transfer().is_none()
    }
}

/// One ground action of a plan.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GroundEvent {
    Transfer { op: Transfer, mode: VehicleKind, package: EntityId, vehicle: EntityId, at: EntityId },
    Move { mode: VehicleKind, vehicle: EntityId, from: EntityId, to: EntityId },
}

impl GroundEvent {
    fn transfer(op: Transfer, mode: VehicleKind, package: &str, vehicle: &str, at: &str) -> Self {
        GroundEvent::Transfer { op, mode, package: package.into(), vehicle: vehicle.into(), at: at.into() }
    }

    pub fn load_truck(package: &str, truck: &str, at: &str) -> Self {
        Self::transfer(Transfer::Load, VehicleKind::Truck, package, truck, at)
    }

    pub fn unload_truck(package: &str, truck: &str, at: &str) -> Self {
        Self::transfer(Transfer::Unload, VehicleKind::Truck, package, truck, at)
    }

    pub fn load_airplane(package: &str, airplane: &str, at: &str) -> Self {
        Self::transfer(Transfer::Load, VehicleKind::Airplane, package, airplane, at)
    }

    pub fn unload_airplane(package: &str, airplane: &str, at: &str) -> Self {
        Self::transfer(Transfer::Unload, VehicleKind::Airplane, package, airplane, at)
    }

    pub fn drive_truck(truck: &str, from: &str, to: &str) -> Self {
        GroundEvent::Move { mode: VehicleKind::Truck, vehicle: truck.into(), from: from.into(), to: to.into() }
    }

    pub fn fly_airplane(airplane: &str, from: &str, to: &str) -> Self {
        GroundEvent::Move { mode: VehicleKind::Airplane, vehicle: airplane.into(), from: from.into(), to: to.into() }
    }

    pub fn kind(&self) -> EventKind {
        match self {
            GroundEvent::Transfer { op: Transfer::Load, mode: VehicleKind::Truck, .. } => EventKind::LoadTruck,
            GroundEvent::Transfer { op: Transfer::Unload, mode: VehicleKind::Truck, .. } => EventKind::UnloadTruck,
            GroundEvent::Transfer { op: Transfer::Load, mode: VehicleKind::Airplane, .. } => EventKind::LoadAirplane,
            GroundEvent::Transfer { op: Transfer::Unload, mode: VehicleKind::Airplane, .. } => EventKind::UnloadAirplane,
            GroundEvent::Move { mode: VehicleKind::Truck, .. } => EventKind::DriveTruck,
            GroundEvent::Move { mode: VehicleKind::Airplane, .. } => EventKind::FlyAirplane,
        }
    }

    pub fn vehicle(&self) -> &EntityId {
        match self {
            GroundEvent::Transfer { vehicle, .. } | GroundEvent::Move { vehicle, .. } => vehicle,
        }
    }

    pub fn package(&self) -> Option<&EntityId> {
        match self {
            GroundEvent::Transfer { package, .. } => Some(package),
            GroundEvent::Move { .. } => None,
        }
    }

    pub fn is_movement(&self) -> bool {
        matches!(self, GroundEvent::Move { .. })
    }

    pub fn is_load(&self) -> bool {
        matches!(self, GroundEvent::Transfer { op: Transfer::Load, .. })
    }

    pub fn is_unload(&self) -> bool {
        matches!(self, GroundEvent::Transfer { op: Transfer::Unload, .. })
    }

    /// Whether the event involves `package` directly (loads and unloads only).
    pub fn involves(&self, package: &EntityId) -> bool {
        self.package() == Some(package)
    }

    /// Positional arguments in interchange order.
    pub fn args(&self) -> Vec<&EntityId> {
        match self {
            GroundEvent::Transfer { package, vehicle, at, .. } => vec![package, vehicle, at],
            GroundEvent::Move { vehicle, from, to, .. } => vec![vehicle, from, to],
        }
    }

    pub fn from_args(kind: EventKind, args: [&str; 3]) -> Self {
        let [a, b, c] = args;
        match kind {
            EventKind::LoadTruck => Self::load_truck(a, b, c),
            EventKind::UnloadTruck => Self::unload_truck(a, b, c),
            EventKind::LoadAirplane => Self::load_airplane(a, b, c),
            EventKind::UnloadAirplane => Self::unload_airplane(a, b, c),
            EventKind::DriveTruck => Self::drive_truck(a, b, c),
            EventKind::FlyAirplane => Self::fly_airplane(a, b, c),
        }
    }
}

impl fmt::Display for GroundEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind().action_name())?;
        for arg in self.args() {
            write!(f, " {arg}")?;
        }
        Ok(())
    }
}

/// Where a movable entity is.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    At(EntityId),
    In(EntityId),
}

/// Position of every truck, airplane and package.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    pub position: BTreeMap<EntityId, Position>,
}

impl WorldState {
    pub fn get(&self, id: &EntityId) -> Option<&Position> {
        self.position.get(id)
    }

    pub fn set(&mut self, id: EntityId, position: Position) {
        self.position.insert(id, position);
    }

    /// Location of a vehicle, or of a package lying on the ground.
    pub fn location_of(&self, id: &EntityId) -> Option<&EntityId> {
        match self.position.get(id)? {
            Position::At(l) => Some(l),
            Position::In(_) => None,
        }
    }
}

/// Precondition that did not hold when an event was applied.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Precondition {
    #[error("package `{package}` is not at `{at}`")]
    PackageNotAt { package: EntityId, at: EntityId },
    #[error("package `{package}` is not inside `{vehicle}`")]
    PackageNotIn { package: EntityId, vehicle: EntityId },
    #[error("vehicle `{vehicle}` is not at `{at}`")]
    VehicleNotAt { vehicle: EntityId, at: EntityId },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("malformed event `{event}`: {reason}")]
    Malformed { event: String, reason: String },
    #[error("event `{event}` not applicable: {failed}")]
    Precondition { event: String, failed: Precondition },
}

fn malformed(event: &GroundEvent, reason: impl Into<String>) -> DomainError {
    DomainError::Malformed { event: event.to_string(), reason: reason.into() }
}

/// Structural checks that do not depend on the state.
pub fn check_well_formed(event: &GroundEvent, world: &World) -> Result<(), DomainError> {
    let expect = |id: &EntityId, kind: EntityKind| -> Result<(), DomainError> {
        match world.kind_of(id) {
            Some(k) if k == kind => Ok(()),
            Some(k) => Err(malformed(event, format!("`{id}` is a {}, expected a {}", k.noun(), kind.noun()))),
            None => Err(malformed(event, format!("unknown {} `{id}`", kind.noun()))),
        }
    };
    match event {
        GroundEvent::Transfer { mode, package, vehicle, at, .. } => {
            expect(package, EntityKind::Package)?;
            expect(vehicle, mode.entity_kind())?;
            expect(at, EntityKind::Location)?;
            if *mode == VehicleKind::Airplane && !world.is_airport(at) {
                return Err(malformed(event, format!("`{at}` is not an airport")));
            }
        }
        GroundEvent::Move { mode, vehicle, from, to } => {
            expect(vehicle, mode.entity_kind())?;
            expect(from, EntityKind::Location)?;
            expect(to, EntityKind::Location)?;
            if from == to {
                return Err(malformed(event, "source and destination coincide"));
            }
            let same_city = world.city_of(from) == world.city_of(to);
            match mode {
                VehicleKind::Truck if !same_city => {
                    return Err(malformed(event, "drive crosses cities"));
                }
                VehicleKind::Airplane if same_city => {
                    return Err(malformed(event, "flight within one city"));
                }
                VehicleKind::Airplane if !(world.is_airport(from) && world.is_airport(to)) => {
                    return Err(malformed(event, "flight endpoints must be airports"));
                }
                _ => {}
            }
        }
    }
    Ok(())
}

fn failed_precondition(state: &WorldState, event: &GroundEvent) -> Option<Precondition> {
    let vehicle_at = |v: &EntityId, at: &EntityId| state.get(v) == Some(&Position::At(at.clone()));
    match event {
        GroundEvent::Transfer { op, package, vehicle, at, .. } => {
            if !vehicle_at(vehicle, at) {
                return Some(Precondition::VehicleNotAt { vehicle: vehicle.clone(), at: at.clone() });
            }
            match op {
                Transfer::Load if state.get(package) != Some(&Position::At(at.clone())) => {
                    Some(Precondition::PackageNotAt { package: package.clone(), at: at.clone() })
                }
                Transfer::Unload if state.get(package) != Some(&Position::In(vehicle.clone())) => {
                    Some(Precondition::PackageNotIn { package: package.clone(), vehicle: vehicle.clone() })
                }
                _ => None,
            }
        }
        GroundEvent::Move { vehicle, from, .. } => {
            (!vehicle_at(vehicle, from)).then(|| Precondition::VehicleNotAt { vehicle: vehicle.clone(), at: from.clone() })
        }
    }
}

/// True iff the event's preconditions hold in `state`. Structural problems
/// are errors, not `false`.
pub fn event_applicable(state: &WorldState, event: &GroundEvent, world: &World) -> Result<bool, DomainError> {
    check_well_formed(event, world)?;
    Ok(failed_precondition(state, event).is_none())
}

/// Applies the event's effects. Packages inside a moving vehicle move with it
/// implicitly because they point at the vehicle, not a location.
pub fn apply_event(state: &WorldState, event: &GroundEvent) -> Result<WorldState, DomainError> {
    if let Some(failed) = failed_precondition(state, event) {
        return Err(DomainError::Precondition { event: event.to_string(), failed });
    }
    let mut next = state.clone();
    match event {
        GroundEvent::Transfer { op: Transfer::Load, package, vehicle, .. } => {
            next.set(package.clone(), Position::In(vehicle.clone()));
        }
        GroundEvent::Transfer { op: Transfer::Unload, package, at, .. } => {
            next.set(package.clone(), Position::At(at.clone()));
        }
        GroundEvent::Move { vehicle, to, .. } => {
            next.set(vehicle.clone(), Position::At(to.clone()));
        }
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanValidation {
    Valid {
        final_state: WorldState,
    },
    /// `index` is 1-based.
    Invalid {
        index: usize,
        error: DomainError,
    },
}

impl PlanValidation {
    pub fn is_valid(&self) -> bool {
        matches!(self, PlanValidation::Valid { .. })
    }
}

/// Folds `apply_event` over the plan and reports the first failure.
pub fn validate_plan(world: &World, init: &WorldState, events: &[GroundEvent]) -> PlanValidation {
    let mut state = init.clone();
    for (i, event) in events.iter().enumerate() {
        let step = check_well_formed(event, world).and_then(|_| apply_event(&state, event));
        match step {
            Ok(next) => state = next,
            Err(error) => return PlanValidation::Invalid { index: i + 1, error },
        }
    }
    PlanValidation::Valid { final_state: state }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// The 3-city, 9-location world with its initial state used across tests.
    pub fn three_city_world() -> (World, WorldState) {
        let mut world = World::default();
        for c in 0..3 {
            world.cities.insert(EntityId::city(c));
            for j in 0..3 {
                world.locations.insert(EntityId::location(c, j), EntityId::city(c));
            }
            world.airports.insert(EntityId::location(c, 0));
            world.trucks.insert(EntityId::truck(c));
        }
        for a in 0..2 {
            world.airplanes.insert(EntityId::airplane(a));
        }
        for p in 0..4 {
            world.packages.insert(EntityId::package(p));
        }
        let mut init = WorldState::default();
        for (id, at) in [
            ("a1", "l1_0"),
            ("t2", "l2_0"),
            ("t1", "l1_1"),
            ("p0", "l1_0"),
            ("p3", "l1_2"),
            ("p2", "l1_1"),
            ("a0", "l2_0"),
            ("p1", "l1_0"),
            ("t0", "l0_0"),
        ] {
            init.set(id.into(), Position::At(at.into()));
        }
        (world, init)
    }

    /// A 21-event delivery plan valid under [`three_city_world`].
    pub fn three_city_plan() -> Vec<GroundEvent> {
        vec![
            GroundEvent::load_truck("p2", "t1", "l1_1"),
            GroundEvent::drive_truck("t1", "l1_1", "l1_0"),
            GroundEvent::load_truck("p1", "t1", "l1_0"),
            GroundEvent::drive_truck("t1", "l1_0", "l1_2"),
            GroundEvent::load_truck("p3", "t1", "l1_2"),
            GroundEvent::unload_truck("p2", "t1", "l1_2"),
            GroundEvent::unload_truck("p1", "t1", "l1_2"),
            GroundEvent::drive_truck("t1", "l1_2", "l1_0"),
            GroundEvent::unload_truck("p3", "t1", "l1_0"),
            GroundEvent::load_airplane("p3", "a1", "l1_0"),
            GroundEvent::load_airplane("p0", "a1", "l1_0"),
            GroundEvent::fly_airplane("a1", "l1_0", "l0_0"),
            GroundEvent::unload_airplane("p0", "a1", "l0_0"),
            GroundEvent::load_truck("p0", "t0", "l0_0"),
            GroundEvent::drive_truck("t0", "l0_0", "l0_2"),
            GroundEvent::unload_truck("p0", "t0", "l0_2"),
            GroundEvent::fly_airplane("a1", "l0_0", "l2_0"),
            GroundEvent::unload_airplane("p3", "a1", "l2_0"),
            GroundEvent::load_truck("p3", "t2", "l2_0"),
            GroundEvent::drive_truck("t2", "l2_0", "l2_1"),
            GroundEvent::unload_truck("p3", "t2", "l2_1"),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    fn state(pairs: &[(&str, Position)]) -> WorldState {
        let mut s = WorldState::default();
        for (id, p) in pairs {
            s.set((*id).into(), p.clone());
        }
        s
    }

    fn at(l: &str) -> Position {
        Position::At(l.into())
    }

    #[test]
    fn entity_kinds_follow_names() {
        assert_eq!(EntityId::from("l2_1").kind(), Some(EntityKind::Location));
        assert_eq!(EntityId::from("l2_1").encoded_city(), Some("c2".into()));
        assert_eq!(EntityId::from("p10").kind(), Some(EntityKind::Package));
        assert_eq!(EntityId::from("l2").kind(), None);
        assert_eq!(EntityId::from("x1").kind(), None);
        assert_eq!(EntityId::from("").kind(), None);
    }

    #[test]
    fn three_city_world_is_valid() {
        let (world, _) = three_city_world();
        assert_eq!(validate_world(&world), vec![]);
        assert_eq!(validate_world(&World::default()), vec![]);
    }

    #[test]
    fn city_mismatch_is_reported() {
        let (mut world, _) = three_city_world();
        world.locations.insert("l2_1".into(), "c0".into());
        let report = validate_world(&world);
        assert_eq!(report, vec![WorldViolation::CityMismatch { location: "l2_1".into(), city: "c0".into() }]);
        assert!(report[0].to_string().contains("location/city name mismatch"));
    }

    #[test]
    fn other_world_violations() {
        let (mut world, _) = three_city_world();
        world.airports.insert("l5_0".into());
        world.cities.insert("c7".into());
        world.packages.insert("t9".into());
        let report = validate_world(&world);
        assert!(report.contains(&WorldViolation::UndeclaredAirport { airport: "l5_0".into() }));
        assert!(report.contains(&WorldViolation::EmptyCity { city: "c7".into() }));
        assert!(report.contains(&WorldViolation::BadName { entity: "t9".into(), expected: EntityKind::Package }));
    }

    #[test]
    fn load_requires_co_location() {
        let (world, _) = three_city_world();
        let ev = GroundEvent::load_truck("p2", "t1", "l1_1");
        let s = state(&[("p2", at("l1_1")), ("t1", at("l1_1"))]);
        assert_eq!(event_applicable(&s, &ev, &world), Ok(true));
        let s = state(&[("p2", at("l1_1")), ("t1", at("l1_0"))]);
        assert_eq!(event_applicable(&s, &ev, &world), Ok(false));
    }

    #[test]
    fn same_city_flight_is_structural_error() {
        let (world, init) = three_city_world();
        let ev = GroundEvent::fly_airplane("a0", "l1_0", "l1_1");
        assert!(matches!(event_applicable(&init, &ev, &world), Err(DomainError::Malformed { .. })));
        let ev = GroundEvent::drive_truck("t1", "l1_1", "l2_0");
        assert!(matches!(event_applicable(&init, &ev, &world), Err(DomainError::Malformed { .. })));
        let ev = GroundEvent::load_truck("p0", "a1", "l1_0");
        assert!(matches!(event_applicable(&init, &ev, &world), Err(DomainError::Malformed { .. })));
    }

    #[test]
    fn effects_of_load_drive_unload() {
        let s0 = state(&[("p2", at("l1_1")), ("t1", at("l1_1"))]);
        let s1 = apply_event(&s0, &GroundEvent::load_truck("p2", "t1", "l1_1")).unwrap();
        assert_eq!(s1.get(&"p2".into()), Some(&Position::In("t1".into())));
        let s2 = apply_event(&s1, &GroundEvent::drive_truck("t1", "l1_1", "l1_0")).unwrap();
        assert_eq!(s2.get(&"t1".into()), Some(&at("l1_0")));
        assert_eq!(s2.get(&"p2".into()), Some(&Position::In("t1".into())));
        let s3 = apply_event(&s2, &GroundEvent::unload_truck("p2", "t1", "l1_0")).unwrap();
        assert_eq!(s3.get(&"p2".into()), Some(&at("l1_0")));
    }

    #[test]
    fn applying_inapplicable_event_names_condition() {
        let s = state(&[("p2", at("l1_1")), ("t1", at("l1_0"))]);
        let err = apply_event(&s, &GroundEvent::unload_truck("p2", "t1", "l1_0")).unwrap_err();
        assert_eq!(
            err,
            DomainError::Precondition {
                event: "unload-truck p2 t1 l1_0".into(),
                failed: Precondition::PackageNotIn { package: "p2".into(), vehicle: "t1".into() },
            }
        );
    }

    #[test]
    fn three_city_plan_validates() {
        let (world, init) = three_city_world();
        let plan = three_city_plan();
        let PlanValidation::Valid { final_state } = validate_plan(&world, &init, &plan) else {
            panic!("plan should validate");
        };
        assert_eq!(final_state.location_of(&"p3".into()), Some(&"l2_1".into()));
        assert_eq!(final_state.location_of(&"p0".into()), Some(&"l0_2".into()));
    }

    #[test]
    fn empty_plan_is_identity() {
        let (world, init) = three_city_world();
        assert_eq!(validate_plan(&world, &init, &[]), PlanValidation::Valid { final_state: init });
    }

    #[test]
    fn swapped_events_fail_at_second_position() {
        let (world, init) = three_city_world();
        let mut plan = three_city_plan();
        plan.swap(1, 2);
        // Re-checked directly: the load at l1_0 now precedes the truck's arrival.
        assert!(apply_event(&init, &plan[0]).is_ok());
        let after_first = apply_event(&init, &plan[0]).unwrap();
        assert!(apply_event(&after_first, &plan[1]).is_err());
        match validate_plan(&world, &init, &plan) {
            PlanValidation::Invalid { index, .. } => assert_eq!(index, 2),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn valid_prefixes_conserve_entities(cut in 0usize..=21) {
            let (world, init) = three_city_world();
            let plan = three_city_plan();
            let PlanValidation::Valid { final_state } = validate_plan(&world, &init, &plan[..cut]) else {
                panic!("prefix of a valid plan must be valid");
            };
            prop_assert_eq!(final_state.position.len(), init.position.len());
            for (id, pos) in &final_state.position {
                match pos {
                    Position::At(l) => prop_assert!(world.locations.contains_key(l)),
                    Position::In(v) => {
                        prop_assert_eq!(id.kind(), Some(EntityKind::Package));
                        prop_assert!(world.trucks.contains(v) || world.airplanes.contains(v));
                    }
                }
            }
        }

        #[test]
        fn load_then_unload_restores(pkg in 0usize..4, veh in 0usize..3) {
            let (_, init) = three_city_world();
            let package = EntityId::package(pkg);
            let truck = EntityId::truck(veh);
            let here = init.location_of(&package).unwrap().clone();
            let mut s = init.clone();
            s.set(truck.clone(), Position::At(here.clone()));
            let load = GroundEvent::load_truck(package.as_str(), truck.as_str(), here.as_str());
            let unload = GroundEvent::unload_truck(package.as_str(), truck.as_str(), here.as_str());
            let back = apply_event(&apply_event(&s, &load).unwrap(), &unload).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
