//! Event narration templates, four per (tier, event category).
//!
//! Placeholders: `<package_id>`, `<vehicle_id>`, `<truck_id>`, `<airplane_id>`,
//! `<location_id>`, `<start_location_id>`, `<end_location_id>`,
//! `<event_start_time>`, `<event_end_time>`, `{event_duration}`, and the
//! alternations `{loaded/unloaded}`, `{loading/unloading}`, `{truck/airplane}`.
//! Unloads read `from` where a load reads `into`.

use crate::domain::EventKind;
use crate::schedule::Tier;

pub const DOMAIN_SERIAL: &str = include_str!("text/domain_serial.txt");
pub const DOMAIN_PARALLEL: &str = include_str!("text/domain_parallel.txt");

pub const EVENTS_HEADER: &str = "Given the initial states, the following events occur:";

pub const REASONING_PROMPT: &str = "Let's think step-by-step to answer the question. Please use the below format:\nReasoning steps: [generate step-by-step reasoning]\nAnswer: [final answer]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Transfer,
    Drive,
    Fly,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Transfer, Category::Drive, Category::Fly];

    pub fn of(kind: EventKind) -> Self {
        match kind {
            EventKind::DriveTruck => Category::Drive,
            EventKind::FlyAirplane => Category::Fly,
            _ => Category::Transfer,
        }
    }
}

/// Temporal fields a tier exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Temporal {
    StartEnd,
    StartDuration,
    Duration,
}

impl Temporal {
    pub fn of(tier: Tier) -> Self {
        match tier {
            Tier::Easy => Temporal::StartEnd,
            Tier::Medium => Temporal::StartDuration,
            Tier::HardSerial | Tier::HardParallel => Temporal::Duration,
        }
    }
}

const EASY_TRANSFER: [&str; 4] = [
    "at location <location_id>, package <package_id> is {loaded/unloaded} into {truck/airplane} <vehicle_id> starting at <event_start_time> and finishing at <event_end_time>.",
    "package <package_id> is {loaded/unloaded} into {truck/airplane} <vehicle_id> from <event_start_time> to <event_end_time> at location <location_id>.",
    "{loading/unloading} package <package_id> into {truck/airplane} <vehicle_id> at location <location_id> starts at <event_start_time> and ends at <event_end_time>.",
    "from <event_start_time> to <event_end_time> package <package_id> {loaded/unloaded} into {truck/airplane} <vehicle_id> at location <location_id>.",
];

const EASY_DRIVE: [&str; 4] = [
    "from location <start_location_id>, truck <truck_id> moves to location <end_location_id> starting at <event_start_time> and finishing at <event_end_time>.",
    "truck <truck_id> operates from location <start_location_id> to location <end_location_id> from <event_start_time> to <event_end_time>.",
    "driving truck <truck_id> from location <start_location_id> to location <end_location_id> starts at <event_start_time> and ends at <event_end_time>.",
    "from <event_start_time> to <event_end_time> truck <truck_id> transports from location <start_location_id> to location <end_location_id>.",
];

const EASY_FLY: [&str; 4] = [
    "from location <start_location_id>, airplane <airplane_id> transits to location <end_location_id> starting at <event_start_time> and finishing at <event_end_time>.",
    "airplane <airplane_id> flies from location <start_location_id> to location <end_location_id> from <event_start_time> to <event_end_time>.",
    "flying airplane <airplane_id> from location <start_location_id> to location <end_location_id> starts at <event_start_time> and ends at <event_end_time>.",
    "from <event_start_time> to <event_end_time> airplane <airplane_id> transits from location <start_location_id> to location <end_location_id>.",
];

const MEDIUM_TRANSFER: [&str; 4] = [
    "at location <location_id>, package <package_id> is {loaded/unloaded} into {truck/airplane} <vehicle_id> starting at <event_start_time> and continues for {event_duration} minutes.",
    "package <package_id> is {loaded/unloaded} into {truck/airplane} <vehicle_id> from <event_start_time> at location <location_id> and takes {event_duration} minutes to finish.",
    "{loading/unloading} package <package_id> into {truck/airplane} <vehicle_id> at location <location_id> starts at <event_start_time> and ends after {event_duration} minutes.",
    "from <event_start_time> package <package_id> is {loaded/unloaded} into {truck/airplane} <vehicle_id> at location <location_id> for {event_duration} minutes.",
];

const MEDIUM_DRIVE: [&str; 4] = [
    "from location <start_location_id>, truck <truck_id> moves to location <end_location_id> starting at <event_start_time> and continues for {event_duration} minutes.",
    "truck <truck_id> operates from location <start_location_id> to location <end_location_id> starting at <event_start_time> and takes {event_duration} minutes.",
    "driving truck <truck_id> from location <start_location_id> to location <end_location_id> starts at <event_start_time> and ends after {event_duration} minutes.",
    "from <event_start_time>, truck <truck_id> transports from location <start_location_id> to location <end_location_id> for {event_duration} minutes.",
];

const MEDIUM_FLY: [&str; 4] = [
    "from location <start_location_id>, airplane <airplane_id> flies to location <end_location_id> starting at <event_start_time> and continues for {event_duration} minutes.",
    "airplane <airplane_id> flies from location <start_location_id> to location <end_location_id> starting at <event_start_time> and takes {event_duration} minutes.",
    "flying airplane <airplane_id> from location <start_location_id> to location <end_location_id> starts at <event_start_time> and ends after {event_duration} minutes.",
    "from <event_start_time>, airplane <airplane_id> transits from location <start_location_id> to location <end_location_id> for {event_duration} minutes.",
];

// The fourth transfer form is the duration-only wording used in hard
// narrations; a start/end form would leak absolute times.
const HARD_TRANSFER: [&str; 4] = [
    "at location <location_id>, package <package_id> is {loaded/unloaded} into {truck/airplane} <vehicle_id> and it takes {event_duration} minutes to finish.",
    "package <package_id> is {loaded/unloaded} into {truck/airplane} <vehicle_id> at location <location_id> and it requires {event_duration} minutes to complete.",
    "{loading/unloading} package <package_id> into {truck/airplane} <vehicle_id> at location <location_id> takes {event_duration} minutes to finish.",
    "package <package_id> {loaded/unloaded} into {truck/airplane} <vehicle_id> at location <location_id> for {event_duration} minutes.",
];

const HARD_DRIVE: [&str; 4] = [
    "from location <start_location_id>, truck <truck_id> moves to location <end_location_id> and it takes {event_duration} minutes to finish.",
    "truck <truck_id> operates from location <start_location_id> to location <end_location_id> and it requires {event_duration} minutes to complete.",
    "driving truck <truck_id> from location <start_location_id> to location <end_location_id> takes {event_duration} minutes to finish.",
    "truck <truck_id> transports from location <start_location_id> to location <end_location_id> for {event_duration} minutes.",
];

const HARD_FLY: [&str; 4] = [
    "from location <start_location_id>, airplane <airplane_id> transits to location <end_location_id> and it takes {event_duration} minutes to finish.",
    "airplane <airplane_id> flies from location <start_location_id> to location <end_location_id> and it requires {event_duration} minutes to complete.",
    "flying airplane <airplane_id> from location <start_location_id> to location <end_location_id> takes {event_duration} minutes to finish.",
    "airplane <airplane_id> transits from location <start_location_id> to location <end_location_id> for {event_duration} minutes.",
];

pub fn templates(tier: Tier, category: Category) -> &'static [&'static str; 4] {
    match (Temporal::of(tier), category) {
        (Temporal::StartEnd, Category::Transfer) => &EASY_TRANSFER,
        (Temporal::StartEnd, Category::Drive) => &EASY_DRIVE,
        (Temporal::StartEnd, Category::Fly) => &EASY_FLY,
        (Temporal::StartDuration, Category::Transfer) => &MEDIUM_TRANSFER,
        (Temporal::StartDuration, Category::Drive) => &MEDIUM_DRIVE,
        (Temporal::StartDuration, Category::Fly) => &MEDIUM_FLY,
        (Temporal::Duration, Category::Transfer) => &HARD_TRANSFER,
        (Temporal::Duration, Category::Drive) => &HARD_DRIVE,
        (Temporal::Duration, Category::Fly) => &HARD_FLY,
    }
}
