//! Generator and ground-truth oracle for time-sensitive question answering
//! over synthetic logistics schedules.
//!
//! The pipeline runs bottom-up:
//!
//! * [`domain`] models the logistics world and validates plans.
//! * [`plan`] produces valid plans (built-in planner and a text interchange format).
//! * [`schedule`] turns plans into timed schedules, serial or parallel, and
//!   propagates hypothetical delays.
//! * [`oracle`] answers "where is package p at minute t" two independent ways.
//! * [`question`] samples questions at controlled depths and assembles splits.
//! * [`render`] and [`ingest`] convert between structured data and record text.
//! * [`dataset`] writes and re-verifies the JSON-lines corpus.
//! * [`eval`] parses model responses and aggregates accuracy.

pub mod clock;
pub mod dataset;
pub mod domain;
pub mod eval;
pub mod ingest;
pub mod oracle;
pub mod plan;
pub mod question;
pub mod render;
pub mod rng;
pub mod schedule;

pub use clock::Clock;
pub use domain::{EntityId, EventKind, GroundEvent, Position, World, WorldState};
pub use oracle::{AnswerSet, PackageTimeline};
pub use plan::{Scenario, SizeHint};
pub use question::{Question, QuestionType};
pub use schedule::{Perturbation, PerturbationKind, ScheduleMode, Tier, TimedEvent, TimedSchedule};
