use proptest::prelude::*;

use tsqa_core::clock::Clock;
use tsqa_core::plan::{generate_corpus, parse_plan_text, write_plan_text, PlannerConfig};
use tsqa_core::question::{compute_depth, effective_query, gold_answers, sample_question, QuestionParams, MAX_DEPTH, MIN_DEPTH};
use tsqa_core::render::{parse_question_text, render_question_text, QueryTime};
use tsqa_core::rng::rng_for;
use tsqa_core::schedule::{apply_perturbation, draw_schedule, Perturbation, PerturbationKind, TimingParams};
use tsqa_core::{QuestionType, Scenario, Tier};

fn corpus() -> &'static [Scenario] {
    static CELL: std::sync::OnceLock<Vec<Scenario>> = std::sync::OnceLock::new();
    CELL.get_or_init(|| generate_corpus(11, 10, &PlannerConfig::default()).unwrap())
}

fn tier_strategy() -> impl Strategy<Value = Tier> {
    prop::sample::select(Tier::ALL.to_vec())
}

fn qtype_strategy() -> impl Strategy<Value = QuestionType> {
    prop::sample::select(QuestionType::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn clock_text_round_trips(m in 0u32..1440) {
        let c = Clock::from_minutes(m);
        prop_assert_eq!(c.to_string().parse::<Clock>().unwrap(), c);
    }

    #[test]
    fn sampled_questions_are_consistent(
        scenario in 0usize..10,
        tier in tier_strategy(),
        qtype in qtype_strategy(),
        depth in MIN_DEPTH..=MAX_DEPTH,
        seed in any::<u64>(),
    ) {
        let sc = &corpus()[scenario];
        let schedule = draw_schedule(&sc.plan, tier, &TimingParams::default(), &mut rng_for(&[seed, 1])).unwrap();
        let Ok(q) = sample_question(sc, &schedule, tier, qtype, depth, &QuestionParams::default(), &mut rng_for(&[seed, 2])) else {
            return Ok(());
        };
        prop_assert_eq!(q.depth, depth);
        prop_assert_eq!(&gold_answers(&q, sc, &schedule).unwrap(), &q.gold);
        let (eff, minute) = effective_query(&q, &schedule).unwrap();
        let anchor = q.anchor.map(|a| a.index).unwrap_or(1);
        prop_assert_eq!(compute_depth(&eff, minute, anchor).unwrap(), depth);
        prop_assert!(q.gold.answers().len() <= 2 && !q.gold.answers().is_empty());
        prop_assert_eq!(q.anchor.is_some(), tier.is_hard());
        prop_assert_eq!(q.perturbation.is_some(), qtype == QuestionType::Hypothetical);
        if let Some(p) = q.perturbation {
            prop_assert!(p.target >= anchor && p.target <= anchor + depth as usize);
        }
        let parsed = parse_question_text(&render_question_text(&q, &schedule)).unwrap();
        prop_assert_eq!(&parsed.package, &q.package);
        match parsed.time {
            QueryTime::At(c) => prop_assert_eq!(c, q.query_clock),
            QueryTime::Relative { hours, reference } => {
                prop_assert_eq!(Some(hours), q.offset_hours);
                prop_assert_eq!(Some(reference), q.reference_clock);
                prop_assert_eq!(reference.offset(60 * i64::from(hours)), q.query_clock);
            }
        }
    }

    #[test]
    fn delay_then_expedite_is_identity(
        scenario in 0usize..10,
        tier in tier_strategy(),
        target_frac in 0.0f64..1.0,
        minutes in 1u32..=90,
        seed in any::<u64>(),
    ) {
        let sc = &corpus()[scenario];
        let s = draw_schedule(&sc.plan, tier, &TimingParams::default(), &mut rng_for(&[seed])).unwrap();
        let target = 1 + (target_frac * s.events.len() as f64) as usize;
        let p = Perturbation { target, kind: PerturbationKind::Delay, minutes };
        if let Ok(d) = apply_perturbation(&s, p) {
            prop_assert_eq!(apply_perturbation(&d, p.inverse()).unwrap(), s);
        }
    }
}

#[test]
fn generated_plans_survive_text_round_trip() {
    for sc in corpus() {
        let back = parse_plan_text(&write_plan_text(sc)).unwrap();
        assert_eq!(&back, sc);
    }
}
