mod common;

use proptest::prelude::*;
use slotforge::corpus::{parse_corpus, split_train_validation, validate_corpus, AnswerPolicy};
use slotforge::editdist::{transform_run, CaseMode};
use slotforge::predict::{align, load_predictions};
use slotforge::seqgen::{
    build_all, parse_source, read_examples, write_examples, EventQuestions, ExampleKind, QuestionBank,
};
use slotforge::{evaluate, underestimation, RawPrediction};

use common::*;

fn gold_predictions(run: &SyntheticRun) -> Vec<RawPrediction> {
    let mut out = Vec::new();
    for tweet in run.corpus.tweets() {
        for slot in &tweet.slots {
            let text = if slot.gold.is_empty() {
                "not specified".to_owned()
            } else {
                slot.gold.join(" ||| ")
            };
            out.push(RawPrediction {
                tweet_id: tweet.id.clone(),
                slot: slot.name.clone(),
                text,
            });
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn corpus_round_trips(seed in any::<u64>()) {
        let run = synthetic_run(seed);
        let mut buf = Vec::new();
        run.corpus.write_jsonl(&mut buf).unwrap();
        let back = parse_corpus(buf.as_slice(), &AnswerPolicy::default()).unwrap();
        prop_assert_eq!(back.tweets(), run.corpus.tweets());
        prop_assert!(validate_corpus(&back).is_valid());
    }

    #[test]
    fn one_event_example_per_tweet_plus_one_per_slot(seed in any::<u64>()) {
        let run = synthetic_run(seed);
        let examples = build_all(&run.corpus, &QuestionBank::default(), EventQuestions::OwnEvent).unwrap();
        let slots: usize = run.corpus.tweets().iter().map(|t| t.slots.len()).sum();
        prop_assert_eq!(examples.len(), run.corpus.len() + slots);
        let events = examples.iter().filter(|e| e.key.kind == ExampleKind::Event).count();
        prop_assert_eq!(events, run.corpus.len());
    }

    #[test]
    fn all_event_questions_ask_five_per_tweet(seed in any::<u64>()) {
        let run = synthetic_run(seed);
        let examples = build_all(&run.corpus, &QuestionBank::default(), EventQuestions::All).unwrap();
        let yes = examples.iter().filter(|e| e.key.kind == ExampleKind::Event && e.target == "yes").count();
        let events = examples.iter().filter(|e| e.key.kind == ExampleKind::Event).count();
        prop_assert_eq!(events, 5 * run.corpus.len());
        prop_assert_eq!(yes, run.corpus.len());
    }

    #[test]
    fn examples_file_round_trips(seed in any::<u64>()) {
        let run = synthetic_run(seed);
        let examples = build_all(&run.corpus, &QuestionBank::default(), EventQuestions::OwnEvent).unwrap();
        let mut buf = Vec::new();
        write_examples(&mut buf, &examples).unwrap();
        prop_assert_eq!(read_examples(buf.as_slice()).unwrap(), examples.clone());
        for e in &examples {
            let fields = parse_source(&e.source).unwrap();
            prop_assert_eq!(&fields.choices, &e.candidates);
        }
    }

    #[test]
    fn gold_predictions_score_perfectly(seed in any::<u64>()) {
        let run = synthetic_run(seed);
        let report = evaluate("gold", &gold_predictions(&run), &run.corpus).unwrap();
        prop_assert_eq!(report.totals().fp, 0);
        prop_assert_eq!(report.totals().fn_, 0);
    }

    #[test]
    fn split_is_a_partition(seed in any::<u64>(), split_seed in any::<u64>(), ratio in 0.05f64..0.95) {
        let run = synthetic_run(seed);
        let (train, validation) = split_train_validation(&run.corpus, ratio, split_seed).unwrap();
        prop_assert_eq!(train.len() + validation.len(), run.corpus.len());
        let mut ids: Vec<&str> = train.tweets().iter().chain(validation.tweets()).map(|t| t.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(ids.len(), run.corpus.len());
    }
}

#[test]
fn exact_predictions_pass_through_transform() {
    let run = synthetic_run(11);
    let gold = gold_predictions(&run);
    for (key, result) in transform_run(&gold, &run.corpus, CaseMode::Uncased) {
        let snapped = result.unwrap();
        let original = gold.iter().find(|p| p.key() == key).unwrap();
        assert_eq!(snapped.text(), original.text);
        assert!(snapped.snaps.iter().all(|s| s.exact));
    }
}

#[test]
fn fixture_run_alignment_is_clean() {
    let corpus = fixture_corpus("corpus.jsonl");
    let raw = load_predictions(fixture("predictions.jsonl")).unwrap();
    let alignment = align(&raw, &corpus);
    assert!(alignment.is_clean());
    assert_eq!(alignment.predictions.len(), 12);
}

#[test]
fn fixture_transform_recovers_near_misses() {
    let corpus = fixture_corpus("corpus.jsonl");
    let raw = load_predictions(fixture("predictions.jsonl")).unwrap();
    let snapped: Vec<RawPrediction> = transform_run(&raw, &corpus, CaseMode::Uncased)
        .into_iter()
        .map(|(_, r)| r.unwrap().to_prediction())
        .collect();
    let report = underestimation(&raw, &snapped, &corpus).unwrap();
    assert!(report.delta.tp > 0);
    assert!(report.post.macro_avg.f1 > report.raw.macro_avg.f1);
    // Predictions that were already answer candidates are not touched.
    for (r, s) in raw.iter().zip(&snapped) {
        if r.text == "yes" || r.text == "not specified" {
            assert_eq!(r.text, s.text);
        }
    }
}

#[test]
fn mismatch_fixture_unmatched_records() {
    let corpus = fixture_corpus("mismatch_corpus.jsonl");
    let raw = load_predictions(fixture("mismatch_predictions.jsonl")).unwrap();
    let snapped: Vec<RawPrediction> = transform_run(&raw, &corpus, CaseMode::Uncased)
        .into_iter()
        .map(|(_, r)| r.unwrap().to_prediction())
        .collect();
    let report = underestimation(&raw, &snapped, &corpus).unwrap();
    let ids: Vec<&str> = report.unmatched.iter().map(|u| u.tweet_id.as_str()).collect();
    assert_eq!(ids, ["example-4", "example-5"]);
    assert_eq!(report.unmatched[0].snapped, "a military base");
    assert_eq!(report.unmatched[0].gold, ["texas"]);
}
