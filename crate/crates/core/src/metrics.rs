//! Exact-match scoring.
//!
//! Per slot, predicted and gold answers are compared as sets after
//! normalization; null answers are ignored on both sides. A near miss is
//! penalised twice: one false positive for the prediction and one false
//! negative for the gold answer it failed to hit.
//!
//! Counts are summed over all slots of an event (micro), then precision,
//! recall and F1 are averaged over the five events without weighting
//! (macro). Every ratio is an exact rational; rendering rounds half up to
//! four decimals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::iter::Sum;
use std::ops::Add;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::corpus::{AnswerPolicy, Corpus, EventType};
use crate::editdist::split_answers;
use crate::predict::{align, AlignError, Alignment, PredictionKey, RawPrediction};

/// Exact score value.
pub type Score = Ratio<i128>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct MatchCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl MatchCounts {
    pub const fn new(tp: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, fp, fn_ }
    }

    pub fn precision(&self) -> Score {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Score {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall, 0 when both are 0.
    pub fn f1(&self) -> Score {
        let (p, r) = (self.precision(), self.recall());
        if (p + r).is_zero() {
            Score::zero()
        } else {
            Score::from_integer(2) * p * r / (p + r)
        }
    }
}

impl Add for MatchCounts {
    type Output = MatchCounts;

    fn add(self, rhs: MatchCounts) -> MatchCounts {
        MatchCounts::new(self.tp + rhs.tp, self.fp + rhs.fp, self.fn_ + rhs.fn_)
    }
}

impl Sum for MatchCounts {
    fn sum<I: Iterator<Item = MatchCounts>>(iter: I) -> Self {
        iter.fold(MatchCounts::default(), Add::add)
    }
}

fn ratio(num: u64, den: u64) -> Score {
    if den == 0 {
        Score::zero()
    } else {
        Score::new(num.into(), den.into())
    }
}

/// Renders `value` with four decimals, rounding half away from zero.
pub fn fixed4(value: &Score) -> String {
    let negative = value.is_negative();
    let abs = value.abs();
    let scaled = (abs.numer() * 20_000 + abs.denom()) / (abs.denom() * 2);
    let sign = if negative && scaled != 0 { "-" } else { "" };
    format!("{sign}{}.{:04}", scaled / 10_000, scaled % 10_000)
}

/// Like [`fixed4`] with an explicit `+` for non-negative values.
pub fn signed_fixed4(value: &Score) -> String {
    let s = fixed4(value);
    if s.starts_with('-') {
        s
    } else {
        format!("+{s}")
    }
}

fn normalized_set<'a>(answers: impl Iterator<Item = &'a str>, policy: &AnswerPolicy) -> BTreeSet<String> {
    answers
        .filter(|a| !policy.is_null_answer(a))
        .map(|a| policy.normalize(a))
        .collect()
}

/// Counts for one slot. `predicted` may hold several answers joined by the
/// answer delimiter; `None` means the slot went unpredicted.
pub fn score_slot(predicted: Option<&str>, gold: &[String], policy: &AnswerPolicy) -> MatchCounts {
    let predicted = normalized_set(predicted.into_iter().flat_map(split_answers), policy);
    let gold = normalized_set(gold.iter().map(String::as_str), policy);
    let tp = predicted.intersection(&gold).count() as u64;
    MatchCounts::new(tp, predicted.len() as u64 - tp, gold.len() as u64 - tp)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventScore {
    pub event: EventType,
    pub counts: MatchCounts,
    pub precision: Score,
    pub recall: Score,
    pub f1: Score,
}

impl EventScore {
    pub fn from_counts(event: EventType, counts: MatchCounts) -> Self {
        Self {
            event,
            counts,
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
        }
    }
}

/// Micro-aggregates slot counts of one event.
pub fn score_event(event: EventType, slot_counts: impl IntoIterator<Item = MatchCounts>) -> EventScore {
    EventScore::from_counts(event, slot_counts.into_iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MacroScores {
    pub precision: Score,
    pub recall: Score,
    pub f1: Score,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationReport {
    pub run_label: String,
    /// One entry per event type, in [`EventType::ALL`] order.
    pub per_event: Vec<EventScore>,
    pub macro_avg: MacroScores,
}

impl EvaluationReport {
    pub fn totals(&self) -> MatchCounts {
        self.per_event.iter().map(|e| e.counts).sum()
    }

    pub fn event(&self, event: EventType) -> &EventScore {
        self.per_event
            .iter()
            .find(|e| e.event == event)
            .expect("report covers every event")
    }

    /// Plain-text table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "run: {}", self.run_label);
        let _ = writeln!(
            out,
            "{:<20} {:>6} {:>6} {:>6} {:>7} {:>7} {:>7}",
            "event", "TP", "FP", "FN", "P", "R", "F1"
        );
        for e in &self.per_event {
            let _ = writeln!(
                out,
                "{:<20} {:>6} {:>6} {:>6} {:>7} {:>7} {:>7}",
                e.event.as_str(),
                e.counts.tp,
                e.counts.fp,
                e.counts.fn_,
                fixed4(&e.precision),
                fixed4(&e.recall),
                fixed4(&e.f1)
            );
        }
        let t = self.totals();
        let _ = writeln!(
            out,
            "{:<20} {:>6} {:>6} {:>6} {:>7} {:>7} {:>7}",
            "macro",
            t.tp,
            t.fp,
            t.fn_,
            fixed4(&self.macro_avg.precision),
            fixed4(&self.macro_avg.recall),
            fixed4(&self.macro_avg.f1)
        );
        out
    }
}

struct Fixed<'a>(&'a Score);

impl Serialize for Fixed<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fixed4(self.0))
    }
}

struct Exact<'a>(&'a Score);

impl Serialize for Exact<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&format_args!("{}/{}", self.0.numer(), self.0.denom()))
    }
}

impl Serialize for EventScore {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("EventScore", 7)?;
        st.serialize_field("event", &self.event)?;
        st.serialize_field("tp", &self.counts.tp)?;
        st.serialize_field("fp", &self.counts.fp)?;
        st.serialize_field("fn", &self.counts.fn_)?;
        st.serialize_field("precision", &Fixed(&self.precision))?;
        st.serialize_field("recall", &Fixed(&self.recall))?;
        st.serialize_field("f1", &Fixed(&self.f1))?;
        st.end()
    }
}

impl Serialize for MacroScores {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("MacroScores", 4)?;
        st.serialize_field("precision", &Fixed(&self.precision))?;
        st.serialize_field("recall", &Fixed(&self.recall))?;
        st.serialize_field("f1", &Fixed(&self.f1))?;
        st.serialize_field(
            "exact",
            &BTreeMap::from([
                ("f1", Exact(&self.f1)),
                ("precision", Exact(&self.precision)),
                ("recall", Exact(&self.recall)),
            ]),
        )?;
        st.end()
    }
}

impl Serialize for EvaluationReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("EvaluationReport", 4)?;
        st.serialize_field("run", &self.run_label)?;
        st.serialize_field("events", &self.per_event)?;
        st.serialize_field("macro", &self.macro_avg)?;
        st.serialize_field("totals", &self.totals())?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no score for event `{0}`")]
    MissingEvent(EventType),
    #[error("more than one score for event `{0}`")]
    DuplicateEvent(EventType),
    #[error("predictions do not align with the corpus: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Alignment(Vec<AlignError>),
    #[error(
        "raw and transformed runs cover different slots ({only_raw} only in raw, {only_post} only in transformed)"
    )]
    KeyMismatch { only_raw: usize, only_post: usize },
}

/// Unweighted mean over exactly one score per event type.
pub fn macro_report(
    run_label: impl Into<String>,
    per_event: Vec<EventScore>,
) -> Result<EvaluationReport, MetricsError> {
    let mut by_event: BTreeMap<EventType, EventScore> = BTreeMap::new();
    for score in per_event {
        if by_event.contains_key(&score.event) {
            return Err(MetricsError::DuplicateEvent(score.event));
        }
        by_event.insert(score.event, score);
    }
    let mut ordered = Vec::with_capacity(EventType::ALL.len());
    for event in EventType::ALL {
        ordered.push(by_event.remove(&event).ok_or(MetricsError::MissingEvent(event))?);
    }

    let n = Score::from_integer(ordered.len() as i128);
    let mean = |f: fn(&EventScore) -> Score| ordered.iter().map(f).fold(Score::zero(), |a, b| a + b) / n;
    let macro_avg = MacroScores {
        precision: mean(|e| e.precision),
        recall: mean(|e| e.recall),
        f1: mean(|e| e.f1),
    };
    Ok(EvaluationReport {
        run_label: run_label.into(),
        per_event: ordered,
        macro_avg,
    })
}

/// Scoring outcome of one corpus slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotOutcome {
    pub key: PredictionKey,
    pub event: EventType,
    pub predicted: Option<String>,
    pub gold: Vec<String>,
    pub counts: MatchCounts,
}

/// Scores every corpus slot; unpredicted slots count as misses.
pub fn score_slots(alignment: &Alignment, corpus: &Corpus) -> Vec<SlotOutcome> {
    let policy = corpus.policy();
    let mut out = Vec::with_capacity(corpus.stats().slots);
    for tweet in corpus.tweets() {
        for slot in &tweet.slots {
            let key = PredictionKey::new(&tweet.id, &slot.name);
            let predicted = alignment.get(&key).map(str::to_owned);
            let counts = score_slot(predicted.as_deref(), &slot.gold, policy);
            out.push(SlotOutcome {
                key,
                event: tweet.event,
                predicted,
                gold: slot.gold.clone(),
                counts,
            });
        }
    }
    out
}

pub fn report_from_outcomes(run_label: impl Into<String>, outcomes: &[SlotOutcome]) -> EvaluationReport {
    let per_event = EventType::ALL
        .iter()
        .map(|&event| score_event(event, outcomes.iter().filter(|o| o.event == event).map(|o| o.counts)))
        .collect();
    macro_report(run_label, per_event).expect("one score per event")
}

/// Aligns and scores a run. Predictions that do not resolve to a corpus slot
/// are an error.
pub fn evaluate(
    run_label: impl Into<String>,
    predictions: &[RawPrediction],
    corpus: &Corpus,
) -> Result<EvaluationReport, MetricsError> {
    let alignment = align(predictions, corpus);
    if !alignment.is_clean() {
        return Err(MetricsError::Alignment(alignment.errors));
    }
    Ok(report_from_outcomes(run_label, &score_slots(&alignment, corpus)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delta {
    pub tp: i64,
    pub fp: i64,
    pub fn_: i64,
    pub precision: Score,
    pub recall: Score,
    pub f1: Score,
}

impl Serialize for Delta {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Signed<'a>(&'a Score);
        impl Serialize for Signed<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&signed_fixed4(self.0))
            }
        }
        let mut st = s.serialize_struct("Delta", 6)?;
        st.serialize_field("tp", &self.tp)?;
        st.serialize_field("fp", &self.fp)?;
        st.serialize_field("fn", &self.fn_)?;
        st.serialize_field("precision", &Signed(&self.precision))?;
        st.serialize_field("recall", &Signed(&self.recall))?;
        st.serialize_field("f1", &Signed(&self.f1))?;
        st.end()
    }
}

/// A prediction whose transformed form still hits no gold answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnmatchedRecord {
    pub tweet_id: String,
    pub slot: String,
    pub raw: String,
    pub snapped: String,
    pub gold: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnderestimationReport {
    pub raw: EvaluationReport,
    pub post: EvaluationReport,
    /// `post − raw`.
    pub delta: Delta,
    #[serde(skip)]
    pub unmatched: Vec<UnmatchedRecord>,
}

impl UnderestimationReport {
    pub fn to_table(&self) -> String {
        let mut out = self.raw.to_table();
        out.push('\n');
        out.push_str(&self.post.to_table());
        let d = &self.delta;
        let _ = writeln!(
            out,
            "\ndelta (post - raw): tp {:+} fp {:+} fn {:+}  P {}  R {}  F1 {}",
            d.tp,
            d.fp,
            d.fn_,
            signed_fixed4(&d.precision),
            signed_fixed4(&d.recall),
            signed_fixed4(&d.f1)
        );
        let _ = writeln!(out, "unmatched after transform: {}", self.unmatched.len());
        out
    }
}

impl fmt::Display for UnderestimationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_table())
    }
}

/// Scores a raw run and its transformed counterpart side by side.
///
/// A slot is listed as unmatched when its transformed prediction contributes
/// errors (FP or FN) and no true positive.
pub fn underestimation(
    raw: &[RawPrediction],
    snapped: &[RawPrediction],
    corpus: &Corpus,
) -> Result<UnderestimationReport, MetricsError> {
    let raw_alignment = align(raw, corpus);
    let post_alignment = align(snapped, corpus);
    let mut errors = raw_alignment.errors.clone();
    errors.extend(post_alignment.errors.iter().cloned());
    if !errors.is_empty() {
        return Err(MetricsError::Alignment(errors));
    }
    let only_raw = raw_alignment
        .predictions
        .keys()
        .filter(|k| !post_alignment.predictions.contains_key(*k))
        .count();
    let only_post = post_alignment
        .predictions
        .keys()
        .filter(|k| !raw_alignment.predictions.contains_key(*k))
        .count();
    if only_raw + only_post > 0 {
        return Err(MetricsError::KeyMismatch { only_raw, only_post });
    }

    let raw_outcomes = score_slots(&raw_alignment, corpus);
    let post_outcomes = score_slots(&post_alignment, corpus);
    let raw_report = report_from_outcomes("raw", &raw_outcomes);
    let post_report = report_from_outcomes("post", &post_outcomes);

    let unmatched = raw_outcomes
        .iter()
        .zip(&post_outcomes)
        .filter_map(|(r, p)| {
            let counts = p.counts;
            let snapped = p.predicted.as_ref()?;
            (counts.tp == 0 && counts.fp + counts.fn_ > 0).then(|| UnmatchedRecord {
                tweet_id: p.key.tweet_id.clone(),
                slot: p.key.slot.clone(),
                raw: r.predicted.clone().unwrap_or_default(),
                snapped: snapped.clone(),
                gold: p.gold.clone(),
            })
        })
        .collect();

    let (rt, pt) = (raw_report.totals(), post_report.totals());
    let delta = Delta {
        tp: pt.tp as i64 - rt.tp as i64,
        fp: pt.fp as i64 - rt.fp as i64,
        fn_: pt.fn_ as i64 - rt.fn_ as i64,
        precision: post_report.macro_avg.precision - raw_report.macro_avg.precision,
        recall: post_report.macro_avg.recall - raw_report.macro_avg.recall,
        f1: post_report.macro_avg.f1 - raw_report.macro_avg.f1,
    };

    Ok(UnderestimationReport {
        raw: raw_report,
        post: post_report,
        delta,
        unmatched,
    })
}
