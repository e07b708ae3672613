//! Event-annotated tweet corpus: parsing, validation and splitting.
//!
//! A corpus file holds one JSON record per line:
//!
//! ```text
//! {"id": str, "text": str, "event": str, "slots": [{"name": str, "question": str, "candidates": [str], "gold": [str]}]}
//! ```
//!
//! Parsing enforces every invariant of the data model. Candidates are
//! deduplicated under the configured comparison normalization (first
//! occurrence wins) and gold answers are rewritten to the surviving
//! spelling, so each slot's candidate list is unique for exact matching.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::editdist::{normalize, CaseMode};
use crate::seqgen;

/// One of the five event categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    TestedPositive,
    TestedNegative,
    CanNotTest,
    Death,
    CureAndPrevention,
}

impl EventType {
    pub const ALL: [EventType; 5] = [
        EventType::TestedPositive,
        EventType::TestedNegative,
        EventType::CanNotTest,
        EventType::Death,
        EventType::CureAndPrevention,
    ];

    /// Wire name used in corpus files.
    pub fn as_str(self) -> &'static str {
        match self {
            EventType::TestedPositive => "tested_positive",
            EventType::TestedNegative => "tested_negative",
            EventType::CanNotTest => "can_not_test",
            EventType::Death => "death",
            EventType::CureAndPrevention => "cure_and_prevention",
        }
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown event type `{0}`")]
pub struct UnknownEvent(pub String);

impl FromStr for EventType {
    type Err = UnknownEvent;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventType::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| UnknownEvent(s.to_owned()))
    }
}

/// How answers are compared and which candidates mean "no answer".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerPolicy {
    pub case: CaseMode,
    pub null_answers: Vec<String>,
}

impl Default for AnswerPolicy {
    fn default() -> Self {
        Self {
            case: CaseMode::Uncased,
            null_answers: vec!["not specified".to_owned()],
        }
    }
}

impl AnswerPolicy {
    pub fn normalize(&self, s: &str) -> String {
        normalize(s, self.case)
    }

    pub fn is_null_answer(&self, answer: &str) -> bool {
        let answer = self.normalize(answer);
        self.null_answers.iter().any(|n| self.normalize(n) == answer)
    }
}

/// A slot question with its candidate choices and gold answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotAnnotation {
    pub name: String,
    pub question: String,
    pub candidates: Vec<String>,
    /// Gold answers, each an element of `candidates`, in candidate order.
    pub gold: Vec<String>,
}

impl SlotAnnotation {
    /// The first candidate flagged as a no-answer choice.
    pub fn null_choice(&self, policy: &AnswerPolicy) -> Option<&str> {
        self.candidates
            .iter()
            .map(String::as_str)
            .find(|c| policy.is_null_answer(c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub text: String,
    pub event: EventType,
    pub slots: Vec<SlotAnnotation>,
}

impl Tweet {
    pub fn slot(&self, name: &str) -> Option<&SlotAnnotation> {
        self.slots.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub tweets: usize,
    pub tweets_per_event: BTreeMap<EventType, usize>,
    pub slots: usize,
    /// One event example per tweet plus one example per slot.
    pub examples: usize,
}

impl CorpusStats {
    pub fn from_tweets(tweets: &[Tweet]) -> Self {
        let mut tweets_per_event: BTreeMap<EventType, usize> = EventType::ALL.iter().map(|&e| (e, 0)).collect();
        let mut slots = 0;
        for tweet in tweets {
            *tweets_per_event.entry(tweet.event).or_default() += 1;
            slots += tweet.slots.len();
        }
        Self {
            tweets: tweets.len(),
            tweets_per_event,
            slots,
            examples: tweets.len() + slots,
        }
    }
}

/// An immutable, validated collection of tweets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    tweets: Vec<Tweet>,
    stats: CorpusStats,
    policy: AnswerPolicy,
}

impl Corpus {
    /// Wraps tweets without checking invariants; see [`validate_corpus`].
    pub fn from_tweets(tweets: Vec<Tweet>, policy: AnswerPolicy) -> Self {
        let stats = CorpusStats::from_tweets(&tweets);
        Self { tweets, stats, policy }
    }

    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn policy(&self) -> &AnswerPolicy {
        &self.policy
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn index(&self) -> CorpusIndex<'_> {
        CorpusIndex {
            by_id: self.tweets.iter().map(|t| (t.id.as_str(), t)).collect(),
        }
    }

    /// Writes the corpus as line-delimited records.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for tweet in &self.tweets {
            serde_json::to_writer(&mut out, tweet)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Lookup of tweets by id.
pub struct CorpusIndex<'a> {
    by_id: HashMap<&'a str, &'a Tweet>,
}

impl<'a> CorpusIndex<'a> {
    pub fn tweet(&self, id: &str) -> Option<&'a Tweet> {
        self.by_id.get(id).copied()
    }

    pub fn slot(&self, tweet_id: &str, slot: &str) -> Option<(&'a Tweet, &'a SlotAnnotation)> {
        let tweet = self.tweet(tweet_id)?;
        Some((tweet, tweet.slot(slot)?))
    }
}

/// Why a single record was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("empty tweet id")]
    EmptyId,
    #[error("empty tweet text")]
    EmptyText,
    #[error(transparent)]
    UnknownEvent(#[from] UnknownEvent),
    #[error("slot `{slot}` appears more than once")]
    DuplicateSlot { slot: String },
    #[error("slot `{slot}`: {reason}")]
    BadQuestion { slot: String, reason: String },
    #[error("slot `{slot}`: candidate {index} is empty")]
    EmptyCandidate { slot: String, index: usize },
    #[error("slot `{slot}`: candidate `{candidate}` is not allowed: {reason}")]
    BadCandidate {
        slot: String,
        candidate: String,
        reason: String,
    },
    #[error("slot `{slot}`: gold answer `{answer}` is not among the candidates")]
    GoldNotInCandidates { slot: String, answer: String },
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: RecordError,
    },
    #[error("line {line}: duplicate tweet id `{id}` (first seen on line {first_line})")]
    DuplicateId { line: usize, id: String, first_line: usize },
    #[error("reading corpus: {0}")]
    Io(#[from] io::Error),
}

impl CorpusError {
    pub fn line(&self) -> Option<usize> {
        match self {
            CorpusError::Record { line, .. } | CorpusError::DuplicateId { line, .. } => Some(*line),
            CorpusError::Io(_) => None,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TweetRecord {
    id: String,
    text: String,
    event: String,
    slots: Vec<SlotAnnotation>,
}

/// Parses a line-delimited corpus. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn parse_corpus<R: BufRead>(input: R, policy: &AnswerPolicy) -> Result<Corpus, CorpusError> {
    let mut tweets = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();

    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tweet = parse_record(&line, policy).map_err(|source| CorpusError::Record { line: line_no, source })?;
        if let Some(&first_line) = seen.get(&tweet.id) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: tweet.id,
                first_line,
            });
        }
        seen.insert(tweet.id.clone(), line_no);
        tweets.push(tweet);
    }

    Ok(Corpus::from_tweets(tweets, policy.clone()))
}

fn parse_record(line: &str, policy: &AnswerPolicy) -> Result<Tweet, RecordError> {
    let record: TweetRecord = serde_json::from_str(line).map_err(|e| RecordError::Malformed(e.to_string()))?;
    if record.id.is_empty() {
        return Err(RecordError::EmptyId);
    }
    if record.text.is_empty() {
        return Err(RecordError::EmptyText);
    }
    let event: EventType = record.event.parse()?;

    let mut names = HashSet::new();
    let mut slots = Vec::with_capacity(record.slots.len());
    for slot in record.slots {
        if !names.insert(slot.name.clone()) {
            return Err(RecordError::DuplicateSlot { slot: slot.name });
        }
        slots.push(clean_slot(slot, policy)?);
    }

    Ok(Tweet {
        id: record.id,
        text: record.text,
        event,
        slots,
    })
}

fn clean_slot(slot: SlotAnnotation, policy: &AnswerPolicy) -> Result<SlotAnnotation, RecordError> {
    if let Err(e) = seqgen::check_question(&slot.question) {
        return Err(RecordError::BadQuestion {
            slot: slot.name,
            reason: e.to_string(),
        });
    }

    let mut candidates: Vec<String> = Vec::with_capacity(slot.candidates.len());
    let mut canonical: HashMap<String, usize> = HashMap::new();
    for (index, candidate) in slot.candidates.iter().enumerate() {
        if candidate.is_empty() {
            return Err(RecordError::EmptyCandidate { slot: slot.name, index });
        }
        if let Err(e) = seqgen::check_choice(candidate) {
            return Err(RecordError::BadCandidate {
                slot: slot.name,
                candidate: candidate.clone(),
                reason: e.to_string(),
            });
        }
        canonical.entry(policy.normalize(candidate)).or_insert_with(|| {
            candidates.push(candidate.clone());
            candidates.len() - 1
        });
    }

    let mut gold_positions = Vec::with_capacity(slot.gold.len());
    for answer in &slot.gold {
        if !slot.candidates.contains(answer) {
            return Err(RecordError::GoldNotInCandidates {
                slot: slot.name,
                answer: answer.clone(),
            });
        }
        let pos = canonical[&policy.normalize(answer)];
        if !gold_positions.contains(&pos) {
            gold_positions.push(pos);
        }
    }
    gold_positions.sort_unstable();
    let gold = gold_positions.into_iter().map(|p| candidates[p].clone()).collect();

    Ok(SlotAnnotation {
        name: slot.name,
        question: slot.question,
        candidates,
        gold,
    })
}

/// One invariant violation found by [`validate_corpus`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyId {
        position: usize,
    },
    DuplicateId {
        id: String,
    },
    EmptyText {
        id: String,
    },
    DuplicateSlot {
        id: String,
        slot: String,
    },
    EmptyCandidate {
        id: String,
        slot: String,
        index: usize,
    },
    DuplicateCandidate {
        id: String,
        slot: String,
        candidate: String,
    },
    GoldNotInCandidates {
        id: String,
        slot: String,
        answer: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyId { position } => write!(f, "tweet #{position}: empty id"),
            Violation::DuplicateId { id } => write!(f, "tweet `{id}`: duplicate id"),
            Violation::EmptyText { id } => write!(f, "tweet `{id}`: empty text"),
            Violation::DuplicateSlot { id, slot } => {
                write!(f, "tweet `{id}`: slot `{slot}` appears more than once")
            }
            Violation::EmptyCandidate { id, slot, index } => {
                write!(f, "tweet `{id}`, slot `{slot}`: candidate {index} is empty")
            }
            Violation::DuplicateCandidate { id, slot, candidate } => write!(
                f,
                "tweet `{id}`, slot `{slot}`: candidate `{candidate}` duplicates an earlier one"
            ),
            Violation::GoldNotInCandidates { id, slot, answer } => write!(
                f,
                "tweet `{id}`, slot `{slot}`: gold answer `{answer}` is not a candidate"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every invariant violation in `corpus`.
pub fn validate_corpus(corpus: &Corpus) -> ValidationReport {
    let policy = corpus.policy();
    let mut violations = Vec::new();
    let mut ids = HashSet::new();

    for (position, tweet) in corpus.tweets().iter().enumerate() {
        let id = &tweet.id;
        if id.is_empty() {
            violations.push(Violation::EmptyId { position });
        } else if !ids.insert(id.as_str()) {
            violations.push(Violation::DuplicateId { id: id.clone() });
        }
        if tweet.text.is_empty() {
            violations.push(Violation::EmptyText { id: id.clone() });
        }

        let mut slot_names = HashSet::new();
        for slot in &tweet.slots {
            if !slot_names.insert(slot.name.as_str()) {
                violations.push(Violation::DuplicateSlot {
                    id: id.clone(),
                    slot: slot.name.clone(),
                });
            }
            let mut normalized = HashSet::new();
            for (index, candidate) in slot.candidates.iter().enumerate() {
                if candidate.is_empty() {
                    violations.push(Violation::EmptyCandidate {
                        id: id.clone(),
                        slot: slot.name.clone(),
                        index,
                    });
                } else if !normalized.insert(policy.normalize(candidate)) {
                    violations.push(Violation::DuplicateCandidate {
                        id: id.clone(),
                        slot: slot.name.clone(),
                        candidate: candidate.clone(),
                    });
                }
            }
            for answer in &slot.gold {
                if !slot.candidates.contains(answer) {
                    violations.push(Violation::GoldNotInCandidates {
                        id: id.clone(),
                        slot: slot.name.clone(),
                        answer: answer.clone(),
                    });
                }
            }
        }
    }

    ValidationReport { violations }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("cannot split an empty corpus")]
    EmptyCorpus,
    #[error("validation ratio must lie strictly between 0 and 1, got {0}")]
    RatioOutOfRange(f64),
}

/// Number of validation tweets for a corpus of `n` tweets.
pub fn validation_size(n: usize, ratio: f64) -> usize {
    (ratio * n as f64).round() as usize
}

/// Samples `round(ratio * N)` tweets without replacement as the validation
/// split. Both outputs keep corpus order. The sample depends only on
/// `(N, ratio, seed)`.
pub fn split_train_validation(corpus: &Corpus, ratio: f64, seed: u64) -> Result<(Corpus, Corpus), SplitError> {
    if corpus.is_empty() {
        return Err(SplitError::EmptyCorpus);
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(SplitError::RatioOutOfRange(ratio));
    }
    let n = corpus.len();
    let k = validation_size(n, ratio);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_validation = vec![false; n];
    for i in index::sample(&mut rng, n, k) {
        in_validation[i] = true;
    }

    let (validation, train): (Vec<_>, Vec<_>) = corpus
        .tweets()
        .iter()
        .cloned()
        .zip(in_validation)
        .partition(|(_, v)| *v);
    let strip = |v: Vec<(Tweet, bool)>| v.into_iter().map(|(t, _)| t).collect();

    Ok((
        Corpus::from_tweets(strip(train), corpus.policy().clone()),
        Corpus::from_tweets(strip(validation), corpus.policy().clone()),
    ))
}
