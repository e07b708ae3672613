//! Text-to-text source/target construction.
//!
//! Every example is rendered as
//!
//! ```text
//! context: {tweet text} question: {question} choices: {c1 ||| c2 ||| ...}
//! ```
//!
//! The tweet text is free-form and may contain any of the field markers.
//! Questions and choices are controlled strings, so they are the ones that
//! carry restrictions: a question may not contain `question:`, and a choice
//! may not be empty or contain `|||` or `choices:`. Under those rules
//! [`parse_source`] recovers the fields of every rendered source by locating
//! the last ` choices: ` and then the last ` question: ` before it.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnswerPolicy, Corpus, EventType, SlotAnnotation, Tweet};
use crate::ANSWER_DELIMITER;

const CONTEXT_MARK: &str = "context: ";
const QUESTION_MARK: &str = " question: ";
const CHOICES_MARK: &str = " choices: ";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SourceError {
    #[error("context is empty")]
    EmptyContext,
    #[error("question is empty")]
    EmptyQuestion,
    #[error("question contains the field marker `question:`")]
    QuestionMarkerInQuestion,
    #[error("choice {index} is empty")]
    EmptyChoice { index: usize },
    #[error("choice {index} contains `|||`")]
    DelimiterInChoice { index: usize },
    #[error("choice {index} contains the field marker `choices:`")]
    ChoicesMarkerInChoice { index: usize },
}

/// Checks that `question` can be embedded in a source unambiguously.
pub fn check_question(question: &str) -> Result<(), SourceError> {
    if question.is_empty() {
        return Err(SourceError::EmptyQuestion);
    }
    if question.contains(QUESTION_MARK.trim()) {
        return Err(SourceError::QuestionMarkerInQuestion);
    }
    Ok(())
}

/// Checks a single choice; errors report index 0.
pub fn check_choice(choice: &str) -> Result<(), SourceError> {
    check_choice_at(choice, 0)
}

fn check_choice_at(choice: &str, index: usize) -> Result<(), SourceError> {
    if choice.is_empty() {
        return Err(SourceError::EmptyChoice { index });
    }
    if choice.contains("|||") {
        return Err(SourceError::DelimiterInChoice { index });
    }
    if choice.contains(CHOICES_MARK.trim()) {
        return Err(SourceError::ChoicesMarkerInChoice { index });
    }
    Ok(())
}

/// Renders a source sequence. An empty choice list leaves nothing after
/// `choices: `.
pub fn render_source(context: &str, question: &str, choices: &[impl AsRef<str>]) -> Result<String, SourceError> {
    if context.is_empty() {
        return Err(SourceError::EmptyContext);
    }
    check_question(question)?;
    for (index, choice) in choices.iter().enumerate() {
        check_choice_at(choice.as_ref(), index)?;
    }
    let joined = choices
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(ANSWER_DELIMITER);
    Ok(format!(
        "{CONTEXT_MARK}{context}{QUESTION_MARK}{question}{CHOICES_MARK}{joined}"
    ))
}

/// Fields recovered from a rendered source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFields {
    pub context: String,
    pub question: String,
    pub choices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("not a rendered source: missing `{0}`")]
pub struct ParseSourceError(&'static str);

/// Inverse of [`render_source`].
pub fn parse_source(source: &str) -> Result<SourceFields, ParseSourceError> {
    let rest = source.strip_prefix(CONTEXT_MARK).ok_or(ParseSourceError("context: "))?;
    let at = rest.rfind(CHOICES_MARK).ok_or(ParseSourceError(" choices: "))?;
    let (head, joined) = (&rest[..at], &rest[at + CHOICES_MARK.len()..]);
    let at = head.rfind(QUESTION_MARK).ok_or(ParseSourceError(" question: "))?;
    let (context, question) = (&head[..at], &head[at + QUESTION_MARK.len()..]);
    let choices = if joined.is_empty() {
        Vec::new()
    } else {
        joined.split(ANSWER_DELIMITER).map(str::to_owned).collect()
    };
    Ok(SourceFields {
        context: context.to_owned(),
        question: question.to_owned(),
        choices,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleKind {
    /// Part 1: does the tweet belong to an event?
    Event,
    /// Part 2: answer a slot question.
    Slot,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExampleKey {
    pub tweet_id: String,
    pub kind: ExampleKind,
    pub slot_name: Option<String>,
}

/// One source/target pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub key: ExampleKey,
    pub source: String,
    pub target: String,
    pub candidates: Vec<String>,
}

/// Event-membership question for each event type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionBank(BTreeMap<EventType, String>);

impl Default for QuestionBank {
    fn default() -> Self {
        use EventType::*;
        Self(BTreeMap::from([
            (
                TestedPositive,
                "Does this tweet report someone tested positive for coronavirus?".to_owned(),
            ),
            (
                TestedNegative,
                "Does this tweet report someone tested negative for coronavirus?".to_owned(),
            ),
            (
                CanNotTest,
                "Does this tweet report someone who can not get tested for coronavirus?".to_owned(),
            ),
            (Death, "Does this tweet report death from coronavirus?".to_owned()),
            (
                CureAndPrevention,
                "Does this tweet report a cure or prevention for coronavirus?".to_owned(),
            ),
        ]))
    }
}

impl QuestionBank {
    /// Builds a bank; every event type must be present.
    pub fn new(questions: BTreeMap<EventType, String>) -> Result<Self, SeqgenError> {
        let bank = Self(questions);
        for event in EventType::ALL {
            check_question(bank.question(event)?).map_err(|source| SeqgenError::BadEventQuestion { event, source })?;
        }
        Ok(bank)
    }

    pub fn question(&self, event: EventType) -> Result<&str, SeqgenError> {
        self.0
            .get(&event)
            .map(String::as_str)
            .ok_or(SeqgenError::MissingEventQuestion(event))
    }

    /// Overrides the question for one event.
    pub fn set(&mut self, event: EventType, question: impl Into<String>) {
        self.0.insert(event, question.into());
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeqgenError {
    #[error("question bank has no question for `{0}`")]
    MissingEventQuestion(EventType),
    #[error("question for `{event}`: {source}")]
    BadEventQuestion {
        event: EventType,
        #[source]
        source: SourceError,
    },
    #[error("tweet `{tweet_id}`: {source}")]
    Source {
        tweet_id: String,
        #[source]
        source: SourceError,
    },
}

/// Which event questions [`build_all`] asks per tweet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EventQuestions {
    /// Only the tweet's own event (always answered "yes").
    #[default]
    OwnEvent,
    /// All five events; the key's `slot_name` carries the asked event.
    All,
}

pub const YES: &str = "yes";
pub const NO: &str = "no";

/// Part-1 example asking whether `tweet` reports `asked`.
pub fn build_event_example(tweet: &Tweet, asked: EventType, bank: &QuestionBank) -> Result<Example, SeqgenError> {
    let question = bank.question(asked)?;
    let candidates = vec![YES.to_owned(), NO.to_owned()];
    let source = render_source(&tweet.text, question, &candidates).map_err(|source| SeqgenError::Source {
        tweet_id: tweet.id.clone(),
        source,
    })?;
    Ok(Example {
        key: ExampleKey {
            tweet_id: tweet.id.clone(),
            kind: ExampleKind::Event,
            slot_name: None,
        },
        source,
        target: if asked == tweet.event { YES } else { NO }.to_owned(),
        candidates,
    })
}

/// Target string for a slot: gold answers joined in candidate order, or the
/// slot's null choice when there is no gold answer.
pub fn slot_target(slot: &SlotAnnotation, policy: &AnswerPolicy) -> String {
    if slot.gold.is_empty() {
        return slot
            .null_choice(policy)
            .or_else(|| policy.null_answers.first().map(String::as_str))
            .unwrap_or_default()
            .to_owned();
    }
    slot.candidates
        .iter()
        .filter(|c| slot.gold.contains(c))
        .map(String::as_str)
        .collect::<Vec<_>>()
        .join(ANSWER_DELIMITER)
}

/// Part-2 example for one slot of `tweet`.
pub fn build_slot_example(tweet: &Tweet, slot: &SlotAnnotation, policy: &AnswerPolicy) -> Result<Example, SeqgenError> {
    let source =
        render_source(&tweet.text, &slot.question, &slot.candidates).map_err(|source| SeqgenError::Source {
            tweet_id: tweet.id.clone(),
            source,
        })?;
    Ok(Example {
        key: ExampleKey {
            tweet_id: tweet.id.clone(),
            kind: ExampleKind::Slot,
            slot_name: Some(slot.name.clone()),
        },
        source,
        target: slot_target(slot, policy),
        candidates: slot.candidates.clone(),
    })
}

/// All examples of a corpus in corpus order, each tweet's event example(s)
/// before its slot examples.
pub fn build_all(corpus: &Corpus, bank: &QuestionBank, mode: EventQuestions) -> Result<Vec<Example>, SeqgenError> {
    let per_tweet = match mode {
        EventQuestions::OwnEvent => 1,
        EventQuestions::All => EventType::ALL.len(),
    };
    let mut out = Vec::with_capacity(corpus.stats().slots + per_tweet * corpus.len());
    for tweet in corpus.tweets() {
        match mode {
            EventQuestions::OwnEvent => out.push(build_event_example(tweet, tweet.event, bank)?),
            EventQuestions::All => {
                for asked in EventType::ALL {
                    let mut example = build_event_example(tweet, asked, bank)?;
                    example.key.slot_name = Some(asked.as_str().to_owned());
                    out.push(example);
                }
            }
        }
        for slot in &tweet.slots {
            out.push(build_slot_example(tweet, slot, corpus.policy())?);
        }
    }
    Ok(out)
}

/// Longest source and target under whitespace tokenization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LengthProfile {
    pub examples: usize,
    pub max_source_tokens: usize,
    pub max_target_tokens: usize,
}

impl LengthProfile {
    /// Profile of the union of the two example sets.
    pub fn merge(self, other: LengthProfile) -> LengthProfile {
        LengthProfile {
            examples: self.examples + other.examples,
            max_source_tokens: self.max_source_tokens.max(other.max_source_tokens),
            max_target_tokens: self.max_target_tokens.max(other.max_target_tokens),
        }
    }
}

pub fn whitespace_tokens(s: &str) -> usize {
    s.split_whitespace().count()
}

pub fn profile_lengths<'a>(examples: impl IntoIterator<Item = &'a Example>) -> LengthProfile {
    examples.into_iter().fold(LengthProfile::default(), |acc, ex| {
        acc.merge(LengthProfile {
            examples: 1,
            max_source_tokens: whitespace_tokens(&ex.source),
            max_target_tokens: whitespace_tokens(&ex.target),
        })
    })
}

pub fn write_examples<W: Write>(mut out: W, examples: &[Example]) -> io::Result<()> {
    for example in examples {
        serde_json::to_writer(&mut out, example)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum ReadExamplesError {
    #[error("line {line}: {source}")]
    Malformed {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn read_examples<R: BufRead>(input: R) -> Result<Vec<Example>, ReadExamplesError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| ReadExamplesError::Malformed { line: i + 1, source })?);
    }
    Ok(out)
}
