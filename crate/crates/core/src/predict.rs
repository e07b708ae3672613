//! Raw predictions: prediction files, the remote generation service, and
//! alignment against corpus slots.
//!
//! Prediction files hold one `{"tweet_id": str, "slot": str, "text": str}`
//! record per line. The generation service accepts `POST /generate` with
//! `{"sources": [str]}` and answers `{"predictions": [str]}` in the same
//! order.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::seqgen::{Example, ExampleKind};

/// Environment variable consulted for the generation endpoint.
pub const ENDPOINT_ENV: &str = "SLOTFORGE_GEN_ENDPOINT";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PredictionKey {
    pub tweet_id: String,
    pub slot: String,
}

impl PredictionKey {
    pub fn new(tweet_id: impl Into<String>, slot: impl Into<String>) -> Self {
        Self {
            tweet_id: tweet_id.into(),
            slot: slot.into(),
        }
    }
}

impl std::fmt::Display for PredictionKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.tweet_id, self.slot)
    }
}

/// A generated answer for one slot question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPrediction {
    pub tweet_id: String,
    pub slot: String,
    pub text: String,
}

impl RawPrediction {
    pub fn key(&self) -> PredictionKey {
        PredictionKey::new(&self.tweet_id, &self.slot)
    }
}

#[derive(Debug, Error)]
pub enum PredictionFileError {
    #[error("line {line}: malformed prediction: {source}")]
    Malformed {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: duplicate prediction for `{key}` (first on line {first_line})")]
    DuplicateKey {
        key: PredictionKey,
        first_line: usize,
        line: usize,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn read_predictions<R: BufRead>(input: R) -> Result<Vec<RawPrediction>, PredictionFileError> {
    let mut out = Vec::new();
    let mut seen: HashMap<PredictionKey, usize> = HashMap::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let prediction: RawPrediction =
            serde_json::from_str(&line).map_err(|source| PredictionFileError::Malformed { line: line_no, source })?;
        let key = prediction.key();
        if let Some(&first_line) = seen.get(&key) {
            return Err(PredictionFileError::DuplicateKey {
                key,
                first_line,
                line: line_no,
            });
        }
        seen.insert(key, line_no);
        out.push(prediction);
    }
    Ok(out)
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<RawPrediction>, PredictionFileError> {
    read_predictions(BufReader::new(File::open(path)?))
}

pub fn write_predictions<W: Write>(mut out: W, predictions: &[RawPrediction]) -> io::Result<()> {
    for prediction in predictions {
        serde_json::to_writer(&mut out, prediction)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct GenerationRequest<'a> {
    pub sources: &'a [String],
}

#[derive(Debug, Deserialize)]
pub struct GenerationResponse {
    pub predictions: Vec<String>,
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("batch size must be positive")]
    ZeroBatchSize,
    #[error("example `{0:?}` is not a slot example")]
    NotSlotExample(crate::seqgen::ExampleKey),
    #[error("batch {batch} ({} .. {}): transport failure after {attempts} attempt(s): {message}", keys.first().map(ToString::to_string).unwrap_or_default(), keys.last().map(ToString::to_string).unwrap_or_default())]
    Transport {
        batch: usize,
        keys: Vec<PredictionKey>,
        attempts: u32,
        message: String,
    },
    #[error("batch {batch}: service answered HTTP {status}: {body}")]
    Status {
        batch: usize,
        keys: Vec<PredictionKey>,
        status: u16,
        body: String,
    },
    #[error("batch {batch}: sent {expected} sources, received {received} predictions")]
    LengthMismatch {
        batch: usize,
        keys: Vec<PredictionKey>,
        expected: usize,
        received: usize,
    },
    #[error("batch {batch}: undecodable response: {message}")]
    Decode {
        batch: usize,
        keys: Vec<PredictionKey>,
        message: String,
    },
}

/// Blocking client for the generation service.
#[derive(Debug, Clone)]
pub struct GenerationClient {
    url: String,
    timeout: Duration,
    retries: u32,
    backoff: Duration,
    bearer_token: Option<String>,
    max_in_flight: usize,
}

impl GenerationClient {
    /// `endpoint` is the service base URL; `/generate` is appended unless
    /// already present.
    pub fn new(endpoint: &str) -> Self {
        let trimmed = endpoint.trim_end_matches('/');
        let url = if trimmed.ends_with("/generate") {
            trimmed.to_owned()
        } else {
            format!("{trimmed}/generate")
        };
        Self {
            url,
            timeout: Duration::from_secs(120),
            retries: 3,
            backoff: Duration::from_millis(250),
            bearer_token: None,
            max_in_flight: 1,
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Extra attempts after the first one for transient failures.
    pub fn retries(mut self, retries: u32) -> Self {
        self.retries = retries;
        self
    }

    /// Delay before the first retry; doubles on each further retry.
    pub fn backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn bearer_token(mut self, token: Option<String>) -> Self {
        self.bearer_token = token;
        self
    }

    pub fn max_in_flight(mut self, n: usize) -> Self {
        self.max_in_flight = n.max(1);
        self
    }

    fn agent(&self) -> ureq::Agent {
        ureq::AgentBuilder::new().timeout(self.timeout).build()
    }

    /// Sends one batch, retrying connection failures, 429 and 5xx.
    fn generate(
        &self,
        agent: &ureq::Agent,
        batch: usize,
        keys: &[PredictionKey],
        sources: &[String],
    ) -> Result<Vec<String>, FetchError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            let mut request = agent.post(&self.url);
            if let Some(token) = &self.bearer_token {
                request = request.set("Authorization", &format!("Bearer {token}"));
            }
            let transient = match request.send_json(GenerationRequest { sources }) {
                Ok(response) => {
                    let body: GenerationResponse = response.into_json().map_err(|e| FetchError::Decode {
                        batch,
                        keys: keys.to_vec(),
                        message: e.to_string(),
                    })?;
                    if body.predictions.len() != sources.len() {
                        return Err(FetchError::LengthMismatch {
                            batch,
                            keys: keys.to_vec(),
                            expected: sources.len(),
                            received: body.predictions.len(),
                        });
                    }
                    return Ok(body.predictions);
                }
                Err(ureq::Error::Status(status, response)) => {
                    let error = FetchError::Status {
                        batch,
                        keys: keys.to_vec(),
                        status,
                        body: response.into_string().unwrap_or_default(),
                    };
                    if status != 429 && status < 500 {
                        return Err(error);
                    }
                    error
                }
                Err(ureq::Error::Transport(t)) => FetchError::Transport {
                    batch,
                    keys: keys.to_vec(),
                    attempts: attempt,
                    message: t.to_string(),
                },
            };
            if attempt > self.retries {
                return Err(match transient {
                    FetchError::Transport {
                        batch, keys, message, ..
                    } => FetchError::Transport {
                        batch,
                        keys,
                        attempts: attempt,
                        message,
                    },
                    other => other,
                });
            }
            thread::sleep(self.backoff * 2u32.saturating_pow(attempt - 1));
        }
    }
}

/// Requests a prediction for every slot example, `batch_size` sources per
/// request. Output order follows `examples`. Any failed batch fails the
/// whole fetch.
pub fn fetch_predictions(
    client: &GenerationClient,
    examples: &[Example],
    batch_size: usize,
) -> Result<Vec<RawPrediction>, FetchError> {
    if batch_size == 0 {
        return Err(FetchError::ZeroBatchSize);
    }
    let mut keys = Vec::with_capacity(examples.len());
    for example in examples {
        match (&example.key.kind, &example.key.slot_name) {
            (ExampleKind::Slot, Some(slot)) => keys.push(PredictionKey::new(&example.key.tweet_id, slot)),
            _ => return Err(FetchError::NotSlotExample(example.key.clone())),
        }
    }
    if examples.is_empty() {
        return Ok(Vec::new());
    }

    let sources: Vec<String> = examples.iter().map(|e| e.source.clone()).collect();
    let batches: Vec<(usize, &[PredictionKey], &[String])> = keys
        .chunks(batch_size)
        .zip(sources.chunks(batch_size))
        .enumerate()
        .map(|(i, (k, s))| (i, k, s))
        .collect();

    let agent = client.agent();
    let mut texts: Vec<String> = Vec::with_capacity(examples.len());
    for wave in batches.chunks(client.max_in_flight) {
        let results: Vec<Result<Vec<String>, FetchError>> = thread::scope(|scope| {
            let handles: Vec<_> = wave
                .iter()
                .map(|&(batch, k, s)| {
                    let agent = &agent;
                    scope.spawn(move || client.generate(agent, batch, k, s))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("generation worker panicked"))
                .collect()
        });
        for result in results {
            texts.extend(result?);
        }
    }

    Ok(keys
        .into_iter()
        .zip(texts)
        .map(|(key, text)| RawPrediction {
            tweet_id: key.tweet_id,
            slot: key.slot,
            text,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("prediction `{0}` names a tweet that is not in the corpus")]
    UnknownTweet(PredictionKey),
    #[error("prediction `{0}` names a slot the tweet does not have")]
    UnknownSlot(PredictionKey),
    #[error("more than one prediction for `{0}`")]
    Duplicate(PredictionKey),
}

/// Predictions joined to corpus slots.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alignment {
    pub predictions: BTreeMap<PredictionKey, String>,
    /// Slots without a prediction, in corpus order.
    pub missing: Vec<PredictionKey>,
    pub errors: Vec<AlignError>,
}

impl Alignment {
    pub fn get(&self, key: &PredictionKey) -> Option<&str> {
        self.predictions.get(key).map(String::as_str)
    }

    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

pub fn align(predictions: &[RawPrediction], corpus: &Corpus) -> Alignment {
    let index = corpus.index();
    let mut out = Alignment::default();
    for prediction in predictions {
        let key = prediction.key();
        match index.tweet(&key.tweet_id) {
            None => out.errors.push(AlignError::UnknownTweet(key)),
            Some(tweet) if tweet.slot(&key.slot).is_none() => out.errors.push(AlignError::UnknownSlot(key)),
            Some(_) => match out.predictions.entry(key) {
                Entry::Occupied(e) => out.errors.push(AlignError::Duplicate(e.key().clone())),
                Entry::Vacant(e) => {
                    e.insert(prediction.text.clone());
                }
            },
        }
    }
    for tweet in corpus.tweets() {
        for slot in &tweet.slots {
            let key = PredictionKey::new(&tweet.id, &slot.name);
            if !out.predictions.contains_key(&key) {
                out.missing.push(key);
            }
        }
    }
    out
}
