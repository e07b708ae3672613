//! Character-level Levenshtein distance and candidate snapping.
//!
//! A generated answer rarely lines up character-for-character with the
//! annotators' candidate spans. [`transm`] maps a free-form answer onto the
//! candidate with the smallest *length-normalized* edit distance, where the
//! raw Levenshtein count is divided by the length of the candidate (not of
//! the prediction). Because of that denominator the normalized distance is
//! asymmetric.
//!
//! All lengths and distances are measured in Unicode scalar values after
//! normalization (NFC, plus lowercasing in [`CaseMode::Uncased`]).
//! Normalized distances are exact rationals so that ties such as `1/3` and
//! `2/6` compare equal.

use std::cmp::Ordering;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::Corpus;
use crate::predict::{PredictionKey, RawPrediction};
use crate::ANSWER_DELIMITER;

/// Exact normalized edit distance.
pub type NormalizedDistance = Ratio<u64>;

/// Whether comparisons ignore letter case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseMode {
    /// Lowercase and NFC-normalize before comparing.
    #[default]
    Uncased,
    /// NFC-normalize only.
    Cased,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditDistanceError {
    #[error("candidate list is empty")]
    NoCandidates,
    #[error("candidate {index} is empty")]
    EmptyCandidate { index: usize },
}

/// Comparison form of `s` under `mode`.
///
/// Idempotent: `normalize(&normalize(s, m), m) == normalize(s, m)`.
pub fn normalize(s: &str, mode: CaseMode) -> String {
    let composed: String = s.nfc().collect();
    match mode {
        CaseMode::Cased => composed,
        // Lowercasing can emit decomposed sequences (e.g. U+0130), so
        // recompose afterwards.
        CaseMode::Uncased => composed.to_lowercase().nfc().collect(),
    }
}

/// A string paired with its comparison form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedText {
    pub original: String,
    pub normalized: String,
}

impl NormalizedText {
    pub fn new(original: impl Into<String>, mode: CaseMode) -> Self {
        let original = original.into();
        let normalized = normalize(&original, mode);
        Self { original, normalized }
    }
}

/// Levenshtein distance between `a` and `b` counted in Unicode scalar
/// values. No normalization is applied.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_slices(&a, &b)
}

/// Levenshtein distance over arbitrary comparable symbols.
pub fn levenshtein_slices<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    // Keep the inner row over the shorter sequence.
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }

    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut cur = vec![0; short.len() + 1];
    for (i, x) in long.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in short.iter().enumerate() {
            let substitution = prev[j] + usize::from(x != y);
            cur[j + 1] = substitution.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// `levenshtein(normalize(p), normalize(c)) / |normalize(c)|`.
pub fn normalized_distance(
    prediction: &str,
    candidate: &str,
    mode: CaseMode,
) -> Result<NormalizedDistance, EditDistanceError> {
    let p: Vec<char> = normalize(prediction, mode).chars().collect();
    let c: Vec<char> = normalize(candidate, mode).chars().collect();
    if c.is_empty() {
        return Err(EditDistanceError::EmptyCandidate { index: 0 });
    }
    Ok(Ratio::new(levenshtein_slices(&p, &c) as u64, c.len() as u64))
}

/// Outcome of snapping one prediction onto a candidate list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapResult {
    /// The winning candidate in its original form.
    pub chosen: String,
    pub chosen_index: usize,
    /// Raw Levenshtein count between the normalized forms.
    pub distance: usize,
    #[serde(with = "ratio_string")]
    pub normalized_distance: NormalizedDistance,
    pub exact: bool,
}

/// Snap `prediction` to the candidate with the smallest normalized distance.
///
/// Ties are broken by smaller raw distance, then by earlier position in the
/// candidate list.
pub fn transm(
    prediction: &str,
    candidates: &[impl AsRef<str>],
    mode: CaseMode,
) -> Result<SnapResult, EditDistanceError> {
    if candidates.is_empty() {
        return Err(EditDistanceError::NoCandidates);
    }
    let p: Vec<char> = normalize(prediction, mode).chars().collect();

    let mut best: Option<(NormalizedDistance, usize, usize)> = None;
    for (index, candidate) in candidates.iter().enumerate() {
        let c: Vec<char> = normalize(candidate.as_ref(), mode).chars().collect();
        if c.is_empty() {
            return Err(EditDistanceError::EmptyCandidate { index });
        }
        let distance = levenshtein_slices(&p, &c);
        let score = Ratio::new(distance as u64, c.len() as u64);
        let better = match &best {
            None => true,
            Some((best_score, best_distance, _)) => match score.cmp(best_score) {
                Ordering::Less => true,
                Ordering::Equal => distance < *best_distance,
                Ordering::Greater => false,
            },
        };
        if better {
            best = Some((score, distance, index));
        }
    }

    let (normalized_distance, distance, chosen_index) = best.expect("non-empty candidates");
    Ok(SnapResult {
        chosen: candidates[chosen_index].as_ref().to_owned(),
        chosen_index,
        distance,
        normalized_distance,
        exact: distance == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("tweet `{0}` is not in the corpus")]
    UnknownTweet(String),
    #[error("tweet `{tweet_id}` has no slot `{slot}`")]
    UnknownSlot { tweet_id: String, slot: String },
    #[error(transparent)]
    Snap(#[from] EditDistanceError),
}

/// A prediction after snapping. A prediction holding several answers joined
/// by the answer delimiter is snapped answer by answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnappedPrediction {
    pub key: PredictionKey,
    pub raw: String,
    pub snaps: Vec<SnapResult>,
}

impl SnappedPrediction {
    /// The snapped answers joined by the answer delimiter, first occurrence
    /// order, duplicates removed.
    pub fn text(&self) -> String {
        let mut seen: Vec<&str> = Vec::with_capacity(self.snaps.len());
        for snap in &self.snaps {
            if !seen.contains(&snap.chosen.as_str()) {
                seen.push(&snap.chosen);
            }
        }
        seen.join(ANSWER_DELIMITER)
    }

    pub fn to_prediction(&self) -> RawPrediction {
        RawPrediction {
            tweet_id: self.key.tweet_id.clone(),
            slot: self.key.slot.clone(),
            text: self.text(),
        }
    }
}

/// Answers contained in a (possibly multi-answer) prediction string. Blank
/// answers are dropped.
pub fn split_answers(text: &str) -> impl Iterator<Item = &str> {
    text.split(ANSWER_DELIMITER).filter(|a| !a.trim().is_empty())
}

/// Snap every prediction against its slot's candidates.
///
/// Output order follows input order; a prediction that cannot be resolved
/// yields an error in its own position without affecting the others.
pub fn transform_run(
    predictions: &[RawPrediction],
    corpus: &Corpus,
    mode: CaseMode,
) -> Vec<(PredictionKey, Result<SnappedPrediction, TransformError>)> {
    let index = corpus.index();
    predictions
        .iter()
        .map(|prediction| {
            let key = prediction.key();
            let result = (|| {
                let tweet = index
                    .tweet(&key.tweet_id)
                    .ok_or_else(|| TransformError::UnknownTweet(key.tweet_id.clone()))?;
                let slot = tweet.slot(&key.slot).ok_or_else(|| TransformError::UnknownSlot {
                    tweet_id: key.tweet_id.clone(),
                    slot: key.slot.clone(),
                })?;
                let snaps = split_answers(&prediction.text)
                    .map(|answer| transm(answer, &slot.candidates, mode))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(SnappedPrediction {
                    key: key.clone(),
                    raw: prediction.text.clone(),
                    snaps,
                })
            })();
            (key, result)
        })
        .collect()
}

/// Serializes a ratio as `"num/den"`.
pub(crate) mod ratio_string {
    use num_rational::Ratio;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&format_args!("{}/{}", r.numer(), r.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<u64>, D::Error> {
        let s = String::deserialize(d)?;
        let (n, m) = s
            .split_once('/')
            .ok_or_else(|| D::Error::custom(format!("expected `num/den`, got `{s}`")))?;
        let n: u64 = n.parse().map_err(D::Error::custom)?;
        let m: u64 = m.parse().map_err(D::Error::custom)?;
        if m == 0 {
            return Err(D::Error::custom("zero denominator"));
        }
        Ok(Ratio::new(n, m))
    }
}
