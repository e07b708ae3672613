//! Helpers shared by the integration tests: fixture paths, reference edit
//! distances that share no code with the library, and a generator for
//! randomized corpora with noisy predictions.
#![allow(dead_code)]

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slotforge::corpus::{parse_corpus, AnswerPolicy, Corpus, EventType, SlotAnnotation, Tweet};
use slotforge::RawPrediction;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn fixture_corpus(name: &str) -> Corpus {
    let file = File::open(fixture(name)).expect("fixture exists");
    parse_corpus(BufReader::new(file), &AnswerPolicy::default()).expect("fixture parses")
}

/// Plain recursion over the last characters: delete, insert, or
/// substitute/keep. Exponential; only for short strings.
pub fn brute_levenshtein(a: &[char], b: &[char]) -> usize {
    match (a.split_last(), b.split_last()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let keep = brute_levenshtein(ra, rb) + usize::from(x != y);
            let delete = brute_levenshtein(ra, b) + 1;
            let insert = brute_levenshtein(a, rb) + 1;
            keep.min(delete).min(insert)
        }
    }
}

/// The same recursion, memoized on suffix lengths.
pub fn memo_levenshtein(a: &[char], b: &[char]) -> usize {
    fn go(a: &[char], b: &[char], memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if let Some(&d) = memo.get(&(a.len(), b.len())) {
            return d;
        }
        let d = match (a.split_last(), b.split_last()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                let keep = go(ra, rb, memo) + usize::from(x != y);
                let delete = go(ra, b, memo) + 1;
                let insert = go(a, rb, memo) + 1;
                keep.min(delete).min(insert)
            }
        };
        memo.insert((a.len(), b.len()), d);
        d
    }
    go(a, b, &mut HashMap::new())
}

/// Every string over `alphabet` of length `0..=max_len`.
pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<Vec<char>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * alphabet.len());
        for s in &frontier {
            for &c in alphabet {
                let mut t = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn random_string(rng: &mut impl Rng, alphabet: &[char], max_len: usize) -> String {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

const WORDS: &[&str] = &[
    "my",
    "mom",
    "dad",
    "sister",
    "uncle",
    "nurse",
    "doctor",
    "houston",
    "texas",
    "chicago",
    "lagos",
    "delhi",
    "hospital",
    "school",
    "yesterday",
    "today",
    "two",
    "weeks",
    "days",
    "bleach",
    "lemon",
    "water",
    "mask",
    "vitamin",
    "garlic",
    "the",
    "a",
    "of",
    "in",
    "author",
    "tweet",
    "friend",
    "team",
    "county",
    "state",
];

fn phrase(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(1..=4);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Applies 1..=3 random character edits.
pub fn corrupt(rng: &mut impl Rng, s: &str) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    let alphabet: Vec<char> = "abcdefghijklmnopqrstuvwxyz .,#@".chars().collect();
    for _ in 0..rng.gen_range(1..=3) {
        let op = rng.gen_range(0..3);
        match op {
            0 if !chars.is_empty() => {
                let i = rng.gen_range(0..chars.len());
                chars.remove(i);
            }
            1 if !chars.is_empty() => {
                let i = rng.gen_range(0..chars.len());
                chars[i] = *alphabet.choose(rng).unwrap();
            }
            _ => {
                let i = rng.gen_range(0..=chars.len());
                chars.insert(i, *alphabet.choose(rng).unwrap());
            }
        }
    }
    chars.into_iter().collect()
}

pub struct SyntheticRun {
    pub corpus: Corpus,
    pub raw: Vec<RawPrediction>,
}

/// A random corpus whose gold answers are all candidates, with predictions
/// that are mostly character-corrupted gold answers.
pub fn synthetic_run(seed: u64) -> SyntheticRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let policy = AnswerPolicy::default();
    let n_tweets = rng.gen_range(5..=25);
    let mut tweets = Vec::with_capacity(n_tweets);
    let mut raw = Vec::new();

    for t in 0..n_tweets {
        let id = format!("s{seed}-t{t}");
        let n_slots = rng.gen_range(1..=4);
        let mut slots = Vec::with_capacity(n_slots);
        for s in 0..n_slots {
            let mut candidates: Vec<String> = Vec::new();
            let n_candidates = rng.gen_range(2..=6);
            while candidates.len() < n_candidates {
                let p = phrase(&mut rng);
                if !candidates.iter().any(|c| policy.normalize(c) == policy.normalize(&p)) {
                    candidates.push(p);
                }
            }
            candidates.push("not specified".to_owned());
            let real = candidates.len() - 1;
            let n_gold = rng.gen_range(0..=2.min(real));
            let mut gold_idx: Vec<usize> = rand::seq::index::sample(&mut rng, real, n_gold).into_vec();
            gold_idx.sort_unstable();
            let gold: Vec<String> = gold_idx.iter().map(|&i| candidates[i].clone()).collect();

            let name = format!("slot{s}");
            let answers: Vec<String> = if gold.is_empty() {
                match rng.gen_range(0..3) {
                    0 => vec!["not specified".into()],
                    1 => {
                        let i = rng.gen_range(0..real);
                        vec![corrupt(&mut rng, &candidates[i])]
                    }
                    _ => vec![],
                }
            } else {
                let mut answers = Vec::new();
                for g in &gold {
                    if rng.gen_bool(0.85) {
                        answers.push(if rng.gen_bool(0.7) {
                            corrupt(&mut rng, g)
                        } else {
                            g.clone()
                        });
                    }
                }
                answers
            };
            if rng.gen_bool(0.95) {
                raw.push(RawPrediction {
                    tweet_id: id.clone(),
                    slot: name.clone(),
                    text: answers.join(" ||| "),
                });
            }
            slots.push(SlotAnnotation {
                name,
                question: "what is the answer?".into(),
                candidates,
                gold,
            });
        }
        tweets.push(Tweet {
            id,
            text: format!("synthetic tweet {t}"),
            event: *EventType::ALL.choose(&mut rng).unwrap(),
            slots,
        });
    }

    SyntheticRun {
        corpus: Corpus::from_tweets(tweets, policy),
        raw,
    }
}
