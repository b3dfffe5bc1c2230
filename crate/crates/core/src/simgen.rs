//! Deterministic two-stream simulator.
//!
//! Word `k` (1-based) of a reference is spoken at `k * causal_word_interval_ms`.
//! The causal stream reveals it right away (plus jitter), the cascaded stream
//! `cascaded_delay_ms` later. Each stream corrupts words independently at its
//! own rate (misrecognized words are split into finer word pieces, as a
//! word-piece model does for out-of-vocabulary spellings); whether and how word `k` is corrupted depends only on
//! `(seed, utterance, stream, k)`, so both streams are stable prefixes of
//! their own full hypotheses unless `monotone` is off.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logio::UtteranceLog;
use crate::merge::{Origin, ResultEvent};
use crate::tokens::{word_to_pieces, WORD_BOUNDARY};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMix {
    pub substitute: f64,
    pub delete: f64,
    pub insert: f64,
}

impl Default for ErrorMix {
    fn default() -> Self {
        Self {
            substitute: 0.7,
            delete: 0.15,
            insert: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub causal_word_interval_ms: u64,
    pub causal_jitter_ms: u64,
    pub cascaded_delay_ms: u64,
    pub causal_error_rate: f64,
    pub cascaded_error_rate: f64,
    pub error_mix: ErrorMix,
    /// When false, the newest word of every partial is re-drawn and may
    /// change once the next partial arrives.
    pub monotone: bool,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            causal_word_interval_ms: 300,
            causal_jitter_ms: 40,
            cascaded_delay_ms: 900,
            causal_error_rate: 0.08,
            cascaded_error_rate: 0.02,
            error_mix: ErrorMix::default(),
            monotone: true,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn noise_free() -> Self {
        Self {
            causal_jitter_ms: 0,
            causal_error_rate: 0.0,
            cascaded_error_rate: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidArgument(msg));
        if self.causal_word_interval_ms == 0 {
            return invalid("word interval must be positive".into());
        }
        let mix = self.error_mix;
        for (name, p) in [
            ("causal_error_rate", self.causal_error_rate),
            ("cascaded_error_rate", self.cascaded_error_rate),
            ("error_mix.substitute", mix.substitute),
            ("error_mix.delete", mix.delete),
            ("error_mix.insert", mix.insert),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        let total = mix.substitute + mix.delete + mix.insert;
        if (total - 1.0).abs() > 1e-9 {
            return invalid(format!("error_mix must sum to 1, got {total}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stream {
    Causal,
    Cascaded,
}

/// Randomness for one `(utterance, stream)` pair, addressable per word.
struct WordSampler {
    rng: ChaCha8Rng,
}

// 64 ChaCha output words per (word, draw) slot
const SLOT_WORDS: u128 = 64;
const TAIL_REDRAW: u128 = 1 << 40;

impl WordSampler {
    fn new(seed: u64, utterance: u64, stream: Stream) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(utterance * 2 + stream as u64);
        Self { rng }
    }

    fn at(&mut self, slot: u128) -> &mut ChaCha8Rng {
        self.rng.set_word_pos(slot * SLOT_WORDS);
        &mut self.rng
    }
}

const FILLERS: &[&str] = &["uh", "the", "a", "and", "um", "of", "so", "to"];
const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

/// Replaces one character with a different letter.
fn perturb(word: &str, rng: &mut impl Rng) -> String {
    let mut chars: Vec<char> = word.chars().collect();
    if chars.is_empty() {
        return "x".into();
    }
    let pos = rng.gen_range(0..chars.len());
    let original = chars[pos];
    let replacement = loop {
        let c = *ALPHABET.choose(rng).unwrap() as char;
        if c != original {
            break c;
        }
    };
    chars[pos] = replacement;
    chars.into_iter().collect()
}

/// Pieces of an out-of-vocabulary word: two-character chunks, so a
/// misrecognized word shares no pieces with its in-vocabulary form.
fn oov_pieces(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let mut pieces: Vec<String> = chars.chunks(2).map(|c| c.iter().collect()).collect();
    pieces[0].insert(0, WORD_BOUNDARY);
    pieces
}

/// Hypothesis word pieces emitted for reference word `word`.
fn corrupt(word: &str, error_rate: f64, mix: &ErrorMix, rng: &mut impl Rng) -> Vec<String> {
    if rng.gen::<f64>() >= error_rate {
        return word_to_pieces(word);
    }
    let draw: f64 = rng.gen();
    if draw < mix.substitute {
        oov_pieces(&perturb(word, rng))
    } else if draw < mix.substitute + mix.delete {
        Vec::new()
    } else {
        let mut pieces = word_to_pieces(word);
        pieces.extend(word_to_pieces(FILLERS.choose(rng).unwrap()));
        pieces
    }
}

fn stream_hypothesis(
    reference: &[String],
    error_rate: f64,
    config: &SimConfig,
    sampler: &mut WordSampler,
) -> Vec<Vec<String>> {
    reference
        .iter()
        .enumerate()
        .map(|(k, word)| corrupt(word, error_rate, &config.error_mix, sampler.at(k as u128)))
        .collect()
}

/// Piece text of the first `count` hypothesis slots, optionally with the
/// newest slot replaced by `tail`.
fn partial_text(per_word: &[Vec<String>], count: usize, tail: Option<Vec<String>>) -> String {
    let mut pieces: Vec<String> = per_word[..count - 1].iter().flatten().cloned().collect();
    pieces.extend(tail.unwrap_or_else(|| per_word[count - 1].clone()));
    pieces.join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub events: Vec<ResultEvent>,
    /// Full causal hypothesis, word-piece text.
    pub causal_hypothesis: String,
    /// Full cascaded hypothesis, word-piece text; also the final result.
    pub cascaded_hypothesis: String,
}

/// Events for one utterance using random streams `0` and `1`.
pub fn generate_streams(reference: &[String], config: &SimConfig) -> Result<SimOutput> {
    generate_utterance(reference, config, 0)
}

/// Events for utterance number `utterance` of a corpus.
pub fn generate_utterance(reference: &[String], config: &SimConfig, utterance: u64) -> Result<SimOutput> {
    config.validate()?;
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let n = reference.len();
    let interval = config.causal_word_interval_ms;
    let mut causal_sampler = WordSampler::new(config.seed, utterance, Stream::Causal);
    let mut cascaded_sampler = WordSampler::new(config.seed, utterance, Stream::Cascaded);
    let causal_words = stream_hypothesis(reference, config.causal_error_rate, config, &mut causal_sampler);
    let cascaded_words = stream_hypothesis(reference, config.cascaded_error_rate, config, &mut cascaded_sampler);

    let final_time = n as u64 * interval + config.cascaded_delay_ms;
    let jitter = config.causal_jitter_ms as i64;
    let mut events = Vec::with_capacity(2 * n + 1);
    let mut last_causal = 0u64;
    for k in 1..=n {
        let offset = if jitter == 0 {
            0
        } else {
            causal_sampler.at(TAIL_REDRAW * 2 + k as u128).gen_range(-jitter..=jitter)
        };
        let t = ((k as u64 * interval) as i64 + offset).max(0) as u64;
        let t = t.max(last_causal).min(final_time);
        last_causal = t;
        let tail = (!config.monotone).then(|| {
            let rng = causal_sampler.at(TAIL_REDRAW + k as u128);
            corrupt(&reference[k - 1], config.causal_error_rate, &config.error_mix, rng)
        });
        events.push(ResultEvent::partial(t, Origin::Causal, partial_text(&causal_words, k, tail)));

        let t = k as u64 * interval + config.cascaded_delay_ms;
        let tail = (!config.monotone).then(|| {
            let rng = cascaded_sampler.at(TAIL_REDRAW + k as u128);
            corrupt(&reference[k - 1], config.cascaded_error_rate, &config.error_mix, rng)
        });
        events.push(ResultEvent::partial(t, Origin::Cascaded, partial_text(&cascaded_words, k, tail)));
    }
    let flatten = |per_word: &[Vec<String>]| {
        let pieces: Vec<String> = per_word.iter().flatten().cloned().collect();
        pieces.join(" ")
    };
    let cascaded_hypothesis = flatten(&cascaded_words);
    events.push(ResultEvent::final_result(final_time, cascaded_hypothesis.clone()));
    events.sort_by_key(ResultEvent::order_key);
    Ok(SimOutput {
        events,
        causal_hypothesis: flatten(&causal_words),
        cascaded_hypothesis,
    })
}

/// Simulates every `(utterance_id, reference)` pair into a log.
pub fn simulate_corpus(references: &[(String, Vec<String>)], config: &SimConfig) -> Result<Vec<UtteranceLog>> {
    references
        .iter()
        .enumerate()
        .map(|(idx, (id, words))| {
            let out = generate_utterance(words, config, idx as u64)?;
            Ok(UtteranceLog {
                utterance_id: id.clone(),
                reference: Some(words.clone()),
                events: out.events,
            })
        })
        .collect()
}

const VOCABULARY: &[&str] = &[
    "the", "quick", "brown", "fox", "jumps", "over", "lazy", "dog", "rosalie", "how", "are", "you",
    "meeting", "tomorrow", "morning", "weather", "forecast", "remind", "message", "send", "call",
    "mother", "father", "station", "library", "question", "answer", "between", "coffee", "kitchen",
    "window", "garden", "yellow", "purple", "orange", "seventeen", "twenty", "hundred", "thousand",
    "please", "thanks", "travel", "airport", "schedule", "dinner", "restaurant", "reservation",
    "music", "play", "volume", "turn", "light", "living", "room", "temperature", "degrees", "outside",
    "river", "mountain", "forest", "ocean", "island", "bridge", "market", "street", "avenue",
    "corner", "building", "office", "computer", "keyboard", "notebook", "pencil", "paper", "letter",
    "number", "address", "birthday", "party", "friday", "saturday", "sunday", "monday", "evening",
    "afternoon", "yesterday", "today", "later", "early", "quickly", "slowly", "carefully", "happy",
    "tired", "hungry", "ready", "finished", "started", "waiting", "running", "walking", "talking",
    "listening", "reading", "writing", "a", "an", "and", "of", "to", "in", "on", "at", "with", "for",
    "from", "is", "was", "will", "can", "should", "would", "it", "we", "they", "she", "he", "i",
    "my", "your", "our", "their", "this", "that", "there", "here", "what", "when", "where", "why",
    "because", "about", "after", "before", "again", "still", "never", "always", "maybe", "really",
];

/// Seeded synthetic reference transcripts with ids `syn-NNNN`.
pub fn synthetic_references(count: usize, min_words: usize, max_words: usize, seed: u64) -> Vec<(String, Vec<String>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (min_words.max(1), max_words.max(min_words.max(1)));
    (0..count)
        .map(|i| {
            let len = rng.gen_range(lo..=hi);
            let words = (0..len)
                .map(|_| (*VOCABULARY.choose(&mut rng).unwrap()).to_owned())
                .collect();
            (format!("syn-{i:04}"), words)
        })
        .collect()
}
