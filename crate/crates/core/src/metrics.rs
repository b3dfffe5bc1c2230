//! Quality and stability of a partial-result stream against a reference.
//!
//! All measures work on whole words. Every ratio keeps its numerator and
//! denominator so corpus aggregates are micro-averages of the per-utterance
//! counts.

use serde::{Deserialize, Serialize};

use crate::align::{align_slices, EditOp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub numerator: u64,
    pub denominator: u64,
}

impl Ratio {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        Self {
            numerator,
            denominator,
        }
    }

    /// 0 when the denominator is 0.
    pub fn value(&self) -> f64 {
        if self.denominator == 0 {
            0.0
        } else {
            self.numerator as f64 / self.denominator as f64
        }
    }

    fn add(self, other: Ratio) -> Ratio {
        Ratio::new(self.numerator + other.numerator, self.denominator + other.denominator)
    }
}

/// Sum of stabilized appearance times and the number of words behind it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Latency {
    pub total_ms: u64,
    pub words: u64,
}

impl Latency {
    /// Mean appearance time, `None` when no word ever stabilized.
    pub fn mean_ms(&self) -> Option<f64> {
        (self.words > 0).then(|| self.total_ms as f64 / self.words as f64)
    }
}

/// Edit distance of `partial` to its best-matching reference prefix, and the
/// length of that prefix (longest on ties).
pub fn partial_prefix_errors<S: PartialEq>(partial: &[S], reference: &[S]) -> (usize, usize) {
    let outcome = align_slices(partial, reference);
    (outcome.best_cost, outcome.best_j)
}

/// Micro-averaged partial WER: total prefix errors over total matched
/// reference words.
pub fn pwer<S: PartialEq>(partials: &[Vec<S>], reference: &[S]) -> Ratio {
    partials.iter().fold(Ratio::default(), |acc, partial| {
        let (errors, matched) = partial_prefix_errors(partial, reference);
        acc.add(Ratio::new(errors as u64, matched as u64))
    })
}

/// Reference positions matched exactly by `partial` under its prefix alignment.
fn correct_positions<S: PartialEq>(partial: &[S], reference: &[S]) -> Vec<usize> {
    let outcome = align_slices(partial, reference);
    let mut j = 0;
    let mut positions = Vec::new();
    for op in outcome.path {
        match op {
            EditOp::Correct => {
                positions.push(j);
                j += 1;
            }
            EditOp::Substitute | EditOp::Delete => j += 1,
            EditOp::Insert => {}
        }
    }
    positions
}

/// Stabilized appearance times of the words correct in the last partial.
///
/// A word's time is that of the earliest partial from which on it stays
/// correct at its aligned reference position. `None` for an empty stream.
pub fn partial_latency<S: PartialEq>(stream: &[(u64, Vec<S>)], reference: &[S]) -> Option<Latency> {
    if stream.is_empty() {
        return None;
    }
    let mut stable_since: Vec<Option<u64>> = vec![None; reference.len()];
    let mut last = Vec::new();
    for (time_ms, partial) in stream {
        let correct = correct_positions(partial, reference);
        let mut is_correct = vec![false; reference.len()];
        for &p in &correct {
            is_correct[p] = true;
        }
        for (p, since) in stable_since.iter_mut().enumerate() {
            if !is_correct[p] {
                *since = None;
            } else if since.is_none() {
                *since = Some(*time_ms);
            }
        }
        last = correct;
    }
    let times: Vec<u64> = last.iter().filter_map(|&p| stable_since[p]).collect();
    Some(Latency {
        total_ms: times.iter().sum(),
        words: times.len() as u64,
    })
}

fn common_prefix_len<S: PartialEq>(a: &[S], b: &[S]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Unstable partial word ratio: words of each result not kept as a prefix
/// of the next result, over all words of every result but the last.
pub fn upwr<S: PartialEq>(results: &[Vec<S>]) -> Ratio {
    results.windows(2).fold(Ratio::default(), |acc, pair| {
        let len = pair[0].len();
        let unstable = len - common_prefix_len(&pair[0], &pair[1]);
        acc.add(Ratio::new(unstable as u64, len as u64))
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpwrSplit {
    pub partials: Ratio,
    pub transition: Ratio,
    pub all: Ratio,
}

/// UPWR over the partials alone, the last-partial-to-final transition, and
/// the partials followed by the final.
pub fn upwr_three_way<S: PartialEq + Clone>(partials: &[Vec<S>], final_words: &[S]) -> UpwrSplit {
    let transition = match partials.last() {
        Some(last) => upwr(&[last.clone(), final_words.to_vec()]),
        None => Ratio::default(),
    };
    let mut all = partials.to_vec();
    all.push(final_words.to_vec());
    UpwrSplit {
        partials: upwr(partials),
        transition,
        all: upwr(&all),
    }
}

/// Word error count over reference length.
pub fn wer<S: PartialEq>(hypothesis: &[S], reference: &[S]) -> Result<Ratio> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let grid = crate::align::CostGrid::build(hypothesis, reference);
    Ok(Ratio::new(
        grid.get(hypothesis.len(), reference.len()) as u64,
        reference.len() as u64,
    ))
}

/// Metrics of one displayed stream (or a corpus aggregate of them).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub pwer: Ratio,
    pub partial_latency: Latency,
    pub upwr: UpwrSplit,
    pub final_wer: Ratio,
    pub partials: u64,
    pub utterances: u64,
}

impl MetricsReport {
    /// Scores timed word partials plus an optional final against `reference`.
    pub fn evaluate(
        stream: &[(u64, Vec<String>)],
        final_words: Option<&[String]>,
        reference: &[String],
    ) -> Result<Self> {
        let partials: Vec<Vec<String>> = stream.iter().map(|(_, w)| w.clone()).collect();
        let upwr = match final_words {
            Some(words) => upwr_three_way(&partials, words),
            None => UpwrSplit {
                partials: upwr(&partials),
                transition: Ratio::default(),
                all: upwr(&partials),
            },
        };
        Ok(Self {
            pwer: pwer(&partials, reference),
            partial_latency: partial_latency(stream, reference).unwrap_or_default(),
            upwr,
            final_wer: wer(final_words.unwrap_or_default(), reference)?,
            partials: partials.len() as u64,
            utterances: 1,
        })
    }

    /// Micro-average: counts are summed.
    pub fn combine<'a>(reports: impl IntoIterator<Item = &'a MetricsReport>) -> Self {
        reports.into_iter().fold(Self::default(), |acc, r| Self {
            pwer: acc.pwer.add(r.pwer),
            partial_latency: Latency {
                total_ms: acc.partial_latency.total_ms + r.partial_latency.total_ms,
                words: acc.partial_latency.words + r.partial_latency.words,
            },
            upwr: UpwrSplit {
                partials: acc.upwr.partials.add(r.upwr.partials),
                transition: acc.upwr.transition.add(r.upwr.transition),
                all: acc.upwr.all.add(r.upwr.all),
            },
            final_wer: acc.final_wer.add(r.final_wer),
            partials: acc.partials + r.partials,
            utterances: acc.utterances + r.utterances,
        })
    }

    pub fn record(&self, scope: &str) -> ReportRecord {
        ReportRecord {
            scope: scope.to_owned(),
            pwer: self.pwer.value(),
            partial_latency_ms: self.partial_latency.mean_ms(),
            upwr_partials: self.upwr.partials.value(),
            upwr_transition: self.upwr.transition.value(),
            upwr_all: self.upwr.all.value(),
            final_wer: self.final_wer.value(),
            pwer_errors: self.pwer.numerator,
            pwer_ref_words: self.pwer.denominator,
            pl_total_ms: self.partial_latency.total_ms,
            pl_words: self.partial_latency.words,
            upwr_partials_changed: self.upwr.partials.numerator,
            upwr_partials_words: self.upwr.partials.denominator,
            upwr_transition_changed: self.upwr.transition.numerator,
            upwr_transition_words: self.upwr.transition.denominator,
            upwr_all_changed: self.upwr.all.numerator,
            upwr_all_words: self.upwr.all.denominator,
            final_errors: self.final_wer.numerator,
            final_ref_words: self.final_wer.denominator,
            partials: self.partials,
            utterances: self.utterances,
        }
    }
}

/// Flat serialization of a [`MetricsReport`]; `scope` is an utterance id or
/// `corpus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub scope: String,
    pub pwer: f64,
    pub partial_latency_ms: Option<f64>,
    pub upwr_partials: f64,
    pub upwr_transition: f64,
    pub upwr_all: f64,
    pub final_wer: f64,
    pub pwer_errors: u64,
    pub pwer_ref_words: u64,
    pub pl_total_ms: u64,
    pub pl_words: u64,
    pub upwr_partials_changed: u64,
    pub upwr_partials_words: u64,
    pub upwr_transition_changed: u64,
    pub upwr_transition_words: u64,
    pub upwr_all_changed: u64,
    pub upwr_all_words: u64,
    pub final_errors: u64,
    pub final_ref_words: u64,
    pub partials: u64,
    pub utterances: u64,
}

/// Relative change in percent; `None` when the baseline is 0 and the test is not.
pub fn relative_change(test: f64, base: f64) -> Option<f64> {
    if base == 0.0 {
        return (test == 0.0).then_some(0.0);
    }
    Some((test - base) / base * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn prefix_errors_examples() {
        assert_eq!(partial_prefix_errors(&w("how are"), &w("how are you")), (0, 2));
        assert_eq!(partial_prefix_errors(&w("haw are"), &w("how are you")), (1, 2));
        assert_eq!(partial_prefix_errors(&w(""), &w("how are you")), (0, 0));
    }

    #[test]
    fn pwer_examples() {
        let reference = w("how are you");
        let exact = vec![w("how"), w("how are"), w("how are you")];
        assert_eq!(pwer(&exact, &reference).value(), 0.0);
        let noisy = vec![w("haw"), w("haw are"), w("how are you")];
        assert_eq!(pwer(&noisy, &reference), Ratio::new(2, 6));
        assert_eq!(pwer::<String>(&[], &reference).value(), 0.0);
    }

    #[test]
    fn latency_examples() {
        let reference = w("a b c");
        assert_eq!(partial_latency(&[(100, w("a b c"))], &reference).unwrap().mean_ms(), Some(100.0));

        let growing = [(100, w("a")), (200, w("a b")), (300, w("a b c"))];
        assert_eq!(partial_latency(&growing, &reference).unwrap().mean_ms(), Some(200.0));

        let flicker = [(100, w("x")), (200, w("x b")), (300, w("a b"))];
        let lat = partial_latency(&flicker, &reference).unwrap();
        // "a" stabilizes at 300, "b" at 200
        assert_eq!((lat.total_ms, lat.words), (500, 2));

        assert!(partial_latency::<String>(&[], &reference).is_none());
        let wrong = [(100, w("x y z"))];
        assert_eq!(partial_latency(&wrong, &reference).unwrap().mean_ms(), None);
    }

    #[test]
    fn upwr_examples() {
        assert_eq!(upwr(&[w("a"), w("a b"), w("a b c")]).value(), 0.0);
        assert_eq!(upwr(&[w("a b"), w("a c")]), Ratio::new(1, 2));
        assert_eq!(upwr(&[w("a b")]).value(), 0.0);
    }

    #[test]
    fn three_way_examples() {
        let fin = w("a b");
        let split = upwr_three_way(&[w("a b"), w("a b")], &fin);
        assert_eq!(
            (split.partials.value(), split.transition.value(), split.all.value()),
            (0.0, 0.0, 0.0)
        );
        let split = upwr_three_way(&[w("a"), w("a c")], &fin);
        assert_eq!(split.partials.value(), 0.0);
        assert_eq!(split.transition, Ratio::new(1, 2));
        assert_eq!(split.all, Ratio::new(1, 3));
    }

    #[test]
    fn wer_examples() {
        assert_eq!(wer(&w("a b c"), &w("a b c")).unwrap().value(), 0.0);
        assert_eq!(wer(&w("a b c"), &w("a x c")).unwrap(), Ratio::new(1, 3));
        assert_eq!(wer(&w(""), &w("a b c d")).unwrap().value(), 1.0);
        assert!(matches!(wer(&w("a"), &w("")), Err(Error::EmptyReference)));
        // appending an identical suffix to both sides keeps the error count
        assert_eq!(wer(&w("a x c z"), &w("a b c z")).unwrap(), Ratio::new(1, 4));
    }

    #[test]
    fn report_combines_counts() {
        let reference = w("a b");
        let stream = vec![(100, w("a")), (200, w("a c"))];
        let r = MetricsReport::evaluate(&stream, Some(&reference), &reference).unwrap();
        assert_eq!(r.pwer, Ratio::new(1, 3));
        assert_eq!(r.upwr.transition, Ratio::new(1, 2));
        let both = MetricsReport::combine([&r, &r]);
        assert_eq!(both.pwer, Ratio::new(2, 6));
        assert_eq!(both.utterances, 2);
        let rec = both.record("corpus");
        assert_eq!((rec.pwer_errors, rec.pwer_ref_words), (2, 6));
        assert_eq!(rec.partial_latency_ms, Some(100.0));
    }

    #[test]
    fn relative_change_handles_zero_base() {
        assert_eq!(relative_change(0.9, 1.0).map(|v| v.round()), Some(-10.0));
        assert_eq!(relative_change(0.0, 0.0), Some(0.0));
        assert_eq!(relative_change(1.0, 0.0), None);
    }
}
