//! The streaming rewriting engine.
//!
//! Cascaded partials are swallowed and remembered; every causal partial is
//! re-emitted at its own timestamp as a composite of the latest cascaded
//! partial and the causal tail. A composite is only adopted when its recent
//! alignment cost passes the gate; otherwise the engine falls back to the last
//! cascaded partial that did pass (hysteresis). Finals pass through untouched.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::align::{self, AlignmentOutcome, EditOp};
use crate::error::{Error, Result};
use crate::tokens::{TokenSeq, Tokenizer, WhitespaceTokenizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    // declaration order is the tie-break order at equal timestamps
    Cascaded,
    Causal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Partial,
    Final,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultEvent {
    pub time_ms: u64,
    pub origin: Origin,
    pub kind: Kind,
    pub text: String,
}

impl ResultEvent {
    pub fn new(time_ms: u64, origin: Origin, kind: Kind, text: impl Into<String>) -> Self {
        Self {
            time_ms,
            origin,
            kind,
            text: text.into(),
        }
    }

    pub fn partial(time_ms: u64, origin: Origin, text: impl Into<String>) -> Self {
        Self::new(time_ms, origin, Kind::Partial, text)
    }

    pub fn final_result(time_ms: u64, text: impl Into<String>) -> Self {
        Self::new(time_ms, Origin::Cascaded, Kind::Final, text)
    }

    /// Processing order: time, then cascaded before causal, then partial
    /// before final.
    pub fn order_key(&self) -> (u64, Origin, Kind) {
        (self.time_ms, self.origin, self.kind)
    }

    pub fn is_causal_partial(&self) -> bool {
        self.origin == Origin::Causal && self.kind == Kind::Partial
    }
}

/// Index of the first event that breaks `(time, origin, kind)` order.
pub fn first_unsorted(events: &[ResultEvent]) -> Option<usize> {
    events
        .windows(2)
        .position(|w| w[0].order_key() > w[1].order_key())
        .map(|i| i + 1)
}

/// Rewriting hyperparameters. Thresholds of `f64::INFINITY` disable a gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeParams {
    /// Trailing cascaded tokens dropped before merging.
    pub trim_t: usize,
    /// Alignment window; `None` aligns the full sequences.
    pub window_m: Option<usize>,
    /// Recent cascaded tokens whose path steps enter the gated cost.
    pub recent_k: usize,
    pub rho_f_threshold: f64,
    pub rho_r_threshold: f64,
}

impl Default for MergeParams {
    fn default() -> Self {
        Self {
            trim_t: 1,
            window_m: Some(25),
            recent_k: 10,
            rho_f_threshold: f64::INFINITY,
            rho_r_threshold: 0.5,
        }
    }
}

impl MergeParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_m == Some(0) {
            return Err(Error::InvalidArgument("window M must be at least 1".into()));
        }
        for (name, value) in [
            ("rho_f", self.rho_f_threshold),
            ("rho_r", self.rho_r_threshold),
        ] {
            if value.is_nan() || value < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} threshold must be non-negative, got {value}"
                )));
            }
        }
        Ok(())
    }

    fn accepts(&self, composite: &Composite) -> bool {
        composite.cost < self.rho_r_threshold && composite.rho_f < self.rho_f_threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Composite {
    /// Error rate over the path steps touching the last `recent_k` cascaded tokens.
    pub cost: f64,
    /// `C(m, n) / m` over the same trimmed and windowed pair.
    pub rho_f: f64,
    pub tokens: TokenSeq,
    pub alignment: AlignmentOutcome,
}

/// Builds the composite of a causal partial with a cascaded partial.
///
/// The cascaded side is trimmed first, then both sides are windowed and
/// aligned. The composite keeps every cascaded token and appends the causal
/// tokens beyond the alignment endpoint.
pub fn create_composite(causal: &TokenSeq, cascaded: &TokenSeq, params: &MergeParams) -> Composite {
    let cascaded = cascaded.trimmed(params.trim_t);
    let m = cascaded.len();
    let offset = align::window_offset(m, causal.len(), params.window_m);
    let alignment = align::align_with_offset(&cascaded, causal, offset);

    let mut out: Vec<String> = Vec::with_capacity(m + causal.len());
    out.extend_from_slice(&cascaded[..offset]);

    // `j` is the 1-based index of the next cascaded token, `i` the 0-based
    // index of the next causal token.
    let recent_floor = m as i64 - params.recent_k as i64;
    let (mut i, mut j) = (offset, offset + 1);
    let (mut errors, mut counted) = (0usize, 0usize);
    for &op in &alignment.path {
        if j as i64 > recent_floor {
            counted += 1;
            errors += usize::from(op.is_error());
        }
        match op {
            EditOp::Correct | EditOp::Substitute => {
                out.push(cascaded[j - 1].clone());
                i += 1;
                j += 1;
            }
            EditOp::Insert => {
                out.push(cascaded[j - 1].clone());
                j += 1;
            }
            EditOp::Delete => i += 1,
        }
    }
    debug_assert_eq!(i, alignment.causal_end());
    out.extend_from_slice(&causal[i..]);

    let cost = if counted == 0 {
        0.0
    } else {
        errors as f64 / counted as f64
    };
    Composite {
        cost,
        rho_f: align::cost_full(&alignment, m - offset),
        tokens: TokenSeq::new(out).expect("inputs hold no empty tokens"),
        alignment,
    }
}

/// Per-utterance hysteresis state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeState {
    pub latest_cascaded_partial: TokenSeq,
    pub latest_partial_used_for_rewriting: TokenSeq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    /// No cascaded partial seen yet; causal text emitted verbatim.
    Passthrough,
    /// Latest cascaded partial passed the gate.
    Accepted,
    /// Gate failed; rewritten with the last accepted cascaded partial.
    Fallback,
    /// Gate failed with nothing to fall back to; causal text emitted verbatim.
    Rejected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rewrite {
    pub text: String,
    pub state: MergeState,
    pub decision: Decision,
}

pub fn rewrite_result<Tk: Tokenizer + ?Sized>(
    causal_text: &str,
    state: &MergeState,
    params: &MergeParams,
    tokenizer: &Tk,
) -> Rewrite {
    let verbatim = |decision| Rewrite {
        text: causal_text.to_owned(),
        state: state.clone(),
        decision,
    };
    if state.latest_cascaded_partial.is_empty() {
        return verbatim(Decision::Passthrough);
    }

    let causal = tokenizer.split(causal_text);
    let attempt = create_composite(&causal, &state.latest_cascaded_partial, params);
    if params.accepts(&attempt) {
        return Rewrite {
            text: tokenizer.join(&attempt.tokens),
            state: MergeState {
                latest_cascaded_partial: state.latest_cascaded_partial.clone(),
                latest_partial_used_for_rewriting: state.latest_cascaded_partial.clone(),
            },
            decision: Decision::Accepted,
        };
    }

    if state.latest_partial_used_for_rewriting.is_empty() {
        return verbatim(Decision::Rejected);
    }
    let fallback = create_composite(&causal, &state.latest_partial_used_for_rewriting, params);
    Rewrite {
        text: tokenizer.join(&fallback.tokens),
        state: state.clone(),
        decision: Decision::Fallback,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteStats {
    pub passthrough: usize,
    pub accepted: usize,
    pub fallback: usize,
    pub rejected: usize,
}

impl RewriteStats {
    fn record(&mut self, decision: Decision) {
        match decision {
            Decision::Passthrough => self.passthrough += 1,
            Decision::Accepted => self.accepted += 1,
            Decision::Fallback => self.fallback += 1,
            Decision::Rejected => self.rejected += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.passthrough + self.accepted + self.fallback + self.rejected
    }

    pub fn absorb(&mut self, other: &RewriteStats) {
        self.passthrough += other.passthrough;
        self.accepted += other.accepted;
        self.fallback += other.fallback;
        self.rejected += other.rejected;
    }
}

/// One utterance worth of merging. Not thread-safe by itself; run one
/// session per utterance.
#[derive(Debug, Clone)]
pub struct MergeSession<Tk = WhitespaceTokenizer> {
    params: MergeParams,
    tokenizer: Tk,
    state: MergeState,
    stats: RewriteStats,
    rewrite_times: Option<Vec<Duration>>,
}

impl MergeSession<WhitespaceTokenizer> {
    pub fn new(params: MergeParams) -> Self {
        Self::with_tokenizer(params, WhitespaceTokenizer)
    }
}

impl<Tk: Tokenizer> MergeSession<Tk> {
    pub fn with_tokenizer(params: MergeParams, tokenizer: Tk) -> Self {
        Self {
            params,
            tokenizer,
            state: MergeState::default(),
            stats: RewriteStats::default(),
            rewrite_times: None,
        }
    }

    /// Records wall time of every rewrite.
    pub fn timed(mut self) -> Self {
        self.rewrite_times = Some(Vec::new());
        self
    }

    pub fn state(&self) -> &MergeState {
        &self.state
    }

    pub fn stats(&self) -> RewriteStats {
        self.stats
    }

    pub fn rewrite_times(&self) -> &[Duration] {
        self.rewrite_times.as_deref().unwrap_or_default()
    }

    pub fn process(&mut self, event: &ResultEvent) -> Result<Option<ResultEvent>> {
        match (event.origin, event.kind) {
            (Origin::Cascaded, Kind::Partial) => {
                self.state.latest_cascaded_partial = self.tokenizer.split(&event.text);
                Ok(None)
            }
            (Origin::Causal, Kind::Partial) => {
                let start = Instant::now();
                let rewrite = rewrite_result(&event.text, &self.state, &self.params, &self.tokenizer);
                if let Some(times) = self.rewrite_times.as_mut() {
                    times.push(start.elapsed());
                }
                self.stats.record(rewrite.decision);
                self.state = rewrite.state;
                Ok(Some(ResultEvent::partial(event.time_ms, Origin::Causal, rewrite.text)))
            }
            (Origin::Cascaded, Kind::Final) => Ok(Some(event.clone())),
            (Origin::Causal, Kind::Final) => Err(Error::CausalFinal {
                time_ms: event.time_ms,
            }),
        }
    }
}

/// Single-step form of [`MergeSession::process`] over an explicit state.
pub fn process_event(
    event: &ResultEvent,
    state: &MergeState,
    params: &MergeParams,
) -> Result<(Option<ResultEvent>, MergeState)> {
    let mut session = MergeSession::new(*params);
    session.state = state.clone();
    let emitted = session.process(event)?;
    Ok((emitted, session.state))
}

/// Merges one utterance's time-ordered events.
pub fn merge_stream(events: &[ResultEvent], params: &MergeParams) -> Result<Vec<ResultEvent>> {
    let mut session = MergeSession::new(*params);
    run_session(&mut session, events)
}

pub fn run_session<Tk: Tokenizer>(
    session: &mut MergeSession<Tk>,
    events: &[ResultEvent],
) -> Result<Vec<ResultEvent>> {
    session.params.validate()?;
    if let Some(index) = first_unsorted(events) {
        return Err(Error::EventsOutOfOrder {
            index,
            time_ms: events[index].time_ms,
        });
    }
    let mut out = Vec::with_capacity(events.len());
    for event in events {
        out.extend(session.process(event)?);
    }
    Ok(out)
}
