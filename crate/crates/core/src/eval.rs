//! Corpus-level drivers: merge every utterance of a log, score displayed
//! streams, compare a test log against a baseline and sweep one parameter.

use std::io::Write;
use std::str::FromStr;
use std::time::Duration;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::logio::{Kind, UtteranceLog};
use crate::merge::{run_session, MergeParams, MergeSession, RewriteStats};
use crate::metrics::{relative_change, MetricsReport};
use crate::tokens::text_to_words;

#[derive(Debug, Clone)]
pub struct MergedCorpus {
    pub logs: Vec<UtteranceLog>,
    pub stats: Vec<RewriteStats>,
    pub rewrite_times: Vec<Duration>,
}

impl MergedCorpus {
    pub fn total_stats(&self) -> RewriteStats {
        let mut total = RewriteStats::default();
        for s in &self.stats {
            total.absorb(s);
        }
        total
    }

    pub fn timing(&self) -> TimingSummary {
        TimingSummary::from_durations(&self.rewrite_times)
    }
}

pub fn merge_corpus(logs: &[UtteranceLog], params: &MergeParams) -> Result<MergedCorpus> {
    params.validate()?;
    let mut merged = MergedCorpus {
        logs: Vec::with_capacity(logs.len()),
        stats: Vec::with_capacity(logs.len()),
        rewrite_times: Vec::new(),
    };
    for log in logs {
        let mut session = MergeSession::new(*params).timed();
        let events = run_session(&mut session, &log.events).map_err(|source| Error::Utterance {
            utterance_id: log.utterance_id.clone(),
            source: Box::new(source),
        })?;
        merged.rewrite_times.extend_from_slice(session.rewrite_times());
        merged.stats.push(session.stats());
        merged.logs.push(UtteranceLog {
            utterance_id: log.utterance_id.clone(),
            reference: log.reference.clone(),
            events,
        });
    }
    Ok(merged)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TimingSummary {
    pub rewrites: usize,
    pub mean_us: f64,
    pub p99_us: f64,
}

impl TimingSummary {
    pub fn from_durations(times: &[Duration]) -> Self {
        if times.is_empty() {
            return Self::default();
        }
        let mut micros: Vec<f64> = times.iter().map(|d| d.as_secs_f64() * 1e6).collect();
        micros.sort_by(f64::total_cmp);
        let rank = ((micros.len() as f64) * 0.99).ceil() as usize;
        Self {
            rewrites: micros.len(),
            mean_us: micros.iter().sum::<f64>() / micros.len() as f64,
            p99_us: micros[rank.clamp(1, micros.len()) - 1],
        }
    }
}

/// `(time_ms, words)` for each displayed partial.
pub type TimedWords = Vec<(u64, Vec<String>)>;

/// Timed causal-origin partials as words, plus the final as words.
pub fn displayed_stream(log: &UtteranceLog) -> (TimedWords, Option<Vec<String>>) {
    let partials = log
        .causal_partials()
        .map(|e| (e.time_ms, text_to_words(&e.text)))
        .collect();
    let final_words = log.final_event().map(|e| text_to_words(&e.text));
    (partials, final_words)
}

pub fn utterance_report(log: &UtteranceLog) -> Result<MetricsReport> {
    let reference = log
        .reference
        .as_deref()
        .ok_or_else(|| Error::MissingReference(vec![log.utterance_id.clone()]))?;
    let (stream, final_words) = displayed_stream(log);
    MetricsReport::evaluate(&stream, final_words.as_deref(), reference).map_err(|source| Error::Utterance {
        utterance_id: log.utterance_id.clone(),
        source: Box::new(source),
    })
}

#[derive(Debug, Clone)]
pub struct CorpusReport {
    pub utterances: Vec<(String, MetricsReport)>,
    pub aggregate: MetricsReport,
}

/// Scores every utterance; fails listing all utterances lacking a reference.
pub fn corpus_report(logs: &[UtteranceLog]) -> Result<CorpusReport> {
    let missing: Vec<String> = logs
        .iter()
        .filter(|l| l.reference.is_none())
        .map(|l| l.utterance_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingReference(missing));
    }
    let utterances = logs
        .iter()
        .map(|log| Ok((log.utterance_id.clone(), utterance_report(log)?)))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = MetricsReport::combine(utterances.iter().map(|(_, r)| r));
    Ok(CorpusReport {
        utterances,
        aggregate,
    })
}

/// Relative changes (percent) of a test report against a baseline, plus the
/// partial latency change in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Delta {
    pub pwer_pct: Option<f64>,
    pub upwr_partials_pct: Option<f64>,
    pub upwr_transition_pct: Option<f64>,
    pub upwr_all_pct: Option<f64>,
    pub final_wer_pct: Option<f64>,
    pub partial_latency_ms: Option<f64>,
}

impl Delta {
    pub fn between(test: &MetricsReport, base: &MetricsReport) -> Self {
        let pct = |t: crate::metrics::Ratio, b: crate::metrics::Ratio| relative_change(t.value(), b.value());
        let latency = match (test.partial_latency.mean_ms(), base.partial_latency.mean_ms()) {
            (Some(t), Some(b)) => Some(t - b),
            _ => None,
        };
        Self {
            pwer_pct: pct(test.pwer, base.pwer),
            upwr_partials_pct: pct(test.upwr.partials, base.upwr.partials),
            upwr_transition_pct: pct(test.upwr.transition, base.upwr.transition),
            upwr_all_pct: pct(test.upwr.all, base.upwr.all),
            final_wer_pct: pct(test.final_wer, base.final_wer),
            partial_latency_ms: latency,
        }
    }
}

/// Structural checks between a merged log and the log it came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PassthroughCheck {
    /// Utterances whose final text or time differs.
    pub changed_finals: Vec<String>,
    /// Utterances whose causal-partial timestamp multiset differs.
    pub shifted_timestamps: Vec<String>,
    /// Utterances present in only one of the two logs.
    pub unmatched: Vec<String>,
}

impl PassthroughCheck {
    pub fn passed(&self) -> bool {
        self.changed_finals.is_empty() && self.shifted_timestamps.is_empty() && self.unmatched.is_empty()
    }
}

pub fn check_passthrough(test: &[UtteranceLog], base: &[UtteranceLog]) -> PassthroughCheck {
    let mut check = PassthroughCheck::default();
    for t in test {
        let Some(b) = base.iter().find(|b| b.utterance_id == t.utterance_id) else {
            check.unmatched.push(t.utterance_id.clone());
            continue;
        };
        if t.final_event() != b.final_event() {
            check.changed_finals.push(t.utterance_id.clone());
        }
        let stamps = |log: &UtteranceLog| {
            let mut v: Vec<u64> = log.causal_partials().map(|e| e.time_ms).collect();
            v.sort_unstable();
            v
        };
        if stamps(t) != stamps(b) {
            check.shifted_timestamps.push(t.utterance_id.clone());
        }
    }
    for b in base {
        if !test.iter().any(|t| t.utterance_id == b.utterance_id) {
            check.unmatched.push(b.utterance_id.clone());
        }
    }
    check
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    TrimT,
    RhoR,
    RecentK,
    WindowM,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" | "t" | "trim-t" => Ok(Self::TrimT),
            "rho_r" | "rho-r" => Ok(Self::RhoR),
            "K" | "k" | "recent-k" => Ok(Self::RecentK),
            "M" | "m" | "window-m" => Ok(Self::WindowM),
            other => Err(Error::InvalidArgument(format!(
                "unknown sweep parameter {other:?}; expected one of T, rho_r, K, M"
            ))),
        }
    }
}

/// Threshold value: a non-negative number or `inf`.
pub fn parse_threshold(s: &str) -> Result<f64> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    s.parse::<f64>()
        .map_err(|_| Error::InvalidArgument(format!("not a threshold: {s:?}")))
}

/// Window value: a positive integer, or `inf`/`none` for no window.
pub fn parse_window(s: &str) -> Result<Option<usize>> {
    let s = s.trim();
    if ["inf", "none", "unlimited"].iter().any(|w| s.eq_ignore_ascii_case(w)) {
        return Ok(None);
    }
    parse_count(s).map(Some)
}

fn parse_count(s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::InvalidArgument(format!("not a non-negative integer: {s:?}")))
}

impl SweepParam {
    pub fn apply(self, base: &MergeParams, value: &str) -> Result<MergeParams> {
        let mut params = *base;
        match self {
            Self::TrimT => params.trim_t = parse_count(value)?,
            Self::RhoR => params.rho_r_threshold = parse_threshold(value)?,
            Self::RecentK => params.recent_k = parse_count(value)?,
            Self::WindowM => params.window_m = parse_window(value)?,
        }
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param_value: String,
    pub pwer: f64,
    pub upwr_partials: f64,
    pub upwr_transition: f64,
    pub upwr_all: f64,
    pub delta_pl_ms: Option<f64>,
    pub final_wer: f64,
}

/// Merges `logs` once per value of `param` (others held at `base`) and
/// scores each merged corpus; latency is relative to the unmerged logs.
pub fn sweep(logs: &[UtteranceLog], param: SweepParam, values: &[String], base: &MergeParams) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    let baseline = corpus_report(logs)?.aggregate;
    values
        .iter()
        .map(|value| {
            let params = param.apply(base, value)?;
            let merged = merge_corpus(logs, &params)?;
            let report = corpus_report(&merged.logs)?.aggregate;
            Ok(SweepRow {
                param_value: value.trim().to_owned(),
                pwer: report.pwer.value(),
                upwr_partials: report.upwr.partials.value(),
                upwr_transition: report.upwr.transition.value(),
                upwr_all: report.upwr.all.value(),
                delta_pl_ms: Delta::between(&report, &baseline).partial_latency_ms,
                final_wer: report.final_wer.value(),
            })
        })
        .collect()
}

/// CSV columns: param_value, pwer, upwr_partials, upwr_transition, upwr_all,
/// delta_pl_ms, final_wer.
pub fn write_sweep_csv(rows: &[SweepRow], out: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Number of finals in a log, used by callers to sanity-check passthrough.
pub fn count_finals(logs: &[UtteranceLog]) -> usize {
    logs.iter()
        .flat_map(|l| &l.events)
        .filter(|e| e.kind == Kind::Final)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::{simulate_corpus, synthetic_references, SimConfig};

    fn corpus(config: &SimConfig) -> Vec<UtteranceLog> {
        simulate_corpus(&synthetic_references(6, 8, 20, 5), config).unwrap()
    }

    #[test]
    fn noise_free_merge_is_identity_on_text() {
        let logs = corpus(&SimConfig::noise_free());
        let merged = merge_corpus(&logs, &MergeParams::default()).unwrap();
        for (m, l) in merged.logs.iter().zip(&logs) {
            let want: Vec<_> = l.causal_partials().map(|e| &e.text).collect();
            let got: Vec<_> = m.causal_partials().map(|e| &e.text).collect();
            assert_eq!(got, want);
        }
        let report = corpus_report(&merged.logs).unwrap().aggregate;
        assert_eq!(report.pwer.numerator, 0);
        assert!(check_passthrough(&merged.logs, &logs).passed());
        assert_eq!(count_finals(&merged.logs), logs.len());
    }

    #[test]
    fn self_comparison_has_zero_deltas() {
        let logs = corpus(&SimConfig { seed: 9, ..SimConfig::default() });
        let report = corpus_report(&logs).unwrap().aggregate;
        let delta = Delta::between(&report, &report);
        assert_eq!(delta.pwer_pct, Some(0.0));
        assert_eq!(delta.upwr_all_pct, Some(0.0));
        assert_eq!(delta.partial_latency_ms, Some(0.0));
    }

    #[test]
    fn passthrough_flags_changed_finals() {
        let logs = corpus(&SimConfig::default());
        let mut tampered = logs.clone();
        tampered[2].events.last_mut().unwrap().text.push_str(" _extra");
        tampered[3].events[0].time_ms += 1;
        let check = check_passthrough(&tampered, &logs);
        assert_eq!(check.changed_finals, vec![logs[2].utterance_id.clone()]);
        assert!(!check.passed());
    }

    #[test]
    fn missing_references_are_listed() {
        let mut logs = corpus(&SimConfig::default());
        logs[1].reference = None;
        logs[4].reference = None;
        match corpus_report(&logs).unwrap_err() {
            Error::MissingReference(ids) => assert_eq!(ids, vec!["syn-0001", "syn-0004"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sweep_rows_and_csv() {
        let logs = corpus(&SimConfig::default());
        let values: Vec<String> = ["0", "0.5", "inf"].iter().map(|s| s.to_string()).collect();
        let rows = sweep(&logs, SweepParam::RhoR, &values, &MergeParams::default()).unwrap();
        assert_eq!(rows.len(), 3);
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("param_value,pwer,upwr_partials,upwr_transition,upwr_all,delta_pl_ms,final_wer\n"));
        assert_eq!(text.lines().count(), 4);
        assert!(sweep(&logs, SweepParam::RhoR, &[], &MergeParams::default()).is_err());
    }

    #[test]
    fn parameter_parsing() {
        assert_eq!("rho_r".parse::<SweepParam>().unwrap(), SweepParam::RhoR);
        assert!("P".parse::<SweepParam>().is_err());
        assert_eq!(parse_threshold("inf").unwrap(), f64::INFINITY);
        assert_eq!(parse_threshold("0.25").unwrap(), 0.25);
        assert_eq!(parse_window("none").unwrap(), None);
        assert_eq!(parse_window("25").unwrap(), Some(25));
        assert!(SweepParam::WindowM.apply(&MergeParams::default(), "0").is_err());
        assert!(SweepParam::RhoR.apply(&MergeParams::default(), "-1").is_err());
    }

    #[test]
    fn timing_summary() {
        let times: Vec<Duration> = (1..=100).map(Duration::from_micros).collect();
        let t = TimingSummary::from_durations(&times);
        assert_eq!(t.rewrites, 100);
        assert!((t.mean_us - 50.5).abs() < 1e-9);
        assert!((t.p99_us - 99.0).abs() < 1e-9);
        assert_eq!(TimingSummary::from_durations(&[]), TimingSummary::default());
    }
}
