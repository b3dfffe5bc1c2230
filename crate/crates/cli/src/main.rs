use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use partial_merge::eval::{
    check_passthrough, corpus_report, merge_corpus, parse_threshold, parse_window, sweep, write_sweep_csv,
    CorpusReport, Delta, SweepParam,
};
use partial_merge::logio::{read_log, read_references, write_log};
use partial_merge::simgen::{simulate_corpus, synthetic_references, SimConfig};
use partial_merge::{MergeParams, MetricsReport};

#[derive(Parser)]
#[command(name = "partial-merge", version, about = "Merge causal and cascaded streaming-ASR partial results")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite the causal partials of an event log with the cascaded stream.
    Merge {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: MergeArgs,
    },
    /// Score the displayed (causal-origin) partials and finals of a log.
    Metrics {
        log: PathBuf,
        /// Log to compare against; adds relative changes and passthrough checks.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// JSON-lines report destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a two-stream event log from reference transcripts.
    Simulate {
        #[command(flatten)]
        source: RefSource,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Merge a log once per parameter value and tabulate the metrics as CSV.
    Sweep {
        log: PathBuf,
        /// One of T, rho_r, K, M.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: MergeArgs,
    },
}

#[derive(Args, Clone)]
struct MergeArgs {
    /// Trailing cascaded word pieces dropped before merging.
    #[arg(long, default_value_t = 1)]
    trim_t: usize,
    /// Alignment window, or "inf" for full alignment.
    #[arg(long, default_value = "25")]
    window_m: String,
    #[arg(long, default_value_t = 10)]
    recent_k: usize,
    /// Recent-cost threshold, or "inf".
    #[arg(long, default_value = "0.5")]
    rho_r: String,
    /// Full-cost threshold, or "inf".
    #[arg(long, default_value = "inf")]
    rho_f: String,
}

impl MergeArgs {
    fn params(&self) -> Result<MergeParams> {
        let params = MergeParams {
            trim_t: self.trim_t,
            window_m: parse_window(&self.window_m)?,
            recent_k: self.recent_k,
            rho_r_threshold: parse_threshold(&self.rho_r)?,
            rho_f_threshold: parse_threshold(&self.rho_f)?,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct RefSource {
    /// Reference file: one utterance per line, optionally "id<TAB>words".
    #[arg(long)]
    refs: Option<PathBuf>,
    /// Generate this many synthetic references instead.
    #[arg(long)]
    synthetic: Option<usize>,
}

#[derive(Args)]
struct SimArgs {
    /// JSON simulator config; the flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    interval_ms: Option<u64>,
    #[arg(long)]
    jitter_ms: Option<u64>,
    #[arg(long)]
    delay_ms: Option<u64>,
    #[arg(long)]
    causal_error_rate: Option<f64>,
    #[arg(long)]
    cascaded_error_rate: Option<f64>,
    /// Let each stream's newest word change between partials.
    #[arg(long)]
    non_monotone: bool,
    #[arg(long, default_value_t = 20)]
    min_words: usize,
    #[arg(long, default_value_t = 60)]
    max_words: usize,
}

impl SimArgs {
    fn config(&self) -> Result<SimConfig> {
        let mut config = match &self.config {
            Some(path) => serde_json::from_str(
                &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
            )
            .with_context(|| format!("parsing {}", path.display()))?,
            None => SimConfig::default(),
        };
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.interval_ms {
            config.causal_word_interval_ms = v;
        }
        if let Some(v) = self.jitter_ms {
            config.causal_jitter_ms = v;
        }
        if let Some(v) = self.delay_ms {
            config.cascaded_delay_ms = v;
        }
        if let Some(v) = self.causal_error_rate {
            config.causal_error_rate = v;
        }
        if let Some(v) = self.cascaded_error_rate {
            config.cascaded_error_rate = v;
        }
        if self.non_monotone {
            config.monotone = false;
        }
        config.validate()?;
        Ok(config)
    }
}

fn cmd_merge(input: &Path, out: &Path, params: &MergeArgs) -> Result<()> {
    let params = params.params()?;
    let logs = read_log(input)?;
    let merged = merge_corpus(&logs, &params)?;
    write_log(&merged.logs, out)?;

    let stdout = io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "utterance\tpartials\taccepted\tfallback\trejected\tpassthrough")?;
    for (log, stats) in merged.logs.iter().zip(&merged.stats) {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            log.utterance_id,
            stats.total(),
            stats.accepted,
            stats.fallback,
            stats.rejected,
            stats.passthrough
        )?;
    }
    let total = merged.total_stats();
    writeln!(
        w,
        "total\t{}\t{}\t{}\t{}\t{}",
        total.total(),
        total.accepted,
        total.fallback,
        total.rejected,
        total.passthrough
    )?;
    let timing = merged.timing();
    writeln!(
        w,
        "rewrite time: mean {:.1} us, p99 {:.1} us over {} rewrites",
        timing.mean_us, timing.p99_us, timing.rewrites
    )?;
    Ok(())
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:+.0}%"))
}

fn summary_table(w: &mut dyn Write, test: &MetricsReport, base: Option<&MetricsReport>) -> io::Result<()> {
    writeln!(w, "{:<6} {:>8} {:>8} {:>8} {:>8} {:>10}", "", "part.", "trans.", "all", "PWER", "PL ms")?;
    let row = |w: &mut dyn Write, name: &str, r: &MetricsReport| {
        writeln!(
            w,
            "{:<6} {:>8.4} {:>8.4} {:>8.4} {:>8.2} {:>10.1}",
            name,
            r.upwr.partials.value(),
            r.upwr.transition.value(),
            r.upwr.all.value(),
            r.pwer.value() * 100.0,
            r.partial_latency.mean_ms().unwrap_or(f64::NAN)
        )
    };
    if let Some(base) = base {
        row(w, "Base", base)?;
        row(w, "Test", test)?;
        let d = Delta::between(test, base);
        writeln!(
            w,
            "{:<6} {:>8} {:>8} {:>8} {:>8} {:>10}",
            "Delta",
            pct(d.upwr_partials_pct),
            pct(d.upwr_transition_pct),
            pct(d.upwr_all_pct),
            pct(d.pwer_pct),
            d.partial_latency_ms.map_or_else(|| "n/a".into(), |v| format!("{v:+.1}"))
        )?;
    } else {
        row(w, "Log", test)?;
    }
    Ok(())
}

fn cmd_metrics(log: &Path, baseline: Option<&Path>, out: Option<&Path>) -> Result<bool> {
    let logs = read_log(log)?;
    let report: CorpusReport = corpus_report(&logs)?;
    let base_logs = baseline.map(read_log).transpose()?;
    let base_report = base_logs.as_deref().map(corpus_report).transpose()?;

    let mut sink: Box<dyn Write> = match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    };
    for (id, r) in &report.utterances {
        serde_json::to_writer(&mut sink, &r.record(id))?;
        writeln!(sink)?;
    }
    serde_json::to_writer(&mut sink, &report.aggregate.record("corpus"))?;
    writeln!(sink)?;

    let mut ok = true;
    if let (Some(base_logs), Some(base_report)) = (&base_logs, &base_report) {
        serde_json::to_writer(&mut sink, &report_delta(&report.aggregate, &base_report.aggregate))?;
        writeln!(sink)?;
        let check = check_passthrough(&logs, base_logs);
        serde_json::to_writer(
            &mut sink,
            &serde_json::json!({ "scope": "passthrough", "passed": check.passed(), "check": check }),
        )?;
        writeln!(sink)?;
        if !check.passed() {
            ok = false;
            eprintln!(
                "FAILURE: finals or timestamps differ from the baseline (changed finals: {:?}, shifted timestamps: {:?}, unmatched: {:?})",
                check.changed_finals, check.shifted_timestamps, check.unmatched
            );
        }
    }
    sink.flush()?;
    drop(sink);

    // keep stdout machine-readable when it carries the records
    let mut table: Box<dyn Write> = if out.is_some() {
        Box::new(io::stdout().lock())
    } else {
        Box::new(io::stderr().lock())
    };
    summary_table(table.as_mut(), &report.aggregate, base_report.as_ref().map(|r| &r.aggregate))?;
    Ok(ok)
}

fn report_delta(test: &MetricsReport, base: &MetricsReport) -> serde_json::Value {
    serde_json::json!({ "scope": "delta", "delta": Delta::between(test, base) })
}

fn cmd_simulate(source: &RefSource, sim: &SimArgs, out: &Path) -> Result<()> {
    let config = sim.config()?;
    let refs = match (&source.refs, source.synthetic) {
        (Some(path), _) => read_references(path)?,
        (None, Some(count)) => synthetic_references(count, sim.min_words, sim.max_words, config.seed),
        (None, None) => unreachable!("clap requires one reference source"),
    };
    if let Some((id, _)) = refs.iter().find(|(_, words)| words.is_empty()) {
        bail!("utterance {id} has an empty reference");
    }
    let logs = simulate_corpus(&refs, &config)?;
    write_log(&logs, out)?;
    eprintln!("wrote {} utterances to {}", logs.len(), out.display());
    Ok(())
}

fn cmd_sweep(log: &Path, param: &str, values: &[String], out: &Path, params: &MergeArgs) -> Result<()> {
    let param: SweepParam = param.parse()?;
    let base = params.params()?;
    let logs = read_log(log)?;
    let rows = sweep(&logs, param, values, &base)?;
    write_sweep_csv(&rows, BufWriter::new(File::create(out)?))?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Merge { input, out, params } => cmd_merge(input, out, params).map(|_| true),
        Command::Metrics { log, baseline, out } => cmd_metrics(log, baseline.as_deref(), out.as_deref()),
        Command::Simulate { source, out, sim } => cmd_simulate(source, sim, out).map(|_| true),
        Command::Sweep {
            log,
            param,
            values,
            out,
            params,
        } => cmd_sweep(log, param, values, out, params).map(|_| true),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
