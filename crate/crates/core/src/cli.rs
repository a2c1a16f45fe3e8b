//! Command-line front end: Monte Carlo sampling, exhaustive enumeration,
//! theory tables, end-to-end verification and phase-word search.

pub mod verify;

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::{self, PhaseOrder, TheoryValue};
use crate::bitcomb::{check_qubits, Bipartition, BitString};
use crate::error::{Error, Result};
use crate::purity::{BipartitionTable, FixedPurity, Workspace};
use crate::search::{self, SearchResult};
use crate::states::{enumeration_size, EnsembleKind, EnsembleSpec, PhaseWord, PureState};
use crate::stats::{
    write_histogram_csv, write_jsonl, zscore_report, CumulantSummary, Histogram, HistogramMeta,
    VarianceMode, ZReport,
};

pub const VERSION: &str = concat!("entstats ", env!("CARGO_PKG_VERSION"));

/// Indices per unit of parallel work. Results are merged in block order, so
/// they do not depend on the number of workers.
pub const BLOCK: u64 = 1024;

/// `|z|` bound and relative variance tolerance of the statistical gate.
pub const Z_GATE: f64 = 5.0;
pub const VARIANCE_GATE: f64 = 0.05;

/// Tolerance of exact enumeration matches.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(
    name = "entstats",
    version,
    about = "Purity statistics of random multiqubit states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo estimate of a statistic, with histogram and theory comparison.
    Sample(RunArgs),
    /// Exact population moments over a whole Butson ensemble.
    Enumerate(RunArgs),
    /// Closed-form theory table.
    Theory(RunArgs),
    /// Oracle, identity and enumeration checks; exit status 1 on any failure.
    Verify(RunArgs),
    /// Low-potential search over phase words.
    Search(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Multistart greedy descent (Butson ensembles only).
    Descent,
    /// Best of independent draws.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VarianceArg {
    Sample,
    Population,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Qubit count, or an inclusive range `lo..hi` for `theory`.
    #[arg(long)]
    pub n: Option<String>,
    /// Comma-separated list of haar, hadamard, hypergraph, butson:Q, or `all`.
    #[arg(long)]
    pub ensemble: Option<String>,
    /// `piME`, `piA` (leading half) or `piA:MASK` (decimal, 0b or 0x).
    #[arg(long, default_value = "piME")]
    pub stat: String,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Base RNG stream; each (n, ensemble) pair is offset from it.
    #[arg(long)]
    pub stream: Option<u64>,
    #[arg(long, env = "ENTSTATS_THREADS")]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub bins: usize,
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    /// Output directory, or `-` for standard output.
    #[arg(long, default_value = "-")]
    pub out: String,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_enum)]
    pub variance: Option<VarianceArg>,
    #[arg(long, default_value_t = 64)]
    pub restarts: u64,
    #[arg(long, default_value_t = 1000)]
    pub max_passes: u64,
    #[arg(long, value_enum, default_value = "descent")]
    pub search: SearchMode,
    /// Use `--stream` unchanged for every (n, ensemble) pair.
    #[arg(long)]
    pub shared_stream: bool,
}

/// Quantity evaluated on each state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    /// Purity of the bipartition with mask `A`; `None` means the leading
    /// half `{1, ..., floor(n/2)}`.
    PiA(Option<BitString>),
    PiMe,
}

impl Statistic {
    /// Resolves the default mask for `n` and validates the bipartition.
    pub fn resolve(self, n: u32) -> Result<Self> {
        match self {
            Statistic::PiMe => {
                check_qubits(n, 2)?;
                Ok(self)
            }
            Statistic::PiA(mask) => {
                let bip = match mask {
                    Some(m) => Bipartition::new(n, m)?,
                    None => Bipartition::leading_half(n)?,
                };
                Ok(Statistic::PiA(Some(bip.mask())))
            }
        }
    }

    fn bipartition(self, n: u32) -> Result<Option<Bipartition>> {
        match self.resolve(n)? {
            Statistic::PiA(Some(m)) => Ok(Some(Bipartition::new(n, m)?)),
            _ => Ok(None),
        }
    }

    /// Smaller side of the cut, used by the closed forms.
    fn small_side(self, n: u32) -> Result<u32> {
        Ok(match self.bipartition(n)? {
            Some(b) => b.n_a().min(b.n_abar()),
            None => n / 2,
        })
    }

    /// Default histogram origin: the statistic's minimum on pure states.
    pub fn lower_bound(self, n: u32) -> Result<f64> {
        Ok((-(self.small_side(n)? as f64)).exp2())
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::PiMe => f.write_str("piME"),
            Statistic::PiA(None) => f.write_str("piA"),
            Statistic::PiA(Some(m)) => write!(f, "piA:{:#b}", m.bits()),
        }
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("pime") {
            return Ok(Statistic::PiMe);
        }
        let rest = match t.get(..3) {
            Some(p) if p.eq_ignore_ascii_case("pia") => &t[3..],
            _ => return Err(Error::Config(format!("unknown statistic {s:?}"))),
        };
        if rest.is_empty() {
            return Ok(Statistic::PiA(None));
        }
        let mask = rest
            .strip_prefix(':')
            .ok_or_else(|| Error::Config(format!("unknown statistic {s:?}")))?;
        let parsed = if let Some(b) = mask.strip_prefix("0b") {
            u32::from_str_radix(b, 2)
        } else if let Some(h) = mask.strip_prefix("0x") {
            u32::from_str_radix(h, 16)
        } else {
            mask.parse()
        };
        parsed
            .map(|m| Statistic::PiA(Some(BitString(m))))
            .map_err(|_| Error::Config(format!("bad bipartition mask in {s:?}")))
    }
}

/// Inclusive qubit-count range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NRange {
    pub lo: u32,
    pub hi: u32,
}

impl NRange {
    pub fn single(self) -> Result<u32> {
        if self.lo == self.hi {
            Ok(self.lo)
        } else {
            Err(Error::Config("this command takes a single --n".into()))
        }
    }
}

impl FromStr for NRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad --n {s:?}"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ),
            None => {
                let v = s.trim().parse().map_err(|_| bad())?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(bad());
        }
        Ok(NRange { lo, hi })
    }
}

/// The five ensembles compared by default.
pub fn standard_ensembles() -> Vec<EnsembleKind> {
    vec![
        EnsembleKind::Haar,
        EnsembleKind::Butson(2),
        EnsembleKind::Butson(3),
        EnsembleKind::Butson(4),
        EnsembleKind::HadamardTypical,
    ]
}

pub fn parse_ensembles(s: &str) -> Result<Vec<EnsembleKind>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(standard_ensembles());
    }
    let kinds = s
        .split(',')
        .map(str::parse)
        .collect::<Result<Vec<EnsembleKind>>>()?;
    if kinds.is_empty() {
        return Err(Error::Config("empty ensemble list".into()));
    }
    Ok(kinds)
}

/// RNG stream for one `(n, ensemble)` pair: the base stream in the high 32
/// bits, `n` and the ensemble tag below.
pub fn stream_for(base: u64, n: u32, kind: EnsembleKind) -> u64 {
    (base << 32) | ((n as u64) << 16) | (kind.tag() & 0xffff)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Sample,
    Enumerate,
    Theory,
    Verify,
    Search,
}

/// Validated run parameters. The worker count is deliberately absent: it
/// never changes results.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub n: NRange,
    #[serde(serialize_with = "ser_display_vec")]
    pub ensembles: Vec<EnsembleKind>,
    #[serde(serialize_with = "ser_display")]
    pub statistic: Statistic,
    pub samples: u64,
    pub seed: u64,
    pub stream: u64,
    pub bins: usize,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub out: String,
    pub format: Format,
    pub variance: VarianceMode,
    pub restarts: u64,
    pub max_passes: u64,
    pub search: SearchMode,
    pub shared_stream: bool,
}

fn ser_display<T: fmt::Display, S: serde::Serializer>(
    v: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn ser_display_vec<T: fmt::Display, S: serde::Serializer>(
    v: &[T],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

impl RunConfig {
    pub fn from_args(command: CommandKind, a: &RunArgs) -> Result<Self> {
        let default_n = match command {
            CommandKind::Theory => "2..12",
            CommandKind::Enumerate => "3",
            _ => "6",
        };
        let n: NRange = a.n.as_deref().unwrap_or(default_n).parse()?;
        let default_ens = match command {
            CommandKind::Sample => "haar",
            CommandKind::Enumerate | CommandKind::Search => "butson:2",
            _ => "all",
        };
        let ensembles = parse_ensembles(a.ensemble.as_deref().unwrap_or(default_ens))?;
        let statistic: Statistic = a.stat.parse()?;
        let format = a.format.unwrap_or(match command {
            CommandKind::Theory => Format::Csv,
            _ => Format::Jsonl,
        });
        let variance = match a.variance {
            Some(VarianceArg::Sample) => VarianceMode::Sample,
            Some(VarianceArg::Population) => VarianceMode::Population,
            None if command == CommandKind::Enumerate => VarianceMode::Population,
            None => VarianceMode::Sample,
        };
        let cfg = RunConfig {
            command,
            n,
            ensembles,
            statistic,
            samples: a.samples,
            seed: a.seed,
            stream: a.stream.unwrap_or(0),
            bins: a.bins,
            lo: a.lo,
            hi: a.hi,
            out: a.out.clone(),
            format,
            variance,
            restarts: a.restarts,
            max_passes: a.max_passes,
            search: a.search,
            shared_stream: a.shared_stream,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every module precondition before any work starts.
    pub fn validate(&self) -> Result<()> {
        if !self.shared_stream && self.stream >= 1 << 32 {
            return Err(Error::Config("--stream must be below 2^32".into()));
        }
        match self.command {
            CommandKind::Theory => {
                if self.n.lo < 2 || self.n.hi > analytics::ANALYTIC_MAX_QUBITS {
                    return Err(Error::QubitCount {
                        n: if self.n.lo < 2 { self.n.lo } else { self.n.hi },
                        min: 2,
                        max: analytics::ANALYTIC_MAX_QUBITS,
                    });
                }
            }
            CommandKind::Verify => {}
            CommandKind::Sample | CommandKind::Enumerate | CommandKind::Search => {
                let n = self.n.single()?;
                check_qubits(n, 2)?;
                self.statistic.resolve(n)?;
                for &kind in &self.ensembles {
                    EnsembleSpec::new(kind, n, self.seed, 0)?;
                }
            }
        }
        match self.command {
            CommandKind::Sample => {
                if self.samples < 2 {
                    return Err(Error::Config("--samples must be at least 2".into()));
                }
                let n = self.n.lo;
                Histogram::new(self.hist_lo(n)?, self.hist_hi(), self.bins)?;
            }
            CommandKind::Enumerate => {
                for &kind in &self.ensembles {
                    match kind {
                        EnsembleKind::Butson(q) => {
                            enumeration_size(self.n.lo, q)?;
                        }
                        other => {
                            return Err(Error::Config(format!(
                                "cannot enumerate the {other} ensemble"
                            )));
                        }
                    }
                }
            }
            CommandKind::Search => {
                if self.ensembles.len() != 1 {
                    return Err(Error::Config("search takes exactly one ensemble".into()));
                }
                let kind = self.ensembles[0];
                match (self.search, kind) {
                    (_, EnsembleKind::Haar) => {
                        return Err(Error::Config("search needs a Hadamard ensemble".into()));
                    }
                    (SearchMode::Descent, EnsembleKind::HadamardTypical) => {
                        return Err(Error::Config("descent needs a Butson ensemble".into()));
                    }
                    _ => {}
                }
                if self.restarts == 0 || (self.search == SearchMode::Sample && self.samples == 0) {
                    return Err(Error::Config("search budget must be positive".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn hist_lo(&self, n: u32) -> Result<f64> {
        match self.lo {
            Some(lo) => Ok(lo),
            None => self.statistic.lower_bound(n),
        }
    }

    fn hist_hi(&self) -> f64 {
        self.hi.unwrap_or(1.0)
    }

    pub fn spec(&self, n: u32, kind: EnsembleKind) -> Result<EnsembleSpec> {
        let stream = if self.shared_stream {
            self.stream
        } else {
            stream_for(self.stream, n, kind)
        };
        EnsembleSpec::new(kind, n, self.seed, stream)
    }
}

/// First line of every JSONL artifact.
#[derive(Serialize)]
struct Header<'a> {
    record: &'static str,
    version: &'static str,
    config: &'a RunConfig,
}

fn header(cfg: &RunConfig) -> Header<'_> {
    Header {
        record: "config",
        version: VERSION,
        config: cfg,
    }
}

/// Where artifacts go: standard output, or files inside a directory.
pub struct Sink {
    dir: Option<std::path::PathBuf>,
}

impl Sink {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        if cfg.out == "-" {
            return Ok(Sink { dir: None });
        }
        let dir = Path::new(&cfg.out).to_path_buf();
        fs::create_dir_all(&dir)?;
        let mut f = BufWriter::new(File::create(dir.join("config.json"))?);
        serde_json::to_writer_pretty(&mut f, &header(cfg))?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(Sink { dir: Some(dir) })
    }

    pub fn is_stdout(&self) -> bool {
        self.dir.is_none()
    }

    pub fn open(&self, name: &str) -> Result<Box<dyn Write>> {
        Ok(match &self.dir {
            None => Box::new(io::stdout().lock()),
            Some(d) => Box::new(BufWriter::new(File::create(d.join(name))?)),
        })
    }
}

/// Evaluates the configured statistic with a reusable workspace.
#[derive(Clone, Debug)]
pub enum Evaluator {
    Me(Arc<BipartitionTable>),
    Fixed(FixedPurity),
}

impl Evaluator {
    pub fn new(stat: Statistic, n: u32) -> Result<Self> {
        Ok(match stat.bipartition(n)? {
            Some(b) => Evaluator::Fixed(FixedPurity::new(b)),
            None => Evaluator::Me(BipartitionTable::shared(n)?),
        })
    }

    pub fn eval(&self, state: &PureState, ws: &mut Workspace) -> Result<f64> {
        Ok(match self {
            Evaluator::Me(t) => t.purity_me_with(state, ws)?.value,
            Evaluator::Fixed(f) => f.evaluate(state, ws)?.value,
        })
    }
}

/// Closed-form mean and variance of `stat` under `kind`.
pub fn theory_for(
    kind: EnsembleKind,
    stat: Statistic,
    n: u32,
) -> Result<(TheoryValue, TheoryValue)> {
    let side = stat.small_side(n)?;
    let order = PhaseOrder::from_kind(kind);
    Ok(match (stat, order) {
        (Statistic::PiMe, None) => (analytics::mu_me_haar(n)?, analytics::sigma2_me_haar(n)?),
        (Statistic::PiMe, Some(q)) => (
            analytics::mu_me_hadamard(n)?,
            analytics::sigma2_me_hadamard(n, q)?,
        ),
        (Statistic::PiA(_), None) => (
            analytics::mu_a_haar(n, side)?,
            analytics::sigma2_a_haar(n, side)?,
        ),
        (Statistic::PiA(_), Some(q)) => (
            analytics::mu_a_hadamard(n, side)?,
            analytics::sigma2_a_hadamard(n, side, q)?,
        ),
    })
}

/// Summary and histogram of samples `0..samples` of `spec`, accumulated in
/// blocks of [`BLOCK`] indices on the current rayon pool and merged in
/// block order.
pub fn sample_statistic(
    spec: &EnsembleSpec,
    stat: Statistic,
    samples: u64,
    hist: &Histogram,
) -> Result<(CumulantSummary, Histogram)> {
    let eval = Evaluator::new(stat, spec.n)?;
    let blocks = samples.div_ceil(BLOCK);
    let parts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut ws = Workspace::default();
            let mut s = CumulantSummary::new();
            let mut h = hist.clone();
            for i in b * BLOCK..((b + 1) * BLOCK).min(samples) {
                let v = eval.eval(&spec.sample_at(i), &mut ws)?;
                s.push(v)?;
                h.push(v)?;
            }
            Ok((s, h))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut summary = CumulantSummary::new();
    let mut total = hist.clone();
    for (s, h) in &parts {
        summary = summary.merge(s);
        total.merge(h)?;
    }
    Ok((summary, total))
}

/// Word number `index` in the lexicographic order of
/// [`crate::states::enumerate_phase_words`].
fn phase_word_at_index(n: u32, q: u32, mut index: u64) -> PhaseWord {
    let mut exps = vec![0u32; 1 << n];
    for e in exps.iter_mut().rev() {
        *e = (index % q as u64) as u32;
        index /= q as u64;
    }
    PhaseWord::Discrete {
        n,
        q,
        exponents: exps,
    }
}

/// Moments of `stat` over every `P_q` state on `n` qubits.
pub fn enumerate_statistic(n: u32, q: u32, stat: Statistic) -> Result<CumulantSummary> {
    let total = enumeration_size(n, q)?;
    let eval = Evaluator::new(stat, n)?;
    let parts = (0..total.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut ws = Workspace::default();
            let mut s = CumulantSummary::new();
            for i in b * BLOCK..((b + 1) * BLOCK).min(total) {
                s.push(eval.eval(&phase_word_at_index(n, q, i).to_state(), &mut ws)?)?;
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.iter().fold(CumulantSummary::new(), |a, b| a.merge(b)))
}

#[derive(Serialize)]
struct TheoryRef {
    mean: f64,
    mean_exact: Option<String>,
    variance: f64,
    variance_exact: Option<String>,
}

impl TheoryRef {
    fn new(mean: &TheoryValue, var: &TheoryValue) -> Self {
        Self {
            mean: mean.value,
            mean_exact: mean.exact.as_ref().map(|r| r.to_string()),
            variance: var.value,
            variance_exact: var.exact.as_ref().map(|r| r.to_string()),
        }
    }
}

#[derive(Serialize)]
struct SampleRecord<'a> {
    record: &'static str,
    n: u32,
    ensemble: String,
    statistic: String,
    seed: u64,
    stream: u64,
    summary: &'a CumulantSummary,
    sample_variance: f64,
    population_variance: f64,
    theory: TheoryRef,
    report: &'a ZReport,
    gate_passed: bool,
}

/// Outcome of one `sample` run for one ensemble.
#[derive(Clone, Debug)]
pub struct SampleOutcome {
    pub kind: EnsembleKind,
    pub summary: CumulantSummary,
    pub histogram: Histogram,
    pub report: ZReport,
}

pub fn cmd_sample(cfg: &RunConfig) -> Result<Vec<SampleOutcome>> {
    let n = cfg.n.single()?;
    let stat = cfg.statistic.resolve(n)?;
    let sink = Sink::new(cfg)?;
    let empty = Histogram::new(cfg.hist_lo(n)?, cfg.hist_hi(), cfg.bins)?;
    let mut outcomes = Vec::new();
    let mut lines = Vec::new();
    for &kind in &cfg.ensembles {
        let spec = cfg.spec(n, kind)?;
        let t0 = Instant::now();
        let (summary, histogram) = sample_statistic(&spec, stat, cfg.samples, &empty)?;
        eprintln!(
            "{kind} n={n} {stat}: {} samples in {:.2?}",
            cfg.samples,
            t0.elapsed()
        );
        let (mean, var) = theory_for(kind, stat, n)?;
        let report = zscore_report(&summary, mean.value, var.value, cfg.variance)?;
        let record = SampleRecord {
            record: "summary",
            n,
            ensemble: kind.to_string(),
            statistic: stat.to_string(),
            seed: spec.seed,
            stream: spec.stream,
            summary: &summary,
            sample_variance: summary.sample_variance(),
            population_variance: summary.population_variance(),
            theory: TheoryRef::new(&mean, &var),
            report: &report,
            gate_passed: report.passes(Z_GATE, VARIANCE_GATE),
        };
        lines.push(serde_json::to_string(&record)?);
        let meta = HistogramMeta {
            n,
            ensemble: kind.to_string(),
            statistic: stat.to_string(),
            seed: spec.seed,
            stream: spec.stream,
            samples: cfg.samples,
            version: VERSION.into(),
        };
        if !sink.is_stdout() {
            let name = format!("hist_n{n}_{}.csv", kind.to_string().replace(':', ""));
            write_histogram_csv(sink.open(&name)?, &histogram, &meta)?;
        } else if cfg.format == Format::Csv {
            write_histogram_csv(sink.open("")?, &histogram, &meta)?;
        }
        outcomes.push(SampleOutcome {
            kind,
            summary,
            histogram,
            report,
        });
    }
    if !sink.is_stdout() || cfg.format == Format::Jsonl {
        let mut w = sink.open("summary.jsonl")?;
        write_jsonl(&mut w, &header(cfg))?;
        for l in &lines {
            writeln!(w, "{l}")?;
        }
        w.flush()?;
    }
    Ok(outcomes)
}

/// Exact comparison of an enumerated ensemble with the closed forms.
#[derive(Clone, Debug, Serialize)]
pub struct EnumerationReport {
    pub record: &'static str,
    pub n: u32,
    pub q: u32,
    pub statistic: String,
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
    pub variance_mode: VarianceMode,
    pub min: f64,
    pub max: f64,
    pub theory_mean: f64,
    pub theory_mean_exact: Option<String>,
    pub theory_variance: f64,
    pub theory_variance_exact: Option<String>,
    pub mean_error: f64,
    pub variance_error: f64,
    pub exact_match: bool,
}

pub fn enumeration_report(
    n: u32,
    q: u32,
    stat: Statistic,
    mode: VarianceMode,
) -> Result<EnumerationReport> {
    let stat = stat.resolve(n)?;
    let summary = enumerate_statistic(n, q, stat)?;
    let (mean, var) = theory_for(EnsembleKind::Butson(q), stat, n)?;
    let variance = summary.variance(mode);
    let mean_error = (summary.mean - mean.value).abs();
    let variance_error = (variance - var.value).abs();
    Ok(EnumerationReport {
        record: "enumeration",
        n,
        q,
        statistic: stat.to_string(),
        count: summary.count,
        mean: summary.mean,
        variance,
        variance_mode: mode,
        min: summary.min,
        max: summary.max,
        theory_mean: mean.value,
        theory_mean_exact: mean.exact.as_ref().map(|r| r.to_string()),
        theory_variance: var.value,
        theory_variance_exact: var.exact.as_ref().map(|r| r.to_string()),
        mean_error,
        variance_error,
        exact_match: mean_error < EXACT_TOL && variance_error < EXACT_TOL,
    })
}

pub fn cmd_enumerate(cfg: &RunConfig) -> Result<Vec<EnumerationReport>> {
    let n = cfg.n.single()?;
    let sink = Sink::new(cfg)?;
    let mut reports = Vec::new();
    for &kind in &cfg.ensembles {
        let EnsembleKind::Butson(q) = kind else {
            return Err(Error::Config(format!(
                "cannot enumerate the {kind} ensemble"
            )));
        };
        let t0 = Instant::now();
        reports.push(enumeration_report(n, q, cfg.statistic, cfg.variance)?);
        eprintln!("{kind} n={n}: enumerated in {:.2?}", t0.elapsed());
    }
    let mut w = sink.open("enumerate.jsonl")?;
    write_jsonl(&mut w, &header(cfg))?;
    for r in &reports {
        write_jsonl(&mut w, r)?;
    }
    w.flush()?;
    Ok(reports)
}

/// Theory rows for every `n` in range and every requested ensemble order,
/// preceded by the growth constants.
pub fn theory_table(range: NRange, ensembles: &[EnsembleKind]) -> Result<Vec<TheoryValue>> {
    let orders: Vec<PhaseOrder> = ensembles
        .iter()
        .filter_map(|&k| PhaseOrder::from_kind(k))
        .collect();
    let mut rows: Vec<TheoryValue> = analytics::asymptotics_table(2)?
        .into_iter()
        .filter(|r| r.n.is_none())
        .collect();
    for n in range.lo..=range.hi {
        rows.extend(analytics::theory_rows(n, &orders)?);
    }
    Ok(rows)
}

pub fn cmd_theory(cfg: &RunConfig) -> Result<Vec<TheoryValue>> {
    let sink = Sink::new(cfg)?;
    let rows = theory_table(cfg.n, &cfg.ensembles)?;
    match cfg.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink.open("theory.csv")?);
            for r in &rows {
                w.serialize(r.to_row())?;
            }
            w.flush()?;
        }
        Format::Jsonl => {
            let mut w = sink.open("theory.jsonl")?;
            write_jsonl(&mut w, &header(cfg))?;
            for r in &rows {
                write_jsonl(&mut w, &r.to_row())?;
            }
            w.flush()?;
        }
    }
    Ok(rows)
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Vec<verify::Check>> {
    let checks = verify::run_all(cfg.seed)?;
    let sink = Sink::new(cfg)?;
    if sink.is_stdout() {
        let mut w = io::stdout().lock();
        for c in &checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            writeln!(w, "{status} {}: {}", c.name, c.detail)?;
        }
    } else {
        let mut w = sink.open("verify.jsonl")?;
        write_jsonl(&mut w, &header(cfg))?;
        for c in &checks {
            write_jsonl(&mut w, c)?;
        }
        w.flush()?;
    }
    Ok(checks)
}

pub fn cmd_search(cfg: &RunConfig) -> Result<SearchResult> {
    let n = cfg.n.single()?;
    let spec = cfg.spec(n, cfg.ensembles[0])?;
    let sink = Sink::new(cfg)?;
    let t0 = Instant::now();
    let (runs, best) = match cfg.search {
        SearchMode::Descent => {
            let runs = search::multistart_runs(&spec, cfg.restarts, cfg.max_passes)?;
            let best = search::best_of_runs(&runs);
            (runs, best)
        }
        SearchMode::Sample => {
            let best = search::best_of_sample(&spec, cfg.samples)?;
            (Vec::new(), best)
        }
    };
    eprintln!(
        "search n={n}: best {} (gap {:.3e}) in {:.2?}",
        best.best_value,
        best.gap,
        t0.elapsed()
    );
    let mut w = sink.open("search.jsonl")?;
    write_jsonl(&mut w, &header(cfg))?;
    for r in &runs {
        write_jsonl(&mut w, &r.to_record("restart"))?;
    }
    write_jsonl(&mut w, &best.to_record("best"))?;
    w.flush()?;
    Ok(best)
}

/// Process exit status: 0 ok, 1 failed check, 2 bad configuration or I/O.
pub fn exit_code(result: &Result<bool>) -> i32 {
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(_) => 2,
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Runs one parsed command; `Ok(false)` means a check failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let (kind, args) = match &cli.command {
        Command::Sample(a) => (CommandKind::Sample, a),
        Command::Enumerate(a) => (CommandKind::Enumerate, a),
        Command::Theory(a) => (CommandKind::Theory, a),
        Command::Verify(a) => (CommandKind::Verify, a),
        Command::Search(a) => (CommandKind::Search, a),
    };
    let cfg = RunConfig::from_args(kind, args)?;
    let workers = args.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(Error::Config("--workers must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| match kind {
        CommandKind::Sample => cmd_sample(&cfg).map(|_| true),
        CommandKind::Enumerate => Ok(cmd_enumerate(&cfg)?.iter().all(|r| r.exact_match)),
        CommandKind::Theory => cmd_theory(&cfg).map(|_| true),
        CommandKind::Verify => {
            let checks = cmd_verify(&cfg)?;
            if let Some(c) = checks.iter().find(|c| !c.passed) {
                eprintln!("first failing check: {}", c.name);
            }
            Ok(checks.iter().all(|c| c.passed))
        }
        CommandKind::Search => cmd_search(&cfg).map(|_| true),
    })
}
