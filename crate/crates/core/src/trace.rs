//! Trace-driven miss-rate comparison of cache models.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Zipf};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::cache::{Cache, CacheConfig};
use crate::error::{Error, Result};
use crate::seed::{rng_from, splitmix64};

/// Synthetic workload generators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SynthKind {
    /// Uniform over `universe` distinct lines.
    Uniform { universe: u64 },
    /// Zipf-distributed ranks over `universe` distinct lines.
    Zipf { alpha: f64, universe: u64 },
    /// `working_set` consecutive lines accessed in a loop.
    Loop { working_set: u64 },
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthKind::Uniform { universe } => write!(f, "uniform:{universe}"),
            SynthKind::Zipf { alpha, universe } => write!(f, "zipf:{alpha}:{universe}"),
            SynthKind::Loop { working_set } => write!(f, "loop:{working_set}"),
        }
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    /// `uniform:<universe>`, `zipf:<alpha>:<universe>` or `loop:<working_set>`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::Parse(format!("bad trace generator {s:?}"));
        let num = |t: &str| t.parse::<u64>().map_err(|_| bad());
        match parts.as_slice() {
            [k, u] if k.eq_ignore_ascii_case("uniform") => {
                Ok(SynthKind::Uniform { universe: num(u)? })
            }
            [k, a, u] if k.eq_ignore_ascii_case("zipf") => Ok(SynthKind::Zipf {
                alpha: a.parse().map_err(|_| bad())?,
                universe: num(u)?,
            }),
            [k, w] if k.eq_ignore_ascii_case("loop") => Ok(SynthKind::Loop {
                working_set: num(w)?,
            }),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TraceSource {
    File(PathBuf),
    Synthetic {
        kind: SynthKind,
        length: usize,
        seed: u64,
    },
}

/// Line-granular access sequence. Never empty.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    accesses: Vec<Address>,
    pub source: TraceSource,
}

impl Trace {
    pub fn new(accesses: Vec<Address>, source: TraceSource) -> Result<Self> {
        if accesses.is_empty() {
            return Err(Error::Parse("trace is empty".into()));
        }
        Ok(Trace { accesses, source })
    }

    pub fn accesses(&self) -> &[Address] {
        &self.accesses
    }

    pub fn len(&self) -> usize {
        self.accesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accesses.is_empty()
    }

    pub fn distinct(&self) -> usize {
        let mut v: Vec<u64> = self.accesses.iter().map(|a| a.0).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    }

    /// One lowercase hex line address per line.
    pub fn write<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for a in &self.accesses {
            writeln!(out, "{}", a.to_hex())?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = io::BufWriter::new(fs::File::create(path)?);
        self.write(&mut out)?;
        out.flush()?;
        Ok(())
    }
}

/// Parses trace text: one hex address per line, `#` starts a comment.
pub fn parse_trace(text: &str, source: TraceSource) -> Result<Trace> {
    let mut accesses = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let a = line.parse::<Address>().map_err(|e| Error::ParseLine {
            line: i + 1,
            msg: e.to_string(),
        })?;
        accesses.push(a);
    }
    Trace::new(accesses, source)
}

pub fn load_trace(path: &Path) -> Result<Trace> {
    let text = fs::read_to_string(path)?;
    parse_trace(&text, TraceSource::File(path.to_path_buf()))
}

/// Spreads line numbers over the address space without collisions.
fn scatter(line: u64) -> Address {
    let a = splitmix64(line);
    Address(if a == Address::EMPTY_RAW { 0 } else { a })
}

/// Deterministic synthetic trace.
pub fn synth_trace(kind: SynthKind, length: usize, seed: u64) -> Result<Trace> {
    if length == 0 {
        return Err(Error::config("trace length must be at least 1"));
    }
    let mut rng = rng_from(seed);
    let accesses: Vec<Address> = match kind {
        SynthKind::Uniform { universe } => {
            if universe == 0 {
                return Err(Error::config("universe must be at least 1"));
            }
            (0..length)
                .map(|_| scatter(rng.random_range(0..universe)))
                .collect()
        }
        SynthKind::Zipf { alpha, universe } => {
            if alpha.is_nan() || alpha <= 0.0 {
                return Err(Error::config(format!(
                    "zipf alpha must be > 0, got {alpha}"
                )));
            }
            if universe == 0 {
                return Err(Error::config("universe must be at least 1"));
            }
            let z = Zipf::new(universe as f64, alpha)
                .map_err(|e| Error::config(format!("zipf: {e}")))?;
            (0..length)
                .map(|_| scatter(z.sample(&mut rng) as u64 - 1))
                .collect()
        }
        SynthKind::Loop { working_set } => {
            if working_set == 0 {
                return Err(Error::config("working set must be at least 1"));
            }
            (0..length as u64)
                .map(|i| Address(i % working_set))
                .collect()
        }
    };
    Trace::new(accesses, TraceSource::Synthetic { kind, length, seed })
}

pub const REPORT_CSV_HEADER: &str = "model,accesses,misses,miss_rate,relative";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissRateReport {
    pub model: String,
    pub accesses: u64,
    pub misses: u64,
    pub miss_rate: f64,
    /// Miss rate over the first config's miss rate.
    pub relative: f64,
}

/// Replays `trace` on every config. The first config is the baseline.
pub fn run_trace(trace: &Trace, configs: &[CacheConfig]) -> Result<Vec<MissRateReport>> {
    run_trace_warm(trace, configs, 0)
}

/// Like [`run_trace`], but the first `warmup` accesses are not counted.
pub fn run_trace_warm(
    trace: &Trace,
    configs: &[CacheConfig],
    warmup: usize,
) -> Result<Vec<MissRateReport>> {
    if configs.is_empty() {
        return Err(Error::config("at least one config is required"));
    }
    if warmup >= trace.len() {
        return Err(Error::config(format!(
            "warm-up of {warmup} leaves nothing of a {}-access trace",
            trace.len()
        )));
    }
    let counted: Vec<(String, u64)> = configs
        .par_iter()
        .map(|cfg| {
            let mut cache = Cache::new(cfg.clone())?;
            cache.set_telemetry(false);
            let mut misses = 0u64;
            for (i, &a) in trace.accesses().iter().enumerate() {
                let miss = cache.lookup(a).miss();
                if i >= warmup {
                    misses += miss as u64;
                }
            }
            Ok((cfg.label(), misses))
        })
        .collect::<Result<_>>()?;
    let accesses = (trace.len() - warmup) as u64;
    let base = counted[0].1 as f64 / accesses as f64;
    Ok(counted
        .into_iter()
        .map(|(model, misses)| {
            let miss_rate = misses as f64 / accesses as f64;
            MissRateReport {
                model,
                accesses,
                misses,
                miss_rate,
                relative: relative(miss_rate, base),
            }
        })
        .collect())
}

/// Ratio with 0/0 defined as 1.
fn relative(rate: f64, base: f64) -> f64 {
    if base == 0.0 {
        if rate == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        rate / base
    }
}

pub fn write_reports_csv<W: Write>(out: &mut W, reports: &[MissRateReport]) -> io::Result<()> {
    writeln!(out, "{REPORT_CSV_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6}",
            r.model, r.accesses, r.misses, r.miss_rate, r.relative
        )?;
    }
    Ok(())
}
