//! Experiment spec files.
//!
//! Same flat `key = value` format as cache configs. Configs are written as
//! `config.<i>.<key>`; indices order the configs and need not be contiguous.
//!
//! ```text
//! experiment = TTEST
//! M = 100
//! trials = 1000
//! seed = 7
//! config.0.model = CEASER_S
//! config.0.s = 64
//! config.0.w = 16
//! config.0.d = 8
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chameleon_core::cache::parse_kv;
use chameleon_core::CacheConfig;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Entropy,
    EvictionRate,
    Ttest,
    PppTpr,
    PppCost,
    VcNoise,
    Trace,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Entropy,
        Experiment::EvictionRate,
        Experiment::Ttest,
        Experiment::PppTpr,
        Experiment::PppCost,
        Experiment::VcNoise,
        Experiment::Trace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Entropy => "ENTROPY",
            Experiment::EvictionRate => "EVICTION_RATE",
            Experiment::Ttest => "TTEST",
            Experiment::PppTpr => "PPP_TPR",
            Experiment::PppCost => "PPP_COST",
            Experiment::VcNoise => "VC_NOISE",
            Experiment::Trace => "TRACE",
        }
    }

    /// Defaults for `(M, trials)`.
    pub fn defaults(self) -> (usize, usize) {
        match self {
            // Replicate chains, eviction samples.
            Experiment::Entropy => (4, 800_000),
            // Experiments, attempts per set.
            Experiment::EvictionRate | Experiment::Ttest => (200, 1000),
            // Victims, PPP rounds per victim.
            Experiment::PppTpr | Experiment::PppCost => (20, 2000),
            Experiment::VcNoise => (20, 200),
            // Unused.
            Experiment::Trace => (1, 1),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let up = s.trim().to_ascii_uppercase().replace('-', "_");
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == up)
            .ok_or_else(|| CliError::Spec(format!("unknown experiment {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub configs: Vec<CacheConfig>,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Remaining experiment-specific keys, e.g. `target_size` or `trace`.
    pub extra: BTreeMap<String, String>,
}

const EXTRA_KEYS: [&str; 7] = [
    "target_size",
    "json",
    "trace",
    "synth",
    "length",
    "warmup",
    "set_factor",
];

impl ExperimentSpec {
    pub fn new(experiment: Experiment, configs: Vec<CacheConfig>) -> Self {
        let (m, trials) = experiment.defaults();
        ExperimentSpec {
            experiment,
            configs,
            m,
            trials,
            seed: 0,
            output: None,
            extra: BTreeMap::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let map = parse_kv(text).map_err(|e| CliError::Spec(e.to_string()))?;
        let experiment: Experiment = map
            .get("experiment")
            .ok_or_else(|| CliError::Spec("missing key \"experiment\"".into()))?
            .parse()?;
        let mut spec = ExperimentSpec::new(experiment, Vec::new());
        let mut configs: BTreeMap<usize, BTreeMap<String, String>> = BTreeMap::new();
        for (k, v) in &map {
            match k.as_str() {
                "experiment" => {}
                "M" | "m" => spec.m = parse_num(k, v)?,
                "trials" => spec.trials = parse_num(k, v)?,
                "seed" => spec.seed = parse_num(k, v)?,
                "output" => spec.output = Some(PathBuf::from(v)),
                _ if EXTRA_KEYS.contains(&k.as_str()) => {
                    spec.extra.insert(k.clone(), v.clone());
                }
                _ => {
                    let rest = k
                        .strip_prefix("config.")
                        .ok_or_else(|| CliError::Spec(format!("unknown key {k:?}")))?;
                    let (idx, field) = rest
                        .split_once('.')
                        .ok_or_else(|| CliError::Spec(format!("bad config key {k:?}")))?;
                    let idx: usize = parse_num(k, idx)?;
                    configs
                        .entry(idx)
                        .or_default()
                        .insert(field.to_string(), v.clone());
                }
            }
        }
        for (i, fields) in configs {
            let c = CacheConfig::from_map(&fields)
                .map_err(|e| CliError::Spec(format!("config.{i}: {e}")))?;
            spec.configs.push(c);
        }
        Ok(spec)
    }

    /// Diagnostics for an otherwise parsed spec; empty when valid.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.configs.is_empty() {
            out.push("config list is empty".to_string());
        }
        if self.m == 0 {
            out.push("M must be at least 1".to_string());
        }
        if self.trials == 0 {
            out.push("trials must be at least 1".to_string());
        }
        for (i, c) in self.configs.iter().enumerate() {
            if let Err(e) = c.validate() {
                out.push(format!("config {i}: {e}"));
            }
            let keyed = c.model.is_keyed();
            match self.experiment {
                Experiment::PppTpr | Experiment::PppCost if !keyed => out.push(format!(
                    "config {i}: {} has no index keys to score profiling against",
                    c.model
                )),
                Experiment::VcNoise if !c.model.has_vc() => {
                    out.push(format!("config {i}: {} has no victim cache", c.model))
                }
                _ => {}
            }
        }
        if self.experiment == Experiment::Trace
            && self.extra.contains_key("trace") == self.extra.contains_key("synth")
        {
            out.push("TRACE needs exactly one of trace or synth".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(CliError::Spec(p.join("; ")))
        }
    }

    pub fn extra_num<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.extra.get(key) {
            Some(v) => parse_num(key, v),
            None => Ok(default),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Spec(format!("{key}={v:?} is not a valid number")))
}
