use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cache organizations the simulator can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Model {
    /// One set of `s * w` lines, random replacement.
    FullyAssociativeRandom,
    /// Classic set-associative cache, index = low address bits.
    SetAssociative,
    /// Keyed index, one division.
    Ceaser,
    /// Keyed, skewed over `d` divisions (ScatterCache when `d = w`).
    CeaserS,
    /// Skewed cache plus reinserting victim cache.
    Chameleon,
    /// Skewed cache plus victim cache, no reinsertion.
    ChameleonNoReinsert,
    /// Single-division keyed cache plus reinserting victim cache.
    CeaserPlusVc,
}

impl Model {
    pub const ALL: [Model; 7] = [
        Model::FullyAssociativeRandom,
        Model::SetAssociative,
        Model::Ceaser,
        Model::CeaserS,
        Model::Chameleon,
        Model::ChameleonNoReinsert,
        Model::CeaserPlusVc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::FullyAssociativeRandom => "FULLY_ASSOCIATIVE_RANDOM",
            Model::SetAssociative => "SET_ASSOCIATIVE",
            Model::Ceaser => "CEASER",
            Model::CeaserS => "CEASER_S",
            Model::Chameleon => "CHAMELEON",
            Model::ChameleonNoReinsert => "CHAMELEON_NO_REINSERT",
            Model::CeaserPlusVc => "CEASER_PLUS_VC",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Model::FullyAssociativeRandom => "fully associative, random replacement",
            Model::SetAssociative => "set-associative, unkeyed modulo index",
            Model::Ceaser => "keyed index, single division",
            Model::CeaserS => "keyed skewed cache with d divisions",
            Model::Chameleon => "skewed cache with reinserting victim cache",
            Model::ChameleonNoReinsert => "skewed cache with non-reinserting victim cache",
            Model::CeaserPlusVc => "single-division keyed cache with reinserting victim cache",
        }
    }

    pub fn has_vc(self) -> bool {
        matches!(
            self,
            Model::Chameleon | Model::ChameleonNoReinsert | Model::CeaserPlusVc
        )
    }

    pub fn reinserts(self) -> bool {
        matches!(self, Model::Chameleon | Model::CeaserPlusVc)
    }

    /// Models with a keyed index derivation function.
    pub fn is_keyed(self) -> bool {
        !matches!(self, Model::FullyAssociativeRandom | Model::SetAssociative)
    }

    /// Models restricted to a single division.
    pub fn single_division(self) -> bool {
        matches!(
            self,
            Model::FullyAssociativeRandom
                | Model::SetAssociative
                | Model::Ceaser
                | Model::CeaserPlusVc
        )
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase().replace('-', "_");
        Model::ALL
            .into_iter()
            .find(|m| m.name() == up)
            .ok_or_else(|| Error::Parse(format!("unknown model {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Replacement {
    #[default]
    Random,
    /// Available for completeness; leaks access order.
    Lru,
}

impl fmt::Display for Replacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Replacement::Random => "RANDOM",
            Replacement::Lru => "LRU",
        })
    }
}

impl FromStr for Replacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RANDOM" => Ok(Replacement::Random),
            "LRU" => Ok(Replacement::Lru),
            _ => Err(Error::Parse(format!("unknown replacement policy {s:?}"))),
        }
    }
}

/// Geometry and behavior of one cache instance.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheConfig {
    pub model: Model,
    /// Sets per division. Power of two.
    pub s: usize,
    /// Total ways.
    pub w: usize,
    /// Divisions; each holds `w / d` ways.
    pub d: usize,
    /// Victim-cache ways, 0 for models without one.
    pub w_vc: usize,
    pub replacement: Replacement,
    pub seed: u64,
    /// Lookups between automatic reinsertion passes. 0 disables reinsertion.
    pub reinsert_period: u32,
}

const KEYS: [&str; 8] = [
    "model",
    "s",
    "w",
    "d",
    "w_vc",
    "replacement",
    "seed",
    "reinsert_period",
];

impl CacheConfig {
    pub fn new(model: Model, s: usize, w: usize, d: usize, w_vc: usize) -> Self {
        CacheConfig {
            model,
            s,
            w,
            d,
            w_vc,
            replacement: Replacement::Random,
            seed: 0,
            reinsert_period: 1,
        }
    }

    pub fn fully_associative(lines: usize) -> Self {
        CacheConfig::new(Model::FullyAssociativeRandom, 1, lines, 1, 0)
    }

    pub fn set_associative(s: usize, w: usize) -> Self {
        CacheConfig::new(Model::SetAssociative, s, w, 1, 0)
    }

    pub fn ceaser(s: usize, w: usize) -> Self {
        CacheConfig::new(Model::Ceaser, s, w, 1, 0)
    }

    pub fn ceaser_s(s: usize, w: usize, d: usize) -> Self {
        CacheConfig::new(Model::CeaserS, s, w, d, 0)
    }

    pub fn chameleon(s: usize, w: usize, d: usize, w_vc: usize) -> Self {
        CacheConfig::new(Model::Chameleon, s, w, d, w_vc)
    }

    pub fn chameleon_no_reinsert(s: usize, w: usize, d: usize, w_vc: usize) -> Self {
        CacheConfig::new(Model::ChameleonNoReinsert, s, w, d, w_vc)
    }

    pub fn ceaser_plus_vc(s: usize, w: usize, w_vc: usize) -> Self {
        CacheConfig::new(Model::CeaserPlusVc, s, w, 1, w_vc)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replacement(mut self, r: Replacement) -> Self {
        self.replacement = r;
        self
    }

    pub fn with_reinsert_period(mut self, period: u32) -> Self {
        self.reinsert_period = period;
        self
    }

    /// RSC lines, `N = s * w`.
    pub fn lines(&self) -> usize {
        self.s * self.w
    }

    /// Lines the whole structure can hold, victim cache included.
    pub fn capacity(&self) -> usize {
        self.lines() + self.w_vc
    }

    pub fn ways_per_division(&self) -> usize {
        self.w / self.d
    }

    /// Short human label, e.g. `CHAMELEON(s=64,w=8,d=2,vc=4)`.
    pub fn label(&self) -> String {
        if self.model.has_vc() {
            format!(
                "{}(s={},w={},d={},vc={})",
                self.model, self.s, self.w, self.d, self.w_vc
            )
        } else {
            format!("{}(s={},w={},d={})", self.model, self.s, self.w, self.d)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 || !self.s.is_power_of_two() {
            return Err(Error::config(format!(
                "s={} must be a power of two",
                self.s
            )));
        }
        if self.w == 0 {
            return Err(Error::config("w must be at least 1"));
        }
        if self.d == 0 || self.d > self.w {
            return Err(Error::config(format!(
                "d={} must satisfy 1 <= d <= w={}",
                self.d, self.w
            )));
        }
        if !self.w.is_multiple_of(self.d) {
            return Err(Error::config(format!(
                "d={} must divide w={}",
                self.d, self.w
            )));
        }
        if self.model.single_division() && self.d != 1 {
            return Err(Error::config(format!(
                "{} requires d=1, got d={}",
                self.model, self.d
            )));
        }
        if self.model.has_vc() && self.w_vc == 0 {
            return Err(Error::config(format!("{} requires w_vc >= 1", self.model)));
        }
        if !self.model.has_vc() && self.w_vc != 0 {
            return Err(Error::config(format!(
                "{} has no victim cache, got w_vc={}",
                self.model, self.w_vc
            )));
        }
        if self.model == Model::FullyAssociativeRandom && self.replacement != Replacement::Random {
            return Err(Error::config(
                "FULLY_ASSOCIATIVE_RANDOM only supports RANDOM replacement",
            ));
        }
        Ok(())
    }

    /// Flat `key = value` text, one key per line, in a fixed order.
    pub fn to_kv(&self) -> String {
        self.kv_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Same pairs as [`to_kv`](Self::to_kv), comma separated on one line.
    pub fn to_inline(&self) -> String {
        self.kv_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    fn kv_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("model", self.model.to_string()),
            ("s", self.s.to_string()),
            ("w", self.w.to_string()),
            ("d", self.d.to_string()),
            ("w_vc", self.w_vc.to_string()),
            ("replacement", self.replacement.to_string()),
            ("seed", self.seed.to_string()),
            ("reinsert_period", self.reinsert_period.to_string()),
        ]
    }

    /// Parses the flat text format. Accepts newline- or comma-separated
    /// `key=value` pairs and `#` comments. The result is validated.
    pub fn from_kv(text: &str) -> Result<Self> {
        let map = parse_kv(text)?;
        Self::from_map(&map)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        for k in map.keys() {
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::Parse(format!("unknown config key {k:?}")));
            }
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let num = |k: &str| -> Result<Option<usize>> {
            get(k)
                .map(|v| {
                    v.parse::<usize>()
                        .map_err(|e| Error::Parse(format!("{k}={v:?}: {e}")))
                })
                .transpose()
        };
        let model: Model = get("model")
            .ok_or_else(|| Error::Parse("missing key \"model\"".into()))?
            .parse()?;
        let s = num("s")?.ok_or_else(|| Error::Parse("missing key \"s\"".into()))?;
        let w = num("w")?.ok_or_else(|| Error::Parse("missing key \"w\"".into()))?;
        let d = num("d")?.unwrap_or(1);
        let w_vc = num("w_vc")?.unwrap_or(0);
        let replacement = get("replacement")
            .map(str::parse)
            .transpose()?
            .unwrap_or_default();
        let seed = get("seed")
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|e| Error::Parse(format!("seed={v:?}: {e}")))
            })
            .transpose()?
            .unwrap_or(0);
        let reinsert_period = get("reinsert_period")
            .map(|v| {
                v.parse::<u32>()
                    .map_err(|e| Error::Parse(format!("reinsert_period={v:?}: {e}")))
            })
            .transpose()?
            .unwrap_or(1);
        let cfg = CacheConfig {
            model,
            s,
            w,
            d,
            w_vc,
            replacement,
            seed,
            reinsert_period,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl FromStr for CacheConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CacheConfig::from_kv(s)
    }
}

/// Splits flat key-value text into a map. Duplicate keys are an error.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for item in line.split(',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (k, v) = item.split_once('=').ok_or_else(|| Error::ParseLine {
                line: lineno + 1,
                msg: format!("expected key=value, got {item:?}"),
            })?;
            let k = k.trim().to_string();
            if map.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(Error::ParseLine {
                    line: lineno + 1,
                    msg: format!("duplicate key {k:?}"),
                });
            }
        }
    }
    Ok(map)
}
