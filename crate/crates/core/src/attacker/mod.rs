//! Eviction-set construction and evaluation.
//!
//! Profiling code ([`ppp_profile`], [`vc_flush_attack`]) is generic over
//! [`Probe`](crate::cache::Probe) and so only ever learns hit or miss. The
//! evaluator functions in [`evaluate`] take the concrete cache or the IDF and
//! are the only place the victim's target address is read.

pub mod evaluate;
mod ppp;

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::cache::Probe;
use crate::error::{Error, Result};

pub use evaluate::{
    eviction_success_rate, ground_truth_conflicts, warm_snapshot, SuccessParams, TrialReset,
};
pub use ppp::{ppp_profile, vc_flush_attack, FlushReport, PppOutcome, PppParams, ProbeMode};

/// The victim process. The attacker can make it run, not read its secret.
#[derive(Clone, Debug)]
pub struct VictimHandle {
    target: Address,
}

impl VictimHandle {
    pub fn new(target: Address) -> Self {
        VictimHandle { target }
    }

    /// A victim with a fresh uniformly random target.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        VictimHandle::new(Address::random(rng))
    }

    /// Makes the victim access its target.
    pub fn trigger<P: Probe + ?Sized>(&self, cache: &mut P) {
        cache.access(self.target);
    }

    pub(crate) fn target(&self) -> Address {
        self.target
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    Ppp,
    RandomSampling,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Ppp => "PPP",
            Provenance::RandomSampling => "RANDOM_SAMPLING",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "PPP" => Ok(Provenance::Ppp),
            "RANDOM_SAMPLING" => Ok(Provenance::RandomSampling),
            other => Err(Error::Parse(format!("unknown provenance {other:?}"))),
        }
    }
}

/// Ordered, duplicate-free attacker addresses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvictionSet {
    addresses: Vec<Address>,
    pub provenance: Provenance,
}

pub const EVICTION_SET_CSV_HEADER: &str = "address_hex,provenance";

impl EvictionSet {
    pub fn new(addresses: Vec<Address>, provenance: Provenance) -> Result<Self> {
        let mut seen = HashSet::with_capacity(addresses.len());
        if let Some(dup) = addresses.iter().find(|a| !seen.insert(**a)) {
            return Err(Error::Consistency(format!(
                "duplicate address {dup} in eviction set"
            )));
        }
        Ok(EvictionSet {
            addresses,
            provenance,
        })
    }

    pub fn empty(provenance: Provenance) -> Self {
        EvictionSet {
            addresses: Vec::new(),
            provenance,
        }
    }

    pub fn addresses(&self) -> &[Address] {
        &self.addresses
    }

    pub fn len(&self) -> usize {
        self.addresses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty()
    }

    pub fn contains(&self, a: Address) -> bool {
        self.addresses.contains(&a)
    }

    /// The first `n` addresses.
    pub fn prefix(&self, n: usize) -> EvictionSet {
        EvictionSet {
            addresses: self.addresses[..n.min(self.len())].to_vec(),
            provenance: self.provenance,
        }
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{EVICTION_SET_CSV_HEADER}")?;
        for a in &self.addresses {
            writeln!(out, "{},{}", a.to_hex(), self.provenance)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut addresses = Vec::new();
        let mut provenance = None;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if i == 0 {
                if line != EVICTION_SET_CSV_HEADER {
                    return Err(Error::ParseLine {
                        line: 1,
                        msg: format!("expected header {EVICTION_SET_CSV_HEADER:?}"),
                    });
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::ParseLine { line: i + 1, msg };
            let (addr, prov) = line
                .split_once(',')
                .ok_or_else(|| bad("expected two columns".into()))?;
            addresses.push(addr.parse().map_err(|e: Error| bad(e.to_string()))?);
            let p: Provenance = prov.parse().map_err(|e: Error| bad(e.to_string()))?;
            if provenance.is_some_and(|q| q != p) {
                return Err(bad("mixed provenance".into()));
            }
            provenance = Some(p);
        }
        EvictionSet::new(addresses, provenance.unwrap_or(Provenance::RandomSampling))
    }
}

/// Read-access accounting of one profiling run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfilingStats {
    pub total_read_accesses: u64,
    pub collected: usize,
    /// Filled in by the evaluator; see [`ground_truth_conflicts`].
    pub truly_conflicting: usize,
}

impl ProfilingStats {
    /// Fraction of collected addresses that truly conflict.
    pub fn true_positive_rate(&self) -> Option<f64> {
        (self.collected > 0).then(|| self.truly_conflicting as f64 / self.collected as f64)
    }

    /// Attacker reads per truly conflicting address found.
    pub fn cost_per_conflict(&self) -> Option<f64> {
        (self.truly_conflicting > 0)
            .then(|| self.total_read_accesses as f64 / self.truly_conflicting as f64)
    }
}

/// `n` distinct uniformly random addresses.
pub fn random_eviction_set<R: Rng + ?Sized>(rng: &mut R, n: usize) -> EvictionSet {
    let mut seen = HashSet::with_capacity(n);
    let mut addresses = Vec::with_capacity(n);
    while addresses.len() < n {
        let a = Address::random(rng);
        if seen.insert(a) {
            addresses.push(a);
        }
    }
    EvictionSet {
        addresses,
        provenance: Provenance::RandomSampling,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    #[test]
    fn random_sets_are_distinct() {
        let a = random_eviction_set(&mut rng_from(1), 64);
        let b = random_eviction_set(&mut rng_from(2), 64);
        assert_eq!(a.len(), 64);
        assert!(a.addresses().iter().all(|x| !b.contains(*x)));
        assert_eq!(random_eviction_set(&mut rng_from(3), 4 * 16).len(), 64);
    }

    #[test]
    fn duplicates_rejected() {
        let e = EvictionSet::new(vec![Address(1), Address(1)], Provenance::Ppp);
        assert!(e.is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let es = EvictionSet::new(vec![Address(0xab), Address(7)], Provenance::Ppp).unwrap();
        let mut buf = Vec::new();
        es.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "address_hex,provenance\nab,PPP\n7,PPP\n"
        );
        assert_eq!(EvictionSet::read_csv(&buf[..]).unwrap(), es);
    }

    #[test]
    fn csv_errors_carry_line() {
        let text = "address_hex,provenance\nab,PPP\nzz,PPP\n";
        match EvictionSet::read_csv(text.as_bytes()) {
            Err(Error::ParseLine { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stats_json_shape() {
        let s = ProfilingStats {
            total_read_accesses: 10,
            collected: 2,
            truly_conflicting: 1,
        };
        let v = serde_json::to_value(s).unwrap();
        assert_eq!(v["total_read_accesses"], 10);
        assert_eq!(s.true_positive_rate(), Some(0.5));
        assert_eq!(s.cost_per_conflict(), Some(10.0));
    }
}
