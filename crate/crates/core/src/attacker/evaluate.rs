//! Evaluator-side measurements. These read the victim target and IDF keys.

use serde::{Deserialize, Serialize};

use super::{EvictionSet, VictimHandle};
use crate::address::Address;
use crate::cache::{Cache, CacheConfig};
use crate::error::{Error, Result};
use crate::idf::Idf;
use crate::seed::{derive_seed, rng_from};

/// How the cache is reset between eviction attempts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrialReset {
    /// Restore the warm snapshot, so the victim re-primes its line on a
    /// known state every trial.
    #[default]
    Restore,
    /// Carry the state over; the victim only re-accesses its line.
    Continue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessParams {
    pub trials: usize,
    /// Times the attacker walks the eviction set per trial.
    pub passes: usize,
    pub reset: TrialReset,
    pub seed: u64,
}

impl SuccessParams {
    pub fn new(trials: usize, seed: u64) -> Self {
        SuccessParams {
            trials,
            passes: 1,
            reset: TrialReset::Restore,
            seed,
        }
    }
}

/// A full cache with the keys of `config`: `2 * capacity` random lines
/// accessed from empty.
pub fn warm_snapshot(config: &CacheConfig, seed: u64) -> Result<Cache> {
    let mut cache = Cache::new(config.clone())?;
    cache.set_telemetry(false);
    let mut rng = rng_from(seed);
    for _ in 0..2 * cache.capacity() {
        cache.lookup(Address::random(&mut rng));
    }
    Ok(cache)
}

/// Fraction of trials in which the victim's re-access misses after the
/// attacker walked `es`.
pub fn eviction_success_rate(
    snapshot: &Cache,
    es: &EvictionSet,
    victim: &VictimHandle,
    params: &SuccessParams,
) -> Result<f64> {
    if params.trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    let target = victim.target();
    if es.contains(target) {
        return Err(Error::Consistency(format!(
            "eviction set contains the victim target {target}"
        )));
    }
    let mut cache = snapshot.clone();
    cache.set_telemetry(false);
    let mut evicted = 0usize;
    for trial in 0..params.trials {
        if params.reset == TrialReset::Restore || trial == 0 {
            cache.clone_from(snapshot);
            cache.set_telemetry(false);
        }
        cache.reseed(derive_seed(params.seed, trial as u64));
        cache.lookup(target);
        for _ in 0..params.passes {
            for &a in es.addresses() {
                cache.lookup(a);
            }
        }
        evicted += cache.lookup(target).miss() as usize;
    }
    Ok(evicted as f64 / params.trials as f64)
}

/// Whether `a` shares its index with `target` in at least one division.
pub fn conflicts(idf: &Idf, a: Address, target: Address) -> bool {
    (0..idf.divisions()).any(|d| idf.index(a, d) == idf.index(target, d))
}

/// Members of `es` that share at least one division index with the victim
/// target.
pub fn ground_truth_conflicts(idf: &Idf, es: &EvictionSet, victim: &VictimHandle) -> usize {
    let t = victim.target();
    es.addresses()
        .iter()
        .filter(|&&a| conflicts(idf, a, t))
        .count()
}
