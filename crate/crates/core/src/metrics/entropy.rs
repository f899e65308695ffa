use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::SampleSet;
use crate::address::Address;
use crate::cache::{Cache, CacheConfig};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from};

/// Fewer samples than this and the estimator bias dominates.
pub const MIN_ENTROPY_TRIALS: usize = 100_000;

/// Plug-in Shannon entropy of a histogram, in bits.
pub fn plugin_bits(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Plug-in entropy with the Miller-Madow bias correction, in bits.
pub fn miller_madow_bits(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let occupied = counts.iter().filter(|&&c| c > 0).count() as f64;
    plugin_bits(counts) + (occupied - 1.0) / (2.0 * n as f64 * std::f64::consts::LN_2)
}

/// Knobs of the eviction-entropy estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyParams {
    /// Total eviction samples, split evenly over the victims.
    pub trials: usize,
    /// Number of secret victim addresses.
    pub victims: usize,
    /// Attacker pool size as a multiple of the cache capacity.
    pub pool_factor: usize,
    /// Independent chains; the interval is taken over their means.
    pub replicates: usize,
    /// Random pool accesses between samples. Too few and the occupants of
    /// each cache position are undersampled.
    pub churn: usize,
    pub seed: u64,
}

impl Default for EntropyParams {
    fn default() -> Self {
        EntropyParams {
            trials: 800_000,
            victims: 2,
            replicates: 4,
            pool_factor: 2,
            churn: 32,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Mean over victims, clamped at zero.
    pub bits: f64,
    /// Unclamped mean over victims.
    pub raw_bits: f64,
    /// 95% t-interval of the unclamped mean over replicates.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Leakage of every victim, replicate-major.
    pub per_victim: Vec<f64>,
    pub n: usize,
}

impl EntropyEstimate {
    pub fn ci_half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

/// Relative eviction entropy of a cache design, in bits.
///
/// An attacker pool larger than the cache keeps it full. Between samples a
/// few random pool lines are accessed so the contents drift through the
/// steady state. For each sample, every victim accesses its secret address
/// on a copy of the current state, and the pool line written back to memory
/// is recorded. The leakage for victim `v` is how far the distribution of
/// that line falls short of uniform over the pool:
/// `log2 |pool| - H(evicted | v)`. A design whose evictions do not depend on
/// the victim address scores near zero; one that confines the evicted line to
/// the victim's sets scores near `log2` of the number of sets.
///
/// The estimate is the mean over independent replicate chains (own keys,
/// pool and victims); the interval is a t-interval over replicate means.
pub fn relative_eviction_entropy(
    config: &CacheConfig,
    params: &EntropyParams,
) -> Result<EntropyEstimate> {
    if params.trials < MIN_ENTROPY_TRIALS {
        return Err(Error::Precision(format!(
            "{} trials is below the estimator minimum of {MIN_ENTROPY_TRIALS}",
            params.trials
        )));
    }
    if params.victims < 1 || params.replicates < 2 || params.pool_factor < 2 {
        return Err(Error::Precision(
            "need a victim, two replicates and a pool of twice the capacity".into(),
        ));
    }
    config.validate()?;
    let rounds = params.trials.div_ceil(params.victims * params.replicates);
    let per_replicate: Vec<Vec<f64>> = (0..params.replicates)
        .into_par_iter()
        .map(|r| replicate(config, params, rounds, derive_seed(params.seed, r as u64)))
        .collect::<Result<_>>()?;

    let means: Vec<f64> = per_replicate
        .iter()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let set = SampleSet::new(config.label(), means);
    let raw = set.mean()?;
    let (lo, hi) = set.mean_ci(0.95)?;
    Ok(EntropyEstimate {
        bits: raw.max(0.0),
        raw_bits: raw,
        ci_low: lo,
        ci_high: hi,
        per_victim: per_replicate.concat(),
        n: rounds * params.victims * params.replicates,
    })
}

/// One steady-state chain. Returns the leakage per victim.
fn replicate(
    config: &CacheConfig,
    params: &EntropyParams,
    rounds: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = rng_from(derive_seed(seed, 0));
    let mut cache = Cache::new(config.clone().with_seed(derive_seed(seed, 1)))?;
    cache.set_telemetry(false);

    let pool_len = cache.capacity() * params.pool_factor;
    let mut index: HashMap<u64, u32> = HashMap::with_capacity(pool_len);
    let mut pool = Vec::with_capacity(pool_len);
    while pool.len() < pool_len {
        let a = Address::random(&mut rng);
        if index.insert(a.0, pool.len() as u32).is_none() {
            pool.push(a);
        }
    }
    let mut victims = Vec::with_capacity(params.victims);
    while victims.len() < params.victims {
        let a = Address::random(&mut rng);
        if !index.contains_key(&a.0) && !victims.contains(&a) {
            victims.push(a);
        }
    }

    let mut order = pool.clone();
    for _ in 0..2 {
        order.shuffle(&mut rng);
        for &a in &order {
            cache.lookup(a);
        }
    }

    // The last bin counts samples where nothing was written back.
    let mut counts = vec![vec![0u64; pool_len + 1]; params.victims];
    let mut probe = cache.clone();
    for _ in 0..rounds {
        for _ in 0..params.churn {
            cache.lookup(pool[rng.random_range(0..pool_len)]);
        }
        for (v, &victim) in victims.iter().enumerate() {
            probe.clone_from(&cache);
            let bin = match probe.access_detailed(victim).evicted {
                Some(e) => *index.get(&e.0).unwrap_or(&(pool_len as u32)) as usize,
                None => pool_len,
            };
            counts[v][bin] += 1;
        }
    }

    let max_bits = (pool_len as f64).log2();
    Ok(counts
        .iter()
        .map(|c| max_bits - miller_madow_bits(c))
        .collect())
}
