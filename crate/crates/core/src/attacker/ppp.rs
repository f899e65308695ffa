use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EvictionSet, ProfilingStats, Provenance, VictimHandle};
use crate::address::Address;
use crate::cache::Probe;
use crate::error::{Error, Result};

/// Which probe misses a round harvests.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeMode {
    /// Stop at the first survivor that misses. Later misses may be caused by
    /// the probe's own refills.
    #[default]
    FirstMiss,
    /// Collect every survivor that misses.
    AllMisses,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PppParams {
    /// Fresh candidates primed per round.
    pub batch: usize,
    pub max_prune_rounds: usize,
    /// Rounds before giving up with an incomplete set.
    pub max_rounds: usize,
    pub probe: ProbeMode,
    /// Fresh addresses accessed between the victim trigger and the probe,
    /// to push displaced lines out of a victim cache.
    pub flush_after_trigger: usize,
    /// `false` runs the control experiment without the victim.
    pub trigger_victim: bool,
}

impl PppParams {
    /// Batch equal to the cache capacity, the rest default.
    pub fn for_capacity(capacity: usize) -> Self {
        PppParams {
            batch: capacity,
            max_prune_rounds: 32,
            max_rounds: 1000,
            probe: ProbeMode::FirstMiss,
            flush_after_trigger: 0,
            trigger_victim: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PppOutcome {
    pub set: EvictionSet,
    pub stats: ProfilingStats,
    pub rounds: usize,
    /// `false` when `max_rounds` ran out before `target_size` was reached.
    pub complete: bool,
}

/// Prime+Prune+Probe profiling.
///
/// Each round primes a batch of fresh candidates, re-accesses them until a
/// pass produces no misses (dropping every candidate that missed), triggers
/// the victim and probes the survivors. Survivors that now miss were evicted
/// by the victim's access and join the eviction set.
pub fn ppp_profile<P, R>(
    cache: &mut P,
    victim: &VictimHandle,
    target_size: usize,
    params: &PppParams,
    rng: &mut R,
) -> Result<PppOutcome>
where
    P: Probe + ?Sized,
    R: Rng + ?Sized,
{
    if target_size == 0 || params.batch == 0 || params.max_prune_rounds == 0 {
        return Err(Error::config(
            "target size, batch and prune rounds must be at least 1",
        ));
    }
    let mut reads = 0u64;
    let mut collected: Vec<Address> = Vec::with_capacity(target_size.min(4096));
    // Fresh 64-bit addresses practically never repeat, so only the collected
    // set is checked for duplicates.
    let mut taken: HashSet<Address> = HashSet::new();
    let mut rounds = 0;
    while collected.len() < target_size && rounds < params.max_rounds {
        rounds += 1;
        let mut survivors = Vec::with_capacity(params.batch);
        while survivors.len() < params.batch {
            let a = Address::random(rng);
            if !taken.contains(&a) {
                survivors.push(a);
            }
        }
        for &a in &survivors {
            cache.access(a);
        }
        reads += survivors.len() as u64;

        for _ in 0..params.max_prune_rounds {
            let before = survivors.len();
            reads += before as u64;
            survivors.retain(|&a| cache.access(a).hit());
            if survivors.len() == before {
                break;
            }
        }

        if params.trigger_victim {
            victim.trigger(cache);
        }
        if params.flush_after_trigger > 0 {
            reads += flush(cache, params.flush_after_trigger, &taken, rng);
        }

        for &a in &survivors {
            reads += 1;
            if cache.access(a).miss() && taken.insert(a) {
                collected.push(a);
                if params.probe == ProbeMode::FirstMiss || collected.len() == target_size {
                    break;
                }
            }
        }
    }
    let complete = collected.len() >= target_size;
    let stats = ProfilingStats {
        total_read_accesses: reads,
        collected: collected.len(),
        truly_conflicting: 0,
    };
    Ok(PppOutcome {
        set: EvictionSet::new(collected, Provenance::Ppp)?,
        stats,
        rounds,
        complete,
    })
}

fn flush<P, R>(cache: &mut P, n: usize, avoid: &HashSet<Address>, rng: &mut R) -> u64
where
    P: Probe + ?Sized,
    R: Rng + ?Sized,
{
    let mut done = 0;
    while done < n {
        let a = Address::random(rng);
        if !avoid.contains(&a) {
            cache.access(a);
            done += 1;
        }
    }
    n as u64
}

/// Result of [`vc_flush_attack`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlushReport {
    /// Watch-set members that missed on the re-probe, in probe order.
    pub missing: Vec<Address>,
    pub read_accesses: u64,
}

/// Accesses `n_flush` fresh random addresses, then re-probes `watch` and
/// reports which members miss.
pub fn vc_flush_attack<P, R>(
    cache: &mut P,
    n_flush: usize,
    watch: &[Address],
    rng: &mut R,
) -> FlushReport
where
    P: Probe + ?Sized,
    R: Rng + ?Sized,
{
    let avoid: HashSet<Address> = watch.iter().copied().collect();
    let mut reads = flush(cache, n_flush, &avoid, rng);
    let mut missing = Vec::new();
    for &a in watch {
        reads += 1;
        if cache.access(a).miss() {
            missing.push(a);
        }
    }
    FlushReport {
        missing,
        read_accesses: reads,
    }
}
