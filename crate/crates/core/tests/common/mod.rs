//! Randomized operation sequences checked against the cache invariants.

#![allow(dead_code)]

use std::collections::BTreeSet;

use chameleon_core::cache::{Event, Location};
use chameleon_core::seed::rng_from;
use chameleon_core::{Address, Cache, CacheConfig, HitKind, Model};
use rand::Rng;

/// Small geometries, one per model plus a fully skewed Chameleon.
pub fn fidelity_configs() -> Vec<CacheConfig> {
    vec![
        CacheConfig::fully_associative(32),
        CacheConfig::set_associative(8, 4),
        CacheConfig::ceaser(8, 4),
        CacheConfig::ceaser_s(8, 4, 2),
        CacheConfig::chameleon(8, 4, 2, 2),
        CacheConfig::chameleon(8, 4, 4, 3),
        CacheConfig::chameleon_no_reinsert(8, 4, 2, 2),
        CacheConfig::ceaser_plus_vc(8, 4, 2),
    ]
}

fn resident(c: &Cache) -> BTreeSet<Address> {
    c.resident().into_iter().collect()
}

/// Runs `len` random operations on a fresh cache and checks, after each one:
/// unique tags and correct placement, conservation of lines, reinsert cursor
/// catch-up, slot-preserving swaps, and write-backs only from insertion.
pub fn check_sequence(config: &CacheConfig, seed: u64, len: usize) -> Result<(), String> {
    let mut rng = rng_from(seed);
    let mut cache = Cache::new(config.clone().with_seed(seed)).map_err(|e| e.to_string())?;
    let universe: Vec<Address> = (0..3 * cache.capacity())
        .map(|_| Address(rng.random::<u64>() >> 1))
        .collect();
    let reinserts = config.model.reinserts();
    let full = config.model == Model::FullyAssociativeRandom;

    for step in 0..len {
        let before = resident(&cache);
        let roll: f64 = rng.random();
        let ctx = |what: &str| format!("{} seed {seed} step {step}: {what}", config.label());

        if roll < 0.04 && config.w_vc > 0 && !full {
            let filled: Vec<usize> = cache
                .vc_lines()
                .iter()
                .enumerate()
                .filter_map(|(i, t)| t.map(|_| i))
                .collect();
            if filled.is_empty() {
                continue;
            }
            let slot = filled[rng.random_range(0..filled.len())];
            let line = cache.vc_lines()[slot].unwrap();
            let counters = cache.vc_counters();
            let positions: Vec<(Address, Option<Location>)> =
                before.iter().map(|&a| (a, cache.locate(a))).collect();
            cache.telemetry_drain();
            cache.rsc_reinsert(slot).map_err(|e| ctx(&e.to_string()))?;
            let events = cache.telemetry_drain();
            let displaced = match events.as_slice() {
                [r] => match r.event {
                    Event::ReinsertSwap {
                        inserted,
                        displaced,
                    } if inserted == line => displaced,
                    e => return Err(ctx(&format!("unexpected event {e}"))),
                },
                _ => return Err(ctx(&format!("reinsert logged {events:?}"))),
            };
            if cache.vc_lines()[slot] != displaced {
                return Err(ctx("displaced line not in the reinserted slot"));
            }
            if let Some(d) = displaced {
                let old = positions.iter().find(|(a, _)| *a == d).and_then(|p| p.1);
                if old != cache.locate(line) {
                    return Err(ctx("reinserted line not in the displaced line's way"));
                }
            }
            if cache.vc_counters() != counters {
                return Err(ctx("manual reinsert moved a cursor"));
            }
            if resident(&cache) != before {
                return Err(ctx("manual reinsert changed the resident set"));
            }
        } else if roll < 0.09 {
            let a = universe[rng.random_range(0..universe.len())];
            let was = cache.contains(a);
            if cache.invalidate(a) != was {
                return Err(ctx("invalidate result"));
            }
            let mut expect = before.clone();
            expect.remove(&a);
            if resident(&cache) != expect {
                return Err(ctx("invalidate conservation"));
            }
        } else if roll < 0.10 {
            cache.rekey();
            if !resident(&cache).is_empty() || cache.vc_counters() != (0, 0) {
                return Err(ctx("rekey left state behind"));
            }
        } else {
            let a = universe[rng.random_range(0..universe.len())];
            let vc_slot = cache.vc_lines().iter().position(|&t| t == Some(a));
            let counters = cache.vc_counters();
            cache.telemetry_drain();
            let rec = cache.access_detailed(a);
            let events = cache.telemetry_drain();
            let write_backs: Vec<Address> = events
                .iter()
                .filter_map(|r| match r.event {
                    Event::EvictToMemory(x) => Some(x),
                    _ => None,
                })
                .collect();
            if rec.outcome.hit() != before.contains(&a) {
                return Err(ctx("hit/miss disagrees with residency"));
            }
            if rec.outcome.hit() && !write_backs.is_empty() {
                return Err(ctx("write-back on a hit"));
            }
            if write_backs.len() > 1 || rec.evicted != write_backs.first().copied() {
                return Err(ctx(&format!("write-backs {write_backs:?}")));
            }
            let mut expect = before.clone();
            expect.insert(a);
            for x in &write_backs {
                if !expect.remove(x) {
                    return Err(ctx("wrote back a line that was not resident"));
                }
            }
            if resident(&cache) != expect {
                return Err(ctx("conservation"));
            }
            if reinserts {
                let (ins, re) = cache.vc_counters();
                if ins != re {
                    return Err(ctx("reinsert cursor behind after lookup"));
                }
            }
            if rec.kind == HitKind::VcHit && reinserts {
                let slot = vc_slot.ok_or_else(|| ctx("VC hit on a line not in the VC"))?;
                if cache.vc_counters().0 != counters.0 {
                    return Err(ctx("VC hit advanced the insert cursor"));
                }
                let displaced = events.iter().find_map(|r| match r.event {
                    Event::ReinsertSwap {
                        inserted,
                        displaced,
                    } if inserted == a => Some(displaced),
                    _ => None,
                });
                match displaced {
                    Some(d) if cache.vc_lines()[slot] == d => {}
                    _ => return Err(ctx("VC hit swap did not preserve the slot")),
                }
                if !matches!(cache.locate(a), Some(Location::Rsc { .. })) {
                    return Err(ctx("VC hit line not back in the RSC"));
                }
            }
        }
        cache.verify().map_err(|e| ctx(&e.to_string()))?;
    }
    Ok(())
}
