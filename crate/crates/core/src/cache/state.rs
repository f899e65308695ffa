use std::collections::HashSet;

use rand::{Rng, SeedableRng};

use super::config::{CacheConfig, Model, Replacement};
use super::tag_index::TagIndex;
use super::telemetry::{Event, Record};
use crate::address::Address;
use crate::error::{Error, Result};
use crate::idf::{generate_keys, generate_keys_with, Idf, IndexVector};
use crate::seed::{derive_seed, SimRng};

const EMPTY: u64 = Address::EMPTY_RAW;

/// Attacker-visible result of a lookup: hit or miss, nothing else.
///
/// RSC hits and victim-cache hits produce identical values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AccessOutcome {
    hit: bool,
}

impl AccessOutcome {
    pub fn hit(self) -> bool {
        self.hit
    }

    pub fn miss(self) -> bool {
        !self.hit
    }
}

/// Where a lookup was served from. Telemetry only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HitKind {
    RscHit,
    VcHit,
    Miss,
}

/// Privileged view of one lookup.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AccessRecord {
    pub outcome: AccessOutcome,
    pub kind: HitKind,
    /// Line written back to memory during this lookup. At most one: only an
    /// insertion can push a line out of the structure.
    pub evicted: Option<Address>,
}

/// Physical position of a resident line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Location {
    Rsc {
        division: usize,
        set: usize,
        way: usize,
    },
    Vc {
        slot: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Indexing {
    /// One set holding every line.
    Full,
    /// `addr mod s`.
    Modulo,
    /// Keyed index derivation.
    Keyed,
}

/// The single-owner cache state: RSC array, victim cache, cursors and PRNG.
pub struct Cache {
    config: CacheConfig,
    indexing: Indexing,
    divisions: usize,
    sets: usize,
    /// Ways per division (all `N` ways for the fully associative model).
    ways: usize,
    set_mask: u64,
    idf: Option<Idf>,
    generation: u64,
    /// `divisions * sets * ways` tags, division-major.
    lines: Vec<u64>,
    /// LRU stamps, empty under random replacement.
    stamps: Vec<u64>,
    clock: u64,
    vc: Vec<u64>,
    /// Unbounded shadow counters; the slot is the counter modulo `w_vc`.
    vc_inserted: u64,
    vc_reinserted: u64,
    reinsert_enabled: bool,
    period: u32,
    since_reinsert: u32,
    rng: SimRng,
    /// Free slots of the fully associative array.
    free: Vec<u32>,
    /// Tag lookup for the fully associative array.
    fa_index: Option<TagIndex>,
    scratch: Vec<u32>,
    scratch_reinsert: Vec<u32>,
    telemetry: bool,
    events: Vec<Record>,
    step: u64,
}

impl Clone for Cache {
    fn clone(&self) -> Self {
        Cache {
            config: self.config.clone(),
            indexing: self.indexing,
            divisions: self.divisions,
            sets: self.sets,
            ways: self.ways,
            set_mask: self.set_mask,
            idf: self.idf.clone(),
            generation: self.generation,
            lines: self.lines.clone(),
            stamps: self.stamps.clone(),
            clock: self.clock,
            vc: self.vc.clone(),
            vc_inserted: self.vc_inserted,
            vc_reinserted: self.vc_reinserted,
            reinsert_enabled: self.reinsert_enabled,
            period: self.period,
            since_reinsert: self.since_reinsert,
            rng: self.rng.clone(),
            free: self.free.clone(),
            fa_index: self.fa_index.clone(),
            scratch: self.scratch.clone(),
            scratch_reinsert: self.scratch_reinsert.clone(),
            telemetry: self.telemetry,
            events: self.events.clone(),
            step: self.step,
        }
    }

    /// Reuses the existing buffers; snapshots of large caches are restored
    /// once per trial in the experiments.
    fn clone_from(&mut self, src: &Self) {
        self.config.clone_from(&src.config);
        self.indexing = src.indexing;
        self.divisions = src.divisions;
        self.sets = src.sets;
        self.ways = src.ways;
        self.set_mask = src.set_mask;
        self.idf.clone_from(&src.idf);
        self.generation = src.generation;
        self.lines.clone_from(&src.lines);
        self.stamps.clone_from(&src.stamps);
        self.clock = src.clock;
        self.vc.clone_from(&src.vc);
        self.vc_inserted = src.vc_inserted;
        self.vc_reinserted = src.vc_reinserted;
        self.reinsert_enabled = src.reinsert_enabled;
        self.period = src.period;
        self.since_reinsert = src.since_reinsert;
        self.rng.clone_from(&src.rng);
        self.free.clone_from(&src.free);
        self.fa_index.clone_from(&src.fa_index);
        self.scratch.clone_from(&src.scratch);
        self.scratch_reinsert.clone_from(&src.scratch_reinsert);
        self.telemetry = src.telemetry;
        self.events.clone_from(&src.events);
        self.step = src.step;
    }
}

impl Cache {
    /// Builds an empty cache: every RSC and VC line empty, both cursors 0,
    /// IDF keys drawn from `config.seed`.
    pub fn new(config: CacheConfig) -> Result<Self> {
        config.validate()?;
        let (indexing, divisions, sets, ways) = match config.model {
            Model::FullyAssociativeRandom => (Indexing::Full, 1, 1, config.lines()),
            Model::SetAssociative => (Indexing::Modulo, 1, config.s, config.w),
            _ => (
                Indexing::Keyed,
                config.d,
                config.s,
                config.ways_per_division(),
            ),
        };
        let idf = match indexing {
            Indexing::Keyed => Some(Idf::new(generate_keys(config.seed, divisions)?, sets)?),
            _ => None,
        };
        let total = divisions * sets * ways;
        let fa_index = (indexing == Indexing::Full).then(|| TagIndex::new(total));
        let stamps = match config.replacement {
            Replacement::Lru => vec![0; total],
            Replacement::Random => Vec::new(),
        };
        let free = if indexing == Indexing::Full {
            (0..total as u32).rev().collect()
        } else {
            Vec::new()
        };
        Ok(Cache {
            indexing,
            divisions,
            sets,
            ways,
            set_mask: sets as u64 - 1,
            idf,
            generation: 0,
            lines: vec![EMPTY; total],
            stamps,
            clock: 0,
            vc: vec![EMPTY; config.w_vc],
            vc_inserted: 0,
            vc_reinserted: 0,
            reinsert_enabled: config.model.reinserts() && config.reinsert_period > 0,
            period: config.reinsert_period.max(1),
            since_reinsert: 0,
            rng: SimRng::seed_from_u64(derive_seed(config.seed, 1)),
            free,
            fa_index,
            scratch: vec![0; divisions],
            scratch_reinsert: vec![0; divisions],
            telemetry: true,
            events: Vec::new(),
            step: 0,
            config,
        })
    }

    pub fn config(&self) -> &CacheConfig {
        &self.config
    }

    pub fn model(&self) -> Model {
        self.config.model
    }

    /// The index derivation function, for keyed models.
    pub fn idf(&self) -> Option<&Idf> {
        self.idf.as_ref()
    }

    pub fn key_generation(&self) -> u64 {
        self.generation
    }

    pub fn capacity(&self) -> usize {
        self.lines.len() + self.vc.len()
    }

    /// Enables or disables the event log. Long experiments turn it off.
    pub fn set_telemetry(&mut self, on: bool) {
        self.telemetry = on;
        if !on {
            self.events.clear();
        }
    }

    /// Replaces the replacement/division PRNG stream. Keys are untouched.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = SimRng::seed_from_u64(seed);
    }

    /// Shadow counters `(inserted, reinserted)` of the victim-cache cursors.
    pub fn vc_counters(&self) -> (u64, u64) {
        (self.vc_inserted, self.vc_reinserted)
    }

    /// Cursor slots in `[0, w_vc)`; `(0, 0)` without a victim cache.
    pub fn vc_cursors(&self) -> (usize, usize) {
        if self.vc.is_empty() {
            (0, 0)
        } else {
            let n = self.vc.len() as u64;
            (
                (self.vc_inserted % n) as usize,
                (self.vc_reinserted % n) as usize,
            )
        }
    }

    /// Victim-cache contents by slot.
    pub fn vc_lines(&self) -> Vec<Option<Address>> {
        self.vc.iter().map(|&t| tag(t)).collect()
    }

    pub fn rsc_line(&self, division: usize, set: usize, way: usize) -> Option<Address> {
        tag(self.lines[self.base(division, set) + way])
    }

    /// Indices of `a` in each division. Unkeyed models report their single
    /// set (always 0 for the fully associative array).
    pub fn indices(&self, a: Address) -> IndexVector {
        let mut v = vec![0; self.divisions];
        self.fill_indices(a, &mut v);
        IndexVector(v)
    }

    pub fn telemetry_drain(&mut self) -> Vec<Record> {
        std::mem::take(&mut self.events)
    }

    /// Attacker-facing lookup.
    pub fn lookup(&mut self, a: Address) -> AccessOutcome {
        self.access_detailed(a).outcome
    }

    /// Lookup with privileged detail.
    pub fn access_detailed(&mut self, a: Address) -> AccessRecord {
        debug_assert_ne!(a.0, EMPTY, "reserved address");
        self.step += 1;
        let mut kind = HitKind::Miss;
        let mut evicted = None;

        if let Some(fi) = &self.fa_index {
            if let Some(pos) = fi.find(a.0, &self.lines) {
                self.touch(pos);
                kind = HitKind::RscHit;
            }
        } else {
            let mut idx = std::mem::take(&mut self.scratch);
            self.fill_indices(a, &mut idx);
            'search: for (div, &set) in idx.iter().enumerate() {
                let base = self.base(div, set as usize);
                for way in 0..self.ways {
                    if self.lines[base + way] == a.0 {
                        self.touch(base + way);
                        kind = HitKind::RscHit;
                        break 'search;
                    }
                }
            }
            self.scratch = idx;
        }

        if kind == HitKind::Miss {
            if let Some(slot) = self.vc.iter().position(|&t| t == a.0) {
                kind = HitKind::VcHit;
                self.log(Event::VcHit(a));
                if self.reinsert_enabled {
                    self.reinsert_slot(slot);
                }
            }
        } else {
            self.log(Event::RscHit(a));
        }

        if kind == HitKind::Miss {
            self.log(Event::Miss(a));
            evicted = if self.indexing == Indexing::Full {
                self.fa_insert(a)
            } else {
                let idx = std::mem::take(&mut self.scratch);
                let e = self.insert_at(a, &idx);
                self.scratch = idx;
                e
            };
        }

        if self.reinsert_enabled {
            self.since_reinsert += 1;
            if self.since_reinsert >= self.period {
                self.since_reinsert = 0;
                self.automatic_reinsert();
            }
        }

        AccessRecord {
            outcome: AccessOutcome {
                hit: kind != HitKind::Miss,
            },
            kind,
            evicted,
        }
    }

    /// Inserts `a` into a uniformly chosen division at its index there.
    ///
    /// A valid victim line moves to the victim cache at the advanced insert
    /// cursor, pushing that slot's previous occupant to memory. Without a
    /// victim cache the victim line goes straight to memory.
    pub fn rsc_insert(&mut self, a: Address, idxs: &IndexVector) -> Result<()> {
        if self.indexing == Indexing::Full {
            return Err(Error::Consistency(
                "rsc_insert on the fully associative model".into(),
            ));
        }
        self.check_index_vector(idxs)?;
        if let Some(loc) = self.locate(a) {
            return Err(Error::Consistency(format!(
                "rsc_insert of {a} already resident at {loc:?}"
            )));
        }
        self.insert_at(a, idxs.as_slice());
        Ok(())
    }

    /// Swaps victim-cache slot `slot` with a replacement victim in one of the
    /// line's RSC sets. Never writes anything back to memory.
    pub fn rsc_reinsert(&mut self, slot: usize) -> Result<()> {
        if self.indexing == Indexing::Full {
            return Err(Error::Consistency(
                "rsc_reinsert on the fully associative model".into(),
            ));
        }
        match self.vc.get(slot) {
            None => Err(Error::Consistency(format!(
                "victim-cache slot {slot} out of range (w_vc={})",
                self.vc.len()
            ))),
            Some(&EMPTY) => Err(Error::Consistency(format!(
                "victim-cache slot {slot} is empty"
            ))),
            Some(_) => {
                self.reinsert_slot(slot);
                Ok(())
            }
        }
    }

    /// Reinserts every line placed in the victim cache since the last pass,
    /// until the reinsert cursor catches up with the insert cursor.
    pub fn automatic_reinsert(&mut self) {
        let n = self.vc.len() as u64;
        if n == 0 || self.indexing == Indexing::Full {
            return;
        }
        // Slots older than one full lap were overwritten before reinsertion.
        if self.vc_inserted - self.vc_reinserted > n {
            self.vc_reinserted = self.vc_inserted - n;
        }
        while self.vc_reinserted < self.vc_inserted {
            self.vc_reinserted += 1;
            let slot = (self.vc_reinserted % n) as usize;
            // A victim-cache hit may already have swapped the line out.
            if self.vc[slot] != EMPTY {
                self.reinsert_slot(slot);
            }
        }
    }

    /// Draws fresh keys from the cache PRNG and flushes all contents.
    pub fn rekey(&mut self) {
        if self.indexing == Indexing::Keyed {
            self.generation += 1;
            let keys = generate_keys_with(&mut self.rng, self.divisions, self.generation)
                .expect("division count validated at construction");
            self.idf = Some(Idf::new(keys, self.sets).expect("set count validated"));
        }
        self.flush();
    }

    /// Invalidates every line and resets both cursors. Keys are kept.
    pub fn flush(&mut self) {
        self.lines.fill(EMPTY);
        self.vc.fill(EMPTY);
        self.stamps.fill(0);
        self.vc_inserted = 0;
        self.vc_reinserted = 0;
        self.since_reinsert = 0;
        if let Some(fi) = &mut self.fa_index {
            fi.clear();
            self.free = (0..self.lines.len() as u32).rev().collect();
        }
    }

    /// Removes `a` wherever it resides. Evaluator-only (a clflush analogue).
    pub fn invalidate(&mut self, a: Address) -> bool {
        match self.locate(a) {
            Some(Location::Rsc { division, set, way }) => {
                let pos = self.base(division, set) + way;
                if let Some(fi) = &mut self.fa_index {
                    fi.remove(a.0, &self.lines);
                    self.free.push(pos as u32);
                }
                self.lines[pos] = EMPTY;
                true
            }
            Some(Location::Vc { slot }) => {
                self.vc[slot] = EMPTY;
                true
            }
            None => false,
        }
    }

    pub fn contains(&self, a: Address) -> bool {
        self.locate(a).is_some()
    }

    pub fn locate(&self, a: Address) -> Option<Location> {
        if let Some(fi) = &self.fa_index {
            if let Some(way) = fi.find(a.0, &self.lines) {
                return Some(Location::Rsc {
                    division: 0,
                    set: 0,
                    way,
                });
            }
        } else {
            let mut idx = vec![0; self.divisions];
            self.fill_indices(a, &mut idx);
            for (division, &set) in idx.iter().enumerate() {
                let base = self.base(division, set as usize);
                if let Some(way) = self.lines[base..base + self.ways]
                    .iter()
                    .position(|&t| t == a.0)
                {
                    return Some(Location::Rsc {
                        division,
                        set: set as usize,
                        way,
                    });
                }
            }
        }
        self.vc
            .iter()
            .position(|&t| t == a.0)
            .map(|slot| Location::Vc { slot })
    }

    /// All resident tags, sorted.
    pub fn resident(&self) -> Vec<Address> {
        let mut v: Vec<Address> = self
            .lines
            .iter()
            .chain(&self.vc)
            .filter_map(|&t| tag(t))
            .collect();
        v.sort_unstable();
        v
    }

    pub fn occupancy(&self) -> usize {
        self.lines
            .iter()
            .chain(&self.vc)
            .filter(|&&t| t != EMPTY)
            .count()
    }

    /// Exhaustive consistency scan: tag uniqueness, placement agreeing with
    /// the index function, cursor bounds, occupancy bound.
    pub fn verify(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.lines.len() + self.vc.len());
        let mut idx = vec![0; self.divisions];
        for division in 0..self.divisions {
            for set in 0..self.sets {
                let base = self.base(division, set);
                for way in 0..self.ways {
                    let t = self.lines[base + way];
                    if t == EMPTY {
                        continue;
                    }
                    if !seen.insert(t) {
                        return Err(Error::Consistency(format!("tag {:#x} resident twice", t)));
                    }
                    if self.indexing != Indexing::Full {
                        self.fill_indices(Address(t), &mut idx);
                        if idx[division] as usize != set {
                            return Err(Error::Consistency(format!(
                                "tag {t:#x} in division {division} set {set}, maps to {}",
                                idx[division]
                            )));
                        }
                    }
                }
            }
        }
        for &t in &self.vc {
            if t != EMPTY && !seen.insert(t) {
                return Err(Error::Consistency(format!("tag {t:#x} resident twice")));
            }
        }
        if seen.len() > self.capacity() {
            return Err(Error::Consistency("occupancy exceeds capacity".into()));
        }
        if self.vc_reinserted > self.vc_inserted {
            return Err(Error::Consistency(
                "reinsert cursor ahead of insert cursor".into(),
            ));
        }
        if self.indexing == Indexing::Full {
            let empty = self.lines.iter().filter(|&&t| t == EMPTY).count();
            if empty != self.free.len() {
                return Err(Error::Consistency("free list out of sync".into()));
            }
            let fi = self.fa_index.as_ref().expect("index of the full array");
            if fi.len() != self.lines.len() - empty {
                return Err(Error::Consistency("tag index out of sync".into()));
            }
            for (pos, &t) in self.lines.iter().enumerate() {
                if t != EMPTY && fi.find(t, &self.lines) != Some(pos) {
                    return Err(Error::Consistency(format!("tag {t:#x} not indexed")));
                }
            }
        }
        Ok(())
    }

    #[inline]
    fn base(&self, division: usize, set: usize) -> usize {
        (division * self.sets + set) * self.ways
    }

    #[inline]
    fn fill_indices(&self, a: Address, out: &mut [u32]) {
        match self.indexing {
            Indexing::Full => out.fill(0),
            Indexing::Modulo => out[0] = (a.0 & self.set_mask) as u32,
            Indexing::Keyed => self
                .idf
                .as_ref()
                .expect("keyed model has an IDF")
                .fill(a, out),
        }
    }

    fn check_index_vector(&self, idxs: &IndexVector) -> Result<()> {
        if idxs.len() != self.divisions {
            return Err(Error::Consistency(format!(
                "index vector has {} entries, cache has {} divisions",
                idxs.len(),
                self.divisions
            )));
        }
        if let Some(&bad) = idxs.as_slice().iter().find(|&&i| i as usize >= self.sets) {
            return Err(Error::Consistency(format!(
                "index {bad} out of range for s={}",
                self.sets
            )));
        }
        Ok(())
    }

    #[inline]
    fn log(&mut self, event: Event) {
        if self.telemetry {
            self.events.push(Record {
                step: self.step,
                event,
            });
        }
    }

    #[inline]
    fn touch(&mut self, pos: usize) {
        if !self.stamps.is_empty() {
            self.clock += 1;
            self.stamps[pos] = self.clock;
        }
    }

    /// Replacement victim within the set at `base`: an empty way if any,
    /// otherwise per policy.
    fn victim_way(&mut self, base: usize) -> usize {
        let set = &self.lines[base..base + self.ways];
        if let Some(way) = set.iter().position(|&t| t == EMPTY) {
            return way;
        }
        match self.config.replacement {
            Replacement::Random => self.rng.random_range(0..self.ways),
            Replacement::Lru => {
                let stamps = &self.stamps[base..base + self.ways];
                (0..self.ways).min_by_key(|&i| stamps[i]).unwrap_or(0)
            }
        }
    }

    fn insert_at(&mut self, a: Address, idx: &[u32]) -> Option<Address> {
        let division = self.rng.random_range(0..self.divisions);
        let base = self.base(division, idx[division] as usize);
        let way = self.victim_way(base);
        let pos = base + way;
        let old = self.lines[pos];
        let mut evicted = None;
        if old != EMPTY {
            if self.vc.is_empty() {
                evicted = Some(Address(old));
                self.log(Event::EvictToMemory(Address(old)));
            } else {
                self.vc_inserted += 1;
                let slot = (self.vc_inserted % self.vc.len() as u64) as usize;
                let prev = self.vc[slot];
                if prev != EMPTY {
                    evicted = Some(Address(prev));
                    self.log(Event::EvictToMemory(Address(prev)));
                }
                self.vc[slot] = old;
                self.log(Event::DisplaceToVc(Address(old)));
            }
        }
        self.lines[pos] = a.0;
        self.touch(pos);
        evicted
    }

    fn fa_insert(&mut self, a: Address) -> Option<Address> {
        let (pos, evicted) = match self.free.pop() {
            Some(p) => (p as usize, None),
            None => {
                let p = self.rng.random_range(0..self.lines.len());
                (p, Some(Address(self.lines[p])))
            }
        };
        if let Some(e) = evicted {
            self.log(Event::EvictToMemory(e));
        }
        let fi = self.fa_index.as_mut().expect("index of the full array");
        if let Some(e) = evicted {
            fi.remove(e.0, &self.lines);
        }
        self.lines[pos] = a.0;
        fi.insert(a.0, pos);
        evicted
    }

    fn reinsert_slot(&mut self, slot: usize) {
        let line = Address(self.vc[slot]);
        let mut idx = std::mem::take(&mut self.scratch_reinsert);
        self.fill_indices(line, &mut idx);
        let division = self.rng.random_range(0..self.divisions);
        let base = self.base(division, idx[division] as usize);
        self.scratch_reinsert = idx;
        let way = self.victim_way(base);
        let pos = base + way;
        let displaced = self.lines[pos];
        self.lines[pos] = line.0;
        self.vc[slot] = displaced;
        self.touch(pos);
        self.log(Event::ReinsertSwap {
            inserted: line,
            displaced: tag(displaced),
        });
    }
}

#[inline]
fn tag(raw: u64) -> Option<Address> {
    (raw != EMPTY).then_some(Address(raw))
}
