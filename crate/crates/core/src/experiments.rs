//! Seeded experiment runners.
//!
//! Each runner takes one config and a master seed. Repetition `i` uses
//! `derive_seed(seed, i)`, which is written to every output row so a single
//! row can be replayed. Repetitions run in parallel and are collected in
//! index order, so outputs do not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacker::evaluate::{
    eviction_success_rate, ground_truth_conflicts, warm_snapshot, SuccessParams, TrialReset,
};
use crate::attacker::{ppp_profile, random_eviction_set, PppParams, ProbeMode, VictimHandle};
use crate::cache::{Cache, CacheConfig};
use crate::error::{Error, Result};
use crate::metrics::{relative_eviction_entropy, welch_t, EntropyEstimate, EntropyParams};
use crate::report::{fmt_f64, Record, Table};
use crate::seed::{derive_seed, rng_from};
use crate::Samples;

/// Two-sided z for 95% normal intervals.
const Z95: f64 = 1.959964;

/// Parameters of the PPP versus random-sampling comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvictionParams {
    /// Independent experiments (fresh keys, victim and sets).
    pub m: usize,
    /// Eviction attempts per set.
    pub trials: usize,
    /// Set size as a multiple of the associativity.
    pub set_factor: usize,
    /// PPP round budget per experiment. A set that is still short when the
    /// budget runs out is used as is, against a random set of equal size.
    pub ppp_max_rounds: usize,
    pub reset: TrialReset,
    pub seed: u64,
}

impl Default for EvictionParams {
    fn default() -> Self {
        EvictionParams {
            m: 200,
            trials: 1000,
            set_factor: 4,
            ppp_max_rounds: 4000,
            reset: TrialReset::Restore,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvictionRow {
    pub experiment: usize,
    pub seed: u64,
    pub set_size: usize,
    pub ppp_rounds: usize,
    pub ppp_rate: f64,
    pub random_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvictionStudy {
    pub config: CacheConfig,
    pub rows: Vec<EvictionRow>,
}

pub fn eviction_study(config: &CacheConfig, params: &EvictionParams) -> Result<EvictionStudy> {
    config.validate()?;
    if params.m == 0 || params.trials == 0 || params.set_factor == 0 {
        return Err(Error::config("M, trials and set factor must be at least 1"));
    }
    let target = params.set_factor * config.w;
    let rows = (0..params.m)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(params.seed, i as u64);
            let cfg = config.clone().with_seed(derive_seed(seed, 0));
            let snapshot = warm_snapshot(&cfg, derive_seed(seed, 1))?;
            let mut rng = rng_from(derive_seed(seed, 2));
            let victim = VictimHandle::random(&mut rng);
            let mut cache = snapshot.clone();
            let mut ppp = PppParams::for_capacity(cache.capacity());
            ppp.max_rounds = params.ppp_max_rounds;
            let out = ppp_profile(&mut cache, &victim, target, &ppp, &mut rng)?;
            let random = random_eviction_set(&mut rng, out.set.len());
            let success = SuccessParams {
                reset: params.reset,
                ..SuccessParams::new(params.trials, derive_seed(seed, 3))
            };
            Ok(EvictionRow {
                experiment: i,
                seed,
                set_size: out.set.len(),
                ppp_rounds: out.rounds,
                ppp_rate: eviction_success_rate(&snapshot, &out.set, &victim, &success)?,
                random_rate: eviction_success_rate(&snapshot, &random, &victim, &success)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvictionStudy {
        config: config.clone(),
        rows,
    })
}

impl EvictionStudy {
    pub fn ppp_samples(&self) -> Samples {
        Samples::new("PPP", self.rows.iter().map(|r| r.ppp_rate).collect())
    }

    pub fn random_samples(&self) -> Samples {
        Samples::new("RANDOM", self.rows.iter().map(|r| r.random_rate).collect())
    }

    /// Welch's t of PPP against random success rates.
    pub fn t_value(&self) -> Result<f64> {
        welch_t(&self.ppp_samples(), &self.random_samples())
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(
            "eviction",
            1,
            &[
                "config",
                "experiment",
                "seed",
                "set_size",
                "ppp_rounds",
                "ppp_rate",
                "random_rate",
            ],
        );
        let label = self.config.label();
        for r in &self.rows {
            t.push(vec![
                label.clone(),
                r.experiment.to_string(),
                r.seed.to_string(),
                r.set_size.to_string(),
                r.ppp_rounds.to_string(),
                fmt_f64(r.ppp_rate),
                fmt_f64(r.random_rate),
            ]);
        }
        t
    }

    /// Mean success rates with 95% intervals, then the t-value.
    pub fn records(&self) -> Result<Vec<Record>> {
        let label = self.config.label();
        let mut out = Vec::new();
        for (metric, s) in [
            ("eviction_rate_ppp", self.ppp_samples()),
            ("eviction_rate_random", self.random_samples()),
        ] {
            let mean = s.mean()?;
            let (lo, hi) = if s.len() >= 2 {
                s.mean_ci(0.95)?
            } else {
                (mean, mean)
            };
            out.push(Record {
                metric: metric.into(),
                config: label.clone(),
                value: mean,
                ci_low: lo,
                ci_high: hi,
                n: s.len(),
            });
        }
        out.push(Record::point(
            "t_value",
            &label,
            self.t_value()?,
            self.rows.len(),
        ));
        Ok(out)
    }
}

/// Parameters of a PPP profiling campaign over several victims.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub victims: usize,
    /// Addresses to collect per victim.
    pub target_size: usize,
    /// Round budget per victim.
    pub max_rounds: usize,
    pub probe: ProbeMode,
    pub flush_after_trigger: usize,
    pub seed: u64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            victims: 20,
            target_size: 64,
            max_rounds: 2000,
            probe: ProbeMode::FirstMiss,
            flush_after_trigger: 0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub victim: usize,
    pub seed: u64,
    pub rounds: usize,
    pub reads: u64,
    pub collected: usize,
    pub truly_conflicting: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileStudy {
    pub config: CacheConfig,
    pub rows: Vec<ProfileRow>,
}

pub fn profile_study(config: &CacheConfig, params: &ProfileParams) -> Result<ProfileStudy> {
    config.validate()?;
    if !config.model.is_keyed() {
        return Err(Error::config(format!(
            "{} has no index keys to score conflicts against",
            config.model.name()
        )));
    }
    if params.victims == 0 {
        return Err(Error::config("victims must be at least 1"));
    }
    let rows = (0..params.victims)
        .into_par_iter()
        .map(|v| {
            let seed = derive_seed(params.seed, v as u64);
            let mut cache = Cache::new(config.clone().with_seed(derive_seed(seed, 0)))?;
            cache.set_telemetry(false);
            let mut rng = rng_from(derive_seed(seed, 1));
            let victim = VictimHandle::random(&mut rng);
            let ppp = PppParams {
                max_rounds: params.max_rounds,
                probe: params.probe,
                flush_after_trigger: params.flush_after_trigger,
                ..PppParams::for_capacity(cache.capacity())
            };
            let out = ppp_profile(&mut cache, &victim, params.target_size, &ppp, &mut rng)?;
            let idf = cache.idf().expect("keyed model");
            Ok(ProfileRow {
                victim: v,
                seed,
                rounds: out.rounds,
                reads: out.stats.total_read_accesses,
                collected: out.stats.collected,
                truly_conflicting: ground_truth_conflicts(idf, &out.set, &victim),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProfileStudy {
        config: config.clone(),
        rows,
    })
}

impl ProfileStudy {
    pub fn collected(&self) -> usize {
        self.rows.iter().map(|r| r.collected).sum()
    }

    pub fn truly_conflicting(&self) -> usize {
        self.rows.iter().map(|r| r.truly_conflicting).sum()
    }

    pub fn reads(&self) -> u64 {
        self.rows.iter().map(|r| r.reads).sum()
    }

    /// Pooled true-positive rate; `None` if nothing was collected.
    pub fn tpr(&self) -> Option<f64> {
        let n = self.collected();
        (n > 0).then(|| self.truly_conflicting() as f64 / n as f64)
    }

    /// 95% normal interval of the pooled rate.
    pub fn tpr_ci(&self) -> Option<(f64, f64)> {
        let p = self.tpr()?;
        let h = Z95 * (p * (1.0 - p) / self.collected() as f64).sqrt();
        Some(((p - h).max(0.0), (p + h).min(1.0)))
    }

    /// Reads per truly conflicting address, pooled over victims.
    pub fn cost_per_conflict(&self) -> Option<f64> {
        let tp = self.truly_conflicting();
        (tp > 0).then(|| self.reads() as f64 / tp as f64)
    }

    pub fn noisy_fraction(&self) -> Option<f64> {
        self.tpr().map(|p| 1.0 - p)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(
            "profile",
            1,
            &[
                "config",
                "victim",
                "seed",
                "rounds",
                "reads",
                "collected",
                "truly_conflicting",
            ],
        );
        let label = self.config.label();
        for r in &self.rows {
            t.push(vec![
                label.clone(),
                r.victim.to_string(),
                r.seed.to_string(),
                r.rounds.to_string(),
                r.reads.to_string(),
                r.collected.to_string(),
                r.truly_conflicting.to_string(),
            ]);
        }
        t
    }

    /// TPR, cost per conflict and noisy fraction. Missing values are NaN.
    pub fn records(&self) -> Vec<Record> {
        let label = self.config.label();
        let n = self.collected();
        let (lo, hi) = self.tpr_ci().unwrap_or((f64::NAN, f64::NAN));
        let tpr = self.tpr().unwrap_or(f64::NAN);
        vec![
            Record {
                metric: "ppp_tpr".into(),
                config: label.clone(),
                value: tpr,
                ci_low: lo,
                ci_high: hi,
                n,
            },
            Record::point(
                "ppp_cost",
                &label,
                self.cost_per_conflict().unwrap_or(f64::NAN),
                self.truly_conflicting(),
            ),
            Record {
                metric: "vc_noise".into(),
                config: label,
                value: 1.0 - tpr,
                ci_low: 1.0 - hi,
                ci_high: 1.0 - lo,
                n,
            },
        ]
    }
}

/// Profiling with a victim-cache flush between trigger and probe: the
/// attacker pushes `w_vc` fresh lines through the victim cache so lines it
/// holds show up as misses, and records every probe miss.
pub fn vc_noise_study(config: &CacheConfig, params: &ProfileParams) -> Result<ProfileStudy> {
    if !config.model.has_vc() {
        return Err(Error::config(format!(
            "{} has no victim cache",
            config.model.name()
        )));
    }
    let p = ProfileParams {
        flush_after_trigger: config.w_vc,
        probe: ProbeMode::AllMisses,
        ..params.clone()
    };
    profile_study(config, &p)
}

/// Relative eviction entropy of several configs, config `i` seeded with
/// `derive_seed(seed, i)`.
pub fn entropy_sweep(
    configs: &[CacheConfig],
    params: &EntropyParams,
) -> Result<Vec<(CacheConfig, EntropyEstimate)>> {
    if configs.is_empty() {
        return Err(Error::config("at least one config is required"));
    }
    configs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let p = EntropyParams {
                seed: derive_seed(params.seed, i as u64),
                ..params.clone()
            };
            relative_eviction_entropy(c, &p).map(|e| (c.clone(), e))
        })
        .collect()
}

pub fn entropy_table(results: &[(CacheConfig, EntropyEstimate)], seed: u64) -> Table {
    let mut t = Table::new(
        "entropy",
        1,
        &["config", "lines", "seed", "bits", "ci_low", "ci_high", "n"],
    );
    for (i, (c, e)) in results.iter().enumerate() {
        t.push(vec![
            c.label(),
            c.lines().to_string(),
            derive_seed(seed, i as u64).to_string(),
            fmt_f64(e.bits),
            fmt_f64(e.ci_low),
            fmt_f64(e.ci_high),
            e.n.to_string(),
        ]);
    }
    t
}

pub fn entropy_records(results: &[(CacheConfig, EntropyEstimate)]) -> Vec<Record> {
    results
        .iter()
        .map(|(c, e)| Record {
            metric: "eviction_entropy_bits".into(),
            config: c.label(),
            value: e.bits,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            n: e.n,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> EvictionParams {
        EvictionParams {
            m: 6,
            trials: 50,
            ppp_max_rounds: 200,
            seed: 11,
            ..EvictionParams::default()
        }
    }

    #[test]
    fn eviction_rows_are_seeded_and_ordered() {
        let cfg = CacheConfig::ceaser_s(16, 4, 2);
        let a = eviction_study(&cfg, &small()).unwrap();
        let b = eviction_study(&cfg, &small()).unwrap();
        assert_eq!(a, b);
        for (i, r) in a.rows.iter().enumerate() {
            assert_eq!(r.experiment, i);
            assert_eq!(r.seed, derive_seed(11, i as u64));
        }
        assert_eq!(a.table().to_csv_string(), b.table().to_csv_string());
    }

    #[test]
    fn ceaser_s_sets_beat_random_ones() {
        let cfg = CacheConfig::ceaser_s(32, 8, 8);
        let s = eviction_study(
            &cfg,
            &EvictionParams {
                m: 20,
                trials: 200,
                ..small()
            },
        )
        .unwrap();
        assert!(s.t_value().unwrap() > 4.5);
    }

    #[test]
    fn zero_m_is_rejected() {
        let cfg = CacheConfig::ceaser_s(16, 4, 2);
        assert!(eviction_study(&cfg, &EvictionParams { m: 0, ..small() }).is_err());
    }

    #[test]
    fn ceaser_s_profile_is_exact() {
        let cfg = CacheConfig::ceaser_s(32, 8, 8);
        let p = ProfileParams {
            victims: 4,
            target_size: 16,
            seed: 2,
            ..ProfileParams::default()
        };
        let s = profile_study(&cfg, &p).unwrap();
        assert_eq!(s.collected(), 64);
        assert_eq!(s.tpr(), Some(1.0));
        assert!(s.cost_per_conflict().unwrap() > 0.0);
    }

    #[test]
    fn unkeyed_models_are_rejected() {
        let p = ProfileParams::default();
        assert!(profile_study(&CacheConfig::set_associative(16, 4), &p).is_err());
        assert!(vc_noise_study(&CacheConfig::ceaser_s(16, 4, 2), &p).is_err());
    }

    #[test]
    fn entropy_sweep_needs_configs() {
        assert!(entropy_sweep(&[], &EntropyParams::default()).is_err());
    }
}
