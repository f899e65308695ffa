//! Monte-Carlo oracles for the closed forms in [`ProbabilityModel`].
//!
//! These are evaluator tools: they read IDF keys and cache telemetry.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ProbabilityModel;
use crate::address::Address;
use crate::cache::{Cache, CacheConfig, Event};
use crate::error::{Error, Result};
use crate::idf::{generate_keys, Idf, IndexVector};
use crate::seed::{derive_seed, rng_from};

/// Count of successes out of independent Bernoulli trials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinomialEstimate {
    pub successes: u64,
    pub trials: u64,
}

impl BinomialEstimate {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// Binomial standard deviation of the rate if the true probability is `p`.
    pub fn sigma(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Whether the observed rate lies within `k` binomial sigmas of `p`.
    pub fn agrees_with(&self, p: f64, k: f64) -> bool {
        (self.rate() - p).abs() <= k * self.sigma(p)
    }
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: u64,
}

impl MeanEstimate {
    pub fn agrees_with(&self, expected: f64, k: f64) -> bool {
        (self.mean - expected).abs() <= k * self.std_err
    }
}

fn idf_for(m: &ProbabilityModel, seed: u64) -> Result<Idf> {
    Idf::new(generate_keys(seed, m.d as usize)?, m.s as usize)
}

fn random_pairs(
    m: &ProbabilityModel,
    pairs: u64,
    seed: u64,
    hit: impl Fn(&[u32], &[u32]) -> bool,
) -> Result<BinomialEstimate> {
    let idf = idf_for(m, derive_seed(seed, 0))?;
    let mut rng = rng_from(derive_seed(seed, 1));
    let d = m.d as usize;
    let (mut a, mut b) = (vec![0; d], vec![0; d]);
    let mut successes = 0;
    for _ in 0..pairs {
        idf.fill(Address::random(&mut rng), &mut a);
        idf.fill(Address::random(&mut rng), &mut b);
        successes += hit(&a, &b) as u64;
    }
    Ok(BinomialEstimate {
        successes,
        trials: pairs,
    })
}

/// Fraction of random address pairs that collide in every division.
pub fn full_collision(m: &ProbabilityModel, pairs: u64, seed: u64) -> Result<BinomialEstimate> {
    random_pairs(m, pairs, seed, |a, b| a == b)
}

/// Fraction of random address pairs that collide in at least one division.
pub fn partial_collision(m: &ProbabilityModel, pairs: u64, seed: u64) -> Result<BinomialEstimate> {
    random_pairs(m, pairs, seed, |a, b| a.iter().zip(b).any(|(x, y)| x == y))
}

/// Mean number of proxy pairs per random `X` for random `C`, `Y`: division
/// pairs `(i, j)` with `X` sharing `C`'s index in `i` and `Y`'s index in `j`.
pub fn proxy_pairs(m: &ProbabilityModel, samples: u64, seed: u64) -> Result<MeanEstimate> {
    let idf = idf_for(m, derive_seed(seed, 0))?;
    let mut rng = rng_from(derive_seed(seed, 1));
    let d = m.d as usize;
    let (mut c, mut x, mut y) = (vec![0; d], vec![0; d], vec![0; d]);
    let (mut sum, mut sum_sq) = (0f64, 0f64);
    for _ in 0..samples {
        idf.fill(Address::random(&mut rng), &mut c);
        idf.fill(Address::random(&mut rng), &mut x);
        idf.fill(Address::random(&mut rng), &mut y);
        let with_c = x.iter().zip(&c).filter(|(a, b)| a == b).count();
        let with_y = x.iter().zip(&y).filter(|(a, b)| a == b).count();
        let k = (with_c * with_y) as f64;
        sum += k;
        sum_sq += k * k;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean) * n / (n - 1.0);
    Ok(MeanEstimate {
        mean,
        std_err: (var / n).sqrt(),
        n: samples,
    })
}

fn shared(a: &IndexVector, b: &IndexVector) -> usize {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .filter(|(x, y)| x == y)
        .count()
}

/// Addresses `(c, x, y)`: `x` shares exactly one division with `c`, `y`
/// shares exactly one with `x` and none with `c`.
pub fn second_order_triple(idf: &Idf, rng: &mut impl Rng) -> (Address, Address, Address) {
    let c = Address::random(rng);
    let ci = idf.indices(c);
    let (x, xi) = loop {
        let x = Address::random(rng);
        let xi = idf.indices(x);
        if shared(&xi, &ci) == 1 {
            break (x, xi);
        }
    };
    loop {
        let y = Address::random(rng);
        let yi = idf.indices(y);
        if shared(&yi, &xi) == 1 && shared(&yi, &ci) == 0 {
            return (c, x, y);
        }
    }
}

/// Scripted second-order eviction on a Chameleon cache with one way per
/// division. Each trial starts from a cache holding none of `c`, `x`, `y`,
/// accesses `c`, `x`, then `y`, and succeeds if the access to `y` displaces
/// `x`, whose reinsertion displaces `c`.
pub fn second_order_eviction(
    s: usize,
    w: usize,
    trials: u64,
    seed: u64,
) -> Result<BinomialEstimate> {
    if trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    let mut cache = Cache::new(CacheConfig::chameleon(s, w, w, 2).with_seed(seed))?;
    let idf = cache.idf().expect("keyed model").clone();
    let (c, x, y) = second_order_triple(&idf, &mut rng_from(derive_seed(seed, 2)));
    let mut successes = 0;
    for _ in 0..trials {
        for a in [c, x, y] {
            cache.invalidate(a);
        }
        cache.lookup(c);
        cache.lookup(x);
        cache.telemetry_drain();
        cache.lookup(y);
        let hit = cache.telemetry_drain().iter().any(|r| {
            r.event
                == Event::ReinsertSwap {
                    inserted: x,
                    displaced: Some(c),
                }
        });
        successes += hit as u64;
    }
    Ok(BinomialEstimate { successes, trials })
}
