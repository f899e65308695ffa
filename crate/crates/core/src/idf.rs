//! Keyed index derivation: address -> one set index per cache division.
//!
//! Each division owns an independent key. The address is run through a
//! reduced-round Speck64/128 permutation under that key and the low
//! `log2(s)` bits of the ciphertext select the set. Speck is used as a fast,
//! well-understood ARX permutation with good statistical diffusion; the
//! simulator does not rely on its cryptographic strength.

use std::fmt;

use rand::Rng;

use crate::address::Address;
use crate::error::{Error, Result};
use crate::seed::rng_from;

/// Rounds used for index derivation. Full Speck64/128 has 27.
pub const IDF_ROUNDS: usize = 8;

/// Rounds of the full Speck64/128 cipher.
pub const SPECK64_128_ROUNDS: usize = 27;

/// Key of one division.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct IdfKey {
    /// 128 bits of key material.
    pub material: u128,
    /// Monotonically increasing re-key generation.
    pub generation: u64,
}

impl IdfKey {
    pub fn new(material: u128, generation: u64) -> Self {
        IdfKey {
            material,
            generation,
        }
    }

    /// Lowercase hexadecimal, 32 digits. This is the report serialization.
    pub fn to_hex(&self) -> String {
        format!("{:032x}", self.material)
    }

    pub fn from_hex(s: &str, generation: u64) -> Result<Self> {
        let material = u128::from_str_radix(s.trim(), 16)
            .map_err(|e| Error::Parse(format!("bad key hex {s:?}: {e}")))?;
        Ok(IdfKey::new(material, generation))
    }
}

impl fmt::Debug for IdfKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IdfKey(gen={}, {})", self.generation, self.to_hex())
    }
}

/// Draws `d` keys for generation 0 from `seed`.
pub fn generate_keys(seed: u64, d: usize) -> Result<Vec<IdfKey>> {
    generate_keys_with(&mut rng_from(seed), d, 0)
}

/// Draws `d` pairwise-distinct keys of the given generation from `rng`.
pub fn generate_keys_with<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    generation: u64,
) -> Result<Vec<IdfKey>> {
    if d == 0 {
        return Err(Error::config("division count must be at least 1"));
    }
    let mut keys: Vec<IdfKey> = Vec::with_capacity(d);
    while keys.len() < d {
        let k = IdfKey::new(rng.random::<u128>(), generation);
        if keys.iter().all(|o| o.material != k.material) {
            keys.push(k);
        }
    }
    Ok(keys)
}

/// Set indices for each division, in division order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexVector(pub Vec<u32>);

impl IndexVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, division: usize) -> usize {
        self.0[division] as usize
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Whether the two vectors agree in at least one division.
    pub fn shares_index_with(&self, other: &IndexVector) -> bool {
        self.0.iter().zip(&other.0).any(|(a, b)| a == b)
    }
}

/// Speck64/128 round keys.
#[derive(Clone, Debug)]
pub struct Speck64 {
    round_keys: Vec<u32>,
}

impl Speck64 {
    pub fn new(key: u128, rounds: usize) -> Self {
        let mut k = key as u32;
        let mut l = [(key >> 32) as u32, (key >> 64) as u32, (key >> 96) as u32];
        let mut round_keys = Vec::with_capacity(rounds);
        for i in 0..rounds {
            round_keys.push(k);
            let li = l[i % 3];
            let next_l = k.wrapping_add(li.rotate_right(8)) ^ (i as u32);
            l[i % 3] = next_l;
            k = k.rotate_left(3) ^ next_l;
        }
        Speck64 { round_keys }
    }

    #[inline]
    pub fn encrypt(&self, block: u64) -> u64 {
        let mut x = (block >> 32) as u32;
        let mut y = block as u32;
        for &rk in &self.round_keys {
            x = x.rotate_right(8).wrapping_add(y) ^ rk;
            y = y.rotate_left(3) ^ x;
        }
        ((x as u64) << 32) | y as u64
    }
}

/// Divisions processed together by [`Idf::fill`].
const LANES: usize = 8;

/// Index derivation function for one key generation.
#[derive(Clone, Debug)]
pub struct Idf {
    keys: Vec<IdfKey>,
    ciphers: Vec<Speck64>,
    /// Round keys transposed to `[chunk][round][lane]` so that one round of
    /// every division in a chunk runs as a single loop over lanes.
    lanes: Vec<[u32; LANES]>,
    avx2: bool,
    sets: usize,
    mask: u64,
}

impl Idf {
    pub fn new(keys: Vec<IdfKey>, sets: usize) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::config("at least one IDF key is required"));
        }
        if !sets.is_power_of_two() {
            return Err(Error::config(format!(
                "set count s={sets} is not a power of two"
            )));
        }
        let ciphers: Vec<Speck64> = keys
            .iter()
            .map(|k| Speck64::new(k.material, IDF_ROUNDS))
            .collect();
        let mut lanes = Vec::new();
        for chunk in ciphers.chunks(LANES) {
            for r in 0..IDF_ROUNDS {
                let mut rk = [0u32; LANES];
                for (l, c) in chunk.iter().enumerate() {
                    rk[l] = c.round_keys[r];
                }
                lanes.push(rk);
            }
        }
        Ok(Idf {
            keys,
            ciphers,
            lanes,
            avx2: detect_avx2(),
            sets,
            mask: sets as u64 - 1,
        })
    }

    pub fn keys(&self) -> &[IdfKey] {
        &self.keys
    }

    pub fn divisions(&self) -> usize {
        self.keys.len()
    }

    pub fn sets(&self) -> usize {
        self.sets
    }

    /// Set index of `a` in a single division.
    #[inline]
    pub fn index(&self, a: Address, division: usize) -> u32 {
        (self.ciphers[division].encrypt(a.0) & self.mask) as u32
    }

    /// Writes one index per division into `out`.
    #[inline]
    pub fn fill(&self, a: Address, out: &mut [u32]) {
        if self.ciphers.len() == 1 {
            out[0] = self.index(a, 0);
            return;
        }
        #[cfg(target_arch = "x86_64")]
        if self.avx2 {
            // SAFETY: `avx2` is only set after runtime detection.
            unsafe { fill_avx2(&self.lanes, self.mask, a, out) };
            return;
        }
        fill_lanes(&self.lanes, self.mask, a, out);
    }

    pub fn indices(&self, a: Address) -> IndexVector {
        let mut v = vec![0; self.divisions()];
        self.fill(a, &mut v);
        IndexVector(v)
    }
}

fn detect_avx2() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::is_x86_feature_detected!("avx2")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

#[inline(always)]
fn fill_lanes(lanes: &[[u32; LANES]], mask: u64, a: Address, out: &mut [u32]) {
    let (hi, lo) = ((a.0 >> 32) as u32, a.0 as u32);
    for (chunk, dst) in out.chunks_mut(LANES).enumerate() {
        let mut x = [hi; LANES];
        let mut y = [lo; LANES];
        for rk in &lanes[chunk * IDF_ROUNDS..(chunk + 1) * IDF_ROUNDS] {
            for l in 0..LANES {
                x[l] = x[l].rotate_right(8).wrapping_add(y[l]) ^ rk[l];
                y[l] = y[l].rotate_left(3) ^ x[l];
            }
        }
        for (l, slot) in dst.iter_mut().enumerate() {
            *slot = ((((x[l] as u64) << 32) | y[l] as u64) & mask) as u32;
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn fill_avx2(lanes: &[[u32; LANES]], mask: u64, a: Address, out: &mut [u32]) {
    use std::arch::x86_64::*;
    let (hi, lo) = ((a.0 >> 32) as i32, a.0 as i32);
    let mut buf = [[0u32; LANES]; 2];
    for (chunk, dst) in out.chunks_mut(LANES).enumerate() {
        let mut x = _mm256_set1_epi32(hi);
        let mut y = _mm256_set1_epi32(lo);
        for rk in &lanes[chunk * IDF_ROUNDS..(chunk + 1) * IDF_ROUNDS] {
            let k = _mm256_loadu_si256(rk.as_ptr().cast());
            let xr = _mm256_or_si256(_mm256_srli_epi32::<8>(x), _mm256_slli_epi32::<24>(x));
            x = _mm256_xor_si256(_mm256_add_epi32(xr, y), k);
            let yr = _mm256_or_si256(_mm256_slli_epi32::<3>(y), _mm256_srli_epi32::<29>(y));
            y = _mm256_xor_si256(yr, x);
        }
        _mm256_storeu_si256(buf[0].as_mut_ptr().cast(), x);
        _mm256_storeu_si256(buf[1].as_mut_ptr().cast(), y);
        for (l, slot) in dst.iter_mut().enumerate() {
            *slot = ((((buf[0][l] as u64) << 32) | buf[1][l] as u64) & mask) as u32;
        }
    }
}

/// One-shot derivation: builds the permutation for `keys` and maps `a`.
pub fn derive_indices(a: Address, keys: &[IdfKey], s: usize) -> Result<IndexVector> {
    Ok(Idf::new(keys.to_vec(), s)?.indices(a))
}
