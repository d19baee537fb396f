//! Deterministic pseudo-random source.
//!
//! Every problem instance is identified by a `(class, dimension, index)`
//! triple; the generator state is derived from it by hashing a canonical
//! seed string, so regenerating an instance is bit-reproducible within one
//! build. Two independent streams exist per instance: `geo` drives the
//! geometry draws and `aff` the affine objective scaling, so that the
//! geometry can be held fixed while the scaling varies.

use crate::{Error, Result};

const MT_N: usize = 624;
const MT_M: usize = 397;
const MT_MATRIX_A: u32 = 0x9908_b0df;
const MT_UPPER_MASK: u32 = 0x8000_0000;
const MT_LOWER_MASK: u32 = 0x7fff_ffff;

/// 32-bit Mersenne twister with the standard initialization.
#[derive(Debug, Clone)]
pub struct Mt19937 {
    state: [u32; MT_N],
    index: usize,
}

impl Mt19937 {
    pub fn new(seed: u32) -> Self {
        let mut state = [0u32; MT_N];
        state[0] = seed;
        for i in 1..MT_N {
            state[i] = 1_812_433_253u32
                .wrapping_mul(state[i - 1] ^ (state[i - 1] >> 30))
                .wrapping_add(i as u32);
        }
        Mt19937 {
            state,
            index: MT_N,
        }
    }

    fn twist(&mut self) {
        for i in 0..MT_N {
            let y = (self.state[i] & MT_UPPER_MASK) | (self.state[(i + 1) % MT_N] & MT_LOWER_MASK);
            let mut next = self.state[(i + MT_M) % MT_N] ^ (y >> 1);
            if y & 1 == 1 {
                next ^= MT_MATRIX_A;
            }
            self.state[i] = next;
        }
        self.index = 0;
    }

    pub fn next_u32(&mut self) -> u32 {
        if self.index >= MT_N {
            self.twist();
        }
        let mut y = self.state[self.index];
        self.index += 1;
        y ^= y >> 11;
        y ^= (y << 7) & 0x9d2c_5680;
        y ^= (y << 15) & 0xefc6_0000;
        y ^= y >> 18;
        y
    }
}

/// Which of the two per-instance streams a seed refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    /// Geometry draws: orthogonal matrices, spectra, delta, midpoint.
    Geo,
    /// Affine scaling draws: a_i, b_i.
    Aff,
}

impl StreamTag {
    pub fn as_str(self) -> &'static str {
        match self {
            StreamTag::Geo => "geo",
            StreamTag::Aff => "aff",
        }
    }
}

/// Identity of one instance stream: hashing its canonical string yields the seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceKey {
    pub class_name: String,
    pub dimension: usize,
    pub index: u64,
    pub stream_tag: StreamTag,
}

impl InstanceKey {
    pub fn new(class_name: &str, dimension: usize, index: u64, stream_tag: StreamTag) -> Result<Self> {
        validate_class_name(class_name)?;
        if dimension < 2 {
            return Err(Error::Validation(format!(
                "dimension must be at least 2, got {dimension}"
            )));
        }
        Ok(InstanceKey {
            class_name: class_name.to_owned(),
            dimension,
            index,
            stream_tag,
        })
    }

    /// Canonical ASCII seed string `<class_name>:<dimension>:<index>:<stream_tag>`.
    ///
    /// This string is part of the instance-identity contract; changing it
    /// changes every generated instance.
    pub fn seed_string(&self) -> String {
        format!(
            "{}:{}:{}:{}",
            self.class_name,
            self.dimension,
            self.index,
            self.stream_tag.as_str()
        )
    }
}

/// Check a class name against the grammar `[1-9](|or/)(C|I|J)`.
pub fn validate_class_name(name: &str) -> Result<()> {
    let chars: Vec<char> = name.chars().collect();
    if chars.len() != 3 {
        return Err(Error::Validation(format!(
            "class name '{name}' must have exactly 3 characters (case, alignment, shape)"
        )));
    }
    if !('1'..='9').contains(&chars[0]) {
        return Err(Error::Validation(format!(
            "class name '{name}': case digit '{}' out of range 1-9",
            chars[0]
        )));
    }
    if chars[1] != '|' && chars[1] != '/' {
        return Err(Error::Validation(format!(
            "class name '{name}': alignment marker '{}' must be '|' or '/'",
            chars[1]
        )));
    }
    if !matches!(chars[2], 'C' | 'I' | 'J') {
        return Err(Error::Validation(format!(
            "class name '{name}': shape letter '{}' must be C, I or J",
            chars[2]
        )));
    }
    Ok(())
}

/// FNV-1a 32-bit hash.
pub fn fnv1a32(bytes: &[u8]) -> u32 {
    let mut hash: u32 = 2_166_136_261;
    for &b in bytes {
        hash ^= b as u32;
        hash = hash.wrapping_mul(16_777_619);
    }
    hash
}

/// Seed for an instance stream: FNV-1a of the canonical seed string.
pub fn seed_from_key(key: &InstanceKey) -> u32 {
    fnv1a32(key.seed_string().as_bytes())
}

/// Mersenne-twister stream with a Box-Muller spare slot.
#[derive(Debug, Clone)]
pub struct RandomStream {
    mt: Mt19937,
    cached_gaussian: Option<f64>,
}

impl RandomStream {
    pub fn from_seed(seed: u32) -> Self {
        RandomStream {
            mt: Mt19937::new(seed),
            cached_gaussian: None,
        }
    }

    pub fn from_key(key: &InstanceKey) -> Self {
        Self::from_seed(seed_from_key(key))
    }

    /// Uniform double in [0, 1) with 53-bit resolution from two 32-bit words
    /// (the genrand_res53 construction).
    pub fn next_uniform(&mut self) -> f64 {
        let a = (self.mt.next_u32() >> 5) as f64;
        let b = (self.mt.next_u32() >> 6) as f64;
        (a * 67_108_864.0 + b) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal variate via Box-Muller, caching the sine twin.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.cached_gaussian.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let (z0, z1) = box_muller(u1, u2);
        self.cached_gaussian = Some(z1);
        z0
    }

    /// Uniform permutation of {0..n-1} by Fisher-Yates, swapping downward.
    pub fn sample_permutation(&mut self, n: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            let j = (self.next_uniform() * (k + 1) as f64) as usize;
            perm.swap(k, j.min(k));
        }
        perm
    }

    /// Index uniform on {0..n-1}.
    pub fn sample_index(&mut self, n: usize) -> usize {
        ((self.next_uniform() * n as f64) as usize).min(n - 1)
    }

    /// Vector of standard normal components, each redrawn until |value| <= bound.
    pub fn sample_truncated_gaussian_vector(&mut self, d: usize, bound: f64) -> Vec<f64> {
        (0..d)
            .map(|_| loop {
                let z = self.next_gaussian();
                if z.abs() <= bound {
                    break z;
                }
            })
            .collect()
    }

    /// Vector of d i.i.d. standard normal components.
    pub fn sample_gaussian_vector(&mut self, d: usize) -> Vec<f64> {
        (0..d).map(|_| self.next_gaussian()).collect()
    }
}

fn box_muller(u1: f64, u2: f64) -> (f64, f64) {
    // log(0) guard: the smallest positive double keeps the radius finite.
    let u1 = if u1 == 0.0 { f64::from_bits(1) } else { u1 };
    let r = (-2.0 * u1.ln()).sqrt();
    let phi = 2.0 * std::f64::consts::PI * u2;
    (r * phi.cos(), r * phi.sin())
}
