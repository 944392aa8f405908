//! Seeded pseudo-random streams.
//!
//! One generator type is used everywhere: xoshiro256++ seeded through
//! splitmix64, with normal variates via Box–Muller. Determinism is guaranteed
//! within this implementation (same seed, same stream); bit-exactness across
//! implementations is not a goal.
//!
//! Derived seeds ([`derive_seed`]) let a master seed fan out into independent
//! per-instance and per-run streams, so results do not depend on thread
//! scheduling or on which subset of a grid is re-run.

/// splitmix64 finalizer: one mixing step of the splitmix64 generator.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a list of tag words.
///
/// Used as `derive_seed(master, &[dist_tag, n, index])` so any single cell or
/// instance of a benchmark grid can be reproduced in isolation.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut h = mix(master);
    for &p in parts {
        h = mix(h ^ mix(p));
    }
    h
}

/// xoshiro256++ stream with Box–Muller normal variates.
#[derive(Clone, Debug)]
pub struct Rng {
    state: [u64; 4],
    cached_normal: Option<f64>,
}

impl Rng {
    /// Seed the four state words through splitmix64, per the generator
    /// authors' recommendation.
    pub fn seed_from(seed: u64) -> Self {
        let mut s = seed;
        let mut state = [0u64; 4];
        for w in &mut state {
            s = s.wrapping_add(0x9e37_79b9_7f4a_7c15);
            *w = mix(s.wrapping_sub(0x9e37_79b9_7f4a_7c15));
        }
        // All-zero state is invalid for xoshiro; cannot happen from mix of
        // distinct inputs, but guard anyway.
        if state == [0; 4] {
            state = [0x9e37_79b9_7f4a_7c15, 1, 2, 3];
        }
        Rng {
            state,
            cached_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`; safe as a log argument.
    fn next_f64_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Unbiased uniform draw from `0..m` (Lemire's multiply-shift with
    /// rejection).
    pub fn below(&mut self, m: u64) -> u64 {
        assert!(m > 0, "below(0)");
        let threshold = m.wrapping_neg() % m; // 2^64 mod m
        loop {
            let x = self.next_u64();
            let wide = (x as u128) * (m as u128);
            if (wide as u64) >= threshold {
                return (wide >> 64) as u64;
            }
        }
    }

    /// Standard normal via Box–Muller; pairs are cached, so consecutive calls
    /// consume two uniforms every other call.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        let u1 = self.next_f64_open();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.cached_normal = Some(r * theta.sin());
        r * theta.cos()
    }
}
