//! Counter-based pseudo-random numbers and Box-Muller normals.
//!
//! Value `i` of a stream is `splitmix64(key + (i + 1) * 0x9E3779B97F4A7C15)`,
//! where `key = splitmix64(seed ^ splitmix64(stream))`. Uniforms take the top
//! 53 bits, offset by half a step so they lie strictly inside `(0, 1)`.
//! Normal `2j` and `2j + 1` are the cosine and sine outputs of Box-Muller
//! applied to uniforms `2j` and `2j + 1`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output function.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        CounterRng {
            key: splitmix64(seed ^ splitmix64(stream)),
        }
    }

    #[inline]
    pub fn u64_at(&self, counter: u64) -> u64 {
        splitmix64(
            self.key
                .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)),
        )
    }

    #[inline]
    pub fn uniform_at(&self, counter: u64) -> f64 {
        ((self.u64_at(counter) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal number `index` of the stream.
    #[inline]
    pub fn normal_at(&self, index: u64) -> f64 {
        let pair = index / 2;
        let u1 = self.uniform_at(2 * pair);
        let u2 = self.uniform_at(2 * pair + 1);
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        if index.is_multiple_of(2) {
            radius * angle.cos()
        } else {
            radius * angle.sin()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // first outputs of the reference SplitMix64 generator seeded with 0
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(GOLDEN), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a = CounterRng::new(7, 0);
        let b = CounterRng::new(7, 1);
        assert_ne!(a.u64_at(0), b.u64_at(0));
        assert_eq!(a.u64_at(5), CounterRng::new(7, 0).u64_at(5));
    }

    #[test]
    fn uniform_open_interval() {
        let r = CounterRng::new(1, 2);
        for i in 0..10_000 {
            let u = r.uniform_at(i);
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn normal_moments() {
        let r = CounterRng::new(42, 0);
        let n = 200_000u64;
        let (mut s, mut s2) = (0.0, 0.0);
        for i in 0..n {
            let z = r.normal_at(i);
            s += z;
            s2 += z * z;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }
}
