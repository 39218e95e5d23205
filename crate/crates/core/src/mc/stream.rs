use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Seeded, addressable source of randomness.
///
/// ChaCha8 keyed by `seed` and positioned on `stream_id`, so the sequence
/// depends only on `(seed, stream_id)` and not on the platform.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RandomStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Independent child stream addressed by `index`; does not advance
    /// `self`.
    pub fn derive(&self, index: u64) -> RandomStream {
        RandomStream::new(self.seed, mix(self.stream_id ^ mix(index.wrapping_add(1))))
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn fill_gaussian(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.rng.sample(StandardNormal);
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

// splitmix64 finaliser
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `dim` independent standard normal coordinates.
pub fn gaussian_vector(stream: &mut RandomStream, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    stream.fill_gaussian(&mut v);
    v
}

/// Uniform point on the unit sphere, by normalising a Gaussian vector.
pub fn sphere_point(stream: &mut RandomStream, dim: usize) -> Vec<f64> {
    loop {
        let mut v = gaussian_vector(stream, dim);
        let len = crate::numlin::norm(&v);
        if len > 0.0 {
            v.iter_mut().for_each(|x| *x /= len);
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_address_same_sequence() {
        let mut a = RandomStream::new(42, 3);
        let mut b = RandomStream::new(42, 3);
        for _ in 0..100 {
            assert_eq!(a.gaussian().to_bits(), b.gaussian().to_bits());
        }
        let mut c = RandomStream::new(42, 4);
        let mut a = RandomStream::new(42, 3);
        assert_ne!(a.next_u64(), c.next_u64());
    }

    #[test]
    fn derived_streams_are_distinct_and_stable() {
        let root = RandomStream::new(1, 0);
        let ids: Vec<u64> = (0..50).map(|i| root.derive(i).stream_id()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), ids.len());
        assert_eq!(
            root.derive(7).stream_id(),
            RandomStream::new(1, 0).derive(7).stream_id()
        );
    }

    #[test]
    fn gaussian_moments() {
        let mut s = RandomStream::new(42, 0);
        let n = 1_000_000;
        let dim = 3;
        let mut sum = vec![0.0; dim];
        let mut cross = vec![vec![0.0; dim]; dim];
        let mut v = vec![0.0; dim];
        for _ in 0..n {
            s.fill_gaussian(&mut v);
            for i in 0..dim {
                sum[i] += v[i];
                for j in 0..dim {
                    cross[i][j] += v[i] * v[j];
                }
            }
        }
        let nf = n as f64;
        for i in 0..dim {
            assert!((sum[i] / nf).abs() <= 4.0 / nf.sqrt());
            for j in 0..dim {
                let target = if i == j { 1.0 } else { 0.0 };
                // Var(x_i x_j) is 2 on the diagonal and 1 off it.
                let se = if i == j {
                    (2.0 / nf).sqrt()
                } else {
                    (1.0 / nf).sqrt()
                };
                assert!((cross[i][j] / nf - target).abs() <= 4.0 * se);
            }
        }
    }

    #[test]
    fn sphere_points_have_unit_length() {
        let mut s = RandomStream::new(5, 5);
        for _ in 0..100 {
            let p = sphere_point(&mut s, 4);
            assert!((crate::numlin::norm(&p) - 1.0).abs() < 1e-14);
        }
    }
}
