use std::thread;

use super::{AngleEstimate, Method, RandomStream, DEGENERATE_BUDGET_DIVISOR};
use crate::cones::{SimplicialCone, MEMBERSHIP_TOLERANCE};
use crate::error::{Error, Result};
use crate::numlin::{self, solve_in_place, GramMatrix};

enum Outcome {
    Hit,
    Miss,
    Degenerate,
}

trait Trial: Sync {
    type Scratch;

    fn scratch(&self) -> Self::Scratch;

    fn run(&self, rng: &mut RandomStream, scratch: &mut Self::Scratch) -> Outcome;
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    hits: u64,
    degenerate: u64,
}

/// Runs `n` valid trials, resampling degenerate ones; gives up once more
/// than `budget` degenerate trials have been seen.
fn run_trials<T: Trial>(trial: &T, n: u64, rng: &mut RandomStream, budget: u64) -> Tally {
    let mut scratch = trial.scratch();
    let mut tally = Tally::default();
    let mut valid = 0;
    while valid < n {
        match trial.run(rng, &mut scratch) {
            Outcome::Hit => {
                tally.hits += 1;
                valid += 1;
            }
            Outcome::Miss => valid += 1,
            Outcome::Degenerate => {
                tally.degenerate += 1;
                if tally.degenerate > budget {
                    break;
                }
            }
        }
    }
    tally
}

/// Sample budget and sharding for the estimators.
///
/// With one shard the trials consume the caller's stream directly; that
/// is the bit-reproducibility reference. With `s > 1` shards one `u64` is
/// drawn from the caller's stream and shard `i` runs on
/// `RandomStream::new(key, i)`, so results are reproducible for a fixed
/// `(seed, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    samples: u64,
    shards: usize,
}

impl MonteCarlo {
    pub fn new(samples: u64) -> Self {
        MonteCarlo { samples, shards: 1 }
    }

    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards.max(1);
        self
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn shards(&self) -> usize {
        self.shards
    }

    fn tally<T: Trial>(&self, trial: &T, stream: &mut RandomStream) -> Result<u64> {
        let n = self.samples;
        if n == 0 {
            return Err(Error::InvalidInput(
                "sample count must be at least 1".into(),
            ));
        }
        let budget = n / DEGENERATE_BUDGET_DIVISOR;
        let shards = (self.shards as u64).min(n);
        let tally = if shards <= 1 {
            run_trials(trial, n, stream, budget)
        } else {
            let key = rand::RngCore::next_u64(stream);
            let parts: Vec<Tally> = thread::scope(|scope| {
                let handles: Vec<_> = (0..shards)
                    .map(|i| {
                        let count = n / shards + u64::from(i < n % shards);
                        scope.spawn(move || {
                            let mut rng = RandomStream::new(key, i);
                            run_trials(trial, count, &mut rng, budget)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("shard panicked"))
                    .collect()
            });
            parts.iter().fold(Tally::default(), |acc, t| Tally {
                hits: acc.hits + t.hits,
                degenerate: acc.degenerate + t.degenerate,
            })
        };
        if tally.degenerate > budget {
            return Err(Error::NumericalInstability {
                degenerate: tally.degenerate,
                requested: n,
            });
        }
        Ok(tally.hits)
    }

    fn finish(
        &self,
        hits: u64,
        factor: f64,
        method: Method,
        stream: &RandomStream,
    ) -> AngleEstimate {
        AngleEstimate::from_hits(hits, self.samples, factor, method, stream)
    }

    /// Fraction of standard Gaussian points falling in a full-dimensional
    /// cone, tested against the dual normals.
    pub fn membership(
        &self,
        cone: &SimplicialCone,
        stream: &mut RandomStream,
    ) -> Result<AngleEstimate> {
        let frame = cone.dual_normals()?;
        let trial = MembershipTrial {
            dim: cone.dim(),
            normals: frame.normals().concat(),
        };
        let hits = self.tally(&trial, stream)?;
        Ok(self.finish(hits, 1.0, Method::Membership, stream))
    }

    /// Orthant probability of `N(0, Γ⁻¹)`. The Gram matrix is normalised to
    /// a correlation matrix first, so the estimate depends on `g` only
    /// through its correlations.
    pub fn orthant(&self, g: &GramMatrix, stream: &mut RandomStream) -> Result<AngleEstimate> {
        let corr = numlin::correlation(g)?;
        let factor = numlin::cholesky(&numlin::inverse(&corr)?)?;
        let trial = OrthantTrial {
            dim: g.dim(),
            factor: factor.as_slice().to_vec(),
        };
        let hits = self.tally(&trial, stream)?;
        Ok(self.finish(hits, 1.0, Method::Orthant, stream))
    }

    /// Expected vertex angle of the `d`-dimensional Gaussian simplex.
    pub fn hull(&self, d: usize, stream: &mut RandomStream) -> Result<AngleEstimate> {
        if d < 2 {
            return Err(Error::InvalidInput(format!(
                "hull estimator needs d >= 2, got {d}"
            )));
        }
        let hits = self.tally(&HullTrial { d }, stream)?;
        Ok(self.finish(hits, 0.5, Method::Hull, stream))
    }

    /// Angle of a `k`-dimensional cone in `R^m` from random
    /// `(m - k + 1)`-dimensional subspaces, realised as kernels of Gaussian
    /// `(k - 1) x m` matrices.
    pub fn crofton(
        &self,
        cone: &SimplicialCone,
        stream: &mut RandomStream,
    ) -> Result<AngleEstimate> {
        let trial = CroftonTrial {
            k: cone.dim(),
            m: cone.ambient_dim(),
            generators: cone.generators().concat(),
        };
        let hits = self.tally(&trial, stream)?;
        Ok(self.finish(hits, 0.5, Method::Crofton, stream))
    }
}

pub fn estimate_membership(
    c: &SimplicialCone,
    n: u64,
    stream: &mut RandomStream,
) -> Result<AngleEstimate> {
    MonteCarlo::new(n).membership(c, stream)
}

pub fn estimate_orthant(
    g: &GramMatrix,
    n: u64,
    stream: &mut RandomStream,
) -> Result<AngleEstimate> {
    MonteCarlo::new(n).orthant(g, stream)
}

pub fn estimate_hull(d: usize, n: u64, stream: &mut RandomStream) -> Result<AngleEstimate> {
    MonteCarlo::new(n).hull(d, stream)
}

pub fn estimate_crofton(
    c: &SimplicialCone,
    n: u64,
    stream: &mut RandomStream,
) -> Result<AngleEstimate> {
    MonteCarlo::new(n).crofton(c, stream)
}

struct MembershipTrial {
    dim: usize,
    normals: Vec<f64>,
}

impl Trial for MembershipTrial {
    type Scratch = Vec<f64>;

    fn scratch(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    fn run(&self, rng: &mut RandomStream, x: &mut Vec<f64>) -> Outcome {
        rng.fill_gaussian(x);
        let inside = self
            .normals
            .chunks_exact(self.dim)
            .all(|n| numlin::dot(n, x) >= -MEMBERSHIP_TOLERANCE);
        if inside {
            Outcome::Hit
        } else {
            Outcome::Miss
        }
    }
}

struct OrthantTrial {
    dim: usize,
    // Row-major lower Cholesky factor of the covariance.
    factor: Vec<f64>,
}

impl Trial for OrthantTrial {
    type Scratch = Vec<f64>;

    fn scratch(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    fn run(&self, rng: &mut RandomStream, z: &mut Vec<f64>) -> Outcome {
        rng.fill_gaussian(z);
        let d = self.dim;
        for k in 0..d {
            let row = &self.factor[k * d..k * d + k + 1];
            if numlin::dot(row, &z[..=k]) < 0.0 {
                return Outcome::Miss;
            }
        }
        Outcome::Hit
    }
}

struct HullTrial {
    d: usize,
}

struct HullScratch {
    points: Vec<f64>,
    system: Vec<f64>,
    rhs: Vec<f64>,
}

impl Trial for HullTrial {
    type Scratch = HullScratch;

    fn scratch(&self) -> HullScratch {
        let d = self.d;
        HullScratch {
            points: vec![0.0; (d + 1) * (d - 1)],
            system: vec![0.0; d * d],
            rhs: vec![0.0; d],
        }
    }

    // Y_0..Y_d in R^{d-1}; solve [Y_i - Y_0 ; 1ᵀ] λ = e_d and test λ >= 0.
    fn run(&self, rng: &mut RandomStream, s: &mut HullScratch) -> Outcome {
        let d = self.d;
        let e = d - 1;
        rng.fill_gaussian(&mut s.points);
        for r in 0..e {
            let base = s.points[r];
            for i in 0..d {
                s.system[r * d + i] = s.points[(i + 1) * e + r] - base;
            }
        }
        s.system[e * d..].iter_mut().for_each(|x| *x = 1.0);
        s.rhs.iter_mut().for_each(|x| *x = 0.0);
        s.rhs[e] = 1.0;
        if !solve_in_place(&mut s.system, &mut s.rhs, d) {
            return Outcome::Degenerate;
        }
        if s.rhs.iter().all(|&l| l >= -MEMBERSHIP_TOLERANCE) {
            Outcome::Hit
        } else {
            Outcome::Miss
        }
    }
}

struct CroftonTrial {
    k: usize,
    m: usize,
    generators: Vec<f64>,
}

struct CroftonScratch {
    rows: Vec<f64>,
    system: Vec<f64>,
    rhs: Vec<f64>,
}

impl Trial for CroftonTrial {
    type Scratch = CroftonScratch;

    fn scratch(&self) -> CroftonScratch {
        CroftonScratch {
            rows: vec![0.0; (self.k - 1) * self.m],
            system: vec![0.0; self.k * self.k],
            rhs: vec![0.0; self.k],
        }
    }

    // ker Y meets the cone iff 0 ∈ conv(Y v_1, ..., Y v_k).
    fn run(&self, rng: &mut RandomStream, s: &mut CroftonScratch) -> Outcome {
        let (k, m) = (self.k, self.m);
        rng.fill_gaussian(&mut s.rows);
        for r in 0..k - 1 {
            let y = &s.rows[r * m..(r + 1) * m];
            for (i, v) in self.generators.chunks_exact(m).enumerate() {
                s.system[r * k + i] = numlin::dot(y, v);
            }
        }
        s.system[(k - 1) * k..].iter_mut().for_each(|x| *x = 1.0);
        s.rhs.iter_mut().for_each(|x| *x = 0.0);
        s.rhs[k - 1] = 1.0;
        if !solve_in_place(&mut s.system, &mut s.rhs, k) {
            return Outcome::Degenerate;
        }
        if s.rhs.iter().all(|&l| l >= -MEMBERSHIP_TOLERANCE) {
            Outcome::Hit
        } else {
            Outcome::Miss
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::angle_exact;
    use crate::mc::compare;
    use crate::numlin::Matrix;
    use std::f64::consts::PI;

    const REGULAR_ANGLE_3D: f64 = 0.125 - 3.0 * 0.339_836_909_454_122 / (4.0 * PI);

    fn within(e: &AngleEstimate, truth: f64) -> bool {
        (e.value - truth).abs() <= 4.0 * e.std_error
    }

    fn regular_gram(d: usize) -> GramMatrix {
        let mut m = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = if i == j { 2.0 } else { 1.0 };
            }
        }
        GramMatrix::new(m).unwrap()
    }

    fn basis(m: usize, i: usize) -> Vec<f64> {
        (0..m).map(|k| if k == i { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn regular_angle_constant_matches_closed_form() {
        let closed = 0.125 + 3.0 * (-1.0f64 / 3.0).asin() / (4.0 * PI);
        assert!((REGULAR_ANGLE_3D - closed).abs() < 1e-16);
    }

    #[test]
    fn membership_examples() {
        let mut s = RandomStream::new(42, 0);
        let quadrant = SimplicialCone::new(vec![basis(2, 0), basis(2, 1)]).unwrap();
        let e = estimate_membership(&quadrant, 1_000_000, &mut s).unwrap();
        assert!(within(&e, 0.25), "{e:?}");
        assert!((e.std_error - 4.33e-4).abs() < 1e-5);

        let octant = SimplicialCone::new((0..3).map(|i| basis(3, i)).collect()).unwrap();
        assert!(within(
            &estimate_membership(&octant, 1_000_000, &mut s).unwrap(),
            0.125
        ));

        let regular = SimplicialCone::from_gram(&regular_gram(3)).unwrap();
        let e = estimate_membership(&regular, 1_000_000, &mut s).unwrap();
        assert!(within(&e, REGULAR_ANGLE_3D), "{e:?}");
    }

    #[test]
    fn orthant_examples() {
        let mut s = RandomStream::new(42, 1);
        for d in 1..5 {
            let e = estimate_orthant(&GramMatrix::identity(d), 200_000, &mut s).unwrap();
            assert!(within(&e, 0.5f64.powi(d as i32)), "{d}: {e:?}");
        }
        let half = GramMatrix::equicorrelated(2, 0.5).unwrap();
        let oracle = angle_exact(&half).unwrap();
        assert!((oracle - 1.0 / 6.0).abs() < 1e-15);
        assert!(within(
            &estimate_orthant(&half, 1_000_000, &mut s).unwrap(),
            oracle
        ));
        let e = estimate_orthant(&regular_gram(3), 1_000_000, &mut s).unwrap();
        assert!(within(&e, REGULAR_ANGLE_3D), "{e:?}");

        let bad = GramMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(
            estimate_orthant(&bad, 10, &mut s),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn orthant_depends_only_on_correlations() {
        let g =
            GramMatrix::from_rows(&[[4.0, 1.0, -0.5], [1.0, 9.0, 2.0], [-0.5, 2.0, 1.0]]).unwrap();
        let c = numlin::correlation(&g).unwrap();
        let a = estimate_orthant(&g, 50_000, &mut RandomStream::new(3, 3)).unwrap();
        let b = estimate_orthant(&c, 50_000, &mut RandomStream::new(3, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hull_examples() {
        let mut s = RandomStream::new(42, 2);
        let e = estimate_hull(2, 1_000_000, &mut s).unwrap();
        assert!(within(&e, 1.0 / 6.0), "{e:?}");
        assert!((e.std_error - 2.36e-4).abs() < 1e-5);

        let e = estimate_hull(3, 1_000_000, &mut s).unwrap();
        assert!(within(&e, REGULAR_ANGLE_3D), "{e:?}");

        let h = estimate_hull(4, 1_000_000, &mut s).unwrap();
        let o = estimate_orthant(&regular_gram(4), 1_000_000, &mut s).unwrap();
        assert!(compare(&h, &o).pass, "{h:?} {o:?}");

        assert!(matches!(
            estimate_hull(1, 10, &mut s),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn crofton_examples() {
        let mut s = RandomStream::new(42, 3);
        let quadrant = SimplicialCone::new(vec![basis(2, 0), basis(2, 1)]).unwrap();
        assert!(within(
            &estimate_crofton(&quadrant, 1_000_000, &mut s).unwrap(),
            0.25
        ));

        // pos(e_1 - e_0, ..., e_3 - e_0) in R^4.
        let gens = (1..=3)
            .map(|i| {
                basis(4, i)
                    .iter()
                    .zip(basis(4, 0))
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect();
        let lifted = SimplicialCone::new(gens).unwrap();
        let c = estimate_crofton(&lifted, 1_000_000, &mut s).unwrap();
        assert!(within(&c, REGULAR_ANGLE_3D), "{c:?}");
        let o = estimate_orthant(lifted.gram(), 1_000_000, &mut s).unwrap();
        assert!(compare(&c, &o).pass);
    }

    #[test]
    fn crofton_of_a_ray_is_one_half() {
        let ray = SimplicialCone::new(vec![vec![0.3, -1.0, 2.0]]).unwrap();
        let e = estimate_crofton(&ray, 1000, &mut RandomStream::new(1, 1)).unwrap();
        assert_eq!(e.value, 0.5);
    }

    #[test]
    fn estimators_are_deterministic() {
        let g = regular_gram(4);
        let run = |shards| {
            let mc = MonteCarlo::new(20_000).with_shards(shards);
            let mut s = RandomStream::new(99, 7);
            (mc.orthant(&g, &mut s).unwrap(), mc.hull(4, &mut s).unwrap())
        };
        assert_eq!(run(1), run(1));
        assert_eq!(run(4), run(4));
    }

    #[test]
    fn sharded_estimates_agree_with_single_shard() {
        let g = regular_gram(3);
        let one = MonteCarlo::new(400_000)
            .orthant(&g, &mut RandomStream::new(5, 0))
            .unwrap();
        let many = MonteCarlo::new(400_000)
            .with_shards(4)
            .orthant(&g, &mut RandomStream::new(5, 0))
            .unwrap();
        assert_eq!(many.n_samples, 400_000);
        assert_ne!(one.value, many.value);
        assert!(compare(&one, &many).pass);
    }

    #[test]
    fn zero_samples_rejected() {
        let mut s = RandomStream::new(1, 1);
        assert!(matches!(
            estimate_hull(3, 0, &mut s),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn coverage_of_two_sigma_intervals() {
        let cases = [
            regular_gram(3),
            GramMatrix::equicorrelated(2, -0.3).unwrap(),
        ];
        for g in &cases {
            let truth = angle_exact(g).unwrap();
            let root = RandomStream::new(2024, 0);
            let covered = (0..200)
                .filter(|&r| {
                    let e = estimate_orthant(g, 4000, &mut root.derive(r)).unwrap();
                    (e.value - truth).abs() <= 2.0 * e.std_error
                })
                .count();
            assert!(covered >= 180, "coverage {covered}/200");
        }
    }
}
