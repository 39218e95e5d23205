//! Sign-vector census of the arrangement cut out by the facet hyperplanes
//! of a full-dimensional simplex, all translated to pass through the
//! origin.
//!
//! With the normals `u_0, ..., u_d` from [`facet_normals`], a sign vector
//! `ε ∈ {+,-}^{d+1}` names the cone `D^ε = { y : ε_i <u_i, y> >= 0 }`. In
//! general position exactly `2^{d+1} - 2` of them have interior (all but
//! the constant patterns). The vertex cone at `x_k` is the pattern with a
//! single `-` at `k`, and its negation the pattern with a single `+`.
//!
//! Regions are discovered by sampling directions, and every reported region
//! carries the sampled interior direction that certifies it. Unbiased
//! Gaussian directions give the region frequencies; a second, targeted
//! sampler draws random points of the simplicial cones cut out by `d` of
//! the hyperplanes to find thin regions quickly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::{facet_normals, Simplex};
use crate::error::{Error, Result};
use crate::mc::{AngleEstimate, Method, RandomStream};
use crate::numlin::{self, dot, Matrix};

/// Certificates must clear every hyperplane by this much (unit direction).
const CERTIFICATE_MARGIN: f64 = 1e-12;

/// The targeted sampler stops once this many draws in a row (or ten times
/// the region count, if larger) found nothing new.
const MIN_STALE_WINDOW: u64 = 10_000;

const MAX_DISCOVERY_DRAWS: u64 = 2_000_000;

/// Log-range of the random positive weights used by the targeted sampler.
const LOG_WEIGHT_RANGE: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignVector {
    bits: u64,
    len: usize,
}

impl SignVector {
    pub fn from_signs(positive: &[bool]) -> Self {
        assert!(positive.len() <= 64);
        let bits = positive
            .iter()
            .enumerate()
            .fold(0u64, |b, (i, &p)| b | (u64::from(p) << i));
        SignVector {
            bits,
            len: positive.len(),
        }
    }

    /// All `+` except a `-` at `k`: the vertex cone at `x_k`.
    pub fn single_minus(len: usize, k: usize) -> Self {
        SignVector {
            bits: full_mask(len) ^ (1 << k),
            len,
        }
    }

    /// All `-` except a `+` at `k`: the negated vertex cone at `x_k`.
    pub fn single_plus(len: usize, k: usize) -> Self {
        SignVector { bits: 1 << k, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_positive(&self, i: usize) -> bool {
        self.bits & (1 << i) != 0
    }

    pub fn negated(&self) -> Self {
        SignVector {
            bits: full_mask(self.len) ^ self.bits,
            len: self.len,
        }
    }

    pub fn plus_count(&self) -> usize {
        self.bits.count_ones() as usize
    }
}

fn full_mask(len: usize) -> u64 {
    if len == 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.is_positive(i) { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for SignVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let signs = s
            .chars()
            .map(|c| match c {
                '+' => Ok(true),
                '-' => Ok(false),
                other => Err(Error::InvalidInput(format!("bad sign character '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SignVector::from_signs(&signs))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub sign: SignVector,
    /// Gaussian directions that fell into the region.
    pub hits: u64,
    /// A unit direction strictly inside the region.
    pub certificate: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionCensus {
    dim: usize,
    regions: Vec<Region>,
    n_samples: u64,
    discovery_draws: u64,
    seed: u64,
    stream_id: u64,
}

impl RegionCensus {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `2^{d+1} - 2`.
    pub fn expected_count(&self) -> usize {
        expected_region_count(self.dim)
    }

    /// Number of certified regions.
    pub fn count(&self) -> usize {
        self.regions
            .iter()
            .filter(|r| r.certificate.is_some())
            .count()
    }

    pub fn is_complete(&self) -> bool {
        self.count() == self.expected_count()
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn sign_vectors(&self) -> Vec<SignVector> {
        self.regions
            .iter()
            .filter(|r| r.certificate.is_some())
            .map(|r| r.sign)
            .collect()
    }

    pub fn region(&self, sign: SignVector) -> Option<&Region> {
        self.regions.iter().find(|r| r.sign == sign)
    }

    /// Gaussian directions used for the frequencies.
    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    /// Extra directions drawn by the targeted sampler.
    pub fn discovery_draws(&self) -> u64 {
        self.discovery_draws
    }

    pub fn total_hits(&self) -> u64 {
        self.regions.iter().map(|r| r.hits).sum()
    }

    fn estimate(&self, hits: u64, factor: f64) -> AngleEstimate {
        let p = hits as f64 / self.n_samples as f64;
        AngleEstimate {
            value: factor * p,
            std_error: factor * (p * (1.0 - p) / self.n_samples as f64).sqrt(),
            n_samples: self.n_samples,
            method: Method::Membership,
            seed: self.seed,
            stream_id: self.stream_id,
        }
    }

    /// Each region's angle as its hit frequency; these sum to one.
    pub fn region_angles(&self) -> Vec<(SignVector, AngleEstimate)> {
        self.regions
            .iter()
            .map(|r| (r.sign, self.estimate(r.hits, 1.0)))
            .collect()
    }

    fn hits_of(&self, signs: impl Iterator<Item = SignVector>) -> u64 {
        signs.map(|s| self.region(s).map_or(0, |r| r.hits)).sum()
    }

    /// Angle sum from the vertex-cone regions alone.
    pub fn internal_angle_sum(&self) -> AngleEstimate {
        let len = self.dim + 1;
        let hits = self.hits_of((0..len).map(|k| SignVector::single_minus(len, k)));
        self.estimate(hits, 1.0)
    }

    /// Angle sum as half the mass of the vertex cones and their negations.
    pub fn angle_sum_estimate(&self) -> AngleEstimate {
        let len = self.dim + 1;
        let hits = self.hits_of((0..len).flat_map(|k| {
            [
                SignVector::single_minus(len, k),
                SignVector::single_plus(len, k),
            ]
        }));
        self.estimate(hits, 0.5)
    }
}

pub fn expected_region_count(d: usize) -> usize {
    (1usize << (d + 1)) - 2
}

struct Tracker<'a> {
    normals: &'a [Vec<f64>],
    regions: BTreeMap<SignVector, Region>,
    values: Vec<f64>,
}

impl Tracker<'_> {
    /// Classifies `y`; returns the pattern and whether it was newly
    /// certified.
    fn observe(&mut self, y: &[f64], count_hit: bool) -> (SignVector, bool) {
        let len = numlin::norm(y);
        let mut bits = 0u64;
        let mut margin = f64::INFINITY;
        for (i, u) in self.normals.iter().enumerate() {
            let v = dot(u, y);
            self.values[i] = v;
            if v >= 0.0 {
                bits |= 1 << i;
            }
            margin = margin.min(v.abs() / len);
        }
        let sign = SignVector {
            bits,
            len: self.normals.len(),
        };
        let entry = self.regions.entry(sign).or_insert(Region {
            sign,
            hits: 0,
            certificate: None,
        });
        if count_hit {
            entry.hits += 1;
        }
        let mut fresh = false;
        if entry.certificate.is_none() && margin > CERTIFICATE_MARGIN {
            entry.certificate = Some(y.iter().map(|x| x / len).collect());
            fresh = true;
        }
        (sign, fresh)
    }

    fn certified(&self) -> usize {
        self.regions
            .values()
            .filter(|r| r.certificate.is_some())
            .count()
    }
}

/// Census of the facet-hyperplane arrangement of a full-dimensional
/// simplex, with `n_samples` Gaussian directions for the frequencies.
pub fn region_census(
    s: &Simplex,
    n_samples: u64,
    stream: &mut RandomStream,
) -> Result<RegionCensus> {
    if n_samples == 0 {
        return Err(Error::InvalidInput(
            "sample count must be at least 1".into(),
        ));
    }
    let normals = facet_normals(s)?;
    let d = s.dim();
    let bound = expected_region_count(d);
    let violation = |found: usize| Error::GeneralPositionViolation {
        found,
        bound,
        vertices: s.vertices().to_vec(),
    };
    let (seed, stream_id) = (stream.seed(), stream.stream_id());
    let mut tracker = Tracker {
        normals: &normals,
        regions: BTreeMap::new(),
        values: vec![0.0; d + 1],
    };

    let mut x = vec![0.0; d];
    for _ in 0..n_samples {
        stream.fill_gaussian(&mut x);
        tracker.observe(&x, true);
    }
    if tracker.certified() > bound {
        return Err(violation(tracker.certified()));
    }

    // Dual bases of every d-subset of the normals: columns w_l with
    // <u_i, w_l> = δ_il over the subset.
    let dual_bases = (0..=d)
        .map(|skip| {
            let rows: Vec<&[f64]> = normals
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, u)| u.as_slice())
                .collect();
            let m = Matrix::from_rows(&rows)?;
            numlin::invert(&m).map(|inv| inv.transpose().to_rows())
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|_| violation(tracker.certified()))?;

    let mut draws = 0u64;
    let mut stale = 0u64;
    let mut y = vec![0.0; d];
    while tracker.certified() < bound
        && stale < MIN_STALE_WINDOW.max(10 * tracker.certified() as u64)
        && draws < MAX_DISCOVERY_DRAWS
    {
        let skip = stream.below(d + 1);
        y.iter_mut().for_each(|v| *v = 0.0);
        for w in &dual_bases[skip] {
            let sign = if stream.uniform() < 0.5 { -1.0 } else { 1.0 };
            let weight = ((2.0 * stream.uniform() - 1.0) * LOG_WEIGHT_RANGE).exp();
            y.iter_mut()
                .zip(w)
                .for_each(|(a, b)| *a += sign * weight * b);
        }
        draws += 1;
        let (_, fresh) = tracker.observe(&y, false);
        stale = if fresh { 0 } else { stale + 1 };
        if tracker.certified() > bound {
            return Err(violation(tracker.certified()));
        }
    }

    Ok(RegionCensus {
        dim: d,
        regions: tracker.regions.into_values().collect(),
        n_samples,
        discovery_draws: draws,
        seed,
        stream_id,
    })
}
