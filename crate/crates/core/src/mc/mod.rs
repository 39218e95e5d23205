//! Seeded Monte Carlo estimation of solid angles.
//!
//! Four estimators share one trial engine:
//!
//! - membership: fraction of standard Gaussian points inside the cone;
//! - orthant: fraction of `N(0, Γ⁻¹)` draws with nonnegative coordinates,
//!   which needs nothing but the Gram matrix `Γ`;
//! - hull: expected vertex angle of the Gaussian simplex, as half the
//!   probability that the origin lies in the hull of `Y_i - Y_0` for
//!   Gaussian points one dimension lower;
//! - crofton: half the probability that a uniform random subspace of
//!   complementary dimension plus one meets the cone.
//!
//! Every estimator is a pure function of its inputs, the sample count and
//! the stream it is handed.

mod estimators;
mod stream;

use serde::{Deserialize, Serialize};

pub use estimators::{
    estimate_crofton, estimate_hull, estimate_membership, estimate_orthant, MonteCarlo,
};
pub use stream::{gaussian_vector, sphere_point, RandomStream};

/// Statistical comparisons fail beyond this many combined standard errors.
pub const SIGMA_THRESHOLD: f64 = 4.0;

/// A degenerate-trial budget of `n / DEGENERATE_BUDGET_DIVISOR` resamples.
pub const DEGENERATE_BUDGET_DIVISOR: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Membership,
    Orthant,
    Hull,
    Crofton,
    Exact,
    /// Mean over independent replicates, with the replicate spread as error.
    Replicates,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Membership => "membership",
            Method::Orthant => "orthant",
            Method::Hull => "hull",
            Method::Crofton => "crofton",
            Method::Exact => "exact",
            Method::Replicates => "replicates",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "membership" => Ok(Method::Membership),
            "orthant" => Ok(Method::Orthant),
            "hull" => Ok(Method::Hull),
            "crofton" => Ok(Method::Crofton),
            "exact" => Ok(Method::Exact),
            "replicates" => Ok(Method::Replicates),
            other => Err(crate::Error::InvalidInput(format!(
                "unknown method '{other}'"
            ))),
        }
    }
}

/// Point estimate with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleEstimate {
    #[serde(with = "crate::decimal")]
    pub value: f64,
    #[serde(with = "crate::decimal")]
    pub std_error: f64,
    pub n_samples: u64,
    pub method: Method,
    pub seed: u64,
    pub stream_id: u64,
}

impl AngleEstimate {
    /// Binomial estimate `factor * hits / n` with standard error
    /// `factor * sqrt(p (1 - p) / n)`.
    pub fn from_hits(
        hits: u64,
        n: u64,
        factor: f64,
        method: Method,
        stream: &RandomStream,
    ) -> Self {
        let p = hits as f64 / n as f64;
        AngleEstimate {
            value: factor * p,
            std_error: factor * (p * (1.0 - p) / n as f64).sqrt(),
            n_samples: n,
            method,
            seed: stream.seed(),
            stream_id: stream.stream_id(),
        }
    }

    pub fn exact(value: f64) -> Self {
        AngleEstimate {
            value,
            std_error: 0.0,
            n_samples: 0,
            method: Method::Exact,
            seed: 0,
            stream_id: 0,
        }
    }

    /// Mean of replicate values with standard error `sd / sqrt(R)`.
    pub fn from_replicates(values: &[f64], n_samples: u64, stream: &RandomStream) -> Self {
        let r = values.len() as f64;
        let mean = values.iter().sum::<f64>() / r;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0)
        } else {
            0.0
        };
        AngleEstimate {
            value: mean,
            std_error: (var / r).sqrt(),
            n_samples,
            method: Method::Replicates,
            seed: stream.seed(),
            stream_id: stream.stream_id(),
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.value *= factor;
        self.std_error *= factor.abs();
        self
    }

    /// Sum of independent estimates, errors combined in quadrature. The
    /// provenance fields are taken from the first part.
    pub fn sum(parts: &[AngleEstimate]) -> Option<Self> {
        let first = parts.first()?;
        Some(AngleEstimate {
            value: parts.iter().map(|p| p.value).sum(),
            std_error: parts
                .iter()
                .map(|p| p.std_error.powi(2))
                .sum::<f64>()
                .sqrt(),
            n_samples: parts.iter().map(|p| p.n_samples).sum(),
            method: first.method,
            seed: first.seed,
            stream_id: first.stream_id,
        })
    }
}

/// Outcome of comparing two estimates at the [`SIGMA_THRESHOLD`] policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonVerdict {
    #[serde(with = "crate::decimal")]
    pub difference: f64,
    #[serde(with = "crate::decimal")]
    pub combined_se: f64,
    #[serde(with = "crate::decimal")]
    pub z_score: f64,
    pub pass: bool,
}

impl ComparisonVerdict {
    pub fn from_parts(difference: f64, combined_se: f64) -> Self {
        let z_score = z_score(difference, combined_se);
        ComparisonVerdict {
            difference,
            combined_se,
            z_score,
            pass: z_score <= SIGMA_THRESHOLD,
        }
    }

    /// Whether `pass` is what the recorded numbers imply.
    pub fn is_consistent(&self) -> bool {
        let z = z_score(self.difference, self.combined_se);
        self.pass == (z <= SIGMA_THRESHOLD)
    }
}

fn z_score(difference: f64, combined_se: f64) -> f64 {
    if combined_se > 0.0 {
        difference / combined_se
    } else if difference == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn compare(a: &AngleEstimate, b: &AngleEstimate) -> ComparisonVerdict {
    ComparisonVerdict::from_parts(
        (a.value - b.value).abs(),
        (a.std_error.powi(2) + b.std_error.powi(2)).sqrt(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(value: f64, se: f64) -> AngleEstimate {
        AngleEstimate {
            value,
            std_error: se,
            n_samples: 100,
            method: Method::Orthant,
            seed: 1,
            stream_id: 0,
        }
    }

    #[test]
    fn compare_examples() {
        let a = est(0.25, 1e-3);
        let v = compare(&a, &a);
        assert_eq!(v.z_score, 0.0);
        assert!(v.pass);

        let b = est(0.25, 3e-4);
        let c = est(0.25, 4e-4);
        let combined = 5e-4;
        let far = est(0.25 + 10.0 * combined, 4e-4);
        let v = compare(&b, &far);
        assert!(!v.pass);
        assert!((v.z_score - 10.0).abs() < 1e-9);
        assert!(compare(&b, &c).pass);
        assert!(v.is_consistent());
    }

    #[test]
    fn zero_error_comparisons() {
        assert!(compare(&AngleEstimate::exact(0.5), &AngleEstimate::exact(0.5)).pass);
        let v = compare(&AngleEstimate::exact(0.5), &AngleEstimate::exact(0.25));
        assert!(!v.pass);
        assert_eq!(v.z_score, f64::INFINITY);
    }

    #[test]
    fn binomial_error_and_scaling() {
        let s = RandomStream::new(9, 2);
        let e = AngleEstimate::from_hits(250, 1000, 1.0, Method::Membership, &s);
        assert_eq!(e.value, 0.25);
        assert!((e.std_error - (0.25f64 * 0.75 / 1000.0).sqrt()).abs() < 1e-15);
        assert_eq!((e.seed, e.stream_id), (9, 2));
        let h = AngleEstimate::from_hits(250, 1000, 0.5, Method::Hull, &s);
        assert_eq!(h.value, 0.125);
        assert!((h.std_error - e.std_error / 2.0).abs() < 1e-15);
        let t = e.clone().scaled(4.0);
        assert_eq!(t.value, 1.0);
        assert!((t.std_error - 4.0 * e.std_error).abs() < 1e-15);
    }

    #[test]
    fn sums_and_replicates() {
        let s = AngleEstimate::sum(&[est(0.1, 3e-3), est(0.2, 4e-3)]).unwrap();
        assert!((s.value - 0.3).abs() < 1e-15);
        assert!((s.std_error - 5e-3).abs() < 1e-15);
        assert!(AngleEstimate::sum(&[]).is_none());

        let stream = RandomStream::new(0, 0);
        let r = AngleEstimate::from_replicates(&[1.0, 2.0, 3.0, 4.0], 4, &stream);
        assert_eq!(r.value, 2.5);
        assert!((r.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [
            Method::Membership,
            Method::Orthant,
            Method::Hull,
            Method::Crofton,
            Method::Exact,
            Method::Replicates,
        ] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("bogus".parse::<Method>().is_err());
    }
}
