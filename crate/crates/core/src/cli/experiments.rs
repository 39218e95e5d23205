use std::collections::BTreeMap;
use std::time::Instant;

use crate::cli::input::ConeInput;
use crate::cli::report::{ExperimentReport, ResultRecord};
use crate::cones::angle_exact;
use crate::error::{Error, Result};
use crate::mc::{compare, AngleEstimate, Method, MonteCarlo, RandomStream, SIGMA_THRESHOLD};
use crate::numlin::correlation;
use crate::simplex::{
    angle_sum_with, family_s1, family_s2, gaussian_simplex, lifted_difference_gram, region_census,
    regular_gram, SignVector,
};

/// Seed, stream and shard count shared by every command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub seed: u64,
    pub stream: u64,
    pub shards: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            stream: 0,
            shards: 1,
        }
    }
}

impl RunConfig {
    fn root(&self) -> RandomStream {
        RandomStream::new(self.seed, self.stream)
    }

    fn mc(&self, samples: u64) -> MonteCarlo {
        MonteCarlo::new(samples).with_shards(self.shards)
    }
}

#[derive(Default)]
struct Records(Vec<ResultRecord>);

impl Records {
    fn estimate(&mut self, label: impl Into<String>, estimate: AngleEstimate) {
        self.0.push(ResultRecord::Estimate {
            label: label.into(),
            estimate,
        });
    }

    fn compare(&mut self, left: &str, right: &str) {
        let (a, b) = (self.find(left), self.find(right));
        let verdict = compare(&a, &b);
        self.0.push(ResultRecord::Comparison {
            label: format!("{left} vs {right}"),
            left: left.into(),
            right: right.into(),
            verdict,
        });
    }

    fn check(&mut self, label: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.0.push(ResultRecord::Check {
            label: label.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn value(&mut self, label: impl Into<String>, value: f64) {
        self.0.push(ResultRecord::Value {
            label: label.into(),
            value,
        });
    }

    fn find(&self, label: &str) -> AngleEstimate {
        self.0
            .iter()
            .find_map(|r| match r {
                ResultRecord::Estimate { label: l, estimate } if l == label => {
                    Some(estimate.clone())
                }
                _ => None,
            })
            .expect("compared estimate was recorded")
    }

    fn compare_all(&mut self, labels: &[String]) {
        for i in 0..labels.len() {
            for j in i + 1..labels.len() {
                self.compare(&labels[i], &labels[j]);
            }
        }
    }
}

struct Params(BTreeMap<String, String>);

impl Params {
    fn new(cfg: &RunConfig) -> Self {
        let mut m = BTreeMap::new();
        m.insert("seed".to_string(), cfg.seed.to_string());
        m.insert("stream".to_string(), cfg.stream.to_string());
        Params(m)
    }

    fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn finish(
    experiment: &str,
    dim: usize,
    params: Params,
    cfg: &RunConfig,
    records: Records,
    started: Instant,
) -> ExperimentReport {
    let mut report = ExperimentReport::new(experiment, dim, params.0, cfg.shards, records.0);
    report.wall_time = Some(started.elapsed().as_secs_f64());
    report
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}

pub struct AngleArgs {
    pub input: ConeInput,
    pub methods: Vec<Method>,
    pub samples: u64,
}

/// Solid angle of one cone by each requested method, compared pairwise.
pub fn cmd_angle(args: &AngleArgs, cfg: &RunConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    require(!args.methods.is_empty(), || "no method given".into())?;
    for m in &args.methods {
        require(
            matches!(
                m,
                Method::Membership | Method::Orthant | Method::Crofton | Method::Exact
            ),
            || format!("method {m} is not available for a single cone"),
        )?;
    }
    let cone = args.input.cone()?;
    let mc = cfg.mc(args.samples);
    let root = cfg.root();
    let mut records = Records::default();
    let mut labels = Vec::new();
    for (k, &method) in args.methods.iter().enumerate() {
        let mut stream = root.derive(k as u64);
        let estimate = match method {
            Method::Membership => mc.membership(&cone, &mut stream)?,
            Method::Orthant => mc.orthant(cone.gram(), &mut stream)?,
            Method::Crofton => mc.crofton(&cone, &mut stream)?,
            _ => {
                require(cone.dim() <= 3, || "exact angles need d <= 3".into())?;
                AngleEstimate::exact(angle_exact(cone.gram())?)
            }
        };
        let label = format!("angle[{method}]");
        records.estimate(&label, estimate);
        labels.push(label);
    }
    records.compare_all(&labels);
    let params = Params::new(cfg)
        .set("input", &args.input)
        .set("methods", join(&args.methods))
        .set("samples", args.samples);
    Ok(finish("angle", cone.dim(), params, cfg, records, started))
}

pub struct VerifyMainArgs {
    pub dim: usize,
    pub samples: u64,
    /// Gaussian simplices averaged directly; used only for `d <= 4`.
    pub simplices: usize,
    pub angle_samples: u64,
}

/// Expected Gaussian angle sum against the regular-simplex angle sum.
pub fn cmd_verify_main(args: &VerifyMainArgs, cfg: &RunConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let d = args.dim;
    require(d >= 2, || format!("verify-main needs d >= 2, got {d}"))?;
    let mc = cfg.mc(args.samples);
    let root = cfg.root();
    let vertices = (d + 1) as f64;
    let mut records = Records::default();

    let hull = mc.hull(d, &mut root.derive(0))?;
    records.estimate("vertex_angle[hull]", hull.clone());
    records.estimate("angle_sum[hull]", hull.scaled(vertices));

    let g = regular_gram(d)?;
    let orthant = mc.orthant(&g, &mut root.derive(1))?;
    records.estimate("vertex_angle[regular]", orthant.clone());
    records.estimate("angle_sum[regular]", orthant.scaled(vertices));

    let mut labels = vec![
        "angle_sum[hull]".to_string(),
        "angle_sum[regular]".to_string(),
    ];

    if d <= 4 && args.simplices > 0 {
        let inner = cfg.mc(args.angle_samples);
        let base = root.derive(2);
        let mut sums = Vec::with_capacity(args.simplices);
        for r in 0..args.simplices {
            let mut stream = base.derive(r as u64);
            let s = gaussian_simplex(d, &mut stream)?;
            sums.push(angle_sum_with(&s, &inner, &mut stream)?.value);
        }
        let n = args.angle_samples * vertices as u64 * args.simplices as u64;
        records.estimate(
            "angle_sum[gaussian]",
            AngleEstimate::from_replicates(&sums, n, &base),
        );
        labels.push("angle_sum[gaussian]".into());
    }

    if d <= 3 {
        let exact = AngleEstimate::exact(angle_exact(&g)? * vertices);
        records.estimate("angle_sum[exact]", exact);
        labels.push("angle_sum[exact]".into());
    }

    records.compare_all(&labels);
    let params = Params::new(cfg)
        .set("samples", args.samples)
        .set("simplices", args.simplices)
        .set("angle_samples", args.angle_samples);
    Ok(finish("verify-main", d, params, cfg, records, started))
}

pub struct BoundsArgs {
    pub dim: usize,
    pub t_grid: Vec<f64>,
    pub samples: u64,
    pub simplices: usize,
    pub simplex_samples: u64,
}

pub const S1_LIMIT_THRESHOLD: f64 = 0.05;
pub const S2_LIMIT_THRESHOLD: f64 = 0.40;
/// Sweeps whose last point reaches this `t` are held to the limit thresholds.
pub const LIMIT_CHECK_T: f64 = 0.99;
pub const MAX_T: f64 = 0.995;

fn in_bounds(e: &AngleEstimate) -> bool {
    e.value > 0.0 && e.value < 0.5 + SIGMA_THRESHOLD * e.std_error
}

fn trend_holds(values: &[AngleEstimate], decreasing: bool) -> bool {
    let sign = if decreasing { 1.0 } else { -1.0 };
    let steps_ok = values.windows(2).all(|w| {
        let drop = sign * (w[0].value - w[1].value);
        let se = w[0].std_error.hypot(w[1].std_error);
        drop >= -SIGMA_THRESHOLD * se
    });
    let overall = match (values.first(), values.last()) {
        (Some(a), Some(b)) if values.len() > 1 => sign * (a.value - b.value) > 0.0,
        _ => true,
    };
    steps_ok && overall
}

/// Angle sums along the two degenerating families plus random Gaussian
/// simplices, all inside `(0, 1/2)`.
pub fn cmd_bounds(args: &BoundsArgs, cfg: &RunConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let d = args.dim;
    require(d >= 3, || format!("bounds needs d >= 3, got {d}"))?;
    require(!args.t_grid.is_empty(), || "empty t grid".into())?;
    require(
        args.t_grid.iter().all(|t| (0.0..=MAX_T).contains(t)),
        || format!("t values must lie in [0, {MAX_T}]"),
    )?;
    require(args.t_grid.windows(2).all(|w| w[0] < w[1]), || {
        "t grid must be strictly increasing".into()
    })?;

    let mc = cfg.mc(args.samples);
    let root = cfg.root();
    let mut records = Records::default();
    let mut s1 = Vec::new();
    let mut s2 = Vec::new();
    for (i, &t) in args.t_grid.iter().enumerate() {
        for (family, build, out, branch) in [
            (
                "s1",
                family_s1 as fn(usize, f64) -> Result<_>,
                &mut s1,
                0u64,
            ),
            (
                "s2",
                family_s2 as fn(usize, f64) -> Result<_>,
                &mut s2,
                1u64,
            ),
        ] {
            let s = build(d, t)?;
            let e = angle_sum_with(&s, &mc, &mut root.derive(branch).derive(i as u64))?;
            records.value(
                format!("{family}_condition[t={t}]"),
                s.max_vertex_condition()?,
            );
            records.estimate(format!("{family}[t={t}]"), e.clone());
            out.push(e);
        }
    }

    let all_in = s1.iter().chain(&s2).all(in_bounds);
    records.check(
        "sweep_within_bounds",
        all_in,
        "every value in (0, 1/2 + 4 SE)",
    );
    records.check(
        "s1_decreasing",
        trend_holds(&s1, true),
        "S1 angle sum falls with t",
    );
    records.check(
        "s2_increasing",
        trend_holds(&s2, false),
        "S2 angle sum rises with t",
    );
    if args.t_grid[0] == 0.0 {
        records.compare("s1[t=0]", "s2[t=0]");
    }
    let t_max = *args.t_grid.last().expect("non-empty grid");
    if t_max >= LIMIT_CHECK_T {
        let (a, b) = (s1.last().unwrap().value, s2.last().unwrap().value);
        records.check(
            format!("s1_below_{S1_LIMIT_THRESHOLD}"),
            a < S1_LIMIT_THRESHOLD,
            format!("S1 at t={t_max}: {a}"),
        );
        records.check(
            format!("s2_above_{S2_LIMIT_THRESHOLD}"),
            b > S2_LIMIT_THRESHOLD,
            format!("S2 at t={t_max}: {b}"),
        );
    }

    if args.simplices > 0 {
        let inner = cfg.mc(args.simplex_samples);
        let base = root.derive(2);
        let mut outside = Vec::new();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for r in 0..args.simplices {
            let mut stream = base.derive(r as u64);
            let s = gaussian_simplex(d, &mut stream)?;
            let e = angle_sum_with(&s, &inner, &mut stream)?;
            lo = lo.min(e.value);
            hi = hi.max(e.value);
            if !in_bounds(&e) {
                outside.push(r.to_string());
            }
            records.estimate(format!("gaussian[{r}]"), e);
        }
        records.value("gaussian_min", lo);
        records.value("gaussian_max", hi);
        let detail = if outside.is_empty() {
            format!("{} simplices in (0, 1/2 + 4 SE)", args.simplices)
        } else {
            format!("outside: {}", outside.join(","))
        };
        records.check("gaussian_within_bounds", outside.is_empty(), detail);
    }

    let params = Params::new(cfg)
        .set("t_grid", join(&args.t_grid))
        .set("samples", args.samples)
        .set("simplices", args.simplices)
        .set("simplex_samples", args.simplex_samples);
    Ok(finish("bounds", d, params, cfg, records, started))
}

pub struct FreezeArgs {
    pub dim: usize,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    /// Samples per replicate angle when no closed form exists (`d >= 4`).
    pub angle_samples: u64,
    /// Samples for the regular reference when no closed form exists.
    pub samples: u64,
}

/// Lifted Gaussian simplices in growing ambient dimension.
pub fn cmd_freeze(args: &FreezeArgs, cfg: &RunConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let d = args.dim;
    require(d >= 2, || format!("freeze needs d >= 2, got {d}"))?;
    require(!args.n_grid.is_empty(), || "empty n grid".into())?;
    require(args.n_grid.iter().all(|&n| n >= d), || {
        format!("every n must be >= d = {d}")
    })?;
    require(args.n_grid.windows(2).all(|w| w[0] < w[1]), || {
        "n grid must be strictly increasing".into()
    })?;
    require(args.replicates >= 2, || "need at least 2 replicates".into())?;

    let root = cfg.root();
    let inner = cfg.mc(args.angle_samples);
    let exact = d <= 3;
    let mut records = Records::default();
    let mut deviations = Vec::new();
    let mut labels = Vec::new();
    for (a, &n) in args.n_grid.iter().enumerate() {
        let base = root.derive(a as u64);
        let mut devs = Vec::with_capacity(args.replicates);
        let mut angles = Vec::with_capacity(args.replicates);
        for r in 0..args.replicates {
            let mut stream = base.derive(r as u64);
            let g = lifted_difference_gram(d, n, &mut stream)?;
            let off = correlation(&g)?.off_diagonal();
            devs.push(off.iter().map(|c| (c - 0.5).abs()).sum::<f64>() / off.len().max(1) as f64);
            angles.push(if exact {
                angle_exact(&g)?
            } else {
                inner.orthant(&g, &mut stream)?.value
            });
        }
        let dev = devs.iter().sum::<f64>() / devs.len() as f64;
        records.value(format!("deviation[n={n}]"), dev);
        deviations.push(dev);
        let per = if exact { 0 } else { args.angle_samples };
        let label = format!("mean_angle[n={n}]");
        records.estimate(
            &label,
            AngleEstimate::from_replicates(&angles, per * args.replicates as u64, &base),
        );
        labels.push(label);
    }

    let g = regular_gram(d)?;
    let regular = if exact {
        AngleEstimate::exact(angle_exact(&g)?)
    } else {
        cfg.mc(args.samples)
            .orthant(&g, &mut root.derive(args.n_grid.len() as u64))?
    };
    records.estimate("regular_angle", regular);

    let decreasing = deviations.windows(2).all(|w| w[1] < w[0]);
    records.check("deviation_decreasing", decreasing, join(&deviations));
    records.compare_all(&labels);
    records.compare(labels.last().expect("non-empty grid"), "regular_angle");

    let params = Params::new(cfg)
        .set("n_grid", join(&args.n_grid))
        .set("replicates", args.replicates)
        .set("angle_samples", args.angle_samples)
        .set("samples", args.samples);
    Ok(finish("freeze", d, params, cfg, records, started))
}

pub struct RegionsArgs {
    pub dim: usize,
    pub samples: u64,
}

/// Cells of the facet-hyperplane arrangement of one Gaussian simplex.
pub fn cmd_regions(args: &RegionsArgs, cfg: &RunConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let d = args.dim;
    require((2..=5).contains(&d), || {
        format!("regions needs 2 <= d <= 5, got {d}")
    })?;
    let root = cfg.root();
    let s = gaussian_simplex(d, &mut root.derive(0))?;
    let census = region_census(&s, args.samples, &mut root.derive(1))?;
    let direct = angle_sum_with(&s, &cfg.mc(args.samples), &mut root.derive(2))?;

    let mut records = Records::default();
    let (count, expected) = (census.count(), census.expected_count());
    records.value("region_count", count as f64);
    records.check(
        "region_count_exact",
        count == expected,
        format!("{count} of {expected}"),
    );

    let len = d + 1;
    let missing: Vec<String> = (0..len)
        .map(|k| SignVector::single_minus(len, k))
        .filter(|sv| {
            census
                .region(*sv)
                .and_then(|r| r.certificate.as_ref())
                .is_none()
        })
        .map(|sv| sv.to_string())
        .collect();
    let internal: Vec<String> = (0..len)
        .map(|k| SignVector::single_minus(len, k).to_string())
        .collect();
    records.check(
        "internal_cones",
        missing.is_empty(),
        if missing.is_empty() {
            internal.join(",")
        } else {
            format!("missing: {}", missing.join(","))
        },
    );
    let total = census.total_hits();
    records.check(
        "frequencies_sum_to_one",
        total == census.n_samples(),
        format!("{total} of {}", census.n_samples()),
    );
    records.value("discovery_draws", census.discovery_draws() as f64);
    for (sign, estimate) in census.region_angles() {
        records.estimate(format!("region[{sign}]"), estimate);
    }
    records.estimate("angle_sum[internal]", census.internal_angle_sum());
    records.estimate("angle_sum[census]", census.angle_sum_estimate());
    records.estimate("angle_sum[orthant]", direct);
    records.compare("angle_sum[census]", "angle_sum[orthant]");

    let vertices: Vec<String> = s
        .vertices()
        .iter()
        .map(|v| {
            format!(
                "[{}]",
                join(
                    &v.iter()
                        .map(|x| crate::decimal::format(*x))
                        .collect::<Vec<_>>()
                )
            )
        })
        .collect();
    let params = Params::new(cfg)
        .set("samples", args.samples)
        .set("simplex", vertices.join(";"));
    Ok(finish("regions", d, params, cfg, records, started))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RunConfig {
        RunConfig::default()
    }

    #[test]
    fn angle_exact_regular() {
        let args = AngleArgs {
            input: ConeInput::Equicorrelated { dim: 3, rho: 0.5 },
            methods: vec![Method::Exact],
            samples: 10,
        };
        let r = cmd_angle(&args, &cfg()).unwrap();
        let v = r.estimate("angle[exact]").unwrap().value;
        let expected = 0.125 + 3.0 * (-1.0f64 / 3.0).asin() / (4.0 * std::f64::consts::PI);
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn angle_rejects_exact_above_three() {
        let args = AngleArgs {
            input: ConeInput::Equicorrelated { dim: 4, rho: 0.5 },
            methods: vec![Method::Exact],
            samples: 10,
        };
        assert_eq!(cmd_angle(&args, &cfg()).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn angle_quadrant_methods_agree() {
        let args = AngleArgs {
            input: ConeInput::Generators(vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
            methods: vec![
                Method::Membership,
                Method::Orthant,
                Method::Crofton,
                Method::Exact,
            ],
            samples: 200_000,
        };
        let r = cmd_angle(&args, &cfg()).unwrap();
        assert_eq!(r.comparisons().count(), 6);
        assert!(r.passed(), "{:?}", r.failures());
        assert!((r.estimate("angle[orthant]").unwrap().value - 0.25).abs() < 0.005);
    }

    #[test]
    fn verify_main_small() {
        let args = VerifyMainArgs {
            dim: 2,
            samples: 100_000,
            simplices: 20,
            angle_samples: 2_000,
        };
        let r = cmd_verify_main(&args, &cfg()).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
        assert_eq!(r.estimate("angle_sum[exact]").unwrap().value, 0.5);
        assert!(cmd_verify_main(&VerifyMainArgs { dim: 1, ..args }, &cfg()).is_err());
    }

    #[test]
    fn bounds_validation() {
        let args = |t_grid: Vec<f64>| BoundsArgs {
            dim: 3,
            t_grid,
            samples: 1000,
            simplices: 0,
            simplex_samples: 0,
        };
        assert!(cmd_bounds(&args(vec![]), &cfg()).is_err());
        assert!(cmd_bounds(&args(vec![0.999]), &cfg()).is_err());
        assert!(cmd_bounds(&args(vec![0.5, 0.25]), &cfg()).is_err());
        let r = cmd_bounds(&args(vec![0.0, 0.5]), &cfg()).unwrap();
        assert!(r.comparison("s1[t=0] vs s2[t=0]").is_some());
        assert!(r.check("s1_below_0.05").is_none());
    }

    #[test]
    fn trend_tolerates_noise_but_needs_overall_change() {
        let e = |v: f64| AngleEstimate {
            value: v,
            std_error: 0.01,
            ..AngleEstimate::exact(0.0)
        };
        assert!(trend_holds(&[e(0.2), e(0.21), e(0.1)], true));
        assert!(!trend_holds(&[e(0.2), e(0.3), e(0.1)], true));
        assert!(!trend_holds(&[e(0.2), e(0.2)], true));
        assert!(trend_holds(&[e(0.1), e(0.3)], false));
    }

    #[test]
    fn freeze_validation_and_small_run() {
        let args = FreezeArgs {
            dim: 3,
            n_grid: vec![3, 30, 300],
            replicates: 50,
            angle_samples: 0,
            samples: 0,
        };
        let r = cmd_freeze(&args, &cfg()).unwrap();
        assert!(r.check("deviation_decreasing").unwrap());
        assert!(r.comparison("mean_angle[n=300] vs regular_angle").is_some());
        let bad = FreezeArgs {
            n_grid: vec![2],
            ..args
        };
        assert!(cmd_freeze(&bad, &cfg()).is_err());
    }

    #[test]
    fn regions_planar() {
        let r = cmd_regions(
            &RegionsArgs {
                dim: 2,
                samples: 100_000,
            },
            &cfg(),
        )
        .unwrap();
        assert_eq!(r.value("region_count"), Some(6.0));
        assert!(r.passed(), "{:?}", r.failures());
        assert!(cmd_regions(
            &RegionsArgs {
                dim: 6,
                samples: 10
            },
            &cfg()
        )
        .is_err());
    }
}
