//! Simplicial cones `pos(v_1, ..., v_d)` with linearly independent
//! generators.
//!
//! A cone knows its Gram matrix, which determines its solid angle up to
//! isometry. Full-dimensional cones additionally have a [`DualFrame`] of
//! biorthogonal normals giving the facet description
//! `C = { x : <n_k, x> >= 0 for all k }`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numlin::{self, dot, norm, GramMatrix, Matrix};

/// Slack allowed on generator coefficients when testing membership.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-10;

/// Projected generators shorter than this (relative) count as zero.
pub const PROJECTION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialCone {
    ambient_dim: usize,
    generators: Vec<Vec<f64>>,
    gram: GramMatrix,
}

/// Normals `n_k` with `<n_k, v_i> = δ_ki`, and their Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFrame {
    normals: Vec<Vec<f64>>,
    normal_gram: GramMatrix,
}

impl SimplicialCone {
    /// Validates the generators; dependent generators give
    /// [`Error::DegenerateCone`].
    pub fn new(generators: Vec<Vec<f64>>) -> Result<Self> {
        let gram = numlin::gram(&generators)?;
        numlin::cholesky(&gram).map_err(|e| {
            Error::DegenerateCone(format!("generators are linearly dependent ({e})"))
        })?;
        Ok(SimplicialCone {
            ambient_dim: generators[0].len(),
            generators,
            gram,
        })
    }

    /// A full-dimensional cone realising the given Gram matrix: the
    /// generators are the rows of its Cholesky factor.
    pub fn from_gram(g: &GramMatrix) -> Result<Self> {
        let l = numlin::cholesky(g).map_err(|e| {
            Error::DegenerateCone(format!("Gram matrix is not positive definite ({e})"))
        })?;
        SimplicialCone::new(l.to_rows())
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.dim() == self.ambient_dim
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    /// `m x d` matrix with the generators as columns.
    pub fn generator_matrix(&self) -> Matrix {
        Matrix::from_columns(&self.generators).expect("validated generators")
    }

    fn require_full_dimensional(&self) -> Result<()> {
        if self.is_full_dimensional() {
            Ok(())
        } else {
            Err(Error::NotFullDimensional {
                dim: self.dim(),
                ambient: self.ambient_dim,
            })
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch(format!(
                "point of dimension {} for a cone in dimension {}",
                x.len(),
                self.ambient_dim
            )));
        }
        Ok(())
    }

    /// Dual normals: the rows of the inverse generator matrix.
    pub fn dual_normals(&self) -> Result<DualFrame> {
        self.require_full_dimensional()?;
        let inv = numlin::invert(&self.generator_matrix())
            .map_err(|_| Error::DegenerateCone("generator matrix is singular".into()))?;
        let normals = inv.to_rows();
        let normal_gram = numlin::gram(&normals)?;
        Ok(DualFrame {
            normals,
            normal_gram,
        })
    }

    /// Coefficients `λ` with `x = Σ λ_i v_i`.
    pub fn coefficients(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.require_full_dimensional()?;
        self.check_point(x)?;
        numlin::solve(&self.generator_matrix(), x)
            .map_err(|_| Error::DegenerateCone("generator matrix is singular".into()))
    }

    /// Membership by solving for the generator coefficients.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self
            .coefficients(x)?
            .iter()
            .all(|&l| l >= -MEMBERSHIP_TOLERANCE))
    }

    /// Whether the linear subspace spanned by `w_basis` meets the cone
    /// outside the origin.
    ///
    /// The generators are projected onto the orthogonal complement of W;
    /// the cone meets W nontrivially iff the origin lies in the convex hull
    /// of the projections. A generator lying in W answers `true` directly.
    pub fn subspace_intersects(&self, w_basis: &[Vec<f64>]) -> Result<bool> {
        if w_basis.is_empty() {
            return Ok(false);
        }
        for (i, w) in w_basis.iter().enumerate() {
            if w.len() != self.ambient_dim {
                return Err(Error::DimensionMismatch(format!(
                    "subspace basis vector {i} has dimension {}, cone ambient dimension is {}",
                    w.len(),
                    self.ambient_dim
                )));
            }
        }
        numlin::cholesky(&numlin::gram(w_basis)?)
            .map_err(|_| Error::InvalidInput("subspace basis is linearly dependent".into()))?;
        let q = orthonormalize(w_basis);
        let mut projected = Vec::with_capacity(self.dim());
        for v in &self.generators {
            let mut p = v.clone();
            for qk in &q {
                let c = dot(qk, &p);
                p.iter_mut().zip(qk).for_each(|(a, b)| *a -= c * b);
            }
            if norm(&p) <= PROJECTION_TOLERANCE * norm(v) {
                return Ok(true);
            }
            projected.push(p);
        }
        Ok(origin_in_hull(&projected))
    }

    /// Whether `ker Y` meets the cone outside the origin, for a matrix `Y`
    /// with `ambient_dim` columns.
    pub fn meets_kernel(&self, y: &Matrix) -> Result<bool> {
        if y.cols() != self.ambient_dim {
            return Err(Error::DimensionMismatch(format!(
                "matrix with {} columns for a cone in dimension {}",
                y.cols(),
                self.ambient_dim
            )));
        }
        let images: Vec<Vec<f64>> = self
            .generators
            .iter()
            .map(|v| y.mul_vec(v))
            .collect::<Result<_>>()?;
        Ok(origin_in_hull(&images))
    }
}

impl DualFrame {
    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub fn normal_gram(&self) -> &GramMatrix {
        &self.normal_gram
    }

    /// Membership by the facet inequalities `<n_k, x> >= 0`.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.normals
            .iter()
            .all(|n| dot(n, x) >= -MEMBERSHIP_TOLERANCE)
    }

    /// `max |<n_k, v_i> - δ_ki|` against the cone's generators.
    pub fn biorthogonality_error(&self, cone: &SimplicialCone) -> f64 {
        let mut worst = 0.0f64;
        for (k, n) in self.normals.iter().enumerate() {
            for (i, v) in cone.generators().iter().enumerate() {
                let target = if k == i { 1.0 } else { 0.0 };
                worst = worst.max((dot(n, v) - target).abs());
            }
        }
        worst
    }
}

/// Whether the origin lies in the convex hull of `points`.
///
/// Exact combinatorial test, no LP: the origin is in the hull iff some
/// support-minimal subset has a one-dimensional linear dependency with
/// positive coefficients. The whole set is tried first, which settles the
/// generic cases with a single elimination.
pub fn origin_in_hull(points: &[Vec<f64>]) -> bool {
    if points.is_empty() {
        return false;
    }
    let scale = points.iter().map(|p| norm(p)).fold(0.0, f64::max);
    if points
        .iter()
        .any(|p| norm(p) <= PROJECTION_TOLERANCE * scale)
    {
        return true;
    }
    let columns = |idx: &[usize]| -> Matrix {
        let cols: Vec<&[f64]> = idx.iter().map(|&i| points[i].as_slice()).collect();
        Matrix::from_columns(&cols).expect("points share a dimension")
    };
    let all: Vec<usize> = (0..points.len()).collect();
    let kernel = numlin::null_space(&columns(&all));
    match kernel.len() {
        0 => false,
        1 => sign_consistent(&kernel[0], false),
        _ => {
            let n = points.len();
            assert!(n < 31, "hull test supports at most 30 points");
            let mut subsets: Vec<u32> = (1u32..(1 << n)).filter(|s| s.count_ones() >= 2).collect();
            subsets.sort_by_key(|s| s.count_ones());
            subsets.into_iter().any(|s| {
                let idx: Vec<usize> = (0..n).filter(|i| s & (1 << i) != 0).collect();
                let k = numlin::null_space(&columns(&idx));
                k.len() == 1 && sign_consistent(&k[0], true)
            })
        }
    }
}

fn sign_consistent(v: &[f64], strict: bool) -> bool {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = MEMBERSHIP_TOLERANCE * scale;
    if strict {
        v.iter().all(|&x| x > tol) || v.iter().all(|&x| x < -tol)
    } else {
        v.iter().all(|&x| x >= -tol) || v.iter().all(|&x| x <= tol)
    }
}

/// Orthonormal basis of the span of independent vectors (Gram-Schmidt,
/// two passes).
pub fn orthonormalize(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut u = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &u);
                u.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let len = norm(&u);
        u.iter_mut().for_each(|a| *a /= len);
        basis.push(u);
    }
    basis
}

fn require_dim(g: &GramMatrix, d: usize) -> Result<()> {
    if g.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "expected a {d}x{d} Gram matrix, got {0}x{0}",
            g.dim()
        )));
    }
    numlin::cholesky(g)?;
    Ok(())
}

/// Solid angle of a planar cone: `arccos(ρ) / 2π`.
pub fn angle_exact_2d(g: &GramMatrix) -> Result<f64> {
    require_dim(g, 2)?;
    let rho = numlin::correlation(g)?.get(0, 1).clamp(-1.0, 1.0);
    Ok(rho.acos() / (2.0 * PI))
}

/// Solid angle of a three-dimensional cone, `Ω / 4π`, with
/// `tan(Ω/2) = sqrt(det R) / (1 + r12 + r13 + r23)` for the correlation
/// matrix `R`. `atan2` keeps `Ω/2` in `(0, π)`.
pub fn angle_exact_3d(g: &GramMatrix) -> Result<f64> {
    require_dim(g, 3)?;
    let r = numlin::correlation(g)?;
    let det = numlin::determinant(r.as_matrix())?.max(0.0);
    let denom = 1.0 + r.get(0, 1) + r.get(0, 2) + r.get(1, 2);
    let half_omega = det.sqrt().atan2(denom);
    Ok(2.0 * half_omega / (4.0 * PI))
}

/// Exact angle for dimension at most 3 (a ray has angle 1/2 in its span).
pub fn angle_exact(g: &GramMatrix) -> Result<f64> {
    match g.dim() {
        1 => {
            require_dim(g, 1)?;
            Ok(0.5)
        }
        2 => angle_exact_2d(g),
        3 => angle_exact_3d(g),
        d => Err(Error::InvalidInput(format!(
            "exact angles are available for dimension at most 3, got {d}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian_vec(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
        (0..m).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn random_cone(rng: &mut ChaCha8Rng, d: usize) -> SimplicialCone {
        loop {
            let gens = (0..d).map(|_| gaussian_vec(rng, d)).collect();
            if let Ok(c) = SimplicialCone::new(gens) {
                return c;
            }
        }
    }

    // Trivariate orthant probability of N(0, Γ⁻¹): 1/8 + Σ asin(σ_ij) / 4π.
    fn trivariate_orthant(g: &GramMatrix) -> f64 {
        let s = numlin::correlation(&numlin::inverse(g).unwrap()).unwrap();
        0.125 + (s.get(0, 1).asin() + s.get(0, 2).asin() + s.get(1, 2).asin()) / (4.0 * PI)
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

    #[test]
    fn cone_construction() {
        let q = SimplicialCone::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(q.is_full_dimensional());
        assert!(q.contains(&[0.3, 0.7]).unwrap());
        assert!(!q.contains(&[-0.3, 0.7]).unwrap());

        assert!(matches!(
            SimplicialCone::new(vec![vec![1.0, 2.0], vec![2.0, 4.0]]),
            Err(Error::DegenerateCone(_))
        ));

        // pos(e_1 - e_0, ..., e_d - e_0) in dimension d + 1.
        let d = 3;
        let gens: Vec<Vec<f64>> = (1..=d)
            .map(|i| {
                (0..=d)
                    .map(|k| {
                        if k == i {
                            1.0
                        } else if k == 0 {
                            -1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let c = SimplicialCone::new(gens).unwrap();
        assert_eq!(c.dim(), 3);
        assert_eq!(c.ambient_dim(), 4);
        assert_eq!(c.gram(), &regular_gram(3));
    }

    #[test]
    fn dual_normals_examples() {
        let c = SimplicialCone::new(vec![vec![0.6, 0.8], vec![-0.8, 0.6]]).unwrap();
        let f = c.dual_normals().unwrap();
        for (n, v) in f.normals().iter().zip(c.generators()) {
            for (a, b) in n.iter().zip(v) {
                assert!((a - b).abs() < 1e-15);
            }
        }

        let c = SimplicialCone::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let f = c.dual_normals().unwrap();
        assert_eq!(f.normals(), &[vec![1.0, -1.0], vec![0.0, 1.0]]);
        assert!(f.biorthogonality_error(&c) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 1..6 {
            let c = random_cone(&mut rng, d);
            let f = c.dual_normals().unwrap();
            let inv = numlin::inverse(c.gram()).unwrap();
            let scale = inv.as_matrix().max_abs().max(1.0);
            assert!(f.normal_gram().as_matrix().max_abs_diff(inv.as_matrix()) <= 1e-9 * scale);
        }
    }

    #[test]
    fn dual_normals_need_full_dimension() {
        let c = SimplicialCone::new(vec![vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(
            c.dual_normals(),
            Err(Error::NotFullDimensional { dim: 1, ambient: 3 })
        ));
        assert!(matches!(
            c.contains(&[1.0, 0.0, 0.0]),
            Err(Error::NotFullDimensional { .. })
        ));
    }

    #[test]
    fn membership_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = random_cone(&mut rng, 4);
        assert!(c.contains(&c.generators()[0]).unwrap());
        let mut minus_sum = vec![0.0; 4];
        for v in c.generators() {
            minus_sum.iter_mut().zip(v).for_each(|(a, b)| *a -= b);
        }
        assert!(!c.contains(&minus_sum).unwrap());
        assert!(matches!(
            c.contains(&[1.0, 2.0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn membership_agrees_with_dual_sign_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in 2..5 {
            let c = random_cone(&mut rng, d);
            let f = c.dual_normals().unwrap();
            let mut inside = 0;
            for _ in 0..1000 {
                let x = gaussian_vec(&mut rng, d);
                let lambda = c.coefficients(&x).unwrap();
                if lambda.iter().any(|l| l.abs() < 1e-8) {
                    continue;
                }
                let verdict = c.contains(&x).unwrap();
                assert_eq!(verdict, f.contains(&x));
                inside += verdict as usize;
            }
            assert!(inside > 0);
        }
    }

    #[test]
    fn exact_2d_examples() {
        assert!((angle_exact_2d(&GramMatrix::identity(2)).unwrap() - 0.25).abs() < 1e-15);
        let half = GramMatrix::equicorrelated(2, 0.5).unwrap();
        assert!((angle_exact_2d(&half).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        let minus = GramMatrix::equicorrelated(2, -0.5).unwrap();
        assert!((angle_exact_2d(&minus).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let bad = GramMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(
            angle_exact_2d(&bad),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn exact_3d_examples() {
        assert!((angle_exact_3d(&GramMatrix::identity(3)).unwrap() - 0.125).abs() < 1e-15);

        let g = regular_gram(3);
        let oracle = 0.125 + 3.0 * (-1.0f64 / 3.0).asin() / (4.0 * PI);
        assert!((trivariate_orthant(&g) - oracle).abs() < 1e-15);
        let a = angle_exact_3d(&g).unwrap();
        assert!((a - oracle).abs() < 1e-14, "{a} vs {oracle}");
        assert!((a - 0.0438699).abs() < 5e-8);

        let mut last = 1.0;
        for rho in [0.9, 0.99, 0.999, 0.9999] {
            let a = angle_exact_3d(&GramMatrix::equicorrelated(3, rho).unwrap()).unwrap();
            assert!(a > 0.0 && a < last);
            last = a;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn exact_3d_matches_orthant_closed_form_on_random_cones() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..200 {
            let c = random_cone(&mut rng, 3);
            let a = angle_exact_3d(c.gram()).unwrap();
            let b = trivariate_orthant(c.gram());
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            assert!(a > 0.0 && a < 0.5);
        }
    }

    #[test]
    fn subspace_intersection_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = random_cone(&mut rng, 3);
        assert!(c.subspace_intersects(&[c.generators()[1].clone()]).unwrap());

        // Cone spanning the first two axes of R^3; W is the third axis.
        let flat = SimplicialCone::new(vec![vec![1.0, 0.2, 0.0], vec![0.3, 1.0, 0.0]]).unwrap();
        assert!(!flat.subspace_intersects(&[vec![0.0, 0.0, 1.0]]).unwrap());
        // W containing an interior direction.
        assert!(flat
            .subspace_intersects(&[vec![1.3, 1.2, 0.5], vec![0.0, 0.0, 1.0]])
            .unwrap());

        assert!(matches!(
            c.subspace_intersects(&[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn random_lines_hit_the_quadrant_half_the_time() {
        let q = SimplicialCone::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 20_000;
        let hits = (0..n)
            .filter(|_| q.subspace_intersects(&[gaussian_vec(&mut rng, 2)]).unwrap())
            .count();
        let p = hits as f64 / n as f64;
        let se = (0.5 * 0.5 / n as f64).sqrt();
        assert!((p - 0.5).abs() <= 4.0 * se, "{p}");
    }

    #[test]
    fn kernel_and_subspace_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..300 {
            let m = 5;
            let k = 3;
            let gens = (0..k).map(|_| gaussian_vec(&mut rng, m)).collect();
            let c = SimplicialCone::new(gens).unwrap();
            let y_rows: Vec<Vec<f64>> = (0..k - 1).map(|_| gaussian_vec(&mut rng, m)).collect();
            let y = Matrix::from_rows(&y_rows).unwrap();
            let w = numlin::null_space(&y);
            assert_eq!(w.len(), m - k + 1);
            assert_eq!(
                c.meets_kernel(&y).unwrap(),
                c.subspace_intersects(&w).unwrap()
            );
        }
    }

    #[test]
    fn hull_test_handles_degenerate_configurations() {
        assert!(origin_in_hull(&[
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0]
        ]));
        assert!(!origin_in_hull(&[
            vec![1.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 1.0]
        ]));
        assert!(!origin_in_hull(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]));
        assert!(origin_in_hull(&[vec![1.0, 1.0], vec![0.0, 0.0]]));
        assert!(origin_in_hull(&[vec![1.0], vec![-3.0]]));
        assert!(!origin_in_hull(&[]));
    }

    proptest! {
        #[test]
        fn membership_is_scale_invariant(
            seed in 0u64..1000,
            scales in prop::collection::vec(0.01f64..100.0, 3),
            x in prop::collection::vec(-1.0f64..1.0, 3),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_cone(&mut rng, 3);
            let lambda = c.coefficients(&x).unwrap();
            prop_assume!(lambda.iter().all(|l| l.abs() > 1e-6));
            let scaled = SimplicialCone::new(
                c.generators().iter().zip(&scales).map(|(v, s)| v.iter().map(|a| a * s).collect()).collect(),
            ).unwrap();
            prop_assert_eq!(c.contains(&x).unwrap(), scaled.contains(&x).unwrap());
        }

        #[test]
        fn exact_angles_ignore_generator_lengths(seed in 0u64..1000, d in 2usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_cone(&mut rng, d);
            let raw = angle_exact(c.gram()).unwrap();
            let normalized = angle_exact(&numlin::correlation(c.gram()).unwrap()).unwrap();
            prop_assert!((raw - normalized).abs() < 1e-12);
        }

        #[test]
        fn biorthogonality_holds(seed in 0u64..1000, d in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_cone(&mut rng, d);
            let f = c.dual_normals().unwrap();
            prop_assert!(f.biorthogonality_error(&c) <= 1e-9);
        }
    }
}
