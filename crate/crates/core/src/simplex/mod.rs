//! Simplices and their angle sums.
//!
//! Vertex angles are always evaluated from the Gram matrix of the vertex
//! cone, so a simplex living in a high-dimensional ambient space costs the
//! same as one in its own affine hull.

mod census;

pub use census::{region_census, RegionCensus, SignVector};

use crate::cones::{self, SimplicialCone};
use crate::error::{Error, Result};
use crate::mc::{AngleEstimate, MonteCarlo, RandomStream};
use crate::numlin::{self, GramMatrix, Matrix};

/// `conv(x_0, ..., x_d)` with affinely independent vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    ambient_dim: usize,
    vertices: Vec<Vec<f64>>,
}

impl Simplex {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a simplex needs at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        let m = vertices[0].len();
        if let Some((i, v)) = vertices.iter().enumerate().find(|(_, v)| v.len() != m) {
            return Err(Error::DimensionMismatch(format!(
                "vertex {i} has dimension {}, vertex 0 has dimension {m}",
                v.len()
            )));
        }
        let s = Simplex {
            ambient_dim: m,
            vertices,
        };
        // Affine independence: the vertex cone at x_0 must be a valid cone.
        s.vertex_cone(0)?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    fn differences(&self, i: usize) -> Vec<Vec<f64>> {
        let apex = &self.vertices[i];
        self.vertices
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, x)| x.iter().zip(apex).map(|(a, b)| a - b).collect())
            .collect()
    }

    /// `pos(x_j - x_i : j != i)`.
    pub fn vertex_cone(&self, i: usize) -> Result<SimplicialCone> {
        if i > self.dim() {
            return Err(Error::InvalidInput(format!(
                "vertex index {i} out of range for a {}-simplex",
                self.dim()
            )));
        }
        SimplicialCone::new(self.differences(i)).map_err(|e| match e {
            Error::DegenerateCone(msg) => {
                Error::DegenerateCone(format!("degenerate simplex: {msg}"))
            }
            other => other,
        })
    }

    pub fn vertex_gram(&self, i: usize) -> Result<GramMatrix> {
        Ok(self.vertex_cone(i)?.gram().clone())
    }

    /// Largest 1-norm condition number among the vertex-cone Gram matrices.
    pub fn max_vertex_condition(&self) -> Result<f64> {
        (0..=self.dim()).try_fold(0.0f64, |m, i| {
            Ok(m.max(numlin::condition_number(&self.vertex_gram(i)?)?))
        })
    }

    /// Exact angle sum for `d <= 3`.
    pub fn angle_sum_exact(&self) -> Result<f64> {
        (0..=self.dim()).try_fold(0.0, |s, i| {
            Ok(s + cones::angle_exact(&self.vertex_gram(i)?)?)
        })
    }
}

/// Sum of the per-vertex orthant estimates, errors in quadrature.
pub fn angle_sum(s: &Simplex, n: u64, stream: &mut RandomStream) -> Result<AngleEstimate> {
    angle_sum_with(s, &MonteCarlo::new(n), stream)
}

pub fn angle_sum_with(
    s: &Simplex,
    mc: &MonteCarlo,
    stream: &mut RandomStream,
) -> Result<AngleEstimate> {
    let parts = (0..=s.dim())
        .map(|i| mc.orthant(&s.vertex_gram(i)?, stream))
        .collect::<Result<Vec<_>>>()?;
    Ok(AngleEstimate::sum(&parts).expect("a simplex has at least two vertices"))
}

/// Vertex-cone Gram of the regular simplex: 2 on the diagonal, 1 elsewhere.
pub fn regular_gram(d: usize) -> Result<GramMatrix> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let mut m = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] = if i == j { 2.0 } else { 1.0 };
        }
    }
    GramMatrix::new(m)
}

/// `conv(e_0, ..., e_d)` in `R^{d+1}`.
pub fn regular_simplex(d: usize) -> Result<Simplex> {
    let vertices = (0..=d)
        .map(|i| (0..=d).map(|k| if k == i { 1.0 } else { 0.0 }).collect())
        .collect();
    Simplex::new(vertices)
}

/// The regular simplex expressed isometrically in `R^d`: centred, then
/// written in the orthonormal Helmert basis of the hyperplane `Σ x = 0`.
pub fn regular_simplex_chart(d: usize) -> Result<Simplex> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    // h_k = (1, ..., 1, -k, 0, ...) / sqrt(k (k + 1)), k = 1..d.
    let coord = |k: usize, j: usize| -> f64 {
        let scale = ((k * (k + 1)) as f64).sqrt();
        if j < k {
            1.0 / scale
        } else if j == k {
            -(k as f64) / scale
        } else {
            0.0
        }
    };
    // <h_k, e_j - c> = h_k[j] since h_k is orthogonal to the centroid c.
    let vertices = (0..=d)
        .map(|j| (1..=d).map(|k| coord(k, j)).collect())
        .collect();
    Simplex::new(vertices)
}

/// `d + 1` independent standard Gaussian points in `R^d`.
pub fn gaussian_simplex(d: usize, stream: &mut RandomStream) -> Result<Simplex> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let vertices = (0..=d)
        .map(|_| crate::mc::gaussian_vector(stream, d))
        .collect();
    Simplex::new(vertices)
}

/// Gram matrix of `X_k - X_0`, `k = 1..d`, for `d + 1` independent standard
/// Gaussian points in `R^n`, accumulated one coordinate at a time.
pub fn lifted_difference_gram(d: usize, n: usize, stream: &mut RandomStream) -> Result<GramMatrix> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    if n < d {
        return Err(Error::InvalidInput(format!(
            "ambient dimension {n} is smaller than the simplex dimension {d}"
        )));
    }
    let mut acc = Matrix::zeros(d, d);
    let mut column = vec![0.0; d + 1];
    let mut diff = vec![0.0; d];
    for _ in 0..n {
        stream.fill_gaussian(&mut column);
        for k in 0..d {
            diff[k] = column[k + 1] - column[0];
        }
        for i in 0..d {
            for j in i..d {
                acc[(i, j)] += diff[i] * diff[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            acc[(i, j)] = acc[(j, i)];
        }
    }
    GramMatrix::new(acc)
}

fn check_family_args(d: usize, t: f64) -> Result<()> {
    if d < 3 {
        return Err(Error::InvalidInput(format!(
            "simplex families need d >= 3, got {d}"
        )));
    }
    if !(0.0..1.0).contains(&t) {
        return Err(Error::InvalidInput(format!(
            "parameter t = {t} outside [0, 1)"
        )));
    }
    Ok(())
}

fn unit(d: usize, i: usize) -> Vec<f64> {
    (0..d).map(|k| if k == i { 1.0 } else { 0.0 }).collect()
}

/// `conv(0, e_1, ..., e_{d-1}, (1 - t) e_d + t (e_1 + ... + e_{d-1}))`;
/// flattens onto a quadrilateral-like configuration as `t -> 1`.
pub fn family_s1(d: usize, t: f64) -> Result<Simplex> {
    check_family_args(d, t)?;
    let mut vertices = vec![vec![0.0; d]];
    vertices.extend((0..d - 1).map(|i| unit(d, i)));
    let mut last = vec![t; d];
    last[d - 1] = 1.0 - t;
    vertices.push(last);
    Simplex::new(vertices)
}

/// `conv(0, e_1 - t c, ..., e_d - t c)` with `c` the centroid of the
/// `e_i`; the origin sinks into the opposite facet as `t -> 1`.
pub fn family_s2(d: usize, t: f64) -> Result<Simplex> {
    check_family_args(d, t)?;
    let shift = t / d as f64;
    let mut vertices = vec![vec![0.0; d]];
    vertices.extend((0..d).map(|i| unit(d, i).into_iter().map(|x| x - shift).collect()));
    Simplex::new(vertices)
}

/// Unit normals `u_k` of the hyperplanes through the origin parallel to the
/// facets, `u_k` belonging to the facet opposite `x_k` and oriented so that
/// `<u_k, x_k - x_j> > 0` for the other vertices.
pub fn facet_normals(s: &Simplex) -> Result<Vec<Vec<f64>>> {
    let d = s.dim();
    if d != s.ambient_dim() {
        return Err(Error::NotFullDimensional {
            dim: d,
            ambient: s.ambient_dim(),
        });
    }
    // Rows b_k of B⁻¹, B = [x_1 - x_0, ..., x_d - x_0], satisfy
    // <b_k, x_j - x_0> = δ_kj; the facet opposite x_0 gets -Σ b_k.
    let frame = s.vertex_cone(0)?.dual_normals()?;
    let rows = frame.normals();
    let mut normals = Vec::with_capacity(d + 1);
    let mut first = vec![0.0; d];
    for b in rows {
        first.iter_mut().zip(b).for_each(|(a, x)| *a -= x);
    }
    normals.push(first);
    normals.extend(rows.iter().cloned());
    for n in &mut normals {
        let len = numlin::norm(n);
        n.iter_mut().for_each(|x| *x /= len);
    }
    Ok(normals)
}
