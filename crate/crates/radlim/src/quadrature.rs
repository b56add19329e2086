//! Discrete-ordinates quadrature on the unit sphere.
//!
//! Angular integrals over S² are replaced by a product rule: Gauss–Legendre
//! nodes in the polar cosine `μ ∈ [-1, 1]` crossed with a uniform midpoint
//! rule in azimuth. The rule reproduces the three moments the transport
//! solver and the diagnostics rely on,
//!
//! ```text
//! ∫ 1 dβ = 4π,    ∫ β dβ = 0,    ∫ β⊗β dβ = (4π/3) I,
//! ```
//!
//! each to 1e-12 or better, and specular reflection across any axis-aligned
//! plane maps the node set onto itself exactly (an even azimuth count is
//! required for this).

use crate::error::{Error, Result};

/// Surface area of the unit sphere, `4π`.
pub const SPHERE_AREA: f64 = 4.0 * std::f64::consts::PI;

/// Quadrature rule for integrals over directions on the unit sphere.
///
/// Immutable after construction; weights are rescaled once so that they sum
/// to exactly `4π`, which keeps constant-in-angle fields at equilibrium.
#[derive(Debug, Clone)]
pub struct AngularQuadrature {
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    n_polar: usize,
    n_azimuth: usize,
}

impl AngularQuadrature {
    /// Builds the Gauss–Legendre × uniform-azimuth product rule.
    ///
    /// Requires `n_polar >= 2` and an even `n_azimuth >= 4`; the evenness
    /// makes reflection across the x- and y-planes an exact node permutation.
    pub fn product_rule(n_polar: usize, n_azimuth: usize) -> Result<Self> {
        if n_polar < 2 {
            return Err(Error::Quadrature(format!(
                "n_polar must be >= 2, got {n_polar}"
            )));
        }
        if n_azimuth < 4 {
            return Err(Error::Quadrature(format!(
                "n_azimuth must be >= 4, got {n_azimuth}"
            )));
        }
        if !n_azimuth.is_multiple_of(2) {
            return Err(Error::Quadrature(format!(
                "n_azimuth must be even so specular reflection is a node permutation, got {n_azimuth}"
            )));
        }

        let (mu, w_mu) = gauss_legendre(n_polar);
        let dphi = 2.0 * std::f64::consts::PI / n_azimuth as f64;

        let mut nodes = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        for ip in 0..n_polar {
            let s = (1.0 - mu[ip] * mu[ip]).max(0.0).sqrt();
            for ia in 0..n_azimuth {
                // Midpoint azimuth nodes: phi -> pi - phi and phi -> -phi both
                // permute the set when n_azimuth is even.
                let phi = (ia as f64 + 0.5) * dphi;
                nodes.push([s * phi.cos(), s * phi.sin(), mu[ip]]);
                weights.push(w_mu[ip] * dphi);
            }
        }

        // Rescale so the zeroth moment is exact, not just accurate.
        let total: f64 = weights.iter().sum();
        let scale = SPHERE_AREA / total;
        for w in &mut weights {
            *w *= scale;
        }

        Ok(Self {
            nodes,
            weights,
            n_polar,
            n_azimuth,
        })
    }

    /// A rule with explicitly given nodes and weights. Intended for tests
    /// that need degenerate ordinate sets (e.g. a single direction).
    pub fn from_raw(nodes: Vec<[f64; 3]>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::Quadrature("node/weight length mismatch".into()));
        }
        Ok(Self {
            nodes,
            weights,
            n_polar: 0,
            n_azimuth: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node(&self, q: usize) -> [f64; 3] {
        self.nodes[q]
    }

    pub fn weight(&self, q: usize) -> f64 {
        self.weights[q]
    }

    pub fn n_polar(&self) -> usize {
        self.n_polar
    }

    pub fn n_azimuth(&self) -> usize {
        self.n_azimuth
    }

    /// Angular integral `∫ ψ dβ ≈ Σ_q w_q ψ_q` of per-ordinate values.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::Quadrature(format!(
                "expected {} ordinate values, got {}",
                self.len(),
                values.len()
            )));
        }
        Ok(self.integrate_unchecked(values))
    }

    /// As [`integrate`](Self::integrate) but without the length check; used
    /// in inner loops where the caller guarantees the layout.
    #[inline]
    pub fn integrate_unchecked(&self, values: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (w, v) in self.weights.iter().zip(values) {
            acc += w * v;
        }
        acc
    }

    /// First angular moment `∫ ψ β dβ ≈ Σ_q w_q ψ_q β_q`.
    ///
    /// The caller applies any `1/ε` scaling; this is the bare moment.
    pub fn flux(&self, values: &[f64]) -> Result<[f64; 3]> {
        if values.len() != self.len() {
            return Err(Error::Quadrature(format!(
                "expected {} ordinate values, got {}",
                self.len(),
                values.len()
            )));
        }
        let mut acc = [0.0; 3];
        for q in 0..self.len() {
            let wv = self.weights[q] * values[q];
            acc[0] += wv * self.nodes[q][0];
            acc[1] += wv * self.nodes[q][1];
            acc[2] += wv * self.nodes[q][2];
        }
        Ok(acc)
    }

    /// Zeroth, first and second moments of the bare rule, for certification.
    pub fn moments(&self) -> (f64, [f64; 3], [[f64; 3]; 3]) {
        let zeroth: f64 = self.weights.iter().sum();
        let mut first = [0.0; 3];
        let mut second = [[0.0; 3]; 3];
        for q in 0..self.len() {
            let w = self.weights[q];
            let b = self.nodes[q];
            for i in 0..3 {
                first[i] += w * b[i];
                for j in 0..3 {
                    second[i][j] += w * b[i] * b[j];
                }
            }
        }
        (zeroth, first, second)
    }

    /// Checks the moment-exactness certificates at tolerance `tol`.
    pub fn certify_moments(&self, tol: f64) -> Result<()> {
        let (m0, m1, m2) = self.moments();
        if (m0 - SPHERE_AREA).abs() > tol {
            return Err(Error::Quadrature(format!(
                "zeroth moment {m0:.17e} deviates from 4*pi beyond {tol:e}"
            )));
        }
        let third = SPHERE_AREA / 3.0;
        for i in 0..3 {
            if m1[i].abs() > tol {
                return Err(Error::Quadrature(format!(
                    "first moment component {i} is {:.3e}, expected 0",
                    m1[i]
                )));
            }
            for j in 0..3 {
                let expect = if i == j { third } else { 0.0 };
                if (m2[i][j] - expect).abs() > tol {
                    return Err(Error::Quadrature(format!(
                        "second moment [{i}][{j}] = {:.17e}, expected {expect:.17e}",
                        m2[i][j]
                    )));
                }
            }
        }
        for (q, b) in self.nodes.iter().enumerate() {
            let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
            if (norm - 1.0).abs() > 1e-14 {
                return Err(Error::Quadrature(format!(
                    "node {q} has |beta| = {norm:.17e}"
                )));
            }
        }
        Ok(())
    }
}

/// Specular reflection `β' = β − 2(n·β)n` across the plane with unit normal `n`.
pub fn reflect(beta: [f64; 3], normal: [f64; 3]) -> Result<[f64; 3]> {
    let nb = norm3(beta);
    let nn = norm3(normal);
    if (nb - 1.0).abs() > 1e-10 || (nn - 1.0).abs() > 1e-10 {
        return Err(Error::Quadrature(format!(
            "reflect requires unit vectors, got |beta|={nb:.12}, |n|={nn:.12}"
        )));
    }
    let dot = beta[0] * normal[0] + beta[1] * normal[1] + beta[2] * normal[2];
    Ok([
        beta[0] - 2.0 * dot * normal[0],
        beta[1] - 2.0 * dot * normal[1],
        beta[2] - 2.0 * dot * normal[2],
    ])
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Node permutation realising specular reflection across an axis plane.
///
/// For axis-aligned box normals and the product rule the reflected direction
/// of every node is again a node, so the boundary condition needs no
/// interpolation. The same permutation serves both faces of an axis.
#[derive(Debug, Clone)]
pub struct ReflectionMap {
    axis: usize,
    map: Vec<usize>,
}

impl ReflectionMap {
    /// Builds the reflection permutation for the plane normal to `axis`.
    ///
    /// Fails if some reflected node is not present in the rule (which for
    /// the product rule only happens with an odd azimuth count, already
    /// rejected at construction).
    pub fn new(quad: &AngularQuadrature, axis: usize) -> Result<Self> {
        if axis >= 3 {
            return Err(Error::Quadrature(format!(
                "reflection axis must be 0, 1 or 2, got {axis}"
            )));
        }
        let mut normal = [0.0; 3];
        normal[axis] = 1.0;
        let n = quad.len();
        let mut map = vec![usize::MAX; n];
        for q in 0..n {
            let target = reflect(quad.node(q), normal)?;
            let mut best = usize::MAX;
            let mut best_dist = f64::INFINITY;
            for (p, cand) in quad.nodes().iter().enumerate() {
                let d = (cand[0] - target[0]).powi(2)
                    + (cand[1] - target[1]).powi(2)
                    + (cand[2] - target[2]).powi(2);
                if d < best_dist {
                    best_dist = d;
                    best = p;
                }
            }
            if best_dist.sqrt() > 1e-9 {
                return Err(Error::Quadrature(format!(
                    "reflection of node {q} across axis {axis} is not a quadrature node (distance {:.3e})",
                    best_dist.sqrt()
                )));
            }
            if (quad.weight(best) - quad.weight(q)).abs() > 1e-13 * quad.weight(q).abs() {
                return Err(Error::Quadrature(format!(
                    "reflection of node {q} changes the weight"
                )));
            }
            map[q] = best;
        }
        // Must be an involution and hence a bijection.
        for q in 0..n {
            if map[map[q]] != q {
                return Err(Error::Quadrature(format!(
                    "reflection map across axis {axis} is not an involution at node {q}"
                )));
            }
        }
        Ok(Self { axis, map })
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    /// Index of the node that reflects onto node `q`.
    #[inline]
    pub fn apply(&self, q: usize) -> usize {
        self.map[q]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre polynomial with the usual Chebyshev-like
/// initial guesses; accurate to machine precision for the small orders used
/// here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(z) and its derivative.
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j as f64 + 1.0) * z * p1 - j as f64 * p2) / (j as f64 + 1.0);
            }
            pp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * pp * pp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}
