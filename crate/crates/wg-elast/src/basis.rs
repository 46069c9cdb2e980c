//! Scaled monomial bases on cells and trace bases on edges.
//!
//! Cell bases use monomials ((x-xc)/h)^a ((y-yc)/h)^b centered at the
//! cell centroid and scaled by the cell diameter, enumerated in graded
//! lexicographic order; the scaling keeps mass-matrix conditioning
//! independent of the refinement level. Vector and tensor variants are
//! formed component-wise. The edge space carries [P_{k-1}(e)]^2 for
//! k >= 2 and the rigid-motion trace basis for k = 1.

use nalgebra::DMatrix;

use crate::{Mat2, Vec2};

/// Dimension of P_r in two variables.
pub fn dim_poly(r: usize) -> usize {
    (r + 1) * (r + 2) / 2
}

/// Dimension of the edge space S_k(e).
pub fn dim_edge_space(k: usize) -> usize {
    if k == 1 {
        3
    } else {
        2 * k
    }
}

/// Scalar polynomials of total degree <= `degree` on one cell.
#[derive(Clone, Debug)]
pub struct ScalarBasis {
    pub degree: usize,
    pub center: Vec2,
    pub scale: f64,
    exps: Vec<(u32, u32)>,
}

impl ScalarBasis {
    pub fn new(degree: usize, center: Vec2, scale: f64) -> Self {
        assert!(scale > 0.0, "basis scale must be positive");
        let mut exps = Vec::with_capacity(dim_poly(degree));
        for d in 0..=degree as u32 {
            for a in (0..=d).rev() {
                exps.push((a, d - a));
            }
        }
        ScalarBasis { degree, center, scale, exps }
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    pub fn eval(&self, i: usize, p: Vec2) -> f64 {
        let (a, b) = self.exps[i];
        let x = (p.x - self.center.x) / self.scale;
        let y = (p.y - self.center.y) / self.scale;
        x.powi(a as i32) * y.powi(b as i32)
    }

    pub fn grad(&self, i: usize, p: Vec2) -> Vec2 {
        let (a, b) = self.exps[i];
        let x = (p.x - self.center.x) / self.scale;
        let y = (p.y - self.center.y) / self.scale;
        let dx = if a == 0 {
            0.0
        } else {
            a as f64 * x.powi(a as i32 - 1) * y.powi(b as i32) / self.scale
        };
        let dy = if b == 0 {
            0.0
        } else {
            b as f64 * x.powi(a as i32) * y.powi(b as i32 - 1) / self.scale
        };
        Vec2::new(dx, dy)
    }

    /// Evaluate the linear combination with the given coefficients.
    pub fn combine(&self, coeffs: &[f64], p: Vec2) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * self.eval(i, p))
            .sum()
    }
}

/// Vector polynomials [P_k]^2: first all (phi_i, 0), then all (0, phi_i).
#[derive(Clone, Debug)]
pub struct VectorBasis {
    pub scalar: ScalarBasis,
}

impl VectorBasis {
    pub fn new(degree: usize, center: Vec2, scale: f64) -> Self {
        VectorBasis { scalar: ScalarBasis::new(degree, center, scale) }
    }

    pub fn dim(&self) -> usize {
        2 * self.scalar.dim()
    }

    pub fn eval(&self, i: usize, p: Vec2) -> Vec2 {
        let n = self.scalar.dim();
        if i < n {
            Vec2::new(self.scalar.eval(i, p), 0.0)
        } else {
            Vec2::new(0.0, self.scalar.eval(i - n, p))
        }
    }

    pub fn gradient(&self, i: usize, p: Vec2) -> Mat2 {
        let n = self.scalar.dim();
        let mut g = Mat2::zeros();
        if i < n {
            let gs = self.scalar.grad(i, p);
            g[(0, 0)] = gs.x;
            g[(0, 1)] = gs.y;
        } else {
            let gs = self.scalar.grad(i - n, p);
            g[(1, 0)] = gs.x;
            g[(1, 1)] = gs.y;
        }
        g
    }

    pub fn divergence(&self, i: usize, p: Vec2) -> f64 {
        let n = self.scalar.dim();
        if i < n {
            self.scalar.grad(i, p).x
        } else {
            self.scalar.grad(i - n, p).y
        }
    }

    pub fn combine(&self, coeffs: &[f64], p: Vec2) -> Vec2 {
        let n = self.scalar.dim();
        let mut v = Vec2::zeros();
        for (i, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                let s = if i < n { self.scalar.eval(i, p) } else { self.scalar.eval(i - n, p) };
                if i < n {
                    v.x += c * s;
                } else {
                    v.y += c * s;
                }
            }
        }
        v
    }

    pub fn combine_gradient(&self, coeffs: &[f64], p: Vec2) -> Mat2 {
        let n = self.scalar.dim();
        let mut g = Mat2::zeros();
        for (i, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                let gs = if i < n { self.scalar.grad(i, p) } else { self.scalar.grad(i - n, p) };
                if i < n {
                    g[(0, 0)] += c * gs.x;
                    g[(0, 1)] += c * gs.y;
                } else {
                    g[(1, 0)] += c * gs.x;
                    g[(1, 1)] += c * gs.y;
                }
            }
        }
        g
    }
}

/// 2x2 tensor polynomials over P_r. The full variant has four blocks in
/// order (11, 12, 21, 22); the symmetric variant has three blocks
/// (11, 22, od) where `od` is phi * [[0,1],[1,0]].
#[derive(Clone, Debug)]
pub struct TensorBasis {
    pub scalar: ScalarBasis,
    pub symmetric: bool,
}

impl TensorBasis {
    pub fn full(degree: usize, center: Vec2, scale: f64) -> Self {
        TensorBasis { scalar: ScalarBasis::new(degree, center, scale), symmetric: false }
    }

    pub fn symmetric(degree: usize, center: Vec2, scale: f64) -> Self {
        TensorBasis { scalar: ScalarBasis::new(degree, center, scale), symmetric: true }
    }

    pub fn blocks(&self) -> usize {
        if self.symmetric {
            3
        } else {
            4
        }
    }

    pub fn dim(&self) -> usize {
        self.blocks() * self.scalar.dim()
    }

    fn split(&self, i: usize) -> (usize, usize) {
        let n = self.scalar.dim();
        (i / n, i % n)
    }

    pub fn eval(&self, i: usize, p: Vec2) -> Mat2 {
        let (block, j) = self.split(i);
        let s = self.scalar.eval(j, p);
        let mut m = Mat2::zeros();
        if self.symmetric {
            match block {
                0 => m[(0, 0)] = s,
                1 => m[(1, 1)] = s,
                _ => {
                    m[(0, 1)] = s;
                    m[(1, 0)] = s;
                }
            }
        } else {
            match block {
                0 => m[(0, 0)] = s,
                1 => m[(0, 1)] = s,
                2 => m[(1, 0)] = s,
                _ => m[(1, 1)] = s,
            }
        }
        m
    }

    /// Row-wise divergence of the i-th tensor basis function.
    pub fn row_divergence(&self, i: usize, p: Vec2) -> Vec2 {
        let (block, j) = self.split(i);
        let g = self.scalar.grad(j, p);
        if self.symmetric {
            match block {
                0 => Vec2::new(g.x, 0.0),
                1 => Vec2::new(0.0, g.y),
                _ => Vec2::new(g.y, g.x),
            }
        } else {
            match block {
                0 => Vec2::new(g.x, 0.0),
                1 => Vec2::new(g.y, 0.0),
                2 => Vec2::new(0.0, g.x),
                _ => Vec2::new(0.0, g.y),
            }
        }
    }

    /// The vector (tau n) of the i-th basis function against a normal.
    pub fn dot_normal(&self, i: usize, p: Vec2, n: Vec2) -> Vec2 {
        let (block, j) = self.split(i);
        let s = self.scalar.eval(j, p);
        if self.symmetric {
            match block {
                0 => Vec2::new(s * n.x, 0.0),
                1 => Vec2::new(0.0, s * n.y),
                _ => Vec2::new(s * n.y, s * n.x),
            }
        } else {
            match block {
                0 => Vec2::new(s * n.x, 0.0),
                1 => Vec2::new(s * n.y, 0.0),
                2 => Vec2::new(0.0, s * n.x),
                _ => Vec2::new(0.0, s * n.y),
            }
        }
    }

    /// Frobenius inner product of basis functions i and j at a point.
    pub fn frobenius(&self, i: usize, j: usize, p: Vec2) -> f64 {
        let (bi, si) = self.split(i);
        let (bj, sj) = self.split(j);
        if bi != bj {
            return 0.0;
        }
        let factor = if self.symmetric && bi == 2 { 2.0 } else { 1.0 };
        factor * self.scalar.eval(si, p) * self.scalar.eval(sj, p)
    }

    pub fn combine(&self, coeffs: &[f64], p: Vec2) -> Mat2 {
        let mut m = Mat2::zeros();
        for (i, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                m += c * self.eval(i, p);
            }
        }
        m
    }
}

/// Map coefficients in the full tensor basis to the symmetric basis of
/// the symmetrized field (g + g^T)/2. Both bases must share the scalar
/// part.
pub fn symmetrize_coeffs(full: &DMatrix<f64>, n_scalar: usize) -> DMatrix<f64> {
    assert_eq!(full.nrows(), 4 * n_scalar);
    let cols = full.ncols();
    let mut sym = DMatrix::zeros(3 * n_scalar, cols);
    for c in 0..cols {
        for j in 0..n_scalar {
            sym[(j, c)] = full[(j, c)];
            sym[(n_scalar + j, c)] = full[(3 * n_scalar + j, c)];
            sym[(2 * n_scalar + j, c)] = 0.5 * (full[(n_scalar + j, c)] + full[(2 * n_scalar + j, c)]);
        }
    }
    sym
}

/// Trace of the symmetric tensor coefficients as P_r coefficients.
pub fn trace_coeffs(sym: &DMatrix<f64>, n_scalar: usize) -> DMatrix<f64> {
    assert_eq!(sym.nrows(), 3 * n_scalar);
    let cols = sym.ncols();
    let mut tr = DMatrix::zeros(n_scalar, cols);
    for c in 0..cols {
        for j in 0..n_scalar {
            tr[(j, c)] = sym[(j, c)] + sym[(n_scalar + j, c)];
        }
    }
    tr
}

/// Edge trace space S_k(e). For k >= 2 both components carry scaled 1D
/// monomials t^j, t = (s - s_mid)/|e|, j < k. For k = 1 it is the
/// rigid-motion trace basis {(1,0), (0,1), (-(y-ym), (x-xm))}, written
/// about the edge midpoint for conditioning (translation does not change
/// the span).
#[derive(Clone, Debug)]
pub struct EdgeBasis {
    pub k: usize,
    pub a: Vec2,
    pub b: Vec2,
    pub midpoint: Vec2,
    pub tangent: Vec2,
    pub length: f64,
}

impl EdgeBasis {
    pub fn new(k: usize, a: Vec2, b: Vec2) -> Self {
        assert!(k >= 1);
        let d = b - a;
        let length = d.norm();
        assert!(length > 0.0, "degenerate edge");
        EdgeBasis { k, a, b, midpoint: 0.5 * (a + b), tangent: d / length, length }
    }

    pub fn dim(&self) -> usize {
        dim_edge_space(self.k)
    }

    fn param(&self, p: Vec2) -> f64 {
        (p - self.midpoint).dot(&self.tangent) / self.length
    }

    pub fn eval(&self, i: usize, p: Vec2) -> Vec2 {
        if self.k == 1 {
            match i {
                0 => Vec2::new(1.0, 0.0),
                1 => Vec2::new(0.0, 1.0),
                _ => Vec2::new(-(p.y - self.midpoint.y), p.x - self.midpoint.x),
            }
        } else {
            let n = self.k;
            let t = self.param(p);
            if i < n {
                Vec2::new(t.powi(i as i32), 0.0)
            } else {
                Vec2::new(0.0, t.powi((i - n) as i32))
            }
        }
    }

    pub fn combine(&self, coeffs: &[f64], p: Vec2) -> Vec2 {
        let mut v = Vec2::zeros();
        for (i, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                v += c * self.eval(i, p);
            }
        }
        v
    }
}
