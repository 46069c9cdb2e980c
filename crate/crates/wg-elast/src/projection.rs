//! Mass matrices and the local L2 projections Q_0 (cell, vector),
//! Q_b (edge trace space) and Q_h (cell, degree k-1 scalar/tensor).

use nalgebra::{DMatrix, DVector};

use crate::basis::{EdgeBasis, ScalarBasis, TensorBasis, VectorBasis};
use crate::error::Error;
use crate::quadrature::QuadratureRule;
use crate::{Mat2, Vec2};

/// Gram matrix of a scalar basis under the rule.
pub fn mass_scalar(basis: &ScalarBasis, rule: &QuadratureRule) -> DMatrix<f64> {
    let n = basis.dim();
    let npts = rule.len();
    let mut phi = DMatrix::zeros(npts, n);
    for (q, &p) in rule.points.iter().enumerate() {
        for i in 0..n {
            phi[(q, i)] = basis.eval(i, p);
        }
    }
    let mut weighted = phi.clone();
    for (q, &w) in rule.weights.iter().enumerate() {
        for i in 0..n {
            weighted[(q, i)] *= w;
        }
    }
    phi.transpose() * weighted
}

fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let total: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(total, total);
    let mut off = 0;
    for b in blocks {
        out.view_mut((off, off), (b.nrows(), b.ncols())).copy_from(*b);
        off += b.nrows();
    }
    out
}

/// Gram matrix of the vector basis: block diagonal in the components.
pub fn mass_vector(basis: &VectorBasis, rule: &QuadratureRule) -> DMatrix<f64> {
    let ms = mass_scalar(&basis.scalar, rule);
    block_diag(&[&ms, &ms])
}

/// Gram matrix of a tensor basis under the Frobenius inner product. The
/// off-diagonal symmetric block picks up a factor two.
pub fn mass_tensor(basis: &TensorBasis, rule: &QuadratureRule) -> DMatrix<f64> {
    let ms = mass_scalar(&basis.scalar, rule);
    if basis.symmetric {
        let ms2 = 2.0 * ms.clone();
        block_diag(&[&ms, &ms, &ms2])
    } else {
        block_diag(&[&ms, &ms, &ms, &ms])
    }
}

/// Gram matrix of the edge trace basis.
pub fn mass_edge(basis: &EdgeBasis, rule: &QuadratureRule) -> DMatrix<f64> {
    let n = basis.dim();
    let mut m = DMatrix::zeros(n, n);
    for (q, &p) in rule.points.iter().enumerate() {
        let w = rule.weights[q];
        let vals: Vec<Vec2> = (0..n).map(|i| basis.eval(i, p)).collect();
        for i in 0..n {
            for j in i..n {
                let v = w * vals[i].dot(&vals[j]);
                m[(i, j)] += v;
                if i != j {
                    m[(j, i)] += v;
                }
            }
        }
    }
    m
}

fn solve_spd(m: &DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>, Error> {
    m.clone()
        .cholesky()
        .map(|chol| chol.solve(&rhs))
        .ok_or(Error::SingularMass)
}

/// L2 projection of a scalar function onto the basis.
pub fn project_scalar(
    f: impl Fn(Vec2) -> f64,
    basis: &ScalarBasis,
    rule: &QuadratureRule,
) -> Result<DVector<f64>, Error> {
    let n = basis.dim();
    let mut rhs = DVector::zeros(n);
    for (q, &p) in rule.points.iter().enumerate() {
        let fw = rule.weights[q] * f(p);
        for i in 0..n {
            rhs[i] += fw * basis.eval(i, p);
        }
    }
    solve_spd(&mass_scalar(basis, rule), rhs)
}

/// L2 projection of a vector field onto [P_k]^2 (the Q_0 projection for
/// degree k, the vector Q_h projection for degree k-1).
pub fn project_vector(
    f: impl Fn(Vec2) -> Vec2,
    basis: &VectorBasis,
    rule: &QuadratureRule,
) -> Result<DVector<f64>, Error> {
    let n = basis.dim();
    let mut rhs = DVector::zeros(n);
    for (q, &p) in rule.points.iter().enumerate() {
        let fw = rule.weights[q] * f(p);
        for i in 0..n {
            rhs[i] += fw.dot(&basis.eval(i, p));
        }
    }
    solve_spd(&mass_vector(basis, rule), rhs)
}

/// L2 projection of a matrix field onto the tensor basis (Frobenius
/// pairing); this is the tensor Q_h projection for degree k-1.
pub fn project_tensor(
    f: impl Fn(Vec2) -> Mat2,
    basis: &TensorBasis,
    rule: &QuadratureRule,
) -> Result<DVector<f64>, Error> {
    let n = basis.dim();
    let mut rhs = DVector::zeros(n);
    for (q, &p) in rule.points.iter().enumerate() {
        let fp = rule.weights[q] * f(p);
        for i in 0..n {
            rhs[i] += (fp.transpose() * basis.eval(i, p)).trace();
        }
    }
    solve_spd(&mass_tensor(basis, rule), rhs)
}

/// L2 projection of a vector field on an edge onto S_k(e) (Q_b).
pub fn project_edge(
    f: impl Fn(Vec2) -> Vec2,
    basis: &EdgeBasis,
    rule: &QuadratureRule,
) -> Result<DVector<f64>, Error> {
    let n = basis.dim();
    let mut rhs = DVector::zeros(n);
    for (q, &p) in rule.points.iter().enumerate() {
        let fw = rule.weights[q] * f(p);
        for i in 0..n {
            rhs[i] += fw.dot(&basis.eval(i, p));
        }
    }
    solve_spd(&mass_edge(basis, rule), rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{quad_edge, quad_polygon};

    fn unit_square() -> Vec<Vec2> {
        vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ]
    }

    fn square_basis(k: usize) -> (VectorBasis, QuadratureRule) {
        let center = Vec2::new(0.5, 0.5);
        let h = 2.0f64.sqrt();
        (VectorBasis::new(k, center, h), quad_polygon(&unit_square(), 2 * k + 8).unwrap())
    }

    #[test]
    fn p0_mass_on_unit_square() {
        let b = ScalarBasis::new(0, Vec2::new(0.5, 0.5), 2.0f64.sqrt());
        let rule = quad_polygon(&unit_square(), 2).unwrap();
        let m = mass_scalar(&b, &rule);
        assert_eq!(m.nrows(), 1);
        assert!((m[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn p1_mass_matches_hand_integrals() {
        // Basis {1, (x-1/2)/h, (y-1/2)/h} with h = sqrt(2):
        // diag entries 1, (1/12)/2, (1/12)/2; off-diagonals vanish by
        // symmetry of the square about its center.
        let h = 2.0f64.sqrt();
        let b = ScalarBasis::new(1, Vec2::new(0.5, 0.5), h);
        let rule = quad_polygon(&unit_square(), 4).unwrap();
        let m = mass_scalar(&b, &rule);
        assert!((m[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((m[(1, 1)] - 1.0 / 24.0).abs() < 1e-15);
        assert!((m[(2, 2)] - 1.0 / 24.0).abs() < 1e-15);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!(m[(i, j)].abs() < 1e-15);
            assert!((m[(i, j)] - m[(j, i)]).abs() < 1e-15);
        }
    }

    #[test]
    fn edge_mass_k1_oddness() {
        // On the edge (0,0)-(1,0) the rotation basis function is
        // (0, x-1/2); its products with the constants integrate to 0.
        let e = EdgeBasis::new(1, Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0));
        let rule = quad_edge(e.a, e.b, 5);
        let m = mass_edge(&e, &rule);
        assert!(m[(0, 2)].abs() < 1e-15);
        assert!(m[(1, 2)].abs() < 1e-15);
        assert!(m.clone().cholesky().is_some(), "edge mass SPD");
        let asym = (&m - m.transpose()).abs().max();
        assert!(asym < 1e-14);
    }

    #[test]
    fn q0_reproduces_polynomials() {
        let (basis, rule) = square_basis(2);
        let f = |p: Vec2| Vec2::new(1.5 - p.x + 2.0 * p.x * p.y, p.y * p.y - 3.0);
        let coeffs = project_vector(f, &basis, &rule).unwrap();
        for &p in rule.points.iter().step_by(7) {
            let v = basis.combine(coeffs.as_slice(), p);
            assert!((v - f(p)).norm() < 1e-12);
        }
    }

    #[test]
    fn q0_zero_is_zero() {
        let (basis, rule) = square_basis(1);
        let coeffs = project_vector(|_| Vec2::zeros(), &basis, &rule).unwrap();
        assert!(coeffs.amax() < 1e-16);
    }

    #[test]
    fn q0_matches_brute_force_least_squares() {
        // Dense least squares of f = (sin x, 0) on a fine sample grid is
        // an independent approximation of the continuum projection.
        let (basis, rule) = square_basis(1);
        let f = |p: Vec2| Vec2::new(p.x.sin(), 0.0);
        let coeffs = project_vector(f, &basis, &rule).unwrap();

        let n = basis.dim();
        let grid = 400usize;
        let mut ata = DMatrix::<f64>::zeros(n, n);
        let mut atb = DVector::<f64>::zeros(n);
        for gi in 0..grid {
            for gj in 0..grid {
                let p = Vec2::new((gi as f64 + 0.5) / grid as f64, (gj as f64 + 0.5) / grid as f64);
                let fv = f(p);
                let row: Vec<Vec2> = (0..n).map(|i| basis.eval(i, p)).collect();
                for i in 0..n {
                    atb[i] += row[i].dot(&fv);
                    for j in 0..n {
                        ata[(i, j)] += row[i].dot(&row[j]);
                    }
                }
            }
        }
        let lsq = ata.lu().solve(&atb).unwrap();
        for i in 0..n {
            assert!(
                (coeffs[i] - lsq[i]).abs() < 1e-5,
                "coefficient {i}: {} vs {}",
                coeffs[i],
                lsq[i]
            );
        }
    }

    #[test]
    fn qb_projects_linear_onto_mean() {
        // k=1, edge (0,0)-(1,0), f=(x,0): rotation component vanishes,
        // first component projects to its mean 1/2.
        let e = EdgeBasis::new(1, Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0));
        let rule = quad_edge(e.a, e.b, 5);
        let c = project_edge(|p| Vec2::new(p.x, 0.0), &e, &rule).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-14);
        assert!(c[1].abs() < 1e-14);
        assert!(c[2].abs() < 1e-14);
    }

    #[test]
    fn qb_round_trips_space_members() {
        // k=2: [P_1(e)]^2 functions reproduce exactly.
        let e = EdgeBasis::new(2, Vec2::new(0.1, 0.2), Vec2::new(0.8, 0.9));
        let rule = quad_edge(e.a, e.b, 7);
        let f = |p: Vec2| Vec2::new(1.0 + 2.0 * p.x, -0.5 * p.y + p.x);
        // p.x, p.y restricted to the edge are linear in arclength.
        let c = project_edge(f, &e, &rule).unwrap();
        for &p in &rule.points {
            assert!((e.combine(c.as_slice(), p) - f(p)).norm() < 1e-13);
        }
        // k=1: a rigid motion round-trips.
        let e = EdgeBasis::new(1, Vec2::new(0.3, 0.0), Vec2::new(0.7, 0.4));
        let rule = quad_edge(e.a, e.b, 5);
        let rm = |p: Vec2| Vec2::new(-p.y, p.x);
        let c = project_edge(rm, &e, &rule).unwrap();
        for &p in &rule.points {
            assert!((e.combine(c.as_slice(), p) - rm(p)).norm() < 1e-13);
        }
    }

    #[test]
    fn qh_tensor_r0_is_cell_average() {
        let center = Vec2::new(0.5, 0.5);
        let h = 2.0f64.sqrt();
        let basis = TensorBasis::symmetric(0, center, h);
        let rule = quad_polygon(&unit_square(), 12).unwrap();
        let f = |p: Vec2| {
            let s = (std::f64::consts::PI * p.x).sin() * (std::f64::consts::PI * p.y).cos();
            Mat2::new(s, 0.5 * s, 0.5 * s, -s)
        };
        let c = project_tensor(f, &basis, &rule).unwrap();
        // Independent high-order cell averages.
        let avg_rule = quad_polygon(&unit_square(), 16).unwrap();
        let a11 = avg_rule.integrate(|p| f(p)[(0, 0)]);
        let a22 = avg_rule.integrate(|p| f(p)[(1, 1)]);
        let a12 = avg_rule.integrate(|p| f(p)[(0, 1)]);
        assert!((c[0] - a11).abs() < 1e-12);
        assert!((c[1] - a22).abs() < 1e-12);
        assert!((c[2] - a12).abs() < 1e-12);
    }

    #[test]
    fn projection_idempotent_and_orthogonal() {
        let (basis, rule) = square_basis(2);
        let f = |p: Vec2| Vec2::new((2.0 * p.x).cos() * p.y, (p.x - p.y).exp());
        let c1 = project_vector(f, &basis, &rule).unwrap();
        // Project the projection: must reproduce the coefficients.
        let c2 = project_vector(|p| basis.combine(c1.as_slice(), p), &basis, &rule).unwrap();
        assert!((&c1 - &c2).amax() < 1e-12);
        // Residual orthogonality against every basis function.
        for i in 0..basis.dim() {
            let resid = rule.integrate(|p| {
                (f(p) - basis.combine(c1.as_slice(), p)).dot(&basis.eval(i, p))
            });
            assert!(resid.abs() < 1e-10, "basis {i}: {resid}");
        }
    }
}
