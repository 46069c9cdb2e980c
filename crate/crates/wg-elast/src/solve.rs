//! Linear solvers for the assembled system: sparse Cholesky by default,
//! Jacobi-preconditioned conjugate gradients as the iterative option,
//! plus a Lanczos probe for the smallest Ritz value used by the SPD
//! structural checks.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};

use crate::assembly::SparseSystem;
use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Direct,
    Cg,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "direct" => Ok(SolverKind::Direct),
            "cg" => Ok(SolverKind::Cg),
            other => Err(Error::Config(format!("unknown solver '{other}' (direct|cg)"))),
        }
    }
}

pub struct Solution {
    pub free: DVector<f64>,
    pub relative_residual: f64,
}

/// Solve the SPD system. The direct path factors A = L L^T; a failed
/// factorization (possible in stabilizer-free mode with too small a weak
/// degree) is surfaced as an error, not masked.
pub fn solve(system: &SparseSystem, kind: SolverKind) -> Result<Solution, Error> {
    let free = match kind {
        SolverKind::Direct => solve_direct(system)?,
        SolverKind::Cg => solve_cg(system)?,
    };
    let relative_residual = system.residual(&free);
    if !relative_residual.is_finite() || relative_residual > 1e-8 {
        return Err(Error::SolverDidNotConverge { residual: relative_residual });
    }
    Ok(Solution { free, relative_residual })
}

fn solve_direct(system: &SparseSystem) -> Result<DVector<f64>, Error> {
    let llt = system
        .matrix
        .sp_cholesky(Side::Lower)
        .map_err(|_| Error::NotPositiveDefinite)?;
    let rhs = Mat::from_fn(system.n, 1, |i, _| system.rhs[i]);
    let x = llt.solve(&rhs);
    Ok(DVector::from_fn(system.n, |i, _| x[(i, 0)]))
}

fn solve_cg(system: &SparseSystem) -> Result<DVector<f64>, Error> {
    let n = system.n;
    let b = &system.rhs;
    if b.norm() == 0.0 {
        return Ok(DVector::zeros(n));
    }
    // Jacobi preconditioner.
    let mat = system.matrix.as_ref();
    let mut diag = DVector::from_element(n, 1.0);
    for j in 0..n {
        let rows = mat.row_idx_of_col_raw(j);
        let vals = mat.val_of_col(j);
        for (ri, &v) in rows.iter().zip(vals) {
            if *ri == j && v > 0.0 {
                diag[j] = v;
            }
        }
    }
    let apply_m = |r: &DVector<f64>| r.component_div(&diag);

    let mut x = DVector::zeros(n);
    let mut r = b.clone();
    let mut z = apply_m(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let tol = 1e-12 * b.norm();
    let max_iter = 200 * n.max(100);
    for _ in 0..max_iter {
        if r.norm() <= tol {
            break;
        }
        let ap = system.matvec(&p);
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        let alpha = rz / pap;
        x += alpha * &p;
        r -= alpha * &ap;
        z = apply_m(&r);
        let rz_new = r.dot(&z);
        p = &z + (rz_new / rz) * &p;
        rz = rz_new;
    }
    Ok(x)
}

/// Smallest Ritz value of the system matrix from `iters` Lanczos steps
/// with full reorthogonalization, started from `start`. Positive output
/// on all tested meshes is the practical SPD certificate.
pub fn smallest_ritz_value(system: &SparseSystem, start: &DVector<f64>, iters: usize) -> f64 {
    let n = system.n;
    assert_eq!(start.len(), n);
    let m = iters.min(n);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m);
    let mut alphas = Vec::with_capacity(m);
    let mut betas: Vec<f64> = Vec::new();
    let mut v = start.normalize();
    let mut v_prev: Option<DVector<f64>> = None;
    let mut beta_prev = 0.0;
    for _ in 0..m {
        basis.push(v.clone());
        let mut w = system.matvec(&v);
        if let Some(prev) = &v_prev {
            w -= beta_prev * prev;
        }
        let alpha = w.dot(&v);
        alphas.push(alpha);
        w -= alpha * &v;
        // Full reorthogonalization keeps the small spectrum honest.
        for q in &basis {
            let c = w.dot(q);
            w -= c * q;
        }
        let beta = w.norm();
        if beta < 1e-14 {
            break;
        }
        betas.push(beta);
        v_prev = Some(v);
        beta_prev = beta;
        v = w / beta;
    }
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    nalgebra::SymmetricEigen::new(t).eigenvalues.min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::sparse::{SparseColMat, Triplet};

    fn small_spd_system() -> SparseSystem {
        // 2D Laplacian-like tridiagonal matrix.
        let n = 20;
        let mut trips = Vec::new();
        for i in 0..n {
            trips.push(Triplet::new(i, i, 2.5));
            if i + 1 < n {
                trips.push(Triplet::new(i, i + 1, -1.0));
                trips.push(Triplet::new(i + 1, i, -1.0));
            }
        }
        let matrix = SparseColMat::try_new_from_triplets(n, n, &trips).unwrap();
        let rhs = DVector::from_fn(n, |i, _| (i as f64 * 0.71).cos());
        SparseSystem { n, matrix, rhs }
    }

    #[test]
    fn direct_and_cg_agree() {
        let system = small_spd_system();
        let xd = solve(&system, SolverKind::Direct).unwrap();
        let xc = solve(&system, SolverKind::Cg).unwrap();
        assert!(xd.relative_residual < 1e-12);
        assert!(xc.relative_residual < 1e-10);
        assert!((&xd.free - &xc.free).amax() < 1e-9);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let n = 4;
        let mut trips = Vec::new();
        for i in 0..n {
            trips.push(Triplet::new(i, i, if i == 2 { -1.0 } else { 1.0 }));
        }
        let matrix = SparseColMat::try_new_from_triplets(n, n, &trips).unwrap();
        let system = SparseSystem { n, matrix, rhs: DVector::from_element(n, 1.0) };
        assert!(matches!(
            solve(&system, SolverKind::Direct),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn lanczos_finds_smallest_eigenvalue() {
        let system = small_spd_system();
        // Smallest eigenvalue of the tridiagonal (2.5, -1) Toeplitz
        // matrix: 2.5 - 2 cos(pi/(n+1)).
        let n = system.n as f64;
        let exact = 2.5 - 2.0 * (std::f64::consts::PI / (n + 1.0)).cos();
        let start = DVector::from_fn(system.n, |i, _| 1.0 + (i as f64 * 0.13).sin());
        let ritz = smallest_ritz_value(&system, &start, 30);
        assert!((ritz - exact).abs() < 1e-8, "{ritz} vs {exact}");
        assert!(ritz > 0.0);
    }
}
