//! Assembly of the stabilized bilinear form and the right-hand side into
//! a sparse symmetric system over the free unknowns.
//!
//! Per cell:
//!   A_T = 2 mu_T E^T M_sym E + lambda_T D^T M_r D      (weak form)
//!   S_T = h_T^{-1} sum_e C_e^T M_e C_e                 (stabilizer)
//! where E and D are the weak strain/divergence blocks and C_e maps local
//! DOFs to the edge-trace defect Q_b v_0 - v_b. Essential conditions are
//! eliminated: fixed boundary blocks and the affine interface R blocks
//! move into the right-hand side, which keeps the reduced system SPD.
//! Local matrices are computed in parallel; the scatter runs in fixed
//! cell order so repeated assemblies are bit-identical regardless of the
//! worker count.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use faer::sparse::{SparseColMat, Triplet};

use crate::cases::ManufacturedCase;
use crate::dofmap::{DofKind, DofMap, EdgeBlock};
use crate::error::Error;
use crate::mesh::{EdgeKind, PolyMesh};
use crate::weak_ops::ElementContext;
use crate::Vec2;

/// Assembly options. `r` is the weak-operator degree (the scheme uses
/// k-1 by default; stabilizer-free runs raise it).
#[derive(Clone, Copy, Debug)]
pub struct AssemblyOptions {
    pub r: usize,
    pub stabilizer: bool,
    pub quad_boost: usize,
}

impl AssemblyOptions {
    pub fn new(k: usize) -> Self {
        AssemblyOptions { r: k - 1, stabilizer: true, quad_boost: 0 }
    }

    pub fn with_r(mut self, r: usize) -> Self {
        self.r = r;
        self
    }

    pub fn without_stabilizer(mut self) -> Self {
        self.stabilizer = false;
        self
    }

    pub fn with_quad_boost(mut self, boost: usize) -> Self {
        self.quad_boost = boost;
        self
    }
}

fn symmetrized(m: DMatrix<f64>) -> DMatrix<f64> {
    let mt = m.transpose();
    0.5 * (m + mt)
}

/// Element stiffness 2 mu (eps_w, eps_w) + lambda (div_w, div_w) in the
/// local DOF basis. Symmetric positive semidefinite.
pub fn local_stiffness(ctx: &ElementContext, mu: f64, lambda: f64) -> DMatrix<f64> {
    let e = &ctx.blocks.strain;
    let d = &ctx.blocks.div;
    let a = 2.0 * mu * e.transpose() * &ctx.mass_sym * e + lambda * d.transpose() * &ctx.mass_r * d;
    symmetrized(a)
}

/// Element stabilizer h_T^{-1} <Q_b v_0 - v_b, Q_b u_0 - u_b>_dT.
/// Its kernel is exactly the local functions whose edge blocks are the
/// Q_b projections of the interior trace.
pub fn local_stabilizer(ctx: &ElementContext) -> Result<DMatrix<f64>, Error> {
    let layout = ctx.layout;
    let total = layout.total();
    let mut s = DMatrix::zeros(total, total);
    for j in 0..layout.n_edges {
        let me = &ctx.edge_mass[j];
        let chol = me.clone().cholesky().ok_or(Error::SingularMass)?;
        // C = [M_e^{-1} N_e | ... -I at this edge block ...].
        let q = chol.solve(&ctx.edge_trace_moments[j]);
        let mut c = DMatrix::zeros(layout.ns, total);
        c.view_mut((0, 0), (layout.ns, layout.n_interior)).copy_from(&q);
        let off = layout.edge_offset(j);
        for l in 0..layout.ns {
            c[(l, off + l)] = -1.0;
        }
        s += c.transpose() * me * c;
    }
    Ok(symmetrized(s / ctx.h))
}

/// Moments of the body force against the interior basis; edge blocks
/// are zero.
pub fn local_load(ctx: &ElementContext, f: impl Fn(Vec2) -> Vec2) -> DVector<f64> {
    let layout = ctx.layout;
    let mut load = DVector::zeros(layout.total());
    for (q, &p) in ctx.cell_rule.points.iter().enumerate() {
        let fw = ctx.cell_rule.weights[q] * f(p);
        for i in 0..layout.n_interior {
            load[i] += fw.dot(&ctx.interior.eval(i, p));
        }
    }
    load
}

/// Sparse symmetric system over the free unknowns.
pub struct SparseSystem {
    pub n: usize,
    pub matrix: SparseColMat<usize, f64>,
    pub rhs: DVector<f64>,
}

impl SparseSystem {
    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        let mat = self.matrix.as_ref();
        for j in 0..self.n {
            let xj = x[j];
            if xj != 0.0 {
                let rows = mat.row_idx_of_col_raw(j);
                let vals = mat.val_of_col(j);
                for (ri, &v) in rows.iter().zip(vals) {
                    y[*ri] += v * xj;
                }
            }
        }
        y
    }

    /// Relative residual ||Ax - b|| / ||b|| (absolute when b = 0).
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        let r = self.matvec(x) - &self.rhs;
        let denom = self.rhs.norm();
        if denom > 0.0 {
            r.norm() / denom
        } else {
            r.norm()
        }
    }

    /// Largest |A_ij - A_ji| over the stored pattern.
    pub fn max_asymmetry(&self) -> f64 {
        use std::collections::HashMap;
        let mut entries: HashMap<(usize, usize), f64> = HashMap::new();
        let mat = self.matrix.as_ref();
        for j in 0..self.n {
            let rows = mat.row_idx_of_col_raw(j);
            let vals = mat.val_of_col(j);
            for (ri, &v) in rows.iter().zip(vals) {
                entries.insert((*ri, j), v);
            }
        }
        let mut worst = 0.0f64;
        for (&(i, j), &v) in &entries {
            let vt = entries.get(&(j, i)).copied().unwrap_or(0.0);
            worst = worst.max((v - vt).abs());
        }
        worst
    }

    /// Coordinate text dump: `row col value` per line, 17 significant
    /// digits, for external verification.
    pub fn dump_matrix(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let mat = self.matrix.as_ref();
        for j in 0..self.n {
            let rows = mat.row_idx_of_col_raw(j);
            let vals = mat.val_of_col(j);
            for (ri, &v) in rows.iter().zip(vals) {
                let _ = writeln!(out, "{} {} {:.16e}", *ri, j, v);
            }
        }
        out
    }
}

/// Assemble the WG scheme: scatter A_T (+ S_T) over the free DOFs,
/// eliminate fixed and affine blocks into the right-hand side, add the
/// body-force moments and the interface traction term <psi, v_b>.
pub fn assemble(
    mesh: &PolyMesh,
    dofmap: &DofMap,
    case: &ManufacturedCase,
    options: AssemblyOptions,
) -> Result<SparseSystem, Error> {
    let k = dofmap.k;
    let n = dofmap.n_free;

    // Per-cell local matrices in parallel; deterministic order preserved
    // by the indexed collect.
    let locals: Vec<Result<(DMatrix<f64>, DVector<f64>), Error>> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let ctx = ElementContext::new(mesh, c, k, options.r, options.quad_boost)?;
            let sub = mesh.cell_subdomain[c];
            let mu = case.coeffs.mu(sub);
            let lambda = case.coeffs.lambda(sub);
            let mut a = local_stiffness(&ctx, mu, lambda);
            if options.stabilizer {
                a += local_stabilizer(&ctx)?;
            }
            let load = local_load(&ctx, |p| case.body_force(p, sub));
            Ok((a, load))
        })
        .collect();

    let mut triplets: Vec<Triplet<usize, usize, f64>> = Vec::new();
    let mut rhs = DVector::zeros(n);

    for c in 0..mesh.n_cells() {
        let (a, load) = match &locals[c] {
            Ok(pair) => pair,
            Err(e) => return Err(clone_error(e)),
        };
        let full_ids = dofmap.cell_to_full(mesh, c);
        let m = full_ids.len();
        debug_assert_eq!(m, a.nrows());
        // Row/column resolution: tests take the master free DOF (single
        // valued), trials additionally carry the affine shift / fixed
        // value into the RHS.
        let resolved: Vec<(Option<usize>, f64)> = full_ids
            .iter()
            .map(|&g| match dofmap.full_kind[g] {
                DofKind::Free(f) => (Some(f), 0.0),
                DofKind::Affine { master, shift } => (Some(master), shift),
                DofKind::Fixed(v) => (None, v),
            })
            .collect();
        for (i, &(row, _)) in resolved.iter().enumerate() {
            let Some(row) = row else { continue };
            rhs[row] += load[i];
            for (j, &(col, shift)) in resolved.iter().enumerate() {
                let v = a[(i, j)];
                if v == 0.0 {
                    continue;
                }
                match col {
                    Some(col) => {
                        triplets.push(Triplet::new(row, col, v));
                        if shift != 0.0 {
                            rhs[row] -= v * shift;
                        }
                    }
                    None => rhs[row] -= v * shift,
                }
            }
        }
    }

    // Interface traction term: psi paired with the single-valued test
    // trace on each interface edge.
    add_traction_term(mesh, dofmap, case, options.quad_boost, &mut rhs)?;

    let matrix = SparseColMat::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Config(format!("sparse matrix creation failed: {e:?}")))?;
    Ok(SparseSystem { n, matrix, rhs })
}

fn clone_error(e: &Error) -> Error {
    // Errors from the parallel section are cloned structurally; only
    // variants producible there appear.
    match e {
        Error::SingularMass => Error::SingularMass,
        Error::SelfIntersectingPolygon => Error::SelfIntersectingPolygon,
        Error::InvalidParam(s) => Error::InvalidParam(s.clone()),
        other => Error::Config(format!("{other}")),
    }
}

fn add_traction_term(
    mesh: &PolyMesh,
    dofmap: &DofMap,
    case: &ManufacturedCase,
    quad_boost: usize,
    rhs: &mut DVector<f64>,
) -> Result<(), Error> {
    use crate::basis::EdgeBasis;
    use crate::quadrature::quad_edge;
    let k = dofmap.k;
    let edge_deg = 2 * k + 3 + quad_boost;
    for e in 0..mesh.n_edges() {
        let EdgeKind::Interface(_) = mesh.edge_kind[e] else { continue };
        let EdgeBlock::Split { left, outer_cell, .. } = dofmap.edge_block[e] else {
            unreachable!("interface edge without split block")
        };
        let (a, b) = mesh.edge_endpoints(e);
        let basis = EdgeBasis::new(k, a, b);
        let rule = quad_edge(a, b, edge_deg);
        // Normal pointing from the outer side into the inclusion.
        let n12 = mesh.outward_normal(e, outer_cell);
        for j in 0..basis.dim() {
            let moment = rule.integrate(|p| case.jump_traction(p, n12).dot(&basis.eval(j, p)));
            match dofmap.full_kind[left + j] {
                DofKind::Free(f) => rhs[f] += moment,
                _ => unreachable!("interface L block is free"),
            }
        }
    }
    Ok(())
}

/// Contract two full-layout fields against the bilinear form
/// a(.,.) + s(.,.) cell by cell (the stabilizer term is always
/// included). Used for the energy norm and the error-equation checks.
pub fn bilinear_energy(
    mesh: &PolyMesh,
    dofmap: &DofMap,
    case: &ManufacturedCase,
    r: usize,
    quad_boost: usize,
    u_full: &DVector<f64>,
    v_full: &DVector<f64>,
) -> Result<f64, Error> {
    let k = dofmap.k;
    let terms: Vec<Result<f64, Error>> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let ctx = ElementContext::new(mesh, c, k, r, quad_boost)?;
            let sub = mesh.cell_subdomain[c];
            let a = local_stiffness(&ctx, case.coeffs.mu(sub), case.coeffs.lambda(sub));
            let s = local_stabilizer(&ctx)?;
            let ids = dofmap.cell_to_full(mesh, c);
            let ul = DVector::from_fn(ids.len(), |i, _| u_full[ids[i]]);
            let vl = DVector::from_fn(ids.len(), |i, _| v_full[ids[i]]);
            Ok((ul.transpose() * (a + s) * vl)[(0, 0)])
        })
        .collect();
    let mut total = 0.0;
    for t in terms {
        total += t.map_err(|e| clone_error(&e))?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{BivPoly, CoefficientField};
    use crate::dofmap::build_dof_map;
    use crate::mesh::{gen_rect_mesh, tag_interface, PolyMesh};

    fn example1(mu0: f64, l0: f64) -> ManufacturedCase {
        ManufacturedCase::example1(CoefficientField::new(mu0, l0).unwrap())
    }

    fn unit_cell_ctx(k: usize, r: usize) -> ElementContext {
        let mesh = gen_rect_mesh(1).unwrap();
        ElementContext::new(&mesh, 0, k, r, 0).unwrap()
    }

    fn pentagon_ctx(k: usize, r: usize) -> ElementContext {
        let mesh = PolyMesh::from_cells(
            vec![
                crate::Vec2::new(0.05, 0.02),
                crate::Vec2::new(0.95, 0.1),
                crate::Vec2::new(1.1, 0.65),
                crate::Vec2::new(0.6, 1.05),
                crate::Vec2::new(0.02, 0.7),
            ],
            vec![vec![0, 1, 2, 3, 4]],
        );
        ElementContext::new(&mesh, 0, k, r, 0).unwrap()
    }

    #[test]
    fn stiffness_kernel_contains_constants_and_rotations() {
        let makers: [(usize, fn(usize, usize) -> ElementContext); 2] =
            [(1, unit_cell_ctx), (2, pentagon_ctx)];
        for (k, make) in makers {
            let ctx = make(k, k - 1);
            let a = local_stiffness(&ctx, 0.5, 0.5);
            let s = local_stabilizer(&ctx).unwrap();
            for f in [
                |_p: crate::Vec2| crate::Vec2::new(1.0, -2.0),
                |p: crate::Vec2| crate::Vec2::new(-(p.y - 0.5), p.x - 0.5),
            ] {
                let dofs = ctx.project_weak(f).unwrap();
                assert!(((&a + &s) * &dofs).amax() < 1e-10, "k={k}");
            }
        }
    }

    #[test]
    fn stiffness_matches_quadrature_oracle() {
        // Independent path: reconstruct eps_w / div_w of each DOF basis
        // vector as polynomial fields and integrate 2 mu |eps_w|^2 +
        // lambda (div_w)^2 pointwise.
        let ctx = unit_cell_ctx(1, 0);
        let (mu, lambda) = (0.5, 0.5);
        let a = local_stiffness(&ctx, mu, lambda);
        let total = ctx.layout.total();
        for i in 0..total {
            for j in 0..total {
                let ei = DVector::from_fn(total, |l, _| if l == i { 1.0 } else { 0.0 });
                let ej = DVector::from_fn(total, |l, _| if l == j { 1.0 } else { 0.0 });
                let strain_i = &ctx.blocks.strain * &ei;
                let strain_j = &ctx.blocks.strain * &ej;
                let div_i = &ctx.blocks.div * &ei;
                let div_j = &ctx.blocks.div * &ej;
                let oracle = ctx.cell_rule.integrate(|p| {
                    let si = ctx.sym_r.combine(strain_i.as_slice(), p);
                    let sj = ctx.sym_r.combine(strain_j.as_slice(), p);
                    let di = ctx.scalar_r.combine(div_i.as_slice(), p);
                    let dj = ctx.scalar_r.combine(div_j.as_slice(), p);
                    2.0 * mu * (si.transpose() * sj).trace() + lambda * di * dj
                });
                assert!((a[(i, j)] - oracle).abs() < 1e-12, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn stabilizer_kernel_and_single_mode_value() {
        let ctx = unit_cell_ctx(1, 0);
        let s = local_stabilizer(&ctx).unwrap();
        // Kernel: consistent weak functions.
        let dofs = ctx.project_weak(|p| crate::Vec2::new(p.x, p.x - p.y)).unwrap();
        assert!((&s * &dofs).amax() < 1e-12);
        // v_0 = 0, one edge basis function on edge 0:
        // s(v,v) = h^{-1} (M_e)_{jj}.
        let total = ctx.layout.total();
        let j = 1usize;
        let mut v = DVector::zeros(total);
        v[ctx.layout.edge_offset(0) + j] = 1.0;
        let expected = ctx.edge_mass[0][(j, j)] / ctx.h;
        let got = (v.transpose() * &s * &v)[(0, 0)];
        assert!((got - expected).abs() < 1e-13, "{got} vs {expected}");
        // PSD.
        let eig = nalgebra::SymmetricEigen::new(s.clone());
        assert!(eig.eigenvalues.min() > -1e-12);
    }

    #[test]
    fn load_vector_moments() {
        let ctx = unit_cell_ctx(1, 0);
        let zero = local_load(&ctx, |_| crate::Vec2::zeros());
        assert!(zero.amax() == 0.0);
        let load = local_load(&ctx, |_| crate::Vec2::new(0.0, 1.0));
        // Second-component constant basis function integrates to |T|.
        let np = ctx.interior.scalar.dim();
        assert!((load[np] - 1.0).abs() < 1e-14);
        assert!(load[0].abs() < 1e-14);
        // Non-polynomial load against a refined-quadrature oracle, on a
        // production-scale cell where the default rule is converged.
        let case = example1(100.0, 0.01);
        let h = 1.0 / 64.0;
        let cell = PolyMesh::from_cells(
            vec![
                crate::Vec2::new(0.5, 0.5),
                crate::Vec2::new(0.5 + h, 0.5),
                crate::Vec2::new(0.5 + h, 0.5 + h),
                crate::Vec2::new(0.5, 0.5 + h),
            ],
            vec![vec![0, 1, 2, 3]],
        );
        let ctx_base = ElementContext::new(&cell, 0, 1, 0, 0).unwrap();
        let ctx_fine = ElementContext::new(&cell, 0, 1, 0, 8).unwrap();
        let load_base = local_load(&ctx_base, |p| case.body_force(p, 2));
        let load_fine = local_load(&ctx_fine, |p| case.body_force(p, 2));
        assert!((&load_base - &load_fine).amax() < 1e-10);
    }

    #[test]
    fn local_kernel_dimension_is_rigid_motions() {
        // dim ker(A_T + S_T) = 3 on a single cell before any boundary
        // conditions, for squares and degenerate octagons.
        for k in [1usize, 2, 3] {
            for octagon in [false, true] {
                let mesh = if octagon {
                    crate::mesh::gen_polygon_mesh(1).unwrap()
                } else {
                    gen_rect_mesh(1).unwrap()
                };
                let ctx = ElementContext::new(&mesh, 0, k, k - 1, 0).unwrap();
                let m = local_stiffness(&ctx, 0.5, 0.5) + local_stabilizer(&ctx).unwrap();
                let eig = nalgebra::SymmetricEigen::new(m);
                let max = eig.eigenvalues.max();
                let near_zero = eig.eigenvalues.iter().filter(|&&l| l < 1e-10 * max).count();
                assert_eq!(near_zero, 3, "k={k} octagon={octagon}");
            }
        }
    }

    #[test]
    fn assembled_system_is_symmetric_and_spd() {
        let mut mesh = gen_rect_mesh(4).unwrap();
        tag_interface(&mut mesh).unwrap();
        let case = example1(1.0, 1.0);
        let dm = build_dof_map(&mesh, 1, &case, 0).unwrap();
        let system = assemble(&mesh, &dm, &case, AssemblyOptions::new(1)).unwrap();
        assert!(system.max_asymmetry() <= 1e-12);
        let sol = crate::solve::solve(&system, crate::solve::SolverKind::Direct).unwrap();
        assert!(sol.relative_residual <= 1e-10);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let mut mesh = gen_rect_mesh(4).unwrap();
        tag_interface(&mut mesh).unwrap();
        // Zero polynomial branches: f = g = phi = psi = 0.
        let coeffs = CoefficientField::new(10.0, 0.1).unwrap();
        let zero = || (BivPoly::zero(), BivPoly::zero());
        let case = ManufacturedCase::piecewise_polynomial(coeffs, zero(), zero());
        let dm = build_dof_map(&mesh, 1, &case, 0).unwrap();
        let system = assemble(&mesh, &dm, &case, AssemblyOptions::new(1)).unwrap();
        assert!(system.rhs.amax() < 1e-14);
        let sol = crate::solve::solve(&system, crate::solve::SolverKind::Direct).unwrap();
        assert!(sol.free.amax() < 1e-12);
    }

    #[test]
    fn assembly_is_deterministic_across_thread_counts() {
        let mut mesh = gen_rect_mesh(4).unwrap();
        tag_interface(&mut mesh).unwrap();
        let case = example1(100.0, 0.01);
        let dm = build_dof_map(&mesh, 1, &case, 0).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| assemble(&mesh, &dm, &case, AssemblyOptions::new(1)).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.rhs.as_slice(), b.rhs.as_slice(), "bit-identical rhs");
        assert_eq!(a.matrix.val(), b.matrix.val(), "bit-identical values");
    }

    #[test]
    fn traction_term_reaches_interface_dofs() {
        // A case with a genuine traction jump must produce a different
        // RHS than the jump-free variant on interface DOFs.
        let mut mesh = gen_rect_mesh(4).unwrap();
        tag_interface(&mut mesh).unwrap();
        let coeffs = CoefficientField::new(10.0, 1.0).unwrap();
        let u_out = (BivPoly::from_terms(&[(1, 0, 1.0)]), BivPoly::from_terms(&[(0, 1, -1.0)]));
        let u_in = (BivPoly::from_terms(&[(0, 1, 2.0)]), BivPoly::from_terms(&[(1, 0, 1.5)]));
        let case = ManufacturedCase::piecewise_polynomial(coeffs, u_out, u_in);
        let dm = build_dof_map(&mesh, 1, &case, 0).unwrap();
        let mut rhs = DVector::zeros(dm.n_free);
        add_traction_term(&mesh, &dm, &case, 0, &mut rhs).unwrap();
        assert!(rhs.amax() > 1e-6, "traction moments present");
        // And they sit exactly on interface L blocks.
        let mut on_interface = vec![false; dm.n_free];
        for e in mesh.interface_edges() {
            if let EdgeBlock::Split { left, .. } = dm.edge_block[e] {
                for j in 0..dm.ns {
                    if let DofKind::Free(f) = dm.full_kind[left + j] {
                        on_interface[f] = true;
                    }
                }
            }
        }
        for i in 0..dm.n_free {
            if !on_interface[i] {
                assert_eq!(rhs[i], 0.0);
            }
        }
    }
}
