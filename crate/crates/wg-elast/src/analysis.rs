//! Error norms, convergence rates and the self-convergence proxy for the
//! case without an exact solution.
//!
//! The energy semi-norm |||v||| = (a(v,v) + s(v,v))^{1/2} always includes
//! the stabilizer term, also when the solve itself ran stabilizer-free;
//! for the exactness configurations it vanishes at reporting precision
//! either way.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::assembly::{bilinear_energy, local_stabilizer, local_stiffness};
use crate::basis::{EdgeBasis, VectorBasis};
use crate::cases::ManufacturedCase;
use crate::dofmap::{DofMap, EdgeBlock, WGField};
use crate::error::Error;
use crate::mesh::{EdgeKind, PolyMesh};
use crate::projection::{project_edge, project_vector};
use crate::quadrature::{quad_edge, quad_polygon};
use crate::weak_ops::ElementContext;
use crate::Vec2;

fn error_quad_degree(k: usize, quad_boost: usize) -> usize {
    2 * k + 8 + quad_boost
}

/// Q_h u as a full DOF vector: per-cell Q_0 projections plus Q_b of the
/// side-consistent exact traces on every edge (interface edges take the
/// subdomain-1 branch on the L block and the inclusion branch on R).
pub fn project_exact_field(
    mesh: &PolyMesh,
    dofmap: &DofMap,
    case: &ManufacturedCase,
    quad_boost: usize,
) -> Result<WGField, Error> {
    if !case.has_exact() {
        return Err(Error::NoExactSolution);
    }
    let k = dofmap.k;
    let deg = error_quad_degree(k, quad_boost);
    let mut full = DVector::zeros(dofmap.n_full);

    let interiors: Vec<Result<DVector<f64>, Error>> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let vertices: Vec<Vec2> = mesh.cells[c].iter().map(|&v| mesh.vertices[v]).collect();
            let rule = quad_polygon(&vertices, deg)?;
            let basis = VectorBasis::new(k, mesh.cell_centroid[c], mesh.cell_diameter[c]);
            let sub = mesh.cell_subdomain[c];
            project_vector(|p| case.displacement(p, sub).expect("exact case"), &basis, &rule)
        })
        .collect();
    for (c, coeffs) in interiors.into_iter().enumerate() {
        let coeffs = coeffs?;
        let off = dofmap.cell_interior_offset[c];
        full.rows_mut(off, dofmap.ni).copy_from(&coeffs);
    }

    for e in 0..mesh.n_edges() {
        let (a, b) = mesh.edge_endpoints(e);
        let basis = EdgeBasis::new(k, a, b);
        let rule = quad_edge(a, b, deg);
        match (mesh.edge_kind[e], dofmap.edge_block[e]) {
            (EdgeKind::Interface(_), EdgeBlock::Split { left, right, .. }) => {
                let ql = project_edge(|p| case.displacement(p, 1).expect("exact"), &basis, &rule)?;
                let qr = project_edge(|p| case.displacement(p, 2).expect("exact"), &basis, &rule)?;
                full.rows_mut(left, dofmap.ns).copy_from(&ql);
                full.rows_mut(right, dofmap.ns).copy_from(&qr);
            }
            (_, EdgeBlock::Single { offset }) => {
                // Both incident cells share a subdomain; boundary edges
                // lie in subdomain 1.
                let sub = mesh.cell_subdomain[mesh.edges[e].left];
                let q = project_edge(|p| case.displacement(p, sub).expect("exact"), &basis, &rule)?;
                full.rows_mut(offset, dofmap.ns).copy_from(&q);
            }
            _ => unreachable!("edge kind / block mismatch"),
        }
    }
    Ok(WGField { k, full })
}

/// ||Q_0 u - u_0||_0: cellwise L2 distance between the interior field
/// and the projected exact solution, by high-order quadrature.
pub fn error_l2(
    mesh: &PolyMesh,
    dofmap: &DofMap,
    case: &ManufacturedCase,
    u_h: &WGField,
    quad_boost: usize,
) -> Result<f64, Error> {
    if !case.has_exact() {
        return Err(Error::NoExactSolution);
    }
    let k = dofmap.k;
    let deg = error_quad_degree(k, quad_boost);
    let terms: Vec<Result<f64, Error>> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let vertices: Vec<Vec2> = mesh.cells[c].iter().map(|&v| mesh.vertices[v]).collect();
            let rule = quad_polygon(&vertices, deg)?;
            let basis = VectorBasis::new(k, mesh.cell_centroid[c], mesh.cell_diameter[c]);
            let sub = mesh.cell_subdomain[c];
            let q0 =
                project_vector(|p| case.displacement(p, sub).expect("exact"), &basis, &rule)?;
            let off = dofmap.cell_interior_offset[c];
            let diff = DVector::from_fn(dofmap.ni, |i, _| q0[i] - u_h.full[off + i]);
            Ok(rule.integrate(|p| basis.combine(diff.as_slice(), p).norm_squared()))
        })
        .collect();
    let mut total = 0.0;
    for t in terms {
        total += t?;
    }
    Ok(total.sqrt())
}

/// |||Q_h u - u_h|||: contract the difference against the assembled
/// local Gram matrices (a + s), at the run's weak degree r.
pub fn error_energy(
    mesh: &PolyMesh,
    dofmap: &DofMap,
    case: &ManufacturedCase,
    u_h: &WGField,
    r: usize,
    quad_boost: usize,
) -> Result<f64, Error> {
    let q_h_u = project_exact_field(mesh, dofmap, case, quad_boost)?;
    let d = &q_h_u.full - &u_h.full;
    let value = bilinear_energy(mesh, dofmap, case, r, quad_boost, &d, &d)?;
    Ok(value.max(0.0).sqrt())
}

/// Independent recomputation of the energy norm: reconstruct the weak
/// strain/divergence fields of the difference and integrate them
/// pointwise, plus the stabilizer defect edge by edge. Cross-checks the
/// Gram-matrix path.
pub fn error_energy_recompute(
    mesh: &PolyMesh,
    dofmap: &DofMap,
    case: &ManufacturedCase,
    u_h: &WGField,
    r: usize,
    quad_boost: usize,
) -> Result<f64, Error> {
    let q_h_u = project_exact_field(mesh, dofmap, case, quad_boost)?;
    let d_full = &q_h_u.full - &u_h.full;
    let k = dofmap.k;
    let terms: Vec<Result<f64, Error>> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let ctx = ElementContext::new(mesh, c, k, r, quad_boost)?;
            let sub = mesh.cell_subdomain[c];
            let mu = case.coeffs.mu(sub);
            let lambda = case.coeffs.lambda(sub);
            let ids = dofmap.cell_to_full(mesh, c);
            let d = DVector::from_fn(ids.len(), |i, _| d_full[ids[i]]);
            let strain = &ctx.blocks.strain * &d;
            let div = &ctx.blocks.div * &d;
            let mut cell_term = ctx.cell_rule.integrate(|p| {
                let s = ctx.sym_r.combine(strain.as_slice(), p);
                let dv = ctx.scalar_r.combine(div.as_slice(), p);
                2.0 * mu * (s.transpose() * s).trace() + lambda * dv * dv
            });
            // Stabilizer defect: h^{-1} |Q_b d_0 - d_b|^2 per edge.
            let d0 = DVector::from_fn(ctx.layout.n_interior, |i, _| d[i]);
            let qb = ctx.qb_of_interior_trace(&d0)?;
            for (j, rule) in ctx.edge_rules.iter().enumerate() {
                let off = ctx.layout.edge_offset(j);
                let db = DVector::from_fn(ctx.layout.ns, |l, _| d[off + l]);
                cell_term += rule.integrate(|p| {
                    let defect = ctx.edge_bases[j].combine(qb[j].as_slice(), p)
                        - ctx.edge_bases[j].combine(db.as_slice(), p);
                    defect.norm_squared()
                }) / ctx.h;
            }
            Ok(cell_term)
        })
        .collect();
    let mut total = 0.0;
    for t in terms {
        total += t?;
    }
    Ok(total.sqrt())
}

/// log2 ratios of consecutive errors under mesh halving. Nonpositive
/// entries yield no rate.
pub fn convergence_rates(errors: &[f64]) -> Vec<Option<f64>> {
    errors
        .windows(2)
        .map(|w| {
            if w[0] > 0.0 && w[1] > 0.0 {
                Some((w[0] / w[1]).log2())
            } else {
                None
            }
        })
        .collect()
}

/// Energy-type norm of the difference of two interior fields on nested
/// grid meshes, evaluated on the fine mesh:
/// (sum_T 2 mu |eps(d)|^2 + lambda (div d)^2)^{1/2} with
/// d = u_0^fine - u_0^coarse. Self-convergence proxy when no exact
/// solution exists.
pub fn successive_difference(
    coarse_mesh: &PolyMesh,
    coarse_dofmap: &DofMap,
    coarse: &WGField,
    fine_mesh: &PolyMesh,
    fine_dofmap: &DofMap,
    fine: &WGField,
    case: &ManufacturedCase,
    quad_boost: usize,
) -> Result<f64, Error> {
    if coarse_dofmap.k != fine_dofmap.k {
        return Err(Error::IncompatibleMeshes("mismatched polynomial degree k".into()));
    }
    let (Some(nc), Some(nf)) = (coarse_mesh.cells_per_side, fine_mesh.cells_per_side) else {
        return Err(Error::IncompatibleMeshes("meshes are not grid families".into()));
    };
    if nf != 2 * nc {
        return Err(Error::IncompatibleMeshes(format!(
            "fine mesh ({nf} cells/side) is not one refinement of the coarse ({nc})"
        )));
    }
    let k = fine_dofmap.k;
    let deg = error_quad_degree(k, quad_boost);
    let terms: Vec<Result<f64, Error>> = (0..fine_mesh.n_cells())
        .into_par_iter()
        .map(|cf| {
            // Grid cells are emitted row-major, so the parent index is
            // recovered from integer coordinates.
            let (i, j) = (cf % nf, cf / nf);
            let cc = (j / 2) * nc + i / 2;
            let fine_basis =
                VectorBasis::new(k, fine_mesh.cell_centroid[cf], fine_mesh.cell_diameter[cf]);
            let coarse_basis = VectorBasis::new(
                k,
                coarse_mesh.cell_centroid[cc],
                coarse_mesh.cell_diameter[cc],
            );
            let fine_off = fine_dofmap.cell_interior_offset[cf];
            let coarse_off = coarse_dofmap.cell_interior_offset[cc];
            let df = fine.full.as_slice();
            let dc = coarse.full.as_slice();
            let fine_coeffs = &df[fine_off..fine_off + fine_dofmap.ni];
            let coarse_coeffs = &dc[coarse_off..coarse_off + coarse_dofmap.ni];
            let vertices: Vec<Vec2> =
                fine_mesh.cells[cf].iter().map(|&v| fine_mesh.vertices[v]).collect();
            let rule = quad_polygon(&vertices, deg)?;
            let sub = fine_mesh.cell_subdomain[cf];
            let mu = case.coeffs.mu(sub);
            let lambda = case.coeffs.lambda(sub);
            Ok(rule.integrate(|p| {
                let g = fine_basis.combine_gradient(fine_coeffs, p)
                    - coarse_basis.combine_gradient(coarse_coeffs, p);
                let eps = 0.5 * (g + g.transpose());
                2.0 * mu * (eps.transpose() * eps).trace() + lambda * g.trace() * g.trace()
            }))
        })
        .collect();
    let mut total = 0.0;
    for t in terms {
        total += t?;
    }
    Ok(total.sqrt())
}

/// Mean interior displacement over the domain.
pub fn mean_displacement(
    mesh: &PolyMesh,
    dofmap: &DofMap,
    u_h: &WGField,
) -> Result<Vec2, Error> {
    let k = dofmap.k;
    let mut total = Vec2::zeros();
    let mut area = 0.0;
    for c in 0..mesh.n_cells() {
        let vertices: Vec<Vec2> = mesh.cells[c].iter().map(|&v| mesh.vertices[v]).collect();
        let rule = quad_polygon(&vertices, k + 2)?;
        let basis = VectorBasis::new(k, mesh.cell_centroid[c], mesh.cell_diameter[c]);
        let off = dofmap.cell_interior_offset[c];
        let coeffs = &u_h.full.as_slice()[off..off + dofmap.ni];
        for (q, &p) in rule.points.iter().enumerate() {
            total += rule.weights[q] * basis.combine(coeffs, p);
        }
        area += mesh.cell_area[c];
    }
    Ok(total / area)
}
