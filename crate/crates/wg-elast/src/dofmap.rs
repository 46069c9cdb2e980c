//! Global DOF management with interface doubling.
//!
//! The full layout stores every coefficient of a weak field: per-cell
//! interior blocks first, then one S_k(e) block per edge, except that
//! interface edges carry two blocks (the side in subdomain 1, called L,
//! then the inclusion side R). Each full DOF is free, an affine image of
//! a free DOF (R = L - Q_b phi on interface edges), or fixed (Q_b g on
//! the domain boundary). Test functions are single valued: on interface
//! edges both sides address the shared free block, on the boundary they
//! vanish — the discrete homogeneous space.

use nalgebra::DVector;

use crate::basis::{dim_edge_space, EdgeBasis};
use crate::cases::ManufacturedCase;
use crate::error::Error;
use crate::mesh::{EdgeKind, PolyMesh};
use crate::projection::project_edge;
use crate::quadrature::quad_edge;

/// Constraint status of one full-layout DOF.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DofKind {
    Free(usize),
    /// value = x[master] + shift (interface R side).
    Affine { master: usize, shift: f64 },
    Fixed(f64),
}

/// Full-layout offsets of an edge's coefficient block(s).
#[derive(Clone, Copy, Debug)]
pub enum EdgeBlock {
    Single { offset: usize },
    /// Interface edge: `outer_cell` (subdomain 1) uses the left block.
    Split { left: usize, right: usize, outer_cell: usize },
}

#[derive(Clone, Debug)]
pub struct DofMap {
    pub k: usize,
    /// Interior block size 2 dim P_k.
    pub ni: usize,
    /// Edge block size dim S_k.
    pub ns: usize,
    pub n_full: usize,
    pub n_free: usize,
    pub cell_interior_offset: Vec<usize>,
    pub edge_block: Vec<EdgeBlock>,
    pub full_kind: Vec<DofKind>,
    pub free_to_full: Vec<usize>,
}

/// Solution (or projection) coefficients over the full DOF layout.
#[derive(Clone, Debug)]
pub struct WGField {
    pub k: usize,
    pub full: DVector<f64>,
}

/// Build the global numbering and the constraint data for a tagged mesh.
/// Boundary blocks hold Q_b of the Dirichlet datum; interface R blocks
/// are affine images of the L blocks shifted by -Q_b phi.
pub fn build_dof_map(
    mesh: &PolyMesh,
    k: usize,
    case: &ManufacturedCase,
    quad_boost: usize,
) -> Result<DofMap, Error> {
    assert!(k >= 1);
    let ni = (k + 1) * (k + 2);
    let ns = dim_edge_space(k);
    let edge_deg = 2 * k + 3 + quad_boost;

    let mut cell_interior_offset = Vec::with_capacity(mesh.n_cells());
    let mut offset = 0;
    for _ in 0..mesh.n_cells() {
        cell_interior_offset.push(offset);
        offset += ni;
    }

    let mut edge_block = Vec::with_capacity(mesh.n_edges());
    for e in 0..mesh.n_edges() {
        match mesh.edge_kind[e] {
            EdgeKind::Interface(_) => {
                let edge = &mesh.edges[e];
                let right = edge.right.ok_or_else(|| {
                    Error::MisalignedInterface(format!("interface edge {e} on the domain boundary"))
                })?;
                let outer_cell = if mesh.cell_subdomain[edge.left] == 1 { edge.left } else { right };
                edge_block.push(EdgeBlock::Split { left: offset, right: offset + ns, outer_cell });
                offset += 2 * ns;
            }
            _ => {
                edge_block.push(EdgeBlock::Single { offset });
                offset += ns;
            }
        }
    }
    let n_full = offset;

    let mut full_kind = vec![DofKind::Fixed(0.0); n_full];
    let mut free_to_full = Vec::new();
    let mut next_free = 0usize;
    let mut make_free = |range: std::ops::Range<usize>,
                         full_kind: &mut Vec<DofKind>,
                         free_to_full: &mut Vec<usize>| {
        for i in range {
            full_kind[i] = DofKind::Free(next_free);
            free_to_full.push(i);
            next_free += 1;
        }
    };

    for c in 0..mesh.n_cells() {
        let off = cell_interior_offset[c];
        make_free(off..off + ni, &mut full_kind, &mut free_to_full);
    }
    for e in 0..mesh.n_edges() {
        match (mesh.edge_kind[e], edge_block[e]) {
            (EdgeKind::Interior, EdgeBlock::Single { offset }) => {
                make_free(offset..offset + ns, &mut full_kind, &mut free_to_full);
            }
            (EdgeKind::Boundary, EdgeBlock::Single { offset }) => {
                let (a, b) = mesh.edge_endpoints(e);
                let basis = EdgeBasis::new(k, a, b);
                let rule = quad_edge(a, b, edge_deg);
                let qbg = project_edge(|p| case.dirichlet(p), &basis, &rule)?;
                for j in 0..ns {
                    full_kind[offset + j] = DofKind::Fixed(qbg[j]);
                }
            }
            (EdgeKind::Interface(_), EdgeBlock::Split { left, right, .. }) => {
                make_free(left..left + ns, &mut full_kind, &mut free_to_full);
                let (a, b) = mesh.edge_endpoints(e);
                let basis = EdgeBasis::new(k, a, b);
                let rule = quad_edge(a, b, edge_deg);
                let qbphi = project_edge(|p| case.jump_displacement(p), &basis, &rule)?;
                for j in 0..ns {
                    let master = match full_kind[left + j] {
                        DofKind::Free(f) => f,
                        _ => unreachable!("left interface block is free"),
                    };
                    full_kind[right + j] = DofKind::Affine { master, shift: -qbphi[j] };
                }
            }
            _ => unreachable!("edge kind / block mismatch"),
        }
    }

    Ok(DofMap {
        k,
        ni,
        ns,
        n_full,
        n_free: next_free,
        cell_interior_offset,
        edge_block,
        full_kind,
        free_to_full,
    })
}

impl DofMap {
    /// Full-layout index of each local DOF of a cell (interior block,
    /// then edge blocks in cell-loop order). On interface edges the cell
    /// resolves to its own side's block.
    pub fn cell_to_full(&self, mesh: &PolyMesh, c: usize) -> Vec<usize> {
        let loop_edges = &mesh.cell_edges[c];
        let mut map = Vec::with_capacity(self.ni + loop_edges.len() * self.ns);
        let off = self.cell_interior_offset[c];
        map.extend(off..off + self.ni);
        for &e in loop_edges {
            let block = match self.edge_block[e] {
                EdgeBlock::Single { offset } => offset,
                EdgeBlock::Split { left, right, outer_cell } => {
                    if c == outer_cell {
                        left
                    } else {
                        right
                    }
                }
            };
            map.extend(block..block + self.ns);
        }
        map
    }

    /// Expand a free-DOF vector to the full layout, applying affine
    /// interface shifts and fixed boundary values.
    pub fn reconstruct(&self, free: &DVector<f64>) -> WGField {
        assert_eq!(free.len(), self.n_free);
        let mut full = DVector::zeros(self.n_full);
        for (i, kind) in self.full_kind.iter().enumerate() {
            full[i] = match *kind {
                DofKind::Free(f) => free[f],
                DofKind::Affine { master, shift } => free[master] + shift,
                DofKind::Fixed(v) => v,
            };
        }
        WGField { k: self.k, full }
    }

    /// Expand a homogeneous test-space vector: affine shifts and fixed
    /// values are replaced by zero, interface sides share the free value.
    pub fn reconstruct_test(&self, free: &DVector<f64>) -> WGField {
        assert_eq!(free.len(), self.n_free);
        let mut full = DVector::zeros(self.n_full);
        for (i, kind) in self.full_kind.iter().enumerate() {
            full[i] = match *kind {
                DofKind::Free(f) => free[f],
                DofKind::Affine { master, .. } => free[master],
                DofKind::Fixed(_) => 0.0,
            };
        }
        WGField { k: self.k, full }
    }

    /// Restrict a full vector to the free unknowns.
    pub fn restrict(&self, field: &WGField) -> DVector<f64> {
        let mut free = DVector::zeros(self.n_free);
        for (f, &i) in self.free_to_full.iter().enumerate() {
            free[f] = field.full[i];
        }
        free
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::CoefficientField;
    use crate::mesh::{gen_polygon_mesh, gen_rect_mesh, tag_interface};

    fn example1() -> ManufacturedCase {
        ManufacturedCase::example1(CoefficientField::new(100.0, 0.01).unwrap())
    }

    /// Brute-force free count: every interior DOF, one S_k block per
    /// interior edge, one per interface edge.
    fn expected_free(mesh: &PolyMesh, k: usize) -> usize {
        let ni = (k + 1) * (k + 2);
        let ns = dim_edge_space(k);
        let mut count = mesh.n_cells() * ni;
        for e in 0..mesh.n_edges() {
            match mesh.edge_kind[e] {
                EdgeKind::Interior | EdgeKind::Interface(_) => count += ns,
                EdgeKind::Boundary => {}
            }
        }
        count
    }

    #[test]
    fn rect_n4_k1_counts() {
        let mut mesh = gen_rect_mesh(4).unwrap();
        tag_interface(&mut mesh).unwrap();
        let dm = build_dof_map(&mesh, 1, &example1(), 0).unwrap();
        // 16 cells x 6 interior + 3 x (16 interior + 8 interface edges).
        assert_eq!(dm.n_free, 168);
        assert_eq!(dm.n_free, expected_free(&mesh, 1));
        // Full layout additionally holds 16 boundary blocks and the 8
        // doubled interface blocks.
        assert_eq!(dm.n_full, 168 + 16 * 3 + 8 * 3);
    }

    #[test]
    fn single_cell_all_edges_fixed() {
        let mut mesh = gen_rect_mesh(1).unwrap();
        tag_interface(&mut mesh).unwrap();
        let dm = build_dof_map(&mesh, 1, &example1(), 0).unwrap();
        assert_eq!(dm.n_free, 6);
        let fixed = dm
            .full_kind
            .iter()
            .filter(|k| matches!(k, DofKind::Fixed(_)))
            .count();
        assert_eq!(fixed, 4 * 3);
    }

    #[test]
    fn octagon_n4_k2_counts() {
        let mut mesh = gen_polygon_mesh(4).unwrap();
        tag_interface(&mut mesh).unwrap();
        let dm = build_dof_map(&mesh, 2, &example1(), 0).unwrap();
        assert_eq!(dm.n_free, expected_free(&mesh, 2));
        // 16 cells x 12 interior; 80 edges = 32 boundary + 16 interface
        // + 32 interior; free edge blocks 4 x (32 + 16).
        assert_eq!(dm.n_free, 16 * 12 + 4 * 48);
    }

    #[test]
    fn reconstruction_satisfies_interface_jump() {
        let mut mesh = gen_rect_mesh(8).unwrap();
        tag_interface(&mut mesh).unwrap();
        let case = example1();
        let k = 1;
        let dm = build_dof_map(&mesh, k, &case, 0).unwrap();
        let free = DVector::from_fn(dm.n_free, |i, _| (i as f64 * 0.37).sin());
        let field = dm.reconstruct(&free);
        for e in 0..mesh.n_edges() {
            if let (EdgeKind::Interface(_), EdgeBlock::Split { left, right, .. }) =
                (mesh.edge_kind[e], dm.edge_block[e])
            {
                let (a, b) = mesh.edge_endpoints(e);
                let basis = EdgeBasis::new(k, a, b);
                let rule = quad_edge(a, b, 2 * k + 3);
                let qbphi = project_edge(|p| case.jump_displacement(p), &basis, &rule).unwrap();
                for j in 0..dm.ns {
                    let jump = field.full[left + j] - field.full[right + j];
                    assert!((jump - qbphi[j]).abs() < 1e-12);
                }
            }
        }
        // Round trip through restrict.
        let back = dm.restrict(&field);
        assert!((&back - &free).amax() < 1e-15);
    }

    #[test]
    fn cell_maps_cover_every_full_dof() {
        let mut mesh = gen_polygon_mesh(4).unwrap();
        tag_interface(&mut mesh).unwrap();
        let dm = build_dof_map(&mesh, 1, &example1(), 0).unwrap();
        let mut touched = vec![false; dm.n_full];
        for c in 0..mesh.n_cells() {
            for &g in &dm.cell_to_full(&mesh, c) {
                touched[g] = true;
            }
        }
        assert!(touched.iter().all(|&t| t), "every full DOF belongs to some cell");
    }
}
