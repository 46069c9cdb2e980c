//! Element-local discrete weak operators.
//!
//! On a cell T a weak function is a pair {v_0, v_b}: interior
//! coefficients in [P_k(T)]^2 plus one S_k(e) block per edge. The weak
//! divergence, gradient and strain of degree r are the polynomial fields
//! defined by the moment conditions
//!
//!   (div_w v, w)_T   = -(v_0, grad w)_T   + <v_b, w n>_dT      for w in P_r,
//!   (grad_w v, tau)_T = -(v_0, div tau)_T + <v_b, tau n>_dT    for tau in [P_r]^{2x2},
//!   (eps_w v, q)_T   = -(v_0, div q)_T    + <v_b, q n>_dT      for symmetric q,
//!
//! where `div` acts row-wise on matrix fields. Each operator is realized
//! as a dense matrix from the local DOF layout to coefficients of the
//! target polynomial basis.

use nalgebra::{DMatrix, DVector};

use crate::basis::{dim_edge_space, EdgeBasis, ScalarBasis, TensorBasis, VectorBasis};
use crate::error::Error;
use crate::mesh::PolyMesh;
use crate::projection::{mass_edge, mass_scalar, mass_tensor, project_edge, project_vector};
use crate::quadrature::{quad_edge, quad_polygon, QuadratureRule};
use crate::Vec2;

/// Block layout of the local weak-function DOFs: interior first, then
/// one edge block per cell edge in loop order.
#[derive(Clone, Copy, Debug)]
pub struct LocalDofLayout {
    pub k: usize,
    pub n_interior: usize,
    pub n_edges: usize,
    pub ns: usize,
}

impl LocalDofLayout {
    pub fn new(k: usize, n_edges: usize) -> Self {
        LocalDofLayout {
            k,
            n_interior: (k + 1) * (k + 2),
            n_edges,
            ns: dim_edge_space(k),
        }
    }

    pub fn edge_offset(&self, j: usize) -> usize {
        debug_assert!(j < self.n_edges);
        self.n_interior + j * self.ns
    }

    pub fn total(&self) -> usize {
        self.n_interior + self.n_edges * self.ns
    }
}

/// Dense realizations of the three weak operators on one cell.
#[derive(Clone, Debug)]
pub struct WeakOperatorBlocks {
    pub r: usize,
    /// dim P_r x L: coefficients of div_w v.
    pub div: DMatrix<f64>,
    /// 4 dim P_r x L: coefficients of grad_w v (blocks 11, 12, 21, 22).
    pub grad: DMatrix<f64>,
    /// 3 dim P_r x L: coefficients of eps_w v (blocks 11, 22, od).
    pub strain: DMatrix<f64>,
}

/// Everything assembly needs on one cell: bases, quadrature rules, mass
/// matrices, trace moments and the weak operator blocks. Pure function
/// of immutable inputs; cells can be processed in parallel.
pub struct ElementContext {
    pub cell: usize,
    pub k: usize,
    pub r: usize,
    pub layout: LocalDofLayout,
    pub h: f64,
    pub interior: VectorBasis,
    pub scalar_r: ScalarBasis,
    pub sym_r: TensorBasis,
    pub full_r: TensorBasis,
    pub cell_rule: QuadratureRule,
    pub edge_ids: Vec<usize>,
    pub edge_bases: Vec<EdgeBasis>,
    pub edge_rules: Vec<QuadratureRule>,
    /// Outward unit normal of this cell on each edge.
    pub edge_normals: Vec<Vec2>,
    pub mass_r: DMatrix<f64>,
    pub mass_sym: DMatrix<f64>,
    pub mass_full: DMatrix<f64>,
    /// Per edge: Gram matrix of the edge basis.
    pub edge_mass: Vec<DMatrix<f64>>,
    /// Per edge: moments <chi_i, v_j>_e of the interior basis traces.
    pub edge_trace_moments: Vec<DMatrix<f64>>,
    pub blocks: WeakOperatorBlocks,
}

impl ElementContext {
    pub fn new(
        mesh: &PolyMesh,
        cell: usize,
        k: usize,
        r: usize,
        quad_boost: usize,
    ) -> Result<Self, Error> {
        assert!(k >= 1, "weak Galerkin requires k >= 1");
        let center = mesh.cell_centroid[cell];
        let h = mesh.cell_diameter[cell];
        let cell_deg = (2 * k + 3).max(2 * r).max(k + r) + quad_boost;
        let edge_deg = (2 * k + 3).max(k + r) + quad_boost;

        let loop_ = &mesh.cells[cell];
        let vertices: Vec<Vec2> = loop_.iter().map(|&v| mesh.vertices[v]).collect();
        let cell_rule = quad_polygon(&vertices, cell_deg)?;

        let interior = VectorBasis::new(k, center, h);
        let scalar_r = ScalarBasis::new(r, center, h);
        let sym_r = TensorBasis::symmetric(r, center, h);
        let full_r = TensorBasis::full(r, center, h);

        let edge_ids = mesh.cell_edges[cell].clone();
        let layout = LocalDofLayout::new(k, edge_ids.len());

        let mut edge_bases = Vec::with_capacity(edge_ids.len());
        let mut edge_rules = Vec::with_capacity(edge_ids.len());
        let mut edge_normals = Vec::with_capacity(edge_ids.len());
        for &e in &edge_ids {
            let (a, b) = mesh.edge_endpoints(e);
            edge_bases.push(EdgeBasis::new(k, a, b));
            edge_rules.push(quad_edge(a, b, edge_deg));
            edge_normals.push(mesh.outward_normal(e, cell));
        }

        let mass_r = mass_scalar(&scalar_r, &cell_rule);
        let mass_sym = mass_tensor(&sym_r, &cell_rule);
        let mass_full = mass_tensor(&full_r, &cell_rule);

        let mut edge_mass = Vec::with_capacity(edge_ids.len());
        let mut edge_trace_moments = Vec::with_capacity(edge_ids.len());
        for j in 0..edge_ids.len() {
            let eb = &edge_bases[j];
            let rule = &edge_rules[j];
            edge_mass.push(mass_edge(eb, rule));
            let mut moments = DMatrix::zeros(eb.dim(), layout.n_interior);
            for (q, &p) in rule.points.iter().enumerate() {
                let w = rule.weights[q];
                for i in 0..eb.dim() {
                    let chi = eb.eval(i, p);
                    for l in 0..layout.n_interior {
                        moments[(i, l)] += w * chi.dot(&interior.eval(l, p));
                    }
                }
            }
            edge_trace_moments.push(moments);
        }

        let blocks = build_blocks(
            &layout, r, &interior, &scalar_r, &sym_r, &full_r, &cell_rule, &edge_bases,
            &edge_rules, &edge_normals, &mass_r, &mass_sym, &mass_full,
        )?;

        Ok(ElementContext {
            cell,
            k,
            r,
            layout,
            h,
            interior,
            scalar_r,
            sym_r,
            full_r,
            cell_rule,
            edge_ids,
            edge_bases,
            edge_rules,
            edge_normals,
            mass_r,
            mass_sym,
            mass_full,
            edge_mass,
            edge_trace_moments,
            blocks,
        })
    }

    /// Q_b of the trace of an interior polynomial, per edge.
    pub fn qb_of_interior_trace(&self, v0: &DVector<f64>) -> Result<Vec<DVector<f64>>, Error> {
        let mut out = Vec::with_capacity(self.edge_ids.len());
        for j in 0..self.edge_ids.len() {
            let rhs = &self.edge_trace_moments[j] * v0;
            let chol = self.edge_mass[j].clone().cholesky().ok_or(Error::SingularMass)?;
            out.push(chol.solve(&rhs));
        }
        Ok(out)
    }

    /// Assemble a local DOF vector from interior coefficients and one
    /// coefficient block per edge.
    pub fn dof_vector(&self, v0: &DVector<f64>, vb: &[DVector<f64>]) -> DVector<f64> {
        assert_eq!(v0.len(), self.layout.n_interior);
        assert_eq!(vb.len(), self.layout.n_edges);
        let mut dofs = DVector::zeros(self.layout.total());
        dofs.rows_mut(0, self.layout.n_interior).copy_from(v0);
        for (j, block) in vb.iter().enumerate() {
            assert_eq!(block.len(), self.layout.ns);
            dofs.rows_mut(self.layout.edge_offset(j), self.layout.ns).copy_from(block);
        }
        dofs
    }

    /// Local DOFs of a smooth field: interior Q_0 projection plus Q_b of
    /// the field itself on every edge.
    pub fn project_weak(&self, f: impl Fn(Vec2) -> Vec2 + Copy) -> Result<DVector<f64>, Error> {
        let v0 = project_vector(f, &self.interior, &self.cell_rule)?;
        let mut vb = Vec::with_capacity(self.layout.n_edges);
        for j in 0..self.layout.n_edges {
            vb.push(project_edge(f, &self.edge_bases[j], &self.edge_rules[j])?);
        }
        Ok(self.dof_vector(&v0, &vb))
    }
}

#[allow(clippy::too_many_arguments)]
fn build_blocks(
    layout: &LocalDofLayout,
    r: usize,
    interior: &VectorBasis,
    scalar_r: &ScalarBasis,
    sym_r: &TensorBasis,
    full_r: &TensorBasis,
    cell_rule: &QuadratureRule,
    edge_bases: &[EdgeBasis],
    edge_rules: &[QuadratureRule],
    edge_normals: &[Vec2],
    mass_r: &DMatrix<f64>,
    mass_sym: &DMatrix<f64>,
    mass_full: &DMatrix<f64>,
) -> Result<WeakOperatorBlocks, Error> {
    let total = layout.total();
    let nr = scalar_r.dim();
    let mut rhs_div = DMatrix::zeros(nr, total);
    let mut rhs_grad = DMatrix::zeros(full_r.dim(), total);
    let mut rhs_strain = DMatrix::zeros(sym_r.dim(), total);

    // Interior contributions: -(v_0, grad w), -(v_0, div tau), -(v_0, div q).
    for (q, &p) in cell_rule.points.iter().enumerate() {
        let w = cell_rule.weights[q];
        for i in 0..layout.n_interior {
            let v = interior.eval(i, p);
            for j in 0..nr {
                rhs_div[(j, i)] -= w * v.dot(&scalar_r.grad(j, p));
            }
            for j in 0..full_r.dim() {
                rhs_grad[(j, i)] -= w * v.dot(&full_r.row_divergence(j, p));
            }
            for j in 0..sym_r.dim() {
                rhs_strain[(j, i)] -= w * v.dot(&sym_r.row_divergence(j, p));
            }
        }
    }

    // Edge contributions: +<v_b, w n>, +<v_b, tau n>, +<v_b, q n>.
    for (je, eb) in edge_bases.iter().enumerate() {
        let rule = &edge_rules[je];
        let n = edge_normals[je];
        let off = layout.edge_offset(je);
        for (q, &p) in rule.points.iter().enumerate() {
            let w = rule.weights[q];
            for l in 0..layout.ns {
                let chi = w * eb.eval(l, p);
                for j in 0..nr {
                    rhs_div[(j, off + l)] += scalar_r.eval(j, p) * chi.dot(&n);
                }
                for j in 0..full_r.dim() {
                    rhs_grad[(j, off + l)] += chi.dot(&full_r.dot_normal(j, p, n));
                }
                for j in 0..sym_r.dim() {
                    rhs_strain[(j, off + l)] += chi.dot(&sym_r.dot_normal(j, p, n));
                }
            }
        }
    }

    let chol_r = mass_r.clone().cholesky().ok_or(Error::SingularMass)?;
    let chol_sym = mass_sym.clone().cholesky().ok_or(Error::SingularMass)?;
    let chol_full = mass_full.clone().cholesky().ok_or(Error::SingularMass)?;
    Ok(WeakOperatorBlocks {
        r,
        div: chol_r.solve(&rhs_div),
        grad: chol_full.solve(&rhs_grad),
        strain: chol_sym.solve(&rhs_strain),
    })
}
