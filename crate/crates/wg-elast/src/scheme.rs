//! Discretization parameters shared by the DOF map, assembly and error
//! evaluation.
//!
//! The stabilized scheme uses the edge trace space S_k(e) (rigid-motion
//! traces for k = 1, [P_{k-1}(e)]^2 otherwise) and weak operators of
//! degree r = k-1. Dropping the stabilizer requires a richer pairing to
//! stay solvable: the superconvergent configuration raises the edge
//! space to [P_k(e)]^2 and the weak degree to r = k+1.

use crate::basis::EdgeSpace;

#[derive(Clone, Copy, Debug)]
pub struct Scheme {
    /// Interior polynomial degree (k >= 1).
    pub k: usize,
    /// Weak-operator degree.
    pub r: usize,
    pub edge_space: EdgeSpace,
    pub stabilizer: bool,
    /// Added to every quadrature exactness degree.
    pub quad_boost: usize,
}

impl Scheme {
    /// The scheme exactly as formulated: S_k(e) edges, r = k-1,
    /// stabilizer on.
    pub fn stabilized(k: usize) -> Self {
        assert!(k >= 1);
        Scheme { k, r: k - 1, edge_space: EdgeSpace::Standard, stabilizer: true, quad_boost: 0 }
    }

    /// Stabilizer-free superconvergent configuration: [P_k(e)]^2 edges,
    /// r = k+1.
    pub fn stabilizer_free(k: usize) -> Self {
        assert!(k >= 1);
        Scheme { k, r: k + 1, edge_space: EdgeSpace::Poly(k), stabilizer: false, quad_boost: 0 }
    }

    pub fn with_r(mut self, r: usize) -> Self {
        self.r = r;
        self
    }

    pub fn with_edge_space(mut self, edge_space: EdgeSpace) -> Self {
        self.edge_space = edge_space;
        self
    }

    pub fn with_quad_boost(mut self, boost: usize) -> Self {
        self.quad_boost = boost;
        self
    }

    /// Interior block size 2 dim P_k.
    pub fn ni(&self) -> usize {
        (self.k + 1) * (self.k + 2)
    }

    /// Edge block size.
    pub fn ns(&self) -> usize {
        crate::basis::dim_edge_space(self.k, self.edge_space)
    }

    fn edge_poly_degree(&self) -> usize {
        match self.edge_space {
            EdgeSpace::Standard => {
                if self.k == 1 {
                    1
                } else {
                    self.k - 1
                }
            }
            EdgeSpace::Poly(m) => m,
        }
    }

    /// Exactness degree for cell integrals: 2k+3 covers mass matrices,
    /// stiffness products and load moments with margin; raised when the
    /// weak degree demands it.
    pub fn cell_quad_degree(&self) -> usize {
        (2 * self.k + 3).max(2 * self.r).max(self.k + self.r) + self.quad_boost
    }

    /// Exactness degree for edge integrals.
    pub fn edge_quad_degree(&self) -> usize {
        (2 * self.k + 3)
            .max(self.k + self.r)
            .max(self.edge_poly_degree() + self.r)
            .max(2 * self.edge_poly_degree())
            + self.quad_boost
    }

    /// Exactness degree for error-norm integrals of non-polynomial
    /// exact solutions.
    pub fn error_quad_degree(&self) -> usize {
        2 * self.k + 8 + self.quad_boost
    }
}
