//! Coefficient fields and manufactured test cases: exact displacements,
//! stresses, body forces, boundary data and interface jump data.
//!
//! The Lame field is piecewise constant: mu = mu0/2 inside the square
//! inclusion and 1/2 outside, lambda = lambda0 * mu. The two tabulated
//! smooth cases share the structure u = w / mu with a globally smooth w
//! vanishing on the inclusion boundary, so the stress
//! sigma = 2 eps(w) + lambda0 (div w) I is continuous while the strain
//! jumps with 1/mu. Jump data are nevertheless always evaluated from the
//! two-sided traces, which keeps the interface machinery fully general;
//! a piecewise-polynomial constructor with genuinely different branches
//! exercises nonzero jumps.

use crate::error::Error;
use crate::mesh::{INCLUSION_MAX, INCLUSION_MIN};
use crate::{Mat2, Vec2};

/// Piecewise-constant Lame coefficients.
#[derive(Clone, Copy, Debug)]
pub struct CoefficientField {
    pub mu0: f64,
    pub lambda0: f64,
}

impl CoefficientField {
    pub fn new(mu0: f64, lambda0: f64) -> Result<Self, Error> {
        if !(mu0 > 0.0 && lambda0 > 0.0) {
            return Err(Error::InvalidParam("mu0 and lambda0 must be positive".into()));
        }
        Ok(CoefficientField { mu0, lambda0 })
    }

    /// Shear modulus on a subdomain (1 = outside, 2 = inclusion).
    pub fn mu(&self, subdomain: u8) -> f64 {
        if subdomain == 2 {
            self.mu0 / 2.0
        } else {
            0.5
        }
    }

    pub fn lambda(&self, subdomain: u8) -> f64 {
        self.lambda0 * self.mu(subdomain)
    }

    /// Subdomain containing a point not on the interface.
    pub fn subdomain_of(p: Vec2) -> u8 {
        if p.x > INCLUSION_MIN && p.x < INCLUSION_MAX && p.y > INCLUSION_MIN && p.y < INCLUSION_MAX
        {
            2
        } else {
            1
        }
    }
}

/// Sparse bivariate polynomial: sum of c * x^a * y^b terms. Small
/// symbolic helper for manufactured polynomial solutions.
#[derive(Clone, Debug, Default)]
pub struct BivPoly {
    terms: Vec<(u32, u32, f64)>,
}

impl BivPoly {
    pub fn zero() -> Self {
        BivPoly { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        BivPoly::from_terms(&[(0, 0, c)])
    }

    pub fn from_terms(terms: &[(u32, u32, f64)]) -> Self {
        let mut p = BivPoly { terms: terms.to_vec() };
        p.compress();
        p
    }

    fn compress(&mut self) {
        self.terms.sort_by_key(|&(a, b, _)| (a, b));
        let mut out: Vec<(u32, u32, f64)> = Vec::with_capacity(self.terms.len());
        for &(a, b, c) in &self.terms {
            match out.last_mut() {
                Some(last) if last.0 == a && last.1 == b => last.2 += c,
                _ => out.push((a, b, c)),
            }
        }
        out.retain(|&(_, _, c)| c != 0.0);
        self.terms = out;
    }

    pub fn eval(&self, p: Vec2) -> f64 {
        self.terms
            .iter()
            .map(|&(a, b, c)| c * p.x.powi(a as i32) * p.y.powi(b as i32))
            .sum()
    }

    pub fn add(&self, other: &BivPoly) -> BivPoly {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        let mut p = BivPoly { terms };
        p.compress();
        p
    }

    pub fn scale(&self, s: f64) -> BivPoly {
        BivPoly { terms: self.terms.iter().map(|&(a, b, c)| (a, b, c * s)).collect() }
    }

    pub fn mul(&self, other: &BivPoly) -> BivPoly {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for &(a1, b1, c1) in &self.terms {
            for &(a2, b2, c2) in &other.terms {
                terms.push((a1 + a2, b1 + b2, c1 * c2));
            }
        }
        let mut p = BivPoly { terms };
        p.compress();
        p
    }

    pub fn dx(&self) -> BivPoly {
        BivPoly {
            terms: self
                .terms
                .iter()
                .filter(|&&(a, _, _)| a > 0)
                .map(|&(a, b, c)| (a - 1, b, c * a as f64))
                .collect(),
        }
    }

    pub fn dy(&self) -> BivPoly {
        BivPoly {
            terms: self
                .terms
                .iter()
                .filter(|&&(_, b, _)| b > 0)
                .map(|&(a, b, c)| (a, b - 1, c * b as f64))
                .collect(),
        }
    }
}

/// A polynomial vector field with cached first and second derivatives.
#[derive(Clone, Debug)]
struct PolyField {
    u: [BivPoly; 2],
    /// du[i][j] = d u_i / d x_j.
    du: [[BivPoly; 2]; 2],
    /// d2u[i] = [u_i_xx, u_i_xy, u_i_yy].
    d2u: [[BivPoly; 3]; 2],
}

impl PolyField {
    fn new(u1: BivPoly, u2: BivPoly) -> Self {
        let du = [[u1.dx(), u1.dy()], [u2.dx(), u2.dy()]];
        let d2u = [
            [du[0][0].dx(), du[0][0].dy(), du[0][1].dy()],
            [du[1][0].dx(), du[1][0].dy(), du[1][1].dy()],
        ];
        PolyField { u: [u1, u2], du, d2u }
    }

    fn value(&self, p: Vec2) -> Vec2 {
        Vec2::new(self.u[0].eval(p), self.u[1].eval(p))
    }

    fn gradient(&self, p: Vec2) -> Mat2 {
        Mat2::new(
            self.du[0][0].eval(p),
            self.du[0][1].eval(p),
            self.du[1][0].eval(p),
            self.du[1][1].eval(p),
        )
    }

    /// (u1_xx, u1_xy, u1_yy, u2_xx, u2_xy, u2_yy) at a point.
    fn second(&self, p: Vec2) -> [f64; 6] {
        [
            self.d2u[0][0].eval(p),
            self.d2u[0][1].eval(p),
            self.d2u[0][2].eval(p),
            self.d2u[1][0].eval(p),
            self.d2u[1][1].eval(p),
            self.d2u[1][2].eval(p),
        ]
    }
}

/// The trigonometric profile of the first tabulated case:
/// s = sin(pi x) cos(2 pi x) sin(pi y) cos(2 pi y), with the closed-form
/// partials needed for the analytic body force.
#[derive(Clone, Copy, Debug)]
struct TrigProfile;

impl TrigProfile {
    /// (g, g', g'') for g(t) = sin(pi t) cos(2 pi t).
    fn factor(t: f64) -> (f64, f64, f64) {
        use std::f64::consts::PI;
        let (s1, c1) = (PI * t).sin_cos();
        let (s2, c2) = (2.0 * PI * t).sin_cos();
        let g = s1 * c2;
        let dg = PI * (c1 * c2 - 2.0 * s1 * s2);
        let d2g = -PI * PI * (5.0 * s1 * c2 + 4.0 * c1 * s2);
        (g, dg, d2g)
    }

    fn value(p: Vec2) -> f64 {
        Self::factor(p.x).0 * Self::factor(p.y).0
    }

    fn grad(p: Vec2) -> Vec2 {
        let (gx, dgx, _) = Self::factor(p.x);
        let (gy, dgy, _) = Self::factor(p.y);
        Vec2::new(dgx * gy, gx * dgy)
    }

    /// (s_xx, s_xy, s_yy).
    fn second(p: Vec2) -> (f64, f64, f64) {
        let (gx, dgx, d2gx) = Self::factor(p.x);
        let (gy, dgy, d2gy) = Self::factor(p.y);
        (d2gx * gy, dgx * dgy, gx * d2gy)
    }
}

#[derive(Clone, Debug)]
enum CaseKind {
    /// u = w / mu with w = (-s, s), s the trigonometric profile.
    MuScaledTrig,
    /// u = w / mu with a polynomial w.
    MuScaledPoly(PolyField),
    /// Independent polynomial branches per subdomain (index 0: outside).
    PerSubdomainPoly([PolyField; 2]),
    /// No exact solution; a constant body force drives the problem.
    ConstantLoad(Vec2),
}

/// A manufactured problem instance: exact solution evaluators (when
/// available), body force, Dirichlet datum and interface jump data.
#[derive(Clone, Debug)]
pub struct ManufacturedCase {
    pub coeffs: CoefficientField,
    kind: CaseKind,
}

impl ManufacturedCase {
    /// Trigonometric case: u = mu^{-1} (-s, s). The load is derived
    /// analytically from the exact solution.
    pub fn example1(coeffs: CoefficientField) -> Self {
        ManufacturedCase { coeffs, kind: CaseKind::MuScaledTrig }
    }

    /// Piecewise-quintic case: u = mu^{-1} (-y, x) (4y-1)(4y-3)(4x-1)(4x-3).
    pub fn example2(coeffs: CoefficientField) -> Self {
        let a = BivPoly::from_terms(&[(2, 0, 16.0), (1, 0, -16.0), (0, 0, 3.0)]);
        let b = BivPoly::from_terms(&[(0, 2, 16.0), (0, 1, -16.0), (0, 0, 3.0)]);
        let q = a.mul(&b);
        let x = BivPoly::from_terms(&[(1, 0, 1.0)]);
        let y = BivPoly::from_terms(&[(0, 1, 1.0)]);
        let w1 = y.mul(&q).scale(-1.0);
        let w2 = x.mul(&q);
        ManufacturedCase { coeffs, kind: CaseKind::MuScaledPoly(PolyField::new(w1, w2)) }
    }

    /// Unit upward load, homogeneous boundary data, no exact solution.
    pub fn example3(coeffs: CoefficientField) -> Self {
        ManufacturedCase { coeffs, kind: CaseKind::ConstantLoad(Vec2::new(0.0, 1.0)) }
    }

    /// Custom mu-scaled polynomial case u = (w1, w2) / mu.
    pub fn mu_scaled_polynomial(coeffs: CoefficientField, w1: BivPoly, w2: BivPoly) -> Self {
        ManufacturedCase { coeffs, kind: CaseKind::MuScaledPoly(PolyField::new(w1, w2)) }
    }

    /// Custom case with independent polynomial branches per subdomain;
    /// produces genuinely nonzero displacement and traction jumps.
    pub fn piecewise_polynomial(
        coeffs: CoefficientField,
        u_outside: (BivPoly, BivPoly),
        u_inside: (BivPoly, BivPoly),
    ) -> Self {
        ManufacturedCase {
            coeffs,
            kind: CaseKind::PerSubdomainPoly([
                PolyField::new(u_outside.0, u_outside.1),
                PolyField::new(u_inside.0, u_inside.1),
            ]),
        }
    }

    pub fn has_exact(&self) -> bool {
        !matches!(self.kind, CaseKind::ConstantLoad(_))
    }

    fn field(&self, subdomain: u8) -> Option<&PolyField> {
        match &self.kind {
            CaseKind::MuScaledPoly(f) => Some(f),
            CaseKind::PerSubdomainPoly(fields) => {
                Some(&fields[if subdomain == 2 { 1 } else { 0 }])
            }
            _ => None,
        }
    }

    /// Exact displacement on the given subdomain's branch.
    pub fn displacement(&self, p: Vec2, subdomain: u8) -> Result<Vec2, Error> {
        let mu = self.coeffs.mu(subdomain);
        match &self.kind {
            CaseKind::MuScaledTrig => {
                let s = TrigProfile::value(p);
                Ok(Vec2::new(-s, s) / mu)
            }
            CaseKind::MuScaledPoly(w) => Ok(w.value(p) / mu),
            CaseKind::PerSubdomainPoly(_) => Ok(self.field(subdomain).unwrap().value(p)),
            CaseKind::ConstantLoad(_) => Err(Error::NoExactSolution),
        }
    }

    /// Exact displacement gradient on the given subdomain's branch.
    pub fn gradient(&self, p: Vec2, subdomain: u8) -> Result<Mat2, Error> {
        let mu = self.coeffs.mu(subdomain);
        match &self.kind {
            CaseKind::MuScaledTrig => {
                let g = TrigProfile::grad(p);
                Ok(Mat2::new(-g.x, -g.y, g.x, g.y) / mu)
            }
            CaseKind::MuScaledPoly(w) => Ok(w.gradient(p) / mu),
            CaseKind::PerSubdomainPoly(_) => Ok(self.field(subdomain).unwrap().gradient(p)),
            CaseKind::ConstantLoad(_) => Err(Error::NoExactSolution),
        }
    }

    /// Exact stress sigma = 2 mu eps(u) + lambda (div u) I.
    pub fn stress(&self, p: Vec2, subdomain: u8) -> Result<Mat2, Error> {
        let grad = self.gradient(p, subdomain)?;
        let mu = self.coeffs.mu(subdomain);
        let lambda = self.coeffs.lambda(subdomain);
        let eps = 0.5 * (grad + grad.transpose());
        Ok(2.0 * mu * eps + lambda * grad.trace() * Mat2::identity())
    }

    /// Body force f = -div sigma, from the analytic second derivatives.
    pub fn body_force(&self, p: Vec2, subdomain: u8) -> Vec2 {
        let l0 = self.coeffs.lambda0;
        match &self.kind {
            CaseKind::ConstantLoad(f) => *f,
            CaseKind::MuScaledTrig => {
                // sigma = 2 sym(grad w) + lambda0 (div w) I with w = (-s, s).
                let (sxx, sxy, syy) = TrigProfile::second(p);
                let w = [-sxx, -sxy, -syy, sxx, sxy, syy];
                Self::mu_scaled_force(w, l0)
            }
            CaseKind::MuScaledPoly(field) => {
                let w = field.second(p);
                Self::mu_scaled_force(w, l0)
            }
            CaseKind::PerSubdomainPoly(_) => {
                let field = self.field(subdomain).unwrap();
                let [u1xx, u1xy, u1yy, u2xx, u2xy, u2yy] = field.second(p);
                let mu = self.coeffs.mu(subdomain);
                let lambda = self.coeffs.lambda(subdomain);
                let f1 = 2.0 * mu * u1xx
                    + lambda * (u1xx + u2xy)
                    + mu * (u1yy + u2xy);
                let f2 = mu * (u1xy + u2xx)
                    + 2.0 * mu * u2yy
                    + lambda * (u1xy + u2yy);
                Vec2::new(-f1, -f2)
            }
        }
    }

    /// -div of sigma = 2 sym(grad w) + lambda0 (div w) I, given the
    /// second derivatives of w.
    fn mu_scaled_force(w: [f64; 6], lambda0: f64) -> Vec2 {
        let [w1xx, w1xy, w1yy, w2xx, w2xy, w2yy] = w;
        let f1 = 2.0 * w1xx + lambda0 * (w1xx + w2xy) + w1yy + w2xy;
        let f2 = w1xy + w2xx + 2.0 * w2yy + lambda0 * (w1xy + w2yy);
        Vec2::new(-f1, -f2)
    }

    /// Dirichlet datum g = u restricted to the domain boundary (which
    /// lies in subdomain 1). Zero for the constant-load case.
    pub fn dirichlet(&self, p: Vec2) -> Vec2 {
        match &self.kind {
            CaseKind::ConstantLoad(_) => Vec2::zeros(),
            _ => self.displacement(p, 1).expect("exact case"),
        }
    }

    /// Displacement jump phi = u_outside - u_inside on the interface.
    pub fn jump_displacement(&self, p: Vec2) -> Vec2 {
        match &self.kind {
            CaseKind::ConstantLoad(_) => Vec2::zeros(),
            _ => {
                self.displacement(p, 1).expect("exact case")
                    - self.displacement(p, 2).expect("exact case")
            }
        }
    }

    /// Traction jump psi = sigma_1 n_1 + sigma_2 n_2 for a point on the
    /// interface; `n12` is the unit normal pointing from subdomain 1
    /// into the inclusion.
    pub fn jump_traction(&self, p: Vec2, n12: Vec2) -> Vec2 {
        match &self.kind {
            CaseKind::ConstantLoad(_) => Vec2::zeros(),
            _ => {
                let s1 = self.stress(p, 1).expect("exact case");
                let s2 = self.stress(p, 2).expect("exact case");
                (s1 - s2) * n12
            }
        }
    }
}
