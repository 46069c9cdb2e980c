//! Quadrature on segments, triangles and simple polygons.
//!
//! Segment rules are Gauss-Legendre. Triangle rules collapse a tensor
//! Gauss grid onto the triangle (positive weights, exact to the requested
//! total degree). Polygon rules fan the cell into triangles from its
//! centroid; zero-area fan triangles from collinear vertices are dropped.

use crate::error::Error;
use crate::Vec2;

/// Points and weights on a cell or edge; weights sum to the measure.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Integrate a scalar function with this rule.
    pub fn integrate(&self, mut f: impl FnMut(Vec2) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton
/// iteration on the Legendre recurrence. Accurate to machine precision
/// for the orders used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and its derivative via the three-term recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss rule on the segment from `a` to `b`, exact for (1D) polynomials
/// of the requested degree; uses ceil((degree+1)/2) points.
pub fn quad_edge(a: Vec2, b: Vec2, exactness: usize) -> QuadratureRule {
    let n = (exactness + 1).div_ceil(2).max(1);
    let (nodes, weights) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let jac = half.norm();
    QuadratureRule {
        points: nodes.iter().map(|&t| mid + t * half).collect(),
        weights: weights.iter().map(|&w| w * jac).collect(),
    }
}

/// Collapsed tensor-Gauss rule on the triangle (a, b, c), exact for
/// bivariate polynomials of the given total degree. The mapping is
/// x(u,v) = (1-u) a + u(1-v) b + u v c with Jacobian 2|T| u, so the
/// integrand gains one u-degree.
pub fn quad_triangle(a: Vec2, b: Vec2, c: Vec2, exactness: usize) -> QuadratureRule {
    let nu = (exactness + 2).div_ceil(2).max(1);
    let nv = (exactness + 1).div_ceil(2).max(1);
    let (xu, wu) = gauss_legendre(nu);
    let (xv, wv) = gauss_legendre(nv);
    let area2 = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (&tu, &cu) in xu.iter().zip(&wu) {
        let u = 0.5 * (tu + 1.0);
        for (&tv, &cv) in xv.iter().zip(&wv) {
            let v = 0.5 * (tv + 1.0);
            let p = (1.0 - u) * a + u * (1.0 - v) * b + u * v * c;
            points.push(p);
            // 1/4 from the two [-1,1] -> [0,1] substitutions.
            weights.push(0.25 * cu * cv * area2 * u);
        }
    }
    QuadratureRule { points, weights }
}

fn segments_properly_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let orient = |a: Vec2, b: Vec2, c: Vec2| (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn is_self_intersecting(vertices: &[Vec2]) -> bool {
    let m = vertices.len();
    for i in 0..m {
        let (p1, p2) = (vertices[i], vertices[(i + 1) % m]);
        for j in (i + 1)..m {
            // Skip adjacent segments (they share an endpoint).
            if j == i || (j + 1) % m == i || (i + 1) % m == j {
                continue;
            }
            let (q1, q2) = (vertices[j], vertices[(j + 1) % m]);
            if segments_properly_intersect(p1, p2, q1, q2) {
                return true;
            }
        }
    }
    false
}

/// Rule on a simple polygon via a centroid fan. Fan triangles with area
/// below 1e-15 (collinear vertices) contribute no points.
pub fn quad_polygon(vertices: &[Vec2], exactness: usize) -> Result<QuadratureRule, Error> {
    if vertices.len() < 3 {
        return Err(Error::InvalidParam("polygon needs at least 3 vertices".into()));
    }
    if is_self_intersecting(vertices) {
        return Err(Error::SelfIntersectingPolygon);
    }
    let m = vertices.len();
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for j in 0..m {
        let p = vertices[j];
        let q = vertices[(j + 1) % m];
        let cross = p.x * q.y - q.x * p.y;
        area2 += cross;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    let centroid = Vec2::new(cx, cy) / (3.0 * area2);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for j in 0..m {
        let (a, b) = (vertices[j], vertices[(j + 1) % m]);
        let tri_area =
            0.5 * ((a.x - centroid.x) * (b.y - centroid.y) - (b.x - centroid.x) * (a.y - centroid.y));
        if tri_area.abs() <= 1e-15 {
            continue;
        }
        let rule = quad_triangle(centroid, a, b, exactness);
        points.extend(rule.points);
        weights.extend(rule.weights);
    }
    Ok(QuadratureRule { points, weights })
}
