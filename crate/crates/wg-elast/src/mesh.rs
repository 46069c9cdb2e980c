//! Polygonal partitions of the unit square, aligned with the boundary of
//! the inclusion `(1/4,3/4)^2`.
//!
//! Cells are stored as counterclockwise vertex loops; edges are derived
//! deterministically from the loops. Collinear consecutive vertices are
//! allowed (the degenerate-octagon family relies on them). After
//! [`tag_interface`] every cell carries a subdomain label and every edge
//! is classified as interior, domain-boundary, or interface.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::Error;
use crate::Vec2;

/// Lower coordinate of the square inclusion.
pub const INCLUSION_MIN: f64 = 0.25;
/// Upper coordinate of the square inclusion.
pub const INCLUSION_MAX: f64 = 0.75;

const GEOM_TOL: f64 = 1e-12;

/// Edge classification after interface tagging.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    /// Shared by two cells of the same subdomain.
    Interior,
    /// On the domain boundary (one adjacent cell).
    Boundary,
    /// On the inclusion boundary; the label selects the smooth piece
    /// (1: x=1/4, 2: x=3/4, 3: y=1/4, 4: y=3/4).
    Interface(u8),
}

/// Undirected edge with adjacency. `v` keeps the direction in which the
/// `left` cell traverses the edge; `right` is absent on the boundary.
#[derive(Clone, Debug)]
pub struct Edge {
    pub v: [usize; 2],
    pub left: usize,
    pub right: Option<usize>,
}

/// Flat-array polygonal mesh. All derived fields are rebuilt
/// deterministically from `vertices` + `cells`, so the struct stays
/// consistent under serialization round trips.
#[derive(Clone, Debug)]
pub struct PolyMesh {
    pub vertices: Vec<Vec2>,
    /// Counterclockwise vertex loops.
    pub cells: Vec<Vec<usize>>,
    pub edges: Vec<Edge>,
    /// Edge ids per cell, in loop order (edge j joins loop vertex j and j+1).
    pub cell_edges: Vec<Vec<usize>>,
    /// Subdomain label per cell (1 outside the inclusion, 2 inside).
    pub cell_subdomain: Vec<u8>,
    pub edge_kind: Vec<EdgeKind>,
    /// Cell diameter h_T: maximum pairwise vertex distance.
    pub cell_diameter: Vec<f64>,
    pub cell_centroid: Vec<Vec2>,
    /// Signed polygon area (positive for counterclockwise loops).
    pub cell_area: Vec<f64>,
    /// Cells per side for the generated grid families (used by nested
    /// refinement lookups); `None` for externally supplied meshes.
    pub cells_per_side: Option<usize>,
}

impl PolyMesh {
    /// Build a mesh from vertex coordinates and cell loops, deriving the
    /// edge table and per-cell geometry. All cells start in subdomain 1
    /// with untagged (interior/boundary) edges.
    pub fn from_cells(vertices: Vec<Vec2>, cells: Vec<Vec<usize>>) -> Self {
        let mut edges: Vec<Edge> = Vec::new();
        let mut edge_of: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cell_edges = Vec::with_capacity(cells.len());

        for (c, loop_) in cells.iter().enumerate() {
            let m = loop_.len();
            let mut ids = Vec::with_capacity(m);
            for j in 0..m {
                let a = loop_[j];
                let b = loop_[(j + 1) % m];
                let key = (a.min(b), a.max(b));
                let id = match edge_of.get(&key) {
                    Some(&id) => {
                        edges[id].right = Some(c);
                        id
                    }
                    None => {
                        let id = edges.len();
                        edges.push(Edge {
                            v: [a, b],
                            left: c,
                            right: None,
                        });
                        edge_of.insert(key, id);
                        id
                    }
                };
                ids.push(id);
            }
            cell_edges.push(ids);
        }

        let n_edges = edges.len();
        let mut mesh = PolyMesh {
            cell_subdomain: vec![1; cells.len()],
            edge_kind: vec![EdgeKind::Interior; n_edges],
            cell_diameter: Vec::with_capacity(cells.len()),
            cell_centroid: Vec::with_capacity(cells.len()),
            cell_area: Vec::with_capacity(cells.len()),
            cells_per_side: None,
            vertices,
            cells,
            edges,
            cell_edges,
        };
        for c in 0..mesh.cells.len() {
            let (area, centroid) = polygon_area_centroid(&mesh.vertices, &mesh.cells[c]);
            mesh.cell_area.push(area);
            mesh.cell_centroid.push(centroid);
            mesh.cell_diameter.push(polygon_diameter(&mesh.vertices, &mesh.cells[c]));
        }
        for (e, kind) in mesh.edge_kind.iter_mut().enumerate() {
            if mesh.edges[e].right.is_none() {
                *kind = EdgeKind::Boundary;
            }
        }
        mesh
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Endpoints of an edge, in stored (left-cell traversal) order.
    pub fn edge_endpoints(&self, e: usize) -> (Vec2, Vec2) {
        let [a, b] = self.edges[e].v;
        (self.vertices[a], self.vertices[b])
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let (a, b) = self.edge_endpoints(e);
        (b - a).norm()
    }

    pub fn edge_midpoint(&self, e: usize) -> Vec2 {
        let (a, b) = self.edge_endpoints(e);
        0.5 * (a + b)
    }

    /// Unit normal of edge `e` pointing out of cell `c`.
    pub fn outward_normal(&self, e: usize, c: usize) -> Vec2 {
        let (a, b) = self.edge_endpoints(e);
        let d = (b - a).normalize();
        let n_left = Vec2::new(d.y, -d.x);
        if self.edges[e].left == c {
            n_left
        } else {
            debug_assert_eq!(self.edges[e].right, Some(c));
            -n_left
        }
    }

    /// The cell on the other side of edge `e`, if any.
    pub fn neighbor(&self, e: usize, c: usize) -> Option<usize> {
        let edge = &self.edges[e];
        if edge.left == c {
            edge.right
        } else {
            Some(edge.left)
        }
    }

    /// Maximum cell diameter.
    pub fn mesh_size(&self) -> f64 {
        self.cell_diameter.iter().cloned().fold(0.0, f64::max)
    }

    pub fn interface_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_edges()).filter(|&e| matches!(self.edge_kind[e], EdgeKind::Interface(_)))
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_edges()).filter(|&e| self.edge_kind[e] == EdgeKind::Boundary)
    }
}

fn polygon_area_centroid(vertices: &[Vec2], loop_: &[usize]) -> (f64, Vec2) {
    let m = loop_.len();
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for j in 0..m {
        let p = vertices[loop_[j]];
        let q = vertices[loop_[(j + 1) % m]];
        let cross = p.x * q.y - q.x * p.y;
        area2 += cross;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    let area = 0.5 * area2;
    if area.abs() < 1e-300 {
        // Degenerate: fall back to the vertex average so downstream code
        // gets a finite point.
        let mut c = Vec2::zeros();
        for &i in loop_ {
            c += vertices[i];
        }
        return (area, c / m as f64);
    }
    (area, Vec2::new(cx, cy) / (6.0 * area))
}

fn polygon_diameter(vertices: &[Vec2], loop_: &[usize]) -> f64 {
    let mut d2: f64 = 0.0;
    for i in 0..loop_.len() {
        for j in (i + 1)..loop_.len() {
            d2 = d2.max((vertices[loop_[i]] - vertices[loop_[j]]).norm_squared());
        }
    }
    d2.sqrt()
}

/// Uniform n-by-n square mesh of the unit square. The refinement level
/// `l` of the reported tables corresponds to `n = 2^(l-1)`.
pub fn gen_rect_mesh(n: usize) -> Result<PolyMesh, Error> {
    if n == 0 {
        return Err(Error::InvalidParam("cell count per side must be >= 1".into()));
    }
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Vec2::new(i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    let mut mesh = PolyMesh::from_cells(vertices, cells);
    mesh.cells_per_side = Some(n);
    Ok(mesh)
}

/// Polygonal stress-test family on the same n-by-n grid: every square
/// cell is emitted with its edge midpoints inserted, giving degenerate
/// octagons (8 vertices, collinear triples). Exercises genuine polygon
/// code paths while keeping exact interface alignment.
pub fn gen_polygon_mesh(n: usize) -> Result<PolyMesh, Error> {
    if n == 0 {
        return Err(Error::InvalidParam("cell count per side must be >= 1".into()));
    }
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Vec2::new(i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    // Midpoints of the original grid edges.
    let mut mid_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |vertices: &mut Vec<Vec2>, a: usize, b: usize| -> usize {
        let key = (a.min(b), a.max(b));
        *mid_of.entry(key).or_insert_with(|| {
            let id = vertices.len();
            let p = 0.5 * (vertices[a] + vertices[b]);
            vertices.push(p);
            id
        })
    };
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            let mb = midpoint(&mut vertices, v00, v10);
            let mr = midpoint(&mut vertices, v10, v11);
            let mt = midpoint(&mut vertices, v11, v01);
            let ml = midpoint(&mut vertices, v01, v00);
            cells.push(vec![v00, mb, v10, mr, v11, mt, v01, ml]);
        }
    }
    let mut mesh = PolyMesh::from_cells(vertices, cells);
    mesh.cells_per_side = Some(n);
    Ok(mesh)
}

fn on_interface(p: Vec2) -> bool {
    let on_line = |v: f64| (v - INCLUSION_MIN).abs() <= GEOM_TOL || (v - INCLUSION_MAX).abs() <= GEOM_TOL;
    let in_range = |v: f64| (INCLUSION_MIN - GEOM_TOL..=INCLUSION_MAX + GEOM_TOL).contains(&v);
    (on_line(p.x) && in_range(p.y)) || (on_line(p.y) && in_range(p.x))
}

/// Which smooth interface piece a point on the interface belongs to.
fn interface_piece(p: Vec2) -> u8 {
    if (p.x - INCLUSION_MIN).abs() <= GEOM_TOL {
        1
    } else if (p.x - INCLUSION_MAX).abs() <= GEOM_TOL {
        2
    } else if (p.y - INCLUSION_MIN).abs() <= GEOM_TOL {
        3
    } else {
        4
    }
}

/// True if segment (p,q) crosses one of the four interface segments
/// transversally (strictly opposite sides, intersection strictly inside
/// the interface segment).
fn crosses_interface(p: Vec2, q: Vec2) -> bool {
    let crosses_line = |pa: f64, qa: f64, pt: f64, qt: f64, line: f64| -> bool {
        // `a` is the coordinate normal to the line, `t` the one along it.
        let (da, db) = (pa - line, qa - line);
        if da.abs() <= GEOM_TOL || db.abs() <= GEOM_TOL || da.signum() == db.signum() {
            return false;
        }
        let t_star = pt + (qt - pt) * (line - pa) / (qa - pa);
        t_star > INCLUSION_MIN + GEOM_TOL && t_star < INCLUSION_MAX - GEOM_TOL
    };
    for line in [INCLUSION_MIN, INCLUSION_MAX] {
        if crosses_line(p.x, q.x, p.y, q.y, line) || crosses_line(p.y, q.y, p.x, q.x, line) {
            return true;
        }
    }
    false
}

/// Label cells by subdomain and classify edges against the square
/// inclusion boundary. Fails with a diagnostic when a mesh edge crosses
/// the interface transversally (misaligned mesh). Idempotent.
pub fn tag_interface(mesh: &mut PolyMesh) -> Result<(), Error> {
    for e in 0..mesh.n_edges() {
        let (p, q) = mesh.edge_endpoints(e);
        if crosses_interface(p, q) {
            return Err(Error::MisalignedInterface(format!(
                "edge {e} from ({:.6},{:.6}) to ({:.6},{:.6}) crosses the inclusion boundary",
                p.x, p.y, q.x, q.y
            )));
        }
    }
    for c in 0..mesh.n_cells() {
        let centroid = mesh.cell_centroid[c];
        let inside = centroid.x > INCLUSION_MIN
            && centroid.x < INCLUSION_MAX
            && centroid.y > INCLUSION_MIN
            && centroid.y < INCLUSION_MAX;
        // The whole cell must sit in the closed inclusion, not just its
        // centroid; a single cell containing the inclusion stays outside.
        let contained = mesh.cells[c].iter().all(|&v| {
            let p = mesh.vertices[v];
            p.x >= INCLUSION_MIN - GEOM_TOL
                && p.x <= INCLUSION_MAX + GEOM_TOL
                && p.y >= INCLUSION_MIN - GEOM_TOL
                && p.y <= INCLUSION_MAX + GEOM_TOL
        });
        mesh.cell_subdomain[c] = if inside && contained { 2 } else { 1 };
    }
    for e in 0..mesh.n_edges() {
        let edge = &mesh.edges[e];
        mesh.edge_kind[e] = match edge.right {
            None => EdgeKind::Boundary,
            Some(right) => {
                if mesh.cell_subdomain[edge.left] != mesh.cell_subdomain[right] {
                    let (p, q) = mesh.edge_endpoints(e);
                    if !(on_interface(p) && on_interface(q)) {
                        return Err(Error::MisalignedInterface(format!(
                            "edge {e} separates subdomains but does not lie on the inclusion boundary"
                        )));
                    }
                    EdgeKind::Interface(interface_piece(mesh.edge_midpoint(e)))
                } else {
                    EdgeKind::Interior
                }
            }
        };
    }
    Ok(())
}

/// Mesh sanity report. `pass` requires positive counterclockwise cells,
/// a manifold edge table, exact tiling of the unit square, and interface
/// alignment.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub area_sum: f64,
    pub min_diameter: f64,
    pub max_diameter: f64,
    pub orientation_ok: bool,
    pub edge_manifold_ok: bool,
    pub interface_aligned_ok: bool,
    pub area_ok: bool,
    pub pass: bool,
}

pub fn validate(mesh: &PolyMesh) -> ValidationReport {
    let orientation_ok = mesh.cell_area.iter().all(|&a| a > 0.0);
    let area_sum: f64 = mesh.cell_area.iter().sum();
    let area_ok = (area_sum - 1.0).abs() <= 1e-12;

    // Every edge must be traversed once or twice, and twice only in
    // opposite directions.
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edge_manifold_ok = true;
    for loop_ in &mesh.cells {
        let m = loop_.len();
        for j in 0..m {
            let key = (loop_[j], loop_[(j + 1) % m]);
            *directed.entry(key).or_insert(0) += 1;
        }
    }
    for (&(a, b), &count) in &directed {
        if count != 1 {
            edge_manifold_ok = false;
        }
        let reverse = directed.get(&(b, a)).copied().unwrap_or(0);
        if reverse > 1 {
            edge_manifold_ok = false;
        }
    }
    for edge in &mesh.edges {
        let count_fwd = directed.get(&(edge.v[0], edge.v[1])).copied().unwrap_or(0);
        let count_rev = directed.get(&(edge.v[1], edge.v[0])).copied().unwrap_or(0);
        let expected = if edge.right.is_some() { (1, 1) } else { (1, 0) };
        if (count_fwd, count_rev) != expected {
            edge_manifold_ok = false;
        }
    }

    let mut interface_aligned_ok = true;
    for e in 0..mesh.n_edges() {
        let (p, q) = mesh.edge_endpoints(e);
        if crosses_interface(p, q) {
            interface_aligned_ok = false;
        }
        if let EdgeKind::Interface(_) = mesh.edge_kind[e] {
            if !(on_interface(p) && on_interface(q)) {
                interface_aligned_ok = false;
            }
            let edge = &mesh.edges[e];
            if let Some(r) = edge.right {
                if mesh.cell_subdomain[edge.left] == mesh.cell_subdomain[r] {
                    interface_aligned_ok = false;
                }
            } else {
                interface_aligned_ok = false;
            }
        }
    }

    let (mut min_d, mut max_d) = (f64::INFINITY, 0.0f64);
    for &d in &mesh.cell_diameter {
        min_d = min_d.min(d);
        max_d = max_d.max(d);
    }
    let pass = orientation_ok && edge_manifold_ok && interface_aligned_ok && area_ok;
    ValidationReport {
        area_sum,
        min_diameter: min_d,
        max_diameter: max_d,
        orientation_ok,
        edge_manifold_ok,
        interface_aligned_ok,
        area_ok,
        pass,
    }
}

/// Serialize in the plain-text exchange format: `npoints ncells` header,
/// vertex coordinates, cell vertex-index lists (count first), per-cell
/// subdomain labels.
pub fn write_text(mesh: &PolyMesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", mesh.vertices.len(), mesh.n_cells());
    for v in &mesh.vertices {
        let _ = writeln!(out, "{:.16e} {:.16e}", v.x, v.y);
    }
    for loop_ in &mesh.cells {
        let _ = write!(out, "{}", loop_.len());
        for &i in loop_ {
            let _ = write!(out, " {i}");
        }
        let _ = writeln!(out);
    }
    for &s in &mesh.cell_subdomain {
        let _ = writeln!(out, "{s}");
    }
    out
}

pub fn write_text_file(mesh: &PolyMesh, path: &Path) -> Result<(), Error> {
    std::fs::write(path, write_text(mesh))?;
    Ok(())
}

/// Parse the plain-text exchange format produced by [`write_text`].
/// Edge kinds are re-derived from the stored subdomain labels.
pub fn read_text(text: &str) -> Result<PolyMesh, Error> {
    let mut tokens = text.split_ascii_whitespace();
    let mut next = |what: &str| -> Result<&str, Error> {
        tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("unexpected end of mesh file, expected {what}")))
    };
    let np: usize = next("npoints")?
        .parse()
        .map_err(|e| Error::Parse(format!("npoints: {e}")))?;
    let nc: usize = next("ncells")?
        .parse()
        .map_err(|e| Error::Parse(format!("ncells: {e}")))?;
    let mut vertices = Vec::with_capacity(np);
    for _ in 0..np {
        let x: f64 = next("x")?.parse().map_err(|e| Error::Parse(format!("vertex x: {e}")))?;
        let y: f64 = next("y")?.parse().map_err(|e| Error::Parse(format!("vertex y: {e}")))?;
        vertices.push(Vec2::new(x, y));
    }
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let m: usize = next("cell size")?
            .parse()
            .map_err(|e| Error::Parse(format!("cell size: {e}")))?;
        let mut loop_ = Vec::with_capacity(m);
        for _ in 0..m {
            let i: usize = next("vertex index")?
                .parse()
                .map_err(|e| Error::Parse(format!("vertex index: {e}")))?;
            if i >= np {
                return Err(Error::Parse(format!("vertex index {i} out of range")));
            }
            loop_.push(i);
        }
        cells.push(loop_);
    }
    let mut subdomains = Vec::with_capacity(nc);
    for _ in 0..nc {
        let s: u8 = next("subdomain")?
            .parse()
            .map_err(|e| Error::Parse(format!("subdomain: {e}")))?;
        subdomains.push(s);
    }
    let mut mesh = PolyMesh::from_cells(vertices, cells);
    mesh.cell_subdomain = subdomains;
    // Recover edge kinds from adjacency.
    for e in 0..mesh.n_edges() {
        let edge = &mesh.edges[e];
        mesh.edge_kind[e] = match edge.right {
            None => EdgeKind::Boundary,
            Some(r) => {
                if mesh.cell_subdomain[edge.left] != mesh.cell_subdomain[r] {
                    EdgeKind::Interface(interface_piece(mesh.edge_midpoint(e)))
                } else {
                    EdgeKind::Interior
                }
            }
        };
    }
    Ok(mesh)
}

pub fn read_text_file(path: &Path) -> Result<PolyMesh, Error> {
    read_text(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent count of grid edges lying on the inclusion boundary:
    /// four sides of length 1/2, each covered by edges of length 1/n
    /// (or 1/(2n) for the octagon family with `split = 2`).
    fn expected_interface_edges(n: usize, split: usize) -> usize {
        4 * (n / 2) * split
    }

    #[test]
    fn rect_unit() {
        let mesh = gen_rect_mesh(1).unwrap();
        assert_eq!(mesh.n_cells(), 1);
        assert_eq!(mesh.n_edges(), 4);
        assert_eq!(mesh.vertices.len(), 4);
        assert!((mesh.cell_area[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rect_rejects_zero() {
        assert!(gen_rect_mesh(0).is_err());
    }

    #[test]
    fn rect_n4_tagging() {
        let mut mesh = gen_rect_mesh(4).unwrap();
        tag_interface(&mut mesh).unwrap();
        assert_eq!(mesh.n_cells(), 16);
        let inside = mesh.cell_subdomain.iter().filter(|&&s| s == 2).count();
        assert_eq!(inside, 4);
        let n_interface = mesh.interface_edges().count();
        assert_eq!(n_interface, expected_interface_edges(4, 1));
        assert_eq!(n_interface, 8);
        // Every interface edge separates different subdomains and lies
        // strictly inside the domain.
        for e in mesh.interface_edges() {
            let edge = &mesh.edges[e];
            let r = edge.right.expect("interface edge must have two cells");
            assert_ne!(mesh.cell_subdomain[edge.left], mesh.cell_subdomain[r]);
        }
    }

    #[test]
    fn rect_n8_tagging() {
        let mut mesh = gen_rect_mesh(8).unwrap();
        tag_interface(&mut mesh).unwrap();
        assert_eq!(mesh.interface_edges().count(), expected_interface_edges(8, 1));
        assert_eq!(mesh.interface_edges().count(), 16);
    }

    #[test]
    fn misaligned_mesh_rejected() {
        let mut mesh = gen_rect_mesh(2).unwrap();
        let err = tag_interface(&mut mesh).unwrap_err();
        assert!(matches!(err, Error::MisalignedInterface(_)));
    }

    #[test]
    fn single_cell_stays_outside() {
        let mut mesh = gen_rect_mesh(1).unwrap();
        tag_interface(&mut mesh).unwrap();
        assert_eq!(mesh.interface_edges().count(), 0);
        assert!(mesh.cell_subdomain.iter().all(|&s| s == 1));
    }

    #[test]
    fn octagon_unit() {
        let mesh = gen_polygon_mesh(1).unwrap();
        assert_eq!(mesh.n_cells(), 1);
        assert_eq!(mesh.cells[0].len(), 8);
        assert_eq!(mesh.n_edges(), 8);
        assert!((mesh.cell_area[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn octagon_n4_counts() {
        let mut mesh = gen_polygon_mesh(4).unwrap();
        assert_eq!(mesh.n_cells(), 16);
        assert_eq!(mesh.n_edges(), 80);
        tag_interface(&mut mesh).unwrap();
        assert_eq!(mesh.interface_edges().count(), expected_interface_edges(4, 2));
    }

    #[test]
    fn areas_tile_unit_square() {
        for n in [1usize, 3, 4, 8] {
            let mesh = gen_rect_mesh(n).unwrap();
            let sum: f64 = mesh.cell_area.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12, "rect n={n}: {sum}");
            let mesh = gen_polygon_mesh(n).unwrap();
            let sum: f64 = mesh.cell_area.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12, "octagon n={n}: {sum}");
        }
    }

    #[test]
    fn validation_passes_on_generated_meshes() {
        let mut mesh = gen_rect_mesh(4).unwrap();
        tag_interface(&mut mesh).unwrap();
        let report = validate(&mesh);
        assert!(report.pass, "{report:?}");
        assert!((report.area_sum - 1.0).abs() <= 1e-12);

        let mut mesh = gen_polygon_mesh(8).unwrap();
        tag_interface(&mut mesh).unwrap();
        let report = validate(&mesh);
        assert!(report.pass, "{report:?}");
        // Uniform family: all diameters equal.
        assert!((report.max_diameter / report.min_diameter - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clockwise_cell_fails_orientation() {
        let vertices = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        let mesh = PolyMesh::from_cells(vertices, vec![vec![0, 3, 2, 1]]);
        let report = validate(&mesh);
        assert!(!report.orientation_ok);
        assert!(!report.pass);
    }

    #[test]
    fn tagging_is_idempotent() {
        let mut mesh = gen_rect_mesh(8).unwrap();
        tag_interface(&mut mesh).unwrap();
        let subdomains = mesh.cell_subdomain.clone();
        let kinds = mesh.edge_kind.clone();
        tag_interface(&mut mesh).unwrap();
        assert_eq!(subdomains, mesh.cell_subdomain);
        assert_eq!(kinds, mesh.edge_kind);
    }

    #[test]
    fn refinement_halves_diameter_exactly() {
        for gen in [gen_rect_mesh, gen_polygon_mesh] {
            let mut prev: Option<f64> = None;
            for level in 3..=6 {
                let n = 1usize << (level - 1);
                let mesh = gen(n).unwrap();
                let h = mesh.mesh_size();
                if let Some(p) = prev {
                    assert_eq!(h, p / 2.0, "exact halving at level {level}");
                }
                prev = Some(h);
            }
        }
    }

    #[test]
    fn every_edge_listed_by_incident_cells() {
        let mesh = gen_polygon_mesh(4).unwrap();
        for (e, edge) in mesh.edges.iter().enumerate() {
            assert!(mesh.cell_edges[edge.left].contains(&e));
            if let Some(r) = edge.right {
                assert!(mesh.cell_edges[r].contains(&e));
            }
        }
        // And conversely every listed edge is incident.
        for c in 0..mesh.n_cells() {
            for &e in &mesh.cell_edges[c] {
                let edge = &mesh.edges[e];
                assert!(edge.left == c || edge.right == Some(c));
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let mut mesh = gen_polygon_mesh(4).unwrap();
        tag_interface(&mut mesh).unwrap();
        let text = write_text(&mesh);
        let back = read_text(&text).unwrap();
        assert_eq!(back.n_cells(), mesh.n_cells());
        assert_eq!(back.n_edges(), mesh.n_edges());
        assert_eq!(back.cell_subdomain, mesh.cell_subdomain);
        assert_eq!(back.edge_kind, mesh.edge_kind);
        for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
            assert_eq!(a, b, "coordinates survive the 17-digit round trip");
        }
    }
}
