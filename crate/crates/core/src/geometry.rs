//! Conforming triangular meshes of convex polygons.
//!
//! Triangles are stored counterclockwise. Local edge `i` of a triangle is the
//! edge opposite local vertex `i`. Every edge record keeps its first adjacent
//! element (the one its stored normal points out of) and, for interior edges,
//! the second one together with the local node numbers that correspond to the
//! two edge endpoints on each side.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// A convex polygon given by its counterclockwise vertex list, optionally
/// carrying an explicit coarse triangulation.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    name: String,
    vertices: Vec<Point>,
    coarse: Option<(Vec<Point>, Vec<[usize; 3]>)>,
}

impl DomainSpec {
    pub fn new(name: impl Into<String>, vertices: Vec<Point>) -> Result<Self> {
        let name = name.into();
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidDomain(format!(
                "{name}: polygon needs at least 3 vertices, got {n}"
            )));
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            if norm(sub(b, a)) == 0.0 {
                return Err(Error::InvalidDomain(format!(
                    "{name}: consecutive vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        let scale = vertices
            .iter()
            .flat_map(|p| p.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(1.0);
        for i in 0..n {
            let a = vertices[(i + n - 1) % n];
            let b = vertices[i];
            let c = vertices[(i + 1) % n];
            let turn = cross(sub(b, a), sub(c, b));
            if turn <= 1e-12 * scale * scale {
                return Err(Error::InvalidDomain(format!(
                    "{name}: polygon is not strictly convex and counterclockwise at vertex {i}"
                )));
            }
        }
        Ok(Self {
            name,
            vertices,
            coarse: None,
        })
    }

    pub fn unit_square() -> Self {
        Self::new(
            "unit-square",
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        )
        .expect("unit square is convex")
    }

    /// Quadrilateral `(0,0), (1,0), (1,1), (vx,1)` with `vx < 0`.
    ///
    /// The coarse triangulation has three triangles: the unit square cut along
    /// its lower-left to upper-right diagonal plus the triangle
    /// `(0,0), (0,1), (vx,1)`. Refinement level `k` therefore has `3 * 4^k`
    /// elements, and the line `x2 = 1/2` is resolved from level 1 on.
    pub fn slanted_quadrilateral(vx: f64) -> Result<Self> {
        if !(vx < 0.0) {
            return Err(Error::InvalidDomain(format!(
                "slanted quadrilateral needs a negative left vertex, got {vx}"
            )));
        }
        let mut spec = Self::new(
            "slanted-quadrilateral",
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [vx, 1.0]],
        )?;
        let points = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [vx, 1.0]];
        let triangles = vec![[0, 1, 2], [0, 2, 3], [0, 3, 4]];
        spec.coarse = Some((points, triangles));
        Ok(spec)
    }

    /// Vertex `(vx, 1)` such that the interior angle at the origin equals `angle`.
    pub fn slanted_vertex_for_angle(angle: f64) -> f64 {
        // slant edge leaves the origin at `angle` measured from the x1-axis
        angle.cos() / angle.sin()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| cross(self.vertices[i], self.vertices[(i + 1) % n]))
            .sum::<f64>()
    }

    /// Largest interior angle of the polygon.
    pub fn max_interior_angle(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = sub(self.vertices[(i + n - 1) % n], self.vertices[i]);
                let b = sub(self.vertices[(i + 1) % n], self.vertices[i]);
                (dot(a, b) / (norm(a) * norm(b))).clamp(-1.0, 1.0).acos()
            })
            .fold(0.0, f64::max)
    }

    fn coarse_triangulation(&self) -> (Vec<Point>, Vec<[usize; 3]>) {
        if let Some(c) = &self.coarse {
            return c.clone();
        }
        // fan around the vertex centroid
        let n = self.vertices.len();
        let mut c = [0.0, 0.0];
        for v in &self.vertices {
            c[0] += v[0] / n as f64;
            c[1] += v[1] / n as f64;
        }
        let mut points = self.vertices.clone();
        points.push(c);
        let triangles = (0..n).map(|i| [n, i, (i + 1) % n]).collect();
        (points, triangles)
    }
}

/// One side of an edge: the adjacent element, the local edge index inside it
/// and the local nodes sitting at the edge's first and second endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeSide {
    pub element: usize,
    pub local_edge: usize,
    pub nodes: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub first: EdgeSide,
    pub second: Option<EdgeSide>,
    /// Unit normal pointing out of `first.element`.
    pub normal: Point,
    pub length: f64,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.second.is_none()
    }

    /// Outward normal as seen from side `side` (0 or 1).
    pub fn normal_of_side(&self, side: usize) -> Point {
        if side == 0 {
            self.normal
        } else {
            [-self.normal[0], -self.normal[1]]
        }
    }

    pub fn side(&self, side: usize) -> Option<&EdgeSide> {
        match side {
            0 => Some(&self.first),
            1 => self.second.as_ref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    element_edges: Vec<[usize; 3]>,
    areas: Vec<f64>,
    diameters: Vec<f64>,
    boundary_edges: Vec<usize>,
    interior_edges: Vec<usize>,
    /// Position of an edge inside `boundary_edges`.
    boundary_slot: Vec<Option<usize>>,
    /// Parent element in the mesh this one was refined from. Children of
    /// parent `k` are elements `4k..4k+4`.
    parent: Option<Vec<usize>>,
}

impl Mesh {
    /// Builds the edge structure of a triangle soup. Triangles are reoriented
    /// counterclockwise if needed.
    pub fn from_triangles(vertices: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        let mut areas = Vec::with_capacity(triangles.len());
        let mut diameters = Vec::with_capacity(triangles.len());
        for (k, t) in triangles.iter_mut().enumerate() {
            if t.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {k} references a missing vertex"
                )));
            }
            let [a, b, c] = t.map(|v| vertices[v]);
            let mut area = 0.5 * cross(sub(b, a), sub(c, a));
            if area < 0.0 {
                t.swap(1, 2);
                area = -area;
            }
            if !(area > 0.0) {
                return Err(Error::InvalidMesh(format!("triangle {k} is degenerate")));
            }
            areas.push(area);
            diameters.push(norm(sub(b, a)).max(norm(sub(c, b))).max(norm(sub(a, c))));
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut element_edges = vec![[0usize; 3]; triangles.len()];
        for (k, t) in triangles.iter().enumerate() {
            for i in 0..3 {
                let la = (i + 1) % 3;
                let lb = (i + 2) % 3;
                let (a, b) = (t[la], t[lb]);
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    None => {
                        let pa = vertices[a];
                        let pb = vertices[b];
                        let d = sub(pb, pa);
                        let length = norm(d);
                        lookup.insert(key, edges.len());
                        element_edges[k][i] = edges.len();
                        edges.push(Edge {
                            vertices: [a, b],
                            first: EdgeSide {
                                element: k,
                                local_edge: i,
                                nodes: [la, lb],
                            },
                            second: None,
                            normal: [d[1] / length, -d[0] / length],
                            length,
                        });
                    }
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.second.is_some() {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({a}, {b}) has more than two adjacent triangles"
                            )));
                        }
                        if edge.vertices != [b, a] {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({a}, {b}) is traversed twice in the same direction"
                            )));
                        }
                        // the edge runs b -> a inside this triangle
                        edge.second = Some(EdgeSide {
                            element: k,
                            local_edge: i,
                            nodes: [lb, la],
                        });
                        element_edges[k][i] = e;
                    }
                }
            }
        }

        let mut boundary_edges = Vec::new();
        let mut interior_edges = Vec::new();
        let mut boundary_slot = vec![None; edges.len()];
        for (e, edge) in edges.iter().enumerate() {
            if edge.is_boundary() {
                boundary_slot[e] = Some(boundary_edges.len());
                boundary_edges.push(e);
            } else {
                interior_edges.push(e);
            }
        }

        Ok(Self {
            vertices,
            triangles,
            edges,
            element_edges,
            areas,
            diameters,
            boundary_edges,
            interior_edges,
            boundary_slot,
            parent: None,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, k: usize) -> [usize; 3] {
        self.triangles[k]
    }

    pub fn triangle_points(&self, k: usize) -> [Point; 3] {
        self.triangles[k].map(|v| self.vertices[v])
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn element_edges(&self, k: usize) -> [usize; 3] {
        self.element_edges[k]
    }

    pub fn area(&self, k: usize) -> f64 {
        self.areas[k]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn diameter(&self, k: usize) -> f64 {
        self.diameters[k]
    }

    /// Global mesh size `h = max_K h_K`.
    pub fn h(&self) -> f64 {
        self.diameters.iter().copied().fold(0.0, f64::max)
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn interior_edges(&self) -> &[usize] {
        &self.interior_edges
    }

    pub fn boundary_slot(&self, e: usize) -> Option<usize> {
        self.boundary_slot[e]
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges.iter().map(|&e| self.edges[e].length).sum()
    }

    pub fn parent(&self, k: usize) -> Option<usize> {
        self.parent.as_ref().map(|p| p[k])
    }

    pub fn is_refinement(&self) -> bool {
        self.parent.is_some()
    }

    /// Point on edge `e` at parameter `t` in `[0,1]` (from its first to its second vertex).
    pub fn edge_point(&self, e: usize, t: f64) -> Point {
        let [a, b] = self.edges[e].vertices.map(|v| self.vertices[v]);
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        self.edge_point(e, 0.5)
    }

    /// Barycentric coordinates of `x` with respect to element `k`.
    pub fn barycentric(&self, k: usize, x: Point) -> [f64; 3] {
        let [a, b, c] = self.triangle_points(k);
        let det = cross(sub(b, a), sub(c, a));
        let l1 = cross(sub(x, a), sub(c, a)) / det;
        let l2 = cross(sub(b, a), sub(x, a)) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    pub fn contains(&self, k: usize, x: Point, tol: f64) -> bool {
        self.barycentric(k, x).iter().all(|&l| l >= -tol)
    }

    /// Writes `v x y` and `t i j k` lines with 17 significant digits.
    pub fn write_text(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {:.16e} {:.16e}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "t {} {} {}", t[0], t[1], t[2]);
        }
        out
    }

    pub fn dump(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.write_text())?;
        Ok(())
    }

    pub fn read_text(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let mut it = line.split_whitespace();
            let bad = || Error::Format(format!("mesh line {}: {line:?}", lineno + 1));
            match it.next() {
                None => continue,
                Some("v") => {
                    let x: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                    let y: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                    vertices.push([x, y]);
                }
                Some("t") => {
                    let mut t = [0usize; 3];
                    for slot in &mut t {
                        *slot = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                    }
                    triangles.push(t);
                }
                Some(_) => return Err(bad()),
            }
        }
        Self::from_triangles(vertices, triangles)
    }
}

/// Structured mesh of `[0,1]^2`: `n x n` squares, each cut along its
/// lower-left to upper-right diagonal.
pub fn build_unit_square_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidRefinement(
            "unit square mesh needs n >= 1".into(),
        ));
    }
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = id(i, j);
            let b = id(i + 1, j);
            let c = id(i + 1, j + 1);
            let d = id(i, j + 1);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Mesh::from_triangles(vertices, triangles)
}

/// Coarse triangulation of `domain` refined uniformly `level` times.
pub fn build_polygon_mesh(domain: &DomainSpec, level: usize) -> Result<Mesh> {
    let (points, triangles) = domain.coarse_triangulation();
    let mut mesh = Mesh::from_triangles(points, triangles)?;
    let rel = (mesh.total_area() - domain.area()).abs() / domain.area();
    if rel > 1e-12 {
        return Err(Error::InvalidMesh(format!(
            "coarse triangulation of {} does not tile the polygon (relative area defect {rel:.2e})",
            domain.name()
        )));
    }
    for _ in 0..level {
        mesh = refine_uniform(&mesh)?;
    }
    Ok(mesh)
}

/// Red refinement: every triangle is split into four similar children by
/// joining its edge midpoints. Child `c` of parent `k` becomes element `4k+c`.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    let nv = mesh.num_vertices();
    let mut vertices = mesh.vertices.clone();
    vertices.reserve(mesh.num_edges());
    for edge in &mesh.edges {
        let [a, b] = edge.vertices.map(|v| mesh.vertices[v]);
        vertices.push(midpoint(a, b));
    }
    let mut triangles = Vec::with_capacity(4 * mesh.num_elements());
    let mut parent = Vec::with_capacity(4 * mesh.num_elements());
    for (k, t) in mesh.triangles.iter().enumerate() {
        let m = mesh.element_edges[k].map(|e| nv + e);
        triangles.push([t[0], m[2], m[1]]);
        triangles.push([m[2], t[1], m[0]]);
        triangles.push([m[1], m[0], t[2]]);
        triangles.push([m[0], m[1], m[2]]);
        parent.extend([k; 4]);
    }
    let mut fine = Mesh::from_triangles(vertices, triangles)?;
    fine.parent = Some(parent);
    Ok(fine)
}

/// A chain of meshes where each level is the red refinement of the previous one.
#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    levels: Vec<Mesh>,
}

impl MeshHierarchy {
    pub fn new(coarse: Mesh, refinements: usize) -> Result<Self> {
        let mut levels = vec![coarse];
        for _ in 0..refinements {
            let next = refine_uniform(levels.last().expect("nonempty"))?;
            levels.push(next);
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[Mesh] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &Mesh {
        &self.levels[l]
    }

    pub fn finest(&self) -> &Mesh {
        self.levels.last().expect("nonempty")
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Finest-level element containing `x`, found by descending from element
    /// `k` of level `from`.
    pub fn locate(&self, from: usize, k: usize, x: Point) -> usize {
        let mut elem = k;
        for l in from + 1..self.levels.len() {
            let mesh = &self.levels[l];
            elem = (4 * elem..4 * elem + 4)
                .max_by(|&a, &b| {
                    let ma = min3(mesh.barycentric(a, x));
                    let mb = min3(mesh.barycentric(b, x));
                    ma.total_cmp(&mb)
                })
                .expect("four children");
        }
        elem
    }

    /// All finest-level descendants of element `k` of level `from`.
    pub fn descendants(&self, from: usize, k: usize) -> std::ops::Range<usize> {
        let depth = (self.levels.len() - 1 - from) as u32;
        let width = 4usize.pow(depth);
        k * width..(k + 1) * width
    }

    /// Finest-level boundary edges lying on boundary edge `e` of level `from`,
    /// each with the parameter interval of the coarse edge it covers.
    pub fn boundary_subedges(&self, from: usize, e: usize) -> Result<Vec<(usize, [f64; 2])>> {
        let coarse = &self.levels[from];
        let edge = coarse.edge(e);
        if !edge.is_boundary() {
            return Err(Error::NotNested(format!("edge {e} is not a boundary edge")));
        }
        let fine = self.finest();
        let [a, b] = edge.vertices.map(|v| coarse.vertex(v));
        let d = sub(b, a);
        let len2 = dot(d, d);
        let param = |p: Point| dot(sub(p, a), d) / len2;
        let mut out = Vec::new();
        for k in self.descendants(from, edge.first.element) {
            for fe in fine.element_edges(k) {
                let f = fine.edge(fe);
                if !f.is_boundary() {
                    continue;
                }
                let [pa, pb] = f.vertices.map(|v| fine.vertex(v));
                let off = |p: Point| cross(sub(p, a), d).abs() / len2.sqrt();
                if off(pa) < 1e-12 && off(pb) < 1e-12 {
                    out.push((fe, [param(pa), param(pb)]));
                }
            }
        }
        let covered: f64 = out.iter().map(|(_, [s, t])| (t - s).abs()).sum();
        if (covered - 1.0).abs() > 1e-10 {
            return Err(Error::NotNested(format!(
                "boundary edge {e} covered to {covered} by fine edges"
            )));
        }
        Ok(out)
    }
}

fn min3(l: [f64; 3]) -> f64 {
    l[0].min(l[1]).min(l[2])
}

/// Flow direction through a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Inflow,
    Outflow,
}

/// Inflow/outflow marking of the boundary edges, indexed by boundary slot.
#[derive(Debug, Clone)]
pub struct EdgeClassification {
    flow: Vec<Flow>,
}

impl EdgeClassification {
    pub fn flow(&self, slot: usize) -> Flow {
        self.flow[slot]
    }

    pub fn is_inflow(&self, slot: usize) -> bool {
        self.flow[slot] == Flow::Inflow
    }

    pub fn num_inflow(&self) -> usize {
        self.flow.iter().filter(|f| **f == Flow::Inflow).count()
    }

    pub fn num_outflow(&self) -> usize {
        self.flow.len() - self.num_inflow()
    }

    pub fn len(&self) -> usize {
        self.flow.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flow.is_empty()
    }
}

/// Marks a boundary edge inflow iff `beta(midpoint) . n < 0`; ties are outflow.
pub fn classify_boundary_edges(mesh: &Mesh, beta: impl Fn(Point) -> Point) -> EdgeClassification {
    let flow = mesh
        .boundary_edges()
        .iter()
        .map(|&e| {
            let edge = mesh.edge(e);
            if dot(beta(mesh.edge_midpoint(e)), edge.normal) < 0.0 {
                Flow::Inflow
            } else {
                Flow::Outflow
            }
        })
        .collect();
    EdgeClassification { flow }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_square() {
        let m = build_unit_square_mesh(1).unwrap();
        assert_eq!(m.num_elements(), 2);
        assert_eq!(m.num_edges(), 5);
        assert_eq!(m.boundary_edges().len(), 4);
        assert!((m.h() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(matches!(
            build_unit_square_mesh(0),
            Err(Error::InvalidRefinement(_))
        ));
    }

    #[test]
    fn table_mesh_sizes() {
        assert_eq!(build_unit_square_mesh(4).unwrap().num_elements(), 32);
        assert_eq!(build_unit_square_mesh(128).unwrap().num_elements(), 32768);
    }

    #[test]
    fn counts_and_normals() {
        for n in [1, 2, 5, 8] {
            let m = build_unit_square_mesh(n).unwrap();
            assert_eq!(m.num_elements(), 2 * n * n);
            assert_eq!(m.num_vertices(), (n + 1) * (n + 1));
            assert_eq!(m.boundary_edges().len(), 4 * n);
            assert!((m.total_area() - 1.0).abs() < 1e-12);
            for e in m.edges() {
                assert!((norm(e.normal) - 1.0).abs() < 1e-14);
                // stored normal points away from the first element's centroid
                let [a, b, c] = m.triangle_points(e.first.element);
                let g = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
                let mid = m.edge_point(
                    m.element_edges(e.first.element)[e.first.local_edge],
                    0.5,
                );
                assert!(dot(sub(mid, g), e.normal) > 0.0);
            }
        }
    }

    #[test]
    fn interior_adjacency_is_symmetric() {
        let m = build_unit_square_mesh(3).unwrap();
        for &e in m.interior_edges() {
            let edge = m.edge(e);
            let s = edge.second.unwrap();
            assert_eq!(m.element_edges(edge.first.element)[edge.first.local_edge], e);
            assert_eq!(m.element_edges(s.element)[s.local_edge], e);
            let n0 = edge.normal_of_side(0);
            let n1 = edge.normal_of_side(1);
            assert!((n0[0] + n1[0]).abs() < 1e-14 && (n0[1] + n1[1]).abs() < 1e-14);
            // both sides see the same endpoints
            for side in [edge.first, s] {
                let t = m.triangle(side.element);
                assert_eq!([t[side.nodes[0]], t[side.nodes[1]]], edge.vertices);
            }
        }
    }

    #[test]
    fn refinement_quadruples_and_keeps_area() {
        let m = build_unit_square_mesh(1).unwrap();
        let f = refine_uniform(&m).unwrap();
        assert_eq!(f.num_elements(), 8);
        assert!((f.total_area() - 1.0).abs() < 1e-12);
        for k in 0..f.num_elements() {
            let p = f.parent(k).unwrap();
            assert_eq!(p, k / 4);
            let [a, b, c] = f.triangle_points(k);
            let g = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
            assert!(m.contains(p, g, 1e-14));
        }
    }

    #[test]
    fn double_refinement_matches_structured_mesh() {
        let twice = refine_uniform(&refine_uniform(&build_unit_square_mesh(4).unwrap()).unwrap()).unwrap();
        let direct = build_unit_square_mesh(16).unwrap();
        let key = |p: &Point| ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
        let mut va: Vec<_> = twice.vertices().iter().map(key).collect();
        let mut vb: Vec<_> = direct.vertices().iter().map(key).collect();
        va.sort_unstable();
        vb.sort_unstable();
        assert_eq!(va, vb);
        // same triangles as vertex-coordinate sets
        let tri_key = |m: &Mesh, k: usize| {
            let mut t: Vec<_> = m.triangle_points(k).iter().map(key).collect();
            t.sort_unstable();
            t
        };
        let mut ta: Vec<_> = (0..twice.num_elements()).map(|k| tri_key(&twice, k)).collect();
        let mut tb: Vec<_> = (0..direct.num_elements()).map(|k| tri_key(&direct, k)).collect();
        ta.sort_unstable();
        tb.sort_unstable();
        assert_eq!(ta, tb);
    }

    #[test]
    fn slanted_quadrilateral_levels() {
        let vx = DomainSpec::slanted_vertex_for_angle(5.0 * std::f64::consts::PI / 6.0);
        assert!((vx + 3f64.sqrt()).abs() < 1e-14);
        let d = DomainSpec::slanted_quadrilateral(vx).unwrap();
        assert!((d.max_interior_angle() - 5.0 * std::f64::consts::PI / 6.0).abs() < 1e-12);
        let c = build_polygon_mesh(&d, 0).unwrap().num_elements();
        assert_eq!(build_polygon_mesh(&d, 1).unwrap().num_elements(), 4 * c);
        assert_eq!(build_polygon_mesh(&d, 6).unwrap().num_elements(), 12288);
        let m = build_polygon_mesh(&d, 3).unwrap();
        assert!((m.total_area() - d.area()).abs() < 1e-12 * d.area());
    }

    #[test]
    fn fan_triangulation_of_hexagon() {
        let v: Vec<Point> = (0..6)
            .map(|i| {
                let a = i as f64 * std::f64::consts::PI / 3.0;
                [a.cos(), a.sin()]
            })
            .collect();
        let d = DomainSpec::new("hexagon", v).unwrap();
        let m = build_polygon_mesh(&d, 2).unwrap();
        assert_eq!(m.num_elements(), 6 * 16);
        assert!((m.total_area() - d.area()).abs() < 1e-12 * d.area());
    }

    #[test]
    fn nonconvex_polygon_rejected() {
        let v = vec![[0.0, 0.0], [2.0, 0.0], [1.0, 0.3], [2.0, 1.0], [0.0, 1.0]];
        assert!(matches!(DomainSpec::new("dart", v), Err(Error::InvalidDomain(_))));
        assert!(DomainSpec::new("two", vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        assert!(DomainSpec::slanted_quadrilateral(0.5).is_err());
    }

    #[test]
    fn classification_examples() {
        let m = build_unit_square_mesh(1).unwrap();
        let find = |n: Point| {
            m.boundary_edges()
                .iter()
                .position(|&e| {
                    let en = m.edge(e).normal;
                    (en[0] - n[0]).abs() < 1e-12 && (en[1] - n[1]).abs() < 1e-12
                })
                .unwrap()
        };
        let c = classify_boundary_edges(&m, |_| [1.0, 1.0]);
        assert_eq!(c.flow(find([0.0, -1.0])), Flow::Inflow);
        assert_eq!(c.flow(find([1.0, 0.0])), Flow::Outflow);
        let c = classify_boundary_edges(&m, |_| [1.0, 0.0]);
        assert_eq!(c.flow(find([0.0, -1.0])), Flow::Outflow);
        assert_eq!(c.num_inflow() + c.num_outflow(), m.boundary_edges().len());
    }

    #[test]
    fn text_dump_roundtrip() {
        let m = build_polygon_mesh(&DomainSpec::slanted_quadrilateral(-3f64.sqrt()).unwrap(), 1).unwrap();
        let back = Mesh::read_text(&m.write_text()).unwrap();
        assert_eq!(back.triangles(), m.triangles());
        for (a, b) in back.vertices().iter().zip(m.vertices()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn hierarchy_locates_points() {
        let h = MeshHierarchy::new(build_unit_square_mesh(2).unwrap(), 2).unwrap();
        let fine = h.finest();
        for k in 0..h.level(0).num_elements() {
            let [a, b, c] = h.level(0).triangle_points(k);
            let x = [
                0.2 * a[0] + 0.3 * b[0] + 0.5 * c[0],
                0.2 * a[1] + 0.3 * b[1] + 0.5 * c[1],
            ];
            let f = h.locate(0, k, x);
            assert!(fine.contains(f, x, 1e-12));
            assert!(h.descendants(0, k).contains(&f));
        }
        for &e in h.level(0).boundary_edges() {
            let subs = h.boundary_subedges(0, e).unwrap();
            assert_eq!(subs.len(), 4);
        }
    }
}
