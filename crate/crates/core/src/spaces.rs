//! Discontinuous P1 spaces: scalar and vector fields on elements, and
//! edgewise-linear fields on the boundary.
//!
//! Every element carries the three nodal (barycentric) basis functions of its
//! own vertices, so a scalar field has DOFs `3k + i` and a vector field
//! `6k + 3c + i` (component `c`, local node `i`). Boundary fields have DOFs
//! `2s + j` on boundary slot `s`, where `j` is the edge endpoint.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{dot, sub, Mesh, Point};
use crate::quadrature::{edge_rule, triangle_rule, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Scalar,
    Vector,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    kind: SpaceKind,
    entities: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh, kind: SpaceKind) -> Self {
        let entities = match kind {
            SpaceKind::Scalar | SpaceKind::Vector => mesh.num_elements(),
            SpaceKind::Boundary => mesh.boundary_edges().len(),
        };
        Self { kind, entities }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn num_entities(&self) -> usize {
        self.entities
    }

    pub fn dofs_per_entity(&self) -> usize {
        match self.kind {
            SpaceKind::Scalar => 3,
            SpaceKind::Vector => 6,
            SpaceKind::Boundary => 2,
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.entities * self.dofs_per_entity()
    }

    pub fn range(&self, entity: usize) -> std::ops::Range<usize> {
        let n = self.dofs_per_entity();
        entity * n..(entity + 1) * n
    }

    pub fn components(&self) -> usize {
        if self.kind == SpaceKind::Vector {
            2
        } else {
            1
        }
    }
}

pub fn build_dof_map(mesh: &Mesh, kind: SpaceKind) -> DofMap {
    DofMap::new(mesh, kind)
}

#[inline]
pub fn scalar_dof(k: usize, i: usize) -> usize {
    3 * k + i
}

#[inline]
pub fn vector_dof(k: usize, c: usize, i: usize) -> usize {
    6 * k + 3 * c + i
}

#[inline]
pub fn boundary_dof(slot: usize, j: usize) -> usize {
    2 * slot + j
}

/// Affine data of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub points: [Point; 3],
    pub area: f64,
    /// Constant gradients of the three barycentric basis functions.
    pub grads: [Point; 3],
}

impl ElementGeometry {
    pub fn new(mesh: &Mesh, k: usize) -> Self {
        let points = mesh.triangle_points(k);
        let [a, b, c] = points;
        let ba = sub(b, a);
        let ca = sub(c, a);
        let det = ba[0] * ca[1] - ba[1] * ca[0];
        let g1 = [ca[1] / det, -ca[0] / det];
        let g2 = [-ba[1] / det, ba[0] / det];
        let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
        Self {
            points,
            area: 0.5 * det,
            grads: [g0, g1, g2],
        }
    }

    /// Physical point and barycentric coordinates of reference point `(xi, eta)`.
    pub fn map(&self, r: [f64; 2]) -> (Point, [f64; 3]) {
        let l = [1.0 - r[0] - r[1], r[0], r[1]];
        let [a, b, c] = self.points;
        let x = [
            l[0] * a[0] + l[1] * b[0] + l[2] * c[0],
            l[0] * a[1] + l[1] * b[1] + l[2] * c[1],
        ];
        (x, l)
    }

    /// Quadrature points in physical coordinates with physical weights.
    pub fn quadrature<'a>(
        &'a self,
        rule: &'a QuadratureRule,
    ) -> impl Iterator<Item = (Point, [f64; 3], f64)> + 'a {
        rule.iter().map(move |(r, w)| {
            let (x, l) = self.map(r);
            (x, l, 2.0 * self.area * w)
        })
    }
}

/// Coefficients over one of the DOF maps.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    dofmap: DofMap,
    values: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(dofmap: DofMap) -> Self {
        Self {
            values: vec![0.0; dofmap.num_dofs()],
            dofmap,
        }
    }

    pub fn from_values(dofmap: DofMap, values: Vec<f64>) -> Result<Self> {
        if values.len() != dofmap.num_dofs() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a space with {} DOFs",
                values.len(),
                dofmap.num_dofs()
            )));
        }
        Ok(Self { dofmap, values })
    }

    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    pub fn kind(&self) -> SpaceKind {
        self.dofmap.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Scalar field value at barycentric coordinates `l` of element `k`.
    #[inline]
    pub fn scalar_at(&self, k: usize, l: [f64; 3]) -> f64 {
        let c = &self.values[3 * k..3 * k + 3];
        c[0] * l[0] + c[1] * l[1] + c[2] * l[2]
    }

    /// Vector field value at barycentric coordinates `l` of element `k`.
    #[inline]
    pub fn vector_at(&self, k: usize, l: [f64; 3]) -> Point {
        let c = &self.values[6 * k..6 * k + 6];
        [
            c[0] * l[0] + c[1] * l[1] + c[2] * l[2],
            c[3] * l[0] + c[4] * l[1] + c[5] * l[2],
        ]
    }

    /// Boundary field value on slot `s` at edge parameter `t`.
    #[inline]
    pub fn boundary_at(&self, slot: usize, t: f64) -> f64 {
        (1.0 - t) * self.values[2 * slot] + t * self.values[2 * slot + 1]
    }

    /// Value(s) at a physical point of element `k` (one entry for scalar
    /// fields, two for vector fields).
    pub fn eval(&self, mesh: &Mesh, k: usize, x: Point) -> Result<Vec<f64>> {
        let l = mesh.barycentric(k, x);
        if l.iter().any(|&v| v < -1e-10) {
            return Err(Error::PointOutsideElement {
                element: k,
                point: x,
            });
        }
        match self.kind() {
            SpaceKind::Scalar => Ok(vec![self.scalar_at(k, l)]),
            SpaceKind::Vector => Ok(self.vector_at(k, l).to_vec()),
            SpaceKind::Boundary => Err(Error::DimensionMismatch(
                "boundary fields are evaluated along edges".into(),
            )),
        }
    }

    /// Restriction of the side-`side` element polynomial to edge `e`, at edge
    /// parameter `t`.
    pub fn trace(&self, mesh: &Mesh, e: usize, side: usize, t: f64) -> Result<Vec<f64>> {
        let edge = mesh.edge(e);
        let s = edge.side(side).ok_or(Error::NoSecondSide(e))?;
        let mut l = [0.0; 3];
        l[s.nodes[0]] = 1.0 - t;
        l[s.nodes[1]] = t;
        match self.kind() {
            SpaceKind::Scalar => Ok(vec![self.scalar_at(s.element, l)]),
            SpaceKind::Vector => Ok(self.vector_at(s.element, l).to_vec()),
            SpaceKind::Boundary => {
                let slot = mesh.boundary_slot(e).ok_or(Error::NoSecondSide(e))?;
                Ok(vec![self.boundary_at(slot, t)])
            }
        }
    }

    /// Scalar jump `[y] = y0 n0 + y1 n1` across an interior edge.
    pub fn jump(&self, mesh: &Mesh, e: usize, t: f64) -> Result<Point> {
        let y0 = self.trace(mesh, e, 0, t)?[0];
        let y1 = self.trace(mesh, e, 1, t)?[0];
        let n = mesh.edge(e).normal;
        Ok([(y0 - y1) * n[0], (y0 - y1) * n[1]])
    }

    /// Scalar average `{y}` across an interior edge.
    pub fn average(&self, mesh: &Mesh, e: usize, t: f64) -> Result<f64> {
        let y0 = self.trace(mesh, e, 0, t)?[0];
        let y1 = self.trace(mesh, e, 1, t)?[0];
        Ok(0.5 * (y0 + y1))
    }
}

/// Pointwise data to project.
pub enum Pointwise<'a> {
    Scalar(&'a dyn Fn(Point) -> f64),
    Vector(&'a dyn Fn(Point) -> Point),
}

const PROJECTION_DEGREE: usize = 6;

/// Element-local (edge-local for boundary spaces) L2 projection onto P1.
pub fn l2_project(f: Pointwise<'_>, dofmap: DofMap, mesh: &Mesh) -> Result<DiscreteField> {
    let mut field = DiscreteField::zeros(dofmap);
    match (dofmap.kind, f) {
        (SpaceKind::Scalar, Pointwise::Scalar(f)) => {
            let rule = triangle_rule(PROJECTION_DEGREE)?;
            for k in 0..mesh.num_elements() {
                let g = ElementGeometry::new(mesh, k);
                let mut rhs = [0.0; 3];
                for (x, l, w) in g.quadrature(&rule) {
                    let v = f(x);
                    for i in 0..3 {
                        rhs[i] += w * v * l[i];
                    }
                }
                let c = solve_p1_mass(g.area, rhs);
                field.values[3 * k..3 * k + 3].copy_from_slice(&c);
            }
        }
        (SpaceKind::Vector, Pointwise::Vector(f)) => {
            let rule = triangle_rule(PROJECTION_DEGREE)?;
            for k in 0..mesh.num_elements() {
                let g = ElementGeometry::new(mesh, k);
                let mut rhs = [[0.0; 3]; 2];
                for (x, l, w) in g.quadrature(&rule) {
                    let v = f(x);
                    for c in 0..2 {
                        for i in 0..3 {
                            rhs[c][i] += w * v[c] * l[i];
                        }
                    }
                }
                for c in 0..2 {
                    let sol = solve_p1_mass(g.area, rhs[c]);
                    field.values[6 * k + 3 * c..6 * k + 3 * c + 3].copy_from_slice(&sol);
                }
            }
        }
        (SpaceKind::Boundary, Pointwise::Scalar(f)) => {
            let rule = edge_rule(PROJECTION_DEGREE)?;
            for (slot, &e) in mesh.boundary_edges().iter().enumerate() {
                let h = mesh.edge(e).length;
                let mut rhs = [0.0; 2];
                for (r, w) in rule.iter() {
                    let t = r[0];
                    let v = f(mesh.edge_point(e, t));
                    rhs[0] += w * h * v * (1.0 - t);
                    rhs[1] += w * h * v * t;
                }
                // inverse of h/6 [[2,1],[1,2]]
                let s = 2.0 / h;
                field.values[2 * slot] = s * (2.0 * rhs[0] - rhs[1]);
                field.values[2 * slot + 1] = s * (2.0 * rhs[1] - rhs[0]);
            }
        }
        _ => {
            return Err(Error::DimensionMismatch(
                "pointwise data does not match the space kind".into(),
            ))
        }
    }
    Ok(field)
}

// inverse of |K|/12 [[2,1,1],[1,2,1],[1,1,2]]
fn solve_p1_mass(area: f64, rhs: [f64; 3]) -> [f64; 3] {
    let s = 3.0 / area;
    let sum = rhs[0] + rhs[1] + rhs[2];
    [
        s * (4.0 * rhs[0] - sum),
        s * (4.0 * rhs[1] - sum),
        s * (4.0 * rhs[2] - sum),
    ]
}

/// Integral of a scalar field over the domain with a given rule.
pub fn integrate_scalar(field: &DiscreteField, mesh: &Mesh, rule: &QuadratureRule) -> f64 {
    (0..mesh.num_elements())
        .map(|k| {
            let g = ElementGeometry::new(mesh, k);
            g.quadrature(rule)
                .map(|(_, l, w)| w * field.scalar_at(k, l))
                .sum::<f64>()
        })
        .sum()
}

/// Legacy VTK unstructured grid with discontinuous P1 point data: every cell
/// gets its own three points so element-local nodal values survive.
pub fn write_vtk(mesh: &Mesh, title: &str, fields: &[(&str, &DiscreteField)]) -> Result<String> {
    let m = mesh.num_elements();
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "{}", title.lines().next().unwrap_or(""));
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(out, "POINTS {} double", 3 * m);
    for k in 0..m {
        for p in mesh.triangle_points(k) {
            let _ = writeln!(out, "{:.17e} {:.17e} 0", p[0], p[1]);
        }
    }
    let _ = writeln!(out, "CELLS {} {}", m, 4 * m);
    for k in 0..m {
        let _ = writeln!(out, "3 {} {} {}", 3 * k, 3 * k + 1, 3 * k + 2);
    }
    let _ = writeln!(out, "CELL_TYPES {m}");
    for _ in 0..m {
        let _ = writeln!(out, "5");
    }
    if !fields.is_empty() {
        let _ = writeln!(out, "POINT_DATA {}", 3 * m);
    }
    for (name, field) in fields {
        match field.kind() {
            SpaceKind::Scalar => {
                if field.values.len() != 3 * m {
                    return Err(Error::DimensionMismatch(format!("field {name}")));
                }
                let _ = writeln!(out, "SCALARS {name} double 1");
                let _ = writeln!(out, "LOOKUP_TABLE default");
                for v in &field.values {
                    let _ = writeln!(out, "{v:.17e}");
                }
            }
            SpaceKind::Vector => {
                if field.values.len() != 6 * m {
                    return Err(Error::DimensionMismatch(format!("field {name}")));
                }
                let _ = writeln!(out, "VECTORS {name} double");
                for k in 0..m {
                    for i in 0..3 {
                        let _ = writeln!(
                            out,
                            "{:.17e} {:.17e} 0",
                            field.values[6 * k + i],
                            field.values[6 * k + 3 + i]
                        );
                    }
                }
            }
            SpaceKind::Boundary => {
                return Err(Error::DimensionMismatch(format!(
                    "boundary field {name} cannot be written as cell data"
                )))
            }
        }
    }
    Ok(out)
}

/// Minimal reader for files produced by [`write_vtk`]: cell count and the
/// named data array (scalar arrays flat, vector arrays as x,y pairs).
pub fn read_vtk_array(text: &str, name: &str) -> Result<(usize, Vec<f64>)> {
    let mut lines = text.lines().peekable();
    let mut cells = None;
    let mut npoints = 0usize;
    while let Some(line) = lines.next() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("CELLS") => {
                cells = it.next().and_then(|s| s.parse().ok());
            }
            Some("POINT_DATA") => {
                npoints = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Format("POINT_DATA without count".into()))?;
            }
            Some("SCALARS") if it.next() == Some(name) => {
                lines.next(); // LOOKUP_TABLE
                let mut data = Vec::with_capacity(npoints);
                for _ in 0..npoints {
                    let l = lines.next().ok_or_else(|| Error::Format("truncated".into()))?;
                    data.push(parse_f64(l.trim())?);
                }
                return Ok((cells.unwrap_or(0), data));
            }
            Some("VECTORS") if it.next() == Some(name) => {
                let mut data = Vec::with_capacity(2 * npoints);
                for _ in 0..npoints {
                    let l = lines.next().ok_or_else(|| Error::Format("truncated".into()))?;
                    let mut parts = l.split_whitespace();
                    for _ in 0..2 {
                        let s = parts.next().ok_or_else(|| Error::Format(l.into()))?;
                        data.push(parse_f64(s)?);
                    }
                }
                return Ok((cells.unwrap_or(0), data));
            }
            _ => {}
        }
    }
    Err(Error::Format(format!("array {name} not found")))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Format(format!("not a number: {s:?}")))
}

/// Outward normal component of a vector field trace on boundary edge `e`.
pub fn normal_trace(field: &DiscreteField, mesh: &Mesh, e: usize, t: f64) -> f64 {
    let edge = mesh.edge(e);
    let mut l = [0.0; 3];
    l[edge.first.nodes[0]] = 1.0 - t;
    l[edge.first.nodes[1]] = t;
    dot(field.vector_at(edge.first.element, l), edge.normal)
}
