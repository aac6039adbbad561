//! Manufactured solutions, error norms, convergence rates, nested reference
//! comparison, and Galerkin-error diagnostics.

use std::sync::Arc;

use crate::control::{quasi_interpolate, DiscreteSolution};
use crate::error::{Error, Result};
use crate::geometry::{dot, Mesh, MeshHierarchy, Point};
use crate::ldg::{assemble_load, ControlInput, Discretization, ProblemData, ScalarFn, VectorFn};
use crate::quadrature::{edge_rule, triangle_rule, QuadratureRule};
use crate::spaces::{normal_trace, DiscreteField, ElementGeometry};

pub const ERROR_DEGREE: usize = 6;
const BOUNDARY_ERROR_DEGREE: usize = 9;

/// Closed-form optimal triple with the data generated from it.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub epsilon: f64,
    pub omega: f64,
    pub beta: Point,
    pub alpha: f64,
    pub y: ScalarFn,
    pub grad_y: VectorFn,
    pub z: ScalarFn,
    pub grad_z: VectorFn,
    pub u: ScalarFn,
    pub f: ScalarFn,
    pub yd: ScalarFn,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("epsilon", &self.epsilon)
            .field("omega", &self.omega)
            .field("beta", &self.beta)
            .field("alpha", &self.alpha)
            .finish_non_exhaustive()
    }
}

impl ManufacturedCase {
    pub fn data(&self) -> ProblemData {
        let f = Arc::clone(&self.f);
        let yd = Arc::clone(&self.yd);
        ProblemData::new(self.epsilon, self.omega)
            .with_constant_beta(self.beta)
            .with_constant_alpha(self.alpha)
            .with_source(move |x| f(x))
            .with_desired_state(move |x| yd(x))
    }

    /// Exact adjoint flux `p = eps^(1/2) grad z`.
    pub fn p(&self, x: Point) -> Point {
        let g = (self.grad_z)(x);
        let s = self.epsilon.sqrt();
        [s * g[0], s * g[1]]
    }

    /// Exact state flux `q = -eps^(1/2) grad y`.
    pub fn q(&self, x: Point) -> Point {
        let g = (self.grad_y)(x);
        let s = self.epsilon.sqrt();
        [-s * g[0], -s * g[1]]
    }
}

/// Unconstrained problem on the unit square with `beta = (1,1)`, `alpha = 1`,
/// `y = u = -(eps^(1/2)/w)(x1(1-x1) + x2(1-x2))` and
/// `z = eps^(-1/2) x1 x2 (1-x1)(1-x2)`.
pub fn manufactured_example1(epsilon: f64, omega: f64) -> Result<ManufacturedCase> {
    if !(epsilon > 0.0 && omega > 0.0) {
        return Err(Error::InvalidData(format!("epsilon = {epsilon}, omega = {omega}")));
    }
    let beta = [1.0, 1.0];
    let alpha = 1.0;
    let se = epsilon.sqrt();
    let cy = -se / omega;
    let cz = 1.0 / se;
    let y = move |x: Point| cy * (x[0] * (1.0 - x[0]) + x[1] * (1.0 - x[1]));
    let grad_y = move |x: Point| [cy * (1.0 - 2.0 * x[0]), cy * (1.0 - 2.0 * x[1])];
    let lap_y = -4.0 * cy;
    let z = move |x: Point| cz * x[0] * x[1] * (1.0 - x[0]) * (1.0 - x[1]);
    let grad_z = move |x: Point| {
        [
            cz * (1.0 - 2.0 * x[0]) * x[1] * (1.0 - x[1]),
            cz * x[0] * (1.0 - x[0]) * (1.0 - 2.0 * x[1]),
        ]
    };
    let lap_z = move |x: Point| -2.0 * cz * (x[1] * (1.0 - x[1]) + x[0] * (1.0 - x[0]));
    let f = move |x: Point| -epsilon * lap_y + dot(beta, grad_y(x)) + alpha * y(x);
    let yd = move |x: Point| y(x) - (-epsilon * lap_z(x) - dot(beta, grad_z(x)) + alpha * z(x));
    Ok(ManufacturedCase {
        epsilon,
        omega,
        beta,
        alpha,
        y: Arc::new(y),
        grad_y: Arc::new(grad_y),
        z: Arc::new(z),
        grad_z: Arc::new(grad_z),
        u: Arc::new(y),
        f: Arc::new(f),
        yd: Arc::new(yd),
    })
}

/// Globally linear state `y = a + b.x` with `z = 0`; the discrete state
/// solve reproduces it exactly.
pub fn manufactured_linear(epsilon: f64, beta: Point, alpha: f64, a: f64, b: Point) -> ManufacturedCase {
    let y = move |x: Point| a + b[0] * x[0] + b[1] * x[1];
    ManufacturedCase {
        epsilon,
        omega: 1.0,
        beta,
        alpha,
        y: Arc::new(y),
        grad_y: Arc::new(move |_| b),
        z: Arc::new(|_| 0.0),
        grad_z: Arc::new(|_| [0.0, 0.0]),
        u: Arc::new(y),
        f: Arc::new(move |x| dot(beta, b) + alpha * y(x)),
        yd: Arc::new(y),
    }
}

fn domain_integral(mesh: &Mesh, rule: &QuadratureRule, mut g: impl FnMut(usize, [f64; 3], Point) -> f64) -> f64 {
    let mut total = 0.0;
    for k in 0..mesh.num_elements() {
        let geo = ElementGeometry::new(mesh, k);
        for (x, l, w) in geo.quadrature(rule) {
            total += w * g(k, l, x);
        }
    }
    total
}

pub fn error_l2_domain(field: &DiscreteField, exact: &dyn Fn(Point) -> f64, mesh: &Mesh) -> Result<f64> {
    let rule = triangle_rule(ERROR_DEGREE)?;
    let sq = domain_integral(mesh, &rule, |k, l, x| (field.scalar_at(k, l) - exact(x)).powi(2));
    Ok(sq.sqrt())
}

pub fn error_l2_domain_vector(field: &DiscreteField, exact: &dyn Fn(Point) -> Point, mesh: &Mesh) -> Result<f64> {
    let rule = triangle_rule(ERROR_DEGREE)?;
    let sq = domain_integral(mesh, &rule, |k, l, x| {
        let v = field.vector_at(k, l);
        let e = exact(x);
        (v[0] - e[0]).powi(2) + (v[1] - e[1]).powi(2)
    });
    Ok(sq.sqrt())
}

/// `sqrt(sum_E int_E (value - exact)^2)` where `value(slot, t)` gives the
/// discrete quantity at edge parameter `t` of boundary slot `slot`.
pub fn error_l2_boundary(
    value: &dyn Fn(usize, f64) -> f64,
    exact: &dyn Fn(Point) -> f64,
    mesh: &Mesh,
) -> Result<f64> {
    let rule = edge_rule(BOUNDARY_ERROR_DEGREE)?;
    let mut sq = 0.0;
    for (slot, &e) in mesh.boundary_edges().iter().enumerate() {
        let h = mesh.edge(e).length;
        for (r, w) in rule.iter() {
            let d = value(slot, r[0]) - exact(mesh.edge_point(e, r[0]));
            sq += w * h * d * d;
        }
    }
    Ok(sq.sqrt())
}

/// Boundary error of the trace of a scalar element field.
pub fn error_trace_boundary(field: &DiscreteField, exact: &dyn Fn(Point) -> f64, mesh: &Mesh) -> Result<f64> {
    let edges = mesh.boundary_edges();
    error_l2_boundary(
        &|slot, t| field.trace(mesh, edges[slot], 0, t).expect("first side")[0],
        exact,
        mesh,
    )
}

/// `|| (p - p_h).n ||` on the boundary with `p = eps^(1/2) grad z`.
pub fn error_flux_normal_boundary(
    p_h: &DiscreteField,
    grad_z: &dyn Fn(Point) -> Point,
    epsilon: f64,
    mesh: &Mesh,
) -> Result<f64> {
    let se = epsilon.sqrt();
    let rule = edge_rule(BOUNDARY_ERROR_DEGREE)?;
    let mut sq = 0.0;
    for &e in mesh.boundary_edges() {
        let edge = mesh.edge(e);
        for (r, w) in rule.iter() {
            let g = grad_z(mesh.edge_point(e, r[0]));
            let exact = se * dot(g, edge.normal);
            let d = normal_trace(p_h, mesh, e, r[0]) - exact;
            sq += w * edge.length * d * d;
        }
    }
    Ok(sq.sqrt())
}

pub fn convergence_rate(e_coarse: f64, e_fine: f64) -> Result<f64> {
    for e in [e_coarse, e_fine] {
        if !(e > 0.0) {
            return Err(Error::NonPositiveError(e));
        }
    }
    Ok((e_coarse / e_fine).ln() / 2f64.ln())
}

/// Least-squares slope of `log2 e` against `-log2 h`.
pub fn least_squares_rate(h: &[f64], e: &[f64]) -> Result<f64> {
    if h.len() != e.len() || h.len() < 2 {
        return Err(Error::DimensionMismatch("rate fit needs at least two levels".into()));
    }
    if let Some(&bad) = e.iter().chain(h).find(|v| !(**v > 0.0)) {
        return Err(Error::NonPositiveError(bad));
    }
    let xs: Vec<f64> = h.iter().map(|v| -v.log2()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.log2()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(-sxy / sxx)
}

/// Errors on one mesh level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub elements: usize,
    pub h: f64,
    pub err_y: f64,
    pub err_u: f64,
    pub err_z: f64,
    pub err_pn: f64,
}

impl ErrorRow {
    pub fn columns(&self) -> [f64; 4] {
        [self.err_y, self.err_u, self.err_z, self.err_pn]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    pub fn push(&mut self, row: ErrorRow) {
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rates of the four error columns between row `i - 1` and row `i`;
    /// `None` for the first row.
    pub fn rates(&self, i: usize) -> Option<[f64; 4]> {
        if i == 0 || i >= self.rows.len() {
            return None;
        }
        let a = self.rows[i - 1].columns();
        let b = self.rows[i].columns();
        let mut out = [f64::NAN; 4];
        for c in 0..4 {
            out[c] = convergence_rate(a[c], b[c]).unwrap_or(f64::NAN);
        }
        Some(out)
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.columns()[c]).collect()
    }

    /// Least-squares rate of column `c` over the last `levels` rows.
    pub fn tail_rate(&self, c: usize, levels: usize) -> Result<f64> {
        let start = self.rows.len().saturating_sub(levels);
        let rows = &self.rows[start..];
        let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let e: Vec<f64> = rows.iter().map(|r| r.columns()[c]).collect();
        least_squares_rate(&h, &e)
    }
}

/// Errors of a converged solution against a manufactured case.
pub fn manufactured_errors(disc: &Discretization, sol: &DiscreteSolution, case: &ManufacturedCase) -> Result<ErrorRow> {
    let mesh = disc.mesh();
    Ok(ErrorRow {
        elements: mesh.num_elements(),
        h: mesh.h(),
        err_y: error_l2_domain(&sol.y, &*case.y, mesh)?,
        err_u: error_l2_boundary(&|s, t| sol.control_at(disc, s, t), &*case.u, mesh)?,
        err_z: error_trace_boundary(&sol.z, &*case.z, mesh)?,
        err_pn: error_flux_normal_boundary(&sol.p, &*case.grad_z, case.epsilon, mesh)?,
    })
}

/// Errors of a coarse solution against a solution on a nested refinement.
/// Every quantity is integrated over the fine descendants of each coarse
/// element or boundary edge, so both discrete fields are polynomial on each
/// quadrature cell.
pub fn reference_compare(
    hierarchy: &MeshHierarchy,
    coarse_level: usize,
    coarse: (&Discretization, &DiscreteSolution),
    reference: (&Discretization, &DiscreteSolution),
) -> Result<ErrorRow> {
    let (cd, cs) = coarse;
    let (rd, rs) = reference;
    if coarse_level >= hierarchy.len() {
        return Err(Error::NotNested(format!("no level {coarse_level} in the hierarchy")));
    }
    let cmesh = hierarchy.level(coarse_level);
    let fmesh = hierarchy.finest();
    if cd.mesh().num_elements() != cmesh.num_elements() || rd.mesh().num_elements() != fmesh.num_elements() {
        return Err(Error::NotNested(
            "solutions do not live on the given hierarchy levels".into(),
        ));
    }
    let vol = triangle_rule(ERROR_DEGREE)?;
    let mut sq_y = 0.0;
    for k in 0..cmesh.num_elements() {
        for kf in hierarchy.descendants(coarse_level, k) {
            let geo = ElementGeometry::new(fmesh, kf);
            for (x, l, w) in geo.quadrature(&vol) {
                let yc = cs.y.scalar_at(k, cmesh.barycentric(k, x));
                let yf = rs.y.scalar_at(kf, l);
                sq_y += w * (yc - yf).powi(2);
            }
        }
    }
    let edge = edge_rule(BOUNDARY_ERROR_DEGREE)?;
    let (mut sq_u, mut sq_z, mut sq_pn) = (0.0, 0.0, 0.0);
    for (slot, &e) in cmesh.boundary_edges().iter().enumerate() {
        for (fe, [s0, s1]) in hierarchy.boundary_subedges(coarse_level, e)? {
            let fslot = fmesh
                .boundary_slot(fe)
                .ok_or_else(|| Error::NotNested(format!("fine edge {fe} is not on the boundary")))?;
            let len = fmesh.edge(fe).length;
            for (r, w) in edge.iter() {
                let tf = r[0];
                let tc = s0 + tf * (s1 - s0);
                let w = w * len;
                let du = cs.control_at(cd, slot, tc) - rs.control_at(rd, fslot, tf);
                let dz = cs.z.trace(cmesh, e, 0, tc)?[0] - rs.z.trace(fmesh, fe, 0, tf)?[0];
                let dp = normal_trace(&cs.p, cmesh, e, tc) - normal_trace(&rs.p, fmesh, fe, tf);
                sq_u += w * du * du;
                sq_z += w * dz * dz;
                sq_pn += w * dp * dp;
            }
        }
    }
    Ok(ErrorRow {
        elements: cmesh.num_elements(),
        h: cmesh.h(),
        err_y: sq_y.sqrt(),
        err_u: sq_u.sqrt(),
        err_z: sq_z.sqrt(),
        err_pn: sq_pn.sqrt(),
    })
}

/// Galerkin errors of the discrete state and adjoint driven by exact data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalerkinDiagnostics {
    pub elements: usize,
    /// `|| y - y_h(u) ||` on the domain.
    pub state: f64,
    /// `|| (p_h(u) - p).n ||` on the boundary.
    pub flux_normal: f64,
    /// `|| z_h(u) - z ||` on the boundary.
    pub adjoint_trace: f64,
    /// `|| kappa_z (z_h(u) - z) ||` on the boundary.
    pub weighted_adjoint_trace: f64,
    /// `|| pi_h u - u ||` on the boundary.
    pub quasi_interpolation: f64,
}

impl GalerkinDiagnostics {
    /// `|y - y_h(u)|^2 + C (eps |(p_h(u) - p).n|^2 + |kappa_z (z_h(u) - z)|^2)`.
    pub fn bound(&self, epsilon: f64, c: f64) -> f64 {
        self.state.powi(2)
            + c * (epsilon * self.flux_normal.powi(2) + self.weighted_adjoint_trace.powi(2))
    }
}

pub fn galerkin_diagnostics(case: &ManufacturedCase, disc: &Discretization) -> Result<GalerkinDiagnostics> {
    let mesh = disc.mesh();
    let state = disc.solve_state(ControlInput::Function(&*case.u), true)?;
    let y = Arc::clone(&case.y);
    let yd = Arc::clone(&case.yd);
    let moments = assemble_load(mesh, &move |x| y(x) - yd(x))?;
    let adj = disc.solve_adjoint(&moments)?;
    let edges = mesh.boundary_edges();
    let flux = disc.flux();
    let data = disc.data();
    let weighted = error_l2_boundary(
        &|slot, t| {
            let x = mesh.edge_point(edges[slot], t);
            let zh = adj.potential.trace(mesh, edges[slot], 0, t).expect("first side")[0];
            flux.kappa_at(mesh, data, slot, x) * (zh - (case.z)(x))
        },
        &|_| 0.0,
        mesh,
    )?;
    let pi = quasi_interpolate(&*case.u, mesh)?;
    Ok(GalerkinDiagnostics {
        elements: mesh.num_elements(),
        state: error_l2_domain(&state.potential, &*case.y, mesh)?,
        flux_normal: error_flux_normal_boundary(&adj.flux, &*case.grad_z, case.epsilon, mesh)?,
        adjoint_trace: error_trace_boundary(&adj.potential, &*case.z, mesh)?,
        weighted_adjoint_trace: weighted,
        quasi_interpolation: error_l2_boundary(&|s, t| pi.boundary_at(s, t), &*case.u, mesh)?,
    })
}
