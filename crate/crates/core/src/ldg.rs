//! Numerical fluxes, assembly of the LDG forms, and state/adjoint solves.
//!
//! Matrices are stored with the test function as row index:
//! `A[r, q] = a_h(q, r)`, `B[r, y] = b_h(y, r)`, `C[v, y] = c_h(y, v)`,
//! `M1[u, r] = m_h1(u, r)`, `M2[u, v] = m_h2(u, v)`.
//! The forward system reads `[A B; -B^T C] [q; y] = [M1^T u; M2^T u + F]`
//! and the adjoint system is its transpose.

use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{classify_boundary_edges, dot, EdgeClassification, Mesh, Point};
use crate::linsolve::{LuFactorization, SparseMatrix, TripletList};
use crate::quadrature::{edge_rule, triangle_rule};
use crate::spaces::{
    boundary_dof, scalar_dof, vector_dof, DiscreteField, DofMap, ElementGeometry, SpaceKind,
};

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;

/// Volume quadrature for bilinear forms with variable coefficients.
pub const FORM_DEGREE: usize = 4;
/// Volume quadrature for loads of analytic data.
pub const LOAD_DEGREE: usize = 6;
/// Edge quadrature for bilinear forms (three Gauss points).
pub const EDGE_DEGREE: usize = 4;
/// Edge quadrature for analytic boundary data.
pub const BOUNDARY_LOAD_DEGREE: usize = 9;

pub const DEFAULT_C12_DIRECTION: Point = [1.0, std::f64::consts::PI / 1000.0];

/// Coefficients and data of the control problem.
#[derive(Clone)]
pub struct ProblemData {
    pub epsilon: f64,
    pub omega: f64,
    pub beta: VectorFn,
    pub alpha: ScalarFn,
    pub f: ScalarFn,
    pub yd: ScalarFn,
    pub ua: f64,
    pub ub: f64,
    pub c12_direction: Point,
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("epsilon", &self.epsilon)
            .field("omega", &self.omega)
            .field("ua", &self.ua)
            .field("ub", &self.ub)
            .field("c12_direction", &self.c12_direction)
            .finish_non_exhaustive()
    }
}

impl ProblemData {
    /// Pure diffusion with zero data and no bounds.
    pub fn new(epsilon: f64, omega: f64) -> Self {
        Self {
            epsilon,
            omega,
            beta: Arc::new(|_| [0.0, 0.0]),
            alpha: Arc::new(|_| 0.0),
            f: Arc::new(|_| 0.0),
            yd: Arc::new(|_| 0.0),
            ua: f64::NEG_INFINITY,
            ub: f64::INFINITY,
            c12_direction: DEFAULT_C12_DIRECTION,
        }
    }

    pub fn with_constant_beta(mut self, beta: Point) -> Self {
        self.beta = Arc::new(move |_| beta);
        self
    }

    pub fn with_beta(mut self, beta: impl Fn(Point) -> Point + Send + Sync + 'static) -> Self {
        self.beta = Arc::new(beta);
        self
    }

    pub fn with_constant_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Arc::new(move |_| alpha);
        self
    }

    pub fn with_alpha(mut self, alpha: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.alpha = Arc::new(alpha);
        self
    }

    pub fn with_source(mut self, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.f = Arc::new(f);
        self
    }

    pub fn with_desired_state(mut self, yd: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.yd = Arc::new(yd);
        self
    }

    pub fn with_bounds(mut self, ua: f64, ub: f64) -> Self {
        self.ua = ua;
        self.ub = ub;
        self
    }

    pub fn with_c12_direction(mut self, v: Point) -> Self {
        self.c12_direction = v;
        self
    }

    pub fn sqrt_epsilon(&self) -> f64 {
        self.epsilon.sqrt()
    }

    pub fn is_constrained(&self) -> bool {
        self.ua.is_finite() || self.ub.is_finite()
    }

    /// Checks parameter ranges and samples `div beta = 0` and `alpha >= 0`
    /// at random interior points of `mesh`.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidData(format!("epsilon = {}", self.epsilon)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidData(format!("omega = {}", self.omega)));
        }
        if self.ua.is_nan() || self.ub.is_nan() || self.ua > self.ub {
            return Err(Error::InvalidData(format!(
                "bounds [{}, {}]",
                self.ua, self.ub
            )));
        }
        if self.c12_direction == [0.0, 0.0] {
            return Err(Error::InvalidData("C12 direction must be nonzero".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x1d9);
        let step = 1e-5;
        for _ in 0..64 {
            let k = rng.gen_range(0..mesh.num_elements());
            let (a, b): (f64, f64) = (rng.gen_range(0.05..0.9), rng.gen_range(0.05..0.9));
            let (a, b) = if a + b > 0.95 { (0.95 - b, 0.95 - a) } else { (a, b) };
            let g = ElementGeometry::new(mesh, k);
            let (x, _) = g.map([a, b]);
            let bx = |dx: f64, dy: f64| (self.beta)([x[0] + dx, x[1] + dy]);
            let div = (bx(step, 0.0)[0] - bx(-step, 0.0)[0] + bx(0.0, step)[1] - bx(0.0, -step)[1])
                / (2.0 * step);
            if div.abs() > 1e-8 {
                return Err(Error::InvalidData(format!(
                    "velocity field is not divergence free at {x:?} (div = {div:.3e})"
                )));
            }
            let alpha = (self.alpha)(x);
            if !(alpha >= 0.0) {
                return Err(Error::InvalidData(format!("alpha = {alpha} at {x:?}")));
            }
        }
        Ok(())
    }
}

/// Sign of the penalty contribution `gamma = -/+ eps^(1/2) C11` in `c_h`,
/// `m_h2` and `kappa_z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltyConvention {
    /// `gamma = -eps^(1/2) C11`.
    #[default]
    Negative,
    /// `gamma = +eps^(1/2) C11`.
    Positive,
}

impl PenaltyConvention {
    pub fn sign(self) -> f64 {
        match self {
            PenaltyConvention::Negative => -1.0,
            PenaltyConvention::Positive => 1.0,
        }
    }
}

#[inline]
fn half_sign(x: f64) -> f64 {
    if x >= 0.0 {
        0.5
    } else {
        -0.5
    }
}

/// Per-edge flux coefficients. Signed quantities refer to the normal of the
/// edge's first side.
#[derive(Debug, Clone)]
pub struct FluxParameters {
    pub c11: Vec<f64>,
    pub c12n: Vec<f64>,
    /// `D11 . n` at the edge midpoint.
    pub d11n: Vec<f64>,
    /// Penalty coefficient `gamma` per edge.
    pub penalty: Vec<f64>,
    /// `kappa_z` per boundary slot at the edge midpoint.
    pub kappa: Vec<f64>,
    pub classification: EdgeClassification,
    pub convention: PenaltyConvention,
}

impl FluxParameters {
    /// `kappa_z` at a point of boundary slot `slot`.
    pub fn kappa_at(&self, mesh: &Mesh, data: &ProblemData, slot: usize, x: Point) -> f64 {
        let e = mesh.boundary_edges()[slot];
        let mut k = self.penalty[e];
        if self.classification.is_inflow(slot) {
            k += dot((data.beta)(x), mesh.edge(e).normal).abs();
        }
        k
    }
}

pub fn compute_flux_parameters(
    mesh: &Mesh,
    data: &ProblemData,
    convention: PenaltyConvention,
) -> FluxParameters {
    let classification = classify_boundary_edges(mesh, |x| (data.beta)(x));
    let se = data.sqrt_epsilon();
    let mut c11 = Vec::with_capacity(mesh.num_edges());
    let mut c12n = Vec::with_capacity(mesh.num_edges());
    let mut d11n = Vec::with_capacity(mesh.num_edges());
    let mut penalty = Vec::with_capacity(mesh.num_edges());
    for (e, edge) in mesh.edges().iter().enumerate() {
        let c = data.epsilon / edge.length;
        c11.push(c);
        c12n.push(half_sign(dot(edge.normal, data.c12_direction)));
        d11n.push(half_sign(dot(edge.normal, (data.beta)(mesh.edge_midpoint(e)))));
        penalty.push(convention.sign() * se * c);
    }
    let mut flux = FluxParameters {
        c11,
        c12n,
        d11n,
        penalty,
        kappa: Vec::new(),
        classification,
        convention,
    };
    flux.kappa = mesh
        .boundary_edges()
        .iter()
        .enumerate()
        .map(|(s, &e)| flux.kappa_at(mesh, data, s, mesh.edge_midpoint(e)))
        .collect();
    flux
}

/// How the control enters the discrete system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlSpace {
    /// Edgewise P1 control with two nodal DOFs per boundary edge.
    #[default]
    Full,
    /// Control values at the boundary Gauss points of every edge.
    Variational,
}

/// A boundary Gauss point carrying a variational control value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub slot: usize,
    pub t: f64,
    pub weight: f64,
}

/// Control-dependent blocks.
#[derive(Debug, Clone)]
pub struct ControlCoupling {
    pub space: ControlSpace,
    /// `U x W`.
    pub m1: SparseMatrix,
    /// `U x V`.
    pub m2: SparseMatrix,
    /// Boundary mass on the control space.
    pub mass: SparseMatrix,
    /// Row sums of `mass`.
    pub lumped: Vec<f64>,
    /// Gauss points of the variational space (empty in full mode).
    pub points: Vec<BoundaryPoint>,
}

impl ControlCoupling {
    pub fn len(&self) -> usize {
        self.lumped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lumped.is_empty()
    }

    /// Boundary position of every control DOF as `(slot, t)`.
    pub fn dof_positions(&self) -> Vec<(usize, f64)> {
        match self.space {
            ControlSpace::Full => (0..self.len())
                .map(|i| (i / 2, (i % 2) as f64))
                .collect(),
            ControlSpace::Variational => self.points.iter().map(|p| (p.slot, p.t)).collect(),
        }
    }
}

/// All assembled matrices and loads on one mesh.
#[derive(Debug, Clone)]
pub struct BlockOperator {
    pub scalar: DofMap,
    pub vector: DofMap,
    pub boundary: DofMap,
    /// `W x W` vector mass.
    pub a: SparseMatrix,
    /// `W x V`.
    pub b: SparseMatrix,
    /// `V x V`.
    pub c: SparseMatrix,
    pub control: ControlCoupling,
    pub load: Vec<f64>,
    /// `(y^d, v)` for every scalar basis function.
    pub desired: Vec<f64>,
    pub mass_omega: SparseMatrix,
}

/// Which of the two equivalent expressions of `b_h` to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientForm {
    /// Volume term `eps^(1/2) grad y . r`.
    IntegratedByParts,
    /// Volume term `-eps^(1/2) y div r`.
    Divergence,
}

// local basis values on side `side` of `edge` at edge parameter t
fn side_basis(mesh: &Mesh, e: usize, side: usize, t: f64) -> (usize, [f64; 3]) {
    let s = mesh.edge(e).side(side).expect("side exists");
    let mut l = [0.0; 3];
    l[s.nodes[0]] = 1.0 - t;
    l[s.nodes[1]] = t;
    (s.element, l)
}

pub fn assemble_b(mesh: &Mesh, data: &ProblemData, flux: &FluxParameters, form: GradientForm) -> Result<SparseMatrix> {
    let m = mesh.num_elements();
    let se = data.sqrt_epsilon();
    let mut t = TripletList::with_capacity(6 * m, 3 * m, 60 * m);
    for k in 0..m {
        let g = ElementGeometry::new(mesh, k);
        for c in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    let v = match form {
                        // grad(lambda_j)_c * int lambda_i
                        GradientForm::IntegratedByParts => se * g.grads[j][c] * g.area / 3.0,
                        // -int lambda_j d_c(lambda_i)
                        GradientForm::Divergence => -se * g.grads[i][c] * g.area / 3.0,
                    };
                    t.push(vector_dof(k, c, i), scalar_dof(k, j), v);
                }
            }
        }
    }
    let rule = edge_rule(EDGE_DEGREE)?;
    for &e in mesh.interior_edges() {
        let edge = mesh.edge(e);
        let n = edge.normal;
        let s12 = flux.c12n[e];
        for (r, w) in rule.iter() {
            let w = w * edge.length;
            let sides = [side_basis(mesh, e, 0, r[0]), side_basis(mesh, e, 1, r[0])];
            for (a, (ka, la)) in sides.iter().enumerate() {
                for (b, (kb, lb)) in sides.iter().enumerate() {
                    let sign = |s: usize| if s == 0 { 1.0 } else { -1.0 };
                    let coef = match form {
                        // -({r} - C12[r]).[y]: r side weight, y side sign
                        GradientForm::IntegratedByParts => {
                            let ca = if a == 0 { 0.5 - s12 } else { 0.5 + s12 };
                            -se * ca * sign(b)
                        }
                        // ({y} + C12.[y]) [r]: y side weight, r side sign
                        GradientForm::Divergence => {
                            let cb = if b == 0 { 0.5 + s12 } else { 0.5 - s12 };
                            se * cb * sign(a)
                        }
                    };
                    for c in 0..2 {
                        for i in 0..3 {
                            if la[i] == 0.0 {
                                continue;
                            }
                            for j in 0..3 {
                                if lb[j] == 0.0 {
                                    continue;
                                }
                                t.push(
                                    vector_dof(*ka, c, i),
                                    scalar_dof(*kb, j),
                                    w * coef * n[c] * la[i] * lb[j],
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    if form == GradientForm::IntegratedByParts {
        for &e in mesh.boundary_edges() {
            let edge = mesh.edge(e);
            let n = edge.normal;
            for (r, w) in rule.iter() {
                let w = w * edge.length;
                let (k, l) = side_basis(mesh, e, 0, r[0]);
                for c in 0..2 {
                    for i in 0..3 {
                        for j in 0..3 {
                            let v = -se * w * n[c] * l[i] * l[j];
                            if v != 0.0 {
                                t.push(vector_dof(k, c, i), scalar_dof(k, j), v);
                            }
                        }
                    }
                }
            }
        }
    }
    t.finalize()
}

fn assemble_c(mesh: &Mesh, data: &ProblemData, flux: &FluxParameters) -> Result<SparseMatrix> {
    let m = mesh.num_elements();
    let mut t = TripletList::with_capacity(3 * m, 3 * m, 40 * m);
    let vol = triangle_rule(FORM_DEGREE)?;
    for k in 0..m {
        let g = ElementGeometry::new(mesh, k);
        let mut local = [[0.0; 3]; 3];
        for (x, l, w) in g.quadrature(&vol) {
            let alpha = (data.alpha)(x);
            let beta = (data.beta)(x);
            for i in 0..3 {
                let bg = dot(beta, g.grads[i]);
                for j in 0..3 {
                    local[i][j] += w * (alpha * l[i] * l[j] - l[j] * bg);
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                t.push(scalar_dof(k, i), scalar_dof(k, j), local[i][j]);
            }
        }
    }
    let rule = edge_rule(EDGE_DEGREE)?;
    for &e in mesh.interior_edges() {
        let edge = mesh.edge(e);
        let gamma = flux.penalty[e];
        for (r, w) in rule.iter() {
            let w = w * edge.length;
            let x = mesh.edge_point(e, r[0]);
            let bn = dot((data.beta)(x), edge.normal);
            let d11 = half_sign(bn);
            let sides = [side_basis(mesh, e, 0, r[0]), side_basis(mesh, e, 1, r[0])];
            let sign = |s: usize| if s == 0 { 1.0 } else { -1.0 };
            for (a, (ka, la)) in sides.iter().enumerate() {
                for (b, (kb, lb)) in sides.iter().enumerate() {
                    // ({y} + D11.[y]) beta.[v] + gamma [y].[v]
                    let cy = if b == 0 { 0.5 + d11 } else { 0.5 - d11 };
                    let coef = bn * cy * sign(a) + gamma * sign(a) * sign(b);
                    for i in 0..3 {
                        if la[i] == 0.0 {
                            continue;
                        }
                        for j in 0..3 {
                            if lb[j] == 0.0 {
                                continue;
                            }
                            t.push(scalar_dof(*ka, i), scalar_dof(*kb, j), w * coef * la[i] * lb[j]);
                        }
                    }
                }
            }
        }
    }
    for (slot, &e) in mesh.boundary_edges().iter().enumerate() {
        let edge = mesh.edge(e);
        let outflow = !flux.classification.is_inflow(slot);
        for (r, w) in rule.iter() {
            let w = w * edge.length;
            let x = mesh.edge_point(e, r[0]);
            let mut coef = flux.penalty[e];
            if outflow {
                coef += dot((data.beta)(x), edge.normal);
            }
            let (k, l) = side_basis(mesh, e, 0, r[0]);
            for i in 0..3 {
                for j in 0..3 {
                    let v = w * coef * l[i] * l[j];
                    if v != 0.0 {
                        t.push(scalar_dof(k, i), scalar_dof(k, j), v);
                    }
                }
            }
        }
    }
    t.finalize()
}

fn assemble_masses(mesh: &Mesh) -> Result<(SparseMatrix, SparseMatrix)> {
    let m = mesh.num_elements();
    let mut a = TripletList::with_capacity(6 * m, 6 * m, 18 * m);
    let mut mo = TripletList::with_capacity(3 * m, 3 * m, 9 * m);
    for k in 0..m {
        let area = mesh.area(k);
        for i in 0..3 {
            for j in 0..3 {
                let v = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                mo.push(scalar_dof(k, i), scalar_dof(k, j), v);
                for c in 0..2 {
                    a.push(vector_dof(k, c, i), vector_dof(k, c, j), v);
                }
            }
        }
    }
    Ok((a.finalize()?, mo.finalize()?))
}

/// `(g, v)` for every scalar basis function, by degree-6 quadrature.
pub fn assemble_load(mesh: &Mesh, g: &dyn Fn(Point) -> f64) -> Result<Vec<f64>> {
    let rule = triangle_rule(LOAD_DEGREE)?;
    let mut out = vec![0.0; 3 * mesh.num_elements()];
    for k in 0..mesh.num_elements() {
        let geo = ElementGeometry::new(mesh, k);
        for (x, l, w) in geo.quadrature(&rule) {
            let v = g(x);
            for i in 0..3 {
                out[3 * k + i] += w * v * l[i];
            }
        }
    }
    Ok(out)
}

pub fn assemble_control_coupling(
    mesh: &Mesh,
    data: &ProblemData,
    flux: &FluxParameters,
    space: ControlSpace,
) -> Result<ControlCoupling> {
    let se = data.sqrt_epsilon();
    let rule = edge_rule(EDGE_DEGREE)?;
    let nb = mesh.boundary_edges().len();
    let nu = match space {
        ControlSpace::Full => 2 * nb,
        ControlSpace::Variational => rule.len() * nb,
    };
    let m = mesh.num_elements();
    let mut m1 = TripletList::new(nu, 6 * m);
    let mut m2 = TripletList::new(nu, 3 * m);
    let mut mass = TripletList::new(nu, nu);
    let mut points = Vec::new();
    for (slot, &e) in mesh.boundary_edges().iter().enumerate() {
        let edge = mesh.edge(e);
        let n = edge.normal;
        for (q, (r, w)) in rule.iter().enumerate() {
            let t = r[0];
            let w = w * edge.length;
            let x = mesh.edge_point(e, t);
            let kappa = flux.kappa_at(mesh, data, slot, x);
            let (k, l) = side_basis(mesh, e, 0, t);
            let controls: Vec<(usize, f64)> = match space {
                ControlSpace::Full => vec![
                    (boundary_dof(slot, 0), 1.0 - t),
                    (boundary_dof(slot, 1), t),
                ],
                ControlSpace::Variational => {
                    points.push(BoundaryPoint {
                        slot,
                        t,
                        weight: w,
                    });
                    vec![(slot * rule.len() + q, 1.0)]
                }
            };
            for &(u, psi) in &controls {
                for i in 0..3 {
                    if l[i] == 0.0 {
                        continue;
                    }
                    for c in 0..2 {
                        m1.push(u, vector_dof(k, c, i), -se * w * psi * n[c] * l[i]);
                    }
                    m2.push(u, scalar_dof(k, i), w * kappa * psi * l[i]);
                }
                for &(u2, psi2) in &controls {
                    mass.push(u, u2, w * psi * psi2);
                }
            }
        }
    }
    let mass = mass.finalize()?;
    let lumped = (0..nu).map(|i| mass.row(i).map(|(_, v)| v).sum()).collect();
    Ok(ControlCoupling {
        space,
        m1: m1.finalize()?,
        m2: m2.finalize()?,
        mass,
        lumped,
        points,
    })
}

pub fn assemble_forms(
    mesh: &Mesh,
    data: &ProblemData,
    flux: &FluxParameters,
    space: ControlSpace,
) -> Result<BlockOperator> {
    if flux.c11.len() != mesh.num_edges() {
        return Err(Error::DimensionMismatch(format!(
            "flux parameters for {} edges on a mesh with {}",
            flux.c11.len(),
            mesh.num_edges()
        )));
    }
    let (a, mass_omega) = assemble_masses(mesh)?;
    Ok(BlockOperator {
        scalar: DofMap::new(mesh, SpaceKind::Scalar),
        vector: DofMap::new(mesh, SpaceKind::Vector),
        boundary: DofMap::new(mesh, SpaceKind::Boundary),
        a,
        b: assemble_b(mesh, data, flux, GradientForm::IntegratedByParts)?,
        c: assemble_c(mesh, data, flux)?,
        control: assemble_control_coupling(mesh, data, flux, space)?,
        load: assemble_load(mesh, &*data.f)?,
        desired: assemble_load(mesh, &*data.yd)?,
        mass_omega,
    })
}

/// Boundary control data for a state solve.
#[derive(Clone, Copy)]
pub enum ControlInput<'a> {
    /// Coefficients in the control space of the operator.
    Coefficients(&'a [f64]),
    /// Analytic boundary function, integrated directly.
    Function(&'a dyn Fn(Point) -> f64),
}

/// Solution of the forward or adjoint system.
#[derive(Debug, Clone)]
pub struct StatePair {
    /// Scalar potential (`y_h` or `z_h`).
    pub potential: DiscreteField,
    /// Vector flux (`q_h` or `p_h`).
    pub flux: DiscreteField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DiscretizationOptions {
    pub penalty: PenaltyConvention,
    pub control_space: ControlSpace,
}

/// Mesh, data and assembled operator, with the flux unknowns eliminated
/// elementwise: `K = B^T A^-1 B + C` and `G = B^T A^-1 M1^T + M2^T`, so that
/// the forward problem reads `K y = G u + F`.
pub struct Discretization {
    mesh: Arc<Mesh>,
    data: ProblemData,
    flux: FluxParameters,
    ops: BlockOperator,
    options: DiscretizationOptions,
    a_inv: SparseMatrix,
    /// `A^-1 B`.
    a_inv_b: SparseMatrix,
    k: SparseMatrix,
    g: SparseMatrix,
    lu: OnceLock<std::result::Result<LuFactorization, String>>,
}

impl std::fmt::Debug for Discretization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Discretization")
            .field("elements", &self.mesh.num_elements())
            .field("options", &self.options)
            .finish_non_exhaustive()
    }
}

// inverse of the vector mass matrix, 3x3 blocks (3/|K|)[[3,-1,-1],...]
fn inverse_vector_mass(mesh: &Mesh) -> Result<SparseMatrix> {
    let m = mesh.num_elements();
    let mut t = TripletList::with_capacity(6 * m, 6 * m, 18 * m);
    for k in 0..m {
        let s = 3.0 / mesh.area(k);
        for c in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    let v = if i == j { 3.0 } else { -1.0 };
                    t.push(vector_dof(k, c, i), vector_dof(k, c, j), s * v);
                }
            }
        }
    }
    t.finalize()
}

impl Discretization {
    pub fn new(mesh: impl Into<Arc<Mesh>>, data: ProblemData, options: DiscretizationOptions) -> Result<Self> {
        let mesh = mesh.into();
        data.validate(&mesh)?;
        let flux = compute_flux_parameters(&mesh, &data, options.penalty);
        let ops = assemble_forms(&mesh, &data, &flux, options.control_space)?;
        let a_inv = inverse_vector_mass(&mesh)?;
        let a_inv_b = a_inv.matmul(&ops.b)?;
        let bt = ops.b.transpose();
        let k = bt.matmul(&a_inv_b)?.combine(1.0, &ops.c, 1.0)?;
        let a_inv_m1t = a_inv.matmul(&ops.control.m1.transpose())?;
        let g = bt
            .matmul(&a_inv_m1t)?
            .combine(1.0, &ops.control.m2.transpose(), 1.0)?;
        Ok(Self {
            mesh,
            data,
            flux,
            ops,
            options,
            a_inv,
            a_inv_b,
            k,
            g,
            lu: OnceLock::new(),
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }

    pub fn data(&self) -> &ProblemData {
        &self.data
    }

    pub fn flux(&self) -> &FluxParameters {
        &self.flux
    }

    pub fn ops(&self) -> &BlockOperator {
        &self.ops
    }

    pub fn options(&self) -> DiscretizationOptions {
        self.options
    }

    /// Condensed primal operator `K`.
    pub fn primal_operator(&self) -> &SparseMatrix {
        &self.k
    }

    /// Condensed control operator `G` (`V x U`).
    pub fn control_operator(&self) -> &SparseMatrix {
        &self.g
    }

    fn factorization(&self) -> Result<&LuFactorization> {
        match self.lu.get_or_init(|| LuFactorization::new(&self.k).map_err(|e| e.to_string())) {
            Ok(lu) => Ok(lu),
            Err(msg) => Err(Error::InvalidData(format!("primal operator: {msg}"))),
        }
    }

    /// `(m_h1(u, .), m_h2(u, .))` as vectors over `W` and `V`.
    pub fn control_load(&self, u: ControlInput<'_>) -> Result<(Vec<f64>, Vec<f64>)> {
        match u {
            ControlInput::Coefficients(c) => {
                if c.len() != self.ops.control.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} control values for {} control DOFs",
                        c.len(),
                        self.ops.control.len()
                    )));
                }
                Ok((
                    self.ops.control.m1.transpose_matvec(c),
                    self.ops.control.m2.transpose_matvec(c),
                ))
            }
            ControlInput::Function(f) => {
                let mesh = &*self.mesh;
                let se = self.data.sqrt_epsilon();
                let rule = edge_rule(BOUNDARY_LOAD_DEGREE)?;
                let mut lw = vec![0.0; self.ops.vector.num_dofs()];
                let mut lv = vec![0.0; self.ops.scalar.num_dofs()];
                for (slot, &e) in mesh.boundary_edges().iter().enumerate() {
                    let edge = mesh.edge(e);
                    for (r, w) in rule.iter() {
                        let w = w * edge.length;
                        let x = mesh.edge_point(e, r[0]);
                        let u = f(x);
                        let kappa = self.flux.kappa_at(mesh, &self.data, slot, x);
                        let (k, l) = side_basis(mesh, e, 0, r[0]);
                        for i in 0..3 {
                            for c in 0..2 {
                                lw[vector_dof(k, c, i)] += -se * w * u * edge.normal[c] * l[i];
                            }
                            lv[scalar_dof(k, i)] += w * kappa * u * l[i];
                        }
                    }
                }
                Ok((lw, lv))
            }
        }
    }

    /// Solves `[A B; -B^T C] [q; y] = [lw; lv]`.
    pub fn solve_forward(&self, lw: &[f64], lv: &[f64]) -> Result<StatePair> {
        let shift = self.a_inv_b.transpose_matvec(lw);
        let rhs: Vec<f64> = lv.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let y = self.factorization()?.solve(&rhs)?;
        let by = self.ops.b.matvec(&y);
        let diff: Vec<f64> = lw.iter().zip(&by).map(|(a, b)| a - b).collect();
        let q = self.a_inv.matvec(&diff);
        Ok(StatePair {
            potential: DiscreteField::from_values(self.ops.scalar, y)?,
            flux: DiscreteField::from_values(self.ops.vector, q)?,
        })
    }

    /// Solves `[A -B; B^T C^T] [p; z] = [gw; gv]`.
    pub fn solve_adjoint_system(&self, gw: &[f64], gv: &[f64]) -> Result<StatePair> {
        let shift = self.a_inv_b.transpose_matvec(gw);
        let rhs: Vec<f64> = gv.iter().zip(&shift).map(|(a, b)| a - b).collect();
        let z = self.factorization()?.solve_transposed(&rhs)?;
        let bz = self.ops.b.matvec(&z);
        let sum: Vec<f64> = gw.iter().zip(&bz).map(|(a, b)| a + b).collect();
        let p = self.a_inv.matvec(&sum);
        Ok(StatePair {
            potential: DiscreteField::from_values(self.ops.scalar, z)?,
            flux: DiscreteField::from_values(self.ops.vector, p)?,
        })
    }

    /// State `(y_h, q_h)` for control `u`, with or without the source `f`.
    pub fn solve_state(&self, u: ControlInput<'_>, with_source: bool) -> Result<StatePair> {
        let (lw, mut lv) = self.control_load(u)?;
        if with_source {
            for (a, f) in lv.iter_mut().zip(&self.ops.load) {
                *a += f;
            }
        }
        self.solve_forward(&lw, &lv)
    }

    /// Adjoint `(z_h, p_h)` for the right-hand side `(g, phi)`, given as a
    /// vector of moments against the scalar basis.
    pub fn solve_adjoint(&self, moments: &[f64]) -> Result<StatePair> {
        let zero = vec![0.0; self.ops.vector.num_dofs()];
        self.solve_adjoint_system(&zero, moments)
    }

    /// Adjoint for `g = y_h - y^d`.
    pub fn solve_adjoint_for_state(&self, y: &DiscreteField) -> Result<StatePair> {
        let my = self.ops.mass_omega.matvec(y.values());
        let rhs: Vec<f64> = my.iter().zip(&self.ops.desired).map(|(a, b)| a - b).collect();
        self.solve_adjoint(&rhs)
    }

    /// Flux `q = A^-1 (M1^T u - B y)` belonging to potential `y` and control `u`.
    pub fn state_flux(&self, y: &[f64], u: &[f64]) -> Vec<f64> {
        let lw = self.ops.control.m1.transpose_matvec(u);
        let by = self.ops.b.matvec(y);
        let diff: Vec<f64> = lw.iter().zip(&by).map(|(a, b)| a - b).collect();
        self.a_inv.matvec(&diff)
    }

    /// Adjoint flux `p = A^-1 B z`.
    pub fn adjoint_flux(&self, z: &[f64]) -> Vec<f64> {
        self.a_inv_b.matvec(z)
    }

    /// Residual of the full block forward system, relative to the right-hand side.
    pub fn forward_residual(&self, pair: &StatePair, lw: &[f64], lv: &[f64]) -> f64 {
        let (q, y) = (pair.flux.values(), pair.potential.values());
        let aq = self.ops.a.matvec(q);
        let by = self.ops.b.matvec(y);
        let btq = self.ops.b.transpose_matvec(q);
        let cy = self.ops.c.matvec(y);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..lw.len() {
            num += (aq[i] + by[i] - lw[i]).powi(2);
            den += lw[i] * lw[i];
        }
        for i in 0..lv.len() {
            num += (cy[i] - btq[i] - lv[i]).powi(2);
            den += lv[i] * lv[i];
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_unit_square_mesh;
    use crate::spaces::{l2_project, Pointwise};

    fn example_data(eps: f64) -> ProblemData {
        ProblemData::new(eps, 1.0)
            .with_constant_beta([1.0, 1.0])
            .with_constant_alpha(1.0)
    }

    #[test]
    fn flux_parameter_examples() {
        let mesh = build_unit_square_mesh(4).unwrap();
        let data = example_data(1.0);
        let flux = compute_flux_parameters(&mesh, &data, PenaltyConvention::Negative);
        for (s, &e) in mesh.boundary_edges().iter().enumerate() {
            assert!((flux.c11[e] - 4.0).abs() < 1e-12);
            assert_eq!(flux.c11[e] * mesh.edge(e).length, 1.0);
            let n = mesh.edge(e).normal;
            if n[1] < -0.5 {
                assert!(flux.classification.is_inflow(s));
                assert!((flux.kappa[s] + 3.0).abs() < 1e-12);
            }
            if n[0] > 0.5 {
                assert!((flux.kappa[s] + 4.0).abs() < 1e-12);
            }
        }
        for &e in mesh.interior_edges() {
            assert_eq!(flux.c12n[e].abs(), 0.5);
            assert_eq!(flux.d11n[e].abs(), 0.5);
        }
        let stab = compute_flux_parameters(&mesh, &data, PenaltyConvention::Positive);
        let s = mesh.boundary_edges().iter().position(|&e| mesh.edge(e).normal[1] < -0.5).unwrap();
        assert!((stab.kappa[s] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn tie_conventions() {
        let mesh = build_unit_square_mesh(2).unwrap();
        let data = ProblemData::new(1.0, 1.0)
            .with_constant_beta([1.0, 0.0])
            .with_c12_direction([1.0, 0.0]);
        let flux = compute_flux_parameters(&mesh, &data, PenaltyConvention::Negative);
        for &e in mesh.interior_edges() {
            let n = mesh.edge(e).normal;
            if n[0].abs() < 1e-14 {
                assert_eq!(flux.c12n[e], 0.5);
                assert_eq!(flux.d11n[e], 0.5);
            }
        }
    }

    #[test]
    fn validation() {
        let mesh = build_unit_square_mesh(2).unwrap();
        assert!(ProblemData::new(0.0, 1.0).validate(&mesh).is_err());
        assert!(ProblemData::new(1.0, -1.0).validate(&mesh).is_err());
        assert!(ProblemData::new(1.0, 1.0).with_bounds(1.0, 0.0).validate(&mesh).is_err());
        let compressible = ProblemData::new(1.0, 1.0).with_beta(|x| [x[0], 0.0]);
        assert!(compressible.validate(&mesh).is_err());
        let rotation = ProblemData::new(1.0, 1.0).with_beta(|x| [-x[1], x[0]]);
        assert!(rotation.validate(&mesh).is_ok());
    }

    #[test]
    fn mass_of_constants() {
        let mesh = build_unit_square_mesh(3).unwrap();
        let ops = assemble_forms(
            &mesh,
            &example_data(1.0),
            &compute_flux_parameters(&mesh, &example_data(1.0), PenaltyConvention::Negative),
            ControlSpace::Full,
        )
        .unwrap();
        let ones = vec![1.0; ops.vector.num_dofs()];
        assert!((ops.a.bilinear(&ones, &ones) - 2.0).abs() < 1e-12);
        assert_eq!(ops.a, ops.a.transpose());
    }

    #[test]
    fn single_triangle_reaction_mass() {
        let mesh = Mesh::from_triangles(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let data = ProblemData::new(1.0, 1.0).with_constant_alpha(1.0);
        let flux = compute_flux_parameters(&mesh, &data, PenaltyConvention::Negative);
        let c = assemble_c(&mesh, &data, &flux).unwrap();
        let penalty: f64 = mesh.edges().iter().enumerate().map(|(e, ed)| flux.penalty[e] * ed.length).sum();
        let ones = [1.0; 3];
        // volume term is the area; boundary penalty adds gamma * |E| per edge
        assert!((c.bilinear(&ones, &ones) - penalty - 0.5).abs() < 1e-13);
    }

    #[test]
    fn gradient_forms_agree() {
        let mesh = build_unit_square_mesh(4).unwrap();
        let data = example_data(0.3);
        let flux = compute_flux_parameters(&mesh, &data, PenaltyConvention::Negative);
        let b1 = assemble_b(&mesh, &data, &flux, GradientForm::IntegratedByParts).unwrap();
        let b2 = assemble_b(&mesh, &data, &flux, GradientForm::Divergence).unwrap();
        let diff = b1.combine(1.0, &b2, -1.0).unwrap();
        let max = diff.iter().map(|(_, _, v)| v.abs()).fold(0.0, f64::max);
        assert!(max < 1e-12, "max entry difference {max}");
    }

    #[test]
    fn epsilon_scaling() {
        let mesh = build_unit_square_mesh(2).unwrap();
        let d1 = example_data(0.5);
        let d4 = example_data(2.0);
        let f1 = compute_flux_parameters(&mesh, &d1, PenaltyConvention::Negative);
        let f4 = compute_flux_parameters(&mesh, &d4, PenaltyConvention::Negative);
        for e in 0..mesh.num_edges() {
            assert_eq!(f4.c11[e], 4.0 * f1.c11[e]);
        }
        let c1 = assemble_control_coupling(&mesh, &d1, &f1, ControlSpace::Full).unwrap();
        let c4 = assemble_control_coupling(&mesh, &d4, &f4, ControlSpace::Full).unwrap();
        for ((i, j, a), (i2, j2, b)) in c1.m1.iter().zip(c4.m1.iter()) {
            assert_eq!((i, j), (i2, j2));
            assert!((b - 2.0 * a).abs() <= 1e-15 * a.abs());
        }
    }

    fn linear_consistency(convention: PenaltyConvention, n: usize) {
        let mesh = build_unit_square_mesh(n).unwrap();
        let data = example_data(1.0).with_source(|x| 1.0 + x[0]);
        let disc = Discretization::new(
            mesh,
            data,
            DiscretizationOptions {
                penalty: convention,
                control_space: ControlSpace::Full,
            },
        )
        .unwrap();
        let exact = |x: Point| x[0];
        let sol = disc.solve_state(ControlInput::Function(&exact), true).unwrap();
        let m = disc.mesh();
        let yp = l2_project(Pointwise::Scalar(&exact), disc.ops().scalar, m).unwrap();
        let qp = l2_project(Pointwise::Vector(&|_| [-1.0, 0.0]), disc.ops().vector, m).unwrap();
        for (a, b) in sol.potential.values().iter().zip(yp.values()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        for (a, b) in sol.flux.values().iter().zip(qp.values()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn linear_solutions_are_reproduced() {
        for n in [2, 4, 8] {
            linear_consistency(PenaltyConvention::Negative, n);
            linear_consistency(PenaltyConvention::Positive, n);
        }
    }

    #[test]
    fn homogeneous_problems_have_zero_solutions() {
        let disc = Discretization::new(
            build_unit_square_mesh(2).unwrap(),
            example_data(1.0),
            DiscretizationOptions::default(),
        )
        .unwrap();
        let u = vec![0.0; disc.ops().control.len()];
        let s = disc.solve_state(ControlInput::Coefficients(&u), true).unwrap();
        assert!(s.potential.values().iter().all(|&v| v == 0.0));
        assert!(s.flux.values().iter().all(|&v| v == 0.0));
        let a = disc.solve_adjoint(&vec![0.0; disc.ops().scalar.num_dofs()]).unwrap();
        assert!(a.potential.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn condensed_solve_satisfies_block_system() {
        let disc = Discretization::new(
            build_unit_square_mesh(4).unwrap(),
            example_data(0.01).with_source(|x| (3.0 * x[0]).sin()),
            DiscretizationOptions::default(),
        )
        .unwrap();
        let u: Vec<f64> = (0..disc.ops().control.len()).map(|i| (i as f64 * 0.37).cos()).collect();
        let (lw, mut lv) = disc.control_load(ControlInput::Coefficients(&u)).unwrap();
        for (a, f) in lv.iter_mut().zip(&disc.ops().load) {
            *a += f;
        }
        let s = disc.solve_forward(&lw, &lv).unwrap();
        assert!(disc.forward_residual(&s, &lw, &lv) < 1e-10);
    }

    #[test]
    fn discrete_duality() {
        let disc = Discretization::new(
            build_unit_square_mesh(4).unwrap(),
            example_data(1.0),
            DiscretizationOptions::default(),
        )
        .unwrap();
        let ops = disc.ops();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let u: Vec<f64> = (0..ops.control.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g: Vec<f64> = (0..ops.scalar.num_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = disc.solve_state(ControlInput::Coefficients(&u), false).unwrap();
            let adj = disc.solve_adjoint(&ops.mass_omega.matvec(&g)).unwrap();
            let lhs: f64 = ops.control.m1.matvec(adj.flux.values()).iter()
                .zip(ops.control.m2.matvec(adj.potential.values()))
                .zip(&u)
                .map(|((a, b), u)| u * (a + b))
                .sum();
            let rhs = ops.mass_omega.bilinear(&g, y.potential.values());
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs(), "{lhs} vs {rhs}");
        }
    }
}
