//! Admissible projection, quasi-interpolation, reduced cost and gradient, and
//! the primal-dual active set loop.

use crate::error::{Error, Result};
use crate::geometry::{dot, Mesh, Point};
use crate::kkt::{solve_kkt, KktForm};
use crate::ldg::{ControlInput, ControlSpace, Discretization};
use crate::quadrature::{edge_rule, triangle_rule};
use crate::spaces::{normal_trace, DiscreteField, DofMap, ElementGeometry, SpaceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Inactive,
    Lower,
    Upper,
}

/// Status of every control DOF (full mode) or boundary Gauss point
/// (variational mode).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSetState {
    status: Vec<Status>,
    pub iteration: usize,
}

impl ActiveSetState {
    pub fn inactive(n: usize) -> Self {
        Self {
            status: vec![Status::Inactive; n],
            iteration: 0,
        }
    }

    pub fn from_statuses(status: Vec<Status>) -> Self {
        Self {
            status,
            iteration: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.status.len()
    }

    pub fn is_empty(&self) -> bool {
        self.status.is_empty()
    }

    pub fn statuses(&self) -> &[Status] {
        &self.status
    }

    pub fn count(&self, s: Status) -> usize {
        self.status.iter().filter(|&&x| x == s).count()
    }

    /// Number of DOFs whose status differs.
    pub fn changes(&self, other: &ActiveSetState) -> usize {
        self.status
            .iter()
            .zip(&other.status)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn validate(&self, ua: f64, ub: f64) -> Result<()> {
        for (i, s) in self.status.iter().enumerate() {
            match s {
                Status::Lower if !ua.is_finite() => {
                    return Err(Error::InconsistentActiveSet(format!(
                        "DOF {i} lower-active without a finite lower bound"
                    )))
                }
                Status::Upper if !ub.is_finite() => {
                    return Err(Error::InconsistentActiveSet(format!(
                        "DOF {i} upper-active without a finite upper bound"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Active-set prediction from multiplier `mu` and control `u`.
    pub fn predict(mu: &[f64], u: &[f64], ua: f64, ub: f64, c: f64) -> Self {
        let status = mu
            .iter()
            .zip(u)
            .map(|(&m, &v)| {
                if ua.is_finite() && m + c * (v - ua) < 0.0 {
                    Status::Lower
                } else if ub.is_finite() && m + c * (v - ub) > 0.0 {
                    Status::Upper
                } else {
                    Status::Inactive
                }
            })
            .collect();
        Self {
            status,
            iteration: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlMode {
    pub space: ControlSpace,
    /// Active-set penalty constant.
    pub c: f64,
}

impl ControlMode {
    pub fn new(space: ControlSpace, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidData(format!("active-set constant c = {c}")));
        }
        Ok(Self { space, c })
    }

    /// `c = omega`.
    pub fn for_data(space: ControlSpace, omega: f64) -> Self {
        Self { space, c: omega }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PdasOptions {
    pub max_iterations: usize,
    pub form: KktForm,
}

impl Default for PdasOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            form: KktForm::Condensed,
        }
    }
}

/// Converged discrete optimal control with states and adjoints.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub y: DiscreteField,
    pub q: DiscreteField,
    pub z: DiscreteField,
    pub p: DiscreteField,
    /// Control coefficients: nodal values per boundary edge, or values at
    /// the boundary Gauss points.
    pub u: Vec<f64>,
    pub space: ControlSpace,
    pub active: ActiveSetState,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl DiscreteSolution {
    /// Control value at edge parameter `t` of boundary slot `slot`. In
    /// variational mode the projection formula is evaluated pointwise.
    pub fn control_at(&self, disc: &Discretization, slot: usize, t: f64) -> f64 {
        match self.space {
            ControlSpace::Full => (1.0 - t) * self.u[2 * slot] + t * self.u[2 * slot + 1],
            ControlSpace::Variational => {
                let data = disc.data();
                let raw = adjoint_boundary_term(disc, &self.p, &self.z, slot, t) / data.omega;
                raw.clamp(data.ua, data.ub)
            }
        }
    }

    /// Control as an edgewise function on the boundary DOF map (exact in
    /// full mode, edgewise L2 projection in variational mode).
    pub fn control_field(&self, disc: &Discretization) -> Result<DiscreteField> {
        let mesh = disc.mesh();
        let dofmap = DofMap::new(mesh, SpaceKind::Boundary);
        match self.space {
            ControlSpace::Full => DiscreteField::from_values(dofmap, self.u.clone()),
            ControlSpace::Variational => {
                let rule = edge_rule(9)?;
                let mut values = vec![0.0; dofmap.num_dofs()];
                for (slot, &e) in mesh.boundary_edges().iter().enumerate() {
                    let h = mesh.edge(e).length;
                    let mut rhs = [0.0; 2];
                    for (r, w) in rule.iter() {
                        let v = self.control_at(disc, slot, r[0]);
                        rhs[0] += w * h * v * (1.0 - r[0]);
                        rhs[1] += w * h * v * r[0];
                    }
                    values[2 * slot] = 2.0 / h * (2.0 * rhs[0] - rhs[1]);
                    values[2 * slot + 1] = 2.0 / h * (2.0 * rhs[1] - rhs[0]);
                }
                DiscreteField::from_values(dofmap, values)
            }
        }
    }
}

/// `eps^(1/2) p.n - kappa_z z` on the boundary.
fn adjoint_boundary_term(
    disc: &Discretization,
    p: &DiscreteField,
    z: &DiscreteField,
    slot: usize,
    t: f64,
) -> f64 {
    let mesh = disc.mesh();
    let data = disc.data();
    let e = mesh.boundary_edges()[slot];
    let x = mesh.edge_point(e, t);
    let pn = normal_trace(p, mesh, e, t);
    let zt = z.trace(mesh, e, 0, t).expect("first side exists")[0];
    let kappa = disc.flux().kappa_at(mesh, data, slot, x);
    data.sqrt_epsilon() * pn - kappa * zt
}

pub fn project_admissible(values: &[f64], ua: f64, ub: f64) -> Result<Vec<f64>> {
    if ua.is_nan() || ub.is_nan() || ua > ub {
        return Err(Error::InvalidData(format!("bounds [{ua}, {ub}]")));
    }
    Ok(values.iter().map(|v| v.clamp(ua, ub)).collect())
}

/// Averaging onto boundary hat functions: every boundary vertex gets
/// `int u xi_n / int xi_n`, and both DOFs at a vertex carry that value.
pub fn quasi_interpolate(u: &dyn Fn(Point) -> f64, mesh: &Mesh) -> Result<DiscreteField> {
    let rule = edge_rule(9)?;
    let nv = mesh.num_vertices();
    let mut num = vec![0.0; nv];
    let mut den = vec![0.0; nv];
    for &e in mesh.boundary_edges() {
        let edge = mesh.edge(e);
        let [a, b] = edge.vertices;
        for (r, w) in rule.iter() {
            let w = w * edge.length;
            let v = u(mesh.edge_point(e, r[0]));
            num[a] += w * v * (1.0 - r[0]);
            num[b] += w * v * r[0];
        }
        den[a] += 0.5 * edge.length;
        den[b] += 0.5 * edge.length;
    }
    let dofmap = DofMap::new(mesh, SpaceKind::Boundary);
    let mut values = vec![0.0; dofmap.num_dofs()];
    for (slot, &e) in mesh.boundary_edges().iter().enumerate() {
        let [a, b] = mesh.edge(e).vertices;
        values[2 * slot] = num[a] / den[a];
        values[2 * slot + 1] = num[b] / den[b];
    }
    DiscreteField::from_values(dofmap, values)
}

/// Reduced gradient in control-DOF form and as nodal multiplier values.
#[derive(Debug, Clone)]
pub struct ReducedGradient {
    /// `w Mg u + M1 p + M2 z`.
    pub dof: Vec<f64>,
    /// `dof / lumped mass`, the pointwise multiplier at every control DOF.
    pub nodal: Vec<f64>,
}

pub fn gradient_from_adjoint(disc: &Discretization, u: &[f64], p: &[f64], z: &[f64]) -> ReducedGradient {
    let ctl = &disc.ops().control;
    let mu = ctl.mass.matvec(u);
    let m1p = ctl.m1.matvec(p);
    let m2z = ctl.m2.matvec(z);
    let omega = disc.data().omega;
    let dof: Vec<f64> = (0..u.len())
        .map(|i| omega * mu[i] + m1p[i] + m2z[i])
        .collect();
    let nodal = dof.iter().zip(&ctl.lumped).map(|(g, l)| g / l).collect();
    ReducedGradient { dof, nodal }
}

pub fn reduced_gradient(disc: &Discretization, sol: &DiscreteSolution) -> ReducedGradient {
    gradient_from_adjoint(disc, &sol.u, sol.p.values(), sol.z.values())
}

/// `lambda = w u - eps^(1/2) p.n + kappa_z z` at a boundary point.
pub fn multiplier_at(disc: &Discretization, sol: &DiscreteSolution, slot: usize, t: f64) -> f64 {
    disc.data().omega * sol.control_at(disc, slot, t)
        - adjoint_boundary_term(disc, &sol.p, &sol.z, slot, t)
}

/// `1/2 |y - y^d|^2 + w/2 u^T Mg u`.
pub fn evaluate_cost(disc: &Discretization, y: &DiscreteField, u: &[f64]) -> Result<f64> {
    let mesh = disc.mesh();
    let data = disc.data();
    let rule = triangle_rule(6)?;
    let mut track = 0.0;
    for k in 0..mesh.num_elements() {
        let g = ElementGeometry::new(mesh, k);
        for (x, l, w) in g.quadrature(&rule) {
            let d = y.scalar_at(k, l) - (data.yd)(x);
            track += w * d * d;
        }
    }
    let reg = disc.ops().control.mass.bilinear(u, u);
    Ok(0.5 * track + 0.5 * data.omega * reg)
}

/// Reduced cost `J(y_h(u), u)` without projection.
pub fn reduced_cost(disc: &Discretization, u: &[f64]) -> Result<f64> {
    let y = disc.solve_state(ControlInput::Coefficients(u), true)?;
    evaluate_cost(disc, &y.potential, u)
}

/// `<J'(u), du>` through one state and one adjoint solve.
pub fn directional_derivative(disc: &Discretization, u: &[f64], du: &[f64]) -> Result<f64> {
    let state = disc.solve_state(ControlInput::Coefficients(u), true)?;
    let adj = disc.solve_adjoint_for_state(&state.potential)?;
    let g = gradient_from_adjoint(disc, u, adj.flux.values(), adj.potential.values());
    Ok(g.dof.iter().zip(du).map(|(a, b)| a * b).sum())
}

/// Relative mismatch between the adjoint directional derivative and a
/// central difference quotient.
pub fn fd_gradient_check(disc: &Discretization, u: &[f64], du: &[f64]) -> Result<f64> {
    let exact = directional_derivative(disc, u, du)?;
    let scale = u.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let t = 1e-5 * scale;
    let plus: Vec<f64> = u.iter().zip(du).map(|(a, b)| a + t * b).collect();
    let minus: Vec<f64> = u.iter().zip(du).map(|(a, b)| a - t * b).collect();
    let fd = (reduced_cost(disc, &plus)? - reduced_cost(disc, &minus)?) / (2.0 * t);
    let denom = exact.abs().max(fd.abs());
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((exact - fd).abs() / denom)
}

fn initial_control(disc: &Discretization) -> Vec<f64> {
    let data = disc.data();
    let start = match (data.ua.is_finite(), data.ub.is_finite()) {
        (true, true) => 0.5 * (data.ua + data.ub),
        _ => 0.0,
    };
    vec![start; disc.ops().control.len()]
}

/// Primal-dual active set iteration. Each step solves the optimality system
/// for the current active set; the loop stops when two consecutive sets
/// coincide.
pub fn pdas_solve(
    disc: &Discretization,
    mode: ControlMode,
    u0: Option<&[f64]>,
    options: PdasOptions,
) -> Result<DiscreteSolution> {
    if mode.space != disc.options().control_space {
        return Err(Error::DimensionMismatch(format!(
            "control mode {:?} on an operator assembled for {:?}",
            mode.space,
            disc.options().control_space
        )));
    }
    let data = disc.data();
    let n = disc.ops().control.len();
    let mut u = match u0 {
        Some(v) if v.len() != n => {
            return Err(Error::DimensionMismatch(format!(
                "initial control of length {} for {n} DOFs",
                v.len()
            )))
        }
        Some(v) => v.to_vec(),
        None => initial_control(disc),
    };
    let mut mu = vec![0.0; n];
    let mut active = ActiveSetState::predict(&mu, &u, data.ua, data.ub, mode.c);
    let mut history = [0usize; 2];
    for iteration in 1..=options.max_iterations {
        let sol = solve_kkt(disc, &active, options.form)?;
        u = sol.u;
        let grad = gradient_from_adjoint(disc, &u, &sol.p, &sol.z);
        for (m, g) in mu.iter_mut().zip(&grad.nodal) {
            *m = -g;
        }
        let next = ActiveSetState::predict(&mu, &u, data.ua, data.ub, mode.c);
        let changes = next.changes(&active);
        history = [history[1], changes];
        if changes == 0 {
            active.iteration = iteration;
            for (v, st) in u.iter_mut().zip(active.statuses()) {
                match st {
                    Status::Lower => *v = data.ua,
                    Status::Upper => *v = data.ub,
                    Status::Inactive => {}
                }
            }
            if mode.space == ControlSpace::Variational {
                u = variational_projection(disc, &sol.p, &sol.z)?;
            }
            let y = DiscreteField::from_values(disc.ops().scalar, sol.y)?;
            let cost = evaluate_cost(disc, &y, &u)?;
            return Ok(DiscreteSolution {
                y,
                q: DiscreteField::from_values(disc.ops().vector, sol.q)?,
                z: DiscreteField::from_values(disc.ops().scalar, sol.z)?,
                p: DiscreteField::from_values(disc.ops().vector, sol.p)?,
                u,
                space: mode.space,
                active,
                cost,
                iterations: iteration,
                converged: true,
            });
        }
        active = next;
    }
    Err(Error::NonConvergence {
        iterations: options.max_iterations,
        last_changes: history,
    })
}

/// `P((eps^(1/2) p.n - kappa_z z) / w)` at the variational control points.
fn variational_projection(disc: &Discretization, p: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    let ops = disc.ops();
    let p = DiscreteField::from_values(ops.vector, p.to_vec())?;
    let z = DiscreteField::from_values(ops.scalar, z.to_vec())?;
    let data = disc.data();
    Ok(ops
        .control
        .points
        .iter()
        .map(|pt| {
            (adjoint_boundary_term(disc, &p, &z, pt.slot, pt.t) / data.omega).clamp(data.ua, data.ub)
        })
        .collect())
}

/// Largest complementarity violation of a converged solution, relative to
/// `scale`: `|lambda|` on inactive DOFs, `max(-lambda, 0)` on lower-active
/// and `max(lambda, 0)` on upper-active ones.
pub fn complementarity_violation(disc: &Discretization, sol: &DiscreteSolution) -> (f64, f64) {
    let g = reduced_gradient(disc, sol);
    let omega = disc.data().omega;
    let mut scale = 1.0f64;
    let mut worst = 0.0f64;
    for (i, s) in sol.active.statuses().iter().enumerate() {
        let lam = g.nodal[i];
        scale = scale.max((omega * sol.u[i]).abs()).max((lam - omega * sol.u[i]).abs());
        let v = match s {
            Status::Inactive => lam.abs(),
            Status::Lower => (-lam).max(0.0),
            Status::Upper => lam.max(0.0),
        };
        worst = worst.max(v);
    }
    (worst, scale)
}

/// Smallest margin of the control to the bounds (negative when violated).
pub fn bound_violation(sol: &DiscreteSolution, ua: f64, ub: f64) -> f64 {
    sol.u
        .iter()
        .map(|&v| (v - ua).min(ub - v))
        .fold(f64::INFINITY, f64::min)
}

/// Outward normal of boundary slot `slot`.
pub fn boundary_normal(mesh: &Mesh, slot: usize) -> Point {
    mesh.edge(mesh.boundary_edges()[slot]).normal
}

/// `beta . n` at the midpoint of boundary slot `slot`.
pub fn boundary_flow(disc: &Discretization, slot: usize) -> f64 {
    let mesh = disc.mesh();
    let e = mesh.boundary_edges()[slot];
    dot((disc.data().beta)(mesh.edge_midpoint(e)), mesh.edge(e).normal)
}
