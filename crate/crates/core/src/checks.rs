//! Runtime self-checks of the discretization and the optimizer, shared by
//! the `check` subcommand and the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{convergence_rate, manufactured_linear, reference_compare};
use crate::control::{
    bound_violation, complementarity_violation, fd_gradient_check, pdas_solve, quasi_interpolate, ControlMode,
    PdasOptions,
};
use crate::error::Result;
use crate::geometry::{build_unit_square_mesh, Mesh};
use crate::ldg::{
    ControlInput, ControlSpace, Discretization, DiscretizationOptions, PenaltyConvention,
};
use crate::problems::{benchmark, Benchmark};
use crate::spaces::{l2_project, Pointwise};
use crate::study::{solve_on, StudyOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            passed: value <= tolerance,
            detail: format!("{value:.3e} (tolerance {tolerance:.0e})"),
        }
    }
}

fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Relative defect of `u^T (M1 P(g) + M2 Z(g)) = g^T Mo Y(u)`, where `Y(u)`
/// solves the state equation without source and `(P, Z)(g)` the adjoint
/// equation driven by `Mo g`.
pub fn duality_defect(disc: &Discretization, u: &[f64], g: &[f64]) -> Result<f64> {
    let ops = disc.ops();
    let y = disc.solve_state(ControlInput::Coefficients(u), false)?;
    let adj = disc.solve_adjoint(&ops.mass_omega.matvec(g))?;
    let lhs: f64 = ops
        .control
        .m1
        .matvec(adj.flux.values())
        .iter()
        .zip(ops.control.m2.matvec(adj.potential.values()))
        .zip(u)
        .map(|((a, b), u)| u * (a + b))
        .sum();
    let rhs = ops.mass_omega.bilinear(g, y.potential.values());
    Ok((lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE))
}

/// Largest nodal deviation of `(y_h, q_h)` from the projection of a globally
/// linear state on the `n x n` square mesh.
pub fn linear_state_defect(n: usize, penalty: PenaltyConvention) -> Result<(f64, f64)> {
    let case = manufactured_linear(1.0, [1.0, 1.0], 1.0, 0.5, [1.0, -2.0]);
    let disc = Discretization::new(
        build_unit_square_mesh(n)?,
        case.data(),
        DiscretizationOptions {
            penalty,
            control_space: ControlSpace::Full,
        },
    )?;
    let s = disc.solve_state(ControlInput::Function(&*case.u), true)?;
    let m = disc.mesh();
    let yp = l2_project(Pointwise::Scalar(&*case.y), disc.ops().scalar, m)?;
    let q = |x| case.q(x);
    let qp = l2_project(Pointwise::Vector(&q), disc.ops().vector, m)?;
    let dev = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok((
        dev(s.potential.values(), yp.values()),
        dev(s.flux.values(), qp.values()),
    ))
}

/// Run the self-check suite with random data drawn from `seed`.
pub fn run_checks(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let (a, b, c): (f64, f64, f64) = (rng.gen_range(1.0..2.0), rng.gen_range(0.1..0.9), rng.gen_range(0.01..0.09));
    let additivity = (convergence_rate(a, b)? + convergence_rate(b, c)? - convergence_rate(a, c)?).abs();
    out.push(CheckOutcome::new("rate additivity", additivity, 1e-12));

    let mut worst: f64 = 0.0;
    for n in [2, 4, 8] {
        for pen in [PenaltyConvention::Negative, PenaltyConvention::Positive] {
            let (dy, dq) = linear_state_defect(n, pen)?;
            worst = worst.max(dy).max(dq);
        }
    }
    out.push(CheckOutcome::new("linear state reproduction", worst, 1e-10));

    let smooth = benchmark(Benchmark::Manufactured, 1.0)?;
    let disc = Discretization::new(smooth.mesh(1)?, smooth.data.clone(), DiscretizationOptions::default())?;
    let nu = disc.ops().control.len();
    let nv = disc.ops().scalar.num_dofs();
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let u = random_vec(&mut rng, nu);
        let g = random_vec(&mut rng, nv);
        worst = worst.max(duality_defect(&disc, &u, &g)?);
    }
    out.push(CheckOutcome::new("discrete duality", worst, 1e-10));

    let mut worst: f64 = 0.0;
    let u = random_vec(&mut rng, nu);
    for _ in 0..3 {
        let du = random_vec(&mut rng, nu);
        worst = worst.max(fd_gradient_check(&disc, &u, &du)?);
    }
    out.push(CheckOutcome::new("adjoint gradient vs finite differences", worst, 1e-7));

    let unconstrained = pdas_solve(&disc, ControlMode::for_data(ControlSpace::Full, 1.0), None, PdasOptions::default())?;
    out.push(CheckOutcome {
        name: "unconstrained active-set iterations",
        passed: unconstrained.iterations == 1,
        detail: format!("{} iteration(s)", unconstrained.iterations),
    });

    let singular = benchmark(Benchmark::SingularTarget, 1.0)?;
    let (cdisc, csol) = solve_on(&singular, singular.mesh(1)?, &StudyOptions::default())?;
    let (ua, ub) = (singular.data.ua, singular.data.ub);
    out.push(CheckOutcome::new("constrained control bounds", (-bound_violation(&csol, ua, ub)).max(0.0), 1e-10));
    let (comp, scale) = complementarity_violation(&cdisc, &csol);
    out.push(CheckOutcome::new("complementarity", comp / scale, 1e-8));

    let mesh = smooth.mesh(1)?;
    let level: f64 = rng.gen_range(-1.0..1.0);
    let pi = quasi_interpolate(&|_| level, &mesh)?;
    let constant_defect = pi.values().iter().fold(0.0f64, |m, v| m.max((v - level).abs()));
    out.push(CheckOutcome::new("quasi-interpolation keeps constants", constant_defect, 1e-14));

    let text = mesh.write_text();
    let back = Mesh::read_text(&text)?;
    out.push(CheckOutcome {
        name: "mesh text round trip",
        passed: back.write_text() == text,
        detail: format!("{} elements", back.num_elements()),
    });

    let hierarchy = smooth.hierarchy(1)?;
    let (d0, s0) = solve_on(&smooth, hierarchy.level(0).clone(), &StudyOptions::default())?;
    let (d1, s1) = solve_on(&smooth, hierarchy.level(1).clone(), &StudyOptions::default())?;
    let row = reference_compare(&hierarchy, 0, (&d0, &s0), (&d1, &s1))?;
    out.push(CheckOutcome {
        name: "reference comparison is positive",
        passed: row.columns().iter().all(|v| *v > 0.0 && v.is_finite()),
        detail: format!("{:?}", row.columns()),
    });

    Ok(out)
}
