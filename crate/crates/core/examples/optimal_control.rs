//! Box-constrained optimal control with the primal-dual active set method,
//! in both the full and the variational control discretization.

use ldg_control::control::{bound_violation, complementarity_violation, pdas_solve, ControlMode, PdasOptions, Status};
use ldg_control::ldg::{ControlSpace, Discretization, DiscretizationOptions};
use ldg_control::problems::{benchmark, Benchmark};

fn main() -> ldg_control::Result<()> {
    let problem = benchmark(Benchmark::SingularTarget, 1.0)?;
    let mesh = problem.mesh(2)?;
    for space in [ControlSpace::Full, ControlSpace::Variational] {
        let options = DiscretizationOptions { control_space: space, ..Default::default() };
        let disc = Discretization::new(mesh.clone(), problem.data.clone(), options)?;
        let sol = pdas_solve(&disc, ControlMode::for_data(space, problem.data.omega), None, PdasOptions::default())?;
        let (comp, scale) = complementarity_violation(&disc, &sol);
        println!(
            "{space:?}: {} iterations, cost {:.6e}, {} lower / {} upper active of {}, bound margin {:.1e}, complementarity {:.1e}",
            sol.iterations,
            sol.cost,
            sol.active.count(Status::Lower),
            sol.active.count(Status::Upper),
            sol.active.len(),
            bound_violation(&sol, problem.data.ua, problem.data.ub),
            comp / scale
        );
    }
    Ok(())
}
