//! Both sides of the error bound that controls the optimal-control error by
//! Galerkin errors of the state and adjoint equations.

use ldg_control::analysis::galerkin_diagnostics;
use ldg_control::control::{pdas_solve, ControlMode, PdasOptions};
use ldg_control::ldg::{ControlSpace, Discretization, DiscretizationOptions};
use ldg_control::problems::manufactured;
use ldg_control::analysis::manufactured_errors;

fn main() -> ldg_control::Result<()> {
    let problem = manufactured(1.0, 1.0)?;
    let case = problem.exact.as_ref().unwrap();
    println!("elements   w|u-u_h|^2+|y-y_h|^2   bound (C = 10)   |pi_h u - u|");
    for level in 0..4 {
        let disc = Discretization::new(problem.mesh(level)?, problem.data.clone(), DiscretizationOptions::default())?;
        let sol = pdas_solve(&disc, ControlMode::for_data(ControlSpace::Full, 1.0), None, PdasOptions::default())?;
        let row = manufactured_errors(&disc, &sol, case)?;
        let g = galerkin_diagnostics(case, &disc)?;
        let lhs = case.omega * row.err_u.powi(2) + row.err_y.powi(2);
        println!("{:8}   {lhs:22.3e}   {:14.3e}   {:.3e}", row.elements, g.bound(case.epsilon, 10.0), g.quasi_interpolation);
    }
    Ok(())
}
