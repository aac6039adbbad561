//! Forward LDG solve for a prescribed Dirichlet control: a globally linear
//! state is reproduced exactly, a smooth one converges at second order.

use ldg_control::analysis::{convergence_rate, error_l2_domain, manufactured_example1, manufactured_linear};
use ldg_control::geometry::build_unit_square_mesh;
use ldg_control::ldg::{ControlInput, Discretization, DiscretizationOptions};

fn main() -> ldg_control::Result<()> {
    let linear = manufactured_linear(0.5, [1.0, 0.5], 1.0, 1.0, [2.0, -1.0]);
    let disc = Discretization::new(build_unit_square_mesh(4)?, linear.data(), DiscretizationOptions::default())?;
    let s = disc.solve_state(ControlInput::Function(&*linear.u), true)?;
    println!("linear state: L2 error {:.2e}", error_l2_domain(&s.potential, &*linear.y, disc.mesh())?);

    let case = manufactured_example1(1.0, 1.0)?;
    let mut prev = None;
    for n in [4, 8, 16, 32] {
        let disc = Discretization::new(build_unit_square_mesh(n)?, case.data(), DiscretizationOptions::default())?;
        let s = disc.solve_state(ControlInput::Function(&*case.u), true)?;
        let e = error_l2_domain(&s.potential, &*case.y, disc.mesh())?;
        let rate = prev.map(|p| convergence_rate(p, e)).transpose()?;
        println!("{:5} elements: |y - y_h| = {e:.3e}  rate {}", 2 * n * n, rate.map_or("-".into(), |r| format!("{r:.2}")));
        prev = Some(e);
    }
    Ok(())
}
