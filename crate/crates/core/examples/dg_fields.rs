//! Discontinuous P1 fields: L2 projection, pointwise evaluation, traces,
//! jumps and a VTK dump.

use ldg_control::geometry::build_unit_square_mesh;
use ldg_control::spaces::{l2_project, write_vtk, DofMap, Pointwise, SpaceKind};

fn main() -> ldg_control::Result<()> {
    let mesh = build_unit_square_mesh(8)?;
    let f = |x: [f64; 2]| (3.0 * x[0]).sin() * x[1];
    let field = l2_project(Pointwise::Scalar(&f), DofMap::new(&mesh, SpaceKind::Scalar), &mesh)?;

    let x = [0.41, 0.63];
    let k = (0..mesh.num_elements()).find(|&k| mesh.contains(k, x, 0.0)).unwrap();
    println!("f(x) = {:.6}, projection = {:.6}", f(x), field.eval(&mesh, k, x)?[0]);

    let worst = mesh
        .interior_edges()
        .iter()
        .map(|&e| {
            let j = field.jump(&mesh, e, 0.5).unwrap();
            j[0].hypot(j[1])
        })
        .fold(0.0, f64::max);
    println!("largest jump at interior edge midpoints: {worst:.3e}");

    let grad = |x: [f64; 2]| [3.0 * (3.0 * x[0]).cos() * x[1], (3.0 * x[0]).sin()];
    let flux = l2_project(Pointwise::Vector(&grad), DofMap::new(&mesh, SpaceKind::Vector), &mesh)?;
    let vtk = write_vtk(&mesh, "projection", &[("f", &field), ("grad_f", &flux)])?;
    println!("VTK output: {} lines", vtk.lines().count());
    Ok(())
}
