//! Nested meshes: structured square, slanted quadrilateral, red refinement,
//! point location and boundary sub-edges.

use ldg_control::geometry::{build_polygon_mesh, build_unit_square_mesh, DomainSpec, MeshHierarchy};

fn main() -> ldg_control::Result<()> {
    let square = build_unit_square_mesh(4)?;
    println!(
        "square: {} elements, {} edges ({} on the boundary), h = {:.4}",
        square.num_elements(),
        square.num_edges(),
        square.boundary_edges().len(),
        square.h()
    );

    let vx = DomainSpec::slanted_vertex_for_angle(5.0 * std::f64::consts::PI / 6.0);
    let domain = DomainSpec::slanted_quadrilateral(vx)?;
    println!("slanted quadrilateral: left vertex x1 = {vx:.6}, largest angle = {:.6} rad", domain.max_interior_angle());

    let hierarchy = MeshHierarchy::new(build_polygon_mesh(&domain, 1)?, 3)?;
    for (l, mesh) in hierarchy.levels().iter().enumerate() {
        println!("  level {l}: {:6} elements, area {:.12}", mesh.num_elements(), mesh.total_area());
    }

    let x = [0.3, 0.7];
    let coarse = (0..hierarchy.level(0).num_elements())
        .find(|&k| hierarchy.level(0).contains(k, x, 1e-12))
        .expect("point inside the domain");
    let fine = hierarchy.locate(0, coarse, x);
    println!("x = {x:?}: coarse element {coarse}, finest element {fine}");

    let e = hierarchy.level(0).boundary_edges()[0];
    for (fe, [s, t]) in hierarchy.boundary_subedges(0, e)? {
        println!("  coarse boundary edge {e} covers fine edge {fe} on [{s:.3}, {t:.3}]");
    }
    Ok(())
}
