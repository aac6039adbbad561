//! Errors against a solution on a deeper nested mesh, for the one-sided
//! constrained problem on the slanted quadrilateral.

use ldg_control::cli::{render_table, TableFormat};
use ldg_control::problems::{benchmark, Benchmark};
use ldg_control::study::{run_study, StudyOptions};

fn main() -> ldg_control::Result<()> {
    let problem = benchmark(Benchmark::Polygon, 1.0)?;
    let study = run_study(&problem, &[0, 1, 2, 3], Some(5), &StudyOptions::default())?;
    let reference = study.reference.as_ref().unwrap();
    println!(
        "reference: {} elements, {} active-set iterations",
        reference.disc.mesh().num_elements(),
        reference.solution.iterations
    );
    print!("{}", render_table(&study.report, TableFormat::Markdown)?);
    println!("least-squares u rate: {:.2}", study.report.tail_rate(1, 4)?);
    Ok(())
}
