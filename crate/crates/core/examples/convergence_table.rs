//! Convergence table for the manufactured problem, printed as markdown.
//!
//! `cargo run --release --example convergence_table -- 1e-6` runs the
//! convection-dominated variant.

use ldg_control::cli::{render_table, TableFormat};
use ldg_control::problems::manufactured;
use ldg_control::study::{run_study, StudyOptions};

fn main() -> ldg_control::Result<()> {
    let epsilon = std::env::args().nth(1).map_or(Ok(1.0), |s| s.parse()).expect("epsilon");
    let problem = manufactured(epsilon, 1.0)?;
    let study = run_study(&problem, &[0, 1, 2, 3, 4], None, &StudyOptions::default())?;
    print!("{}", render_table(&study.report, TableFormat::Markdown)?);
    Ok(())
}
