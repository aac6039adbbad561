//! Convergence studies over a nested mesh family.

use std::sync::Arc;

use crate::analysis::{manufactured_errors, reference_compare, ErrorReport};
use crate::control::{pdas_solve, ControlMode, DiscreteSolution, PdasOptions};
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::ldg::{Discretization, DiscretizationOptions};
use crate::problems::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StudyOptions {
    pub discretization: DiscretizationOptions,
    pub pdas: PdasOptions,
}

impl StudyOptions {
    fn mode(&self, omega: f64) -> ControlMode {
        ControlMode::for_data(self.discretization.control_space, omega)
    }
}

/// A discretization together with its converged optimal control.
#[derive(Debug)]
pub struct LevelSolution {
    pub level: usize,
    pub disc: Discretization,
    pub solution: DiscreteSolution,
}

/// Assemble and solve the optimality system on one mesh.
pub fn solve_on(problem: &Problem, mesh: impl Into<Arc<Mesh>>, options: &StudyOptions) -> Result<(Discretization, DiscreteSolution)> {
    let mesh = mesh.into();
    let elements = mesh.num_elements();
    let at = |e: Error| Error::AtLevel {
        elements,
        source: Box::new(e),
    };
    let disc = Discretization::new(mesh, problem.data.clone(), options.discretization).map_err(at)?;
    let sol = pdas_solve(&disc, options.mode(problem.data.omega), None, options.pdas).map_err(at)?;
    Ok((disc, sol))
}

#[derive(Debug)]
pub struct Study {
    pub report: ErrorReport,
    pub levels: Vec<LevelSolution>,
    /// Reference solution for problems without a closed form.
    pub reference: Option<LevelSolution>,
}

/// Solve on every refinement level in `levels` and measure errors, against
/// the closed-form solution if the problem has one, otherwise against the
/// solution on `reference_level`.
pub fn run_study(
    problem: &Problem,
    levels: &[usize],
    reference_level: Option<usize>,
    options: &StudyOptions,
) -> Result<Study> {
    if levels.is_empty() {
        return Err(Error::Config("empty mesh sequence".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!("mesh levels {levels:?} are not strictly increasing")));
    }
    let deepest = *levels.last().expect("nonempty");
    let mut report = ErrorReport::default();
    let mut solved = Vec::with_capacity(levels.len());
    if let Some(case) = &problem.exact {
        for &l in levels {
            let (disc, solution) = solve_on(problem, problem.mesh(l)?, options)?;
            report.push(manufactured_errors(&disc, &solution, case)?);
            solved.push(LevelSolution { level: l, disc, solution });
        }
        return Ok(Study {
            report,
            levels: solved,
            reference: None,
        });
    }
    let reference_level = reference_level
        .ok_or_else(|| Error::Config(format!("{} has no closed-form solution; a reference level is required", problem.name)))?;
    if reference_level <= deepest {
        return Err(Error::Config(format!(
            "reference level {reference_level} must be deeper than the finest study level {deepest}"
        )));
    }
    let hierarchy = problem.hierarchy(reference_level)?;
    let (rdisc, rsol) = solve_on(problem, hierarchy.finest().clone(), options)?;
    for &l in levels {
        let (disc, solution) = solve_on(problem, hierarchy.level(l).clone(), options)?;
        report.push(reference_compare(&hierarchy, l, (&disc, &solution), (&rdisc, &rsol))?);
        solved.push(LevelSolution { level: l, disc, solution });
    }
    Ok(Study {
        report,
        levels: solved,
        reference: Some(LevelSolution {
            level: reference_level,
            disc: rdisc,
            solution: rsol,
        }),
    })
}
