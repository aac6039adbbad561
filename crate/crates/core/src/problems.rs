//! The three benchmark problems and their nested mesh families.

use std::fmt;
use std::str::FromStr;

use crate::analysis::{manufactured_example1, ManufacturedCase};
use crate::error::{Error, Result};
use crate::geometry::{build_polygon_mesh, build_unit_square_mesh, DomainSpec, Mesh, MeshHierarchy};
use crate::ldg::ProblemData;

/// Upper bound of the box-constrained problem.
pub const SINGULAR_UPPER_BOUND: f64 = 0.2;

/// Interior angle at the origin of the polygonal benchmark.
pub const POLYGON_ANGLE: f64 = 5.0 * std::f64::consts::PI / 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    /// Unconstrained, closed-form optimal triple on the unit square.
    Manufactured,
    /// `0 <= u <= 0.2`, `f = 0`, `yd = |x|^(-2/3)` on the unit square.
    SingularTarget,
    /// `u >= 0`, `f = 1`, piecewise constant target on a slanted quadrilateral.
    Polygon,
}

impl Benchmark {
    pub fn number(self) -> usize {
        match self {
            Benchmark::Manufactured => 1,
            Benchmark::SingularTarget => 2,
            Benchmark::Polygon => 3,
        }
    }

    pub fn from_number(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Benchmark::Manufactured),
            2 => Ok(Benchmark::SingularTarget),
            3 => Ok(Benchmark::Polygon),
            _ => Err(Error::Config(format!("unknown example {n}, expected 1, 2 or 3"))),
        }
    }

    /// Number of elements of the coarsest mesh in the family.
    pub fn coarse_elements(self) -> usize {
        match self {
            Benchmark::Manufactured | Benchmark::SingularTarget => 32,
            Benchmark::Polygon => 12,
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "example {}", self.number())
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "manufactured" => Ok(Benchmark::Manufactured),
            "2" | "singular" => Ok(Benchmark::SingularTarget),
            "3" | "polygon" => Ok(Benchmark::Polygon),
            other => Err(Error::Config(format!("unknown example '{other}'"))),
        }
    }
}

/// Data of one problem together with its mesh family.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub domain: DomainSpec,
    pub data: ProblemData,
    /// Closed-form solution, when there is one.
    pub exact: Option<ManufacturedCase>,
    coarse: Mesh,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("domain", &self.domain.name())
            .field("coarse_elements", &self.coarse.num_elements())
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new(name: impl Into<String>, domain: DomainSpec, data: ProblemData, coarse: Mesh) -> Self {
        Self {
            name: name.into(),
            domain,
            data,
            exact: None,
            coarse,
        }
    }

    pub fn coarse_mesh(&self) -> &Mesh {
        &self.coarse
    }

    /// Mesh after `level` uniform refinements of the coarse mesh.
    pub fn mesh(&self, level: usize) -> Result<Mesh> {
        let mut mesh = self.coarse.clone();
        for _ in 0..level {
            mesh = crate::geometry::refine_uniform(&mesh)?;
        }
        Ok(mesh)
    }

    pub fn hierarchy(&self, finest_level: usize) -> Result<MeshHierarchy> {
        MeshHierarchy::new(self.coarse.clone(), finest_level)
    }

    /// Refinement level whose mesh has exactly `elements` triangles.
    pub fn level_for_elements(&self, elements: usize) -> Result<usize> {
        let mut count = self.coarse.num_elements();
        let mut level = 0;
        while count < elements {
            count *= 4;
            level += 1;
        }
        if count != elements {
            return Err(Error::Config(format!(
                "{elements} elements is not in the nested family {} * 4^k of {}",
                self.coarse.num_elements(),
                self.name
            )));
        }
        Ok(level)
    }

    pub fn elements_at(&self, level: usize) -> usize {
        self.coarse.num_elements() * 4usize.pow(level as u32)
    }
}

/// Unconstrained problem with known solution, `beta = (1,1)`, `alpha = 1`.
pub fn manufactured(epsilon: f64, omega: f64) -> Result<Problem> {
    let case = manufactured_example1(epsilon, omega)?;
    let mut p = Problem::new(
        "manufactured",
        DomainSpec::unit_square(),
        case.data(),
        build_unit_square_mesh(4)?,
    );
    p.exact = Some(case);
    Ok(p)
}

/// Box-constrained problem whose target is singular at the origin.
pub fn singular_target(epsilon: f64) -> Result<Problem> {
    let data = ProblemData::new(epsilon, 1.0)
        .with_constant_beta([1.0, 1.0])
        .with_constant_alpha(1.0)
        .with_source(|_| 0.0)
        .with_desired_state(|x| (x[0] * x[0] + x[1] * x[1]).powf(-1.0 / 3.0))
        .with_bounds(0.0, SINGULAR_UPPER_BOUND);
    Ok(Problem::new(
        "singular-target",
        DomainSpec::unit_square(),
        data,
        build_unit_square_mesh(4)?,
    ))
}

/// One-sided constrained problem on the quadrilateral with left vertex `(vx, 1)`.
pub fn polygon(epsilon: f64, vx: f64) -> Result<Problem> {
    let domain = DomainSpec::slanted_quadrilateral(vx)?;
    let data = ProblemData::new(epsilon, 1.0)
        .with_constant_beta([1.0, 0.0])
        .with_constant_alpha(2.0)
        .with_source(|_| 1.0)
        .with_desired_state(|x| if x[1] < 0.5 { -1.0 } else { 1.0 })
        .with_bounds(0.0, f64::INFINITY);
    let coarse = build_polygon_mesh(&domain, 1)?;
    Ok(Problem::new("polygon", domain, data, coarse))
}

/// Benchmark with its default parameters (`omega = 1`, left vertex giving
/// the `5 pi / 6` angle).
pub fn benchmark(which: Benchmark, epsilon: f64) -> Result<Problem> {
    match which {
        Benchmark::Manufactured => manufactured(epsilon, 1.0),
        Benchmark::SingularTarget => singular_target(epsilon),
        Benchmark::Polygon => polygon(epsilon, DomainSpec::slanted_vertex_for_angle(POLYGON_ANGLE)),
    }
}
