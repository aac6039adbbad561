//! Configuration-driven driver: run descriptions, convergence tables and
//! field dumps.
//!
//! A run is described by a TOML file:
//!
//! ```toml
//! [problem]
//! example = 2            # 1, 2, 3 or "custom"
//! epsilon = 1.0
//!
//! [mesh]
//! elements = [32, 128, 512]
//! reference_elements = 8192
//!
//! [output]
//! directory = "singular"
//! vtk = true
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::analysis::{convergence_rate, ErrorReport};
use crate::control::{DiscreteSolution, PdasOptions};
use crate::error::{Error, Result};
use crate::geometry::{build_polygon_mesh, build_unit_square_mesh, DomainSpec, Point};
use crate::kkt::KktForm;
use crate::ldg::{ControlSpace, Discretization, DiscretizationOptions, PenaltyConvention, ProblemData};
use crate::problems::{manufactured, polygon, singular_target, Benchmark, Problem};
use crate::spaces::write_vtk;
use crate::study::{run_study, Study, StudyOptions};

/// Environment variable naming the directory all outputs are written under.
pub const OUTPUT_ROOT_VAR: &str = "LDG_OUTPUT_ROOT";

/// Output root from the environment, or the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSection {
    /// `1`, `2`, `3` or `custom`.
    pub example: toml::Value,
    pub epsilon: f64,
    pub omega: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub c12_direction: Option<Point>,
    /// Left vertex `x1` of the slanted quadrilateral.
    pub left_vertex: Option<f64>,
    /// `square` or `slanted`; custom problems only.
    pub domain: String,
    pub beta: Point,
    pub alpha: f64,
    pub source: f64,
    pub desired: f64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self {
            example: toml::Value::Integer(1),
            epsilon: 1.0,
            omega: 1.0,
            lower: None,
            upper: None,
            c12_direction: None,
            left_vertex: None,
            domain: "square".into(),
            beta: [1.0, 1.0],
            alpha: 1.0,
            source: 0.0,
            desired: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlChoice {
    #[default]
    Full,
    Variational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyChoice {
    #[default]
    Negative,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KktChoice {
    #[default]
    Condensed,
    Monolithic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationSection {
    pub control: ControlChoice,
    pub penalty: PenaltyChoice,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSection {
    /// Element counts of the study meshes.
    pub elements: Option<Vec<usize>>,
    /// Refinement levels of the study meshes (alternative to `elements`).
    pub levels: Option<Vec<usize>>,
    pub reference_elements: Option<usize>,
    pub reference_level: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub max_iterations: usize,
    pub kkt: KktChoice,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            max_iterations: PdasOptions::default().max_iterations,
            kkt: KktChoice::Condensed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Relative to the output root.
    pub directory: String,
    pub csv: bool,
    pub markdown: bool,
    pub vtk: bool,
    pub matrices: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: ".".into(),
            csv: true,
            markdown: true,
            vtk: false,
            matrices: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSection {
    pub seed: u64,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self { seed: 20240917 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub discretization: DiscretizationSection,
    pub mesh: MeshSection,
    pub solver: SolverSection,
    pub output: OutputSection,
    pub check: CheckSection,
}

/// A validated run: problem, study levels and solver options.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub problem: Problem,
    pub levels: Vec<usize>,
    pub reference_level: Option<usize>,
    pub options: StudyOptions,
}

impl std::str::FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

impl RunConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    fn benchmark(&self) -> Result<Option<Benchmark>> {
        match &self.problem.example {
            toml::Value::Integer(n) => Benchmark::from_number(*n as usize).map(Some),
            toml::Value::String(s) if s == "custom" => Ok(None),
            toml::Value::String(s) => s.parse().map(Some),
            other => Err(Error::Config(format!("example must be 1, 2, 3 or \"custom\", got {other}"))),
        }
    }

    fn build_problem(&self) -> Result<Problem> {
        let p = &self.problem;
        let vx = p.left_vertex.unwrap_or(-(3f64.sqrt()));
        let mut problem = match self.benchmark()? {
            Some(Benchmark::Manufactured) => manufactured(p.epsilon, p.omega)?,
            Some(Benchmark::SingularTarget) => singular_target(p.epsilon)?,
            Some(Benchmark::Polygon) => polygon(p.epsilon, vx)?,
            None => {
                let (domain, coarse) = match p.domain.as_str() {
                    "square" => (DomainSpec::unit_square(), build_unit_square_mesh(4)?),
                    "slanted" => {
                        let d = DomainSpec::slanted_quadrilateral(vx)?;
                        let m = build_polygon_mesh(&d, 1)?;
                        (d, m)
                    }
                    other => return Err(Error::Config(format!("unknown domain '{other}'"))),
                };
                let (f, yd) = (p.source, p.desired);
                let data = ProblemData::new(p.epsilon, p.omega)
                    .with_constant_beta(p.beta)
                    .with_constant_alpha(p.alpha)
                    .with_source(move |_| f)
                    .with_desired_state(move |_| yd);
                Problem::new("custom", domain, data, coarse)
            }
        };
        if problem.exact.is_none() {
            problem.data.omega = p.omega;
        }
        if p.lower.is_some() || p.upper.is_some() {
            if problem.exact.is_some() {
                return Err(Error::Config("the manufactured example is unconstrained; remove lower/upper".into()));
            }
            let ua = p.lower.unwrap_or(f64::NEG_INFINITY);
            let ub = p.upper.unwrap_or(f64::INFINITY);
            problem.data = problem.data.with_bounds(ua, ub);
        }
        if let Some(v) = p.c12_direction {
            problem.data = problem.data.with_c12_direction(v);
        }
        let coarse = problem.coarse_mesh().clone();
        problem.data.validate(&coarse).map_err(|e| Error::Config(e.to_string()))?;
        Ok(problem)
    }

    pub fn resolve(&self) -> Result<ResolvedRun> {
        let problem = self.build_problem().map_err(|e| match e {
            Error::InvalidData(m) | Error::InvalidDomain(m) => Error::Config(m),
            other => other,
        })?;
        let m = &self.mesh;
        let levels = match (&m.elements, &m.levels) {
            (Some(_), Some(_)) => return Err(Error::Config("give either mesh.elements or mesh.levels".into())),
            (Some(e), None) => e
                .iter()
                .map(|&n| problem.level_for_elements(n))
                .collect::<Result<Vec<_>>>()?,
            (None, Some(l)) => l.clone(),
            (None, None) => vec![0, 1, 2, 3],
        };
        if levels.is_empty() {
            return Err(Error::Config("empty mesh sequence".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("mesh sequence {levels:?} is not strictly increasing")));
        }
        let reference_level = match (m.reference_elements, m.reference_level) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either reference_elements or reference_level".into()))
            }
            (Some(n), None) => Some(problem.level_for_elements(n)?),
            (None, l) => l,
        };
        let deepest = *levels.last().expect("nonempty");
        match reference_level {
            Some(r) if r <= deepest => {
                return Err(Error::Config(format!(
                    "reference level {r} must be deeper than the finest study level {deepest}"
                )))
            }
            None if problem.exact.is_none() => {
                return Err(Error::Config(format!(
                    "{} has no closed-form solution; set mesh.reference_elements",
                    problem.name
                )))
            }
            _ => {}
        }
        if self.solver.max_iterations == 0 {
            return Err(Error::Config("solver.max_iterations must be positive".into()));
        }
        let options = StudyOptions {
            discretization: DiscretizationOptions {
                penalty: match self.discretization.penalty {
                    PenaltyChoice::Negative => PenaltyConvention::Negative,
                    PenaltyChoice::Positive => PenaltyConvention::Positive,
                },
                control_space: match self.discretization.control {
                    ControlChoice::Full => ControlSpace::Full,
                    ControlChoice::Variational => ControlSpace::Variational,
                },
            },
            pdas: PdasOptions {
                max_iterations: self.solver.max_iterations,
                form: match self.solver.kkt {
                    KktChoice::Condensed => KktForm::Condensed,
                    KktChoice::Monolithic => KktForm::Monolithic,
                },
            },
        };
        Ok(ResolvedRun {
            problem,
            levels,
            reference_level,
            options,
        })
    }
}

/// Solve every level of the configured study and measure the errors.
pub fn run_example(config: &RunConfig) -> Result<Study> {
    let run = config.resolve()?;
    run_study(&run.problem, &run.levels, run.reference_level, &run.options)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

pub const CSV_COLUMNS: [&str; 10] = [
    "elements",
    "h",
    "err_y_L2",
    "rate_y",
    "err_u_Gamma",
    "rate_u",
    "err_z_Gamma",
    "rate_z",
    "err_pn_Gamma",
    "rate_pn",
];

/// Scientific notation with three significant digits and a two-digit
/// exponent, e.g. `1.64e-02`.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.2e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Rate between two printed error cells, so that every emitted rate can be
/// recomputed from the table itself.
pub fn rate_cell(coarse: f64, fine: f64) -> String {
    let parse = |v: f64| format_sci(v).parse::<f64>().unwrap_or(f64::NAN);
    match convergence_rate(parse(coarse), parse(fine)) {
        Ok(r) if r.is_finite() => format!("{r:.2}"),
        _ => String::new(),
    }
}

fn table_cells(report: &ErrorReport) -> Vec<[String; 10]> {
    let mut rows = Vec::with_capacity(report.len());
    for (i, r) in report.rows.iter().enumerate() {
        let cols = r.columns();
        let prev = (i > 0).then(|| report.rows[i - 1].columns());
        let rate = |c: usize| prev.map(|p| rate_cell(p[c], cols[c])).unwrap_or_default();
        rows.push([
            r.elements.to_string(),
            format_sci(r.h),
            format_sci(cols[0]),
            rate(0),
            format_sci(cols[1]),
            rate(1),
            format_sci(cols[2]),
            rate(2),
            format_sci(cols[3]),
            rate(3),
        ]);
    }
    rows
}

pub fn render_table(report: &ErrorReport, format: TableFormat) -> Result<String> {
    if report.is_empty() {
        return Err(Error::Config("cannot emit an empty report".into()));
    }
    let rows = table_cells(report);
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Format(e.to_string());
            w.write_record(CSV_COLUMNS).map_err(io)?;
            for r in &rows {
                w.write_record(r).map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
        }
        TableFormat::Markdown => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "| # elements | ‖y−y_h‖_{{0,Ω}} | rate | ‖u−u_h‖_{{0,Γ}} | rate | ‖z−z_h‖_{{0,Γ}} | rate | ‖(p−p_h)·n‖_{{0,Γ}} | rate |"
            );
            let _ = writeln!(out, "|---:|---:|---:|---:|---:|---:|---:|---:|---:|");
            for r in &rows {
                let rate = |s: &str| if s.is_empty() { "-".to_string() } else { s.to_string() };
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                    r[0],
                    r[2],
                    rate(&r[3]),
                    r[4],
                    rate(&r[5]),
                    r[6],
                    rate(&r[7]),
                    r[8],
                    rate(&r[9])
                );
            }
            Ok(out)
        }
    }
}

pub fn emit_table(report: &ErrorReport, format: TableFormat, path: impl AsRef<Path>) -> Result<()> {
    let text = render_table(report, format)?;
    fs::write(path, text)?;
    Ok(())
}

/// Legacy VTK polyline of the control along the boundary, one segment per
/// boundary edge.
pub fn control_polyline(disc: &Discretization, sol: &DiscreteSolution) -> String {
    let mesh = disc.mesh();
    let edges = mesh.boundary_edges();
    let n = edges.len();
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "boundary control");
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET POLYDATA");
    let _ = writeln!(out, "POINTS {} double", 2 * n);
    for &e in edges {
        for t in [0.0, 1.0] {
            let x = mesh.edge_point(e, t);
            let _ = writeln!(out, "{:.17e} {:.17e} 0", x[0], x[1]);
        }
    }
    let _ = writeln!(out, "LINES {} {}", n, 3 * n);
    for s in 0..n {
        let _ = writeln!(out, "2 {} {}", 2 * s, 2 * s + 1);
    }
    let _ = writeln!(out, "POINT_DATA {}", 2 * n);
    let _ = writeln!(out, "SCALARS u double 1");
    let _ = writeln!(out, "LOOKUP_TABLE default");
    for s in 0..n {
        for t in [0.0, 1.0] {
            let _ = writeln!(out, "{:.17e}", sol.control_at(disc, s, t));
        }
    }
    out
}

/// Write `state.vtk` (y, q), `adjoint.vtk` (z, p) and `control.vtk` into `dir`.
pub fn emit_fields(disc: &Discretization, sol: &DiscreteSolution, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mesh = disc.mesh();
    let files = [
        ("state.vtk", write_vtk(mesh, "state", &[("y", &sol.y), ("q", &sol.q)])?),
        ("adjoint.vtk", write_vtk(mesh, "adjoint", &[("z", &sol.z), ("p", &sol.p)])?),
        ("control.vtk", control_polyline(disc, sol)),
    ];
    let mut paths = Vec::with_capacity(files.len());
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Write the assembled blocks in Matrix Market format.
pub fn emit_matrices(disc: &Discretization, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let ops = disc.ops();
    let blocks = [
        ("a.mtx", &ops.a),
        ("b.mtx", &ops.b),
        ("c.mtx", &ops.c),
        ("m1.mtx", &ops.control.m1),
        ("m2.mtx", &ops.control.m2),
        ("mass_boundary.mtx", &ops.control.mass),
        ("mass_domain.mtx", &ops.mass_omega),
    ];
    let mut paths = Vec::new();
    for (name, m) in blocks {
        let path = dir.join(name);
        m.write_matrix_market(&path)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Everything a `run` produced.
#[derive(Debug)]
pub struct RunOutput {
    pub study: Study,
    pub files: Vec<PathBuf>,
}

/// Run the study and write the requested artifacts under `root`.
pub fn execute(config: &RunConfig, root: impl AsRef<Path>) -> Result<RunOutput> {
    let study = run_example(config)?;
    let dir = root.as_ref().join(&config.output.directory);
    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    if config.output.csv {
        let path = dir.join("errors.csv");
        emit_table(&study.report, TableFormat::Csv, &path)?;
        files.push(path);
    }
    if config.output.markdown {
        let path = dir.join("errors.md");
        emit_table(&study.report, TableFormat::Markdown, &path)?;
        files.push(path);
    }
    let finest = study.levels.last().expect("nonempty study");
    let tag = format!("elements_{}", finest.disc.mesh().num_elements());
    if config.output.vtk {
        files.extend(emit_fields(&finest.disc, &finest.solution, dir.join(&tag))?);
    }
    if config.output.matrices {
        files.extend(emit_matrices(&finest.disc, dir.join(&tag))?);
    }
    Ok(RunOutput { study, files })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::ErrorRow;
    use crate::spaces::read_vtk_array;

    fn row(elements: usize, e: f64) -> ErrorRow {
        ErrorRow {
            elements,
            h: 1.0 / elements as f64,
            err_y: e,
            err_u: e,
            err_z: e,
            err_pn: e,
        }
    }

    #[test]
    fn scientific_cells() {
        assert_eq!(format_sci(0.0164), "1.64e-02");
        assert_eq!(format_sci(1.0), "1.00e+00");
        assert_eq!(format_sci(6.63), "6.63e+00");
        assert_eq!(format_sci(3.29e-5), "3.29e-05");
        assert_eq!(format_sci(123456.0), "1.23e+05");
    }

    #[test]
    fn single_row_has_empty_rates() {
        let report = ErrorReport { rows: vec![row(32, 0.04)] };
        let csv = render_table(&report, TableFormat::Csv).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        let cells: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(cells.len(), 10);
        for c in [3, 5, 7, 9] {
            assert_eq!(cells[c], "");
        }
    }

    #[test]
    fn halving_gives_rate_one() {
        let report = ErrorReport {
            rows: vec![row(32, 0.04), row(128, 0.02)],
        };
        let csv = render_table(&report, TableFormat::Csv).unwrap();
        let cells: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
        assert_eq!(cells[3], "1.00");
        assert_eq!(cells[2], "2.00e-02");
        let md = render_table(&report, TableFormat::Markdown).unwrap();
        assert!(md.lines().nth(2).unwrap().contains("| 4.00e-02 | - |"));
        assert!(render_table(&ErrorReport::default(), TableFormat::Csv).is_err());
    }

    #[test]
    fn config_parsing() {
        let c: RunConfig = "[problem]\nexample = 2\nepsilon = 1e-4\n[mesh]\nelements = [32, 128]\nreference_elements = 2048\n"
            .parse()
            .unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.levels, vec![0, 1]);
        assert_eq!(r.reference_level, Some(3));
        assert_eq!(r.problem.data.ub, 0.2);

        let bad = [
            "[problem]\nexampel = 1\n",
            "[mesh]\nelements = [128, 32]\n",
            "[mesh]\nelements = [100]\n",
            "[problem]\nexample = 2\n[mesh]\nelements = [32, 128]\nreference_elements = 128\n",
            "[problem]\nexample = 3\n[mesh]\nlevels = [0, 1]\n",
            "[problem]\nexample = 7\n",
            "[problem]\nepsilon = -1.0\n",
            "[discretization]\ncontrol = \"mixed\"\n",
        ];
        for text in bad {
            let err = text.parse::<RunConfig>().and_then(|c| c.resolve().map(|_| ()));
            assert!(matches!(err, Err(Error::Config(_))), "{text}: {err:?}");
        }
    }

    #[test]
    fn custom_problem_and_bounds() {
        let c: RunConfig = "[problem]\nexample = \"custom\"\ndomain = \"slanted\"\nbeta = [1.0, 0.0]\nsource = 1.0\nlower = 0.0\n[mesh]\nlevels = [0]\nreference_level = 1\n"
            .parse()
            .unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.problem.coarse_mesh().num_elements(), 12);
        assert_eq!(r.problem.data.ua, 0.0);
        assert!(r.problem.data.ub.is_infinite());
    }

    #[test]
    fn field_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c: RunConfig = "[problem]\nexample = 1\n[mesh]\nelements = [32]\n".parse().unwrap();
        let study = run_example(&c).unwrap();
        let level = &study.levels[0];
        let paths = emit_fields(&level.disc, &level.solution, dir.path()).unwrap();
        assert_eq!(paths.len(), 3);
        let text = fs::read_to_string(&paths[0]).unwrap();
        let (cells, y) = read_vtk_array(&text, "y").unwrap();
        assert_eq!(cells, 32);
        for (a, b) in y.iter().zip(level.solution.y.values()) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
        let text = fs::read_to_string(&paths[2]).unwrap();
        let (_, u) = read_vtk_array(&text, "u").unwrap();
        assert_eq!(u.len(), 2 * level.disc.mesh().boundary_edges().len());
    }

    #[test]
    fn zero_solution_files() {
        let dir = tempfile::tempdir().unwrap();
        let problem = crate::problems::manufactured(1.0, 1.0).unwrap();
        let data = ProblemData::new(1.0, 1.0);
        let disc = Discretization::new(problem.mesh(0).unwrap(), data, DiscretizationOptions::default()).unwrap();
        let sol = crate::control::pdas_solve(
            &disc,
            crate::control::ControlMode::for_data(ControlSpace::Full, 1.0),
            None,
            PdasOptions::default(),
        )
        .unwrap();
        let paths = emit_fields(&disc, &sol, dir.path()).unwrap();
        for (p, name) in paths.iter().zip(["y", "z", "u"]) {
            let (_, data) = read_vtk_array(&fs::read_to_string(p).unwrap(), name).unwrap();
            assert!(!data.is_empty());
            assert!(data.iter().all(|v| *v == 0.0), "{name}");
        }
        assert!(emit_table(&ErrorReport { rows: vec![row(32, 0.1)] }, TableFormat::Csv, dir.path().join("missing/x.csv")).is_err());
    }

    #[test]
    fn identical_configs_give_identical_bytes() {
        let root = tempfile::tempdir().unwrap();
        let text = "[problem]\nexample = 1\n[mesh]\nelements = [32, 128]\n[output]\ndirectory = \"a\"\nvtk = true\n";
        let c: RunConfig = text.parse().unwrap();
        let first = execute(&c, root.path()).unwrap();
        let before: Vec<Vec<u8>> = first.files.iter().map(|p| fs::read(p).unwrap()).collect();
        let second = execute(&c, root.path()).unwrap();
        let after: Vec<Vec<u8>> = second.files.iter().map(|p| fs::read(p).unwrap()).collect();
        assert_eq!(before, after);
        assert_eq!(first.files.len(), 5);
    }
}
