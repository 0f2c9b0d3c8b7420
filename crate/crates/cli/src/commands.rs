use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use heatmom::compare::{compare_occupation, AccuracyHistogram};
use heatmom::galerkin::galerkin_tables;
use heatmom::relaxation::{build_problem, Relaxation};
use heatmom::solver::sdpa::{import_solution as read_solution, write_sdpa};
use heatmom::solver::solve as solve_problem;
use heatmom::{AnalyticOracle, MeasureTables64, SolveReport64, SolveStatus, TruncationDegrees};
use serde::Serialize;

use crate::config::Run;
use crate::CliError;

pub const STANDARD_SIZES: [(u32, u32, u32); 12] = [
    (2, 2, 2),
    (4, 2, 2),
    (6, 2, 2),
    (6, 2, 4),
    (2, 4, 2),
    (4, 4, 2),
    (6, 4, 2),
    (4, 4, 4),
    (6, 4, 4),
    (6, 4, 6),
    (6, 6, 4),
    (6, 6, 6),
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(io_err(path))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn write_tables(path: &Path, tables: &MeasureTables64) -> Result<(), CliError> {
    tables.write_csv(create(path)?)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn sizes(degrees: &[TruncationDegrees], out: impl Write) -> Result<(), CliError> {
    let rows: Vec<TruncationDegrees> = if degrees.is_empty() {
        STANDARD_SIZES
            .iter()
            .map(|&(t, a, h)| TruncationDegrees::new(t, a, h))
            .collect::<Result<_, _>>()?
    } else {
        degrees.to_vec()
    };
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::Core(e.into());
    w.write_record(["time", "algebraic", "harmonic", "vector_size", "matrix_size"])
        .map_err(csv_err)?;
    for d in rows {
        w.write_record([
            d.time.to_string(),
            d.algebraic.to_string(),
            d.harmonic.to_string(),
            d.moment_vector_len().to_string(),
            d.matrix_basis_len().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Core(e.into()))
}

#[derive(Serialize)]
struct RunReport<'a> {
    model: String,
    degrees: TruncationDegrees,
    num_vars: usize,
    num_equalities: usize,
    block_dims: Vec<usize>,
    #[serde(flatten)]
    solve: &'a SolveReport64,
}

fn relaxation(run: &Run) -> Result<Relaxation<f64>, CliError> {
    Ok(build_problem(&run.model, &run.degrees, &run.initial)?)
}

fn report<'a>(relax: &Relaxation<f64>, solve: &'a SolveReport64) -> RunReport<'a> {
    RunReport {
        model: relax.model.to_string(),
        degrees: relax.degrees,
        num_vars: relax.problem.num_vars,
        num_equalities: relax.problem.equalities.len(),
        block_dims: relax.problem.blocks.iter().map(|b| b.dim).collect(),
        solve,
    }
}

/// Solves and writes the outputs; the status is returned for the caller to act on.
fn solve_and_write(run: &Run) -> Result<(MeasureTables64, SolveStatus), CliError> {
    let relax = relaxation(run)?;
    let (x, rep) = solve_problem(&relax.problem, &run.settings)?;
    let tables = relax.extract_pseudomoments(&x)?;
    write_tables(&run.output_dir.join("pseudomoments.csv"), &tables)?;
    let path = run.output_dir.join("report.json");
    write_json(&path, &report(&relax, &rep))?;
    println!("wrote {}", path.display());
    eprintln!(
        "status {} after {} iterations, objective {:.10e}, {:.2}s",
        rep.status, rep.iterations, rep.primal_objective, rep.seconds
    );
    Ok((tables, rep.status))
}

fn require_optimal(status: SolveStatus) -> Result<(), CliError> {
    if status.is_optimal() {
        Ok(())
    } else {
        Err(CliError::NonOptimal(status))
    }
}

pub fn solve(run: &Run) -> Result<(), CliError> {
    let (_, status) = solve_and_write(run)?;
    require_optimal(status)
}

fn galerkin(run: &Run) -> Result<MeasureTables64, CliError> {
    Ok(galerkin_tables(&run.model, &run.initial, &run.degrees, run.step, run.cutoff)?)
}

fn write_histogram(path: &Path, hist: &AccuracyHistogram) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let csv_err = |e: csv::Error| CliError::Core(e.into());
    w.write_record(["threshold", "count", "total", "percentage"])
        .map_err(csv_err)?;
    for b in &hist.bins {
        w.write_record([
            format!("{:e}", b.threshold),
            b.count.to_string(),
            hist.total.to_string(),
            format!("{:.4}", b.percentage),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// The analytic reference is the linear flow from the same initial data,
/// whatever the configured model.
pub fn compare(run: &Run, reference: &str, estimate: Option<&Path>) -> Result<(), CliError> {
    let reference = match reference {
        "analytic" => AnalyticOracle::new(run.initial.clone()).tables(&run.degrees),
        "galerkin" => galerkin(run)?,
        path => MeasureTables64::read_csv(open(Path::new(path))?)?,
    };
    let (estimate, status) = match estimate {
        Some(path) => (MeasureTables64::read_csv(open(path)?)?, SolveStatus::Optimal),
        None => solve_and_write(run)?,
    };
    let hist = compare_occupation(&estimate.occupation, &reference.occupation)?;
    let path = run.output_dir.join("histogram.csv");
    write_histogram(&path, &hist)?;
    println!("wrote {}", path.display());
    if let Some(worst) = &hist.worst_index {
        eprintln!("worst relative error {:.3e} at {worst}", hist.max_relative_error);
    }
    require_optimal(status)
}

pub fn oracle(run: &Run, analytic: bool) -> Result<(), CliError> {
    let (tables, name) = if analytic {
        if !run.model.is_effectively_linear() {
            return Err(CliError::Config(format!(
                "the analytic oracle only covers the linear flow, not {}",
                run.model
            )));
        }
        (AnalyticOracle::new(run.initial.clone()).tables(&run.degrees), "analytic")
    } else {
        (galerkin(run)?, "galerkin")
    };
    write_tables(&run.output_dir.join(format!("oracle_{name}.csv")), &tables)
}

pub fn export_sdpa(run: &Run, output: Option<PathBuf>) -> Result<(), CliError> {
    let relax = relaxation(run)?;
    let path = output.unwrap_or_else(|| run.output_dir.join("problem.dat-s"));
    let comment = format!("heatmom {} degrees {}", relax.model, relax.degrees);
    let mut w = create(&path)?;
    write_sdpa(&relax.problem, &mut w, &comment)?;
    w.flush().map_err(io_err(&path))?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct Check {
    model: String,
    degrees: TruncationDegrees,
    num_vars: usize,
    objective: f64,
    max_equality_residual: f64,
    min_block_eigenvalue: f64,
}

pub fn import_solution(run: &Run, solution: &Path) -> Result<(), CliError> {
    let relax = relaxation(run)?;
    let x: Vec<f64> = read_solution(open(solution)?, relax.problem.num_vars)?;
    let tables = relax.extract_pseudomoments(&x)?;
    write_tables(&run.output_dir.join("pseudomoments.csv"), &tables)?;
    let check = Check {
        model: relax.model.to_string(),
        degrees: relax.degrees,
        num_vars: relax.problem.num_vars,
        objective: relax.problem.objective_value(&x),
        max_equality_residual: relax.problem.max_equality_residual(&x),
        min_block_eigenvalue: relax.problem.min_block_eigenvalue(&x),
    };
    let path = run.output_dir.join("check.json");
    write_json(&path, &check)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_rows() {
        let mut buf = Vec::new();
        let d = ["0,0,0", "6,4,6"].map(|s| s.parse().unwrap());
        sizes(&d, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "time,algebraic,harmonic,vector_size,matrix_size\n0,0,0,1,1\n6,4,6,16660,420\n"
        );
    }
}
