mod cli;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use gam_core::gap::{compare, render_report};
use gam_core::io::{load_constellation, save_constellation, to_json_string};
use gam_core::metrics::{self, render_table};
use gam_core::mi::{Estimator, GridControls, McControls};
use gam_core::optimize::{solve_g1, G1Problem, G1Result, Init};
use gam_core::par::Exec;
use gam_core::sweep::{capacity_rows, mi_sweep, read_mi_csv, ser_sweep, MiTable, RowFailure, SerTable};
use gam_core::{db_to_linear, Constellation};
use serde::Serialize;

use crate::cli::*;

const OUT_DIR_ENV: &str = "GAM_OUT_DIR";

/// Every row of a sweep failed.
#[derive(Debug)]
struct AllRowsFailed(usize);

impl fmt::Display for AllRowsFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "all {} sweep rows failed", self.0)
    }
}

impl std::error::Error for AllRowsFailed {}

#[derive(Debug)]
struct NotConverged(usize);

impl fmt::Display for NotConverged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "optimizer did not converge after {} iterations", self.0)
    }
}

impl std::error::Error for NotConverged {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<NotConverged>().is_some() {
        3
    } else if e.downcast_ref::<AllRowsFailed>().is_some()
        || matches!(e.downcast_ref::<gam_core::Error>(), Some(gam_core::Error::Numerical(_)))
    {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Metrics(a) => metrics_cmd(a),
        Command::MiSweep(a) => mi_sweep_cmd(a),
        Command::Optimize(a) => optimize(a),
        Command::SerSweep(a) => ser_sweep_cmd(a),
        Command::Compare(a) => compare_cmd(a),
    }
}

fn out_dir() -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)
}

/// Explicit path, else `default_name` in the output directory.
fn file_target(out: &Option<PathBuf>, default_name: &str) -> PathBuf {
    out.clone()
        .unwrap_or_else(|| out_dir().unwrap_or_else(|| ".".into()).join(default_name))
}

/// Explicit path, else `default_name` in the output directory if one is
/// configured, else stdout.
fn stream_target(out: &Option<PathBuf>, default_name: &str) -> Option<PathBuf> {
    out.clone().or_else(|| out_dir().map(|d| d.join(default_name)))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn emit(text: &str, target: Option<PathBuf>) -> Result<()> {
    match target {
        Some(path) => {
            ensure_parent(&path)?;
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn exec(sequential: bool) -> Exec {
    if sequential {
        Exec::Sequential
    } else {
        Exec::default()
    }
}

fn constellations(src: &Source) -> Result<Vec<Constellation>> {
    if let Some(path) = &src.input {
        let c = load_constellation(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(vec![c]);
    }
    let mut out = Vec::new();
    for &scheme in &src.scheme {
        for &n in &src.n {
            out.push(Constellation::build(scheme, n, src.power)?);
        }
    }
    Ok(out)
}

fn estimator(e: &Estimation) -> Estimator {
    match e.method {
        MethodArg::Mc => Estimator::MonteCarlo(McControls {
            samples: e.samples,
            seed: e.seed,
            exec: exec(e.sequential),
        }),
        MethodArg::Grid => Estimator::Grid(GridControls {
            half_width_sigmas: e.half_width,
            nodes_per_axis: e.nodes,
            exec: exec(e.sequential),
        }),
    }
}

fn report_failures(failures: &[RowFailure]) {
    for f in failures {
        eprintln!("warning: {} failed: {}", f.scheme, f.message);
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let c = Constellation::build(a.scheme, a.n, a.power)?;
    let path = file_target(&a.out, &format!("{}-{}.json", a.scheme, a.n));
    ensure_parent(&path)?;
    save_constellation(&c, &path).with_context(|| format!("writing {}", path.display()))?;
    print!("{}", render_table(&metrics::report(&c)));
    println!("written to {}", path.display());
    Ok(())
}

fn metrics_cmd(a: MetricsArgs) -> Result<()> {
    let reports: Vec<_> = constellations(&a.source)?.iter().map(metrics::report).collect();
    match a.format {
        ReportFormat::Text => {
            let tables: Vec<_> = reports.iter().map(render_table).collect();
            print!("{}", tables.join("\n"));
        }
        ReportFormat::Json if reports.len() == 1 => print!("{}", to_json_string(&reports[0])?),
        ReportFormat::Json => print!("{}", to_json_string(&reports)?),
    }
    Ok(())
}

fn write_table<R: Serialize>(t: &gam_core::sweep::SweepTable<R>, out: &Output, default_stem: &str) -> Result<()> {
    let (text, ext) = match out.format {
        TableFormat::Csv => (t.to_csv_string()?, "csv"),
        TableFormat::Json => (t.to_json_string()? + "\n", "json"),
    };
    emit(&text, stream_target(&out.out, &format!("{default_stem}.{ext}")))
}

fn mi_sweep_cmd(a: MiSweepArgs) -> Result<()> {
    let est = estimator(&a.estimation);
    let mut table = MiTable::default();
    for c in constellations(&a.source)? {
        table.extend(mi_sweep(&c, &a.snr.0, &est, exec(a.estimation.sequential))?);
    }
    report_failures(&table.failures);
    if table.rows.is_empty() {
        return Err(AllRowsFailed(table.failures.len()).into());
    }
    table.extend(capacity_rows(&a.snr.0));
    write_table(&table, &a.output, "mi-sweep")
}

fn ser_sweep_cmd(a: SerSweepArgs) -> Result<()> {
    let mut table = SerTable::default();
    for c in constellations(&a.source)? {
        table.extend(ser_sweep(&c, &a.snr.0, a.symbols, a.seed, exec(a.sequential))?);
    }
    report_failures(&table.failures);
    if table.rows.is_empty() {
        return Err(AllRowsFailed(table.failures.len()).into());
    }
    write_table(&table, &a.output, "ser-sweep")
}

#[derive(Serialize)]
struct OptimizeRecord<'a> {
    problem: &'a G1Problem,
    snr_db: f64,
    result: &'a G1Result,
}

fn optimize(a: OptimizeArgs) -> Result<()> {
    let mut p = G1Problem::new(a.n, db_to_linear(a.snr));
    p.papr_cap = a.papr_cap;
    p.init = match a.init {
        InitArg::Hr => Init::FromHr,
        InitArg::Disc => Init::FromDisc,
    };
    p.controls.max_iterations = a.max_iter;
    p.controls.tolerance_bits = a.tol;
    p.controls.grid.nodes_per_axis = a.nodes;
    let r = solve_g1(&p)?;

    let result_path = file_target(&a.out, &format!("g1-{}.result.json", a.n));
    let constellation_path = a.constellation_out.clone().unwrap_or_else(|| {
        result_path
            .parent()
            .unwrap_or(Path::new("."))
            .join(format!("g1-{}.json", a.n))
    });
    let record = OptimizeRecord { problem: &p, snr_db: a.snr, result: &r };
    emit(&to_json_string(&record)?, Some(result_path.clone()))?;
    ensure_parent(&constellation_path)?;
    save_constellation(&r.constellation(a.power)?, &constellation_path)
        .with_context(|| format!("writing {}", constellation_path.display()))?;

    println!("MI        {:.6} bit (start {:.6})", r.mi_bits, r.init_mi_bits);
    println!("PAPR      {:.6} ({:.4} dB)", r.papr, gam_core::linear_to_db(r.papr));
    println!("iterations {} converged {}", r.iterations, r.converged);
    println!("written to {} and {}", result_path.display(), constellation_path.display());
    if !r.converged {
        if a.strict {
            return Err(NotConverged(r.iterations).into());
        }
        eprintln!("warning: optimizer did not converge; best feasible iterate written");
    }
    Ok(())
}

fn compare_cmd(a: CompareArgs) -> Result<()> {
    let mut rows = Vec::new();
    if a.inputs.is_empty() {
        let Some(snr) = &a.snr else {
            bail!(gam_core::Error::InvalidArgument("--snr is required with --scheme".into()));
        };
        let est = estimator(&a.estimation);
        let src = Source {
            scheme: a.scheme.clone(),
            n: a.n.clone(),
            power: a.power,
            input: None,
        };
        let mut table = MiTable::default();
        for c in constellations(&src)? {
            table.extend(mi_sweep(&c, &snr.0, &est, exec(a.estimation.sequential))?);
        }
        report_failures(&table.failures);
        if table.rows.is_empty() {
            return Err(AllRowsFailed(table.failures.len()).into());
        }
        rows = table.rows;
    } else {
        for path in &a.inputs {
            let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            rows.extend(read_mi_csv(f).with_context(|| format!("reading {}", path.display()))?);
        }
    }
    let report = compare(&rows, a.target_mi)?;
    let (text, ext) = match a.format {
        ReportFormat::Text => (render_report(&report), "txt"),
        ReportFormat::Json => (to_json_string(&report)?, "json"),
    };
    emit(&text, stream_target(&a.out, &format!("compare.{ext}")))
}
