//! Command-line front end: design one instance, sweep budget grids into CSV,
//! run the exhaustive-search oracle, or verify the bundled reference
//! constants.
//!
//! Exit codes: 0 success, 2 parse error, 3 validation error, 4 infeasible
//! epsilon, 5 numerical error (verify also returns 5 when a golden constant
//! mismatches).

use clap::{Parser, Subcommand, ValueEnum};
use fairgeo::designer::{solve, DesignSolution};
use fairgeo::dist::{entropy, LogBase};
use fairgeo::error::{Error, Result};
use fairgeo::geometry::{build_operators, ProblemInstance};
use fairgeo::instance::InstanceFile;
use fairgeo::oracle::{grid_search, Measure};
use fairgeo::reference::{verify_golden_values, CheckKind};
use fairgeo::sweep::{fmt_sig10, run_sweep, write_csv, write_plot_data};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UnitArg {
    Nats,
    Bits,
}

impl From<UnitArg> for LogBase {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Nats => LogBase::Nats,
            UnitArg::Bits => LogBase::Bits,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "fairgeo",
    version,
    about = "Representation design under a point-wise chi-squared parity budget"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and report the designed representation.
    Design {
        /// Instance file (TOML).
        instance: PathBuf,
        /// Write a machine-readable copy of the report (TOML).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Unit for the headline numbers in the text report.
        #[arg(long, value_enum, default_value = "nats")]
        log_base: UnitArg,
    },
    /// Sweep the eps (and optionally rate) grids and emit CSV.
    Sweep {
        instance: PathBuf,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write a whitespace-separated data file for plotting.
        #[arg(long)]
        plot_data: Option<PathBuf>,
        /// Override the oracle grid resolution.
        #[arg(long)]
        grid_resolution: Option<usize>,
        /// Override the representation alphabet size used by the oracles.
        #[arg(long)]
        y_cardinality: Option<usize>,
    },
    /// Run the exhaustive-search oracle on one instance.
    Oracle {
        instance: PathBuf,
        #[arg(long, value_enum)]
        measure: Option<Measure>,
        #[arg(long)]
        grid_resolution: Option<usize>,
        #[arg(long)]
        y_cardinality: Option<usize>,
        #[arg(long, value_enum, default_value = "nats")]
        log_base: UnitArg,
        /// Write the oracle result (TOML).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check an instance against the bundled known-good constants.
    Verify { instance: PathBuf },
}

#[derive(Serialize)]
struct DesignReport {
    eps: f64,
    rate: f64,
    sigma: f64,
    used_second_singular_pair: bool,
    k_factor: f64,
    p2_nats: f64,
    p2_bits: f64,
    c1: f64,
    c2: f64,
    p_y: Vec<f64>,
    l_vectors: Vec<Vec<f64>>,
    /// Column-major conditionals, one column per representation value.
    p_s_given_y: Vec<Vec<f64>>,
    p_t_given_y: Vec<Vec<f64>>,
    p_x_given_y: Vec<Vec<f64>>,
    realizable: bool,
    tight: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_y_given_x: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    joint: Vec<JointRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct JointRow {
    s: usize,
    t: usize,
    x: usize,
    y: usize,
    p: f64,
}

fn build_report(inst: &ProblemInstance, sol: &DesignSolution) -> Result<DesignReport> {
    let ops = build_operators(inst)?;
    let mut warnings = Vec::new();
    if !ops.eps_within_thresholds(inst.eps()) {
        warnings.push(format!(
            "eps = {} is above the local-approximation thresholds (c1 = {:.6}, c2 = {:.6}); \
             second-order quantities are heuristic here",
            inst.eps(),
            ops.c1,
            ops.c2
        ));
    }
    if let Some(inf) = sol.infeasibility {
        warnings.push(format!(
            "no channel realizes the design at this eps: p_x_given_y[{}] entry {} = {:.3e}",
            inf.y, inf.index, inf.value
        ));
    }
    let joint = match &sol.joint {
        Some(j) => {
            let [ns, nt, nx, ny] = j.dims();
            let mut rows = Vec::with_capacity(ns * nt * nx * ny);
            for s in 0..ns {
                for t in 0..nt {
                    for x in 0..nx {
                        for y in 0..ny {
                            rows.push(JointRow {
                                s,
                                t,
                                x,
                                y,
                                p: j.get(s, t, x, y),
                            });
                        }
                    }
                }
            }
            rows
        }
        None => Vec::new(),
    };
    Ok(DesignReport {
        eps: inst.eps(),
        rate: inst.rate(),
        sigma: sol.sigma,
        used_second_singular_pair: sol.used_second,
        k_factor: sol.k_factor,
        p2_nats: sol.p2_value,
        p2_bits: sol.p2_value / std::f64::consts::LN_2,
        c1: ops.c1,
        c2: ops.c2,
        p_y: sol.design.p_y().as_slice().to_vec(),
        l_vectors: sol.design.l_vectors().to_vec(),
        p_s_given_y: sol.p_s_given_y.matrix().columns(),
        p_t_given_y: sol.p_t_given_y.matrix().columns(),
        p_x_given_y: sol.p_x_given_y.columns(),
        realizable: sol.is_realizable(),
        tight: sol.tightness,
        p_y_given_x: sol.p_y_given_x.as_ref().map(|c| c.matrix().columns()),
        joint,
        warnings,
    })
}

fn vec_str(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", items.join(", "))
}

fn cmd_design(path: &Path, output: Option<&PathBuf>, unit: LogBase) -> Result<()> {
    let file = InstanceFile::load(path)?;
    let inst = file.to_instance()?;
    let sol = solve(&inst)?;
    let report = build_report(&inst, &sol)?;

    let (unit_name, p2_in_unit) = match unit {
        LogBase::Nats => ("nats", report.p2_nats),
        LogBase::Bits => ("bits", report.p2_bits),
    };
    println!("instance: {}", path.display());
    println!(
        "  eps = {}  rate = {} nats  (H(X) = {:.6} bits)",
        report.eps,
        report.rate,
        entropy(inst.p_x(), LogBase::Bits)
    );
    println!(
        "  sigma = {:.6}{}  K = {:.6}",
        report.sigma,
        if report.used_second_singular_pair {
            " (second singular pair; top value is the unit one)"
        } else {
            ""
        },
        report.k_factor
    );
    println!(
        "  objective = {} {unit_name}  ({} nats, {} bits){}",
        fmt_sig10(p2_in_unit),
        fmt_sig10(report.p2_nats),
        fmt_sig10(report.p2_bits),
        if report.tight {
            "  [tight]"
        } else {
            "  [lower bound]"
        }
    );
    println!("  p_y = {}", vec_str(&report.p_y));
    for (y, l) in report.l_vectors.iter().enumerate() {
        println!("  l[{y}] = {}", vec_str(l));
    }
    for (name, cols) in [
        ("p_s_given_y", &report.p_s_given_y),
        ("p_t_given_y", &report.p_t_given_y),
        ("p_x_given_y", &report.p_x_given_y),
    ] {
        for (y, col) in cols.iter().enumerate() {
            println!("  {name}[y={y}] = {}", vec_str(col));
        }
    }
    match &report.p_y_given_x {
        Some(cols) => {
            for (x, col) in cols.iter().enumerate() {
                println!("  p_y_given_x[x={x}] = {}", vec_str(col));
            }
            println!("  joint: {} entries (see --output)", report.joint.len());
        }
        None => println!("  p_y_given_x: none (design not realizable at this eps)"),
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(out) = output {
        let text = toml::to_string_pretty(&report).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(out, text)?;
        println!("report written to {}", out.display());
    }
    Ok(())
}

fn cmd_sweep(
    path: &Path,
    output: Option<&PathBuf>,
    plot_data: Option<&PathBuf>,
    grid_resolution: Option<usize>,
    y_cardinality: Option<usize>,
) -> Result<()> {
    let file = InstanceFile::load(path)?;
    let inst = file.to_instance()?;
    let sweep = file
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Validation("instance file has no [sweep] block".into()))?;
    let mut cfg = file.oracle_config();
    if let Some(r) = grid_resolution {
        cfg.grid_resolution = r;
    }
    if let Some(y) = y_cardinality {
        cfg.y_cardinality = y;
    }
    let rate_grid = sweep.rate_grid.clone().unwrap_or_else(|| vec![inst.rate()]);
    let records = run_sweep(&inst, &sweep.eps_grid, &rate_grid, &cfg)?;
    for r in records.iter().filter(|r| !r.note.is_empty()) {
        eprintln!("note (eps={}, rate={}): {}", r.eps, r.rate, r.note);
    }
    match output {
        Some(out) => {
            let mut buf = Vec::new();
            write_csv(&mut buf, &records)?;
            fs::write(out, buf)?;
            eprintln!("{} rows written to {}", records.len(), out.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            write_csv(&mut stdout, &records)?;
        }
    }
    if let Some(out) = plot_data {
        let mut buf = Vec::new();
        write_plot_data(&mut buf, &records)?;
        fs::write(out, buf)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleReport {
    measure: Measure,
    grid_resolution: usize,
    y_cardinality: usize,
    best_value_nats: f64,
    best_value_bits: f64,
    evaluated_count: u64,
    feasible_count: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_channel_columns: Option<Vec<Vec<f64>>>,
}

fn cmd_oracle(
    path: &Path,
    measure: Option<Measure>,
    grid_resolution: Option<usize>,
    y_cardinality: Option<usize>,
    unit: LogBase,
    output: Option<&PathBuf>,
) -> Result<()> {
    let file = InstanceFile::load(path)?;
    let inst = file.to_instance()?;
    let mut cfg = file.oracle_config();
    if let Some(m) = measure {
        cfg.measure = m;
    }
    if let Some(r) = grid_resolution {
        cfg.grid_resolution = r;
    }
    if let Some(y) = y_cardinality {
        cfg.y_cardinality = y;
    }
    let res = grid_search(&inst, &cfg)?;
    let in_unit = match unit {
        LogBase::Nats => res.best_value_nats,
        LogBase::Bits => res.best_value_bits,
    };
    println!(
        "best exact task information: {} {}  ({} nats, {} bits)",
        fmt_sig10(in_unit),
        match unit {
            LogBase::Nats => "nats",
            LogBase::Bits => "bits",
        },
        fmt_sig10(res.best_value_nats),
        fmt_sig10(res.best_value_bits)
    );
    println!(
        "evaluated {} channels, {} feasible",
        res.evaluated_count, res.feasible_count
    );
    match &res.best_channel {
        Some(ch) => {
            for x in 0..ch.in_size() {
                println!("  best p_y_given_x[x={x}] = {}", vec_str(&ch.column(x)));
            }
        }
        None => println!("  no feasible channel on the grid"),
    }
    if let Some(out) = output {
        let report = OracleReport {
            measure: cfg.measure,
            grid_resolution: cfg.grid_resolution,
            y_cardinality: cfg.y_cardinality,
            best_value_nats: res.best_value_nats,
            best_value_bits: res.best_value_bits,
            evaluated_count: res.evaluated_count,
            feasible_count: res.feasible_count,
            best_channel_columns: res.best_channel.as_ref().map(|c| c.matrix().columns()),
        };
        let text = toml::to_string_pretty(&report).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(out, text)?;
    }
    Ok(())
}

fn cmd_verify(path: &Path) -> Result<()> {
    let file = InstanceFile::load(path)?;
    let inst = file.to_instance()?;
    let checks = verify_golden_values(&inst)?;
    let mut failures = 0;
    for c in &checks {
        let tag = match (c.passed, c.kind) {
            (true, CheckKind::ExpectedDeviation) => "PASS (expected deviation)",
            (true, _) => "PASS",
            (false, _) => "FAIL",
        };
        println!("{tag:>25}  {:<28} {}", c.name, c.detail);
        if !c.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(Error::Numerical(format!(
            "{failures} of {} checks failed",
            checks.len()
        )));
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Design {
            instance,
            output,
            log_base,
        } => cmd_design(&instance, output.as_ref(), log_base.into()),
        Command::Sweep {
            instance,
            output,
            plot_data,
            grid_resolution,
            y_cardinality,
        } => cmd_sweep(
            &instance,
            output.as_ref(),
            plot_data.as_ref(),
            grid_resolution,
            y_cardinality,
        ),
        Command::Oracle {
            instance,
            measure,
            grid_resolution,
            y_cardinality,
            log_base,
            output,
        } => cmd_oracle(
            &instance,
            measure,
            grid_resolution,
            y_cardinality,
            log_base.into(),
            output.as_ref(),
        ),
        Command::Verify { instance } => cmd_verify(&instance),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
