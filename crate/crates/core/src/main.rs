use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use spinchain::config::{GammaPreset, Scenario, ScenarioConfig, OUT_DIR_ENV};
use spinchain::diagnostics::{cnot_leakage, cnot_state_error, compare_regimes, ComparisonSummary};
use spinchain::export::{emit_plot, write_record_csv, write_summary_csv, DEFAULT_PLOT_COLUMNS};
use spinchain::integrator::TrajectoryRecord;
use spinchain::oracle::run_discrepancy_report;
use spinchain::{DissipatorMode, Error, Result};

#[derive(Parser)]
#[command(
    name = "spinchain",
    version,
    about = "Decoherence of a CNOT gate on a three-spin NMR chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trajectory.
    Run(Common),
    /// Run the scenario in both dissipator modes and compare them.
    Compare(Common),
    /// Cold/hot x low/high dissipation x both modes: eight runs.
    Matrix(MatrixArgs),
    /// Check the element tables against the operator-built generator.
    Oracle(OracleArgs),
    /// Run the scenario in both modes and report the invariant monitors.
    Validate(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// markov or quasi.
    #[arg(long)]
    mode: Option<String>,
    /// Bath temperature [K].
    #[arg(long)]
    temperature: Option<f64>,
    /// Dissipation rate [MHz].
    #[arg(long, conflicts_with = "preset")]
    gamma: Option<f64>,
    /// Named dissipation rate: lo or hi.
    #[arg(long)]
    preset: Option<String>,
    /// Rabi frequency [MHz].
    #[arg(long)]
    rabi: Option<f64>,
    /// Integration step [us].
    #[arg(long)]
    dt: Option<f64>,
    /// End time [us].
    #[arg(long)]
    horizon: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    common: Common,
    /// Low dissipation rate [MHz].
    #[arg(long)]
    gamma_low: Option<f64>,
    /// High dissipation rate [MHz].
    #[arg(long)]
    gamma_high: Option<f64>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(c: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &c.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        cfg.run.out_dir = Some(PathBuf::from(dir));
    }
    if let Some(m) = &c.mode {
        cfg.run.mode = Some(m.clone());
    }
    if let Some(t) = c.temperature {
        cfg.bath.temperature_k = Some(t);
    }
    if let Some(g) = c.gamma {
        cfg.set_gamma_mhz(g);
    }
    if let Some(p) = &c.preset {
        cfg.set_preset(p.parse()?);
    }
    if let Some(r) = c.rabi {
        cfg.system.rabi_mhz = Some(r);
    }
    if let Some(dt) = c.dt {
        cfg.integrator.dt_us = Some(dt);
    }
    if let Some(h) = c.horizon {
        cfg.sequence.horizon_us = Some(h);
    }
    if let Some(o) = &c.out {
        cfg.run.out_dir = Some(o.clone());
    }
    if let Some(s) = c.seed {
        cfg.run.seed = Some(s);
    }
    Ok(cfg)
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_run(record: &TrajectoryRecord, dir: &Path, stem: &str, plot: bool) -> Result<PathBuf> {
    let csv = dir.join(format!("{stem}.csv"));
    write_record_csv(record, &csv)?;
    if plot {
        emit_plot(
            record,
            DEFAULT_PLOT_COLUMNS,
            &dir.join(format!("{stem}.svg")),
        )?;
    }
    Ok(csv)
}

fn print_run(label: &str, record: &TrajectoryRecord) {
    let last = record
        .final_sample()
        .expect("a run has at least one sample");
    let pops = record
        .populations
        .last()
        .expect("populations track samples");
    println!(
        "{label}: t = {} us, steps = {}, rho_11 = {:.6}, rho_44 = {:.6}, rho_88 = {:.6}, |rho_14| = {:.6}, purity = {:.6}",
        last.t, record.steps, pops[0], pops[3], pops[pops.len() - 1], last.coherences[1], last.purity
    );
    print_peaks(label, record);
}

fn print_peaks(label: &str, record: &TrajectoryRecord) {
    println!(
        "{label}: peak trace deviation {:.3e}, peak Hermiticity deviation {:.3e}, min eigenvalue {:.3e}",
        record.peak.trace_dev, record.peak.herm_dev, record.peak.min_eig
    );
}

fn print_summary(label: &str, s: &ComparisonSummary) {
    println!(
        "{label}: max |d diag| = {:.3e}, max |d coherence| = {:.3e}, max |d purity| = {:.3e}",
        s.max_diag(),
        s.max_coherence(),
        s.max_purity()
    );
}

fn cmd_run(c: &Common) -> Result<()> {
    let s = load_config(c)?.resolve()?;
    out_dir(&s.out_dir)?;
    let record = s.run()?;
    let csv = write_run(&record, &s.out_dir, &format!("run_{}", s.mode), s.plot)?;
    print_run(s.mode.as_str(), &record);
    if let Some(snap) = record.pulse_ends.get(1) {
        println!(
            "after pulse 2 (t = {} us): CNOT state error {:.4}, leakage {:.4}",
            snap.t,
            cnot_state_error(&snap.rho),
            cnot_leakage(&snap.rho)
        );
    }
    println!("wrote {}", csv.display());
    Ok(())
}

fn cmd_compare(c: &Common) -> Result<()> {
    let s = load_config(c)?.resolve()?;
    out_dir(&s.out_dir)?;
    let cmp = compare_regimes(&s)?;
    write_run(&cmp.markov, &s.out_dir, "markov", s.plot)?;
    write_run(&cmp.quasi, &s.out_dir, "quasi", s.plot)?;
    write_summary_csv(&cmp.summary, &s.out_dir.join("comparison.csv"))?;
    print_run("markov", &cmp.markov);
    print_run("quasi", &cmp.quasi);
    print_summary("markov vs quasi", &cmp.summary);
    Ok(())
}

fn temperature_tag(t: f64) -> String {
    format!("T{t}")
}

fn cmd_matrix(m: &MatrixArgs) -> Result<()> {
    let cfg = load_config(&m.common)?;
    let hot = cfg.bath.temperature_k.unwrap_or(300.0);
    let gammas = [
        (
            GammaPreset::Lo,
            m.gamma_low.unwrap_or(GammaPreset::Lo.mhz()),
        ),
        (
            GammaPreset::Hi,
            m.gamma_high.unwrap_or(GammaPreset::Hi.mhz()),
        ),
    ];
    let mut jobs = Vec::new();
    for temp in [0.0, hot] {
        for (tag, g) in gammas {
            for mode in DissipatorMode::ALL {
                let mut c = cfg.clone();
                c.bath.temperature_k = Some(temp);
                c.set_gamma_mhz(g);
                c.run.mode = Some(mode.as_str().to_string());
                let name = format!("{}_{}_{}", temperature_tag(temp), tag, mode);
                jobs.push((name, c.resolve()?));
            }
        }
    }
    let dir = jobs[0].1.out_dir.clone();
    out_dir(&dir)?;

    let results: Vec<(String, Result<TrajectoryRecord>)> = jobs
        .par_iter()
        .map(|(name, s)| (name.clone(), s.run()))
        .collect();
    let mut records = Vec::new();
    for ((name, s), (_, res)) in jobs.iter().zip(results) {
        let record = res?;
        write_run(&record, &dir, name, s.plot)?;
        print_peaks(name, &record);
        records.push((name.clone(), record));
    }

    let mut lines = Vec::new();
    for pair in records.chunks(2) {
        let (markov, quasi) = (&pair[0], &pair[1]);
        let stem = markov.0.trim_end_matches("_markov");
        let summary = spinchain::diagnostics::compare_records(&markov.1, &quasi.1)?;
        write_summary_csv(&summary, &dir.join(format!("{stem}_comparison.csv")))?;
        print_summary(stem, &summary);
        lines.push(format!(
            "{stem},{},{},{}",
            summary.max_diag(),
            summary.max_coherence(),
            summary.max_purity()
        ));
    }
    let path = dir.join("matrix_summary.csv");
    let text = format!(
        "scenario,max_diag_diff,max_coherence_diff,max_purity_diff\n{}\n",
        lines.join("\n")
    );
    fs::write(&path, text).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    println!(
        "wrote {} files to {}",
        records.len() * 2 + lines.len() + 1,
        dir.display()
    );
    Ok(())
}

fn cmd_oracle(o: &OracleArgs) -> Result<bool> {
    let dir = o
        .out
        .clone()
        .or_else(|| std::env::var(OUT_DIR_ENV).ok().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    out_dir(&dir)?;
    let report = run_discrepancy_report(o.samples, o.seed)?;
    report.write_text(&dir.join("oracle_report.txt"))?;
    report.write_csv(&dir.join("oracle_report.csv"))?;
    print!("{}", report.to_text());
    Ok(report.passed())
}

/// Tolerances the monitors must meet on every run.
const TRACE_TOL: f64 = 1e-8;
const HERM_TOL: f64 = 1e-10;
const EIG_TOL: f64 = -1e-6;

fn cmd_validate(c: &Common) -> Result<bool> {
    let s: Scenario = load_config(c)?.resolve()?;
    let mut ok = true;
    for mode in DissipatorMode::ALL {
        let record = s.with_mode(mode).run()?;
        print_peaks(mode.as_str(), &record);
        let pass = record.peak.trace_dev <= TRACE_TOL
            && record.peak.herm_dev <= HERM_TOL
            && record.peak.min_eig >= EIG_TOL;
        println!(
            "{}: {} (trace <= {TRACE_TOL:e}, Hermiticity <= {HERM_TOL:e}, eigenvalues >= {EIG_TOL:e})",
            mode,
            if pass { "PASS" } else { "FAIL" }
        );
        ok &= pass;
    }
    Ok(ok)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Argument(_) => 2,
        Error::Integrity { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => cmd_run(c).map(|_| true),
        Command::Compare(c) => cmd_compare(c).map(|_| true),
        Command::Matrix(m) => cmd_matrix(m).map(|_| true),
        Command::Oracle(o) => cmd_oracle(o),
        Command::Validate(c) => cmd_validate(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let kind = match exit_code(&e) {
                2 => "usage error",
                3 => "integrity error",
                _ => "error",
            };
            eprintln!("spinchain: {kind}: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
