use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use zeno_learn::bounds::{bound_report, qpt_constant, required_copies, ErrorBudget, NormChoice};
use zeno_learn::dynamics::IsingParams;
use zeno_learn::hamiltonian::random_2local_chain;
use zeno_learn::io::{default_output_dir, write_records, Report, RunConfig};
use zeno_learn::pipeline::{ising_experiment, run_protocol, sweep};
use zeno_learn::qpt::Shots;
use zeno_learn::zeno::plan_configurations;
use zeno_learn::Error;

#[derive(Parser)]
#[command(name = "zeno-learn", version, about = "Hamiltonian learning on 1D chains by Zeno reshaping and patch tomography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the reshaping configurations of an N-qubit chain.
    Plan {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        json: bool,
    },
    /// Print tomography and Zeno resource bounds.
    Bounds {
        /// Qubits per tomographed patch.
        #[arg(long, default_value_t = 2)]
        n_patch: u32,
        /// Tomography accuracy for the per-patch copy count; the full report
        /// splits it evenly between Zeno and tomography.
        #[arg(long, default_value_t = zeno_learn::bounds::DEFAULT_EPSILON)]
        eps: f64,
        #[arg(long, default_value_t = zeno_learn::bounds::DEFAULT_DELTA)]
        delta: f64,
        /// Chain length; with --t, adds the full report for a random chain.
        #[arg(long, requires = "t")]
        n: Option<usize>,
        #[arg(long, requires = "n")]
        t: Option<f64>,
        /// Seed of the random chain used for the norm.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        exact_norm: bool,
    },
    /// Run the protocol once from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep copies, kicks or chain length as set in the config's [sweep] table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trotterized Ising chain with depolarizing noise.
    Ising {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0.125)]
        h: f64,
        #[arg(long = "J", default_value_t = 0.0625)]
        j: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 10)]
        r: u64,
        /// Shots per setting, or "exact".
        #[arg(long, default_value = "900")]
        shots: Shots,
        /// Depolarizing strength; 0 disables noise.
        #[arg(long, default_value_t = 0.48)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render a report and write its CSV series.
    Report {
        file: PathBuf,
        /// Directory for the CSV files; defaults to the report's directory.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
    },
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return fail("usage", e.to_string().trim(), 1);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = match e.kind() {
                "numeric" | "internal" => 2,
                _ => 1,
            };
            fail(e.kind(), &e.to_string(), code)
        }
    }
}

fn write_series(report: &Report, dir: &Path) -> zeno_learn::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in report.csv_series() {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn finish(report: &Report, dir: &Path, name: &str) -> zeno_learn::Result<()> {
    report.write(&dir.join(name))?;
    write_series(report, dir)?;
    if let Some(run) = report.run() {
        if !run.records.is_empty() {
            write_records(&dir.join("records"), run)?;
        }
    }
    print!("{}", report.render());
    println!("wrote {}", dir.join(name).display());
    Ok(())
}

fn execute(command: Command) -> zeno_learn::Result<()> {
    match command {
        Command::Plan { n, json } => {
            let configs = plan_configurations(n)?;
            if json {
                let rows: Vec<_> = configs
                    .iter()
                    .map(|c| {
                        json!({
                            "offset": c.offset,
                            "layout": c.layout(),
                            "frozen": c.frozen,
                            "patches": c.patches,
                        })
                    })
                    .collect();
                println!("{}", serde_json::to_string_pretty(&rows)?);
            } else {
                for c in &configs {
                    let frozen: Vec<String> = c.frozen.iter().map(|q| q.to_string()).collect();
                    let patches: Vec<String> = c.patches.iter().map(|p| p.to_string()).collect();
                    println!(
                        "offset {}  {}  frozen {{{}}}  patches {}",
                        c.offset,
                        c.layout(),
                        frozen.join(","),
                        patches.join(" ")
                    );
                }
            }
            Ok(())
        }
        Command::Bounds {
            n_patch,
            eps,
            delta,
            n,
            t,
            seed,
            exact_norm,
        } => {
            let mut out = json!({
                "n_patch": n_patch,
                "epsilon": eps,
                "delta": delta,
                "c_qpt": qpt_constant(n_patch),
                "n_copies_required": required_copies(n_patch, eps, delta, None)?,
            });
            if let (Some(n), Some(t)) = (n, t) {
                let configs = plan_configurations(n)?;
                let n_p: usize = configs.iter().map(|c| c.patches.len()).sum();
                let h = random_2local_chain(n, seed)?;
                let norm = if exact_norm { NormChoice::Exact } else { NormChoice::Certified };
                let report = bound_report(&h, t, ErrorBudget::even(eps, delta)?, configs.len() as u32, n_p as u32, norm)?;
                out["report"] = serde_json::to_value(report)?;
            }
            println!("C_QPT = {}", qpt_constant(n_patch));
            println!("copies per patch = {}", out["n_copies_required"]);
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(())
        }
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let h = cfg.hamiltonian()?;
            let run = run_protocol(&h, &cfg.protocol)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir());
            finish(&Report::Run(run), &dir, "report.json")
        }
        Command::Sweep { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let s = cfg
                .sweep
                .clone()
                .ok_or_else(|| Error::input("config has no [sweep] table"))?;
            let table = sweep(s.axis, &s.grid, &cfg.protocol, &cfg.hamiltonian, s.repeats)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir());
            finish(&Report::Sweep(table), &dir, "sweep.json")
        }
        Command::Ising {
            n,
            h,
            j,
            t,
            r,
            shots,
            lambda,
            seed,
            out,
        } => {
            let noise = (lambda > 0.0).then_some(lambda);
            let outcome = ising_experiment(n, IsingParams { h, j }, t, r, shots, noise, seed)?;
            finish(&Report::Ising(outcome), &out.unwrap_or_else(default_output_dir), "ising.json")
        }
        Command::Report { file, csv_dir } => {
            let report = Report::read(&file)?;
            print!("{}", report.render());
            let dir = csv_dir.unwrap_or_else(|| file.parent().map(Path::to_path_buf).unwrap_or_default());
            write_series(&report, &dir)
        }
    }
}
