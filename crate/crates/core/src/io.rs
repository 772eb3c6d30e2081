//! Run configuration files, JSON reports, CSV series and record files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::PauliHamiltonian;
use crate::pipeline::{
    HamiltonianSource, IsingOutcome, Metrics, ProtocolSpec, RunResult, SweepAxis, SweepTable, DEFAULT_REPEATS,
};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "ZENO_LEARN_OUT";
pub const DEFAULT_OUTPUT_DIR: &str = "zeno-learn-out";
pub const REPORT_FORMAT: u32 = 1;
/// Version tag of the CSV column contracts below; bump on any column change.
pub const SERIES_VERSION: &str = "v1";

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn default_repeats() -> usize {
    DEFAULT_REPEATS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

/// Contents of a TOML run file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: ProtocolSpec,
    pub hamiltonian: HamiltonianSource,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

impl RunConfig {
    /// Parses and validates; nothing is simulated.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).with_context(path.display().to_string()))?;
        Self::from_toml(&text).map_err(|e| e.with_context(path.display().to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.protocol.validate()?;
        if let HamiltonianSource::Inline { .. } = self.hamiltonian {
            self.hamiltonian()?;
        }
        if let Some(s) = &self.sweep {
            if s.grid.is_empty() || s.repeats == 0 {
                return Err(Error::input("sweep needs a nonempty grid and at least one repeat"));
            }
            if s.grid.iter().any(|v| !(*v >= 1.0 && v.is_finite())) {
                return Err(Error::input("sweep grid values must be finite and at least 1"));
            }
        }
        Ok(())
    }

    /// The Hamiltonian of a single run (first draw of a random source).
    pub fn hamiltonian(&self) -> Result<PauliHamiltonian> {
        self.hamiltonian.build(self.protocol.n_qubits, 0)
    }

    /// Configured directory, else the environment default.
    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(default_output_dir)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Report {
    Run(RunResult),
    Sweep(SweepTable),
    Ising(IsingOutcome),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ReportDocument {
    format: u32,
    #[serde(flatten)]
    report: Report,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let doc = ReportDocument {
            format: REPORT_FORMAT,
            report: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ReportDocument = serde_json::from_str(text)?;
        if doc.format != REPORT_FORMAT {
            return Err(Error::Parse(format!(
                "report format {} is not supported (expected {REPORT_FORMAT})",
                doc.format
            )));
        }
        Ok(doc.report)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).with_context(path.display().to_string()))?;
        Self::from_json(&text).map_err(|e| e.with_context(path.display().to_string()))
    }

    /// The run whose terms are tabulated, if any.
    pub fn run(&self) -> Option<&RunResult> {
        match self {
            Report::Run(r) => Some(r),
            Report::Ising(o) => Some(&o.run),
            Report::Sweep(_) => None,
        }
    }

    /// CSV files for plotting, as (file name, contents).
    pub fn csv_series(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if let Report::Sweep(t) = self {
            out.push((format!("error-vs-{}.csv", t.axis), sweep_csv(t)));
        }
        if let Some(run) = self.run() {
            out.push(("terms.csv".to_string(), terms_csv(&run.metrics)));
        }
        out
    }

    /// Human-readable summary.
    pub fn render(&self) -> String {
        match self {
            Report::Run(r) => render_run(r),
            Report::Sweep(t) => render_sweep(t),
            Report::Ising(o) => {
                let mut s = render_run(&o.run);
                let _ = writeln!(s, "ising h = {:?}, J = {:?}", o.params.h, o.params.j);
                let _ = writeln!(
                    s,
                    "median h_hat {:?}  median J_hat {:?}  median lambda {:?}  median rel error {:?}",
                    o.median_h, o.median_j, o.median_lambda, o.median_rel
                );
                s
            }
        }
    }
}

/// Full-precision float cell; empty for missing values.
fn cell(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x.is_nan() => "nan".into(),
        Some(x) => format!("{x:?}"),
    }
}

fn series_header(name: &str, columns: &[&str]) -> String {
    format!("# zeno-learn series {SERIES_VERSION}: {name}\n{}\n", columns.join(","))
}

pub const SWEEP_COLUMNS: [&str; 12] = [
    "value",
    "n_qubits",
    "r",
    "shots",
    "total_copies",
    "repeats",
    "failures",
    "l2_mean",
    "l2_std",
    "mean_abs_mean",
    "mean_abs_std",
    "zeno_epsilon",
];

pub const TERM_COLUMNS: [&str; 5] = ["pauli", "truth", "estimate", "abs_error", "rel_error"];

/// One row per grid point: error means and standard deviations over repeats.
pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = series_header(&format!("error-vs-{}", table.axis), &SWEEP_COLUMNS);
    for p in &table.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            cell(Some(p.value)),
            p.n_qubits,
            p.r,
            p.shots,
            p.total_copies.map(|c| c.to_string()).unwrap_or_default(),
            p.l2.len(),
            p.failures.len(),
            cell(Some(p.l2_mean)),
            cell(Some(p.l2_std)),
            cell(Some(p.mean_abs_mean)),
            cell(Some(p.mean_abs_std)),
            cell(p.zeno_epsilon),
        );
    }
    out
}

/// One row per coefficient of the global basis.
pub fn terms_csv(metrics: &Metrics) -> String {
    let mut out = series_header("per-term-error", &TERM_COLUMNS);
    for t in &metrics.terms {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            t.pauli,
            cell(Some(t.truth)),
            cell(Some(t.estimate)),
            cell(Some(t.abs_error)),
            cell(t.rel_error)
        );
    }
    out
}

fn render_run(r: &RunResult) -> String {
    let s = &r.spec;
    let mut out = String::new();
    let _ = writeln!(out, "spec hash {}", r.provenance.spec_hash);
    let _ = writeln!(
        out,
        "N = {}  T = {:?}  r = {}  shots = {}  evolution = {:?}  seed = {}",
        s.n_qubits, s.t, s.r, s.shots, s.evolution, s.seed
    );
    if let Some(c) = r.total_copies {
        let _ = writeln!(out, "total copies {c}");
    }
    let m = &r.metrics;
    let _ = writeln!(
        out,
        "l2 error {:?}  mean abs {:?}  max abs {:?}  median rel {}",
        m.l2,
        m.mean_abs,
        m.max_abs,
        cell(m.median_rel)
    );
    if let Some(z) = r.zeno_epsilon {
        let _ = writeln!(out, "zeno channel error {z:?}");
    }
    for p in &r.patches {
        let _ = writeln!(
            out,
            "  config {} patch {}: l2 {:?}  lambda {:?}  gap [{:?}, {:?}]  bound {}",
            p.offset,
            p.patch,
            p.error_l2,
            p.lambda_debiased,
            p.diamond_gap.lower,
            p.diamond_gap.upper,
            cell(p.coefficient_error_bound)
        );
    }
    let b = &r.bounds;
    let _ = writeln!(
        out,
        "bounds: C_Z {:?}  r required {}{}  copies per patch {}  aggregate copies {}",
        b.c_z,
        b.r_required,
        if b.r_vacuous { " (vacuous)" } else { "" },
        b.n_copies_required,
        b.aggregate.n_copies_required
    );
    out
}

fn render_sweep(t: &SweepTable) -> String {
    let mut out = format!("sweep over {} with {} repeats\n", t.axis, t.repeats);
    for p in &t.points {
        let _ = writeln!(
            out,
            "  {:>12}: l2 {} +- {}  mean abs {} +- {}{}",
            cell(Some(p.value)),
            cell(Some(p.l2_mean)),
            cell(Some(p.l2_std)),
            cell(Some(p.mean_abs_mean)),
            cell(Some(p.mean_abs_std)),
            if p.failures.is_empty() {
                String::new()
            } else {
                format!("  ({} failed)", p.failures.len())
            }
        );
    }
    out
}

/// Writes one text file per tomography record under `dir`; returns the paths.
pub fn write_records(dir: &Path, run: &RunResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    run.records
        .iter()
        .zip(&run.patches)
        .map(|(rec, p)| {
            let qubits: Vec<String> = p.patch.qubits().iter().map(|q| q.to_string()).collect();
            let path = dir.join(format!("offset{}-patch{}.txt", p.offset, qubits.join("-")));
            fs::write(&path, rec.to_text())?;
            Ok(path)
        })
        .collect()
}
