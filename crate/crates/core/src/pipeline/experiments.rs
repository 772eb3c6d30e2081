use serde::{Deserialize, Serialize};

use crate::dynamics::IsingParams;
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::qpt::Shots;
use crate::zeno::plan_configurations;

use super::metrics::{mean_std, median};
use super::run::{reconstruct, simulate, RunResult, SETTINGS_PER_CONFIG};
use super::seeds::{derive_seed, STREAM_PROTOCOL};
use super::spec::{EvolutionMode, HamiltonianSource, ProtocolSpec};

/// Ising-chain run with per-parameter summaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsingOutcome {
    pub params: IsingParams,
    pub run: RunResult,
    /// Learned `Z_j` coefficients, one per site.
    pub h_estimates: Vec<f64>,
    /// Learned `X_j X_{j+1}` coefficients, one per edge.
    pub j_estimates: Vec<f64>,
    #[serde(with = "super::metrics::nan_as_null")]
    pub median_h: f64,
    #[serde(with = "super::metrics::nan_as_null")]
    pub median_j: f64,
    #[serde(with = "super::metrics::nan_as_null")]
    pub median_lambda: f64,
    /// Median relative error over the nonzero true coefficients.
    #[serde(with = "super::metrics::nan_as_null")]
    pub median_rel: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn ising_experiment(
    n: usize,
    params: IsingParams,
    t: f64,
    r: u64,
    shots: Shots,
    lambda: Option<f64>,
    seed: u64,
) -> Result<IsingOutcome> {
    let spec = ProtocolSpec::new(n, t, r, shots, seed)
        .with_evolution(EvolutionMode::TrotterKicked)
        .with_noise(lambda);
    let h = params.hamiltonian(n)?;
    let run = reconstruct(&h, &spec, &simulate(&h, &spec)?)?;
    let pick = |p: PauliString| -> Result<f64> {
        let key = p.to_string();
        run.metrics
            .terms
            .iter()
            .find(|t| t.pauli == key)
            .map(|t| t.estimate)
            .ok_or_else(|| Error::internal(format!("{key} missing from the estimate")))
    };
    let h_estimates = (0..n)
        .map(|q| pick(PauliString::from_sparse(n, &[(q, crate::Pauli::Z)])?))
        .collect::<Result<Vec<_>>>()?;
    let j_estimates = (0..n - 1)
        .map(|q| pick(PauliString::from_sparse(n, &[(q, crate::Pauli::X), (q + 1, crate::Pauli::X)])?))
        .collect::<Result<Vec<_>>>()?;
    Ok(IsingOutcome {
        params,
        median_h: median(h_estimates.clone()),
        median_j: median(j_estimates.clone()),
        median_lambda: run.median_lambda(),
        median_rel: run.metrics.median_rel.unwrap_or(f64::NAN),
        h_estimates,
        j_estimates,
        run,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Grid values are total copies; shots per setting follow from them.
    Copies,
    /// Grid values are kick numbers `r`.
    Kicks,
    /// Grid values are chain lengths at the base shots per setting.
    Qubits,
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepAxis::Copies => "copies",
            SweepAxis::Kicks => "kicks",
            SweepAxis::Qubits => "qubits",
        })
    }
}

/// Aggregated repeats at one grid value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub n_qubits: usize,
    pub r: u64,
    pub shots: Shots,
    pub total_copies: Option<u64>,
    pub l2: Vec<f64>,
    pub mean_abs: Vec<f64>,
    #[serde(with = "super::metrics::nan_as_null")]
    pub l2_mean: f64,
    #[serde(with = "super::metrics::nan_as_null")]
    pub l2_std: f64,
    #[serde(with = "super::metrics::nan_as_null")]
    pub mean_abs_mean: f64,
    #[serde(with = "super::metrics::nan_as_null")]
    pub mean_abs_std: f64,
    /// Mean over repeats of the Zeno channel error bound, where defined.
    pub zeno_epsilon: Option<f64>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub repeats: usize,
    pub base: ProtocolSpec,
    pub points: Vec<SweepPoint>,
}

pub const DEFAULT_REPEATS: usize = 10;

/// Shots per setting that give about `copies` in total over all configurations.
pub fn shots_for_copies(copies: f64, n_qubits: usize) -> Result<u64> {
    let n_c = plan_configurations(n_qubits)?.len() as f64;
    Ok(((copies / (SETTINGS_PER_CONFIG as f64 * n_c)).round() as u64).max(1))
}

/// Repeats the protocol over `grid`, drawing Hamiltonian `k` of `source` for
/// repeat `k`. Failures are recorded per point and do not stop the sweep.
pub fn sweep(
    axis: SweepAxis,
    grid: &[f64],
    base: &ProtocolSpec,
    source: &HamiltonianSource,
    repeats: usize,
) -> Result<SweepTable> {
    if grid.is_empty() || repeats == 0 {
        return Err(Error::input("sweep needs a nonempty grid and at least one repeat"));
    }
    if grid.iter().any(|v| !(*v >= 1.0 && v.is_finite())) {
        return Err(Error::input("sweep grid values must be finite and at least 1"));
    }
    base.validate()?;
    let specs: Vec<ProtocolSpec> = grid
        .iter()
        .map(|&v| {
            let mut s = base.clone();
            match axis {
                SweepAxis::Copies => s.shots = Shots::Finite(shots_for_copies(v, s.n_qubits)?),
                SweepAxis::Kicks => s.r = v as u64,
                SweepAxis::Qubits => s.n_qubits = v as usize,
            }
            s.validate()?;
            Ok(s)
        })
        .collect::<Result<_>>()?;

    let mut l2 = vec![Vec::new(); grid.len()];
    let mut mean_abs = vec![Vec::new(); grid.len()];
    let mut zeno = vec![Vec::new(); grid.len()];
    let mut failures = vec![Vec::new(); grid.len()];
    let mut record = |i: usize, rep: usize, res: std::result::Result<RunResult, String>| match res {
        Ok(run) => {
            l2[i].push(run.metrics.l2);
            mean_abs[i].push(run.metrics.mean_abs);
            if let Some(z) = run.zeno_epsilon {
                zeno[i].push(z);
            }
        }
        Err(e) => failures[i].push(format!("repeat {rep}: {e}")),
    };

    for rep in 0..repeats {
        let with_seed = |i: usize| {
            let mut s = specs[i].clone();
            s.seed = derive_seed(base.seed, &[STREAM_PROTOCOL, i as u64, rep as u64]);
            s
        };
        match axis {
            // Only the sampling changes along the copies axis: simulate once.
            SweepAxis::Copies => {
                let prepared = source.build(base.n_qubits, rep as u64).and_then(|h| {
                    let data = simulate(&h, base)?;
                    Ok((h, data))
                });
                for i in 0..grid.len() {
                    let res = match &prepared {
                        Ok((h, data)) => reconstruct(h, &with_seed(i), data).map_err(|e| e.to_string()),
                        Err(e) => Err(e.to_string()),
                    };
                    record(i, rep, res);
                }
            }
            SweepAxis::Kicks | SweepAxis::Qubits => {
                for i in 0..grid.len() {
                    let spec = with_seed(i);
                    let res = source
                        .build(spec.n_qubits, rep as u64)
                        .and_then(|h| reconstruct(&h, &spec, &simulate(&h, &spec)?));
                    record(i, rep, res.map_err(|e| e.to_string()));
                }
            }
        }
    }

    let points = grid
        .iter()
        .enumerate()
        .map(|(i, &value)| {
            let (l2_mean, l2_std) = mean_std(&l2[i]);
            let (mean_abs_mean, mean_abs_std) = mean_std(&mean_abs[i]);
            let s = &specs[i];
            let n_c = plan_configurations(s.n_qubits).map(|c| c.len()).unwrap_or(0);
            SweepPoint {
                value,
                n_qubits: s.n_qubits,
                r: s.r,
                shots: s.shots,
                total_copies: super::run::total_copies(s.shots, n_c),
                l2: l2[i].clone(),
                mean_abs: mean_abs[i].clone(),
                l2_mean,
                l2_std,
                mean_abs_mean,
                mean_abs_std,
                zeno_epsilon: (!zeno[i].is_empty()).then(|| mean_std(&zeno[i]).0),
                failures: failures[i].clone(),
            }
        })
        .collect();
    Ok(SweepTable {
        axis,
        repeats,
        base: base.clone(),
        points,
    })
}
