use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{self, bound_report, coefficient_precondition, coefficient_error_bound, zeno_constant, KickInflation};
use crate::dynamics::{
    kicked_evolve_with, reduced_density, trotter_kicked_evolve, IsingParams, Propagator, StateVector, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{chain_basis, to_dense, PauliHamiltonian, TermRecord};
use crate::linalg::{ONE, ZERO};
use crate::qpt::{
    self, estimate_channel, fiducial_count, single_qubit_fiducial, ChannelEstimate, DiamondBracket, RecordHeader,
    Shots, TomographyRecord, SINGLE_QUBIT_FIDUCIALS,
};
use crate::zeno::{
    build_contamination_model, expected_patch_hamiltonian, plan_configurations, zeno_project, Patch,
    ReshapingConfig,
};

use super::metrics::Metrics;
use super::seeds::{derive_seed, STREAM_SAMPLING};
use super::spec::{EvolutionMode, ProtocolSpec};

/// Exact outcome probabilities of one patch in one configuration:
/// `columns[fiducial][basis * 2^n + outcome]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchColumns {
    pub config: usize,
    pub patch: Patch,
    pub columns: Vec<Vec<f64>>,
}

/// Output of the simulation stage, reusable across shot numbers and noise.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub configs: Vec<ReshapingConfig>,
    pub patches: Vec<PatchColumns>,
}

enum Evolver {
    Kicked(Propagator),
    Oracle(Propagator),
    Trotter(IsingParams),
}

impl Evolver {
    fn new(h: &PauliHamiltonian, spec: &ProtocolSpec, cfg: &ReshapingConfig) -> Result<Self> {
        Ok(match spec.evolution {
            EvolutionMode::ExactKicked => Evolver::Kicked(Propagator::new(h)?),
            EvolutionMode::ExactZenoOracle => Evolver::Oracle(Propagator::new(&zeno_project(h, &cfg.kick))?),
            EvolutionMode::TrotterKicked => Evolver::Trotter(IsingParams::from_hamiltonian(h)?),
        })
    }

    fn evolve(&self, spec: &ProtocolSpec, cfg: &ReshapingConfig, psi: &StateVector) -> Result<StateVector> {
        let r = spec.r as usize;
        match self {
            Evolver::Kicked(p) => kicked_evolve_with(p, &cfg.kick, spec.t, r, psi, spec.back_kick, DEFAULT_TOL),
            Evolver::Oracle(p) => {
                let mut out = psi.clone();
                p.evolve_in_place(&mut out, spec.t, DEFAULT_TOL)?;
                Ok(out)
            }
            Evolver::Trotter(ising) => trotter_kicked_evolve(ising, &cfg.kick, spec.t, r, psi, spec.back_kick),
        }
    }
}

/// Product input state for fiducial index `j`: two-qubit patches take the
/// base-6 digits of `j`, single-qubit patches take `j mod 6`, everything else
/// (frozen qubits) starts in `|0>`.
pub fn initial_state(cfg: &ReshapingConfig, fiducials: &[usize]) -> Result<StateVector> {
    if fiducials.len() != cfg.patches.len() {
        return Err(Error::input("one fiducial index per patch is required"));
    }
    let mut factors = vec![[ONE, ZERO]; cfg.n_qubits];
    for (patch, &j) in cfg.patches.iter().zip(fiducials) {
        let n = patch.len();
        if j >= fiducial_count(n) {
            return Err(Error::input(format!("fiducial {j} out of range for patch {patch}")));
        }
        let mut rest = j;
        for &q in patch.qubits().iter().rev() {
            factors[q] = single_qubit_fiducial(rest % SINGLE_QUBIT_FIDUCIALS)?;
            rest /= SINGLE_QUBIT_FIDUCIALS;
        }
    }
    StateVector::product(&factors)
}

/// Lockstep fiducial `j` for every patch of `cfg`.
fn lockstep_fiducials(cfg: &ReshapingConfig, j: usize) -> Vec<usize> {
    cfg.patches
        .iter()
        .map(|p| j % fiducial_count(p.len()))
        .collect()
}

/// Evolves `psi` under the spec's dynamics for configuration `cfg` and
/// returns every patch's probability column.
pub fn patch_probabilities(
    h: &PauliHamiltonian,
    spec: &ProtocolSpec,
    cfg: &ReshapingConfig,
    psi: &StateVector,
) -> Result<Vec<Vec<f64>>> {
    let evolver = Evolver::new(h, spec, cfg)?;
    evolve_and_measure(&evolver, spec, cfg, psi)
}

fn evolve_and_measure(
    evolver: &Evolver,
    spec: &ProtocolSpec,
    cfg: &ReshapingConfig,
    psi: &StateVector,
) -> Result<Vec<Vec<f64>>> {
    let out = evolver.evolve(spec, cfg, psi)?;
    cfg.patches
        .iter()
        .map(|p| qpt::probabilities(&reduced_density(&out, p.qubits())?))
        .collect()
}

fn check_inputs(h: &PauliHamiltonian, spec: &ProtocolSpec) -> Result<()> {
    spec.validate()?;
    if h.n_qubits() != spec.n_qubits {
        return Err(Error::input(format!(
            "Hamiltonian has {} qubits but the spec asks for {}",
            h.n_qubits(),
            spec.n_qubits
        )));
    }
    if !h.is_geometrically_two_local() {
        return Err(Error::input("Hamiltonian is not geometrically 2-local on the chain"));
    }
    Ok(())
}

/// Stage 1: exact probabilities for every configuration, patch and fiducial.
/// The (configuration, fiducial) evolutions run in parallel and are gathered
/// in index order.
pub fn simulate(h: &PauliHamiltonian, spec: &ProtocolSpec) -> Result<SimulatedData> {
    check_inputs(h, spec)?;
    let configs = plan_configurations(spec.n_qubits)?;
    let evolvers = configs
        .iter()
        .map(|cfg| Evolver::new(h, spec, cfg))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| {
            let fids = configs[c].patches.iter().map(|p| fiducial_count(p.len())).max().unwrap_or(1);
            (0..fids).map(move |j| (c, j))
        })
        .collect();
    let outputs: Vec<Vec<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(c, j)| {
            let cfg = &configs[c];
            let psi = initial_state(cfg, &lockstep_fiducials(cfg, j))?;
            evolve_and_measure(&evolvers[c], spec, cfg, &psi)
                .map_err(|e| e.with_context(format!("configuration {c}, fiducial {j}")))
        })
        .collect::<Result<_>>()?;

    let mut patches: Vec<PatchColumns> = configs
        .iter()
        .enumerate()
        .flat_map(|(c, cfg)| {
            cfg.patches.iter().map(move |p| PatchColumns {
                config: c,
                patch: p.clone(),
                columns: Vec::new(),
            })
        })
        .collect();
    let offsets: Vec<usize> = configs
        .iter()
        .scan(0, |acc, cfg| {
            let start = *acc;
            *acc += cfg.patches.len();
            Some(start)
        })
        .collect();
    for (&(c, j), cols) in jobs.iter().zip(outputs) {
        for (pi, col) in cols.into_iter().enumerate() {
            let entry = &mut patches[offsets[c] + pi];
            if j < fiducial_count(entry.patch.len()) {
                entry.columns.push(col);
            }
        }
    }
    Ok(SimulatedData { configs, patches })
}

/// Mixes every outcome distribution with the uniform one:
/// `p -> (1 - lambda) p + lambda / 2^n`.
pub fn inject_depolarizing(columns: &[Vec<f64>], lambda: f64, n: usize) -> Result<Vec<Vec<f64>>> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::input(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    let flat = 1.0 / (1u64 << n) as f64;
    Ok(columns
        .iter()
        .map(|c| c.iter().map(|&p| ((1.0 - lambda) * p + lambda * flat).clamp(0.0, 1.0)).collect())
        .collect())
}

/// Renormalizes each outcome block to sum to one (removes rounding drift).
fn renormalize(columns: &mut [Vec<f64>], n: usize) {
    for col in columns {
        for block in col.chunks_mut(1 << n) {
            let s: f64 = block.iter().sum();
            block.iter_mut().for_each(|p| *p /= s);
            let head: f64 = block[..block.len() - 1].iter().sum();
            let last = block.len() - 1;
            block[last] = (1.0 - head).max(0.0);
        }
    }
}

/// Per-patch summary stored in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchReport {
    pub config: usize,
    pub offset: usize,
    pub patch: Patch,
    pub seed: u64,
    /// Learned coefficients on the patch (local strings).
    pub learned: Vec<TermRecord>,
    /// Ideal Zeno-limit patch Hamiltonian, including contamination.
    pub expected: Vec<TermRecord>,
    pub error_l2: f64,
    pub h_op_norm: f64,
    pub expected_op_norm: f64,
    pub lambda_raw: f64,
    pub lambda_debiased: f64,
    pub diamond_gap: DiamondBracket,
    /// `|H| T <= 1/pi` for both learned and expected patch Hamiltonians.
    pub precondition: bool,
    /// Coefficient bound, when the error budget of the run is known and the
    /// precondition holds.
    pub coefficient_error_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub offset: usize,
    pub layout: String,
    pub frozen: Vec<usize>,
    pub patches: Vec<Patch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    /// SHA-256 of the canonical JSON of the spec and the true Hamiltonian.
    pub spec_hash: String,
    pub created_unix: u64,
    pub version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub spec: ProtocolSpec,
    pub hamiltonian: Vec<TermRecord>,
    pub configs: Vec<ConfigSummary>,
    pub patches: Vec<PatchReport>,
    /// Global coefficient basis (two-local chain strings).
    pub basis: Vec<String>,
    pub truth: Vec<f64>,
    pub estimate: Vec<f64>,
    pub metrics: Metrics,
    pub bounds: bounds::BoundReport,
    /// Zeno channel error `2 C_Z ln(r) / r` of the worst configuration, when
    /// it applies to the chosen dynamics.
    pub zeno_epsilon: Option<f64>,
    pub shots_per_setting: Shots,
    /// `shots x 3^n 6^n settings x configurations`; `None` for exact runs.
    pub total_copies: Option<u64>,
    pub provenance: Provenance,
    #[serde(skip)]
    pub estimates: Vec<ChannelEstimate>,
    #[serde(skip)]
    pub records: Vec<TomographyRecord>,
}

impl RunResult {
    /// Median debiased noise estimate over patches.
    pub fn median_lambda(&self) -> f64 {
        super::metrics::median(self.patches.iter().map(|p| p.lambda_debiased).collect())
    }

    /// Largest diamond-gap upper bracket over patches.
    pub fn max_gap_upper(&self) -> f64 {
        self.patches.iter().map(|p| p.diamond_gap.upper).fold(0.0, f64::max)
    }
}

/// Settings per configuration: `3^2 * 6^2` for two-qubit patches.
pub const SETTINGS_PER_CONFIG: u64 = 324;

pub fn total_copies(shots: Shots, n_configs: usize) -> Option<u64> {
    match shots {
        Shots::Exact => None,
        Shots::Finite(s) => Some(s * SETTINGS_PER_CONFIG * n_configs as u64),
    }
}

/// Zeno error `2 C_Z ln r / r` for the configuration with the largest
/// constant; `Some(0)` for the oracle dynamics, `None` when no bound applies.
fn zeno_epsilon(h: &PauliHamiltonian, spec: &ProtocolSpec, configs: &[ReshapingConfig]) -> Result<Option<f64>> {
    match spec.evolution {
        EvolutionMode::ExactZenoOracle => Ok(Some(0.0)),
        EvolutionMode::TrotterKicked => Ok(None),
        EvolutionMode::ExactKicked if spec.r < 2 => Ok(None),
        EvolutionMode::ExactKicked => {
            let r = spec.r as f64;
            let mut worst: f64 = 0.0;
            for cfg in configs {
                let c_z = zeno_constant(h, &cfg.kick, spec.t, spec.norm)?;
                worst = worst.max(KickInflation::Channel.factor() * c_z * r.ln() / r);
            }
            Ok(Some(worst))
        }
    }
}

fn spec_hash(spec: &ProtocolSpec, h: &PauliHamiltonian) -> Result<String> {
    let payload = serde_json::to_vec(&(spec, h.to_records()))?;
    Ok(format!("{:x}", Sha256::digest(payload)))
}

/// Stage 2: noise injection, sampling, per-patch reconstruction and the
/// global least-squares combination.
pub fn reconstruct(h: &PauliHamiltonian, spec: &ProtocolSpec, data: &SimulatedData) -> Result<RunResult> {
    check_inputs(h, spec)?;
    let n = spec.n_qubits;
    let configs = &data.configs;
    let model = build_contamination_model(n, configs)?;
    let zeno_eps = zeno_epsilon(h, spec, configs)?;
    let budget = spec.budget()?;
    let eps_total = zeno_eps.map(|ez| {
        ez + match spec.shots {
            Shots::Exact => 0.0,
            Shots::Finite(_) => budget.epsilon_qpt,
        }
    });

    let per_patch: Vec<(TomographyRecord, ChannelEstimate, PatchReport)> = data
        .patches
        .par_iter()
        .map(|pc| {
            let ctx = || format!("configuration {}, patch {}", pc.config, pc.patch);
            let cfg = &configs[pc.config];
            let pn = pc.patch.len();
            let index_in_cfg = cfg.patch_index(&pc.patch)?;
            let seed = derive_seed(spec.seed, &[STREAM_SAMPLING, pc.config as u64, index_in_cfg as u64]);
            let mut columns = match spec.noise {
                Some(l) if l > 0.0 => inject_depolarizing(&pc.columns, l, pn)?,
                _ => pc.columns.clone(),
            };
            renormalize(&mut columns, pn);
            let header = RecordHeader {
                patch: pc.patch.clone(),
                shots: spec.shots,
                seed,
                t: spec.t,
                r: spec.r,
                offset: cfg.offset,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let record = TomographyRecord::sample(header, &columns, &mut rng).map_err(|e| e.with_context(ctx()))?;
            let est = estimate_channel(&record, spec.projection).map_err(|e| e.with_context(ctx()))?;

            let expected = expected_patch_hamiltonian(h, cfg, &pc.patch)?;
            let learned_c = est.hamiltonian.coefficients();
            let expected_c = expected.coefficients();
            let error_l2 = learned_c
                .iter()
                .zip(&expected_c)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let expected_op_norm = if expected.hamiltonian.is_empty() {
                0.0
            } else {
                let qs: Vec<usize> = (0..pn).collect();
                let m = to_dense(&expected.hamiltonian, &qs)?;
                let (vals, _) = crate::linalg::hermitian_eigen(m.matrix());
                vals.iter().map(|v| v.abs()).fold(0.0, f64::max)
            };
            let precondition =
                coefficient_precondition(est.h_op_norm, spec.t) && coefficient_precondition(expected_op_norm, spec.t);
            let coeff_bound = match eps_total {
                Some(eps) if precondition => Some(coefficient_error_bound(spec.t, est.diamond_gap.upper, eps, true)?),
                _ => None,
            };
            let report = PatchReport {
                config: pc.config,
                offset: cfg.offset,
                patch: pc.patch.clone(),
                seed,
                learned: est.hamiltonian.hamiltonian.to_records(),
                expected: expected.hamiltonian.to_records(),
                error_l2,
                h_op_norm: est.h_op_norm,
                expected_op_norm,
                lambda_raw: est.lambda_raw,
                lambda_debiased: est.lambda_debiased,
                diamond_gap: est.diamond_gap,
                precondition,
                coefficient_error_bound: coeff_bound,
            };
            Ok((record, est, report))
        })
        .collect::<Result<_>>()?;

    // Learned vector in the model's row order.
    let mut learned = Vec::with_capacity(model.rows().len());
    for row in model.rows() {
        let (_, est, _) = per_patch
            .iter()
            .find(|(_, _, rep)| rep.config == row.config && rep.patch == row.patch)
            .ok_or_else(|| Error::internal(format!("no estimate for patch {}", row.patch)))?;
        learned.push(est.hamiltonian.hamiltonian.coefficient(&row.local));
    }
    let estimate = model.solve(&learned)?;
    let basis = chain_basis(n);
    let truth = h.coefficients_in(&basis);
    let metrics = Metrics::compute(&basis, &truth, &estimate)?;
    let n_patches = data.patches.len() as u32;
    let bounds = bound_report(h, spec.t, budget, configs.len() as u32, n_patches, spec.norm)?;

    let mut records = Vec::new();
    let mut estimates = Vec::new();
    let mut patches = Vec::new();
    for (rec, est, rep) in per_patch {
        records.push(rec);
        estimates.push(est);
        patches.push(rep);
    }
    Ok(RunResult {
        spec: spec.clone(),
        hamiltonian: h.to_records(),
        configs: configs
            .iter()
            .map(|c| ConfigSummary {
                offset: c.offset,
                layout: c.layout(),
                frozen: c.frozen.iter().copied().collect(),
                patches: c.patches.clone(),
            })
            .collect(),
        patches,
        basis: basis.iter().map(|p| p.to_string()).collect(),
        truth,
        estimate,
        metrics,
        bounds,
        zeno_epsilon: zeno_eps,
        shots_per_setting: spec.shots,
        total_copies: total_copies(spec.shots, configs.len()),
        provenance: Provenance {
            seed: spec.seed,
            spec_hash: spec_hash(spec, h)?,
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        estimates,
        records,
    })
}

/// Runs the full protocol on `h`.
pub fn run_protocol(h: &PauliHamiltonian, spec: &ProtocolSpec) -> Result<RunResult> {
    let data = simulate(h, spec)?;
    reconstruct(h, spec, &data)
}
