//! Resource calculators: kicks needed for a Zeno error budget, tomography
//! copies for a channel error, and the a-posteriori coefficient bound.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::dynamics::KickSpec;
use crate::error::{Error, Result};
use crate::hamiltonian::PauliHamiltonian;

/// Lower real branch `W_{-1}(x)` for `x` in `[-1/e, 0)`.
pub fn lambert_w_minus1(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if !(x.is_finite() && x >= branch - 1e-16 && x < 0.0) {
        return Err(Error::input(format!("W_-1 is defined on [-1/e, 0), got {x}")));
    }
    if x <= branch {
        return Ok(-1.0);
    }
    let mut w = if x < -0.25 {
        // Series about the branch point.
        let p = -(2.0 * (1.0 + E * x)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 1e-15 * w.abs() {
            break;
        }
    }
    Ok(w.min(-1.0))
}

/// Which norm of `H` enters the Zeno constant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormChoice {
    /// Sum of absolute coefficients, a certified upper bound.
    #[default]
    Certified,
    /// Exact spectral norm (dense, small chains only).
    Exact,
}

/// `C_Z = 3 xi sqrt(m) |H|^2 T^2`.
pub fn zeno_constant(h: &PauliHamiltonian, kick: &KickSpec, t: f64, norm: NormChoice) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::input(format!("evolution time must be nonnegative, got {t}")));
    }
    let hn = match norm {
        NormChoice::Certified => h.op_norm_upper(),
        NormChoice::Exact => h.op_norm_exact()?,
    };
    Ok(zeno_constant_from_norm(hn, kick.xi(), kick.subspaces(), t))
}

pub fn zeno_constant_from_norm(h_norm: f64, xi: f64, subspaces: usize, t: f64) -> f64 {
    3.0 * xi * (subspaces as f64).sqrt() * h_norm * h_norm * t * t
}

/// Multiplier applied to `C_Z` in the kick bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KickInflation {
    /// Zeno error of one sequence.
    Single,
    /// Channel (diamond) error of one patch: factor 2.
    Channel,
    /// Every patch of `n_c` configurations at once: factor `2 n_c`.
    Configurations(u32),
}

impl KickInflation {
    pub fn factor(self) -> f64 {
        match self {
            KickInflation::Single => 1.0,
            KickInflation::Channel => 2.0,
            KickInflation::Configurations(n) => 2.0 * n as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KickRequirement {
    pub r: u64,
    /// True when the budget is already met without kicking (`r = 1` returned).
    pub vacuous: bool,
    /// `a (ln a + ln ln a)` with `a = k C_Z / eps`, when `a > 1`.
    pub approximation: Option<f64>,
}

/// Smallest `r` with `k C_Z ln(r) / r <= eps`, from
/// `r = -(k C_Z / eps) W_{-1}(-eps / (k C_Z))`.
pub fn required_kicks(c_z: f64, eps: f64, inflation: KickInflation) -> Result<KickRequirement> {
    if !(eps > 0.0 && eps.is_finite()) || !(c_z >= 0.0 && c_z.is_finite()) {
        return Err(Error::input(format!("need eps > 0 and C_Z >= 0, got eps = {eps}, C_Z = {c_z}")));
    }
    let a = inflation.factor() * c_z / eps;
    let approximation = (a > 1.0).then(|| a * (a.ln() + a.ln().ln()));
    if a <= E {
        return Ok(KickRequirement {
            r: 1,
            vacuous: true,
            approximation,
        });
    }
    let w = lambert_w_minus1(-1.0 / a)?;
    let r = (-a * w).ceil();
    if r > u64::MAX as f64 {
        return Err(Error::numeric(format!("kick count {r:e} overflows")));
    }
    Ok(KickRequirement {
        r: r as u64,
        vacuous: false,
        approximation,
    })
}

/// `C_QPT(n) = (8/3) 9^n 16^n`.
pub fn qpt_constant(n: u32) -> f64 {
    8.0 / 3.0 * 144f64.powi(n as i32)
}

/// Inflation for learning every patch of several configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Reshaping configurations.
    pub n_c: u32,
    /// Patches reconstructed in total.
    pub n_p: u32,
}

/// `ceil(n_c^2 C_QPT(n) / eps^2 * ln(n_p 16^n / delta))`; `n_c = n_p = 1`
/// without aggregation.
pub fn required_copies(n: u32, eps: f64, delta: f64, aggregate: Option<Aggregate>) -> Result<u64> {
    for (name, v) in [("eps", eps), ("delta", delta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::input(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    if n == 0 {
        return Err(Error::input("patch size must be at least 1"));
    }
    let Aggregate { n_c, n_p } = aggregate.unwrap_or(Aggregate { n_c: 1, n_p: 1 });
    if n_c == 0 || n_p == 0 {
        return Err(Error::input("aggregate counts must be positive"));
    }
    let nc = n_c as f64;
    let v = nc * nc * qpt_constant(n) / (eps * eps) * (n_p as f64 * 16f64.powi(n as i32) / delta).ln();
    if !v.is_finite() || v > u64::MAX as f64 {
        return Err(Error::numeric(format!("copy count {v:e} overflows")));
    }
    Ok(v.ceil() as u64)
}

/// `(pi / T)(gap + eps)`: bound on the 2-norm of the coefficient error of a
/// patch. Only valid when `|H_patch|_op T <= 1/pi` for both the true and the
/// learned patch Hamiltonian; `precondition_holds` reports that check.
pub fn coefficient_error_bound(t: f64, gap_upper: f64, eps: f64, precondition_holds: bool) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::input(format!("evolution time must be positive, got {t}")));
    }
    if !precondition_holds {
        return Err(Error::input("coefficient bound needs |H_patch| T <= 1/pi"));
    }
    if gap_upper < 0.0 || eps < 0.0 {
        return Err(Error::input("gap and eps must be nonnegative"));
    }
    Ok(PI / t * (gap_upper + eps))
}

/// Whether `|H|_op T <= 1/pi`.
pub fn coefficient_precondition(h_op_norm: f64, t: f64) -> bool {
    h_op_norm * t <= 1.0 / PI
}

/// Split of a channel error `epsilon = epsilon_z + epsilon_qpt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub epsilon: f64,
    pub epsilon_z: f64,
    pub epsilon_qpt: f64,
    pub delta: f64,
}

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_DELTA: f64 = 0.01;

impl ErrorBudget {
    pub fn new(epsilon_z: f64, epsilon_qpt: f64, delta: f64) -> Result<Self> {
        let epsilon = epsilon_z + epsilon_qpt;
        for (name, v) in [
            ("epsilon", epsilon),
            ("epsilon_z", epsilon_z),
            ("epsilon_qpt", epsilon_qpt),
            ("delta", delta),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::input(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(Self {
            epsilon,
            epsilon_z,
            epsilon_qpt,
            delta,
        })
    }

    /// Half to the Zeno error, half to tomography.
    pub fn even(epsilon: f64, delta: f64) -> Result<Self> {
        Self::new(epsilon / 2.0, epsilon / 2.0, delta)
    }
}

impl Default for ErrorBudget {
    fn default() -> Self {
        Self::even(DEFAULT_EPSILON, DEFAULT_DELTA).expect("default budget is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_c: u32,
    pub n_p: u32,
    pub r_required: u64,
    pub n_copies_required: u64,
}

/// Budgets for one chain and evolution time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub budget: ErrorBudget,
    pub t: f64,
    pub h_norm: f64,
    pub c_z: f64,
    pub c_qpt: f64,
    pub r_required: u64,
    pub r_vacuous: bool,
    pub r_approximation: Option<f64>,
    pub n_copies_required: u64,
    /// Coefficient bound with zero a-posteriori gap, `(pi/T) epsilon`.
    pub coeff_bound: f64,
    pub aggregate: AggregateReport,
}

/// Per-patch (two-qubit) and aggregate budgets. `n_c` configurations with
/// `n_p` patches in total; the Zeno constant uses a kick with two subspaces.
pub fn bound_report(
    h: &PauliHamiltonian,
    t: f64,
    budget: ErrorBudget,
    n_c: u32,
    n_p: u32,
    norm: NormChoice,
) -> Result<BoundReport> {
    let h_norm = match norm {
        NormChoice::Certified => h.op_norm_upper(),
        NormChoice::Exact => h.op_norm_exact()?,
    };
    let kick = KickSpec::new(h.n_qubits(), [0])?;
    let c_z = zeno_constant_from_norm(h_norm, kick.xi(), kick.subspaces(), t);
    let single = required_kicks(c_z, budget.epsilon_z, KickInflation::Channel)?;
    let agg_r = required_kicks(c_z, budget.epsilon_z, KickInflation::Configurations(n_c.max(1)))?;
    let aggregate = Aggregate { n_c: n_c.max(1), n_p: n_p.max(1) };
    Ok(BoundReport {
        budget,
        t,
        h_norm,
        c_z,
        c_qpt: qpt_constant(2),
        r_required: single.r,
        r_vacuous: single.vacuous,
        r_approximation: single.approximation,
        n_copies_required: required_copies(2, budget.epsilon_qpt, budget.delta, None)?,
        coeff_bound: if t > 0.0 { PI / t * budget.epsilon } else { f64::INFINITY },
        aggregate: AggregateReport {
            n_c: aggregate.n_c,
            n_p: aggregate.n_p,
            r_required: agg_r.r,
            n_copies_required: required_copies(2, budget.epsilon_qpt, budget.delta, Some(aggregate))?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bisect(x: f64) -> f64 {
        let (mut lo, mut hi) = (-60.0f64, -1.0f64);
        let f = |w: f64| w * w.exp() - x;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn lambert_examples() {
        assert_eq!(lambert_w_minus1(-1.0 / E).unwrap(), -1.0);
        let w = lambert_w_minus1(-0.1).unwrap();
        assert!((w - bisect(-0.1)).abs() < 1e-12 * w.abs());
        assert!((w + 3.577152).abs() < 1e-6);
        assert!(lambert_w_minus1(0.0).is_err());
        assert!(lambert_w_minus1(-0.5).is_err());
        assert!(lambert_w_minus1(f64::NAN).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn lambert_residual(x in -1.0 / E..-1e-300f64) {
            let w = lambert_w_minus1(x).unwrap();
            prop_assert!(w <= -1.0);
            prop_assert!((w * w.exp() - x).abs() <= 1e-14);
            if x < -1e-12 {
                let oracle = bisect(x);
                prop_assert!((w - oracle).abs() <= 1e-9 * oracle.abs());
            }
        }

        #[test]
        fn kick_count_meets_budget(c_z in 1e-4..1e3f64, eps in 1e-4..0.99f64) {
            let req = required_kicks(c_z, eps, KickInflation::Single).unwrap();
            let r = req.r as f64;
            if req.vacuous {
                prop_assert!(c_z / eps <= E);
            } else {
                prop_assert!(c_z * r.ln() / r <= eps * (1.0 + 1e-12));
                // One fewer kick is not enough (ceiling slack of one unit).
                let r1 = r - 1.0;
                if r1 > E {
                    prop_assert!(c_z * r1.ln() / r1 > eps * (1.0 - 1e-9));
                }
            }
        }
    }

    #[test]
    fn zeno_constant_examples() {
        let h = PauliHamiltonian::from_terms(2, [("XX".parse().unwrap(), 1.5), ("ZI".parse().unwrap(), -0.5)]).unwrap();
        let kick = KickSpec::new(2, [1]).unwrap();
        let c = zeno_constant(&h, &kick, 0.01, NormChoice::Certified).unwrap();
        assert!((c - 8.485281374238571e-4).abs() < 1e-15);
        assert_eq!(zeno_constant(&h, &kick, 0.0, NormChoice::Certified).unwrap(), 0.0);
        let c2 = zeno_constant(&h, &kick, 0.02, NormChoice::Certified).unwrap();
        assert!((c2 - 4.0 * c).abs() < 1e-16);
        let exact = zeno_constant(&h, &kick, 0.01, NormChoice::Exact).unwrap();
        assert!(exact <= c);
    }

    #[test]
    fn kick_examples() {
        let base = required_kicks(1.0, 0.1, KickInflation::Single).unwrap();
        assert_eq!(base.r, 36);
        assert!(!base.vacuous);
        let approx = base.approximation.unwrap();
        assert!((approx - 31.366175382420018).abs() < 1e-9);
        assert!(base.r as f64 >= approx);
        let three = required_kicks(1.0, 0.1, KickInflation::Configurations(3)).unwrap();
        let channel = required_kicks(1.0, 0.1, KickInflation::Channel).unwrap();
        assert!(three.r > channel.r && channel.r > base.r);
        let vac = required_kicks(1e-3, 0.1, KickInflation::Channel).unwrap();
        assert_eq!((vac.r, vac.vacuous), (1, true));
        assert!(required_kicks(0.0, 0.1, KickInflation::Single).unwrap().vacuous);
        assert!(required_kicks(1.0, 0.0, KickInflation::Single).is_err());
    }

    #[test]
    fn qpt_examples() {
        assert_eq!(qpt_constant(1), 384.0);
        assert_eq!(qpt_constant(2), 55296.0);
        for n in 1..6 {
            assert!((qpt_constant(n + 1) / qpt_constant(n) - 144.0).abs() < 1e-9);
        }
        assert_eq!(required_copies(2, 0.1, 0.01, None).unwrap(), 56_127_363);
        assert!(required_copies(2, 0.1, 0.005, None).unwrap() > 56_127_363);
        let agg = required_copies(2, 0.1, 0.01, Some(Aggregate { n_c: 3, n_p: 1 })).unwrap();
        assert!((agg as f64 / 56_127_362.257 - 9.0).abs() < 1e-6);
        assert!(required_copies(2, 1.0, 0.01, None).is_err());
    }

    #[test]
    fn coefficient_bound_examples() {
        assert!((coefficient_error_bound(0.01, 0.0, 0.01, true).unwrap() - PI).abs() < 1e-12);
        assert!((coefficient_error_bound(1.0, 0.02, 0.01, true).unwrap() - 0.09424777960769379).abs() < 1e-15);
        let b = coefficient_error_bound(0.5, 0.02, 0.01, true).unwrap();
        assert!((coefficient_error_bound(0.25, 0.02, 0.01, true).unwrap() - 2.0 * b).abs() < 1e-12);
        assert!(coefficient_error_bound(1.0, 0.0, 0.01, false).is_err());
        assert!(coefficient_precondition(0.3, 1.0));
        assert!(!coefficient_precondition(0.4, 1.0));
    }

    #[test]
    fn budgets_and_report() {
        let b = ErrorBudget::default();
        assert_eq!(b.epsilon, b.epsilon_z + b.epsilon_qpt);
        assert!(ErrorBudget::new(0.6, 0.5, 0.1).is_err());
        let h = crate::hamiltonian::random_2local_chain(6, 1).unwrap();
        let rep = bound_report(&h, 0.5, b, 3, 7, NormChoice::Certified).unwrap();
        assert!(rep.aggregate.r_required >= rep.r_required);
        assert!(rep.aggregate.n_copies_required >= rep.n_copies_required);
        assert!(rep.c_z > 0.0 && rep.coeff_bound > 0.0);
        let json = serde_json::to_string(&rep).unwrap();
        let back: BoundReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rep);
    }
}
