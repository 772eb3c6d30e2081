use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// Relative errors are only reported for terms with `|c| > RELATIVE_FLOOR`.
pub const RELATIVE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermError {
    pub pauli: String,
    pub truth: f64,
    pub estimate: f64,
    pub abs_error: f64,
    /// `|estimate - truth| / |truth|`, absent for vanishing true terms.
    pub rel_error: Option<f64>,
}

/// Error summary of a global estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub l2: f64,
    pub mean_abs: f64,
    pub max_abs: f64,
    pub median_rel: Option<f64>,
    pub terms: Vec<TermError>,
}

impl Metrics {
    pub fn compute(basis: &[PauliString], truth: &[f64], estimate: &[f64]) -> Result<Self> {
        if basis.len() != truth.len() || truth.len() != estimate.len() || basis.is_empty() {
            return Err(Error::input("basis, truth and estimate lengths differ"));
        }
        let terms: Vec<TermError> = basis
            .iter()
            .zip(truth.iter().zip(estimate))
            .map(|(p, (&t, &e))| TermError {
                pauli: p.to_string(),
                truth: t,
                estimate: e,
                abs_error: (e - t).abs(),
                rel_error: (t.abs() > RELATIVE_FLOOR).then(|| (e - t).abs() / t.abs()),
            })
            .collect();
        let l2 = terms.iter().map(|t| t.abs_error * t.abs_error).sum::<f64>().sqrt();
        let mean_abs = terms.iter().map(|t| t.abs_error).sum::<f64>() / terms.len() as f64;
        let max_abs = terms.iter().map(|t| t.abs_error).fold(0.0, f64::max);
        let rel: Vec<f64> = terms.iter().filter_map(|t| t.rel_error).collect();
        let median_rel = (!rel.is_empty()).then(|| median(rel));
        Ok(Self {
            l2,
            mean_abs,
            max_abs,
            median_rel,
            terms,
        })
    }
}

/// Serde adapter for floats that may be NaN, which JSON stores as `null`.
pub(crate) mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Median (mean of the two middle values for even length); NaN when empty.
pub fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::input("slope needs at least two positive points"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (mx, _) = mean_std(&lx);
    let (my, _) = mean_std(&ly);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_example() {
        let basis: Vec<PauliString> = ["XI", "IZ", "XX"].iter().map(|s| s.parse().unwrap()).collect();
        let m = Metrics::compute(&basis, &[1.0, 0.0, -0.5], &[1.1, 0.2, -0.5]).unwrap();
        assert!((m.l2 - (0.01f64 + 0.04).sqrt()).abs() < 1e-12);
        assert!((m.mean_abs - 0.1).abs() < 1e-12);
        assert!((m.max_abs - 0.2).abs() < 1e-12);
        assert_eq!(m.terms[1].rel_error, None);
        assert!((m.median_rel.unwrap() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn helpers() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(vec![]).is_nan());
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
        let xs = [1.0, 10.0, 100.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() + 0.5).abs() < 1e-12);
        assert!(log_log_slope(&[1.0], &[1.0]).is_err());
    }
}
