//! Measurement records: sampled counts or exact probabilities for every
//! (fiducial, basis, outcome) of one patch.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zeno::Patch;

use super::settings::{basis_count, fiducial_count};

/// Shots per setting; `Exact` stands for the infinite-shot limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ShotsRepr", into = "ShotsRepr")]
pub enum Shots {
    Exact,
    Finite(u64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ShotsRepr {
    Count(u64),
    Word(String),
}

impl TryFrom<ShotsRepr> for Shots {
    type Error = String;
    fn try_from(r: ShotsRepr) -> std::result::Result<Self, String> {
        match r {
            ShotsRepr::Count(0) => Err("shots must be at least 1".into()),
            ShotsRepr::Count(n) => Ok(Shots::Finite(n)),
            ShotsRepr::Word(w) => w.parse().map_err(|e: Error| e.to_string()),
        }
    }
}

impl From<Shots> for ShotsRepr {
    fn from(s: Shots) -> Self {
        match s {
            Shots::Exact => ShotsRepr::Word("exact".into()),
            Shots::Finite(n) => ShotsRepr::Count(n),
        }
    }
}

impl std::fmt::Display for Shots {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shots::Exact => f.write_str("exact"),
            Shots::Finite(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Shots {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" | "inf" | "infinite" => Ok(Shots::Exact),
            t => match t.parse::<u64>() {
                Ok(0) | Err(_) => Err(Error::Parse(format!("shots must be a positive integer or 'exact', got {t:?}"))),
                Ok(n) => Ok(Shots::Finite(n)),
            },
        }
    }
}

/// Multinomial draw of `shots` outcomes from `p`, via sequential binomials.
pub fn sample_counts<R: Rng + ?Sized>(p: &[f64], shots: u64, rng: &mut R) -> Result<Vec<u64>> {
    let total: f64 = p.iter().sum();
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::input(format!("not a probability vector (sum {total})")));
    }
    let mut counts = vec![0u64; p.len()];
    let mut left = shots;
    let mut mass = 1.0;
    for (k, &pk) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == p.len() {
            counts[k] = left;
            break;
        }
        let q = if mass > 0.0 { (pk / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(left, q)
            .map_err(|e| Error::internal(format!("binomial setup failed: {e}")))?
            .sample(rng);
        counts[k] = draw;
        left -= draw;
        mass -= pk;
    }
    Ok(counts)
}

/// Where and how a record was taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub patch: Patch,
    pub shots: Shots,
    pub seed: u64,
    pub t: f64,
    pub r: u64,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tallies {
    Probabilities(Vec<f64>),
    Counts(Vec<u64>),
}

/// Tomography data of one patch. Values are stored fiducial-major:
/// `value[(fiducial * 3^n + basis) * 2^n + outcome]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyRecord {
    header: RecordHeader,
    tallies: Tallies,
}

const FORMAT_LINE: &str = "# zeno-learn tomography record v1";

impl TomographyRecord {
    /// Wraps exact probability columns (one per fiducial, each indexed
    /// `basis * 2^n + outcome`). Requires `header.shots == Exact`.
    pub fn exact(header: RecordHeader, columns: &[Vec<f64>]) -> Result<Self> {
        if header.shots != Shots::Exact {
            return Err(Error::input("exact record needs shots = exact"));
        }
        let n = header.patch.len();
        check_columns(n, columns)?;
        let values = columns.iter().flatten().copied().collect();
        let rec = Self {
            header,
            tallies: Tallies::Probabilities(values),
        };
        rec.validate()?;
        Ok(rec)
    }

    /// Samples every setting from the probability columns.
    pub fn sample<R: Rng + ?Sized>(header: RecordHeader, columns: &[Vec<f64>], rng: &mut R) -> Result<Self> {
        let shots = match header.shots {
            Shots::Exact => return Self::exact(header, columns),
            Shots::Finite(s) => s,
        };
        let n = header.patch.len();
        check_columns(n, columns)?;
        let outcomes = 1usize << n;
        let mut counts = Vec::with_capacity(columns.len() * columns[0].len());
        for col in columns {
            for block in col.chunks(outcomes) {
                counts.extend(sample_counts(block, shots, rng)?);
            }
        }
        Ok(Self {
            header,
            tallies: Tallies::Counts(counts),
        })
    }

    pub fn header(&self) -> &RecordHeader {
        &self.header
    }

    pub fn n_qubits(&self) -> usize {
        self.header.patch.len()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.tallies, Tallies::Probabilities(_))
    }

    /// Raw counts, or `None` for an exact record.
    pub fn counts(&self) -> Option<&[u64]> {
        match &self.tallies {
            Tallies::Counts(c) => Some(c),
            Tallies::Probabilities(_) => None,
        }
    }

    /// Estimated probability matrix `P[effect, fiducial]`.
    pub fn probability_matrix(&self) -> nalgebra::DMatrix<f64> {
        let n = self.n_qubits();
        let rows = basis_count(n) << n;
        let cols = fiducial_count(n);
        match &self.tallies {
            Tallies::Probabilities(v) => nalgebra::DMatrix::from_column_slice(rows, cols, v),
            Tallies::Counts(c) => {
                let Shots::Finite(s) = self.header.shots else { unreachable!() };
                nalgebra::DMatrix::from_iterator(rows, cols, c.iter().map(|&k| k as f64 / s as f64))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_qubits();
        let outcomes = 1usize << n;
        let expected = fiducial_count(n) * (basis_count(n) << n);
        match &self.tallies {
            Tallies::Probabilities(v) => {
                if v.len() != expected {
                    return Err(Error::input(format!("expected {expected} values, got {}", v.len())));
                }
                for (i, block) in v.chunks(outcomes).enumerate() {
                    let sum: f64 = block.iter().sum();
                    if block.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-12 {
                        return Err(Error::input(format!("setting {i}: probabilities sum to {sum}")));
                    }
                }
            }
            Tallies::Counts(c) => {
                let Shots::Finite(s) = self.header.shots else {
                    return Err(Error::input("counted record needs a finite shot number"));
                };
                if c.len() != expected {
                    return Err(Error::input(format!("expected {expected} values, got {}", c.len())));
                }
                for (i, block) in c.chunks(outcomes).enumerate() {
                    let sum: u64 = block.iter().sum();
                    if sum != s {
                        return Err(Error::input(format!("setting {i}: counts sum to {sum}, not {s}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Text form: `# key = value` header lines, then CSV rows
    /// `fiducial,basis,outcome,value`.
    pub fn to_text(&self) -> String {
        let h = &self.header;
        let n = self.n_qubits();
        let mut out = String::new();
        let patch: Vec<String> = h.patch.qubits().iter().map(|q| q.to_string()).collect();
        let _ = writeln!(out, "{FORMAT_LINE}");
        let _ = writeln!(out, "# patch = {}", patch.join(","));
        let _ = writeln!(out, "# n = {n}");
        let _ = writeln!(out, "# shots = {}", h.shots);
        let _ = writeln!(out, "# seed = {}", h.seed);
        let _ = writeln!(out, "# T = {:?}", h.t);
        let _ = writeln!(out, "# r = {}", h.r);
        let _ = writeln!(out, "# offset = {}", h.offset);
        out.push_str("fiducial,basis,outcome,value\n");
        let (outcomes, bases) = (1usize << n, basis_count(n));
        let per_fid = bases * outcomes;
        let mut row = |i: usize, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{},{},{},{}", i / per_fid, (i % per_fid) / outcomes, i % outcomes, v);
        };
        match &self.tallies {
            Tallies::Probabilities(v) => v.iter().enumerate().for_each(|(i, p)| row(i, &format!("{p:?}"))),
            Tallies::Counts(c) => c.iter().enumerate().for_each(|(i, k)| row(i, k)),
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(FORMAT_LINE) {
            return Err(Error::Parse("missing tomography record format line".into()));
        }
        let mut fields = std::collections::BTreeMap::new();
        let mut saw_columns = false;
        let mut rows = Vec::new();
        for line in lines {
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("bad header line {line:?}")))?;
                fields.insert(k.trim().to_string(), v.trim().to_string());
            } else if !saw_columns {
                if line != "fiducial,basis,outcome,value" {
                    return Err(Error::Parse(format!("unexpected column line {line:?}")));
                }
                saw_columns = true;
            } else if !line.is_empty() {
                rows.push(line);
            }
        }
        let get = |k: &str| fields.get(k).ok_or_else(|| Error::Parse(format!("missing header field {k}")));
        let parse_err = |k: &str| Error::Parse(format!("bad header field {k}"));
        let patch = Patch::new(
            get("patch")?
                .split(',')
                .map(|q| q.trim().parse::<usize>().map_err(|_| parse_err("patch")))
                .collect::<Result<Vec<_>>>()?,
        )?;
        let n: usize = get("n")?.parse().map_err(|_| parse_err("n"))?;
        if n != patch.len() {
            return Err(Error::Parse("header n does not match the patch".into()));
        }
        let header = RecordHeader {
            patch,
            shots: get("shots")?.parse()?,
            seed: get("seed")?.parse().map_err(|_| parse_err("seed"))?,
            t: get("T")?.parse().map_err(|_| parse_err("T"))?,
            r: get("r")?.parse().map_err(|_| parse_err("r"))?,
            offset: get("offset")?.parse().map_err(|_| parse_err("offset"))?,
        };
        let (outcomes, bases) = (1usize << n, basis_count(n));
        let total = fiducial_count(n) * bases * outcomes;
        if rows.len() != total {
            return Err(Error::Parse(format!("expected {total} rows, got {}", rows.len())));
        }
        let mut raw = Vec::with_capacity(total);
        for (i, line) in rows.iter().enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            let idx: Vec<usize> = cols[..cols.len().min(3)]
                .iter()
                .map(|c| c.parse().map_err(|_| Error::Parse(format!("bad row {line:?}"))))
                .collect::<Result<_>>()?;
            let want = [i / (bases * outcomes), (i / outcomes) % bases, i % outcomes];
            if cols.len() != 4 || idx != want {
                return Err(Error::Parse(format!("row {i} is {line:?}, expected indices {want:?}")));
            }
            raw.push(cols[3]);
        }
        let tallies = match header.shots {
            Shots::Exact => Tallies::Probabilities(
                raw.iter()
                    .map(|v| v.parse().map_err(|_| Error::Parse(format!("bad probability {v:?}"))))
                    .collect::<Result<_>>()?,
            ),
            Shots::Finite(_) => Tallies::Counts(
                raw.iter()
                    .map(|v| v.parse().map_err(|_| Error::Parse(format!("bad count {v:?}"))))
                    .collect::<Result<_>>()?,
            ),
        };
        let rec = Self { header, tallies };
        rec.validate()?;
        Ok(rec)
    }
}

fn check_columns(n: usize, columns: &[Vec<f64>]) -> Result<()> {
    let rows = basis_count(n) << n;
    if columns.len() != fiducial_count(n) || columns.iter().any(|c| c.len() != rows) {
        return Err(Error::input(format!(
            "expected {} columns of {rows} probabilities",
            fiducial_count(n)
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn header(patch: Vec<usize>, shots: Shots) -> RecordHeader {
        RecordHeader {
            patch: Patch::new(patch).unwrap(),
            shots,
            seed: 7,
            t: 0.1,
            r: 20,
            offset: 1,
        }
    }

    fn columns(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..fiducial_count(n))
            .map(|_| {
                (0..basis_count(n))
                    .flat_map(|_| {
                        let raw: Vec<f64> = (0..1 << n).map(|_| rng.gen::<f64>()).collect();
                        let s: f64 = raw.iter().sum();
                        let mut p: Vec<f64> = raw.iter().map(|x| x / s).collect();
                        // Make the block sum exactly 1.
                        let head: f64 = p[..p.len() - 1].iter().sum();
                        *p.last_mut().unwrap() = 1.0 - head;
                        p
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn deterministic_outcomes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_counts(&[1.0, 0.0], 500, &mut rng).unwrap(), vec![500, 0]);
        assert_eq!(sample_counts(&[0.0, 0.0, 1.0, 0.0], 9, &mut rng).unwrap(), vec![0, 0, 9, 0]);
        assert!(sample_counts(&[0.7, 0.7], 9, &mut rng).is_err());
    }

    #[test]
    fn fair_coin_concentrates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = sample_counts(&[0.5, 0.5], 1_000_000, &mut rng).unwrap();
        assert_eq!(c.iter().sum::<u64>(), 1_000_000);
        assert!((c[0] as f64 / 1e6 - 0.5).abs() < 0.0025);
    }

    #[test]
    fn sampling_is_seeded() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let a = sample_counts(&p, 1000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = sample_counts(&p, 1000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_record_reproduces_probabilities() {
        let cols = columns(2, 4);
        let rec = TomographyRecord::exact(header(vec![3, 4], Shots::Exact), &cols).unwrap();
        let p = rec.probability_matrix();
        assert_eq!(p.shape(), (36, 36));
        for (j, col) in cols.iter().enumerate() {
            for (k, &v) in col.iter().enumerate() {
                assert_eq!(p[(k, j)], v);
            }
        }
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        for (patch, shots) in [(vec![0, 1], Shots::Exact), (vec![5], Shots::Exact), (vec![2, 3], Shots::Finite(900))] {
            let n = patch.len();
            let cols = columns(n, 11);
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let rec = TomographyRecord::sample(header(patch, shots), &cols, &mut rng).unwrap();
            let text = rec.to_text();
            let back = TomographyRecord::from_text(&text).unwrap();
            assert_eq!(back, rec);
            assert_eq!(back.to_text(), text);
            if let Some(c) = rec.counts() {
                for block in c.chunks(1 << n) {
                    assert_eq!(block.iter().sum::<u64>(), 900);
                }
            }
        }
    }

    #[test]
    fn malformed_text_is_rejected() {
        let cols = columns(1, 12);
        let rec = TomographyRecord::exact(header(vec![0], Shots::Exact), &cols).unwrap();
        let text = rec.to_text();
        assert!(TomographyRecord::from_text(&text.replace("# n = 1", "# n = 2")).is_err());
        let truncated: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(TomographyRecord::from_text(&truncated).is_err());
        assert!(TomographyRecord::from_text(&text.replacen("0,0,0,", "0,0,1,", 1)).is_err());
    }

    #[test]
    fn shots_parse_and_serde() {
        assert_eq!("exact".parse::<Shots>().unwrap(), Shots::Exact);
        assert_eq!("1000".parse::<Shots>().unwrap(), Shots::Finite(1000));
        assert!("0".parse::<Shots>().is_err());
        assert_eq!(serde_json::to_string(&Shots::Finite(5)).unwrap(), "5");
        assert_eq!(serde_json::from_str::<Shots>("\"exact\"").unwrap(), Shots::Exact);
        assert!(serde_json::from_str::<Shots>("0").is_err());
    }
}
