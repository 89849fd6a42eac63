//! Built-in regression datasets and CSV ingestion.

use super::matrix::Matrix;
use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

/// Feature matrix (n x d) with scalar targets.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(features: Matrix, targets: Vec<f64>) -> Result<Self> {
        if features.rows() != targets.len() {
            return Err(Error::Shape(format!(
                "{} feature rows vs {} targets",
                features.rows(),
                targets.len()
            )));
        }
        Ok(Self { features, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }
}

/// Redundant-feature linear task: features 0 and 1 carry the signal with
/// true weights 1.5 and -2.0, the remaining [`LINEAR_NOISE_FEATURES`]
/// features are pure noise. 200 train rows, 100 held-out rows,
/// observation noise 0.1.
pub const LINEAR_SIGNAL_FEATURES: usize = 2;
pub const LINEAR_NOISE_FEATURES: usize = 8;
pub const LINEAR_TRUE_WEIGHTS: [f64; 2] = [1.5, -2.0];
pub const LINEAR_SIGMA_N: f64 = 0.1;

pub fn builtin_linear(seed: u64) -> (Dataset, Dataset) {
    let dim = LINEAR_SIGNAL_FEATURES + LINEAR_NOISE_FEATURES;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gen = |n: usize| {
        let features = Matrix::from_fn(n, dim, |_, _| StandardNormal.sample(&mut rng));
        let targets = (0..n)
            .map(|r| {
                let eps: f64 = StandardNormal.sample(&mut rng);
                LINEAR_TRUE_WEIGHTS[0] * features.get(r, 0)
                    + LINEAR_TRUE_WEIGHTS[1] * features.get(r, 1)
                    + LINEAR_SIGMA_N * eps
            })
            .collect();
        Dataset { features, targets }
    };
    let train = gen(200);
    let test = gen(100);
    (train, test)
}

/// Sine-wave regression: x uniform on [-3, 3], y = sin(x) + 0.1 eps.
/// 100 train rows, 50 held-out rows.
pub fn builtin_sine(seed: u64) -> (Dataset, Dataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let range = Uniform::new(-3.0f64, 3.0);
    let mut gen = |n: usize| {
        let features = Matrix::from_fn(n, 1, |_, _| range.sample(&mut rng));
        let targets = (0..n)
            .map(|r| {
                let eps: f64 = StandardNormal.sample(&mut rng);
                features.get(r, 0).sin() + 0.1 * eps
            })
            .collect();
        Dataset { features, targets }
    };
    let train = gen(100);
    let test = gen(50);
    (train, test)
}

/// Parse a CSV with a header row; the last column is the target.
pub fn from_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let Some((_, _header)) = lines.next() else {
        return Err(Error::Config("empty CSV".into()));
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for cell in line.split(',') {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::Config(format!(
                    "line {}: '{}' is not a number",
                    lineno + 1,
                    cell.trim()
                ))
            })?;
            row.push(v);
        }
        if row.len() < 2 {
            return Err(Error::Config(format!(
                "line {}: need at least one feature and a target",
                lineno + 1
            )));
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Config(format!(
                    "line {}: {} columns, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Config("CSV has a header but no data rows".into()));
    }
    let dim = rows[0].len() - 1;
    let mut targets = Vec::with_capacity(rows.len());
    let mut flat = Vec::with_capacity(rows.len() * dim);
    for mut row in rows {
        targets.push(row.pop().expect("validated width"));
        flat.extend(row);
    }
    Dataset::new(Matrix::from_vec(targets.len(), dim, flat)?, targets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_linear_is_deterministic_and_sized() {
        let (a_train, a_test) = builtin_linear(7);
        let (b_train, _) = builtin_linear(7);
        assert_eq!(a_train, b_train);
        assert_eq!(a_train.len(), 200);
        assert_eq!(a_test.len(), 100);
        assert_eq!(a_train.dim(), 10);
        let (c_train, _) = builtin_linear(8);
        assert_ne!(a_train, c_train);
    }

    #[test]
    fn builtin_sine_targets_track_the_wave() {
        let (train, _) = builtin_sine(3);
        for r in 0..train.len() {
            let x = train.features.get(r, 0);
            assert!((train.targets[r] - x.sin()).abs() < 0.6, "row {r}");
        }
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let ds = from_csv("x0,x1,y\n1,2,3\n4,5,6\n").unwrap();
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.targets, vec![3.0, 6.0]);
        assert_eq!(ds.features.get(1, 0), 4.0);

        assert!(from_csv("").is_err());
        assert!(from_csv("x,y\n").is_err());
        let err = from_csv("x,y\n1,2\n1,oops\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(from_csv("x,y\n1,2\n1,2,3\n").is_err());
    }
}
