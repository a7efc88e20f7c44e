use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STD_FLOOR: f64 = 1e-8;

/// Per-feature z-score transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    /// Zero mean, unit scale.
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Floors every std at [`STD_FLOOR`].
    pub fn from_stats(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::shape("normalizer std", mean.len(), std.len()));
        }
        let std = std.into_iter().map(|s| s.max(STD_FLOOR)).collect();
        Ok(Self { mean, std })
    }

    /// Population statistics over the rows of `data`.
    pub fn fit(data: ArrayView2<f64>) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::shape("normalizer rows", 1, 0));
        }
        let mean = data.mean_axis(Axis(0)).expect("non-empty");
        let std = data.std_axis(Axis(0), 0.0);
        Self::from_stats(mean.to_vec(), std.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, width: usize) -> Result<()> {
        if width != self.dim() {
            return Err(Error::shape("normalizer input", self.dim(), width));
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x.len())?;
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn invert(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x.len())?;
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| v * s + m)
            .collect())
    }

    pub fn apply_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(x.ncols())?;
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    pub fn invert_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(x.ncols())?;
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = *v * s + m;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, cols), |(_, j)| {
            rng.gen_range(-1.0..1.0) * (j + 1) as f64 * 3.0 + j as f64
        })
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let mut data = random(50, 3, 1);
        data.column_mut(1).fill(4.25);
        let norm = Normalizer::fit(data.view()).unwrap();
        assert_eq!(norm.std[1], STD_FLOOR);
        let z = norm.apply_batch(data.view()).unwrap();
        assert!(z.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn round_trip() {
        let data = random(40, 5, 2);
        let norm = Normalizer::fit(data.view()).unwrap();
        for row in data.rows() {
            let x = row.to_vec();
            let back = norm.invert(&norm.apply(&x).unwrap()).unwrap();
            assert!(x.iter().zip(&back).all(|(a, b)| (a - b).abs() <= 1e-12));
        }
        let back = norm
            .invert_batch(norm.apply_batch(data.view()).unwrap().view())
            .unwrap();
        assert!((&back - &data).iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn fitted_columns_are_standardized() {
        let data = random(500, 4, 3);
        let z = Normalizer::fit(data.view())
            .unwrap()
            .apply_batch(data.view())
            .unwrap();
        for col in z.columns() {
            let n = col.len() as f64;
            let mean = col.sum() / n;
            let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() <= 1e-10);
            assert!((std - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn empty_data_rejected() {
        assert!(Normalizer::fit(Array2::zeros((0, 2)).view()).is_err());
        assert!(Normalizer::identity(3).apply(&[1.0]).is_err());
    }
}
