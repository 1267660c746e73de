use serde::{Deserialize, Serialize};

/// Per-column standardization fit on training rows. Constant columns keep
/// mean 0 and scale 1, i.e. pass through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    /// Population mean and standard deviation of each column. Panics on
    /// empty input.
    pub fn fit(rows: &[Vec<f64>]) -> Scaler {
        assert!(!rows.is_empty(), "cannot fit a scaler on no rows");
        let dim = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        let mut std = vec![1.0; dim];
        for c in 0..dim {
            let m = rows.iter().map(|r| r[c]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[c] - m).powi(2)).sum::<f64>() / n;
            // Spread below rounding noise of the values counts as constant.
            if var.sqrt() > 1e-12 * m.abs().max(f64::MIN_POSITIVE) {
                mean[c] = m;
                std[c] = var.sqrt();
            }
        }
        Scaler { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (m, s))| (v - m) / s).collect()
    }

    pub fn inverse(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (m, s))| v * s + m).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_point_column() {
        let s = Scaler::fit(&[vec![1.0, 5.0], vec![3.0, 5.0]]);
        assert_eq!((s.mean[0], s.std[0]), (2.0, 1.0));
        assert_eq!(s.apply(&[1.0, 5.0]), vec![-1.0, 5.0]);
        assert_eq!(s.apply(&[3.0, 7.0]), vec![1.0, 7.0]);
    }

    proptest! {
        #[test]
        fn standardizes_and_inverts(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..40)) {
            let s = Scaler::fit(&rows);
            let z: Vec<Vec<f64>> = rows.iter().map(|r| s.apply(r)).collect();
            let n = rows.len() as f64;
            for c in 0..3 {
                if s.std[c] == 1.0 && s.mean[c] == 0.0 {
                    continue;
                }
                let m = z.iter().map(|r| r[c]).sum::<f64>() / n;
                let v = z.iter().map(|r| (r[c] - m).powi(2)).sum::<f64>() / n;
                prop_assert!(m.abs() < 1e-9);
                prop_assert!((v - 1.0).abs() < 1e-6);
            }
            for (r, zr) in rows.iter().zip(&z) {
                for (a, b) in r.iter().zip(s.inverse(zr)) {
                    prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
                }
            }
        }
    }
}
