//! Kernel SVM on standardized feature rows, trained by SMO on the dual.

mod io;
mod kernel;
mod scaler;
mod smo;

pub use io::{SVM_MAGIC, read_model, write_model};
pub use kernel::{KernelKind, KernelSpec};
pub use scaler::Scaler;
pub use smo::{DualSolution, SmoOptions, solve_dual};

use crate::corpus::Label;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("training data must contain both classes")]
    DegenerateLabels,
    #[error("expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no training rows")]
    EmptyInput,
    #[error("{0} rows but {1} labels")]
    LabelCount(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: KernelSpec,
    /// Stopping threshold on the maximal KKT violation.
    pub tol: f64,
    /// Iteration budget in units of the training-set size.
    pub max_passes: usize,
    /// Multiplier on C for Satire rows; 1 means unweighted.
    pub satire_weight: f64,
    /// Kernel-row cache budget. The full Gram matrix is precomputed when it
    /// fits.
    pub cache_mb: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            kernel: KernelSpec::default(),
            tol: 1e-3,
            max_passes: 1000,
            satire_weight: 1.0,
            cache_mb: 256,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<(), SvmError> {
        let bad = |m: &str| Err(SvmError::InvalidParameter(m.to_string()));
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad("C must be positive");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_passes == 0 {
            return bad("max_passes must be at least 1");
        }
        if !(self.satire_weight > 0.0 && self.satire_weight.is_finite()) {
            return bad("class weight must be positive");
        }
        self.kernel.validate()
    }
}

/// Convergence details of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub iterations: usize,
    pub converged: bool,
    /// Maximal KKT violation at termination.
    pub kkt_gap: f64,
    /// Dual objective ½αᵀQα − Σα (minimized).
    pub objective: f64,
    pub support_vectors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub(crate) kernel: KernelSpec,
    pub(crate) c: f64,
    pub(crate) scaler: Scaler,
    /// Standardized rows with nonzero α, row-major.
    pub(crate) support_vectors: Vec<f64>,
    /// αᵢyᵢ per support vector.
    pub(crate) dual_coef: Vec<f64>,
    pub(crate) bias: f64,
}

impl SvmModel {
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    pub fn dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn num_support_vectors(&self) -> usize {
        self.dual_coef.len()
    }

    pub fn support_vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.support_vectors.chunks_exact(self.dim())
    }

    pub fn dual_coef(&self) -> &[f64] {
        &self.dual_coef
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Σ αᵢyᵢ K(svᵢ, scaled x) + b; positive means Satire.
    pub fn decision_function(&self, x: &[f64]) -> Result<f64, SvmError> {
        if x.len() != self.dim() {
            return Err(SvmError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let z = self.scaler.apply(x);
        Ok(self
            .support_vectors()
            .zip(&self.dual_coef)
            .map(|(sv, coef)| coef * self.kernel.eval(sv, &z))
            .sum::<f64>()
            + self.bias)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label, SvmError> {
        Ok(if self.decision_function(x)? > 0.0 {
            Label::Satire
        } else {
            Label::True
        })
    }
}

/// Standardize `x`, resolve the kernel's automatic gamma on the standardized
/// rows, and solve the dual. Non-convergence within the iteration budget is
/// reported (and logged) rather than treated as an error.
pub fn train_svm(x: &[Vec<f64>], y: &[Label], params: &SvmParams) -> Result<(SvmModel, TrainReport), SvmError> {
    params.validate()?;
    if x.is_empty() {
        return Err(SvmError::EmptyInput);
    }
    if x.len() != y.len() {
        return Err(SvmError::LabelCount(x.len(), y.len()));
    }
    let dim = x[0].len();
    for row in x {
        if row.len() != dim {
            return Err(SvmError::DimensionMismatch {
                expected: dim,
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(SvmError::NonFinite);
        }
    }
    if !(y.contains(&Label::True) && y.contains(&Label::Satire)) {
        return Err(SvmError::DegenerateLabels);
    }

    let scaler = Scaler::fit(x);
    let z: Vec<f64> = x.iter().flat_map(|row| scaler.apply(row)).collect();
    let kernel = params.kernel.resolved(&z, dim);
    let signs: Vec<f64> = y.iter().map(|l| l.sign()).collect();
    let upper: Vec<f64> = y
        .iter()
        .map(|l| match l {
            Label::Satire => params.c * params.satire_weight,
            Label::True => params.c,
        })
        .collect();
    let options = SmoOptions {
        tol: params.tol,
        max_iter: params.max_passes.saturating_mul(x.len().max(100)),
        cache_bytes: params.cache_mb << 20,
    };
    let solution = solve_dual(&z, dim, &signs, &upper, &kernel, &options);
    if !solution.converged {
        log::warn!(
            "SMO stopped after {} iterations with KKT gap {:.3e} (tol {})",
            solution.iterations,
            solution.kkt_gap,
            params.tol
        );
    }

    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for (i, &a) in solution.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.extend_from_slice(&z[i * dim..(i + 1) * dim]);
            dual_coef.push(a * signs[i]);
        }
    }
    let report = TrainReport {
        iterations: solution.iterations,
        converged: solution.converged,
        kkt_gap: solution.kkt_gap,
        objective: solution.objective,
        support_vectors: dual_coef.len(),
    };
    let model = SvmModel {
        kernel,
        c: params.c,
        scaler,
        support_vectors,
        dual_coef,
        bias: -solution.rho,
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(signs: &[i32]) -> Vec<Label> {
        signs.iter().map(|&s| Label::from_sign(s as f64)).collect()
    }

    fn linear() -> SvmParams {
        SvmParams {
            kernel: KernelSpec::linear(),
            ..Default::default()
        }
    }

    #[test]
    fn symmetric_pair() {
        let x = vec![vec![-1.0], vec![1.0]];
        let (model, report) = train_svm(&x, &labels(&[-1, 1]), &linear()).unwrap();
        assert!(report.converged);
        assert!(model.decision_function(&[0.0]).unwrap().abs() < 1e-12);
        assert_eq!(model.predict(&[-1.0]).unwrap(), Label::True);
        assert_eq!(model.predict(&[1.0]).unwrap(), Label::Satire);
        // Standardized points sit at ±1, exactly on the margin.
        assert!((model.decision_function(&[1.0]).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn xor_with_quadratic_kernel() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let y = labels(&[-1, -1, 1, 1]);
        let params = SvmParams {
            kernel: KernelSpec::polynomial(2, None, 1.0),
            c: 10.0,
            ..Default::default()
        };
        let (model, _) = train_svm(&x, &y, &params).unwrap();
        for (row, label) in x.iter().zip(&y) {
            assert_eq!(model.predict(row).unwrap(), *label);
        }
    }

    #[test]
    fn flipping_labels_flips_decisions() {
        let x: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i as f64 * 0.7).sin() * 3.0, (i as f64 * 1.3).cos() + i as f64 * 0.1])
            .collect();
        let y: Vec<Label> = (0..12).map(|i| if x[i][0] + 0.5 * x[i][1] > 0.2 { Label::Satire } else { Label::True }).collect();
        let flipped: Vec<Label> = y.iter().map(|l| Label::from_sign(-l.sign())).collect();
        let params = SvmParams {
            tol: 1e-10,
            ..Default::default()
        };
        let (a, _) = train_svm(&x, &y, &params).unwrap();
        let (b, _) = train_svm(&x, &flipped, &params).unwrap();
        for probe in [[0.3, -0.2], [2.0, 1.0], [-1.5, 0.4]] {
            let (da, db) = (a.decision_function(&probe).unwrap(), b.decision_function(&probe).unwrap());
            assert!((da + db).abs() < 1e-8, "{da} vs {db}");
        }
    }

    #[test]
    fn input_errors() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            train_svm(&x, &labels(&[1, 1]), &linear()),
            Err(SvmError::DegenerateLabels)
        ));
        assert!(matches!(
            train_svm(&[vec![0.0], vec![1.0, 2.0]], &labels(&[1, -1]), &linear()),
            Err(SvmError::DimensionMismatch { .. })
        ));
        let (model, _) = train_svm(&x, &labels(&[1, -1]), &linear()).unwrap();
        assert!(matches!(
            model.decision_function(&[1.0, 2.0]),
            Err(SvmError::DimensionMismatch { expected: 1, found: 2 })
        ));
        let bad = SvmParams { c: 0.0, ..linear() };
        assert!(matches!(train_svm(&x, &labels(&[1, -1]), &bad), Err(SvmError::InvalidParameter(_))));
    }

    #[test]
    fn dual_feasibility() {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.91).cos(), (i % 7) as f64])
            .collect();
        let y: Vec<Label> = (0..40).map(|i| if (i * 7919) % 3 == 0 { Label::Satire } else { Label::True }).collect();
        let params = SvmParams {
            c: 0.5,
            satire_weight: 2.0,
            ..Default::default()
        };
        let (model, report) = train_svm(&x, &y, &params).unwrap();
        assert!(report.converged);
        let sum: f64 = model.dual_coef().iter().sum();
        assert!(sum.abs() < 1e-8);
        for &coef in model.dual_coef() {
            let cap = if coef > 0.0 { 1.0 } else { 0.5 };
            assert!(coef.abs() <= cap + 1e-12);
        }
    }
}
