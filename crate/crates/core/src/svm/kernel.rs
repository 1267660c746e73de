use super::SvmError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    #[serde(alias = "poly")]
    Polynomial,
}

impl std::str::FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(KernelKind::Linear),
            "poly" | "polynomial" => Ok(KernelKind::Polynomial),
            other => Err(format!("unknown kernel {other:?} (expected linear or poly)")),
        }
    }
}

/// `linear`: ⟨u,v⟩. `polynomial`: (γ⟨u,v⟩ + coef0)^degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub degree: u32,
    /// `None` until resolved from training data as 1/(d · mean column
    /// variance).
    pub gamma: Option<f64>,
    pub coef0: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::polynomial(3, None, 0.0)
    }
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            degree: 1,
            gamma: None,
            coef0: 0.0,
        }
    }

    pub fn polynomial(degree: u32, gamma: Option<f64>, coef0: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Polynomial,
            degree,
            gamma,
            coef0,
        }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        if self.degree == 0 {
            return Err(SvmError::InvalidParameter("degree must be at least 1".into()));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(SvmError::InvalidParameter("gamma must be positive".into()));
            }
        }
        if !self.coef0.is_finite() {
            return Err(SvmError::InvalidParameter("coef0 must be finite".into()));
        }
        Ok(())
    }

    /// Fill in the automatic gamma from row-major data of width `dim`.
    pub fn resolved(&self, data: &[f64], dim: usize) -> KernelSpec {
        let mut spec = self.clone();
        if spec.gamma.is_none() {
            let n = (data.len() / dim.max(1)) as f64;
            let mut mean_var = 0.0;
            for c in 0..dim {
                let col = data.iter().skip(c).step_by(dim);
                let mean = col.clone().sum::<f64>() / n;
                mean_var += col.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            }
            mean_var /= dim as f64;
            let gamma = if mean_var > 0.0 { 1.0 / (dim as f64 * mean_var) } else { 1.0 / dim as f64 };
            spec.gamma = Some(gamma);
        }
        spec
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(1.0)
    }

    #[inline]
    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        let dot = crate::lm::kernels::dot(u, v);
        match self.kind {
            KernelKind::Linear => dot,
            KernelKind::Polynomial => (self.gamma() * dot + self.coef0).powi(self.degree as i32),
        }
    }
}
