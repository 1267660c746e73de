//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Language-model keys apply to
//! both domain models; a `true.` or `satire.` prefix overrides one of them.
//! Later assignments win, so command-line overrides are simply applied after
//! the file.

use super::PipelineError;
use crate::corpus::{Fraction, Label, Unit};
use crate::lm::{LmConfig, Precision};
use crate::svm::{KernelKind, KernelSpec, SvmParams};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub train_path: Option<PathBuf>,
    pub validation_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub unit: Unit,
    pub lm_fraction: Fraction,
    pub min_count: usize,
    pub jobs: usize,
    /// Shared language-model settings; `seed` is derived from the run seed.
    pub lm: LmConfig,
    pub lm_overrides: BTreeMap<Label, BTreeMap<String, String>>,
    pub lm_precision: Precision,
    pub svm: SvmParams,
    pub mi_bins: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            train_path: None,
            validation_path: None,
            test_path: None,
            out_dir: PathBuf::from("out"),
            seed: 1,
            unit: Unit::Sentence,
            lm_fraction: Fraction::default(),
            min_count: 5,
            jobs: 1,
            lm: LmConfig::default(),
            lm_overrides: BTreeMap::new(),
            lm_precision: Precision::F64,
            svm: SvmParams::default(),
            mi_bins: crate::stats::DEFAULT_BINS,
        }
    }
}

const LM_KEYS: [&str; 12] = [
    "embed_dim",
    "hidden_dim",
    "num_layers",
    "dropout",
    "epochs",
    "bptt_len",
    "batch_size",
    "learning_rate",
    "grad_clip",
    "anneal_factor",
    "holdout_fraction",
    "seed",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PipelineError> {
    value
        .parse()
        .map_err(|_| PipelineError::Config(format!("{key}: cannot parse {value:?}")))
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn set_lm_key(lm: &mut LmConfig, key: &str, value: &str) -> Result<(), PipelineError> {
    match key {
        "embed_dim" => lm.embed_dim = parse(key, value)?,
        "hidden_dim" => lm.hidden_dim = parse(key, value)?,
        "num_layers" => lm.num_layers = parse(key, value)?,
        "dropout" => lm.dropout = parse(key, value)?,
        "epochs" => lm.epochs = parse(key, value)?,
        "bptt_len" => lm.bptt_len = parse(key, value)?,
        "batch_size" => lm.batch_size = parse(key, value)?,
        "learning_rate" => lm.learning_rate = parse(key, value)?,
        "grad_clip" => lm.grad_clip = parse(key, value)?,
        "anneal_factor" => lm.anneal_factor = parse(key, value)?,
        "holdout_fraction" => lm.holdout_fraction = parse(key, value)?,
        "seed" => lm.seed = parse(key, value)?,
        _ => return Err(PipelineError::Config(format!("unknown language-model key {key:?}"))),
    }
    Ok(())
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), PipelineError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.apply_assignment(line)
                .map_err(|e| PipelineError::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    /// Apply one `key=value` assignment.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<(), PipelineError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| PipelineError::Config(format!("expected key=value, got {assignment:?}")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        if let Some((domain, lm_key)) = key.split_once('.') {
            let label: Label = domain
                .parse()
                .map_err(|_| PipelineError::Config(format!("unknown key {key:?}")))?;
            // Validate the value now rather than at training time.
            set_lm_key(&mut self.lm.clone(), lm_key, value)?;
            self.lm_overrides
                .entry(label)
                .or_default()
                .insert(lm_key.to_string(), value.to_string());
            return Ok(());
        }
        match key {
            "train_path" => self.train_path = optional_path(value),
            "validation_path" => self.validation_path = optional_path(value),
            "test_path" => self.test_path = optional_path(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            "unit" => self.unit = value.parse().map_err(PipelineError::Config)?,
            "lm_fraction" => self.lm_fraction = value.parse().map_err(|e| PipelineError::Config(format!("{e}")))?,
            "min_count" => self.min_count = parse(key, value)?,
            "jobs" => self.jobs = parse(key, value)?,
            "lm_precision" => {
                self.lm_precision = match value {
                    "f64" => Precision::F64,
                    "f32" => Precision::F32,
                    _ => return Err(PipelineError::Config(format!("lm_precision: expected f64 or f32, got {value:?}"))),
                }
            }
            "kernel" => self.svm.kernel.kind = value.parse().map_err(PipelineError::Config)?,
            "degree" => self.svm.kernel.degree = parse(key, value)?,
            "gamma" => self.svm.kernel.gamma = if value == "auto" { None } else { Some(parse(key, value)?) },
            "coef0" => self.svm.kernel.coef0 = parse(key, value)?,
            "C" | "c" => self.svm.c = parse(key, value)?,
            "tol" => self.svm.tol = parse(key, value)?,
            "max_passes" => self.svm.max_passes = parse(key, value)?,
            "satire_weight" => self.svm.satire_weight = parse(key, value)?,
            "cache_mb" => self.svm.cache_mb = parse(key, value)?,
            "mi_bins" => self.mi_bins = parse(key, value)?,
            k if LM_KEYS.contains(&k) => set_lm_key(&mut self.lm, k, value)?,
            _ => return Err(PipelineError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Effective language-model settings for one domain. Unless overridden,
    /// the true model is seeded with the run seed and the satire model with
    /// the run seed plus one.
    pub fn lm_config(&self, label: Label) -> Result<LmConfig, PipelineError> {
        let mut lm = self.lm.clone();
        lm.seed = match label {
            Label::True => self.seed,
            Label::Satire => self.seed.wrapping_add(1),
        };
        if let Some(overrides) = self.lm_overrides.get(&label) {
            for (k, v) in overrides {
                set_lm_key(&mut lm, k, v)?;
            }
        }
        lm.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(lm)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        for label in Label::ALL {
            self.lm_config(label)?;
        }
        self.svm.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.min_count == 0 {
            return Err(PipelineError::Config("min_count must be at least 1".into()));
        }
        if self.mi_bins < 2 {
            return Err(PipelineError::Config("mi_bins must be at least 2".into()));
        }
        if self.jobs == 0 {
            return Err(PipelineError::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }

    /// Every setting as `key = value` lines, in a fixed order, such that
    /// parsing the text reproduces this configuration.
    pub fn to_text(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("train_path", path(&self.train_path));
        kv("validation_path", path(&self.validation_path));
        kv("test_path", path(&self.test_path));
        kv("out_dir", self.out_dir.display().to_string());
        kv("seed", self.seed.to_string());
        kv("unit", self.unit.to_string());
        kv("lm_fraction", self.lm_fraction.to_string());
        kv("min_count", self.min_count.to_string());
        kv("jobs", self.jobs.to_string());
        let lm = &self.lm;
        kv("embed_dim", lm.embed_dim.to_string());
        kv("hidden_dim", lm.hidden_dim.to_string());
        kv("num_layers", lm.num_layers.to_string());
        kv("dropout", lm.dropout.to_string());
        kv("epochs", lm.epochs.to_string());
        kv("bptt_len", lm.bptt_len.to_string());
        kv("batch_size", lm.batch_size.to_string());
        kv("learning_rate", lm.learning_rate.to_string());
        kv("grad_clip", lm.grad_clip.to_string());
        kv("anneal_factor", lm.anneal_factor.to_string());
        kv("holdout_fraction", lm.holdout_fraction.to_string());
        for (label, overrides) in &self.lm_overrides {
            for (k, v) in overrides {
                kv(&format!("{label}.{k}"), v.clone());
            }
        }
        kv(
            "lm_precision",
            match self.lm_precision {
                Precision::F64 => "f64",
                Precision::F32 => "f32",
            }
            .into(),
        );
        let KernelSpec {
            kind,
            degree,
            gamma,
            coef0,
        } = &self.svm.kernel;
        kv(
            "kernel",
            match kind {
                KernelKind::Linear => "linear",
                KernelKind::Polynomial => "poly",
            }
            .into(),
        );
        kv("degree", degree.to_string());
        kv("gamma", gamma.map_or("auto".into(), |g| g.to_string()));
        kv("coef0", coef0.to_string());
        kv("C", self.svm.c.to_string());
        kv("tol", self.svm.tol.to_string());
        kv("max_passes", self.svm.max_passes.to_string());
        kv("satire_weight", self.svm.satire_weight.to_string());
        kv("cache_mb", self.svm.cache_mb.to_string());
        kv("mi_bins", self.mi_bins.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_overrides_and_domains() {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text("# run\ntrain_path = data/train.jsonl\nepochs = 3  # short\nsatire.epochs = 4\nkernel = linear\n\nC=2.5\n")
            .unwrap();
        cfg.apply_assignment("seed=9").unwrap();
        assert_eq!(cfg.train_path, Some(PathBuf::from("data/train.jsonl")));
        assert_eq!(cfg.svm.kernel.kind, KernelKind::Linear);
        assert_eq!(cfg.svm.c, 2.5);
        let t = cfg.lm_config(Label::True).unwrap();
        let s = cfg.lm_config(Label::Satire).unwrap();
        assert_eq!((t.epochs, t.seed), (3, 9));
        assert_eq!((s.epochs, s.seed), (4, 10));
    }

    #[test]
    fn errors_are_config_errors() {
        let mut cfg = PipelineConfig::default();
        for bad in ["nonsense = 1", "epochs = many", "comic.epochs = 2", "no equals sign", "true.colour = red"] {
            assert!(matches!(cfg.apply_text(bad), Err(PipelineError::Config(_))), "{bad}");
        }
        cfg.set("epochs", "0").unwrap();
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
    }

    #[test]
    fn resolved_text_round_trips() {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text("test_path = t.jsonl\ngamma = 0.125\ntrue.dropout = 0.5\nlm_fraction = 1/2\nunit = paragraph")
            .unwrap();
        let mut again = PipelineConfig::default();
        again.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_text(), cfg.to_text());
    }
}
