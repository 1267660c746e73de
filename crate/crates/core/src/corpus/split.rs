use super::{CorpusError, Document, Label, RawDocument, TokenizedDocument};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Exact rational in (0, 1), e.g. `2/3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    numerator: u64,
    denominator: u64,
}

impl Fraction {
    pub fn new(numerator: u64, denominator: u64) -> Result<Self, CorpusError> {
        if denominator == 0 || numerator == 0 || numerator >= denominator {
            return Err(CorpusError::InvalidFraction(format!("{numerator}/{denominator}")));
        }
        Ok(Fraction {
            numerator,
            denominator,
        })
    }

    /// `floor(count * self)`, computed exactly.
    pub fn floor_of(self, count: usize) -> usize {
        ((count as u128 * self.numerator as u128) / self.denominator as u128) as usize
    }

    pub fn as_f64(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl Default for Fraction {
    fn default() -> Self {
        Fraction {
            numerator: 2,
            denominator: 3,
        }
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl FromStr for Fraction {
    type Err = CorpusError;

    /// Accepts `a/b` or a decimal such as `0.5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CorpusError::InvalidFraction(s.to_string());
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num = num.trim().parse().map_err(|_| bad())?;
            let den = den.trim().parse().map_err(|_| bad())?;
            return Fraction::new(num, den).map_err(|_| bad());
        }
        let (int_part, frac_part) = s.split_once('.').ok_or_else(bad)?;
        if !(int_part.is_empty() || int_part == "0")
            || frac_part.is_empty()
            || frac_part.len() > 18
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        let num: u64 = frac_part.parse().map_err(|_| bad())?;
        Fraction::new(num, 10u64.pow(frac_part.len() as u32)).map_err(|_| bad())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SplitPlan {
    pub lm_fraction: Fraction,
    pub seed: u64,
}

/// Anything carrying an optional label, so the split can stratify.
pub trait Labeled {
    fn label(&self) -> Option<Label>;
}

impl Labeled for RawDocument {
    fn label(&self) -> Option<Label> {
        self.label
    }
}

impl Labeled for TokenizedDocument {
    fn label(&self) -> Option<Label> {
        self.label
    }
}

impl Labeled for Document {
    fn label(&self) -> Option<Label> {
        self.label
    }
}

/// Partition training documents into the LM part and the classifier part.
///
/// Each label stratum contributes `floor(lm_fraction * count)` documents to
/// the LM side, chosen by a seeded shuffle. Both outputs keep the input order.
pub fn split_lm_clf<D: Labeled + Clone>(train_docs: &[D], plan: &SplitPlan) -> (Vec<D>, Vec<D>) {
    let mut strata: BTreeMap<Option<Label>, Vec<usize>> = BTreeMap::new();
    for (i, doc) in train_docs.iter().enumerate() {
        strata.entry(doc.label()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut to_lm = vec![false; train_docs.len()];
    for indices in strata.values_mut() {
        indices.shuffle(&mut rng);
        let take = plan.lm_fraction.floor_of(indices.len());
        for &i in &indices[..take] {
            to_lm[i] = true;
        }
    }
    let mut lm = Vec::new();
    let mut clf = Vec::new();
    for (doc, &goes_lm) in train_docs.iter().zip(&to_lm) {
        if goes_lm {
            lm.push(doc.clone());
        } else {
            clf.push(doc.clone());
        }
    }
    (lm, clf)
}
