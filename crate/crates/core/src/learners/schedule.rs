use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step-size law indexed by the number of previous visits `n` of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum StepSize {
    /// `c` at every visit.
    Constant { c: f64 },
    /// `c / (n + n0)`.
    Harmonic { c: f64, n0: f64 },
    /// `c / (n + 1)^p` with `p` in (0.5, 1].
    Polynomial { c: f64, p: f64 },
}

impl StepSize {
    pub fn constant(c: f64) -> Self {
        StepSize::Constant { c }
    }

    pub fn value(&self, n: u64) -> f64 {
        match *self {
            StepSize::Constant { c } => c,
            StepSize::Harmonic { c, n0 } => c / (n as f64 + n0),
            StepSize::Polynomial { c, p } => c / (n as f64 + 1.0).powf(p),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSize::Constant { c } => c > 0.0 && c.is_finite(),
            StepSize::Harmonic { c, n0 } => c > 0.0 && c.is_finite() && n0 > 0.0 && n0.is_finite(),
            StepSize::Polynomial { c, p } => c > 0.0 && c.is_finite() && p > 0.5 && p <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(format!("invalid step-size law {self:?}")))
        }
    }

    /// Whether the sequence is square-summable but not summable.
    /// Constant steps are not.
    pub fn satisfies_robbins_monro(&self) -> bool {
        !matches!(self, StepSize::Constant { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laws() {
        assert_eq!(StepSize::constant(0.1).value(1000), 0.1);
        assert_eq!(StepSize::Harmonic { c: 1.0, n0: 1.0 }.value(3), 0.25);
        assert!((StepSize::Polynomial { c: 1.0, p: 1.0 }.value(3) - 0.25).abs() < 1e-15);
        assert!(StepSize::Polynomial { c: 1.0, p: 0.5 }.validate().is_err());
        assert!(StepSize::constant(0.0).validate().is_err());
        assert!(!StepSize::constant(0.1).satisfies_robbins_monro());
        assert!(StepSize::Harmonic { c: 1.0, n0: 1.0 }.satisfies_robbins_monro());
    }

    #[test]
    fn serde_format() {
        let s: StepSize = serde_json::from_str(r#"{"law":"constant","c":0.1}"#).unwrap();
        assert_eq!(s, StepSize::constant(0.1));
        let s: StepSize = serde_json::from_str(r#"{"law":"polynomial","c":1.0,"p":0.7}"#).unwrap();
        assert_eq!(s, StepSize::Polynomial { c: 1.0, p: 0.7 });
    }
}
