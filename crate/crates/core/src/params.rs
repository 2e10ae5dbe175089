use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::MultiIndex;

/// The problem tuple: ambient dimension `n`, weight `alpha`, Lebesgue
/// exponent `p` (with conjugate `q`) and derivative order `m`.
///
/// The operators `T_k` depend on the multi-index `k` only through `|k| = m`,
/// so the multi-index itself is not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub alpha: f64,
    pub p: f64,
    pub m: u32,
}

impl Params {
    pub fn new(n: usize, alpha: f64, p: f64, m: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("dimension n = {n} must be at least 2")));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParams(format!("alpha = {alpha} must be positive")));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidParams(format!("p = {p} must satisfy 1 < p < inf")));
        }
        Ok(Self { n, alpha, p, m })
    }

    /// Params with the smallest order `m > (n - 1) / p`.
    pub fn with_smallest_order(n: usize, alpha: f64, p: f64) -> Result<Self> {
        let mut params = Self::new(n, alpha, p, 0)?;
        params.m = smallest_admissible_order(n, p);
        Ok(params)
    }

    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn mf(&self) -> f64 {
        self.m as f64
    }

    /// Exponent `pm - n` of the weight in `dv_{pm-n}`.
    pub fn besov_weight_exponent(&self) -> f64 {
        self.p * self.mf() - self.nf()
    }

    pub fn is_besov_admissible(&self) -> bool {
        self.mf() > (self.nf() - 1.0) / self.p
    }

    pub fn require_besov_admissible(&self) -> Result<()> {
        if self.is_besov_admissible() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "order m = {} must exceed (n - 1)/p = {}",
                self.m,
                (self.nf() - 1.0) / self.p
            )))
        }
    }

    pub fn multi_indices(&self) -> Vec<MultiIndex> {
        MultiIndex::all_of_order(self.n, self.m)
    }
}

pub fn smallest_admissible_order(n: usize, p: f64) -> u32 {
    let bound = (n as f64 - 1.0) / p;
    (bound.floor() as u32) + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugate_exponent() {
        let pr = Params::new(2, 1.0, 4.0, 1).unwrap();
        assert!((1.0 / pr.p + 1.0 / pr.q() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn smallest_order() {
        assert_eq!(smallest_admissible_order(2, 2.0), 1);
        assert_eq!(smallest_admissible_order(3, 2.0), 2);
        assert_eq!(smallest_admissible_order(3, 1.5), 2);
        assert_eq!(smallest_admissible_order(3, 4.0), 1);
        assert_eq!(smallest_admissible_order(2, 1.5), 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Params::new(1, 1.0, 2.0, 1).is_err());
        assert!(Params::new(2, 0.0, 2.0, 1).is_err());
        assert!(Params::new(2, 1.0, 1.0, 1).is_err());
        assert!(Params::new(3, 1.0, 2.0, 1).unwrap().require_besov_admissible().is_err());
    }
}
