//! Fixed-order compensated accumulation.
//!
//! Every reduction in the crate goes through [`CompensatedSum`] so that a
//! given sequence of addends always produces the same bits, independent of
//! how the addends were computed.

/// Neumaier (improved Kahan-Babuska) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

/// Compensated sum of a slice, in slice order.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(values.iter().copied());
    acc.value()
}

/// Compensated dot product, in index order.
pub fn compensated_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for (x, y) in a.iter().zip(b) {
        acc.add(x * y);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let vals = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(&vals), 2.0);
        let naive: f64 = vals.iter().sum();
        assert_eq!(naive, 0.0);
    }

    #[test]
    fn order_fixed_result_is_reproducible() {
        let vals: Vec<f64> = (0..1000).map(|i| ((i as f64) * 0.37).sin() / (1.0 + i as f64)).collect();
        let a = compensated_sum(&vals);
        let b = compensated_sum(&vals);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
