//! The bracket `[x, y]`, the weighted harmonic Bergman kernel
//! `R_α(x, y) = ω_α Σ_j A_j Z_j(x, y)` and its `x`-derivatives, and
//! empirical growth constants.
//!
//! Truncation uses a rigorous tail bound. For a homogeneous polynomial of
//! degree `j` bounded by `M` on the unit ball, iterating the Markov-Kellogg
//! inequality gives `|∂^k p(x)| <= [j!/(j-m)!]^2 M |x|^{j-m}` with `m = |k|`,
//! and `sup |Z_j(·, y)| = dim H_j |y|^j`. The resulting term bounds have
//! decreasing ratios, so the tail after degree `J` is at most
//! `b_{J+1} / (1 - b_{J+2}/b_{J+1})`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::point::{dot, norm, norm_sq, MultiIndex};
use crate::specfun::ln_gamma;
use crate::sum::CompensatedSum;
use crate::zonal::{dim_harmonic, ChainExpansion, ZonalRecurrence, DEFAULT_DEGREE_CAP};

pub const DEFAULT_REL_TOL: f64 = 1e-8;
/// Largest `|x||y|` at which kernels are evaluated.
pub const MAX_RADIUS_PRODUCT: f64 = 0.99;

/// `[x, y] = (1 - 2 x·y + |x|^2 |y|^2)^{1/2}`.
pub fn bracket(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidParams("bracket arguments differ in dimension".into()));
    }
    let (rx, ry) = (norm(x), norm(y));
    if rx > 1.0 + 1e-12 || ry > 1.0 + 1e-12 {
        return Err(Error::Domain(format!("bracket needs |x|, |y| <= 1 (got {rx}, {ry})")));
    }
    let rad = 1.0 - 2.0 * dot(x, y) + norm_sq(x) * norm_sq(y);
    if rad < -1e-12 {
        return Err(Error::Domain(format!("negative bracket radicand {rad}")));
    }
    Ok(rad.max(0.0).sqrt())
}

/// Truncation settings for kernel series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelControl {
    pub degree_cap: usize,
    pub rel_tol: f64,
}

impl KernelControl {
    pub fn new(degree_cap: usize, rel_tol: f64) -> Result<Self> {
        if degree_cap < 1 {
            return Err(Error::InvalidParams("degree_cap must be at least 1".into()));
        }
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::InvalidParams(format!("rel_tol = {rel_tol} must lie in (0, 1)")));
        }
        Ok(Self { degree_cap, rel_tol })
    }
}

impl Default for KernelControl {
    fn default() -> Self {
        Self { degree_cap: DEFAULT_DEGREE_CAP, rel_tol: DEFAULT_REL_TOL }
    }
}

/// Coefficients of the kernel series up to the degree cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSeries {
    pub n: usize,
    pub alpha: f64,
    pub control: KernelControl,
    /// `ω_α A_j` for `α > 0`, `(n + 2j)/(n|B|)` for `α = 0`.
    pub coefficients: Vec<f64>,
}

/// A kernel value with its truncation data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    pub degree: usize,
    pub tail_bound: f64,
}

/// `A_j = Γ(j + n/2 + α) / Γ(j + n/2)`.
pub fn a_coefficient(n: usize, alpha: f64, j: usize) -> f64 {
    let h = n as f64 / 2.0 + j as f64;
    (ln_gamma(h + alpha).expect("positive") - ln_gamma(h).expect("positive")).exp()
}

/// `ω_α = Γ(n/2) / Γ(n/2 + α)`.
pub fn omega_alpha(n: usize, alpha: f64) -> f64 {
    let h = n as f64 / 2.0;
    (ln_gamma(h).expect("positive") - ln_gamma(h + alpha).expect("positive")).exp()
}

impl KernelSeries {
    pub fn new(params: &Params, control: KernelControl) -> Self {
        Self::weighted(params.n, params.alpha, control)
    }

    pub fn weighted(n: usize, alpha: f64, control: KernelControl) -> Self {
        let h = n as f64 / 2.0;
        // ω_α A_0 = 1 and A_{j+1} / A_j = (j + n/2 + α) / (j + n/2)
        let mut coefficients = Vec::with_capacity(control.degree_cap + 1);
        let mut c = 1.0;
        for j in 0..=control.degree_cap {
            coefficients.push(c);
            let jf = j as f64;
            c *= (jf + h + alpha) / (jf + h);
        }
        Self { n, alpha, control, coefficients }
    }

    /// The unweighted kernel `R_0`.
    pub fn unweighted(n: usize, control: KernelControl) -> Self {
        let nb = crate::point::sphere_area(n);
        let coefficients = (0..=control.degree_cap).map(|j| (n + 2 * j) as f64 / nb).collect();
        Self { n, alpha: 0.0, control, coefficients }
    }

    pub fn with_control(&self, control: KernelControl) -> Self {
        if self.alpha == 0.0 {
            Self::unweighted(self.n, control)
        } else {
            Self::weighted(self.n, self.alpha, control)
        }
    }

    fn term_bound(&self, j: usize, m: usize, rx: f64, ry: f64) -> f64 {
        if j < m {
            return 0.0;
        }
        let mut falling = 1.0;
        for i in 0..m {
            falling *= (j - i) as f64;
        }
        let coef = self.coefficient_unbounded(j);
        coef * falling * falling * dim_harmonic(self.n, j) as f64 * ry.powi(j as i32) * rx.powi((j - m) as i32)
    }

    fn coefficient_unbounded(&self, j: usize) -> f64 {
        if j < self.coefficients.len() {
            return self.coefficients[j];
        }
        if self.alpha == 0.0 {
            (self.n + 2 * j) as f64 / crate::point::sphere_area(self.n)
        } else {
            omega_alpha(self.n, self.alpha) * a_coefficient(self.n, self.alpha, j)
        }
    }

    fn tail_after(&self, degree: usize, m: usize, rx: f64, ry: f64) -> f64 {
        let b1 = self.term_bound(degree + 1, m, rx, ry);
        if b1 == 0.0 {
            return 0.0;
        }
        let q = self.term_bound(degree + 2, m, rx, ry) / b1;
        if q >= 1.0 {
            f64::INFINITY
        } else {
            b1 / (1.0 - q)
        }
    }

    fn check_region(&self, x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.n || y.len() != self.n {
            return Err(Error::InvalidParams(format!("points must have dimension {}", self.n)));
        }
        let (rx, ry) = (norm(x), norm(y));
        if !(rx * ry < 1.0) {
            return Err(Error::Domain(format!("kernel series needs |x||y| < 1 (got {})", rx * ry)));
        }
        Ok((rx, ry))
    }

    /// `R_α(x, y)` with adaptive degree.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<KernelValue> {
        self.partial(&MultiIndex::zero(self.n), x, y)
    }

    /// `∂^k_x R_α(x, y)` with adaptive degree.
    pub fn partial(&self, k: &MultiIndex, x: &[f64], y: &[f64]) -> Result<KernelValue> {
        let (rx, ry) = self.check_region(x, y)?;
        let m = k.order() as usize;
        let chain = ChainExpansion::new(k, y);
        let mut rec = ZonalRecurrence::new(self.n, k.order(), dot(x, y), norm_sq(x) * norm_sq(y));
        let mut sum = CompensatedSum::new();
        let mut l1 = 0.0;
        let mut last_tail = f64::INFINITY;
        for j in 0..=self.control.degree_cap {
            let table = rec.next_degree();
            if j >= m {
                let term = self.coefficients[j] * chain.eval(x, table);
                sum.add(term);
                l1 += term.abs();
                last_tail = self.tail_after(j, m, rx, ry);
                if last_tail <= self.control.rel_tol * l1 || (l1 == 0.0 && last_tail == 0.0) {
                    return Ok(KernelValue { value: sum.value(), degree: j, tail_bound: last_tail });
                }
            }
        }
        Err(Error::KernelTruncation { degree: self.control.degree_cap, tail_bound: last_tail })
    }

    /// Partial sum through degree `degree`, no tail control.
    pub fn partial_sum(&self, k: &MultiIndex, x: &[f64], y: &[f64], degree: usize) -> f64 {
        let chain = ChainExpansion::new(k, y);
        let mut rec = ZonalRecurrence::new(self.n, k.order(), dot(x, y), norm_sq(x) * norm_sq(y));
        let mut sum = CompensatedSum::new();
        for j in 0..=degree {
            let table = rec.next_degree();
            if j >= k.order() as usize {
                sum.add(self.coefficient_unbounded(j) * chain.eval(x, table));
            }
        }
        sum.value()
    }
}

/// `|∂^m_x R_α(x, y)| = Σ_{|k|=m} |∂^k_x R_α(x, y)|`.
pub fn kernel_derivative_magnitude(series: &KernelSeries, m: u32, x: &[f64], y: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for k in MultiIndex::all_of_order(series.n, m) {
        total += series.partial(&k, x, y)?.value.abs();
    }
    Ok(total)
}

/// Sampling plan for growth constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub samples: usize,
    pub seed: u64,
    /// Samples have `|x| <= max_radius` and `|y| <= max_radius`.
    pub max_radius: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { samples: 200, seed: 0, max_radius: 0.9 }
    }
}

/// Empirical lower estimate of `C_α^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstant {
    pub m: u32,
    pub empirical_value: f64,
    pub sample_count: usize,
    /// Samples skipped because the kernel series needed more than the degree cap.
    pub skipped: usize,
    pub max_attained_at: (Vec<f64>, Vec<f64>),
    /// Running maximum after each sample.
    pub running_max: Vec<f64>,
}

fn uniform_ball(rng: &mut ChaCha8Rng, n: usize, max_radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r2 = norm_sq(&v);
        if r2 <= 1.0 {
            return v.iter().map(|c| c * max_radius).collect();
        }
    }
}

/// The pair used by sample `i`; independent of the total sample count.
pub fn growth_sample(n: usize, seed: u64, index: usize, max_radius: f64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let x = uniform_ball(&mut rng, n, max_radius);
    let y = uniform_ball(&mut rng, n, max_radius);
    (x, y)
}

/// `|∂^m_x R_α(x, y)| · [x, y]^{n-1+α+m}`.
pub fn growth_ratio(series: &KernelSeries, m: u32, x: &[f64], y: &[f64]) -> Result<f64> {
    let mag = kernel_derivative_magnitude(series, m, x, y)?;
    let b = bracket(x, y)?;
    Ok(mag * b.powf(series.n as f64 - 1.0 + series.alpha + m as f64))
}

/// Running maximum of [`growth_ratio`] over seeded samples.
pub fn estimate_growth_constant(series: &KernelSeries, m: u32, cfg: &SamplerConfig) -> Result<GrowthConstant> {
    if !(cfg.max_radius > 0.0 && cfg.max_radius < 1.0) {
        return Err(Error::InvalidParams(format!("max_radius = {} must lie in (0, 1)", cfg.max_radius)));
    }
    let values: Vec<Option<f64>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let (x, y) = growth_sample(series.n, cfg.seed, i, cfg.max_radius);
            match growth_ratio(series, m, &x, &y) {
                Ok(v) => Some(v),
                Err(_) => None,
            }
        })
        .collect();
    let mut best = 0.0;
    let mut best_index = None;
    let mut running_max = Vec::with_capacity(values.len());
    let mut skipped = 0;
    for (i, v) in values.iter().enumerate() {
        match v {
            Some(v) if *v > best => {
                best = *v;
                best_index = Some(i);
            }
            Some(_) => {}
            None => skipped += 1,
        }
        running_max.push(best);
    }
    let max_attained_at = match best_index {
        Some(i) => growth_sample(series.n, cfg.seed, i, cfg.max_radius),
        None => (vec![], vec![]),
    };
    Ok(GrowthConstant { m, empirical_value: best, sample_count: cfg.samples, skipped, max_attained_at, running_max })
}

/// One point of a boundary-approach path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryProbePoint {
    pub radius_product: f64,
    pub ratio: f64,
    pub degree: usize,
}

/// Growth ratios along `x = t e_1`, `y = t ξ` with `t^2` increasing to
/// `max_product`, for a fixed direction `ξ` at angle `angle` from `e_1`.
/// Uses a degree cap large enough for the path.
pub fn boundary_probe(
    series: &KernelSeries,
    m: u32,
    angle: f64,
    products: &[f64],
    degree_cap: usize,
) -> Result<Vec<BoundaryProbePoint>> {
    let big = series.with_control(KernelControl::new(degree_cap, series.control.rel_tol)?);
    let n = series.n;
    let mut out = Vec::with_capacity(products.len());
    for &prod in products {
        if !(prod > 0.0 && prod <= MAX_RADIUS_PRODUCT) {
            return Err(Error::Domain(format!("probe products must lie in (0, {MAX_RADIUS_PRODUCT}]")));
        }
        let t = prod.sqrt();
        let mut x = vec![0.0; n];
        x[0] = t;
        let mut y = vec![0.0; n];
        y[0] = t * angle.cos();
        y[1] = t * angle.sin();
        let mut degree = 0;
        let mut mag = 0.0;
        for k in MultiIndex::all_of_order(n, m) {
            let v = big.partial(&k, &x, &y)?;
            degree = degree.max(v.degree);
            mag += v.value.abs();
        }
        let ratio = mag * bracket(&x, &y)?.powf(n as f64 - 1.0 + series.alpha + m as f64);
        out.push(BoundaryProbePoint { radius_product: prod, ratio, degree });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::zonal::zonal_pair;

    fn series(n: usize, alpha: f64) -> KernelSeries {
        KernelSeries::weighted(n, alpha, KernelControl::default())
    }

    #[test]
    fn bracket_examples() {
        let y = [0.3, -0.4];
        assert_relative_eq!(bracket(&[0.0, 0.0], &y).unwrap(), 1.0);
        let x = [0.3, 0.4];
        assert_relative_eq!(bracket(&x, &x).unwrap(), 1.0 - 0.25, max_relative = 1e-14);
        let xi = [0.6, 0.8];
        let d = ((x[0] - xi[0]).powi(2) + (x[1] - xi[1]).powi(2)).sqrt();
        assert_relative_eq!(bracket(&x, &xi).unwrap(), d, max_relative = 1e-14);
        assert!(bracket(&[1.2, 0.0], &y).is_err());
    }

    #[test]
    fn kernel_at_origin_is_one() {
        for n in 2..=4 {
            for alpha in [0.5, 1.0, 2.0] {
                let s = series(n, alpha);
                let y = vec![0.5; n].iter().map(|c| c / n as f64).collect::<Vec<_>>();
                let v = s.eval(&vec![0.0; n], &y).unwrap();
                assert_relative_eq!(v.value, 1.0, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn coefficients_follow_gamma_ratio() {
        let s = series(3, 1.5);
        for j in [0usize, 1, 7, 50, 200] {
            let direct = omega_alpha(3, 1.5) * a_coefficient(3, 1.5, j);
            assert_relative_eq!(s.coefficients[j], direct, max_relative = 1e-11);
        }
        assert!(s.coefficients.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn a_coefficient_power_asymptotics() {
        for n in 2..=4 {
            for alpha in [0.5, 1.0, 2.0] {
                let ratio = a_coefficient(n, alpha, 200) / 200f64.powf(alpha);
                assert!((ratio - 1.0).abs() < 0.05, "n={n} alpha={alpha}: {ratio}");
            }
        }
    }

    #[test]
    fn symmetric_in_arguments() {
        let s = series(3, 1.0);
        let x = [0.2, -0.5, 0.3];
        let y = [-0.4, 0.1, 0.6];
        let a = s.eval(&x, &y).unwrap().value;
        let b = s.eval(&y, &x).unwrap().value;
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn matches_termwise_zonal_sum() {
        let s = series(2, 1.0);
        let x = [0.3, 0.2];
        let y = [-0.1, 0.5];
        let v = s.eval(&x, &y).unwrap();
        let direct: f64 = (0..=v.degree).map(|j| s.coefficients[j] * zonal_pair(j, &x, &y)).sum();
        assert_relative_eq!(v.value, direct, max_relative = 1e-12);
    }

    #[test]
    fn partial_matches_finite_differences() {
        let s = series(3, 0.5);
        let x = [0.2, 0.1, -0.3];
        let y = [0.4, -0.2, 0.3];
        let h = 1e-5;
        for axis in 0..3 {
            let k = MultiIndex::unit(3, axis);
            let exact = s.partial(&k, &x, &y).unwrap().value;
            let mut xp = x;
            let mut xm = x;
            xp[axis] += h;
            xm[axis] -= h;
            let fd = (s.eval(&xp, &y).unwrap().value - s.eval(&xm, &y).unwrap().value) / (2.0 * h);
            assert!((exact - fd).abs() < 1e-5 * exact.abs().max(1.0));
        }
        let k = MultiIndex(vec![1, 1, 0]);
        let exact = s.partial(&k, &x, &y).unwrap().value;
        let f = |a: f64, b: f64| s.eval(&[x[0] + a, x[1] + b, x[2]], &y).unwrap().value;
        let h = 1e-4;
        let fd = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        assert!((exact - fd).abs() < 1e-5 * exact.abs().max(1.0));
    }

    #[test]
    fn zero_order_partial_is_the_kernel() {
        let s = series(2, 2.0);
        let x = [0.5, -0.1];
        let y = [0.1, 0.7];
        assert_eq!(s.partial(&MultiIndex::zero(2), &x, &y).unwrap(), s.eval(&x, &y).unwrap());
    }

    #[test]
    fn derivative_at_origin_starts_at_order() {
        // at x = 0 only the degree-|k| term survives
        let s = series(3, 1.0);
        let y = [0.3, 0.4, -0.2];
        let k = MultiIndex(vec![1, 0, 1]);
        let v = s.partial(&k, &[0.0; 3], &y).unwrap().value;
        let expected = s.coefficients[2] * crate::zonal::zonal_partial_pair(2, &k, &[0.0; 3], &y);
        assert_relative_eq!(v, expected, max_relative = 1e-13);
    }

    #[test]
    fn cauchy_property_inside_region() {
        let s = series(3, 1.0);
        let x = [0.9, 0.0, 0.0];
        let y = [0.0, 0.95, 0.0];
        let v = s.eval(&x, &y).unwrap();
        let twice = s.partial_sum(&MultiIndex::zero(3), &x, &y, 2 * v.degree);
        assert!((v.value - twice).abs() < 1e-8 * v.value.abs());
    }

    #[test]
    fn truncation_is_reported() {
        let s = KernelSeries::weighted(2, 1.0, KernelControl::new(20, 1e-12).unwrap());
        match s.eval(&[0.95, 0.0], &[0.95, 0.0]) {
            Err(Error::KernelTruncation { degree, tail_bound }) => {
                assert_eq!(degree, 20);
                assert!(tail_bound > 0.0);
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn unweighted_kernel_coefficients() {
        let s = KernelSeries::unweighted(2, KernelControl::default());
        assert_relative_eq!(s.coefficients[0], 2.0 / (2.0 * std::f64::consts::PI));
    }

    #[test]
    fn growth_constant_basics() {
        let s = series(2, 1.0);
        let g = estimate_growth_constant(&s, 0, &SamplerConfig { samples: 40, seed: 3, max_radius: 0.8 }).unwrap();
        assert!(g.empirical_value > 0.0);
        assert!(g.running_max.windows(2).all(|w| w[1] >= w[0]));
        let more = estimate_growth_constant(&s, 0, &SamplerConfig { samples: 80, seed: 3, max_radius: 0.8 }).unwrap();
        assert!(more.empirical_value >= g.empirical_value);
        assert_eq!(&more.running_max[..40], &g.running_max[..]);
        // at x = 0 the ratio is [0, y]^{n-1+α} R(0, y) = 1
        let r = growth_ratio(&s, 0, &[0.0, 0.0], &[0.3, 0.2]).unwrap();
        assert_relative_eq!(r, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn boundary_probe_stays_bounded() {
        let s = series(2, 1.0);
        let pts = boundary_probe(&s, 1, 0.3, &[0.5, 0.8, 0.9, 0.95, 0.99], 6000).unwrap();
        assert!(pts.iter().all(|p| p.ratio.is_finite() && p.ratio < 100.0));
    }
}
