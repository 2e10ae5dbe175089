//! The integral `I_{α,s}(x) = ∫_B (1 - |y|^2)^{α-1} [x, y]^{-(n+α+s-1)} dv(y)`,
//! its hypergeometric closed form and extrema, the sphere identity
//! `∫_S |x - ξ|^{-c} dσ(ξ) = ₂F₁(c/2, (c-n)/2 + 1; n/2; |x|^2)`, and a
//! boundary-asymptotics probe.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::bracket;
use crate::quadrature::{build_ball_rule_with, build_sphere_rule, integrate, MeasureTag, QuadratureRule, RadialSplit, SphereScheme};
use crate::specfun::{gauss_value, hyp2f1, ln_gamma, Hyp2F1Args, SeriesControl};

/// Arguments of `I_{α,s}` at a point with `|x| = x_abs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IArgs {
    pub alpha: f64,
    pub s: f64,
    pub x_abs: f64,
}

impl IArgs {
    pub fn new(alpha: f64, s: f64, x_abs: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
        }
        if !(s < 0.0) {
            return Err(Error::Domain(format!("s = {s} must be negative")));
        }
        if !(s + alpha > -1.0) {
            return Err(Error::Domain(format!("s + alpha = {} must exceed -1", s + alpha)));
        }
        if !(0.0..=1.0).contains(&x_abs) {
            return Err(Error::Domain(format!("|x| = {x_abs} must lie in [0, 1]")));
        }
        Ok(Self { alpha, s, x_abs })
    }

    pub fn with_x(&self, x_abs: f64) -> Self {
        Self { x_abs, ..*self }
    }
}

/// `π^{n/2} Γ(α) / Γ(n/2 + α)`, which is `I_{α,s}(0)` and the minimum of `I`.
pub fn i_prefactor(n: usize, alpha: f64) -> Result<f64> {
    let h = n as f64 / 2.0;
    Ok((h * std::f64::consts::PI.ln() + ln_gamma(alpha)? - ln_gamma(h + alpha)?).exp())
}

fn i_hyp_params(n: usize, alpha: f64, s: f64) -> (f64, f64, f64) {
    let nf = n as f64;
    ((nf + alpha + s - 1.0) / 2.0, (alpha + s + 1.0) / 2.0, alpha + nf / 2.0)
}

/// `π^{n/2} Γ(α)/Γ(n/2+α) · ₂F₁((n+α+s-1)/2, (α+s+1)/2; α+n/2; |x|^2)`.
pub fn i_closed_form(n: usize, args: &IArgs, ctl: &SeriesControl) -> Result<f64> {
    let (a, b, c) = i_hyp_params(n, args.alpha, args.s);
    let f = hyp2f1(&Hyp2F1Args::new(a, b, c, args.x_abs * args.x_abs)?, ctl)?;
    Ok(i_prefactor(n, args.alpha)? * f)
}

/// Rule for `(1 - |y|^2)^{α-1} dv(y)` with a graded axial sphere factor.
pub fn i_rule(n: usize, alpha: f64, split: &RadialSplit) -> Result<QuadratureRule> {
    build_ball_rule_with(n, split, MeasureTag::WeightedDvBeta { beta: alpha - 1.0 }, SphereScheme::AxialGraded, 0)
}

/// `I_{α,s}(x)` by ball quadrature with `x = x_abs e_1`. The rule must
/// realize `(1 - |y|^2)^{α-1} dv`.
pub fn i_quadrature_with_rule(n: usize, alpha: f64, s: f64, x_abs: f64, rule: &QuadratureRule) -> Result<f64> {
    match rule.tag {
        MeasureTag::WeightedDvBeta { beta } if (beta - (alpha - 1.0)).abs() < 1e-14 => {}
        other => return Err(Error::InvalidParams(format!("I needs a (1-|y|^2)^(alpha-1) dv rule, got {other:?}"))),
    }
    let mut x = vec![0.0; n];
    x[0] = x_abs;
    let e = n as f64 + alpha + s - 1.0;
    integrate(rule, |y| bracket(&x, y).map(|b| b.powf(-e)).unwrap_or(f64::NAN))
}

pub fn i_quadrature(n: usize, args: &IArgs, split: &RadialSplit) -> Result<f64> {
    let rule = i_rule(n, args.alpha, split)?;
    i_quadrature_with_rule(n, args.alpha, args.s, args.x_abs, &rule)
}

/// Extrema of `I_{α,s}` over `0 <= |x| <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Constants {
    /// `C(α, s)`, attained as `|x| -> 1`.
    pub max: f64,
    /// Attained at `x = 0`.
    pub min: f64,
}

/// `C(α, s) = π^{n/2} Γ(α) Γ(-s) / (Γ((α-s+1)/2) Γ((n+α-s-1)/2))`.
pub fn c_alpha_s(n: usize, alpha: f64, s: f64) -> Result<f64> {
    if !(s < 0.0) {
        return Err(Error::Domain(format!("C(alpha, s) needs s < 0, got {s}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("C(alpha, s) needs alpha > 0, got {alpha}")));
    }
    let nf = n as f64;
    let h = nf / 2.0;
    let log = h * std::f64::consts::PI.ln() + ln_gamma(alpha)? + ln_gamma(-s)?
        - ln_gamma((alpha - s + 1.0) / 2.0)?
        - ln_gamma((nf + alpha - s - 1.0) / 2.0)?;
    Ok(log.exp())
}

pub fn lemma1_constants(n: usize, alpha: f64, s: f64) -> Result<Lemma1Constants> {
    IArgs::new(alpha, s, 0.0)?;
    Ok(Lemma1Constants { max: c_alpha_s(n, alpha, s)?, min: i_prefactor(n, alpha)? })
}

/// The maximum re-derived as prefactor × Gauss value of the closed form's
/// parameters.
pub fn lemma1_max_via_gauss(n: usize, alpha: f64, s: f64) -> Result<f64> {
    let (a, b, c) = i_hyp_params(n, alpha, s);
    Ok(i_prefactor(n, alpha)? * gauss_value(a, b, c)?)
}

/// `∫_S |x - ξ|^{-c} dσ(ξ)` with `x = x_abs e_1`.
pub fn sphere_identity_lhs(n: usize, c: f64, x_abs: f64, rule: &QuadratureRule) -> Result<f64> {
    if rule.tag != MeasureTag::SphereSigma {
        return Err(Error::InvalidParams("sphere identity needs a sphere_sigma rule".into()));
    }
    let mut x = vec![0.0; n];
    x[0] = x_abs;
    integrate(rule, |xi| {
        let d2: f64 = x.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum();
        d2.powf(-c / 2.0)
    })
}

/// `₂F₁(c/2, (c-n)/2 + 1; n/2; |x|^2)`.
pub fn sphere_identity_rhs(n: usize, c: f64, x_abs: f64, ctl: &SeriesControl) -> Result<f64> {
    let nf = n as f64;
    hyp2f1(&Hyp2F1Args::new(c / 2.0, (c - nf) / 2.0 + 1.0, nf / 2.0, x_abs * x_abs)?, ctl)
}

pub fn sphere_identity_check(n: usize, c: f64, x_abs: f64, rule: &QuadratureRule) -> Result<f64> {
    if !(x_abs < 1.0) {
        return Err(Error::Domain(format!("sphere identity needs |x| < 1, got {x_abs}")));
    }
    let lhs = sphere_identity_lhs(n, c, x_abs, rule)?;
    let rhs = sphere_identity_rhs(n, c, x_abs, &SeriesControl::default())?;
    Ok((lhs - rhs).abs())
}

/// Default sphere rule for the identity check.
pub fn sphere_identity_rule(n: usize, order: usize) -> Result<QuadratureRule> {
    build_sphere_rule(n, order, SphereScheme::AxialGraded, 0)
}

/// Behavior of `I_{α,s}(x)` as `|x| -> 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticClass {
    Bounded,
    Logarithmic,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub class: AsymptoticClass,
    /// Least-squares slope `e` of `log I` against `log(1 - |x|^2)`, so that
    /// `I ≈ C (1 - |x|^2)^e`.
    pub fitted_exponent: f64,
    /// RMS relative residual of each model fit: power, logarithmic, bounded.
    pub fit_errors: [f64; 3],
    /// Mean ratio of consecutive increments of `I` along the path.
    pub increment_ratio: f64,
    /// `(1 - |x|^2, I)` samples.
    pub samples: Vec<(f64, f64)>,
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

fn rms(v: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = v.fold((0.0, 0usize), |(s, c), x| (s + x * x, c + 1));
    (s / c as f64).sqrt()
}

/// Samples `I` at `1 - |x|^2 = 2^{-k}` for the given `k` and classifies the
/// growth by the ratio of consecutive increments: shrinking increments
/// (ratio `2^{s}` for `s < 0`) mean bounded, constant increments mean
/// logarithmic, growing increments mean a power law.
pub fn asymptotics_probe(n: usize, alpha: f64, s: f64, exponents: &[u32], split: &RadialSplit) -> Result<AsymptoticsReport> {
    if exponents.len() < 3 {
        return Err(Error::InvalidParams("asymptotics probe needs at least 3 path points".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must be positive for the dv_alpha weight")));
    }
    let rule = i_rule(n, alpha, split)?;
    let mut samples = Vec::with_capacity(exponents.len());
    for &k in exponents {
        let eps = 0.5f64.powi(k as i32);
        let x_abs = (1.0 - eps).sqrt();
        samples.push((eps, i_quadrature_with_rule(n, alpha, s, x_abs, &rule)?));
    }
    let logs_eps: Vec<f64> = samples.iter().map(|(e, _)| e.ln()).collect();
    let logs_i: Vec<f64> = samples.iter().map(|(_, v)| v.ln()).collect();
    let (a_p, e) = linear_fit(&logs_eps, &logs_i);
    let err_power = rms(logs_eps.iter().zip(&logs_i).map(|(x, y)| (a_p + e * x - y).exp() - 1.0));
    let big_l: Vec<f64> = logs_eps.iter().map(|x| -x).collect();
    let vals: Vec<f64> = samples.iter().map(|(_, v)| *v).collect();
    let (a_l, b_l) = linear_fit(&big_l, &vals);
    let err_log = rms(big_l.iter().zip(&vals).map(|(x, v)| (a_l + b_l * x) / v - 1.0));
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let err_bounded = rms(vals.iter().map(|v| mean / v - 1.0));
    let incs: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios: Vec<f64> = incs.windows(2).filter(|w| w[0] != 0.0).map(|w| w[1] / w[0]).collect();
    let increment_ratio = if ratios.is_empty() { 0.0 } else { ratios.iter().sum::<f64>() / ratios.len() as f64 };
    let class = if increment_ratio < 0.85 {
        AsymptoticClass::Bounded
    } else if increment_ratio <= 1.15 {
        AsymptoticClass::Logarithmic
    } else {
        AsymptoticClass::Power
    };
    Ok(AsymptoticsReport {
        class,
        fitted_exponent: e,
        fit_errors: [err_power, err_log, err_bounded],
        increment_ratio,
        samples,
    })
}

/// Default path `1 - |x|^2 = 2^{-3}, ..., 2^{-10}`.
pub const ASYMPTOTIC_EXPONENTS: [u32; 8] = [3, 4, 5, 6, 7, 8, 9, 10];

/// One row of the closed-form versus quadrature sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaGridRow {
    pub n: usize,
    pub alpha: f64,
    pub s: f64,
    pub x: f64,
    pub closed: f64,
    pub quad: f64,
    pub rel_err: f64,
}

pub const LEMMA_ALPHAS: [f64; 3] = [0.5, 1.0, 2.0];
pub const LEMMA_SS: [f64; 2] = [-0.5, -1.5];
pub const LEMMA_XS: [f64; 4] = [0.0, 0.3, 0.7, 0.95];

/// Sweep over `LEMMA_ALPHAS × LEMMA_SS × LEMMA_XS` in that nesting order.
/// Combinations with `s + α <= -1` are skipped.
pub fn lemma1_grid(n: usize, split: &RadialSplit) -> Result<Vec<LemmaGridRow>> {
    let ctl = SeriesControl::default();
    let mut rows = Vec::new();
    for &alpha in &LEMMA_ALPHAS {
        let rule = i_rule(n, alpha, split)?;
        for &s in &LEMMA_SS {
            if !(s + alpha > -1.0) {
                continue;
            }
            for &x in &LEMMA_XS {
                let args = IArgs::new(alpha, s, x)?;
                let closed = i_closed_form(n, &args, &ctl)?;
                let quad = i_quadrature_with_rule(n, alpha, s, x, &rule)?;
                rows.push(LemmaGridRow { n, alpha, s, x, closed, quad, rel_err: (quad - closed).abs() / closed.abs() });
            }
        }
    }
    Ok(rows)
}

/// `I` at increasing `|x|` is nondecreasing in the closed form.
pub fn closed_form_is_monotone(n: usize, alpha: f64, s: f64, xs: &[f64]) -> Result<bool> {
    let ctl = SeriesControl::default();
    let base = IArgs::new(alpha, s, 0.0)?;
    let mut prev = f64::NEG_INFINITY;
    for &x in xs {
        let v = i_closed_form(n, &base.with_x(x), &ctl)?;
        if v < prev {
            return Ok(false);
        }
        prev = v;
    }
    Ok(true)
}
