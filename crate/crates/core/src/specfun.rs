//! Scalar special functions: log-gamma, gamma, digamma, Pochhammer symbols,
//! binomial coefficients and the Gauss hypergeometric function on `[0, 1]`.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

const LANCZOS_R: f64 = 10.900511;

const LANCZOS_DK: [f64; 11] = [
    2.48574089138753565546e-5,
    1.05142378581721974210,
    -3.45687097222016235469,
    4.51227709466894823700,
    -2.98285225323576655721,
    1.05639711577126713077,
    -1.95428773191645869583e-1,
    1.70970543404441224307e-2,
    -5.71926117404305781283e-4,
    4.63399473359905636708e-6,
    -2.71994908488607703910e-9,
];

const LN_2_SQRT_E_OVER_PI: f64 = 0.620_782_237_635_245_2;

/// Above this `t` the series is replaced by the connection formula in `1 - t`.
const CONNECTION_SWITCH: f64 = 0.95;

/// Truncation policy shared by every infinite series in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    pub max_terms: usize,
    pub rel_tol: f64,
}

impl SeriesControl {
    pub fn new(max_terms: usize, rel_tol: f64) -> Result<Self> {
        if max_terms == 0 {
            return Err(Error::InvalidParams("max_terms must be at least 1".into()));
        }
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::InvalidParams(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
        }
        Ok(Self { max_terms, rel_tol })
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self { max_terms: 2_000_000, rel_tol: 1e-15 }
    }
}

/// Validated arguments of `2F1(a, b; c; t)` with real `t` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyp2F1Args {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub t: f64,
}

impl Hyp2F1Args {
    pub fn new(a: f64, b: f64, c: f64, t: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::Domain("2F1 parameters must be finite".into()));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("2F1 argument t = {t} outside [0, 1]")));
        }
        if is_nonpositive_integer(c) {
            return Err(Error::Domain(format!("2F1 lower parameter c = {c} is a pole")));
        }
        if t == 1.0 && c - a - b <= 0.0 && !terminates(a, b) {
            return Err(Error::Domain(format!(
                "2F1 diverges at t = 1 when c - a - b = {} <= 0",
                c - a - b
            )));
        }
        Ok(Self { a, b, c, t })
    }
}

pub(crate) fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

fn terminates(a: f64, b: f64) -> bool {
    is_nonpositive_integer(a) || is_nonpositive_integer(b)
}

fn lanczos_ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let s = LANCZOS_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(LANCZOS_DK[0], |s, (i, &dk)| s + dk / (i as f64 - x));
        PI.ln()
            - (PI * x).sin().ln()
            - s.ln()
            - LN_2_SQRT_E_OVER_PI
            - (0.5 - x) * ((0.5 - x + LANCZOS_R) / E).ln()
    } else {
        let s = LANCZOS_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(LANCZOS_DK[0], |s, (i, &dk)| s + dk / (x + i as f64 - 1.0));
        s.ln() + LN_2_SQRT_E_OVER_PI + (x - 0.5) * ((x - 0.5 + LANCZOS_R) / E).ln()
    }
}

/// `log Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log-gamma requires x > 0, got {x}")));
    }
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    Ok(lanczos_ln_gamma(x))
}

/// `(log |Γ(x)|, sign Γ(x))` for any real `x` that is not a pole.
pub fn ln_gamma_signed(x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() || is_nonpositive_integer(x) {
        return Err(Error::Domain(format!("Γ has a pole at {x}")));
    }
    if x > 0.0 {
        return Ok((ln_gamma(x)?, 1.0));
    }
    // Γ(x) = π / (sin(πx) Γ(1 - x))
    let s = (PI * x).sin();
    let lg = PI.ln() - s.abs().ln() - ln_gamma(1.0 - x)?;
    Ok((lg, s.signum()))
}

/// `Γ(x)` for any real non-pole `x`; overflows to infinity past ~171.6.
pub fn gamma(x: f64) -> Result<f64> {
    let (lg, sign) = ln_gamma_signed(x)?;
    Ok(sign * lg.exp())
}

/// `1 / Γ(x)`, which is entire: zero at the poles of `Γ`.
pub fn rgamma(x: f64) -> f64 {
    match ln_gamma_signed(x) {
        Ok((lg, sign)) => sign * (-lg).exp(),
        Err(_) => 0.0,
    }
}

/// Digamma `ψ(x) = Γ'(x) / Γ(x)` at non-poles.
pub fn digamma(x: f64) -> Result<f64> {
    if !x.is_finite() || is_nonpositive_integer(x) {
        return Err(Error::Domain(format!("digamma has a pole at {x}")));
    }
    if x < 0.5 {
        return Ok(digamma(1.0 - x)? - PI / (PI * x).tan());
    }
    let mut shift = 0.0;
    let mut y = x;
    while y < 12.0 {
        shift -= 1.0 / y;
        y += 1.0;
    }
    let inv2 = 1.0 / (y * y);
    // Bernoulli tail: B_2k / (2k y^2k)
    let tail = inv2
        * (1.0 / 12.0
            - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    Ok(shift + y.ln() - 0.5 / y - tail)
}

/// Rising factorial `(a)_n = a (a + 1) ... (a + n - 1)`; `(a)_0 = 1`.
pub fn pochhammer(a: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, i| acc * (a + i as f64))
}

/// Binomial coefficient with the convention `C(a, b) = 0` when `a < b`
/// or `b < 0`.
pub fn binomial(a: i64, b: i64) -> f64 {
    if b < 0 || a < b {
        return 0.0;
    }
    let b = b.min(a - b);
    (0..b).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64)
}

/// Gauss' closed form `2F1(a, b; c; 1) = Γ(c)Γ(c-a-b) / (Γ(c-a)Γ(c-b))`.
///
/// Evaluated in log space. Returns `0` when `c - a` or `c - b` is a pole of
/// `Γ`, where the series terminates at zero.
pub fn gauss_value(a: f64, b: f64, c: f64) -> Result<f64> {
    let d = c - a - b;
    if !(d > 0.0) {
        return Err(Error::Domain(format!("2F1 at t = 1 diverges: c - a - b = {d} <= 0")));
    }
    if is_nonpositive_integer(c) {
        return Err(Error::Domain(format!("2F1 lower parameter c = {c} is a pole")));
    }
    if is_nonpositive_integer(c - a) || is_nonpositive_integer(c - b) {
        return Ok(0.0);
    }
    let (l1, s1) = ln_gamma_signed(c)?;
    let (l2, s2) = ln_gamma_signed(d)?;
    let (l3, s3) = ln_gamma_signed(c - a)?;
    let (l4, s4) = ln_gamma_signed(c - b)?;
    Ok(s1 * s2 * s3 * s4 * (l1 + l2 - l3 - l4).exp())
}

/// `2F1(a, b; c; t)` for `t` in `[0, 1]`.
///
/// Direct series for `t <= 0.95`; above that, when `c - a - b > 0`, the
/// connection formula in `1 - t` (with its logarithmic form when `c - a - b`
/// is an integer). At `t = 1` the Gauss value is returned.
pub fn hyp2f1(args: &Hyp2F1Args, ctl: &SeriesControl) -> Result<f64> {
    let Hyp2F1Args { a, b, c, t } = *args;
    if t == 0.0 {
        return Ok(1.0);
    }
    if terminates(a, b) {
        return Ok(terminating_series(a, b, c, t));
    }
    if t == 1.0 {
        return gauss_value(a, b, c);
    }
    let d = c - a - b;
    if t > CONNECTION_SWITCH && d > 0.0 {
        let m = d.round();
        if (d - m).abs() <= 1e-9 * d.max(1.0) {
            return connection_integer(a, b, m as u32, 1.0 - t, ctl);
        }
        return connection_generic(a, b, c, 1.0 - t, ctl);
    }
    direct_series(a, b, c, t, ctl)
}

/// `d/dt 2F1(a, b; c; t) = (ab / c) 2F1(a+1, b+1; c+1; t)` for `t < 1`.
pub fn hyp2f1_derivative(a: f64, b: f64, c: f64, t: f64, ctl: &SeriesControl) -> Result<f64> {
    if !(t < 1.0) {
        return Err(Error::Domain(format!("2F1 derivative requires t < 1, got {t}")));
    }
    Hyp2F1Args::new(a, b, c, t)?;
    if a == 0.0 || b == 0.0 {
        return Ok(0.0);
    }
    let shifted = Hyp2F1Args::new(a + 1.0, b + 1.0, c + 1.0, t)?;
    Ok(a * b / c * hyp2f1(&shifted, ctl)?)
}

fn terminating_series(a: f64, b: f64, c: f64, t: f64) -> f64 {
    let degree = if is_nonpositive_integer(a) && is_nonpositive_integer(b) {
        (-a).min(-b)
    } else if is_nonpositive_integer(a) {
        -a
    } else {
        -b
    } as usize;
    let mut acc = CompensatedSum::new();
    let mut term = 1.0;
    acc.add(term);
    for i in 0..degree {
        let i = i as f64;
        term *= (a + i) * (b + i) / ((c + i) * (i + 1.0)) * t;
        acc.add(term);
    }
    acc.value()
}

/// Power series with a geometric tail estimate as the stopping rule.
fn direct_series(a: f64, b: f64, c: f64, t: f64, ctl: &SeriesControl) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    let mut term = 1.0;
    acc.add(term);
    // Past this index the term ratio is monotone in i.
    let settle = a.abs().max(b.abs()).max(c.abs()).ceil() + 2.0;
    for i in 0..ctl.max_terms {
        let fi = i as f64;
        let ratio = (a + fi) * (b + fi) / ((c + fi) * (fi + 1.0)) * t;
        term *= ratio;
        acc.add(term);
        if term == 0.0 {
            return Ok(acc.value());
        }
        if fi > settle {
            let next_ratio = ((a + fi + 1.0) * (b + fi + 1.0) / ((c + fi + 1.0) * (fi + 2.0)) * t).abs();
            let rho = next_ratio.max(t);
            if rho < 1.0 {
                let tail = term.abs() * next_ratio / (1.0 - rho);
                if tail <= ctl.rel_tol * acc.value().abs() {
                    return Ok(acc.value());
                }
            }
        }
        if !term.is_finite() {
            break;
        }
    }
    Err(Error::Truncation { terms: ctl.max_terms, last_increment: term })
}

/// Connection formula about `t = 1` for non-integer `d = c - a - b > 0`,
/// written in `w = 1 - t`:
///
/// `F = Γ(c)Γ(d)/(Γ(c-a)Γ(c-b)) F(a,b;1-d;w) + w^d Γ(c)Γ(-d)/(Γ(a)Γ(b)) F(c-a,c-b;1+d;w)`
fn connection_generic(a: f64, b: f64, c: f64, w: f64, ctl: &SeriesControl) -> Result<f64> {
    let d = c - a - b;
    let (lc, sc) = ln_gamma_signed(c)?;
    let first = if is_nonpositive_integer(c - a) || is_nonpositive_integer(c - b) {
        0.0
    } else {
        let (ld, sd) = ln_gamma_signed(d)?;
        let (l1, s1) = ln_gamma_signed(c - a)?;
        let (l2, s2) = ln_gamma_signed(c - b)?;
        let coef = sc * sd * s1 * s2 * (lc + ld - l1 - l2).exp();
        coef * direct_series(a, b, 1.0 - d, w, ctl)?
    };
    let (lnd, snd) = ln_gamma_signed(-d)?;
    let second = sc * snd * rgamma(a) * rgamma(b) * (lc + lnd).exp();
    let second = if second == 0.0 {
        0.0
    } else {
        second * w.powf(d) * direct_series(c - a, c - b, 1.0 + d, w, ctl)?
    };
    Ok(first + second)
}

/// Logarithmic connection formula for `c = a + b + m`, `m >= 1` integer,
/// with `w = 1 - t`:
///
/// `F = Γ(m)Γ(a+b+m)/(Γ(a+m)Γ(b+m)) Σ_{k<m} (a)_k(b)_k/(k!(1-m)_k) w^k
///    - (-w)^m Γ(a+b+m)/(Γ(a)Γ(b)) Σ_k (a+m)_k(b+m)_k/(k!(k+m)!) w^k
///      [ln w - ψ(k+1) - ψ(k+m+1) + ψ(a+k+m) + ψ(b+k+m)]`
fn connection_integer(a: f64, b: f64, m: u32, w: f64, ctl: &SeriesControl) -> Result<f64> {
    let mf = m as f64;
    let (lc, sc) = ln_gamma_signed(a + b + mf)?;

    let (lam, sam) = ln_gamma_signed(a + mf)?;
    let (lbm, sbm) = ln_gamma_signed(b + mf)?;
    let lgm = ln_gamma(mf)?;
    let coef1 = sc * sam * sbm * (lgm + lc - lam - lbm).exp();
    let mut finite = CompensatedSum::new();
    let mut term = 1.0;
    finite.add(term);
    for k in 0..m.saturating_sub(1) {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((kf + 1.0) * (1.0 - mf + kf)) * w;
        finite.add(term);
    }

    let coef2 = sc * lc.exp() * rgamma(a) * rgamma(b);
    if coef2 == 0.0 {
        return Ok(coef1 * finite.value());
    }
    let lnw = w.ln();
    let mut psi1 = digamma(1.0)?;
    let mut psi2 = digamma(mf + 1.0)?;
    let mut psi3 = digamma(a + mf)?;
    let mut psi4 = digamma(b + mf)?;
    // (a+m)_k (b+m)_k / (k! (k+m)!) w^k, starting at 1/m!
    let mut weight = (-ln_gamma(mf + 1.0)?).exp();
    let mut log_series = CompensatedSum::new();
    let mut converged = false;
    let mut last = 0.0;
    for k in 0..ctl.max_terms {
        let kf = k as f64;
        let contrib = weight * (lnw - psi1 - psi2 + psi3 + psi4);
        log_series.add(contrib);
        last = contrib;
        let ratio = (a + mf + kf) * (b + mf + kf) / ((kf + 1.0) * (kf + mf + 1.0)) * w;
        if kf > (a.abs() + b.abs() + mf) && ratio.abs() < 0.5 {
            let tail = contrib.abs() * 2.0 * ratio.abs();
            if tail <= ctl.rel_tol * log_series.value().abs() || contrib == 0.0 {
                converged = true;
                break;
            }
        }
        weight *= ratio;
        psi1 += 1.0 / (kf + 1.0);
        psi2 += 1.0 / (kf + mf + 1.0);
        psi3 += 1.0 / (a + mf + kf);
        psi4 += 1.0 / (b + mf + kf);
    }
    if !converged {
        return Err(Error::Truncation { terms: ctl.max_terms, last_increment: last });
    }
    let sign_m = if m % 2 == 0 { 1.0 } else { -1.0 };
    Ok(coef1 * finite.value() - sign_m * w.powi(m as i32) * coef2 * log_series.value())
}

/// The series of `2F1(a, b; c; 1)` summed to `terms` terms plus the tail
/// estimate `f(K) (K/d - 1/2)`, `d = c - a - b > 0`, from `f(k) ~ C k^{-d-1}`.
/// Independent of the Gamma-function closed form.
pub fn series_at_one(a: f64, b: f64, c: f64, terms: usize) -> Result<f64> {
    Hyp2F1Args::new(a, b, c, 1.0)?;
    let d = c - a - b;
    if !(d > 0.0) {
        return Err(Error::Domain(format!("the series at t = 1 needs c - a - b > 0, got {d}")));
    }
    let mut acc = CompensatedSum::new();
    let mut term = 1.0;
    acc.add(term);
    for i in 0..terms {
        let fi = i as f64;
        term *= (a + fi) * (b + fi) / ((c + fi) * (fi + 1.0));
        acc.add(term);
        if term == 0.0 {
            return Ok(acc.value());
        }
    }
    let k = terms as f64;
    acc.add(term * (k / d - 0.5));
    Ok(acc.value())
}

/// Numerical comparison of `2F1(a,b;c;t)` with two Euler-type right-hand
/// sides: `(1-t)^{c-a-b} F(c-a,c-b;c;t)` and `(1-t^2)^{c-a-b} F(c-a,c-b;c;t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerCheck {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub t: f64,
    pub direct: f64,
    pub standard_form: f64,
    pub printed_form: f64,
    pub standard_rel_residual: f64,
    pub printed_rel_residual: f64,
}

pub fn euler_identity_check(a: f64, b: f64, c: f64, t: f64, ctl: &SeriesControl) -> Result<EulerCheck> {
    let direct = hyp2f1(&Hyp2F1Args::new(a, b, c, t)?, ctl)?;
    let inner = hyp2f1(&Hyp2F1Args::new(c - a, c - b, c, t)?, ctl)?;
    let d = c - a - b;
    let standard_form = (1.0 - t).powf(d) * inner;
    let printed_form = (1.0 - t * t).powf(d) * inner;
    let rel = |v: f64| (v - direct).abs() / direct.abs().max(f64::MIN_POSITIVE);
    Ok(EulerCheck {
        a,
        b,
        c,
        t,
        direct,
        standard_form,
        printed_form,
        standard_rel_residual: rel(standard_form),
        printed_rel_residual: rel(printed_form),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn f(a: f64, b: f64, c: f64, t: f64) -> f64 {
        hyp2f1(&Hyp2F1Args::new(a, b, c, t).unwrap(), &SeriesControl::default()).unwrap()
    }

    #[test]
    fn log_gamma_examples() {
        assert_eq!(ln_gamma(1.0).unwrap(), 0.0);
        assert_eq!(ln_gamma(2.0).unwrap(), 0.0);
        let expected = (15.0 * PI.sqrt() / 8.0).ln();
        assert_relative_eq!(ln_gamma(3.5).unwrap(), expected, max_relative = 1e-14);
        assert_relative_eq!(expected, 1.200_973_602_347_074_2, max_relative = 1e-15);
    }

    #[test]
    fn log_gamma_against_high_precision() {
        // 30-digit reference values
        let cases = [
            (0.1, 2.252_712_651_734_205_9),
            (1.5, -0.120_782_237_635_245_22),
            (1e-3, 6.907_178_885_383_853_7),
            (150.25, 601.261_504_032_499_7),
        ];
        for (x, v) in cases {
            let got = ln_gamma(x).unwrap();
            assert!((got - v).abs() <= 1e-13 * v.abs().max(1.0), "x={x}: {got} vs {v}");
        }
    }

    #[test]
    fn log_gamma_rejects_nonpositive() {
        assert!(matches!(ln_gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(ln_gamma(-1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn gamma_reflection() {
        assert_relative_eq!(gamma(-0.5).unwrap(), -2.0 * PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(gamma(-1.5).unwrap(), 4.0 * PI.sqrt() / 3.0, max_relative = 1e-13);
        assert!(gamma(-2.0).is_err());
        assert_eq!(rgamma(-3.0), 0.0);
    }

    #[test]
    fn digamma_values() {
        assert_relative_eq!(digamma(0.3).unwrap(), -3.502_524_222_200_133, max_relative = 1e-13);
        assert_relative_eq!(digamma(-0.5).unwrap(), 0.036_489_973_978_576_52, max_relative = 1e-11);
        assert_relative_eq!(digamma(7.25).unwrap(), 1.910_453_526_883_736, max_relative = 1e-14);
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(pochhammer(3.7, 0), 1.0);
        assert_eq!(pochhammer(1.0, 4), 24.0);
        assert_relative_eq!(pochhammer(0.5, 2), 0.75);
    }

    #[test]
    fn binomial_convention() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(-1, 1), 0.0);
        assert_eq!(binomial(2, 3), 0.0);
        assert_eq!(binomial(4, 0), 1.0);
    }

    #[test]
    fn hyp2f1_examples() {
        assert_eq!(f(0.3, 1.7, 2.2, 0.0), 1.0);
        assert_relative_eq!(f(1.0, 1.0, 2.0, 0.5), 2.0 * 2f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(f(1.0, 1.0, 3.0, 1.0), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn hyp2f1_against_high_precision() {
        let cases = [
            // direct, connection (generic and logarithmic) regimes
            ((2.0, 3.0, 4.0, 0.3), 1.691_282_299_329_312_6),
            ((3.0, 4.0, 5.0, 0.3), 2.330_226_848_008_664),
            ((1.5, 0.5, 3.0, 0.97), 1.591_006_376_632_227_4),
            ((1.5, 0.5, 3.2, 0.99), 1.555_240_178_759_781_2),
            ((0.7, 1.3, 3.5, 0.999), 1.591_769_960_182_832_9),
            ((0.25, 1.75, 4.0, 0.96), 1.179_387_143_954_666),
            ((2.5, 0.5, 2.1, 0.97), 12.348_291_455_323_974),
        ];
        for ((a, b, c, t), v) in cases {
            let got = f(a, b, c, t);
            assert_relative_eq!(got, v, max_relative = 1e-12);
        }
    }

    #[test]
    fn connection_formula_matches_direct_series_across_switch() {
        let ctl = SeriesControl::default();
        for &(a, b, c) in &[(0.4, 0.9, 2.6), (1.0, 1.5, 3.5), (0.3, 0.2, 1.5)] {
            let t = 0.951;
            let via_connection = f(a, b, c, t);
            let via_series = direct_series(a, b, c, t, &ctl).unwrap();
            assert_relative_eq!(via_connection, via_series, max_relative = 1e-12);
        }
    }

    #[test]
    fn gauss_value_examples() {
        assert_relative_eq!(gauss_value(0.0, 2.5, 3.1).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gauss_value(1.0, 1.0, 3.0).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(gauss_value(0.5, 0.5, 2.0).unwrap(), 4.0 / PI, max_relative = 1e-14);
        assert!(matches!(gauss_value(1.0, 1.0, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn derivative_examples() {
        let ctl = SeriesControl::default();
        assert_eq!(hyp2f1_derivative(0.0, 2.0, 3.0, 0.4, &ctl).unwrap(), 0.0);
        let h = 1e-5;
        let fd = (f(1.0, 1.0, 2.0, 0.5 + h) - f(1.0, 1.0, 2.0, 0.5 - h)) / (2.0 * h);
        let d = hyp2f1_derivative(1.0, 1.0, 2.0, 0.5, &ctl).unwrap();
        assert_relative_eq!(d, fd, max_relative = 1e-6);
        let d = hyp2f1_derivative(2.0, 3.0, 4.0, 0.3, &ctl).unwrap();
        assert_relative_eq!(d, 1.5 * f(3.0, 4.0, 5.0, 0.3), max_relative = 1e-14);
        assert!(hyp2f1_derivative(1.0, 1.0, 3.0, 1.0, &ctl).is_err());
    }

    #[test]
    fn invalid_args() {
        assert!(Hyp2F1Args::new(1.0, 1.0, -2.0, 0.5).is_err());
        assert!(Hyp2F1Args::new(1.0, 1.0, 2.0, 1.0).is_err());
        assert!(Hyp2F1Args::new(1.0, 1.0, 2.0, 1.2).is_err());
        assert!(SeriesControl::new(0, 1e-8).is_err());
        assert!(SeriesControl::new(10, 1.0).is_err());
    }

    #[test]
    fn truncation_error_reports_last_increment() {
        let ctl = SeriesControl::new(5, 1e-15).unwrap();
        match hyp2f1(&Hyp2F1Args::new(1.0, 1.0, 2.0, 0.9).unwrap(), &ctl) {
            Err(Error::Truncation { terms, last_increment }) => {
                assert_eq!(terms, 5);
                assert!(last_increment > 0.0);
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn euler_identity_standard_form_holds() {
        let ctl = SeriesControl::default();
        let chk = euler_identity_check(0.6, 1.1, 2.4, 0.6, &ctl).unwrap();
        assert!(chk.standard_rel_residual < 1e-12);
        assert!(chk.printed_rel_residual > 1e-3);
    }

    #[test]
    fn series_at_one_tracks_gauss_value() {
        for (a, b, c) in [(0.5, 0.7, 2.0), (1.1, 0.3, 2.2), (0.2, 0.2, 1.0)] {
            let s = series_at_one(a, b, c, 20_000).unwrap();
            assert_relative_eq!(s, gauss_value(a, b, c).unwrap(), max_relative = 1e-6);
        }
        assert!(series_at_one(1.0, 1.0, 1.5, 10).is_err());
    }

    #[test]
    fn terminating_series_at_one() {
        // F(-2, b; c; 1) = (c-b)_2 / (c)_2 (Chu-Vandermonde)
        let (b, c) = (0.7, 2.3);
        let expected = pochhammer(c - b, 2) / pochhammer(c, 2);
        assert_relative_eq!(f(-2.0, b, c, 1.0), expected, max_relative = 1e-14);
    }
}
