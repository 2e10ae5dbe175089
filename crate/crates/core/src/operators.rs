//! Applying `T_k^α` and `P_α`, the witness functions, empirical norm
//! brackets and the harmonic Dirichlet product.
//!
//! Witnesses are finite sums `Σ c (1 - |y|^2)^a Z_j(y, ω)`. Rotation
//! invariance gives `T[(1 - |y|^2)^a Z_j(·, ω)](rξ) = g_{j,a}(r) Z_j(ξ, ω)`,
//! so each profile `g_{j,a}` needs one axial integral per radius, and
//! `P_α` acts on each term by the scalar `M_j(a)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    lower_constant_p, lower_constant_t, multi_index_count, projection_multiplier, schur_exponent,
    schur_upper_constant, ln_beta_exact, f_m_normalizer,
};
use crate::error::{Error, Result};
use crate::integrals::{c_alpha_s, i_rule};
use crate::kernels::{bracket, estimate_growth_constant, growth_sample, KernelControl, KernelSeries, SamplerConfig};
use crate::params::Params;
use crate::point::{norm_sq, sphere_area, MultiIndex, SpherePoint};
use crate::quadrature::{
    build_ball_rule, build_radial_rule, build_sphere_rule, c_alpha, gauss_legendre_unit, integrate, MeasureTag, QuadratureRule,
    RadialSplit, SphereScheme,
};
use crate::sum::CompensatedSum;
use crate::zonal::{dim_harmonic, zonal_pair, ZonalPolynomial};

/// Number of decay values available to random candidates.
pub const DECAY_LADDER_STEPS: usize = 6;
pub const DECAY_SPACING: f64 = 0.5;
/// Smallest ladder decay sits this far above `max(m, (n-1)/p)`.
pub const DECAY_OFFSET: f64 = 0.25;
pub const MAX_CANDIDATE_DEGREE: usize = 6;
pub const MAX_CANDIDATE_TERMS: usize = 3;
pub const DEFAULT_SEED: u64 = 20_240_917;
/// Relative tolerance for matching a witness against a closed-form value.
pub const CLOSED_VALUE_TOL: f64 = 1e-3;

/// Decays `a` offered to random candidates. All exceed `m`, which keeps
/// `T f` bounded, and `(n-1)/p`, which keeps `f` in `L^p(dτ)`.
pub fn decay_ladder(params: &Params) -> Vec<f64> {
    let base = params.mf().max((params.nf() - 1.0) / params.p) + DECAY_OFFSET;
    (0..DECAY_LADDER_STEPS).map(|i| base + DECAY_SPACING * i as f64).collect()
}

/// `coef (1 - |y|^2)^decay Z_degree(y, pole)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonalTerm {
    pub coef: f64,
    pub decay: f64,
    pub degree: usize,
    pub pole: Vec<f64>,
}

impl ZonalTerm {
    pub fn eval(&self, y: &[f64]) -> f64 {
        let w = (1.0 - norm_sq(y)).max(0.0);
        self.coef * w.powf(self.decay) * zonal_pair(self.degree, y, &self.pole)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunctionKind {
    /// `(1 - |x|^2)^exponent` on `|x| < 1/√j`, zero elsewhere.
    HStep { n: usize, j: u32, exponent: f64 },
    /// `(1 - |x|^2)^{m+α+n/p}`, normalized in `L^p(dτ)`.
    Psi,
    /// `c^{-1} (1 - |x|^2)^{n/p} Z_m(x, e_1)`.
    FM,
    RandomSmooth { seed: u64, index: usize },
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub kind: TestFunctionKind,
    pub terms: Vec<ZonalTerm>,
    pub normalization: f64,
}

impl TestFunction {
    pub fn from_terms(terms: Vec<ZonalTerm>) -> Self {
        Self { kind: TestFunctionKind::Custom, terms, normalization: 1.0 }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::from_terms(vec![ZonalTerm { coef: c, decay: 0.0, degree: 0, pole: SpherePoint::e1(n).coords().to_vec() }])
    }

    /// `Z_j(·, pole)` itself.
    pub fn zonal(j: usize, pole: &SpherePoint) -> Self {
        Self::from_terms(vec![ZonalTerm { coef: 1.0, decay: 0.0, degree: j, pole: pole.coords().to_vec() }])
    }

    pub fn h_step(n: usize, j: u32, exponent: f64) -> Result<Self> {
        if j < 2 {
            return Err(Error::InvalidParams(format!("h_j needs j >= 2, got {j}")));
        }
        if !(exponent > 0.0) {
            return Err(Error::InvalidParams(format!("h_j needs a positive exponent, got {exponent}")));
        }
        Ok(Self { kind: TestFunctionKind::HStep { n, j, exponent }, terms: vec![], normalization: 1.0 })
    }

    /// `h_j` with the Schur exponent `c = (n+m+α-1)/q + m/p`.
    pub fn h_step_schur(params: &Params, j: u32) -> Result<Self> {
        Self::h_step(params.n, j, schur_exponent(params))
    }

    /// `ψ_k` scaled to unit `L^p(dτ)` norm.
    pub fn psi(params: &Params) -> Result<Self> {
        let decay = params.mf() + params.alpha + params.nf() / params.p;
        Ok(Self {
            kind: TestFunctionKind::Psi,
            terms: vec![ZonalTerm { coef: 1.0, decay, degree: 0, pole: SpherePoint::e1(params.n).coords().to_vec() }],
            normalization: (-ln_beta_exact(params)?).exp(),
        })
    }

    pub fn f_m(params: &Params) -> Self {
        Self {
            kind: TestFunctionKind::FM,
            terms: vec![ZonalTerm {
                coef: 1.0,
                decay: params.nf() / params.p,
                degree: params.m as usize,
                pole: SpherePoint::e1(params.n).coords().to_vec(),
            }],
            normalization: 1.0 / f_m_normalizer(params),
        }
    }

    /// Seeded candidate; `index` selects an independent stream.
    pub fn random_smooth(params: &Params, seed: u64, index: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let ladder = decay_ladder(params);
        let count = rng.random_range(1..=MAX_CANDIDATE_TERMS);
        let terms = (0..count)
            .map(|_| {
                let degree = rng.random_range(0..=MAX_CANDIDATE_DEGREE);
                let decay = ladder[rng.random_range(0..ladder.len())];
                let coef: f64 = StandardNormal.sample(&mut rng);
                let pole = loop {
                    let v: Vec<f64> = (0..params.n).map(|_| StandardNormal.sample(&mut rng)).collect();
                    if let Ok(p) = SpherePoint::normalize(&v) {
                        break p.coords().to_vec();
                    }
                };
                ZonalTerm { coef, decay, degree, pole }
            })
            .collect();
        Self { kind: TestFunctionKind::RandomSmooth { seed, index }, terms, normalization: 1.0 }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        match self.kind {
            TestFunctionKind::HStep { j, exponent, .. } => {
                let r2 = norm_sq(y);
                if r2 < 1.0 / j as f64 {
                    self.normalization * (1.0 - r2).powf(exponent)
                } else {
                    0.0
                }
            }
            _ => self.normalization * self.terms.iter().map(|t| t.eval(y)).sum::<f64>(),
        }
    }

    pub fn max_degree(&self) -> usize {
        self.terms.iter().map(|t| t.degree).max().unwrap_or(0)
    }

    pub fn min_decay(&self) -> Option<f64> {
        self.terms.iter().map(|t| t.decay).reduce(f64::min)
    }

    pub fn dim(&self) -> Option<usize> {
        self.terms.first().map(|t| t.pole.len())
    }

    fn require_terms(&self) -> Result<()> {
        if matches!(self.kind, TestFunctionKind::HStep { .. }) || self.terms.is_empty() {
            return Err(Error::InvalidParams("this operation needs a finite zonal expansion".into()));
        }
        Ok(())
    }
}

/// A rule kept in factored radial x sphere form.
#[derive(Debug, Clone)]
pub struct ProductGrid {
    pub n: usize,
    pub radii: Vec<f64>,
    pub radial_weights: Vec<f64>,
    /// Flat sphere nodes.
    pub sphere: Vec<f64>,
    pub sphere_weights: Vec<f64>,
}

impl ProductGrid {
    pub fn new(n: usize, split: &RadialSplit, tag: MeasureTag, seed: u64) -> Result<Self> {
        let radial = build_radial_rule(n, split, tag)?;
        let sphere = build_sphere_rule(n, split.sphere_order, SphereScheme::Full, seed)?;
        Ok(Self {
            n,
            radii: radial.nodes,
            radial_weights: radial.weights,
            sphere: sphere.nodes().flatten().copied().collect(),
            sphere_weights: sphere.weights().to_vec(),
        })
    }

    pub fn sphere_node(&self, s: usize) -> &[f64] {
        &self.sphere[s * self.n..(s + 1) * self.n]
    }

    pub fn sphere_len(&self) -> usize {
        self.sphere_weights.len()
    }

    /// `Σ_i Σ_s w_i w_s g(i, s)`, radial index outer.
    pub fn integrate(&self, g: impl Fn(usize, usize) -> f64 + Sync) -> Result<f64> {
        let rows: Vec<f64> = (0..self.radii.len())
            .into_par_iter()
            .map(|i| {
                let mut acc = CompensatedSum::new();
                for (s, &ws) in self.sphere_weights.iter().enumerate() {
                    acc.add(ws * g(i, s));
                }
                acc.value()
            })
            .collect();
        let mut acc = CompensatedSum::new();
        for (i, (v, &w)) in rows.iter().zip(&self.radial_weights).enumerate() {
            if !v.is_finite() {
                return Err(Error::Evaluation { index: i, coords: vec![self.radii[i]] });
            }
            acc.add(w * v);
        }
        Ok(acc.value())
    }

    /// `Z_j(ξ_s, ω)` for every sphere node.
    fn zonal_on_sphere(&self, j: usize, pole: &[f64]) -> Vec<f64> {
        (0..self.sphere_len()).map(|s| zonal_pair(j, self.sphere_node(s), pole)).collect()
    }
}

/// `‖f‖_{L^p(dτ)}` for a witness.
pub fn tau_norm(f: &TestFunction, p: f64, split: &RadialSplit) -> Result<f64> {
    if let TestFunctionKind::HStep { n, j, exponent } = f.kind {
        return h_step_tau_norm(n, j, exponent, p, split.radial_order).map(|v| v * f.normalization);
    }
    f.require_terms()?;
    let n = f.dim().unwrap_or(2);
    let decay = p * f.min_decay().unwrap_or(0.0);
    let grid = ProductGrid::new(n, split, MeasureTag::Tau { decay }, 0)?;
    let zs: Vec<Vec<f64>> = f.terms.iter().map(|t| grid.zonal_on_sphere(t.degree, &t.pole)).collect();
    let total = grid.integrate(|i, s| {
        let r = grid.radii[i];
        let w = 1.0 - r * r;
        let v: f64 = f.terms.iter().zip(&zs).map(|(t, z)| t.coef * w.powf(t.decay) * r.powi(t.degree as i32) * z[s]).sum();
        (f.normalization * v).abs().powf(p)
    })?;
    Ok(total.powf(1.0 / p))
}

/// `‖h_j‖_{L^p(dτ)} = (|S| ∫_0^{1/√j} (1 - r^2)^{pc-n} r^{n-1} dr)^{1/p}`.
pub fn h_step_tau_norm(n: usize, j: u32, exponent: f64, p: f64, order: usize) -> Result<f64> {
    let rho = 1.0 / (j as f64).sqrt();
    let (us, ws) = gauss_legendre_unit(order.max(8));
    let mut acc = CompensatedSum::new();
    for (u, w) in us.into_iter().zip(ws) {
        let r = rho * u;
        acc.add(w * rho * (1.0 - r * r).powf(p * exponent - n as f64) * r.powi(n as i32 - 1));
    }
    Ok((sphere_area(n) * acc.value()).powf(1.0 / p))
}

fn require_alpha_rule(params: &Params, rule: &QuadratureRule) -> Result<()> {
    match rule.tag {
        MeasureTag::WeightedDvAlpha { alpha } if (alpha - params.alpha).abs() <= 1e-14 && rule.dim() == params.n => Ok(()),
        other => Err(Error::InvalidParams(format!("expected a dv_alpha rule with alpha = {} in dimension {}, got {other:?}", params.alpha, params.n))),
    }
}

/// `T_k^α f(x) = ∫ f(y) [x, y]^{-(n+α+|k|-1)} dv_α(y)` by quadrature.
pub fn apply_t(params: &Params, f: impl Fn(&[f64]) -> f64, x: &[f64], rule: &QuadratureRule) -> Result<f64> {
    require_alpha_rule(params, rule)?;
    let e = params.nf() + params.alpha + params.mf() - 1.0;
    if !(e > 0.0) {
        return Err(Error::Domain(format!("kernel exponent n+alpha+|k|-1 = {e} must be positive")));
    }
    integrate(rule, |y| match bracket(x, y) {
        Ok(b) => f(y) * b.powf(-e),
        Err(_) => f64::NAN,
    })
}

/// `P_α f(x) = ∫ R_α(x, y) f(y) dv_α(y)` with the truncated kernel series.
pub fn apply_p(params: &Params, f: impl Fn(&[f64]) -> f64 + Sync, x: &[f64], series: &KernelSeries, rule: &QuadratureRule) -> Result<f64> {
    apply_p_partial(params, &MultiIndex::zero(params.n), f, x, series, rule)
}

/// `∂^k P_α f(x)`, differentiating the kernel under the integral.
pub fn apply_p_partial(
    params: &Params,
    k: &MultiIndex,
    f: impl Fn(&[f64]) -> f64 + Sync,
    x: &[f64],
    series: &KernelSeries,
    rule: &QuadratureRule,
) -> Result<f64> {
    require_alpha_rule(params, rule)?;
    let n = rule.dim();
    let nodes: Vec<f64> = rule.nodes().flatten().copied().collect();
    let values: Vec<f64> = nodes
        .par_chunks_exact(n)
        .map(|y| {
            let fy = f(y);
            if fy == 0.0 {
                return Ok(0.0);
            }
            Ok(series.partial(k, x, y)?.value * fy)
        })
        .collect::<Result<_>>()?;
    let mut acc = CompensatedSum::new();
    for (i, (v, &w)) in values.iter().zip(rule.weights()).enumerate() {
        if !v.is_finite() {
            return Err(Error::Evaluation { index: i, coords: rule.node(i).to_vec() });
        }
        acc.add(w * v);
    }
    Ok(acc.value())
}

/// The radial profiles `g_{j,a}(r)` on a fixed set of radii.
#[derive(Debug, Clone)]
pub struct TProfileTable {
    pub n: usize,
    pub base_decay: f64,
    pub radii: Vec<f64>,
    inner_len: usize,
    /// `w_s c_α [r_i e_1, y_s]^{-N}`, row per radius.
    kernel: Vec<f64>,
    inner_nodes: Vec<f64>,
    inner_one_minus: Vec<f64>,
    cache: BTreeMap<(usize, u64), Vec<f64>>,
}

impl TProfileTable {
    /// The inner rule carries `(1 - |y|^2)^{α + base_decay - 1}`; profiles
    /// with `a >= base_decay` multiply the remaining power in.
    pub fn new(params: &Params, base_decay: f64, radii: Vec<f64>, inner: &RadialSplit) -> Result<Self> {
        let n = params.n;
        let rule = i_rule(n, params.alpha + base_decay, inner)?;
        let ca = c_alpha(n, params.alpha)?;
        let e = params.nf() + params.alpha + params.mf() - 1.0;
        let inner_len = rule.len();
        let kernel: Vec<f64> = radii
            .par_iter()
            .flat_map_iter(|&r| {
                let mut x = vec![0.0; n];
                x[0] = r;
                rule.nodes()
                    .zip(rule.weights())
                    .map(|(y, &w)| w * ca * bracket(&x, y).map(|b| b.powf(-e)).unwrap_or(f64::NAN))
                    .collect::<Vec<_>>()
            })
            .collect();
        let inner_one_minus = rule.nodes().map(|y| 1.0 - norm_sq(y)).collect();
        Ok(Self { n, base_decay, radii, inner_len, kernel, inner_nodes: rule.nodes().flatten().copied().collect(), inner_one_minus, cache: BTreeMap::new() })
    }

    pub fn profile(&mut self, j: usize, decay: f64) -> Result<&[f64]> {
        if !(decay >= self.base_decay - 1e-12) {
            return Err(Error::InvalidParams(format!("profile decay {decay} is below the table base {}", self.base_decay)));
        }
        let key = (j, decay.to_bits());
        if !self.cache.contains_key(&key) {
            let n = self.n;
            let e1 = SpherePoint::e1(n);
            let scale = 1.0 / dim_harmonic(n, j) as f64;
            let extra = decay - self.base_decay;
            let col: Vec<f64> = (0..self.inner_len)
                .map(|s| {
                    let y = &self.inner_nodes[s * n..(s + 1) * n];
                    let w = self.inner_one_minus[s].max(0.0);
                    let wpow = if extra == 0.0 { 1.0 } else { w.powf(extra) };
                    wpow * zonal_pair(j, y, e1.coords()) * scale
                })
                .collect();
            let len = self.inner_len;
            let values: Vec<f64> = self
                .kernel
                .par_chunks_exact(len)
                .map(|row| {
                    let mut acc = CompensatedSum::new();
                    for (k, c) in row.iter().zip(&col) {
                        acc.add(k * c);
                    }
                    acc.value()
                })
                .collect();
            if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::Evaluation { index: i, coords: vec![self.radii[i]] });
            }
            self.cache.insert(key, values);
        }
        Ok(&self.cache[&key])
    }
}

/// Evaluates `‖T f‖_{L^p(dv_{pm-n})}` and `‖f‖_{L^p(dτ)}` at one resolution.
#[derive(Debug, Clone)]
pub struct TEvaluator {
    pub params: Params,
    pub outer_split: RadialSplit,
    grid: ProductGrid,
    profiles: TProfileTable,
}

impl TEvaluator {
    pub fn new(params: &Params, base_decay: f64, outer: &RadialSplit, inner: &RadialSplit) -> Result<Self> {
        let beta = params.besov_weight_exponent();
        let grid = ProductGrid::new(params.n, outer, MeasureTag::WeightedDvBeta { beta }, 0)?;
        let profiles = TProfileTable::new(params, base_decay, grid.radii.clone(), inner)?;
        Ok(Self { params: *params, outer_split: *outer, grid, profiles })
    }

    pub fn image_norm(&mut self, f: &TestFunction) -> Result<f64> {
        f.require_terms()?;
        let mut rows = Vec::with_capacity(f.terms.len());
        for t in &f.terms {
            let prof = self.profiles.profile(t.degree, t.decay)?.to_vec();
            rows.push((t.coef * f.normalization, prof, self.grid.zonal_on_sphere(t.degree, &t.pole)));
        }
        let p = self.params.p;
        let total = self.grid.integrate(|i, s| rows.iter().map(|(c, g, z)| c * g[i] * z[s]).sum::<f64>().abs().powf(p))?;
        Ok(total.powf(1.0 / p))
    }

    /// `T f(r ξ)` from the profiles; `r` must be a node radius index.
    pub fn image_at(&mut self, f: &TestFunction, radius_index: usize, xi: &[f64]) -> Result<f64> {
        f.require_terms()?;
        let mut v = 0.0;
        for t in &f.terms {
            v += t.coef * f.normalization * self.profiles.profile(t.degree, t.decay)?[radius_index] * zonal_pair(t.degree, xi, &t.pole);
        }
        Ok(v)
    }

    pub fn radii(&self) -> &[f64] {
        &self.profiles.radii
    }

    pub fn quotient(&mut self, f: &TestFunction) -> Result<RayleighQuotient> {
        let numerator = self.image_norm(f)?;
        let denominator = tau_norm(f, self.params.p, &self.outer_split)?;
        Ok(RayleighQuotient { numerator, denominator, value: numerator / denominator })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighQuotient {
    pub numerator: f64,
    pub denominator: f64,
    pub value: f64,
}

/// `P_α f = Σ c M_j(a) Z_j(·, ω)` as a harmonic expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicExpansion {
    pub n: usize,
    /// `(coef, degree, pole)`.
    pub terms: Vec<(f64, usize, Vec<f64>)>,
}

impl HarmonicExpansion {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, j, pole)| c * zonal_pair(*j, x, pole)).sum()
    }

    pub fn partial(&self, k: &MultiIndex, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .filter(|(_, j, _)| *j >= k.order() as usize)
            .map(|(c, j, pole)| c * crate::zonal::zonal_partial_pair(*j, k, x, pole))
            .sum()
    }

    /// `(∫ (1 - |x|^2)^{pm-n} (Σ_{|k|=m} |∂^k u|)^p dv)^{1/p}`, using
    /// `∂^k Z_j(r ξ) = r^{j-m} ∂^k Z_j(ξ)`.
    pub fn besov_seminorm(&self, params: &Params, split: &RadialSplit) -> Result<f64> {
        params.require_besov_admissible()?;
        let beta = params.besov_weight_exponent();
        let grid = ProductGrid::new(params.n, split, MeasureTag::WeightedDvBeta { beta }, 0)?;
        self.besov_seminorm_on(params, &grid)
    }

    pub fn besov_seminorm_on(&self, params: &Params, grid: &ProductGrid) -> Result<f64> {
        let m = params.m as usize;
        let ks = params.multi_indices();
        let active: Vec<&(f64, usize, Vec<f64>)> = self.terms.iter().filter(|t| t.1 >= m && t.0 != 0.0).collect();
        if active.is_empty() {
            return Ok(0.0);
        }
        // d[t][k][s] = ∂^k Z_j(ξ_s, ω)
        let d: Vec<Vec<Vec<f64>>> = active
            .iter()
            .map(|(_, j, pole)| {
                let zp = ZonalPolynomial::new(*j, pole);
                ks.iter()
                    .map(|k| {
                        let poly = zp.derivative(k);
                        (0..grid.sphere_len()).map(|s| poly.eval(grid.sphere_node(s))).collect()
                    })
                    .collect()
            })
            .collect();
        let p = params.p;
        let total = grid.integrate(|i, s| {
            let r = grid.radii[i];
            let mut mag = 0.0;
            for kk in 0..ks.len() {
                let mut v = 0.0;
                for (t, (c, j, _)) in active.iter().enumerate() {
                    v += c * r.powi((*j - m) as i32) * d[t][kk][s];
                }
                mag += v.abs();
            }
            mag.powf(p)
        })?;
        Ok(total.powf(1.0 / p))
    }
}

/// `P_α f` for a finite zonal expansion, by the exact multipliers.
pub fn projection_image(params: &Params, f: &TestFunction) -> Result<HarmonicExpansion> {
    f.require_terms()?;
    let mut terms = Vec::with_capacity(f.terms.len());
    for t in &f.terms {
        let mult = projection_multiplier(params.n, params.alpha, t.degree, t.decay)?;
        terms.push((t.coef * f.normalization * mult, t.degree, t.pole.clone()));
    }
    Ok(HarmonicExpansion { n: params.n, terms })
}

/// `‖P_α f‖_{B^p}` for a finite zonal expansion.
pub fn besov_norm_of_image(params: &Params, f: &TestFunction, split: &RadialSplit) -> Result<f64> {
    projection_image(params, f)?.besov_seminorm(params, split)
}

/// `Σ_{|k|=m} ∫ (1 - |x|^2)^{2m} ∂^k f ∂^k g dτ` on a rule for
/// `(1 - |x|^2)^{2m-n} dv`.
pub fn dirichlet_inner_product(
    f_partials: impl Fn(&MultiIndex, &[f64]) -> f64,
    g_partials: impl Fn(&MultiIndex, &[f64]) -> f64,
    params: &Params,
    rule: &QuadratureRule,
) -> Result<f64> {
    let beta = 2.0 * params.mf() - params.nf();
    match rule.tag {
        MeasureTag::WeightedDvBeta { beta: b } if (b - beta).abs() <= 1e-12 => {}
        other => return Err(Error::InvalidParams(format!("Dirichlet product needs a dv_(2m-n) rule with exponent {beta}, got {other:?}"))),
    }
    let ks = params.multi_indices();
    integrate(rule, |x| ks.iter().map(|k| f_partials(k, x) * g_partials(k, x)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operator {
    T,
    P,
}

impl std::fmt::Display for Operator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Operator::T => "T",
            Operator::P => "P",
        })
    }
}

impl std::str::FromStr for Operator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" | "t" => Ok(Operator::T),
            "P" | "p" => Ok(Operator::P),
            other => Err(Error::InvalidParams(format!("unknown operator {other:?}; expected T or P"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketConfig {
    pub trials: usize,
    pub seed: u64,
    /// Rule for the outer norms.
    pub outer: RadialSplit,
    /// Rule for the inner `T` integrals.
    pub inner: RadialSplit,
    pub kernel: KernelControl,
    pub sampler: SamplerConfig,
}

impl Default for BracketConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: DEFAULT_SEED,
            outer: RadialSplit { radial_order: 32, sphere_order: 16, clustering: None },
            inner: RadialSplit { radial_order: 32, sphere_order: 16, clustering: None },
            kernel: KernelControl::default(),
            sampler: SamplerConfig { samples: 200, seed: DEFAULT_SEED, max_radius: 0.9 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerPaper {
    pub displayed: f64,
    pub proof_assembled: f64,
    pub corrected: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperPaper {
    pub displayed: f64,
    pub proof_assembled: f64,
    /// False when the bound uses an empirical (lower) estimate of `C_α^m`.
    pub certified: bool,
    pub growth_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRow {
    pub id: usize,
    pub kind: String,
    pub max_degree: usize,
    pub quotient: f64,
    pub quotient_coarse: f64,
    pub quad_error_est: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub code: String,
    pub message: String,
    pub value: f64,
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormBracket {
    pub operator: Operator,
    pub params: Params,
    pub config: BracketConfig,
    pub lower_paper: LowerPaper,
    /// Largest finest-resolution Rayleigh quotient.
    pub lower_empirical: f64,
    /// Largest quotient after subtracting twice its refinement delta.
    pub lower_empirical_margined: f64,
    pub upper_paper: UpperPaper,
    pub trials: usize,
    pub best_witness: TestFunction,
    /// Quotient of `ψ_k` (for `T`) or `f_m` (for `P`) alone.
    pub paper_witness_quotient: f64,
    /// `‖T ψ_k‖` or `‖P_α f_m‖_{B^p}` at the finest resolution.
    pub paper_witness_image_norm: f64,
    pub witnesses: Vec<WitnessRow>,
    pub quad_error_est: f64,
    /// `lower_empirical / (C(m+n-1, m) D_p^m)`, for `P`.
    pub conjecture_ratio: Option<f64>,
    /// Largest quotient among candidates of each top degree.
    pub max_quotient_by_degree: Vec<Option<f64>>,
    pub findings: Vec<Finding>,
}

fn kind_label(f: &TestFunction) -> String {
    match f.kind {
        TestFunctionKind::HStep { .. } => "h_step",
        TestFunctionKind::Psi => "psi",
        TestFunctionKind::FM => "f_m",
        TestFunctionKind::RandomSmooth { .. } => "random_smooth",
        TestFunctionKind::Custom => "custom",
    }
    .into()
}

struct Scored {
    f: TestFunction,
    fine: RayleighQuotient,
    coarse: RayleighQuotient,
}

fn summarize(
    operator: Operator,
    params: &Params,
    config: &BracketConfig,
    scored: Vec<Scored>,
    lower_paper: LowerPaper,
    upper_paper: UpperPaper,
) -> NormBracket {
    let mut best = 0;
    let mut lower_empirical = f64::NEG_INFINITY;
    let mut margined = f64::NEG_INFINITY;
    let mut by_degree = vec![None; MAX_CANDIDATE_DEGREE.max(params.m as usize) + 1];
    let mut witnesses = Vec::with_capacity(scored.len());
    for (id, s) in scored.iter().enumerate() {
        let err = (s.fine.value - s.coarse.value).abs();
        if s.fine.value > lower_empirical {
            lower_empirical = s.fine.value;
            best = id;
        }
        margined = margined.max(s.fine.value - 2.0 * err);
        let d = s.f.max_degree();
        if matches!(s.f.kind, TestFunctionKind::RandomSmooth { .. }) && d < by_degree.len() {
            let slot: &mut Option<f64> = &mut by_degree[d];
            *slot = Some(slot.map_or(s.fine.value, |v: f64| v.max(s.fine.value)));
        }
        witnesses.push(WitnessRow {
            id,
            kind: kind_label(&s.f),
            max_degree: d,
            quotient: s.fine.value,
            quotient_coarse: s.coarse.value,
            quad_error_est: err,
        });
    }
    let quad_error_est = witnesses[best].quad_error_est;
    NormBracket {
        operator,
        params: *params,
        config: *config,
        lower_paper,
        lower_empirical,
        lower_empirical_margined: margined,
        upper_paper,
        trials: config.trials,
        best_witness: scored[best].f.clone(),
        paper_witness_quotient: scored[0].fine.value,
        paper_witness_image_norm: scored[0].fine.numerator,
        witnesses,
        quad_error_est,
        conjecture_ratio: None,
        max_quotient_by_degree: by_degree,
        findings: vec![],
    }
}

fn finding(code: &str, message: String, value: f64, reference: f64) -> Finding {
    Finding { code: code.into(), message, value, reference }
}

fn upper_findings(b: &NormBracket, out: &mut Vec<Finding>) {
    let lower = b.lower_empirical_margined;
    let u = b.upper_paper;
    let qualifier = if u.certified { "" } else { " (upper bound uses an empirical C_alpha^m)" };
    if lower > u.displayed {
        out.push(finding(
            "exceeds_displayed_upper",
            format!("empirical lower bound exceeds the displayed upper bound{qualifier}"),
            lower,
            u.displayed,
        ));
    }
    if lower > u.proof_assembled {
        out.push(finding(
            "exceeds_proof_assembled_upper",
            format!("empirical lower bound exceeds the proof-assembled upper bound{qualifier}"),
            lower,
            u.proof_assembled,
        ));
    }
    if b.lower_paper.displayed > u.displayed {
        out.push(finding(
            "paper_lower_exceeds_paper_upper",
            "displayed lower constant exceeds displayed upper constant".into(),
            b.lower_paper.displayed,
            u.displayed,
        ));
    }
}

/// Empirical bracket for `‖T_k^α : L^p(dτ) -> L^p(dv_{pm-n})‖`.
pub fn bracket_t_norm(params: &Params, config: &BracketConfig) -> Result<NormBracket> {
    params.require_besov_admissible()?;
    let a = lower_constant_t(params)?;
    let d = schur_upper_constant(params)?;
    let psi = TestFunction::psi(params)?;
    let base = decay_ladder(params)[0].min(psi.min_decay().unwrap_or(f64::INFINITY));
    let mut coarse = TEvaluator::new(params, base, &config.outer, &config.inner)?;
    let mut fine = TEvaluator::new(params, base, &config.outer.refined(), &config.inner.refined())?;
    let mut scored = Vec::with_capacity(config.trials + 1);
    let candidates =
        std::iter::once(psi).chain((1..=config.trials).map(|i| TestFunction::random_smooth(params, config.seed, i)));
    for f in candidates {
        let c = coarse.quotient(&f)?;
        let q = fine.quotient(&f)?;
        scored.push(Scored { f, fine: q, coarse: c });
    }
    let lower_paper = LowerPaper { displayed: a.displayed, proof_assembled: a.proof_assembled, corrected: a.corrected };
    let upper_paper =
        UpperPaper { displayed: d.d.displayed, proof_assembled: d.d.proof_assembled, certified: true, growth_constant: None };
    let mut b = summarize(Operator::T, params, config, scored, lower_paper, upper_paper);
    let mut findings = vec![];
    upper_findings(&b, &mut findings);
    let psi_norm = b.paper_witness_image_norm;
    if psi_norm < a.proof_assembled * (1.0 - CLOSED_VALUE_TOL) {
        findings.push(finding(
            "witness_below_proof_chain",
            "the psi_k witness does not reach the proof-assembled lower constant".into(),
            psi_norm,
            a.proof_assembled,
        ));
    }
    if psi_norm < a.displayed * (1.0 - CLOSED_VALUE_TOL) {
        findings.push(finding(
            "witness_below_displayed_lower",
            "the psi_k witness does not reach the displayed lower constant".into(),
            psi_norm,
            a.displayed,
        ));
    }
    if let Some(c) = a.corrected {
        if psi_norm < c * (1.0 - CLOSED_VALUE_TOL) {
            findings.push(finding(
                "witness_below_corrected_lower",
                "the psi_k witness falls below the corrected lower chain; quadrature suspect".into(),
                psi_norm,
                c,
            ));
        }
    }
    if !d.jensen_holds {
        findings.push(finding("jensen_violation", "D_tilde exceeds D".into(), d.d_tilde.displayed, d.d.displayed));
    }
    b.findings = findings;
    Ok(b)
}

/// Evaluates `‖P_α f‖_{B^p}` and `‖f‖_{L^p(dτ)}` at one resolution.
#[derive(Debug, Clone)]
pub struct PEvaluator {
    pub params: Params,
    pub split: RadialSplit,
    grid: ProductGrid,
}

impl PEvaluator {
    pub fn new(params: &Params, split: &RadialSplit) -> Result<Self> {
        params.require_besov_admissible()?;
        let beta = params.besov_weight_exponent();
        let grid = ProductGrid::new(params.n, split, MeasureTag::WeightedDvBeta { beta }, 0)?;
        Ok(Self { params: *params, split: *split, grid })
    }

    pub fn image_norm(&self, f: &TestFunction) -> Result<f64> {
        projection_image(&self.params, f)?.besov_seminorm_on(&self.params, &self.grid)
    }

    pub fn quotient(&self, f: &TestFunction) -> Result<RayleighQuotient> {
        let numerator = self.image_norm(f)?;
        let denominator = tau_norm(f, self.params.p, &self.split)?;
        Ok(RayleighQuotient { numerator, denominator, value: numerator / denominator })
    }
}

/// Empirical bracket for `‖P_α : L^p(dτ) -> B^p‖`.
pub fn bracket_p_norm(params: &Params, config: &BracketConfig) -> Result<NormBracket> {
    params.require_besov_admissible()?;
    let b_report = lower_constant_p(params)?;
    let d = schur_upper_constant(params)?;
    let series = KernelSeries::new(params, config.kernel);
    let growth = estimate_growth_constant(&series, params.m, &config.sampler)?;
    let count = multi_index_count(params.n, params.m);
    let coarse = PEvaluator::new(params, &config.outer)?;
    let fine = PEvaluator::new(params, &config.outer.refined())?;
    let candidates = std::iter::once(TestFunction::f_m(params))
        .chain((1..=config.trials).map(|i| TestFunction::random_smooth(params, config.seed, i)));
    let mut scored = Vec::with_capacity(config.trials + 1);
    for f in candidates {
        let c = coarse.quotient(&f)?;
        let q = fine.quotient(&f)?;
        scored.push(Scored { f, fine: q, coarse: c });
    }
    let lower_paper = LowerPaper {
        displayed: b_report.b.displayed,
        proof_assembled: b_report.b.proof_assembled,
        corrected: b_report.b.corrected,
    };
    let g = growth.empirical_value;
    let upper_paper = UpperPaper {
        displayed: g * count * d.d.displayed,
        proof_assembled: g * count * d.d.proof_assembled,
        certified: false,
        growth_constant: Some(g),
    };
    let mut b = summarize(Operator::P, params, config, scored, lower_paper, upper_paper);
    b.conjecture_ratio = Some(b.lower_empirical / (count * d.d.displayed));
    let mut findings = vec![];
    upper_findings(&b, &mut findings);
    let fm_norm = b.paper_witness_image_norm;
    let rel = (fm_norm - b_report.b.proof_assembled).abs() / b_report.b.proof_assembled;
    if rel > CLOSED_VALUE_TOL {
        findings.push(finding(
            "proof_value_mismatch",
            format!("norm of P f_m differs from the proof's closed value by a factor {:.6}", fm_norm / b_report.b.proof_assembled),
            fm_norm,
            b_report.b.proof_assembled,
        ));
    }
    let agg = b_report.aggregation;
    if (agg.l1 - agg.claimed).abs() > 1e-9 * agg.claimed || (agg.signed - agg.l1).abs() > 1e-9 * agg.l1 {
        findings.push(finding(
            "aggregation_convention",
            format!("sum |d^k Z_m| = {}, |sum d^k Z_m| = {}, m! dim H_m = {}", agg.l1, agg.signed, agg.claimed),
            agg.l1,
            agg.claimed,
        ));
    }
    if growth.skipped > 0 {
        findings.push(finding(
            "growth_samples_skipped",
            format!("{} kernel samples exceeded the degree cap", growth.skipped),
            growth.skipped as f64,
            growth.sample_count as f64,
        ));
    }
    b.findings = findings;
    Ok(b)
}

pub fn bracket_norm(operator: Operator, params: &Params, config: &BracketConfig) -> Result<NormBracket> {
    match operator {
        Operator::T => bracket_t_norm(params, config),
        Operator::P => bracket_p_norm(params, config),
    }
}

/// One evaluation of the Schur inequality for `h_j` at `x = x_abs e_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchurProbe {
    pub j: u32,
    pub x_abs: f64,
    /// `∫ (1-|y|^2)^{n+α-1} h_j^p(y) [x,y]^{-(n+|k|+α-1)} dτ(y)`.
    pub lhs: f64,
    /// `(j/(j-1))^{pc} C(pc+α, |k|-pc) h_j^p(x)`.
    pub rhs: f64,
    pub inside_support: bool,
    pub holds: bool,
}

pub fn schur_inequality_probe(params: &Params, j: u32, x_abs: f64, order: usize) -> Result<SchurProbe> {
    if j < 2 {
        return Err(Error::InvalidParams(format!("h_j needs j >= 2, got {j}")));
    }
    if !(0.0..1.0).contains(&x_abs) {
        return Err(Error::Domain(format!("|x| = {x_abs} must lie in [0, 1)")));
    }
    let n = params.n;
    let c = schur_exponent(params);
    let pc = params.p * c;
    let e = params.nf() + params.mf() + params.alpha - 1.0;
    let rho = 1.0 / (j as f64).sqrt();
    let sphere = build_sphere_rule(n, order, SphereScheme::AxialGraded, 0)?;
    let (us, ws) = gauss_legendre_unit(order);
    let mut x = vec![0.0; n];
    x[0] = x_abs;
    let mut acc = CompensatedSum::new();
    let mut y = vec![0.0; n];
    for (u, w) in us.iter().zip(&ws) {
        let r = rho * u;
        let radial = w * rho * r.powi(n as i32 - 1) * (1.0 - r * r).powf(pc + params.alpha - 1.0);
        for (xi, &wsph) in sphere.nodes().zip(sphere.weights()) {
            y.iter_mut().zip(xi).for_each(|(a, b)| *a = r * b);
            acc.add(radial * wsph * bracket(&x, &y)?.powf(-e));
        }
    }
    let lhs = sphere_area(n) * acc.value();
    let inside = x_abs * x_abs < 1.0 / j as f64;
    let h_p = if inside { (1.0 - x_abs * x_abs).powf(pc) } else { 0.0 };
    let jf = j as f64;
    let rhs = (jf / (jf - 1.0)).powf(pc) * c_alpha_s(n, pc + params.alpha, params.mf() - pc)? * h_p;
    Ok(SchurProbe { j, x_abs, lhs, rhs, inside_support: inside, holds: lhs <= rhs })
}

/// `‖T f‖` over `rB` in `L^p(dv_{pm-n})` and in `L^p(dτ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightComparison {
    pub radius: f64,
    pub besov_weighted: f64,
    pub tau_weighted: f64,
}

pub fn truncated_weight_comparison(params: &Params, f: &TestFunction, radius: f64, split: &RadialSplit) -> Result<WeightComparison> {
    f.require_terms()?;
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::Domain(format!("radius {radius} must lie in (0, 1)")));
    }
    let n = params.n;
    let (us, ws) = gauss_legendre_unit(split.radial_order);
    let radii: Vec<f64> = us.iter().map(|u| radius * u).collect();
    let base = f.min_decay().unwrap_or(0.0);
    let mut table = TProfileTable::new(params, base, radii.clone(), split)?;
    let sphere = build_sphere_rule(n, split.sphere_order, SphereScheme::Full, 0)?;
    let mut rows = vec![];
    for t in &f.terms {
        let g = table.profile(t.degree, t.decay)?.to_vec();
        let z: Vec<f64> = sphere.nodes().map(|xi| zonal_pair(t.degree, xi, &t.pole)).collect();
        rows.push((t.coef * f.normalization, g, z));
    }
    let p = params.p;
    let beta = params.besov_weight_exponent();
    let mut bw = CompensatedSum::new();
    let mut tw = CompensatedSum::new();
    for (i, (&r, &w)) in radii.iter().zip(&ws).enumerate() {
        let mut shell = CompensatedSum::new();
        for (s, &wsph) in sphere.weights().iter().enumerate() {
            let v: f64 = rows.iter().map(|(c, g, z)| c * g[i] * z[s]).sum();
            shell.add(wsph * v.abs().powf(p));
        }
        let base = w * radius * r.powi(n as i32 - 1) * shell.value() * sphere_area(n);
        let one_minus = 1.0 - r * r;
        bw.add(base * one_minus.powf(beta));
        tw.add(base * one_minus.powf(-params.nf()));
    }
    Ok(WeightComparison { radius, besov_weighted: bw.value().powf(1.0 / p), tau_weighted: tw.value().powf(1.0 / p) })
}

/// Sup-norm defect of `P_α Z_j(·, e_1) = Z_j(·, e_1)` through the kernel series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproducingReport {
    pub n: usize,
    pub alpha: f64,
    pub points: usize,
    pub max_radius: f64,
    /// `max_x |P_α Z_j(x) - Z_j(x)|` for `j = 0..=j_max`.
    pub sup_error_by_degree: Vec<f64>,
    pub sup_error: f64,
    /// Largest kernel degree actually summed.
    pub max_kernel_degree: usize,
}

/// Seeded sample points have `|x| <= max_radius`; all degrees share one
/// kernel evaluation per node.
pub fn reproducing_check(
    params: &Params,
    j_max: usize,
    points: usize,
    max_radius: f64,
    split: &RadialSplit,
    control: KernelControl,
    seed: u64,
) -> Result<ReproducingReport> {
    if !(max_radius > 0.0 && max_radius < 1.0) {
        return Err(Error::Domain(format!("max_radius = {max_radius} must lie in (0, 1)")));
    }
    let n = params.n;
    let rule = build_ball_rule(params, split, MeasureTag::WeightedDvAlpha { alpha: params.alpha })?;
    let series = KernelSeries::new(params, control);
    let pole = SpherePoint::e1(n);
    let ztab: Vec<Vec<f64>> = rule.nodes().map(|y| (0..=j_max).map(|j| zonal_pair(j, y, pole.coords())).collect()).collect();
    let rows: Vec<(Vec<f64>, usize)> = (0..points)
        .into_par_iter()
        .map(|i| {
            let (x, _) = growth_sample(n, seed, i, max_radius);
            let mut acc = vec![CompensatedSum::new(); j_max + 1];
            let mut max_degree = 0;
            for (idx, (y, &w)) in rule.nodes().zip(rule.weights()).enumerate() {
                let kv = series.eval(&x, y)?;
                max_degree = max_degree.max(kv.degree);
                for (a, z) in acc.iter_mut().zip(&ztab[idx]) {
                    a.add(w * kv.value * z);
                }
            }
            let errs = acc.iter().enumerate().map(|(j, a)| (a.value() - zonal_pair(j, &x, pole.coords())).abs()).collect();
            Ok((errs, max_degree))
        })
        .collect::<Result<_>>()?;
    let mut by_degree = vec![0.0f64; j_max + 1];
    let mut max_kernel_degree = 0;
    for (errs, d) in &rows {
        for (b, e) in by_degree.iter_mut().zip(errs) {
            *b = b.max(*e);
        }
        max_kernel_degree = max_kernel_degree.max(*d);
    }
    let sup_error = by_degree.iter().copied().fold(0.0, f64::max);
    Ok(ReproducingReport {
        n,
        alpha: params.alpha,
        points,
        max_radius,
        sup_error_by_degree: by_degree,
        sup_error,
        max_kernel_degree,
    })
}

/// Besov seminorms of `P_α f` at two orders for seeded candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparabilityReport {
    pub m_low: u32,
    pub m_high: u32,
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Candidates with a vanishing seminorm at some order.
    pub skipped: usize,
    pub within_bounds: bool,
}

pub fn order_comparability_probe(params: &Params, m_high: u32, trials: usize, seed: u64, split: &RadialSplit) -> Result<ComparabilityReport> {
    params.require_besov_admissible()?;
    if m_high <= params.m {
        return Err(Error::InvalidParams(format!("m_high = {m_high} must exceed m = {}", params.m)));
    }
    let high = Params { m: m_high, ..*params };
    let lo_eval = PEvaluator::new(params, split)?;
    let hi_eval = PEvaluator::new(&high, split)?;
    let mut ratios = vec![];
    let mut skipped = 0;
    for i in 1..=trials {
        let f = TestFunction::random_smooth(params, seed, i);
        let a = lo_eval.image_norm(&f)?;
        let b = hi_eval.image_norm(&f)?;
        if a <= 0.0 || b <= 0.0 {
            skipped += 1;
            continue;
        }
        ratios.push(b / a);
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(ComparabilityReport {
        m_low: params.m,
        m_high,
        within_bounds: !ratios.is_empty() && min_ratio >= 1e-3 && max_ratio <= 1e3,
        ratios,
        min_ratio,
        max_ratio,
        skipped,
    })
}

/// `Σ_{|k|=m} |∂^k f|` aggregated two ways at one point.
pub fn aggregation_at(params: &Params, f: &HarmonicExpansion, x: &[f64]) -> (f64, f64) {
    let ks = params.multi_indices();
    let vals: Vec<f64> = ks.iter().map(|k| f.partial(k, x)).collect();
    (vals.iter().map(|v| v.abs()).sum(), vals.iter().sum::<f64>().abs())
}
