//! Product quadrature on the unit ball and sphere for the measures `dv`,
//! `dv_α`, `dτ`, the unnormalized `(1 - |x|^2)^β dv`, and normalized `σ`.
//!
//! Ball rules are radial × sphere. The radial variable is clustered toward
//! `r = 1` by `r = 1 - (1 - u)^κ` and Gauss-Legendre is applied in `u`.
//! With `κ(β + 1)` an integer the transformed weight `(1 - u)^{κ(β+1) - 1}`
//! is polynomial, so boundary weights with non-integer exponents cost no
//! accuracy.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi, GaussLegendre};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::point::{sphere_area, MultiIndex};
use crate::specfun::ln_gamma;
use crate::sum::CompensatedSum;

pub const RULE_FORMAT_VERSION: u32 = 1;
const BINARY_MAGIC: &[u8; 4] = b"BNQR";
/// Number of rotated product rules averaged for spheres with `n >= 4`.
pub const SPHERE_ROTATIONS: usize = 2;

/// The measure a rule realizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureTag {
    /// Lebesgue `dv`, total mass `|B|`.
    LebesgueDv,
    /// `dv_α = c_α (1 - |x|^2)^{α-1} dv`, total mass 1.
    WeightedDvAlpha { alpha: f64 },
    /// `dτ = (1 - |x|^2)^{-n} dv`, for integrands decaying like `(1 - |x|^2)^decay`.
    Tau { decay: f64 },
    /// `(1 - |x|^2)^β dv`, unnormalized.
    WeightedDvBeta { beta: f64 },
    /// Normalized surface measure `σ` on the sphere.
    SphereSigma,
}

impl MeasureTag {
    fn radial_weight(&self, n: usize) -> Result<(f64, f64, f64)> {
        // (exponent γ of (1 - r^2), clustering exponent, normalizer)
        let nf = n as f64;
        match *self {
            MeasureTag::LebesgueDv => Ok((0.0, 0.0, 1.0)),
            MeasureTag::WeightedDvAlpha { alpha } => {
                if !(alpha > 0.0) {
                    return Err(Error::Domain(format!("dv_alpha needs alpha > 0, got {alpha}")));
                }
                Ok((alpha - 1.0, alpha - 1.0, c_alpha(n, alpha)?))
            }
            MeasureTag::WeightedDvBeta { beta } => {
                if !(beta > -1.0) {
                    return Err(Error::Domain(format!(
                        "(1 - |x|^2)^beta dv is not integrable for beta = {beta} <= -1"
                    )));
                }
                Ok((beta, beta, 1.0))
            }
            MeasureTag::Tau { decay } => {
                if !(decay - nf > -1.0) {
                    return Err(Error::Domain(format!(
                        "tau has infinite mass on the ball; integrate only weighted integrands decaying like (1 - |x|^2)^d with d > n - 1 (got d = {decay})"
                    )));
                }
                Ok((-nf, decay - nf, 1.0))
            }
            MeasureTag::SphereSigma => {
                Err(Error::Domain("sphere_sigma is a sphere measure; use build_sphere_rule".into()))
            }
        }
    }
}

/// `c_α = 2 Γ(n/2 + α) / (n |B| Γ(n/2) Γ(α))`, so that `dv_α` has mass 1.
pub fn c_alpha(n: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("c_alpha needs alpha > 0, got {alpha}")));
    }
    let h = n as f64 / 2.0;
    let log = std::f64::consts::LN_2 + ln_gamma(h + alpha)? - sphere_area(n).ln() - ln_gamma(h)? - ln_gamma(alpha)?;
    Ok(log.exp())
}

/// Radial and sphere orders of a product rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSplit {
    pub radial_order: usize,
    pub sphere_order: usize,
    /// Clustering exponent `κ >= 1`; chosen from the weight when `None`.
    pub clustering: Option<f64>,
}

impl RadialSplit {
    pub fn new(radial_order: usize, sphere_order: usize) -> Result<Self> {
        if radial_order < 4 || sphere_order < 4 {
            return Err(Error::InvalidParams(format!(
                "quadrature orders must be at least 4 (got radial {radial_order}, sphere {sphere_order})"
            )));
        }
        Ok(Self { radial_order, sphere_order, clustering: None })
    }

    pub fn with_clustering(mut self, kappa: f64) -> Result<Self> {
        if !(kappa >= 1.0) || !kappa.is_finite() {
            return Err(Error::InvalidParams(format!("clustering exponent must be >= 1, got {kappa}")));
        }
        self.clustering = Some(kappa);
        Ok(self)
    }

    pub fn refined(&self) -> Self {
        Self { radial_order: 2 * self.radial_order, sphere_order: 2 * self.sphere_order, clustering: self.clustering }
    }
}

impl Default for RadialSplit {
    fn default() -> Self {
        Self { radial_order: 48, sphere_order: 24, clustering: None }
    }
}

/// `κ = ceil(2(β + 1)) / (β + 1)`: at least 2, and `κ(β + 1)` is an integer.
pub fn auto_clustering(beta: f64) -> f64 {
    let b1 = beta + 1.0;
    (2.0 * b1 - 1e-12).ceil().max(1.0) / b1
}

/// Layout of the sphere factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereScheme {
    /// Full product rule over the sphere.
    Full,
    /// One-dimensional rule in `z = ξ·e_1`, exact only for integrands that
    /// depend on `ξ` through `ξ·e_1`.
    Axial,
    /// As `Axial`, in the polar angle from `e_1` with geometrically graded
    /// panels toward `e_1`; resolves integrands peaked at `ξ = e_1`.
    AxialGraded,
}

/// Smallest panel of the graded axial scheme, in radians.
pub const GRADED_FIRST_ANGLE: f64 = 1e-7;
/// Ratio between consecutive graded panels.
pub const GRADED_RATIO: f64 = 2.0;

/// Provenance stored alongside nodes and weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub n: usize,
    pub radial_order: usize,
    pub sphere_order: usize,
    pub clustering: f64,
    pub scheme: SphereScheme,
    pub seed: u64,
}

/// Nodes (flattened, `n` coordinates each) and positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub format_version: u32,
    pub tag: MeasureTag,
    pub spec: RuleSpec,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// A one-dimensional rule in `r` for radial integrands; weights include the
/// sphere area so `Σ w_i g(r_i) = ∫_B g(|x|) dμ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialRule {
    pub tag: MeasureTag,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn nz(k: usize) -> NonZeroUsize {
    NonZeroUsize::new(k).expect("quadrature order is positive")
}

/// Gauss-Legendre nodes and weights on `[0, 1]`, nodes ascending.
pub fn gauss_legendre_unit(order: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(nz(order));
    let mut pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss-Jacobi for `(1 - z^2)^λ` on `[-1, 1]`, weights normalized to 1.
fn gauss_gegenbauer_normalized(order: usize, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let mut pairs: Vec<(f64, f64)> = if lambda == 0.0 {
        GaussLegendre::new(nz(order)).iter().map(|(x, w)| (*x, *w)).collect()
    } else {
        let e = FiniteAboveNegOneF64::new(lambda).expect("exponent above -1");
        GaussJacobi::new(nz(order), e, e).iter().map(|(x, w)| (*x, *w)).collect()
    };
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs.into_iter().map(|(x, w)| (x, w / total)).unzip()
}

/// Radial rule for a tagged ball measure.
pub fn build_radial_rule(n: usize, split: &RadialSplit, tag: MeasureTag) -> Result<RadialRule> {
    let (gamma, cluster_beta, norm) = tag.radial_weight(n)?;
    let kappa = split.clustering.unwrap_or_else(|| auto_clustering(cluster_beta));
    let (us, ws) = gauss_legendre_unit(split.radial_order);
    let area = sphere_area(n) * norm;
    let mut nodes = Vec::with_capacity(us.len());
    let mut weights = Vec::with_capacity(us.len());
    for (u, w) in us.into_iter().zip(ws) {
        let t = (1.0 - u).powf(kappa);
        let r = 1.0 - t;
        let one_minus_r2 = t * (2.0 - t);
        let jac = kappa * (1.0 - u).powf(kappa - 1.0);
        let weight = w * jac * r.powi(n as i32 - 1) * one_minus_r2.powf(gamma) * area;
        nodes.push(r);
        weights.push(weight);
    }
    Ok(RadialRule { tag, nodes, weights })
}

impl RadialRule {
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        let mut acc = CompensatedSum::new();
        for (i, (&r, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let v = g(r);
            if !v.is_finite() {
                return Err(Error::Evaluation { index: i, coords: vec![r] });
            }
            acc.add(w * v);
        }
        Ok(acc.value())
    }
}

fn sphere_product_nodes(n: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 2 {
        let m = 2 * order;
        let mut nodes = Vec::with_capacity(2 * m);
        for i in 0..m {
            let phi = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / m as f64;
            nodes.push(phi.cos());
            nodes.push(phi.sin());
        }
        return (nodes, vec![1.0 / m as f64; m]);
    }
    let (zs, wz) = gauss_gegenbauer_normalized(order, (n as f64 - 3.0) / 2.0);
    let (sub, wsub) = sphere_product_nodes(n - 1, order);
    let mut nodes = Vec::with_capacity(zs.len() * wsub.len() * n);
    let mut weights = Vec::with_capacity(zs.len() * wsub.len());
    for (&z, &w1) in zs.iter().zip(&wz) {
        let s = (1.0 - z * z).max(0.0).sqrt();
        for (eta, &w2) in sub.chunks_exact(n - 1).zip(&wsub) {
            nodes.push(z);
            nodes.extend(eta.iter().map(|e| s * e));
            weights.push(w1 * w2);
        }
    }
    (nodes, weights)
}

fn axial_nodes(n: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (zs, wz) = gauss_gegenbauer_normalized(order, (n as f64 - 3.0) / 2.0);
    let mut nodes = Vec::with_capacity(zs.len() * n);
    for &z in &zs {
        nodes.push(z);
        nodes.push((1.0 - z * z).max(0.0).sqrt());
        nodes.extend(std::iter::repeat_n(0.0, n - 2));
    }
    (nodes, wz)
}

fn graded_axial_nodes(n: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let pi = std::f64::consts::PI;
    let max_width = pi / 8.0;
    let mut edges = vec![0.0, GRADED_FIRST_ANGLE];
    loop {
        let last = *edges.last().unwrap();
        let next = (last * GRADED_RATIO).min(last + max_width);
        if next >= pi - 1e-12 {
            break;
        }
        edges.push(next);
    }
    edges.push(pi);
    let (us, ws) = gauss_legendre_unit(order);
    let mut thetas = Vec::new();
    let mut raw = Vec::new();
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for (&u, &w) in us.iter().zip(&ws) {
            let th = a + (b - a) * u;
            thetas.push(th);
            raw.push(w * (b - a) * th.sin().powi(n as i32 - 2));
        }
    }
    // ∫_0^π sin^{n-2} θ dθ = √π Γ((n-1)/2) / Γ(n/2)
    let h = n as f64 / 2.0;
    let total = (0.5 * pi.ln() + ln_gamma(h - 0.5).expect("positive") - ln_gamma(h).expect("positive")).exp();
    let mut nodes = Vec::with_capacity(thetas.len() * n);
    for &th in &thetas {
        nodes.push(th.cos());
        nodes.push(th.sin());
        nodes.extend(std::iter::repeat_n(0.0, n - 2));
    }
    (nodes, raw.into_iter().map(|w| w / total).collect())
}

/// Haar-random orthogonal matrix (row-major) from Gram-Schmidt on a
/// Gaussian matrix.
pub fn random_rotation(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        loop {
            let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            for _ in 0..2 {
                for j in 0..i {
                    let row = &q[j * n..(j + 1) * n];
                    let d: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
                    for (vk, rk) in v.iter_mut().zip(row) {
                        *vk -= d * rk;
                    }
                }
            }
            let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if r > 1e-6 {
                q[i * n..(i + 1) * n].iter_mut().zip(&v).for_each(|(a, b)| *a = b / r);
                break;
            }
        }
    }
    q
}

fn apply_rotation(q: &[f64], n: usize, nodes: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(nodes.len());
    for x in nodes.chunks_exact(n) {
        for i in 0..n {
            out.push((0..n).map(|j| q[i * n + j] * x[j]).sum());
        }
    }
    out
}

/// Rule for the normalized surface measure `σ`.
pub fn build_sphere_rule(n: usize, order: usize, scheme: SphereScheme, seed: u64) -> Result<QuadratureRule> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("dimension n = {n} must be at least 2")));
    }
    if order < 4 {
        return Err(Error::InvalidParams(format!("sphere order must be at least 4, got {order}")));
    }
    let (nodes, weights) = match scheme {
        SphereScheme::Axial => axial_nodes(n, order),
        SphereScheme::AxialGraded => graded_axial_nodes(n, order),
        SphereScheme::Full if n <= 3 => sphere_product_nodes(n, order),
        SphereScheme::Full => {
            let (base, bw) = sphere_product_nodes(n, order);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut nodes = Vec::with_capacity(base.len() * SPHERE_ROTATIONS);
            let mut weights = Vec::with_capacity(bw.len() * SPHERE_ROTATIONS);
            for _ in 0..SPHERE_ROTATIONS {
                let q = random_rotation(n, &mut rng);
                nodes.extend(apply_rotation(&q, n, &base));
                weights.extend(bw.iter().map(|w| w / SPHERE_ROTATIONS as f64));
            }
            (nodes, weights)
        }
    };
    Ok(QuadratureRule {
        format_version: RULE_FORMAT_VERSION,
        tag: MeasureTag::SphereSigma,
        spec: RuleSpec { n, radial_order: 0, sphere_order: order, clustering: 1.0, scheme, seed },
        nodes,
        weights,
    })
}

/// Product rule on the ball for a tagged measure.
pub fn build_ball_rule(params: &Params, split: &RadialSplit, tag: MeasureTag) -> Result<QuadratureRule> {
    build_ball_rule_with(params.n, split, tag, SphereScheme::Full, 0)
}

pub fn build_ball_rule_with(
    n: usize,
    split: &RadialSplit,
    tag: MeasureTag,
    scheme: SphereScheme,
    seed: u64,
) -> Result<QuadratureRule> {
    let radial = build_radial_rule(n, split, tag)?;
    let sphere = build_sphere_rule(n, split.sphere_order, scheme, seed)?;
    let (_, cluster_beta, _) = tag.radial_weight(n)?;
    let kappa = split.clustering.unwrap_or_else(|| auto_clustering(cluster_beta));
    let mut nodes = Vec::with_capacity(radial.nodes.len() * sphere.nodes.len());
    let mut weights = Vec::with_capacity(radial.nodes.len() * sphere.weights.len());
    for (&r, &wr) in radial.nodes.iter().zip(&radial.weights) {
        for (xi, &ws) in sphere.nodes.chunks_exact(n).zip(&sphere.weights) {
            nodes.extend(xi.iter().map(|c| r * c));
            weights.push(wr * ws);
        }
    }
    Ok(QuadratureRule {
        format_version: RULE_FORMAT_VERSION,
        tag,
        spec: RuleSpec { n, radial_order: split.radial_order, sphere_order: split.sphere_order, clustering: kappa, scheme, seed },
        nodes,
        weights,
    })
}

/// Rule for `(1 - |x|^2)^{pm-n} dv`, the measure of the Besov seminorm.
pub fn besov_rule(params: &Params, split: &RadialSplit) -> Result<QuadratureRule> {
    let beta = params.besov_weight_exponent();
    if !(beta > -1.0) {
        return Err(Error::Domain(format!("pm - n = {beta} must exceed -1")));
    }
    build_ball_rule(params, split, MeasureTag::WeightedDvBeta { beta })
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        self.spec.n
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let n = self.spec.n;
        &self.nodes[i * n..(i + 1) * n]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.nodes.chunks_exact(self.spec.n)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        crate::sum::compensated_sum(&self.weights)
    }

    /// The same rule with every node mapped by the orthogonal matrix `q`.
    pub fn rotated(&self, q: &[f64]) -> Self {
        let mut out = self.clone();
        out.nodes = apply_rotation(q, self.spec.n, &self.nodes);
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rule: Self = serde_json::from_str(s)?;
        rule.check_loaded()?;
        Ok(rule)
    }

    /// Binary layout: magic, `u32` version, `u32` header length, JSON
    /// header (tag and spec), `u64` count, then nodes and weights as
    /// little-endian `f64`.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        let header = serde_json::to_vec(&(self.tag, self.spec))?;
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&RULE_FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        w.write_all(&(self.weights.len() as u64).to_le_bytes())?;
        for v in self.nodes.iter().chain(&self.weights) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Format("not a quadrature rule file".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != RULE_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported rule format version {version}")));
        }
        r.read_exact(&mut b4)?;
        let mut header = vec![0u8; u32::from_le_bytes(b4) as usize];
        r.read_exact(&mut header)?;
        let (tag, spec): (MeasureTag, RuleSpec) = serde_json::from_slice(&header)?;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let count = u64::from_le_bytes(b8) as usize;
        let mut read_f64s = |len: usize| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                r.read_exact(&mut b8)?;
                out.push(f64::from_le_bytes(b8));
            }
            Ok(out)
        };
        let nodes = read_f64s(count * spec.n)?;
        let weights = read_f64s(count)?;
        let rule = Self { format_version: version, tag, spec, nodes, weights };
        rule.check_loaded()?;
        Ok(rule)
    }

    fn check_loaded(&self) -> Result<()> {
        if self.format_version != RULE_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported rule format version {}", self.format_version)));
        }
        if self.nodes.len() != self.weights.len() * self.spec.n {
            return Err(Error::Format("node and weight counts disagree".into()));
        }
        Ok(())
    }
}

/// `Σ w_i f(node_i)` with compensated summation in node order.
pub fn integrate(rule: &QuadratureRule, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for (i, (x, &w)) in rule.nodes().zip(rule.weights()).enumerate() {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::Evaluation { index: i, coords: x.to_vec() });
        }
        acc.add(w * v);
    }
    Ok(acc.value())
}

/// As [`integrate`] with node evaluations in parallel; the reduction order
/// is the node order, so results match the sequential version bit for bit.
pub fn integrate_par(rule: &QuadratureRule, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<f64> {
    let n = rule.dim();
    let values: Vec<f64> = rule.nodes.par_chunks_exact(n).map(&f).collect();
    let mut acc = CompensatedSum::new();
    for (i, (v, &w)) in values.iter().zip(rule.weights()).enumerate() {
        if !v.is_finite() {
            return Err(Error::Evaluation { index: i, coords: rule.node(i).to_vec() });
        }
        acc.add(w * v);
    }
    Ok(acc.value())
}

/// `(∫ |f|^p dμ)^{1/p}` for the rule's measure.
pub fn lp_norm(rule: &QuadratureRule, f: impl Fn(&[f64]) -> f64, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("L^p norms need p >= 1, got {p}")));
    }
    Ok(integrate(rule, |x| f(x).abs().powf(p))?.powf(1.0 / p))
}

/// `|∂^m f(x)| = Σ_{|k|=m} |∂^k f(x)|`.
pub fn l1_derivative_magnitude(params: &Params, f_partials: impl Fn(&MultiIndex, &[f64]) -> f64, x: &[f64]) -> f64 {
    params.multi_indices().iter().map(|k| f_partials(k, x).abs()).sum()
}

/// `(∫_B (1 - |x|^2)^{pm} |∂^m f|^p dτ)^{1/p}` on a rule for `dv_{pm-n}`.
pub fn besov_seminorm(
    params: &Params,
    f_partials: impl Fn(&MultiIndex, &[f64]) -> f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    params.require_besov_admissible()?;
    let beta = params.besov_weight_exponent();
    if !(beta > -1.0) {
        return Err(Error::Domain(format!("pm - n = {beta} must exceed -1")));
    }
    match rule.tag {
        MeasureTag::WeightedDvBeta { beta: b } if (b - beta).abs() <= 1e-12 => {}
        other => {
            return Err(Error::InvalidParams(format!("Besov seminorm needs a dv_(pm-n) rule with exponent {beta}, got {other:?}")))
        }
    }
    let ks = params.multi_indices();
    let total = integrate(rule, |x| {
        let mag: f64 = ks.iter().map(|k| f_partials(k, x).abs()).sum();
        mag.powf(params.p)
    })?;
    Ok(total.powf(1.0 / params.p))
}

/// Key of a cached rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RuleKey {
    n: usize,
    radial_order: usize,
    sphere_order: usize,
    clustering_bits: Option<u64>,
    tag: String,
    scheme: SphereScheme,
    seed: u64,
}

/// Thread-safe cache of built rules keyed by `(n, orders, tag, seed)`.
#[derive(Debug, Default)]
pub struct RuleCache {
    rules: Mutex<HashMap<RuleKey, Arc<QuadratureRule>>>,
}

impl RuleCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(
        &self,
        n: usize,
        split: &RadialSplit,
        tag: MeasureTag,
        scheme: SphereScheme,
        seed: u64,
    ) -> Result<Arc<QuadratureRule>> {
        let key = RuleKey {
            n,
            radial_order: split.radial_order,
            sphere_order: split.sphere_order,
            clustering_bits: split.clustering.map(f64::to_bits),
            tag: serde_json::to_string(&tag)?,
            scheme,
            seed,
        };
        if let Some(rule) = self.rules.lock().expect("cache lock").get(&key) {
            return Ok(rule.clone());
        }
        let rule = Arc::new(if tag == MeasureTag::SphereSigma {
            build_sphere_rule(n, split.sphere_order, scheme, seed)?
        } else {
            build_ball_rule_with(n, split, tag, scheme, seed)?
        });
        self.rules.lock().expect("cache lock").insert(key, rule.clone());
        Ok(rule)
    }

    pub fn len(&self) -> usize {
        self.rules.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
