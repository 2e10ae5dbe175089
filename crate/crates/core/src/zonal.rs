//! Zonal harmonics `Z_j(x, y)` on `R^n`, the dimension of the degree-`j`
//! spherical harmonics, and exact partial derivatives in `x`.
//!
//! Two evaluation routes are provided. The explicit finite sum
//! `Z_j = (n+2j-2) Σ_i (-1)^i [n(n+2)...(n+2j-2i-4)] / (2^i i! (j-2i)!) (x·ξ)^{j-2i} |x|^{2i}`
//! is used for low degrees. Its monomial coefficients grow roughly like
//! `(1 + √2)^j` while `|Z_j| <= dim H_j`, so above [`EXPLICIT_MAX_DEGREE`]
//! the three-term Gegenbauer (Chebyshev for `n = 2`) recurrence in the
//! pair `(u, ρ) = (x·y, |x|^2 |y|^2)` is used instead. Both routes give the
//! bi-homogeneous extension `Z_j(x, y) = |x|^j |y|^j Z_j(x/|x|, y/|y|)`.

use std::collections::BTreeMap;

use crate::point::{dot, norm_sq, MultiIndex, SpherePoint};

/// Highest degree evaluated through the explicit monomial formula.
pub const EXPLICIT_MAX_DEGREE: usize = 12;

/// Default degree cap of kernel series.
pub const DEFAULT_DEGREE_CAP: usize = 200;

fn binomial_u128(a: i64, b: i64) -> u128 {
    if b < 0 || a < b {
        return 0;
    }
    let b = b.min(a - b) as u128;
    let a = a as u128;
    let mut acc: u128 = 1;
    for i in 0..b {
        acc = acc * (a - i) / (i + 1);
    }
    acc
}

/// `dim H_j(R^n) = C(n+j-1, n-1) - C(n+j-3, n-1)`.
pub fn dim_harmonic(n: usize, j: usize) -> u64 {
    assert!(n >= 2, "dimension must be at least 2");
    let (n, j) = (n as i64, j as i64);
    (binomial_u128(n + j - 1, n - 1) - binomial_u128(n + j - 3, n - 1)) as u64
}

/// Coefficients `c_i` of the explicit formula for one degree, the
/// monomial being `u^{j-2i} ρ^i`.
#[derive(Debug, Clone)]
pub struct ZonalCoefficients {
    pub degree: usize,
    pub coefs: Vec<f64>,
}

impl ZonalCoefficients {
    pub fn new(n: usize, j: usize) -> Self {
        if j == 0 {
            return Self { degree: 0, coefs: vec![1.0] };
        }
        let nf = n as f64;
        // c_0 = (n+2j-2) n (n+2) ... (n+2j-4) / j!
        let mut c0 = (nf + 2.0 * j as f64 - 2.0) / j as f64;
        for l in 0..j - 1 {
            c0 *= (nf + 2.0 * l as f64) / (l + 1) as f64;
        }
        let mut coefs = vec![c0];
        for i in 0..j / 2 {
            let a = (j - 2 * i) as f64;
            let ratio = -a * (a - 1.0) / (2.0 * (i + 1) as f64 * (nf + 2.0 * (j - i) as f64 - 4.0));
            coefs.push(coefs[i] * ratio);
        }
        Self { degree: j, coefs }
    }

    /// `Σ_i c_i u^{j-2i} ρ^i`.
    pub fn eval(&self, u: f64, rho: f64) -> f64 {
        let j = self.degree;
        let mut acc = crate::sum::CompensatedSum::new();
        for (i, &c) in self.coefs.iter().enumerate() {
            acc.add(c * u.powi((j - 2 * i) as i32) * rho.powi(i as i32));
        }
        acc.value()
    }
}

/// Per-dimension coefficient tables for all degrees up to a cap; built once.
#[derive(Debug, Clone)]
pub struct ZonalTable {
    pub n: usize,
    degrees: Vec<ZonalCoefficients>,
}

impl ZonalTable {
    pub fn new(n: usize, max_degree: usize) -> Self {
        Self { n, degrees: (0..=max_degree).map(|j| ZonalCoefficients::new(n, j)).collect() }
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.len() - 1
    }

    pub fn coefficients(&self, j: usize) -> &ZonalCoefficients {
        &self.degrees[j]
    }
}

/// `Z_j(x, y)` by the explicit formula, extended bi-homogeneously.
pub fn zonal_explicit(j: usize, x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    ZonalCoefficients::new(n, j).eval(dot(x, y), norm_sq(x) * norm_sq(y))
}

/// `Z_j(x, y)` by the three-term recurrence, extended bi-homogeneously.
pub fn zonal_recurrence(j: usize, x: &[f64], y: &[f64]) -> f64 {
    let mut rec = ZonalRecurrence::new(x.len(), 0, dot(x, y), norm_sq(x) * norm_sq(y));
    let mut value = 0.0;
    for _ in 0..=j {
        value = rec.next_degree()[0];
    }
    value
}

/// The zonal harmonic `Z_j(x, ξ)` for `x` in `R^n` and `ξ` on the sphere.
pub fn zonal(j: usize, x: &[f64], xi: &SpherePoint) -> f64 {
    zonal_pair(j, x, xi.coords())
}

/// `Z_j(x, y)` for arbitrary `x, y` (bi-homogeneous extension).
pub fn zonal_pair(j: usize, x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    if j <= EXPLICIT_MAX_DEGREE {
        zonal_explicit(j, x, y)
    } else {
        zonal_recurrence(j, x, y)
    }
}

/// Exact partial derivative `∂^k_x Z_j(x, ξ)`.
pub fn zonal_partial(j: usize, k: &MultiIndex, x: &[f64], xi: &SpherePoint) -> f64 {
    zonal_partial_pair(j, k, x, xi.coords())
}

pub fn zonal_partial_pair(j: usize, k: &MultiIndex, x: &[f64], y: &[f64]) -> f64 {
    if k.order() as usize > j {
        return 0.0;
    }
    if j <= EXPLICIT_MAX_DEGREE {
        ZonalPolynomial::new(j, y).derivative(k).eval(x)
    } else {
        zonal_partial_recurrence(j, k, x, y)
    }
}

/// `∂^k_x Z_j(x, y)` through the chain rule in `(u, ρ)` and the
/// differentiated recurrence.
pub fn zonal_partial_recurrence(j: usize, k: &MultiIndex, x: &[f64], y: &[f64]) -> f64 {
    let chain = ChainExpansion::new(k, y);
    let mut rec = ZonalRecurrence::new(x.len(), chain.order(), dot(x, y), norm_sq(x) * norm_sq(y));
    for _ in 0..j {
        rec.next_degree();
    }
    let table = rec.next_degree().to_vec();
    chain.eval(x, &table)
}

/// Sparse polynomial in `n` variables with monomials keyed by exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Self::zero(n);
        if c != 0.0 {
            p.terms.insert(vec![0; n], c);
        }
        p
    }

    /// The linear form `Σ a_l x_l`.
    pub fn linear(a: &[f64]) -> Self {
        let n = a.len();
        let mut p = Self::zero(n);
        for (l, &c) in a.iter().enumerate() {
            if c != 0.0 {
                let mut e = vec![0; n];
                e[l] = 1;
                p.terms.insert(e, c);
            }
        }
        p
    }

    /// `|x|^2`.
    pub fn norm_sq(n: usize) -> Self {
        let ones = vec![1.0; n];
        let mut p = Self::zero(n);
        for l in 0..n {
            let mut e = vec![0; n];
            e[l] = 2;
            p.terms.insert(e, ones[l]);
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *out.terms.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        for (e, c) in &other.terms {
            *self.terms.entry(e.clone()).or_insert(0.0) += s * c;
        }
        self.terms.retain(|_, c| *c != 0.0);
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::constant(self.n, 1.0), |acc, _| acc.mul(self))
    }

    pub fn derivative(&self, k: &MultiIndex) -> Self {
        let mut out = Self::zero(self.n);
        'outer: for (e, &c) in &self.terms {
            let mut coef = c;
            let mut ne = e.clone();
            for (l, &kl) in k.0.iter().enumerate() {
                if ne[l] < kl {
                    continue 'outer;
                }
                for s in 0..kl {
                    coef *= (e[l] - s) as f64;
                }
                ne[l] -= kl;
            }
            *out.terms.entry(ne).or_insert(0.0) += coef;
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = crate::sum::CompensatedSum::new();
        for (e, &c) in &self.terms {
            let mono: f64 = e.iter().zip(x).map(|(&p, &xv)| xv.powi(p as i32)).product();
            acc.add(c * mono);
        }
        acc.value()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }
}

/// Monomial expansion of `x ↦ Z_j(x, y)` for a fixed `y`.
#[derive(Debug, Clone)]
pub struct ZonalPolynomial {
    pub degree: usize,
    poly: Polynomial,
}

impl ZonalPolynomial {
    pub fn new(j: usize, y: &[f64]) -> Self {
        let n = y.len();
        let coeffs = ZonalCoefficients::new(n, j);
        let lin = Polynomial::linear(y);
        let ysq = norm_sq(y);
        let rho = {
            let mut p = Polynomial::zero(n);
            p.add_scaled(&Polynomial::norm_sq(n), ysq);
            p
        };
        let mut poly = Polynomial::zero(n);
        for (i, &c) in coeffs.coefs.iter().enumerate() {
            let term = lin.pow((j - 2 * i) as u32).mul(&rho.pow(i as u32));
            poly.add_scaled(&term, c);
        }
        Self { degree: j, poly }
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn derivative(&self, k: &MultiIndex) -> Polynomial {
        self.poly.derivative(k)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.poly.eval(x)
    }
}

/// One term `coef · x^β · ∂_u^a ∂_ρ^b F` of the chain-rule expansion of
/// `∂^k_x F(x·y, |x|^2 |y|^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTerm {
    pub coef: f64,
    pub x_power: Vec<u32>,
    pub du: u32,
    pub drho: u32,
}

/// Chain-rule expansion of `∂^k_x` applied to a function of
/// `u = x·y` and `ρ = |x|^2 |y|^2`, for a fixed `y`.
#[derive(Debug, Clone)]
pub struct ChainExpansion {
    order: u32,
    terms: Vec<ChainTerm>,
}

impl ChainExpansion {
    pub fn new(k: &MultiIndex, y: &[f64]) -> Self {
        let n = y.len();
        let ysq2 = 2.0 * norm_sq(y);
        let mut terms: BTreeMap<(Vec<u32>, u32, u32), f64> = BTreeMap::new();
        terms.insert((vec![0; n], 0, 0), 1.0);
        for axis in k.axes() {
            let mut next: BTreeMap<(Vec<u32>, u32, u32), f64> = BTreeMap::new();
            for ((beta, a, b), c) in terms {
                if beta[axis] > 0 {
                    let mut nb = beta.clone();
                    nb[axis] -= 1;
                    *next.entry((nb, a, b)).or_insert(0.0) += c * beta[axis] as f64;
                }
                if y[axis] != 0.0 {
                    *next.entry((beta.clone(), a + 1, b)).or_insert(0.0) += c * y[axis];
                }
                let mut nb = beta;
                nb[axis] += 1;
                *next.entry((nb, a, b + 1)).or_insert(0.0) += c * ysq2;
            }
            next.retain(|_, c| *c != 0.0);
            terms = next;
        }
        let terms = terms
            .into_iter()
            .map(|((x_power, du, drho), coef)| ChainTerm { coef, x_power, du, drho })
            .collect();
        Self { order: k.order(), terms }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn terms(&self) -> &[ChainTerm] {
        &self.terms
    }

    /// Evaluate with `table[a * (order + 1) + b] = ∂_u^a ∂_ρ^b F`.
    pub fn eval(&self, x: &[f64], table: &[f64]) -> f64 {
        let stride = self.order as usize + 1;
        let mut acc = crate::sum::CompensatedSum::new();
        for t in &self.terms {
            let mono: f64 = t.x_power.iter().zip(x).map(|(&p, &xv)| xv.powi(p as i32)).product();
            acc.add(t.coef * mono * table[t.du as usize * stride + t.drho as usize]);
        }
        acc.value()
    }
}

/// Degree-by-degree evaluation of `Z_j` and its `(u, ρ)` partial
/// derivatives up to total order `order`, by the three-term recurrence
///
/// `(j+1) S_{j+1} = 2(j+λ) u S_j - (j+2λ-1) ρ S_{j-1}`, `λ = (n-2)/2`,
/// with `Z_j = (j+λ)/λ · S_j` (and the Chebyshev form `Z_j = 2 S_j` for `n = 2`).
#[derive(Debug, Clone)]
pub struct ZonalRecurrence {
    n: usize,
    order: usize,
    u: f64,
    rho: f64,
    j: usize,
    s_prev: Vec<f64>,
    s_cur: Vec<f64>,
    out: Vec<f64>,
}

impl ZonalRecurrence {
    pub fn new(n: usize, order: u32, u: f64, rho: f64) -> Self {
        let order = order as usize;
        let size = (order + 1) * (order + 1);
        Self {
            n,
            order,
            u,
            rho,
            j: 0,
            s_prev: vec![0.0; size],
            s_cur: vec![0.0; size],
            out: vec![0.0; size],
        }
    }

    fn idx(&self, a: usize, b: usize) -> usize {
        a * (self.order + 1) + b
    }

    /// Degree of the table returned by the next call.
    pub fn degree(&self) -> usize {
        self.j
    }

    /// Advance one degree and return the table of `∂_u^a ∂_ρ^b Z_j`.
    pub fn next_degree(&mut self) -> &[f64] {
        let j = self.j;
        let lambda = (self.n as f64 - 2.0) / 2.0;
        let o = self.order;
        if j == 0 {
            self.s_cur.iter_mut().for_each(|v| *v = 0.0);
            self.s_cur[0] = 1.0;
        } else if j == 1 {
            std::mem::swap(&mut self.s_prev, &mut self.s_cur);
            self.s_cur.iter_mut().for_each(|v| *v = 0.0);
            let lead = if self.n == 2 { 1.0 } else { 2.0 * lambda };
            self.s_cur[0] = lead * self.u;
            if o >= 1 {
                let i = self.idx(1, 0);
                self.s_cur[i] = lead;
            }
        } else {
            // s_cur holds S_{j-1}, s_prev holds S_{j-2}
            let jm = (j - 1) as f64;
            let (c1, c2, denom) = if self.n == 2 {
                (2.0, 1.0, 1.0)
            } else {
                (2.0 * (jm + lambda), jm + 2.0 * lambda - 1.0, jm + 1.0)
            };
            let mut next = vec![0.0; self.s_cur.len()];
            for a in 0..=o {
                for b in 0..=(o - a) {
                    let mut v = c1 * self.u * self.s_cur[self.idx(a, b)]
                        - c2 * self.rho * self.s_prev[self.idx(a, b)];
                    if a > 0 {
                        v += c1 * a as f64 * self.s_cur[self.idx(a - 1, b)];
                    }
                    if b > 0 {
                        v -= c2 * b as f64 * self.s_prev[self.idx(a, b - 1)];
                    }
                    next[self.idx(a, b)] = v / denom;
                }
            }
            self.s_prev = std::mem::replace(&mut self.s_cur, next);
        }
        let scale = if j == 0 {
            1.0
        } else if self.n == 2 {
            2.0
        } else {
            (j as f64 + lambda) / lambda
        };
        for (o, s) in self.out.iter_mut().zip(&self.s_cur) {
            *o = scale * s;
        }
        self.j += 1;
        &self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = norm_sq(&v).sqrt();
            if r > 0.1 && r < 1.0 {
                return v.iter().map(|c| c / r).collect();
            }
        }
    }

    fn random_ball(rng: &mut ChaCha8Rng, n: usize, rmax: f64) -> Vec<f64> {
        let xi = random_unit(rng, n);
        let r = rng.random_range(0.0..rmax);
        xi.iter().map(|c| c * r).collect()
    }

    /// Rank of the Laplacian from degree-j to degree-(j-2) homogeneous
    /// polynomials, by Gaussian elimination.
    fn dim_by_nullspace(n: usize, j: usize) -> usize {
        fn monomials(n: usize, d: u32) -> Vec<Vec<u32>> {
            MultiIndex::all_of_order(n, d).into_iter().map(|k| k.0).collect()
        }
        let cols = monomials(n, j as u32);
        if j < 2 {
            return cols.len();
        }
        let rows = monomials(n, j as u32 - 2);
        let mut mat = vec![vec![0.0; cols.len()]; rows.len()];
        for (ci, e) in cols.iter().enumerate() {
            for l in 0..n {
                if e[l] >= 2 {
                    let mut t = e.clone();
                    t[l] -= 2;
                    let ri = rows.iter().position(|r| *r == t).unwrap();
                    mat[ri][ci] += (e[l] * (e[l] - 1)) as f64;
                }
            }
        }
        let mut rank = 0;
        let mut col = 0;
        while rank < mat.len() && col < cols.len() {
            let piv = (rank..mat.len()).max_by(|&a, &b| mat[a][col].abs().total_cmp(&mat[b][col].abs())).unwrap();
            if mat[piv][col].abs() < 1e-9 {
                col += 1;
                continue;
            }
            mat.swap(rank, piv);
            for r in 0..mat.len() {
                if r != rank {
                    let f = mat[r][col] / mat[rank][col];
                    for c in 0..cols.len() {
                        mat[r][c] -= f * mat[rank][c];
                    }
                }
            }
            rank += 1;
            col += 1;
        }
        cols.len() - rank
    }

    #[test]
    fn dimension_examples() {
        for n in 2..=6 {
            assert_eq!(dim_harmonic(n, 0), 1);
        }
        assert_eq!(dim_harmonic(3, 2), 5);
        for j in 1..50 {
            assert_eq!(dim_harmonic(2, j), 2);
        }
    }

    #[test]
    fn dimension_matches_laplacian_nullspace() {
        for n in 2..=5 {
            for j in 0..=6 {
                assert_eq!(dim_harmonic(n, j) as usize, dim_by_nullspace(n, j), "n={n} j={j}");
            }
        }
    }

    #[test]
    fn low_degree_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=5 {
            let xi = SpherePoint::normalize(&random_unit(&mut rng, n)).unwrap();
            let x = random_ball(&mut rng, n, 1.0);
            assert_eq!(zonal(0, &x, &xi), 1.0);
            assert_relative_eq!(zonal(1, &x, &xi), n as f64 * dot(&x, xi.coords()), max_relative = 1e-13);
        }
    }

    #[test]
    fn diagonal_equals_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=6 {
            let xi = SpherePoint::normalize(&random_unit(&mut rng, n)).unwrap();
            for j in 0..=40 {
                let z = zonal(j, xi.coords(), &xi);
                assert_relative_eq!(z, dim_harmonic(n, j) as f64, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn explicit_and_recurrence_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=6 {
            for _ in 0..10 {
                let x = random_ball(&mut rng, n, 1.0);
                let y = random_ball(&mut rng, n, 1.0);
                for j in 0..=EXPLICIT_MAX_DEGREE {
                    let e = zonal_explicit(j, &x, &y);
                    let r = zonal_recurrence(j, &x, &y);
                    let scale = dim_harmonic(n, j) as f64 * (norm_sq(&x) * norm_sq(&y)).sqrt().powi(j as i32);
                    assert!((e - r).abs() <= 1e-10 * scale.max(1e-300), "n={n} j={j}: {e} vs {r}");
                }
            }
        }
    }

    #[test]
    fn symmetry_and_bound_on_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=5 {
            for _ in 0..20 {
                let a = random_unit(&mut rng, n);
                let b = random_unit(&mut rng, n);
                for j in 0..=30 {
                    let zab = zonal_pair(j, &a, &b);
                    let zba = zonal_pair(j, &b, &a);
                    assert!((zab - zba).abs() <= 1e-12 * dim_harmonic(n, j) as f64);
                    assert!(zab.abs() <= dim_harmonic(n, j) as f64 * (1.0 + 1e-10));
                }
            }
        }
    }

    #[test]
    fn harmonic_in_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = 1e-3;
        for n in 2..=4 {
            let xi = random_unit(&mut rng, n);
            for j in [2usize, 3, 5, 8, 15] {
                let x = random_ball(&mut rng, n, 0.8);
                let z0 = zonal_pair(j, &x, &xi);
                let mut lap = 0.0;
                for l in 0..n {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[l] += h;
                    xm[l] -= h;
                    lap += (zonal_pair(j, &xp, &xi) - 2.0 * z0 + zonal_pair(j, &xm, &xi)) / (h * h);
                }
                assert!(lap.abs() < 1e-6 * (dim_harmonic(n, j) as f64) * (j * j) as f64, "n={n} j={j} lap={lap}");
            }
        }
    }

    #[test]
    fn partial_examples() {
        let n = 3;
        let xi = SpherePoint::normalize(&[0.3, -0.5, 0.8]).unwrap();
        let x = [0.1, 0.2, -0.3];
        assert_eq!(zonal_partial(2, &MultiIndex(vec![1, 1, 1]), &x, &xi), 0.0);
        let d = zonal_partial(1, &MultiIndex::unit(n, 0), &x, &xi);
        assert_relative_eq!(d, n as f64 * xi.coords()[0], max_relative = 1e-14);
    }

    #[test]
    fn second_partials_of_degree_two_match_finite_differences() {
        let n = 3;
        let xi = SpherePoint::normalize(&[0.3, -0.5, 0.8]).unwrap();
        let h = 1e-3;
        for k in MultiIndex::all_of_order(n, 2) {
            let axes = k.axes();
            for x in [[0.1, 0.2, -0.3], [0.5, -0.1, 0.2]] {
                let exact = zonal_partial(2, &k, &x, &xi);
                let f = |dx: f64, dy: f64| {
                    let mut p = x;
                    p[axes[0]] += dx;
                    p[axes[1]] += dy;
                    zonal(2, &p, &xi)
                };
                let fd = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
                assert!((exact - fd).abs() < 1e-8 * exact.abs().max(1.0), "k={k:?}");
            }
            // degree-two second partials are constant
            let a = zonal_partial(2, &k, &[0.1, 0.2, -0.3], &xi);
            let b = zonal_partial(2, &k, &[-0.4, 0.0, 0.6], &xi);
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn chain_rule_route_matches_monomial_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 2..=4 {
            let y = random_ball(&mut rng, n, 1.0);
            let x = random_ball(&mut rng, n, 0.9);
            for m in 0..=3u32 {
                for k in MultiIndex::all_of_order(n, m) {
                    for j in [m as usize, m as usize + 1, 6, 9, 12] {
                        let a = ZonalPolynomial::new(j, &y).derivative(&k).eval(&x);
                        let b = zonal_partial_recurrence(j, &k, &x, &y);
                        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "n={n} j={j} k={k:?}: {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn high_degree_partials_match_finite_differences() {
        let n = 3;
        let y = [0.6, 0.0, 0.8];
        let x = [0.2, -0.3, 0.4];
        let h = 1e-5;
        for j in [20usize, 35] {
            let k = MultiIndex::unit(n, 1);
            let exact = zonal_partial_pair(j, &k, &x, &y);
            let mut xp = x;
            let mut xm = x;
            xp[1] += h;
            xm[1] -= h;
            let fd = (zonal_pair(j, &xp, &y) - zonal_pair(j, &xm, &y)) / (2.0 * h);
            assert!((exact - fd).abs() < 1e-6 * exact.abs().max(1e-3), "j={j}: {exact} vs {fd}");
        }
    }

    #[test]
    fn table_reuses_coefficients() {
        let t = ZonalTable::new(4, 30);
        assert_eq!(t.max_degree(), 30);
        let c = t.coefficients(5);
        let x = [0.1, 0.2, 0.3, 0.1];
        let xi = [0.5, 0.5, 0.5, 0.5];
        assert_relative_eq!(c.eval(dot(&x, &xi), norm_sq(&x)), zonal_explicit(5, &x, &xi), max_relative = 1e-14);
    }
}
