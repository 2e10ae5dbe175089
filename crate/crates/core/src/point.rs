//! Points of the unit ball and sphere, multi-indices, and small vector helpers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SPHERE_TOL: f64 = 1e-12;

/// A point of the open unit ball in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallPoint {
    coords: Vec<f64>,
}

impl BallPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidParams("points need dimension n >= 2".into()));
        }
        let r = norm(&coords);
        if !(r < 1.0) {
            return Err(Error::Domain(format!("|x| = {r} is not inside the open unit ball")));
        }
        Ok(Self { coords })
    }

    /// The point `r e_1`.
    pub fn on_axis(n: usize, r: f64) -> Result<Self> {
        let mut c = vec![0.0; n];
        c[0] = r;
        Self::new(c)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// A point of the unit sphere `S` in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidParams("points need dimension n >= 2".into()));
        }
        let r = norm(&coords);
        if (r - 1.0).abs() > SPHERE_TOL {
            return Err(Error::Domain(format!("|xi| = {r} is not on the unit sphere")));
        }
        Ok(Self { coords })
    }

    /// Radial projection of a nonzero vector onto the sphere.
    pub fn normalize(v: &[f64]) -> Result<Self> {
        let r = norm(v);
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        Ok(Self { coords: v.iter().map(|c| c / r).collect() })
    }

    pub fn e1(n: usize) -> Self {
        let mut c = vec![0.0; n];
        c[0] = 1.0;
        Self { coords: c }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// A multi-index `k = (k_1, ..., k_n)` with order `|k| = sum k_i`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn unit(n: usize, axis: usize) -> Self {
        let mut k = vec![0; n];
        k[axis] = 1;
        Self(k)
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Axes of the derivative, one entry per unit of order, ascending.
    pub fn axes(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(axis, &count)| std::iter::repeat_n(axis, count as usize))
            .collect()
    }

    /// All multi-indices of order `m` in `n` variables, in lexicographically
    /// descending order. There are `C(m + n - 1, m)` of them.
    pub fn all_of_order(n: usize, m: u32) -> Vec<MultiIndex> {
        fn rec(n: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == n {
                prefix.push(left);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for first in (0..=left).rev() {
                prefix.push(first);
                rec(n, left - first, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(n, m, &mut Vec::with_capacity(n), &mut out);
        out
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// Volume of the unit ball, `pi^{n/2} / Γ(n/2 + 1)`.
pub fn ball_volume(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    (half * std::f64::consts::PI.ln() - crate::specfun::ln_gamma(half + 1.0).expect("positive")).exp()
}

/// Surface area of the unit sphere, `n |B|`.
pub fn sphere_area(n: usize) -> f64 {
    n as f64 * ball_volume(n)
}
