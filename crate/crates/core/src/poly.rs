//! Dense univariate polynomials in the monomial basis.
//!
//! All activations and link functions in this crate are polynomials, so the
//! products, powers, derivatives and compositions needed to build update
//! oracles are carried out exactly on coefficient vectors.

use std::fmt;

use crate::error::{Error, Result};

/// Largest polynomial degree accepted anywhere in the crate.
pub const MAX_DEGREE: usize = 60;

/// `c_0 + c_1 z + ... + c_q z^q`. Trailing zeros are trimmed on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialPoly {
    coeffs: Vec<f64>,
}

impl MonomialPoly {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let p = Self::from_raw(coeffs);
        p.check_degree()?;
        Ok(p)
    }

    fn from_raw(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    fn check_degree(&self) -> Result<()> {
        if self.degree() > MAX_DEGREE {
            return Err(Error::DegreeOverflow {
                degree: self.degree(),
                max: MAX_DEGREE,
            });
        }
        Ok(())
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_raw(vec![c])
    }

    /// The identity polynomial `z`.
    pub fn identity() -> Self {
        Self {
            coeffs: vec![0.0, 1.0],
        }
    }

    /// `c z^k`.
    pub fn monomial(k: usize, c: f64) -> Result<Self> {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    /// Probabilist's Hermite polynomial `He_k` written in the monomial basis.
    pub fn hermite(k: usize) -> Result<Self> {
        if k > MAX_DEGREE {
            return Err(Error::DegreeOverflow {
                degree: k,
                max: MAX_DEGREE,
            });
        }
        // He_{k+1} = z He_k - k He_{k-1}
        let mut prev = vec![1.0];
        if k == 0 {
            return Ok(Self::from_raw(prev));
        }
        let mut cur = vec![0.0, 1.0];
        for j in 1..k {
            let mut next = vec![0.0; j + 2];
            for (i, c) in cur.iter().enumerate() {
                next[i + 1] += c;
            }
            for (i, c) in prev.iter().enumerate() {
                next[i] -= j as f64 * c;
            }
            prev = cur;
            cur = next;
        }
        Ok(Self::from_raw(cur))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Index of the last nonzero coefficient; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    /// Horner evaluation.
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        Self::from_raw(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_raw(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        let degree = self.degree() + other.degree();
        if degree > MAX_DEGREE && !self.is_zero() && !other.is_zero() {
            return Err(Error::DegreeOverflow {
                degree,
                max: MAX_DEGREE,
            });
        }
        let mut out = vec![0.0; degree + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(Self::from_raw(out))
    }

    pub fn power(&self, k: u32) -> Result<Self> {
        let mut out = Self::constant(1.0);
        for _ in 0..k {
            out = out.multiply(self)?;
        }
        Ok(out)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero();
        }
        Self::from_raw(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| i as f64 * c)
                .collect(),
        )
    }

    /// `k`-th derivative.
    pub fn nth_derivative(&self, k: usize) -> Self {
        (0..k).fold(self.clone(), |p, _| p.derivative())
    }

    /// `self(inner(z))`, by Horner's scheme over polynomials.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        let degree = self.degree() * inner.degree();
        if degree > MAX_DEGREE {
            return Err(Error::DegreeOverflow {
                degree,
                max: MAX_DEGREE,
            });
        }
        let mut acc = Self::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc.multiply(inner)?.add(&Self::constant(c));
        }
        Ok(acc)
    }

    /// Parses `He<k>`, `z`, `z^<k>`, or a comma/space separated list of
    /// monomial coefficients `c_0, c_1, ...`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("he") {
            let k: usize = rest
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad Hermite spec `{s}`")))?;
            return Self::hermite(k);
        }
        if lower == "z" {
            return Ok(Self::identity());
        }
        if let Some(rest) = lower.strip_prefix("z^") {
            let k: usize = rest
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad monomial spec `{s}`")))?;
            return Self::monomial(k, 1.0);
        }
        let coeffs = t
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad coefficient `{p}` in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if coeffs.is_empty() {
            return Err(Error::Parse(format!("empty polynomial spec `{s}`")));
        }
        Self::new(coeffs)
    }
}

impl fmt::Display for MonomialPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|c| format!("{c}")).collect();
        write!(f, "{}", parts.join(","))
    }
}
