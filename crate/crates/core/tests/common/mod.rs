//! Reference formulas and Monte Carlo estimators shared by the integration
//! tests. Nothing here calls into the crate's Hermite or polynomial code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal<R: Rng>(r: &mut R) -> f64 {
    r.sample(StandardNormal)
}

/// Probabilist's Hermite polynomials by the three-term recurrence.
pub fn he(k: usize, z: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, z);
    if k == 0 {
        return p0;
    }
    for n in 1..k {
        let p2 = z * p1 - n as f64 * p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

pub fn he3(z: f64) -> f64 {
    z * z * z - 3.0 * z
}

pub fn he3_d1(z: f64) -> f64 {
    3.0 * z * z - 3.0
}

/// psi for online SGD with sigma = He_3.
pub fn psi_online_he3(y: f64, z: f64) -> f64 {
    y * he3_d1(z)
}

/// psi for alternating SGD with sigma = He_3 and a = 1.
pub fn psi_alternating_he3(eta: f64) -> impl Fn(f64, f64) -> f64 {
    move |y, z| y * he3_d1(z) + eta * y * y * he3(z) * he3_d1(z)
}

/// Batch-reuse surrogate with sigma = He_3:
/// `sum_k (eta d)^{k-1} / (k-1)! sigma^{(k)} sigma'^{k-1} y^k` for k = 1, 2, 3.
pub fn psi_batch_surrogate_he3(eta: f64, d: usize) -> impl Fn(f64, f64) -> f64 {
    let ed = eta * d as f64;
    move |y, z| {
        let s1 = he3_d1(z);
        let s2 = 6.0 * z;
        let s3 = 6.0;
        y * s1 + ed * s2 * s1 * y * y + ed * ed / 2.0 * s3 * s1 * s1 * y * y * y
    }
}

/// Three-layer alternating update with sigma(z) = z^2 and unit layer
/// scalars, expanded by hand: `4 y z^3 (1 + 2 eta y z^4)(1 + eta y z^4)`.
pub fn psi_deep3_square(eta: f64) -> impl Fn(f64, f64) -> f64 {
    move |y, z| {
        let z4 = z.powi(4);
        4.0 * y * z.powi(3) * (1.0 + 2.0 * eta * y * z4) * (1.0 + eta * y * z4)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.se + 1e-12 * (1.0 + target.abs())
    }
}

#[derive(Default, Clone, Copy)]
pub struct Running {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Running {
    pub fn push(&mut self, v: f64) {
        self.n += 1.0;
        let delta = v - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (v - self.mean);
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean,
            se: (self.m2 / (self.n - 1.0) / self.n).sqrt(),
        }
    }
}

/// Monte Carlo estimates of `E[psi(link(a) + tau xi, b) He_i(a) He_{i-1}(b)]`
/// for `i = 1..=r` with independent standard normals `a, b, xi`.
pub fn mc_mu<L, P>(link: L, psi: P, tau: f64, r: usize, draws: usize, seed: u64) -> Vec<Estimate>
where
    L: Fn(f64) -> f64,
    P: Fn(f64, f64) -> f64,
{
    let mut g = rng(seed);
    let mut acc = vec![Running::default(); r];
    for _ in 0..draws {
        let a: f64 = normal(&mut g);
        let b: f64 = normal(&mut g);
        let xi: f64 = normal(&mut g);
        let v = psi(link(a) + tau * xi, b);
        for (j, s) in acc.iter_mut().enumerate() {
            let i = j + 1;
            s.push(v * he(i, a) * he(i - 1, b));
        }
    }
    acc.iter().map(|s| s.estimate()).collect()
}

/// Monte Carlo estimate of `E[<theta, g>]` with `theta = e_1`,
/// `w = kappa e_1 + sqrt(1 - kappa^2) e_2` and noiseless labels. `raw` maps
/// `(x, y)` to `<theta, g>` for `x` in the plane of `theta` and `w`.
pub fn mc_drift_raw<L, F>(link: L, mut raw: F, draws: usize, seed: u64) -> Estimate
where
    L: Fn(f64) -> f64,
    F: FnMut(&[f64; 2], f64) -> f64,
{
    let mut g = rng(seed);
    let mut acc = Running::default();
    for _ in 0..draws {
        let x = [normal(&mut g), normal(&mut g)];
        acc.push(raw(&x, link(x[0])));
    }
    acc.estimate()
}

/// [`mc_drift_raw`] for an update `psi(y, <x, w>) P_w x`.
pub fn mc_drift<L, P>(link: L, psi: P, kappa: f64, draws: usize, seed: u64) -> Estimate
where
    L: Fn(f64) -> f64,
    P: Fn(f64, f64) -> f64,
{
    let s = (1.0 - kappa * kappa).sqrt();
    mc_drift_raw(
        link,
        |x, y| {
            let z = kappa * x[0] + s * x[1];
            psi(y, z) * (x[0] - kappa * z)
        },
        draws,
        seed,
    )
}

/// Gauss quadrature for the standard normal from the eigen-decomposition of
/// the probabilists' Jacobi matrix (off-diagonal `sqrt(k)`).
pub fn normal_quadrature(n: usize) -> (Vec<f64>, Vec<f64>) {
    let j = nalgebra::DMatrix::from_fn(n, n, |r, c| {
        if r + 1 == c || c + 1 == r {
            (r.max(c) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = nalgebra::SymmetricEigen::new(j);
    let weights = (0..n).map(|k| eig.eigenvectors[(0, k)].powi(2)).collect();
    (eig.eigenvalues.iter().copied().collect(), weights)
}

/// `E[f(a, b, xi)]` for independent standard normals, exact for polynomials
/// of per-variable degree below `2n`.
pub fn expect3<F: Fn(f64, f64, f64) -> f64>(f: F, n: usize) -> f64 {
    let (x, w) = normal_quadrature(n);
    let mut s = 0.0;
    for (a, wa) in x.iter().zip(&w) {
        for (b, wb) in x.iter().zip(&w) {
            for (c, wc) in x.iter().zip(&w) {
                s += wa * wb * wc * f(*a, *b, *c);
            }
        }
    }
    s
}

/// Exact standard error of the [`mc_mu`] estimator of `mu_i` with `draws`
/// samples, for polynomial `psi` and `link`.
pub fn mc_mu_exact_se<L, P>(link: L, psi: P, tau: f64, i: usize, draws: usize) -> f64
where
    L: Fn(f64) -> f64,
    P: Fn(f64, f64) -> f64,
{
    let x = |a: f64, b: f64, xi: f64| psi(link(a) + tau * xi, b) * he(i, a) * he(i - 1, b);
    let m1 = expect3(&x, 40);
    let m2 = expect3(|a, b, xi| x(a, b, xi).powi(2), 40);
    ((m2 - m1 * m1).max(0.0) / draws as f64).sqrt()
}
