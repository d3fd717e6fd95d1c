//! Gaussian single-index teacher and the two-layer student container.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::hermite::double_factorial_odd;
use crate::hermite::factorial;
use crate::poly::MonomialPoly;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseFamily {
    None,
    Gaussian,
    /// Density `exp(-|z| / tau) / (2 tau)`.
    Laplace,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub tau: f64,
}

impl NoiseSpec {
    pub const NONE: NoiseSpec = NoiseSpec {
        family: NoiseFamily::None,
        tau: 0.0,
    };

    pub fn gaussian(tau: f64) -> Self {
        Self {
            family: NoiseFamily::Gaussian,
            tau,
        }
    }

    pub fn laplace(tau: f64) -> Self {
        Self {
            family: NoiseFamily::Laplace,
            tau,
        }
    }

    pub fn parse(family: &str, tau: f64) -> Result<Self> {
        let family = match family.trim().to_ascii_lowercase().as_str() {
            "none" | "" => NoiseFamily::None,
            "gaussian" | "normal" => NoiseFamily::Gaussian,
            "laplace" => NoiseFamily::Laplace,
            other => return Err(Error::Parse(format!("unknown noise family `{other}`"))),
        };
        if !(tau >= 0.0) {
            return Err(Error::InvalidArgument(format!("noise scale must be >= 0, got {tau}")));
        }
        Ok(Self { family, tau })
    }

    pub fn is_none(&self) -> bool {
        self.family == NoiseFamily::None || self.tau == 0.0
    }

    /// `E[zeta^k]`. Both families are symmetric, so odd moments vanish.
    pub fn moment(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if self.is_none() || k % 2 == 1 {
            return 0.0;
        }
        let t = self.tau.powi(k as i32);
        match self.family {
            NoiseFamily::None => 0.0,
            NoiseFamily::Gaussian => t * double_factorial_odd(k / 2),
            NoiseFamily::Laplace => t * factorial(k),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_none() {
            return 0.0;
        }
        match self.family {
            NoiseFamily::None => 0.0,
            NoiseFamily::Gaussian => self.tau * rng.sample::<f64, _>(StandardNormal),
            NoiseFamily::Laplace => {
                let e1: f64 = rng.sample(Exp1);
                let e2: f64 = rng.sample(Exp1);
                self.tau * (e1 - e2)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TeacherSpec {
    pub theta: Vec<f64>,
    pub link: MonomialPoly,
    pub noise: NoiseSpec,
}

impl TeacherSpec {
    pub fn new(theta: Vec<f64>, link: MonomialPoly, noise: NoiseSpec) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let norm = dot(&theta, &theta).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "theta_star must be a unit vector, has norm {norm}"
            )));
        }
        Ok(Self { theta, link, noise })
    }

    /// Teacher with `theta_star = e_1`.
    pub fn canonical(d: usize, link: MonomialPoly, noise: NoiseSpec) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let mut theta = vec![0.0; d];
        theta[0] = 1.0;
        Self::new(theta, link, noise)
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Draws `x ~ N(0, I_d)` into `x` and returns its label.
    pub fn fill_sample<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut [f64]) -> f64 {
        for v in x.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        self.link.eval(dot(x, &self.theta)) + self.noise.sample(rng)
    }

    pub fn draw_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample {
        let mut x = vec![0.0; self.dim()];
        let y = self.fill_sample(rng, &mut x);
        Sample { x, y }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitMode {
    UniformSphere,
    /// Alignment with the anchor direction fixed at `d^{-1/2}`, the rest uniform
    /// on the orthogonal sphere of radius `sqrt(1 - 1/d)`.
    PinnedAlignment,
}

impl InitMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" | "uniform_sphere" => Ok(Self::UniformSphere),
            "pinned" | "pinned_alignment" => Ok(Self::PinnedAlignment),
            other => Err(Error::Parse(format!("unknown init mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Neuron {
    pub w: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    pub neurons: Vec<Neuron>,
    pub activation: MonomialPoly,
}

impl NetworkSpec {
    pub fn width(&self) -> usize {
        self.neurons.len()
    }

    pub fn dim(&self) -> usize {
        self.neurons.first().map_or(0, |n| n.w.len())
    }

    /// `(1/N) sum_j a_j sigma(<x, w_j> + b_j)`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let n = self.width() as f64;
        self.neurons
            .iter()
            .map(|nr| nr.a * self.activation.eval(dot(x, &nr.w) + nr.b))
            .sum::<f64>()
            / n
    }
}

/// Builds `n_neurons` unit rows with `a = 1`, `b = 0`. Pinned mode pins the
/// alignment with `anchor`.
pub fn init_network<R: Rng + ?Sized>(
    anchor: &[f64],
    n_neurons: usize,
    activation: MonomialPoly,
    mode: InitMode,
    rng: &mut R,
) -> Result<NetworkSpec> {
    let d = anchor.len();
    if d < 2 {
        return Err(Error::InvalidArgument(format!("dimension must be >= 2, got {d}")));
    }
    if n_neurons == 0 {
        return Err(Error::InvalidArgument("network needs at least one neuron".into()));
    }
    let neurons = (0..n_neurons)
        .map(|_| {
            let w = match mode {
                InitMode::UniformSphere => uniform_sphere(d, rng),
                InitMode::PinnedAlignment => pinned(anchor, rng),
            };
            Neuron { w, a: 1.0, b: 0.0 }
        })
        .collect();
    Ok(NetworkSpec {
        neurons,
        activation,
    })
}

pub fn uniform_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&g, &g).sqrt();
        if norm > 0.0 {
            g.iter_mut().for_each(|v| *v /= norm);
            return g;
        }
    }
}

fn pinned<R: Rng + ?Sized>(anchor: &[f64], rng: &mut R) -> Vec<f64> {
    let d = anchor.len();
    let kappa0 = 1.0 / (d as f64).sqrt();
    let radius = (1.0 - 1.0 / d as f64).sqrt();
    loop {
        let mut u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let c = dot(&u, anchor);
        u.iter_mut().zip(anchor).for_each(|(v, t)| *v -= c * t);
        let norm = dot(&u, &u).sqrt();
        if norm > 0.0 {
            return u
                .iter()
                .zip(anchor)
                .map(|(v, t)| kappa0 * t + radius * v / norm)
                .collect();
        }
    }
}

/// `kappa_j = <theta_star, w_j>` per neuron.
pub fn alignment(net: &NetworkSpec, teacher: &TeacherSpec) -> Result<Vec<f64>> {
    net.neurons
        .iter()
        .map(|n| {
            if n.w.len() != teacher.dim() {
                Err(Error::DimensionMismatch {
                    expected: teacher.dim(),
                    got: n.w.len(),
                })
            } else {
                Ok(dot(&n.w, &teacher.theta))
            }
        })
        .collect()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    fn he3() -> MonomialPoly {
        MonomialPoly::hermite(3).unwrap()
    }

    #[test]
    fn noiseless_label_is_link_of_projection() {
        let t = TeacherSpec::canonical(4, he3(), NoiseSpec::NONE).unwrap();
        let mut rng = SeedTree::new(1).rng();
        let s = t.draw_sample(&mut rng);
        assert_eq!(s.y, he3().eval(s.x[0]));
        // <x, theta> = 2 gives He_3(2) = 2
        assert_eq!(t.link.eval(2.0), 2.0);
    }

    #[test]
    fn constant_link() {
        let t = TeacherSpec::canonical(3, MonomialPoly::constant(1.0), NoiseSpec::NONE).unwrap();
        let mut rng = SeedTree::new(2).rng();
        for _ in 0..100 {
            assert_eq!(t.draw_sample(&mut rng).y, 1.0);
        }
    }

    #[test]
    fn gaussian_noise_is_centered() {
        let t = TeacherSpec::canonical(2, he3(), NoiseSpec::gaussian(0.5)).unwrap();
        let mut rng = SeedTree::new(3).rng();
        let n = 100_000;
        let mean = (0..n)
            .map(|_| {
                let s = t.draw_sample(&mut rng);
                s.y - he3().eval(s.x[0])
            })
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 4.0 * 0.5 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn noise_moments_match_samples() {
        let mut rng = SeedTree::new(4).rng();
        for spec in [NoiseSpec::gaussian(0.5), NoiseSpec::laplace(0.5)] {
            let n = 200_000;
            let m2 = (0..n).map(|_| spec.sample(&mut rng).powi(2)).sum::<f64>() / n as f64;
            assert!((m2 - spec.moment(2)).abs() < 0.02 * spec.moment(2), "{spec:?} {m2}");
            assert_eq!(spec.moment(3), 0.0);
        }
        assert_eq!(NoiseSpec::gaussian(2.0).moment(4), 3.0 * 16.0);
        assert_eq!(NoiseSpec::laplace(2.0).moment(4), 24.0 * 16.0);
        assert_eq!(NoiseSpec::NONE.moment(2), 0.0);
    }

    #[test]
    fn pinned_init_alignment() {
        let t = TeacherSpec::canonical(25, he3(), NoiseSpec::NONE).unwrap();
        let mut rng = SeedTree::new(5).rng();
        let net = init_network(&t.theta, 3, he3(), InitMode::PinnedAlignment, &mut rng).unwrap();
        for k in alignment(&net, &t).unwrap() {
            assert_eq!(k, 0.2);
        }
        let t50 = TeacherSpec::canonical(50, he3(), NoiseSpec::NONE).unwrap();
        let net = init_network(&t50.theta, 1, he3(), InitMode::PinnedAlignment, &mut rng).unwrap();
        assert!((alignment(&net, &t50).unwrap()[0] - 0.1414).abs() < 1e-4);
    }

    #[test]
    fn rows_are_unit() {
        let t = TeacherSpec::canonical(30, he3(), NoiseSpec::NONE).unwrap();
        let mut rng = SeedTree::new(6).rng();
        for mode in [InitMode::UniformSphere, InitMode::PinnedAlignment] {
            let net = init_network(&t.theta, 10, he3(), mode, &mut rng).unwrap();
            for n in &net.neurons {
                assert!((dot(&n.w, &n.w).sqrt() - 1.0).abs() < 1e-12);
                assert_eq!((n.a, n.b), (1.0, 0.0));
            }
        }
    }

    #[test]
    fn uniform_init_alignment_probability() {
        let d = 1000;
        let t = TeacherSpec::canonical(d, he3(), NoiseSpec::NONE).unwrap();
        let mut rng = SeedTree::new(7).rng();
        let trials = 10_000;
        let thr = 1.0 / (d as f64).sqrt();
        let hits = (0..trials)
            .filter(|_| dot(&uniform_sphere(d, &mut rng), &t.theta) >= thr)
            .count();
        let frac = hits as f64 / trials as f64;
        assert!((0.1..=0.5).contains(&frac), "{frac}");
    }

    #[test]
    fn alignment_edge_cases() {
        let t = TeacherSpec::canonical(3, he3(), NoiseSpec::NONE).unwrap();
        let mk = |w: Vec<f64>| NetworkSpec {
            neurons: vec![Neuron { w, a: 1.0, b: 0.0 }],
            activation: he3(),
        };
        assert_eq!(alignment(&mk(vec![1.0, 0.0, 0.0]), &t).unwrap(), vec![1.0]);
        assert_eq!(alignment(&mk(vec![0.0, 1.0, 0.0]), &t).unwrap(), vec![0.0]);
        assert!(matches!(
            alignment(&mk(vec![1.0, 0.0]), &t),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_inputs() {
        assert!(TeacherSpec::new(vec![1.0, 1.0], he3(), NoiseSpec::NONE).is_err());
        let mut rng = SeedTree::new(8).rng();
        assert!(init_network(&[1.0], 1, he3(), InitMode::UniformSphere, &mut rng).is_err());
        assert!(NoiseSpec::parse("cauchy", 1.0).is_err());
    }
}
