//! Probability measures on the unit circle and the inner product
//! ⟨f,g⟩ = ∫ conj(f) g dμ behind every orthogonalization.
//!
//! Discrete measures are first-class: they make every integral a finite sum,
//! so orthogonality and quadrature exactness can be checked without any
//! discretization error.  Density grids cover smooth-measure demos; their
//! integrals use the trapezoid rule on the periodic grid, which is spectrally
//! accurate there.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::ratfun::RationalFunction;
use crate::{Error, Result};

/// A normalized positive measure on the unit circle.
#[derive(Clone, Debug)]
pub enum Measure {
    /// Point masses Σ m_i δ_{t_i} with t_i on the circle.
    Discrete { nodes: Vec<Complex64>, masses: Vec<f64> },
    /// Density samples w(θ_k) on the uniform grid θ_k = 2πk/M, integrated as
    /// (1/M) Σ w(θ_k) f(e^{iθ_k}).
    DensityGrid { weights: Vec<f64> },
}

impl Measure {
    /// Point-mass measure.  Nodes must sit on the circle within 1e-12 and
    /// masses must be strictly positive; masses are normalized to sum 1.
    pub fn discrete(nodes: Vec<Complex64>, masses: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != masses.len() {
            return Err(Error::BadInput(format!(
                "{} nodes but {} masses",
                nodes.len(),
                masses.len()
            )));
        }
        for (i, t) in nodes.iter().enumerate() {
            if (t.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::BadInput(format!(
                    "node {} is off the unit circle (|t| = {})",
                    i,
                    t.norm()
                )));
            }
        }
        if masses.iter().any(|&m| m <= 0.0) {
            return Err(Error::BadInput("all masses must be positive".into()));
        }
        let total: f64 = masses.iter().sum();
        let masses = masses.iter().map(|m| m / total).collect();
        Ok(Measure::Discrete { nodes, masses })
    }

    /// Grid measure from density samples.  Values must be nonnegative with
    /// at least 90% strictly positive (the positive-a.e. proxy); they are
    /// normalized so the total mass is 1.
    pub fn density_grid(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::BadInput("empty density grid".into()));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::BadInput("density values must be nonnegative".into()));
        }
        let positive = weights.iter().filter(|&&w| w > 0.0).count();
        if (positive as f64) < 0.9 * weights.len() as f64 {
            return Err(Error::BadInput(format!(
                "only {}/{} density values are positive; need at least 90%",
                positive,
                weights.len()
            )));
        }
        let mean: f64 = weights.iter().sum::<f64>() / weights.len() as f64;
        if mean <= 0.0 {
            return Err(Error::BadInput("density has zero total mass".into()));
        }
        let weights = weights.iter().map(|w| w / mean).collect();
        Ok(Measure::DensityGrid { weights })
    }

    /// Normalized Lebesgue measure sampled on an M-point grid.
    pub fn lebesgue(m: usize) -> Result<Self> {
        Measure::density_grid(vec![1.0; m])
    }

    /// Poisson kernel density (1 - r²)/|e^{iθ} - r e^{iθ_0}|² on an M-point
    /// grid; reduces to Lebesgue for r = 0.  Requires 0 ≤ r < 1.
    pub fn poisson(r: f64, theta0: f64, m: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::BadInput(format!("poisson parameter r = {} not in [0, 1)", r)));
        }
        let pole = Complex64::from_polar(r, theta0);
        let weights = (0..m)
            .map(|k| {
                let theta = std::f64::consts::TAU * k as f64 / m as f64;
                let z = Complex64::from_polar(1.0, theta);
                (1.0 - r * r) / (z - pole).norm_sqr()
            })
            .collect();
        Measure::density_grid(weights)
    }

    /// Seeded random point-mass measure: N nodes uniform on the circle,
    /// masses uniform in [0.1, 1.1) before normalization.  Deterministic for
    /// a fixed seed.
    pub fn random_discrete(seed: u64, n: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = (0..n)
            .map(|_| Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU))
            .collect();
        let masses = (0..n).map(|_| 0.1 + rng.gen::<f64>()).collect();
        Measure::discrete(nodes, masses)
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Measure::Discrete { masses, .. } => masses.iter().sum(),
            Measure::DensityGrid { weights } => {
                weights.iter().sum::<f64>() / weights.len() as f64
            }
        }
    }

    /// Number of support points (grid size for densities).
    pub fn support_size(&self) -> usize {
        match self {
            Measure::Discrete { nodes, .. } => nodes.len(),
            Measure::DensityGrid { weights } => weights.len(),
        }
    }

    /// Distance from z to the support: nearest node for point masses,
    /// distance to the circle for densities (positive a.e. on all of it).
    pub fn distance_to_support(&self, z: Complex64) -> f64 {
        match self {
            Measure::Discrete { nodes, .. } => nodes
                .iter()
                .map(|t| (z - t).norm())
                .fold(f64::INFINITY, f64::min),
            Measure::DensityGrid { .. } => (z.norm() - 1.0).abs(),
        }
    }

    /// ∫ f dμ.
    pub fn integrate<F>(&self, mut f: F) -> Result<Complex64>
    where
        F: FnMut(Complex64) -> Result<Complex64>,
    {
        match self {
            Measure::Discrete { nodes, masses } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (t, m) in nodes.iter().zip(masses) {
                    acc += f(*t)? * m;
                }
                Ok(acc)
            }
            Measure::DensityGrid { weights } => {
                let m = weights.len();
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, w) in weights.iter().enumerate() {
                    let theta = std::f64::consts::TAU * k as f64 / m as f64;
                    acc += f(Complex64::from_polar(1.0, theta))? * w;
                }
                Ok(acc / m as f64)
            }
        }
    }

    /// ⟨f, g⟩ = ∫ conj(f(z)) g(z) dμ(z): conjugate-linear in f, linear in g.
    pub fn inner_product<F, G>(&self, mut f: F, mut g: G) -> Result<Complex64>
    where
        F: FnMut(Complex64) -> Result<Complex64>,
        G: FnMut(Complex64) -> Result<Complex64>,
    {
        self.integrate(|z| Ok(f(z)?.conj() * g(z)?))
    }

    /// Inner product of two rational functions.
    pub fn inner_product_rf(
        &self,
        f: &RationalFunction,
        g: &RationalFunction,
    ) -> Result<Complex64> {
        self.inner_product(|z| f.eval(z), |z| g.eval(z))
    }
}

#[derive(Deserialize)]
pub struct ReIm {
    pub re: f64,
    pub im: f64,
}

/// Serializable measure description accepted by the CLI.
#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeasureSpec {
    Lebesgue {
        #[serde(rename = "M")]
        m: usize,
    },
    Poisson {
        r: f64,
        theta0: f64,
        #[serde(rename = "M")]
        m: usize,
    },
    Discrete {
        nodes: Vec<ReIm>,
        masses: Vec<f64>,
    },
    RandomDiscrete {
        seed: u64,
        #[serde(rename = "N")]
        n: usize,
    },
}

/// Build a measure from its serializable description.
pub fn make_measure(spec: &MeasureSpec) -> Result<Measure> {
    match spec {
        MeasureSpec::Lebesgue { m } => Measure::lebesgue(*m),
        MeasureSpec::Poisson { r, theta0, m } => Measure::poisson(*r, *theta0, *m),
        MeasureSpec::Discrete { nodes, masses } => Measure::discrete(
            nodes.iter().map(|p| Complex64::new(p.re, p.im)).collect(),
            masses.clone(),
        ),
        MeasureSpec::RandomDiscrete { seed, n } => Measure::random_discrete(*seed, *n),
    }
}

/// Parse a measure-spec JSON file.
pub fn parse_measure_file(text: &str) -> Result<Measure> {
    let spec: MeasureSpec =
        serde_json::from_str(text).map_err(|e| Error::BadInput(format!("measure file: {}", e)))?;
    make_measure(&spec)
}
