//! Extended complex arithmetic and the elementary Blaschke machinery.
//!
//! Everything downstream is built from the factors defined here: the
//! denominator factors ϖ_j, the Blaschke factors ζ_j with their unimodular
//! constants σ_j, and the finite Blaschke products B_n together with their
//! "dotted" sub-products restricted to one side of the pole sequence.

use std::fmt;

use num_complex::Complex64;
use serde::Deserialize;

use crate::{Error, Result};

/// Poles this close to the unit circle are rejected at construction.
pub const TOL_CIRCLE: f64 = 1e-12;

/// Denominator magnitudes below this count as hitting a pole.
pub const TOL_POLE: f64 = 1e-14;

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// A point of the extended complex plane.
///
/// Infinity is a tagged variant, never an IEEE infinity pair, so the
/// substitution rules (1 - ∞·z is -z, z - ∞ is -1, evaluation at ∞ takes the
/// leading coefficient) are applied symbolically and never breed NaNs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtComplex {
    pub fn finite(re: f64, im: f64) -> Self {
        ExtComplex::Finite(Complex64::new(re, im))
    }

    pub fn zero() -> Self {
        ExtComplex::Finite(Complex64::new(0.0, 0.0))
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtComplex::Infinity)
    }

    pub fn is_zero(self) -> bool {
        matches!(self, ExtComplex::Finite(v) if v.norm() == 0.0)
    }

    pub fn as_finite(self) -> Option<Complex64> {
        match self {
            ExtComplex::Finite(v) => Some(v),
            ExtComplex::Infinity => None,
        }
    }

    /// |z|, with ∞ mapped to `f64::INFINITY`.
    pub fn modulus(self) -> f64 {
        match self {
            ExtComplex::Finite(v) => v.norm(),
            ExtComplex::Infinity => f64::INFINITY,
        }
    }

    /// Reflection in the unit circle, z ↦ 1/conj(z), with 0 ↦ ∞ and ∞ ↦ 0.
    /// An involution.
    pub fn substar(self) -> ExtComplex {
        match self {
            ExtComplex::Infinity => ExtComplex::zero(),
            ExtComplex::Finite(v) if v.norm() == 0.0 => ExtComplex::Infinity,
            ExtComplex::Finite(v) => ExtComplex::Finite(v.conj().inv()),
        }
    }

    /// Strictly inside the open unit disk, staying clear of the circle band.
    pub fn in_disk(self) -> bool {
        match self {
            ExtComplex::Finite(v) => v.norm() < 1.0 - TOL_CIRCLE,
            ExtComplex::Infinity => false,
        }
    }

    /// Within `TOL_CIRCLE` of the unit circle.
    pub fn on_circle(self) -> bool {
        match self {
            ExtComplex::Finite(v) => (v.norm() - 1.0).abs() <= TOL_CIRCLE,
            ExtComplex::Infinity => false,
        }
    }

    /// Strictly outside the closed unit disk (∞ included).
    pub fn in_exterior(self) -> bool {
        match self {
            ExtComplex::Finite(v) => v.norm() > 1.0 + TOL_CIRCLE,
            ExtComplex::Infinity => true,
        }
    }
}

impl From<Complex64> for ExtComplex {
    fn from(v: Complex64) -> Self {
        ExtComplex::Finite(v)
    }
}

impl From<f64> for ExtComplex {
    fn from(v: f64) -> Self {
        ExtComplex::Finite(Complex64::new(v, 0.0))
    }
}

impl fmt::Display for ExtComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtComplex::Finite(v) => write!(f, "{}", v),
            ExtComplex::Infinity => write!(f, "inf"),
        }
    }
}

/// Which role index j plays in the mixed sequence: `A` means γ_j = α_j lies
/// in the disk, `B` means γ_j = β_j = 1/conj(α_j) lies in the exterior.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    A,
    B,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::A => write!(f, "A"),
            Side::B => write!(f, "B"),
        }
    }
}

/// Which of the three pole sequences a space or ORF family is built on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Alpha,
    Beta,
    Gamma,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Alpha => write!(f, "alpha"),
            Kind::Beta => write!(f, "beta"),
            Kind::Gamma => write!(f, "gamma"),
        }
    }
}

/// A pole sequence γ_1..γ_N off the unit circle, stored with the underlying
/// disk sequence α_j and the side flags that say whether γ_j = α_j or
/// γ_j = β_j = 1/conj(α_j).
///
/// Index 0 is implicit: α_0 = 0, β_0 = ∞, and γ_0 is 0 or ∞ according to
/// `gamma0_side`.  Accessors take j in 0..=N with that convention.
#[derive(Clone, Debug)]
pub struct GammaSequence {
    gammas: Vec<ExtComplex>,
    alphas: Vec<Complex64>,
    sides: Vec<Side>,
    gamma0_side: Side,
}

impl GammaSequence {
    /// Build from the mixed sequence itself.  Every pole must stay off the
    /// unit circle; entries in the disk get side `A`, the rest side `B`.
    pub fn from_gammas(gammas: &[ExtComplex], gamma0_side: Side) -> Result<Self> {
        let mut alphas = Vec::with_capacity(gammas.len());
        let mut sides = Vec::with_capacity(gammas.len());
        for (i, &g) in gammas.iter().enumerate() {
            if g.on_circle() {
                return Err(Error::PoleOnCircle {
                    index: i + 1,
                    dist: (g.modulus() - 1.0).abs(),
                });
            }
            if g.in_disk() {
                sides.push(Side::A);
                alphas.push(g.as_finite().expect("disk points are finite"));
            } else {
                sides.push(Side::B);
                alphas.push(match g.substar() {
                    ExtComplex::Finite(a) => a,
                    ExtComplex::Infinity => unreachable!("exterior points reflect into the disk"),
                });
            }
        }
        Ok(GammaSequence {
            gammas: gammas.to_vec(),
            alphas,
            sides,
            gamma0_side,
        })
    }

    /// Build from the disk sequence plus side flags: γ_j = α_j on side `A`,
    /// γ_j = 1/conj(α_j) on side `B`.
    pub fn from_alphas(alphas: &[Complex64], sides: &[Side], gamma0_side: Side) -> Result<Self> {
        if alphas.len() != sides.len() {
            return Err(Error::BadInput(format!(
                "{} alphas but {} side flags",
                alphas.len(),
                sides.len()
            )));
        }
        let mut gammas = Vec::with_capacity(alphas.len());
        for (i, (&a, &s)) in alphas.iter().zip(sides).enumerate() {
            let ea = ExtComplex::Finite(a);
            if ea.on_circle() {
                return Err(Error::PoleOnCircle {
                    index: i + 1,
                    dist: (a.norm() - 1.0).abs(),
                });
            }
            if !ea.in_disk() {
                return Err(Error::BadInput(format!(
                    "alpha {} has modulus {} >= 1; the disk sequence must lie in the open unit disk",
                    i + 1,
                    a.norm()
                )));
            }
            gammas.push(match s {
                Side::A => ea,
                Side::B => ea.substar(),
            });
        }
        Ok(GammaSequence {
            gammas,
            alphas: alphas.to_vec(),
            sides: sides.to_vec(),
            gamma0_side,
        })
    }

    /// Number of poles N (excluding the implicit index 0).
    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn gamma0_side(&self) -> Side {
        self.gamma0_side
    }

    /// γ_j for 0 ≤ j ≤ N (γ_0 is 0 or ∞ per `gamma0_side`).
    pub fn gamma(&self, j: usize) -> ExtComplex {
        if j == 0 {
            match self.gamma0_side {
                Side::A => ExtComplex::zero(),
                Side::B => ExtComplex::Infinity,
            }
        } else {
            self.gammas[j - 1]
        }
    }

    /// α_j for 0 ≤ j ≤ N (α_0 = 0).
    pub fn alpha(&self, j: usize) -> Complex64 {
        if j == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.alphas[j - 1]
        }
    }

    /// β_j = 1/conj(α_j) for 0 ≤ j ≤ N (β_0 = ∞).
    pub fn beta(&self, j: usize) -> ExtComplex {
        ExtComplex::Finite(self.alpha(j)).substar()
    }

    /// Side flag of index j (side of γ_0 for j = 0).
    pub fn side(&self, j: usize) -> Side {
        if j == 0 {
            self.gamma0_side
        } else {
            self.sides[j - 1]
        }
    }

    /// ν_j for the requested sequence kind.
    pub fn nu(&self, j: usize, kind: Kind) -> ExtComplex {
        match kind {
            Kind::Alpha => ExtComplex::Finite(self.alpha(j)),
            Kind::Beta => self.beta(j),
            Kind::Gamma => self.gamma(j),
        }
    }

    /// σ_j, the unimodular constant of the j-th Blaschke factor.  It is the
    /// same whether computed from α_j, β_j, or γ_j.
    pub fn sigma(&self, j: usize) -> Complex64 {
        u_map(ExtComplex::Finite(self.alpha(j)))
    }

    /// Indices 1..=n on side `A` (the set 𝕒_n).
    pub fn indices_a(&self, n: usize) -> Vec<usize> {
        (1..=n).filter(|&j| self.side(j) == Side::A).collect()
    }

    /// Indices 1..=n on side `B` (the set 𝕓_n).
    pub fn indices_b(&self, n: usize) -> Vec<usize> {
        (1..=n).filter(|&j| self.side(j) == Side::B).collect()
    }
}

/// Map onto the unit circle: conj(z)/|z| for z outside {0, ∞}, and 1 on
/// {0, ∞}.  Sends ν_j to its Blaschke constant σ_j.
pub fn u_map(z: ExtComplex) -> Complex64 {
    match z {
        ExtComplex::Infinity => one(),
        ExtComplex::Finite(v) if v.norm() == 0.0 => one(),
        ExtComplex::Finite(v) => v.conj() / v.norm(),
    }
}

/// Which of the two elementary factors to evaluate: `Plain` is the
/// denominator factor ϖ_j, `Star` its reflected partner ϖ_j^* = z·(ϖ_j)_*.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarpiForm {
    Plain,
    Star,
}

/// Elementary denominator factor at a finite point z:
/// plain is 1 - conj(ν)z (or -z when ν = ∞), star is z - ν (or -1 when ν = ∞).
pub fn varpi(nu: ExtComplex, z: Complex64, form: VarpiForm) -> Complex64 {
    match (nu, form) {
        (ExtComplex::Finite(v), VarpiForm::Plain) => one() - v.conj() * z,
        (ExtComplex::Finite(v), VarpiForm::Star) => z - v,
        (ExtComplex::Infinity, VarpiForm::Plain) => -z,
        (ExtComplex::Infinity, VarpiForm::Star) => -one(),
    }
}

/// Blaschke factor ζ(ν, z) = σ·(z - ν)/(1 - conj(ν)z) with σ = u_map(ν).
/// Degenerates to z when ν = 0 and to 1/z when ν = ∞; unimodular on |z| = 1.
pub fn zeta(nu: ExtComplex, z: Complex64) -> Result<Complex64> {
    let den = varpi(nu, z, VarpiForm::Plain);
    if den.norm() <= TOL_POLE {
        return Err(Error::PoleHit { z, denom: den.norm() });
    }
    Ok(u_map(nu) * varpi(nu, z, VarpiForm::Star) / den)
}

/// Values at one point of every Blaschke product attached to the first n
/// poles, together with the unimodular constants.  Empty products are 1.
#[derive(Clone, Copy, Debug)]
pub struct BlaschkeData {
    /// B_n for the mixed sequence: `dbn_a` if side(n) = A, else `dbn_b`
    /// (1 when n = 0).
    pub bn: Complex64,
    /// Dotted product Ḃ_n^α = ∏ ζ_j over j ∈ 𝕒_n.
    pub dbn_a: Complex64,
    /// Dotted product Ḃ_n^β = ∏ ζ_j over j ∈ 𝕓_n.
    pub dbn_b: Complex64,
    /// Full product B_n^α = ∏_{j=1..n} ζ_j^α.
    pub bn_alpha: Complex64,
    /// Full product B_n^β = ∏_{j=1..n} ζ_j^β = 1/B_n^α.
    pub bn_beta: Complex64,
    /// ς_n = ∏_{j=1..n} σ_j.
    pub varsigma: Complex64,
    /// ς̇_n^α = ∏ σ_j over j ∈ 𝕒_n.
    pub dvarsigma_a: Complex64,
    /// ς̇_n^β = ∏ σ_j over j ∈ 𝕓_n.
    pub dvarsigma_b: Complex64,
}

/// Evaluate all Blaschke products of order n at z.  Requires 0 ≤ n ≤ N and
/// z away from the poles of every factor involved.
pub fn blaschke_products(seq: &GammaSequence, n: usize, z: Complex64) -> Result<BlaschkeData> {
    assert!(n <= seq.len(), "order {} exceeds sequence length {}", n, seq.len());
    let mut data = BlaschkeData {
        bn: one(),
        dbn_a: one(),
        dbn_b: one(),
        bn_alpha: one(),
        bn_beta: one(),
        varsigma: one(),
        dvarsigma_a: one(),
        dvarsigma_b: one(),
    };
    for j in 1..=n {
        let za = zeta(ExtComplex::Finite(seq.alpha(j)), z)?;
        let zb = zeta(seq.beta(j), z)?;
        let sigma = seq.sigma(j);
        data.bn_alpha *= za;
        data.bn_beta *= zb;
        data.varsigma *= sigma;
        match seq.side(j) {
            Side::A => {
                data.dbn_a *= za;
                data.dvarsigma_a *= sigma;
            }
            Side::B => {
                data.dbn_b *= zb;
                data.dvarsigma_b *= sigma;
            }
        }
    }
    if n > 0 {
        data.bn = match seq.side(n) {
            Side::A => data.dbn_a,
            Side::B => data.dbn_b,
        };
    }
    Ok(data)
}

#[derive(Deserialize)]
struct ReIm {
    re: f64,
    im: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PoleEntry {
    Word(String),
    Point(ReIm),
}

#[derive(Deserialize)]
struct PoleFile {
    #[serde(default)]
    gamma0: Option<String>,
    #[serde(default)]
    poles: Option<Vec<PoleEntry>>,
    #[serde(default)]
    alphas: Option<Vec<ReIm>>,
    #[serde(default)]
    side: Option<String>,
}

/// Parse a pole-sequence file.  Two layouts are accepted:
/// `{"gamma0":"0"|"inf","poles":[{"re":..,"im":..}|"inf",...]}` giving the
/// mixed sequence directly ("inf" is the reflection of α_j = 0), or
/// `{"alphas":[{"re":..,"im":..},...],"side":"AABBA..."}` giving the disk
/// sequence plus side flags.
pub fn parse_pole_file(text: &str) -> Result<GammaSequence> {
    let file: PoleFile =
        serde_json::from_str(text).map_err(|e| Error::BadInput(format!("pole file: {}", e)))?;
    let gamma0_side = match file.gamma0.as_deref() {
        None | Some("0") => Side::A,
        Some("inf") => Side::B,
        Some(other) => {
            return Err(Error::BadInput(format!(
                "gamma0 must be \"0\" or \"inf\", got {:?}",
                other
            )))
        }
    };
    match (file.poles, file.alphas, file.side) {
        (Some(poles), None, None) => {
            let mut gammas = Vec::with_capacity(poles.len());
            for (i, entry) in poles.iter().enumerate() {
                gammas.push(match entry {
                    PoleEntry::Point(p) => ExtComplex::finite(p.re, p.im),
                    PoleEntry::Word(w) if w == "inf" => ExtComplex::Infinity,
                    PoleEntry::Word(w) => {
                        return Err(Error::BadInput(format!(
                            "pole {}: expected {{re,im}} or \"inf\", got {:?}",
                            i + 1,
                            w
                        )))
                    }
                });
            }
            GammaSequence::from_gammas(&gammas, gamma0_side)
        }
        (None, Some(alphas), Some(side)) => {
            let points: Vec<Complex64> =
                alphas.iter().map(|p| Complex64::new(p.re, p.im)).collect();
            let mut sides = Vec::with_capacity(side.len());
            for c in side.chars() {
                sides.push(match c {
                    'A' | 'a' => Side::A,
                    'B' | 'b' => Side::B,
                    other => {
                        return Err(Error::BadInput(format!(
                            "side string may only contain A/B, got {:?}",
                            other
                        )))
                    }
                });
            }
            GammaSequence::from_alphas(&points, &sides, gamma0_side)
        }
        _ => Err(Error::BadInput(
            "pole file needs either \"poles\" or both \"alphas\" and \"side\"".into(),
        )),
    }
}
