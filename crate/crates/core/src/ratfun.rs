//! Rational functions with prescribed denominator factors.
//!
//! A function is stored as a numerator polynomial over a list of elementary
//! factors ϖ(ν_j, z): the building block of every space ℒ_n^ν.  The module
//! provides evaluation (including the leading-coefficient convention at ∞),
//! the substar conjugate f_*(z) = conj(f(1/conj(z))), the space-relative star
//! conjugate, and the numerator star p ↦ p*.

use num_complex::Complex64;

use crate::extc::{varpi, ExtComplex, GammaSequence, Kind, VarpiForm};
use crate::{Error, Result};

/// Evaluate a polynomial given by ascending coefficients (Horner).
pub fn poly_eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Coefficient of degree `k`, treating missing entries as zero.
pub fn poly_coeff(coeffs: &[Complex64], k: usize) -> Complex64 {
    coeffs.get(k).copied().unwrap_or_else(|| Complex64::new(0.0, 0.0))
}

/// Product of two coefficient lists.
pub fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Sum of two coefficient lists.
pub fn poly_add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len().max(b.len())];
    for (i, &ai) in a.iter().enumerate() {
        out[i] += ai;
    }
    for (i, &bi) in b.iter().enumerate() {
        out[i] += bi;
    }
    out
}

pub fn poly_scale(a: &[Complex64], c: Complex64) -> Vec<Complex64> {
    a.iter().map(|&x| x * c).collect()
}

/// Coefficients of the elementary factor ϖ(ν, z) as a polynomial in z.
pub fn varpi_coeffs(nu: ExtComplex) -> Vec<Complex64> {
    match nu {
        ExtComplex::Finite(v) if v.norm() == 0.0 => vec![Complex64::new(1.0, 0.0)],
        ExtComplex::Finite(v) => vec![Complex64::new(1.0, 0.0), -v.conj()],
        ExtComplex::Infinity => vec![Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)],
    }
}

/// Coefficients of the reflected factor ϖ*(ν, z) = z - ν (or -1 for ν = ∞).
pub fn varpi_star_coeffs(nu: ExtComplex) -> Vec<Complex64> {
    match nu {
        ExtComplex::Finite(v) => vec![-v, Complex64::new(1.0, 0.0)],
        ExtComplex::Infinity => vec![Complex64::new(-1.0, 0.0)],
    }
}

/// Leading value of ϖ(ν, ·) under the evaluation-at-∞ convention: the
/// highest-degree coefficient of the factor, which is 1 for the constant
/// factor (ν = 0), -conj(ν) for finite ν, and -1 for ν = ∞.
fn varpi_at_infinity(nu: ExtComplex) -> Complex64 {
    match nu {
        ExtComplex::Finite(v) if v.norm() == 0.0 => Complex64::new(1.0, 0.0),
        ExtComplex::Finite(v) => -v.conj(),
        ExtComplex::Infinity => Complex64::new(-1.0, 0.0),
    }
}

/// Numerator star: p*(z) = z^n conj(p(1/conj(z))), so coefficient k of p*
/// is the conjugate of coefficient n-k of p.  `n` is the formal degree.
pub fn numerator_star(p: &[Complex64], n: usize) -> Vec<Complex64> {
    (0..=n).map(|k| poly_coeff(p, n - k).conj()).collect()
}

/// Identification of a space ℒ_n^ν: the pole sequence, which of the three
/// sequences ν runs over, and the order n.
#[derive(Clone, Copy, Debug)]
pub struct Space<'a> {
    pub seq: &'a GammaSequence,
    pub kind: Kind,
    pub n: usize,
}

impl<'a> Space<'a> {
    pub fn new(seq: &'a GammaSequence, kind: Kind, n: usize) -> Self {
        assert!(n <= seq.len(), "space order {} exceeds sequence length {}", n, seq.len());
        Space { seq, kind, n }
    }

    /// ν_1..ν_n for this space, including trivial entries (0 on the α side,
    /// ∞ on the β side) so the factor count always equals n.
    pub fn poles(&self) -> Vec<ExtComplex> {
        (1..=self.n).map(|j| self.seq.nu(j, self.kind)).collect()
    }

    /// ς_n = ∏ σ_j, the same for all three kinds.
    pub fn varsigma(&self) -> Complex64 {
        (1..=self.n).map(|j| self.seq.sigma(j)).product()
    }
}

/// A rational function p_n(z) / ∏_j ϖ(ν_j, z).
///
/// `n` is the formal degree: trailing zero coefficients do not change the
/// function, and evaluation at ∞ takes the coefficient of degree exactly `n`.
#[derive(Clone, Debug)]
pub struct RationalFunction {
    pub num: Vec<Complex64>,
    pub den_poles: Vec<ExtComplex>,
    pub n: usize,
}

impl RationalFunction {
    pub fn new(num: Vec<Complex64>, den_poles: Vec<ExtComplex>, n: usize) -> Self {
        assert!(num.len() <= n + 1, "numerator degree exceeds formal degree");
        RationalFunction { num, den_poles, n }
    }

    pub fn constant(a: Complex64) -> Self {
        RationalFunction { num: vec![a], den_poles: Vec::new(), n: 0 }
    }

    /// Evaluate at a point of the extended plane.  At ∞ the numerator
    /// contributes its formal-degree coefficient and every denominator
    /// factor its leading value.
    pub fn evaluate(&self, z: ExtComplex) -> Result<Complex64> {
        match z {
            ExtComplex::Finite(zf) => {
                let mut den = Complex64::new(1.0, 0.0);
                for &nu in &self.den_poles {
                    let factor = varpi(nu, zf, VarpiForm::Plain);
                    if factor.norm() <= 1e-13 {
                        return Err(Error::PoleHit { z: zf, denom: factor.norm() });
                    }
                    den *= factor;
                }
                Ok(poly_eval(&self.num, zf) / den)
            }
            ExtComplex::Infinity => {
                let mut den = Complex64::new(1.0, 0.0);
                for &nu in &self.den_poles {
                    let lead = varpi_at_infinity(nu);
                    if lead.norm() <= 1e-13 {
                        return Err(Error::PoleHit {
                            z: Complex64::new(f64::INFINITY, 0.0),
                            denom: lead.norm(),
                        });
                    }
                    den *= lead;
                }
                Ok(poly_coeff(&self.num, self.n) / den)
            }
        }
    }

    /// Convenience wrapper for finite evaluation points.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.evaluate(ExtComplex::Finite(z))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        RationalFunction {
            num: poly_scale(&self.num, c),
            den_poles: self.den_poles.clone(),
            n: self.n,
        }
    }

    /// The substar conjugate g(z) = conj(f(1/conj(z))).  Numerator goes to
    /// its star, every pole reflects in the circle, and the bookkeeping
    /// constant is folded into the numerator; a formal-degree deficit of the
    /// denominator is padded with reflected-at-zero factors.
    pub fn substar(&self) -> Self {
        let m = self.den_poles.len();
        let mut num = numerator_star(&self.num, self.n);
        let mut den = Vec::with_capacity(self.n.max(m));
        let mut constant = Complex64::new(1.0, 0.0);
        for &nu in &self.den_poles {
            // z - nu = c * (1 - conj(nu_*) z) with c as below, so dividing by
            // the reflected plain factor costs 1/c per factor
            let c = match nu {
                ExtComplex::Finite(v) if v.norm() == 0.0 => Complex64::new(-1.0, 0.0),
                ExtComplex::Finite(v) => -v,
                ExtComplex::Infinity => Complex64::new(-1.0, 0.0),
            };
            constant /= c;
            den.push(nu.substar());
        }
        if self.n >= m {
            // remaining z^(n-m): each z is -1 times the plain factor of ∞
            for _ in 0..(self.n - m) {
                constant *= Complex64::new(-1.0, 0.0);
                den.push(ExtComplex::Infinity);
            }
            num = poly_scale(&num, constant);
            RationalFunction { num, den_poles: den, n: self.n }
        } else {
            // more factors than formal degree: shift the numerator up instead
            let mut shifted = vec![Complex64::new(0.0, 0.0); m - self.n];
            shifted.extend(poly_scale(&num, constant));
            RationalFunction { num: shifted, den_poles: den, n: m }
        }
    }

    /// The star conjugate relative to a space: ς_n p*(z) / π_n(z), which
    /// realizes B_n^ν f_* for ν ∈ {α, β} and Ḃ_n^α Ḃ_n^β f_* for ν = γ.
    /// The poles of `self` must form a sub-multiset of the space poles; the
    /// numerator is brought onto the full denominator first.
    pub fn star(&self, space: Space<'_>) -> Result<Self> {
        let space_poles = space.poles();
        let missing = subtract_multiset(&space_poles, &self.den_poles).ok_or_else(|| {
            Error::SpaceMismatch(format!(
                "function poles are not contained in the {} space of order {}",
                space.kind, space.n
            ))
        })?;
        if self.num.len() > space.n + 1 {
            return Err(Error::SpaceMismatch(format!(
                "numerator degree {} exceeds space order {}",
                self.num.len() - 1,
                space.n
            )));
        }
        let mut p = self.num.clone();
        for &nu in &missing {
            p = poly_mul(&p, &varpi_coeffs(nu));
        }
        let starred = numerator_star(&p, space.n);
        Ok(RationalFunction {
            num: poly_scale(&starred, space.varsigma()),
            den_poles: space_poles,
            n: space.n,
        })
    }
}

/// Multiset difference a \ b, or None if b is not contained in a.
/// Poles match within an absolute tolerance of 1e-12.
fn subtract_multiset(a: &[ExtComplex], b: &[ExtComplex]) -> Option<Vec<ExtComplex>> {
    let mut remaining: Vec<ExtComplex> = a.to_vec();
    for &want in b {
        let pos = remaining.iter().position(|&have| match (want, have) {
            (ExtComplex::Infinity, ExtComplex::Infinity) => true,
            (ExtComplex::Finite(x), ExtComplex::Finite(y)) => (x - y).norm() <= 1e-12,
            _ => false,
        })?;
        remaining.swap_remove(pos);
    }
    Some(remaining)
}

/// Points used for evaluation-based equality: m points e^{iθ} with θ at odd
/// multiples of π/m, which keeps them off the common roots of unity.
pub fn circle_test_points(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|k| {
            let t = std::f64::consts::PI * (2 * k + 1) as f64 / m as f64;
            Complex64::new(t.cos(), t.sin())
        })
        .collect()
}

/// Equality in the evaluation sense: agreement on 2 max(deg) + 8 circle
/// points.  Representations with cancelling factors compare equal.
pub fn eval_equal(f: &RationalFunction, g: &RationalFunction, tol: f64) -> Result<bool> {
    let m = 2 * f.n.max(g.n) + 8;
    for z in circle_test_points(m) {
        let fv = f.eval(z)?;
        let gv = g.eval(z)?;
        if (fv - gv).norm() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}
