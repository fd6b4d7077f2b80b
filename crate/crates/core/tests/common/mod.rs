//! Independent orthonormalization oracle and shared generators for the
//! integration tests.
//!
//! The oracle builds the nested Blaschke basis B_0 = 1, B_k = B_{k-1} zeta_k
//! from the raw pole data, assembles its Gram matrix under the measure,
//! factors it with a hand-rolled complex Cholesky, and reads the
//! orthonormal functions out of the inverse factor.  Nothing here touches
//! the library's orthonormalization, recurrence, or rational-function
//! arithmetic, so agreement with `gram_schmidt_orf` is a genuine
//! cross-check rather than a restatement.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;

use orfq_core::extc::{GammaSequence, Kind, Side};
use orfq_core::measure::Measure;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Evaluation grid on the circle, rotated off the coordinate axes.
pub fn circle_grid(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / m as f64 + 0.371))
        .collect()
}

/// Blaschke factor zeta_j for the requested kind, from raw alpha/side data:
/// zeta_j = sigma_j (z - nu_j)/(1 - conj(nu_j) z), with the infinite-pole
/// branch sigma_j / z and sigma_j the phase of alpha_j (1 at zero).
fn zeta_value(alpha: Complex64, side: Side, kind: Kind, z: Complex64) -> Complex64 {
    let sigma = if alpha.norm() == 0.0 { c(1.0, 0.0) } else { alpha.conj() / alpha.norm() };
    let use_beta = match kind {
        Kind::Alpha => false,
        Kind::Beta => true,
        Kind::Gamma => side == Side::B,
    };
    if use_beta {
        if alpha.norm() == 0.0 {
            return sigma / z;
        }
        let beta = 1.0 / alpha.conj();
        sigma * (z - beta) / (c(1.0, 0.0) - beta.conj() * z)
    } else {
        sigma * (z - alpha) / (c(1.0, 0.0) - alpha.conj() * z)
    }
}

/// Values of the nested basis B_0..B_n at one point.
fn basis_values(seq: &GammaSequence, kind: Kind, n: usize, z: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = c(1.0, 0.0);
    out.push(acc);
    for j in 1..=n {
        acc *= zeta_value(seq.alpha(j), seq.side(j), kind, z);
        out.push(acc);
    }
    out
}

/// Hand-rolled Cholesky of a Hermitian positive-definite matrix, G = L Lᴴ.
fn cholesky(g: &[Vec<Complex64>]) -> Option<Vec<Vec<Complex64>>> {
    let n = g.len();
    let mut l = vec![vec![c(0.0, 0.0); n]; n];
    for j in 0..n {
        let mut d = g[j][j].re;
        for m in 0..j {
            d -= l[j][m].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let root = d.sqrt();
        l[j][j] = c(root, 0.0);
        for i in j + 1..n {
            let mut s = g[i][j];
            for m in 0..j {
                s -= l[i][m] * l[j][m].conj();
            }
            l[i][j] = s / root;
        }
    }
    Some(l)
}

/// Inverse of a lower-triangular matrix by forward substitution.
fn lower_inverse(l: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = l.len();
    let mut inv = vec![vec![c(0.0, 0.0); n]; n];
    for j in 0..n {
        inv[j][j] = c(1.0, 0.0) / l[j][j];
        for i in j + 1..n {
            let mut s = c(0.0, 0.0);
            for m in j..i {
                s += l[i][m] * inv[m][j];
            }
            inv[i][j] = -s / l[i][i];
        }
    }
    inv
}

/// Orthonormal-function values from the Gram/Cholesky route.
///
/// Returns `values[k][p]` = phi_k at `points[p]`, where phi_k is the unique
/// (up to phase) unit-norm element of the degree-k space orthogonal to the
/// degree-(k-1) space; the phase here makes the leading B_k coefficient
/// positive, which generally differs from the library convention, so
/// callers should compare moduli or phase-aligned values.
pub fn oracle_orf_values(
    mu: &Measure,
    seq: &GammaSequence,
    kind: Kind,
    n: usize,
    points: &[Complex64],
) -> Vec<Vec<Complex64>> {
    let mut gram = vec![vec![c(0.0, 0.0); n + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=n {
            gram[i][j] = mu
                .inner_product(
                    |z| Ok(basis_values(seq, kind, n, z)[i]),
                    |z| Ok(basis_values(seq, kind, n, z)[j]),
                )
                .expect("basis has no poles on the circle");
        }
    }
    let l = cholesky(&gram).expect("Gram matrix of a Chebyshev-style basis must be positive");
    let linv = lower_inverse(&l);
    let mut values = vec![vec![c(0.0, 0.0); points.len()]; n + 1];
    for (p, &z) in points.iter().enumerate() {
        let b = basis_values(seq, kind, n, z);
        for k in 0..=n {
            let mut acc = c(0.0, 0.0);
            for j in 0..=k {
                acc += linv[k][j].conj() * b[j];
            }
            values[k][p] = acc;
        }
    }
    values
}

/// Random disk sequence with mixed sides.  `zero_beta_at` plants alpha = 0
/// on a B side there, which puts the mixed pole at infinity.
pub fn random_shape<R: Rng>(
    rng: &mut R,
    n: usize,
    max_modulus: f64,
    zero_beta_at: Option<usize>,
) -> (Vec<Complex64>, Vec<Side>) {
    let mut alphas = Vec::with_capacity(n);
    let mut sides = Vec::with_capacity(n);
    for j in 1..=n {
        let r = (0.1 + 0.9 * rng.gen::<f64>()) * max_modulus;
        let mut a = Complex64::from_polar(r, rng.gen::<f64>() * std::f64::consts::TAU);
        let mut s = if rng.gen::<bool>() { Side::A } else { Side::B };
        if zero_beta_at == Some(j) {
            a = c(0.0, 0.0);
            s = Side::B;
        }
        alphas.push(a);
        sides.push(s);
    }
    (alphas, sides)
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
