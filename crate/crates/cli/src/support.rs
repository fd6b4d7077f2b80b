//! Shared plumbing for the subcommands: exit-code carrying failures, input
//! loading, JSON helpers, and cross-route quadrature comparison.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::{json, Value};

use orfq_core::ampd::align_eigenvalues;
use orfq_core::eig::DenseMatrix;
use orfq_core::extc::{parse_pole_file, ExtComplex, GammaSequence, Kind, Side};
use orfq_core::matfac::{self, SnakeMatrix, Truncation};
use orfq_core::measure::{parse_measure_file, Measure};
use orfq_core::orf::{derive_gamma_system, gram_schmidt_orf, OrfSystem};
use orfq_core::porf::Quadrature;

/// Error carrying the process exit code: 1 invariant failure, 2 spec error,
/// 3 numerical failure, 4 cross-route mismatch.
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn invariant(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    pub fn spec(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn numerical(context: &str, err: orfq_core::Error) -> Self {
        Failure { code: 3, message: format!("{}: {}", context, err) }
    }

    pub fn mismatch(message: impl Into<String>) -> Self {
        Failure { code: 4, message: message.into() }
    }
}

pub fn load_sequence(path: &Path) -> Result<GammaSequence, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::spec(format!("{}: {}", path.display(), e)))?;
    parse_pole_file(&text).map_err(|e| Failure::spec(format!("{}: {}", path.display(), e)))
}

pub fn load_measure(path: &Path) -> Result<Measure, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::spec(format!("{}: {}", path.display(), e)))?;
    parse_measure_file(&text).map_err(|e| Failure::spec(format!("{}: {}", path.display(), e)))
}

/// Orthonormal system of the requested kind; gamma systems are derived from
/// the alpha system over the same poles.
pub fn build_system(
    mu: &Measure,
    seq: &GammaSequence,
    n: usize,
    kind: Kind,
) -> Result<OrfSystem, Failure> {
    match kind {
        Kind::Alpha | Kind::Beta => gram_schmidt_orf(mu, seq, n, kind)
            .map_err(|e| Failure::numerical("orthonormalization", e)),
        Kind::Gamma => {
            let alpha = gram_schmidt_orf(mu, seq, n, Kind::Alpha)
                .map_err(|e| Failure::numerical("orthonormalization", e))?;
            derive_gamma_system(&alpha, seq)
                .map_err(|e| Failure::numerical("gamma system", e))
        }
    }
}

/// Alpha system plus the derived gamma system, for commands that need both.
pub fn build_alpha_and_gamma(
    mu: &Measure,
    seq: &GammaSequence,
    n: usize,
) -> Result<(OrfSystem, OrfSystem), Failure> {
    let alpha = gram_schmidt_orf(mu, seq, n, Kind::Alpha)
        .map_err(|e| Failure::numerical("orthonormalization", e))?;
    let gamma = derive_gamma_system(&alpha, seq)
        .map_err(|e| Failure::numerical("gamma system", e))?;
    Ok((alpha, gamma))
}

pub fn build_snake(
    alpha: &OrfSystem,
    seq: &GammaSequence,
    size: usize,
    basis: matfac::Basis,
) -> Result<SnakeMatrix, Failure> {
    matfac::snake_product(seq, &alpha.lambdas, &alpha.etas1, size, basis)
        .map_err(|e| Failure::numerical("snake product", e))
}

pub fn tau_from_turns(turns: f64) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * turns)
}

pub fn cjson(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

pub fn extjson(z: ExtComplex) -> Value {
    match z.as_finite() {
        Some(v) => cjson(v),
        None => json!("inf"),
    }
}

pub fn side_letter(side: Side) -> &'static str {
    match side {
        Side::A => "A",
        Side::B => "B",
    }
}

pub fn kind_letter(kind: Kind) -> &'static str {
    match kind {
        Kind::Alpha => "A",
        Kind::Beta => "B",
        Kind::Gamma => "G",
    }
}

pub fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::spec(format!("{}: {}", path.display(), e))),
        None => {
            print!("{}", text);
            Ok(())
        }
    }
}

pub fn json_text(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    text
}

/// Drop trailing coefficients that are negligible against the largest one,
/// so root finding sees the true degree.
pub fn trim_poly(coeffs: &[Complex64]) -> Vec<Complex64> {
    let scale: f64 = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut out = coeffs.to_vec();
    while out.len() > 1 && out.last().map_or(false, |c| c.norm() <= 1e-12 * scale) {
        out.pop();
    }
    out
}

/// Node and weight deviation between two rules of the same size, matched by
/// nearest node.
pub struct RuleDeviation {
    pub node: f64,
    pub weight: f64,
}

pub fn compare_rules(reference: &Quadrature, other: &Quadrature) -> RuleDeviation {
    let (perm, node) = align_eigenvalues(&reference.nodes, &other.nodes);
    let mut weight = 0.0f64;
    for (i, &j) in perm.iter().enumerate() {
        weight = weight.max((reference.weights[i] - other.weights[j]).abs());
    }
    RuleDeviation { node, weight }
}

/// Para-orthogonal parameter that makes `xi` a node of the degree-n rule of
/// `sys`: tau = -phi_n(xi)/phi_n^*(xi), unimodular when xi is on the circle.
pub fn matched_tau(sys: &OrfSystem, n: usize, xi: Complex64) -> Result<Complex64, Failure> {
    let p = sys.phis[n]
        .eval(xi)
        .map_err(|e| Failure::numerical("tau matching", e))?;
    let q = sys.phistars[n]
        .eval(xi)
        .map_err(|e| Failure::numerical("tau matching", e))?;
    if q.norm() <= 1e-14 * p.norm().max(1.0) {
        return Err(Failure {
            code: 3,
            message: "phi_n^* vanished at the matching node".into(),
        });
    }
    let tau = -p / q;
    Ok(tau / tau.norm())
}

/// Unitary truncation phase that plants `xi` among the spectral eigenvalues.
///
/// xi is an eigenvalue of the operator Moebius transform of the closed
/// product M(slot) exactly when det((I - xi A*) M(slot) + A - xi I) = 0, and
/// that determinant is affine in the slot value because the slot scales a
/// single column of the factored product.  Two determinant evaluations (slot
/// 0 and slot 1) pin the affine function; its root is the matching slot.
pub fn slot_for_node(
    snake: &SnakeMatrix,
    seq: &GammaSequence,
    xi: Complex64,
) -> Result<Complex64, Failure> {
    let n = snake.size;
    let m0 = matfac::truncations(snake, Truncation::Plain { lambda: ExtComplex::Infinity })
        .map_err(|e| Failure::numerical("truncation", e))?;
    let m1 = matfac::truncations(snake, Truncation::Unitary { tau: Complex64::new(1.0, 0.0) })
        .map_err(|e| Failure::numerical("truncation", e))?;
    let a: Vec<Complex64> = (0..n).map(|j| seq.alpha(j)).collect();
    let shifted = |m: &DenseMatrix| {
        DenseMatrix::from_fn(n, |i, j| {
            let mut v = (Complex64::new(1.0, 0.0) - xi * a[i].conj()) * m[(i, j)];
            if i == j {
                v += a[i] - xi;
            }
            v
        })
    };
    let det0 = shifted(&m0).det_lu();
    let det1 = shifted(&m1).det_lu();
    let span = det1 - det0;
    if span.norm() <= 1e-300 {
        return Err(Failure {
            code: 3,
            message: "truncation slot does not influence the node condition".into(),
        });
    }
    let slot = -det0 / span;
    if (slot.norm() - 1.0).abs() > 1e-6 {
        return Err(Failure {
            code: 3,
            message: format!("matched slot has modulus {:.6}, expected 1", slot.norm()),
        });
    }
    Ok(slot / slot.norm())
}
