//! Matrix representation of the shift operator in the ORF basis.
//!
//! Multiplication by z on span{phi_0, phi_1, ...} is the operator Moebius
//! transform of a unitary matrix that factors into elementary 2x2 blocks,
//! one per recurrence step.  The multiplication order of the factors follows
//! the side word of the pole sequence: increasing through a run of alpha
//! poles, decreasing across a run of beta poles (with the first alpha factor
//! after the run migrating to the front of the beta group).  The resulting
//! zero pattern is a snake: upper Hessenberg blocks for alpha runs, lower
//! Hessenberg blocks for beta runs, the five-diagonal CMV shape when the
//! sides alternate.
//!
//! Finite sections make this computational.  The plain truncation closes the
//! product with diag(I, -delta) and the Moebius transform then has the zeros
//! of phi_{n+1} as eigenvalues; the unitary truncation closes with
//! diag(I, tau) and yields the nodes and weights of a rational Szego
//! quadrature rule.

use num_complex::Complex64;

use crate::eig::{self, DenseMatrix};
use crate::extc::{ExtComplex, GammaSequence, Side};
use crate::porf::Quadrature;
use crate::{Error, Result};

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn cone() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

pub(crate) fn unitarity_residual_2x2(b: &[[Complex64; 2]; 2]) -> f64 {
    let mut r = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let mut s = if i == j { -cone() } else { czero() };
            for (bi, bj) in b[i].iter().zip(&b[j]) {
                s += bi * bj.conj();
            }
            r = r.max(s.norm());
        }
    }
    r
}

/// Elementary block of one recurrence step in alpha form,
///
/// ```text
///   conj(sigma_prev) conj(eta1) [ -lambda eta1       sqrt(1-|lambda|^2) ]
///                               [ sqrt(1-|lambda|^2) conj(lambda eta1)  ]
///   diag(1, sigma_n),
/// ```
///
/// where `lambda` is the alpha-recurrence parameter of the step and `eta1`
/// its normalization phase.  An infinite `lambda` selects the swap form
/// conj(sigma_prev) conj(eta1) [[0, sigma_n], [1, 0]]; a non-regular step of
/// a mixed sequence has alpha parameter 0, for which the general formula
/// degenerates to exactly that block.
pub fn gtilde_alpha(
    lambda: ExtComplex,
    eta1: Complex64,
    sigma_prev: Complex64,
    sigma_n: Complex64,
) -> [[Complex64; 2]; 2] {
    let c = sigma_prev.conj() * eta1.conj();
    match lambda.as_finite() {
        Some(l) => {
            assert!(
                l.norm() < 1.0,
                "alpha step parameter must lie in the open disk"
            );
            let s = Complex64::new((1.0 - l.norm_sqr()).sqrt(), 0.0);
            [
                [c * (-l) * eta1, c * s * sigma_n],
                [c * s, c * l.conj() * eta1.conj() * sigma_n],
            ]
        }
        None => [[czero(), c * sigma_n], [c, czero()]],
    }
}

/// Beta companion of an alpha block: conjugation by diag(sigma_n, 1).
pub fn gtilde_beta(g_alpha: [[Complex64; 2]; 2], sigma_n: Complex64) -> [[Complex64; 2]; 2] {
    [
        [g_alpha[0][0], sigma_n.conj() * g_alpha[0][1]],
        [g_alpha[1][0] * sigma_n, g_alpha[1][1]],
    ]
}

/// One factor diag(I_{k-1}, block, I): the 2x2 block acts on rows and
/// columns k-1, k of the dense realization (0-based).
#[derive(Clone, Debug)]
pub struct GFactor {
    pub k: usize,
    pub block: [[Complex64; 2]; 2],
    pub unitary: bool,
}

impl GFactor {
    pub fn new(k: usize, block: [[Complex64; 2]; 2]) -> Self {
        assert!(k >= 1, "factor positions are 1-based");
        let unitary = unitarity_residual_2x2(&block) <= 1e-13;
        GFactor { k, block, unitary }
    }

    /// Max-entry residual of block blockᴴ - I₂.
    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual_2x2(&self.block)
    }

    /// Dense embedding into the given dimension.
    pub fn embed(&self, size: usize) -> DenseMatrix {
        assert!(self.k < size, "factor does not fit the requested dimension");
        let k = self.k;
        DenseMatrix::from_fn(size, |i, j| {
            if (i == k - 1 || i == k) && (j == k - 1 || j == k) {
                self.block[i + 1 - k][j + 1 - k]
            } else if i == j {
                cone()
            } else {
                czero()
            }
        })
    }
}

/// Basis convention behind the factor list.  `Phi` keeps the phi_n family,
/// whose beta-side steps carry the diag(sigma, 1)-conjugated blocks.
/// `Varphi` rescales each phi_n by the unimodular product of the sigmas over
/// its beta indices, which turns every beta block back into its alpha form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Phi,
    Varphi,
}

/// Factored form of the shift matrix for one pole sequence.
///
/// The product runs over positions 1..=size in the order `order`; position
/// `size` is the truncation slot, filled by [`truncations`] with either the
/// plain or the unitary closing rule.
#[derive(Clone, Debug)]
pub struct SnakeMatrix {
    /// Unitary factors at positions 1..size.
    pub factors: Vec<GFactor>,
    /// Side word of poles 1..=size; the last entry places the truncation
    /// slot within the order.
    pub shape: Vec<Side>,
    /// Dimension of the dense realization.
    pub size: usize,
    /// Positions 1..=size in multiplication order, leftmost factor first.
    pub order: Vec<usize>,
    /// Basis the factors were built for.
    pub basis: Basis,
    /// sigma_{size-1}, scaling the plain truncation parameter.
    trunc_sigma: Complex64,
}

impl SnakeMatrix {
    /// Dense product of the stored factors in snake order, with the
    /// truncation slot kept as the identity.  Unitary whenever all factors
    /// are.
    pub fn dense(&self) -> DenseMatrix {
        self.realize(cone())
    }

    fn realize(&self, slot: Complex64) -> DenseMatrix {
        let mut m = DenseMatrix::identity(self.size);
        for &k in &self.order {
            if k == self.size {
                let col: Vec<Complex64> =
                    m.column(self.size - 1).iter().map(|v| v * slot).collect();
                m.set_column(self.size - 1, &col);
            } else {
                // right-multiplying by the embedded factor touches only
                // columns k-1 and k
                let b = &self.factors[k - 1].block;
                let c0 = m.column(k - 1);
                let c1 = m.column(k);
                let n0: Vec<Complex64> = (0..self.size)
                    .map(|i| c0[i] * b[0][0] + c1[i] * b[1][0])
                    .collect();
                let n1: Vec<Complex64> = (0..self.size)
                    .map(|i| c0[i] * b[0][1] + c1[i] * b[1][1])
                    .collect();
                m.set_column(k - 1, &n0);
                m.set_column(k, &n1);
            }
        }
        m
    }

    /// Zero-pattern prediction from the shape word alone: the boolean
    /// product of the factor supports in snake order.  Entries of any dense
    /// realization vanish outside this support.
    pub fn predicted_support(&self) -> Vec<Vec<bool>> {
        let p = self.size;
        let mut s = vec![vec![false; p]; p];
        for (i, row) in s.iter_mut().enumerate() {
            row[i] = true;
        }
        for &k in &self.order {
            if k == self.size {
                continue;
            }
            for row in s.iter_mut() {
                let v = row[k - 1] || row[k];
                row[k - 1] = v;
                row[k] = v;
            }
        }
        s
    }
}

/// eqGblocks multiplication order over positions 1..=len: a run of A sides
/// contributes its positions left to right; a run of B sides at positions
/// m..=q contributes q+1 (the following A position, when present), then
/// q, q-1, ..., m.
fn snake_order(shape: &[Side]) -> Vec<usize> {
    let p = shape.len();
    let mut order = Vec::with_capacity(p);
    let mut j = 1;
    while j <= p {
        if shape[j - 1] == Side::A {
            order.push(j);
            j += 1;
        } else {
            let mut q = j;
            while q < p && shape[q] == Side::B {
                q += 1;
            }
            if q < p {
                order.push(q + 1);
            }
            for t in (j..=q).rev() {
                order.push(t);
            }
            j = q + 2;
        }
    }
    order
}

/// Assemble the snake factors for a dense realization of dimension `size`.
///
/// `lambdas` and `etas1` are the alpha-recurrence parameters and
/// normalization phases of the sequence, as returned by
/// `orf::extract_recurrence_data` on the alpha system; entry j-1 belongs to
/// step j.  Positions 1..size get full blocks, position `size` is left to
/// the truncation rules, so the data must cover at least size-1 steps.
pub fn snake_product(
    seq: &GammaSequence,
    lambdas: &[ExtComplex],
    etas1: &[Complex64],
    size: usize,
    basis: Basis,
) -> Result<SnakeMatrix> {
    if size < 1 {
        return Err(Error::ShapeMismatch("empty snake requested".into()));
    }
    if seq.len() < size {
        return Err(Error::ShapeMismatch(format!(
            "side word needs {} poles, sequence has {}",
            size,
            seq.len()
        )));
    }
    let steps = lambdas.len().min(etas1.len());
    if steps < size - 1 {
        return Err(Error::ShapeMismatch(format!(
            "recurrence data covers {} steps, need {}",
            steps,
            size - 1
        )));
    }
    let shape: Vec<Side> = (1..=size).map(|j| seq.side(j)).collect();
    let order = snake_order(&shape);
    let mut factors = Vec::with_capacity(size - 1);
    for k in 1..size {
        let g = gtilde_alpha(lambdas[k - 1], etas1[k - 1], seq.sigma(k - 1), seq.sigma(k));
        let block = match (basis, seq.side(k)) {
            (Basis::Phi, Side::B) => gtilde_beta(g, seq.sigma(k)),
            _ => g,
        };
        factors.push(GFactor::new(k, block));
    }
    Ok(SnakeMatrix {
        factors,
        shape,
        size,
        order,
        basis,
        trunc_sigma: seq.sigma(size - 1),
    })
}

/// Operator Moebius transform eta^{-1} (G + A)(I + A* G)^{-1} eta with
/// A = diag(a) and eta = sqrt(I - A* A).  Maps unitary to unitary; with the
/// alpha values of the poles on the diagonal it turns the snake product
/// into the matrix of multiplication by z.
pub fn mobius(g: &DenseMatrix, a: &[Complex64]) -> Result<DenseMatrix> {
    let n = g.n();
    if a.len() != n {
        return Err(Error::BadInput(format!(
            "diagonal has {} entries for a {}x{} matrix",
            a.len(),
            n,
            n
        )));
    }
    if let Some(bad) = a.iter().find(|z| z.norm() >= 1.0) {
        return Err(Error::BadInput(format!(
            "Moebius diagonal entry {} is not inside the disk",
            bad
        )));
    }
    let b = DenseMatrix::from_fn(n, |i, j| {
        let mut v = a[i].conj() * g[(i, j)];
        if i == j {
            v += cone();
        }
        v
    });
    let binv = b
        .inverse()
        .map_err(|_| Error::SingularResolvent("I + A* G is singular".into()))?;
    let t = DenseMatrix::from_fn(n, |i, j| {
        let mut v = g[(i, j)];
        if i == j {
            v += a[i];
        }
        v
    });
    let x = t.mul(&binv);
    let eta: Vec<f64> = a.iter().map(|z| (1.0 - z.norm_sqr()).sqrt()).collect();
    Ok(DenseMatrix::from_fn(n, |i, j| x[(i, j)] * (eta[j] / eta[i])))
}

/// Closing rule for the factor at the truncation slot.
#[derive(Clone, Copy, Debug)]
pub enum Truncation {
    /// diag(I, -conj(sigma_n) lambda) where `lambda` is the alpha-recurrence
    /// parameter of step n+1 = size; the Moebius eigenvalues are then the
    /// zeros of phi_{n+1}.  An infinite `lambda` (a non-regular step in the
    /// mixed parametrization) stands for alpha parameter 0.
    Plain { lambda: ExtComplex },
    /// diag(I, tau) with |tau| = 1: the product stays unitary and the
    /// Moebius eigenvalues become quadrature nodes.
    Unitary { tau: Complex64 },
}

/// Dense realization of the snake with the truncation slot filled.
pub fn truncations(snake: &SnakeMatrix, mode: Truncation) -> Result<DenseMatrix> {
    let slot = match mode {
        Truncation::Plain { lambda } => match lambda.as_finite() {
            Some(l) => -snake.trunc_sigma.conj() * l,
            None => czero(),
        },
        Truncation::Unitary { tau } => {
            if (tau.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::BadTau { modulus: tau.norm() });
            }
            tau
        }
    };
    Ok(snake.realize(slot))
}

/// Quadrature through the spectral route: the eigenvalues of the Moebius
/// transform of the unitary truncation are the nodes, and the squared
/// moduli of the first row of the unitary eigenvector matrix are the
/// weights (the left eigenvector for node xi is [phi_0(xi), ..., phi_n(xi)]
/// and phi_0 = 1 for a probability measure).
///
/// The rule coincides with `porf::quadrature` at a translated parameter:
/// the truncation tau and the PORF tau describe the same node set, and the
/// correspondence is recovered by matching a single node.
pub fn spectral_quadrature(
    snake: &SnakeMatrix,
    seq: &GammaSequence,
    tau: Complex64,
) -> Result<Quadrature> {
    let gu = truncations(snake, Truncation::Unitary { tau })?;
    let a: Vec<Complex64> = (0..snake.size).map(|j| seq.alpha(j)).collect();
    let u = mobius(&gu, &a)?;
    let mut nodes = eig::eigenvalues(&u)?;
    for x in nodes.iter_mut() {
        *x /= x.norm();
    }
    eig::sort_by_arg(&mut nodes);
    let vecs = eig::eigenvectors(&u, &nodes)?;
    let weights: Vec<f64> = (0..snake.size).map(|i| vecs[(0, i)].norm_sqr()).collect();
    Ok(Quadrature {
        n: snake.size,
        tau,
        nodes,
        weights,
        seq: seq.clone(),
    })
}

/// ASCII sketch of a zero pattern: `x` for entries above `tol`, `.` below.
pub fn pattern_string(m: &DenseMatrix, tol: f64) -> String {
    let mut out = String::new();
    for i in 0..m.n() {
        for j in 0..m.n() {
            out.push(if m[(i, j)].norm() > tol { 'x' } else { '.' });
            if j + 1 < m.n() {
                out.push(' ');
            }
        }
        out.push('\n');
    }
    out
}
