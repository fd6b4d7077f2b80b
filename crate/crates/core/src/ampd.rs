//! Determinant and spectral invariants of reordered block-factor products.
//!
//! The snake products of [`crate::matfac`] are one instance of a general
//! construction: matrices G_1, ..., G_k that equal the identity except for a
//! 2x2 block coupling coordinates k-1 and k.  Factors whose indices differ by
//! more than one commute, so of the k! multiplication orders only 2^(k-1)
//! produce distinct products M_pi.  Much less obviously, det(A M_pi + D) with
//! diagonal A and D does not depend on the order at all, even after chopping
//! the last row and column, and the invariance persists under the
//! substitution A -> A - lambda B, D -> C - lambda D.  That pencil form makes
//! the eigenvalues of (A M_pi + C)(B M_pi + D)^{-1} order independent, and
//! for unitary factors the same holds entrywise for the eigenvector moduli:
//! reordering only changes row and column phases.
//!
//! No linear-algebra proof of the eigenvector statement is implemented here
//! (none is known); this module supplies the machinery to test it
//! numerically, which is also what the `ampd` CLI subcommand drives.

use num_complex::Complex64;
use rand::Rng;

use crate::eig::{self, DenseMatrix};
use crate::extc::ExtComplex;
use crate::matfac::{gtilde_alpha, mobius, unitarity_residual_2x2};
use crate::{Error, Result};

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Identity matrix with one arbitrary 2x2 block on the diagonal.
///
/// The block of factor `k` occupies rows and columns k-1 and k (0-based) in
/// every embedding, exactly like the recurrence factors of the shift matrix,
/// but with no unitarity requirement.
#[derive(Clone, Debug)]
pub struct ElementaryFactor {
    /// 1-based position; the block couples coordinates k-1 and k.
    pub k: usize,
    /// Row-major block [[a, b], [c, d]].
    pub block: [[Complex64; 2]; 2],
}

impl ElementaryFactor {
    pub fn new(k: usize, block: [[Complex64; 2]; 2]) -> Self {
        assert!(k >= 1, "factor positions are 1-based");
        ElementaryFactor { k, block }
    }

    /// Max-entry residual of block blockᴴ - I₂.
    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual_2x2(&self.block)
    }

    /// Lower-right block entry.  A unitary factor with |delta| = 1 is a
    /// direct sum of two phases, which makes every product containing it
    /// reducible.
    pub fn delta(&self) -> Complex64 {
        self.block[1][1]
    }

    /// Dense embedding into the given dimension.
    pub fn embed(&self, size: usize) -> DenseMatrix {
        assert!(self.k < size, "factor does not fit the requested dimension");
        let k = self.k;
        DenseMatrix::from_fn(size, |i, j| {
            if (i == k - 1 || i == k) && (j == k - 1 || j == k) {
                self.block[i + 1 - k][j + 1 - k]
            } else if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                czero()
            }
        })
    }
}

/// A multiplication order for factors 1..=k together with its commutation
/// class.
///
/// Since only adjacent indices fail to commute, the product is determined by
/// the relative order of each pair (i, i-1); that bit string is the sign
/// word.  Every class contains exactly one ordering obtained by inserting
/// 2, 3, ..., k at the front or back of the growing list, which serves as
/// the class representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorPermutation {
    /// The ordering itself, a permutation of 1..=k read left to right.
    pub pi: Vec<usize>,
    /// word[i] is true when factor i+2 stands left of factor i+1 in `pi`,
    /// i.e. multiplies the sub-product of 1..=i+1 from the left.
    pub word: Vec<bool>,
}

impl FactorPermutation {
    pub fn new(pi: Vec<usize>) -> Result<Self> {
        let k = pi.len();
        if k == 0 {
            return Err(Error::BadInput("need at least one factor".into()));
        }
        let mut pos = vec![usize::MAX; k + 1];
        for (p, &v) in pi.iter().enumerate() {
            if v < 1 || v > k || pos[v] != usize::MAX {
                return Err(Error::BadInput(format!(
                    "{:?} is not a permutation of 1..={}",
                    pi, k
                )));
            }
            pos[v] = p;
        }
        let word = (2..=k).map(|i| pos[i] < pos[i - 1]).collect();
        Ok(FactorPermutation { pi, word })
    }

    /// The ordering a sign word describes: start from [1] and push each next
    /// index to the front (true) or back (false).
    pub fn from_word(word: &[bool]) -> Self {
        let mut deque = std::collections::VecDeque::with_capacity(word.len() + 1);
        deque.push_back(1);
        for (i, &left) in word.iter().enumerate() {
            if left {
                deque.push_front(i + 2);
            } else {
                deque.push_back(i + 2);
            }
        }
        FactorPermutation {
            pi: deque.into_iter().collect(),
            word: word.to_vec(),
        }
    }

    /// Representative ordering of the commutation class of `pi`; two
    /// orderings give the same product exactly when these agree.
    pub fn canonical(&self) -> Vec<usize> {
        FactorPermutation::from_word(&self.word).pi
    }
}

/// One representative per commutation class, 2^(k-1) in total, starting with
/// the natural order 1, 2, ..., k and walking the sign words in binary
/// order.  Materialization is capped at 2^14 orderings.
pub fn distinct_orderings(k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::BadInput("need at least one factor".into()));
    }
    assert!(k <= 20, "ordering enumeration is meant for small factor counts");
    let requested = 1usize << (k - 1);
    const CAP: usize = 1 << 14;
    if requested > CAP {
        return Err(Error::TooLarge { requested, cap: CAP });
    }
    Ok((0..requested)
        .map(|w| {
            let word: Vec<bool> = (0..k - 1).map(|j| (w >> j) & 1 == 1).collect();
            FactorPermutation::from_word(&word).pi
        })
        .collect())
}

/// Product of the factors in the order listed by `pi`, embedded at `size`.
///
/// `pi` must be a permutation of 1..=factors.len() referring to factors by
/// their `k` field, all of which must fit (size >= max k + 1).  The product
/// is read left to right: pi = [2, 1] means G_2 G_1.
pub fn product_in_order(
    factors: &[ElementaryFactor],
    pi: &[usize],
    size: usize,
) -> DenseMatrix {
    let k = factors.len();
    assert_eq!(pi.len(), k, "one position per factor");
    let mut by_index: Vec<Option<&ElementaryFactor>> = vec![None; k + 1];
    for f in factors {
        assert!(
            f.k >= 1 && f.k <= k,
            "factor indices must cover 1..={}, got {}",
            k,
            f.k
        );
        assert!(by_index[f.k].is_none(), "duplicate factor index {}", f.k);
        assert!(f.k < size, "factor {} does not fit in dimension {}", f.k, size);
        by_index[f.k] = Some(f);
    }
    let mut seen = vec![false; k + 1];
    let mut m = DenseMatrix::identity(size);
    for &idx in pi {
        assert!(
            idx >= 1 && idx <= k && !seen[idx],
            "{:?} is not a permutation of 1..={}",
            pi,
            k
        );
        seen[idx] = true;
        // right multiplication by the embedded factor touches two columns
        let b = &by_index[idx].expect("validated above").block;
        let left = m.column(idx - 1);
        let right = m.column(idx);
        let mut new_left = vec![czero(); size];
        let mut new_right = vec![czero(); size];
        for i in 0..size {
            new_left[i] = left[i] * b[0][0] + right[i] * b[1][0];
            new_right[i] = left[i] * b[0][1] + right[i] * b[1][1];
        }
        m.set_column(idx - 1, &new_left);
        m.set_column(idx, &new_right);
    }
    m
}

/// A M + D with A = diag(a) scaling the rows and D = diag(d) added.
fn diag_sandwich(a: &[Complex64], m: &DenseMatrix, d: &[Complex64]) -> DenseMatrix {
    let n = m.n();
    assert!(a.len() == n && d.len() == n, "diagonals must match the matrix");
    DenseMatrix::from_fn(n, |i, j| {
        let mut v = a[i] * m[(i, j)];
        if i == j {
            v += d[i];
        }
        v
    })
}

/// det(A M_pi + D) for diagonals given by their entries, optionally after
/// dropping the last row and column.  The value comes from the Schur form;
/// on matrices of dimension at most eight an LU determinant cross-checks it.
pub fn ampd_det(
    a: &[Complex64],
    factors: &[ElementaryFactor],
    pi: &[usize],
    d: &[Complex64],
    truncate: bool,
) -> Result<Complex64> {
    let n = a.len();
    let m = product_in_order(factors, pi, n);
    let full = diag_sandwich(a, &m, d);
    let target = if truncate {
        assert!(n >= 2, "cannot truncate a 1x1 matrix");
        DenseMatrix::from_fn(n - 1, |i, j| full[(i, j)])
    } else {
        full
    };
    let det = eig::det_via_schur(&target)?;
    if target.n() <= 8 {
        let lu = target.det_lu();
        debug_assert!(
            (det - lu).norm() <= 1e-7 * (1.0 + det.norm().max(lu.norm())),
            "Schur and LU determinants disagree: {} vs {}",
            det,
            lu
        );
    }
    Ok(det)
}

/// Eigenvalues of (A M_pi + C)(B M_pi + D)^{-1}, sorted lexicographically by
/// (re, im).
///
/// When B M_pi + D is comfortably invertible (LU determinant above 1e-10 of
/// its Hadamard bound) the eigenvalues come from the dense quotient.
/// Otherwise the generalized problem det((A - lambda B) M_pi + C - lambda D)
/// = 0 is solved by interpolating that determinant at Chebyshev points and
/// rooting the resulting polynomial; only finite eigenvalues are returned,
/// and a determinant that vanishes at every probe point is an error.
pub fn rampd_eigs(
    a: &[Complex64],
    b: &[Complex64],
    c: &[Complex64],
    d: &[Complex64],
    factors: &[ElementaryFactor],
    pi: &[usize],
) -> Result<Vec<Complex64>> {
    let n = a.len();
    assert!(
        b.len() == n && c.len() == n && d.len() == n,
        "diagonals must have equal length"
    );
    let m = product_in_order(factors, pi, n);
    let pa = diag_sandwich(a, &m, c);
    let pb = diag_sandwich(b, &m, d);
    let hadamard: f64 = (0..n)
        .map(|i| (0..n).map(|j| pb[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .product();
    let mut eigs = if pb.det_lu().norm() > 1e-10 * hadamard.max(f64::MIN_POSITIVE) {
        eig::eigenvalues(&pa.mul(&pb.inverse()?))?
    } else {
        pencil_eigenvalues(&pa, &pb)?
    };
    eigs.sort_by(|x, y| {
        (x.re, x.im)
            .partial_cmp(&(y.re, y.im))
            .expect("finite eigenvalues")
    });
    Ok(eigs)
}

/// Finite eigenvalues of the pencil pa - lambda pb by evaluation and
/// interpolation: det(pa - lambda pb) is a polynomial of degree at most n,
/// pinned by its values at n + 1 scaled Chebyshev points.
fn pencil_eigenvalues(pa: &DenseMatrix, pb: &DenseMatrix) -> Result<Vec<Complex64>> {
    let n = pa.n();
    let npts = n + 1;
    let scale = {
        let bnorm = pb.norm_fro();
        if bnorm > 0.0 {
            (pa.norm_fro() / bnorm).max(1.0)
        } else {
            1.0
        }
    };
    let points: Vec<f64> = (0..npts)
        .map(|j| {
            scale * (std::f64::consts::PI * (2 * j + 1) as f64 / (2 * npts) as f64).cos()
        })
        .collect();
    let values: Vec<Complex64> = points
        .iter()
        .map(|&x| DenseMatrix::from_fn(n, |i, j| pa[(i, j)] - x * pb[(i, j)]).det_lu())
        .collect();
    // Hadamard bound of |pa| + scale |pb| sets the scale for "vanishes".
    let bound: f64 = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (pa[(i, j)].norm() + scale * pb[(i, j)].norm()).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .product();
    let vmax = values.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    if vmax <= 1e-13 * bound.max(f64::MIN_POSITIVE) {
        return Err(Error::SingularPencilEverywhere);
    }
    let vandermonde =
        DenseMatrix::from_fn(npts, |i, j| Complex64::new(points[i], 0.0).powu(j as u32));
    let rhs = DenseMatrix::from_fn(npts, |i, j| if j == 0 { values[i] } else { czero() });
    let sol = vandermonde.solve_many(&rhs)?;
    let mut coeffs: Vec<Complex64> = (0..npts).map(|i| sol[(i, 0)]).collect();
    let cmax = coeffs.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    while coeffs.len() > 1 && coeffs.last().expect("nonempty").norm() <= 1e-9 * cmax {
        coeffs.pop();
    }
    if coeffs.len() < 2 {
        // constant determinant: the pencil has no finite eigenvalues
        return Ok(Vec::new());
    }
    eig::poly_roots(&coeffs)
}

/// Greedy nearest-neighbor matching of two eigenvalue lists of equal length.
///
/// Returns for each reference entry the index of the candidate assigned to
/// it, plus the largest matched distance.  Callers sort the reference once
/// (by argument, or lexicographically) and feed candidates in any order.
pub fn align_eigenvalues(reference: &[Complex64], candidate: &[Complex64]) -> (Vec<usize>, f64) {
    assert_eq!(reference.len(), candidate.len(), "lists must have equal length");
    let mut used = vec![false; candidate.len()];
    let mut perm = vec![0usize; reference.len()];
    let mut worst = 0.0f64;
    for (i, r) in reference.iter().enumerate() {
        let mut best = usize::MAX;
        let mut best_dist = f64::INFINITY;
        for (j, cand) in candidate.iter().enumerate() {
            if !used[j] {
                let dist = (r - cand).norm();
                if dist < best_dist {
                    best_dist = dist;
                    best = j;
                }
            }
        }
        used[best] = true;
        perm[i] = best;
        worst = worst.max(best_dist);
    }
    (perm, worst)
}

/// Spectral data of one ordering of the unitary quotient form.
#[derive(Clone, Debug)]
pub struct OrderingSpectrum {
    pub pi: Vec<usize>,
    /// Eigenvalues, aligned with the first ordering of the report.
    pub eigenvalues: Vec<Complex64>,
    /// Entrywise moduli of the unit-norm eigenvector matrix, columns in the
    /// same order as `eigenvalues`.
    pub moduli: Vec<Vec<f64>>,
    /// Sum of the squared first-row moduli; 1 up to roundoff because the
    /// eigenvector matrix of a unitary matrix is itself unitary.
    pub weight_sum: f64,
}

/// Ordering-invariance evidence for the unitary quotient form.
#[derive(Clone, Debug)]
pub struct AmpdReport {
    pub orderings: Vec<OrderingSpectrum>,
    /// Largest matched eigenvalue distance against the first ordering.
    pub lambda_deviation: f64,
    /// Largest entrywise difference of the eigenvector moduli against the
    /// first ordering.
    pub modulus_deviation: f64,
}

/// Eigen-decomposition of R_pi = eta^{-1} (A + M_pi)(A* M_pi + I)^{-1} eta
/// for each requested ordering, where A = diag(alphas) with entries in the
/// open disk, eta = diag(sqrt(1 - |alpha_j|^2)), and the factors are unitary
/// with |delta| < 1.  R_pi is unitary; its eigenvalues and the entrywise
/// moduli of its eigenvector matrix should not depend on the ordering, and
/// the report records the largest deviations actually observed.
pub fn unitary_rampd_report(
    alphas: &[Complex64],
    factors: &[ElementaryFactor],
    orderings: &[Vec<usize>],
) -> Result<AmpdReport> {
    let n = alphas.len();
    for f in factors {
        let residual = f.unitarity_residual();
        if residual > 1e-10 {
            return Err(Error::BadInput(format!(
                "factor {} is not unitary (residual {:.2e})",
                f.k, residual
            )));
        }
        let modulus = f.delta().norm();
        if modulus >= 1.0 - 1e-10 {
            return Err(Error::ReducibleFactor { index: f.k, modulus });
        }
    }
    assert!(!orderings.is_empty(), "need at least one ordering");
    let mut report = AmpdReport {
        orderings: Vec::with_capacity(orderings.len()),
        lambda_deviation: 0.0,
        modulus_deviation: 0.0,
    };
    for pi in orderings {
        let m = product_in_order(factors, pi, n);
        let r = mobius(&m, alphas)?;
        let mut eigs = eig::eigenvalues(&r)?;
        if let Some(first) = report.orderings.first() {
            let (perm, deviation) = align_eigenvalues(&first.eigenvalues, &eigs);
            eigs = perm.iter().map(|&j| eigs[j]).collect();
            report.lambda_deviation = report.lambda_deviation.max(deviation);
        } else {
            eig::sort_by_arg(&mut eigs);
        }
        let vecs = eig::eigenvectors(&r, &eigs)?;
        let moduli: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| vecs[(i, j)].norm()).collect())
            .collect();
        if let Some(first) = report.orderings.first() {
            for i in 0..n {
                for j in 0..n {
                    report.modulus_deviation = report
                        .modulus_deviation
                        .max((moduli[i][j] - first.moduli[i][j]).abs());
                }
            }
        }
        let weight_sum = (0..n).map(|j| vecs[(0, j)].norm_sqr()).sum();
        report.orderings.push(OrderingSpectrum {
            pi: pi.clone(),
            eigenvalues: eigs,
            moduli,
            weight_sum,
        });
    }
    Ok(report)
}

fn random_phase<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU)
}

/// k factors with entries uniform in the complex unit square, for
/// determinant experiments.
pub fn random_factors<R: Rng>(k: usize, rng: &mut R) -> Vec<ElementaryFactor> {
    let entry = |rng: &mut R| {
        Complex64::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0)
    };
    (1..=k)
        .map(|i| {
            let block = [
                [entry(rng), entry(rng)],
                [entry(rng), entry(rng)],
            ];
            ElementaryFactor::new(i, block)
        })
        .collect()
}

/// k unitary factors with |delta| <= max_delta, built from the recurrence
/// block shape with random rotation parameter and phases.
pub fn random_unitary_factors<R: Rng>(
    k: usize,
    max_delta: f64,
    rng: &mut R,
) -> Vec<ElementaryFactor> {
    assert!((0.0..1.0).contains(&max_delta), "|delta| must stay below 1");
    (1..=k)
        .map(|i| {
            let lambda = Complex64::from_polar(max_delta * rng.gen::<f64>(), rng.gen::<f64>() * std::f64::consts::TAU);
            let block = gtilde_alpha(
                ExtComplex::Finite(lambda),
                random_phase(rng),
                random_phase(rng),
                random_phase(rng),
            );
            ElementaryFactor::new(i, block)
        })
        .collect()
}

/// n diagonal entries with modulus up to `radius`, uniform in argument.
pub fn random_diagonal<R: Rng>(n: usize, radius: f64, rng: &mut R) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::from_polar(radius * rng.gen::<f64>(), rng.gen::<f64>() * std::f64::consts::TAU))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_entry_diff(x: &DenseMatrix, y: &DenseMatrix) -> f64 {
        assert_eq!(x.n(), y.n());
        let mut worst = 0.0f64;
        for i in 0..x.n() {
            for j in 0..x.n() {
                worst = worst.max((x[(i, j)] - y[(i, j)]).norm());
            }
        }
        worst
    }

    fn identity_factors(k: usize) -> Vec<ElementaryFactor> {
        (1..=k)
            .map(|i| {
                ElementaryFactor::new(i, [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]])
            })
            .collect()
    }

    fn all_permutations(k: usize) -> Vec<Vec<usize>> {
        fn recurse(prefix: &mut Vec<usize>, pool: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if pool.is_empty() {
                out.push(prefix.clone());
                return;
            }
            for i in 0..pool.len() {
                let v = pool.remove(i);
                prefix.push(v);
                recurse(prefix, pool, out);
                prefix.pop();
                pool.insert(i, v);
            }
        }
        let mut out = Vec::new();
        recurse(&mut Vec::new(), &mut (1..=k).collect(), &mut out);
        out
    }

    #[test]
    fn identity_factors_multiply_to_the_identity() {
        let factors = identity_factors(3);
        let eye = DenseMatrix::identity(4);
        for pi in all_permutations(3) {
            assert_eq!(max_entry_diff(&product_in_order(&factors, &pi, 4), &eye), 0.0);
        }
    }

    #[test]
    fn two_factor_products_share_their_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let factors = random_factors(2, &mut rng);
        let a = random_diagonal(3, 1.5, &mut rng);
        let forward = product_in_order(&factors, &[1, 2], 3);
        let backward = product_in_order(&factors, &[2, 1], 3);
        let am_f = diag_sandwich(&a, &forward, &[czero(); 3]);
        let am_b = diag_sandwich(&a, &backward, &[czero(); 3]);
        for i in 0..3usize {
            assert!((am_f[(i, i)] - am_b[(i, i)]).norm() <= 1e-15);
        }
        // off the diagonal the two orders genuinely differ
        assert!(max_entry_diff(&am_f, &am_b) > 1e-3);
    }

    #[test]
    fn worked_three_by_three_products_match_the_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let factors = random_factors(2, &mut rng);
        let a = random_diagonal(3, 1.0, &mut rng);
        let [[al1, be1], [ga1, de1]] = factors[0].block;
        let [[al2, be2], [ga2, de2]] = factors[1].block;
        let z = czero();
        let rows_12 = [
            [a[0] * al1, a[0] * be1 * al2, a[0] * be1 * be2],
            [a[1] * ga1, a[1] * de1 * al2, a[1] * de1 * be2],
            [z, a[2] * ga2, a[2] * de2],
        ];
        let rows_21 = [
            [a[0] * al1, a[0] * be1, z],
            [a[1] * al2 * ga1, a[1] * al2 * de1, a[1] * be2],
            [a[2] * ga2 * ga1, a[2] * ga2 * de1, a[2] * de2],
        ];
        let am_f = diag_sandwich(&a, &product_in_order(&factors, &[1, 2], 3), &[z; 3]);
        let am_b = diag_sandwich(&a, &product_in_order(&factors, &[2, 1], 3), &[z; 3]);
        for i in 0..3usize {
            for j in 0..3usize {
                assert!((am_f[(i, j)] - rows_12[i][j]).norm() <= 1e-14);
                assert!((am_b[(i, j)] - rows_21[i][j]).norm() <= 1e-14);
            }
        }
        let d = random_diagonal(3, 1.0, &mut rng);
        let det_f = ampd_det(&a, &factors, &[1, 2], &d, false).unwrap();
        let det_b = ampd_det(&a, &factors, &[2, 1], &d, false).unwrap();
        assert!((det_f - det_b).norm() <= 1e-12 * (1.0 + det_f.norm()));
    }

    #[test]
    fn same_word_orderings_give_identical_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let factors = random_factors(3, &mut rng);
        let p1 = FactorPermutation::new(vec![1, 3, 2]).unwrap();
        let p2 = FactorPermutation::new(vec![3, 1, 2]).unwrap();
        assert_eq!(p1.word, p2.word);
        assert_eq!(p1.canonical(), vec![3, 1, 2]);
        assert_eq!(p2.canonical(), vec![3, 1, 2]);
        let m1 = product_in_order(&factors, &p1.pi, 4);
        let m2 = product_in_order(&factors, &p2.pi, 4);
        assert_eq!(max_entry_diff(&m1, &m2), 0.0);
        // different words are different matrices
        let p3 = FactorPermutation::new(vec![2, 1, 3]).unwrap();
        assert_ne!(p1.word, p3.word);
        assert!(max_entry_diff(&m1, &product_in_order(&factors, &p3.pi, 4)) > 1e-3);
    }

    #[test]
    fn four_factors_collapse_to_eight_distinct_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let factors = random_factors(4, &mut rng);
        let mut distinct: Vec<DenseMatrix> = Vec::new();
        for pi in all_permutations(4) {
            let m = product_in_order(&factors, &pi, 5);
            let canonical = FactorPermutation::new(pi).unwrap().canonical();
            let mc = product_in_order(&factors, &canonical, 5);
            assert_eq!(max_entry_diff(&m, &mc), 0.0);
            if !distinct.iter().any(|seen| max_entry_diff(seen, &m) <= 1e-12) {
                distinct.push(m);
            }
        }
        assert_eq!(distinct.len(), 8);
        assert_eq!(distinct_orderings(4).unwrap().len(), 8);
    }

    #[test]
    fn ordering_enumeration_counts_and_cap() {
        assert_eq!(distinct_orderings(1).unwrap(), vec![vec![1]]);
        let threes = distinct_orderings(3).unwrap();
        assert_eq!(threes.len(), 4);
        assert!(threes.contains(&vec![1, 2, 3]));
        assert!(threes.contains(&vec![3, 1, 2]));
        assert_eq!(distinct_orderings(15).unwrap().len(), 1 << 14);
        match distinct_orderings(20) {
            Err(Error::TooLarge { requested, cap }) => {
                assert_eq!(requested, 1 << 19);
                assert_eq!(cap, 1 << 14);
            }
            other => panic!("expected TooLarge, got {:?}", other.map(|v| v.len())),
        }
        assert!(matches!(distinct_orderings(0), Err(Error::BadInput(_))));
    }

    #[test]
    fn determinant_of_identity_factors_is_a_plain_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let factors = identity_factors(3);
        let a = random_diagonal(4, 1.2, &mut rng);
        let d = random_diagonal(4, 1.2, &mut rng);
        let expect: Complex64 = (0..4).map(|i| a[i] + d[i]).product();
        let det = ampd_det(&a, &factors, &[2, 3, 1], &d, false).unwrap();
        assert!((det - expect).norm() <= 1e-12 * (1.0 + expect.norm()));
        let trunc: Complex64 = (0..3).map(|i| a[i] + d[i]).product();
        let det_t = ampd_det(&a, &factors, &[2, 3, 1], &d, true).unwrap();
        assert!((det_t - trunc).norm() <= 1e-12 * (1.0 + trunc.norm()));
    }

    #[test]
    fn determinants_are_ordering_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let factors = random_factors(7, &mut rng);
        let a = random_diagonal(8, 1.0, &mut rng);
        let d = random_diagonal(8, 1.0, &mut rng);
        let orderings = distinct_orderings(7).unwrap();
        assert_eq!(orderings.len(), 64);
        for truncate in [false, true] {
            let reference = ampd_det(&a, &factors, &orderings[0], &d, truncate).unwrap();
            for pi in &orderings[1..] {
                let det = ampd_det(&a, &factors, pi, &d, truncate).unwrap();
                assert!(
                    (det - reference).norm() <= 1e-9 * (1.0 + reference.norm()),
                    "truncate={}: {} vs {}",
                    truncate,
                    det,
                    reference
                );
            }
        }
    }

    #[test]
    fn determinant_invariance_survives_the_pencil_substitution() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let factors = random_factors(5, &mut rng);
        let a = random_diagonal(6, 1.0, &mut rng);
        let b = random_diagonal(6, 1.0, &mut rng);
        let cdiag = random_diagonal(6, 1.0, &mut rng);
        let d = random_diagonal(6, 1.0, &mut rng);
        let orderings = distinct_orderings(5).unwrap();
        for _ in 0..5usize {
            let lambda = c(rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0);
            let top: Vec<Complex64> = (0..6).map(|i| a[i] - lambda * b[i]).collect();
            let bottom: Vec<Complex64> = (0..6).map(|i| cdiag[i] - lambda * d[i]).collect();
            let reference = ampd_det(&top, &factors, &orderings[0], &bottom, false).unwrap();
            for pi in &orderings[1..] {
                let det = ampd_det(&top, &factors, pi, &bottom, false).unwrap();
                assert!((det - reference).norm() <= 1e-9 * (1.0 + reference.norm()));
            }
        }
    }

    #[test]
    fn rampd_reduces_to_plain_eigenvalues_when_b_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let factors = random_factors(4, &mut rng);
        let a = random_diagonal(5, 1.0, &mut rng);
        let cdiag = random_diagonal(5, 1.0, &mut rng);
        let b = vec![czero(); 5];
        let d = vec![c(1.0, 0.0); 5];
        for pi in distinct_orderings(4).unwrap() {
            let eigs = rampd_eigs(&a, &b, &cdiag, &d, &factors, &pi).unwrap();
            let m = product_in_order(&factors, &pi, 5);
            let mut direct = eig::eigenvalues(&diag_sandwich(&a, &m, &cdiag)).unwrap();
            direct.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap());
            for (e, want) in eigs.iter().zip(&direct) {
                assert!((e - want).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn rampd_eigenvalues_are_ordering_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let factors = random_factors(6, &mut rng);
        let a = random_diagonal(7, 1.0, &mut rng);
        let b = random_diagonal(7, 0.4, &mut rng);
        let cdiag = random_diagonal(7, 1.0, &mut rng);
        let d: Vec<Complex64> = (0..7).map(|i| c(1.0, 0.0) + 0.3 * b[i]).collect();
        let orderings = distinct_orderings(6).unwrap();
        assert_eq!(orderings.len(), 32);
        let reference = rampd_eigs(&a, &b, &cdiag, &d, &factors, &orderings[0]).unwrap();
        for pi in &orderings[1..] {
            let eigs = rampd_eigs(&a, &b, &cdiag, &d, &factors, pi).unwrap();
            let (_, deviation) = align_eigenvalues(&reference, &eigs);
            assert!(deviation <= 1e-8, "ordering {:?} deviates by {}", pi, deviation);
        }
    }

    #[test]
    fn pencil_route_handles_a_singular_b_side() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let factors = random_factors(4, &mut rng);
        let a = random_diagonal(5, 1.0, &mut rng);
        let cdiag = random_diagonal(5, 1.0, &mut rng);
        let mut b = random_diagonal(5, 1.0, &mut rng);
        let mut d = random_diagonal(5, 1.0, &mut rng);
        // a common zero row forces det(B M + D) = 0 without killing the pencil
        b[0] = czero();
        d[0] = czero();
        let orderings = distinct_orderings(4).unwrap();
        let reference = rampd_eigs(&a, &b, &cdiag, &d, &factors, &orderings[0]).unwrap();
        assert_eq!(reference.len(), 4, "one zero row drops the degree by one");
        for pi in &orderings {
            let m = product_in_order(&factors, pi, 5);
            let pa = diag_sandwich(&a, &m, &cdiag);
            let pb = diag_sandwich(&b, &m, &d);
            assert!(pb.det_lu().norm() <= 1e-12);
            let eigs = rampd_eigs(&a, &b, &cdiag, &d, &factors, pi).unwrap();
            let (_, deviation) = align_eigenvalues(&reference, &eigs);
            assert!(deviation <= 1e-8);
            for e in &eigs {
                let shifted = DenseMatrix::from_fn(5, |i, j| pa[(i, j)] - e * pb[(i, j)]);
                assert!(shifted.det_lu().norm() <= 1e-6);
            }
        }
    }

    #[test]
    fn a_dead_coordinate_makes_the_pencil_singular_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        let factors = random_factors(3, &mut rng);
        let mut a = random_diagonal(4, 1.0, &mut rng);
        let mut b = random_diagonal(4, 1.0, &mut rng);
        let mut cdiag = random_diagonal(4, 1.0, &mut rng);
        let mut d = random_diagonal(4, 1.0, &mut rng);
        a[0] = czero();
        b[0] = czero();
        cdiag[0] = czero();
        d[0] = czero();
        match rampd_eigs(&a, &b, &cdiag, &d, &factors, &[1, 2, 3]) {
            Err(Error::SingularPencilEverywhere) => {}
            other => panic!("expected SingularPencilEverywhere, got {:?}", other),
        }
    }

    #[test]
    fn unitary_quotient_eigenvalues_are_unimodular() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let factors = random_unitary_factors(5, 0.9, &mut rng);
        let alphas = random_diagonal(6, 0.6, &mut rng);
        let eta: Vec<f64> = alphas.iter().map(|z| (1.0 - z.norm_sqr()).sqrt()).collect();
        let a: Vec<Complex64> = eta.iter().map(|e| c(1.0 / e, 0.0)).collect();
        let b: Vec<Complex64> = (0..6).map(|i| alphas[i].conj() / eta[i]).collect();
        let cdiag: Vec<Complex64> = (0..6).map(|i| alphas[i] / eta[i]).collect();
        let d = a.clone();
        for pi in [vec![1, 2, 3, 4, 5], vec![5, 3, 1, 2, 4]] {
            let eigs = rampd_eigs(&a, &b, &cdiag, &d, &factors, &pi).unwrap();
            for e in &eigs {
                assert!((e.norm() - 1.0).abs() <= 1e-10);
            }
            let m = product_in_order(&factors, &pi, 6);
            let mut direct = eig::eigenvalues(&mobius(&m, &alphas).unwrap()).unwrap();
            direct.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap());
            for (e, want) in eigs.iter().zip(&direct) {
                assert!((e - want).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn unitary_report_is_ordering_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        let factors = random_unitary_factors(5, 0.85, &mut rng);
        let alphas = random_diagonal(6, 0.7, &mut rng);
        let orderings = distinct_orderings(5).unwrap();
        assert_eq!(orderings.len(), 16);
        let report = unitary_rampd_report(&alphas, &factors, &orderings).unwrap();
        assert!(report.lambda_deviation <= 1e-8, "{}", report.lambda_deviation);
        assert!(report.modulus_deviation <= 1e-8, "{}", report.modulus_deviation);
        for spectrum in &report.orderings {
            assert!((spectrum.weight_sum - 1.0).abs() <= 1e-10);
            for e in &spectrum.eigenvalues {
                assert!((e.norm() - 1.0).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn single_factor_report_is_trivially_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(131);
        let factors = random_unitary_factors(1, 0.8, &mut rng);
        let alphas = random_diagonal(2, 0.5, &mut rng);
        let report = unitary_rampd_report(&alphas, &factors, &[vec![1]]).unwrap();
        assert_eq!(report.orderings.len(), 1);
        assert_eq!(report.lambda_deviation, 0.0);
        assert_eq!(report.modulus_deviation, 0.0);
    }

    #[test]
    fn reducible_and_non_unitary_factors_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(137);
        let alphas = random_diagonal(3, 0.5, &mut rng);
        let mut factors = random_unitary_factors(2, 0.8, &mut rng);
        let tau1 = random_phase(&mut rng);
        let tau2 = random_phase(&mut rng);
        factors[1] = ElementaryFactor::new(2, [[tau1, czero()], [czero(), tau2]]);
        match unitary_rampd_report(&alphas, &factors, &[vec![1, 2]]) {
            Err(Error::ReducibleFactor { index, modulus }) => {
                assert_eq!(index, 2);
                assert!((modulus - 1.0).abs() <= 1e-12);
            }
            other => panic!("expected ReducibleFactor, got {:?}", other.map(|_| ())),
        }
        let general = random_factors(2, &mut rng);
        assert!(matches!(
            unitary_rampd_report(&alphas, &general, &[vec![1, 2]]),
            Err(Error::BadInput(_))
        ));
    }

    #[test]
    fn factor_permutations_are_validated() {
        assert!(matches!(FactorPermutation::new(vec![]), Err(Error::BadInput(_))));
        assert!(matches!(FactorPermutation::new(vec![1, 1]), Err(Error::BadInput(_))));
        assert!(matches!(FactorPermutation::new(vec![2, 3]), Err(Error::BadInput(_))));
        let p = FactorPermutation::new(vec![2, 1]).unwrap();
        assert_eq!(p.word, vec![true]);
        assert_eq!(p.canonical(), vec![2, 1]);
    }
}
