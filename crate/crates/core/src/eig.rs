//! Self-contained dense complex eigensolver.
//!
//! Hessenberg reduction by Householder reflections, single-shift QR iteration
//! with Wilkinson shifts to Schur form (a double shift is unnecessary over
//! the complex field), eigenvectors by back-substitution on the triangular
//! factor, and polynomial roots via a balanced companion matrix.  Everything
//! here targets desk-scale matrices (n up to a few hundred).

use num_complex::Complex64;

use crate::{Error, Result};

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn cone() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Square dense complex matrix, row-major.
#[derive(Clone, Debug)]
pub struct DenseMatrix {
    n: usize,
    a: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, a: vec![czero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = cone();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let n = rows.len();
        let mut m = DenseMatrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "row {} has wrong length", i);
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(n: usize, mut f: F) -> Self {
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Diagonal matrix from the given entries.
    pub fn diagonal(d: &[Complex64]) -> Self {
        let mut m = DenseMatrix::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += aik * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.n, v.len());
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn adjoint(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn add(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n, rhs.n);
        DenseMatrix::from_fn(self.n, |i, j| self[(i, j)] + rhs[(i, j)])
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n, rhs.n);
        DenseMatrix::from_fn(self.n, |i, j| self[(i, j)] - rhs[(i, j)])
    }

    pub fn scale(&self, c: Complex64) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, |i, j| self[(i, j)] * c)
    }

    pub fn norm_fro(&self) -> f64 {
        self.a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ‖MᴴM - I‖_F, a cheap unitarity residual.
    pub fn unitarity_residual(&self) -> f64 {
        self.adjoint().mul(self).sub(&DenseMatrix::identity(self.n)).norm_fro()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[Complex64]) {
        assert_eq!(v.len(), self.n);
        for i in 0..self.n {
            self[(i, j)] = v[i];
        }
    }

    /// Solve A X = B by LU with partial pivoting.
    pub fn solve_many(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        assert_eq!(self.n, b.n);
        let n = self.n;
        let mut lu = self.clone();
        let mut x = b.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut pivot_row, mut pivot_mag) = (k, lu[(k, k)].norm());
            for i in k + 1..n {
                if lu[(i, k)].norm() > pivot_mag {
                    pivot_row = i;
                    pivot_mag = lu[(i, k)].norm();
                }
            }
            if pivot_mag <= 1e-300 {
                return Err(Error::SingularMatrix { pivot: pivot_mag });
            }
            if pivot_row != k {
                for j in 0..n {
                    lu.a.swap(k * n + j, pivot_row * n + j);
                    x.a.swap(k * n + j, pivot_row * n + j);
                }
                perm.swap(k, pivot_row);
            }
            let piv = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / piv;
                lu[(i, k)] = factor;
                for j in k + 1..n {
                    let s = lu[(k, j)];
                    lu[(i, j)] -= factor * s;
                }
                for j in 0..n {
                    let s = x[(k, j)];
                    x[(i, j)] -= factor * s;
                }
            }
        }
        // back substitution on U
        for j in 0..n {
            for i in (0..n).rev() {
                let mut s = x[(i, j)];
                for k in i + 1..n {
                    s -= lu[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = s / lu[(i, i)];
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<DenseMatrix> {
        self.solve_many(&DenseMatrix::identity(self.n))
    }

    /// Determinant by LU with partial pivoting (0 for a singular matrix).
    pub fn det_lu(&self) -> Complex64 {
        let n = self.n;
        let mut lu = self.clone();
        let mut det = cone();
        for k in 0..n {
            let (mut pivot_row, mut pivot_mag) = (k, lu[(k, k)].norm());
            for i in k + 1..n {
                if lu[(i, k)].norm() > pivot_mag {
                    pivot_row = i;
                    pivot_mag = lu[(i, k)].norm();
                }
            }
            if pivot_mag == 0.0 {
                return czero();
            }
            if pivot_row != k {
                for j in 0..n {
                    lu.a.swap(k * n + j, pivot_row * n + j);
                }
                det = -det;
            }
            let piv = lu[(k, k)];
            det *= piv;
            for i in k + 1..n {
                let factor = lu[(i, k)] / piv;
                for j in k + 1..n {
                    let s = lu[(k, j)];
                    lu[(i, j)] -= factor * s;
                }
            }
        }
        det
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.a[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.a[i * self.n + j]
    }
}

/// Reduce to upper Hessenberg form: M = Q H Qᴴ with Q unitary.
pub fn hessenberg_reduce(m: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let n = m.n();
    let mut h = m.clone();
    let mut q = DenseMatrix::identity(n);
    if n < 3 {
        return (h, q);
    }
    for k in 0..n - 2 {
        // Householder vector for the column below the subdiagonal
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let tail: f64 = v.iter().skip(1).map(|x| x.norm_sqr()).sum();
        let xnorm = (v[0].norm_sqr() + tail).sqrt();
        if tail.sqrt() <= 1e-300 * xnorm.max(1.0) {
            continue; // column already reduced
        }
        let phase = if v[0].norm() == 0.0 { cone() } else { v[0] / v[0].norm() };
        v[0] += phase * xnorm;
        let vnorm2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // H <- P H with P = I - beta v vᴴ acting on rows k+1..n
        for j in 0..n {
            let dot: Complex64 =
                (k + 1..n).map(|i| v[i - k - 1].conj() * h[(i, j)]).sum();
            let scale = dot * beta;
            for i in k + 1..n {
                h[(i, j)] -= scale * v[i - k - 1];
            }
        }
        // H <- H P on columns k+1..n
        for i in 0..n {
            let dot: Complex64 = (k + 1..n).map(|j| h[(i, j)] * v[j - k - 1]).sum();
            let scale = dot * beta;
            for j in k + 1..n {
                h[(i, j)] -= scale * v[j - k - 1].conj();
            }
        }
        // Q <- Q P
        for i in 0..n {
            let dot: Complex64 = (k + 1..n).map(|j| q[(i, j)] * v[j - k - 1]).sum();
            let scale = dot * beta;
            for j in k + 1..n {
                q[(i, j)] -= scale * v[j - k - 1].conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = czero();
        }
    }
    (h, q)
}

/// Complex Givens rotation [[c, s], [-conj(s), c]] with real c sending
/// (a, b) to (r, 0).
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let h = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if b.norm() == 0.0 || h == 0.0 {
        return (1.0, czero());
    }
    if a.norm() == 0.0 {
        return (0.0, b.conj() / b.norm());
    }
    let c = a.norm() / h;
    let s = (a / a.norm()) * b.conj() / h;
    (c, s)
}

/// Schur decomposition M = Q T Qᴴ with T upper triangular.
#[derive(Clone, Debug)]
pub struct SchurDecomposition {
    pub t: DenseMatrix,
    pub q: DenseMatrix,
    pub eigenvalues: Vec<Complex64>,
}

/// Wilkinson shift: the eigenvalue of the trailing 2x2 block closest to the
/// bottom-right entry.
fn wilkinson_shift(t: &DenseMatrix, hi: usize) -> Complex64 {
    let a = t[(hi - 1, hi - 1)];
    let b = t[(hi - 1, hi)];
    let c = t[(hi, hi - 1)];
    let d = t[(hi, hi)];
    let tr_half = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powu(2) + b * c;
    let root = disc.sqrt();
    let lam1 = tr_half + root;
    let lam2 = tr_half - root;
    if (lam1 - d).norm() <= (lam2 - d).norm() {
        lam1
    } else {
        lam2
    }
}

pub fn schur(m: &DenseMatrix) -> Result<SchurDecomposition> {
    let n = m.n();
    if n == 0 {
        return Ok(SchurDecomposition {
            t: DenseMatrix::zeros(0),
            q: DenseMatrix::zeros(0),
            eigenvalues: Vec::new(),
        });
    }
    let (mut t, mut q) = hessenberg_reduce(m);
    let eps = f64::EPSILON;
    let fro = t.norm_fro().max(f64::MIN_POSITIVE);
    let max_sweeps = 40 * n;
    let mut sweeps = 0usize;
    let mut hi = n - 1;
    let mut stalls = 0usize;

    while hi > 0 {
        // deflate negligible subdiagonals at the bottom of the active block
        let mut small = eps * (t[(hi - 1, hi - 1)].norm() + t[(hi, hi)].norm());
        if small == 0.0 {
            small = eps * fro;
        }
        if t[(hi, hi - 1)].norm() <= small {
            t[(hi, hi - 1)] = czero();
            hi -= 1;
            stalls = 0;
            continue;
        }
        // find the top of the unreduced window
        let mut lo = hi;
        while lo > 0 {
            let mut s = eps * (t[(lo - 1, lo - 1)].norm() + t[(lo, lo)].norm());
            if s == 0.0 {
                s = eps * fro;
            }
            if t[(lo, lo - 1)].norm() <= s {
                t[(lo, lo - 1)] = czero();
                break;
            }
            lo -= 1;
        }

        sweeps += 1;
        if sweeps > max_sweeps {
            return Err(Error::NoConvergence { iterations: sweeps, n });
        }
        stalls += 1;
        let mu = if stalls % 10 == 0 {
            // exceptional shift to break symmetry-induced stalls
            t[(hi, hi)] + Complex64::new(0.75 * t[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(&t, hi)
        };

        // implicit single-shift QR step on the window [lo, hi]
        let mut x = t[(lo, lo)] - mu;
        let mut y = t[(lo + 1, lo)];
        for k in lo..hi {
            let (c, s) = givens(x, y);
            let cs = Complex64::new(c, 0.0);
            // rows k, k+1
            for j in k.saturating_sub(1)..n {
                let tk = t[(k, j)];
                let tk1 = t[(k + 1, j)];
                t[(k, j)] = cs * tk + s * tk1;
                t[(k + 1, j)] = -s.conj() * tk + cs * tk1;
            }
            // columns k, k+1
            let row_end = (k + 2).min(hi) + 1;
            for i in 0..row_end.min(n) {
                let tk = t[(i, k)];
                let tk1 = t[(i, k + 1)];
                t[(i, k)] = cs * tk + s.conj() * tk1;
                t[(i, k + 1)] = -s * tk + cs * tk1;
            }
            for i in 0..n {
                let qk = q[(i, k)];
                let qk1 = q[(i, k + 1)];
                q[(i, k)] = cs * qk + s.conj() * qk1;
                q[(i, k + 1)] = -s * qk + cs * qk1;
            }
            if k + 1 < hi {
                x = t[(k + 1, k)];
                y = t[(k + 2, k)];
            }
        }
    }

    // everything below the diagonal is negligible now
    for i in 1..n {
        for j in 0..i {
            t[(i, j)] = czero();
        }
    }
    let eigenvalues = (0..n).map(|i| t[(i, i)]).collect();
    Ok(SchurDecomposition { t, q, eigenvalues })
}

/// Eigenvalues only.
pub fn eigenvalues(m: &DenseMatrix) -> Result<Vec<Complex64>> {
    Ok(schur(m)?.eigenvalues)
}

/// Determinant as the product of the Schur diagonal.
pub fn det_via_schur(m: &DenseMatrix) -> Result<Complex64> {
    Ok(schur(m)?.eigenvalues.iter().product())
}

/// Eigenvector matrix for the given eigenvalues (one column per entry, in
/// the given order).  Columns have unit norm, eigenvalue clusters closer
/// than 1e-8 are re-orthonormalized, and each column is rotated so its
/// first nonzero component is positive real.
pub fn eigenvectors(m: &DenseMatrix, eigs: &[Complex64]) -> Result<DenseMatrix> {
    let n = m.n();
    assert_eq!(eigs.len(), n, "need exactly one eigenvalue per column");
    let dec = schur(m)?;
    let t = &dec.t;
    let tnorm = t.norm_fro().max(f64::MIN_POSITIVE);

    // match each requested eigenvalue to an unused Schur position
    let mut used = vec![false; n];
    let mut position = vec![0usize; n];
    for (i, lam) in eigs.iter().enumerate() {
        let mut best = usize::MAX;
        let mut best_dist = f64::INFINITY;
        for (p, &d) in dec.eigenvalues.iter().enumerate() {
            if !used[p] && (d - lam).norm() < best_dist {
                best = p;
                best_dist = (d - lam).norm();
            }
        }
        used[best] = true;
        position[i] = best;
    }

    let mut v = DenseMatrix::zeros(n);
    for (i, &lam) in eigs.iter().enumerate() {
        let p = position[i];
        // back substitution on (T - lam I) y = 0 with y[p] = 1
        let mut y = vec![czero(); n];
        y[p] = cone();
        for k in (0..p).rev() {
            let mut s = czero();
            for j in k + 1..=p {
                s += t[(k, j)] * y[j];
            }
            let mut d = t[(k, k)] - lam;
            if d.norm() < f64::EPSILON * tnorm {
                // guard against a vanishing denominator inside a cluster
                let floor = f64::EPSILON * tnorm;
                d = if d.norm() == 0.0 {
                    Complex64::new(floor, 0.0)
                } else {
                    d / d.norm() * floor
                };
            }
            y[k] = -s / d;
        }
        let mut col = dec.q.mul_vec(&y);
        let norm: f64 = col.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in col.iter_mut() {
            *x /= norm;
        }
        v.set_column(i, &col);
    }

    // group indices whose eigenvalues chain within 1e-8 and re-orthonormalize
    let mut cluster = vec![usize::MAX; n];
    let mut next_cluster = 0usize;
    for i in 0..n {
        if cluster[i] == usize::MAX {
            cluster[i] = next_cluster;
            next_cluster += 1;
        }
        for j in i + 1..n {
            if (eigs[i] - eigs[j]).norm() < 1e-8 {
                cluster[j] = cluster[i];
            }
        }
    }
    for c in 0..next_cluster {
        let members: Vec<usize> = (0..n).filter(|&i| cluster[i] == c).collect();
        if members.len() < 2 {
            continue;
        }
        for (idx, &i) in members.iter().enumerate() {
            let mut col = v.column(i);
            for &j in &members[..idx] {
                let prev = v.column(j);
                let proj: Complex64 =
                    prev.iter().zip(&col).map(|(p, x)| p.conj() * x).sum();
                for (x, p) in col.iter_mut().zip(&prev) {
                    *x -= proj * p;
                }
            }
            let norm: f64 = col.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                return Err(Error::DefectiveCluster { eigenvalue: eigs[i] });
            }
            for x in col.iter_mut() {
                *x /= norm;
            }
            v.set_column(i, &col);
        }
    }

    // phase convention: first nonzero component positive real
    for j in 0..n {
        let col = v.column(j);
        let maxmag = col.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if let Some(first) = col.iter().find(|x| x.norm() > 1e-11 * maxmag) {
            let phase = first.conj() / first.norm();
            let rotated: Vec<Complex64> = col.iter().map(|x| x * phase).collect();
            v.set_column(j, &rotated);
        }
    }

    // residual check: a failure here means the input was too far from
    // diagonalizable for this column
    let mnorm = m.norm_fro().max(f64::MIN_POSITIVE);
    for (j, &lam) in eigs.iter().enumerate() {
        let col = v.column(j);
        let mv = m.mul_vec(&col);
        let res: f64 = mv
            .iter()
            .zip(&col)
            .map(|(a, b)| (a - b * lam).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if res > 1e-9 * mnorm {
            return Err(Error::DefectiveCluster { eigenvalue: lam });
        }
    }
    Ok(v)
}

/// Roots of a polynomial given by ascending coefficients, via the Schur form
/// of a companion matrix.  The variable is rescaled first so the companion
/// entries stay O(1) for mixed-magnitude coefficients.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    if coeffs.len() < 2 {
        return Err(Error::BadInput("poly_roots needs degree at least 1".into()));
    }
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    if lead.norm() <= 1e-300 {
        return Err(Error::DegenerateLeading);
    }
    // scale z = s w with the Fujiwara-style bound so all companion entries
    // have modulus at most 1
    let mut s = 0.0f64;
    for (k, c) in coeffs.iter().enumerate().take(n) {
        let ratio = (c.norm() / lead.norm()).powf(1.0 / (n - k) as f64);
        s = s.max(ratio);
    }
    if !(1e-8..=1e8).contains(&s) {
        s = if s == 0.0 { 1.0 } else { s.clamp(1e-8, 1e8) };
    }
    let mut companion = DenseMatrix::zeros(n);
    for i in 1..n {
        companion[(i, i - 1)] = cone();
    }
    let scale_n = s.powi(n as i32);
    for k in 0..n {
        let b = coeffs[k] * s.powi(k as i32) / (lead * scale_n);
        companion[(k, n - 1)] = -b;
    }
    let eigs = schur(&companion)?.eigenvalues;
    Ok(eigs.into_iter().map(|w| w * s).collect())
}

/// Sort eigenvalues (or circle nodes) by argument, then modulus.
pub fn sort_by_arg(values: &mut [Complex64]) {
    values.sort_by(|a, b| {
        (a.arg(), a.norm())
            .partial_cmp(&(b.arg(), b.norm()))
            .expect("finite values")
    });
}
