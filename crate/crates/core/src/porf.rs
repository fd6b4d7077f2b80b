//! Para-orthogonal rational functions and rational Szego quadrature.
//!
//! A PORF Q_n = phi_n + tau phi_n^* (|tau| = 1) has n simple zeros on the
//! unit circle; those zeros are the quadrature nodes, the weights are
//! Christoffel numbers, and the rule is exact on L_{n-1} L_{(n-1)*}.

use num_complex::Complex64;

use crate::extc::{varpi, GammaSequence, VarpiForm};
use crate::measure::Measure;
use crate::orf::{pi_n, second_kind_function, OrfSystem};
use crate::ratfun::{poly_add, poly_eval, poly_scale, RationalFunction, Space};
use crate::{Error, Result};

fn check_tau(tau: Complex64) -> Result<()> {
    let dev = (tau.norm() - 1.0).abs();
    if dev > 1e-12 {
        return Err(Error::BadTau { modulus: tau.norm() });
    }
    Ok(())
}

fn poly_derivative(p: &[Complex64]) -> Vec<Complex64> {
    if p.len() <= 1 {
        return vec![Complex64::new(0.0, 0.0)];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect()
}

/// A rational Szego quadrature rule on the unit circle.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub n: usize,
    pub tau: Complex64,
    pub nodes: Vec<Complex64>,
    pub weights: Vec<f64>,
    pub seq: GammaSequence,
}

impl Quadrature {
    /// Apply the rule to a function given on the circle.
    pub fn apply<F>(&self, mut f: F) -> Result<Complex64>
    where
        F: FnMut(Complex64) -> Result<Complex64>,
    {
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(*x)? * *w;
        }
        Ok(acc)
    }

    /// Smallest pairwise node distance.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.nodes.len() {
            for j in i + 1..self.nodes.len() {
                best = best.min((self.nodes[i] - self.nodes[j]).norm());
            }
        }
        best
    }
}

fn porf_numerator(sys: &OrfSystem, n: usize, tau: Complex64) -> Vec<Complex64> {
    poly_add(&sys.phis[n].num, &poly_scale(&sys.phistars[n].num, tau))
}

/// The PORF Q_n = phi_n + tau phi_n^* and its second-kind associate
/// P_n = psi_n - tau psi_n^*, both over the level-n poles of the system.
pub fn build_porf(
    sys: &OrfSystem,
    n: usize,
    tau: Complex64,
) -> Result<(RationalFunction, RationalFunction)> {
    check_tau(tau)?;
    assert!(n >= 1 && n <= sys.degree(), "PORF degree out of range");
    let q = RationalFunction::new(
        porf_numerator(sys, n, tau),
        sys.phis[n].den_poles.clone(),
        n,
    );
    let psi = second_kind_function(sys, n)?;
    let psistar = psi.star(Space::new(&sys.seq, sys.kind, n))?;
    let p = RationalFunction::new(
        poly_add(&psi.num, &poly_scale(&psistar.num, -tau)),
        sys.phis[n].den_poles.clone(),
        n,
    );
    Ok((q, p))
}

/// The n zeros of Q_n(., tau), all simple and on the unit circle; computed
/// as companion-matrix eigenvalues of the numerator, checked against the
/// circle, projected onto it, and sorted by argument.
pub fn porf_zeros(sys: &OrfSystem, n: usize, tau: Complex64) -> Result<Vec<Complex64>> {
    check_tau(tau)?;
    assert!(n >= 1 && n <= sys.degree(), "PORF degree out of range");
    let num = porf_numerator(sys, n, tau);
    let scale = num.iter().map(|c| c.norm()).fold(0.0, f64::max);
    // the numerator has exact degree n: its leading coefficient is
    // a_n + tau varsigma conj(p_n(0)) and |p_n(0)| != |a_n| because the
    // zeros of p_n avoid the circle
    if num.len() < n + 1 || num[n].norm() <= 1e-12 * scale {
        return Err(Error::ZeroOffCircle {
            index: n,
            dist: f64::INFINITY,
        });
    }
    let mut roots = crate::eig::poly_roots(&num)?;
    for (j, r) in roots.iter_mut().enumerate() {
        let dist = (r.norm() - 1.0).abs();
        if dist > 1e-8 {
            return Err(Error::ZeroOffCircle { index: j, dist });
        }
        *r /= r.norm();
    }
    crate::eig::sort_by_arg(&mut roots);
    Ok(roots)
}

/// The n-point rational Szego rule: nodes are the zeros of Q_n(., tau),
/// the weight at xi is 1/sum_{k<n} |phi_k(xi)|^2.
pub fn quadrature(sys: &OrfSystem, n: usize, tau: Complex64) -> Result<Quadrature> {
    let nodes = porf_zeros(sys, n, tau)?;
    let mut weights = Vec::with_capacity(n);
    for &x in &nodes {
        let mut s = 0.0;
        for k in 0..n {
            s += sys.phis[k].eval(x)?.norm_sqr();
        }
        weights.push(1.0 / s);
    }
    let quad = Quadrature {
        n,
        tau,
        nodes,
        weights,
        seq: sys.seq.clone(),
    };
    let sep = quad.min_separation();
    if sep <= 1e-8 {
        return Err(Error::BadInput(format!(
            "quadrature nodes not separated: min distance {:.3e}",
            sep
        )));
    }
    if let Some(mu) = &sys.mu {
        // the rule integrates constants exactly, so the weights must sum to
        // the total mass
        let mass = mu.total_mass();
        let sum: f64 = quad.weights.iter().sum();
        if (sum - mass).abs() > 1e-10 * mass.max(1.0) {
            return Err(Error::BadInput(format!(
                "quadrature weights sum to {} instead of the total mass {}",
                sum, mass
            )));
        }
    }
    Ok(quad)
}

/// The alternative weight expression w_j = P_n(xi_j) / (2 xi_j Q_n'(xi_j)),
/// with the derivative taken analytically on the rational representation.
pub fn weights_second_kind(sys: &OrfSystem, quad: &Quadrature) -> Result<Vec<f64>> {
    let n = quad.n;
    let (q, p) = build_porf(sys, n, quad.tau)?;
    let dnum = poly_derivative(&q.num);
    let mut out = Vec::with_capacity(n);
    for (j, &x) in quad.nodes.iter().enumerate() {
        // logarithmic derivative of pi_n picks up -conj(gamma)/varpi per
        // finite pole factor and 1/z per infinite one
        let mut logd = Complex64::new(0.0, 0.0);
        for m in 1..=n {
            let nu = sys.nu(m);
            match nu.as_finite() {
                Some(g) if !nu.is_zero() => logd += -g.conj() / varpi(nu, x, VarpiForm::Plain),
                Some(_) => {}
                None => logd += 1.0 / x,
            }
        }
        let pi = pi_n(&sys.seq, sys.kind, n, x);
        let dq = (poly_eval(&dnum, x) - poly_eval(&q.num, x) * logd) / pi;
        if dq.norm() < 1e-12 {
            return Err(Error::DerivativeDegenerate {
                node: x,
                magnitude: dq.norm(),
            });
        }
        let w = p.eval(x)? / (2.0 * x * dq);
        if w.im.abs() > 1e-8 * w.norm().max(1e-8) || w.re <= 0.0 {
            return Err(Error::BadInput(format!(
                "second-kind weight {} at node {} is not positive real",
                w, j
            )));
        }
        out.push(w.re);
    }
    Ok(out)
}

/// Exactness test basis for R_{n-1} = L_{n-1} L_{(n-1)*}: the products
/// B_j^alpha (B_k^alpha)_* for 0 <= j, k <= n-1, evaluated on the circle
/// where substar is plain conjugation.
pub fn exactness_basis_value(
    seq: &GammaSequence,
    j: usize,
    k: usize,
    t: Complex64,
) -> Result<Complex64> {
    let bj = crate::extc::blaschke_products(seq, j, t)?.bn_alpha;
    let bk = crate::extc::blaschke_products(seq, k, t)?.bn_alpha;
    Ok(bj * bk.conj())
}

/// Check a rule against its measure on the full exactness basis; returns
/// the largest absolute integration error.
pub fn exactness_residual(quad: &Quadrature, mu: &Measure, n: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            let exact = mu.integrate(|t| exactness_basis_value(&quad.seq, j, k, t))?;
            let approx = quad.apply(|t| exactness_basis_value(&quad.seq, j, k, t))?;
            worst = worst.max((exact - approx).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extc::{Kind, Side};
    use crate::orf::{derive_gamma_system, gram_schmidt_orf};
    use crate::ratfun::{poly_coeff, poly_mul, varpi_star_coeffs};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cone() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn sample_alphas() -> Vec<Complex64> {
        vec![c(0.3, 0.1), c(-0.2, 0.4), c(0.15, -0.5), c(-0.35, -0.2), c(0.45, 0.05)]
    }

    fn seq_with_sides(sides: &[Side]) -> GammaSequence {
        GammaSequence::from_alphas(&sample_alphas()[..sides.len()], sides, Side::A).unwrap()
    }

    fn zero_seq(n: usize) -> GammaSequence {
        GammaSequence::from_alphas(&vec![c(0.0, 0.0); n], &vec![Side::A; n], Side::A).unwrap()
    }

    fn match_node_sets(a: &[Complex64], b: &[Complex64], tol: f64) {
        assert_eq!(a.len(), b.len());
        let mut used = vec![false; b.len()];
        for (i, x) in a.iter().enumerate() {
            let mut best = (f64::INFINITY, usize::MAX);
            for (j, y) in b.iter().enumerate() {
                if !used[j] {
                    let d = (x - y).norm();
                    if d < best.0 {
                        best = (d, j);
                    }
                }
            }
            assert!(best.0 <= tol, "node {} = {} unmatched (closest {:.3e})", i, x, best.0);
            used[best.1] = true;
        }
    }

    #[test]
    fn szego_porf_is_z_n_plus_tau() {
        let mu = Measure::lebesgue(256).unwrap();
        let seq = zero_seq(4);
        let sys = gram_schmidt_orf(&mu, &seq, 4, Kind::Alpha).unwrap();
        let (q1, _) = build_porf(&sys, 1, cone()).unwrap();
        let scale = poly_coeff(&q1.num, 1);
        assert!((poly_coeff(&q1.num, 0) / scale - cone()).norm() <= 1e-9);

        let tau = Complex64::from_polar(1.0, 0.7);
        let zeros = porf_zeros(&sys, 4, tau).unwrap();
        let mut want: Vec<Complex64> = (0..4)
            .map(|k| {
                Complex64::from_polar(
                    1.0,
                    (std::f64::consts::PI + 0.7 + std::f64::consts::TAU * k as f64) / 4.0,
                )
            })
            .collect();
        crate::eig::sort_by_arg(&mut want);
        match_node_sets(&zeros, &want, 1e-9);
    }

    #[test]
    fn porf_is_orthogonal_to_the_constrained_subspace() {
        let mu = Measure::random_discrete(31, 40).unwrap();
        let sides = vec![Side::A, Side::B, Side::B, Side::A];
        let seq = seq_with_sides(&sides);
        let sys_a = gram_schmidt_orf(&mu, &seq, 4, Kind::Alpha).unwrap();
        let sys = derive_gamma_system(&sys_a, &seq).unwrap();
        let n = 4;
        let tau = Complex64::from_polar(1.0, -1.2);
        let (q, _) = build_porf(&sys, n, tau).unwrap();
        // basis of L_{n-1}(gamma_n): varpi_n^* z^k / pi_{n-1}, k <= n - 2
        for k in 0..=n - 2 {
            let mut num = varpi_star_coeffs(sys.nu(n));
            let mut shift = vec![Complex64::new(0.0, 0.0); k + 1];
            shift[k] = cone();
            num = poly_mul(&num, &shift);
            let f = RationalFunction::new(num, Space::new(&seq, Kind::Gamma, n - 1).poles(), n - 1);
            let ip = mu.inner_product_rf(&q, &f).unwrap();
            assert!(ip.norm() <= 1e-9, "<Q_4, f_{}> = {}", k, ip);
        }
    }

    #[test]
    fn porf_recurrence_form_uses_translated_tau() {
        let mu = Measure::random_discrete(32, 40).unwrap();
        let sides = vec![Side::A, Side::B, Side::A, Side::A];
        let seq = seq_with_sides(&sides);
        let sys_a = gram_schmidt_orf(&mu, &seq, 4, Kind::Alpha).unwrap();
        for sys in [&sys_a, &derive_gamma_system(&sys_a, &seq).unwrap()] {
            let n = 4;
            let tau = Complex64::from_polar(1.0, 0.4);
            let (q, _) = build_porf(sys, n, tau).unwrap();
            let lambda = sys.lambdas[n - 1].as_finite().unwrap();
            let eta1 = sys.etas1[n - 1];
            let eta2 = sys.eta2(n);
            let tau_hat = eta1.conj() * eta2 * tau;
            let tau_tilde = (tau_hat + lambda) / (cone() + tau_hat * lambda.conj());
            assert!((tau_tilde.norm() - 1.0).abs() <= 1e-10, "translated tau not unimodular");
            let c_n = sys.es[n - 1] * (eta1 + eta2 * tau * lambda.conj());
            // c_n (zeta_{n-1} phi_{n-1} + tau-tilde phi_{n-1}^*), promoted to
            // the level-n numerator
            let w_prev = crate::ratfun::varpi_coeffs(sys.nu(n - 1));
            let w_prev_star = varpi_star_coeffs(sys.nu(n - 1));
            let a = poly_scale(
                &poly_mul(&w_prev_star, &sys.phis[n - 1].num),
                seq.sigma(n - 1),
            );
            let b = poly_mul(&w_prev, &sys.phistars[n - 1].num);
            let num = poly_scale(&poly_add(&a, &poly_scale(&b, tau_tilde)), c_n);
            let alt = RationalFunction::new(num, q.den_poles.clone(), n);
            assert!(crate::ratfun::eval_equal(&q, &alt, 1e-10).unwrap());
        }
    }

    #[test]
    fn gamma_zeros_match_alpha_zeros_after_tau_translation() {
        let mu = Measure::random_discrete(33, 40).unwrap();
        let sides = vec![Side::B, Side::A, Side::A, Side::B];
        let seq = seq_with_sides(&sides);
        let sys_a = gram_schmidt_orf(&mu, &seq, 4, Kind::Alpha).unwrap();
        let sys = derive_gamma_system(&sys_a, &seq).unwrap();
        let tau = Complex64::from_polar(1.0, 2.1);
        for n in [3usize, 4] {
            let zg = porf_zeros(&sys, n, tau).unwrap();
            let tau_a = match seq.side(n) {
                Side::A => tau,
                Side::B => tau.conj(),
            };
            let za = porf_zeros(&sys_a, n, tau_a).unwrap();
            match_node_sets(&zg, &za, 1e-9);
        }
    }

    #[test]
    fn zeros_are_simple_and_on_the_circle() {
        for seed in [41u64, 42, 43, 44, 45] {
            let mu = Measure::random_discrete(seed, 40).unwrap();
            let sides = vec![Side::A, Side::B, Side::A, Side::B];
            let seq = seq_with_sides(&sides);
            let sys_a = gram_schmidt_orf(&mu, &seq, 4, Kind::Alpha).unwrap();
            let sys = derive_gamma_system(&sys_a, &seq).unwrap();
            let tau = Complex64::from_polar(1.0, seed as f64);
            let quad = quadrature(&sys, 4, tau).unwrap();
            assert!(quad.min_separation() > 1e-8);
            for x in &quad.nodes {
                assert!((x.norm() - 1.0).abs() <= 1e-12, "node off circle after projection");
            }
        }
    }

    #[test]
    fn szego_quadrature_is_uniform() {
        let mu = Measure::lebesgue(512).unwrap();
        let seq = zero_seq(4);
        let sys = gram_schmidt_orf(&mu, &seq, 4, Kind::Alpha).unwrap();
        for n in [2usize, 4] {
            let quad = quadrature(&sys, n, cone()).unwrap();
            for w in &quad.weights {
                assert!((w - 1.0 / n as f64).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn quadrature_is_exact_on_the_product_space() {
        let mu = Measure::random_discrete(34, 40).unwrap();
        let sides = vec![Side::A, Side::B, Side::A, Side::A];
        let seq = seq_with_sides(&sides);
        let sys_a = gram_schmidt_orf(&mu, &seq, 4, Kind::Alpha).unwrap();
        let sys = derive_gamma_system(&sys_a, &seq).unwrap();
        let n = 4;
        for tau_arg in [0.0, 1.3] {
            let tau = Complex64::from_polar(1.0, tau_arg);
            for s in [&sys_a, &sys] {
                let quad = quadrature(s, n, tau).unwrap();
                let worst = exactness_residual(&quad, &mu, n).unwrap();
                assert!(worst <= 1e-9, "exactness residual {:.3e}", worst);
            }
        }
    }

    #[test]
    fn quadrature_is_invariant_under_gamma_ordering() {
        let mu = Measure::random_discrete(35, 40).unwrap();
        let sides = vec![Side::B, Side::B, Side::A, Side::B];
        let seq = seq_with_sides(&sides);
        let sys_a = gram_schmidt_orf(&mu, &seq, 4, Kind::Alpha).unwrap();
        let sys = derive_gamma_system(&sys_a, &seq).unwrap();
        let tau = Complex64::from_polar(1.0, 0.9);
        let n = 4;
        let qg = quadrature(&sys, n, tau).unwrap();
        let tau_a = match seq.side(n) {
            Side::A => tau,
            Side::B => tau.conj(),
        };
        let qa = quadrature(&sys_a, n, tau_a).unwrap();
        for j in 0..n {
            // both sorted by argument, so positions correspond
            assert!((qg.nodes[j] - qa.nodes[j]).norm() <= 1e-8);
            assert!((qg.weights[j] - qa.weights[j]).abs() <= 1e-8);
        }
    }

    #[test]
    fn second_kind_weights_match() {
        let mu = Measure::lebesgue(512).unwrap();
        let seq = zero_seq(2);
        let sys = gram_schmidt_orf(&mu, &seq, 2, Kind::Alpha).unwrap();
        let quad = quadrature(&sys, 2, cone()).unwrap();
        let alt = weights_second_kind(&sys, &quad).unwrap();
        for w in &alt {
            assert!((w - 0.5).abs() <= 1e-10);
        }

        let mu = Measure::random_discrete(36, 50).unwrap();
        let sides = vec![Side::A, Side::B, Side::A, Side::B, Side::A];
        let seq = seq_with_sides(&sides);
        let sys_a = gram_schmidt_orf(&mu, &seq, 5, Kind::Alpha).unwrap();
        let sys = derive_gamma_system(&sys_a, &seq).unwrap();
        let tau = Complex64::from_polar(1.0, -0.35);
        let quad = quadrature(&sys, 5, tau).unwrap();
        let alt = weights_second_kind(&sys, &quad).unwrap();
        for (w, a) in quad.weights.iter().zip(&alt) {
            assert!((w - a).abs() <= 1e-8 * w, "weights {} vs {}", w, a);
        }
    }

    #[test]
    fn tau_off_the_circle_is_rejected() {
        let mu = Measure::lebesgue(128).unwrap();
        let seq = zero_seq(2);
        let sys = gram_schmidt_orf(&mu, &seq, 2, Kind::Alpha).unwrap();
        assert!(matches!(
            porf_zeros(&sys, 2, c(1.1, 0.0)),
            Err(Error::BadTau { .. })
        ));
        assert!(matches!(
            build_porf(&sys, 2, c(0.5, 0.5)),
            Err(Error::BadTau { .. })
        ));
    }
}
