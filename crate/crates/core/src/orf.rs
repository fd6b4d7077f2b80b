//! Orthonormal rational function systems.
//!
//! Builds ORF families for alpha-, beta-, and gamma-pole sequences:
//! Gram-Schmidt construction against a measure, derivation of the
//! gamma-system from the alpha-system, Szego-type recurrence extraction and
//! replay, Christoffel-Darboux kernels, and functions of the second kind.

use num_complex::Complex64;

use crate::extc::{u_map, varpi, ExtComplex, GammaSequence, Kind, Side, VarpiForm};
use crate::measure::Measure;
use crate::ratfun::{
    numerator_star, poly_add, poly_coeff, poly_eval, poly_mul, poly_scale, varpi_coeffs,
    varpi_star_coeffs, RationalFunction, Space,
};
use crate::{Error, Result};

fn cone() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// 1 - |v|^2 with the convention 1 - |inf|^2 = -1.
pub fn disk_factor(v: ExtComplex) -> f64 {
    match v.as_finite() {
        Some(z) => 1.0 - z.norm_sqr(),
        None => -1.0,
    }
}

/// Evaluate a polynomial of formal degree `deg` at an extended point;
/// evaluation at infinity takes the coefficient of z^deg.
pub fn eval_formal(p: &[Complex64], deg: usize, x: ExtComplex) -> Complex64 {
    match x.as_finite() {
        Some(z) => poly_eval(p, z),
        None => poly_coeff(p, deg),
    }
}

/// varpi factor value at an extended point; at infinity this is the
/// coefficient of the formal degree-one factor.
fn varpi_ext(nu: ExtComplex, x: ExtComplex, form: VarpiForm) -> Complex64 {
    match x.as_finite() {
        Some(z) => varpi(nu, z, form),
        None => match (form, nu.as_finite()) {
            (VarpiForm::Plain, Some(v)) if !nu.is_zero() => -v.conj(),
            (VarpiForm::Plain, Some(_)) => cone(), // nu = 0: constant factor
            (VarpiForm::Plain, None) => -cone(),
            (VarpiForm::Star, Some(_)) => cone(), // z - nu has leading 1
            (VarpiForm::Star, None) => -cone(),
        },
    }
}

/// Denominator product pi_n at a point.
pub fn pi_n(seq: &GammaSequence, kind: Kind, n: usize, z: Complex64) -> Complex64 {
    (1..=n).map(|j| varpi(seq.nu(j, kind), z, VarpiForm::Plain)).product()
}

fn varsigma_upto(seq: &GammaSequence, k: isize) -> Complex64 {
    if k < 1 {
        return cone();
    }
    (1..=k as usize).map(|j| seq.sigma(j)).product()
}

/// The phase of w, i.e. w/|w|.
fn phase(w: Complex64) -> Complex64 {
    w / w.norm()
}

/// An orthonormal rational function system of some degree n: the functions
/// phi_0..phi_n with their reciprocals, the recurrence data, and the measure
/// they are orthonormal against (absent for synthesized families).
#[derive(Clone, Debug)]
pub struct OrfSystem {
    pub seq: GammaSequence,
    pub kind: Kind,
    pub phis: Vec<RationalFunction>,
    pub phistars: Vec<RationalFunction>,
    /// lambda_1..lambda_n; infinity marks a non-regular gamma index.
    pub lambdas: Vec<ExtComplex>,
    /// e_1..e_n, all positive.
    pub es: Vec<f64>,
    /// eta_11..eta_n1, all unimodular.
    pub etas1: Vec<Complex64>,
    pub mu: Option<Measure>,
    pub synthetic: bool,
}

impl OrfSystem {
    pub fn degree(&self) -> usize {
        self.phis.len() - 1
    }

    /// The pole parameter nu_j for this system's kind (j = 0 allowed).
    pub fn nu(&self, j: usize) -> ExtComplex {
        self.seq.nu(j, self.kind)
    }

    /// eta_n2 determined by eta_n1.
    pub fn eta2(&self, n: usize) -> Complex64 {
        self.etas1[n - 1].conj() * self.seq.sigma(n - 1).conj() * self.seq.sigma(n)
    }

    /// Max deviation of the Gram matrix from the identity under `mu`.
    pub fn orthonormality_residual(&self) -> Result<f64> {
        let mu = self
            .mu
            .as_ref()
            .ok_or_else(|| Error::BadInput("system has no measure attached".into()))?;
        let mut worst = 0.0f64;
        for i in 0..self.phis.len() {
            for j in i..self.phis.len() {
                let g = mu.inner_product_rf(&self.phis[i], &self.phis[j])?;
                let target = if i == j { cone() } else { Complex64::new(0.0, 0.0) };
                worst = worst.max((g - target).norm());
            }
        }
        Ok(worst)
    }
}

/// Normalization value whose positivity fixes the unimodular freedom of
/// phi_k.  For kinds alpha/beta this is phi_k^{nu*}(nu_k); for gamma it is
/// the cancellation-safe numerator form of (phi_k^*/dotted-B) at gamma_k,
/// which never meets a pole.
fn normalization_value(
    seq: &GammaSequence,
    kind: Kind,
    k: usize,
    num: &[Complex64],
) -> Result<Complex64> {
    if k == 0 {
        return Ok(poly_coeff(num, 0).conj());
    }
    match kind {
        Kind::Alpha | Kind::Beta => {
            let f = RationalFunction::new(num.to_vec(), Space::new(seq, kind, k).poles(), k);
            let fstar = f.star(Space::new(seq, kind, k))?;
            fstar.evaluate(seq.nu(k, kind))
        }
        Kind::Gamma => gamma_norm_value(seq, k, num),
    }
}

/// Cancellation-safe kind-gamma normalization value: equals
/// phi_k^{alpha*}(alpha_k) when side(k) = A and phi_k^{beta*}(beta_k) when
/// side(k) = B, computed from the gamma numerator alone.
fn gamma_norm_value(seq: &GammaSequence, k: usize, num: &[Complex64]) -> Result<Complex64> {
    let q = numerator_star(num, k);
    let ia = seq.indices_a(k);
    let ib = seq.indices_b(k);
    match seq.side(k) {
        Side::A => {
            let x = ExtComplex::Finite(seq.alpha(k));
            let sdot: Complex64 = ia.iter().map(|&j| seq.sigma(j)).product();
            let mut den = cone();
            for &j in &ia {
                den *= varpi_ext(ExtComplex::Finite(seq.alpha(j)), x, VarpiForm::Plain);
            }
            for &j in &ib {
                den *= varpi_ext(seq.beta(j), x, VarpiForm::Star);
            }
            Ok(sdot * eval_formal(&q, k, x) / den)
        }
        Side::B => {
            let x = seq.beta(k);
            let sdot: Complex64 = ib.iter().map(|&j| seq.sigma(j)).product();
            let mut den = cone();
            for &j in &ib {
                den *= varpi_ext(seq.beta(j), x, VarpiForm::Plain);
            }
            for &j in &ia {
                den *= varpi_ext(ExtComplex::Finite(seq.alpha(j)), x, VarpiForm::Star);
            }
            Ok(sdot * eval_formal(&q, k, x) / den)
        }
    }
}

/// Multiply a numerator from the degree-`from` space up to the degree-`to`
/// space of the same kind.
fn promote(num: &[Complex64], seq: &GammaSequence, kind: Kind, from: usize, to: usize) -> Vec<Complex64> {
    let mut out = num.to_vec();
    for j in from + 1..=to {
        out = poly_mul(&out, &varpi_coeffs(seq.nu(j, kind)));
    }
    out
}

fn make_rf(num: Vec<Complex64>, seq: &GammaSequence, kind: Kind, k: usize) -> RationalFunction {
    RationalFunction::new(num, Space::new(seq, kind, k).poles(), k)
}

/// Orthonormalize the Blaschke basis of the degree-n space of the given
/// kind (alpha or beta) against `mu` by modified Gram-Schmidt with one
/// reorthogonalization pass, then fix each phase by the kind's positivity
/// normalization.
pub fn gram_schmidt_orf(
    mu: &Measure,
    seq: &GammaSequence,
    n: usize,
    kind: Kind,
) -> Result<OrfSystem> {
    if kind == Kind::Gamma {
        return Err(Error::BadInput(
            "gamma systems are derived from the alpha system, not orthogonalized directly".into(),
        ));
    }
    assert!(n <= seq.len(), "degree exceeds pole sequence length");

    let mut nums: Vec<Vec<Complex64>> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        // basis function B_k as a numerator over pi_k
        let mut b = vec![Space::new(seq, kind, k).varsigma()];
        for j in 1..=k {
            b = poly_mul(&b, &varpi_star_coeffs(seq.nu(j, kind)));
        }
        let b_rf = make_rf(b.clone(), seq, kind, k);
        let bnorm2 = mu.inner_product_rf(&b_rf, &b_rf)?.re;

        let promoted: Vec<RationalFunction> = nums
            .iter()
            .enumerate()
            .map(|(j, p)| make_rf(promote(p, seq, kind, j, k), seq, kind, k))
            .collect();
        let mut v = b;
        for _ in 0..2 {
            for p in &promoted {
                let v_rf = make_rf(v.clone(), seq, kind, k);
                let c = mu.inner_product_rf(p, &v_rf)?;
                v = poly_add(&v, &poly_scale(&p.num, -c));
            }
        }
        let v_rf = make_rf(v.clone(), seq, kind, k);
        let norm2 = mu.inner_product_rf(&v_rf, &v_rf)?.re;
        if norm2 <= 1e-24 * bnorm2.max(1e-300) {
            return Err(Error::RankDeficient {
                n: k,
                detail: format!("residual norm^2 = {:.3e} after projection", norm2),
            });
        }
        let mut p = poly_scale(&v, Complex64::new(1.0 / norm2.sqrt(), 0.0));
        let val = normalization_value(seq, kind, k, &p)?;
        if val.norm() <= 1e-12 {
            return Err(Error::NormalizationDegenerate { index: k });
        }
        p = poly_scale(&p, phase(val));
        nums.push(p);
    }

    finish_system(nums, seq.clone(), kind, Some(mu.clone()), false)
}

/// Assemble an OrfSystem from numerators: build the reciprocals and extract
/// the recurrence data.
fn finish_system(
    nums: Vec<Vec<Complex64>>,
    seq: GammaSequence,
    kind: Kind,
    mu: Option<Measure>,
    synthetic: bool,
) -> Result<OrfSystem> {
    let mut phis = Vec::with_capacity(nums.len());
    let mut phistars = Vec::with_capacity(nums.len());
    for (k, num) in nums.into_iter().enumerate() {
        let f = make_rf(num, &seq, kind, k);
        let fstar = f.star(Space::new(&seq, kind, k))?;
        phis.push(f);
        phistars.push(fstar);
    }
    let mut sys = OrfSystem {
        seq,
        kind,
        phis,
        phistars,
        lambdas: Vec::new(),
        es: Vec::new(),
        etas1: Vec::new(),
        mu,
        synthetic,
    };
    let (lambdas, es, etas1) = extract_recurrence_data(&sys)?;
    sys.lambdas = lambdas;
    sys.es = es;
    sys.etas1 = etas1;
    Ok(sys)
}

/// Derive the gamma-system from an alpha-system over the same poles: each
/// phi_n is phi_n^alpha or its reciprocal times the dotted Blaschke factor,
/// realized on numerators so the denominator poles are the gamma poles.
pub fn derive_gamma_system(alpha_sys: &OrfSystem, seq: &GammaSequence) -> Result<OrfSystem> {
    if alpha_sys.kind != Kind::Alpha {
        return Err(Error::BadInput("derive_gamma_system needs a kind-A system".into()));
    }
    let n = alpha_sys.degree();
    if seq.len() < n {
        return Err(Error::SequenceMismatch(format!(
            "gamma sequence has {} poles, alpha system has degree {}",
            seq.len(),
            n
        )));
    }
    for j in 1..=n {
        if (seq.alpha(j) - alpha_sys.seq.alpha(j)).norm() > 1e-14 {
            return Err(Error::SequenceMismatch(format!("alpha_{} differs between sequences", j)));
        }
    }

    let mut nums: Vec<Vec<Complex64>> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let pa = &alpha_sys.phis[k].num;
        let ib = seq.indices_b(k);
        // constant from rewriting the dotted beta Blaschke factor over the
        // gamma denominator: each beta-side index contributes
        // varpi^{beta*}/varpi^alpha = -beta_j (or -1 when beta_j = inf)
        let mut c = cone();
        for &j in &ib {
            c *= seq.sigma(j);
            c *= match seq.beta(j).as_finite() {
                Some(b) => -b,
                None => -cone(),
            };
        }
        let vs = varsigma_upto(seq, k as isize);
        let num = match seq.side(k) {
            Side::A => poly_scale(pa, c),
            Side::B => poly_scale(&numerator_star(pa, k), vs * c),
        };
        nums.push(num);
    }
    finish_system(nums, seq.clone(), Kind::Gamma, alpha_sys.mu.clone(), alpha_sys.synthetic)
}

/// Read the recurrence data (lambda_n, e_n, eta_n1 for n = 1..degree) off a
/// populated system.  The lambdas come from the numerators evaluated at
/// nu_{n-1}; a gamma index with p_n^*(gamma_{n-1}) ~ 0 is non-regular and
/// yields lambda_n = infinity.
pub fn extract_recurrence_data(
    sys: &OrfSystem,
) -> Result<(Vec<ExtComplex>, Vec<f64>, Vec<Complex64>)> {
    let n = sys.degree();
    let seq = &sys.seq;
    let mut lambdas = Vec::with_capacity(n);
    let mut es = Vec::with_capacity(n);
    let mut etas1 = Vec::with_capacity(n);

    for m in 1..=n {
        let p = &sys.phis[m].num;
        let pstar = numerator_star(p, m);
        let x = sys.nu(m - 1);
        let pstar_at = eval_formal(&pstar, m, x);
        let scale = pstar.iter().map(|c| c.norm()).fold(0.0, f64::max);

        let (lambda, e2) = if pstar_at.norm() <= 1e-12 * scale {
            (
                ExtComplex::Infinity,
                -disk_factor(sys.nu(m)) / disk_factor(sys.nu(m - 1)),
            )
        } else {
            let pprev_star = numerator_star(&sys.phis[m - 1].num, m - 1);
            let pprev_star_at = eval_formal(&pprev_star, m - 1, x);
            let eta = varsigma_upto(seq, m as isize - 2).conj() * pprev_star_at.conj()
                / pprev_star_at;
            let l = eta * eval_formal(p, m, x) / pstar_at.conj();
            let e2 = disk_factor(sys.nu(m)) / disk_factor(sys.nu(m - 1)) / (1.0 - l.norm_sqr());
            (ExtComplex::Finite(l), e2)
        };
        if !(e2 > 0.0) {
            return Err(Error::NonPositiveESquared { index: m, value: e2 });
        }
        let e = e2.sqrt();

        let eta1 = match (sys.kind, x.as_finite()) {
            (Kind::Alpha | Kind::Beta, Some(xf)) => {
                // closed form from evaluating the recurrence at nu_{n-1}:
                // conj(sigma_{n-1}) sigma_n
                //   u(varpi_n(nu_{n-1}) phi_n^{nu*}(nu_{n-1}) / varpi_{n-1}(nu_{n-1})).
                // The last factor is 1 - |nu_{n-1}|^2, positive for an
                // alpha point but negative for a beta point, so only its
                // sign matters inside u.
                let w = varpi(sys.nu(m), xf, VarpiForm::Plain)
                    * sys.phistars[m].eval(xf)?
                    * disk_factor(x).signum();
                seq.sigma(m - 1).conj() * seq.sigma(m) * u_map(ExtComplex::Finite(w))
            }
            _ => {
                // gamma kind, or a beta reference point at infinity where
                // the closed form has no direction-independent phase: run
                // the step with eta = 1 and read the phase off the
                // normalization condition.
                let (trial, _) = recurrence_step(
                    (&sys.phis[m - 1], &sys.phistars[m - 1]),
                    (lambda, e, cone()),
                    seq,
                    sys.kind,
                    m,
                )?;
                let v = normalization_value(seq, sys.kind, m, &trial.num)?;
                if v.norm() <= 1e-12 {
                    return Err(Error::NormalizationDegenerate { index: m });
                }
                phase(v)
            }
        };
        lambdas.push(lambda);
        es.push(e);
        etas1.push(eta1);
    }
    Ok((lambdas, es, etas1))
}

/// One forward step of the recurrence: from (phi_{n-1}, phi_{n-1}^*) and
/// (lambda_n, e_n, eta_n1) to (phi_n, phi_n^*).  lambda_n = infinity uses
/// the swap matrix in place of the usual middle factor.
pub fn recurrence_step(
    prev: (&RationalFunction, &RationalFunction),
    data: (ExtComplex, f64, Complex64),
    seq: &GammaSequence,
    kind: Kind,
    n: usize,
) -> Result<(RationalFunction, RationalFunction)> {
    let (phi, phistar) = prev;
    assert_eq!(phi.n, n - 1, "previous pair must have degree n - 1");
    let (lambda, e, eta1) = data;
    assert!(e > 0.0, "e_n must be positive");
    assert!((eta1.norm() - 1.0).abs() <= 1e-10, "eta_n1 must be unimodular");
    let eta2 = eta1.conj() * seq.sigma(n - 1).conj() * seq.sigma(n);
    let ec = Complex64::new(e, 0.0);

    let w_prev = varpi_coeffs(seq.nu(n - 1, kind));
    let w_prev_star = varpi_star_coeffs(seq.nu(n - 1, kind));
    // a = sigma_{n-1} varpi_{n-1}^* p_{n-1}, the zeta branch; b = varpi_{n-1} q_{n-1}
    let a = poly_scale(&poly_mul(&w_prev_star, &phi.num), seq.sigma(n - 1));
    let b = poly_mul(&w_prev, &phistar.num);

    let (p, q) = match lambda.as_finite() {
        Some(l) => (
            poly_scale(&poly_add(&a, &poly_scale(&b, l)), ec * eta1),
            poly_scale(&poly_add(&poly_scale(&a, l.conj()), &b), ec * eta2),
        ),
        None => (poly_scale(&b, ec * eta1), poly_scale(&a, ec * eta2)),
    };
    Ok((make_rf(p, seq, kind, n), make_rf(q, seq, kind, n)))
}

/// Generate a family from recurrence parameters alone (eta_n1 = 1, e_n from
/// the closed formulas).  No measure is attached; the family is flagged
/// synthetic.  Runs over the gamma poles of `seq`.
pub fn synthesize_from_params(lambdas: &[ExtComplex], seq: &GammaSequence) -> Result<OrfSystem> {
    let n = lambdas.len();
    assert!(n <= seq.len(), "more parameters than poles");
    let kind = Kind::Gamma;
    let mut phis = vec![RationalFunction::constant(cone())];
    let mut phistars = vec![RationalFunction::constant(cone())];
    let mut es = Vec::with_capacity(n);

    for (m, &lambda) in lambdas.iter().enumerate() {
        let m = m + 1;
        let ratio = disk_factor(seq.nu(m, kind)) / disk_factor(seq.nu(m - 1, kind));
        let e2 = match lambda.as_finite() {
            Some(l) => {
                let d = 1.0 - l.norm_sqr();
                if d.abs() <= 1e-14 {
                    return Err(Error::ParamRegionViolation(format!(
                        "|lambda_{}| = 1 makes e_{}^2 blow up",
                        m, m
                    )));
                }
                ratio / d
            }
            None => -ratio,
        };
        if !(e2 > 0.0) {
            return Err(Error::ParamRegionViolation(format!(
                "e_{}^2 = {:.3e} <= 0 for lambda_{} = {}",
                m, e2, m, lambda
            )));
        }
        let e = e2.sqrt();
        let (p, q) = recurrence_step(
            (&phis[m - 1], &phistars[m - 1]),
            (lambda, e, cone()),
            seq,
            kind,
            m,
        )?;
        phis.push(p);
        phistars.push(q);
        es.push(e);
    }
    Ok(OrfSystem {
        seq: seq.clone(),
        kind,
        lambdas: lambdas.to_vec(),
        es,
        etas1: vec![cone(); n],
        phis,
        phistars,
        mu: None,
        synthetic: true,
    })
}

/// Which Christoffel-Darboux expression to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CdForm {
    /// Plain sum of phi_k(z) conj(phi_k(w)).
    Sum,
    /// Closed form in phi_n, phi_n^*.
    First,
    /// Closed form in phi_{n+1}, phi_{n+1}^*.
    Second,
    /// Numerator kernel C_n(z, w) = k_n(z, w) pi_n(z) conj(pi_n(w)).
    Numerator,
}

/// Christoffel-Darboux kernel k_n(z, w) (forms Sum/First/Second) or its
/// numerator C_n(z, w) (form Numerator, with the four infinity branches at
/// w = gamma_n).
pub fn cd_kernel(
    sys: &OrfSystem,
    n: usize,
    z: ExtComplex,
    w: ExtComplex,
    form: CdForm,
) -> Result<Complex64> {
    assert!(n <= sys.degree(), "kernel degree exceeds system degree");
    match form {
        CdForm::Sum => {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..=n {
                acc += sys.phis[k].evaluate(z)? * sys.phis[k].evaluate(w)?.conj();
            }
            Ok(acc)
        }
        CdForm::First | CdForm::Second => {
            let m = if form == CdForm::First { n } else { n + 1 };
            if m > sys.degree() {
                return Err(Error::BadInput(
                    "second CD form needs degree n + 1 in the system".into(),
                ));
            }
            let (zf, wf) = match (z.as_finite(), w.as_finite()) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::BadInput(
                        "closed CD forms need finite arguments".into(),
                    ))
                }
            };
            let zz = crate::extc::zeta(sys.nu(m), zf)? * crate::extc::zeta(sys.nu(m), wf)?.conj();
            let den = cone() - zz;
            if den.norm() <= 1e-13 {
                return Err(Error::DegenerateDenominator { z: zf, w: wf });
            }
            let fz = sys.phis[m].evaluate(z)?;
            let fw = sys.phis[m].evaluate(w)?;
            let gz = sys.phistars[m].evaluate(z)?;
            let gw = sys.phistars[m].evaluate(w)?;
            let scale = if form == CdForm::First { zz } else { cone() };
            Ok((gz * gw.conj() - scale * fz * fw.conj()) / den)
        }
        CdForm::Numerator => cd_numerator(sys, n, z, w),
    }
}

/// C_n(z, w).  At w = gamma_n the four displayed branches (gamma_n and/or
/// gamma_{n+1} infinite) are used whenever degree n + 1 is available; the
/// general finite-argument case uses the denominator-free first form.
fn cd_numerator(sys: &OrfSystem, n: usize, z: ExtComplex, w: ExtComplex) -> Result<Complex64> {
    let p = &sys.phis[n].num;
    let pstar = numerator_star(p, n);
    let gamma_n = sys.nu(n);

    if w == gamma_n && n + 1 <= sys.degree() {
        // second CD form collapsed at w = gamma_n.  Since
        // (1 - zeta(z) conj(zeta(w))) varpi(z) conj(varpi(w))
        //   = disk(gamma_{n+1}) (1 - z conj(w)),
        // the denominator is disk(gamma_{n+1}) (1 - conj(gamma_n) z) for
        // finite gamma_n; at gamma_n = inf the formal leading coefficient
        // in conj(w) is disk(gamma_{n+1}) (-z).
        let zf = match z.as_finite() {
            Some(v) => v,
            None => {
                // fall back to the collapsed first form, valid for z = inf
                return Ok(eval_formal(&pstar, n, z) * eval_formal(&pstar, n, w).conj());
            }
        };
        let p1 = &sys.phis[n + 1].num;
        let p1star = numerator_star(p1, n + 1);
        let gamma_n1 = sys.nu(n + 1);
        let num = poly_eval(&p1star, zf) * eval_formal(&p1star, n + 1, w).conj()
            - poly_eval(p1, zf) * eval_formal(p1, n + 1, w).conj();
        let den = Complex64::new(disk_factor(gamma_n1), 0.0)
            * match gamma_n.as_finite() {
                Some(g) => cone() - g.conj() * zf,
                None => -zf,
            };
        if den.norm() <= 1e-300 {
            return Err(Error::DegenerateDenominator {
                z: zf,
                w: w.as_finite().unwrap_or(Complex64::new(f64::INFINITY, 0.0)),
            });
        }
        return Ok(num / den);
    }

    if w == gamma_n {
        // collapsed first form: C_n(z, gamma_n) = p_n^*(z) conj(p_n^*(gamma_n))
        return Ok(eval_formal(&pstar, n, z) * eval_formal(&pstar, n, w).conj());
    }

    let (zf, wf) = match (z.as_finite(), w.as_finite()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::BadInput(
                "numerator CD form needs finite arguments away from gamma_n".into(),
            ))
        }
    };
    // first form with the zeta factors cleared:
    // C_n = [p*(z) conj(p*(w)) varpi(z) conj(varpi(w))
    //        - p(z) conj(p(w)) varpi*(z) conj(varpi*(w))]
    //       / [(1 - |gamma_n|^2)(1 - z conj(w))]
    let den = Complex64::new(disk_factor(gamma_n), 0.0) * (cone() - zf * wf.conj());
    if den.norm() <= 1e-13 {
        return Err(Error::DegenerateDenominator { z: zf, w: wf });
    }
    let vp_z = varpi(gamma_n, zf, VarpiForm::Plain);
    let vp_w = varpi(gamma_n, wf, VarpiForm::Plain);
    let vs_z = varpi(gamma_n, zf, VarpiForm::Star);
    let vs_w = varpi(gamma_n, wf, VarpiForm::Star);
    let num = poly_eval(&pstar, zf) * poly_eval(&pstar, wf).conj() * vp_z * vp_w.conj()
        - poly_eval(p, zf) * poly_eval(p, wf).conj() * vs_z * vs_w.conj();
    Ok(num / den)
}

/// psi_n(z), the function of the second kind, by integrating
/// (t + z)/(t - z) [phi_n(t) - phi_n(z)] against the system's measure.
pub fn second_kind_value(sys: &OrfSystem, n: usize, z: Complex64) -> Result<Complex64> {
    if n == 0 {
        return Ok(cone());
    }
    let mu = sys
        .mu
        .as_ref()
        .ok_or_else(|| Error::BadInput("second kind functions need a measure".into()))?;
    let dist = mu.distance_to_support(z);
    if dist <= 1e-10 {
        return Err(Error::TooCloseToSupport { z, dist });
    }
    let phi_z = sys.phis[n].eval(z)?;
    mu.integrate(|t| {
        let d = (t + z) / (t - z);
        Ok(d * (sys.phis[n].eval(t)? - phi_z))
    })
}

/// Materialize psi_n as a rational function with the same poles as phi_n by
/// interpolation at n + 1 points on a circle of radius 1.5 (rotated until
/// clear of the poles of phi_n).
pub fn second_kind_function(sys: &OrfSystem, n: usize) -> Result<RationalFunction> {
    if n == 0 {
        return Ok(RationalFunction::constant(cone()));
    }
    let poles = &sys.phis[n].den_poles;
    let radius = 1.5;
    let mut points = Vec::new();
    'attempt: for attempt in 0..64 {
        let theta0 = 0.05 + 0.37 * attempt as f64;
        let cand: Vec<Complex64> = (0..=n)
            .map(|j| {
                Complex64::from_polar(
                    radius,
                    theta0 + std::f64::consts::TAU * j as f64 / (n + 1) as f64,
                )
            })
            .collect();
        for z in &cand {
            for pole in poles {
                if let Some(p) = pole.substar().as_finite() {
                    if (z - p).norm() <= 1e-6 {
                        continue 'attempt;
                    }
                }
            }
        }
        points = cand;
        break;
    }
    assert!(!points.is_empty(), "could not place interpolation points off the poles");

    let mut rhs = crate::eig::DenseMatrix::zeros(n + 1);
    let mut vand = crate::eig::DenseMatrix::zeros(n + 1);
    for (j, &zj) in points.iter().enumerate() {
        let val = second_kind_value(sys, n, zj)?;
        let pi = pi_n(&sys.seq, sys.kind, n, zj);
        rhs[(j, 0)] = val * pi;
        let mut pw = cone();
        for k in 0..=n {
            vand[(j, k)] = pw;
            pw *= zj;
        }
    }
    let sol = vand.solve_many(&rhs)?;
    let num: Vec<Complex64> = (0..=n).map(|k| sol[(k, 0)]).collect();
    Ok(make_rf(num, &sys.seq, sys.kind, n))
}

/// All psi_0..psi_degree with their reciprocals.
pub fn second_kind_family(
    sys: &OrfSystem,
) -> Result<(Vec<RationalFunction>, Vec<RationalFunction>)> {
    let mut psis = Vec::with_capacity(sys.degree() + 1);
    let mut psistars = Vec::with_capacity(sys.degree() + 1);
    for k in 0..=sys.degree() {
        let psi = second_kind_function(sys, k)?;
        let star = psi.star(Space::new(&sys.seq, sys.kind, k))?;
        psis.push(psi);
        psistars.push(star);
    }
    Ok((psis, psistars))
}
