//! orfq: tables, quadrature rules, factored matrices, and invariant checks
//! for orthogonal rational functions with poles mirrored across the unit
//! circle.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 bad input or usage,
//! 3 numerical failure, 4 cross-route mismatch.

mod support;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use orfq_core::ampd;
use orfq_core::extc::{GammaSequence, Kind};
use orfq_core::matfac::{self, Truncation};
use orfq_core::porf;

use support::{
    build_alpha_and_gamma, build_snake, build_system, cjson, compare_rules, extjson, json_text,
    kind_letter, load_measure, load_sequence, side_letter, slot_for_node, tau_from_turns,
    trim_poly, write_output, Failure,
};

#[derive(Parser)]
#[command(name = "orfq", version, about = "Orthogonal rational functions on the unit circle")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pole sequence file (JSON)
    #[arg(long, global = true, value_name = "FILE")]
    poles: Option<PathBuf>,

    /// Measure description file (JSON)
    #[arg(long, global = true, value_name = "FILE")]
    measure: Option<PathBuf>,

    /// Degree (orf/quad/roots), matrix dimension (matrix), or factor count (ampd)
    #[arg(long, global = true, default_value_t = 4)]
    n: usize,

    /// Unimodular parameter as a fraction of a full turn
    #[arg(long, global = true, value_name = "T")]
    tau_turns: Option<f64>,

    /// Seed for every random draw
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Write output here instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Tolerance override for pass/fail comparisons
    #[arg(long, global = true, value_name = "EPS")]
    tol: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
    #[value(name = "G", alias = "g")]
    G,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Kind {
        match k {
            KindArg::A => Kind::Alpha,
            KindArg::B => Kind::Beta,
            KindArg::G => Kind::Gamma,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Route {
    Numerator,
    Spectral,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    Phi,
    Varphi,
}

impl From<BasisArg> for matfac::Basis {
    fn from(b: BasisArg) -> matfac::Basis {
        match b {
            BasisArg::Phi => matfac::Basis::Phi,
            BasisArg::Varphi => matfac::Basis::Varphi,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Factors,
    Dense,
    Pattern,
}

#[derive(Subcommand)]
enum Command {
    /// Orthonormal basis table: numerator coefficients and recurrence data
    Orf {
        /// Pole convention for the family
        #[arg(long, value_enum, default_value_t = KindArg::G)]
        kind: KindArg,
        /// Emit only the recurrence parameters, no coefficients
        #[arg(long)]
        emit_params: bool,
    },
    /// Quadrature rule with unimodular nodes and positive weights
    Quad {
        /// Construction route; `both` cross-validates the two
        #[arg(long, value_enum, default_value_t = Route::Numerator)]
        route: Route,
    },
    /// Factored shift matrix: factor list, dense realization, or zero pattern
    Matrix {
        /// Family normalization behind the factor blocks
        #[arg(long, value_enum, default_value_t = BasisArg::Phi)]
        basis: BasisArg,
        #[arg(long, value_enum, default_value_t = Emit::Pattern)]
        emit: Emit,
    },
    /// Reordering invariance of factored-product determinants and spectra
    Ampd {
        /// Unitary factors: eigenvalue and eigenvector-modulus invariance
        #[arg(long)]
        unitary: bool,
        /// Enumerate all distinct orderings (the default)
        #[arg(long, conflicts_with = "samples")]
        exhaustive: bool,
        /// Check this many sampled orderings instead
        #[arg(long, value_name = "M")]
        samples: Option<usize>,
    },
    /// Run the seeded invariant suite
    Verify {
        /// Machine-readable report
        #[arg(long)]
        json: bool,
        /// Damage one recurrence parameter first (harness self-test)
        #[arg(long)]
        inject_perturbation: bool,
    },
    /// Zeros of the degree-n basis function, or its para-orthogonal nodes
    Roots {
        /// Pole convention for the family
        #[arg(long, value_enum, default_value_t = KindArg::G)]
        kind: KindArg,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.common.n < 1 {
        return Err(Failure::spec("--n must be at least 1"));
    }
    if let Some(t) = cli.common.tol {
        if !(t > 0.0) {
            return Err(Failure::spec("--tol must be positive"));
        }
    }
    match cli.command {
        Command::Orf { kind, emit_params } => cmd_orf(&cli.common, kind.into(), emit_params),
        Command::Quad { route } => cmd_quad(&cli.common, route),
        Command::Matrix { basis, emit } => cmd_matrix(&cli.common, basis.into(), emit),
        Command::Ampd { unitary, exhaustive: _, samples } => {
            cmd_ampd(&cli.common, unitary, samples)
        }
        Command::Verify { json, inject_perturbation } => {
            cmd_verify(&cli.common, json, inject_perturbation)
        }
        Command::Roots { kind } => cmd_roots(&cli.common, kind.into()),
    }
}

/// Load the pole file and validate the requested degree against it.
fn inputs(common: &Common) -> Result<(GammaSequence, orfq_core::measure::Measure), Failure> {
    let poles = common
        .poles
        .as_deref()
        .ok_or_else(|| Failure::spec("--poles is required for this command"))?;
    let measure = common
        .measure
        .as_deref()
        .ok_or_else(|| Failure::spec("--measure is required for this command"))?;
    let seq = load_sequence(poles)?;
    let mu = load_measure(measure)?;
    if common.n > seq.len() {
        return Err(Failure::spec(format!(
            "--n {} exceeds the {} poles in the sequence file",
            common.n,
            seq.len()
        )));
    }
    Ok((seq, mu))
}

fn csv_complex(z: Complex64) -> String {
    format!("{:.17e},{:.17e}", z.re, z.im)
}

fn cmd_orf(common: &Common, kind: Kind, emit_params: bool) -> Result<(), Failure> {
    let (seq, mu) = inputs(common)?;
    let n = common.n;
    let sys = build_system(&mu, &seq, n, kind)?;
    let with_side = kind == Kind::Gamma;
    let text = match common.format {
        Format::Json => {
            let rows: Vec<Value> = (0..=n)
                .map(|k| {
                    let mut row = serde_json::Map::new();
                    row.insert("degree".into(), json!(k));
                    if with_side && k >= 1 {
                        row.insert("side".into(), json!(side_letter(seq.side(k))));
                    }
                    if k >= 1 {
                        row.insert("lambda".into(), extjson(sys.lambdas[k - 1]));
                        row.insert("e".into(), json!(sys.es[k - 1]));
                        row.insert("eta1".into(), cjson(sys.etas1[k - 1]));
                    }
                    if !emit_params {
                        let coeffs: Vec<Value> =
                            sys.phis[k].num.iter().map(|&c| cjson(c)).collect();
                        row.insert("coefficients".into(), Value::Array(coeffs));
                    }
                    Value::Object(row)
                })
                .collect();
            json_text(&json!({
                "kind": kind_letter(kind),
                "n": n,
                "rows": rows,
            }))
        }
        Format::Csv => {
            let mut text = String::from("degree,side,lambda_re,lambda_im,lambda_inf,e,eta1_re,eta1_im\n");
            for k in 1..=n {
                let side = if with_side { side_letter(seq.side(k)) } else { "" };
                let (lre, lim, linf) = match sys.lambdas[k - 1].as_finite() {
                    Some(l) => (format!("{:.17e}", l.re), format!("{:.17e}", l.im), 0),
                    None => (String::new(), String::new(), 1),
                };
                text.push_str(&format!(
                    "{},{},{},{},{},{:.17e},{}\n",
                    k,
                    side,
                    lre,
                    lim,
                    linf,
                    sys.es[k - 1],
                    csv_complex(sys.etas1[k - 1])
                ));
            }
            text
        }
    };
    write_output(&common.out, &text)
}

fn quad_json(rule: &porf::Quadrature, route: &str, deviation: Option<(f64, f64)>) -> Value {
    let nodes: Vec<Value> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .enumerate()
        .map(|(i, (x, w))| {
            json!({
                "index": i,
                "node": cjson(*x),
                "arg": x.arg(),
                "weight": w,
            })
        })
        .collect();
    let sum: f64 = rule.weights.iter().sum();
    let mut out = json!({
        "n": rule.n,
        "tau": cjson(rule.tau),
        "route": route,
        "nodes": nodes,
        "weight_sum": sum,
    });
    if let Some((node, weight)) = deviation {
        out["route_deviation"] = json!({ "node": node, "weight": weight });
    }
    out
}

fn quad_csv(rule: &porf::Quadrature) -> String {
    let mut text = String::from("index,node_re,node_im,node_arg,weight\n");
    for (i, (x, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        text.push_str(&format!("{},{},{:.17e},{:.17e}\n", i, csv_complex(*x), x.arg(), w));
    }
    text
}

fn cmd_quad(common: &Common, route: Route) -> Result<(), Failure> {
    let (seq, mu) = inputs(common)?;
    let n = common.n;
    let tau = tau_from_turns(common.tau_turns.unwrap_or(0.0));
    let (alpha, gamma) = build_alpha_and_gamma(&mu, &seq, n)?;
    let (rule, route_name, deviation) = match route {
        Route::Numerator => {
            let rule = porf::quadrature(&gamma, n, tau)
                .map_err(|e| Failure::numerical("quadrature", e))?;
            (rule, "numerator", None)
        }
        Route::Spectral => {
            let snake = build_snake(&alpha, &seq, n, matfac::Basis::Phi)?;
            let rule = matfac::spectral_quadrature(&snake, &seq, tau)
                .map_err(|e| Failure::numerical("spectral quadrature", e))?;
            (rule, "spectral", None)
        }
        Route::Both => {
            let rule = porf::quadrature(&gamma, n, tau)
                .map_err(|e| Failure::numerical("quadrature", e))?;
            let snake = build_snake(&alpha, &seq, n, matfac::Basis::Phi)?;
            let slot = slot_for_node(&snake, &seq, rule.nodes[0])?;
            let spectral = matfac::spectral_quadrature(&snake, &seq, slot)
                .map_err(|e| Failure::numerical("spectral quadrature", e))?;
            let dev = compare_rules(&rule, &spectral);
            (rule, "both", Some((dev.node, dev.weight)))
        }
    };
    let sum: f64 = rule.weights.iter().sum();
    let text = match common.format {
        Format::Json => json_text(&quad_json(&rule, route_name, deviation)),
        Format::Csv => quad_csv(&rule),
    };
    write_output(&common.out, &text)?;
    eprintln!("weight sum: {:.15}", sum);
    if (sum - 1.0).abs() > 1e-10 {
        return Err(Failure::invariant(format!(
            "weights sum to {}, expected 1 within 1e-10",
            sum
        )));
    }
    if let Some((node, weight)) = deviation {
        let tol = common.tol.unwrap_or(1e-6);
        eprintln!("route deviation: nodes {:.3e}, weights {:.3e}", node, weight);
        if node.max(weight) > tol {
            return Err(Failure::mismatch(format!(
                "quadrature routes disagree: node deviation {:.3e}, weight deviation {:.3e}, tolerance {:.1e}",
                node, weight, tol
            )));
        }
    }
    Ok(())
}

fn cmd_matrix(common: &Common, basis: matfac::Basis, emit: Emit) -> Result<(), Failure> {
    let (seq, mu) = inputs(common)?;
    let n = common.n;
    let alpha = build_system(&mu, &seq, n, Kind::Alpha)?;
    let snake = build_snake(&alpha, &seq, n, basis)?;
    let basis_name = match basis {
        matfac::Basis::Phi => "phi",
        matfac::Basis::Varphi => "varphi",
    };
    match emit {
        Emit::Factors => {
            if common.format == Format::Csv {
                return Err(Failure::spec("factor lists are emitted as JSON only"));
            }
            let shape: String = snake.shape.iter().map(|s| side_letter(*s)).collect();
            let factors: Vec<Value> = snake
                .factors
                .iter()
                .map(|f| {
                    json!({
                        "k": f.k,
                        "unitary": f.unitary,
                        "block": [
                            [cjson(f.block[0][0]), cjson(f.block[0][1])],
                            [cjson(f.block[1][0]), cjson(f.block[1][1])],
                        ],
                    })
                })
                .collect();
            let text = json_text(&json!({
                "size": snake.size,
                "basis": basis_name,
                "shape": shape,
                "order": snake.order,
                "factors": factors,
            }));
            write_output(&common.out, &text)
        }
        Emit::Dense => {
            let tau = tau_from_turns(common.tau_turns.unwrap_or(0.0));
            let dense = matfac::truncations(&snake, Truncation::Unitary { tau })
                .map_err(|e| Failure::numerical("truncation", e))?;
            let text = match common.format {
                Format::Json => {
                    let rows: Vec<Value> = (0..n)
                        .map(|i| Value::Array((0..n).map(|j| cjson(dense[(i, j)])).collect()))
                        .collect();
                    json_text(&json!({
                        "size": n,
                        "basis": basis_name,
                        "tau": cjson(tau),
                        "rows": rows,
                    }))
                }
                Format::Csv => {
                    let mut text = String::new();
                    for i in 0..n {
                        let row: Vec<String> =
                            (0..n).map(|j| csv_complex(dense[(i, j)])).collect();
                        text.push_str(&row.join(","));
                        text.push('\n');
                    }
                    text
                }
            };
            write_output(&common.out, &text)
        }
        Emit::Pattern => {
            let tau = tau_from_turns(common.tau_turns.unwrap_or(0.0));
            let dense = matfac::truncations(&snake, Truncation::Unitary { tau })
                .map_err(|e| Failure::numerical("truncation", e))?;
            let text = matfac::pattern_string(&dense, common.tol.unwrap_or(1e-12));
            write_output(&common.out, &text)
        }
    }
}

fn cmd_roots(common: &Common, kind: Kind) -> Result<(), Failure> {
    let (seq, mu) = inputs(common)?;
    let n = common.n;
    let sys = build_system(&mu, &seq, n, kind)?;
    let roots = match common.tau_turns {
        Some(turns) => porf::porf_zeros(&sys, n, tau_from_turns(turns))
            .map_err(|e| Failure::numerical("para-orthogonal zeros", e))?,
        None => {
            let num = trim_poly(&sys.phis[n].num);
            if num.len() < 2 {
                Vec::new()
            } else {
                orfq_core::eig::poly_roots(&num)
                    .map_err(|e| Failure::numerical("numerator roots", e))?
            }
        }
    };
    let text = match common.format {
        Format::Json => {
            let rows: Vec<Value> = roots
                .iter()
                .enumerate()
                .map(|(i, z)| {
                    json!({
                        "index": i,
                        "root": cjson(*z),
                        "modulus": z.norm(),
                        "arg": z.arg(),
                    })
                })
                .collect();
            json_text(&json!({
                "kind": kind_letter(kind),
                "n": n,
                "para_orthogonal": common.tau_turns.is_some(),
                "roots": rows,
            }))
        }
        Format::Csv => {
            let mut text = String::from("index,re,im,modulus,arg\n");
            for (i, z) in roots.iter().enumerate() {
                text.push_str(&format!(
                    "{},{},{:.17e},{:.17e}\n",
                    i,
                    csv_complex(*z),
                    z.norm(),
                    z.arg()
                ));
            }
            text
        }
    };
    write_output(&common.out, &text)
}

fn ampd_orderings(
    k: usize,
    samples: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>, Failure> {
    match samples {
        None => ampd::distinct_orderings(k).map_err(|e| match e {
            orfq_core::Error::TooLarge { requested, cap } => Failure::spec(format!(
                "{} distinct orderings exceed the exhaustive cap {}; use --samples M",
                requested, cap
            )),
            other => Failure::numerical("ordering enumeration", other),
        }),
        Some(m) => {
            if m < 1 {
                return Err(Failure::spec("--samples must be at least 1"));
            }
            let mut out = Vec::with_capacity(m);
            out.push(ampd::FactorPermutation::from_word(&vec![false; k.saturating_sub(1)]).pi);
            while out.len() < m {
                let word: Vec<bool> = (0..k.saturating_sub(1)).map(|_| rng.gen()).collect();
                out.push(ampd::FactorPermutation::from_word(&word).pi);
            }
            Ok(out)
        }
    }
}

fn pi_json(pi: &[usize]) -> Value {
    Value::Array(pi.iter().map(|&v| json!(v)).collect())
}

fn cmd_ampd(common: &Common, unitary: bool, samples: Option<usize>) -> Result<(), Failure> {
    if common.format == Format::Csv {
        return Err(Failure::spec("reordering reports are emitted as JSON only"));
    }
    let k = common.n;
    let size = k + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let orderings = ampd_orderings(k, samples, &mut rng)?;
    if unitary {
        let factors = ampd::random_unitary_factors(k, 0.9, &mut rng);
        let alphas = ampd::random_diagonal(size, 0.8, &mut rng);
        let report = ampd::unitary_rampd_report(&alphas, &factors, &orderings)
            .map_err(|e| Failure::numerical("unitary reordering report", e))?;
        let tol = common.tol.unwrap_or(1e-8);
        let pass = report.lambda_deviation <= tol && report.modulus_deviation <= tol;
        let rows: Vec<Value> = report
            .orderings
            .iter()
            .map(|o| {
                json!({
                    "pi": pi_json(&o.pi),
                    "eigenvalues": o.eigenvalues.iter().map(|&z| cjson(z)).collect::<Vec<_>>(),
                    "weight_sum": o.weight_sum,
                })
            })
            .collect();
        let text = json_text(&json!({
            "mode": "unitary",
            "k": k,
            "seed": common.seed,
            "orderings": rows,
            "lambda_deviation": report.lambda_deviation,
            "modulus_deviation": report.modulus_deviation,
            "tolerance": tol,
            "pass": pass,
        }));
        write_output(&common.out, &text)?;
        if !pass {
            return Err(Failure::invariant(format!(
                "reordering deviation {:.3e} exceeds tolerance {:.1e}",
                report.lambda_deviation.max(report.modulus_deviation),
                tol
            )));
        }
        Ok(())
    } else {
        let factors = ampd::random_factors(k, &mut rng);
        let a = ampd::random_diagonal(size, 1.0, &mut rng);
        let d = ampd::random_diagonal(size, 1.0, &mut rng);
        let mut rows = Vec::new();
        let mut worst = 0.0f64;
        let mut reference: Option<(Complex64, Complex64)> = None;
        for pi in &orderings {
            let det = ampd::ampd_det(&a, &factors, pi, &d, false)
                .map_err(|e| Failure::numerical("determinant", e))?;
            let det_tr = ampd::ampd_det(&a, &factors, pi, &d, true)
                .map_err(|e| Failure::numerical("determinant", e))?;
            match reference {
                None => reference = Some((det, det_tr)),
                Some((r, rt)) => {
                    worst = worst.max((det - r).norm() / (1.0 + r.norm()));
                    worst = worst.max((det_tr - rt).norm() / (1.0 + rt.norm()));
                }
            }
            rows.push(json!({
                "pi": pi_json(pi),
                "det": cjson(det),
                "det_truncated": cjson(det_tr),
            }));
        }
        let tol = common.tol.unwrap_or(1e-9);
        let pass = worst <= tol;
        let text = json_text(&json!({
            "mode": "determinant",
            "k": k,
            "seed": common.seed,
            "orderings": rows,
            "max_rel_deviation": worst,
            "tolerance": tol,
            "pass": pass,
        }));
        write_output(&common.out, &text)?;
        if !pass {
            return Err(Failure::invariant(format!(
                "determinant deviation {:.3e} exceeds tolerance {:.1e}",
                worst, tol
            )));
        }
        Ok(())
    }
}

fn cmd_verify(common: &Common, as_json: bool, inject: bool) -> Result<(), Failure> {
    let outcome = verify::run_suite(common.seed, inject)?;
    let text = if as_json {
        json_text(&outcome.to_json(common.seed, inject))
    } else {
        outcome.to_text()
    };
    write_output(&common.out, &text)?;
    if !outcome.pass {
        let failed: Vec<&str> = outcome
            .groups
            .iter()
            .filter(|g| g.worst > g.tol)
            .map(|g| g.name)
            .collect();
        return Err(Failure::invariant(format!(
            "invariant groups failed: {}",
            failed.join(", ")
        )));
    }
    Ok(())
}
