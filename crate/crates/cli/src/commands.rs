//! One function per subcommand, each producing a [`Report`].

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use cslb::cache;
use cslb::characters::{gauss_sum, make_character, postnikov_coeffs, DirichletCharacter};
use cslb::charsums::{
    alpha_quadratic_gauss_bruteforce, alpha_quadratic_gauss_closed, alpha_quadratic_gauss_complete,
    charsum_c_bruteforce, charsum_c_closed, compare_nonzero, split_identity_check, CongruenceContext,
    NonzeroFreqParams,
};
use cslb::forms::FormTable;
use cslb::modarith::{gcd, inv_mod_i, is_square_mod_p};
use cslb::oscillatory::delta::DeltaKernel;
use cslb::pipeline::bound::exponent_identities_hold;
use cslb::pipeline::{
    bound_report, cancellation_scan, exponent_fit, poisson_verify, theta_direct, theta_dual,
    theta_zero_bound_check, tr_sum, tr_sum_by_classes, voronoi_verify, ThetaInstance,
};
use cslb::Error;

use crate::config::{Command, ConfigError, RunConfig};
use crate::report::{num, Record, Report};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Core(e) => match e {
                Error::Budget(_) | Error::Quadrature(_) => 3,
                Error::Domain(_) | Error::NotCoprime(_) | Error::NotPrimitive { .. } => 2,
                _ => 1,
            },
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "configuration error: {e}"),
            RunError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Core(e)
    }
}

type Out = Result<Report, RunError>;

pub fn run(cfg: &RunConfig) -> Out {
    use Command::*;
    let chi = make_character(cfg.p, cfg.r, cfg.chi)?;
    match cfg.command {
        VerifyLemma32 => lemma32(cfg, &chi),
        VerifyPostnikov => postnikov(cfg, &chi),
        VerifyQuadgauss => quadgauss(cfg, &chi),
        VerifyNonzeroCharsum => nonzero(cfg, &chi),
        VerifySplitIdentity => split_identity(cfg),
        VerifyDelta => delta(cfg),
        VerifyPoisson => poisson(cfg, &chi),
        VerifyVoronoi => voronoi(cfg),
        VerifyTheta => theta(cfg, &chi),
        ScanS => scan_s(cfg, &chi),
        ScanTr => scan_tr(cfg, &chi),
        BoundReport => bound(cfg),
    }
}

fn units_mod(q: u64) -> Vec<i64> {
    (0..q as i64).filter(|&a| gcd(a as u64, q) == 1).collect()
}

fn table_for(cfg: &RunConfig, nmax: usize) -> Result<FormTable, Error> {
    cache::load_or_build(nmax, cfg.cache_dir.as_deref())
}

fn lemma32(cfg: &RunConfig, chi: &DirichletCharacter) -> Out {
    let (p, r, ell) = (cfg.p, cfg.r, cfg.ell);
    let tau = gauss_sum(chi);
    let pr = p.pow(r) as f64;
    let pl = p.pow(ell);
    let mut records = Vec::new();
    for &n in &cfg.n_grid {
        let q_big = (n / pl as f64).sqrt();
        let m_max = (3.0 * pr * q_big / n).ceil() as i64;
        for &q in &cfg.q {
            let scale = pr.sqrt() * q as f64;
            for a in 0..q as i64 {
                for b in 0..pl as i64 {
                    for m in -m_max..=m_max {
                        let ctx = CongruenceContext { ell, q, a, b, m };
                        let brute = charsum_c_bruteforce(&ctx, chi);
                        let closed = charsum_c_closed(&ctx, chi, tau);
                        let vanish_agree = (brute.norm() < 1e-6 * scale) == (closed.norm() == 0.0);
                        let params = vec![
                            ("N", num(n)),
                            ("q", json!(q)),
                            ("a", json!(a)),
                            ("b", json!(b)),
                            ("m", json!(m)),
                            ("closed_vanishes", json!(closed.norm() == 0.0)),
                        ];
                        records.push(Record::new(params, brute, closed, cfg.tolerances.tol_identity * scale).also(vanish_agree));
                    }
                }
            }
        }
    }
    Ok(Report { records, details: Value::Null })
}

fn postnikov(cfg: &RunConfig, chi: &DirichletCharacter) -> Out {
    let (p, r) = (cfg.p, cfg.r);
    let mut records = Vec::new();
    let mut details = Vec::new();
    for &s in &cfg.s {
        let exp = match postnikov_coeffs(chi, s) {
            Ok(e) => e,
            Err(e @ Error::ExpansionInvalid { .. }) => {
                details.push(json!({ "s": s, "error": e.to_string() }));
                let params = vec![("s", json!(s)), ("z", Value::Null), ("a2", Value::Null), ("b1", Value::Null)];
                records.push(Record::real(params, 0.0, 0.0, 0.0).also(false));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        details.push(json!({ "s": s, "a2": exp.a2.value(), "b1": exp.b1.value(), "a0": exp.a0.value() }));
        let step = p.pow(r - s) as i128;
        for z in 0..p.pow(s) as i128 {
            let lhs = chi.eval(1 + z * step).expect("1 + z p^(r-s) is a unit");
            let rhs = exp.phase(z);
            let params = vec![
                ("s", json!(s)),
                ("z", json!(z as i64)),
                ("a2", json!(exp.a2.value())),
                ("b1", json!(exp.b1.value())),
            ];
            let mut rec = Record::new(params, lhs.to_complex(), rhs.to_complex(), 0.0);
            rec.pass = lhs == rhs;
            records.push(rec);
        }
    }
    Ok(Report { records, details: Value::Array(details) })
}

fn quadgauss(cfg: &RunConfig, chi: &DirichletCharacter) -> Out {
    let (p, r) = (cfg.p, cfg.r);
    let ceiling = cfg.tolerances.ceiling;
    let mut records = Vec::new();
    let mut details = Vec::new();
    for &s in &cfg.s {
        let exp = postnikov_coeffs(chi, s)?;
        let ps = p.pow(s);
        let units = units_mod(ps);
        let half = (p as f64).powf(s as f64 / 2.0);
        let mut worst: f64 = 0.0;
        for &m1 in units.iter().take(8) {
            for &m2 in &units {
                let complete = alpha_quadratic_gauss_complete(m1, m2, &exp, p, r);
                let closed = alpha_quadratic_gauss_closed(m1, m2, s, p);
                let unit = alpha_quadratic_gauss_bruteforce(m1, m2, &exp, p, r);
                let slack = (unit - closed).norm() / half;
                worst = worst.max(slack);
                let params = vec![
                    ("s", json!(s)),
                    ("m1", json!(m1)),
                    ("m2", json!(m2)),
                    ("unit_slack_over_sqrt_ps", num(slack)),
                ];
                let tol = cfg.tolerances.tol_identity * ps as f64;
                records.push(Record::new(params, complete, Complex64::new(closed, 0.0), tol).also(slack <= ceiling));
            }
        }
        details.push(json!({ "s": s, "max_unit_slack_over_sqrt_ps": num(worst), "ceiling": num(ceiling) }));
    }
    Ok(Report { records, details: Value::Array(details) })
}

fn nonzero(cfg: &RunConfig, chi: &DirichletCharacter) -> Out {
    let p = cfg.p;
    let mut records = Vec::new();
    for &s in &cfg.s {
        let expansion = postnikov_coeffs(chi, s)?;
        let scale = (p as f64).powf(s as f64 / 2.0);
        for &q1 in &cfg.q {
            for &q2 in &cfg.q {
                for r1 in 1..p as i64 {
                    for r2 in 1..p as i64 {
                        for &n in &cfg.freq {
                            let np = NonzeroFreqParams { q1, q2, r1, r2, n, s, expansion };
                            let c = compare_nonzero(&np, chi, 1e-8)?;
                            let ratio = (r2 * inv_mod_i(r1 as i128, p)? as i64).rem_euclid(p as i64) as u64;
                            let square = is_square_mod_p(ratio, p);
                            let vanishing_ok = square || (c.closed.norm() == 0.0 && c.brute.norm() < 1e-8 * scale);
                            let params = vec![
                                ("s", json!(s)),
                                ("q1", json!(q1)),
                                ("q2", json!(q2)),
                                ("r1", json!(r1)),
                                ("r2", json!(r2)),
                                ("n", json!(n)),
                                ("square_class", json!(square)),
                                ("root_match", json!(format!("{:?}", c.root_match).to_lowercase())),
                            ];
                            let tol = cfg.tolerances.tol_identity * scale;
                            records.push(Record::new(params, c.brute, c.closed, tol).also(vanishing_ok));
                        }
                    }
                }
            }
        }
    }
    Ok(Report { records, details: Value::Null })
}

fn split_identity(cfg: &RunConfig) -> Out {
    let (p, r, ell) = (cfg.p, cfg.r, cfg.ell);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pl = p.pow(ell) as i64;
    let mut records = Vec::new();
    for &ell1 in &cfg.ell1 {
        let pl1 = p.pow(ell1) as i64;
        for &q in &cfg.q {
            for a in units_mod(q) {
                for b in 0..pl {
                    let ab = a + b * q as i64;
                    let exact = ab % pl1 == 0 && (ell1 == ell || (ab / pl1) % p as i64 != 0);
                    if !exact {
                        continue;
                    }
                    let random: Vec<i64> = (0..cfg.samples).map(|_| rng.gen_range(-1_000_000..=1_000_000)).collect();
                    for &n in cfg.freq.iter().chain(&random) {
                        let ok = split_identity_check(a, b, q, ell, ell1, n, p, r)?;
                        let params = vec![
                            ("ell1", json!(ell1)),
                            ("q", json!(q)),
                            ("a", json!(a)),
                            ("b", json!(b)),
                            ("n", json!(n)),
                        ];
                        records.push(Record::real(params, if ok { 1.0 } else { 0.0 }, 1.0, 0.0));
                    }
                }
            }
        }
    }
    Ok(Report { records, details: Value::Null })
}

/// Grid used for the kernel property audit.
const AUDIT_Q: [u64; 11] = [1, 2, 5, 10, 20, 50, 100, 120, 150, 180, 200];
const AUDIT_X: [f64; 11] = [0.0, 1e-3, 1e-2, 0.1, 0.3, 1.0, 2.0, 3.0, 5.0, 10.0, 30.0];

fn delta(cfg: &RunConfig) -> Out {
    let kernel = DeltaKernel::for_length(cfg.big_l, cfg.c_eps)?;
    let values = kernel.reconstruct_range(-cfg.n_max, cfg.n_max)?;
    let mut records = Vec::new();
    for (i, v) in values.iter().enumerate() {
        let n = i as i64 - cfg.n_max;
        let params = vec![
            ("check", json!("reconstruct")),
            ("n", json!(n)),
            ("error_estimate", num(v.abs_error_estimate)),
        ];
        let want = if n == 0 { 1.0 } else { 0.0 };
        records.push(Record::new(params, v.value, Complex64::new(want, 0.0), cfg.tolerances.tol_delta));
    }
    let qmax = kernel.q_max();
    let mut qs: Vec<u64> = AUDIT_Q.iter().copied().filter(|&q| q <= qmax).collect();
    if qs.last() != Some(&qmax) {
        qs.push(qmax);
    }
    let audit = kernel.audit(&qs, &AUDIT_X, 2);
    for (name, c) in [
        ("near_one", audit.near_one),
        ("decay", audit.decay),
        ("derivative", audit.derivative),
        ("mass", audit.mass),
    ] {
        let params = vec![("check", json!(name)), ("n", Value::Null), ("error_estimate", Value::Null)];
        records.push(Record::real(params, c, 0.0, cfg.tolerances.ceiling));
    }
    let details = json!({
        "Q": num(2.0 * cfg.big_l.sqrt()),
        "audit_exponent": 2,
        "audit_q": qs,
        "audit_x": AUDIT_X.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "near_one": num(audit.near_one),
        "decay": num(audit.decay),
        "derivative": num(audit.derivative),
        "mass": num(audit.mass),
    });
    Ok(Report { records, details })
}

fn poisson(cfg: &RunConfig, chi: &DirichletCharacter) -> Out {
    let tau = gauss_sum(chi);
    let t = &cfg.tolerances;
    let mut records = Vec::new();
    for &n in &cfg.n_grid {
        let params = cfg.params(n, 0)?;
        for &q in &cfg.q {
            for a in units_mod(q) {
                for b in [0i64, 1] {
                    for &x in &cfg.x {
                        let c = poisson_verify(&params, chi, tau, a, b, q, x)?;
                        let tol = c.rhs.abs_error_estimate + t.tol_dual * c.lhs.norm();
                        let row = vec![
                            ("N", num(n)),
                            ("q", json!(q)),
                            ("a", json!(a)),
                            ("b", json!(b)),
                            ("x", num(x)),
                            ("m_cut", json!(params.m0().ceil() as i64)),
                            ("tail_change", num(c.tail_change)),
                        ];
                        records.push(Record::new(row, c.lhs, c.rhs.value, tol).also(c.tail_change < t.tol_tail));
                    }
                }
            }
        }
    }
    Ok(Report { records, details: Value::Null })
}

/// First `(a, b)` with `a` a unit mod `q` and `gcd(a + b q, p^l) = p^l1`.
fn voronoi_shift(p: u64, ell: u32, ell1: u32, q: u64) -> Option<(i64, i64)> {
    let pl = p.pow(ell) as i64;
    let pl1 = p.pow(ell1) as i64;
    let a = units_mod(q)[0];
    (0..pl).map(|b| (a, b)).find(|&(a, b)| {
        let ab = a + b * q as i64;
        ab % pl1 == 0 && (ell1 == ell || (ab / pl1) % p as i64 != 0)
    })
}

fn voronoi(cfg: &RunConfig) -> Out {
    let t = &cfg.tolerances;
    let mut need = 0.0f64;
    for &n in &cfg.n_grid {
        for &l1 in &cfg.ell1 {
            need = need.max(2.0 * n).max(2.0 * cfg.params(n, l1)?.n0().ceil());
        }
    }
    let form = table_for(cfg, need as usize + 2)?;
    let mut records = Vec::new();
    for &n in &cfg.n_grid {
        for &ell1 in &cfg.ell1 {
            let params = cfg.params(n, ell1)?;
            for &q in &cfg.q {
                let (a, b) = voronoi_shift(cfg.p, cfg.ell, ell1, q)
                    .ok_or_else(|| ConfigError(format!("no shift with exact valuation {ell1} for q={q}")))?;
                for &x in &cfg.x {
                    let c = voronoi_verify(&params, &form, a, b, q, x, ell1)?;
                    let row = vec![
                        ("N", num(n)),
                        ("ell1", json!(ell1)),
                        ("q", json!(q)),
                        ("a", json!(a)),
                        ("b", json!(b)),
                        ("x", num(x)),
                        ("n_cut", json!(params.n0().ceil() as u64)),
                        ("relative_difference", num(c.relative_difference())),
                        ("tail_change", num(c.tail_change)),
                    ];
                    let tol = t.tol_dual * c.lhs.norm();
                    records.push(Record::new(row, c.lhs, c.rhs.value, tol).also(c.tail_change < t.tol_tail));
                }
            }
        }
    }
    Ok(Report { records, details: Value::Null })
}

fn theta(cfg: &RunConfig, chi: &DirichletCharacter) -> Out {
    let params = cfg.params(cfg.n_grid[0], cfg.ell1[0])?;
    let mut records = Vec::new();
    let mut zero = Value::Null;
    for eps in [1i8, -1] {
        let mut inst = ThetaInstance::new(&params, eps)?;
        inst.max_terms = cfg.max_terms;
        let direct = theta_direct(&inst, chi)?;
        let dual = theta_dual(&inst, chi)?;
        let row = vec![
            ("check", json!("poisson")),
            ("eps", json!(eps)),
            ("direct_terms", json!(direct.terms)),
            ("dual_terms", json!(dual.terms)),
            ("dual_tail", num(dual.tail.norm())),
        ];
        records.push(Record::new(row, direct.value.value, dual.value.value, direct.budget_with(&dual)));
        if eps == 1 {
            let z = theta_zero_bound_check(&inst, chi, cfg.tolerances.ceiling)?;
            let row = vec![
                ("check", json!("zero_frequency_ratio")),
                ("eps", json!(eps)),
                ("direct_terms", Value::Null),
                ("dual_terms", Value::Null),
                ("dual_tail", Value::Null),
            ];
            records.push(Record::real(row, z.ratio, 0.0, z.ceiling).also(z.ratio_ok));
            zero = serde_json::to_value(&z).expect("report serializes");
        }
    }
    Ok(Report { records, details: json!({ "zero_frequency": zero }) })
}

fn scan_s(cfg: &RunConfig, chi: &DirichletCharacter) -> Out {
    let nmax = cfg.n_grid.iter().fold(0.0f64, |m, &n| m.max(2.0 * n)).ceil() as usize + 1;
    let form = table_for(cfg, nmax)?;
    let rows = cancellation_scan(cfg.p, cfg.r, &cfg.n_grid, chi, &form)?;
    let records = rows
        .iter()
        .map(|row| {
            let params = vec![
                ("N", num(row.n_scale)),
                ("in_window", json!(row.in_window)),
                ("abs_s", num(row.abs_s)),
                ("ratio_to_trivial", num(row.ratio)),
                ("predicted", num(row.predicted)),
                ("ratio_to_predicted", num(row.abs_s / row.predicted)),
                ("sqrt_ratio", num(row.sqrt_ratio)),
            ];
            Record::real(params, row.abs_s, 0.0, row.trivial)
        })
        .collect();
    Ok(Report { records, details: Value::Null })
}

fn scan_tr(cfg: &RunConfig, chi: &DirichletCharacter) -> Out {
    let spec = cfg.exponent_spec()?;
    let mut records = Vec::new();
    let mut samples = Vec::new();
    for j in cfg.j_min..=cfg.j_max {
        let big_r = 1u64 << j;
        let v = tr_sum(&spec, chi, big_r)?;
        let classes = tr_sum_by_classes(&spec, chi, big_r)?;
        samples.push((big_r as f64, v.value.norm()));
        let params = vec![
            ("row", json!("sum")),
            ("R", json!(big_r)),
            ("terms", json!(v.terms)),
            ("abs_t", num(v.value.norm())),
            ("abs_t_conjugate_root", num(v.conjugate_root.norm())),
            ("root_sensitive", json!(v.root_sensitive())),
            ("predicted", num((spec.p as f64).powf(spec.r as f64 / 30.0) * (big_r as f64).powf(0.2))),
        ];
        records.push(Record::new(params, v.value, classes, 1e-10 * v.value.norm().max(1.0)));
    }
    let fit = exponent_fit(&samples)?;
    let params = vec![
        ("row", json!("fit")),
        ("R", Value::Null),
        ("terms", Value::Null),
        ("abs_t", Value::Null),
        ("abs_t_conjugate_root", Value::Null),
        ("root_sensitive", Value::Null),
        ("predicted", num(0.2)),
    ];
    let ceiling = cfg.tolerances.ceiling;
    records.push(Record::real(params, fit.slope, 0.0, ceiling).also(fit.slope < ceiling));
    let details = json!({
        "spec": spec,
        "fit": fit,
        "slope_ceiling": num(ceiling),
    });
    Ok(Report { records, details })
}

fn bound(cfg: &RunConfig) -> Out {
    let identities = exponent_identities_hold();
    let mut records = Vec::new();
    let mut details = Vec::new();
    for &n in &cfg.n_grid {
        let rep = bound_report(n, cfg.p, cfg.r, cfg.c_eps)?;
        let params = vec![
            ("N", num(n)),
            ("log_p_N", num(rep.log_p_n)),
            ("ell_star", num(rep.ell_star)),
            ("ell", json!(rep.ell_rounded)),
            ("window_ok", json!(rep.window_ok)),
            ("final_bound", num(rep.final_bound)),
        ];
        records.push(Record::real(params, rep.balance_residual, 0.0, 1e-12).also(identities));
        details.push(serde_json::to_value(&rep).expect("report serializes"));
    }
    Ok(Report {
        records,
        details: json!({ "exact_identities": identities, "reports": details }),
    })
}
