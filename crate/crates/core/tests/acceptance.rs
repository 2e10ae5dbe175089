//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` fail by a quantified factor with
//! the stated tolerance; for them the run requires the FAIL verdict, so a
//! silent change in either direction stops the suite.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bergnorm::bounds::{lower_constant_p, ln_b_corrected, stirling_limit_probe};
use bergnorm::commands::{
    audit_reports, cmd_bracket, hypergeometric_grid, reproducing_split, verify_report, RunConfig, Suite, STIRLING_PS,
    DERIVATIVE_TS, GAUSS_LIMIT_TOL, DERIVATIVE_FD_TOL, LEMMA_GRID_TOL, LEMMA_LIMIT_TOL, LEMMA_MIN_CLOSED_TOL,
    LEMMA_MIN_QUAD_TOL, REPRODUCING_TOL, SPHERE_IDENTITY_TOL,
};
use bergnorm::kernels::KernelControl;
use bergnorm::operators::{
    besov_norm_of_image, bracket_norm, bracket_t_norm, reproducing_check, BracketConfig, Operator, TestFunction,
};
use bergnorm::params::Params;
use bergnorm::quadrature::RadialSplit;

const KNOWN_UNATTAINABLE: [u32; 1] = [5];

const GRID_NS: [usize; 2] = [2, 3];
const GRID_ALPHAS: [f64; 3] = [0.5, 1.0, 2.0];
const GRID_PS: [f64; 3] = [1.5, 2.0, 4.0];

fn grid() -> Vec<Params> {
    let mut out = vec![];
    for n in GRID_NS {
        for alpha in GRID_ALPHAS {
            for p in GRID_PS {
                out.push(Params::with_smallest_order(n, alpha, p).unwrap());
            }
        }
    }
    out
}

fn grid_config() -> RunConfig {
    RunConfig { n: GRID_NS.to_vec(), alpha: GRID_ALPHAS.to_vec(), p: GRID_PS.to_vec(), ..RunConfig::default() }
}

struct Verdict {
    passed: bool,
    /// Supporting checks outside the criterion's own verdict.
    support_ok: bool,
    details: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self { passed: true, support_ok: true, details: vec![] }
    }

    fn support(&mut self, ok: bool, what: String) {
        if !ok {
            self.support_ok = false;
        }
        self.details.push(format!("{} (supporting) {what}", if ok { "ok" } else { "FAILED" }));
    }

    fn require(&mut self, ok: bool, what: String) {
        if !ok {
            self.passed = false;
        }
        self.details.push(format!("{} {what}", if ok { "ok" } else { "FAILED" }));
    }

    fn note(&mut self, what: String) {
        self.details.push(format!("note {what}"));
    }

    fn budget(&mut self, elapsed: Duration, limit: Duration) {
        self.require(elapsed < limit, format!("runtime {:.2?} < {:.0?}", elapsed, limit));
    }
}

fn check_passed(report: &bergnorm::commands::VerifyReport, name: &str, tol: f64, v: &mut Verdict) {
    let mut found = false;
    for c in report.check(name) {
        found = true;
        v.require(c.passed && c.tolerance == tol, format!("{name}: {:.3e} < {tol:e} over {} points", c.value, c.points));
    }
    v.require(found, format!("{name} present"));
}

fn criterion_1() -> Verdict {
    let mut v = Verdict::new();
    let start = Instant::now();
    let r = verify_report(&RunConfig::default(), Suite::Identities).unwrap();
    check_passed(&r, "hyp2f1_gauss_limit", GAUSS_LIMIT_TOL, &mut v);
    check_passed(&r, "hyp2f1_derivative_fd", DERIVATIVE_FD_TOL, &mut v);
    v.require(hypergeometric_grid().len() == 50, "grid has 50 admissible points".into());
    let g = r.check("hyp2f1_gauss_limit").next().map(|c| c.points).unwrap_or(0);
    let d = r.check("hyp2f1_derivative_fd").next().map(|c| c.points).unwrap_or(0);
    v.require(g == 50 && d == 50 * DERIVATIVE_TS.len(), format!("{g} limit points, {d} derivative points"));
    v.budget(start.elapsed(), Duration::from_secs(5));
    v
}

fn criterion_2() -> Verdict {
    let mut v = Verdict::new();
    let start = Instant::now();
    let r = verify_report(&RunConfig::default(), Suite::Identities).unwrap();
    check_passed(&r, "sphere_identity_n2", SPHERE_IDENTITY_TOL, &mut v);
    check_passed(&r, "sphere_identity_n3", SPHERE_IDENTITY_TOL, &mut v);
    v.budget(start.elapsed(), Duration::from_secs(30));
    v
}

fn criterion_3() -> Verdict {
    let mut v = Verdict::new();
    let start = Instant::now();
    let r = verify_report(&RunConfig::default(), Suite::Lemma1).unwrap();
    for n in GRID_NS {
        check_passed(&r, &format!("lemma1_grid_n{n}"), LEMMA_GRID_TOL, &mut v);
        check_passed(&r, &format!("lemma1_min_closed_n{n}"), LEMMA_MIN_CLOSED_TOL, &mut v);
        check_passed(&r, &format!("lemma1_min_quadrature_n{n}"), LEMMA_MIN_QUAD_TOL, &mut v);
        check_passed(&r, &format!("lemma1_boundary_limit_n{n}"), LEMMA_LIMIT_TOL, &mut v);
        for name in [format!("lemma1_closed_form_monotone_n{n}"), format!("lemma1_quadrature_monotone_n{n}")] {
            let ok = r.check(&name).next().is_some_and(|c| c.passed);
            v.require(ok, name);
        }
    }
    v.require(r.hard_failures == 0, format!("{} hard failures in the suite", r.hard_failures));
    v.budget(start.elapsed(), Duration::from_secs(60));
    v
}

fn criterion_4() -> Verdict {
    let mut v = Verdict::new();
    let start = Instant::now();
    let control = KernelControl::new(200, 1e-8).unwrap();
    for n in GRID_NS {
        for alpha in GRID_ALPHAS {
            let p = Params::with_smallest_order(n, alpha, 2.0).unwrap();
            let r = reproducing_check(&p, 4, 50, 0.7, &reproducing_split(), control, 1).unwrap();
            v.require(
                r.sup_error < REPRODUCING_TOL && r.points == 50,
                format!("n={n} alpha={alpha}: sup |P Z_j - Z_j| = {:.2e} for j <= 4", r.sup_error),
            );
        }
    }
    v.budget(start.elapsed(), Duration::from_secs(120));
    v
}

fn criterion_5() -> Verdict {
    let mut v = Verdict::new();
    let start = Instant::now();
    let p = Params::new(2, 1.0, 2.0, 1).unwrap();
    let split = RadialSplit::default();
    let norm = besov_norm_of_image(&p, &TestFunction::f_m(&p), &split).unwrap();
    let closed = lower_constant_p(&p).unwrap();
    let literal = closed.b.proof_assembled;
    let rel = (norm - literal).abs() / literal;
    v.require(rel < 1e-3, format!("|P f_m|_B = {norm:.7} vs closed value {literal:.7}: rel {rel:.3e} (ratio {:.4})", norm / literal));
    let agg = closed.aggregation;
    v.note(format!("aggregation: l1 {} signed {} claimed {} (no shift at m = 1)", agg.l1, agg.signed, agg.claimed));
    let corrected = ln_b_corrected(&p).unwrap().exp();
    let crel = (norm - corrected).abs() / corrected;
    v.support(crel < 1e-6, format!("corrected closed value {corrected:.7}: rel {crel:.2e} < 1e-6"));
    let config = BracketConfig { trials: 0, ..BracketConfig::default() };
    let b = bracket_norm(Operator::P, &p, &config).unwrap();
    let reported = b.findings.iter().any(|f| f.code == "proof_value_mismatch");
    v.support(reported, "P bracket carries a proof_value_mismatch finding".into());
    v.budget(start.elapsed(), Duration::from_secs(120));
    v
}

fn criterion_6() -> Verdict {
    let mut v = Verdict::new();
    let start = Instant::now();
    let reports = audit_reports(&grid_config());
    let params = grid();
    let mut missing = vec![];
    let mut non_finite = vec![];
    let mut jensen = vec![];
    let mut a_gap = (f64::INFINITY, 0.0f64);
    for p in &params {
        let of = |name: &str| reports.iter().find(|r| r.inputs == *p && r.name == name);
        let (Some(d), Some(dt), Some(a), Some(b)) = (of("D"), of("D_tilde"), of("A"), of("B")) else {
            missing.push(*p);
            continue;
        };
        if !(d.is_finite() && dt.is_finite() && a.is_finite() && b.is_finite()) {
            non_finite.push(*p);
        }
        if !(dt.displayed <= d.displayed) {
            jensen.push(*p);
        }
        if a.rel_discrepancy.is_finite() {
            a_gap = (a_gap.0.min(a.rel_discrepancy), a_gap.1.max(a.rel_discrepancy));
        } else {
            non_finite.push(*p);
        }
    }
    v.require(missing.is_empty(), format!("D, D_tilde, A, B reported for all {} grid points (missing {missing:?})", params.len()));
    v.require(non_finite.is_empty(), format!("all values finite (non-finite at {non_finite:?})"));
    v.require(jensen.is_empty(), format!("D_tilde <= D on the grid (violations at {jensen:?})"));
    v.note(format!("A displayed vs proof-assembled relative discrepancy ranges over [{:.3}, {:.3}]", a_gap.0, a_gap.1));
    v.budget(start.elapsed(), Duration::from_secs(5));
    v
}

fn criterion_7() -> Verdict {
    let mut v = Verdict::new();
    let start = Instant::now();
    let config = BracketConfig { trials: 0, ..BracketConfig::default() };
    let mut violations = 0;
    let mut certified = 0;
    for p in grid() {
        let b = bracket_t_norm(&p, &config).unwrap();
        v.require(b.lower_empirical > 0.0, format!("n={} alpha={} p={}: lower {:.4}", p.n, p.alpha, p.p, b.lower_empirical));
        for (code, upper) in [("exceeds_displayed_upper", b.upper_paper.displayed), ("exceeds_proof_assembled_upper", b.upper_paper.proof_assembled)] {
            let violated = b.lower_empirical_margined > upper;
            let reported = b.findings.iter().any(|f| f.code == code);
            if violated {
                violations += 1;
                v.require(reported, format!("{code} finding for lower {:.4} > {upper:.4}", b.lower_empirical_margined));
            } else {
                certified += 1;
                v.require(!reported && b.lower_empirical_margined <= upper, format!("{code}: lower within {upper:.4}"));
            }
        }
    }
    v.note(format!("{violations} upper-bound violations reported as findings, {certified} consistent comparisons"));
    for (n, alpha) in [(2, 1.0), (2, 0.5), (2, 2.0), (3, 0.5), (3, 1.0), (3, 2.0)] {
        let m = Params::with_smallest_order(n, alpha, 2.0).unwrap().m;
        let s = stirling_limit_probe(n, alpha, m, &STIRLING_PS).unwrap();
        let increasing = s.values.windows(2).all(|w| w[1] > w[0]);
        v.require(increasing, format!("D_p increasing on p in {STIRLING_PS:?} at n={n} alpha={alpha} m={m}"));
    }
    v.budget(start.elapsed(), Duration::from_secs(600));
    v
}

fn criterion_8() -> Verdict {
    let mut v = Verdict::new();
    let start = Instant::now();
    let config = RunConfig { trials: 20, alpha: vec![0.5, 1.0], ..RunConfig::default() };
    for op in [Operator::T, Operator::P] {
        let a = cmd_bracket(&config, op).unwrap();
        let b = cmd_bracket(&config, op).unwrap();
        v.require(a.body == b.body && a.exit_code == 0, format!("bracket {op}: {} bytes identical across runs", a.body.len()));
    }
    let csv = RunConfig { format: bergnorm::commands::OutputFormat::Csv, ..config };
    v.require(cmd_bracket(&csv, Operator::T).unwrap() == cmd_bracket(&csv, Operator::T).unwrap(), "csv report identical".into());
    v.note(format!("elapsed {:.2?}", start.elapsed()));
    v
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Verdict); 8] = [
        (1, "hypergeometric suite", criterion_1),
        (2, "sphere identity", criterion_2),
        (3, "integral I lemma grid, extrema, limit, monotonicity", criterion_3),
        (4, "reproducing kernel on zonal harmonics", criterion_4),
        (5, "closed value of the P lower bound at n=2, p=2, alpha=1, m=1", criterion_5),
        (6, "constants audit", criterion_6),
        (7, "bracket sanity and Stirling probe", criterion_7),
        (8, "determinism of bracket reports", criterion_8),
    ];
    let mut unexpected = vec![];
    let mut passed = 0;
    for (id, title, run) in criteria {
        let v = run();
        let known = KNOWN_UNATTAINABLE.contains(&id);
        let status = if v.passed { "PASS" } else { "FAIL" };
        let tag = if known && !v.passed { " (known unattainable)" } else { "" };
        println!("criterion {id} {status}{tag}: {title}");
        for d in &v.details {
            println!("    {d}");
        }
        if v.passed {
            passed += 1;
        }
        if v.passed == known || !v.support_ok {
            unexpected.push(id);
        }
    }
    println!("acceptance: {passed}/8 criteria pass; known unattainable: {KNOWN_UNATTAINABLE:?}");
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
