//! The built-in verification suite: ten grid audits covering the closed-form
//! identities, the oracle equivalences and the Monte Carlo path. Each audit
//! has a stable identifier usable with `verify --only ID`.
//!
//! Every audit accepts an injected perturbation (a test hook, zero in normal
//! operation) that is added to the quantity under test; a nonzero value must
//! make the audit fail, which gives the suite a negative control.

use crate::correlations::{
    g1, sample_events, two_particle_visibility, visibility_from_counts, DetectorPosition,
    SCAN_GRID,
};
use crate::experiments::{
    run_conditional, run_conventional, run_double_partial, ScenarioConfig, Scheme, MC_BINS,
};
use crate::measures::{closed_form_suite, concurrence};
use crate::optics::{prepare_biphoton, CoherenceFactor};
use crate::{Error, Result};

/// Outcome of one audit.
#[derive(Clone, Debug)]
pub struct AuditOutcome {
    pub id: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl AuditOutcome {
    fn new(id: &'static str, passed: bool, detail: String) -> AuditOutcome {
        AuditOutcome { id, passed, detail }
    }
}

pub const AUDIT_IDS: [&str; 10] = [
    "pure-erasure-equality",
    "conditional-headline",
    "bound-chain",
    "concurrence-closed-form",
    "two-particle-visibility",
    "mixed-complementarity",
    "conventional-mixed-bound",
    "double-partial",
    "monte-carlo",
    "no-coincidence-flatness",
];

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| i as f64 / n as f64)
}

fn biphoton(t: f64, m: f64) -> Result<crate::qstate::DensityOperator> {
    prepare_biphoton(t, CoherenceFactor::new(m)?)
}

/// P^2 + C^2 = 1 for the pure family over the t grid, within 1e-12.
fn pure_erasure_equality(perturb: f64) -> Result<AuditOutcome> {
    let mut worst = 0.0f64;
    for t in grid(20) {
        let r = closed_form_suite(t, 1.0, 1.0)?;
        let dev = (r.p * r.p + r.c * r.c + perturb - 1.0).abs();
        worst = worst.max(dev);
    }
    Ok(AuditOutcome::new(
        "pure-erasure-equality",
        worst <= 1e-12,
        format!("max |P^2 + C^2 - 1| = {worst:.3e} over 21 t values (tol 1e-12)"),
    ))
}

/// Conditioned visibility 1 (strictly above the unconditional bound),
/// success 2t/(1+t) and failure = P at the matched working point.
fn conditional_headline(perturb: f64) -> Result<AuditOutcome> {
    let mut worst = 0.0f64;
    let mut all_strict = true;
    for t in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let cfg = ScenarioConfig {
            scheme: Scheme::Conditional,
            t,
            t_bs: t,
            ..Default::default()
        };
        let r = run_conditional(&cfg)?;
        let v = r.simulated.v_qe_cond + perturb;
        worst = worst.max((v - 1.0).abs());
        let bound = (1.0 - r.simulated.p * r.simulated.p).sqrt();
        if v <= bound {
            all_strict = false;
        }
        let s_dev = (r.simulated.s + perturb - 2.0 * t / (1.0 + t)).abs();
        let f_dev = (1.0 - r.simulated.s + perturb - (1.0 - t) / (1.0 + t)).abs();
        if s_dev > 1e-12 || f_dev > 1e-12 {
            worst = worst.max(1.0);
        }
    }
    Ok(AuditOutcome::new(
        "conditional-headline",
        worst <= 1e-10 && all_strict,
        format!(
            "max |V_cond - 1| = {worst:.3e} (tol 1e-10), bound strictly exceeded: {all_strict}; \
             success and failure probabilities within 1e-12"
        ),
    ))
}

/// S * C_cond <= C over the (t, t_BS) grid, equality exactly at t_BS = 1.
fn bound_chain(perturb: f64) -> Result<AuditOutcome> {
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for t in grid(20) {
        for t_bs in grid(20) {
            let r = closed_form_suite(t, t_bs, 1.0)?;
            if r.degenerate {
                continue;
            }
            let lhs = r.s * r.c_cond + perturb;
            if lhs > r.c + 1e-12 {
                ok = false;
            }
            if t_bs == 1.0 && (lhs - r.c).abs() > 1e-12 {
                ok = false;
            }
            if t > 0.0 && t_bs < 1.0 {
                let gap = r.c - lhs;
                worst = worst.min(gap);
                if gap <= 0.0 {
                    ok = false;
                }
            }
        }
    }
    Ok(AuditOutcome::new(
        "bound-chain",
        ok,
        format!(
            "S*C_cond <= C on 21x21 grid (tol 1e-12), equality at t_BS=1, \
             smallest strict gap {worst:.3e}"
        ),
    ))
}

/// Spin-flip eigenvalue concurrence equals the closed form on the grid.
fn concurrence_closed_form(perturb: f64) -> Result<AuditOutcome> {
    let mut worst = 0.0f64;
    for t in grid(20) {
        for j in 0..=10 {
            let m = j as f64 / 10.0;
            let numeric = concurrence(&biphoton(t, m)?)? + perturb;
            let closed = 2.0 * m * t.sqrt() / (1.0 + t);
            worst = worst.max((numeric - closed).abs());
        }
    }
    Ok(AuditOutcome::new(
        "concurrence-closed-form",
        worst <= 1e-9,
        format!("max |numeric - closed| = {worst:.3e} over 21x11 grid (tol 1e-9)"),
    ))
}

/// Phase-scan two-particle visibility equals the concurrence on the grid.
fn two_particle_visibility_audit(perturb: f64) -> Result<AuditOutcome> {
    let mut worst = 0.0f64;
    for t in grid(20) {
        for j in 0..=10 {
            let m = j as f64 / 10.0;
            let rho = biphoton(t, m)?;
            let v12 = two_particle_visibility(&rho)? + perturb;
            let c = concurrence(&rho)?;
            worst = worst.max((v12 - c).abs());
        }
    }
    Ok(AuditOutcome::new(
        "two-particle-visibility",
        worst <= 1e-9,
        format!("max |V12 - C| = {worst:.3e} over 21x11 grid (tol 1e-9)"),
    ))
}

/// C^2 + P^2 = P^2 + M^2 (1 - P^2) on the grid, and the M = 0.5 sweep
/// dataset reproduces the curve pointwise.
fn mixed_complementarity(perturb: f64) -> Result<AuditOutcome> {
    let mut worst = 0.0f64;
    for t in grid(20) {
        for j in 0..=10 {
            let m = j as f64 / 10.0;
            let r = closed_form_suite(t, 1.0, m)?;
            let lhs = r.c * r.c + r.p * r.p + perturb;
            let rhs = r.p * r.p + m * m * (1.0 - r.p * r.p);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    // Sweep dataset at M = 0.5: one row per t, closed-form columns.
    let configs: Vec<ScenarioConfig> = grid(20)
        .map(|t| ScenarioConfig {
            scheme: Scheme::Conventional,
            t,
            m: 0.5,
            ..Default::default()
        })
        .collect();
    let reports = crate::experiments::sweep(&configs)?;
    for report in &reports {
        let p_sq = report.closed_form.p * report.closed_form.p;
        let curve = report.closed_form.c * report.closed_form.c + p_sq + perturb;
        worst = worst.max((curve - (p_sq + 0.25 * (1.0 - p_sq))).abs());
    }
    Ok(AuditOutcome::new(
        "mixed-complementarity",
        worst <= 1e-12,
        format!(
            "max deviation {worst:.3e} over 21x11 grid plus the M=0.5 sweep (tol 1e-12)"
        ),
    ))
}

/// Simulated conventional eraser visibility equals M sqrt(1 - P^2).
fn conventional_mixed_bound(perturb: f64) -> Result<AuditOutcome> {
    let mut worst = 0.0f64;
    for t in grid(20) {
        for m in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let cfg = ScenarioConfig {
                scheme: Scheme::Conventional,
                t,
                m,
                ..Default::default()
            };
            let r = run_conventional(&cfg)?;
            let expected = m * 2.0 * t.sqrt() / (1.0 + t);
            worst = worst.max((r.simulated.v_qe + perturb - expected).abs());
        }
    }
    Ok(AuditOutcome::new(
        "conventional-mixed-bound",
        worst <= 1e-10,
        format!("max |V_QE - M*2*sqrt(t)/(1+t)| = {worst:.3e} over 21x5 grid (tol 1e-10)"),
    ))
}

/// Double-partial scheme quantities over the t1, t2 grid.
fn double_partial(perturb: f64) -> Result<AuditOutcome> {
    let mut worst = 0.0f64;
    for t1 in [0.1, 0.5, 0.9] {
        for t2 in [0.1, 0.5, 0.9] {
            let cfg = ScenarioConfig {
                scheme: Scheme::DoublePartial,
                t1,
                t2,
                ..Default::default()
            };
            let r = run_double_partial(&cfg)?;
            let s = &r.simulated;
            let k_expected = (1.0 - t1) / (1.0 + t1);
            worst = worst.max((s.k + perturb - k_expected).abs());
            worst = worst.max((s.v_qe * s.v_qe + perturb - (1.0 - s.k * s.k)).abs());
            worst = worst.max((s.s + perturb - (t1 + t2) / 2.0).abs());
            let intermediate = r
                .audits
                .iter()
                .find(|a| a.name == "intermediate-concurrence")
                .expect("audit present");
            worst = worst.max((intermediate.lhs + perturb - t1.sqrt()).abs());
            if t1 == t2 {
                worst = worst.max((s.v_qe_cond + perturb - 1.0).abs());
            }
            if !r.all_audits_pass() {
                worst = worst.max(1.0);
            }
        }
    }
    Ok(AuditOutcome::new(
        "double-partial",
        worst <= 1e-10,
        format!("max deviation {worst:.3e} over the 3x3 (t1, t2) grid (tol 1e-10)"),
    ))
}

/// Fitted Monte Carlo fringe visibility within 3 standard errors of the
/// analytic value in at least 99 of 100 seeded runs, for both reference
/// states, at n = 1e5.
fn monte_carlo(perturb: f64) -> Result<AuditOutcome> {
    let n = 100_000u64;
    let cases = [(0.25, 1.0, 0.8), (1.0, 1.0, 1.0)];
    let mut details = Vec::new();
    let mut passed = true;
    for (t, m, analytic) in cases {
        let rho = biphoton(t, m)?;
        let mut hits = 0u32;
        for seed in 0..100u64 {
            let counts = sample_events(&rho, n, seed, MC_BINS)?;
            let (estimate, stderr) = visibility_from_counts(&counts)?;
            if (estimate + perturb - analytic).abs() <= 3.0 * stderr {
                hits += 1;
            }
        }
        if hits < 99 {
            passed = false;
        }
        details.push(format!("t={t} M={m}: {hits}/100 within 3 sigma"));
    }
    Ok(AuditOutcome::new(
        "monte-carlo",
        passed,
        details.join("; "),
    ))
}

/// The unconditioned sigma fringe is flat for every (t, M).
fn no_coincidence_flatness(perturb: f64) -> Result<AuditOutcome> {
    let mut worst = 0.0f64;
    for t in grid(20) {
        for m in [0.0, 0.5, 1.0] {
            let rho = biphoton(t, m)?;
            let mut max = f64::NEG_INFINITY;
            let mut min = f64::INFINITY;
            for k in 0..SCAN_GRID {
                let phase = std::f64::consts::TAU * k as f64 / SCAN_GRID as f64;
                let v = g1(&rho, &DetectorPosition::sigma(phase))?;
                max = max.max(v);
                min = min.min(v);
            }
            let contrast = (max - min) / (max + min) + perturb;
            worst = worst.max(contrast.abs());
        }
    }
    Ok(AuditOutcome::new(
        "no-coincidence-flatness",
        worst < 1e-12,
        format!("max unconditioned fringe contrast {worst:.3e} over 21x3 grid (tol 1e-12)"),
    ))
}

/// Run one audit by identifier.
pub fn run_audit(id: &str, perturb: f64) -> Result<AuditOutcome> {
    match id {
        "pure-erasure-equality" => pure_erasure_equality(perturb),
        "conditional-headline" => conditional_headline(perturb),
        "bound-chain" => bound_chain(perturb),
        "concurrence-closed-form" => concurrence_closed_form(perturb),
        "two-particle-visibility" => two_particle_visibility_audit(perturb),
        "mixed-complementarity" => mixed_complementarity(perturb),
        "conventional-mixed-bound" => conventional_mixed_bound(perturb),
        "double-partial" => double_partial(perturb),
        "monte-carlo" => monte_carlo(perturb),
        "no-coincidence-flatness" => no_coincidence_flatness(perturb),
        other => Err(Error::Config(format!("unknown audit id '{other}'"))),
    }
}

/// Run the full suite, or a single audit when `only` is given.
pub fn run_all(only: Option<&str>, perturb: f64) -> Result<Vec<AuditOutcome>> {
    match only {
        Some(id) => Ok(vec![run_audit(id, perturb)?]),
        None => AUDIT_IDS.iter().map(|id| run_audit(id, perturb)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_audits_pass() {
        for id in [
            "pure-erasure-equality",
            "bound-chain",
            "conditional-headline",
        ] {
            let outcome = run_audit(id, 0.0).unwrap();
            assert!(outcome.passed, "{id}: {}", outcome.detail);
        }
    }

    #[test]
    fn negative_control_fails() {
        let outcome = run_audit("pure-erasure-equality", 1e-6).unwrap();
        assert!(!outcome.passed);
        let outcome = run_audit("bound-chain", 1e-3).unwrap();
        assert!(!outcome.passed);
    }

    #[test]
    fn unknown_audit_is_an_error() {
        assert!(run_audit("nope", 0.0).is_err());
        assert!(run_all(Some("nope"), 0.0).is_err());
    }
}
