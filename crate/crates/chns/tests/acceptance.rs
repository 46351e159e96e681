//! Acceptance checks for the solver, one line per criterion.
//!
//! Runs as a plain binary (`harness = false`). The Rayleigh-Taylor run takes
//! over an hour and is skipped unless `CHNS_ACCEPTANCE_SLOW=1` is set.
//! `CHNS_ACCEPTANCE_ONLY=1,7` restricts the run to the listed criteria.

mod structural;

use chns::config::{ProblemKind, RunConfig};
use chns::drivers::{run_benchmark, spatial_sweep, temporal_sweep, Summary};
use std::process::ExitCode;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn rel(value: f64, target: f64) -> f64 {
    (value - target).abs() / target.abs()
}

/// Appends `name value (target, tol)` and returns whether it holds.
fn within(detail: &mut Vec<String>, name: &str, value: f64, target: f64, tol: f64) -> bool {
    let ok = rel(value, target) <= tol;
    detail.push(format!(
        "{name} {value:.4} vs {target} ({:+.2}%, tol {:.1}%){}",
        100.0 * (value - target) / target,
        100.0 * tol,
        if ok { "" } else { " FAIL" }
    ));
    ok
}

fn within_abs(detail: &mut Vec<String>, name: &str, value: f64, target: f64, tol: f64) -> bool {
    let ok = (value - target).abs() <= tol;
    detail.push(format!("{name} {value:.3} vs {target} (tol {tol}){}", if ok { "" } else { " FAIL" }));
    ok
}

fn no_progress() -> impl FnMut(&chns_core::stepper::StepRecord) {
    |_| {}
}

fn convergence(k: usize, reference: [[f64; 3]; 3]) -> Outcome {
    let mut cfg = RunConfig::defaults(ProblemKind::Converge);
    cfg.set_degree(k);
    let rows = match spatial_sweep(&cfg, &mut no_progress()) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("run failed: {e}")),
    };
    for r in &rows {
        println!(
            "    k={k} 1/h={:<3} steps={:<3} u {:.3e}  phi {:.3e}  mu {:.3e}  orders {:.2} {:.2} {:.2}",
            r.n, r.steps, r.err_u, r.err_phi, r.err_mu, r.order_u, r.order_phi, r.order_mu
        );
    }
    let last = rows.last().expect("three levels");
    let kk = k as f64;
    let mu_min = if k == 1 { 1.4 } else { kk + 0.7 };
    let mut pass = last.order_u >= kk + 0.7 && last.order_phi >= kk + 0.7 && last.order_mu >= mu_min;
    let mut worst: f64 = 0.0;
    for (r, refs) in rows.iter().zip(reference) {
        for (e, t) in [r.err_u, r.err_phi, r.err_mu].into_iter().zip(refs) {
            worst = worst.max((e / t).max(t / e));
        }
    }
    pass &= worst <= 3.0;
    Outcome::new(
        pass,
        format!(
            "k={k}: finest orders u {:.2} phi {:.2} mu {:.2} (need {:.1}/{:.1}/{:.1}); largest ratio to reference errors {worst:.2} (max 3)",
            last.order_u,
            last.order_phi,
            last.order_mu,
            kk + 0.7,
            kk + 0.7,
            mu_min
        ),
    )
}

fn bubble(kind: ProblemKind, t_end: f64) -> Result<(Summary, f64), String> {
    let mut cfg = RunConfig::defaults(kind);
    cfg.t_end = t_end;
    let run = run_benchmark(&cfg, None, &mut no_progress()).map_err(|e| e.to_string())?;
    Ok((run.summary, run.disc.mesh.area()))
}

fn mass(summary: &Summary, area: f64) -> Outcome {
    let tol = 1e-6 * area;
    Outcome::new(
        summary.mass_drift <= tol,
        format!("max |mass(t) - mass(0)| = {:.3e} over {} steps (tol {tol:.1e})", summary.mass_drift, summary.steps),
    )
}

fn bubble1(s: &Summary) -> Outcome {
    let mut d = Vec::new();
    let mut ok = within(&mut d, "c_min", s.c_min, 0.9166, 0.015);
    ok &= within_abs(&mut d, "t(c_min)", s.t_c_min, 1.885, 0.1);
    ok &= within(&mut d, "Vc_max", s.vc_max, 0.2371, 0.02);
    ok &= within_abs(&mut d, "t(Vc_max)", s.t_vc_max, 0.970, 0.1);
    ok &= within(&mut d, "y_c(3)", s.y_c_final, 1.0732, 0.01);
    ok &= s.steps == 600;
    d.push(format!("{} steps", s.steps));
    Outcome::new(ok, d.join("; "))
}

fn bubble2(s: &Summary) -> Outcome {
    let mut d = Vec::new();
    let mut ok = within(&mut d, "c_min", s.c_min, 0.6629, 0.03);
    ok &= within(&mut d, "Vc_max", s.vc_max, 0.2491, 0.03);
    ok &= within(&mut d, "y_c(2)", s.y_c_final, 0.9026, 0.015);
    Outcome::new(ok, d.join("; "))
}

fn rayleigh_taylor() -> Outcome {
    let cfg = RunConfig::defaults(ProblemKind::RayleighTaylor);
    let run = match run_benchmark(&cfg, None, &mut no_progress()) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("run failed: {e}")),
    };
    let targets = [(1.0, -0.3617, 0.2959), (1.5, -0.6139, 0.4312), (2.5, -1.0970, 0.6836)];
    let mut d = Vec::new();
    let mut ok = true;
    for (t, yb, ys) in targets {
        match run.records.iter().find(|r| (r.t - t).abs() < 1e-9) {
            Some(r) => {
                ok &= within(&mut d, &format!("bubble({t})"), r.y_bubble, yb, 0.025);
                ok &= within(&mut d, &format!("spike({t})"), r.y_spike, ys, 0.025);
            }
            None => {
                ok = false;
                d.push(format!("no record at t = {t}"));
            }
        }
    }
    let steps = run.summary.steps as f64;
    ok &= within(&mut d, "steps", steps, 1808.0, 0.10);
    Outcome::new(ok, d.join("; "))
}

/// Time refinement on a fixed mesh where the spatial error is far below the
/// temporal one for `u` and `phi`.
fn temporal() -> Outcome {
    let mut cfg = RunConfig::defaults(ProblemKind::Converge);
    cfg.set_degree(3);
    cfg.levels = vec![16];
    cfg.time_steps = vec![4, 8, 16, 32];
    let rows = match temporal_sweep(&cfg, &mut no_progress()) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("run failed: {e}")),
    };
    for r in &rows {
        println!(
            "    k=3 1/h=16 steps={:<3} u {:.3e}  phi {:.3e}  mu {:.3e}  orders {:.2} {:.2} {:.2}",
            r.steps, r.err_u, r.err_phi, r.err_mu, r.order_u, r.order_phi, r.order_mu
        );
    }
    let last = rows.last().expect("four step counts");
    Outcome::new(
        last.order_u >= 1.7 && last.order_phi >= 1.7,
        format!(
            "finest pair orders u {:.2} phi {:.2} (need 1.7); mu {:.2} (not gated, spatial floor)",
            last.order_u, last.order_phi, last.order_mu
        ),
    )
}

fn main() -> ExitCode {
    let slow = std::env::var("CHNS_ACCEPTANCE_SLOW").is_ok_and(|v| v == "1");
    let only: Option<Vec<u32>> = std::env::var("CHNS_ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let selected = |n: u32| only.as_ref().is_none_or(|o| o.contains(&n));
    let mut failed = 0;
    let mut report = |label: &str, start: Instant, o: Outcome| {
        println!(
            "criterion {label}: {} ({:.0} s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    };
    let skip = |label: &str, why: &str| println!("criterion {label}: SKIPPED ({why})");

    if selected(1) {
        let t = Instant::now();
        report("1 structural invariants", t, structural::run());
    }

    if selected(2) {
        let t = Instant::now();
        let k1 = convergence(1, [[5.68e-3, 1.96e-2, 11.3], [1.10e-3, 5.80e-3, 2.62], [2.62e-4, 1.54e-3, 7.29e-1]]);
        let k2 = convergence(2, [[4.39e-4, 1.38e-3, 1.50], [5.08e-5, 2.05e-4, 2.26e-1], [6.05e-6, 2.47e-5, 2.83e-2]]);
        report(
            "2 manufactured convergence",
            t,
            Outcome::new(k1.pass && k2.pass, format!("{}; {}", k1.detail, k2.detail)),
        );
    }

    if selected(3) || selected(4) {
        let t = Instant::now();
        let (o3, o4) = match bubble(ProblemKind::Bubble1, 3.0) {
            Ok((s, area)) => (mass(&s, area), bubble1(&s)),
            Err(e) => (Outcome::new(false, e.clone()), Outcome::new(false, e)),
        };
        if selected(3) {
            report("3 mass conservation", t, o3);
        }
        if selected(4) {
            report("4 rising bubble case 1", t, o4);
        }
    }

    if selected(5) {
        let t = Instant::now();
        let o = match bubble(ProblemKind::Bubble2, 2.0) {
            Ok((s, _)) => bubble2(&s),
            Err(e) => Outcome::new(false, e),
        };
        report("5 rising bubble case 2", t, o);
    }

    if !selected(6) {
    } else if slow {
        let t = Instant::now();
        report("6 Rayleigh-Taylor", t, rayleigh_taylor());
    } else {
        skip("6 Rayleigh-Taylor", "over an hour; set CHNS_ACCEPTANCE_SLOW=1 to run it");
    }

    if selected(7) {
        let t = Instant::now();
        report("7 temporal order", t, temporal());
    }

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
