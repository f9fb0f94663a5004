//! Acceptance gate. Runs each criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion; exits nonzero if any fails.
//!
//! Runs without the libtest harness so the lines show under plain
//! `cargo test`.

use std::process::ExitCode;
use std::time::Instant;

use ksgroove::config::{RunConfig, SweepConfig};
use ksgroove::convergence::{spatial_studies, temporal_study};
use ksgroove::diagnostics::{check_decay_bound, check_energy_inequality, check_ut_decay, EnergyRecord};
use ksgroove::experiment::{
    fit_series, lab_batches, linear_symbol_check, run_sweep, sharpness_summary, twin_run_contraction,
    CellOutcome, LAB_PASS_FRACTION,
};
use ksgroove::lab::LabConfig;
use ksgroove::{constants, GrooveConstants, GrooveSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

fn rel(x: f64, y: f64) -> f64 {
    ((x - y) / y).abs()
}

fn reference_constants() -> GrooveConstants {
    constants(&RunConfig::default().groove).unwrap()
}

fn criterion1() -> Outcome {
    let c = constants(&GrooveSpec::new(2.0, 8.0, 8.0).unwrap()).unwrap();
    let exact_rate = c.a * c.a * c.theta / 2.0;
    // The tabulated rate has five significant digits; it is compared at
    // that precision and the analytic value at 1e-6.
    let pass = rel(c.a, 2.4674011) <= 1e-6
        && rel(c.theta, 0.5947153) <= 1e-6
        && rel(c.decay_rate, exact_rate) <= 1e-6
        && (c.decay_rate - 1.8103).abs() <= 5e-5;
    Outcome {
        pass,
        detail: format!("a = {:.9}, theta = {:.9}, decay_rate = {:.9}", c.a, c.theta, c.decay_rate),
    }
}

struct MainRun {
    series: Vec<EnergyRecord>,
    contraction: Outcome,
    elapsed: f64,
}

/// The reference run, evolved in lockstep with a twin perturbed by 1e-6.
fn main_run() -> MainRun {
    let start = Instant::now();
    let a = RunConfig::default();
    let mut b = a.clone();
    b.initial.perturbation = 1e-6;
    let (report, series) = twin_run_contraction(&a, &b).expect("twin run");
    MainRun {
        series,
        contraction: Outcome {
            pass: report.error.is_none() && report.w_final <= report.w0,
            detail: format!(
                "delta = 1e-6: W(0) = {:.3e}, W(2) = {:.3e}, difference envelope {}",
                report.w0,
                report.w_final,
                if report.pass { "holds" } else { "violated" }
            ),
        },
        elapsed: start.elapsed().as_secs_f64(),
    }
}

fn criterion2(run: &MainRun) -> Outcome {
    let r = check_energy_inequality(&run.series, &reference_constants(), 1e-2).unwrap();
    let end = run.series.last().map_or(f64::NAN, |s| s.t);
    Outcome {
        pass: r.pass && (end - 2.0).abs() < 1e-9,
        detail: format!(
            "worst violation {:.3e} at t = {:.3}, {} samples to t = {end:.3}, twin pair {:.0} s",
            r.worst_violation,
            r.location,
            run.series.len(),
            run.elapsed
        ),
    }
}

fn criterion3(run: &MainRun) -> Outcome {
    let c = reference_constants();
    let bound = check_decay_bound(&run.series, &c, 1e-2).unwrap();
    let rate = fit_series(&run.series, [0.2, 2.0]).map_or(f64::NAN, |f| f.rate_lambda);
    Outcome {
        pass: bound.pass && rate >= c.decay_rate,
        detail: format!(
            "worst bound violation {:.3e}, fitted rate {rate:.4} vs {:.4}",
            bound.worst_violation, c.decay_rate
        ),
    }
}

fn criterion4(run: &MainRun) -> Outcome {
    let r = check_ut_decay(&run.series, &reference_constants(), 1e-2).unwrap();
    Outcome {
        pass: r.pass(),
        detail: format!(
            "envelope worst {:.3e}, accumulated worst {:.3e}",
            r.envelope.worst_violation, r.accumulated.worst_violation
        ),
    }
}

fn criterion5(run: &MainRun) -> Outcome {
    let cfg = RunConfig::default();
    let (same, _) = twin_run_contraction(&cfg, &cfg).expect("identical twin run");
    let identical = same.error.is_none() && same.identical_inputs && same.bitwise_identical;
    Outcome {
        pass: identical && run.contraction.pass,
        detail: format!(
            "delta = 0 bitwise identical: {identical}; {}",
            run.contraction.detail
        ),
    }
}

fn criterion6() -> Outcome {
    let cfg = LabConfig::default();
    let batches = lab_batches(1000, &cfg).expect("lab batches");
    let sharp = sharpness_summary(cfg.groove.width).expect("sharpness probe");
    let fractions: Vec<String> = batches
        .iter()
        .map(|b| format!("{:?} {}/{}", b.check, b.passed, b.total))
        .collect();
    let last = sharp.points.last().map_or(f64::NAN, |p| p.ratios[0]);
    Outcome {
        pass: batches.iter().all(|b| b.total == 1000 && b.pass_fraction >= LAB_PASS_FRACTION) && sharp.pass,
        detail: format!(
            "{}; sharpness ratio at envelope 64 = {last:.5}",
            fractions.join(", ")
        ),
    }
}

fn criterion7() -> Outcome {
    let mut studies = spatial_studies([8, 12, 12], 4).expect("spatial studies");
    studies.push(temporal_study([8, 16, 16], 4e-3, 0.1, 4).expect("temporal study"));
    let symbol = linear_symbol_check(20).expect("symbol check");
    let orders: Vec<String> = studies
        .iter()
        .map(|s| format!("{} {:.2}", s.name, s.orders.last().copied().unwrap_or(f64::NAN)))
        .collect();
    Outcome {
        pass: studies.iter().all(|s| s.pass && s.orders.len() == 3) && symbol.pass,
        detail: format!(
            "{}; symbol error {:.1e} vs tol {:.0e}",
            orders.join(", "),
            symbol.worst_step_error,
            symbol.solver_tol
        ),
    }
}

fn criterion8() -> Outcome {
    let start = Instant::now();
    let cfg = SweepConfig::threshold_map();
    let cells = run_sweep(&cfg, Some(4)).expect("sweep");
    let guaranteed: Vec<_> = cells
        .iter()
        .filter(|c| c.admissible && c.margin48_at_0 > 0.0)
        .collect();
    let decayed = guaranteed
        .iter()
        .filter(|c| c.outcome == CellOutcome::Decayed)
        .count();
    let unclaimed = cells.len() - guaranteed.len();
    let slowest = guaranteed
        .iter()
        .map(|c| c.fitted_rate / c.bound_rate)
        .fold(f64::INFINITY, f64::min);
    Outcome {
        pass: cells.len() == 36 && decayed == guaranteed.len(),
        detail: format!(
            "{decayed}/{} guaranteed cells decayed, {unclaimed} recorded without claim, \
             min fitted/bound {slowest:.1}, {:.0} s",
            guaranteed.len(),
            start.elapsed().as_secs_f64()
        ),
    }
}

fn report(n: u32, o: &Outcome) -> bool {
    println!(
        "criterion {n}: {} ({})",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail
    );
    o.pass
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters: this target is one unit.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let mut ok = report(1, &criterion1());
    let run = main_run();
    ok &= report(2, &criterion2(&run));
    ok &= report(3, &criterion3(&run));
    ok &= report(4, &criterion4(&run));
    ok &= report(5, &criterion5(&run));
    ok &= report(6, &criterion6());
    ok &= report(7, &criterion7());
    ok &= report(8, &criterion8());
    println!("acceptance: {}", if ok { "all criteria pass" } else { "FAILED" });
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
