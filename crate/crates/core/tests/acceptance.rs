//! Runs every acceptance criterion at its pinned tolerance and prints one
//! line per criterion.
//!
//! Criteria 3 and 5 do not hold for the model as specified: the ratio-weighted
//! bound falls below both the loose bound's requirement and the exact oracle
//! on the coupled setup, and the correlation-scaled baseline is twice the
//! plain one by construction. They are reported as FAIL; this target fails
//! only if some other criterion fails, or if those two stop failing for the
//! documented reasons.

use std::process::ExitCode;

use csdp::experiment::{run_acceptance, run_criterion, AcceptanceConfig, AcceptanceReport};

const UNATTAINABLE: [u8; 2] = [3, 5];

fn check(ok: bool, what: &str, problems: &mut Vec<String>) {
    if !ok {
        problems.push(what.to_string());
    }
}

fn main() -> ExitCode {
    let config = AcceptanceConfig::default();
    let report = run_acceptance(&config);
    print!("{}", report.body());
    print!("{}", report.timings());

    let mut problems = Vec::new();
    for c in &report.criteria {
        if !c.pass && !UNATTAINABLE.contains(&c.id) {
            problems.push(format!("criterion {} failed: {}", c.id, c.measured));
        }
    }
    known_failures(&report, &mut problems);
    fault_injection(&config, &report, &mut problems);
    determinism(&config, &report, &mut problems);

    if problems.is_empty() {
        println!("acceptance target: ok ({} of 9 criteria pass; 3 and 5 fail as documented)", 9 - report.failed().len());
        ExitCode::SUCCESS
    } else {
        for p in &problems {
            println!("acceptance target problem: {p}");
        }
        ExitCode::FAILURE
    }
}

fn known_failures(report: &AcceptanceReport, problems: &mut Vec<String>) {
    let c3 = &report.criteria[2];
    check(!c3.pass, "criterion 3 unexpectedly passes", problems);
    check(
        c3.details.iter().any(|d| d.starts_with("lambda=0.75 t=1 eps_c=1: oracle")),
        "criterion 3 no longer shows the oracle above the tight bound at lambda 0.75, t 1",
        problems,
    );
    let c5 = &report.criteria[4];
    check(!c5.pass, "criterion 5 unexpectedly passes", problems);
    check(
        c5.measured == "(a) pass, (b) pass, (c) fail",
        "criterion 5 fails for a reason other than the curve ordering",
        problems,
    );
    let crossings: Vec<&String> = c5.details.iter().filter(|d| d.starts_with("    l_cap=")).collect();
    let expected = crossings
        .iter()
        .all(|d| d.contains("ddp") && d.contains("> dp") || d.starts_with("    l_cap=0.2: csdp"));
    check(
        expected && !crossings.is_empty(),
        "criterion 5 ordering crossings changed",
        problems,
    );
}

fn fault_injection(config: &AcceptanceConfig, baseline: &AcceptanceReport, problems: &mut Vec<String>) {
    let perturb: [(u8, fn(&mut AcceptanceConfig)); 6] = [
        (1, |c| c.tolerances.symmetry = -1.0),
        (2, |c| c.tolerances.decay_ceiling = 1e-6),
        (4, |c| c.tolerances.reduction = -1.0),
        (6, |c| c.tolerances.laplace_variance = 1e-9),
        (7, |c| c.tolerances.mse_std_errors = 1e-6),
        (8, |c| c.tolerances.oracle_half_widths = 1e-6),
    ];
    for (id, f) in perturb {
        let mut cfg = config.clone();
        f(&mut cfg);
        for c in &baseline.criteria {
            let perturbed = run_criterion(c.id, &cfg);
            let should_pass = c.pass && c.id != id;
            if perturbed.pass != should_pass {
                problems.push(format!(
                    "fault injected into criterion {id} changed criterion {} to {}",
                    c.id,
                    if perturbed.pass { "pass" } else { "fail" }
                ));
            }
        }
        println!("fault injection into criterion {id}: only criterion {id} flips");
    }
}

fn determinism(config: &AcceptanceConfig, first: &AcceptanceReport, problems: &mut Vec<String>) {
    let second = run_acceptance(config);
    check(
        first.body() == second.body(),
        "report body differs between two runs with one seed",
        problems,
    );
    println!("repeat run with seed {}: report body identical", config.root_seed);
}
