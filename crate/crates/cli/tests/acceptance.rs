//! Acceptance criteria, run in sequence so wall-clock limits are measured
//! without interference. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use qchan::analysis::{
    check_additivity, check_multiplicativity, entropy_increase_suite, eq3_batch, eq5_batch, factorization_grid,
    gradient_check, min_output_entropy, monotonicity_suite, prop1_batch, prop2_batch, prop3_batch, verify_eq9,
    verify_prop4, verify_theorem, OptimizerConfig, TheoremConfig,
};
use qchan::channels::{
    compose, depolarizing, eq12_representation, phase_damping, random_channel_with, DepolarizingParams, KrausChannel,
    PhaseDampingParams,
};
use qchan::states::{random_pure_with, rng_for};
use rand::Rng;
use serde_json::Value;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn dep(l: usize, p: f64) -> KrausChannel {
    depolarizing(&DepolarizingParams::new(l, p).unwrap())
}

fn damping(l: usize, q: Vec<f64>) -> KrausChannel {
    phase_damping(&PhaseDampingParams::new(l, q).unwrap()).unwrap()
}

/// `−(1−(l−1)p/l) ln(1−(l−1)p/l) − (l−1)(p/l) ln(p/l)`.
fn closed_form(l: usize, p: f64) -> f64 {
    let lf = l as f64;
    let xlnx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    -xlnx(1.0 - (lf - 1.0) * p / lf) - (lf - 1.0) * xlnx(p / lf)
}

fn c1_min_entropy_closed_form() -> Outcome {
    let mut worst_err = 0.0f64;
    let mut worst_time = Duration::ZERO;
    for (l, p) in [(2, 0.5), (2, 1.0), (3, 0.3), (3, 1.0), (5, 0.4)] {
        let start = Instant::now();
        let r = min_output_entropy(&dep(l, p), &OptimizerConfig::with_restarts(20), 1).unwrap();
        worst_time = worst_time.max(start.elapsed());
        worst_err = worst_err.max((r.value - closed_form(l, p)).abs());
    }
    outcome(
        worst_err <= 1e-6 && worst_time <= Duration::from_secs(10),
        format!("max |s_min - closed form| = {worst_err:.3e} (tol 1e-6), slowest run {worst_time:.2?} (limit 10 s)"),
    )
}

fn c2_additivity_depolarizing() -> Outcome {
    let mut worst_gap = 0.0f64;
    let mut worst_time = Duration::ZERO;
    for l in [2, 3] {
        for p in [0.3, 0.5, 1.0] {
            let c = dep(l, p);
            let start = Instant::now();
            let r = check_additivity(&c, &c, &OptimizerConfig::with_restarts(40), 11).unwrap();
            worst_time = worst_time.max(start.elapsed());
            worst_gap = worst_gap.max(r.gap.abs());
        }
    }
    outcome(
        worst_gap <= 1e-5 && worst_time <= Duration::from_secs(60),
        format!("max |gap| = {worst_gap:.3e} (tol 1e-5), slowest case {worst_time:.2?} (limit 60 s)"),
    )
}

fn c3_composed_channel() -> Outcome {
    let mut failed = Vec::new();
    let mut worst: Vec<String> = Vec::new();
    for (l, p, q) in [(2, 0.5, vec![0.7]), (3, 0.3, vec![0.5, 0.5])] {
        let cfg = TheoremConfig {
            seed: 42,
            ..TheoremConfig::default()
        };
        let r = verify_theorem(
            &DepolarizingParams::new(l, p).unwrap(),
            &PhaseDampingParams::new(l, q).unwrap(),
            &cfg,
        )
        .unwrap();
        for c in &r.checks {
            if !c.pass {
                failed.push(format!("l={l}:{}", c.claim_id));
            }
        }
        let min_margin = r.checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
        worst.push(format!("l={l} min margin {min_margin:.3e}"));
    }
    outcome(
        failed.is_empty(),
        format!("{} sub-checks failed [{}]; {}", failed.len(), failed.join(", "), worst.join(", ")),
    )
}

fn c4_entropy_bounds() -> Outcome {
    let start = Instant::now();
    let mut min_margin = f64::INFINITY;
    let mut failed = Vec::new();
    for l in [2, 3] {
        for r in [
            prop1_batch(l, l, 200, 4).unwrap(),
            prop2_batch(l, l, 200, 4).unwrap(),
            prop3_batch(l, l, None, 200, 4).unwrap(),
        ] {
            min_margin = min_margin.min(r.margin);
            if r.margin < -1e-9 {
                failed.push(format!("{} l={l}", r.claim_id));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failed.is_empty() && elapsed <= Duration::from_secs(300),
        format!("min margin {min_margin:.3e} (tol -1e-9), failed {failed:?}, total {elapsed:.2?} (limit 5 min)"),
    )
}

fn c5_schur_condition() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for l in [3, 4, 5] {
        // draw until at least 1000 samples satisfy the condition
        let mut samples = 1000;
        let report = loop {
            let r = verify_prop4(l, samples, 5).unwrap();
            if r.accepted >= 1000 {
                break r;
            }
            samples *= 2;
        };
        let serialized = serde_json::to_value(report.to_report()).unwrap();
        let listed = serialized["witness"]["violations"].as_array().map_or(0, Vec::len);
        let listing_ok = listed == report.violations.len()
            && report.violations.iter().all(|v| v.min_eigenvalue.is_finite());
        let exact_constant = report.constant_q.iter().all(|c| c.pass && c.expected >= 0.0);
        pass &= listing_ok && exact_constant && report.min_margin.is_finite();
        parts.push(format!(
            "l={l}: {} accepted, min margin {:.3e}, {} counterexamples listed = {listing_ok}, constant-Q exact = {exact_constant}",
            report.accepted,
            report.min_margin,
            report.violations.len()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c6_structural_identities() -> Outcome {
    let mut worst = [0.0f64; 4];
    for l in [2, 3, 5] {
        worst[0] = worst[0].max(eq3_batch(l, 100, 6).unwrap().lhs);
        worst[1] = worst[1].max(eq5_batch(l, 100, 6).unwrap().lhs);
        for p in [0.2, 0.7] {
            let r = verify_eq9(l, p).unwrap();
            worst[2] = worst[2].max(r[0].lhs);
        }
    }
    worst[3] = factorization_grid(10).unwrap().lhs;
    let pass = worst[0] <= 1e-11 && worst[1] <= 1e-11 && worst[2] <= 1e-10 && worst[3] <= 1e-12;
    outcome(
        pass,
        format!(
            "resolution {:.2e} (1e-11), intertwining {:.2e} (1e-11), decomposition {:.2e} (1e-10), factorization {:.2e} (1e-12)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn c7_difference_representation() -> Outcome {
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut produced = 0usize;
    let mut ok = true;
    let mut max_residual = 0.0f64;
    for l in 2..=5 {
        let combos = grid.len().pow((l - 1) as u32);
        for mut idx in 0..combos {
            let q: Vec<f64> = (0..l - 1)
                .map(|_| {
                    let v = grid[idx % grid.len()];
                    idx /= grid.len();
                    v
                })
                .collect();
            let rep = eq12_representation(&PhaseDampingParams::new(l, q).unwrap());
            let v: Value = serde_json::to_value(&rep).unwrap();
            let entries = v["entries"].as_array().map_or(0, Vec::len);
            let both_sides = v["entries"]
                .as_array()
                .is_some_and(|es| es.iter().all(|e| e["representation"].is_f64() && e["definition"].is_f64()));
            ok &= entries > 0 && both_sides && rep.reconstruction_residual.is_finite();
            max_residual = max_residual.max(rep.reconstruction_residual);
            produced += 1;
        }
    }
    outcome(
        ok,
        format!("{produced} reports serialized with both sides, max residual {max_residual:.3e} (diagnostic only)"),
    )
}

fn c8_monotonicity() -> Outcome {
    let families = [
        ("depolarizing l=2", dep(2, 0.5)),
        ("depolarizing l=3", dep(3, 0.3)),
        ("phase-damping l=2", damping(2, vec![0.7])),
        ("phase-damping l=3", damping(3, vec![0.5, 0.2])),
        ("composed l=2", compose(&damping(2, vec![0.7]), &dep(2, 0.5)).unwrap()),
        ("composed l=3", compose(&damping(3, vec![0.5, 0.2]), &dep(3, 0.3)).unwrap()),
    ];
    let mut min_mono = f64::INFINITY;
    let mut min_incr = f64::INFINITY;
    for (_, c) in &families {
        min_mono = min_mono.min(monotonicity_suite(c, 1000, 8).unwrap().margin);
        min_incr = min_incr.min(entropy_increase_suite(c, 1000, 8).unwrap().margin);
    }
    outcome(
        min_mono >= -1e-9 && min_incr >= -1e-9,
        format!(
            "{} families, min monotonicity margin {min_mono:.3e}, min entropy increase {min_incr:.3e} (tol -1e-9)",
            families.len()
        ),
    )
}

fn c9_gradient() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let mut rng = rng_for(9, i);
        let d = rng.random_range(2..=4);
        let c = random_channel_with(d, d + rng.random_range(0..=1), &mut rng);
        let psi = random_pure_with(d, &mut rng);
        worst = worst.max(gradient_check(&c, &psi).unwrap().relative_error);
    }
    outcome(worst <= 1e-5, format!("max relative error {worst:.3e} over 100 draws (tol 1e-5)"))
}

fn c10_multiplicativity() -> Outcome {
    let mut worst = 0.0f64;
    for l in [2, 3] {
        for p in [0.3, 0.7] {
            let c = dep(l, p);
            let r = check_multiplicativity(&c, &c, 2.0, &OptimizerConfig::with_restarts(20), 10).unwrap();
            worst = worst.max(r.deviation.abs());
        }
    }
    outcome(worst <= 1e-5, format!("max |deviation| = {worst:.3e} (tol 1e-5)"))
}

fn c11_determinism() -> Outcome {
    let run = || {
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_qchan"))
            .args(["verify", "all", "--l", "2", "--p", "0.5", "--q", "0.7", "--seed", "42"])
            .env_remove("QCHAN_THREADS")
            .output()
            .expect("binary runs");
        let mut doc: Value = serde_json::from_slice(&out.stdout).expect("JSON report");
        for c in doc["checks"].as_array_mut().expect("checks") {
            c.as_object_mut().unwrap().remove("elapsed_ms");
        }
        (out.status.code(), serde_json::to_string(&doc).unwrap(), start.elapsed())
    };
    let (code_a, a, t_a) = run();
    let (code_b, b, t_b) = run();
    let identical = a == b;
    outcome(
        identical && code_a == Some(0) && code_b == Some(0) && t_a.max(t_b) <= Duration::from_secs(300),
        format!("identical = {identical}, exit codes {code_a:?}/{code_b:?}, runs {t_a:.2?}/{t_b:.2?} (limit 5 min)"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("minimal output entropy closed form", c1_min_entropy_closed_form),
        ("depolarizing additivity", c2_additivity_depolarizing),
        ("composed channel entropy and additivity", c3_composed_channel),
        ("coset, subgroup and depolarizing entropy bounds", c4_entropy_bounds),
        ("schur multiplier condition", c5_schur_condition),
        ("structural identities", c6_structural_identities),
        ("difference representation diagnostic", c7_difference_representation),
        ("monotonicity and entropy increase", c8_monotonicity),
        ("gradient correctness", c9_gradient),
        ("multiplicativity at p = 2", c10_multiplicativity),
        ("determinism", c11_determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        println!(
            "criterion {:>2} {} {name}: {} [{:.2?}]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed()
        );
        failures += usize::from(!o.pass);
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
