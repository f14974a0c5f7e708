//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if a
//! criterion outside `KNOWN_RED` fails. Runs as a plain binary
//! (`harness = false`) so the lines are always shown.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stopwise::bounds::{bernoulli_beta, exponential_asymptotic, exponential_bracket, permutation_threshold};
use stopwise::curve::{full_curve, optimal_threshold, value_at};
use stopwise::models::order_stat_means;
use stopwise::order::{prop3_identity_residual_exact, residual_is_zero};
use stopwise::sim::{exact_curve, simulate, SimConfig};
use stopwise::verify::{
    builtin_models, check_curve, check_identity, check_monotone_threshold, check_signs, iid_models,
};
use stopwise::QualityModel;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn run(id: u32, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    if let Some(b) = budget {
        if elapsed > b {
            o.pass = false;
            o.detail.push_str(&format!("; over budget {b:?}"));
        }
    }
    println!("{} criterion {id}: {} [{:.2?}]", if o.pass { "PASS" } else { "FAIL" }, o.detail, elapsed);
    o.pass
}

fn classical_threshold() -> Outcome {
    let n = 10_000;
    let mu = QualityModel::classical(n).unwrap().mu_sequence(n).unwrap();
    let t = optimal_threshold(&mu, n).unwrap();
    outcome(t.c_star == 3680, format!("classical n=10000 c*={} (want 3680)", t.c_star))
}

fn exponential_threshold() -> Outcome {
    let n = 10_000;
    let mu = QualityModel::exponential().mu_sequence(n).unwrap();
    let c = optimal_threshold(&mu, n).unwrap().c_star;
    let (lo, hi) = exponential_bracket(n);
    let in_bracket = lo <= c + 1 && c <= hi + 1;
    let asym = exponential_asymptotic(n);
    outcome(
        c == 1022 && in_bracket && (asym - 1021.7).abs() <= 0.05,
        format!("exponential n=10000 c*={c} (want 1022), bracket ({lo}, {hi}) ±1, n/(ln n + γ)={asym:.4}"),
    )
}

fn permutation_closed_form() -> Outcome {
    // compared against c*, the smallest maximizer, and the value-based argmax
    let (mut vs_c_star, mut vs_argmax, mut not_maximal) = (Vec::new(), Vec::new(), Vec::new());
    for n in 1..=2000 {
        let mu = QualityModel::permutation(n).unwrap().mu_sequence(n).unwrap();
        let curve = full_curve(&mu, n, "").unwrap();
        let formula = permutation_threshold(n);
        let c_star = if n == 1 { 1 } else { optimal_threshold(&mu, n).unwrap().c_star };
        if formula != c_star {
            vs_c_star.push(n);
        }
        if formula != curve.argmax() {
            vs_argmax.push(n);
        }
        let best = curve.value(curve.argmax());
        if curve.value(formula) < best - 1e-12 * best {
            not_maximal.push(n);
        }
    }
    let ties = vs_c_star.iter().all(|&n| {
        let m = permutation_threshold(n) - 1;
        m * (m + 1) == n
    });
    outcome(
        vs_c_star.is_empty() && vs_argmax.is_empty(),
        format!(
            "n<=2000: formula != c* at {} n {:?}, != value argmax at {} n; all at exact ties n=m(m+1): {ties}; formula not a maximizer at {:?}",
            vs_c_star.len(),
            vs_c_star,
            vs_argmax.len(),
            not_maximal
        ),
    )
}

fn bernoulli_regime() -> Outcome {
    let b0 = bernoulli_beta(0.0).unwrap().beta;
    let b1 = bernoulli_beta(1.0).unwrap().beta;
    let model = QualityModel::bernoulli(1e-6).unwrap();
    let mu = model.mu_sequence(50).unwrap();
    let off: Vec<usize> = (4..=50).filter(|&n| optimal_threshold(&mu.truncated(n), n).unwrap().c_star != 2).collect();
    let pass = (b0 - (-1.0f64).exp()).abs() <= 1e-9 && (b1 - 0.323).abs() <= 0.001 && off.is_empty();
    outcome(pass, format!("β(0)={b0:.12}, β(1)={b1:.6}, p=1e-6 n in 4..=50 with c*!=2: {off:?}"))
}

const HORIZONS: [usize; 4] = [10, 100, 1000, 10_000];

fn harmonic_suite() -> Outcome {
    let (mut checked, mut bad) = (0, Vec::new());
    for n in HORIZONS {
        for model in builtin_models(n) {
            let (c_star, report) = check_curve(&model, n).unwrap();
            if c_star >= 2 {
                checked += 1;
            }
            bad.extend(report.violations.into_iter().filter(|v| v.check == "harmonic_bound"));
        }
    }
    outcome(bad.is_empty(), format!("{checked} (model, n) cases with c*>=2, violations {bad:?}"))
}

fn concavity_suite() -> Outcome {
    let mut evaluated = 0;
    let mut bad = Vec::new();
    for n in HORIZONS {
        for model in builtin_models(n) {
            let (_, report) = check_curve(&model, n).unwrap();
            evaluated += report.evaluated;
            bad.extend(report.violations.into_iter().filter(|v| v.check == "concavity"));
        }
    }
    let monotone: Vec<usize> = (10..=500).step_by(10).collect();
    for model in iid_models() {
        let report = check_monotone_threshold(&model, &monotone).unwrap();
        evaluated += report.evaluated;
        bad.extend(report.violations);
    }
    for model in builtin_models(40) {
        let report = check_signs(&model, 40, 6).unwrap();
        evaluated += report.evaluated;
        bad.extend(report.violations);
    }
    outcome(bad.is_empty(), format!("{evaluated} inequalities, violations {bad:?}"))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut worst: f64 = 0.0;
    let mut identity_cases = 0;
    let mut identity_failures = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=8usize);
        let values: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(-5i32..=5)) * 0.5).collect();
        let model = QualityModel::multiset(&values).unwrap();
        let mu = model.mu_sequence(n).unwrap();
        let exact = exact_curve(&values).unwrap();
        for c in 1..=n {
            worst = worst.max((value_at(&mu, n, c).unwrap() - exact[c - 1]).abs());
        }
        let table = order_stat_means(&values).unwrap();
        for j in 1..n {
            for k in 1..=n - j {
                identity_cases += 1;
                identity_failures +=
                    usize::from(!residual_is_zero(&prop3_identity_residual_exact(&table, j, k).unwrap()));
            }
        }
    }
    let report = check_identity(&(1..=8).map(f64::from).collect::<Vec<_>>(), "permutation:n=8").unwrap();
    identity_failures += report.violations.len();
    identity_cases += report.evaluated as usize;
    outcome(
        worst <= 1e-12 && identity_failures == 0,
        format!("200 multisets, max |value_at - enumeration| = {worst:.2e}; exact identity {identity_failures}/{identity_cases} non-zero"),
    )
}

fn monte_carlo() -> Outcome {
    let cells: [(QualityModel, usize, usize); 9] = [
        (QualityModel::exponential(), 10, 3),
        (QualityModel::exponential(), 100, 27),
        (QualityModel::exponential(), 1000, 368),
        (QualityModel::pareto(2.5).unwrap(), 10, 3),
        (QualityModel::pareto(2.5).unwrap(), 100, 27),
        (QualityModel::pareto(2.5).unwrap(), 1000, 368),
        (QualityModel::permutation(10).unwrap(), 10, 3),
        (QualityModel::permutation(100).unwrap(), 100, 27),
        (QualityModel::classical(1000).unwrap(), 1000, 368),
    ];
    let mut pass = true;
    let mut summary = Vec::new();
    for (i, (model, n, c)) in cells.iter().enumerate() {
        let target = value_at(&model.mu_sequence(*n).unwrap(), *n, *c).unwrap();
        let hits = (0..20u64)
            .filter(|rep| {
                let seed = 7_000 + 100 * i as u64 + rep;
                let r = simulate(model, &SimConfig::new(*n, *c, 1_000_000, seed)).unwrap();
                (r.estimate - target).abs() <= 4.0 * r.std_error
            })
            .count();
        pass &= hits >= 18;
        summary.push(format!("{model}({n},{c}) {hits}/20"));
    }
    let r = simulate(&QualityModel::classical(10_000).unwrap(), &SimConfig::new(10_000, 3680, 1_000_000, 1)).unwrap();
    pass &= (r.best_pick_rate - 0.368).abs() <= 0.01;
    outcome(pass, format!("{}; classical n=10000 c=3680 best-pick rate {:.4}", summary.join(", "), r.best_pick_rate))
}

/// Criteria that cannot be met as stated; the ledger has the analysis.
const KNOWN_RED: [u32; 1] = [3];

fn main() -> ExitCode {
    let results = [
        run(1, Some(Duration::from_secs(1)), classical_threshold),
        run(2, Some(Duration::from_secs(1)), exponential_threshold),
        run(3, Some(Duration::from_secs(30)), permutation_closed_form),
        run(4, None, bernoulli_regime),
        run(5, None, harmonic_suite),
        run(6, None, concavity_suite),
        run(7, None, oracle_equivalence),
        run(8, Some(Duration::from_secs(120)), monte_carlo),
    ];
    let failed: Vec<u32> = (1..).zip(results).filter(|&(_, pass)| !pass).map(|(id, _)| id).collect();
    let unexpected: Vec<u32> = failed.iter().copied().filter(|id| !KNOWN_RED.contains(id)).collect();
    println!(
        "acceptance: {} passed, {} failed {failed:?} (known red {KNOWN_RED:?}, unexpected {unexpected:?})",
        results.len() - failed.len(),
        failed.len()
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
