//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::f64::consts::{FRAC_PI_3, SQRT_2};
use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use concorr::correlation::{
    alpha_connected, alpha_quantum, chsh_optimize, classify, connected_r_matrix,
    max_violation_eigen, r_matrix, TSIRELSON,
};
use concorr::lhv::{
    build_model, correlator_closed, f_observable, freedom_of_choice_witness, joint_distribution,
    k_distribution, mc_correlator, HiddenSample, LhvModel,
};
use concorr::measures::{
    bipartite_concurrence, concurrences, e5_matrix, measures_from_concurrences,
    measures_from_params, wootters_concurrence, MeasureSet, E5_TRACE_OFFSET,
};
use concorr::qmat::{charpoly3, dot, normalize, partial_trace, RealMatrix3, Vec3};
use concorr::scan::{
    classify_bins, fig2_witnesses, run_scan, BinSpec, FixMode, ScanConfig, ScanRecord, ScanRow,
    GAMMA_SLACK,
};
use concorr::states::{
    canonical_state, sample_canonical, CanonicalParams, PairSelector, Reductions,
};

const SCAN_SAMPLES: usize = 100_000;
const SCAN_SEED: u64 = 20_000;
const SCAN_SEPARABLE_FRACTION: f64 = 0.1;
const BIN_WIDTH: f64 = 0.02;
const OPTIMIZER_RESTARTS: usize = 64;

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

fn reductions(p: &CanonicalParams) -> Reductions {
    Reductions::of(&canonical_state(p))
}

fn max_abs_diff3(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

fn coefficient_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..1000 {
        let p = sample_canonical(seed);
        let red = reductions(&p);
        for sel in PairSelector::ALL {
            let ms = measures_from_params(&p, sel);
            let rho = red.pair(sel);
            let q = charpoly3(&r_matrix(rho).unwrap().gram());
            let c = charpoly3(&connected_r_matrix(rho).unwrap().gram());
            worst = worst.max(max_abs_diff3(alpha_quantum(&ms), q));
            worst = worst.max(max_abs_diff3(alpha_connected(&ms), c));
        }
    }
    outcome(
        worst <= 1e-9,
        format!("1000 states x 3 pairs, max |Δα| = {worst:.2e} (tol 1e-9)"),
    )
}

fn triple_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for seed in 0..200 {
        let rho = reductions(&sample_canonical(seed))
            .pair(PairSelector::P12)
            .clone();
        for r in [r_matrix(&rho).unwrap(), connected_r_matrix(&rho).unwrap()] {
            let closed = classify(&r).unwrap().gamma;
            let eigen = max_violation_eigen(&r).unwrap();
            let (opt, _) = chsh_optimize(&r, OPTIMIZER_RESTARTS, seed);
            worst = worst
                .max((closed - eigen).abs())
                .max((closed - opt).abs())
                .max((eigen - opt).abs());
            count += 1;
        }
    }
    outcome(
        worst <= 1e-6,
        format!("{count} matrices, max spread = {worst:.2e} (tol 1e-6)"),
    )
}

fn connected_gamma(p: &CanonicalParams) -> f64 {
    let rho = reductions(p).pair(PairSelector::P12).clone();
    classify(&connected_r_matrix(&rho).unwrap()).unwrap().gamma
}

fn pure_state_law() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..500 {
        let s = sample_canonical(seed);
        let l = s.lambda();
        let p = CanonicalParams::normalized([l[0], l[1], 0.0, l[3], 0.0], s.phi()).unwrap();
        let rho12 = reductions(&p).pair(PairSelector::P12).clone();
        let c = bipartite_concurrence(&partial_trace(&rho12, &[2]).unwrap());
        worst = worst.max((connected_gamma(&p) - 2.0 * SQRT_2 * c).abs());
    }
    outcome(
        worst <= 1e-9,
        format!("500 states, max |γ_c − 2√2·C| = {worst:.2e} (tol 1e-9)"),
    )
}

type Expected = fn(&MeasureSet) -> f64;

fn single_measure_limits() -> Outcome {
    let mut worst = [0.0f64; 4];
    for seed in 0..500 {
        let s = sample_canonical(seed);
        let l = s.lambda();
        let cases: [(_, Expected); 4] = [
            ([l[0], l[1], 0.0, l[3], 0.0], |m| 2.0 * SQRT_2 * m.e1),
            ([l[0], l[1], l[2], 0.0, 0.0], |_| 0.0),
            ([0.0, l[1], l[2], l[3], l[4]], |_| 0.0),
            ([l[0], 0.0, 0.0, 0.0, l[4]], |m| 2.0 * m.e4 * m.e4),
        ];
        for (i, (lam, expected)) in cases.iter().enumerate() {
            let p = CanonicalParams::normalized(*lam, s.phi()).unwrap();
            let ms = measures_from_params(&p, PairSelector::P12);
            worst[i] = worst[i].max((connected_gamma(&p) - expected(&ms)).abs());
        }
    }
    let max = worst.iter().cloned().fold(0.0, f64::max);
    outcome(
        max <= 1e-9,
        format!(
            "500 states per case, max error {:.1e} / {:.1e} / {:.1e} / {:.1e} (tol 1e-9)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn measure_identities() -> Outcome {
    let (mut eq7, mut e5, mut woot) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..1000 {
        let p = sample_canonical(seed);
        let red = reductions(&p);
        let ms = measures_from_params(&p, PairSelector::P12);
        let rebuilt = measures_from_concurrences(&concurrences(&red), ms.e1).unwrap();
        eq7 = eq7.max(max_abs_diff3(rebuilt, [ms.e2, ms.e3, ms.e4]));

        let forms = [
            e5_matrix(
                red.pair(PairSelector::P12),
                red.single(1),
                red.single(2),
                &ms,
            )
            .unwrap(),
            e5_matrix(
                red.pair(PairSelector::P23),
                red.single(2),
                red.single(3),
                &ms,
            )
            .unwrap(),
            e5_matrix(
                red.pair(PairSelector::P13),
                red.single(1),
                red.single(3),
                &ms,
            )
            .unwrap(),
        ];
        for f in forms {
            e5 = e5.max((f - E5_TRACE_OFFSET - ms.e5).abs());
        }

        for (sel, e) in [
            (PairSelector::P12, ms.e1),
            (PairSelector::P13, ms.e2),
            (PairSelector::P23, ms.e3),
        ] {
            woot = woot.max((wootters_concurrence(red.pair(sel)).unwrap() - e).abs());
        }
    }
    let pass = eq7 <= 1e-8 && e5 <= 1e-8 && woot <= 1e-8;
    outcome(
        pass,
        format!("1000 states, max error E2/E3/E4 {eq7:.1e}, E5 {e5:.1e}, Wootters {woot:.1e} (tol 1e-8)"),
    )
}

struct Scan {
    records: Vec<ScanRecord>,
    rows: Vec<ScanRow>,
}

fn scan() -> Scan {
    let cfg = ScanConfig {
        samples: SCAN_SAMPLES,
        seed: SCAN_SEED,
        pair: PairSelector::P12,
        separable_fraction: SCAN_SEPARABLE_FRACTION,
    };
    let records = run_scan(&cfg).expect("scan runs");
    let rows = records.iter().map(ScanRow::from).collect();
    Scan { records, rows }
}

fn extremal_separable(s: &Scan) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (mode, label) in [
        (FixMode::Gamma2Theta, "(γ2,θ) separable at bin min"),
        (FixMode::Alpha1Theta, "(α1,θ) separable at bin max"),
    ] {
        let spec = BinSpec::new(mode, BIN_WIDTH, BIN_WIDTH).unwrap();
        let bins = classify_bins(&s.rows, &spec);
        let mixed: Vec<_> = bins
            .iter()
            .filter(|b| b.separable_count > 0 && b.separable_count < b.count)
            .collect();
        let bad: Vec<_> = bins
            .iter()
            .filter(|b| b.extremal_separable == Some(false))
            .collect();
        let gap = bad
            .iter()
            .map(|b| match mode {
                FixMode::Gamma2Theta => b.sep_gamma_c_min.unwrap() - b.nonsep_gamma_c_min.unwrap(),
                FixMode::Alpha1Theta => b.nonsep_gamma_c_max.unwrap() - b.sep_gamma_c_max.unwrap(),
            })
            .fold(0.0, f64::max);
        pass &= bad.is_empty();
        parts.push(format!(
            "{label}: {} of {} mixed bins violate (worst gap {gap:.1e}, slack {GAMMA_SLACK:.0e})",
            bad.len(),
            mixed.len()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn ordering_witness(s: &Scan) -> Outcome {
    let spec = BinSpec::new(FixMode::Gamma2Theta, BIN_WIDTH, BIN_WIDTH).unwrap();
    let w = fig2_witnesses(&s.rows, &spec);
    let pairs: u64 = w.iter().map(|x| x.pairs).sum();
    let detail = match w.first() {
        Some(_) => {
            let x = w
                .iter()
                .max_by(|a, b| {
                    (a.logneg2 - a.logneg1)
                        .min(a.gamma_c1 - a.gamma_c2)
                        .total_cmp(&(b.logneg2 - b.logneg1).min(b.gamma_c1 - b.gamma_c2))
                })
                .unwrap();
            format!(
            "{pairs} pairs in {} bins; e.g. seeds {} / {}: E_N {:.4} < {:.4}, γ_c {:.4} > {:.4}",
            w.len(),
            x.seed1,
            x.seed2,
            x.logneg1,
            x.logneg2,
            x.gamma_c1,
            x.gamma_c2
        )
        }
        None => "no pair found".into(),
    };
    outcome(pairs > 0, detail)
}

fn bounds(s: &Scan) -> Outcome {
    let (mut disc, mut gamma) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut theta_ok = true;
    for r in &s.records {
        for c in [&r.quantum, &r.connected] {
            disc = disc.max(c.discriminant);
            gamma = gamma.max(c.gamma);
            theta_ok &= (0.0..=FRAC_PI_3).contains(&c.theta);
        }
    }
    let pass = disc <= 1e-9 && gamma <= TSIRELSON + 1e-9 && theta_ok;
    outcome(
        pass,
        format!(
            "{} states, max Δ = {disc:.1e}, max γ − 2√2 = {:.1e}, θ in [0, π/3]: {theta_ok}",
            s.records.len(),
            gamma - TSIRELSON
        ),
    )
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v: Vec3 = std::array::from_fn(|_| rng.sample(StandardNormal));
        if let Some(u) = normalize(&v) {
            return u;
        }
    }
}

fn physical_model(seed: u64) -> (RealMatrix3, LhvModel) {
    let rho = Reductions::of(&canonical_state(&sample_canonical(seed)))
        .pair(PairSelector::P12)
        .clone();
    let r = connected_r_matrix(&rho).unwrap();
    (r, build_model(&r).unwrap())
}

fn lhv_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut parts = Vec::new();

    let mut mc_bad = 0;
    let mut worst_z = 0.0f64;
    let mut norm_err = 0.0f64;
    let mut signed = 0.0f64;
    for case in 0..20u64 {
        let (r, m) = physical_model(50_000 + case);
        let (a, b) = (random_unit(&mut rng), random_unit(&mut rng));
        let closed = correlator_closed(&m, &a, &b);
        assert!((closed - dot(&a, &r.mul_vec(&b))).abs() < 1e-10);
        let mc = mc_correlator(&m, &a, &b, 1_000_000, case).unwrap();
        let dev = (mc.estimate - closed).abs();
        if dev > 3.0 * mc.stderr + 1e-12 {
            mc_bad += 1;
        }
        if mc.stderr > 0.0 {
            worst_z = worst_z.max(dev / mc.stderr);
        }
        signed = signed.max(mc.signed_fraction);

        let (ta, tb) = (m.to_model_basis_a(&a), m.to_model_basis_b(&b));
        for i in 0..=1000 {
            let s = HiddenSample::new(i as f64 / 1000.0).unwrap();
            norm_err = norm_err.max((joint_distribution(&m, &ta, &tb, s).total() - 1.0).abs());
            norm_err =
                norm_err.max((k_distribution(&m, &ta, &tb, s).iter().sum::<f64>() - 1.0).abs());
        }
    }
    parts.push(format!(
        "MC {}/20 within 3σ (max z {worst_z:.2}, max signed fraction {signed:.3})",
        20 - mc_bad
    ));
    parts.push(format!("normalization {norm_err:.1e}"));

    let mut quad_err = 0.0f64;
    for case in 0..100u64 {
        let (_, m) = physical_model(60_000 + case);
        let (a, b) = (random_unit(&mut rng), random_unit(&mut rng));
        let (ta, tb) = (m.to_model_basis_a(&a), m.to_model_basis_b(&b));
        let integrand = |l: f64| {
            let s = HiddenSample::new(l.clamp(0.0, 1.0)).unwrap();
            dot(&f_observable(&m, &ta, s), &f_observable(&m, &tb, s))
        };
        let out = quadrature::double_exponential::integrate(integrand, 0.0, 1.0, 1e-10);
        quad_err = quad_err.max((out.integral - correlator_closed(&m, &a, &b)).abs());
    }
    parts.push(format!("quadrature {quad_err:.1e}"));

    let mut witness = 0.0f64;
    let mut models = vec![build_model(&RealMatrix3::diag([1.0, 0.5, 0.25])).unwrap()];
    models.extend((0..20).map(|i| physical_model(70_000 + i).1));
    let z = [0.0, 0.0, 1.0];
    let x = [1.0, 0.0, 0.0];
    for m in &models {
        let mut settings = vec![((z, z), (x, x))];
        for _ in 0..20 {
            settings.push((
                (random_unit(&mut rng), random_unit(&mut rng)),
                (random_unit(&mut rng), random_unit(&mut rng)),
            ));
        }
        for ((a1, b1), (a2, b2)) in &settings {
            for i in 0..=20 {
                let s = HiddenSample::new(i as f64 / 20.0).unwrap();
                witness = witness.max(freedom_of_choice_witness(m, (a1, b1), (a2, b2), s));
            }
        }
    }
    parts.push(format!(
        "max freedom-of-choice witness {witness:.1e} (need > 1e-3)"
    ));

    let pass = mc_bad == 0 && norm_err <= 1e-12 && quad_err <= 1e-8 && witness > 1e-3;
    outcome(pass, parts.join("; "))
}

fn ppt_biconditional(s: &Scan) -> Outcome {
    let mismatched: Vec<&ScanRecord> = s
        .records
        .iter()
        .filter(|r| (r.neg.negativity > 1e-7) != (r.concurrence > 1e-7))
        .collect();
    let detail = match mismatched
        .iter()
        .max_by(|a, b| a.concurrence.total_cmp(&b.concurrence))
    {
        Some(r) => format!(
            "{} of {} states disagree at 1e-7; largest C among them {:.2e} with N = {:.2e}",
            mismatched.len(),
            s.records.len(),
            r.concurrence,
            r.neg.negativity
        ),
        None => format!("{} states agree", s.records.len()),
    };
    outcome(mismatched.is_empty(), detail)
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("coefficient equivalence", coefficient_equivalence()),
        ("triple-oracle γ agreement", triple_oracle()),
        ("pure-state law", pure_state_law()),
        ("single-measure limits", single_measure_limits()),
        ("measure identities", measure_identities()),
    ];
    let s = scan();
    results.push(("separable extremes in bins", extremal_separable(&s)));
    results.push(("negativity / γ_c ordering witness", ordering_witness(&s)));
    results.push(("bounds over scan", bounds(&s)));
    results.push(("hidden-variable model", lhv_suite()));
    results.push(("PPT biconditional over scan", ppt_biconditional(&s)));

    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        failed += usize::from(!o.pass);
        let tag = if o.pass { "PASS" } else { "FAIL" };
        writeln!(out, "[{tag}] {:>2} {name}: {}", i + 1, o.detail).unwrap();
    }
    writeln!(
        out,
        "acceptance: {} passed, {failed} failed ({:.1}s)",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    )
    .unwrap();
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
