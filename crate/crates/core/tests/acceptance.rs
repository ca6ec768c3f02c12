//! Acceptance criteria. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any failed.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, DiscreteCDF};

use auctionlab::data::{Dataset, Treatment};
use auctionlab::dist::Uniform;
use auctionlab::equilibrium::{
    check_nesting, csp_bid_function, expected_revenue, foc_residual, fp_bid, fp_bid_function,
    seller_best_response, solve_ncsp_equilibrium, BidFunction, NcspSolverOptions, PriceRule,
    SellerParams,
};
use auctionlab::estimate::{censored_sample, estimate_gamma, ols_origin, two_proportion_z_test};
use auctionlab::rationality::builders::FpBuilder;
use auctionlab::rationality::{bronars_power, hmi, HmiMode, HmiOptions, SubjectData};
use auctionlab::simulate::{
    efficiency, revenue_stats, run_session, BidderStrategy, SellerStrategy, SimConfig,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || {
        format!("{what} took {t:.1?}, budget {limit:?}")
    })
}

fn u() -> Uniform {
    Uniform::standard()
}

fn solve(gamma: f64) -> Result<BidFunction, String> {
    solve_ncsp_equilibrium(
        &u(),
        2,
        SellerParams::new(gamma).unwrap(),
        NcspSolverOptions::default(),
    )
    .map_err(|e| format!("solver failed at gamma {gamma}: {e}"))
}

fn fp_table() -> Arc<BidFunction> {
    Arc::new(fp_bid_function(&u(), 2, 1001).unwrap())
}

fn session(
    treatment: Treatment,
    bidders: [BidderStrategy; 2],
    seller: SellerStrategy,
    rounds: u32,
    groups: u32,
    seed: u64,
) -> Dataset {
    let cfg = SimConfig {
        n_rounds: rounds,
        groups,
        seller,
        ..SimConfig::new(treatment, bidders, seed)
    };
    run_session(&cfg).unwrap()
}

fn fp_closed_form() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..=100 {
        let t = f64::from(i);
        worst = worst.max((fp_bid(t, &u(), 2).map_err(|e| e.to_string())? - t / 2.0).abs());
    }
    ensure(worst <= 1e-12, || format!("max |fp_bid - θ/2| = {worst:e}"))?;
    within_budget(start, Duration::from_secs(1), "101 evaluations")?;
    Ok(format!("max deviation {worst:e} over 101 points"))
}

fn nesting() -> Outcome {
    let mut parts = Vec::new();
    for gamma in [0.5, 5.0, 10.0, 50.0] {
        let start = Instant::now();
        let f = solve(gamma)?;
        let report = check_nesting(&f, &u(), 2).map_err(|e| e.to_string())?;
        let res = foc_residual(&f, &u(), 2, SellerParams::new(gamma).unwrap());
        ensure(report.checked > 0 && report.holds(), || {
            format!(
                "gamma {gamma}: {} points below FP, {} not below value",
                report.below_fp.len(),
                report.not_below_value.len()
            )
        })?;
        ensure(res < 1e-8, || {
            format!("gamma {gamma}: FOC residual {res:e}")
        })?;
        within_budget(start, Duration::from_secs(30), &format!("gamma {gamma}"))?;
        parts.push(format!(
            "γ={gamma}: {} pts, FOC {res:.1e}, {:.1?}",
            report.checked,
            start.elapsed()
        ));
    }
    Ok(parts.join("; "))
}

fn limits() -> Outcome {
    let start = Instant::now();
    let hi = solve(200.0)?;
    let lo = solve(1e-6)?;
    let mut to_fp: f64 = 0.0;
    let mut to_truth: f64 = 0.0;
    for ((&t, &bh), &bl) in hi.grid().iter().zip(hi.bids()).zip(lo.bids()) {
        to_fp = to_fp.max((bh - fp_bid(t, &u(), 2).unwrap()).abs());
        to_truth = to_truth.max((bl - t).abs());
    }
    ensure(to_fp <= 1e-6, || {
        format!("gamma 200: max distance to FP {to_fp:e}")
    })?;
    ensure(to_truth <= 1e-3, || {
        format!("gamma 1e-6: max distance to truthful {to_truth:e}")
    })?;
    within_budget(start, Duration::from_secs(60), "both solves")?;
    Ok(format!(
        "γ=200 vs FP {to_fp:.1e}; γ=1e-6 vs truthful {to_truth:.1e}"
    ))
}

/// Expected price when both values are drawn from the integers 0..=100.
fn integer_value_revenue(rule: PriceRule, f: &BidFunction) -> f64 {
    let mut total = 0.0;
    for a in 0..=100 {
        for b in 0..=100 {
            let (x, y) = (f.eval(f64::from(a)), f.eval(f64::from(b)));
            total += rule.price(x.max(y), x.min(y));
        }
    }
    total / (101.0 * 101.0)
}

fn revenue() -> Outcome {
    let start = Instant::now();
    let target = 100.0 / 3.0;
    let fp = fp_table();
    let csp = Arc::new(csp_bid_function(&u(), 1001).unwrap());
    let ncsp = Arc::new(solve(10.0)?);
    let seller = SellerParams::new(10.0).unwrap();
    let formats = [
        ("FP", Treatment::Fp, fp, PriceRule::FirstPrice),
        ("CSP", Treatment::Csp, csp, PriceRule::SecondPrice),
        ("NCSP", Treatment::Ncsp, ncsp, PriceRule::Overcharge(seller)),
    ];
    let mut parts = Vec::new();
    for (name, treatment, f, rule) in formats {
        let q = expected_revenue(&f, &u(), 2, rule).map_err(|e| e.to_string())?;
        ensure((q - target).abs() <= 0.05, || {
            format!("{name}: quadrature revenue {q}")
        })?;
        let bidder = BidderStrategy::Equilibrium(f.clone());
        let d = session(
            treatment,
            [bidder.clone(), bidder],
            SellerStrategy::GammaOvercharger {
                gamma: 10.0,
                sigma: 0.0,
            },
            10_000,
            100,
            4,
        );
        ensure(d.rounds.len() == 1_000_000, || {
            format!("{name}: {} rounds", d.rounds.len())
        })?;
        let mc = revenue_stats(&d).map_err(|e| e.to_string())?;
        ensure((mc.mean - target).abs() <= 0.2, || {
            format!(
                "{name}: Monte Carlo revenue {:.4} (SE {:.4}) is {:.3} from 100/3; with integer values the exact mean is {:.4}",
                mc.mean,
                mc.std_error,
                mc.mean - target,
                integer_value_revenue(rule, &f)
            )
        })?;
        parts.push(format!("{name} quad {q:.4} MC {:.3}", mc.mean));
    }
    within_budget(start, Duration::from_secs(120), "revenue checks")?;
    Ok(parts.join("; "))
}

fn efficiency_benchmark() -> Outcome {
    let fp = BidderStrategy::Equilibrium(fp_table());
    let ncsp = BidderStrategy::Equilibrium(Arc::new(solve(10.0)?));
    let best = SellerStrategy::GammaOvercharger {
        gamma: 10.0,
        sigma: 0.0,
    };
    let runs = [
        ("FP", Treatment::Fp, fp.clone()),
        ("CSP", Treatment::Csp, BidderStrategy::Truthful),
        ("NCSP", Treatment::Ncsp, ncsp.clone()),
    ];
    let mut parts = Vec::new();
    for (name, treatment, b) in runs {
        let d = session(treatment, [b.clone(), b], best, 100_000, 1, 8);
        let e = efficiency(&d).map_err(|e| e.to_string())?;
        ensure(e == 1.0, || format!("{name}: efficiency {e}"))?;
        parts.push(format!("{name} {e}"));
    }
    let d = session(
        Treatment::Ncsp,
        [ncsp.clone(), ncsp],
        SellerStrategy::RandomWinner,
        100_000,
        1,
        8,
    );
    let e = efficiency(&d).map_err(|e| e.to_string())?;
    ensure((e - 0.5).abs() <= 0.01, || {
        format!("random winner: efficiency {e}")
    })?;
    parts.push(format!("random winner {e:.4}"));
    Ok(parts.join("; "))
}

fn seller_rule() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..100_000u32 {
        let (b1, b2) = if i % 4 == 0 {
            // Integer bids, where ties are common.
            (
                f64::from(rng.gen_range(0u32..=20)),
                f64::from(rng.gen_range(0u32..=20)),
            )
        } else {
            (rng.gen_range(0.0..=100.0), rng.gen_range(0.0..=100.0))
        };
        let gamma = if i % 3 == 0 {
            rng.gen_range(1e-6..1.0)
        } else {
            rng.gen_range(1e-6..120.0)
        };
        let d = seller_best_response(&[b1, b2], SellerParams::new(gamma).unwrap())
            .map_err(|e| e.to_string())?;
        let (hi, lo) = if b1 >= b2 { (b1, b2) } else { (b2, b1) };
        let expected = hi.min(lo + gamma);
        ensure(d.price == expected, || {
            format!(
                "bids ({b1}, {b2}), γ {gamma}: price {} ≠ {expected}",
                d.price
            )
        })?;
        ensure([b1, b2][d.winner_index] == hi, || {
            format!("bids ({b1}, {b2}): non-highest bidder selected")
        })?;
    }
    Ok("100000 bid pairs, price and winner exact".into())
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let builder = FpBuilder::equilibrium(Arc::new(u()), 2).unwrap();
    let mut agree = 0;
    let mut below_one = 0;
    for i in 0..200u64 {
        let pairs = common::mixed_subject(7, i, 6);
        let (kept, total) = common::fp_hmi_oracle(&pairs);
        let s = SubjectData::from_pairs(&pairs).unwrap();
        let lib = hmi(&s, &builder, HmiOptions::default());
        let same = match &lib {
            Ok(r) => (r.max_consistent_size, r.total) == (kept, total),
            Err(_) => total == 0,
        };
        ensure(same, || {
            format!("subject {i} {pairs:?}: library {lib:?}, oracle {kept}/{total}")
        })?;
        agree += 1;
        if kept < total {
            below_one += 1;
        }
    }
    within_budget(start, Duration::from_secs(600), "oracle comparison")?;
    Ok(format!(
        "{agree}/200 agree ({below_one} with HMI < 1), {:.1?}",
        start.elapsed()
    ))
}

/// Smallest `k` with `P(X <= k) >= q` for `X ~ Bin(n, p)`.
fn binom_quantile(n: u64, p: f64, q: f64) -> u64 {
    let b = Binomial::new(p, n).unwrap();
    (0..=n).find(|&k| b.cdf(k) >= q).unwrap_or(n)
}

fn bronars_holdout() -> Outcome {
    let start = Instant::now();
    let builder = FpBuilder::equilibrium(Arc::new(u()), 2).unwrap();
    let mut parts = Vec::new();
    for mode in [HmiMode::Standard, HmiMode::Learning] {
        let cal = bronars_power(2000, 10, &builder, 101, mode, HmiOptions::default())
            .map_err(|e| e.to_string())?;
        let fresh = bronars_power(2000, 10, &builder, 202, mode, HmiOptions::default())
            .map_err(|e| e.to_string())?;
        for p in [0.10, 0.05] {
            let t = cal.threshold(p).map_err(|e| e.to_string())?;
            let count = |s: &[f64]| s.iter().filter(|&&h| h >= t).count() as u64;
            let (nc, nf) = (cal.sample.len() as u64, fresh.sample.len() as u64);
            let (kc, kf) = (count(&cal.sample), count(&fresh.sample));
            let cap = binom_quantile(nf, p, 0.995);
            ensure(kf <= cap, || {
                format!("{mode:?} p={p}: held-out {kf}/{nf} pass at t={t}, 99% cap {cap}")
            })?;
            // Calibration and held-out pass shares should not differ.
            if kc + kf > 0 {
                let same =
                    two_proportion_z_test(kc as usize, nc as usize, kf as usize, nf as usize)
                        .map_err(|e| e.to_string())?;
                ensure(same >= 0.01, || {
                    format!("{mode:?} p={p}: held-out {kf}/{nf} vs calibration {kc}/{nc}, p-value {same:.1e}")
                })?;
            }
            parts.push(format!(
                "{mode:?} p={p}: t={t} held-out {:.2}%",
                100.0 * kf as f64 / nf as f64
            ));
        }
    }
    within_budget(start, Duration::from_secs(600), "calibration and hold-out")?;
    Ok(parts.join("; "))
}

fn subject_indices(d: &Dataset, builder: &FpBuilder) -> Result<Vec<f64>, String> {
    d.bidder_panels()
        .values()
        .map(|panel| {
            let s = SubjectData::from_records(panel.iter().copied()).map_err(|e| e.to_string())?;
            hmi(&s, builder, HmiOptions::default())
                .map(|r| r.hmi)
                .map_err(|e| e.to_string())
        })
        .collect()
}

fn discrimination() -> Outcome {
    let builder = FpBuilder::equilibrium(Arc::new(u()), 2).unwrap();
    let eq = BidderStrategy::Equilibrium(fp_table());
    let mut fp_hmi = Vec::new();
    let mut rnd_hmi = Vec::new();
    for s in 0..10u64 {
        let rule = SellerStrategy::RuleFollowing;
        let a = session(
            Treatment::Fp,
            [eq.clone(), eq.clone()],
            rule,
            10,
            8,
            900 + s,
        );
        let b = session(
            Treatment::Fp,
            [BidderStrategy::RandomUniform, BidderStrategy::RandomUniform],
            rule,
            10,
            8,
            950 + s,
        );
        fp_hmi.extend(subject_indices(&a, &builder)?);
        rnd_hmi.extend(subject_indices(&b, &builder)?);
    }
    let n_fp = fp_hmi.len();
    let fp_exact = fp_hmi.iter().filter(|&&h| h == 1.0).count();
    ensure(fp_exact == n_fp, || {
        format!("FP equilibrium exact pass {fp_exact}/{n_fp}")
    })?;
    let cal = bronars_power(
        1000,
        10,
        &builder,
        303,
        HmiMode::Standard,
        HmiOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let mut parts = vec![format!("FP exact {fp_exact}/{n_fp}")];
    for p in [0.10, 0.05] {
        let t = cal.threshold(p).map_err(|e| e.to_string())?;
        let n_r = rnd_hmi.len();
        let k_r = rnd_hmi.iter().filter(|&&h| h >= t).count();
        let k_fp = fp_hmi.iter().filter(|&&h| h >= t).count();
        ensure(k_r as f64 <= p * n_r as f64, || {
            format!("p={p}: random pass {k_r}/{n_r} at t={t}")
        })?;
        let z = two_proportion_z_test(fp_exact, n_fp, k_r, n_r).map_err(|e| e.to_string())?;
        ensure(z < 0.01, || format!("p={p}: two-proportion p-value {z}"))?;
        parts.push(format!(
            "p={p}: t={t} random {k_r}/{n_r} FP {k_fp}/{n_fp}, test p={z:.1e}"
        ));
    }
    Ok(parts.join("; "))
}

fn gamma_recovery() -> Outcome {
    let start = Instant::now();
    let eq = BidderStrategy::Equilibrium(Arc::new(solve(10.0)?));
    let seller = SellerStrategy::GammaOvercharger {
        gamma: 10.0,
        sigma: 2.0,
    };
    let mut hits = 0;
    let mut estimates = Vec::new();
    for rep in 0..100u64 {
        let d = session(
            Treatment::Ncsp,
            [eq.clone(), eq.clone()],
            seller,
            240,
            1,
            10_000 + rep,
        );
        let e = estimate_gamma(&censored_sample(&d).obs)
            .map_err(|e| format!("replication {rep}: {e}"))?;
        if (9.0..=11.0).contains(&e.gamma) {
            hits += 1;
        }
        estimates.push(e.gamma);
    }
    within_budget(start, Duration::from_secs(120), "100 replications")?;
    ensure(hits >= 95, || format!("{hits}/100 estimates in [9, 11]"))?;
    estimates.sort_by(f64::total_cmp);
    Ok(format!(
        "{hits}/100 in [9, 11], range [{:.2}, {:.2}]",
        estimates[0], estimates[99]
    ))
}

fn slope_by_subject(d: &Dataset) -> Result<(f64, f64), String> {
    let recs: Vec<_> = d.bids.iter().collect();
    let x: Vec<Vec<f64>> = recs.iter().map(|r| vec![r.value]).collect();
    let y: Vec<f64> = recs.iter().map(|r| r.bid).collect();
    let c: Vec<u64> = recs
        .iter()
        .map(|r| (u64::from(r.session_id) << 32) | u64::from(r.subject_id))
        .collect();
    let r = ols_origin(vec!["value".into()], &x, &y, &c).map_err(|e| e.to_string())?;
    Ok((r.coefficients[0], r.std_errors[0]))
}

fn regression() -> Outcome {
    let mut parts = Vec::new();
    let rule = SellerStrategy::RuleFollowing;
    let csp = session(
        Treatment::Csp,
        [BidderStrategy::Truthful, BidderStrategy::Truthful],
        rule,
        10,
        8,
        41,
    );
    let eq = BidderStrategy::Equilibrium(fp_table());
    let fp = session(Treatment::Fp, [eq.clone(), eq], rule, 10, 8, 42);
    for (name, d, target) in [("CSP truthful", &csp, 1.0), ("FP half-value", &fp, 0.5)] {
        let (b, se) = slope_by_subject(d)?;
        // Exact lines: the only slack is rounding in the fit.
        ensure((b - target).abs() <= 3.0 * se + 1e-12, || {
            format!("{name}: slope {b}, SE {se}")
        })?;
        ensure(se == 0.0, || format!("{name}: exact-line SE {se}"))?;
        parts.push(format!("{name} {b:.6} (SE {se})"));
    }
    // Noisy bids around the half-value line, with subject-level shocks.
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let (mut x, mut y, mut c) = (Vec::new(), Vec::new(), Vec::new());
    for subject in 0..48u64 {
        let shock: f64 = rng.gen_range(-2.0..2.0);
        for _ in 0..10 {
            let v = f64::from(rng.gen_range(1u32..=100));
            x.push(vec![v]);
            y.push((0.5 * v + shock + rng.gen_range(-5.0..5.0)).clamp(0.0, v));
            c.push(subject);
        }
    }
    let r = ols_origin(vec!["value".into()], &x, &y, &c).map_err(|e| e.to_string())?;
    let (b, se) = (r.coefficients[0], r.std_errors[0]);
    ensure(se > 0.0 && (b - 0.5).abs() <= 3.0 * se, || {
        format!("noisy half-value: slope {b}, SE {se}")
    })?;
    parts.push(format!("noisy half-value {b:.4} (SE {se:.4})"));
    Ok(parts.join("; "))
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn cli_pipeline(root: &Path, threads: &str) -> Result<(), String> {
    let d = |name: &str| root.join(name).to_str().unwrap().to_string();
    fs::create_dir_all(root).map_err(|e| e.to_string())?;
    let ncsp_cfg = d("ncsp.txt");
    let fp_cfg = d("fp.txt");
    fs::write(
        &ncsp_cfg,
        "treatment = ncsp\nrounds = 10\ngroups = 8\nsessions = 3\nseed = 77\nbidders = equilibrium\nseller = overcharger\ngamma = 10\nsigma = 2\n",
    )
    .map_err(|e| e.to_string())?;
    fs::write(&fp_cfg, "treatment = fp\nrounds = 10\ngroups = 8\nsessions = 2\nseed = 78\nbidder1 = equilibrium\nbidder2 = random\n")
        .map_err(|e| e.to_string())?;
    let steps: Vec<Vec<String>> = vec![
        vec![
            "equilibrium",
            "--treatment",
            "ncsp",
            "--gamma",
            "10",
            "--out",
            &d("eq_ncsp"),
        ],
        vec!["equilibrium", "--treatment", "fp", "--out", &d("eq_fp")],
        vec!["simulate", "--config", &ncsp_cfg, "--out", &d("ncsp")],
        vec!["simulate", "--config", &fp_cfg, "--out", &d("fp")],
        vec![
            "estimate",
            "--data",
            &d("ncsp"),
            "--what",
            "gamma",
            "--out",
            &d("ncsp"),
        ],
        vec![
            "estimate",
            "--data",
            &d("ncsp"),
            "--what",
            "sellers",
            "--out",
            &d("ncsp"),
        ],
        vec![
            "estimate",
            "--data",
            &d("fp"),
            "--what",
            "bidfn",
            "--out",
            &d("fp"),
        ],
        vec![
            "test-rp",
            "--data",
            &d("ncsp"),
            "--gamma",
            &d("ncsp"),
            "--learning",
            "--power-subjects",
            "200",
            "--out",
            &d("rp_ncsp"),
        ],
        vec![
            "test-rp",
            "--data",
            &d("fp"),
            "--learning",
            "--power-subjects",
            "200",
            "--out",
            &d("rp_fp"),
        ],
        vec![
            "test-rp",
            "--data",
            &d("fp"),
            "--belief",
            "population",
            "--power-subjects",
            "200",
            "--out",
            &d("rp_kde"),
        ],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for args in steps {
        let o = Command::new(env!("CARGO_BIN_EXE_auctionlab"))
            .args(&args)
            .env("AUCTIONLAB_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.success(), || {
            format!(
                "`{}` failed: {}",
                args.join(" "),
                String::from_utf8_lossy(&o.stderr)
            )
        })?;
    }
    Ok(())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    // The config files hold the same text in both trees, so the whole trees
    // must match. The two runs use different thread counts.
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    cli_pipeline(&a, "1")?;
    cli_pipeline(&b, "3")?;
    let (fa, fb) = (files(&a), files(&b));
    ensure(fa.keys().eq(fb.keys()), || {
        "runs wrote different file sets".into()
    })?;
    for (name, bytes) in &fa {
        ensure(fb[name] == *bytes, || {
            format!("{} differs between runs", name.display())
        })?;
    }
    let total: usize = fa.values().map(Vec::len).sum();
    Ok(format!(
        "{} files, {total} bytes identical across runs",
        fa.len()
    ))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("FP closed form", fp_closed_form),
        ("NCSP nesting and FOC", nesting),
        ("limits in gamma", limits),
        ("revenue equivalence", revenue),
        ("efficiency", efficiency_benchmark),
        ("seller rule", seller_rule),
        ("RP oracle equivalence", oracle_equivalence),
        ("Bronars calibration hold-out", bronars_holdout),
        ("pipeline discrimination", discrimination),
        ("gamma recovery", gamma_recovery),
        ("regression sanity", regression),
        ("determinism", determinism),
    ];
    // Only this binary's own criteria; libtest-style filters select by name.
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|w| name.contains(w.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} [{t:.1?}]: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} [{t:.1?}]: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
