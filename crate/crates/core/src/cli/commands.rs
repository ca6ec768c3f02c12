//! The four pipelines behind the subcommands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use super::config::parse_config;
use super::manifest::{sha256_hex, RunManifest};
use super::{
    BeliefArg, EquilibriumArgs, EstimateArgs, EstimateWhat, GammaArg, SimulateArgs, TestRpArgs,
    TreatmentFilter,
};
use crate::data::{regular_filter, validate_dataset, Dataset, Role, SessionMeta, Treatment};
use crate::dist::{Uniform, ValueDistribution};
use crate::equilibrium::{
    check_nesting, csp_bid_function, expected_revenue, foc_residual, fp_bid_function,
    solve_ncsp_equilibrium, NcspSolverOptions, PriceRule, SellerParams,
};
use crate::error::{Error, Result};
use crate::estimate::{
    bid_value_coefficient, bidding_regression, censored_sample, classify_sellers, estimate_gamma,
    SellerType,
};
use crate::io::{bidfn_csv, bids_csv, load_dataset, read_to_string, rounds_csv, write_atomic};
use crate::rationality::builders::{ConstraintBuilder, FpBuilder, NcspBuilder};
use crate::rationality::report::level_label;
use crate::rationality::{
    bronars_power, hmi, hmi_learning, pass_rate_report, EquilibriumBelief, HmiMode, HmiOptions,
    PopulationBelief, PowerCalibration, SubjectData, SubjectOutcome, WinBelief,
};
use crate::simulate::{efficiency, overcharge_stats, revenue_stats, run_session};

fn say(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

fn emit(dir: &Path, manifest: &mut RunManifest, name: &str, contents: &str) -> Result<()> {
    write_atomic(&dir.join(name), contents.as_bytes())?;
    manifest.add_output(name);
    Ok(())
}

fn treatment_arg(t: Treatment) -> String {
    t.as_str().to_ascii_lowercase()
}

pub fn equilibrium(a: &EquilibriumArgs, out: &mut dyn Write) -> Result<()> {
    let dist = Uniform::standard();
    let mut command = format!(
        "equilibrium --treatment {} --grid {} --tol {}",
        treatment_arg(a.treatment),
        a.grid,
        a.tol
    );
    let (bidfn, rule) = match a.treatment {
        Treatment::Fp => (fp_bid_function(&dist, 2, a.grid)?, PriceRule::FirstPrice),
        Treatment::Csp => (csp_bid_function(&dist, a.grid)?, PriceRule::SecondPrice),
        Treatment::Ncsp => {
            let gamma = a
                .gamma
                .ok_or_else(|| Error::Domain("--gamma is required for --treatment ncsp".into()))?;
            let _ = write!(command, " --gamma {gamma}");
            let seller = SellerParams::new(gamma)?;
            let opts = NcspSolverOptions {
                grid_size: a.grid,
                tol: a.tol,
                ..NcspSolverOptions::default()
            };
            (
                solve_ncsp_equilibrium(&dist, 2, seller, opts)?,
                PriceRule::Overcharge(seller),
            )
        }
    };
    prepare_out(&a.out)?;
    let mut manifest = RunManifest::new(command.clone());
    manifest.config_hash = Some(sha256_hex(command.as_bytes()));
    emit(&a.out, &mut manifest, "bidfn.csv", &bidfn_csv(&bidfn))?;
    manifest.write_dir(&a.out)?;

    let mut s = String::new();
    let _ = writeln!(s, "treatment: {}", a.treatment);
    if let PriceRule::Overcharge(seller) = rule {
        let _ = writeln!(s, "gamma: {}", seller.gamma());
        let _ = writeln!(
            s,
            "FOC residual: {:.3e}",
            foc_residual(&bidfn, &dist, 2, seller)
        );
        if let Some(n) = bidfn.meta.sweeps {
            let _ = writeln!(s, "sweeps: {n}");
        }
    }
    let _ = writeln!(s, "grid points: {}", bidfn.grid().len());
    if a.treatment == Treatment::Csp {
        let _ = writeln!(s, "nesting: not applicable (bids equal values)");
    } else {
        let report = check_nesting(&bidfn, &dist, 2)?;
        if report.holds() {
            let _ = writeln!(
                s,
                "nesting b_FP(theta) <= b(theta) < theta: verified at {} interior grid points",
                report.checked
            );
        } else {
            let _ = writeln!(
                s,
                "nesting b_FP(theta) <= b(theta) < theta: VIOLATED ({} below the first-price bid, {} not below value)",
                report.below_fp.len(),
                report.not_below_value.len()
            );
        }
    }
    let _ = writeln!(
        s,
        "expected revenue: {:.3}",
        expected_revenue(&bidfn, &dist, 2, rule)?
    );
    say(out, &s)
}

pub fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let text = read_to_string(&a.config)?;
    let mut spec = parse_config(&text).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", a.config.display()),
        },
        other => other,
    })?;
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    if let Some(r) = a.rounds {
        spec.rounds = r;
    }
    let cfgs = spec.sim_configs()?;
    let mut rounds = Vec::new();
    let mut sessions = Vec::new();
    for cfg in &cfgs {
        let d = run_session(cfg)?;
        rounds.extend(d.rounds);
        sessions.push(SessionMeta {
            session_id: cfg.session_id,
            seed: Some(cfg.seed),
        });
    }
    let d = Dataset::from_rounds(sessions, rounds);

    prepare_out(&a.out)?;
    let resolved = spec.to_text();
    let mut manifest = RunManifest::new("simulate --config config.txt".into());
    manifest.config_hash = Some(sha256_hex(resolved.as_bytes()));
    manifest.seed = Some(spec.seed);
    emit(&a.out, &mut manifest, "config.txt", &resolved)?;
    emit(&a.out, &mut manifest, "rounds.csv", &rounds_csv(&d.rounds))?;
    emit(&a.out, &mut manifest, "bids.csv", &bids_csv(&d.bids))?;
    manifest.write_dir(&a.out)?;

    let rev = revenue_stats(&d)?;
    let mut s = String::new();
    let _ = writeln!(s, "treatment: {}", spec.treatment);
    let _ = writeln!(
        s,
        "auctions: {} ({} sessions x {} rounds x {} groups)",
        d.rounds.len(),
        spec.sessions,
        spec.rounds,
        spec.groups
    );
    let _ = writeln!(s, "efficiency: {:.3}", efficiency(&d)?);
    let _ = writeln!(s, "revenue: {:.3} (se {:.3})", rev.mean, rev.std_error);
    if spec.treatment == Treatment::Ncsp {
        let oc = overcharge_stats(&d);
        match oc.mean_ratio {
            Some(m) => {
                let _ = writeln!(
                    s,
                    "overcharging: mean ratio {m:.3}, {} of {} rounds with unequal bids overcharged",
                    oc.overcharging_rounds, oc.defined_rounds
                );
            }
            None => {
                let _ = writeln!(s, "overcharging: undefined (all bids tied)");
            }
        }
    }
    say(out, &s)
}

fn load_valid(path: &Path) -> Result<(Dataset, String)> {
    let (d, _) = load_dataset(path)?;
    let violations = validate_dataset(&d);
    if let Some(first) = violations.first() {
        return Err(Error::Domain(format!(
            "{} schema violation(s), first: {first}",
            violations.len()
        )));
    }
    let digest = if path.is_dir() {
        let mut h = String::new();
        for name in ["rounds.csv", "bids.csv"] {
            let p = path.join(name);
            if p.exists() {
                h.push_str(&read_to_string(&p)?);
            }
        }
        sha256_hex(h.as_bytes())
    } else {
        sha256_hex(read_to_string(path)?.as_bytes())
    };
    Ok((d, digest))
}

fn resolve_gamma(arg: &GammaArg, d: &Dataset, notes: &mut String) -> Result<f64> {
    let g = match arg {
        GammaArg::Value(g) => {
            let _ = writeln!(notes, "gamma: {g} (given)");
            *g
        }
        GammaArg::Manifest(p) => {
            let m = RunManifest::load(p)?;
            let g = m
                .gamma_hat
                .ok_or_else(|| Error::Domain(format!("{} carries no gamma_hat", p.display())))?;
            let _ = writeln!(notes, "gamma: {g} (from run manifest)");
            g
        }
        GammaArg::Auto => {
            let sample = censored_sample(d);
            if d.rounds.iter().all(|r| r.treatment != Treatment::Ncsp) {
                return Err(Error::Domain(
                    "--gamma auto needs round-level NCSP data; pass a value or a manifest".into(),
                ));
            }
            let est = estimate_gamma(&sample.obs)?;
            let _ = writeln!(
                notes,
                "gamma: {:.4} (estimated from {} NCSP rounds, sigma {:.4})",
                est.gamma, est.n_obs, est.sigma
            );
            est.gamma
        }
    };
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::Identification(format!(
            "seller tolerance must be positive for the NCSP test, got {g}"
        )));
    }
    Ok(g)
}

fn modal(xs: impl Iterator<Item = usize>) -> usize {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for x in xs {
        *counts.entry(x).or_insert(0) += 1;
    }
    // Ties go to the larger size.
    counts
        .into_iter()
        .max_by_key(|&(size, c)| (c, size))
        .map_or(0, |(size, _)| size)
}

struct Tested {
    treatment: Treatment,
    builder: Box<dyn ConstraintBuilder>,
    subjects: Vec<((u32, u32), SubjectData)>,
}

pub fn test_rp(a: &TestRpArgs, out: &mut dyn Write) -> Result<()> {
    let (raw, digest) = load_valid(&a.data)?;
    let filtered = regular_filter(&raw);
    let d = &filtered.dataset;

    let mut panels: BTreeMap<Treatment, Vec<((u32, u32), SubjectData)>> = BTreeMap::new();
    let mut skipped_csp = 0usize;
    let mut untestable = 0usize;
    for (key, recs) in d.bidder_panels() {
        let t = recs[0].treatment;
        if recs.iter().any(|r| r.treatment != t) {
            return Err(Error::Domain(format!(
                "session {} subject {} appears in more than one treatment",
                key.0, key.1
            )));
        }
        let wanted = match a.treatment {
            TreatmentFilter::All => t != Treatment::Csp,
            TreatmentFilter::Fp => t == Treatment::Fp,
            TreatmentFilter::Ncsp => t == Treatment::Ncsp,
        };
        if t == Treatment::Csp {
            skipped_csp += 1;
        }
        if wanted {
            let s = SubjectData::from_records(recs)?;
            if s.testable_indices().is_empty() {
                untestable += 1;
            } else {
                panels.entry(t).or_default().push((key, s));
            }
        }
    }
    if panels.is_empty() {
        return Err(Error::UndefinedStatistic(
            "no FP or NCSP bidders to test".into(),
        ));
    }

    let mut notes = String::new();
    let mut gamma_used = None;
    let dist: Arc<dyn ValueDistribution> = Arc::new(Uniform::standard());
    let mut tested = Vec::new();
    for (t, subjects) in panels {
        let belief: Arc<dyn WinBelief> = match a.belief {
            BeliefArg::Equilibrium => {
                Arc::new(EquilibriumBelief::new(dist.clone(), 2)?.with_jacobian(a.jacobian))
            }
            BeliefArg::Population => {
                let pooled: Vec<f64> = d
                    .bids
                    .iter()
                    .filter(|r| r.role == Role::Bidder && r.treatment == t)
                    .map(|r| r.bid)
                    .collect();
                let b = PopulationBelief::silverman(pooled, 2)?;
                let _ = writeln!(notes, "{t} kernel bandwidth: {:.4}", b.bandwidth());
                Arc::new(b)
            }
        };
        let builder: Box<dyn ConstraintBuilder> = match t {
            Treatment::Fp => Box::new(FpBuilder::new(belief)),
            Treatment::Ncsp => {
                let g = resolve_gamma(&a.gamma, &raw, &mut notes)?;
                gamma_used = Some(g);
                Box::new(NcspBuilder::new(belief, g)?.printed_signs(a.printed_signs))
            }
            Treatment::Csp => unreachable!("CSP panels are never tested"),
        };
        tested.push(Tested {
            treatment: t,
            builder,
            subjects,
        });
    }

    let opts = HmiOptions::default();
    let mut outcomes = Vec::new();
    for group in &tested {
        let scored = group
            .subjects
            .par_iter()
            .map(|(key, s)| {
                let h = hmi(s, &*group.builder, opts)?;
                let hl = if a.learning {
                    Some(hmi_learning(s, &*group.builder, opts)?.hmi)
                } else {
                    None
                };
                Ok(SubjectOutcome {
                    session_id: key.0,
                    subject_id: key.1,
                    treatment: group.treatment,
                    hmi: h.hmi,
                    hmi_learning: hl,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        outcomes.extend(scored);
    }

    let levels = if a.power_subjects == 0 {
        vec![]
    } else {
        a.power.0.clone()
    };
    let mut calibrations: Vec<(Treatment, PowerCalibration)> = Vec::new();
    if !levels.is_empty() {
        for (i, group) in tested.iter().enumerate() {
            let rounds = modal(group.subjects.iter().map(|(_, s)| s.len()));
            let seed = a.seed.wrapping_add(i as u64);
            let mut modes = vec![HmiMode::Standard];
            if a.learning {
                modes.push(HmiMode::Learning);
            }
            for mode in modes {
                let cal =
                    bronars_power(a.power_subjects, rounds, &*group.builder, seed, mode, opts)?;
                let _ = write!(
                    notes,
                    "{} random bidders ({}, {} x {} rounds):",
                    group.treatment,
                    if mode == HmiMode::Standard {
                        "HMI"
                    } else {
                        "learning HMI"
                    },
                    a.power_subjects,
                    rounds
                );
                for &p in &levels {
                    let _ = write!(notes, " threshold p={p}: {}", cal.threshold(p)?);
                }
                notes.push('\n');
                calibrations.push((group.treatment, cal));
            }
        }
    }

    let mut tables = vec![pass_rate_report(
        &outcomes,
        HmiMode::Standard,
        &calibrations,
        &levels,
    )?];
    if a.learning {
        tables.push(pass_rate_report(
            &outcomes,
            HmiMode::Learning,
            &calibrations,
            &levels,
        )?);
    }

    // Per-subject file.
    let mut csv = String::from("session_id,subject_id,treatment,hmi,hmi_learning,pass_exact");
    for &p in &levels {
        let _ = write!(csv, ",pass_{}", level_label(p));
    }
    csv.push('\n');
    let standard = &tables[0];
    for o in &outcomes {
        let _ = write!(
            csv,
            "{},{},{},{},{},{}",
            o.session_id,
            o.subject_id,
            o.treatment,
            o.hmi,
            o.hmi_learning.map_or(String::new(), |h| h.to_string()),
            u8::from(o.passes_exact())
        );
        let row = standard
            .rows
            .iter()
            .find(|r| r.treatment == o.treatment)
            .expect("row per treatment");
        for th in &row.thresholds {
            let _ = write!(csv, ",{}", u8::from(o.hmi >= *th));
        }
        csv.push('\n');
    }

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "belief: {}",
        match a.belief {
            BeliefArg::Equilibrium => "equilibrium (rivals bid by the risk-neutral equilibrium)",
            BeliefArg::Population => "population (kernel estimate of pooled bids)",
        }
    );
    let _ = writeln!(
        summary,
        "subjects: {} tested, {} CSP skipped, {} with only zero values skipped, {} dominated observations dropped",
        outcomes.len(),
        skipped_csp,
        untestable,
        filtered.dropped_count()
    );
    summary.push_str(&notes);
    for t in &tables {
        summary.push('\n');
        summary.push_str(&t.render());
    }

    prepare_out(&a.out)?;
    let mut command = format!(
        "test-rp --treatment {:?} --belief {:?} --power {} --power-subjects {} --seed {}",
        a.treatment,
        a.belief,
        if levels.is_empty() {
            "none".to_string()
        } else {
            levels
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(",")
        },
        a.power_subjects,
        a.seed
    )
    .to_ascii_lowercase();
    if let Some(g) = gamma_used {
        let _ = write!(command, " --gamma {g}");
    }
    for (on, flag) in [
        (a.learning, " --learning"),
        (a.jacobian, " --jacobian"),
        (a.printed_signs, " --printed-signs"),
    ] {
        if on {
            command.push_str(flag);
        }
    }
    let mut manifest = RunManifest::new(command);
    manifest.config_hash = Some(digest);
    manifest.seed = Some(a.seed);
    manifest.gamma_hat = gamma_used;
    emit(&a.out, &mut manifest, "hmi.csv", &csv)?;
    emit(&a.out, &mut manifest, "summary.txt", &summary)?;
    manifest.write_dir(&a.out)?;
    say(out, &summary)
}

pub fn estimate(a: &EstimateArgs, out: &mut dyn Write) -> Result<()> {
    let (d, digest) = load_valid(&a.data)?;
    let mut s = String::new();
    let (name, contents, gamma_hat) = match a.what {
        EstimateWhat::Gamma => {
            if d.rounds.is_empty() {
                return Err(Error::Domain("gamma estimation needs a rounds file".into()));
            }
            let sample = censored_sample(&d);
            let est = estimate_gamma(&sample.obs)?;
            let _ = writeln!(s, "gamma_hat: {:.2}", est.gamma);
            let _ = writeln!(s, "sigma_hat: {:.2}", est.sigma);
            let _ = writeln!(
                s,
                "rounds: {} ({} at zero, {} at the bid spread, {} with tied bids left out, {} clamped)",
                est.n_obs, est.n_lower, est.n_upper, sample.zero_gap, sample.clamped
            );
            let csv = format!(
                "gamma,sigma,log_likelihood,n_obs,n_lower,n_upper,n_tied,n_clamped\n{},{},{},{},{},{},{},{}\n",
                est.gamma,
                est.sigma,
                est.log_likelihood,
                est.n_obs,
                est.n_lower,
                est.n_upper,
                sample.zero_gap,
                sample.clamped
            );
            ("gamma.csv", csv, Some(est.gamma))
        }
        EstimateWhat::Bidfn => {
            let r = bidding_regression(&d)?;
            let mut csv = String::from("term,coefficient,std_error,n_obs,n_clusters\n");
            let _ = writeln!(
                s,
                "bid on value by treatment, no intercept, errors clustered by subject"
            );
            for i in 0..r.names.len() {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    r.names[i], r.coefficients[i], r.std_errors[i], r.n_obs, r.n_clusters
                );
                let _ = writeln!(
                    s,
                    "{:<12} {:>8.4} ({:.4})",
                    r.names[i], r.coefficients[i], r.std_errors[i]
                );
            }
            let _ = writeln!(s, "observations: {}, clusters: {}", r.n_obs, r.n_clusters);
            for t in Treatment::ALL {
                let recs = d
                    .bids
                    .iter()
                    .filter(|b| b.role == Role::Bidder && b.treatment == t);
                if let Ok((c, _)) = bid_value_coefficient(recs) {
                    let _ = writeln!(s, "mean bid/value {t}: {c:.4}");
                }
            }
            ("regression.csv", csv, None)
        }
        EstimateWhat::Sellers => {
            let table = classify_sellers(&d);
            if table.rows.is_empty() {
                return Err(Error::UndefinedStatistic(
                    "no NCSP seller with an unequal bid pair".into(),
                ));
            }
            let mut csv = String::from(
                "session_id,seller_id,type,coefficient,defined_rounds,overcharging_rounds\n",
            );
            for r in &table.rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    r.session_id,
                    r.seller_id,
                    r.kind,
                    r.coefficient,
                    r.defined_rounds,
                    r.overcharging_rounds
                );
            }
            let _ = writeln!(s, "{:<10} {:>5} {:>12}", "type", "N", "mean s_i");
            for k in [SellerType::Never, SellerType::Sometimes, SellerType::Always] {
                let mean = table
                    .mean_coefficient(k)
                    .map_or("-".to_string(), |m| format!("{m:.3}"));
                let _ = writeln!(s, "{:<10} {:>5} {:>12}", k.as_str(), table.count(k), mean);
            }
            if !table.excluded.is_empty() {
                let _ = writeln!(
                    s,
                    "sellers left out (tied bids only): {}",
                    table.excluded.len()
                );
            }
            ("sellers.csv", csv, None)
        }
    };

    prepare_out(&a.out)?;
    let what = match a.what {
        EstimateWhat::Gamma => "gamma",
        EstimateWhat::Bidfn => "bidfn",
        EstimateWhat::Sellers => "sellers",
    };
    let command = format!("estimate --what {what}");
    let mut manifest = match RunManifest::load_dir(&a.out)? {
        Some(mut m) => {
            m.add_command(command);
            m
        }
        None => {
            let mut m = RunManifest::new(command);
            m.config_hash = Some(digest);
            m
        }
    };
    if gamma_hat.is_some() {
        manifest.gamma_hat = gamma_hat;
    }
    emit(&a.out, &mut manifest, name, &contents)?;
    manifest.write_dir(&a.out)?;
    say(out, &s)
}
