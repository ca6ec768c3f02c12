//! Two-sided tobit for the seller's overcharge.
//!
//! The latent overcharge is `o* = γ + ε`, `ε ~ N(0, σ²)`, observed clamped to
//! `[0, u]` where `u` is the spread between the two bids. The likelihood is
//! maximised by Newton's method in Olsen's parametrisation `(γ/σ, 1/σ)`, in
//! which it is globally concave.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::erf::erfc;

use crate::data::{Dataset, Treatment};
use crate::error::{Error, Result};

const GRAD_TOL: f64 = 1e-8;
const MAX_NEWTON: usize = 200;

/// One NCSP round seen by the estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensoredObs {
    /// `price - b_min`, clamped into `[0, u]`.
    pub overcharge: f64,
    /// `b_max - b_min`.
    pub upper: f64,
    pub session_id: u32,
    pub seller_id: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CensoredSample {
    pub obs: Vec<CensoredObs>,
    /// Rounds with equal bids, which carry no information on `γ`.
    pub zero_gap: usize,
    /// Rounds whose raw overcharge fell outside `[0, u]` and was clamped.
    pub clamped: usize,
}

/// Collects the NCSP rounds of `d`.
pub fn censored_sample(d: &Dataset) -> CensoredSample {
    let mut out = CensoredSample::default();
    for r in d.rounds.iter().filter(|r| r.treatment == Treatment::Ncsp) {
        let u = r.max_bid() - r.min_bid();
        if u <= 0.0 {
            out.zero_gap += 1;
            continue;
        }
        let raw = r.price - r.min_bid();
        if !(0.0..=u).contains(&raw) {
            out.clamped += 1;
        }
        out.obs.push(CensoredObs {
            overcharge: raw.clamp(0.0, u),
            upper: u,
            session_id: r.session_id,
            seller_id: r.seller_id,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaEstimate {
    pub gamma: f64,
    /// Zero when every uncensored overcharge is identical.
    pub sigma: f64,
    /// `+inf` in the noiseless case.
    pub log_likelihood: f64,
    pub n_obs: usize,
    pub n_lower: usize,
    pub n_upper: usize,
    pub iterations: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Lower,
    Upper(f64),
    Interior(f64),
}

fn classify(o: &CensoredObs) -> Result<Kind> {
    if !(o.upper > 0.0 && o.upper.is_finite() && o.overcharge.is_finite()) {
        return Err(Error::Domain(format!(
            "bad censored observation (o = {}, u = {})",
            o.overcharge, o.upper
        )));
    }
    let tol = 1e-9 * o.upper.max(1.0);
    Ok(if o.overcharge <= tol {
        Kind::Lower
    } else if o.overcharge >= o.upper - tol {
        Kind::Upper(o.upper)
    } else {
        Kind::Interior(o.overcharge)
    })
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `(ln Φ(a), φ(a)/Φ(a))`, stable far in the lower tail.
fn log_cdf_and_mills(a: f64) -> (f64, f64) {
    let log_pdf = -0.5 * a * a - 0.5 * (2.0 * PI).ln();
    if a > -30.0 {
        let c = norm_cdf(a);
        (c.ln(), (log_pdf - c.ln()).exp())
    } else {
        // Φ(a)/φ(a) = 1/x - 1/x³ + 3/x⁵ - 15/x⁷ with x = -a.
        let x = -a;
        let x2 = x * x;
        let r = (1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2)) / x;
        (log_pdf + r.ln(), 1.0 / r)
    }
}

/// Log-likelihood, gradient and Hessian in `(δ, h) = (γ/σ, 1/σ)`.
fn evaluate(kinds: &[Kind], delta: f64, h: f64) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let mut ll = 0.0;
    let mut g = [0.0; 2];
    let mut hess = [[0.0; 2]; 2];
    let half_log_2pi = 0.5 * (2.0 * PI).ln();
    for k in kinds {
        match *k {
            Kind::Interior(y) => {
                let r = h * y - delta;
                ll += h.ln() - 0.5 * r * r - half_log_2pi;
                g[0] += r;
                g[1] += 1.0 / h - r * y;
                hess[0][0] -= 1.0;
                hess[0][1] += y;
                hess[1][1] -= 1.0 / (h * h) + y * y;
            }
            Kind::Lower => {
                // ln Φ(-δ)
                let (lc, lam) = log_cdf_and_mills(-delta);
                let d = -lam * (-delta + lam);
                ll += lc;
                g[0] -= lam;
                hess[0][0] += d;
            }
            Kind::Upper(u) => {
                // ln Φ(δ - h u)
                let a = delta - h * u;
                let (lc, lam) = log_cdf_and_mills(a);
                let d = -lam * (a + lam);
                ll += lc;
                g[0] += lam;
                g[1] -= u * lam;
                hess[0][0] += d;
                hess[0][1] -= u * d;
                hess[1][1] += u * u * d;
            }
        }
    }
    hess[1][0] = hess[0][1];
    (ll, g, hess)
}

/// Maximum-likelihood `γ̂`, `σ̂`.
pub fn estimate_gamma(sample: &[CensoredObs]) -> Result<GammaEstimate> {
    let kinds = sample.iter().map(classify).collect::<Result<Vec<_>>>()?;
    let interior: Vec<f64> = kinds
        .iter()
        .filter_map(|k| match k {
            Kind::Interior(y) => Some(*y),
            _ => None,
        })
        .collect();
    let n_lower = kinds.iter().filter(|k| matches!(k, Kind::Lower)).count();
    let n_upper = kinds.iter().filter(|k| matches!(k, Kind::Upper(_))).count();
    if interior.len() < 2 {
        return Err(Error::Identification(format!(
            "{} uncensored overcharges; at least 2 are needed",
            interior.len()
        )));
    }
    let m = interior.len() as f64;
    let mean = interior.iter().sum::<f64>() / m;
    let var = interior.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / m;

    let base = GammaEstimate {
        gamma: mean,
        sigma: 0.0,
        log_likelihood: f64::INFINITY,
        n_obs: sample.len(),
        n_lower,
        n_upper,
        iterations: 0,
    };
    if var <= (1e-12 * mean.abs().max(1.0)).powi(2) {
        // Noiseless limit: valid only if the censored rounds agree with a
        // point mass at the common value.
        let agrees = kinds.iter().all(|k| match *k {
            Kind::Lower => mean <= 0.0,
            Kind::Upper(u) => mean >= u,
            Kind::Interior(_) => true,
        });
        if agrees {
            return Ok(base);
        }
    }

    let sd = var.sqrt().max(1e-6 * mean.abs().max(1.0));
    let (mut delta, mut h) = (mean / sd, 1.0 / sd);
    let (mut ll, mut g, mut hess) = evaluate(&kinds, delta, h);
    for it in 1..=MAX_NEWTON {
        // Solve H s = -g.
        let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
        let (mut s0, mut s1) = if det.abs() > 0.0 && det.is_finite() {
            (
                -(hess[1][1] * g[0] - hess[0][1] * g[1]) / det,
                -(-hess[1][0] * g[0] + hess[0][0] * g[1]) / det,
            )
        } else {
            (g[0], g[1])
        };
        let mut accepted = false;
        for _ in 0..60 {
            let (nd, nh) = (delta + s0, h + s1);
            if nh > 0.0 {
                let (nll, ng, nhess) = evaluate(&kinds, nd, nh);
                if nll.is_finite() && nll >= ll - 1e-12 * ll.abs() {
                    delta = nd;
                    h = nh;
                    ll = nll;
                    g = ng;
                    hess = nhess;
                    accepted = true;
                    break;
                }
            }
            s0 *= 0.5;
            s1 *= 0.5;
        }
        // Gradient with respect to (γ, σ) via the chain rule.
        let sigma = 1.0 / h;
        let gamma = delta * sigma;
        let dg = g[0] / sigma;
        let ds = -g[0] * gamma / (sigma * sigma) - g[1] / (sigma * sigma);
        if dg.abs().max(ds.abs()) < GRAD_TOL {
            return Ok(GammaEstimate {
                gamma,
                sigma,
                log_likelihood: ll,
                iterations: it,
                ..base
            });
        }
        if !accepted {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: dg.abs().max(ds.abs()),
            });
        }
    }
    let sigma = 1.0 / h;
    Err(Error::NonConvergence {
        iterations: MAX_NEWTON,
        residual: (g[0] / sigma).abs(),
    })
}
