//! Helpers shared by the integration tests: an LP-free feasibility oracle for
//! the first-price system and synthetic subject generators.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Path weight with the number of strict edges on it. A cycle is infeasible
/// when its weight is negative, or zero with at least one strict edge.
#[derive(Clone, Copy, Debug)]
struct W {
    w: f64,
    strict: u32,
}

const TOL: f64 = 1e-9;

fn shorter(a: W, b: W) -> bool {
    a.w < b.w - TOL || ((a.w - b.w).abs() <= TOL && a.strict > b.strict)
}

/// Decides the first-price system for uniform values on `[0, 100]` and two
/// bidders by negative-cycle detection. Variables are the log utilities
/// `x_j`; rows are `x_k - x_j <= (s_k - s_j) / θ_j` and `x` ordered like the
/// surplus `s = θ - b`, strictly where surpluses differ. Every row is a
/// difference constraint and the sign restriction `x <= 0` is absorbed by a
/// common shift, so the system is feasible iff the constraint graph has no
/// cycle of negative (or zero-and-strict) weight.
///
/// `pairs` must have `0 <= b < θ`.
pub fn fp_system_feasible(pairs: &[(f64, f64)]) -> bool {
    let n = pairs.len();
    let inf = W {
        w: f64::INFINITY,
        strict: 0,
    };
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = W { w: 0.0, strict: 0 };
    }
    let mut edge = |from: usize, to: usize, e: W| {
        if shorter(e, d[from][to]) {
            d[from][to] = e;
        }
    };
    let s: Vec<f64> = pairs.iter().map(|&(t, b)| t - b).collect();
    for j in 0..n {
        let rho = 1.0 / pairs[j].0;
        for k in 0..n {
            if j != k {
                // x_k <= x_j + w: edge j -> k
                edge(
                    j,
                    k,
                    W {
                        w: rho * (s[k] - s[j]),
                        strict: 0,
                    },
                );
            }
        }
    }
    for j in 0..n {
        for k in j + 1..n {
            if s[j] == s[k] {
                edge(j, k, W { w: 0.0, strict: 0 });
                edge(k, j, W { w: 0.0, strict: 0 });
            } else {
                let (lo, hi) = if s[k] < s[j] { (k, j) } else { (j, k) };
                // x_lo < x_hi
                edge(hi, lo, W { w: 0.0, strict: 1 });
            }
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (d[i][m], d[m][j]);
                if a.w.is_finite() && b.w.is_finite() {
                    let via = W {
                        w: a.w + b.w,
                        strict: a.strict + b.strict,
                    };
                    if shorter(via, d[i][j]) {
                        d[i][j] = via;
                    }
                }
            }
        }
    }
    (0..n).all(|i| d[i][i].w >= -TOL && !(d[i][i].w <= TOL && d[i][i].strict > 0))
}

/// Houtman–Maks index by trying every subset of the testable rounds, without
/// pruning. Rounds with `θ = b = 0` are not testable; rounds with `b >= θ`
/// are testable but never consistent. Returns `(kept, testable)`.
pub fn fp_hmi_oracle(pairs: &[(f64, f64)]) -> (usize, usize) {
    let testable: Vec<(f64, f64)> = pairs
        .iter()
        .copied()
        .filter(|&(t, b)| !(t == 0.0 && b <= t))
        .collect();
    let m = testable.len();
    let mut best = 0;
    for mask in 0u32..(1 << m) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let subset: Vec<(f64, f64)> = (0..m)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| testable[i])
            .collect();
        if subset.iter().all(|&(t, b)| b < t) && fp_system_feasible(&subset) {
            best = size;
        }
    }
    (best, m)
}

/// Synthetic subject with a mix of behaviours chosen by `index`: random bids
/// below value, noisy half-value bids, and coarse bids that produce surplus
/// ties, zero-surplus rounds and zero values.
pub fn mixed_subject(seed: u64, index: u64, rounds: usize) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    (0..rounds)
        .map(|_| {
            let theta = f64::from(rng.gen_range(0u32..=100));
            let bid = match index % 3 {
                0 => theta * rng.gen::<f64>(),
                1 => (0.5 * theta + rng.gen_range(-4.0..4.0)).clamp(0.0, theta),
                _ => (theta - f64::from(rng.gen_range(0u32..=3)) * 10.0).max(0.0),
            };
            (theta, bid)
        })
        .collect()
}
