//! Symmetric equilibrium bidding in the three formats and the best response
//! of a seller who dislikes breaking the rules.
//!
//! FP and CSP have closed forms. The NCSP bid function solves
//!
//! ```text
//! (n-1) f(θ) F^{n-2}(θ) (θ - b(θ)) = b'(θ) [F^{n-1}(θ) - F^{n-1}(a(θ))]
//! a(θ) = max{lower, b⁻¹(b(θ) - γ)}
//! ```
//!
//! which is tabulated on a uniform grid by fixed-point iteration on `a`.

use crate::data::Treatment;
use crate::dist::ValueDistribution;
use crate::error::{Error, Result};

/// Monotonicity slack for tabulated bid functions.
pub const MONOTONE_TOL: f64 = 1e-12;

/// The seller's overcharge at which the marginal cost of rule breaking is one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SellerParams {
    gamma: f64,
}

impl SellerParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!(
                "gamma must be positive and finite, got {gamma}"
            )));
        }
        Ok(SellerParams { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SellerDecision {
    pub winner_index: usize,
    pub price: f64,
}

/// Metadata carried alongside a tabulated strategy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BidFunctionMeta {
    pub treatment: Option<Treatment>,
    pub gamma: Option<f64>,
    pub tol: Option<f64>,
    pub sweeps: Option<usize>,
}

/// A monotone bidding strategy tabulated on an ascending value grid.
///
/// Evaluation and inversion interpolate linearly between grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct BidFunction {
    grid: Vec<f64>,
    bids: Vec<f64>,
    pub meta: BidFunctionMeta,
}

impl BidFunction {
    pub fn new(grid: Vec<f64>, bids: Vec<f64>, meta: BidFunctionMeta) -> Result<Self> {
        if grid.len() < 2 || grid.len() != bids.len() {
            return Err(Error::Domain(format!(
                "bid function needs matching grid and bid columns of length >= 2 (got {} and {})",
                grid.len(),
                bids.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("grid must be strictly ascending".into()));
        }
        if bids.iter().chain(grid.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Domain(
                "bid function contains non-finite entries".into(),
            ));
        }
        Ok(BidFunction { grid, bids, meta })
    }

    /// Tabulates `f` on `points` equally spaced values over `[lower, upper]`.
    pub fn tabulate(
        lower: f64,
        upper: f64,
        points: usize,
        meta: BidFunctionMeta,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let grid = uniform_grid(lower, upper, points)?;
        let bids = grid.iter().map(|&t| f(t)).collect();
        Self::new(grid, bids, meta)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn bids(&self) -> &[f64] {
        &self.bids
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.bids.windows(2).all(|w| w[1] - w[0] > -MONOTONE_TOL)
            && self.bids.last() > self.bids.first()
    }

    fn ensure_increasing(&self) -> Result<()> {
        if self.is_strictly_increasing() {
            Ok(())
        } else {
            Err(Error::Domain(
                "bid function is not strictly increasing".into(),
            ))
        }
    }

    /// Bid at value `theta`, clamped to the tabulated range.
    pub fn eval(&self, theta: f64) -> f64 {
        interpolate(&self.grid, &self.bids, theta)
    }

    /// Value whose bid is `bid`; clamps to the ends of the grid outside the
    /// tabulated bid range.
    pub fn inverse(&self, bid: f64) -> f64 {
        interpolate(&self.bids, &self.grid, bid)
    }
}

/// Monotone-interpolated inverse of a strictly increasing bid function.
pub fn inverse_bid(bidfn: &BidFunction, bid: f64) -> Result<f64> {
    bidfn.ensure_increasing()?;
    Ok(bidfn.inverse(bid))
}

pub fn uniform_grid(lower: f64, upper: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(upper > lower) {
        return Err(Error::Domain(format!(
            "grid over [{lower}, {upper}] with {points} points"
        )));
    }
    let h = (upper - lower) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                upper
            } else {
                lower + i as f64 * h
            }
        })
        .collect())
}

/// Piecewise-linear interpolation over non-decreasing `xs`, clamped at both ends.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[last] {
        return ys[last];
    }
    // First index with xs[i] > x; x lies in [xs[i-1], xs[i]).
    let i = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let (y0, y1) = (ys[i - 1], ys[i]);
    if x1 == x0 {
        y0
    } else {
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

fn check_bidders(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::Domain(format!("need at least 2 bidders, got {n}")))
    } else {
        Ok(())
    }
}

/// Probability that the highest of `n - 1` rivals lies below `theta`.
fn win_prob<D: ValueDistribution + ?Sized>(dist: &D, n: usize, theta: f64) -> f64 {
    dist.cdf_clamped(theta).powi(n as i32 - 1)
}

/// Density of the highest rival value.
fn win_density<D: ValueDistribution + ?Sized>(dist: &D, n: usize, theta: f64) -> f64 {
    (n - 1) as f64 * dist.pdf(theta) * dist.cdf_clamped(theta).powi(n as i32 - 2)
}

/// Risk-neutral first-price equilibrium bid, `E[max rival value | max < theta]`.
pub fn fp_bid<D: ValueDistribution + ?Sized>(theta: f64, dist: &D, n: usize) -> Result<f64> {
    check_bidders(n)?;
    dist.check(theta)?;
    if let Some(b) = dist.fp_bid_closed_form(theta, n) {
        return Ok(b);
    }
    let lower = dist.lower();
    let denom = win_prob(dist, n, theta);
    if denom == 0.0 {
        return Ok(lower);
    }
    // b(θ) = θ - ∫ G(x) dx / G(θ) over [lower, θ].
    let integral = gauss_legendre(lower, theta, 64, |x| win_prob(dist, n, x));
    Ok(theta - integral / denom)
}

/// Credible second-price bid: truthful.
pub fn csp_bid(theta: f64) -> f64 {
    theta
}

/// The seller's optimal allocation and price: the highest bidder wins and
/// pays `min{b(1), b(2) + γ}`. Ties go to the lowest index.
pub fn seller_best_response(bids: &[f64], seller: SellerParams) -> Result<SellerDecision> {
    if bids.len() < 2 {
        return Err(Error::Domain(format!(
            "seller needs at least 2 bids, got {}",
            bids.len()
        )));
    }
    let mut winner = 0;
    for (i, &b) in bids.iter().enumerate().skip(1) {
        if b > bids[winner] {
            winner = i;
        }
    }
    let second = bids
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != winner)
        .map(|(_, &b)| b)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SellerDecision {
        winner_index: winner,
        price: bids[winner].min(second + seller.gamma()),
    })
}

/// Tabulated FP equilibrium.
pub fn fp_bid_function<D: ValueDistribution + ?Sized>(
    dist: &D,
    n: usize,
    points: usize,
) -> Result<BidFunction> {
    let grid = uniform_grid(dist.lower(), dist.upper(), points)?;
    let bids = grid
        .iter()
        .map(|&t| fp_bid(t, dist, n))
        .collect::<Result<Vec<_>>>()?;
    BidFunction::new(
        grid,
        bids,
        BidFunctionMeta {
            treatment: Some(Treatment::Fp),
            gamma: None,
            tol: None,
            sweeps: None,
        },
    )
}

/// Tabulated CSP equilibrium (the identity).
pub fn csp_bid_function<D: ValueDistribution + ?Sized>(
    dist: &D,
    points: usize,
) -> Result<BidFunction> {
    BidFunction::tabulate(
        dist.lower(),
        dist.upper(),
        points,
        BidFunctionMeta {
            treatment: Some(Treatment::Csp),
            gamma: None,
            tol: None,
            sweeps: None,
        },
        csp_bid,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcspSolverOptions {
    pub grid_size: usize,
    pub tol: f64,
    pub damping: f64,
    pub max_sweeps: usize,
}

impl Default for NcspSolverOptions {
    fn default() -> Self {
        NcspSolverOptions {
            grid_size: 1001,
            tol: 1e-8,
            damping: 0.5,
            max_sweeps: 10_000,
        }
    }
}

/// Solves for the symmetric NCSP equilibrium against a seller with tolerance γ.
///
/// Each sweep freezes `a(θ)` at the current iterate, integrates the resulting
/// linear ODE with the implicit midpoint rule from `b(lower) = lower`, damps the
/// update and projects it back onto monotone undominated strategies. The
/// iteration stops once the FOC residual at every interval midpoint is below
/// `tol`.
pub fn solve_ncsp_equilibrium<D: ValueDistribution + ?Sized>(
    dist: &D,
    n: usize,
    seller: SellerParams,
    opts: NcspSolverOptions,
) -> Result<BidFunction> {
    check_bidders(n)?;
    if opts.grid_size < 101 {
        return Err(Error::Domain(format!(
            "grid_size must be at least 101, got {}",
            opts.grid_size
        )));
    }
    if !(opts.tol > 0.0) || !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::Domain(
            "tol must be > 0 and damping in (0, 1]".into(),
        ));
    }
    let gamma = seller.gamma();
    let grid = uniform_grid(dist.lower(), dist.upper(), opts.grid_size)?;
    let mut bids: Vec<f64> = grid
        .iter()
        .map(|&t| fp_bid(t, dist, n))
        .collect::<Result<_>>()?;

    let mut next = vec![0.0; grid.len()];
    let mut residual = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        next[0] = grid[0];
        for i in 0..grid.len() - 1 {
            let (t0, t1) = (grid[i], grid[i + 1]);
            let h = t1 - t0;
            let tm = 0.5 * (t0 + t1);
            let bm = 0.5 * (bids[i] + bids[i + 1]);
            let gap = spread(dist, n, &grid, &bids, tm, bm, gamma);
            let c = win_density(dist, n, tm);
            let lhs = gap / h + 0.5 * c;
            next[i + 1] = if lhs > 0.0 {
                (next[i] * (gap / h - 0.5 * c) + c * tm) / lhs
            } else {
                next[i]
            };
        }
        let alpha = opts.damping;
        for (b, &nb) in bids.iter_mut().zip(&next) {
            *b = (1.0 - alpha) * *b + alpha * nb;
        }
        project_monotone(&grid, &mut bids);

        residual = foc_residual_raw(dist, n, gamma, &grid, &bids);
        if residual < opts.tol {
            return BidFunction::new(
                grid,
                bids,
                BidFunctionMeta {
                    treatment: Some(Treatment::Ncsp),
                    gamma: Some(gamma),
                    tol: Some(opts.tol),
                    sweeps: Some(sweep),
                },
            );
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_sweeps,
        residual,
    })
}

/// `F^{n-1}(θ) - F^{n-1}(a(θ))` with `a` read off the tabulated strategy.
fn spread<D: ValueDistribution + ?Sized>(
    dist: &D,
    n: usize,
    grid: &[f64],
    bids: &[f64],
    theta: f64,
    bid: f64,
    gamma: f64,
) -> f64 {
    let target = bid - gamma;
    let a = if target <= bids[0] {
        grid[0]
    } else {
        interpolate(bids, grid, target).min(theta)
    };
    win_prob(dist, n, theta) - win_prob(dist, n, a)
}

fn project_monotone(grid: &[f64], bids: &mut [f64]) {
    bids[0] = grid[0];
    for i in 1..bids.len() {
        bids[i] = bids[i].clamp(bids[i - 1], grid[i]);
    }
}

fn foc_residual_raw<D: ValueDistribution + ?Sized>(
    dist: &D,
    n: usize,
    gamma: f64,
    grid: &[f64],
    bids: &[f64],
) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() - 1 {
        let h = grid[i + 1] - grid[i];
        let tm = 0.5 * (grid[i] + grid[i + 1]);
        let bm = 0.5 * (bids[i] + bids[i + 1]);
        let slope = (bids[i + 1] - bids[i]) / h;
        let r = win_density(dist, n, tm) * (tm - bm)
            - slope * spread(dist, n, grid, bids, tm, bm, gamma);
        worst = worst.max(r.abs());
    }
    worst
}

/// Sup-norm FOC residual of `bidfn` at the midpoints of its grid intervals.
pub fn foc_residual<D: ValueDistribution + ?Sized>(
    bidfn: &BidFunction,
    dist: &D,
    n: usize,
    seller: SellerParams,
) -> f64 {
    foc_residual_raw(dist, n, seller.gamma(), bidfn.grid(), bidfn.bids())
}

/// Grid points where `fp_bid(θ) <= b(θ) < θ` fails on the interior.
#[derive(Debug, Clone, PartialEq)]
pub struct NestingReport {
    pub checked: usize,
    pub below_fp: Vec<f64>,
    pub not_below_value: Vec<f64>,
}

impl NestingReport {
    pub fn holds(&self) -> bool {
        self.below_fp.is_empty() && self.not_below_value.is_empty()
    }
}

/// Slack for the lower side of the nesting check, where the NCSP solution
/// coincides with the FP bid and differs only by rounding.
pub const NESTING_SLACK: f64 = 1e-9;

pub fn check_nesting<D: ValueDistribution + ?Sized>(
    bidfn: &BidFunction,
    dist: &D,
    n: usize,
) -> Result<NestingReport> {
    let grid = bidfn.grid();
    let mut report = NestingReport {
        checked: 0,
        below_fp: Vec::new(),
        not_below_value: Vec::new(),
    };
    for (&t, &b) in grid.iter().zip(bidfn.bids()) {
        if t <= dist.lower() || t > dist.upper() {
            continue;
        }
        report.checked += 1;
        if b < fp_bid(t, dist, n)? - NESTING_SLACK {
            report.below_fp.push(t);
        }
        if b >= t {
            report.not_below_value.push(t);
        }
    }
    Ok(report)
}

/// How the seller turns the two highest bids into a price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriceRule {
    FirstPrice,
    /// Rule-following second price.
    SecondPrice,
    /// Best response of a γ-averse seller.
    Overcharge(SellerParams),
}

impl PriceRule {
    pub fn price(&self, highest: f64, second: f64) -> f64 {
        match self {
            PriceRule::FirstPrice => highest,
            PriceRule::SecondPrice => second,
            PriceRule::Overcharge(s) => highest.min(second + s.gamma()),
        }
    }
}

/// Expected price under i.i.d. values and symmetric play of `bidfn`,
/// integrating over the joint law of the two highest values.
pub fn expected_revenue<D: ValueDistribution + ?Sized>(
    bidfn: &BidFunction,
    dist: &D,
    n: usize,
    rule: PriceRule,
) -> Result<f64> {
    check_bidders(n)?;
    bidfn.ensure_increasing()?;
    let (lo, hi) = (dist.lower(), dist.upper());
    let nn = (n * (n - 1)) as f64;
    let panels = 200;
    Ok(gauss_legendre(lo, hi, panels, |x| {
        let bx = bidfn.eval(x);
        let fx = dist.pdf(x);
        if fx == 0.0 || x <= lo {
            return 0.0;
        }
        let inner = gauss_legendre(lo, x, panels, |y| {
            let w = dist.pdf(y) * dist.cdf_clamped(y).powi(n as i32 - 2);
            rule.price(bx, bidfn.eval(y)) * w
        });
        nn * fx * inner
    }))
}

const GL5_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// Composite five-point Gauss-Legendre rule.
pub(crate) fn gauss_legendre(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
            total += w * f(mid + half * x) * half;
        }
    }
    total
}
