//! Tail estimates behind the local finiteness of the exceptional
//! excursions: the curved-boundary crossing bound for Brownian motion and
//! the statistics ξ, ζ, J₁, J₂ built from bridges and excursions.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::report::{Status, Table, Verdict};
use crate::error::{Error, Result};
use crate::pathkit::{LocalTimeCurve, SamplePath};
use crate::stats;
use crate::stochgen::{brownian_bridge, GaussianStream, GridSpec, SeedSpec};

/// `c(β) = 2β(1−β)(1/2)^{1/(2β−1)}`.
pub fn boundary_constant(beta: f64) -> f64 {
    2.0 * beta * (1.0 - beta) * 0.5f64.powf(1.0 / (2.0 * beta - 1.0))
}

/// `e^{−cx²} / (1 − e^{−cx²})`, an upper bound for
/// `P(∃t ≥ 0: W_t > x(1+t)^β)`; `+∞` when `cx² = 0`.
pub fn crossing_bound(beta: f64, x: f64) -> f64 {
    let e = (-boundary_constant(beta) * x * x).exp();
    if e >= 1.0 {
        f64::INFINITY
    } else {
        e / (1.0 - e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBoundCheck {
    pub beta: f64,
    pub x: f64,
    pub c: f64,
    pub bound: f64,
    pub exceedances: u64,
    pub replicas: u64,
    pub empirical: f64,
    pub std_error: f64,
    pub status: Status,
}

/// Fraction of Brownian paths crossing `x(1+t)^β` before `horizon`.
///
/// Paths are sampled on `n_nodes` geometrically spaced times; between two
/// nodes a crossing of the chord of the boundary is drawn with the exact
/// bridge probability `exp(−2 (f_i − W_i)(f_{i+1} − W_{i+1}) / Δt)`. The
/// boundary is concave, so the chord lies below it and this over-counts,
/// while stopping at the horizon under-counts. The verdict compares with
/// the bound at three binomial standard errors.
pub fn tail_bound_check(
    beta: f64,
    x: f64,
    horizon: f64,
    replicas: u64,
    seed: u64,
    n_nodes: usize,
) -> Result<TailBoundCheck> {
    if !(beta > 0.5 && beta < 1.0) {
        return Err(Error::Argument(format!("β = {beta} must lie in (1/2, 1)")));
    }
    if !(x > 0.0) || !(horizon > 0.0) || replicas == 0 || n_nodes < 2 {
        return Err(Error::Argument(
            "need x > 0, horizon > 0, replicas ≥ 1 and two nodes".into(),
        ));
    }
    let times: Vec<f64> = (0..=n_nodes)
        .map(|i| (1.0 + horizon).powf(i as f64 / n_nodes as f64) - 1.0)
        .collect();
    let barrier: Vec<f64> = times.iter().map(|t| x * (1.0 + t).powf(beta)).collect();
    let exceedances = (0..replicas)
        .into_par_iter()
        .map(|r| crosses(SeedSpec::new(seed, r), &times, &barrier) as u64)
        .sum::<u64>();
    let empirical = exceedances as f64 / replicas as f64;
    let std_error = stats::binomial_std_error(empirical, replicas as usize);
    let bound = crossing_bound(beta, x);
    let status = if bound >= 1.0 {
        Status::Vacuous
    } else if empirical <= bound + 3.0 * std_error {
        Status::Pass
    } else {
        Status::Fail
    };
    Ok(TailBoundCheck {
        beta,
        x,
        c: boundary_constant(beta),
        bound,
        exceedances,
        replicas,
        empirical,
        std_error,
        status,
    })
}

fn crosses(key: SeedSpec, times: &[f64], barrier: &[f64]) -> bool {
    let mut rng = key.rng();
    let mut w = 0.0;
    for i in 0..times.len() - 1 {
        let dt = times[i + 1] - times[i];
        let next = w + dt.sqrt() * rng.sample::<f64, _>(rand_distr::StandardNormal);
        if next >= barrier[i + 1] {
            return true;
        }
        let p = (-2.0 * (barrier[i] - w) * (barrier[i + 1] - next) / dt).exp();
        if rng.random::<f64>() < p {
            return true;
        }
        w = next;
    }
    false
}

/// ξ, ζ and the Bessel-bridge ratios of one bridge `B` and one standard
/// excursion `Ē` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct TailStatistics {
    /// `sup B_t / (t(1−t))^{1/4}`.
    pub xi_sup: f64,
    /// `sup (r(t)(r(1) − r(t)))^{1/4} / Ē_t`.
    pub zeta: f64,
    /// `r(t) = ∫_0^t |Ē_s|^κ ds`.
    pub r_curve: LocalTimeCurve,
    pub j1: f64,
    pub j2: f64,
    /// `sup Ē_t / (t(1−t))^{1/4}`.
    pub xi_bar: f64,
    pub e_half: f64,
}

impl TailStatistics {
    /// `ξ̄^{κ/2} / (2 Ē_{1/2} (J₁ ∧ J₂))`, which dominates ζ for κ ≥ 12.
    pub fn zeta_bound(&self, kappa: f64) -> f64 {
        self.xi_bar.powf(kappa / 2.0) / (2.0 * self.e_half * self.j1.min(self.j2))
    }
}

/// Samples [`TailStatistics`] on a grid of `n_steps` (even) cells.
pub fn sample_tail_statistics(key: SeedSpec, kappa: f64, n_steps: usize) -> Result<TailStatistics> {
    if n_steps < 2 || !n_steps.is_multiple_of(2) {
        return Err(Error::Argument(format!(
            "n_steps = {n_steps} must be even and ≥ 2"
        )));
    }
    let grid = GridSpec::new(1.0, n_steps)?;
    let bridge = brownian_bridge(key.lane(0), grid);
    let parts: Vec<SamplePath> = (0..3)
        .map(|k| brownian_bridge(key.lane(1).lane(k), grid))
        .collect();
    let comps = [parts[0].values(), parts[1].values(), parts[2].values()];
    let t = grid.times();
    let b = bridge.values();
    let e: Vec<f64> = (0..=n_steps)
        .map(|i| norm([comps[0][i], comps[1][i], comps[2][i]]))
        .collect();
    let interior = 1..n_steps;
    let weight = |i: usize| (t[i] * (1.0 - t[i])).powf(0.25);

    let xi_sup = interior
        .clone()
        .map(|i| b[i] / weight(i))
        .fold(0.0, f64::max);
    let xi_bar = interior
        .clone()
        .map(|i| e[i] / weight(i))
        .fold(0.0, f64::max);

    let mut r = Vec::with_capacity(e.len());
    let mut acc = 0.0;
    r.push(0.0);
    for i in 0..n_steps {
        acc += 0.5 * (e[i].abs().powf(kappa) + e[i + 1].abs().powf(kappa)) * (t[i + 1] - t[i]);
        r.push(acc);
    }
    let r1 = acc;
    let zeta = interior
        .clone()
        .map(|i| (r[i] * (r1 - r[i])).max(0.0).powf(0.25) / e[i])
        .fold(0.0, f64::max);

    let half = n_steps / 2;
    let e_half = e[half];
    let mut stream = GaussianStream::new(key.lane(2));
    let min_right = ratio_min(
        &t,
        &comps,
        half..n_steps,
        |u| 1.0 / (1.0 - u),
        |u| u / (1.0 - u),
        &mut stream,
    );
    let min_left = ratio_min(
        &t,
        &comps,
        0..half,
        |u| 1.0 / u,
        |u| (1.0 - u) / u,
        &mut stream,
    );
    Ok(TailStatistics {
        xi_sup,
        zeta,
        r_curve: LocalTimeCurve::new(SamplePath::new(t, r)?)?,
        j1: min_right / (2.0 * e_half),
        j2: min_left / (2.0 * e_half),
        xi_bar,
        e_half,
    })
}

/// Cells are bisected down to `REFINE_MIN·(1 + s)` on the `s` clock.
const REFINE_MIN: f64 = 1e-8;
/// The end cell reaching `s = ∞` is split until it starts beyond this.
const REFINE_TAIL: f64 = 1e7;

fn norm(c: [f64; 3]) -> f64 {
    (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
}

/// Minimum of `weight(t)·|c(t)|` over the cells `cells` of the grid, where
/// `c` holds the three bridge components of the excursion. With `s = clock(t)`
/// this process is a three-dimensional Bessel process in `s`, so a cell whose
/// endpoints sit more than `4√Δs` above the running minimum is dropped, and
/// any other cell is split at a midpoint drawn from the component bridges
/// conditioned on the endpoints.
fn ratio_min(
    t: &[f64],
    comps: &[&[f64]; 3],
    cells: std::ops::Range<usize>,
    weight: impl Fn(f64) -> f64,
    clock: impl Fn(f64) -> f64,
    stream: &mut GaussianStream,
) -> f64 {
    let node = |i: usize| (t[i], [comps[0][i], comps[1][i], comps[2][i]]);
    let value = |(u, c): (f64, [f64; 3])| {
        let w = weight(u);
        if w.is_finite() {
            w * norm(c)
        } else {
            f64::INFINITY
        }
    };
    let mut m = (cells.start..=cells.end)
        .map(|i| value(node(i)))
        .fold(f64::INFINITY, f64::min);
    let mut stack: Vec<_> = cells.rev().map(|i| (node(i), node(i + 1))).collect();
    while let Some((a, b)) = stack.pop() {
        let (sa, sb) = (clock(a.0), clock(b.0));
        let ds = (sb - sa).abs();
        let skip = if ds.is_finite() {
            ds <= REFINE_MIN * (1.0 + sa.min(sb)) || value(a).min(value(b)) - 4.0 * ds.sqrt() >= m
        } else {
            sa.min(sb) >= REFINE_TAIL
        };
        if skip {
            continue;
        }
        let sd = (0.25 * (b.0 - a.0)).sqrt();
        let mid = (
            0.5 * (a.0 + b.0),
            [0, 1, 2].map(|k| 0.5 * (a.1[k] + b.1[k]) + sd * stream.next()),
        );
        if !(mid.0 > a.0 && mid.0 < b.0) {
            continue;
        }
        m = m.min(value(mid));
        stack.push((mid, b));
        stack.push((a, mid));
    }
    m
}

/// Scalar summary of one [`TailStatistics`] draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailSample {
    pub replica: u64,
    pub xi_sup: f64,
    pub xi_bar: f64,
    pub zeta: f64,
    pub zeta_bound: f64,
    pub r1: f64,
    pub e_half: f64,
    pub j1: f64,
    pub j2: f64,
}

impl TailSample {
    pub fn product(&self) -> f64 {
        self.xi_sup * self.zeta
    }

    pub fn product_bound(&self) -> f64 {
        self.xi_sup * self.zeta_bound
    }
}

#[derive(Debug, Clone)]
pub struct XiZetaReport {
    pub kappa: f64,
    pub samples: Vec<TailSample>,
    pub survival: Table,
    pub verdicts: Vec<Verdict>,
}

/// Survival curve `(x, P̂(S > x), se)` at quantile-spaced thresholds.
pub fn survival_curve(xs: &[f64], points: usize) -> Vec<(f64, f64, f64)> {
    let n = xs.len();
    let mut out = vec![(0.0, stats::survival(xs, 0.0), 0.0)];
    if n == 0 {
        return out;
    }
    // survival levels from 1/2 down to 5/n, evenly spaced in log
    let lo = (5.0 / n as f64).min(0.5);
    for j in 0..points {
        let s = 0.5 * (lo / 0.5).powf(j as f64 / (points.max(2) - 1) as f64);
        let x = stats::quantile(xs, 1.0 - s);
        if out.last().is_none_or(|p| x > p.0) {
            let p = stats::survival(xs, x);
            out.push((x, p, stats::binomial_std_error(p, n)));
        }
    }
    out
}

const SURVIVAL_POINTS: usize = 40;

pub fn xi_zeta_tails(kappa: f64, replicas: u64, seed: u64, n_steps: usize) -> Result<XiZetaReport> {
    if replicas == 0 {
        return Err(Error::Argument("need at least one replica".into()));
    }
    let samples = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let s = sample_tail_statistics(SeedSpec::new(seed, r), kappa, n_steps)?;
            Ok(TailSample {
                replica: r,
                xi_sup: s.xi_sup,
                xi_bar: s.xi_bar,
                zeta: s.zeta,
                zeta_bound: s.zeta_bound(kappa),
                r1: s.r_curve.final_value(),
                e_half: s.e_half,
                j1: s.j1,
                j2: s.j2,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let column = |f: fn(&TailSample) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
    let named: [(&str, Vec<f64>); 6] = [
        ("xi_sup", column(|s| s.xi_sup)),
        ("xi_bar", column(|s| s.xi_bar)),
        ("zeta", column(|s| s.zeta)),
        ("zeta_bound", column(|s| s.zeta_bound)),
        ("product", column(TailSample::product)),
        ("product_bound", column(TailSample::product_bound)),
    ];
    let mut survival = Table::new("survival", &["statistic", "x", "survival", "std_error"]);
    let mut curves = Vec::new();
    for (name, xs) in &named {
        let curve = survival_curve(xs, SURVIVAL_POINTS);
        for &(x, p, se) in &curve {
            survival.push([
                name.to_string(),
                x.to_string(),
                p.to_string(),
                se.to_string(),
            ]);
        }
        curves.push((*name, curve));
    }
    let curve = |name: &str| &curves.iter().find(|(n, _)| *n == name).unwrap().1;

    let mut verdicts = Vec::new();
    let n = samples.len();
    for (name, js) in [("j1", column(|s| s.j1)), ("j2", column(|s| s.j2))] {
        let d = stats::ks_uniform(&js);
        let crit = stats::ks_critical_1pct(n);
        verdicts.push(Verdict::check(
            format!("{name}_uniform"),
            d <= crit,
            format!("KS distance {d:.5} vs 1% critical value {crit:.5} over {n} draws"),
        ));
    }

    // log P(ξ > x) against x² over the tail part of the curve
    let tail: Vec<&(f64, f64, f64)> = curve("xi_sup")
        .iter()
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .collect();
    let x2: Vec<f64> = tail.iter().map(|p| p.0 * p.0).collect();
    let logs: Vec<f64> = tail.iter().map(|p| p.1.ln()).collect();
    let (slope, _, se) = stats::ols_fit(&x2, &logs);
    verdicts.push(Verdict::check(
        "xi_quadratic_tail",
        slope + 3.0 * se < 0.0,
        format!(
            "slope of log-survival in x² = {slope:.4} ± {se:.4} over {} levels",
            tail.len()
        ),
    ));

    let prod = curve("product");
    let monotone = prod.windows(2).all(|w| w[1].1 <= w[0].1);
    let decays = prod.last().is_some_and(|p| p.1 < prod[0].1);
    verdicts.push(Verdict::check(
        "product_tail_decays",
        monotone && decays,
        format!(
            "survival of ξζ from {} at x = 0 to {:.3e} at x = {:.4}",
            prod[0].1,
            prod.last().unwrap().1,
            prod.last().unwrap().0
        ),
    ));

    // polynomial rate of the product tail, descriptive only
    let pts: Vec<&(f64, f64, f64)> = prod.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (rate, _, rate_se) = stats::ols_fit(&lx, &ly);
    verdicts.push(Verdict::with_status(
        "product_tail_exponent",
        Status::Descriptive,
        format!("log-log slope of P(ξζ > x) = {rate:.3} ± {rate_se:.3}"),
    ));

    Ok(XiZetaReport {
        kappa,
        samples,
        survival,
        verdicts,
    })
}
