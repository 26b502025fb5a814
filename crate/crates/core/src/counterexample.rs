//! The non-dominated pair `(U, W)` and everything built on it: the chord
//! process `K`, the envelope process `L`, the cone-violation census, the
//! local-time identities, and the interlacing with an independent Brownian
//! motion that produces the final `(U, V)` pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pathkit::{self, excursions, local_time_zero, ExcursionSet, LocalTimeCurve, SamplePath};
use crate::reflection::{
    reflection_map, synchronize_clocks, total_variation, ConeEnvelope, MonotoneClock,
};
use crate::stochgen::{brownian, power_time_change_refined, GaussianStream, GridSpec, SeedSpec};

const LANE_UBAR: u64 = 0;
const LANE_W: u64 = 1;
const LANE_REFINE: u64 = 2;
const LANE_BBAR: u64 = 3;

/// Source horizon for `Ū` as a multiple of the target horizon, and the
/// largest multiple tried before giving up.
const HORIZON_START: f64 = 4.0;
const HORIZON_MAX: f64 = 64.0;
const BBAR_HORIZON_MAX: f64 = 16.0;

/// `Ū` is sampled with this mesh unless the target grid is finer.
const SOURCE_MESH: f64 = 1.0 / 65536.0;

/// Time-changed Brownian motion `U`, independent Brownian motion `W`, and
/// the raw material they came from.
#[derive(Debug, Clone)]
pub struct PairBundle {
    pub kappa: f64,
    pub seed: SeedSpec,
    pub ubar: SamplePath,
    pub wbar: SamplePath,
    pub u: SamplePath,
    pub w: SamplePath,
    pub eta: MonotoneClock,
}

impl PairBundle {
    /// The pair restricted to every `stride`-th node. The time change is
    /// not recomputed, so coarser levels are exact subsamples of this one.
    pub fn subsample(&self, stride: usize) -> Result<PairBundle> {
        Ok(PairBundle {
            u: self.u.subsample(stride)?,
            w: self.w.subsample(stride)?,
            wbar: self.wbar.subsample(stride)?,
            eta: MonotoneClock::new(self.eta.path().subsample(stride)?)?,
            ..self.clone()
        })
    }
}

/// Mesh used for `Ū`: a power of two no coarser than the target mesh.
pub fn source_mesh(target: GridSpec) -> f64 {
    let m = target.mesh();
    if m >= SOURCE_MESH {
        SOURCE_MESH
    } else {
        2f64.powi(m.log2().floor() as i32)
    }
}

/// Builds `U_t = Ū_{η(t)}` with `η` the inverse of `∫|Ū|^κ`, and an
/// independent Brownian `W` on `grid`.
///
/// `Ū` is generated on a horizon of a few multiples of the target horizon
/// and extended from the same stream, doubling, until the clock covers the
/// target. Between its nodes `Ū` is read by bridge sampling.
pub fn build_pair(seed: SeedSpec, grid: GridSpec, kappa: f64) -> Result<PairBundle> {
    if !(kappa >= 0.0) {
        return Err(Error::Argument(format!("exponent {kappa} must be >= 0")));
    }
    let dt = source_mesh(grid);
    let mut stream = GaussianStream::new(seed.lane(LANE_UBAR));
    let mut values = vec![0.0];
    let mut horizon = HORIZON_START * grid.t_end;
    loop {
        let steps = (horizon / dt).round() as usize;
        let missing = steps + 1 - values.len();
        stream.extend_brownian(&mut values, dt, missing);
        let times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
        let ubar = SamplePath::from_parts(times, values.clone());
        match power_time_change_refined(&ubar, kappa, grid, seed.lane(LANE_REFINE)) {
            Ok((u, eta)) => {
                let w = brownian(seed.lane(LANE_W), grid);
                return Ok(PairBundle {
                    kappa,
                    seed,
                    ubar,
                    wbar: w.clone(),
                    u,
                    w,
                    eta,
                });
            }
            Err(Error::Horizon { .. }) if horizon < HORIZON_MAX * grid.t_end => horizon *= 2.0,
            Err(e) => return Err(e),
        }
    }
}

/// Times where the interpolated path vanishes: zero nodes and crossings.
fn zeros(u: &SamplePath) -> Vec<f64> {
    let (t, v) = (u.times(), u.values());
    let mut out = Vec::new();
    for i in 0..v.len() {
        if v[i] == 0.0 {
            out.push(t[i]);
        }
        if i + 1 < v.len() && v[i] * v[i + 1] < 0.0 {
            out.push(pathkit::zero_crossing(t[i], v[i], t[i + 1], v[i + 1]));
        }
    }
    out
}

/// `K = −W` at the zeros of `U`, linear in between and constant outside the
/// first and last zero.
pub fn zero_interpolant(u: &SamplePath, w: &SamplePath) -> Result<SamplePath> {
    u.check_same_grid(w)?;
    let z = zeros(u);
    if z.is_empty() {
        return Err(Error::Argument("U has no zeros".into()));
    }
    let kz: Vec<f64> = z.iter().map(|&s| -w.eval_in_span(s)).collect();
    let mut k = Vec::with_capacity(u.len());
    let mut j = 0;
    for &t in u.times() {
        while j + 1 < z.len() && z[j + 1] <= t {
            j += 1;
        }
        let value = if t <= z[0] {
            kz[0]
        } else if j + 1 == z.len() {
            kz[j]
        } else {
            pathkit::lerp(z[j], kz[j], z[j + 1], kz[j + 1], t)
        };
        k.push(value);
    }
    Ok(SamplePath::from_parts(u.times().to_vec(), k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationCensus {
    pub violating_intervals: ExcursionSet,
    /// Largest `|K + W| − |U|` over the violating excursions, 0 if none.
    pub max_overshoot: f64,
    pub total_excursions: usize,
}

impl ViolationCensus {
    pub fn violating_count(&self) -> usize {
        self.violating_intervals.len()
    }
}

/// Excursions of `U` on which `|K + W|` exceeds `|U|` at some interior node.
pub fn cone_census(k: &SamplePath, w: &SamplePath, u: &SamplePath) -> Result<ViolationCensus> {
    k.check_same_grid(w)?;
    k.check_same_grid(u)?;
    let exc = excursions(u);
    let t = u.times();
    let (kv, wv, uv) = (k.values(), w.values(), u.values());
    let mut violating = Vec::new();
    let mut max_overshoot = 0.0_f64;
    let mut i = 0;
    for &(a, b) in exc.intervals() {
        while i < t.len() && t[i] <= a {
            i += 1;
        }
        let mut worst = f64::NEG_INFINITY;
        let mut j = i;
        while j < t.len() && t[j] < b {
            worst = worst.max((kv[j] + wv[j]).abs() - uv[j].abs());
            j += 1;
        }
        if worst > 0.0 {
            violating.push((a, b));
            max_overshoot = max_overshoot.max(worst);
        }
        i = j;
    }
    Ok(ViolationCensus {
        violating_intervals: ExcursionSet::new(violating, exc.domain_end())?,
        max_overshoot,
        total_excursions: exc.len(),
    })
}

/// The barriers `(−W − |U|, −W + |U|)`.
pub fn cone_envelope(u: &SamplePath, w: &SamplePath) -> Result<ConeEnvelope> {
    u.check_same_grid(w)?;
    let f = u.zip_with(w, |u, w| -w - u.abs())?;
    let g = u.zip_with(w, |u, w| -w + u.abs())?;
    ConeEnvelope::new(f, g)
}

/// `L` = the reflection of the cone `(−W − |U|, −W + |U|)`.
pub fn envelope_process(u: &SamplePath, w: &SamplePath) -> Result<SamplePath> {
    Ok(reflection_map(&cone_envelope(u, w)?))
}

/// `|U| + (L + W)` and `|U| − (L + W)`, computed as distances to the two
/// barriers so that contact with a barrier gives an exact zero.
fn barrier_gaps(env: &ConeEnvelope, l: &SamplePath) -> Result<(SamplePath, SamplePath)> {
    Ok((
        l.zip_with(env.lower(), |l, f| l - f)?,
        env.upper().zip_with(l, |g, l| g - l)?,
    ))
}

/// `½(L⁰(|U| + L + W) + L⁰(|U| − (L + W)))`: the clock that drives `L`.
pub fn variation_clock(u: &SamplePath, w: &SamplePath, l: &SamplePath) -> Result<LocalTimeCurve> {
    let env = cone_envelope(u, w)?;
    let (plus, minus) = barrier_gaps(&env, l)?;
    let (lp, lm) = (local_time_zero(&plus), local_time_zero(&minus));
    let v = lp.path().zip_with(lm.path(), |a, b| 0.5 * (a + b))?;
    LocalTimeCurve::new(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// `sup |2L − (L⁰(|U| + L + W) − L⁰(|U| − (L + W)))|`.
    pub local_time: f64,
    /// `sup (|L + W| − |U|)⁺` over the nodes and the zeros of `U`.
    pub overshoot: f64,
    /// Share of the absolute increments of `U` taken on cells that start
    /// with `|L + W| ≥ |U|`.
    pub frozen_fraction: f64,
}

pub fn verify_identities(
    u: &SamplePath,
    w: &SamplePath,
    l: &SamplePath,
) -> Result<IdentityResiduals> {
    let env = cone_envelope(u, w)?;
    l.check_same_grid(u)?;
    let (plus, minus) = barrier_gaps(&env, l)?;
    let (lp, lm) = (local_time_zero(&plus), local_time_zero(&minus));
    let local_time = l
        .values()
        .iter()
        .zip(lp.path().values().iter().zip(lm.path().values()))
        .map(|(&l, (&a, &b))| (2.0 * l - (a - b)).abs())
        .fold(0.0, f64::max);

    let lw = l.zip_with(w, |l, w| l + w)?;
    let mut overshoot = lw
        .values()
        .iter()
        .zip(u.values())
        .map(|(x, u)| (x.abs() - u.abs()).max(0.0))
        .fold(0.0, f64::max);
    for z in zeros(u) {
        overshoot = overshoot.max(lw.eval_in_span(z).abs());
    }
    Ok(IdentityResiduals {
        local_time,
        overshoot,
        frozen_fraction: frozen_increment_fraction(u, &lw)?,
    })
}

/// `Σ_{|V_j| ≥ |U_j|} |ΔU_j| / Σ_j |ΔU_j|`, 0 when `U` never moves.
pub fn frozen_increment_fraction(u: &SamplePath, v: &SamplePath) -> Result<f64> {
    u.check_same_grid(v)?;
    let (uv, vv) = (u.values(), v.values());
    let (mut frozen, mut total) = (0.0, 0.0);
    for j in 0..uv.len() - 1 {
        let d = (uv[j + 1] - uv[j]).abs();
        total += d;
        if vv[j].abs() >= uv[j].abs() {
            frozen += d;
        }
    }
    Ok(if total > 0.0 { frozen / total } else { 0.0 })
}

/// `(U, W)` with the derived `K`, `L` and the clock `V̄`.
#[derive(Debug, Clone)]
pub struct CounterexampleBundle {
    pub pair: PairBundle,
    pub k: SamplePath,
    pub l: SamplePath,
    pub vbar: LocalTimeCurve,
}

impl CounterexampleBundle {
    pub fn new(pair: PairBundle) -> Result<Self> {
        let k = zero_interpolant(&pair.u, &pair.w)?;
        let l = envelope_process(&pair.u, &pair.w)?;
        let vbar = variation_clock(&pair.u, &pair.w, &l)?;
        Ok(Self { pair, k, l, vbar })
    }

    pub fn build(seed: SeedSpec, grid: GridSpec, kappa: f64) -> Result<Self> {
        Self::new(build_pair(seed, grid, kappa)?)
    }

    pub fn census(&self) -> Result<ViolationCensus> {
        cone_census(&self.k, &self.pair.w, &self.pair.u)
    }

    pub fn residuals(&self) -> Result<IdentityResiduals> {
        verify_identities(&self.pair.u, &self.pair.w, &self.l)
    }

    pub fn tv_l(&self) -> f64 {
        total_variation(&self.l)
    }

    pub fn tv_k(&self) -> f64 {
        total_variation(&self.k)
    }
}

/// The interlaced pair and the clocks used to build it.
#[derive(Debug, Clone)]
pub struct AssembledPair {
    pub bbar: SamplePath,
    pub sbar: MonotoneClock,
    pub alpha: MonotoneClock,
    pub beta: MonotoneClock,
    pub u: SamplePath,
    pub w: SamplePath,
    pub l: SamplePath,
    pub b: SamplePath,
    pub y: SamplePath,
    pub v: SamplePath,
    /// `max |V̄(α) − S̄(β)|` over the output grid.
    pub sync_gap: f64,
    /// One cell's oscillation of the two clocks at the worst node.
    pub sync_tolerance: f64,
}

/// Interlaces the bundle with an independent Brownian motion `B̄` drawn
/// from `seed`, on the same mesh as the bundle. `B̄` is extended until its
/// running maximum reaches the final level of `V̄`, up to a fixed cap.
pub fn assemble_pair(bundle: &CounterexampleBundle, seed: SeedSpec) -> Result<AssembledPair> {
    let grid = bundle_grid(bundle)?;
    let dt = grid.mesh();
    let target = bundle.vbar.final_value();
    let mut stream = GaussianStream::new(seed.lane(LANE_BBAR));
    let mut values = vec![0.0];
    let mut steps = HORIZON_START as usize * grid.n_steps;
    loop {
        let missing = steps + 1 - values.len();
        stream.extend_brownian(&mut values, dt, missing);
        let reached = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) >= target;
        if reached || steps >= BBAR_HORIZON_MAX as usize * grid.n_steps {
            break;
        }
        steps *= 2;
    }
    let bgrid = GridSpec::new(steps as f64 * dt, steps)?;
    assemble_pair_with(bundle, SamplePath::from_parts(bgrid.times(), values))
}

fn bundle_grid(bundle: &CounterexampleBundle) -> Result<GridSpec> {
    GridSpec::new(bundle.pair.u.end(), bundle.pair.u.len() - 1)
}

fn running_max(b: &SamplePath) -> MonotoneClock {
    let mut m = f64::NEG_INFINITY;
    let s = b.values().iter().map(|&x| {
        m = m.max(x);
        m
    });
    MonotoneClock::new(SamplePath::from_parts(b.times().to_vec(), s.collect()))
        .expect("running max is monotone")
}

/// As [`assemble_pair`] with a given `B̄` starting at 0.
///
/// The output horizon is the largest `t` for which both `α(t)` and `β(t)`
/// stay inside the spans of `V̄` and `S̄`; the output grid has as many cells
/// as the bundle.
pub fn assemble_pair_with(
    bundle: &CounterexampleBundle,
    bbar: SamplePath,
) -> Result<AssembledPair> {
    if bbar.first_value() != 0.0 || bbar.start() != 0.0 {
        return Err(Error::Argument("B̄ must start at (0, 0)".into()));
    }
    let vbar = MonotoneClock::from(bundle.vbar.clone());
    let sbar = running_max(&bbar);
    let (v_end, s_end) = (vbar.end(), sbar.end());
    // first times each clock reaches the other's final level
    let sigma = sbar.first_exceedance(vbar.final_value()).unwrap_or(s_end);
    let rho = vbar.first_exceedance(sbar.final_value()).unwrap_or(v_end);
    let t_max = (v_end + sigma).min(s_end + rho) * (1.0 - 1e-9);
    let n = bundle.pair.u.len();
    // keep the bundle's mesh on the output grid
    let mesh = bundle.pair.u.end() / (n - 1) as f64;
    let n_out = ((t_max / mesh).ceil() as usize).max(n - 1);
    // Times and α live on the lattice q·ℤ, so β = t − α is exact and the
    // clamps below keep α and β monotone without rounding drift.
    let q = 2f64.powi(t_max.log2().floor() as i32 - 52);
    let snap = |x: f64| (x / q).round() * q;
    let out = GridSpec::new(t_max, n_out)?;
    let times: Vec<f64> = out.times().into_iter().map(snap).collect();

    let p = &bundle.pair;
    let m = times.len();
    let (mut alpha, mut beta) = (Vec::with_capacity(m), Vec::with_capacity(m));
    let (mut u, mut w, mut l, mut b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut sync_gap, mut sync_tolerance) = (0.0_f64, 0.0_f64);
    for (j, &t) in times.iter().enumerate() {
        let (raw, _) = synchronize_clocks(&vbar, &sbar, t)
            .map_err(|e| Error::Clock(format!("synchronization failed at t = {t}: {e}")))?;
        let a = if j == 0 {
            snap(raw).clamp(0.0, t)
        } else {
            let prev = alpha[j - 1];
            snap(raw).clamp(prev, prev + (t - times[j - 1]))
        };
        let be = t - a;
        let gap = (vbar.path().eval_in_span(a) - sbar.path().eval_in_span(be)).abs();
        if gap >= sync_gap {
            sync_gap = gap;
            sync_tolerance = vbar.cell_oscillation(a) + sbar.cell_oscillation(be);
        }
        alpha.push(a);
        beta.push(be);
        u.push(p.u.eval_in_span(a));
        w.push(p.w.eval_in_span(a));
        l.push(bundle.l.eval_in_span(a));
        b.push(bbar.eval_in_span(be));
    }
    // left-point sum for Y = ∫ −sign₀(L + W) dB
    let mut y = Vec::with_capacity(m);
    let mut acc = 0.0;
    y.push(acc);
    for j in 0..m - 1 {
        acc -= pathkit::sign_zero(l[j] + w[j]) * (b[j + 1] - b[j]);
        y.push(acc);
    }
    let v: Vec<f64> = y.iter().zip(&w).map(|(y, w)| y + w).collect();
    let path = |values: Vec<f64>| SamplePath::from_parts(times.clone(), values);
    debug_assert!(times.windows(2).all(|w| w[1] > w[0]));
    Ok(AssembledPair {
        bbar,
        sbar,
        alpha: MonotoneClock::new(path(alpha))?,
        beta: MonotoneClock::new(path(beta))?,
        u: path(u),
        w: path(w),
        l: path(l),
        b: path(b),
        y: path(y),
        v: path(v),
        sync_gap,
        sync_tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(times: &[f64], values: &[f64]) -> SamplePath {
        SamplePath::new(times.to_vec(), values.to_vec()).unwrap()
    }

    fn grid_path(n: usize, t_end: f64, f: impl Fn(f64) -> f64) -> SamplePath {
        let g = GridSpec::new(t_end, n).unwrap();
        let times = g.times();
        let values = times.iter().map(|&t| f(t)).collect();
        SamplePath::new(times, values).unwrap()
    }

    #[test]
    fn chord_examples() {
        let w = grid_path(4, 1.0, |t| 3.0 * t - 1.0);
        let zero = grid_path(4, 1.0, |_| 0.0);
        assert_eq!(zero_interpolant(&zero, &w).unwrap(), w.map(|v| -v));

        let u = path(&[0.0, 0.5, 1.0], &[0.0, 1.0, 0.0]);
        let w = path(&[0.0, 0.5, 1.0], &[0.0, 7.0, 2.0]);
        let k = zero_interpolant(&u, &w).unwrap();
        assert_eq!(k.values(), &[0.0, -1.0, -2.0]);

        // zero inside a cell, then constant after the last zero
        let u = path(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, -1.0, -2.0]);
        let w = path(&[0.0, 1.0, 2.0, 3.0], &[0.0, 0.0, 2.0, 5.0]);
        let k = zero_interpolant(&u, &w).unwrap();
        // zeros at 0 and 1.5 with W(1.5) = 1
        assert_eq!(k.values(), &[0.0, -2.0 / 3.0, -1.0, -1.0]);

        let positive = path(&[0.0, 1.0], &[1.0, 2.0]);
        assert!(zero_interpolant(&positive, &positive).is_err());
    }

    #[test]
    fn census_examples() {
        let zero = grid_path(4, 1.0, |_| 0.0);
        let w = grid_path(4, 1.0, |t| t * t);
        let k = zero_interpolant(&zero, &w).unwrap();
        let c = cone_census(&k, &w, &zero).unwrap();
        assert_eq!(
            (c.total_excursions, c.violating_count(), c.max_overshoot),
            (0, 0, 0.0)
        );

        // one excursion on (0, 1) where K + W vanishes
        let u = grid_path(10, 1.0, |t| t * (1.0 - t));
        let w = grid_path(10, 1.0, |t| 2.0 * t);
        let k = zero_interpolant(&u, &w).unwrap();
        let c = cone_census(&k, &w, &u).unwrap();
        assert_eq!((c.total_excursions, c.violating_count()), (1, 0));

        // bend W inside the excursion beyond |U|
        let w = grid_path(10, 1.0, |t| if (t - 0.5).abs() < 0.05 { 1.0 } else { 0.0 });
        let k = zero_interpolant(&u, &w).unwrap();
        let c = cone_census(&k, &w, &u).unwrap();
        assert_eq!(c.violating_count(), 1);
        assert!((c.max_overshoot - 0.75).abs() < 1e-12);
    }

    #[test]
    fn envelope_examples() {
        let zero = grid_path(8, 1.0, |_| 0.0);
        let w = grid_path(8, 1.0, |t| (5.0 * t).sin());
        assert_eq!(envelope_process(&zero, &w).unwrap(), w.map(|v| -v));
        let u = grid_path(8, 1.0, |t| (7.0 * t).sin());
        assert!(envelope_process(&u, &zero)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        let shifted = grid_path(8, 1.0, |t| 1.0 + t);
        assert!(matches!(
            envelope_process(&shifted, &w),
            Err(Error::Envelope(_))
        ));
    }

    #[test]
    fn residuals_of_trivial_bundle_vanish() {
        let zero = grid_path(8, 1.0, |_| 0.0);
        let r = verify_identities(&zero, &zero, &zero).unwrap();
        assert_eq!(
            (r.local_time, r.overshoot, r.frozen_fraction),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn built_pair_respects_the_cone() {
        let b = CounterexampleBundle::build(
            SeedSpec::new(3, 0),
            GridSpec::new(1.0, 4096).unwrap(),
            12.0,
        )
        .unwrap();
        assert_eq!(b.pair.u.first_value(), 0.0);
        let r = b.residuals().unwrap();
        // node-wise the envelope holds up to rounding
        let node_overshoot =
            b.l.values()
                .iter()
                .zip(b.pair.w.values())
                .zip(b.pair.u.values())
                .map(|((l, w), u)| (l + w).abs() - u.abs())
                .fold(0.0, f64::max);
        assert!(node_overshoot < 1e-12);
        assert!(r.overshoot.is_finite());
        assert!(LocalTimeCurve::new(b.vbar.path().clone()).is_ok());
    }

    #[test]
    fn time_change_matches_quadratic_variation_on_average() {
        // η(t_j) are stopping times for Ū, so E Σ(ΔU)² = E η. Pathwise the
        // match is loose for large κ: the clock stalls while Ū is near 0.
        for kappa in [0.0, 2.0, 12.0] {
            let diffs: Vec<f64> = (0..40)
                .map(|r| {
                    let p = build_pair(
                        SeedSpec::new(5, r),
                        GridSpec::new(1.0, 4096).unwrap(),
                        kappa,
                    )
                    .unwrap();
                    pathkit::quadratic_variation(&p.u).final_value() - p.eta.final_value()
                })
                .collect();
            let (m, se) = (crate::stats::mean(&diffs), crate::stats::std_error(&diffs));
            assert!(m.abs() <= 3.0 * se, "κ={kappa}: mean {m}, se {se}");
        }
    }

    #[test]
    fn subsampled_pair_is_nested() {
        let p = build_pair(SeedSpec::new(8, 0), GridSpec::new(1.0, 1024).unwrap(), 12.0).unwrap();
        let q = p.subsample(4).unwrap();
        assert_eq!(q.u.len(), 257);
        assert_eq!(q.u.values()[1], p.u.values()[4]);
    }

    #[test]
    fn assembly_with_silent_brownian_freezes() {
        let b = CounterexampleBundle::build(
            SeedSpec::new(4, 0),
            GridSpec::new(1.0, 512).unwrap(),
            12.0,
        )
        .unwrap();
        let bbar =
            SamplePath::new(GridSpec::new(4.0, 2048).unwrap().times(), vec![0.0; 2049]).unwrap();
        let a = assemble_pair_with(&b, bbar).unwrap();
        assert!(a.alpha.path().values().iter().all(|&x| x == 0.0));
        assert!(a.u.values().iter().all(|&x| x == 0.0));
        assert!(a.v.values().iter().all(|&x| x == b.pair.w.first_value()));
    }

    #[test]
    fn assembly_splits_time_exactly() {
        let b = CounterexampleBundle::build(
            SeedSpec::new(6, 2),
            GridSpec::new(1.0, 2048).unwrap(),
            12.0,
        )
        .unwrap();
        let a = assemble_pair(&b, SeedSpec::new(6, 2)).unwrap();
        for ((&t, &x), &y) in
            a.u.times()
                .iter()
                .zip(a.alpha.path().values())
                .zip(a.beta.path().values())
        {
            assert_eq!(x + y, t);
        }
        assert!(a.sync_gap <= a.sync_tolerance + 1e-12);
        let (al, be) = (a.alpha.path().values(), a.beta.path().values());
        let dt = a.u.times()[1];
        for j in 0..al.len() - 1 {
            assert!(
                al[j + 1] - al[j] <= dt * (1.0 + 1e-9) && be[j + 1] - be[j] <= dt * (1.0 + 1e-9)
            );
        }
    }
}
