//! Seeded Brownian motion, bridge and excursion paths, and the two time
//! changes built on quadratic-variation style clocks.
//!
//! Every sample is a pure function of a [`SeedSpec`]: a ChaCha8 stream keyed
//! by the seed and selected by the stream index. Gaussians are drawn with the
//! ziggurat sampler of `rand_distr::StandardNormal`; the versions are pinned
//! by the lockfile so fixtures stay bit-exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pathkit::{quadratic_variation, SamplePath};
use crate::reflection::MonotoneClock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// An independent key for a named sub-component of one replica, e.g.
    /// the second Brownian motion. Keeps the stream index.
    pub fn lane(&self, lane: u64) -> SeedSpec {
        SeedSpec {
            seed: splitmix64(self.seed ^ splitmix64(lane.wrapping_add(1))),
            stream_index: self.stream_index,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Uniform grid `0 = t_0 < … < t_n = t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_end: f64,
    pub n_steps: usize,
}

impl GridSpec {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::Argument(format!(
                "grid end {t_end} must be positive"
            )));
        }
        if n_steps < 2 {
            return Err(Error::Argument(format!(
                "grid needs at least 2 steps, got {n_steps}"
            )));
        }
        Ok(Self { t_end, n_steps })
    }

    /// Grid on `[0, t_end]` with mesh at most `mesh`.
    pub fn with_mesh(t_end: f64, mesh: f64) -> Result<Self> {
        if !(mesh > 0.0) {
            return Err(Error::Argument(format!("mesh {mesh} must be positive")));
        }
        Self::new(t_end, ((t_end / mesh).round() as usize).max(2))
    }

    pub fn mesh(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    /// The last node is exactly `t_end`.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps)
            .map(|i| self.t_end * (i as f64 / self.n_steps as f64))
            .collect()
    }
}

/// Standard normal draws from a seeded stream.
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn new(seed: SeedSpec) -> Self {
        Self { rng: seed.rng() }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Brownian increments over steps of length `dt`, appended to `values`
    /// starting from its last entry.
    pub fn extend_brownian(&mut self, values: &mut Vec<f64>, dt: f64, steps: usize) {
        let sd = dt.sqrt();
        let mut x = *values.last().expect("path must have a starting value");
        values.reserve(steps);
        for _ in 0..steps {
            x += sd * self.next();
            values.push(x);
        }
    }
}

pub fn brownian(seed: SeedSpec, grid: GridSpec) -> SamplePath {
    let mut values = vec![0.0];
    GaussianStream::new(seed).extend_brownian(&mut values, grid.mesh(), grid.n_steps);
    SamplePath::from_parts(grid.times(), values)
}

/// `B_t − (t / T) B_T` on `[0, T]`.
pub fn brownian_bridge(seed: SeedSpec, grid: GridSpec) -> SamplePath {
    pin(brownian(seed, grid))
}

fn pin(b: SamplePath) -> SamplePath {
    let t_end = b.end();
    let b_end = b.last_value();
    let values = b
        .times()
        .iter()
        .zip(b.values())
        .map(|(&t, &v)| v - (t / t_end) * b_end)
        .collect();
    SamplePath::from_parts(b.times().to_vec(), values)
}

/// Euclidean norm of three independent bridges: a three-dimensional Bessel
/// bridge, which is a Brownian excursion in law.
pub fn brownian_excursion(seed: SeedSpec, grid: GridSpec) -> SamplePath {
    let bridges: Vec<SamplePath> = (0..3)
        .map(|k| brownian_bridge(seed.lane(k), grid))
        .collect();
    let values = (0..=grid.n_steps)
        .map(|i| {
            bridges
                .iter()
                .map(|b| b.values()[i].powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    SamplePath::from_parts(grid.times(), values)
}

/// `inf{s : clock(s) ≥ level}` for each of the nondecreasing `levels`,
/// interpolating the clock linearly inside cells.
fn first_passages(
    times: &[f64],
    clock: &[f64],
    levels: impl IntoIterator<Item = f64>,
) -> std::result::Result<Vec<(f64, usize)>, f64> {
    let mut out = Vec::new();
    let mut k = 0;
    for level in levels {
        while k < clock.len() && clock[k] < level {
            k += 1;
        }
        if k == clock.len() {
            return Err(level);
        }
        if k == 0 {
            out.push((times[0], 0));
        } else {
            let (c0, c1) = (clock[k - 1], clock[k]);
            let s = times[k - 1] + (level - c0) / (c1 - c0) * (times[k] - times[k - 1]);
            out.push((s.min(times[k]), k - 1));
        }
    }
    Ok(out)
}

/// Trapezoid integral of `|path|^κ`, with `κ = 0` giving the time itself.
pub fn power_clock(path: &SamplePath, kappa: f64) -> Vec<f64> {
    if kappa == 0.0 {
        let t0 = path.start();
        return path.times().iter().map(|&t| t - t0).collect();
    }
    let t = path.times();
    let v = path.values();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(v.len());
    out.push(0.0);
    for i in 1..v.len() {
        acc += 0.5 * (v[i - 1].abs().powf(kappa) + v[i].abs().powf(kappa)) * (t[i] - t[i - 1]);
        out.push(acc);
    }
    out
}

/// Runs `ubar` on the clock `η = inverse of ∫|ubar|^κ`, read at the target
/// grid: `U_t = ubar(η(t))`, with `ubar` interpolated linearly.
pub fn power_time_change(
    ubar: &SamplePath,
    kappa: f64,
    target: GridSpec,
) -> Result<(SamplePath, MonotoneClock)> {
    time_change(ubar, kappa, target, None)
}

/// As [`power_time_change`], but reads `ubar` between its nodes by sampling
/// the Brownian bridge pinned at the neighbouring nodes instead of
/// interpolating. Needed when many target nodes fall inside one source cell,
/// where linear reading would flatten the quadratic variation of `U`.
pub fn power_time_change_refined(
    ubar: &SamplePath,
    kappa: f64,
    target: GridSpec,
    seed: SeedSpec,
) -> Result<(SamplePath, MonotoneClock)> {
    time_change(ubar, kappa, target, Some(seed))
}

fn time_change(
    ubar: &SamplePath,
    kappa: f64,
    target: GridSpec,
    refine: Option<SeedSpec>,
) -> Result<(SamplePath, MonotoneClock)> {
    if !(kappa >= 0.0) {
        return Err(Error::Argument(format!("exponent {kappa} must be >= 0")));
    }
    let clock = power_clock(ubar, kappa);
    let times = target.times();
    let passages =
        first_passages(ubar.times(), &clock, times.iter().copied()).map_err(|level| {
            Error::Horizon {
                required: level,
                attained: *clock.last().unwrap(),
            }
        })?;
    let eta: Vec<f64> = passages.iter().map(|p| p.0).collect();
    let values = match refine {
        None => eta.iter().map(|&s| ubar.eval_in_span(s)).collect(),
        Some(seed) => bridge_reads(ubar, &passages, seed),
    };
    let eta = MonotoneClock::new(SamplePath::from_parts(times.clone(), eta))?;
    Ok((SamplePath::from_parts(times, values), eta))
}

/// Reads `ubar` at increasing times by sequential conditional sampling of
/// the bridge inside each source cell.
fn bridge_reads(ubar: &SamplePath, passages: &[(f64, usize)], seed: SeedSpec) -> Vec<f64> {
    let (st, sv) = (ubar.times(), ubar.values());
    let mut normals = GaussianStream::new(seed);
    let mut out = Vec::with_capacity(passages.len());
    // last point read inside the current cell
    let mut cell = usize::MAX;
    let (mut s_prev, mut u_prev) = (0.0, 0.0);
    for &(s, i) in passages {
        if i != cell {
            cell = i;
            s_prev = st[i];
            u_prev = sv[i];
        }
        let (s_next, u_next) = (st[i + 1], sv[i + 1]);
        let u = if s <= s_prev {
            u_prev
        } else if s >= s_next {
            u_next
        } else {
            let w = (s - s_prev) / (s_next - s_prev);
            let mean = u_prev + w * (u_next - u_prev);
            let var = (s - s_prev) * (s_next - s) / (s_next - s_prev);
            mean + var.sqrt() * normals.next()
        };
        s_prev = s;
        u_prev = u;
        out.push(u);
    }
    out
}

/// Runs `m` on the inverse of its quadratic variation, on a uniform grid of
/// `[0, ⟨m⟩_end]` with as many steps as `m` has cells.
pub fn dds_transform(m: &SamplePath) -> Result<SamplePath> {
    let qv = quadratic_variation(m);
    let total = qv.final_value();
    if !(total > 0.0) {
        return Err(Error::Clock(
            "quadratic variation vanishes identically".into(),
        ));
    }
    let grid = GridSpec::new(total, (m.len() - 1).max(2))?;
    let times = grid.times();
    let passages =
        first_passages(m.times(), qv.path().values(), times.iter().copied()).map_err(|level| {
            Error::Horizon {
                required: level,
                attained: total,
            }
        })?;
    let values = passages.iter().map(|&(s, _)| m.eval_in_span(s)).collect();
    Ok(SamplePath::from_parts(times, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn grid(t_end: f64, n: usize) -> GridSpec {
        GridSpec::new(t_end, n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(0.0, 10).is_err());
        assert!(GridSpec::new(1.0, 1).is_err());
        let g = grid(3.0, 7);
        assert_eq!(*g.times().last().unwrap(), 3.0);
        assert_eq!(g.times().len(), 8);
    }

    #[test]
    fn paths_are_deterministic() {
        let s = SeedSpec::new(42, 3);
        assert_eq!(brownian(s, grid(1.0, 100)), brownian(s, grid(1.0, 100)));
        assert_ne!(
            brownian(s, grid(1.0, 100)),
            brownian(SeedSpec::new(42, 4), grid(1.0, 100))
        );
        assert_ne!(s.lane(0), s.lane(1));
        assert_eq!(s.lane(5).stream_index, 3);
    }

    #[test]
    fn brownian_starts_at_zero() {
        for k in 0..20 {
            assert_eq!(
                brownian(SeedSpec::new(k, k), grid(2.0, 10)).first_value(),
                0.0
            );
        }
    }

    #[test]
    fn brownian_terminal_variance() {
        let ends: Vec<f64> = (0..10_000)
            .map(|k| brownian(SeedSpec::new(7, k), grid(1.0, 16)).last_value())
            .collect();
        let sq: Vec<f64> = ends.iter().map(|x| x * x).collect();
        assert!((stats::mean(&sq) - 1.0).abs() <= 3.0 * stats::std_error(&sq));
    }

    #[test]
    fn disjoint_increments_uncorrelated() {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for k in 0..10_000 {
            let p = brownian(SeedSpec::new(11, k), grid(1.0, 8));
            let v = p.values();
            a.push(v[4] - v[0]);
            b.push(v[8] - v[4]);
        }
        let prods: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        assert!(stats::mean(&prods).abs() <= 3.0 * stats::std_error(&prods));
    }

    #[test]
    fn streams_are_uncorrelated() {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for k in 0..5_000 {
            a.push(brownian(SeedSpec::new(13, 2 * k), grid(1.0, 4)).last_value());
            b.push(brownian(SeedSpec::new(13, 2 * k + 1), grid(1.0, 4)).last_value());
        }
        let prods: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        assert!(stats::mean(&prods).abs() <= 3.0 * stats::std_error(&prods));
    }

    #[test]
    fn bridge_moments() {
        let mut mid = Vec::new();
        for k in 0..10_000 {
            let b = brownian_bridge(SeedSpec::new(17, k), grid(1.0, 16));
            assert_eq!(b.first_value(), 0.0);
            assert_eq!(b.last_value(), 0.0);
            mid.push(b.values()[8].powi(2));
        }
        assert!((stats::mean(&mid) - 0.25).abs() <= 3.0 * stats::std_error(&mid));
    }

    #[test]
    fn bridge_plus_independent_endpoint_is_brownian_at_one_half() {
        // B_{1/2} = bridge_{1/2} + B_1 / 2 with B_1 independent of the bridge
        let mut xs = Vec::new();
        for k in 0..10_000 {
            let s = SeedSpec::new(19, k);
            let b = brownian_bridge(s, grid(1.0, 16)).values()[8];
            let z = GaussianStream::new(s.lane(9)).next();
            xs.push((b + 0.5 * z).powi(2));
        }
        assert!((stats::mean(&xs) - 0.5).abs() <= 3.0 * stats::std_error(&xs));
    }

    #[test]
    fn excursion_shape_and_mean() {
        let mut mid = Vec::new();
        for k in 0..10_000 {
            let e = brownian_excursion(SeedSpec::new(23, k), grid(1.0, 16));
            assert_eq!(e.first_value(), 0.0);
            assert_eq!(e.last_value(), 0.0);
            assert!(e.values().iter().all(|&v| v >= 0.0));
            mid.push(e.values()[8]);
        }
        // E(1/2)·χ₃ with χ₃ sampled directly as a norm of three normals
        let mut g = GaussianStream::new(SeedSpec::new(29, 0));
        let chi: Vec<f64> = (0..100_000)
            .map(|_| 0.5 * (g.next().powi(2) + g.next().powi(2) + g.next().powi(2)).sqrt())
            .collect();
        let target = stats::mean(&chi);
        assert!((target - 0.797_884_560_802_865_4).abs() < 0.01);
        assert!(
            (stats::mean(&mid) - target).abs()
                <= 3.0 * stats::std_error(&mid) + 3.0 * stats::std_error(&chi)
        );
    }

    #[test]
    fn time_change_with_unit_exponent_is_resampling() {
        let ubar = brownian(SeedSpec::new(31, 0), grid(2.0, 2000));
        let (u, eta) = power_time_change(&ubar, 0.0, grid(1.0, 100)).unwrap();
        for (i, &t) in u.times().iter().enumerate() {
            assert!((eta.path().values()[i] - t).abs() < 1e-12);
            assert!((u.values()[i] - ubar.eval(t).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn time_change_closed_forms() {
        let constant = SamplePath::new(grid(4.0, 400).times(), vec![2.0; 401]).unwrap();
        let (u, eta) = power_time_change(&constant, 1.0, grid(1.0, 10)).unwrap();
        assert!(u.values().iter().all(|&v| v == 2.0));
        for (&t, &e) in u.times().iter().zip(eta.path().values()) {
            assert!((e - t / 2.0).abs() < 1e-12);
        }
        let g = grid(3.0, 30_000);
        let ramp = SamplePath::new(g.times(), g.times()).unwrap();
        let (u, eta) = power_time_change(&ramp, 2.0, grid(2.0, 20)).unwrap();
        for ((&t, &e), &v) in u.times().iter().zip(eta.path().values()).zip(u.values()) {
            let exact = (3.0 * t).cbrt();
            assert!((e - exact).abs() < 1e-6, "t={t} eta={e} exact={exact}");
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn time_change_horizon_error() {
        let ubar = brownian(SeedSpec::new(37, 0), grid(0.5, 100));
        match power_time_change(&ubar, 0.0, grid(1.0, 10)) {
            Err(Error::Horizon { attained, .. }) => assert!((attained - 0.5).abs() < 1e-12),
            other => panic!("expected horizon error, got {other:?}"),
        }
    }

    #[test]
    fn refined_reads_keep_quadratic_variation() {
        // Many target nodes per source cell: linear reads lose the variance,
        // bridge reads keep ⟨U⟩ = η.
        let ubar = brownian(SeedSpec::new(41, 0), grid(4.0, 64));
        let target = grid(1.0, 20_000);
        let (lin, eta) = power_time_change(&ubar, 0.0, target).unwrap();
        let (fine, _) =
            power_time_change_refined(&ubar, 0.0, target, SeedSpec::new(41, 1)).unwrap();
        let end = eta.final_value();
        let qv_fine = quadratic_variation(&fine).final_value();
        assert!((qv_fine - end).abs() < 0.1, "{qv_fine}");
        assert!(quadratic_variation(&lin).final_value() < 0.2);
        // refinement interpolates: values at source nodes are untouched
        assert_eq!(fine.values()[0], 0.0);
        let at_node = target.times().iter().position(|&t| t == 0.0625).unwrap();
        assert_eq!(fine.values()[at_node], ubar.values()[1]);
    }

    #[test]
    fn dds_rejects_constant() {
        let c = SamplePath::new(vec![0.0, 1.0, 2.0], vec![3.0; 3]).unwrap();
        assert!(dds_transform(&c).is_err());
    }

    #[test]
    fn dds_of_scaled_brownian_is_standard() {
        let mut ends = Vec::new();
        for k in 0..4_000 {
            let b = brownian(SeedSpec::new(43, k), grid(1.0, 400)).map(|v| 2.0 * v);
            let beta = dds_transform(&b).unwrap();
            assert_eq!(beta.first_value(), 0.0);
            assert_eq!(beta.len(), b.len());
            // QV of 2B on [0, 1] is close to 4; read β at 1
            ends.push(beta.eval(1.0).unwrap().powi(2));
        }
        assert!((stats::mean(&ends) - 1.0).abs() <= 3.0 * stats::std_error(&ends));
    }
}
