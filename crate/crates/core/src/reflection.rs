//! Two-sided reflection of a path between a lower and an upper barrier,
//! total variation, and the synchronization of two clocks.
//!
//! For barriers `f ≤ g` with `f(0) = g(0)` the reflected path `h` is the
//! unique continuous function with `f ≤ h ≤ g` that only increases while it
//! sits on `f` and only decreases while it sits on `g`. It has the backward
//! representation `h(t) = F(d(t), t) = G(d(t), t)` with
//! `F(s, t) = max f|[s,t]`, `G(s, t) = min g|[s,t]` and
//! `d(t) = sup{s ≤ t : F(s, t) ≥ G(s, t)}`.

use crate::error::{Error, Result};
use crate::pathkit::{self, SamplePath};

/// Lower and upper barriers on a shared grid, pinched at the start.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeEnvelope {
    lower: SamplePath,
    upper: SamplePath,
}

impl ConeEnvelope {
    pub fn new(lower: SamplePath, upper: SamplePath) -> Result<Self> {
        lower.check_same_grid(&upper)?;
        if lower.first_value() != upper.first_value() {
            return Err(Error::Envelope(format!(
                "barriers start apart: lower(0) = {}, upper(0) = {}",
                lower.first_value(),
                upper.first_value()
            )));
        }
        if let Some(i) = lower
            .values()
            .iter()
            .zip(upper.values())
            .position(|(f, g)| f > g)
        {
            return Err(Error::Envelope(format!(
                "lower barrier above upper barrier at node {i} (t = {})",
                lower.times()[i]
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> &SamplePath {
        &self.lower
    }

    pub fn upper(&self) -> &SamplePath {
        &self.upper
    }

    pub fn times(&self) -> &[f64] {
        self.lower.times()
    }

    /// Whether `h` lies between the barriers at every node and starts at the
    /// pinch point.
    pub fn admits(&self, h: &SamplePath) -> bool {
        self.lower.same_grid(h)
            && h.first_value() == self.lower.first_value()
            && h.values()
                .iter()
                .zip(self.lower.values().iter().zip(self.upper.values()))
                .all(|(x, (f, g))| f <= x && x <= g)
    }
}

/// A nondecreasing path; used as a time change.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneClock(SamplePath);

impl MonotoneClock {
    pub fn new(path: SamplePath) -> Result<Self> {
        if let Some(i) = path.values().windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Clock(format!(
                "clock decreases between t = {} and t = {}",
                path.times()[i],
                path.times()[i + 1]
            )));
        }
        Ok(Self(path))
    }

    pub fn path(&self) -> &SamplePath {
        &self.0
    }

    pub fn into_path(self) -> SamplePath {
        self.0
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.0.eval(t)
    }

    pub fn start(&self) -> f64 {
        self.0.start()
    }

    pub fn end(&self) -> f64 {
        self.0.end()
    }

    pub fn final_value(&self) -> f64 {
        self.0.last_value()
    }

    /// `inf{t : clock(t) > level}`, if the clock gets there.
    pub fn first_exceedance(&self, level: f64) -> Option<f64> {
        pathkit::first_exceedance(&self.0, level)
    }

    /// Increase of the clock across the grid cell containing `t`.
    pub fn cell_oscillation(&self, t: f64) -> f64 {
        let times = self.0.times();
        let v = self.0.values();
        let i = times.partition_point(|&x| x <= t).clamp(1, times.len() - 1);
        v[i] - v[i - 1]
    }
}

impl From<pathkit::LocalTimeCurve> for MonotoneClock {
    fn from(curve: pathkit::LocalTimeCurve) -> Self {
        Self(curve.into_path())
    }
}

/// `(max f, min g)` over `[s, t]` for the interpolated paths.
pub fn running_envelope(f: &SamplePath, g: &SamplePath, s: f64, t: f64) -> Result<(f64, f64)> {
    f.check_same_grid(g)?;
    if s > t {
        return Err(Error::Argument(format!(
            "interval start {s} exceeds end {t}"
        )));
    }
    let mut big_f = f.eval(s)?.max(f.eval(t)?);
    let mut big_g = g.eval(s)?.min(g.eval(t)?);
    let times = f.times();
    let lo = times.partition_point(|&x| x <= s);
    let hi = times.partition_point(|&x| x < t);
    for i in lo..hi {
        big_f = big_f.max(f.values()[i]);
        big_g = big_g.min(g.values()[i]);
    }
    Ok((big_f, big_g))
}

/// Result of the backward scan from a single time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backtrack {
    /// The backtrack point `d(t)`.
    pub d: f64,
    /// `F(d, t)` evaluated from the interpolated barrier.
    pub big_f: f64,
    /// `G(d, t)` evaluated from the interpolated barrier.
    pub big_g: f64,
    /// The common value, taken from the barrier node that determines it.
    pub value: f64,
}

/// Backward scan from `t` to the last time the running max of the lower
/// barrier meets the running min of the upper one. Ties go to the later
/// time. Cost is linear in the number of cells crossed.
pub fn backtrack(env: &ConeEnvelope, t: f64) -> Result<Backtrack> {
    let f = &env.lower;
    let g = &env.upper;
    let (ft, gt) = (f.eval(t)?, g.eval(t)?);
    if ft >= gt {
        return Ok(Backtrack {
            d: t,
            big_f: ft,
            big_g: gt,
            value: gt,
        });
    }
    let times = f.times();
    let (fv, gv) = (f.values(), g.values());
    let mut fmax = ft;
    let mut gmin = gt;
    // cells [times[j], b] with b = t for the first (possibly partial) cell
    let mut j = times.partition_point(|&x| x < t);
    let (mut b, mut fb, mut gb) = (t, ft, gt);
    while j > 0 {
        j -= 1;
        let (a, fa, ga) = (times[j], fv[j], gv[j]);
        if a < b {
            // On [a, b]: F(s,t) = max(fmax, f(s)), G(s,t) = min(gmin, g(s)).
            // Each way F ≥ G can first hold is a linear inequality that fails
            // at b; the latest root among those holding at a wins.
            let mut best: Option<(f64, f64)> = None;
            let mut consider = |phi_a: f64, phi_b: f64, value: f64| {
                if phi_a >= 0.0 {
                    let s = root(a, phi_a, b, phi_b);
                    if best.is_none_or(|(bs, _)| s > bs) {
                        best = Some((s, value));
                    }
                }
            };
            consider(fmax - ga, fmax - gb, fmax);
            consider(fa - gmin, fb - gmin, gmin);
            if fa >= ga {
                // barriers touch at a node
                consider(0.0, -1.0, fa);
            }
            if let Some((s, value)) = best {
                let big_f = fmax.max(pathkit::lerp(a, fa, b, fb, s));
                let big_g = gmin.min(pathkit::lerp(a, ga, b, gb, s));
                return Ok(Backtrack {
                    d: s,
                    big_f,
                    big_g,
                    value,
                });
            }
        }
        fmax = fmax.max(fa);
        gmin = gmin.min(ga);
        b = a;
        fb = fa;
        gb = ga;
    }
    // Unreachable for a valid envelope: the pinch at the start always meets
    // the condition. Fall back to it for robustness.
    Ok(Backtrack {
        d: times[0],
        big_f: fmax,
        big_g: gmin,
        value: fv[0],
    })
}

/// Zero of the chord through `(a, pa)` and `(b, pb)` where `pa ≥ 0 > pb`.
fn root(a: f64, pa: f64, b: f64, pb: f64) -> f64 {
    if pa == 0.0 {
        return a;
    }
    (a + pa / (pa - pb) * (b - a)).clamp(a, b)
}

/// `d(t)`: the last time before `t` where the running extremes cross.
pub fn backtrack_index(env: &ConeEnvelope, t: f64) -> Result<f64> {
    Ok(backtrack(env, t)?.d)
}

/// Reflected path computed node by node with the backward scan.
/// Quadratic in the worst case; serves as the reference implementation.
pub fn reflection_map_by_backtracking(env: &ConeEnvelope) -> Result<SamplePath> {
    let values = env
        .times()
        .iter()
        .map(|&t| backtrack(env, t).map(|b| b.value))
        .collect::<Result<Vec<_>>>()?;
    Ok(SamplePath::from_parts(env.times().to_vec(), values))
}

/// Reflected path on the grid of `env`, in one forward pass.
///
/// Between nodes both barriers are linear, so the reflected path holds its
/// level until one barrier reaches it and then follows that barrier to the
/// end of the cell. Its node values therefore obey
/// `h[i+1] = min(g[i+1], max(f[i+1], h[i]))`, which is exact.
pub fn reflection_map(env: &ConeEnvelope) -> SamplePath {
    let f = env.lower.values();
    let g = env.upper.values();
    let mut h = Vec::with_capacity(f.len());
    let mut cur = f[0];
    h.push(cur);
    for i in 1..f.len() {
        cur = g[i].min(f[i].max(cur));
        h.push(cur);
    }
    SamplePath::from_parts(env.times().to_vec(), h)
}

pub fn total_variation(path: &SamplePath) -> f64 {
    path.values().windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Total variation of the reflected path next to that of another admissible
/// path in the same envelope.
pub fn minimality_witness(env: &ConeEnvelope, h_alt: &SamplePath) -> Result<(f64, f64)> {
    env.lower.check_same_grid(h_alt)?;
    if !env.admits(h_alt) {
        return Err(Error::Envelope(
            "alternative path leaves the envelope".into(),
        ));
    }
    Ok((
        total_variation(&reflection_map(env)),
        total_variation(h_alt),
    ))
}

/// Splits `t` into `α + β` with `vbar(α) = sbar(β)`.
///
/// `α` is the leftmost zero of the nondecreasing map
/// `u ↦ vbar(u) − sbar(t − u)`: a search over the breakpoints of both clocks
/// isolates the linear piece holding it, then bisection. The returned pair
/// satisfies `α + β == t` in floating point.
pub fn synchronize_clocks(
    vbar: &MonotoneClock,
    sbar: &MonotoneClock,
    t: f64,
) -> Result<(f64, f64)> {
    for (name, c) in [("first", vbar), ("second", sbar)] {
        if c.start() != 0.0 || c.path().first_value() != 0.0 {
            return Err(Error::Clock(format!(
                "{name} clock does not start at (0, 0)"
            )));
        }
    }
    if !(t >= 0.0) {
        return Err(Error::Argument(format!("time {t} must be >= 0")));
    }
    let lo = (t - sbar.end()).max(0.0);
    let hi = t.min(vbar.end());
    if lo > hi {
        return Err(Error::Horizon {
            required: t,
            attained: vbar.end() + sbar.end(),
        });
    }
    let phi = |u: f64| vbar.0.eval_in_span(u) - sbar.0.eval_in_span((t - u).clamp(0.0, sbar.end()));
    let alpha = if phi(lo) >= 0.0 {
        if lo > 0.0 && phi(lo) > 0.0 {
            return Err(Error::Horizon {
                required: t,
                attained: sbar.end(),
            });
        }
        lo
    } else {
        if phi(hi) < 0.0 {
            return Err(Error::Horizon {
                required: t,
                attained: vbar.end(),
            });
        }
        let (vt, vv) = (vbar.0.times(), vbar.0.values());
        let (st, sv) = (sbar.0.times(), sbar.0.values());
        // first node of vbar, then of sbar (read backwards), past the zero
        let k0 = vt.partition_point(|&x| x <= lo);
        let k1 = vt.partition_point(|&x| x < hi).max(k0);
        let k = k0 + vt[k0..k1].partition_point(|&u| phi(u) < 0.0);
        let (a, b) = (
            if k > k0 { vt[k - 1] } else { lo },
            if k < k1 { vt[k] } else { hi },
        );
        let j0 = st.partition_point(|&x| x <= t - b);
        let j1 = st.partition_point(|&x| x < t - a).max(j0);
        let m = j0 + st[j0..j1].partition_point(|&s| phi(t - s) >= 0.0);
        let a = if m < j1 { (t - st[m]).max(a) } else { a };
        let b = if m > j0 { (t - st[m - 1]).min(b) } else { b };
        // both clocks are linear on [a, b]
        let iv = k.saturating_sub(1).min(vt.len() - 2);
        let js = m.saturating_sub(1).min(st.len() - 2);
        let lin = |u: f64| {
            pathkit::lerp(vt[iv], vv[iv], vt[iv + 1], vv[iv + 1], u)
                - pathkit::lerp(st[js], sv[js], st[js + 1], sv[js + 1], t - u)
        };
        let (mut a, mut b) = (a, b);
        loop {
            let m = 0.5 * (a + b);
            if !(m > a && m < b) {
                break b;
            }
            if lin(m) >= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
    };
    // One of the two subtractions is exact, so the pair sums to t exactly.
    let mut beta = t - alpha;
    // keep both parts inside their clocks' domains despite rounding
    while beta > sbar.end() && t - beta < hi {
        beta = beta.next_down();
    }
    while t - beta > hi && beta < sbar.end().min(t) {
        beta = beta.next_up();
    }
    Ok((t - beta, beta))
}
