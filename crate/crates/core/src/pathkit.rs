//! Sampled continuous paths and the elementary functionals computed on them.
//!
//! A [`SamplePath`] is a continuous path observed on a finite, strictly
//! increasing time grid and interpolated linearly between nodes. Every
//! functional here is a pure function of the node values.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// A continuous path known at the nodes of a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidPath(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InvalidPath("a path needs at least two nodes".into()));
        }
        if !(times[0] >= 0.0) || !times[0].is_finite() {
            return Err(Error::InvalidPath(format!(
                "first time {} is not >= 0",
                times[0]
            )));
        }
        if let Some(w) = times
            .windows(2)
            .position(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(Error::InvalidPath(format!(
                "times not strictly increasing at index {}",
                w + 1
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPath(format!(
                "value at index {i} is not finite"
            )));
        }
        Ok(Self { times, values })
    }

    /// Path with the same grid as `self` and new node values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.times.len() {
            return Err(Error::GridMismatch {
                left: self.len(),
                right: values.len(),
            });
        }
        Self::new(self.times.clone(), values)
    }

    /// Caller guarantees the invariants (used for outputs derived from an
    /// already-valid grid).
    pub(crate) fn from_parts(times: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(times.len(), values.len());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { times, values }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn first_value(&self) -> f64 {
        self.values[0]
    }

    pub fn last_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn same_grid(&self, other: &SamplePath) -> bool {
        self.times == other.times
    }

    pub(crate) fn check_same_grid(&self, other: &SamplePath) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.len(),
                right: other.len(),
            })
        }
    }

    /// Linear interpolation of the node values at `t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= self.start() && t <= self.end()) {
            return Err(Error::OutOfRange {
                t,
                start: self.start(),
                end: self.end(),
            });
        }
        Ok(self.eval_in_span(t))
    }

    /// As [`eval`](Self::eval), for a `t` already known to be in range.
    pub(crate) fn eval_in_span(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&x| x <= t);
        if idx == 0 {
            return self.values[0];
        }
        let i = idx - 1;
        if i + 1 >= self.len() {
            return self.last_value();
        }
        lerp(
            self.times[i],
            self.values[i],
            self.times[i + 1],
            self.values[i + 1],
            t,
        )
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SamplePath {
        Self::from_parts(
            self.times.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn zip_with(&self, other: &SamplePath, f: impl Fn(f64, f64) -> f64) -> Result<SamplePath> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::from_parts(self.times.clone(), values))
    }

    /// Keeps every `stride`-th node; the last node is always kept.
    pub fn subsample(&self, stride: usize) -> Result<SamplePath> {
        if stride == 0 {
            return Err(Error::Argument("stride must be positive".into()));
        }
        let mut times = Vec::with_capacity(self.len() / stride + 2);
        let mut values = Vec::with_capacity(self.len() / stride + 2);
        for i in (0..self.len()).step_by(stride) {
            times.push(self.times[i]);
            values.push(self.values[i]);
        }
        if *times.last().unwrap() != self.end() {
            times.push(self.end());
            values.push(self.last_value());
        }
        Self::new(times, values)
    }

    /// The part of the path on `[start, t]`, with a node inserted at `t`.
    pub fn truncate(&self, t: f64) -> Result<SamplePath> {
        let v = self.eval(t)?;
        let keep = self.times.partition_point(|&x| x < t);
        let mut times = self.times[..keep].to_vec();
        let mut values = self.values[..keep].to_vec();
        times.push(t);
        values.push(v);
        if times.len() < 2 {
            return Err(Error::InvalidPath(format!(
                "truncation at {t} leaves a single node"
            )));
        }
        Self::new(times, values)
    }

    /// Writes the path as `time,value` CSV with a one-line header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time", "value"])?;
        for (t, v) in self.times.iter().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses the format produced by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "time" || &headers[1] != "value" {
            return Err(Error::InvalidPath(format!(
                "unexpected header {:?}",
                headers
            )));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::InvalidPath(format!(
                    "row {} has {} fields",
                    line + 1,
                    record.len()
                )));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidPath(format!("row {}: {e}", line + 1)))
            };
            times.push(parse(&record[0])?);
            values.push(parse(&record[1])?);
        }
        Self::new(times, values)
    }
}

#[inline]
pub(crate) fn lerp(t0: f64, v0: f64, t1: f64, v1: f64, t: f64) -> f64 {
    if t == t0 {
        return v0;
    }
    if t == t1 {
        return v1;
    }
    v0 + (t - t0) / (t1 - t0) * (v1 - v0)
}

/// Sign with the convention `sign(0) = -1`.
#[inline]
pub fn sign_paper(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign with `sign(0) = 0`.
#[inline]
pub fn sign_zero(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Median of three reals.
#[inline]
pub fn median3(a: f64, b: f64, c: f64) -> f64 {
    a.min(b).max(a.max(b).min(c))
}

/// `(v + |u|) ∧ 0 + (v − |u|) ∨ 0`.
#[inline]
pub fn median_split_form(u: f64, v: f64) -> f64 {
    (v + u.abs()).min(0.0) + (v - u.abs()).max(0.0)
}

/// `(|u| + v) ∧ 0 − (|u| − v) ∧ 0`.
#[inline]
pub fn median_difference_form(u: f64, v: f64) -> f64 {
    (u.abs() + v).min(0.0) - (u.abs() - v).min(0.0)
}

/// Pointwise `med(V + U, V − U, 0)`.
pub fn median_process(u: &SamplePath, v: &SamplePath) -> Result<SamplePath> {
    u.zip_with(v, |u, v| median3(v + u, v - u, 0.0))
}

/// A nondecreasing path starting at zero: quadratic variations and local
/// times.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeCurve(SamplePath);

impl LocalTimeCurve {
    pub fn new(path: SamplePath) -> Result<Self> {
        if path.first_value() != 0.0 {
            return Err(Error::InvalidPath(format!(
                "local-time curve starts at {} instead of 0",
                path.first_value()
            )));
        }
        if let Some(i) = path.values().windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidPath(format!(
                "local-time curve decreases at index {}",
                i + 1
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

    pub fn final_value(&self) -> f64 {
        self.0.last_value()
    }

    /// `inf{t : curve(t) > level}` on the interpolated curve, if attained.
    pub fn first_exceedance(&self, level: f64) -> Option<f64> {
        first_exceedance(&self.0, level)
    }
}

/// `inf{t : path(t) > level}` for a path with nondecreasing values.
pub(crate) fn first_exceedance(path: &SamplePath, level: f64) -> Option<f64> {
    let v = path.values();
    let t = path.times();
    let i = v.partition_point(|&x| x <= level);
    if i >= v.len() {
        return None;
    }
    if i == 0 {
        return Some(t[0]);
    }
    // v[i-1] <= level < v[i]
    Some(t[i - 1] + (level - v[i - 1]) / (v[i] - v[i - 1]) * (t[i] - t[i - 1]))
}

/// Cumulative sum of squared increments.
pub fn quadratic_variation(path: &SamplePath) -> LocalTimeCurve {
    let v = path.values();
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in v.windows(2) {
        let d = w[1] - w[0];
        acc += d * d;
        out.push(acc);
    }
    LocalTimeCurve(SamplePath::from_parts(path.times().to_vec(), out))
}

/// Local time at zero from the discrete Tanaka formula
/// `|X_t| − |X_0| − Σ sign(X_i)(X_{i+1} − X_i)`, exported as its running
/// maximum so the result is a valid clock.
pub fn local_time_zero(path: &SamplePath) -> LocalTimeCurve {
    let v = path.values();
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0_f64;
    let mut running = 0.0_f64;
    out.push(0.0);
    for w in v.windows(2) {
        let (x, y) = (w[0], w[1]);
        acc += (y.abs() - x.abs()) - sign_paper(x) * (y - x);
        running = running.max(acc);
        out.push(running);
    }
    LocalTimeCurve(SamplePath::from_parts(path.times().to_vec(), out))
}

/// Level-crossing estimate of the local time at zero: `δ` times the number
/// of completed downcrossings of `[0, δ]` by `|X|`. Kept as an independent
/// cross-check of [`local_time_zero`].
pub fn local_time_downcrossings(path: &SamplePath, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Argument(format!(
            "band width {delta} must be positive"
        )));
    }
    let v = path.values();
    let mut armed = v[0].abs() >= delta;
    let mut count = 0_u64;
    for w in v.windows(2) {
        let (x, y) = (w[0], w[1]);
        let hits_zero = y == 0.0 || x * y < 0.0;
        if armed && hits_zero {
            count += 1;
            armed = false;
        }
        if y.abs() >= delta {
            armed = true;
        }
    }
    Ok(count as f64 * delta)
}

/// Ordered, disjoint open intervals inside `[0, domain_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionSet {
    intervals: Vec<(f64, f64)>,
    domain_end: f64,
}

impl ExcursionSet {
    pub fn new(intervals: Vec<(f64, f64)>, domain_end: f64) -> Result<Self> {
        let mut prev_end = 0.0_f64;
        for (i, &(a, b)) in intervals.iter().enumerate() {
            if !(a < b) {
                return Err(Error::Argument(format!(
                    "interval {i} = ({a}, {b}) is empty"
                )));
            }
            if a < prev_end || a < 0.0 || b > domain_end {
                return Err(Error::Argument(format!(
                    "interval {i} = ({a}, {b}) overlaps its predecessor or leaves [0, {domain_end}]"
                )));
            }
            prev_end = b;
        }
        Ok(Self {
            intervals,
            domain_end,
        })
    }

    pub fn empty(domain_end: f64) -> Self {
        Self {
            intervals: Vec::new(),
            domain_end,
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn domain_end(&self) -> f64 {
        self.domain_end
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.intervals.iter().map(|&(a, b)| b - a)
    }

    /// Intervals contained in `[0, t]`.
    pub fn ending_before(&self, t: f64) -> ExcursionSet {
        let intervals = self
            .intervals
            .iter()
            .copied()
            .filter(|&(_, b)| b <= t)
            .collect();
        ExcursionSet {
            intervals,
            domain_end: t.min(self.domain_end),
        }
    }
}

/// Maximal open intervals on which the interpolated path is nonzero.
///
/// Zero crossings strictly inside a cell are located by linear
/// interpolation. An excursion still open at either end of the grid is
/// closed at the grid edge. Excursions shorter than a grid cell are not
/// observable.
pub fn excursions(path: &SamplePath) -> ExcursionSet {
    let t = path.times();
    let v = path.values();
    let mut intervals = Vec::new();
    let mut open: Option<f64> = (v[0] != 0.0).then_some(t[0]);
    let push = |start: f64, end: f64, out: &mut Vec<(f64, f64)>| {
        if start < end {
            out.push((start, end));
        }
    };
    for i in 0..v.len() - 1 {
        let (a, b) = (v[i], v[i + 1]);
        if a * b < 0.0 {
            let c = zero_crossing(t[i], a, t[i + 1], b);
            if let Some(s) = open.take() {
                push(s, c, &mut intervals);
            }
            open = Some(c);
        }
        if b == 0.0 {
            if let Some(s) = open.take() {
                push(s, t[i + 1], &mut intervals);
            }
        } else if a == 0.0 {
            open = Some(t[i]);
        }
    }
    if let Some(s) = open {
        push(s, path.end(), &mut intervals);
    }
    ExcursionSet {
        intervals,
        domain_end: path.end(),
    }
}

/// Time where the chord from `(t0, a)` to `(t1, b)` vanishes; requires
/// `a * b < 0`.
#[inline]
pub(crate) fn zero_crossing(t0: f64, a: f64, t1: f64, b: f64) -> f64 {
    let c = t0 + a / (a - b) * (t1 - t0);
    c.clamp(t0, t1)
}

/// Excursions completed before the local time at zero first exceeds
/// `level`. The returned set's `domain_end` is that stopping time.
pub fn excursions_until_local_time(path: &SamplePath, level: f64) -> Result<ExcursionSet> {
    if !(level >= 0.0) {
        return Err(Error::Argument(format!(
            "local-time level {level} must be >= 0"
        )));
    }
    let lt = local_time_zero(path);
    let tau = lt.first_exceedance(level).ok_or(Error::Horizon {
        required: level,
        attained: lt.final_value(),
    })?;
    Ok(excursions(path).ending_before(tau))
}

/// Power sum `Σ|I|^α` and the counts `n_k = #{I : |I| > 2^{-k}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionStats {
    pub power_sum: f64,
    pub counts: Vec<usize>,
}

impl ExcursionStats {
    /// `2^{-k/2} n_k`, which tends to `√(2/π)` times the local time.
    pub fn normalized_count(&self, k: usize) -> f64 {
        self.counts[k] as f64 * 2f64.powf(-(k as f64) / 2.0)
    }
}

pub fn excursion_statistics(
    exc: &ExcursionSet,
    alpha: f64,
    max_level: usize,
) -> Result<ExcursionStats> {
    if !(alpha > 0.0) {
        return Err(Error::Argument(format!(
            "exponent {alpha} must be positive"
        )));
    }
    let mut counts = vec![0_usize; max_level + 1];
    let mut power_sum = 0.0;
    for len in exc.lengths() {
        power_sum += len.powf(alpha);
        for (k, c) in counts.iter_mut().enumerate() {
            if len > 2f64.powi(-(k as i32)) {
                *c += 1;
            }
        }
    }
    Ok(ExcursionStats { power_sum, counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(times: &[f64], values: &[f64]) -> SamplePath {
        SamplePath::new(times.to_vec(), values.to_vec()).unwrap()
    }

    fn unit_grid(values: &[f64]) -> SamplePath {
        let times: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
        path(&times, values)
    }

    #[test]
    fn rejects_bad_paths() {
        assert!(SamplePath::new(vec![0.0], vec![1.0]).is_err());
        assert!(SamplePath::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(SamplePath::new(vec![-1.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(SamplePath::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
        assert!(SamplePath::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn eval_interpolates() {
        let p = path(&[0.0, 1.0], &[0.0, 2.0]);
        assert_eq!(p.eval(0.0).unwrap(), 0.0);
        assert_eq!(p.eval(0.5).unwrap(), 1.0);
        assert_eq!(p.eval(1.0).unwrap(), 2.0);
        assert!(matches!(p.eval(2.0), Err(Error::OutOfRange { .. })));
        assert!(p.eval(-0.1).is_err());
    }

    #[test]
    fn signs() {
        assert_eq!(sign_paper(0.0), -1.0);
        assert_eq!(sign_paper(3.2), 1.0);
        assert_eq!(sign_paper(-7.0), -1.0);
        assert_eq!(sign_zero(0.0), 0.0);
        assert_eq!(sign_zero(1e-9), 1.0);
        assert_eq!(sign_zero(-1e-9), -1.0);
    }

    #[test]
    fn median_examples() {
        let grid = [0.0, 1.0, 2.0];
        let u = path(&grid, &[0.0, 2.0, 1.0]);
        let v = path(&grid, &[5.0, 1.0, -3.0]);
        let m = median_process(&u, &v).unwrap();
        assert_eq!(m.values(), &[5.0, 0.0, -2.0]);
        let other = path(&[0.0, 1.5, 2.0], &[0.0, 0.0, 0.0]);
        assert!(matches!(
            median_process(&u, &other),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn quadratic_variation_examples() {
        let c = unit_grid(&[4.0, 4.0, 4.0]);
        assert!(quadratic_variation(&c)
            .path()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        let p = path(&[0.0, 1.0], &[0.0, 3.0]);
        assert_eq!(quadratic_variation(&p).final_value(), 9.0);
    }

    #[test]
    fn local_time_of_one_signed_paths_vanishes() {
        let c = unit_grid(&[5.0; 6]);
        assert!(local_time_zero(&c)
            .path()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        let pos = unit_grid(&[0.3, 1.7, 0.01, 2.5, 1e-8, 4.0]);
        assert!(local_time_zero(&pos).final_value().abs() < 1e-12 * 5.0);
        let neg = unit_grid(&[-0.3, -1.7, -0.01, -2.5, -1e-8, -4.0]);
        assert!(local_time_zero(&neg).final_value().abs() < 1e-12 * 5.0);
    }

    #[test]
    fn local_time_counts_crossings() {
        // |X| - Σ sign(X)ΔX with one crossing from 1 to -1: 1 - 1 - (1·(-2)) = 2
        let p = unit_grid(&[1.0, -1.0]);
        assert_eq!(local_time_zero(&p).final_value(), 2.0);
        // leaving zero upwards counts, downwards does not (sign(0) = -1)
        assert_eq!(local_time_zero(&unit_grid(&[0.0, 0.5])).final_value(), 1.0);
        assert_eq!(local_time_zero(&unit_grid(&[0.0, -0.5])).final_value(), 0.0);
    }

    #[test]
    fn excursion_examples() {
        let e = excursions(&unit_grid(&[0.0, 1.0, 1.0, 0.0, -1.0, 0.0]));
        assert_eq!(e.intervals(), &[(0.0, 3.0), (3.0, 5.0)]);
        assert!(excursions(&unit_grid(&[0.0, 0.0, 0.0])).is_empty());
        let e = excursions(&path(&[0.0, 1.0], &[1.0, -1.0]));
        assert_eq!(e.intervals(), &[(0.0, 0.5), (0.5, 1.0)]);
        // zero runs produce no interval
        let e = excursions(&unit_grid(&[2.0, 0.0, 0.0, 0.0, 3.0]));
        assert_eq!(e.intervals(), &[(0.0, 1.0), (3.0, 4.0)]);
    }

    #[test]
    fn excursions_until_local_time_edges() {
        let pos = unit_grid(&[0.5, 1.0, 2.0]);
        match excursions_until_local_time(&pos, 0.5) {
            Err(Error::Horizon { attained, .. }) => assert_eq!(attained, 0.0),
            other => panic!("expected horizon error, got {other:?}"),
        }
        // L jumps to 2 on the first cell: τ(0) = 0, nothing completed yet.
        let p = unit_grid(&[1.0, -1.0, 1.0, -1.0]);
        let e = excursions_until_local_time(&p, 0.0).unwrap();
        assert!(e.is_empty());
        assert_eq!(e.domain_end(), 0.0);
        // L = 2, 4, 6 at t = 1, 2, 3; τ(3) = 1.5, excursion (0, .5) and (.5, 1.5) done
        let e = excursions_until_local_time(&p, 3.0).unwrap();
        assert_eq!(e.intervals(), &[(0.0, 0.5), (0.5, 1.5)]);
    }

    #[test]
    fn excursion_statistics_examples() {
        let e = ExcursionSet::new(vec![(0.0, 1.0), (2.0, 2.25)], 3.0).unwrap();
        let s = excursion_statistics(&e, 0.5, 4).unwrap();
        assert!((s.power_sum - 1.5).abs() < 1e-15);
        // lengths 1 and 0.25; n_k counts |I| > 2^{-k}
        assert_eq!(s.counts, vec![0, 1, 1, 2, 2]);
        let s = excursion_statistics(&ExcursionSet::empty(1.0), 0.5, 3).unwrap();
        assert_eq!(s.power_sum, 0.0);
        assert_eq!(s.counts, vec![0; 4]);
        assert!(excursion_statistics(&e, 0.0, 2).is_err());
    }

    #[test]
    fn excursion_set_validation() {
        assert!(ExcursionSet::new(vec![(0.0, 1.0), (0.5, 2.0)], 3.0).is_err());
        assert!(ExcursionSet::new(vec![(1.0, 1.0)], 3.0).is_err());
        assert!(ExcursionSet::new(vec![(1.0, 4.0)], 3.0).is_err());
    }

    #[test]
    fn downcrossing_estimator_counts() {
        let p = unit_grid(&[0.0, 1.0, 0.0, 1.0, -1.0, 0.2]);
        // armed at 1, hits 0; re-armed at 1, crosses; re-armed at -1, crosses again
        assert_eq!(local_time_downcrossings(&p, 0.5).unwrap(), 1.5);
        assert!(local_time_downcrossings(&p, 0.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let p = path(&[0.0, 0.1, 0.30000000000000004], &[1.5, -2.25e-7, 3.0]);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time,value\n"));
        assert_eq!(SamplePath::read_csv(buf.as_slice()).unwrap(), p);
        assert!(SamplePath::read_csv("t,v\n0,1\n1,2\n".as_bytes()).is_err());
        assert!(SamplePath::read_csv("time,value\n0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn subsample_and_truncate() {
        let p = unit_grid(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let s = p.subsample(2).unwrap();
        assert_eq!(s.times(), &[0.0, 2.0, 4.0]);
        let s = p.subsample(3).unwrap();
        assert_eq!(s.times(), &[0.0, 3.0, 4.0]);
        let t = p.truncate(2.5).unwrap();
        assert_eq!(t.times(), &[0.0, 1.0, 2.0, 2.5]);
        assert_eq!(t.last_value(), 2.5);
    }

    #[test]
    fn first_exceedance_interpolates() {
        let c = LocalTimeCurve::new(path(&[0.0, 1.0, 2.0], &[0.0, 0.0, 2.0])).unwrap();
        assert_eq!(c.first_exceedance(0.0), Some(1.0));
        assert_eq!(c.first_exceedance(1.0), Some(1.5));
        assert_eq!(c.first_exceedance(2.0), None);
        assert!(LocalTimeCurve::new(path(&[0.0, 1.0], &[0.0, -1.0])).is_err());
    }

    mod properties {
        use super::super::*;
        use proptest::prelude::*;

        fn finite() -> impl Strategy<Value = f64> {
            prop_oneof![
                -1e6..1e6f64,
                Just(0.0),
                Just(-0.0),
                prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
            ]
            .prop_filter("finite and not huge", |x| x.is_finite() && x.abs() < 1e300)
        }

        fn grid_path(max_len: usize) -> impl Strategy<Value = SamplePath> {
            prop::collection::vec(
                (
                    0.001..1.0f64,
                    prop_oneof![3 => -2.0..2.0f64, 1 => Just(0.0)],
                ),
                2..max_len,
            )
            .prop_map(|cells| {
                let mut t = 0.0;
                let mut times = Vec::new();
                let mut values = Vec::new();
                for (dt, v) in cells {
                    times.push(t);
                    values.push(v);
                    t += dt;
                }
                SamplePath::new(times, values).unwrap()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(2000))]

            #[test]
            fn median_closed_forms_agree(u in finite(), v in finite()) {
                let m = median3(v + u, v - u, 0.0);
                prop_assert_eq!(m, median_split_form(u, v));
                prop_assert_eq!(m, median_difference_form(u, v));
            }

            #[test]
            fn signs_differ_only_at_zero(x in finite()) {
                if x != 0.0 {
                    prop_assert_eq!(sign_paper(x), sign_zero(x));
                } else {
                    prop_assert_eq!((sign_paper(x), sign_zero(x)), (-1.0, 0.0));
                }
            }
        }

        proptest! {
            #[test]
            fn one_signed_paths_have_no_local_time(
                p in grid_path(200),
                flip in any::<bool>(),
            ) {
                let s = if flip { -1.0 } else { 1.0 };
                let q = p.map(|v| s * (v.abs() + 1e-3));
                let lt = local_time_zero(&q);
                prop_assert!(lt.final_value() <= 1e-12 * q.len() as f64);
            }

            #[test]
            fn local_time_is_a_clock(p in grid_path(200)) {
                let lt = local_time_zero(&p);
                prop_assert!(LocalTimeCurve::new(lt.path().clone()).is_ok());
            }

            #[test]
            fn excursions_are_disjoint_and_one_signed(p in grid_path(200)) {
                let e = excursions(&p);
                prop_assert!(ExcursionSet::new(e.intervals().to_vec(), e.domain_end()).is_ok());
                for &(a, b) in e.intervals() {
                    let signs: Vec<f64> = (1..8)
                        .map(|k| sign_zero(p.eval(a + (b - a) * k as f64 / 8.0).unwrap()))
                        .collect();
                    prop_assert!(signs.iter().all(|&s| s == signs[0] && s != 0.0), "{:?} on ({a}, {b})", signs);
                }
            }

            #[test]
            fn excursion_counts_are_monotone(p in grid_path(200), alpha in 0.1..2.0f64) {
                let e = excursions(&p);
                let stats = excursion_statistics(&e, alpha, 12).unwrap();
                prop_assert!(stats.counts.windows(2).all(|w| w[0] <= w[1]));
                let unit = excursion_statistics(&e, 1.0, 0).unwrap();
                prop_assert!(unit.power_sum <= e.domain_end() * (1.0 + 1e-12));
            }

            #[test]
            fn csv_round_trips(p in grid_path(50)) {
                let mut buf = Vec::new();
                p.write_csv(&mut buf).unwrap();
                prop_assert_eq!(SamplePath::read_csv(buf.as_slice()).unwrap(), p);
            }
        }
    }
}
