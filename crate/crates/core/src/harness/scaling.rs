//! Excursion counts and power sums of Brownian motion stopped when its
//! local time at zero reaches ε, across nested meshes.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pathkit::{
    excursion_statistics, excursions_until_local_time, local_time_zero, SamplePath,
};
use crate::stochgen::{GaussianStream, SeedSpec};

/// Power exponents reported for every path: divergent at 1/2, convergent
/// above.
pub const ALPHAS: [f64; 2] = [0.5, 0.75];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcursionRow {
    pub replica: u64,
    pub mesh: f64,
    /// Interpolated `τ(ε)` on this mesh.
    pub tau: f64,
    pub excursions: usize,
    /// `Σ |J|^α` for each entry of [`ALPHAS`].
    pub power_sums: [f64; 2],
    /// `n_k = #{J : |J| > 2^{-k}}` for `k = 0..counts.len()`.
    pub counts: Vec<usize>,
}

impl ExcursionRow {
    pub fn normalized_count(&self, k: usize) -> Option<f64> {
        self.counts
            .get(k)
            .map(|&n| n as f64 * 2f64.powf(-(k as f64) / 2.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcursionScaling {
    pub epsilon: f64,
    pub meshes: Vec<f64>,
    /// Rows in replica order, meshes in the given order within a replica.
    pub rows: Vec<ExcursionRow>,
    /// Replicas whose local time stayed below ε up to the horizon.
    pub skipped: Vec<u64>,
}

impl ExcursionScaling {
    pub fn at_mesh(&self, mesh: f64) -> impl Iterator<Item = &ExcursionRow> {
        self.rows.iter().filter(move |r| r.mesh == mesh)
    }
}

/// Highest `k` whose threshold `2^{-k}` spans at least 16 cells.
pub fn max_count_level(mesh: f64) -> usize {
    ((1.0 / mesh).log2().floor() - 4.0).max(0.0) as usize
}

/// For each replica a Brownian path on the finest mesh is grown from
/// `t_start`, doubling up to `horizon`, until the Tanaka local time at zero
/// passes ε on every mesh; coarser meshes are subsamples of it. Meshes must
/// be decreasing integer multiples of the finest.
pub fn excursion_scaling(
    epsilon: f64,
    meshes: &[f64],
    replicas: u64,
    seed: u64,
    t_start: f64,
    horizon: f64,
) -> Result<ExcursionScaling> {
    if meshes.is_empty() || meshes.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Argument(
            "meshes must be non-empty and strictly decreasing".into(),
        ));
    }
    if !(epsilon > 0.0) || !(t_start > 0.0) || horizon < t_start {
        return Err(Error::Argument(
            "need ε > 0 and 0 < t_start ≤ horizon".into(),
        ));
    }
    let finest = *meshes.last().unwrap();
    let strides = meshes
        .iter()
        .map(|&m| {
            let s = (m / finest).round();
            if (m / finest - s).abs() > 1e-9 * s {
                Err(Error::Argument(format!(
                    "mesh {m} is not a multiple of {finest}"
                )))
            } else {
                Ok(s as usize)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let coarsest_stride = strides[0];

    let per_replica: Vec<Result<Option<Vec<ExcursionRow>>>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut stream = GaussianStream::new(SeedSpec::new(seed, r));
            let mut values = vec![0.0];
            let mut span = t_start;
            loop {
                // whole number of coarsest cells
                let steps =
                    ((span / finest).ceil() as usize).div_ceil(coarsest_stride) * coarsest_stride;
                let missing = steps + 1 - values.len();
                stream.extend_brownian(&mut values, finest, missing);
                let times = (0..=steps).map(|i| i as f64 * finest).collect();
                let path = SamplePath::new(times, values.clone())?;
                let subs = strides
                    .iter()
                    .map(|&s| path.subsample(s))
                    .collect::<Result<Vec<_>>>()?;
                let reached = subs
                    .iter()
                    .all(|p| local_time_zero(p).first_exceedance(epsilon).is_some());
                if reached {
                    let rows = subs
                        .iter()
                        .zip(meshes)
                        .map(|(p, &mesh)| row(r, mesh, p, epsilon))
                        .collect::<Result<Vec<_>>>()?;
                    return Ok(Some(rows));
                }
                if span >= horizon {
                    return Ok(None);
                }
                span = (2.0 * span).min(horizon);
            }
        })
        .collect();

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (r, res) in per_replica.into_iter().enumerate() {
        match res? {
            Some(rs) => rows.extend(rs),
            None => skipped.push(r as u64),
        }
    }
    Ok(ExcursionScaling {
        epsilon,
        meshes: meshes.to_vec(),
        rows,
        skipped,
    })
}

fn row(replica: u64, mesh: f64, path: &SamplePath, epsilon: f64) -> Result<ExcursionRow> {
    let exc = excursions_until_local_time(path, epsilon)?;
    let level = max_count_level(mesh);
    let s0 = excursion_statistics(&exc, ALPHAS[0], level)?;
    let s1 = excursion_statistics(&exc, ALPHAS[1], 0)?;
    Ok(ExcursionRow {
        replica,
        mesh,
        tau: exc.domain_end(),
        excursions: exc.len(),
        power_sums: [s0.power_sum, s1.power_sum],
        counts: s0.counts,
    })
}
