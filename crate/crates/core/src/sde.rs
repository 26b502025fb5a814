//! Euler schemes for `dX = sign(X) dM + dN` and the mirror-coupling
//! experiment: two solutions driven by the same noise that differ only in
//! the value given to `sign(0)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pathkit::SamplePath;
use crate::stats;
use crate::stochgen::{brownian, GridSpec, SeedSpec};

/// Value taken by the sign function at exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroConvention {
    Minus,
    Plus,
}

impl ZeroConvention {
    #[inline]
    pub fn sign(self, x: f64) -> f64 {
        match self {
            ZeroConvention::Minus => {
                if x > 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            ZeroConvention::Plus => {
                if x >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    pub fn mirror(self) -> Self {
        match self {
            ZeroConvention::Minus => ZeroConvention::Plus,
            ZeroConvention::Plus => ZeroConvention::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeSpec {
    pub lambda: f64,
    pub x0: f64,
    pub zero_convention: ZeroConvention,
}

impl SdeSpec {
    pub fn new(lambda: f64, x0: f64) -> Self {
        Self {
            lambda,
            x0,
            zero_convention: ZeroConvention::Minus,
        }
    }
}

/// `X_{i+1} = X_i + sign(X_i) ΔB1_i + λ ΔB2_i`.
pub fn euler_solve(spec: &SdeSpec, b1: &SamplePath, b2: &SamplePath) -> Result<SamplePath> {
    b1.check_same_grid(b2)?;
    let n = b2.map(|v| spec.lambda * v);
    euler_solve_general(b1, &n, spec.x0, spec.zero_convention)
}

/// `X_{i+1} = X_i + sign(X_i) ΔM_i + ΔN_i`.
pub fn euler_solve_general(
    m: &SamplePath,
    n: &SamplePath,
    x0: f64,
    zero_convention: ZeroConvention,
) -> Result<SamplePath> {
    m.check_same_grid(n)?;
    if !x0.is_finite() {
        return Err(Error::Argument(format!("initial value {x0} is not finite")));
    }
    let (mv, nv) = (m.values(), n.values());
    let mut x = Vec::with_capacity(mv.len());
    let mut cur = x0;
    x.push(cur);
    for i in 0..mv.len() - 1 {
        cur += zero_convention.sign(cur) * (mv[i + 1] - mv[i]) + (nv[i + 1] - nv[i]);
        x.push(cur);
    }
    if !cur.is_finite() {
        return Err(Error::InvalidPath("Euler iterate overflowed".into()));
    }
    Ok(SamplePath::from_parts(m.times().to_vec(), x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingResult {
    pub sup_distance: f64,
    pub end_distance: f64,
    pub mesh: f64,
    /// Keys of the two driving noises, when they were generated here.
    pub seeds: Option<[SeedSpec; 2]>,
}

/// Solves with the spec's convention and with its mirror on the same noise.
pub fn mirror_coupling(spec: &SdeSpec, b1: &SamplePath, b2: &SamplePath) -> Result<CouplingResult> {
    let x = euler_solve(spec, b1, b2)?;
    let mirrored = SdeSpec {
        zero_convention: spec.zero_convention.mirror(),
        ..*spec
    };
    let y = euler_solve(&mirrored, b1, b2)?;
    let sup_distance = x
        .values()
        .iter()
        .zip(y.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let end_distance = (x.last_value() - y.last_value()).abs();
    let mesh = b1
        .times()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    Ok(CouplingResult {
        sup_distance,
        end_distance,
        mesh,
        seeds: None,
    })
}

/// One row of the convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub lambda: f64,
    pub mesh: f64,
    pub replica: u64,
    pub seed: u64,
    pub sup_distance: f64,
    pub end_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSummary {
    pub lambda: f64,
    pub mesh: f64,
    pub median_sup_distance: f64,
    pub p90_sup_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<CouplingRow>,
    pub summary: Vec<CouplingSummary>,
}

impl ConvergenceStudy {
    /// Medians of one λ row, in mesh order.
    pub fn medians(&self, lambda: f64) -> Vec<f64> {
        self.summary
            .iter()
            .filter(|s| s.lambda == lambda)
            .map(|s| s.median_sup_distance)
            .collect()
    }
}

/// Mirror couplings started at 0 on `[0, t_end]` for every `(λ, mesh)`.
/// Replica `r` uses stream `r` of `seed`; when the meshes are nested the
/// coarser noises are subsamples of the finest one.
pub fn convergence_study(
    lambdas: &[f64],
    meshes: &[f64],
    replicas: u64,
    seed: u64,
    t_end: f64,
) -> Result<ConvergenceStudy> {
    convergence_study_with(lambdas, meshes, replicas, seed, t_end, |s, g| {
        (brownian(s.lane(0), g), brownian(s.lane(1), g))
    })
}

/// As [`convergence_study`] with a caller-supplied noise generator.
pub fn convergence_study_with<F>(
    lambdas: &[f64],
    meshes: &[f64],
    replicas: u64,
    seed: u64,
    t_end: f64,
    noise: F,
) -> Result<ConvergenceStudy>
where
    F: Fn(SeedSpec, GridSpec) -> (SamplePath, SamplePath) + Sync,
{
    if meshes.is_empty() || lambdas.is_empty() || replicas == 0 {
        return Err(Error::Argument(
            "need at least one λ, one mesh and one replica".into(),
        ));
    }
    if meshes.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Argument("meshes must be strictly decreasing".into()));
    }
    let grids = meshes
        .iter()
        .map(|&m| GridSpec::with_mesh(t_end, m))
        .collect::<Result<Vec<_>>>()?;
    let finest = *grids.last().unwrap();

    let per_replica: Vec<Result<Vec<CouplingRow>>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let key = SeedSpec::new(seed, r);
            let (f1, f2) = noise(key, finest);
            let mut rows = Vec::with_capacity(lambdas.len() * grids.len());
            for (grid, &mesh) in grids.iter().zip(meshes) {
                let (b1, b2) = if finest.n_steps % grid.n_steps == 0 {
                    let stride = finest.n_steps / grid.n_steps;
                    (f1.subsample(stride)?, f2.subsample(stride)?)
                } else {
                    noise(key, *grid)
                };
                for &lambda in lambdas {
                    let c = mirror_coupling(&SdeSpec::new(lambda, 0.0), &b1, &b2)?;
                    rows.push(CouplingRow {
                        lambda,
                        mesh,
                        replica: r,
                        seed,
                        sup_distance: c.sup_distance,
                        end_distance: c.end_distance,
                    });
                }
            }
            Ok(rows)
        })
        .collect();

    let mut rows = Vec::new();
    for r in per_replica {
        rows.extend(r?);
    }
    let mut summary = Vec::new();
    for &lambda in lambdas {
        for &mesh in meshes {
            let d: Vec<f64> = rows
                .iter()
                .filter(|row| row.lambda == lambda && row.mesh == mesh)
                .map(|row| row.sup_distance)
                .collect();
            summary.push(CouplingSummary {
                lambda,
                mesh,
                median_sup_distance: stats::median(&d),
                p90_sup_distance: stats::quantile(&d, 0.9),
            });
        }
    }
    Ok(ConvergenceStudy { rows, summary })
}
