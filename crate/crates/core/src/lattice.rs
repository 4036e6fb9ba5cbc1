//! Separated sequences and finite r-lattices in the pseudo-hyperbolic metric.
//!
//! Lattices are built greedily from a deterministic low-discrepancy candidate
//! stream over the Euclidean ball `|z| < cutoff`. A candidate is admitted when
//! it is at pseudo-hyperbolic distance at least `r` from every admitted
//! center; construction stops after a run of consecutive rejections.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::geometry::{rho, BallPoint};
use crate::measure::{sample_uniform_ball, unit_weights, DiscreteMeasure};
use crate::rng::{cube_to_ball, Kronecker};

#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub n: usize,
    pub r: f64,
    /// Sorted by increasing norm.
    pub centers: Vec<BallPoint>,
    pub separation: f64,
    pub cutoff: f64,
    pub stream_seed: u64,
}

/// JSON sidecar written next to the center CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeMeta {
    pub n: usize,
    pub r: f64,
    #[serde(rename = "R_max")]
    pub r_max: f64,
    pub separation: f64,
    pub stream_seed: u64,
}

/// Consecutive rejections that end construction: `10^4 * ceil(1 / (1 - cutoff))`.
/// The ceiling ignores rounding noise, so `cutoff = 0.9` gives `10^5`.
pub fn default_rejection_budget(cutoff: f64) -> usize {
    let inv = 1.0 / (1.0 - cutoff);
    10_000usize.saturating_mul((inv - 1e-9 * inv).ceil() as usize)
}

pub fn build_lattice(n: usize, r: f64, cutoff: f64, stream_seed: u64) -> Result<Lattice> {
    build_lattice_with_budget(n, r, cutoff, stream_seed, default_rejection_budget(cutoff))
}

pub fn build_lattice_with_budget(
    n: usize,
    r: f64,
    cutoff: f64,
    stream_seed: u64,
    rejection_budget: usize,
) -> Result<Lattice> {
    check_range("n", n as f64, n >= 1, "n >= 1")?;
    check_range("r", r, r > 0.0 && r < 1.0, "(0, 1)")?;
    check_range("R_max", cutoff, cutoff > 0.0 && cutoff < 1.0, "(0, 1)")?;
    let mut stream = Kronecker::new(2 * n, stream_seed);
    let mut centers: Vec<BallPoint> = Vec::new();
    let mut rejected = 0usize;
    while rejected < rejection_budget.max(1) {
        let v = cube_to_ball(&stream.next_point(), n, cutoff);
        let cand = BallPoint::new(v).expect("candidate inside the cutoff ball");
        if centers.iter().all(|c| rho(c, &cand) >= r) {
            centers.push(cand);
            rejected = 0;
        } else {
            rejected += 1;
        }
    }
    // stable sort keeps admission order among equal norms
    centers.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let separation = separation_of(&centers)?;
    Ok(Lattice {
        n,
        r,
        centers,
        separation,
        cutoff,
        stream_seed,
    })
}

/// Infimum of pairwise pseudo-hyperbolic distances; 1 for a single point.
pub fn separation_of(points: &[BallPoint]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Empty("separation of an empty point list"));
    }
    let sep = (0..points.len())
        .into_par_iter()
        .map(|i| {
            points[i + 1..]
                .iter()
                .map(|q| rho(&points[i], q))
                .fold(1.0, f64::min)
        })
        .reduce(|| 1.0, f64::min);
    Ok(sep)
}

/// Number of centers in `Delta(z, r)`.
pub fn count_in(lattice: &Lattice, z: &BallPoint, r: f64) -> usize {
    lattice.centers.iter().filter(|c| rho(z, c) < r).count()
}

/// `(2/delta + 1)^(2n) / (1 - r^2)^n`, the maximal number of points of a
/// `delta`-separated sequence inside any `Delta(z, r)`.
pub fn counting_bound(separation: f64, r: f64, n: usize) -> f64 {
    (2.0 / separation + 1.0).powi(2 * n as i32) / (1.0 - r * r).powi(n as i32)
}

/// Number of uniform probes of `|z| < cutoff` with no center within `rho < r`.
pub fn coverage_failures(lattice: &Lattice, probes: usize, seed: u64) -> usize {
    sample_uniform_ball(lattice.n, lattice.cutoff, probes, seed)
        .par_iter()
        .filter(|p| !lattice.centers.iter().any(|c| rho(c, p) < lattice.r))
        .count()
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn meta(&self) -> LatticeMeta {
        LatticeMeta {
            n: self.n,
            r: self.r,
            r_max: self.cutoff,
            separation: self.separation,
            stream_seed: self.stream_seed,
        }
    }

    pub fn as_measure(&self) -> DiscreteMeasure {
        unit_weights(self.n, &self.centers)
    }

    pub fn save(&self, csv_path: &Path, json_path: &Path) -> Result<()> {
        self.as_measure().save_csv(csv_path)?;
        std::fs::write(json_path, serde_json::to_string_pretty(&self.meta())?)?;
        Ok(())
    }

    pub fn load(csv_path: &Path, json_path: &Path) -> Result<Self> {
        let meta: LatticeMeta = serde_json::from_str(&std::fs::read_to_string(json_path)?)?;
        let m = DiscreteMeasure::load_csv(csv_path)?;
        if m.dim() != meta.n {
            return Err(Error::DimensionMismatch {
                left: meta.n,
                right: m.dim(),
            });
        }
        Ok(Lattice {
            n: meta.n,
            r: meta.r,
            centers: m.points().to_vec(),
            separation: meta.separation,
            cutoff: meta.r_max,
            stream_seed: meta.stream_seed,
        })
    }
}
