use std::collections::BTreeMap;
use std::path::Path;

use holoball_core::carleson::{carleson_report, CarlesonConfig, CriterionParams};
use holoball_core::holo::{pullback_measure, validate_self_map, HoloMap, ValidatedMap};
use holoball_core::lattice::{
    build_lattice, build_lattice_with_budget, coverage_failures, separation_of,
};
use holoball_core::measure::{fmt17, sample_nu_alpha, DiscreteMeasure, WeightParams};
use holoball_core::opnorm::{compare, OperatorSpec};
use holoball_core::rng::derive_seed;
use holoball_core::selftest::run_geometry_suite;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    CarlesonJob, GeometryJob, Job, LatticeJob, MeasureSpec, OpnormJob, RunSpec,
    DEFAULT_VALIDATION_DIRECTIONS, DEFAULT_VALIDATION_SHELLS,
};
use crate::error::RunError;
use crate::output::{profile_bytes, Artifact};

/// Named sub-seeds, one per random stream a command consumes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Seeds {
    pub seed: u64,
    pub streams: BTreeMap<&'static str, u64>,
}

impl Seeds {
    fn new(seed: u64, names: &[&'static str]) -> Self {
        let streams = names
            .iter()
            .map(|&name| (name, derive_seed(seed, stream_salt(name))))
            .collect();
        Seeds { seed, streams }
    }

    fn get(&self, name: &str) -> u64 {
        self.streams[name]
    }
}

fn stream_salt(name: &str) -> u64 {
    match name {
        "geometry" => 1,
        "lattice" => 2,
        "coverage" => 3,
        "measure" => 4,
        "nu_alpha" => 5,
        "nu_beta" => 6,
        "validation" => 7,
        _ => unreachable!("unknown stream {name}"),
    }
}

pub struct Outcome {
    pub seeds: Seeds,
    pub results: Value,
    pub artifacts: Vec<Artifact>,
}

/// Runs the spec in memory; nothing touches the file system except input
/// files named by the config.
pub fn run(spec: &RunSpec) -> Result<Outcome, RunError> {
    match &spec.parameters {
        Job::Geometry(j) => geometry(j, spec.seed),
        Job::Lattice(j) => lattice(j, spec.seed),
        Job::Carleson(j) => carleson(j, spec.seed, &spec.base_dir),
        Job::Opnorm(j) => opnorm(j, spec.seed),
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, RunError> {
    serde_json::to_value(v).map_err(|e| RunError::runtime("report", e))
}

fn geometry(job: &GeometryJob, seed: u64) -> Result<Outcome, RunError> {
    let seeds = Seeds::new(seed, &["geometry"]);
    let report = run_geometry_suite(&job.dims, job.count, seeds.get("geometry"));
    Ok(Outcome {
        results: to_value(&report)?,
        seeds,
        artifacts: Vec::new(),
    })
}

fn lattice(job: &LatticeJob, seed: u64) -> Result<Outcome, RunError> {
    let seeds = Seeds::new(seed, &["lattice", "coverage"]);
    let lat = build_lattice_with_budget(
        job.n,
        job.r,
        job.r_max,
        seeds.get("lattice"),
        job.rejection_budget,
    )
    .map_err(|e| RunError::runtime("lattice.build", e))?;
    let exact = separation_of(&lat.centers).map_or(true, |s| s >= job.r);
    let uncovered = if job.coverage_probes > 0 {
        coverage_failures(&lat, job.coverage_probes, seeds.get("coverage"))
    } else {
        0
    };
    let mut csv = Vec::new();
    lat.as_measure()
        .write_csv(&mut csv)
        .map_err(|e| RunError::runtime("lattice.export", e))?;
    let meta = serde_json::to_vec_pretty(&lat.meta())
        .map_err(|e| RunError::runtime("lattice.export", e))?;
    Ok(Outcome {
        results: json!({
            "centers": lat.len(),
            "separation": lat.separation,
            "separation_at_least_r": exact,
            "coverage_probes": job.coverage_probes,
            "uncovered_probes": uncovered,
            "meta": to_value(&lat.meta())?,
        }),
        seeds,
        artifacts: vec![
            Artifact::new("lattice.csv", csv),
            Artifact::new("lattice.json", meta),
        ],
    })
}

fn validated(field: &str, map: &HoloMap, seed: u64) -> Result<ValidatedMap, RunError> {
    validate_self_map(
        map,
        &DEFAULT_VALIDATION_SHELLS,
        DEFAULT_VALIDATION_DIRECTIONS,
        seed,
    )
    .map_err(|e| RunError::validation(field, e))
}

fn nu_sample(
    field: &str,
    n: usize,
    alpha: f64,
    count: usize,
    seed: u64,
) -> Result<DiscreteMeasure, RunError> {
    let params = WeightParams::new(n, alpha).map_err(|e| RunError::validation(field, e))?;
    sample_nu_alpha(&params, count, seed)
        .map_err(|e| RunError::runtime("measure.sample_nu_alpha", e))
}

fn build_measure(
    spec: &MeasureSpec,
    n: usize,
    base_dir: &Path,
    seeds: &Seeds,
) -> Result<DiscreteMeasure, RunError> {
    let invalid = |e| RunError::validation("measure", e);
    let mu = match spec {
        MeasureSpec::NuSample { alpha, count } => nu_sample(
            "measure.alpha",
            n,
            alpha.expect("resolved at parse time"),
            *count,
            seeds.get("measure"),
        )?,
        MeasureSpec::PointMass { point, mass } => {
            DiscreteMeasure::point_mass(point.clone(), *mass).map_err(invalid)?
        }
        MeasureSpec::Atoms { points, weights } => {
            DiscreteMeasure::new(n, points.clone(), weights.clone()).map_err(invalid)?
        }
        MeasureSpec::Csv { path } => {
            DiscreteMeasure::load_csv(&base_dir.join(path)).map_err(invalid)?
        }
        MeasureSpec::Pullback {
            phi,
            psi,
            q,
            beta,
            count,
        } => {
            let phi = validated("measure.phi", phi, seeds.get("validation"))?;
            let psi = validated("measure.psi", psi, seeds.get("validation"))?;
            let nu = nu_sample("measure.beta", n, *beta, *count, seeds.get("measure"))?;
            pullback_measure(&phi, &psi, *q, &nu).map_err(invalid)?
        }
    };
    if mu.dim() != n {
        return Err(RunError::validation(
            "measure",
            format!("measure lives in C^{} but n = {n}", mu.dim()),
        ));
    }
    Ok(mu)
}

fn carleson(job: &CarlesonJob, seed: u64, base_dir: &Path) -> Result<Outcome, RunError> {
    let mut names = vec!["measure", "validation"];
    if job.exponents.is_some() {
        names.extend(["lattice", "nu_alpha"]);
    }
    let seeds = Seeds::new(seed, &names);
    let mu = build_measure(&job.measure, job.n, base_dir, &seeds)?;
    let params = CriterionParams::new(job.n, job.lambda, job.alpha, job.r)
        .and_then(|p| p.with_s_exp(job.s))
        .map_err(|e| RunError::validation("parameters", e))?;
    let cfg = CarlesonConfig {
        params,
        grid: job.grid.clone(),
        profile_gaps: job.profile_gaps.clone(),
        profile_directions: job.profile_directions,
        tail_shells: job.tail_shells,
        exponents: job.exponents.map(|e| (e.p, e.q)),
    };
    let (lat, nu) = match job.exponents {
        Some(_) => {
            let lat = build_lattice(job.n, job.r, job.lattice_r_max, seeds.get("lattice"))
                .map_err(|e| RunError::runtime("lattice.build", e))?;
            let nu = nu_sample(
                "alpha",
                job.n,
                job.alpha,
                job.nu_count,
                seeds.get("nu_alpha"),
            )?;
            (Some(lat), Some(nu))
        }
        None => (None, None),
    };
    let report = carleson_report(&mu, &cfg, lat.as_ref(), nu.as_ref())
        .map_err(|e| RunError::runtime("carleson.report", e))?;
    let artifacts = vec![
        Artifact::new("ball_profile.csv", profile_bytes(&report.ball_profile)?),
        Artifact::new(
            "berezin_profile.csv",
            profile_bytes(&report.berezin_profile)?,
        ),
    ];
    Ok(Outcome {
        results: json!({
            "measure": {"atoms": mu.len(), "total_mass": mu.total()},
            "lattice_centers": lat.as_ref().map(|l| l.len()),
            "report": to_value(&report)?,
        }),
        seeds,
        artifacts,
    })
}

fn opnorm(job: &OpnormJob, seed: u64) -> Result<Outcome, RunError> {
    let seeds = Seeds::new(seed, &["validation", "nu_alpha", "nu_beta"]);
    let check = |field: &str, m: &HoloMap| {
        validate_self_map(
            m,
            &job.validation.shells,
            job.validation.directions,
            seeds.get("validation"),
        )
        .map_err(|e| RunError::validation(field, e))
    };
    let phi = check("phi", &job.phi)?;
    let psi = check("psi", &job.psi)?;
    let spec = OperatorSpec::new(phi, psi, job.p, job.q, job.alpha, job.beta)
        .map_err(|e| RunError::validation("parameters", e))?;
    let nu_alpha = nu_sample(
        "alpha",
        job.n,
        job.alpha,
        job.alpha_samples,
        seeds.get("nu_alpha"),
    )?;
    let nu_beta = nu_sample(
        "beta",
        job.n,
        job.beta,
        job.beta_samples,
        seeds.get("nu_beta"),
    )?;
    let report = compare(&spec, &job.estimator, &nu_alpha, &nu_beta)
        .map_err(|e| RunError::runtime("opnorm.compare", e))?;

    let mut artifacts = vec![
        Artifact::new("essential_tail.csv", profile_bytes(&report.essential_tail)?),
        Artifact::new(
            "omega_ball_profile.csv",
            profile_bytes(&report.omega.ball_profile)?,
        ),
        Artifact::new(
            "omega_berezin_profile.csv",
            profile_bytes(&report.omega.berezin_profile)?,
        ),
    ];
    if let Some(probe) = &report.probe {
        let mut w = csv::Writer::from_writer(Vec::new());
        let rows = (|| -> csv::Result<Vec<u8>> {
            w.write_record(["label", "value", "std_error"])?;
            for ((l, v), se) in probe
                .labels
                .iter()
                .zip(&probe.values)
                .zip(&probe.std_errors)
            {
                w.write_record([l.as_str(), &fmt17(*v), &fmt17(*se)])?;
            }
            w.into_inner().map_err(|e| e.into_error().into())
        })()
        .map_err(|e| RunError::runtime("report", e))?;
        artifacts.push(Artifact::new("probe.csv", rows));
    }
    Ok(Outcome {
        results: to_value(&report)?,
        seeds,
        artifacts,
    })
}
