//! JSON run configurations. Every optional field is resolved to an explicit
//! value here, so the echoed spec records everything that shaped the run.

use std::path::{Path, PathBuf};

use holoball_core::holo::{HoloMap, TestFnParams};
use holoball_core::opnorm::OpnormConfig;
use holoball_core::supgrid::{dyadic_gaps, SupGrid, DEFAULT_TAIL_SHELLS};
use holoball_core::BallPoint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_GEOMETRY_DIMS: [usize; 3] = [1, 2, 3];
pub const DEFAULT_GEOMETRY_COUNT: usize = 100_000;
pub const DEFAULT_COVERAGE_PROBES: usize = 10_000;
pub const DEFAULT_PROFILE_SHELLS: u32 = 8;
pub const DEFAULT_PROFILE_DIRECTIONS: usize = 64;
pub const DEFAULT_NU_COUNT: usize = 20_000;
pub const DEFAULT_LATTICE_R_MAX: f64 = 0.95;
pub const DEFAULT_OPNORM_SAMPLES: usize = 20_000;
pub const DEFAULT_VALIDATION_SHELLS: [f64; 4] = [0.5, 0.9, 0.99, 0.999];
pub const DEFAULT_VALIDATION_DIRECTIONS: usize = 512;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: &str, message: String) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        message,
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

fn check(field: &str, value: f64, ok: bool, rule: &str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(field_err(field, format!("{rule} (got {value})")))
    }
}

fn check_alpha(field: &str, v: f64) -> Result<()> {
    let name = field.rsplit('.').next().unwrap_or(field);
    check(field, v, v > -1.0, &format!("{name} must exceed -1"))
}

fn check_radius(field: &str, v: f64) -> Result<()> {
    check(
        field,
        v,
        v > 0.0 && v < 1.0,
        &format!("{field} must lie in (0, 1)"),
    )
}

fn check_positive(field: &str, v: f64) -> Result<()> {
    check(field, v, v > 0.0, &format!("{field} must be positive"))
}

fn check_count(field: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(field_err(field, format!("{field} must be at least 1")));
    }
    Ok(())
}

fn check_n(v: usize) -> Result<()> {
    if v == 0 {
        return Err(field_err("n", "n must be at least 1 (got 0)".into()));
    }
    Ok(())
}

fn check_gaps(field: &str, gaps: &[f64]) -> Result<()> {
    if gaps.is_empty() {
        return Err(field_err(
            field,
            "at least one shell gap is required".into(),
        ));
    }
    for g in gaps {
        check(
            field,
            *g,
            *g > 0.0 && *g < 1.0,
            "shell gaps must lie in (0, 1)",
        )?;
    }
    if gaps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(field_err(field, "shell gaps must decrease strictly".into()));
    }
    Ok(())
}

fn check_grid(field: &str, g: &SupGrid) -> Result<()> {
    if g.shells == 0 || g.directions == 0 {
        return Err(field_err(
            field,
            "grid needs at least one shell and one direction".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    GeometrySelftest,
    Lattice,
    Carleson,
    Opnorm,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::GeometrySelftest => "geometry-selftest",
            Command::Lattice => "lattice",
            Command::Carleson => "carleson",
            Command::Opnorm => "opnorm",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    dims: Option<Vec<usize>>,
    count: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    n: usize,
    r: f64,
    #[serde(rename = "R_max")]
    r_max: f64,
    rejection_budget: Option<usize>,
    coverage_probes: Option<usize>,
}

/// Measure descriptions accepted by `carleson`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// `count` draws from `nu_alpha`; `alpha` defaults to the run's alpha.
    NuSample {
        alpha: Option<f64>,
        count: usize,
    },
    PointMass {
        point: BallPoint,
        mass: f64,
    },
    Atoms {
        points: Vec<BallPoint>,
        weights: Vec<f64>,
    },
    /// Columnar CSV; relative paths are taken from the config directory.
    Csv {
        path: PathBuf,
    },
    /// Joint pull-back of `count` draws from `nu_beta` under `(phi, psi)`.
    Pullback {
        phi: HoloMap,
        psi: HoloMap,
        q: f64,
        beta: f64,
        count: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exponents {
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCarleson {
    n: usize,
    lambda: f64,
    alpha: f64,
    r: f64,
    s: Option<f64>,
    measure: MeasureSpec,
    grid: Option<SupGrid>,
    profile_gaps: Option<Vec<f64>>,
    profile_directions: Option<usize>,
    tail_shells: Option<usize>,
    exponents: Option<Exponents>,
    lattice_r_max: Option<f64>,
    nu_count: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawValidation {
    shells: Option<Vec<f64>>,
    directions: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOpnorm {
    n: Option<usize>,
    phi: HoloMap,
    psi: HoloMap,
    p: f64,
    q: f64,
    alpha: f64,
    beta: f64,
    alpha_samples: Option<usize>,
    beta_samples: Option<usize>,
    validation: Option<RawValidation>,
    #[serde(default)]
    estimator: OpnormConfig,
}

#[derive(Debug, Deserialize)]
struct RawRun {
    command: Option<Command>,
    seed: u64,
    output: Option<PathBuf>,
    #[serde(flatten)]
    rest: serde_json::Map<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometryJob {
    pub dims: Vec<usize>,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeJob {
    pub n: usize,
    pub r: f64,
    #[serde(rename = "R_max")]
    pub r_max: f64,
    pub rejection_budget: usize,
    pub coverage_probes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CarlesonJob {
    pub n: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub r: f64,
    pub s: f64,
    pub measure: MeasureSpec,
    pub grid: SupGrid,
    pub profile_gaps: Vec<f64>,
    pub profile_directions: usize,
    pub tail_shells: usize,
    pub exponents: Option<Exponents>,
    /// Lattice cutoff and `nu_alpha` sample size for the averaging quantities.
    pub lattice_r_max: f64,
    pub nu_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationJob {
    pub shells: Vec<f64>,
    pub directions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpnormJob {
    pub n: usize,
    pub phi: HoloMap,
    pub psi: HoloMap,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_samples: usize,
    pub beta_samples: usize,
    pub validation: ValidationJob,
    pub estimator: OpnormConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Job {
    Geometry(GeometryJob),
    Lattice(LatticeJob),
    Carleson(CarlesonJob),
    Opnorm(OpnormJob),
}

/// A validated run with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSpec {
    pub command: Command,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub parameters: Job,
    /// Directory of the config file, for relative input paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

pub fn parse_config(path: &Path) -> Result<RunSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_str(&text, base, None)
}

/// Parses a config; `expected` is the command named on the command line.
pub fn parse_str(text: &str, base_dir: PathBuf, expected: Option<Command>) -> Result<RunSpec> {
    let raw: RawRun = serde_json::from_str(text)?;
    let command = match (raw.command, expected) {
        (Some(c), Some(e)) if c != e => {
            return Err(field_err(
                "command",
                format!(
                    "config is for `{}` but `{}` was requested",
                    c.name(),
                    e.name()
                ),
            ))
        }
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => return Err(field_err("command", "missing command".into())),
    };
    let rest = serde_json::Value::Object(raw.rest);
    let parameters = match command {
        Command::GeometrySelftest => Job::Geometry(geometry(serde_json::from_value(rest)?)?),
        Command::Lattice => Job::Lattice(lattice(serde_json::from_value(rest)?)?),
        Command::Carleson => Job::Carleson(carleson(serde_json::from_value(rest)?)?),
        Command::Opnorm => Job::Opnorm(opnorm(serde_json::from_value(rest)?)?),
    };
    Ok(RunSpec {
        command,
        seed: raw.seed,
        output: raw.output,
        parameters,
        base_dir,
    })
}

fn geometry(raw: RawGeometry) -> Result<GeometryJob> {
    let dims = raw.dims.unwrap_or_else(|| DEFAULT_GEOMETRY_DIMS.to_vec());
    if dims.is_empty() || dims.contains(&0) {
        return Err(field_err("dims", "dimensions must be at least 1".into()));
    }
    let count = raw.count.unwrap_or(DEFAULT_GEOMETRY_COUNT);
    check_count("count", count)?;
    Ok(GeometryJob { dims, count })
}

fn lattice(raw: RawLattice) -> Result<LatticeJob> {
    check_n(raw.n)?;
    check_radius("r", raw.r)?;
    check_radius("R_max", raw.r_max)?;
    let rejection_budget = raw
        .rejection_budget
        .unwrap_or_else(|| holoball_core::lattice::default_rejection_budget(raw.r_max));
    check_count("rejection_budget", rejection_budget)?;
    let coverage_probes = raw.coverage_probes.unwrap_or(DEFAULT_COVERAGE_PROBES);
    Ok(LatticeJob {
        n: raw.n,
        r: raw.r,
        r_max: raw.r_max,
        rejection_budget,
        coverage_probes,
    })
}

fn measure(spec: MeasureSpec, alpha: f64) -> Result<MeasureSpec> {
    Ok(match spec {
        MeasureSpec::NuSample { alpha: a, count } => {
            let a = a.unwrap_or(alpha);
            check_alpha("measure.alpha", a)?;
            check_count("measure.count", count)?;
            MeasureSpec::NuSample {
                alpha: Some(a),
                count,
            }
        }
        MeasureSpec::PointMass { point, mass } => {
            check(
                "measure.mass",
                mass,
                mass >= 0.0,
                "measure.mass must be non-negative",
            )?;
            MeasureSpec::PointMass { point, mass }
        }
        MeasureSpec::Atoms { points, weights } => {
            if points.len() != weights.len() {
                return Err(field_err(
                    "measure.weights",
                    format!("{} points but {} weights", points.len(), weights.len()),
                ));
            }
            for w in &weights {
                check(
                    "measure.weights",
                    *w,
                    *w >= 0.0,
                    "weights must be non-negative",
                )?;
            }
            MeasureSpec::Atoms { points, weights }
        }
        MeasureSpec::Pullback {
            phi,
            psi,
            q,
            beta,
            count,
        } => {
            check_positive("measure.q", q)?;
            check_alpha("measure.beta", beta)?;
            check_count("measure.count", count)?;
            MeasureSpec::Pullback {
                phi,
                psi,
                q,
                beta,
                count,
            }
        }
        m @ MeasureSpec::Csv { .. } => m,
    })
}

fn carleson(raw: RawCarleson) -> Result<CarlesonJob> {
    check_n(raw.n)?;
    check_positive("lambda", raw.lambda)?;
    check_alpha("alpha", raw.alpha)?;
    check_radius("r", raw.r)?;
    let s = raw.s.unwrap_or(raw.n as f64 + 1.0 + raw.alpha);
    check_positive("s", s)?;
    let grid = raw.grid.unwrap_or_default();
    check_grid("grid", &grid)?;
    let profile_gaps = raw
        .profile_gaps
        .unwrap_or_else(|| dyadic_gaps(DEFAULT_PROFILE_SHELLS));
    check_gaps("profile_gaps", &profile_gaps)?;
    let profile_directions = raw.profile_directions.unwrap_or(DEFAULT_PROFILE_DIRECTIONS);
    check_count("profile_directions", profile_directions)?;
    let tail_shells = raw.tail_shells.unwrap_or(DEFAULT_TAIL_SHELLS);
    check_count("tail_shells", tail_shells)?;
    if let Some(e) = raw.exponents {
        check_positive("exponents.p", e.p)?;
        check_positive("exponents.q", e.q)?;
        if e.q >= e.p {
            return Err(field_err(
                "exponents.q",
                format!(
                    "the averaging quantities require q < p (got p = {}, q = {})",
                    e.p, e.q
                ),
            ));
        }
    }
    let lattice_r_max = raw.lattice_r_max.unwrap_or(DEFAULT_LATTICE_R_MAX);
    check_radius("lattice_r_max", lattice_r_max)?;
    let nu_count = raw.nu_count.unwrap_or(DEFAULT_NU_COUNT);
    check_count("nu_count", nu_count)?;
    Ok(CarlesonJob {
        n: raw.n,
        lambda: raw.lambda,
        alpha: raw.alpha,
        r: raw.r,
        s,
        measure: measure(raw.measure, raw.alpha)?,
        grid,
        profile_gaps,
        profile_directions,
        tail_shells,
        exponents: raw.exponents,
        lattice_r_max,
        nu_count,
    })
}

fn opnorm(raw: RawOpnorm) -> Result<OpnormJob> {
    let map_dim = |field: &str, m: &HoloMap| {
        m.dim()
            .map_err(|e| field_err(field, format!("invalid map: {e}")))
    };
    let dphi = map_dim("phi", &raw.phi)?;
    let dpsi = map_dim("psi", &raw.psi)?;
    if dphi != dpsi {
        return Err(field_err(
            "psi",
            format!("phi acts on C^{dphi} but psi on C^{dpsi}"),
        ));
    }
    let n = raw.n.unwrap_or(dphi);
    check_n(n)?;
    if n != dphi {
        return Err(field_err(
            "n",
            format!("n = {n} but the maps act on C^{dphi}"),
        ));
    }
    check_positive("p", raw.p)?;
    check_positive("q", raw.q)?;
    check_alpha("alpha", raw.alpha)?;
    check_alpha("beta", raw.beta)?;
    let alpha_samples = raw.alpha_samples.unwrap_or(DEFAULT_OPNORM_SAMPLES);
    check_count("alpha_samples", alpha_samples)?;
    let beta_samples = raw.beta_samples.unwrap_or(DEFAULT_OPNORM_SAMPLES);
    check_count("beta_samples", beta_samples)?;

    let v = raw.validation.unwrap_or(RawValidation {
        shells: None,
        directions: None,
    });
    let validation = ValidationJob {
        shells: v
            .shells
            .unwrap_or_else(|| DEFAULT_VALIDATION_SHELLS.to_vec()),
        directions: v.directions.unwrap_or(DEFAULT_VALIDATION_DIRECTIONS),
    };
    for s in &validation.shells {
        check_radius("validation.shells", *s)?;
    }
    check_count("validation.directions", validation.directions)?;

    let mut est = raw.estimator;
    let s = est.s.unwrap_or(n as f64 + 1.0 + raw.alpha);
    check_positive("estimator.s", s)?;
    est.s = Some(s);
    check_grid("estimator.grid", &est.grid)?;
    check_gaps("estimator.tail_gaps", &est.tail_gaps)?;
    check_count("estimator.tail_directions", est.tail_directions)?;
    check_count("estimator.tail_shells", est.tail_shells)?;
    check_radius("estimator.carleson_r", est.carleson_r)?;
    if est.lt {
        if raw.q >= raw.p {
            return Err(field_err(
                "q",
                format!(
                    "the L^t quantity (estimator.lt) requires q < p (got p = {}, q = {})",
                    raw.p, raw.q
                ),
            ));
        }
        let e = est
            .lt_kernel_exponent
            .unwrap_or(n as f64 + 1.0 + raw.alpha + s);
        check_positive("estimator.lt_kernel_exponent", e)?;
        est.lt_kernel_exponent = Some(e);
    }
    let d = &mut est.dictionary;
    for g in &d.gaps {
        check_radius("estimator.dictionary.gaps", *g)?;
    }
    if !d.gaps.is_empty() {
        check_count("estimator.dictionary.directions", d.directions)?;
    }
    let tf = d
        .test_fn
        .take()
        .unwrap_or_else(|| TestFnParams::with_defaults(n, raw.p, raw.alpha));
    if tf.p != raw.p || tf.alpha != raw.alpha {
        return Err(field_err(
            "estimator.dictionary.test_fn",
            format!(
                "test-function p and alpha must match the domain space (p = {}, alpha = {})",
                raw.p, raw.alpha
            ),
        ));
    }
    d.test_fn = Some(tf);
    Ok(OpnormJob {
        n,
        phi: raw.phi,
        psi: raw.psi,
        p: raw.p,
        q: raw.q,
        alpha: raw.alpha,
        beta: raw.beta,
        alpha_samples,
        beta_samples,
        validation,
        estimator: est,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunSpec> {
        parse_str(text, PathBuf::new(), None)
    }

    #[test]
    fn minimal_carleson_echoes_defaults() {
        let spec = parse(
            r#"{"command": "carleson", "n": 1, "lambda": 1, "alpha": 0, "r": 0.5, "seed": 7,
                "measure": {"type": "nu_sample", "count": 100}}"#,
        )
        .unwrap();
        let echo = serde_json::to_value(&spec).unwrap();
        let params = &echo["parameters"];
        assert_eq!(params["s"], 2.0);
        assert_eq!(params["measure"]["alpha"], 0.0);
        assert_eq!(params["grid"]["shells"], 8);
        assert_eq!(params["tail_shells"], 3);
        assert_eq!(params["profile_gaps"].as_array().unwrap().len(), 8);
        assert_eq!(echo["seed"], 7);
    }

    #[test]
    fn alpha_at_minus_one_names_alpha() {
        let err = parse(
            r#"{"command": "carleson", "n": 1, "lambda": 1, "alpha": -1, "r": 0.5, "seed": 7,
                "measure": {"type": "nu_sample", "count": 100}}"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("alpha:"), "{msg}");
        assert!(msg.contains("alpha must exceed -1"), "{msg}");
    }

    #[test]
    fn lt_needs_q_below_p() {
        let err = parse(
            r#"{"command": "opnorm", "seed": 1, "p": 1, "q": 2, "alpha": 0, "beta": 0,
                "phi": {"type": "diagonal", "multipliers": [[0.5, 0]]},
                "psi": {"type": "diagonal", "multipliers": [[0.2, 0]]},
                "estimator": {"lt": true}}"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("requires q < p"), "{msg}");
    }

    #[test]
    fn opnorm_defaults_are_explicit() {
        let spec = parse(
            r#"{"command": "opnorm", "seed": 1, "p": 2, "q": 1, "alpha": 0, "beta": 0,
                "phi": {"type": "diagonal", "multipliers": [[0.5, 0]]},
                "psi": {"type": "diagonal", "multipliers": [[0.2, 0]]},
                "estimator": {"lt": true}}"#,
        )
        .unwrap();
        let echo = serde_json::to_value(&spec).unwrap();
        let est = &echo["parameters"]["estimator"];
        assert_eq!(est["s"], 2.0);
        assert_eq!(est["lt_kernel_exponent"], 4.0);
        assert_eq!(est["dictionary"]["test_fn"]["N"], 4.0);
        assert_eq!(echo["parameters"]["n"], 1);
    }

    #[test]
    fn rejects_unknown_fields_and_missing_seed() {
        let unknown = parse(r#"{"command": "geometry-selftest", "seed": 1, "cuont": 5}"#);
        assert!(unknown.unwrap_err().to_string().contains("cuont"));
        let missing = parse(r#"{"command": "geometry-selftest"}"#);
        assert!(missing.unwrap_err().to_string().contains("seed"));
    }

    #[test]
    fn command_must_match() {
        let err = parse_str(
            r#"{"command": "lattice", "seed": 1, "n": 1, "r": 0.5, "R_max": 0.9}"#,
            PathBuf::new(),
            Some(Command::Carleson),
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("command:"));
    }
}
