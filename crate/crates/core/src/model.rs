//! Physical problem definition: coefficients, parameters, boundary regimes,
//! initial-data presets and hypothesis validation.
//!
//! All quantities are nondimensional. Coefficients are kept symbolic
//! (kind + parameters) and sampled per grid so refinement studies resample
//! instead of interpolating coarse data.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::grid::Grid;

/// Spatially varying coefficient: a constant, a piecewise-linear table, or a
/// built-in profile (`a + b x` ramp, `a + b sin^2(pi x / L)` bump).
///
/// Tables are interpolated linearly between breakpoints and extended by their
/// end values, so every kind is evaluable on all of `[0, L]`; strict
/// positivity is policed by [`validate_spec`], not here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "CoefficientRepr", into = "CoefficientRepr")]
pub enum CoefficientDef {
    Constant(f64),
    Table { x: Vec<f64>, v: Vec<f64> },
    LinearRamp { a: f64, b: f64 },
    SmoothBump { a: f64, b: f64 },
}

/// Wire form: a bare number means a constant, otherwise `{kind, params}`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoefficientRepr {
    Number(f64),
    Tagged(TaggedCoefficient),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
enum TaggedCoefficient {
    Constant { value: f64 },
    Table { x: Vec<f64>, v: Vec<f64> },
    LinearRamp { a: f64, b: f64 },
    SmoothBump { a: f64, b: f64 },
}

impl From<CoefficientRepr> for CoefficientDef {
    fn from(r: CoefficientRepr) -> Self {
        match r {
            CoefficientRepr::Number(value) => CoefficientDef::Constant(value),
            CoefficientRepr::Tagged(t) => match t {
                TaggedCoefficient::Constant { value } => CoefficientDef::Constant(value),
                TaggedCoefficient::Table { x, v } => CoefficientDef::Table { x, v },
                TaggedCoefficient::LinearRamp { a, b } => CoefficientDef::LinearRamp { a, b },
                TaggedCoefficient::SmoothBump { a, b } => CoefficientDef::SmoothBump { a, b },
            },
        }
    }
}

impl From<CoefficientDef> for CoefficientRepr {
    fn from(c: CoefficientDef) -> Self {
        match c {
            CoefficientDef::Constant(value) => CoefficientRepr::Number(value),
            CoefficientDef::Table { x, v } => {
                CoefficientRepr::Tagged(TaggedCoefficient::Table { x, v })
            }
            CoefficientDef::LinearRamp { a, b } => {
                CoefficientRepr::Tagged(TaggedCoefficient::LinearRamp { a, b })
            }
            CoefficientDef::SmoothBump { a, b } => {
                CoefficientRepr::Tagged(TaggedCoefficient::SmoothBump { a, b })
            }
        }
    }
}

impl CoefficientDef {
    pub fn constant(value: f64) -> Self {
        CoefficientDef::Constant(value)
    }

    /// Evaluate at a single point of `[0, length]`.
    pub fn evaluate(&self, x: f64, length: f64) -> Result<f64, ModelError> {
        if !(0.0..=length).contains(&x) {
            return Err(ModelError::PointOutsideDomain { x, length });
        }
        match self {
            CoefficientDef::Constant(v) => Ok(*v),
            CoefficientDef::LinearRamp { a, b } => Ok(a + b * x),
            CoefficientDef::SmoothBump { a, b } => {
                let s = (std::f64::consts::PI * x / length).sin();
                Ok(a + b * s * s)
            }
            CoefficientDef::Table { x: xs, v: vs } => {
                if xs.len() < 2 || xs.len() != vs.len() {
                    return Err(ModelError::MalformedTable);
                }
                if xs.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(ModelError::UnsortedTable);
                }
                if x <= xs[0] {
                    return Ok(vs[0]);
                }
                if x >= *xs.last().unwrap() {
                    return Ok(*vs.last().unwrap());
                }
                let i = xs.partition_point(|&xk| xk <= x) - 1;
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                Ok(vs[i] + t * (vs[i + 1] - vs[i]))
            }
        }
    }

    /// Pointwise evaluation at a list of points.
    pub fn sample(&self, points: &[f64], length: f64) -> Result<Vec<f64>, ModelError> {
        points.iter().map(|&x| self.evaluate(x, length)).collect()
    }
}

/// Pointwise evaluation of a coefficient; table kinds interpolate linearly.
pub fn sample_coefficient(
    c: &CoefficientDef,
    points: &[f64],
    length: f64,
) -> Result<Vec<f64>, ModelError> {
    c.sample(points, length)
}

/// Which thermal unknown carries the homogeneous Dirichlet condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Temperature held at zero on both ends (flux free).
    DirichletTheta,
    /// Heat flux held at zero on both ends (temperature free, mean conserved).
    DirichletFlux,
}

/// Full problem definition: rod length, inhomogeneous coefficients, coupling
/// and relaxation parameters, and the boundary regime.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    /// Domain length.
    #[serde(rename = "L")]
    pub length: f64,
    /// Mass density per unit length.
    pub m: CoefficientDef,
    /// Stiffness (wave-speed) coefficient.
    pub p: CoefficientDef,
    /// Kelvin-Voigt damping coefficient.
    pub delta: CoefficientDef,
    /// Thermo-mechanical coupling constant.
    pub eta: f64,
    /// Thermal coupling constant.
    pub kappa: f64,
    /// Relaxation time of the flux law.
    pub tau: f64,
    /// Flux damping constant.
    pub beta: f64,
    pub bc: BoundaryMode,
}

/// Outcome of hypothesis validation; an empty list of violations means valid.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check the standing hypotheses by sampling each coefficient at
/// `n_check + 1` uniform points of `[0, L]`.
///
/// Scalar parameters must be strictly positive, except `eta`, where zero is
/// accepted (the decoupled limit used by diagnostic reference cases).
pub fn validate_spec(spec: &ProblemSpec, n_check: usize) -> ValidationReport {
    let mut violations = Vec::new();
    let mut scalar = |name: &str, value: f64, strict: bool| {
        let bad = if strict {
            !(value > 0.0)
        } else {
            !(value >= 0.0)
        };
        if bad || !value.is_finite() {
            violations.push(format!(
                "{name} must be {} positive, got {value}",
                if strict { "strictly" } else { "non-negatively" }
            ));
        }
    };
    scalar("L", spec.length, true);
    scalar("eta", spec.eta, false);
    scalar("kappa", spec.kappa, true);
    scalar("tau", spec.tau, true);
    scalar("beta", spec.beta, true);
    if !violations.is_empty() && !(spec.length > 0.0) {
        // No domain to sample on.
        return ValidationReport { violations };
    }

    let n = n_check.max(1);
    let points: Vec<f64> = (0..=n).map(|j| spec.length * j as f64 / n as f64).collect();
    for (name, coef) in [("m", &spec.m), ("p", &spec.p), ("delta", &spec.delta)] {
        match coef.sample(&points, spec.length) {
            Ok(values) => {
                for (x, v) in points.iter().zip(values.iter()) {
                    if !(*v > 0.0) || !v.is_finite() {
                        violations.push(format!("{name} not strictly positive: {name}({x}) = {v}"));
                        break;
                    }
                }
            }
            Err(e) => violations.push(format!("{name} not evaluable: {e}")),
        }
    }
    ValidationReport { violations }
}

/// Initial data on the staggered grids of a boundary regime.
///
/// `u0`, `w0` are nodal (length `N+1`) and vanish at both boundary nodes.
/// Under [`BoundaryMode::DirichletTheta`], `theta0` is nodal with zero
/// boundary values and `q0` lives at the `N` midpoints; under
/// [`BoundaryMode::DirichletFlux`] the roles swap: `theta0` at midpoints,
/// `q0` nodal with zero boundary values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialData {
    pub bc: BoundaryMode,
    pub u0: Vec<f64>,
    pub w0: Vec<f64>,
    pub theta0: Vec<f64>,
    pub q0: Vec<f64>,
}

fn check_boundary_zero(field: &'static str, values: &[f64]) -> Result<(), ModelError> {
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    for node in [0, values.len() - 1] {
        if values[node].abs() > 1e-12 * scale {
            return Err(ModelError::BoundaryNotZero {
                field,
                node,
                value: values[node],
            });
        }
    }
    Ok(())
}

fn check_len(field: &'static str, got: usize, expected: usize) -> Result<(), ModelError> {
    if got != expected {
        return Err(ModelError::FieldLength {
            field,
            got,
            expected,
        });
    }
    Ok(())
}

impl InitialData {
    pub fn new(
        bc: BoundaryMode,
        u0: Vec<f64>,
        w0: Vec<f64>,
        theta0: Vec<f64>,
        q0: Vec<f64>,
        grid: &Grid,
    ) -> Result<Self, ModelError> {
        let n = grid.cells;
        check_len("u0", u0.len(), n + 1)?;
        check_len("w0", w0.len(), n + 1)?;
        check_boundary_zero("u0", &u0)?;
        check_boundary_zero("w0", &w0)?;
        match bc {
            BoundaryMode::DirichletTheta => {
                check_len("theta0", theta0.len(), n + 1)?;
                check_len("q0", q0.len(), n)?;
                check_boundary_zero("theta0", &theta0)?;
            }
            BoundaryMode::DirichletFlux => {
                check_len("theta0", theta0.len(), n)?;
                check_len("q0", q0.len(), n + 1)?;
                check_boundary_zero("q0", &q0)?;
            }
        }
        Ok(InitialData {
            bc,
            u0,
            w0,
            theta0,
            q0,
        })
    }

    pub fn zero(bc: BoundaryMode, grid: &Grid) -> Self {
        let n = grid.cells;
        let (theta_len, q_len) = match bc {
            BoundaryMode::DirichletTheta => (n + 1, n),
            BoundaryMode::DirichletFlux => (n, n + 1),
        };
        InitialData {
            bc,
            u0: vec![0.0; n + 1],
            w0: vec![0.0; n + 1],
            theta0: vec![0.0; theta_len],
            q0: vec![0.0; q_len],
        }
    }
}

/// Named initial-data presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialPreset {
    /// `u0 = sin(k pi x / L)` at nodes, all other fields zero.
    ElasticMode(usize),
    /// k-th thermal eigenshape compatible with the boundary regime, all
    /// other fields zero.
    ThermalMode(usize),
    /// Low-pass-filtered seeded noise with boundary constraints enforced.
    RandomSmooth { seed: u64 },
}

impl std::str::FromStr for InitialPreset {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::UnknownPreset(s.to_string());
        if let Some(k) = s.strip_prefix("elastic_mode_") {
            let k: usize = k.parse().map_err(|_| bad())?;
            if k == 0 {
                return Err(bad());
            }
            return Ok(InitialPreset::ElasticMode(k));
        }
        if let Some(k) = s.strip_prefix("thermal_mode_") {
            let k: usize = k.parse().map_err(|_| bad())?;
            if k == 0 {
                return Err(bad());
            }
            return Ok(InitialPreset::ThermalMode(k));
        }
        if s == "random_smooth" {
            return Ok(InitialPreset::RandomSmooth { seed: 0 });
        }
        if let Some(seed) = s.strip_prefix("random_smooth_") {
            let seed: u64 = seed.parse().map_err(|_| bad())?;
            return Ok(InitialPreset::RandomSmooth { seed });
        }
        Err(bad())
    }
}

fn sine_at_nodes(k: usize, grid: &Grid) -> Vec<f64> {
    let mut v: Vec<f64> = grid
        .nodes
        .iter()
        .map(|&x| (k as f64 * std::f64::consts::PI * x / grid.length).sin())
        .collect();
    // sin(k pi) is only zero up to round-off when sampled; the boundary
    // values are eliminated unknowns and must be exact zeros.
    v[0] = 0.0;
    *v.last_mut().unwrap() = 0.0;
    v
}

fn cosine_at_midpoints(k: usize, grid: &Grid) -> Vec<f64> {
    grid.midpoints
        .iter()
        .map(|&x| (k as f64 * std::f64::consts::PI * x / grid.length).cos())
        .collect()
}

/// Construct one of the named presets on the given grid and boundary regime.
pub fn make_preset_initial(
    preset: InitialPreset,
    grid: &Grid,
    bc: BoundaryMode,
) -> Result<InitialData, ModelError> {
    let mut data = InitialData::zero(bc, grid);
    match preset {
        InitialPreset::ElasticMode(k) => {
            data.u0 = sine_at_nodes(k, grid);
        }
        InitialPreset::ThermalMode(k) => {
            data.theta0 = match bc {
                BoundaryMode::DirichletTheta => sine_at_nodes(k, grid),
                // Midpoint sums of cos(k pi x / L) over a uniform staggered
                // grid cancel exactly, so this shape has zero discrete mean.
                BoundaryMode::DirichletFlux => cosine_at_midpoints(k, grid),
            };
        }
        InitialPreset::RandomSmooth { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n_modes = 4.min(grid.cells / 2).max(1);
            let mut field = |shapes: &dyn Fn(usize) -> Vec<f64>| {
                let mut out = shapes(1).iter().map(|_| 0.0).collect::<Vec<f64>>();
                for k in 1..=n_modes {
                    let amp: f64 = rng.gen_range(-1.0..1.0) / (k * k) as f64;
                    for (o, s) in out.iter_mut().zip(shapes(k)) {
                        *o += amp * s;
                    }
                }
                out
            };
            data.u0 = field(&|k| sine_at_nodes(k, grid));
            data.w0 = field(&|k| sine_at_nodes(k, grid));
            match bc {
                BoundaryMode::DirichletTheta => {
                    data.theta0 = field(&|k| sine_at_nodes(k, grid));
                    data.q0 = field(&|k| cosine_at_midpoints(k, grid));
                }
                BoundaryMode::DirichletFlux => {
                    data.theta0 = field(&|k| cosine_at_midpoints(k, grid));
                    data.q0 = field(&|k| sine_at_nodes(k, grid));
                }
            }
        }
    }
    Ok(data)
}

/// Subtract the quadrature mean so the discrete mean over `[0, L]` vanishes.
///
/// `theta` lives at the midpoints (the temperature grid of a flux-Dirichlet
/// assembly). Idempotent to round-off.
pub fn enforce_zero_mean(theta: &[f64], grid: &Grid) -> Vec<f64> {
    let total: f64 = theta
        .iter()
        .zip(&grid.midpoint_weights)
        .map(|(t, w)| t * w)
        .sum();
    let mean = total / grid.length;
    theta.iter().map(|t| t - mean).collect()
}
