//! Energy and Lyapunov diagnostics.
//!
//! The order-n energy is the energy norm of the discrete n-th time
//! derivative: `E_n(U) = (1/2) <M V, V>` with `V = A^{n-1} U`. Its exact
//! semi-discrete decay rate is the dissipation form
//! `-2 sum_mid h delta (D w)^2 - beta sum w_q q^2` evaluated on `V`, equal to
//! `<M A V, V>` to round-off.
//!
//! The auxiliary functional `F_n = sum_node h m w' u' + sum_mid h delta (D u')^2`
//! (blocks of `V`) is squeezed between `-mu0 E_n` and `(mu0 + mu1) E_n`, and
//! `L_n = E_n + E_{n+1} + eps F_n` is the Lyapunov functional whose decay
//! rate `-eps C1 E_n` yields the `1/t` energy bound under the
//! temperature-Dirichlet regime.

use serde::Serialize;

use crate::discretization::{
    node_to_mid_diff, q_weights, theta_weights, GeneratorAssembly, StateVector,
};
use crate::error::{DiagnosticsError, DiscretizationError};
use crate::grid::Grid;
use crate::model::{BoundaryMode, ProblemSpec};
use crate::timestepper::{dissipation_rate, Trajectory};

/// `E_n(U) = (1/2) ||A^{n-1} U||_H^2`, for `n >= 1`.
pub fn energy(
    assembly: &GeneratorAssembly,
    u: &StateVector,
    n: usize,
) -> Result<f64, DiscretizationError> {
    let v = shift_state(assembly, u, n)?;
    Ok(0.5 * assembly.energy_norm_sq(&v)?)
}

/// Exact decay rate of `E_n`: the dissipation form on `V = A^{n-1} U`.
/// Always `<= 0`; equals `<M A V, V>` to round-off.
pub fn dissipation(
    assembly: &GeneratorAssembly,
    u: &StateVector,
    n: usize,
) -> Result<f64, DiscretizationError> {
    let v = shift_state(assembly, u, n)?;
    Ok(dissipation_rate(assembly, &v))
}

/// `F_n(U) = sum_node h m w' u' + sum_mid h delta (D u')^2` with
/// `(u', w')` the displacement and velocity blocks of `A^{n-1} U`.
pub fn functional_f(
    assembly: &GeneratorAssembly,
    u: &StateVector,
    n: usize,
) -> Result<f64, DiscretizationError> {
    let v = shift_state(assembly, u, n)?;
    let h = assembly.grid.spacing;
    let cross: f64 = v
        .w()
        .iter()
        .zip(v.u().iter())
        .zip(&assembly.m_node)
        .map(|((w, u), m)| h * m * w * u)
        .sum();
    let du = node_to_mid_diff(v.u().as_slice().unwrap(), h);
    let strain: f64 = du
        .iter()
        .zip(&assembly.delta_mid)
        .map(|(d, del)| h * del * d * d)
        .sum();
    Ok(cross + strain)
}

fn shift_state(
    assembly: &GeneratorAssembly,
    u: &StateVector,
    n: usize,
) -> Result<StateVector, DiscretizationError> {
    assert!(n >= 1, "energy order starts at 1");
    let mut v = u.clone();
    for _ in 1..n {
        v = assembly.apply(&v)?;
    }
    Ok(v)
}

/// Explicit constants of the comparison and remainder estimates, with the
/// deterministic choices `alpha = pi^2 inf p / (eta L^2)` (which pins
/// `C1 = 3/2`) and a 1/2 safety factor inside the epsilon constraints.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LyapunovConstants {
    pub mu0: f64,
    pub mu1: f64,
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub epsilon: f64,
    pub c_final: f64,
}

/// Compute the constants from coefficient extrema sampled at the grid's
/// nodes and midpoints. Requires `eta > 0`; the constants are not defined
/// for the decoupled system.
pub fn lyapunov_constants(
    spec: &ProblemSpec,
    grid: &Grid,
) -> Result<LyapunovConstants, DiagnosticsError> {
    if !(spec.eta > 0.0) {
        return Err(DiagnosticsError::ConstantsUnavailable(
            "eta must be strictly positive for the Lyapunov constants".into(),
        ));
    }
    let mut points = grid.nodes.clone();
    points.extend_from_slice(&grid.midpoints);
    let sample = |c: &crate::model::CoefficientDef| -> Result<Vec<f64>, DiagnosticsError> {
        c.sample(&points, spec.length)
            .map_err(|e| DiagnosticsError::ConstantsUnavailable(e.to_string()))
    };
    let m = sample(&spec.m)?;
    let p = sample(&spec.p)?;
    let delta = sample(&spec.delta)?;
    let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let (m_sup, p_inf) = (max(&m), min(&p));
    let (delta_sup, delta_inf) = (max(&delta), min(&delta));
    if !(p_inf > 0.0) || !(delta_inf > 0.0) {
        return Err(DiagnosticsError::ConstantsUnavailable(
            "coefficients must be strictly positive on the sampled grid".into(),
        ));
    }

    let pi = std::f64::consts::PI;
    let l = spec.length;
    let (eta, kappa, tau, beta) = (spec.eta, spec.kappa, spec.tau, spec.beta);

    let mu0 = (2.0 * l / pi) * (2.0 * m_sup / p_inf).sqrt();
    let mu1 = delta_sup / p_inf;
    let alpha = pi * pi * p_inf / (eta * l * l);
    let c1 = 2.0 - eta * l * l * alpha / (2.0 * pi * pi * p_inf);
    let poincare_block = l * l / (pi * pi) + eta / (2.0 * alpha);
    let flux_block = poincare_block * (beta + tau) * (beta + tau) / (kappa * kappa);
    let c2 = (tau + flux_block)
        .max(flux_block)
        .max(2.0 * l * l * m_sup / (pi * pi * delta_inf));
    let epsilon = 0.5 * (2.0 / c2).min(beta / c2).min(1.0 / mu0);
    let c_final = 1.0 / (epsilon * c1) + epsilon * (mu0 + mu1);

    Ok(LyapunovConstants {
        mu0,
        mu1,
        alpha,
        c1,
        c2,
        epsilon,
        c_final,
    })
}

/// `L_n(U) = E_n + E_{n+1} + eps F_n`.
pub fn lyapunov(
    assembly: &GeneratorAssembly,
    u: &StateVector,
    n: usize,
    consts: &LyapunovConstants,
) -> Result<f64, DiscretizationError> {
    Ok(energy(assembly, u, n)?
        + energy(assembly, u, n + 1)?
        + consts.epsilon * functional_f(assembly, u, n)?)
}

/// Quadrature mean of the temperature block over `[0, L]`.
pub fn theta_mean(assembly: &GeneratorAssembly, u: &StateVector) -> f64 {
    let w = theta_weights(&assembly.layout, &assembly.grid);
    let total: f64 = u.theta().iter().zip(&w).map(|(t, wi)| t * wi).sum();
    total / assembly.grid.length
}

/// Both sides of the temperature-gradient estimate
/// `sum_mid h (D theta)^2 <= ((beta+tau)/kappa)^2 (sum h q_t^2 + sum h q^2)`,
/// with `q_t` read from the flux rows of `A U`. Temperature-Dirichlet only.
#[derive(Debug, Clone, Copy)]
pub struct ThetaGradientBound {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn check_theta_x_bound(
    assembly: &GeneratorAssembly,
    u: &StateVector,
) -> Result<ThetaGradientBound, DiagnosticsError> {
    if assembly.layout.bc != BoundaryMode::DirichletTheta {
        return Err(DiagnosticsError::WrongBoundaryMode {
            expected: BoundaryMode::DirichletTheta,
            got: assembly.layout.bc,
        });
    }
    let h = assembly.grid.spacing;
    let dtheta = node_to_mid_diff(u.theta().as_slice().unwrap(), h);
    let lhs: f64 = dtheta.iter().map(|d| h * d * d).sum();
    let au = assembly.apply(u).expect("layout checked by construction");
    let spec = &assembly.spec;
    let factor = (spec.beta + spec.tau) * (spec.beta + spec.tau) / (spec.kappa * spec.kappa);
    let qw = q_weights(&assembly.layout, &assembly.grid);
    let q_sq: f64 = u.q().iter().zip(&qw).map(|(q, w)| w * q * q).sum();
    let qt_sq: f64 = au.q().iter().zip(&qw).map(|(q, w)| w * q * q).sum();
    Ok(ThetaGradientBound {
        lhs,
        rhs: factor * (qt_sq + q_sq),
    })
}

/// Decay law fitted to an energy series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// `E ~ a exp(-rate t)`; `rate` is the fitted omega.
    Exponential,
    /// `E ~ a t^rate`; `rate` is the fitted log-log slope.
    Polynomial,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub rate: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Least-squares fit of `log E` against `t` (exponential) or `log t`
/// (polynomial) over a time window; `window = None` uses the last 60% of
/// the samples. Needs at least 10 samples with positive energy.
pub fn fit_decay(
    times: &[f64],
    energies: &[f64],
    model: DecayModel,
    window: Option<(f64, f64)>,
) -> Result<DecayFit, DiagnosticsError> {
    assert_eq!(times.len(), energies.len());
    let selected: Vec<(f64, f64)> = match window {
        Some((lo, hi)) => times
            .iter()
            .zip(energies)
            .filter(|(t, _)| (lo..=hi).contains(*t))
            .map(|(t, e)| (*t, *e))
            .collect(),
        None => {
            let start = (0.4 * times.len() as f64).floor() as usize;
            times[start..]
                .iter()
                .zip(&energies[start..])
                .map(|(t, e)| (*t, *e))
                .collect()
        }
    };
    let usable: Vec<(f64, f64)> = match model {
        DecayModel::Exponential => selected,
        // log t needs t > 0
        DecayModel::Polynomial => selected.into_iter().filter(|(t, _)| *t > 0.0).collect(),
    };
    if usable.len() < 10 {
        return Err(DiagnosticsError::TooFewSamples {
            needed: 10,
            got: usable.len(),
        });
    }
    for (t, e) in &usable {
        if !(*e > 0.0) {
            return Err(DiagnosticsError::NonPositiveEnergy { t: *t, value: *e });
        }
    }
    let xs: Vec<f64> = usable
        .iter()
        .map(|(t, _)| match model {
            DecayModel::Exponential => *t,
            DecayModel::Polynomial => t.ln(),
        })
        .collect();
    let ys: Vec<f64> = usable.iter().map(|(_, e)| e.ln()).collect();
    let (slope, r_squared) = linear_regression(&xs, &ys);
    let rate = match model {
        DecayModel::Exponential => -slope,
        DecayModel::Polynomial => slope,
    };
    Ok(DecayFit {
        model,
        rate,
        r_squared,
        window: (usable[0].0, usable[usable.len() - 1].0),
    })
}

fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let fit = mean_y + slope * (x - mean_x);
            (y - fit) * (y - fit)
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, r_squared)
}

/// Verdict of the `t E_1(t) <= C (E_1(0) + E_2(0))` bound over a sampled
/// trajectory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PolynomialBoundReport {
    /// Max over samples with `t > 0` of `t E_1(t) / (E_1(0) + E_2(0))`.
    pub max_ratio: f64,
    pub c_final: f64,
    pub pass: bool,
}

/// Check the polynomial decay bound on a raw energy series.
pub fn check_polynomial_bound_series(
    times: &[f64],
    e1: &[f64],
    e1_initial: f64,
    e2_initial: f64,
    consts: &LyapunovConstants,
) -> PolynomialBoundReport {
    let denom = e1_initial + e2_initial;
    let mut max_weighted = 0.0f64;
    for (t, e) in times.iter().zip(e1) {
        if *t > 0.0 {
            max_weighted = max_weighted.max(t * e);
        }
    }
    let pass = max_weighted <= consts.c_final * denom;
    let max_ratio = if denom > 0.0 {
        max_weighted / denom
    } else {
        max_weighted
    };
    PolynomialBoundReport {
        max_ratio,
        c_final: consts.c_final,
        pass,
    }
}

/// Check the polynomial decay bound along a computed trajectory.
pub fn check_polynomial_bound(
    assembly: &GeneratorAssembly,
    trajectory: &Trajectory,
    consts: &LyapunovConstants,
) -> Result<PolynomialBoundReport, DiscretizationError> {
    let e1: Vec<f64> = trajectory
        .states
        .iter()
        .map(|s| energy(assembly, s, 1))
        .collect::<Result<_, _>>()?;
    let e1_initial = e1[0];
    let e2_initial = energy(assembly, &trajectory.states[0], 2)?;
    Ok(check_polynomial_bound_series(
        &trajectory.times,
        &e1,
        e1_initial,
        e2_initial,
        consts,
    ))
}

/// Per-sample diagnostic row: energies and dissipation rates of orders
/// `1..=n_max` plus the temperature mean.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub t: f64,
    pub energies: Vec<f64>,
    pub dissipations: Vec<f64>,
    pub theta_mean: f64,
}

pub fn energy_report(
    assembly: &GeneratorAssembly,
    u: &StateVector,
    t: f64,
    n_max: usize,
) -> Result<EnergyReport, DiscretizationError> {
    let mut energies = Vec::with_capacity(n_max);
    let mut dissipations = Vec::with_capacity(n_max);
    let mut v = u.clone();
    for order in 1..=n_max {
        energies.push(0.5 * assembly.energy_norm_sq(&v)?);
        dissipations.push(dissipation_rate(assembly, &v));
        if order < n_max {
            v = assembly.apply(&v)?;
        }
    }
    Ok(EnergyReport {
        t,
        energies,
        dissipations,
        theta_mean: theta_mean(assembly, u),
    })
}
