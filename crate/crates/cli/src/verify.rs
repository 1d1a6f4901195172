//! The `verify` subcommand: a named battery of correctness checks run at
//! the configuration's resolution. Every check reports the measured value
//! and its threshold; a check passes when `measured <= threshold`.

use std::path::PathBuf;

use serde::Serialize;
use viscotherm::diagnostics;
use viscotherm::discretization::{check_poincare, node_to_mid_diff, q_weights};
use viscotherm::spectral;
use viscotherm::timestepper;
use viscotherm::{assemble_generator, build_grid, BoundaryMode, StateVector};

use crate::commands::short_trajectory;
use crate::config::RunConfig;
use crate::output::{create_run_dir, write_json};
use crate::CmdError;

#[derive(Debug, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl VerifyCheck {
    fn new(name: &str, measured: f64, threshold: f64) -> Self {
        VerifyCheck {
            name: name.to_string(),
            measured,
            threshold,
            pass: measured <= threshold,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub all_pass: bool,
    pub checks: Vec<VerifyCheck>,
}

const RANDOM_STATES: usize = 200;
const MAX_STEPS: usize = 2000;

pub fn verify(config: &RunConfig) -> Result<(PathBuf, bool), CmdError> {
    config.validate()?;
    let grid = build_grid(config.spec.length, config.grid.n)
        .map_err(|e| CmdError::Config(e.to_string()))?;
    let mut checks = Vec::new();

    // Dissipativity of both boundary regimes, regardless of the configured one.
    for bc in [BoundaryMode::DirichletTheta, BoundaryMode::DirichletFlux] {
        let mut spec = config.spec.clone();
        spec.bc = bc;
        let assembly =
            assemble_generator(&spec, &grid).map_err(|e| CmdError::Config(e.to_string()))?;
        let tag = match bc {
            BoundaryMode::DirichletTheta => "dirichlet_theta",
            BoundaryMode::DirichletFlux => "dirichlet_flux",
        };
        let h = grid.spacing;
        let mut max_form = f64::NEG_INFINITY;
        let mut max_identity = 0.0f64;
        for seed in 0..RANDOM_STATES as u64 {
            let x = StateVector::seeded_random(assembly.layout, seed);
            let ax = assembly
                .apply(&x)
                .map_err(|e| CmdError::Numerical(e.to_string()))?;
            let form = assembly
                .gram_inner(&ax, &x)
                .map_err(|e| CmdError::Numerical(e.to_string()))?;
            let dw = node_to_mid_diff(x.w().as_slice().unwrap(), h);
            let visc: f64 = dw
                .iter()
                .zip(&assembly.delta_mid)
                .map(|(d, del)| h * del * d * d)
                .sum();
            let flux: f64 = x
                .q()
                .iter()
                .zip(q_weights(&assembly.layout, &grid))
                .map(|(q, w)| w * q * q)
                .sum();
            let explicit = -2.0 * visc - spec.beta * flux;
            let scale = assembly
                .energy_norm_sq(&x)
                .map_err(|e| CmdError::Numerical(e.to_string()))?
                .max(1.0);
            max_form = max_form.max(form);
            max_identity = max_identity.max((form - explicit).abs() / scale);
        }
        checks.push(VerifyCheck::new(
            &format!("dissipativity_sign_{tag}"),
            max_form,
            0.0,
        ));
        checks.push(VerifyCheck::new(
            &format!("dissipativity_identity_{tag}"),
            max_identity,
            1e-12,
        ));
    }

    // Energy identities and monotonicity along the configured run.
    let assembly =
        assemble_generator(&config.spec, &grid).map_err(|e| CmdError::Config(e.to_string()))?;
    let initial = config.resolve_initial(&grid, config.spec.bc)?;
    let u0 = assembly
        .state_from_initial(&initial)
        .map_err(|e| CmdError::Config(e.to_string()))?;
    for (name, order_shift) in [("energy_identity_e1", 0usize), ("energy_identity_e2", 1)] {
        let start = timestepper::nth_time_derivative(&assembly, &u0, order_shift)
            .map_err(|e| CmdError::Numerical(e.to_string()))?;
        let e0 = diagnostics::energy(&assembly, &start, 1)
            .map_err(|e| CmdError::Numerical(e.to_string()))?;
        let traj = short_trajectory(config, &assembly, &start, MAX_STEPS)?;
        checks.push(VerifyCheck::new(
            name,
            traj.max_balance_residual(),
            1e-10 * e0.max(1.0),
        ));
    }
    {
        let traj = short_trajectory(config, &assembly, &u0, MAX_STEPS)?;
        let e1: Vec<f64> = traj
            .states
            .iter()
            .map(|s| diagnostics::energy(&assembly, s, 1))
            .collect::<Result<_, _>>()
            .map_err(|e| CmdError::Numerical(e.to_string()))?;
        let max_increase = e1
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(VerifyCheck::new(
            "energy_monotone_e1",
            max_increase,
            1e-12 * e1[0].max(1.0),
        ));
    }

    // Temperature-mean conservation under the flux regime.
    {
        let mut spec = config.spec.clone();
        spec.bc = BoundaryMode::DirichletFlux;
        let assembly =
            assemble_generator(&spec, &grid).map_err(|e| CmdError::Config(e.to_string()))?;
        let mut u0 = StateVector::seeded_random(assembly.layout, 2024);
        for i in assembly.layout.theta_range() {
            u0.values_mut()[i] += 0.5;
        }
        let mean0 = diagnostics::theta_mean(&assembly, &u0) * spec.length;
        let traj = short_trajectory(config, &assembly, &u0, MAX_STEPS)?;
        let drift = traj
            .states
            .iter()
            .map(|s| (diagnostics::theta_mean(&assembly, s) * spec.length - mean0).abs())
            .fold(0.0, f64::max);
        checks.push(VerifyCheck::new(
            "theta_mean_conservation",
            drift,
            1e-12 * mean0.abs().max(1.0),
        ));
    }

    // Discrete Poincare inequality and its extremizer.
    {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..RANDOM_STATES {
            let v: Vec<f64> = (0..grid.cells - 1)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let c = check_poincare(&v, &grid);
            worst = worst.max(c.lhs - c.discrete_constant * c.rhs);
        }
        checks.push(VerifyCheck::new("poincare_random", worst, 0.0));
        let eig: Vec<f64> = grid
            .interior_nodes()
            .iter()
            .map(|x| (std::f64::consts::PI * x / grid.length).sin())
            .collect();
        let c = check_poincare(&eig, &grid);
        checks.push(VerifyCheck::new(
            "poincare_extremal_equality",
            (c.lhs / c.rhs - c.discrete_constant).abs(),
            1e-12 * c.discrete_constant,
        ));
    }

    // Constants-based checks need the coupled system.
    if let Ok(consts) = diagnostics::lyapunov_constants(&config.spec, &grid) {
        let mut worst = f64::NEG_INFINITY;
        for seed in 0..RANDOM_STATES as u64 {
            let u = StateVector::seeded_random(assembly.layout, seed);
            let e1 = diagnostics::energy(&assembly, &u, 1)
                .map_err(|e| CmdError::Numerical(e.to_string()))?;
            let f1 = diagnostics::functional_f(&assembly, &u, 1)
                .map_err(|e| CmdError::Numerical(e.to_string()))?;
            worst = worst
                .max(-consts.mu0 * e1 - f1)
                .max(f1 - (consts.mu0 + consts.mu1) * e1);
        }
        checks.push(VerifyCheck::new("comparison_inequality_f1", worst, 0.0));
        let min_margin = (2.0 - consts.epsilon * consts.c2)
            .min(config.spec.beta - consts.epsilon * consts.c2)
            .min(1.0 - consts.epsilon * consts.mu0);
        checks.push(VerifyCheck::new(
            "lyapunov_constraint_margins",
            -min_margin,
            0.0,
        ));
    }

    // Temperature-gradient bound in the theta-Dirichlet regime.
    {
        let mut spec = config.spec.clone();
        spec.bc = BoundaryMode::DirichletTheta;
        let assembly =
            assemble_generator(&spec, &grid).map_err(|e| CmdError::Config(e.to_string()))?;
        let mut worst = f64::NEG_INFINITY;
        for seed in 0..RANDOM_STATES as u64 {
            let u = StateVector::seeded_random(assembly.layout, seed);
            let b = diagnostics::check_theta_x_bound(&assembly, &u)
                .map_err(|e| CmdError::Numerical(e.to_string()))?;
            worst = worst.max((b.lhs - b.rhs) / b.rhs.max(1.0));
        }
        checks.push(VerifyCheck::new("theta_gradient_bound", worst, 1e-12));
    }

    // Constant heat forcing: the staggered stationary solve reproduces the
    // closed-form flux q(x) = (x - L/2)/kappa exactly.
    {
        let mut spec = config.spec.clone();
        spec.bc = BoundaryMode::DirichletTheta;
        let assembly =
            assemble_generator(&spec, &grid).map_err(|e| CmdError::Config(e.to_string()))?;
        let mut f = StateVector::zeros(assembly.layout);
        for idx in assembly.layout.theta_range() {
            f.values_mut()[idx] = -1.0;
        }
        let sol = spectral::solve_stationary(&assembly, &f)
            .map_err(|e| CmdError::Numerical(e.to_string()))?;
        let q = sol.state.q();
        let err = grid
            .midpoints
            .iter()
            .enumerate()
            .map(|(i, x)| (q[i] - (x - spec.length / 2.0) / spec.kappa).abs())
            .fold(0.0, f64::max);
        checks.push(VerifyCheck::new("stationary_constant_forcing", err, 1e-10));
    }

    let all_pass = checks.iter().all(|c| c.pass);
    for check in &checks {
        println!(
            "{:<36} {}  measured {:>13.6e}  threshold {:>13.6e}",
            check.name,
            if check.pass { "PASS" } else { "FAIL" },
            check.measured,
            check.threshold
        );
    }
    let run_dir = create_run_dir(&config.outputs, &config.short_hash())?;
    write_json(
        &run_dir,
        "verify_report.json",
        &VerifyReport { all_pass, checks },
    )?;
    println!("wrote {}", run_dir.display());
    Ok((run_dir, all_pass))
}
