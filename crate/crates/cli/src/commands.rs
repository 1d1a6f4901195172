//! Subcommand implementations.

use std::path::PathBuf;

use viscotherm::diagnostics::{self, DecayFit, DecayModel, LyapunovConstants};
use viscotherm::spectral::{self, Poly, StationaryOracle};
use viscotherm::timestepper::{self, Trajectory};
use viscotherm::{assemble_generator, build_grid, BoundaryMode, GeneratorAssembly, StateVector};

use crate::config::RunConfig;
use crate::output::{create_run_dir, csv_body, write_atomic, write_json};
use crate::CmdError;

use serde::Serialize;

pub fn simulate(config: &RunConfig) -> Result<PathBuf, CmdError> {
    config.validate()?;
    let grid = build_grid(config.spec.length, config.grid.n)
        .map_err(|e| CmdError::Config(e.to_string()))?;
    let assembly =
        assemble_generator(&config.spec, &grid).map_err(|e| CmdError::Config(e.to_string()))?;
    let initial = config.resolve_initial(&grid, config.spec.bc)?;
    let u0 = assembly
        .state_from_initial(&initial)
        .map_err(|e| CmdError::Config(e.to_string()))?;

    let traj = timestepper::integrate(
        &assembly,
        &u0,
        config.time.dt,
        config.time.t_final,
        config.time.sample_stride,
    )
    .map_err(|e| CmdError::Numerical(e.to_string()))?;

    // Constants are undefined in the decoupled (eta = 0) limit; the Lyapunov
    // column then degrades to E1 + E2.
    let consts = diagnostics::lyapunov_constants(&config.spec, &grid).ok();
    let epsilon = consts.as_ref().map(|c| c.epsilon).unwrap_or(0.0);

    let theta_bc = config.spec.bc == BoundaryMode::DirichletTheta;
    let mut header = vec!["t", "E1", "E2", "D1", "F1", "L1", "theta_mean"];
    if theta_bc {
        header.push("theta_x_lhs");
        header.push("theta_x_rhs");
    }
    header.push("energy_balance_residual");

    let stride = traj.sample_stride;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(traj.states.len());
    let mut e1_series = Vec::with_capacity(traj.states.len());
    for (i, (t, state)) in traj.times.iter().zip(&traj.states).enumerate() {
        let report = diagnostics::energy_report(&assembly, state, *t, 2)
            .map_err(|e| CmdError::Numerical(e.to_string()))?;
        let f1 = diagnostics::functional_f(&assembly, state, 1)
            .map_err(|e| CmdError::Numerical(e.to_string()))?;
        let l1 = report.energies[0] + report.energies[1] + epsilon * f1;
        e1_series.push(report.energies[0]);
        let mut row = vec![
            *t,
            report.energies[0],
            report.energies[1],
            report.dissipations[0],
            f1,
            l1,
            report.theta_mean,
        ];
        if theta_bc {
            let bound = diagnostics::check_theta_x_bound(&assembly, state)
                .map_err(|e| CmdError::Numerical(e.to_string()))?;
            row.push(bound.lhs);
            row.push(bound.rhs);
        }
        // worst per-step balance residual since the previous sample
        let residual = if i == 0 {
            0.0
        } else {
            traj.balance_residuals[(i - 1) * stride..(i * stride).min(traj.balance_residuals.len())]
                .iter()
                .cloned()
                .fold(0.0, f64::max)
        };
        row.push(residual);
        rows.push(row);
    }

    let run_dir = create_run_dir(&config.outputs, &config.short_hash())?;
    write_atomic(
        &run_dir,
        "trajectory.csv",
        csv_body(&header, rows.into_iter()).as_bytes(),
    )?;
    write_json(&run_dir, "constants.json", &ConstantsDoc::from(&consts))?;

    let fit = |model| diagnostics::fit_decay(&traj.times, &e1_series, model, None).ok();
    let summary = SimulateSummary {
        config_hash: config.short_hash(),
        bc: config.spec.bc,
        n: config.grid.n,
        dt: config.time.dt,
        t_final: config.time.t_final,
        sample_stride: stride,
        e1_initial: e1_series[0],
        e1_final: *e1_series.last().unwrap(),
        max_energy_balance_residual: traj.max_balance_residual(),
        exponential_fit: fit(DecayModel::Exponential),
        polynomial_fit: fit(DecayModel::Polynomial),
    };
    write_json(&run_dir, "summary.json", &summary)?;
    println!("wrote {}", run_dir.display());
    Ok(run_dir)
}

#[derive(Serialize)]
struct SimulateSummary {
    config_hash: String,
    bc: BoundaryMode,
    n: usize,
    dt: f64,
    t_final: f64,
    sample_stride: usize,
    e1_initial: f64,
    e1_final: f64,
    max_energy_balance_residual: f64,
    exponential_fit: Option<DecayFit>,
    polynomial_fit: Option<DecayFit>,
}

#[derive(Serialize)]
struct ConstantsDoc {
    available: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    constants: Option<LyapunovConstants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

impl From<&Option<LyapunovConstants>> for ConstantsDoc {
    fn from(consts: &Option<LyapunovConstants>) -> Self {
        match consts {
            Some(c) => ConstantsDoc {
                available: true,
                constants: Some(*c),
                note: None,
            },
            None => ConstantsDoc {
                available: false,
                constants: None,
                note: Some("constants require eta > 0".into()),
            },
        }
    }
}

fn assembly_from(config: &RunConfig) -> Result<GeneratorAssembly, CmdError> {
    config.validate()?;
    let grid = build_grid(config.spec.length, config.grid.n)
        .map_err(|e| CmdError::Config(e.to_string()))?;
    assemble_generator(&config.spec, &grid).map_err(|e| CmdError::Config(e.to_string()))
}

pub fn spectrum(config: &RunConfig) -> Result<PathBuf, CmdError> {
    let assembly = assembly_from(config)?;
    let report =
        spectral::eigenvalues(&assembly).map_err(|e| CmdError::Numerical(e.to_string()))?;
    let run_dir = create_run_dir(&config.outputs, &config.short_hash())?;
    write_atomic(
        &run_dir,
        "spectrum.csv",
        csv_body(
            &["re", "im"],
            report.eigenvalues.iter().map(|z| vec![z.re, z.im]),
        )
        .as_bytes(),
    )?;
    let doc = SpectrumDoc {
        spectral_abscissa: report.spectral_abscissa,
        retained_count: report.eigenvalues.len(),
        deflated_count: report.deflated.len(),
        deflated: report
            .deflated
            .iter()
            .map(|d| DeflatedDoc {
                re: d.eigenvalue.re,
                im: d.eigenvalue.im,
                residual: d.residual,
            })
            .collect(),
    };
    write_json(&run_dir, "spectrum.json", &doc)?;
    println!("wrote {}", run_dir.display());
    Ok(run_dir)
}

#[derive(Serialize)]
struct SpectrumDoc {
    spectral_abscissa: f64,
    retained_count: usize,
    deflated_count: usize,
    deflated: Vec<DeflatedDoc>,
}

#[derive(Serialize)]
struct DeflatedDoc {
    re: f64,
    im: f64,
    residual: f64,
}

pub fn sweep(config: &RunConfig, lambda_max: f64, points: usize) -> Result<PathBuf, CmdError> {
    let assembly = assembly_from(config)?;
    let sweep = spectral::sweep_resolvent(&assembly, lambda_max, points)
        .map_err(|e| CmdError::Numerical(e.to_string()))?;
    let run_dir = create_run_dir(&config.outputs, &config.short_hash())?;
    write_atomic(
        &run_dir,
        "sweep.csv",
        csv_body(
            &["lambda", "norm"],
            sweep
                .lambdas
                .iter()
                .zip(&sweep.norms)
                .map(|(l, n)| vec![*l, *n]),
        )
        .as_bytes(),
    )?;
    let doc = SweepDoc {
        sup_norm: sweep.sup_norm,
        lambda_max,
        n_points: points,
    };
    write_json(&run_dir, "sweep.json", &doc)?;
    println!("wrote {}", run_dir.display());
    Ok(run_dir)
}

#[derive(Serialize)]
struct SweepDoc {
    sup_norm: f64,
    lambda_max: f64,
    n_points: usize,
}

fn parse_poly(text: &str) -> Result<Poly, CmdError> {
    let coeffs: Result<Vec<f64>, _> = text.split(',').map(|c| c.trim().parse::<f64>()).collect();
    coeffs.map(Poly::new).map_err(|e| {
        CmdError::Config(format!(
            "cannot parse polynomial coefficients `{text}`: {e}"
        ))
    })
}

/// Print the closed-form stationary flux/temperature at uniform points.
/// Forcing components are polynomials given as comma-separated coefficient
/// lists (constant first).
pub fn oracle(
    config: &RunConfig,
    f1: &str,
    f3: &str,
    f4: &str,
    points: usize,
) -> Result<(), CmdError> {
    if points < 2 {
        return Err(CmdError::Config("oracle needs at least 2 points".into()));
    }
    let oracle = StationaryOracle::new(
        &config.spec,
        parse_poly(f1)?,
        parse_poly(f3)?,
        parse_poly(f4)?,
    )
    .map_err(|e| CmdError::Config(e.to_string()))?;
    println!("x,q,theta");
    let l = config.spec.length;
    for i in 0..points {
        let x = l * i as f64 / (points - 1) as f64;
        println!(
            "{},{},{}",
            crate::output::fmt_float(x),
            crate::output::fmt_float(oracle.q(x)),
            crate::output::fmt_float(oracle.theta(x))
        );
    }
    Ok(())
}

/// Shared by verify: a short trajectory at the config's resolution.
pub fn short_trajectory(
    config: &RunConfig,
    assembly: &GeneratorAssembly,
    u0: &StateVector,
    max_steps: usize,
) -> Result<Trajectory, CmdError> {
    let dt = config.time.dt;
    let steps = ((config.time.t_final / dt).round() as usize).clamp(1, max_steps);
    timestepper::integrate(
        assembly,
        u0,
        dt,
        dt * steps as f64,
        config.time.sample_stride,
    )
    .map_err(|e| CmdError::Numerical(e.to_string()))
}
