//! Spectral and resolvent analysis of the assembled generator.
//!
//! Under the flux-Dirichlet regime the generator has a one-dimensional
//! kernel (constant temperature, everything else zero) and the discrete
//! temperature mean is conserved exactly, so the zero-mean-temperature
//! subspace is invariant. Eigenvalue reports deflate the kernel mode;
//! resolvent norms are computed on the invariant subspace through explicit
//! basis elimination of the mean mode.
//!
//! Resolvent norms are operator norms in the energy inner product: with
//! `M = U^T U` (Cholesky) and `G = U A U^{-1}`, the energy-norm resolvent is
//! `||(i lam - A)^{-1}||_M = 1 / sigma_min(i lam I - G)`.

use ndarray::prelude::*;
use ndarray_linalg::{c64, Cholesky, Eig, Factorize, Inverse, Solve, SVD, UPLO};

use crate::backend::ensure_serial_blas;
use crate::discretization::{GeneratorAssembly, StateVector};
use crate::error::SolveError;
use crate::model::{BoundaryMode, ProblemSpec};

/// Relative magnitude below which an eigenvalue is a kernel candidate.
const DEFLATION_TOL: f64 = 1e-8;
/// Eigenvector residual bound for accepting a kernel candidate.
const RESIDUAL_TOL: f64 = 1e-8;
/// Block-pattern tolerance of the kernel shape check.
const PATTERN_TOL: f64 = 1e-6;

/// Near-kernel eigenvalue removed from the retained spectrum.
#[derive(Debug, Clone, Copy)]
pub struct DeflatedMode {
    pub eigenvalue: c64,
    /// `||A v|| / ||v||` of the accompanying eigenvector.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Retained eigenvalues, sorted by descending real part.
    pub eigenvalues: Vec<c64>,
    /// Max real part over the retained eigenvalues.
    pub spectral_abscissa: f64,
    pub deflated: Vec<DeflatedMode>,
}

/// Dense-eigensolve size guard; the analysis is meant for desk scale.
pub const DENSE_EIGEN_LIMIT: usize = 4096;

fn inf_norm(a: &Array2<f64>) -> f64 {
    a.rows()
        .into_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Full dense eigensolve of the generator with kernel deflation under the
/// flux-Dirichlet regime.
pub fn eigenvalues(assembly: &GeneratorAssembly) -> Result<SpectrumReport, SolveError> {
    ensure_serial_blas();
    let dim = assembly.dim();
    if dim > DENSE_EIGEN_LIMIT {
        return Err(SolveError::Unsupported(format!(
            "dense eigensolve limited to dimension {DENSE_EIGEN_LIMIT}, got {dim}"
        )));
    }
    let a = assembly.generator();
    let (vals, vecs) = a.eig()?;
    let norm_a = inf_norm(a);

    let layout = assembly.layout;
    let mut retained = Vec::with_capacity(dim);
    let mut deflated = Vec::new();
    for (k, lambda) in vals.iter().enumerate() {
        let mut keep = true;
        if layout.bc == BoundaryMode::DirichletFlux && lambda.norm() <= DEFLATION_TOL * norm_a {
            let v = vecs.column(k);
            let re: Array1<f64> = v.iter().map(|z| z.re).collect();
            let im: Array1<f64> = v.iter().map(|z| z.im).collect();
            let v_norm = (re.dot(&re) + im.dot(&im)).sqrt();
            let are = a.dot(&re);
            let aim = a.dot(&im);
            let residual = (are.dot(&are) + aim.dot(&aim)).sqrt() / v_norm;
            if residual <= RESIDUAL_TOL && kernel_pattern_matches(&v.to_owned(), layout, v_norm) {
                deflated.push(DeflatedMode {
                    eigenvalue: *lambda,
                    residual,
                });
                keep = false;
            }
        }
        if keep {
            retained.push(*lambda);
        }
    }
    retained.sort_by(|x, y| {
        y.re.partial_cmp(&x.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });
    let spectral_abscissa = retained
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectrumReport {
        eigenvalues: retained,
        spectral_abscissa,
        deflated,
    })
}

/// Kernel shape: velocity and flux blocks vanish, temperature is constant.
/// Guards against silently deflating a genuine slow mode.
fn kernel_pattern_matches(
    v: &Array1<c64>,
    layout: crate::discretization::StateLayout,
    v_norm: f64,
) -> bool {
    let block_norm = |range: std::ops::Range<usize>| -> f64 {
        v.slice(s![range])
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    if block_norm(layout.w_range()) > PATTERN_TOL * v_norm {
        return false;
    }
    if block_norm(layout.q_range()) > PATTERN_TOL * v_norm {
        return false;
    }
    let theta = v.slice(s![layout.theta_range()]);
    let mean = theta.sum() / c64::new(theta.len() as f64, 0.0);
    let dev: f64 = theta
        .iter()
        .map(|z| (z - mean).norm_sqr())
        .sum::<f64>()
        .sqrt();
    dev <= PATTERN_TOL * v_norm
}

/// Max real part of the (deflated, for flux-Dirichlet) spectrum.
pub fn spectral_abscissa(assembly: &GeneratorAssembly) -> Result<f64, SolveError> {
    Ok(eigenvalues(assembly)?.spectral_abscissa)
}

/// Cached congruence data for energy-norm resolvent evaluations; under the
/// flux-Dirichlet regime all operators are first restricted to the
/// zero-mean-temperature subspace.
pub struct ResolventContext {
    /// `U A_restricted U^{-1}` with `M_restricted = U^T U`.
    sym_generator: Array2<f64>,
    restricted_a: Array2<f64>,
    embed: Array2<f64>,
    restrict: Array2<f64>,
    restricted_gram: Array2<f64>,
}

impl ResolventContext {
    pub fn new(assembly: &GeneratorAssembly) -> Result<Self, SolveError> {
        ensure_serial_blas();
        let dim = assembly.dim();
        let (embed, restrict) = match assembly.layout.bc {
            BoundaryMode::DirichletTheta => (Array2::eye(dim), Array2::eye(dim)),
            BoundaryMode::DirichletFlux => {
                // Eliminate the temperature mean: the last midpoint value is
                // minus the sum of the others (uniform weights), which spans
                // exactly the zero-quadrature-mean subspace.
                let t = assembly.layout.theta_range();
                let rdim = dim - 1;
                let mut embed = Array2::<f64>::zeros((dim, rdim));
                let mut restrict = Array2::<f64>::zeros((rdim, dim));
                let mut col = 0usize;
                for row in 0..dim {
                    if row == t.end - 1 {
                        continue;
                    }
                    embed[[row, col]] = 1.0;
                    restrict[[col, row]] = 1.0;
                    col += 1;
                }
                for theta_col in 0..(t.len() - 1) {
                    embed[[t.end - 1, t.start + theta_col]] = -1.0;
                }
                (embed, restrict)
            }
        };
        let restricted_a = restrict.dot(&assembly.generator().dot(&embed));
        let restricted_gram = embed.t().dot(&assembly.gram().dot(&embed));
        let chol_upper = restricted_gram.cholesky(UPLO::Upper)?;
        let chol_inv = chol_upper.inv()?;
        let sym_generator = chol_upper.dot(&restricted_a.dot(&chol_inv));
        Ok(ResolventContext {
            sym_generator,
            restricted_a,
            embed,
            restrict,
            restricted_gram,
        })
    }

    pub fn restricted_dim(&self) -> usize {
        self.sym_generator.nrows()
    }

    pub fn restricted_generator(&self) -> &Array2<f64> {
        &self.restricted_a
    }

    pub fn restricted_gram(&self) -> &Array2<f64> {
        &self.restricted_gram
    }

    /// Coordinates of a full state in the restricted basis.
    pub fn restrict(&self, x: &StateVector) -> Array1<f64> {
        self.restrict.dot(x.values())
    }

    /// Full-space values of restricted coordinates.
    pub fn embed(&self, z: &Array1<f64>) -> Array1<f64> {
        self.embed.dot(z)
    }

    /// Energy operator norm of the (restricted) generator,
    /// `sigma_max(U A U^{-1})`.
    pub fn energy_operator_norm(&self) -> Result<f64, SolveError> {
        let (_, s, _) = self.sym_generator.svd(false, false)?;
        Ok(s.iter().cloned().fold(0.0, f64::max))
    }

    /// `||(i lam I - A)^{-1}||` in the energy norm.
    pub fn norm_at(&self, lambda: f64) -> Result<f64, SolveError> {
        let n = self.restricted_dim();
        let mut shifted = Array2::<c64>::zeros((n, n));
        for ((i, j), g) in self.sym_generator.indexed_iter() {
            shifted[[i, j]] = c64::new(-g, 0.0);
        }
        for i in 0..n {
            shifted[[i, i]] += c64::new(0.0, lambda);
        }
        let (_, s, _) = shifted.svd(false, false)?;
        let sigma_max = s.iter().cloned().fold(0.0, f64::max);
        let sigma_min = s.iter().cloned().fold(f64::INFINITY, f64::min);
        if sigma_min <= f64::EPSILON * sigma_max * n as f64 {
            return Err(SolveError::SingularShift { lambda, sigma_min });
        }
        Ok(1.0 / sigma_min)
    }
}

/// One-shot energy-norm resolvent evaluation at `i lambda`.
pub fn resolvent_norm(assembly: &GeneratorAssembly, lambda: f64) -> Result<f64, SolveError> {
    ResolventContext::new(assembly)?.norm_at(lambda)
}

#[derive(Debug, Clone)]
pub struct ResolventSweep {
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
    pub sup_norm: f64,
}

/// Resolvent norms on a uniform grid of `[-lambda_max, lambda_max]`.
pub fn sweep_resolvent(
    assembly: &GeneratorAssembly,
    lambda_max: f64,
    n_points: usize,
) -> Result<ResolventSweep, SolveError> {
    if n_points < 3 {
        return Err(SolveError::Unsupported(format!(
            "sweep needs at least 3 points, got {n_points}"
        )));
    }
    let ctx = ResolventContext::new(assembly)?;
    let step = 2.0 * lambda_max / (n_points - 1) as f64;
    let mut lambdas = Vec::with_capacity(n_points);
    let mut norms = Vec::with_capacity(n_points);
    let mut sup_norm = 0.0f64;
    for i in 0..n_points {
        let lambda = -lambda_max + step * i as f64;
        let norm = ctx.norm_at(lambda)?;
        sup_norm = sup_norm.max(norm);
        lambdas.push(lambda);
        norms.push(norm);
    }
    Ok(ResolventSweep {
        lambdas,
        norms,
        sup_norm,
    })
}

#[derive(Debug, Clone)]
pub struct StationarySolution {
    pub state: StateVector,
    /// `||A U - F|| / ||F||` (with the projected right-hand side under
    /// flux-Dirichlet boundary conditions).
    pub residual: f64,
}

const STATIONARY_TOL: f64 = 1e-10;

/// Solve `A U = F`. Under flux-Dirichlet boundary conditions the
/// temperature block of `F` is projected to zero mean first and the solve
/// happens on the invariant subspace, where the restriction is invertible.
pub fn solve_stationary(
    assembly: &GeneratorAssembly,
    f: &StateVector,
) -> Result<StationarySolution, SolveError> {
    ensure_serial_blas();
    match assembly.layout.bc {
        BoundaryMode::DirichletTheta => {
            let a = assembly.generator();
            let factor = a.factorize()?;
            let rhs = f.values().clone();
            let mut x = factor.solve(&rhs)?;
            let rhs_norm = norm2(&rhs);
            let mut residual = norm2(&(&rhs - &a.dot(&x)));
            if residual > STATIONARY_TOL * rhs_norm {
                let corr = factor.solve(&(&rhs - &a.dot(&x)))?;
                x += &corr;
                residual = norm2(&(&rhs - &a.dot(&x)));
                if residual > STATIONARY_TOL * rhs_norm {
                    return Err(SolveError::ResidualTooLarge {
                        residual,
                        tolerance: STATIONARY_TOL * rhs_norm,
                    });
                }
            }
            Ok(StationarySolution {
                state: StateVector::from_values(assembly.layout, x)?,
                residual: if rhs_norm > 0.0 {
                    residual / rhs_norm
                } else {
                    0.0
                },
            })
        }
        BoundaryMode::DirichletFlux => {
            let ctx = ResolventContext::new(assembly)?;
            let mut rhs_full = f.values().clone();
            // project the temperature block to zero quadrature mean
            let t = assembly.layout.theta_range();
            let weights = &assembly.grid.midpoint_weights;
            let mean: f64 = t
                .clone()
                .enumerate()
                .map(|(i, idx)| weights[i] * rhs_full[idx])
                .sum::<f64>()
                / assembly.grid.length;
            for idx in t {
                rhs_full[idx] -= mean;
            }
            let rhs = ctx.restrict.dot(&rhs_full);
            let a_res = &ctx.restricted_a;
            let factor = a_res.factorize()?;
            let mut z = factor.solve(&rhs)?;
            let rhs_norm = norm2(&rhs_full);
            let mut residual = {
                let x_full = ctx.embed(&z);
                norm2(&(&rhs_full - &assembly.generator().dot(&x_full)))
            };
            if residual > STATIONARY_TOL * rhs_norm {
                let corr = factor.solve(&(&rhs - &a_res.dot(&z)))?;
                z += &corr;
                let x_full = ctx.embed(&z);
                residual = norm2(&(&rhs_full - &assembly.generator().dot(&x_full)));
                if residual > STATIONARY_TOL * rhs_norm {
                    return Err(SolveError::ResidualTooLarge {
                        residual,
                        tolerance: STATIONARY_TOL * rhs_norm,
                    });
                }
            }
            let x_full = ctx.embed(&z);
            Ok(StationarySolution {
                state: StateVector::from_values(assembly.layout, x_full)?,
                residual: if rhs_norm > 0.0 {
                    residual / rhs_norm
                } else {
                    0.0
                },
            })
        }
    }
}

fn norm2(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Real polynomial `c0 + c1 x + c2 x^2 + ...`; the closed-form forcing
/// shapes supported by the stationary oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![] }
    }

    pub fn constant(c: f64) -> Self {
        Poly { coeffs: vec![c] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Poly {
        let mut coeffs = vec![0.0];
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c / (k + 1) as f64),
        );
        Poly { coeffs }
    }

    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }
}

/// Closed-form stationary flux/temperature pair for the
/// temperature-Dirichlet regime with polynomial forcing, obtained by direct
/// integration:
///
/// ```text
///   kappa q(x)     = kappa q(0) + eta f1(x) + int_0^x f3
///   kappa theta(x) = (beta/kappa) (kappa q(0)) x + (beta eta/kappa) int_0^x f1
///                    + (beta/kappa) int_0^x int_0^y f3 + tau int_0^x f4
/// ```
///
/// with `q(0)` fixed by the vanishing of `theta` at `x = L`.
pub struct StationaryOracle {
    eta: f64,
    kappa: f64,
    tau: f64,
    beta: f64,
    /// `q(0)` itself (not `kappa q(0)`).
    q_zero: f64,
    f1: Poly,
    f1_int: Poly,
    f3_int: Poly,
    f3_int_int: Poly,
    f4_int: Poly,
}

impl StationaryOracle {
    pub fn new(spec: &ProblemSpec, f1: Poly, f3: Poly, f4: Poly) -> Result<Self, SolveError> {
        if spec.bc != BoundaryMode::DirichletTheta {
            return Err(SolveError::Unsupported(
                "the closed-form stationary solution is for the temperature-Dirichlet regime"
                    .into(),
            ));
        }
        let l = spec.length;
        let f1_int = f1.antiderivative();
        let f3_int = f3.antiderivative();
        let f3_int_int = f3_int.antiderivative();
        let f4_int = f4.antiderivative();
        let kappa_q_zero = (-spec.eta / l) * f1_int.eval(l)
            - f3_int_int.eval(l) / l
            - (spec.tau * spec.kappa / (spec.beta * l)) * f4_int.eval(l);
        Ok(StationaryOracle {
            eta: spec.eta,
            kappa: spec.kappa,
            tau: spec.tau,
            beta: spec.beta,
            q_zero: kappa_q_zero / spec.kappa,
            f1,
            f1_int,
            f3_int,
            f3_int_int,
            f4_int,
        })
    }

    pub fn q_at_zero(&self) -> f64 {
        self.q_zero
    }

    pub fn q(&self, x: f64) -> f64 {
        self.q_zero + (self.eta * self.f1.eval(x) + self.f3_int.eval(x)) / self.kappa
    }

    pub fn theta(&self, x: f64) -> f64 {
        ((self.beta / self.kappa) * (self.kappa * self.q_zero) * x
            + (self.beta * self.eta / self.kappa) * self.f1_int.eval(x)
            + (self.beta / self.kappa) * self.f3_int_int.eval(x)
            + self.tau * self.f4_int.eval(x))
            / self.kappa
    }
}
