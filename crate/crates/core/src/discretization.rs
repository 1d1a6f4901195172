//! Semi-discrete generator and energy Gram matrix on the staggered grid.
//!
//! The node->midpoint difference `D` and midpoint->node difference `Dt` are
//! exact summation-by-parts partners: for node functions `v` vanishing at the
//! boundary and midpoint functions `a`,
//!
//! ```text
//!   sum_mid h (D v) a  =  - sum_node h v (Dt a)
//! ```
//!
//! holds to round-off. Together with the antisymmetric wide-centered node
//! difference `C` used for the coupling between two node fields, this makes
//! the semi-discrete energy balance exact: for every real state `x`,
//!
//! ```text
//!   <M A x, x>  =  - 2 sum_mid h delta (D w)^2  -  beta sum w_q q^2 .
//! ```

use ndarray::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DiscretizationError, ModelError};
use crate::grid::Grid;
use crate::model::{validate_spec, BoundaryMode, InitialData, ProblemSpec};

/// Block offsets of the flat state vector `(u, w, theta, q)`.
///
/// `u` and `w` hold the `N-1` interior nodes. Under `DirichletTheta`, theta
/// holds `N-1` interior nodes and `q` the `N` midpoints; under
/// `DirichletFlux` theta holds the `N` midpoints and `q` the `N-1` interior
/// nodes. Total dimension is `4N-3` either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub bc: BoundaryMode,
    pub cells: usize,
}

impl StateLayout {
    pub fn new(bc: BoundaryMode, cells: usize) -> Self {
        StateLayout { bc, cells }
    }

    pub fn dim(&self) -> usize {
        4 * self.cells - 3
    }

    pub fn u_len(&self) -> usize {
        self.cells - 1
    }

    pub fn theta_len(&self) -> usize {
        match self.bc {
            BoundaryMode::DirichletTheta => self.cells - 1,
            BoundaryMode::DirichletFlux => self.cells,
        }
    }

    pub fn q_len(&self) -> usize {
        match self.bc {
            BoundaryMode::DirichletTheta => self.cells,
            BoundaryMode::DirichletFlux => self.cells - 1,
        }
    }

    pub fn u_range(&self) -> std::ops::Range<usize> {
        0..self.u_len()
    }

    pub fn w_range(&self) -> std::ops::Range<usize> {
        self.u_len()..2 * self.u_len()
    }

    pub fn theta_range(&self) -> std::ops::Range<usize> {
        let start = 2 * self.u_len();
        start..start + self.theta_len()
    }

    pub fn q_range(&self) -> std::ops::Range<usize> {
        let start = 2 * self.u_len() + self.theta_len();
        start..start + self.q_len()
    }
}

/// Flat state in the block order of a [`StateLayout`].
#[derive(Debug, Clone)]
pub struct StateVector {
    layout: StateLayout,
    values: Array1<f64>,
}

impl StateVector {
    pub fn zeros(layout: StateLayout) -> Self {
        StateVector {
            layout,
            values: Array1::zeros(layout.dim()),
        }
    }

    pub fn from_values(
        layout: StateLayout,
        values: Array1<f64>,
    ) -> Result<Self, DiscretizationError> {
        if values.len() != layout.dim() {
            return Err(DiscretizationError::DimensionMismatch {
                got: values.len(),
                expected: layout.dim(),
            });
        }
        Ok(StateVector { layout, values })
    }

    /// Uniform `[-1, 1]` entries from a deterministic stream.
    pub fn seeded_random(layout: StateLayout, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = Array1::from_iter((0..layout.dim()).map(|_| rng.gen_range(-1.0..1.0)));
        StateVector { layout, values }
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array1<f64> {
        &mut self.values
    }

    pub fn u(&self) -> ArrayView1<'_, f64> {
        self.values.slice(s![self.layout.u_range()])
    }

    pub fn w(&self) -> ArrayView1<'_, f64> {
        self.values.slice(s![self.layout.w_range()])
    }

    pub fn theta(&self) -> ArrayView1<'_, f64> {
        self.values.slice(s![self.layout.theta_range()])
    }

    pub fn q(&self) -> ArrayView1<'_, f64> {
        self.values.slice(s![self.layout.q_range()])
    }
}

/// Node->midpoint difference with Dirichlet extension by zeros:
/// `(D v)_{j+1/2} = (v_{j+1} - v_j)/h` for an interior-node function `v`.
pub fn node_to_mid_diff(interior: &[f64], h: f64) -> Vec<f64> {
    let n = interior.len() + 1;
    let mut out = vec![0.0; n];
    for j in 0..n {
        let right = if j < n - 1 { interior[j] } else { 0.0 };
        let left = if j > 0 { interior[j - 1] } else { 0.0 };
        out[j] = (right - left) / h;
    }
    out
}

/// Midpoint->node difference `(Dt a)_j = (a_{j+1/2} - a_{j-1/2})/h` at the
/// interior nodes.
pub fn mid_to_node_diff(mid: &[f64], h: f64) -> Vec<f64> {
    (1..mid.len()).map(|j| (mid[j] - mid[j - 1]) / h).collect()
}

/// Antisymmetric wide-centered difference between node fields,
/// `(C v)_j = (v_{j+1} - v_{j-1})/(2h)` with zero boundary values.
pub fn wide_node_diff(interior: &[f64], h: f64) -> Vec<f64> {
    let n = interior.len();
    (0..n)
        .map(|i| {
            let right = if i + 1 < n { interior[i + 1] } else { 0.0 };
            let left = if i > 0 { interior[i - 1] } else { 0.0 };
            (right - left) / (2.0 * h)
        })
        .collect()
}

/// Assembled semi-discrete generator `A`, energy Gram matrix `M`, and the
/// coefficient samples they were built from.
#[derive(Debug, Clone)]
pub struct GeneratorAssembly {
    pub spec: ProblemSpec,
    pub grid: Grid,
    pub layout: StateLayout,
    a: Array2<f64>,
    m: Array2<f64>,
    /// Mass density at the interior nodes.
    pub m_node: Vec<f64>,
    /// Stiffness at the midpoints.
    pub p_mid: Vec<f64>,
    /// Kelvin-Voigt coefficient at the midpoints.
    pub delta_mid: Vec<f64>,
}

/// Build the generator realizing the first-order system and the Gram matrix
/// of the energy inner product on the staggered layout of `spec.bc`.
pub fn assemble_generator(
    spec: &ProblemSpec,
    grid: &Grid,
) -> Result<GeneratorAssembly, DiscretizationError> {
    let report = validate_spec(spec, 2 * grid.cells);
    if !report.is_valid() {
        return Err(ModelError::InvalidSpec(report.violations.join("; ")).into());
    }

    let n = grid.cells;
    let h = grid.spacing;
    let layout = StateLayout::new(spec.bc, n);
    let dim = layout.dim();

    let m_node = spec.m.sample(grid.interior_nodes(), spec.length)?;
    let p_mid = spec.p.sample(&grid.midpoints, spec.length)?;
    let delta_mid = spec.delta.sample(&grid.midpoints, spec.length)?;

    let (eta, kappa, tau, beta) = (spec.eta, spec.kappa, spec.tau, spec.beta);

    let u0 = layout.u_range().start;
    let w0 = layout.w_range().start;
    let t0 = layout.theta_range().start;
    let q0 = layout.q_range().start;

    let mut a = Array2::<f64>::zeros((dim, dim));

    // u_t = w
    for i in 0..layout.u_len() {
        a[[u0 + i, w0 + i]] = 1.0;
    }

    // m w_t = Dt(p_mid D u + 2 delta_mid D w) - eta * (theta gradient term)
    for i in 0..layout.u_len() {
        let j = i + 1; // physical node index
        let mm = m_node[i];
        // Dt(c_mid D v)_j couples v_{j-1}, v_j, v_{j+1} with weights
        // c_{j-1/2}, -(c_{j-1/2}+c_{j+1/2}), c_{j+1/2} over h^2.
        let mut stencil = |row: usize, col0: usize, c: &[f64], scale: f64| {
            let (cl, cr) = (c[j - 1], c[j]);
            if i > 0 {
                a[[row, col0 + i - 1]] += scale * cl / (h * h);
            }
            a[[row, col0 + i]] -= scale * (cl + cr) / (h * h);
            if i + 1 < layout.u_len() {
                a[[row, col0 + i + 1]] += scale * cr / (h * h);
            }
        };
        stencil(w0 + i, u0, &p_mid, 1.0 / mm);
        stencil(w0 + i, w0, &delta_mid, 2.0 / mm);
        match spec.bc {
            BoundaryMode::DirichletTheta => {
                // -eta (C theta)_j / m
                if i + 1 < layout.theta_len() {
                    a[[w0 + i, t0 + i + 1]] -= eta / (2.0 * h * mm);
                }
                if i > 0 {
                    a[[w0 + i, t0 + i - 1]] += eta / (2.0 * h * mm);
                }
            }
            BoundaryMode::DirichletFlux => {
                // -eta (Dt theta)_j / m, theta on midpoints j-1/2 and j+1/2
                a[[w0 + i, t0 + j]] -= eta / (h * mm);
                a[[w0 + i, t0 + j - 1]] += eta / (h * mm);
            }
        }
    }

    // theta_t = -kappa (q divergence) - eta (w gradient)
    match spec.bc {
        BoundaryMode::DirichletTheta => {
            for i in 0..layout.theta_len() {
                let j = i + 1;
                // -kappa (Dt q)_j, q on midpoints
                a[[t0 + i, q0 + j]] -= kappa / h;
                a[[t0 + i, q0 + j - 1]] += kappa / h;
                // -eta (C w)_j
                if i + 1 < layout.u_len() {
                    a[[t0 + i, w0 + i + 1]] -= eta / (2.0 * h);
                }
                if i > 0 {
                    a[[t0 + i, w0 + i - 1]] += eta / (2.0 * h);
                }
            }
        }
        BoundaryMode::DirichletFlux => {
            for jm in 0..layout.theta_len() {
                // midpoint jm sits between nodes jm and jm+1; q and w are
                // interior-node functions extended by boundary zeros.
                if jm < n - 1 {
                    a[[t0 + jm, q0 + jm]] -= kappa / h;
                    a[[t0 + jm, w0 + jm]] -= eta / h;
                }
                if jm >= 1 {
                    a[[t0 + jm, q0 + jm - 1]] += kappa / h;
                    a[[t0 + jm, w0 + jm - 1]] += eta / h;
                }
            }
        }
    }

    // tau q_t = -beta q - kappa (theta gradient)
    match spec.bc {
        BoundaryMode::DirichletTheta => {
            for jm in 0..layout.q_len() {
                a[[q0 + jm, q0 + jm]] -= beta / tau;
                // (D theta)_{jm+1/2} with boundary zeros
                if jm < n - 1 {
                    a[[q0 + jm, t0 + jm]] -= kappa / (tau * h);
                }
                if jm >= 1 {
                    a[[q0 + jm, t0 + jm - 1]] += kappa / (tau * h);
                }
            }
        }
        BoundaryMode::DirichletFlux => {
            for i in 0..layout.q_len() {
                let j = i + 1;
                a[[q0 + i, q0 + i]] -= beta / tau;
                // (Dt theta)_j, theta on midpoints
                a[[q0 + i, t0 + j]] -= kappa / (tau * h);
                a[[q0 + i, t0 + j - 1]] += kappa / (tau * h);
            }
        }
    }

    // Gram matrix of the energy inner product.
    let mut m = Array2::<f64>::zeros((dim, dim));
    // u block: D^T diag(p_mid h) D, tridiagonal on the interior nodes.
    for i in 0..layout.u_len() {
        let j = i + 1;
        m[[u0 + i, u0 + i]] = (p_mid[j - 1] + p_mid[j]) / h;
        if i + 1 < layout.u_len() {
            m[[u0 + i, u0 + i + 1]] = -p_mid[j] / h;
            m[[u0 + i + 1, u0 + i]] = -p_mid[j] / h;
        }
    }
    for i in 0..layout.u_len() {
        m[[w0 + i, w0 + i]] = m_node[i] * h;
    }
    for (i, w) in theta_weights(&layout, grid).iter().enumerate() {
        m[[t0 + i, t0 + i]] = *w;
    }
    for (i, w) in q_weights(&layout, grid).iter().enumerate() {
        m[[q0 + i, q0 + i]] = tau * w;
    }

    Ok(GeneratorAssembly {
        spec: spec.clone(),
        grid: grid.clone(),
        layout,
        a,
        m,
        m_node,
        p_mid,
        delta_mid,
    })
}

/// Quadrature weights of the temperature grid (interior trapezoid weights
/// equal `h`, midpoint weights equal `h`).
pub fn theta_weights(layout: &StateLayout, grid: &Grid) -> Vec<f64> {
    match layout.bc {
        BoundaryMode::DirichletTheta => grid.node_weights[1..grid.cells].to_vec(),
        BoundaryMode::DirichletFlux => grid.midpoint_weights.clone(),
    }
}

/// Quadrature weights of the flux grid.
pub fn q_weights(layout: &StateLayout, grid: &Grid) -> Vec<f64> {
    match layout.bc {
        BoundaryMode::DirichletTheta => grid.midpoint_weights.clone(),
        BoundaryMode::DirichletFlux => grid.node_weights[1..grid.cells].to_vec(),
    }
}

impl GeneratorAssembly {
    pub fn generator(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn gram(&self) -> &Array2<f64> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// `A x`.
    pub fn apply(&self, x: &StateVector) -> Result<StateVector, DiscretizationError> {
        self.check_layout(x)?;
        Ok(StateVector {
            layout: self.layout,
            values: self.a.dot(x.values()),
        })
    }

    /// Energy inner product `<M x, y>`.
    pub fn gram_inner(&self, x: &StateVector, y: &StateVector) -> Result<f64, DiscretizationError> {
        self.check_layout(x)?;
        self.check_layout(y)?;
        Ok(self.m.dot(x.values()).dot(y.values()))
    }

    /// Energy norm squared, `<M x, x> = ||x||_H^2`.
    pub fn energy_norm_sq(&self, x: &StateVector) -> Result<f64, DiscretizationError> {
        self.gram_inner(x, x)
    }

    fn check_layout(&self, x: &StateVector) -> Result<(), DiscretizationError> {
        if x.layout() != self.layout {
            return Err(DiscretizationError::LayoutMismatch);
        }
        Ok(())
    }

    /// Flatten initial data into the eliminated-boundary state layout.
    pub fn state_from_initial(
        &self,
        data: &InitialData,
    ) -> Result<StateVector, DiscretizationError> {
        if data.bc != self.layout.bc {
            return Err(DiscretizationError::LayoutMismatch);
        }
        let n = self.grid.cells;
        let mut state = StateVector::zeros(self.layout);
        {
            let v = state.values_mut();
            for i in 0..n - 1 {
                v[self.layout.u_range().start + i] = data.u0[i + 1];
                v[self.layout.w_range().start + i] = data.w0[i + 1];
            }
            match self.layout.bc {
                BoundaryMode::DirichletTheta => {
                    for i in 0..n - 1 {
                        v[self.layout.theta_range().start + i] = data.theta0[i + 1];
                    }
                    for i in 0..n {
                        v[self.layout.q_range().start + i] = data.q0[i];
                    }
                }
                BoundaryMode::DirichletFlux => {
                    for i in 0..n {
                        v[self.layout.theta_range().start + i] = data.theta0[i];
                    }
                    for i in 0..n - 1 {
                        v[self.layout.q_range().start + i] = data.q0[i + 1];
                    }
                }
            }
        }
        Ok(state)
    }
}

/// Discrete Poincare check for an interior-node function vanishing at the
/// boundary: `lhs = sum w_node v^2`, `rhs = sum w_mid (D v)^2` and the sharp
/// discrete constant `C_h = h^2 / (4 sin^2(pi h / (2L)))`, which decreases to
/// `L^2/pi^2` as `h -> 0`.
#[derive(Debug, Clone, Copy)]
pub struct PoincareCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub discrete_constant: f64,
}

pub fn check_poincare(h_values: &[f64], grid: &Grid) -> PoincareCheck {
    let h = grid.spacing;
    let lhs: f64 = h_values.iter().map(|v| h * v * v).sum();
    let dv = node_to_mid_diff(h_values, h);
    let rhs: f64 = dv.iter().map(|d| h * d * d).sum();
    let s = (std::f64::consts::PI * h / (2.0 * grid.length)).sin();
    PoincareCheck {
        lhs,
        rhs,
        discrete_constant: h * h / (4.0 * s * s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::model::CoefficientDef;
    use proptest::prelude::*;
    use rand::Rng;

    pub(crate) fn baseline(bc: BoundaryMode, eta: f64) -> ProblemSpec {
        ProblemSpec {
            length: std::f64::consts::PI,
            m: CoefficientDef::constant(1.0),
            p: CoefficientDef::constant(1.0),
            delta: CoefficientDef::constant(0.1),
            eta,
            kappa: 1.0,
            tau: 1.0,
            beta: 1.0,
            bc,
        }
    }

    fn variable_spec(bc: BoundaryMode) -> ProblemSpec {
        ProblemSpec {
            length: 2.0,
            m: CoefficientDef::LinearRamp { a: 1.0, b: 0.25 },
            p: CoefficientDef::SmoothBump { a: 1.0, b: 0.5 },
            delta: CoefficientDef::LinearRamp { a: 0.1, b: 0.05 },
            eta: 0.7,
            kappa: 1.3,
            tau: 0.8,
            beta: 1.1,
            bc,
        }
    }

    /// Explicit dissipation quadratic form used as the reference side of the
    /// energy identity.
    fn dissipation_form(assembly: &GeneratorAssembly, x: &StateVector) -> f64 {
        let h = assembly.grid.spacing;
        let dw = node_to_mid_diff(x.w().as_slice().unwrap(), h);
        let visc: f64 = dw
            .iter()
            .zip(&assembly.delta_mid)
            .map(|(d, del)| h * del * d * d)
            .sum();
        let flux: f64 = x
            .q()
            .iter()
            .zip(q_weights(&assembly.layout, &assembly.grid))
            .map(|(q, w)| w * q * q)
            .sum();
        -2.0 * visc - assembly.spec.beta * flux
    }

    #[test]
    fn layout_dimensions() {
        for bc in [BoundaryMode::DirichletTheta, BoundaryMode::DirichletFlux] {
            let layout = StateLayout::new(bc, 16);
            assert_eq!(layout.dim(), 61);
            assert_eq!(
                layout.u_range().len()
                    + layout.w_range().len()
                    + layout.theta_range().len()
                    + layout.q_range().len(),
                61
            );
            assert_eq!(layout.w_range().start, layout.u_range().end);
            assert_eq!(layout.theta_range().start, layout.w_range().end);
            assert_eq!(layout.q_range().start, layout.theta_range().end);
            assert_eq!(layout.q_range().end, 61);
        }
    }

    #[test]
    fn zero_state_maps_to_zero() {
        let grid = build_grid(std::f64::consts::PI, 8).unwrap();
        let assembly =
            assemble_generator(&baseline(BoundaryMode::DirichletTheta, 0.5), &grid).unwrap();
        let zero = StateVector::zeros(assembly.layout);
        let az = assembly.apply(&zero).unwrap();
        assert!(az.values().iter().all(|v| *v == 0.0));
        assert_eq!(assembly.gram_inner(&zero, &zero).unwrap(), 0.0);
    }

    #[test]
    fn rejects_invalid_spec() {
        let grid = build_grid(std::f64::consts::PI, 8).unwrap();
        let mut spec = baseline(BoundaryMode::DirichletTheta, 0.5);
        spec.delta = CoefficientDef::constant(0.0);
        assert!(assemble_generator(&spec, &grid).is_err());
    }

    #[test]
    fn summation_by_parts_is_exact() {
        let grid = build_grid(2.0, 24).unwrap();
        let h = grid.spacing;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let v: Vec<f64> = (0..23).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a: Vec<f64> = (0..24).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dv = node_to_mid_diff(&v, h);
            let dta = mid_to_node_diff(&a, h);
            let lhs: f64 = dv.iter().zip(&a).map(|(d, ai)| h * d * ai).sum();
            let rhs: f64 = v.iter().zip(&dta).map(|(vi, d)| h * vi * d).sum();
            assert!((lhs + rhs).abs() < 1e-13);
        }
    }

    #[test]
    fn wide_centered_difference_is_antisymmetric() {
        let h = 0.1;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let x: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let cx = wide_node_diff(&x, h);
            let cy = wide_node_diff(&y, h);
            let a: f64 = cx.iter().zip(&y).map(|(c, yi)| c * yi).sum();
            let b: f64 = x.iter().zip(&cy).map(|(xi, c)| xi * c).sum();
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn dissipativity_identity_both_modes() {
        let grid = build_grid(std::f64::consts::PI, 64).unwrap();
        for bc in [BoundaryMode::DirichletTheta, BoundaryMode::DirichletFlux] {
            let assembly = assemble_generator(&baseline(bc, 0.5), &grid).unwrap();
            for seed in 0..100 {
                let x = StateVector::seeded_random(assembly.layout, seed);
                let ax = assembly.apply(&x).unwrap();
                let form = assembly.gram_inner(&ax, &x).unwrap();
                let expected = dissipation_form(&assembly, &x);
                let scale = assembly.energy_norm_sq(&x).unwrap().max(1.0);
                assert!(form <= 0.0, "dissipativity violated: {form}");
                assert!(
                    (form - expected).abs() <= 1e-12 * scale,
                    "identity off by {:e}",
                    (form - expected).abs()
                );
            }
        }
    }

    #[test]
    fn dissipativity_identity_variable_coefficients() {
        let grid = build_grid(2.0, 32).unwrap();
        for bc in [BoundaryMode::DirichletTheta, BoundaryMode::DirichletFlux] {
            let assembly = assemble_generator(&variable_spec(bc), &grid).unwrap();
            for seed in 100..160 {
                let x = StateVector::seeded_random(assembly.layout, seed);
                let ax = assembly.apply(&x).unwrap();
                let form = assembly.gram_inner(&ax, &x).unwrap();
                let expected = dissipation_form(&assembly, &x);
                let scale = assembly.energy_norm_sq(&x).unwrap().max(1.0);
                assert!(form <= 1e-14 * scale);
                assert!((form - expected).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn gram_matrix_is_positive_definite() {
        use ndarray_linalg::Eigh;
        let grid = build_grid(2.0, 16).unwrap();
        for bc in [BoundaryMode::DirichletTheta, BoundaryMode::DirichletFlux] {
            let assembly = assemble_generator(&variable_spec(bc), &grid).unwrap();
            let (eigs, _) = assembly.gram().eigh(ndarray_linalg::UPLO::Upper).unwrap();
            let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min > 0.0, "smallest Gram eigenvalue {min}");
        }
    }

    #[test]
    fn gram_of_pure_theta_constant_is_length() {
        let grid = build_grid(std::f64::consts::PI, 16).unwrap();
        let assembly =
            assemble_generator(&baseline(BoundaryMode::DirichletFlux, 0.5), &grid).unwrap();
        let mut x = StateVector::zeros(assembly.layout);
        for i in assembly.layout.theta_range() {
            x.values_mut()[i] = 1.0;
        }
        let norm_sq = assembly.energy_norm_sq(&x).unwrap();
        assert!((norm_sq - std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn gram_of_pure_q_state_is_weighted_square_sum() {
        let grid = build_grid(2.0, 12).unwrap();
        let spec = variable_spec(BoundaryMode::DirichletTheta);
        let assembly = assemble_generator(&spec, &grid).unwrap();
        let mut x = StateVector::seeded_random(assembly.layout, 11);
        // zero all but q
        for i in 0..assembly.layout.q_range().start {
            x.values_mut()[i] = 0.0;
        }
        let expected: f64 = x
            .q()
            .iter()
            .zip(q_weights(&assembly.layout, &grid))
            .map(|(q, w)| spec.tau * w * q * q)
            .sum();
        let got = assembly.energy_norm_sq(&x).unwrap();
        assert!((got - expected).abs() < 1e-13 * expected.abs().max(1.0));
    }

    #[test]
    fn flux_mode_theta_rows_conserve_the_mean() {
        // Weighted row sums of the theta block vanish, so d/dt sum(h theta) = 0.
        let grid = build_grid(std::f64::consts::PI, 32).unwrap();
        let assembly =
            assemble_generator(&baseline(BoundaryMode::DirichletFlux, 0.5), &grid).unwrap();
        let a = assembly.generator();
        let t = assembly.layout.theta_range();
        let w = &grid.midpoint_weights;
        for col in 0..assembly.layout.dim() {
            let s: f64 = t
                .clone()
                .enumerate()
                .map(|(i, row)| w[i] * a[[row, col]])
                .sum();
            assert!(s.abs() < 1e-12, "column {col} mean drift {s:e}");
        }
    }

    #[test]
    fn poincare_equality_on_first_eigenvector() {
        let grid = build_grid(std::f64::consts::PI, 64).unwrap();
        let v: Vec<f64> = grid.interior_nodes().iter().map(|x| x.sin()).collect();
        let check = check_poincare(&v, &grid);
        let ratio = check.lhs / check.rhs;
        assert!(
            (ratio - check.discrete_constant).abs() <= 1e-12 * check.discrete_constant,
            "ratio {ratio} vs constant {}",
            check.discrete_constant
        );
    }

    #[test]
    fn poincare_zero_function() {
        let grid = build_grid(std::f64::consts::PI, 8).unwrap();
        let check = check_poincare(&[0.0; 7], &grid);
        assert_eq!(check.lhs, 0.0);
        assert_eq!(check.rhs, 0.0);
    }

    #[test]
    fn poincare_constant_brackets() {
        let l = std::f64::consts::PI;
        let grid = build_grid(l, 64).unwrap();
        let c = check_poincare(&[0.0; 63], &grid).discrete_constant;
        let continuum = l * l / (std::f64::consts::PI * std::f64::consts::PI);
        let h = grid.spacing;
        assert!(c >= continuum);
        assert!(c <= continuum * (1.0 + h * h));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn poincare_bound_holds_for_random_functions(
            values in proptest::collection::vec(-5.0f64..5.0, 63),
        ) {
            let grid = build_grid(std::f64::consts::PI, 64).unwrap();
            let check = check_poincare(&values, &grid);
            prop_assert!(check.lhs <= check.discrete_constant * check.rhs * (1.0 + 1e-13));
        }
    }
}
