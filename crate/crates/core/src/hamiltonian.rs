//! Quadratic Hamiltonians `H(τ) = ½ ξᵀ H(τ) ξ` on a 2n-dimensional phase
//! space `ξ = (q¹…qⁿ, p¹…pⁿ)` and their Hamilton flows `ξ̇ = J ∂H/∂ξ`.
//!
//! Every builder uses the identity for the momentum block, so that
//! `H = ½ (p·p + qᵀ K q)` and Hamilton's equations give `q̈ + K q = 0`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{constant_curvature_frame_block, ConstantCurvatureSpec};
use crate::linalg::{BlockMat2n, Mat, SymplecticForm};
use crate::ode::{rk4_integrate, Grid};
use crate::transport::FrameCurvature;

pub type CoeffFn = Arc<dyn Fn(f64) -> Mat + Send + Sync>;
/// `(τ, ξ) ↦ 2 (X − coeff(τ))`: the contraction `∂H_ij/∂ξ^l ξ^i` plus twice
/// any state-dependent part of `H_lj`.
pub type StateGradientFn = Arc<dyn Fn(f64, &[f64]) -> Mat + Send + Sync>;

/// Symmetry tolerance applied to user-supplied metric matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HamiltonianKind {
    JacobiSecondOrder,
    JacobiFirstOrder,
    MetricSecondOrder,
    MetricQuadraticForm,
    MetricFirstOrder,
    TargetConstant,
}

impl HamiltonianKind {
    pub fn tag(self) -> &'static str {
        match self {
            HamiltonianKind::JacobiSecondOrder => "jacobi-second-order",
            HamiltonianKind::JacobiFirstOrder => "jacobi-first-order",
            HamiltonianKind::MetricSecondOrder => "metric-second-order",
            HamiltonianKind::MetricQuadraticForm => "metric-quadratic-form",
            HamiltonianKind::MetricFirstOrder => "metric-first-order",
            HamiltonianKind::TargetConstant => "target-constant",
        }
    }
}

impl fmt::Display for HamiltonianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// An n×n matrix-valued function of τ, with the τ values at which it is
/// validated.
#[derive(Clone)]
pub struct TauMatrix {
    n: usize,
    eval: CoeffFn,
    probes: Vec<f64>,
}

impl fmt::Debug for TauMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TauMatrix")
            .field("n", &self.n)
            .field("probes", &self.probes.len())
            .finish()
    }
}

impl TauMatrix {
    pub fn constant(m: Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid(format!("expected a square matrix, got {:?}", m.shape())));
        }
        let n = m.rows();
        Ok(TauMatrix {
            n,
            eval: Arc::new(move |_| m.clone()),
            probes: vec![0.0],
        })
    }

    /// `f` is checked (shape, finiteness, and symmetry where required) at
    /// every τ in `probes`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Mat + Send + Sync + 'static, probes: Vec<f64>) -> Self {
        TauMatrix {
            n,
            eval: Arc::new(f),
            probes,
        }
    }

    /// Linear interpolation of samples on a grid.
    pub fn sampled(grid: Grid, samples: Vec<Mat>) -> Result<Self> {
        let fc = FrameCurvature::new(grid, samples)?;
        let n = fc.n();
        Ok(TauMatrix {
            n,
            eval: Arc::new(move |t| fc.at(t)),
            probes: grid.taus(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn at(&self, tau: f64) -> Mat {
        (self.eval)(tau)
    }

    fn validate(&self, require_symmetric: bool) -> Result<()> {
        for &t in &self.probes {
            let m = self.at(t);
            if m.shape() != (self.n, self.n) || !m.is_finite() {
                return Err(Error::invalid(format!(
                    "matrix at tau = {t} is not a finite {n}×{n} matrix",
                    n = self.n
                )));
            }
            if require_symmetric {
                let asym = m.asymmetry();
                if asym > SYMMETRY_TOL * m.max_abs().max(1.0) {
                    return Err(Error::invalid(format!(
                        "matrix at tau = {t} is not symmetric (max |G - Gᵀ| = {asym:e})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `H(τ) = ½ ξᵀ coeff(τ) ξ`, optionally with a state-dependent part.
#[derive(Clone)]
pub struct QuadHamiltonian {
    n: usize,
    kind: HamiltonianKind,
    coeff: CoeffFn,
    state_gradient: Option<StateGradientFn>,
}

impl fmt::Debug for QuadHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadHamiltonian")
            .field("n", &self.n)
            .field("kind", &self.kind)
            .field("state_dependent", &self.state_gradient.is_some())
            .finish()
    }
}

impl QuadHamiltonian {
    pub fn new(n: usize, kind: HamiltonianKind, coeff: impl Fn(f64) -> Mat + Send + Sync + 'static) -> Self {
        QuadHamiltonian {
            n,
            kind,
            coeff: Arc::new(coeff),
            state_gradient: None,
        }
    }

    pub fn with_state_gradient(mut self, f: impl Fn(f64, &[f64]) -> Mat + Send + Sync + 'static) -> Self {
        self.state_gradient = Some(Arc::new(f));
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> HamiltonianKind {
        self.kind
    }

    pub fn is_state_dependent(&self) -> bool {
        self.state_gradient.is_some()
    }

    pub fn coeff(&self, tau: f64) -> Mat {
        (self.coeff)(tau)
    }

    /// `½ ξᵀ coeff(τ) ξ`.
    pub fn energy(&self, tau: f64, xi: &[f64]) -> f64 {
        let c = self.coeff(tau);
        let cx = c.mul_vec(xi).expect("phase vector of length 2n");
        0.5 * xi.iter().zip(&cx).map(|(a, b)| a * b).sum::<f64>()
    }
}

fn block(k: Mat, top_right: Mat, bottom_left: Mat, momentum: Mat) -> Mat {
    BlockMat2n::new(k, top_right, bottom_left, momentum)
        .expect("blocks share one size")
        .flatten()
}

/// Position block `k`, momentum block `I`.
fn second_order_coeff(k: Mat) -> Mat {
    let n = k.rows();
    block(k, Mat::zeros(n, n), Mat::zeros(n, n), Mat::identity(n))
}

/// `[[0, m], [mᵀ, 0]]`.
fn first_order_coeff(m: Mat) -> Mat {
    let n = m.rows();
    let mt = m.transpose();
    block(Mat::zeros(n, n), m, mt, Mat::zeros(n, n))
}

/// `ξ̇ = J ∂H/∂ξ`, with `∂H/∂ξ = X ξ`.
pub fn hamilton_rhs(h: &QuadHamiltonian, tau: f64, xi: &[f64]) -> Vec<f64> {
    let mut x = h.coeff(tau);
    if let Some(g) = &h.state_gradient {
        x = &x + &g(tau, xi).scale(0.5);
    }
    let grad = x.mul_vec(xi).expect("phase vector of length 2n");
    SymplecticForm::new(h.n).apply_vec(&grad)
}

/// Integrates the Hamilton flow on `grid` from `xi0`.
pub fn integrate_flow(h: &QuadHamiltonian, grid: &Grid, xi0: &[f64]) -> Result<Vec<Vec<f64>>> {
    if xi0.len() != 2 * h.n {
        return Err(Error::invalid(format!(
            "phase state of length {} for n = {}",
            xi0.len(),
            h.n
        )));
    }
    if xi0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("phase state must be finite"));
    }
    rk4_integrate(|t, y| Ok(hamilton_rhs(h, t, y)), grid, xi0)
}

/// `X(τ)` with `2 X_lj = ∂H_ij/∂ξ^l ξ^i + 2 H_lj`. The same function gives
/// `Y` for a target Hamiltonian.
pub fn coefficient_x(h: &QuadHamiltonian, tau: f64, reference: Option<&[f64]>) -> Result<Mat> {
    let c = h.coeff(tau);
    match (&h.state_gradient, reference) {
        (None, _) => Ok(c),
        (Some(_), None) => Err(Error::MissingReference),
        (Some(g), Some(xi)) => Ok(&c + &g(tau, xi).scale(0.5)),
    }
}

/// `[[K(τ), 0], [0, I]]` from sampled frame curvature, so that Hamilton's
/// equations reproduce `Z̈ + K Z = 0`.
pub fn build_jacobi_h_second_order(fc: &FrameCurvature) -> QuadHamiltonian {
    let fc = fc.clone();
    QuadHamiltonian::new(fc.n(), HamiltonianKind::JacobiSecondOrder, move |t| {
        second_order_coeff(fc.at(t))
    })
}

/// `[[0, M], [Mᵀ, 0]]` with `M_AC = V_C;A`. The position equations read
/// `ζ̇ = Mᵀ ζ`, i.e. `dζ^A/dτ = V_A;C ζ^C`.
pub fn build_jacobi_h_first_order(m: &TauMatrix) -> Result<QuadHamiltonian> {
    m.validate(false)?;
    let m = m.clone();
    Ok(QuadHamiltonian::new(
        m.n(),
        HamiltonianKind::JacobiFirstOrder,
        move |t| first_order_coeff(m.at(t)),
    ))
}

/// `[[diag(K_l), 0], [0, I]]`, constant in τ; Hamilton's equations give
/// `ẍ_i + K_i x_i = 0`.
pub fn build_target_c_constant(spec: &ConstantCurvatureSpec) -> QuadHamiltonian {
    let c = second_order_coeff(constant_curvature_frame_block(spec));
    QuadHamiltonian::new(spec.n(), HamiltonianKind::TargetConstant, move |_| c.clone())
}

/// `[[G(τ), 0], [0, I]]`, i.e. `H = ½ (P·P + Xᵀ G X)`. Rejects asymmetric `G`.
pub fn build_metric_h_second_order(g: &TauMatrix) -> Result<QuadHamiltonian> {
    g.validate(true)?;
    let g = g.clone();
    Ok(QuadHamiltonian::new(
        g.n(),
        HamiltonianKind::MetricSecondOrder,
        move |t| second_order_coeff(g.at(t)),
    ))
}

/// `[[G(τ), 0], [0, 0]]`: a pure position quadratic form. Its flow is
/// degenerate (positions are frozen).
pub fn build_metric_quadratic_form(g: &TauMatrix) -> Result<QuadHamiltonian> {
    g.validate(true)?;
    let g = g.clone();
    Ok(QuadHamiltonian::new(
        g.n(),
        HamiltonianKind::MetricQuadraticForm,
        move |t| {
            let n = g.n();
            block(g.at(t), Mat::zeros(n, n), Mat::zeros(n, n), Mat::zeros(n, n))
        },
    ))
}

/// `[[0, M], [Mᵀ, 0]]` with `M_ij = G_ji`. `G` may be asymmetric; the full
/// coefficient matrix is symmetric regardless.
pub fn build_metric_h_first_order(g: &TauMatrix) -> Result<QuadHamiltonian> {
    g.validate(false)?;
    let g = g.clone();
    Ok(QuadHamiltonian::new(
        g.n(),
        HamiltonianKind::MetricFirstOrder,
        move |t| first_order_coeff(g.at(t).transpose()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::integrate_jacobi_geodesic;

    fn grid(h: f64, tau_max: f64) -> Grid {
        Grid::span(h, tau_max).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn rhs_examples() {
        let osc = QuadHamiltonian::new(1, HamiltonianKind::TargetConstant, |_| Mat::identity(2));
        assert_eq!(hamilton_rhs(&osc, 0.0, &[1.0, 0.0]), vec![0.0, -1.0]);

        let zero = QuadHamiltonian::new(2, HamiltonianKind::TargetConstant, |_| Mat::zeros(4, 4));
        assert!(hamilton_rhs(&zero, 1.0, &[1.0, 2.0, 3.0, 4.0])
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn first_order_rhs_is_velocity_gradient() {
        // M_AC = V_C;A, so the position rate is Mᵀ ζ = (V_A;C ζ^C).
        let m = Mat::from_rows(&[vec![0.3, -1.2], vec![0.5, 2.0]]).unwrap();
        let h = build_jacobi_h_first_order(&TauMatrix::constant(m.clone()).unwrap()).unwrap();
        let xi = [0.7, -0.4, 1.5, 0.25];
        let rhs = hamilton_rhs(&h, 0.0, &xi);
        let want = m.transpose().mul_vec(&xi[..2]).unwrap();
        assert!(close(&rhs[..2], &want, 1e-15));
        let want_p: Vec<f64> = m.mul_vec(&xi[2..]).unwrap().iter().map(|v| -v).collect();
        assert!(close(&rhs[2..], &want_p, 1e-15));
    }

    #[test]
    fn second_order_jacobi_h_matches_oscillator() {
        let g = grid(1e-2, 1.0);
        let fc = FrameCurvature::constant(Mat::identity(2).scale(3.0), g).unwrap();
        let h = build_jacobi_h_second_order(&fc);
        assert_eq!(h.coeff(0.3), second_order_coeff(Mat::identity(2).scale(3.0)));
        let rhs = hamilton_rhs(&h, 0.3, &[1.0, 2.0, 0.5, -0.5]);
        assert_eq!(rhs, vec![0.5, -0.5, -3.0, -6.0]);

        let flat = FrameCurvature::constant(Mat::zeros(2, 2), g).unwrap();
        let free = build_jacobi_h_second_order(&flat);
        assert_eq!(
            free.coeff(0.0),
            block(Mat::zeros(2, 2), Mat::zeros(2, 2), Mat::zeros(2, 2), Mat::identity(2))
        );
    }

    #[test]
    fn second_order_flow_reproduces_jacobi_integration() {
        let g = grid(1e-3, 2.0);
        let fc = FrameCurvature::from_fn(g, |t| {
            Mat::from_rows(&[vec![1.0 + t, 0.2], vec![0.2, -0.5 * t]]).unwrap()
        })
        .unwrap();
        let h = build_jacobi_h_second_order(&fc);
        let flow = integrate_flow(&h, &g, &[0.1, -0.2, 1.0, 0.3]).unwrap();
        let jac = integrate_jacobi_geodesic(&fc, &[0.1, -0.2], &[1.0, 0.3]).unwrap();
        for (xi, (z, zd)) in flow.iter().zip(jac.z.iter().zip(&jac.zdot)) {
            assert!(close(&xi[..2], z, 1e-8) && close(&xi[2..], zd, 1e-8));
        }
    }

    #[test]
    fn first_order_flow_examples() {
        let g = grid(1e-3, 2.0);
        let static_h = build_jacobi_h_first_order(&TauMatrix::constant(Mat::zeros(2, 2)).unwrap()).unwrap();
        let flow = integrate_flow(&static_h, &g, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(flow.last().unwrap(), &vec![1.0, 2.0, 3.0, 4.0]);

        let mu = 0.7;
        let h = build_jacobi_h_first_order(&TauMatrix::constant(Mat::identity(2).scale(mu)).unwrap()).unwrap();
        let flow = integrate_flow(&h, &g, &[1.0, -2.0, 0.0, 0.0]).unwrap();
        for (i, xi) in flow.iter().enumerate() {
            let e = (mu * g.tau(i)).exp();
            assert!(close(&xi[..2], &[e, -2.0 * e], 1e-8 * e));
        }

        let w = Mat::from_rows(&[vec![0.0, 1.3], vec![-1.3, 0.0]]).unwrap();
        let h = build_jacobi_h_first_order(&TauMatrix::constant(w).unwrap()).unwrap();
        let flow = integrate_flow(&h, &g, &[0.6, 0.8, 0.0, 0.0]).unwrap();
        for xi in &flow {
            assert!((xi[0].hypot(xi[1]) - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn target_constant_examples() {
        let g = grid(1e-3, 3.0);
        let c = build_target_c_constant(&ConstantCurvatureSpec::uniform(2, 1.0));
        let flow = integrate_flow(&c, &g, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        for (i, xi) in flow.iter().enumerate() {
            let t = g.tau(i);
            assert!(close(xi, &[t.sin(), t.cos(), t.cos(), -t.sin()], 1e-8));
        }

        let free = build_target_c_constant(&ConstantCurvatureSpec::uniform(1, 0.0));
        let flow = integrate_flow(&free, &g, &[1.0, 2.0]).unwrap();
        assert!(close(flow.last().unwrap(), &[7.0, 2.0], 1e-10));

        let mixed = build_target_c_constant(&ConstantCurvatureSpec::new(vec![1.0, -1.0]).unwrap());
        let flow = integrate_flow(&mixed, &g, &[1.0, 1.0, 0.0, 0.0]).unwrap();
        for (i, xi) in flow.iter().enumerate() {
            let t = g.tau(i);
            assert!(close(xi, &[t.cos(), t.cosh(), -t.sin(), t.sinh()], 1e-6));
        }
    }

    #[test]
    fn metric_second_order_examples() {
        let iso = build_metric_h_second_order(&TauMatrix::constant(Mat::identity(2)).unwrap()).unwrap();
        assert_eq!(iso.coeff(1.0), Mat::identity(4));

        let b = [2.0, -0.5];
        let h = build_metric_h_second_order(&TauMatrix::constant(Mat::diag(&b)).unwrap()).unwrap();
        let c = build_target_c_constant(&ConstantCurvatureSpec::new(b.to_vec()).unwrap());
        assert_eq!(h.coeff(0.4), c.coeff(0.4));

        let asym = Mat::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(build_metric_h_second_order(&TauMatrix::constant(asym.clone()).unwrap()).is_err());
        assert!(build_metric_quadratic_form(&TauMatrix::constant(asym).unwrap()).is_err());
    }

    #[test]
    fn metric_second_order_time_dependent_step_halving() {
        let g_of_tau = TauMatrix::from_fn(1, |t| Mat::diag(&[1.0 + t * t]), vec![0.0, 1.0, 2.0]);
        let h = build_metric_h_second_order(&g_of_tau).unwrap();
        let coarse = integrate_flow(&h, &grid(1e-3, 2.0), &[1.0, 0.0]).unwrap();
        let fine = integrate_flow(&h, &grid(5e-4, 2.0), &[1.0, 0.0]).unwrap();
        for (i, xi) in coarse.iter().enumerate() {
            assert!(close(xi, &fine[2 * i], 1e-6));
        }
    }

    #[test]
    fn quadratic_form_freezes_positions() {
        let g = Mat::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let h = build_metric_quadratic_form(&TauMatrix::constant(g.clone()).unwrap()).unwrap();
        assert_eq!(h.kind(), HamiltonianKind::MetricQuadraticForm);
        let rhs = hamilton_rhs(&h, 0.0, &[1.0, -1.0, 3.0, 4.0]);
        assert_eq!(&rhs[..2], &[0.0, 0.0]);
        let id = build_metric_quadratic_form(&TauMatrix::constant(Mat::identity(1)).unwrap()).unwrap();
        assert_eq!(hamilton_rhs(&id, 0.0, &[2.5, 7.0]), vec![0.0, -2.5]);
        assert_eq!(coefficient_x(&h, 0.0, None).unwrap(), h.coeff(0.0));
    }

    #[test]
    fn metric_first_order_examples() {
        let a = build_metric_h_first_order(&TauMatrix::constant(Mat::identity(2)).unwrap()).unwrap();
        let b = build_jacobi_h_first_order(&TauMatrix::constant(Mat::identity(2)).unwrap()).unwrap();
        assert_eq!(a.coeff(0.0), b.coeff(0.0));

        let g = Mat::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let h = build_metric_h_first_order(&TauMatrix::constant(g).unwrap()).unwrap();
        let c = h.coeff(0.0);
        assert_eq!(c, c.transpose());
    }

    #[test]
    fn metric_first_order_rhs_matches_numerical_gradient() {
        let g = Mat::from_rows(&[vec![0.2, 1.0], vec![-0.7, 0.4]]).unwrap();
        let h = build_metric_h_first_order(&TauMatrix::constant(g).unwrap()).unwrap();
        let xi = [0.3, -1.1, 0.8, 0.5];
        let eps = 1e-6;
        let grad: Vec<f64> = (0..4)
            .map(|k| {
                let mut p = xi;
                let mut m = xi;
                p[k] += eps;
                m[k] -= eps;
                (h.energy(0.0, &p) - h.energy(0.0, &m)) / (2.0 * eps)
            })
            .collect();
        let want = SymplecticForm::new(2).apply_vec(&grad);
        assert!(close(&hamilton_rhs(&h, 0.0, &xi), &want, 1e-8));
    }

    #[test]
    fn state_dependent_x_matches_finite_difference_gradient() {
        // H(ξ) = ½ ξᵀ H0 ξ + ½ α |ξ|⁴, i.e. H_ij(ξ) = H0 + α |ξ|² δ_ij.
        let alpha = 0.3;
        let h0 = Mat::from_rows(&[vec![2.0, 0.1], vec![0.1, 1.0]]).unwrap();
        let h0c = h0.clone();
        let h = QuadHamiltonian::new(1, HamiltonianKind::JacobiSecondOrder, move |_| h0c.clone()).with_state_gradient(
            move |_, xi| {
                let r2: f64 = xi.iter().map(|v| v * v).sum();
                Mat::from_fn(2, 2, |l, j| {
                    2.0 * alpha * xi[l] * xi[j] + if l == j { 2.0 * alpha * r2 } else { 0.0 }
                })
            },
        );
        let full = |xi: &[f64]| {
            let r2: f64 = xi.iter().map(|v| v * v).sum();
            let q = h0.mul_vec(xi).unwrap();
            0.5 * (xi[0] * q[0] + xi[1] * q[1]) + 0.5 * alpha * r2 * r2
        };
        let xi = [0.7, -1.3];
        let x = coefficient_x(&h, 0.0, Some(&xi)).unwrap();
        let analytic = x.mul_vec(&xi).unwrap();
        let eps = 1e-6;
        for k in 0..2 {
            let mut p = xi;
            let mut m = xi;
            p[k] += eps;
            m[k] -= eps;
            let fd = (full(&p) - full(&m)) / (2.0 * eps);
            assert!((fd - analytic[k]).abs() <= 1e-7, "{fd} vs {}", analytic[k]);
        }
        assert!(matches!(coefficient_x(&h, 0.0, None), Err(Error::MissingReference)));
        assert_eq!(coefficient_x(&h, 0.0, Some(&[0.0, 0.0])).unwrap(), h.coeff(0.0));
    }

    #[test]
    fn energy_conserved_for_constant_coefficients() {
        let c = Mat::from_rows(&[
            vec![2.0, 0.3, 0.1, 0.0],
            vec![0.3, 1.0, 0.0, 0.2],
            vec![0.1, 0.0, 1.0, 0.0],
            vec![0.0, 0.2, 0.0, 1.5],
        ])
        .unwrap();
        let h = QuadHamiltonian::new(2, HamiltonianKind::TargetConstant, move |_| c.clone());
        let g = grid(1e-3, 10.0);
        let xi0 = [1.0, -0.5, 0.2, 0.7];
        let e0 = h.energy(0.0, &xi0);
        let flow = integrate_flow(&h, &g, &xi0).unwrap();
        for xi in &flow {
            assert!((h.energy(0.0, xi) - e0).abs() <= 1e-8);
        }
    }
}
