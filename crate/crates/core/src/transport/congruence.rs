//! Congruence data for Jacobi fields off a geodesic.
//!
//! A single worldline does not determine `V_C;A`, so the velocity gradient and
//! the acceleration gradient come from an analytic congruence that contains
//! the curve. All matrices are in the curve's Fermi-Walker frame (spatial
//! indices `1..=n`, stored `0..n`).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Mat;

use super::curve::AccelerationField;

type MatFn = Arc<dyn Fn(f64) -> Mat + Send + Sync>;
type VecFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct CongruenceData {
    n: usize,
    /// `M_AC = V_C;A`.
    m_of_tau: MatFn,
    /// `V̇_A`.
    a_of_tau: VecFn,
    /// `V̇_A;C`.
    gradient_a: MatFn,
    /// Flat spatial frame metric used to raise `V̇^C`.
    spatial_eta: Vec<f64>,
    /// Proper-time range covered; `None` means all τ.
    range: Option<(f64, f64)>,
}

impl fmt::Debug for CongruenceData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CongruenceData")
            .field("n", &self.n)
            .field("range", &self.range)
            .finish_non_exhaustive()
    }
}

impl CongruenceData {
    pub fn new(
        n: usize,
        m_of_tau: impl Fn(f64) -> Mat + Send + Sync + 'static,
        a_of_tau: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        gradient_a: impl Fn(f64) -> Mat + Send + Sync + 'static,
    ) -> Self {
        CongruenceData {
            n,
            m_of_tau: Arc::new(m_of_tau),
            a_of_tau: Arc::new(a_of_tau),
            gradient_a: Arc::new(gradient_a),
            spatial_eta: vec![1.0; n],
            range: None,
        }
    }

    pub fn with_range(mut self, start: f64, end: f64) -> Self {
        self.range = Some((start, end));
        self
    }

    pub fn with_spatial_eta(mut self, eta: Vec<f64>) -> Result<Self> {
        if eta.len() != self.n {
            return Err(Error::invalid("spatial frame metric length must equal n"));
        }
        self.spatial_eta = eta;
        Ok(self)
    }

    /// Geodesic congruence with no velocity gradient.
    pub fn zero(n: usize) -> Self {
        Self::new(
            n,
            move |_| Mat::zeros(n, n),
            move |_| vec![0.0; n],
            move |_| Mat::zeros(n, n),
        )
    }

    /// τ-independent data.
    pub fn constant(m: Mat, a: Vec<f64>, gradient_a: Mat) -> Result<Self> {
        let n = a.len();
        if m.shape() != (n, n) || gradient_a.shape() != (n, n) {
            return Err(Error::invalid("congruence matrices must be n×n with n = len(a)"));
        }
        Ok(Self::new(
            n,
            move |_| m.clone(),
            move |_| a.clone(),
            move |_| gradient_a.clone(),
        ))
    }

    /// Uniformly accelerated (Rindler) observers in flat space, seen from the
    /// observer with proper acceleration `g` along the first spatial axis.
    /// The congruence is rigid, so `M = 0`; `V̇ = (g, 0, …)` and
    /// `V̇_A;C = diag(−g², 0, …)`.
    pub fn rindler(g: f64, n: usize) -> Self {
        let mut a = vec![0.0; n];
        a[0] = g;
        let mut grad = Mat::zeros(n, n);
        grad[(0, 0)] = -g * g;
        Self::new(n, move |_| Mat::zeros(n, n), move |_| a.clone(), move |_| grad.clone())
    }

    /// Static observers of Schwarzschild (mass `m`) at radius `r`, frame
    /// `(r̂, θ̂, φ̂)`. With `f = 1 − 2m/r`: `V̇ = (m / (r² √f), 0, 0)`,
    /// `V̇_A;C = diag(−m (2 r f + m) / (r⁴ f), m/r³, m/r³)` and `M = 0`.
    pub fn schwarzschild_static(m: f64, r: f64) -> Result<Self> {
        let f = 1.0 - 2.0 * m / r;
        if !(m > 0.0 && f > 0.0) {
            return Err(Error::invalid(format!(
                "static observers need r > 2m, got r = {r}, m = {m}"
            )));
        }
        let a = vec![m / (r * r * f.sqrt()), 0.0, 0.0];
        let m_r3 = m / r.powi(3);
        let grad = Mat::diag(&[-m * (2.0 * r * f + m) / (r.powi(4) * f), m_r3, m_r3]);
        Self::constant(Mat::zeros(3, 3), a, grad)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `M(τ)` with `M_AC = V_C;A`.
    pub fn velocity_gradient(&self, tau: f64) -> Mat {
        (self.m_of_tau)(tau)
    }

    pub fn acceleration(&self, tau: f64) -> Vec<f64> {
        (self.a_of_tau)(tau)
    }

    pub fn acceleration_gradient(&self, tau: f64) -> Mat {
        (self.gradient_a)(tau)
    }

    pub fn check_covers(&self, start: f64, end: f64) -> Result<()> {
        if let Some((lo, hi)) = self.range {
            if start < lo || end > hi {
                return Err(Error::GridMismatch(format!(
                    "congruence data covers [{lo}, {hi}], needed [{start}, {end}]"
                )));
            }
        }
        Ok(())
    }

    /// `K − V̇_A;C − V̇_A V̇^C`.
    pub fn effective_tidal(&self, k: &Mat, tau: f64) -> Mat {
        let grad = self.acceleration_gradient(tau);
        let a = self.acceleration(tau);
        let n = self.n;
        Mat::from_fn(n, n, |i, j| {
            k[(i, j)] - grad[(i, j)] - a[i] * a[j] * self.spatial_eta[j]
        })
    }
}

/// Four-acceleration field of the Rindler congruence in Minkowski
/// coordinates `(t, x, …)`: `a = (t, x, 0, …) / (x² − t²)`.
pub fn rindler_acceleration_field() -> AccelerationField {
    Arc::new(|x: &[f64], _v: &[f64]| {
        let rho2 = x[1] * x[1] - x[0] * x[0];
        let mut a = vec![0.0; x.len()];
        a[0] = x[0] / rho2;
        a[1] = x[1] / rho2;
        a
    })
}

/// Acceleration keeping Schwarzschild static observers at fixed `r`:
/// `a^r = m / r²`.
pub fn schwarzschild_static_acceleration_field(m: f64) -> AccelerationField {
    Arc::new(move |x: &[f64], _v: &[f64]| vec![0.0, m / (x[1] * x[1]), 0.0, 0.0])
}
