use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{project_curvature, riemann, FdConfig, Metric};
use crate::linalg::Mat;
use crate::ode::{rk4_integrate, Grid};

use super::congruence::CongruenceData;
use super::curve::CurveSampling;

/// Tidal matrix `K_0A0C(τ_i)` sampled along a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCurvature {
    grid: Grid,
    samples: Arc<[Mat]>,
    /// `max |K_0A0C − K_0C0A|` before symmetrization, per sample.
    pub asymmetry: Vec<f64>,
}

impl FrameCurvature {
    /// Wraps pre-computed symmetric samples on `grid`.
    pub fn new(grid: Grid, samples: Vec<Mat>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.len()
            )));
        }
        let n = samples[0].rows();
        if samples.iter().any(|s| s.shape() != (n, n)) {
            return Err(Error::invalid("frame curvature samples must all be n×n"));
        }
        let asymmetry = samples.iter().map(Mat::asymmetry).collect();
        Ok(FrameCurvature {
            grid,
            samples: samples.into(),
            asymmetry,
        })
    }

    /// The same matrix at every grid point.
    pub fn constant(k: Mat, grid: Grid) -> Result<Self> {
        Self::new(grid, vec![k; grid.len()])
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Mat) -> Result<Self> {
        Self::new(grid, grid.taus().into_iter().map(f).collect())
    }

    pub fn n(&self) -> usize {
        self.samples[0].rows()
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn samples(&self) -> &[Mat] {
        &self.samples
    }

    /// Linear interpolation between samples; clamped outside the grid.
    pub fn at(&self, tau: f64) -> Mat {
        let s = (tau - self.grid.start) / self.grid.step;
        if s <= 0.0 {
            return self.samples[0].clone();
        }
        let last = self.grid.steps;
        if s >= last as f64 {
            return self.samples[last].clone();
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        if w == 0.0 {
            return self.samples[i].clone();
        }
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        Mat::from_fn(a.rows(), a.cols(), |r, c| (1.0 - w) * a[(r, c)] + w * b[(r, c)])
    }
}

/// `K_0A0C` at every sample of `curve`, using each sample's transported
/// frame. Output is symmetrized; the removed asymmetry is kept in
/// [`FrameCurvature::asymmetry`].
pub fn sample_frame_curvature(m: &Metric, curve: &CurveSampling, fd: &FdConfig) -> Result<FrameCurvature> {
    let d = m.dim();
    let n = d - 1;
    let mut samples = Vec::with_capacity(curve.len());
    let mut asymmetry = Vec::with_capacity(curve.len());
    for s in &curve.states {
        let r = riemann(m, &s.x, fd)?;
        let kf = project_curvature(&r, m, &s.frame)?;
        let k = Mat::from_fn(n, n, |a, c| kf.get(0, a + 1, 0, c + 1));
        asymmetry.push(k.asymmetry());
        samples.push(k.symmetrized());
    }
    let mut fc = FrameCurvature::new(curve.grid(), samples)?;
    fc.asymmetry = asymmetry;
    Ok(fc)
}

/// Jacobi field samples `(Z, Ż)` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiSolution {
    pub tau: Vec<f64>,
    pub z: Vec<Vec<f64>>,
    pub zdot: Vec<Vec<f64>>,
}

impl JacobiSolution {
    fn from_packed(grid: &Grid, n: usize, ys: Vec<Vec<f64>>) -> Self {
        let mut z = Vec::with_capacity(ys.len());
        let mut zdot = Vec::with_capacity(ys.len());
        for y in ys {
            z.push(y[..n].to_vec());
            zdot.push(y[n..].to_vec());
        }
        JacobiSolution {
            tau: grid.taus(),
            z,
            zdot,
        }
    }

    /// Largest absolute difference in `Z` and `Ż` over all samples.
    pub fn max_diff(&self, other: &JacobiSolution) -> f64 {
        let mut m = 0.0f64;
        for (a, b) in self.z.iter().chain(&self.zdot).zip(other.z.iter().chain(&other.zdot)) {
            for (x, y) in a.iter().zip(b) {
                m = m.max((x - y).abs());
            }
        }
        m
    }
}

fn check_initial(n: usize, z0: &[f64], zdot0: &[f64]) -> Result<()> {
    if z0.len() != n || zdot0.len() != n {
        return Err(Error::GridMismatch(format!(
            "initial data of length {} / {} for n = {n}",
            z0.len(),
            zdot0.len()
        )));
    }
    Ok(())
}

/// `Z̈ + W(τ) Z = 0` as a first-order system on `grid`.
fn integrate_second_order(
    grid: &Grid,
    n: usize,
    coeff: impl Fn(f64) -> Mat,
    z0: &[f64],
    zdot0: &[f64],
) -> Result<JacobiSolution> {
    let y0 = [z0, zdot0].concat();
    let ys = rk4_integrate(
        |t, y| {
            let w = coeff(t);
            let wz = w.mul_vec(&y[..n])?;
            let mut out = y[n..].to_vec();
            out.extend(wz.iter().map(|v| -v));
            Ok(out)
        },
        grid,
        &y0,
    )?;
    Ok(JacobiSolution::from_packed(grid, n, ys))
}

/// Geodesic deviation `Z̈_A + K_0A0C(τ) Z_C = 0` on the grid of `fc`.
pub fn integrate_jacobi_geodesic(fc: &FrameCurvature, z0: &[f64], zdot0: &[f64]) -> Result<JacobiSolution> {
    let n = fc.n();
    check_initial(n, z0, zdot0)?;
    integrate_second_order(&fc.grid(), n, |t| fc.at(t), z0, zdot0)
}

/// Jacobi equation off a geodesic:
/// `ζ̈_A + (K_0A0C − V̇_A;C − V̇_A V̇^C) ζ_C = 0`, all terms in the
/// Fermi-Walker frame.
pub fn integrate_jacobi_nongeodesic(
    fc: &FrameCurvature,
    cong: &CongruenceData,
    z0: &[f64],
    zdot0: &[f64],
) -> Result<JacobiSolution> {
    let n = fc.n();
    check_initial(n, z0, zdot0)?;
    if cong.n() != n {
        return Err(Error::GridMismatch(format!(
            "congruence has n = {}, frame curvature has n = {n}",
            cong.n()
        )));
    }
    let grid = fc.grid();
    cong.check_covers(grid.start, grid.end())?;
    integrate_second_order(&grid, n, |t| cong.effective_tidal(&fc.at(t), t), z0, zdot0)
}

/// First-order flow `dζ^A/dτ = V_A;C ζ^C`, i.e. `ζ̇ = Mᵀ ζ` with
/// `M_AC = V_C;A`.
pub fn integrate_jacobi_first_order(cong: &CongruenceData, grid: &Grid, z0: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = cong.n();
    if z0.len() != n {
        return Err(Error::GridMismatch(format!(
            "initial data of length {} for n = {n}",
            z0.len()
        )));
    }
    cong.check_covers(grid.start, grid.end())?;
    rk4_integrate(|t, y| cong.velocity_gradient(t).transpose().mul_vec(y), grid, z0)
}
