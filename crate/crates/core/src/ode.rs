//! Classical fixed-step fourth-order Runge-Kutta on flat `f64` buffers.

use crate::error::Result;

/// Uniform grid `tau_i = start + i·step`, `i = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub step: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(start: f64, step: f64, steps: usize) -> crate::Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !start.is_finite() {
            return Err(crate::Error::invalid(format!(
                "grid step must be positive and finite, got {step}"
            )));
        }
        Ok(Grid { start, step, steps })
    }

    /// Grid from 0 to `tau_max` with the step count rounded to the nearest
    /// integer.
    pub fn span(step: f64, tau_max: f64) -> crate::Result<Self> {
        if !(tau_max > 0.0) {
            return Err(crate::Error::invalid(format!(
                "tau_max must be positive, got {tau_max}"
            )));
        }
        Grid::new(0.0, step, (tau_max / step).round().max(1.0) as usize)
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tau(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.tau(self.steps)
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.tau(i)).collect()
    }
}

fn axpy(y: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(y, k)| y + a * k).collect()
}

/// One RK4 step of `y' = f(t, y)`.
pub fn rk4_step<F>(f: &mut F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1))?;
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2))?;
    let k4 = f(t + h, &axpy(y, h, &k3))?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, y)| y + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrates over the whole grid and returns every sample, starting with
/// `y0`. A non-finite state stops integration with [`crate::Error::Diverged`].
pub fn rk4_integrate<F>(mut f: F, grid: &Grid, y0: &[f64]) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let mut out = Vec::with_capacity(grid.len());
    out.push(y0.to_vec());
    for i in 0..grid.steps {
        let t = grid.tau(i);
        let next = rk4_step(&mut f, t, &out[i], grid.step)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(crate::Error::Diverged { tau: grid.tau(i + 1) });
        }
        out.push(next);
    }
    Ok(out)
}

/// Derivative of uniformly sampled data: centered differences inside,
/// second-order one-sided differences at both ends. Fewer than three samples
/// fall back to a plain difference (two samples) or zero (one sample).
pub fn sampled_derivative(samples: &[Vec<f64>], h: f64) -> Vec<Vec<f64>> {
    let len = samples.len();
    let width = samples.first().map_or(0, Vec::len);
    let combine = |terms: &[(f64, usize)]| -> Vec<f64> {
        (0..width)
            .map(|k| terms.iter().map(|(c, i)| c * samples[*i][k]).sum::<f64>() / h)
            .collect()
    };
    match len {
        0 => Vec::new(),
        1 => vec![vec![0.0; width]],
        2 => {
            let d = combine(&[(-1.0, 0), (1.0, 1)]);
            vec![d.clone(), d]
        }
        _ => (0..len)
            .map(|i| {
                if i == 0 {
                    combine(&[(-1.5, 0), (2.0, 1), (-0.5, 2)])
                } else if i == len - 1 {
                    combine(&[(0.5, len - 3), (-2.0, len - 2), (1.5, len - 1)])
                } else {
                    combine(&[(-0.5, i - 1), (0.5, i + 1)])
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let err = |h: f64| {
            let grid = Grid::new(0.0, h, (1.0 / h).round() as usize).unwrap();
            let ys = rk4_integrate(|_, y| Ok(vec![-y[0]]), &grid, &[1.0]).unwrap();
            (ys.last().unwrap()[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((14.0..18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn derivative_of_quadratic_is_exact() {
        let h = 0.1;
        let samples: Vec<Vec<f64>> = (0..6).map(|i| vec![(i as f64 * h).powi(2)]).collect();
        let d = sampled_derivative(&samples, h);
        for (i, di) in d.iter().enumerate() {
            assert!((di[0] - 2.0 * i as f64 * h).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_rejects_bad_step() {
        assert!(Grid::new(0.0, 0.0, 3).is_err());
        assert!(Grid::new(0.0, -1.0, 3).is_err());
        assert!(Grid::span(0.1, 0.0).is_err());
        assert_eq!(Grid::span(1e-3, 5.0).unwrap().steps, 5000);
    }
}
