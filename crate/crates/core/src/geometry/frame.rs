use crate::error::{Error, Result};
use crate::linalg::{matmul, Mat};

use super::metric::Metric;

/// Below this magnitude a Gram-Schmidt norm² counts as degenerate.
pub const FRAME_NORM_FLOOR: f64 = 1e-12;

/// Orthonormal frame at a point. Column `A` of `e` is `E_(A)` in coordinate
/// components, and `eᵀ G e = diag(eta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vielbein {
    pub e: Mat,
    pub eta: Vec<f64>,
}

impl Vielbein {
    pub fn dim(&self) -> usize {
        self.eta.len()
    }

    pub fn eta_matrix(&self) -> Mat {
        Mat::diag(&self.eta)
    }

    pub fn vector(&self, a: usize) -> Vec<f64> {
        self.e.col(a)
    }

    /// `max |(Eᵀ G E − η)_AB|`.
    pub fn orthonormality_defect(&self, g: &Mat) -> f64 {
        let gram = matmul(&self.e.transpose(), &matmul(g, &self.e).expect("square frame")).expect("square frame");
        gram.try_sub(&self.eta_matrix())
            .map(|m| m.max_abs())
            .unwrap_or(f64::INFINITY)
    }
}

/// Gram-Schmidt of `vectors` with respect to `g`, normalizing vector `i` to
/// norm² `signature[i]`.
pub fn gram_schmidt(g: &Mat, vectors: &[Vec<f64>], signature: &[f64]) -> Result<Vielbein> {
    let d = signature.len();
    if vectors.len() != d {
        return Err(Error::invalid(format!(
            "Gram-Schmidt needs {d} vectors, got {}",
            vectors.len()
        )));
    }
    let inner = |a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += g[(i, j)] * a[i] * b[j];
            }
        }
        s
    };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    for (i, v) in vectors.iter().enumerate() {
        let mut w = v.clone();
        for (j, b) in basis.iter().enumerate() {
            let c = inner(v, b) / signature[j];
            for k in 0..d {
                w[k] -= c * b[k];
            }
        }
        let n2 = inner(&w, &w);
        if !(n2.abs() >= FRAME_NORM_FLOOR) {
            return Err(Error::DegenerateFrame(format!(
                "vector {i} has norm² {n2:e} below {FRAME_NORM_FLOOR:e}"
            )));
        }
        if n2.signum() != signature[i] {
            return Err(Error::DegenerateFrame(format!(
                "vector {i} has norm² {n2:e}, expected sign {}",
                signature[i]
            )));
        }
        let s = 1.0 / n2.abs().sqrt();
        basis.push(w.iter().map(|x| x * s).collect());
    }
    let e = Mat::from_fn(d, d, |r, c| basis[c][r]).ensure_finite()?;
    Ok(Vielbein {
        e,
        eta: signature.to_vec(),
    })
}

/// Frame from Gram-Schmidt on the coordinate basis, first coordinate first.
pub fn build_vielbein(m: &Metric, x: &[f64]) -> Result<Vielbein> {
    let d = m.dim();
    let g = m.eval(x)?;
    let basis: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    gram_schmidt(&g, &basis, m.signature())
}

/// Frame whose first vector is the (already normalized) velocity `v`, the
/// rest from Gram-Schmidt on the spatial coordinate basis.
pub fn comoving_frame(m: &Metric, x: &[f64], v: &[f64]) -> Result<Vielbein> {
    let d = m.dim();
    let g = m.eval(x)?;
    let mut vectors = vec![v.to_vec()];
    vectors.extend((1..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()));
    gram_schmidt(&g, &vectors, m.signature())
}

/// Rescales `v` so that `g(v, v) = −1`.
pub fn normalize_timelike(m: &Metric, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let g = m.eval(x)?;
    let n2 = m.inner(&g, v, v);
    if !(n2 < -FRAME_NORM_FLOOR) {
        return Err(Error::invalid(format!(
            "velocity {v:?} is not timelike (g(v,v) = {n2:e})"
        )));
    }
    let s = 1.0 / (-n2).sqrt();
    Ok(v.iter().map(|c| c * s).collect())
}
