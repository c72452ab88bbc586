use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::Mat;

use super::tensor::Christoffel;

pub type MetricFn = Arc<dyn Fn(&[f64]) -> Option<Mat> + Send + Sync>;
pub type ChristoffelFn = Arc<dyn Fn(&[f64]) -> Option<Christoffel> + Send + Sync>;
/// Orthonormal frame field: column `A` is `E_(A)` in coordinate components.
pub type FrameFieldFn = Arc<dyn Fn(&[f64]) -> Option<Mat> + Send + Sync>;

/// A metric on a coordinate chart of dimension `dim = n + 1`.
///
/// `signature` lists the diagonal of the flat frame metric η; index 0 is the
/// timelike direction for Lorentzian metrics but any ±1 pattern is accepted.
#[derive(Clone)]
pub struct Metric {
    label: String,
    signature: Vec<f64>,
    eval: MetricFn,
    christoffel: Option<ChristoffelFn>,
    frame_field: Option<FrameFieldFn>,
}

impl fmt::Debug for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Metric")
            .field("label", &self.label)
            .field("signature", &self.signature)
            .field("analytic_christoffel", &self.christoffel.is_some())
            .field("frame_field", &self.frame_field.is_some())
            .finish()
    }
}

fn check_signature(signature: &[f64]) -> Result<()> {
    if signature.is_empty() || signature.iter().any(|s| *s != 1.0 && *s != -1.0) {
        return Err(Error::invalid(format!(
            "signature entries must be ±1, got {signature:?}"
        )));
    }
    Ok(())
}

impl Metric {
    /// General metric from an evaluator. The evaluator returns `None` outside
    /// its domain.
    pub fn new(label: impl Into<String>, signature: Vec<f64>, eval: MetricFn) -> Result<Self> {
        check_signature(&signature)?;
        Ok(Metric {
            label: label.into(),
            signature,
            eval,
            christoffel: None,
            frame_field: None,
        })
    }

    pub fn with_christoffel(mut self, f: ChristoffelFn) -> Self {
        self.christoffel = Some(f);
        self
    }

    pub fn with_frame_field(mut self, f: FrameFieldFn) -> Self {
        self.frame_field = Some(f);
        self
    }

    /// Drops the analytic Christoffel symbols so that every derivative goes
    /// through finite differences.
    pub fn without_christoffel(mut self) -> Self {
        self.christoffel = None;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.signature.len()
    }

    pub fn signature(&self) -> &[f64] {
        &self.signature
    }

    pub fn has_analytic_christoffel(&self) -> bool {
        self.christoffel.is_some()
    }

    fn singular(&self, x: &[f64]) -> Error {
        Error::SingularMetric {
            label: self.label.clone(),
            point: x.to_vec(),
        }
    }

    /// `G_ΛΠ(x)`. Fails outside the chart domain or on a malformed result.
    pub fn eval(&self, x: &[f64]) -> Result<Mat> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                op: "Metric::eval",
                lhs: (d, 1),
                rhs: (x.len(), 1),
            });
        }
        let g = (self.eval)(x).ok_or_else(|| self.singular(x))?;
        if g.shape() != (d, d) || !g.is_finite() {
            return Err(self.singular(x));
        }
        Ok(g)
    }

    pub fn analytic_christoffel(&self, x: &[f64]) -> Option<Result<Christoffel>> {
        self.christoffel.as_ref().map(|f| f(x).ok_or_else(|| self.singular(x)))
    }

    pub fn frame_field(&self, x: &[f64]) -> Result<Mat> {
        let f = self.frame_field.as_ref().ok_or_else(|| Error::UnsupportedMetric {
            label: self.label.clone(),
            what: "an analytic frame field",
        })?;
        f(x).filter(Mat::is_finite).ok_or_else(|| self.singular(x))
    }

    /// `g(a, b) = G_ΛΠ a^Λ b^Π`.
    pub fn inner(&self, g: &Mat, a: &[f64], b: &[f64]) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += g[(i, j)] * a[i] * b[j];
            }
        }
        s
    }

    /// Flat space with signature `(−, +, …, +)`.
    pub fn minkowski(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("minkowski metric needs dim >= 2"));
        }
        let mut sig = vec![1.0; dim];
        sig[0] = -1.0;
        Self::flat(sig)
    }

    /// Flat space with an arbitrary diagonal signature.
    pub fn flat(signature: Vec<f64>) -> Result<Self> {
        check_signature(&signature)?;
        let dim = signature.len();
        let eta = Mat::diag(&signature);
        Ok(
            Self::new("minkowski", signature, Arc::new(move |_: &[f64]| Some(eta.clone())))?
                .with_christoffel(Arc::new(move |_: &[f64]| Some(Christoffel::zeros(dim))))
                .with_frame_field(Arc::new(move |_: &[f64]| Some(Mat::identity(dim)))),
        )
    }

    /// Schwarzschild exterior in coordinates `(t, r, θ, φ)` with mass `m`.
    /// Undefined for `r ≤ 2m` and on the polar axis.
    pub fn schwarzschild(m: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::invalid(format!("schwarzschild mass must be positive, got {m}")));
        }
        let domain = move |x: &[f64]| -> Option<(f64, f64, f64)> {
            let (r, th) = (x[1], x[2]);
            let f = 1.0 - 2.0 * m / r;
            let s = th.sin();
            (r > 0.0 && f > 0.0 && s.abs() > 1e-12).then_some((r, f, s))
        };
        let eval = Arc::new(move |x: &[f64]| {
            let (r, f, s) = domain(x)?;
            Some(Mat::diag(&[-f, 1.0 / f, r * r, r * r * s * s]))
        });
        let christoffel = Arc::new(move |x: &[f64]| {
            let (r, f, s) = domain(x)?;
            let c = x[2].cos();
            let mut g = Christoffel::zeros(4);
            let m_r2 = m / (r * r);
            g.set_sym(0, 0, 1, m_r2 / f);
            g.set(1, 0, 0, f * m_r2);
            g.set(1, 1, 1, -m_r2 / f);
            g.set(1, 2, 2, -r * f);
            g.set(1, 3, 3, -r * f * s * s);
            g.set_sym(2, 1, 2, 1.0 / r);
            g.set(2, 3, 3, -s * c);
            g.set_sym(3, 1, 3, 1.0 / r);
            g.set_sym(3, 2, 3, c / s);
            Some(g)
        });
        let frame = Arc::new(move |x: &[f64]| {
            let (r, f, s) = domain(x)?;
            Some(Mat::diag(&[1.0 / f.sqrt(), f.sqrt(), 1.0 / r, 1.0 / (r * s)]))
        });
        Ok(
            Self::new(format!("schwarzschild(m={m:?})"), vec![-1.0, 1.0, 1.0, 1.0], eval)?
                .with_christoffel(christoffel)
                .with_frame_field(frame),
        )
    }

    /// Constant-curvature chart `G = η / (1 − K s/4)²` with
    /// `s = η_ab x^a x^b`. Its lowered Riemann tensor is
    /// `K (G_ΛΘ G_ΠΩ − G_ΛΩ G_ΠΘ)` everywhere in the domain `K s < 4`, so a
    /// Fermi-Walker frame on a Lorentzian chart sees `K_0A0C = K δ_AC`.
    pub fn constant_curvature(k: f64, signature: Vec<f64>) -> Result<Self> {
        check_signature(&signature)?;
        if !k.is_finite() {
            return Err(Error::invalid("curvature constant must be finite"));
        }
        let dim = signature.len();
        let sig = signature.clone();
        let denom = Arc::new(move |x: &[f64]| -> Option<f64> {
            let s: f64 = x.iter().zip(&sig).map(|(xi, e)| e * xi * xi).sum();
            let d = 1.0 - 0.25 * k * s;
            (d > 1e-12).then_some(d)
        });
        let (denom_g, denom_e) = (denom.clone(), denom.clone());
        let sig_eval = signature.clone();
        let eval = Arc::new(move |x: &[f64]| {
            let d = denom_e(x)?;
            let w = 1.0 / (d * d);
            Some(Mat::diag(&sig_eval.iter().map(|e| e * w).collect::<Vec<_>>()))
        });
        let sig_g = signature.clone();
        let christoffel = Arc::new(move |x: &[f64]| {
            let d = denom_g(x)?;
            // ∂_ρ σ with σ = −ln(1 − K s/4)
            let dsig: Vec<f64> = (0..dim).map(|r| 0.5 * k * sig_g[r] * x[r] / d).collect();
            let mut g = Christoffel::zeros(dim);
            for l in 0..dim {
                for mu in 0..dim {
                    for nu in 0..dim {
                        let mut v = 0.0;
                        if l == mu {
                            v += dsig[nu];
                        }
                        if l == nu {
                            v += dsig[mu];
                        }
                        if mu == nu {
                            v -= sig_g[mu] * sig_g[l] * dsig[l];
                        }
                        g.set(l, mu, nu, v);
                    }
                }
            }
            Some(g)
        });
        let frame = Arc::new(move |x: &[f64]| {
            let d = denom(x)?;
            Some(Mat::identity(dim).scale(d))
        });
        Ok(Self::new(format!("constant-curvature(K={k:?})"), signature, eval)?
            .with_christoffel(christoffel)
            .with_frame_field(frame))
    }

    /// Diagonal metric whose entries are expressions in `x0, x1, …`.
    /// Derivatives go through finite differences; the frame field is the
    /// normalized coordinate basis.
    pub fn diagonal(label: impl Into<String>, signature: Vec<f64>, entries: &[Expr]) -> Result<Self> {
        check_signature(&signature)?;
        if entries.len() != signature.len() {
            return Err(Error::invalid(format!(
                "diagonal metric needs {} entries, got {}",
                signature.len(),
                entries.len()
            )));
        }
        let entries: Arc<[Expr]> = entries.into();
        let e2 = entries.clone();
        let eval = Arc::new(move |x: &[f64]| {
            let v: Vec<f64> = entries.iter().map(|e| e.eval(x)).collect();
            v.iter().all(|g| g.is_finite() && *g != 0.0).then(|| Mat::diag(&v))
        });
        let frame = Arc::new(move |x: &[f64]| {
            let v: Vec<f64> = e2.iter().map(|e| 1.0 / e.eval(x).abs().sqrt()).collect();
            Some(Mat::diag(&v))
        });
        Ok(Self::new(label, signature, eval)?.with_frame_field(frame))
    }

    /// Names of the variables available to [`Metric::diagonal`] expressions.
    pub fn coordinate_names(dim: usize) -> Vec<String> {
        (0..dim).map(|i| format!("x{i}")).collect()
    }
}
