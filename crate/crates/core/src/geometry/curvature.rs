use crate::error::{Error, Result};
use crate::linalg::{inverse, Mat};

use super::frame::Vielbein;
use super::metric::Metric;
use super::tensor::{Christoffel, Rank4};

/// Finite-difference steps, relative to `max(1, ‖x‖∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    /// Step for first derivatives of the metric, and for derivatives of
    /// analytic Christoffel symbols.
    pub rel_step: f64,
    /// Outer step when a finite-difference quantity is differentiated again
    /// (Riemann from finite-difference Christoffels, frame-derivative
    /// derivatives). Larger than `rel_step` so round-off from the inner
    /// difference stays below the truncation error.
    pub nested_rel_step: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            rel_step: 1e-5,
            nested_rel_step: 1e-3,
        }
    }
}

impl FdConfig {
    pub fn step_at(&self, x: &[f64]) -> f64 {
        self.rel_step * scale_of(x)
    }

    pub fn nested_step_at(&self, x: &[f64]) -> f64 {
        self.nested_rel_step * scale_of(x)
    }
}

fn scale_of(x: &[f64]) -> f64 {
    x.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

fn shifted(x: &[f64], k: usize, h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[k] += h;
    y
}

/// Fourth-order central difference of a vector-valued function along
/// coordinate `k`.
fn diff4(f: impl Fn(&[f64]) -> Result<Vec<f64>>, x: &[f64], k: usize, h: f64) -> Result<Vec<f64>> {
    let p2 = f(&shifted(x, k, 2.0 * h))?;
    let p1 = f(&shifted(x, k, h))?;
    let m1 = f(&shifted(x, k, -h))?;
    let m2 = f(&shifted(x, k, -2.0 * h))?;
    let w = 1.0 / (12.0 * h);
    Ok((0..p1.len())
        .map(|i| (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) * w)
        .collect())
}

fn metric_inverse(m: &Metric, g: &Mat, x: &[f64]) -> Result<Mat> {
    inverse(g).map_err(|_| Error::SingularMetric {
        label: m.label().to_string(),
        point: x.to_vec(),
    })
}

/// `Γ^Λ_ΠΩ` from central differences of the metric, ignoring any analytic
/// symbols the metric carries.
pub fn christoffel_fd(m: &Metric, x: &[f64], fd: &FdConfig) -> Result<Christoffel> {
    let d = m.dim();
    let g = m.eval(x)?;
    let ginv = metric_inverse(m, &g, x)?;
    let h = fd.step_at(x);
    // dg[k] = ∂_k G
    let mut dg = Vec::with_capacity(d);
    for k in 0..d {
        let v = diff4(|y| Ok(m.eval(y)?.into_vec()), x, k, h)?;
        dg.push(Mat::from_vec(d, d, v)?);
    }
    let mut out = Christoffel::zeros(d);
    for p in 0..d {
        for o in p..d {
            // lowered Γ_σ,πω
            let low: Vec<f64> = (0..d)
                .map(|s| 0.5 * (dg[p][(s, o)] + dg[o][(s, p)] - dg[s][(p, o)]))
                .collect();
            for l in 0..d {
                let v: f64 = (0..d).map(|s| ginv[(l, s)] * low[s]).sum();
                out.set_sym(l, p, o, v);
            }
        }
    }
    Ok(out)
}

/// `Γ^Λ_ΠΩ`, analytic when the metric provides it, otherwise by finite
/// differences.
pub fn christoffel(m: &Metric, x: &[f64], fd: &FdConfig) -> Result<Christoffel> {
    match m.analytic_christoffel(x) {
        Some(g) => g,
        None => christoffel_fd(m, x, fd),
    }
}

/// Riemann tensor `K^Λ_ΠΩΘ` at a point, first index up.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannAtPoint {
    pub point: Vec<f64>,
    pub components: Rank4,
}

impl RiemannAtPoint {
    /// `K_ΛΠΩΘ = G_ΛΣ K^Σ_ΠΩΘ`.
    pub fn lowered(&self, g: &Mat) -> Rank4 {
        let d = self.components.dim();
        let mut out = Rank4::zeros(d);
        for l in 0..d {
            for p in 0..d {
                for o in 0..d {
                    for t in 0..d {
                        let v: f64 = (0..d).map(|s| g[(l, s)] * self.components.get(s, p, o, t)).sum();
                        out.set(l, p, o, t, v);
                    }
                }
            }
        }
        out
    }
}

/// `K^Λ_ΠΩΘ = ∂_Ω Γ^Λ_ΠΘ − ∂_Θ Γ^Λ_ΠΩ + Γ^Λ_ΣΩ Γ^Σ_ΠΘ − Γ^Λ_ΣΘ Γ^Σ_ΠΩ`.
///
/// Antisymmetry in the last pair holds bit-for-bit.
pub fn riemann(m: &Metric, x: &[f64], fd: &FdConfig) -> Result<RiemannAtPoint> {
    let d = m.dim();
    let gam = christoffel(m, x, fd)?;
    let h = if m.has_analytic_christoffel() {
        fd.step_at(x)
    } else {
        fd.nested_step_at(x)
    };
    let mut dgam = Vec::with_capacity(d);
    for k in 0..d {
        let diff = diff4(|y| Ok(christoffel(m, y, fd)?.as_slice().to_vec()), x, k, h)?;
        dgam.push(Christoffel::from_vec(d, diff));
    }
    let mut r = Rank4::zeros(d);
    for l in 0..d {
        for p in 0..d {
            for o in 0..d {
                for t in 0..d {
                    let deriv = dgam[o].get(l, p, t) - dgam[t].get(l, p, o);
                    let mut q1 = 0.0;
                    let mut q2 = 0.0;
                    for s in 0..d {
                        q1 += gam.get(l, s, o) * gam.get(s, p, t);
                        q2 += gam.get(l, s, t) * gam.get(s, p, o);
                    }
                    r.set(l, p, o, t, deriv + (q1 - q2));
                }
            }
        }
    }
    Ok(RiemannAtPoint {
        point: x.to_vec(),
        components: r,
    })
}

/// Frame components `K_(A)(B)(C)(D) = K_ΛΠΩΘ E^Λ_(A) E^Π_(B) E^Ω_(C) E^Θ_(D)`.
pub fn project_curvature(r: &RiemannAtPoint, m: &Metric, e: &Vielbein) -> Result<Rank4> {
    let d = m.dim();
    if r.components.dim() != d || e.e.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            op: "project_curvature",
            lhs: (d, d),
            rhs: e.e.shape(),
        });
    }
    let g = m.eval(&r.point)?;
    let low = r.lowered(&g);
    Ok(low
        .contract_slot(0, &e.e)
        .contract_slot(1, &e.e)
        .contract_slot(2, &e.e)
        .contract_slot(3, &e.e))
}

/// Frame components of the curvature of the metric's analytic frame field,
/// assembled from Ricci rotation coefficients
/// `γ_(A)(B)(C) = E^μ_(A) G_μα (∇_ν E^α_(B)) E^ν_(C)`:
///
/// `K_ABCD = −γ_ABC,D + γ_ABD,C + η^MN [γ_BAM (γ_CND − γ_DNC)
///           + γ_MAC γ_BND − γ_MAD γ_BNC]`
///
/// with `γ_ABC,D = E^μ_(D) ∂_μ γ_ABC`. This is `G(E_A, K(E_C, E_D) E_B)`, the
/// same sign convention as [`riemann`].
pub fn ricci_rotation_curvature(m: &Metric, x: &[f64], fd: &FdConfig) -> Result<Rank4> {
    let d = m.dim();
    let eta = m.signature();
    let e = m.frame_field(x)?;
    let gamma = rotation_coefficients(m, x, fd)?;
    let h = fd.nested_step_at(x);
    let mut dgamma = Vec::with_capacity(d);
    for k in 0..d {
        dgamma.push(diff4(|y| rotation_coefficients(m, y, fd), x, k, h)?);
    }
    let at = |a: usize, b: usize, c: usize| gamma[(a * d + b) * d + c];
    // γ_ABC,D
    let dir = |a: usize, b: usize, c: usize, dd: usize| -> f64 {
        (0..d).map(|mu| e[(mu, dd)] * dgamma[mu][(a * d + b) * d + c]).sum()
    };
    let mut out = Rank4::zeros(d);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for dd in 0..d {
                    let mut quad = 0.0;
                    for mn in 0..d {
                        let w = eta[mn];
                        quad += w
                            * (at(b, a, mn) * (at(c, mn, dd) - at(dd, mn, c)) + at(mn, a, c) * at(b, mn, dd)
                                - at(mn, a, dd) * at(b, mn, c));
                    }
                    out.set(a, b, c, dd, -dir(a, b, c, dd) + dir(a, b, dd, c) + quad);
                }
            }
        }
    }
    Ok(out)
}

/// `γ_(A)(B)(C)` flattened `[A][B][C]`.
fn rotation_coefficients(m: &Metric, x: &[f64], fd: &FdConfig) -> Result<Vec<f64>> {
    let d = m.dim();
    let g = m.eval(x)?;
    let e = m.frame_field(x)?;
    let gam = christoffel(m, x, fd)?;
    let h = fd.step_at(x);
    // de[nu] = ∂_ν E (column B = E_(B))
    let mut de = Vec::with_capacity(d);
    for nu in 0..d {
        let v = diff4(|y| Ok(m.frame_field(y)?.into_vec()), x, nu, h)?;
        de.push(Mat::from_vec(d, d, v)?);
    }
    // cov[B][alpha][nu] = ∇_ν E^α_(B)
    let mut cov = vec![0.0; d * d * d];
    for b in 0..d {
        for al in 0..d {
            for nu in 0..d {
                let mut v = de[nu][(al, b)];
                for be in 0..d {
                    v += gam.get(al, nu, be) * e[(be, b)];
                }
                cov[(b * d + al) * d + nu] = v;
            }
        }
    }
    // lowered frame columns: low[A][alpha] = G_μα E^μ_(A)
    let low = Mat::from_fn(d, d, |a, al| (0..d).map(|mu| g[(mu, al)] * e[(mu, a)]).sum());
    let mut out = vec![0.0; d * d * d];
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                let mut v = 0.0;
                for al in 0..d {
                    for nu in 0..d {
                        v += low[(a, al)] * cov[(b * d + al) * d + nu] * e[(nu, c)];
                    }
                }
                out[(a * d + b) * d + c] = v;
            }
        }
    }
    Ok(out)
}

/// Per-direction constant curvatures `K_1, …, K_n` of a maximally symmetric
/// (or direction-wise constant-curvature) target.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantCurvatureSpec {
    pub k_values: Vec<f64>,
}

impl ConstantCurvatureSpec {
    pub fn new(k_values: Vec<f64>) -> Result<Self> {
        if k_values.is_empty() || k_values.iter().any(|k| !k.is_finite()) {
            return Err(Error::invalid(format!("invalid curvature list {k_values:?}")));
        }
        Ok(ConstantCurvatureSpec { k_values })
    }

    /// Same `K` in all `n` directions.
    pub fn uniform(n: usize, k: f64) -> Self {
        ConstantCurvatureSpec { k_values: vec![k; n] }
    }

    pub fn n(&self) -> usize {
        self.k_values.len()
    }

    /// The single constant when all directions agree.
    pub fn as_uniform(&self) -> Option<f64> {
        let k0 = *self.k_values.first()?;
        self.k_values.iter().all(|k| *k == k0).then_some(k0)
    }
}

/// `diag(K_1, …, K_n)`, the frame curvature block `K_0A0C` of the target.
pub fn constant_curvature_frame_block(spec: &ConstantCurvatureSpec) -> Mat {
    Mat::diag(&spec.k_values)
}
