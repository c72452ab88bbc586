use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{christoffel, comoving_frame, FdConfig, Metric, Vielbein};
use crate::linalg::Mat;
use crate::ode::{rk4_step, Grid};

/// Coordinate acceleration `a^Λ(x, V)`; must satisfy `g(a, V) = 0`.
pub type AccelerationField = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Tolerance on `|g(V,V) + 1|` for initial velocities.
pub const VELOCITY_NORM_TOL: f64 = 1e-10;
/// Tolerance on `|g(a, V)|` (scaled by `max(1, |a|)`).
pub const ORTHOGONALITY_TOL: f64 = 1e-8;
/// Orthonormality defect beyond which a transported frame is rejected.
pub const FRAME_DEGENERACY_TOL: f64 = 1e-6;

/// One point of an integrated worldline with its transported frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveState {
    pub tau: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub frame: Vielbein,
}

impl CurveState {
    /// `|g(V,V) + 1|`.
    pub fn norm_drift(&self, m: &Metric) -> Result<f64> {
        let g = m.eval(&self.x)?;
        Ok((m.inner(&g, &self.v, &self.v) + 1.0).abs())
    }

    /// `max |Eᵀ G E − η|`.
    pub fn frame_drift(&self, m: &Metric) -> Result<f64> {
        Ok(self.frame.orthonormality_defect(&m.eval(&self.x)?))
    }

    /// `max_Λ |V^Λ − E^Λ_(0)|`.
    pub fn tangent_mismatch(&self) -> f64 {
        self.v
            .iter()
            .enumerate()
            .fold(0.0, |m, (k, v)| m.max((v - self.frame.e[(k, 0)]).abs()))
    }
}

/// A worldline sampled on a uniform proper-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSampling {
    pub states: Vec<CurveState>,
    pub step: f64,
    /// Coordinate acceleration at each sample; `None` for geodesics.
    pub acceleration: Option<Vec<Vec<f64>>>,
}

impl CurveSampling {
    pub fn grid(&self) -> Grid {
        Grid {
            start: self.states[0].tau,
            step: self.step,
            steps: self.states.len() - 1,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &CurveState {
        self.states.last().expect("non-empty curve")
    }
}

/// Frame propagation law along the curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransportLaw {
    /// `∇_V X = g(X, a) V − g(X, V) a`.
    #[default]
    FermiWalker,
    /// `∇_V X = 0`.
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurveOptions {
    pub fd: FdConfig,
    pub law: TransportLaw,
}

struct Layout {
    d: usize,
}

impl Layout {
    fn pack(&self, s: &CurveState) -> Vec<f64> {
        let mut y = Vec::with_capacity(2 * self.d + self.d * self.d);
        y.extend_from_slice(&s.x);
        y.extend_from_slice(&s.v);
        y.extend_from_slice(s.frame.e.as_slice());
        y
    }

    fn unpack(&self, tau: f64, y: &[f64], eta: &[f64]) -> Result<CurveState> {
        let d = self.d;
        Ok(CurveState {
            tau,
            x: y[..d].to_vec(),
            v: y[d..2 * d].to_vec(),
            frame: Vielbein {
                e: Mat::from_vec(d, d, y[2 * d..].to_vec())?,
                eta: eta.to_vec(),
            },
        })
    }
}

/// Right-hand side of the coupled curve + frame system.
fn curve_rhs(m: &Metric, accel: Option<&AccelerationField>, opts: &CurveOptions, y: &[f64]) -> Result<Vec<f64>> {
    let d = m.dim();
    let x = &y[..d];
    let v = &y[d..2 * d];
    let e = &y[2 * d..];
    let gam = christoffel(m, x, &opts.fd)?;
    let a = match accel {
        Some(f) => f(x, v),
        None => vec![0.0; d],
    };
    let mut out = Vec::with_capacity(y.len());
    out.extend_from_slice(v);
    let gvv = gam.contract(v, v);
    out.extend((0..d).map(|k| -gvv[k] + a[k]));

    let fw = opts.law == TransportLaw::FermiWalker;
    let g = if fw { Some(m.eval(x)?) } else { None };
    let mut de = vec![0.0; d * d];
    for col in 0..d {
        let xa: Vec<f64> = (0..d).map(|k| e[k * d + col]).collect();
        let gvx = gam.contract(v, &xa);
        let (ga, gv) = match &g {
            Some(g) => (m.inner(g, &xa, &a), m.inner(g, &xa, v)),
            None => (0.0, 0.0),
        };
        for k in 0..d {
            let mut dk = -gvx[k];
            if fw {
                dk += ga * v[k] - gv * a[k];
            }
            de[k * d + col] = dk;
        }
    }
    out.extend(de);
    Ok(out)
}

fn check_orthogonal(m: &Metric, tau: f64, x: &[f64], v: &[f64], a: &[f64]) -> Result<()> {
    let g = m.eval(x)?;
    let inner = m.inner(&g, a, v);
    let scale = a.iter().fold(1.0f64, |s, c| s.max(c.abs()));
    if inner.abs() > ORTHOGONALITY_TOL * scale {
        return Err(Error::InvalidAcceleration { tau, inner });
    }
    Ok(())
}

/// Advances a state by one RK4 step of the coupled curve + frame system.
pub fn step_state(
    m: &Metric,
    state: &CurveState,
    accel: Option<&AccelerationField>,
    h: f64,
    opts: &CurveOptions,
) -> Result<CurveState> {
    let layout = Layout { d: m.dim() };
    let y = layout.pack(state);
    let mut rhs = |_t: f64, y: &[f64]| curve_rhs(m, accel, opts, y);
    let next = rk4_step(&mut rhs, state.tau, &y, h)?;
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged { tau: state.tau + h });
    }
    layout.unpack(state.tau + h, &next, &state.frame.eta)
}

/// One Fermi-Walker step of the frame, taken inside the same RK4 step as the
/// curve. Returns the frame at `tau + h`.
pub fn fermi_walker_step(
    m: &Metric,
    state: &CurveState,
    accel: Option<&AccelerationField>,
    h: f64,
    fd: &FdConfig,
) -> Result<Vielbein> {
    let opts = CurveOptions {
        fd: *fd,
        law: TransportLaw::FermiWalker,
    };
    let next = step_state(m, state, accel, h, &opts)?;
    let defect = next.frame_drift(m)?;
    if !(defect <= FRAME_DEGENERACY_TOL) {
        return Err(Error::DegenerateFrame(format!(
            "orthonormality defect {defect:e} after step to tau = {}",
            next.tau
        )));
    }
    Ok(next.frame)
}

/// Integrates `ẍ^Λ + Γ^Λ_ΠΩ ẋ^Π ẋ^Ω = a^Λ` together with the transported
/// frame, starting from the comoving frame of `v0`.
pub fn integrate_curve(
    m: &Metric,
    x0: &[f64],
    v0: &[f64],
    accel: Option<&AccelerationField>,
    h: f64,
    steps: usize,
    opts: &CurveOptions,
) -> Result<CurveSampling> {
    let d = m.dim();
    if x0.len() != d || v0.len() != d {
        return Err(Error::invalid(format!(
            "initial data must have {d} components, got x0 {} and v0 {}",
            x0.len(),
            v0.len()
        )));
    }
    let grid = Grid::new(0.0, h, steps)?;
    let g0 = m.eval(x0)?;
    let n2 = m.inner(&g0, v0, v0);
    if (n2 + 1.0).abs() > VELOCITY_NORM_TOL {
        return Err(Error::invalid(format!(
            "initial velocity must satisfy g(v,v) = -1, got {n2}"
        )));
    }
    let frame = comoving_frame(m, x0, v0)?;
    let mut state = CurveState {
        tau: grid.start,
        x: x0.to_vec(),
        v: v0.to_vec(),
        frame,
    };
    let mut states = Vec::with_capacity(grid.len());
    let mut accels = accel.map(|_| Vec::with_capacity(grid.len()));

    for i in 0..=grid.steps {
        if let (Some(f), Some(rec)) = (accel, accels.as_mut()) {
            let a = f(&state.x, &state.v);
            check_orthogonal(m, state.tau, &state.x, &state.v, &a)?;
            rec.push(a);
        }
        if i == grid.steps {
            states.push(state);
            break;
        }
        let next = match step_state(m, &state, accel, h, opts) {
            Ok(s) => s,
            Err(e @ (Error::SingularMetric { .. } | Error::Diverged { .. } | Error::NonFinite { .. })) => {
                return Err(Error::IntegrationAborted {
                    tau: state.tau,
                    reason: e.to_string(),
                    last: Box::new(state),
                })
            }
            Err(e) => return Err(e),
        };
        let next = CurveState {
            tau: grid.tau(i + 1),
            ..next
        };
        states.push(std::mem::replace(&mut state, next));
    }
    Ok(CurveSampling {
        states,
        step: h,
        acceleration: accels,
    })
}

/// Geodesic with a Fermi-Walker (here: parallel) transported frame.
pub fn integrate_geodesic(m: &Metric, x0: &[f64], v0: &[f64], h: f64, steps: usize) -> Result<CurveSampling> {
    integrate_curve(m, x0, v0, None, h, steps, &CurveOptions::default())
}

/// Accelerated worldline with a Fermi-Walker transported frame.
pub fn integrate_accelerated_curve(
    m: &Metric,
    x0: &[f64],
    v0: &[f64],
    accel: &AccelerationField,
    h: f64,
    steps: usize,
) -> Result<CurveSampling> {
    integrate_curve(m, x0, v0, Some(accel), h, steps, &CurveOptions::default())
}
