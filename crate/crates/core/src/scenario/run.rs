use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{normalize_timelike, ConstantCurvatureSpec, FdConfig, Metric};
use crate::hamiltonian::{
    build_jacobi_h_first_order, build_jacobi_h_second_order, build_metric_h_first_order, build_metric_h_second_order,
    build_metric_quadratic_form, build_target_c_constant, QuadHamiltonian, TauMatrix,
};
use crate::linalg::Mat;
use crate::ode::Grid;
use crate::transfer::{integrate_t_direct, integrate_t_factorized, verify_solution_mapping, TransferProblem};
use crate::transport::{
    integrate_accelerated_curve, integrate_geodesic, rindler_acceleration_field, sample_frame_curvature,
    schwarzschild_static_acceleration_field, CongruenceData, CurveSampling, FrameCurvature,
};

use super::config::{
    Coef, CongruenceSpec, CurveSpec, InitialTransfer, MetricForm, MetricSpec, ScenarioConfig, SideSpec,
};
use super::report::{SampleRow, ScenarioReport};

/// Per-sample `|g(V,V) + 1|` and frame orthonormality defect of a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveDrift {
    pub norm: Vec<f64>,
    pub frame: Vec<f64>,
}

struct BuiltSide {
    hamiltonian: QuadHamiltonian,
    drift: Option<CurveDrift>,
}

fn lorentzian(dim: usize) -> Vec<f64> {
    let mut s = vec![1.0; dim];
    s[0] = -1.0;
    s
}

pub(crate) fn build_metric(spec: &MetricSpec, dim: usize) -> Result<Metric> {
    match spec {
        MetricSpec::Minkowski => Metric::minkowski(dim),
        MetricSpec::Schwarzschild { mass } => Metric::schwarzschild(*mass),
        MetricSpec::ConstantCurvature { curvature } => Metric::constant_curvature(*curvature, lorentzian(dim)),
        MetricSpec::Diagonal { entries } => {
            let names = Metric::coordinate_names(dim);
            let vars: Vec<&str> = names.iter().map(String::as_str).collect();
            let exprs = entries
                .iter()
                .map(|s| Expr::parse(s, &vars).map_err(|e| Error::invalid(format!("metric entry `{s}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            Metric::diagonal("diagonal", lorentzian(dim), &exprs)
        }
    }
}

fn drift_of(m: &Metric, curve: &CurveSampling) -> Result<CurveDrift> {
    let mut norm = Vec::with_capacity(curve.len());
    let mut frame = Vec::with_capacity(curve.len());
    for s in &curve.states {
        norm.push(s.norm_drift(m)?);
        frame.push(s.frame_drift(m)?);
    }
    Ok(CurveDrift { norm, frame })
}

fn geodesic_side(curve: &CurveSpec, grid: &Grid) -> Result<BuiltSide> {
    let m = build_metric(&curve.metric, curve.x0.len())?;
    let v0 = curve
        .v0
        .as_ref()
        .ok_or_else(|| Error::invalid("geodesic needs an initial velocity"))?;
    let v0 = normalize_timelike(&m, &curve.x0, v0)?;
    let sampling = integrate_geodesic(&m, &curve.x0, &v0, grid.step, grid.steps)?;
    let fc = sample_frame_curvature(&m, &sampling, &FdConfig::default())?;
    Ok(BuiltSide {
        hamiltonian: build_jacobi_h_second_order(&fc),
        drift: Some(drift_of(&m, &sampling)?),
    })
}

fn nongeodesic_side(curve: &CurveSpec, congruence: CongruenceSpec, grid: &Grid) -> Result<BuiltSide> {
    let dim = curve.x0.len();
    let n = dim - 1;
    let x0 = &curve.x0;
    let (cong, accel, v0) = match (congruence, &curve.metric) {
        (CongruenceSpec::Zero, _) => return geodesic_side(curve, grid),
        (CongruenceSpec::Rindler, MetricSpec::Minkowski) => {
            let rho2 = x0[1] * x0[1] - x0[0] * x0[0];
            if !(x0[1] > 0.0 && rho2 > 0.0) {
                return Err(Error::invalid(format!(
                    "Rindler observers need x > |t|, got t = {}, x = {}",
                    x0[0], x0[1]
                )));
            }
            let rho = rho2.sqrt();
            let mut v = vec![0.0; dim];
            v[0] = x0[1] / rho;
            v[1] = x0[0] / rho;
            (CongruenceData::rindler(1.0 / rho, n), rindler_acceleration_field(), v)
        }
        (CongruenceSpec::SchwarzschildStatic, MetricSpec::Schwarzschild { mass }) => {
            let r = x0[1];
            let cong = CongruenceData::schwarzschild_static(*mass, r)?;
            let f = 1.0 - 2.0 * mass / r;
            (
                cong,
                schwarzschild_static_acceleration_field(*mass),
                vec![1.0 / f.sqrt(), 0.0, 0.0, 0.0],
            )
        }
        (c, m) => {
            return Err(Error::invalid(format!(
                "congruence `{}` is not defined on metric `{}`",
                c.name(),
                m.name()
            )))
        }
    };
    let m = build_metric(&curve.metric, dim)?;
    let sampling = integrate_accelerated_curve(&m, x0, &v0, &accel, grid.step, grid.steps)?;
    let fc = sample_frame_curvature(&m, &sampling, &FdConfig::default())?;
    cong.check_covers(grid.start, grid.end())?;
    let effective = FrameCurvature::from_fn(*grid, |t| cong.effective_tidal(&fc.at(t), t))?;
    Ok(BuiltSide {
        hamiltonian: build_jacobi_h_second_order(&effective),
        drift: Some(drift_of(&m, &sampling)?),
    })
}

fn coefficient_matrix(n: usize, g: &[Coef], grid: &Grid) -> Result<TauMatrix> {
    if g.iter().all(Coef::is_constant) {
        let v = g
            .iter()
            .map(|c| match c {
                Coef::Num(v) => *v,
                Coef::Expr(_) => unreachable!(),
            })
            .collect();
        return TauMatrix::constant(Mat::from_vec(n, n, v)?);
    }
    let exprs = g
        .iter()
        .map(|c| match c {
            Coef::Num(v) => Ok(Expr::constant(*v)),
            Coef::Expr(s) => Expr::parse(s, &["tau"]).map_err(|e| Error::invalid(format!("entry `{s}`: {e}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TauMatrix::from_fn(
        n,
        move |t| Mat::from_fn(n, n, |i, j| exprs[i * n + j].eval(&[t])),
        grid.taus(),
    ))
}

fn build_side(spec: &SideSpec, n: usize, grid: &Grid) -> Result<BuiltSide> {
    let plain = |h: QuadHamiltonian| BuiltSide {
        hamiltonian: h,
        drift: None,
    };
    match spec {
        SideSpec::JacobiGeodesic { curve } => geodesic_side(curve, grid),
        SideSpec::JacobiNongeodesic { curve, congruence } => nongeodesic_side(curve, *congruence, grid),
        SideSpec::JacobiFirstOrder { m } => {
            let m = TauMatrix::constant(Mat::from_vec(n, n, m.clone())?)?;
            Ok(plain(build_jacobi_h_first_order(&m)?))
        }
        SideSpec::ConstantCurvature { k } => {
            Ok(plain(build_target_c_constant(&ConstantCurvatureSpec::new(k.clone())?)))
        }
        SideSpec::Metric { form, g } => {
            let g = coefficient_matrix(n, g, grid)?;
            let h = match form {
                MetricForm::SecondOrder => build_metric_h_second_order(&g)?,
                MetricForm::QuadraticForm => build_metric_quadratic_form(&g)?,
                MetricForm::FirstOrder => build_metric_h_first_order(&g)?,
            };
            Ok(plain(h))
        }
    }
}

/// Elementwise maximum; NaN wins so it cannot hide a failure.
fn merge_max(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x = if x.is_nan() || y.is_nan() { f64::NAN } else { x.max(*y) };
    }
}

/// Runs the whole pipeline for one config. Pure: the same config always
/// gives the same report, bit for bit.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    let n = cfg.n;
    let grid = Grid::span(cfg.h, cfg.tau_max)?;

    let source = build_side(&cfg.source, n, &grid).map_err(|e| e.at_stage("source"))?;
    let target = build_side(&cfg.target, n, &grid).map_err(|e| e.at_stage("target"))?;

    let t0 = match &cfg.t0 {
        InitialTransfer::Identity => Mat::identity(2 * n),
        InitialTransfer::Entries(v) => Mat::from_vec(2 * n, 2 * n, v.clone())?,
    };
    let stage = |e: Error| e.at_stage("transfer");
    let problem = TransferProblem::new(source.hamiltonian, target.hamiltonian, t0, grid).map_err(stage)?;
    let direct = integrate_t_direct(&problem).map_err(stage)?;
    let factorized = integrate_t_factorized(&problem).map_err(stage)?;

    let mut mapping = vec![0.0; grid.len()];
    let mut per_state = Vec::with_capacity(cfg.verify_states.len());
    for xi0 in &cfg.verify_states {
        let chk = verify_solution_mapping(&problem, &direct, xi0).map_err(|e| e.at_stage("verify"))?;
        merge_max(&mut mapping, &chk.residual);
        per_state.push(chk);
    }

    let mut norm = vec![0.0; grid.len()];
    let mut frame = vec![0.0; grid.len()];
    for d in [&source.drift, &target.drift].into_iter().flatten() {
        merge_max(&mut norm, &d.norm);
        merge_max(&mut frame, &d.frame);
    }

    let rows = (0..grid.len())
        .map(|i| SampleRow {
            tau: grid.tau(i),
            t: direct.t[i].as_slice().to_vec(),
            ode_residual: direct.ode_residual[i],
            mapping_residual: mapping[i],
            symplectic_defect: direct.symplectic_defect[i],
            norm_drift: norm[i],
            frame_drift: frame[i],
        })
        .collect();

    Ok(ScenarioReport::assemble(
        cfg,
        rows,
        direct.max_diff(&factorized),
        per_state,
    ))
}
