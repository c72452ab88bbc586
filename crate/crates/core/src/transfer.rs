//! Transfer matrices between two quadratic Hamiltonian systems.
//!
//! With `Z = X(source)` and `Y = X(target)`, the map `η = T(τ) ξ` takes
//! solutions of `ξ̇ = J Z ξ` to solutions of `η̇ = J Y η` when
//! `Ṫ = J Y T − T J Z`. Writing `T = S A R` with `Ṡ = J Y S`,
//! `Ṙ = −R J Z` and constant `A = [[a, d], [b, c]]` splits the problem.

use crate::error::{Error, Result};
use crate::hamiltonian::{coefficient_x, QuadHamiltonian};
use crate::linalg::{apply_j, inverse, right_apply_j, solve_linear, symplectic_defect, BlockMat2n, Mat};
use crate::ode::{rk4_integrate, sampled_derivative, Grid};

/// Source and target systems, the initial transfer matrix and the grid.
#[derive(Debug, Clone)]
pub struct TransferProblem {
    pub source: QuadHamiltonian,
    pub target: QuadHamiltonian,
    pub t0: Mat,
    pub grid: Grid,
}

impl TransferProblem {
    pub fn new(source: QuadHamiltonian, target: QuadHamiltonian, t0: Mat, grid: Grid) -> Result<Self> {
        let n = source.n();
        if target.n() != n {
            return Err(Error::DimensionMismatch {
                op: "transfer problem",
                lhs: (2 * n, 2 * n),
                rhs: (2 * target.n(), 2 * target.n()),
            });
        }
        if t0.shape() != (2 * n, 2 * n) {
            return Err(Error::DimensionMismatch {
                op: "initial transfer matrix",
                lhs: (2 * n, 2 * n),
                rhs: t0.shape(),
            });
        }
        let t0 = t0.ensure_finite()?;
        for (side, h) in [("source", &source), ("target", &target)] {
            if h.is_state_dependent() {
                return Err(Error::invalid(format!(
                    "{side} Hamiltonian has a state-dependent part; transfer needs τ-only coefficients"
                )));
            }
        }
        Ok(TransferProblem {
            source,
            target,
            t0,
            grid,
        })
    }

    /// Identity initial condition.
    pub fn with_identity(source: QuadHamiltonian, target: QuadHamiltonian, grid: Grid) -> Result<Self> {
        let n = source.n();
        Self::new(source, target, Mat::identity(2 * n), grid)
    }

    pub fn n(&self) -> usize {
        self.source.n()
    }

    pub fn z(&self, tau: f64) -> Result<Mat> {
        coefficient_x(&self.source, tau, None)
    }

    pub fn y(&self, tau: f64) -> Result<Mat> {
        coefficient_x(&self.target, tau, None)
    }

    /// `J Y T − T J Z`.
    pub fn rhs(&self, tau: f64, t: &Mat) -> Result<Mat> {
        let n = self.n();
        let jyt = apply_j(n, &(&self.y(tau)? * t))?;
        let tjz = &right_apply_j(n, t)? * &self.z(tau)?;
        Ok(&jyt - &tjz)
    }
}

/// The constant blocks of `A = [[a, d], [b, c]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantBlocks {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
}

impl ConstantBlocks {
    pub fn from_matrix(m: &Mat) -> Result<Self> {
        let blk = BlockMat2n::split(m)?;
        Ok(ConstantBlocks {
            a: blk.b11,
            d: blk.b12,
            b: blk.b21,
            c: blk.b22,
        })
    }

    pub fn matrix(&self) -> Mat {
        BlockMat2n::new(self.a.clone(), self.d.clone(), self.b.clone(), self.c.clone())
            .expect("blocks share one size")
            .flatten()
    }
}

/// `S(τ)`, `R(τ)` and the constant blocks of a factorized solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub s: Vec<Mat>,
    pub r: Vec<Mat>,
    pub blocks: ConstantBlocks,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferSolution {
    pub tau: Vec<f64>,
    pub t: Vec<Mat>,
    /// `‖Ṫ − (J Y T − T J Z)‖_F` per sample, `Ṫ` by finite differences.
    pub ode_residual: Vec<f64>,
    /// `‖Tᵀ J T − J‖_F` per sample.
    pub symplectic_defect: Vec<f64>,
    pub factorization: Option<Factorization>,
}

impl TransferSolution {
    fn assemble(p: &TransferProblem, t: Vec<Mat>, factorization: Option<Factorization>) -> Result<Self> {
        let n = p.n();
        let ode_residual = ode_residuals(p, &t)?;
        let symplectic_defect = t.iter().map(|m| symplectic_defect(n, m)).collect::<Result<_>>()?;
        Ok(TransferSolution {
            tau: p.grid.taus(),
            t,
            ode_residual,
            symplectic_defect,
            factorization,
        })
    }

    pub fn max_ode_residual(&self) -> f64 {
        self.ode_residual.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn max_symplectic_defect(&self) -> f64 {
        self.symplectic_defect.iter().fold(0.0, |m, v| m.max(*v))
    }

    /// `max_τ ‖T₁ − T₂‖_F`.
    pub fn max_diff(&self, other: &TransferSolution) -> f64 {
        self.t
            .iter()
            .zip(&other.t)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm_fro()))
    }
}

fn flatten_samples(ys: Vec<Vec<f64>>, k: usize) -> Result<Vec<Mat>> {
    ys.into_iter().map(|y| Mat::from_vec(k, k, y)).collect()
}

/// Entrywise finite-difference derivative of a matrix sequence.
pub fn sampled_matrix_derivative(samples: &[Mat], h: f64) -> Result<Vec<Mat>> {
    let Some(first) = samples.first() else {
        return Ok(Vec::new());
    };
    let (r, c) = first.shape();
    let flat: Vec<Vec<f64>> = samples.iter().map(|m| m.as_slice().to_vec()).collect();
    sampled_derivative(&flat, h)
        .into_iter()
        .map(|d| Mat::from_vec(r, c, d))
        .collect()
}

/// `‖Ṫ − (J Y T − T J Z)‖_F` at each sample.
pub fn ode_residuals(p: &TransferProblem, t: &[Mat]) -> Result<Vec<f64>> {
    if t.len() != p.grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} samples for a grid of {} points",
            t.len(),
            p.grid.len()
        )));
    }
    let dt = sampled_matrix_derivative(t, p.grid.step)?;
    t.iter()
        .zip(&dt)
        .enumerate()
        .map(|(i, (ti, di))| Ok((di - &p.rhs(p.grid.tau(i), ti)?).norm_fro()))
        .collect()
}

/// Integrates `Ṫ = J Y T − T J Z` from `T(τ₀) = T0` with RK4.
pub fn integrate_t_direct(p: &TransferProblem) -> Result<TransferSolution> {
    let k = 2 * p.n();
    let ys = rk4_integrate(
        |tau, y| {
            let t = Mat::from_vec(k, k, y.to_vec())?;
            Ok(p.rhs(tau, &t)?.into_vec())
        },
        &p.grid,
        p.t0.as_slice(),
    )?;
    TransferSolution::assemble(p, flatten_samples(ys, k)?, None)
}

/// `Ṡ = J Y S`.
pub fn integrate_s(target: &QuadHamiltonian, s0: &Mat, grid: &Grid) -> Result<Vec<Mat>> {
    let n = target.n();
    let k = 2 * n;
    if s0.shape() != (k, k) {
        return Err(Error::DimensionMismatch {
            op: "S0",
            lhs: (k, k),
            rhs: s0.shape(),
        });
    }
    let ys = rk4_integrate(
        |tau, y| {
            let s = Mat::from_vec(k, k, y.to_vec())?;
            let yx = coefficient_x(target, tau, None)?;
            Ok(apply_j(n, &(&yx * &s))?.into_vec())
        },
        grid,
        s0.as_slice(),
    )?;
    flatten_samples(ys, k)
}

/// `Ṙ = −R J Z`.
pub fn integrate_r(source: &QuadHamiltonian, r0: &Mat, grid: &Grid) -> Result<Vec<Mat>> {
    let n = source.n();
    let k = 2 * n;
    if r0.shape() != (k, k) {
        return Err(Error::DimensionMismatch {
            op: "R0",
            lhs: (k, k),
            rhs: r0.shape(),
        });
    }
    let ys = rk4_integrate(
        |tau, y| {
            let r = Mat::from_vec(k, k, y.to_vec())?;
            let zx = coefficient_x(source, tau, None)?;
            Ok((-&(&right_apply_j(n, &r)? * &zx)).into_vec())
        },
        grid,
        r0.as_slice(),
    )?;
    flatten_samples(ys, k)
}

/// `T = S A R` block by block:
///
/// ```text
/// T₁ = (S₁a + S₂b) R₁ + (S₁d + S₂c) R₃
/// T₂ = (S₁a + S₂b) R₂ + (S₁d + S₂c) R₄
/// T₃ = (S₃a + S₄b) R₁ + (S₃d + S₄c) R₃
/// T₄ = (S₃a + S₄b) R₂ + (S₃d + S₄c) R₄
/// ```
pub fn compose_t(s: &[Mat], r: &[Mat], blocks: &ConstantBlocks) -> Result<Vec<Mat>> {
    if s.len() != r.len() {
        return Err(Error::GridMismatch(format!(
            "{} S samples and {} R samples",
            s.len(),
            r.len()
        )));
    }
    let ConstantBlocks { a, b, c, d } = blocks;
    s.iter()
        .zip(r)
        .map(|(s, r)| {
            let sb = BlockMat2n::split(s)?;
            let rb = BlockMat2n::split(r)?;
            let top_a = &(&sb.b11 * a) + &(&sb.b12 * b);
            let top_d = &(&sb.b11 * d) + &(&sb.b12 * c);
            let bot_a = &(&sb.b21 * a) + &(&sb.b22 * b);
            let bot_d = &(&sb.b21 * d) + &(&sb.b22 * c);
            let t1 = &(&top_a * &rb.b11) + &(&top_d * &rb.b21);
            let t2 = &(&top_a * &rb.b12) + &(&top_d * &rb.b22);
            let t3 = &(&bot_a * &rb.b11) + &(&bot_d * &rb.b21);
            let t4 = &(&bot_a * &rb.b12) + &(&bot_d * &rb.b22);
            Ok(BlockMat2n::new(t1, t2, t3, t4)?.flatten())
        })
        .collect()
}

/// `A = S0⁻¹ T0 R0⁻¹`.
pub fn fit_constant_blocks(s0: &Mat, r0: &Mat, t0: &Mat) -> Result<ConstantBlocks> {
    let st = solve_linear(s0, t0)?;
    // A R0 = st  ⇔  R0ᵀ Aᵀ = stᵀ.
    let at = solve_linear(&r0.transpose(), &st.transpose())?;
    ConstantBlocks::from_matrix(&at.transpose())
}

/// Solves via `T = S A R` with `S(τ₀) = R(τ₀) = I`, so `A = T0`.
pub fn integrate_t_factorized(p: &TransferProblem) -> Result<TransferSolution> {
    let k = 2 * p.n();
    let id = Mat::identity(k);
    let s = integrate_s(&p.target, &id, &p.grid)?;
    let r = integrate_r(&p.source, &id, &p.grid)?;
    let blocks = fit_constant_blocks(&s[0], &r[0], &p.t0)?;
    let t = compose_t(&s, &r, &blocks)?;
    TransferSolution::assemble(p, t, Some(Factorization { s, r, blocks }))
}

/// `η = T ξ`.
pub fn map_phase_state(t: &Mat, xi: &[f64]) -> Result<Vec<f64>> {
    t.mul_vec(xi)
}

/// Residual of `η̇ = J Y η` along `η(τ) = T(τ) ξ(τ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingCheck {
    pub xi0: Vec<f64>,
    pub residual: Vec<f64>,
}

impl MappingCheck {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Integrates the source flow from `xi0`, maps it through `sol` and measures
/// `‖η̇ − J Y η‖` with finite-difference `η̇`.
pub fn verify_solution_mapping(p: &TransferProblem, sol: &TransferSolution, xi0: &[f64]) -> Result<MappingCheck> {
    if sol.t.len() != p.grid.len() {
        return Err(Error::GridMismatch(format!(
            "solution has {} samples, grid has {}",
            sol.t.len(),
            p.grid.len()
        )));
    }
    let xi = crate::hamiltonian::integrate_flow(&p.source, &p.grid, xi0)?;
    let eta: Vec<Vec<f64>> = sol
        .t
        .iter()
        .zip(&xi)
        .map(|(t, x)| map_phase_state(t, x))
        .collect::<Result<_>>()?;
    let deta = sampled_derivative(&eta, p.grid.step);
    let n = p.n();
    let residual = eta
        .iter()
        .zip(&deta)
        .enumerate()
        .map(|(i, (e, de))| {
            let y = p.y(p.grid.tau(i))?;
            let want = apply_j(n, &Mat::column(&y.mul_vec(e)?))?;
            Ok(de
                .iter()
                .enumerate()
                .map(|(k, v)| (v - want[(k, 0)]).powi(2))
                .sum::<f64>()
                .sqrt())
        })
        .collect::<Result<_>>()?;
    Ok(MappingCheck {
        xi0: xi0.to_vec(),
        residual,
    })
}

/// `det S(τ)` at each sample; constant when `tr(J Y) = 0`.
pub fn determinants(samples: &[Mat]) -> Result<Vec<f64>> {
    samples.iter().map(Mat::det).collect()
}

/// `T(τ)⁻¹`, used to run a map backwards.
pub fn invert_samples(samples: &[Mat]) -> Result<Vec<Mat>> {
    samples.iter().map(inverse).collect()
}
