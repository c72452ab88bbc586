//! Worldlines, Fermi-Walker frames and Jacobi fields along them.

mod congruence;
mod curve;
mod jacobi;

pub use congruence::{rindler_acceleration_field, schwarzschild_static_acceleration_field, CongruenceData};
pub use curve::{
    fermi_walker_step, integrate_accelerated_curve, integrate_curve, integrate_geodesic, step_state, AccelerationField,
    CurveOptions, CurveSampling, CurveState, TransportLaw, FRAME_DEGENERACY_TOL, ORTHOGONALITY_TOL, VELOCITY_NORM_TOL,
};
pub use jacobi::{
    integrate_jacobi_first_order, integrate_jacobi_geodesic, integrate_jacobi_nongeodesic, sample_frame_curvature,
    FrameCurvature, JacobiSolution,
};
