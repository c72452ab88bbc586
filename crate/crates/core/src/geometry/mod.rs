//! Metrics, connection, curvature and orthonormal frames on a coordinate
//! chart.
//!
//! Index conventions: coordinates run `0..dim`, `K^Λ_ΠΩΘ` has its first index
//! up, and frame components `K_(A)(B)(C)(D)` are fully lowered. With these
//! conventions the tidal matrix seen by an observer with frame `E` is
//! `K_0A0C = K_(0)(A)(0)(C)` and the geodesic deviation equation reads
//! `Z̈_A + K_0A0C Z_C = 0`.

mod curvature;
mod frame;
mod metric;
mod tensor;

pub use curvature::{
    christoffel, christoffel_fd, constant_curvature_frame_block, project_curvature, ricci_rotation_curvature, riemann,
    ConstantCurvatureSpec, FdConfig, RiemannAtPoint,
};
pub use frame::{build_vielbein, comoving_frame, gram_schmidt, normalize_timelike, Vielbein, FRAME_NORM_FLOOR};
pub use metric::{ChristoffelFn, FrameFieldFn, Metric, MetricFn};
pub use tensor::{Christoffel, Rank4, SymmetryReport};
