//! Minsum location under gauge distances: gauges, convex sites, exact and
//! iterative solvers, optimality certificates, planar loci, Euclidean
//! criteria, and a grid oracle.

pub mod barrier;
pub mod euclid;
pub mod ftcore;
pub mod gauge;
pub mod geometry2d;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod oracle;
pub mod plot;
pub mod proj;
pub mod sets;

pub use gauge::{Ball, Gauge, GaugeError, NormingSet};
pub use sets::{AffineFlat, ConvexSet, Projection, SetError, Support};
