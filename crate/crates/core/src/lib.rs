//! Fractal (Mandelbrot) percolation: sampling, branching-process analysis,
//! arithmetic differences, projections, rigorous projection certificates,
//! planar line slices and sums of Cartesian products.

pub mod arithmetic;
pub mod branching;
pub mod codec;
pub mod condition;
pub mod crossing;
pub mod error;
pub mod interval;
pub mod mc;
pub mod product;
pub mod projection;
pub mod rng;
pub mod slice;
pub mod spec;
pub mod sumset;
pub mod tree;

pub use error::{Error, Result};
pub use interval::{Interval, IntervalUnion};
pub use spec::{Cell, CellIndex, RetentionSpec, Square};
pub use tree::RealizationTree;
