//! Hole shapes, the perforated cell and its triangulations.

mod hole;
pub mod io;
mod locate;
mod mesh;
mod mesher;

pub use hole::{point_in_polygon, polygon_area, validate_hole, HoleKind, HoleReport, HoleShape, R_MARGIN};
pub use locate::PointLocator;
pub use mesh::{BoundaryEdge, EdgeTag, Mesh, Periodicity};
pub use mesher::{build_perforated_mesh, build_strip_mesh, strip_core_half_width, MeshOptions, ANGLE_LIMIT_DEG};

use crate::error::{Error, Result};

/// Unit cell `(-1/2, 1/2) x (0, H)` with a column of `N = 1/eps` holes
/// `eps * omega + (0, eps k H)`, `k = 0..N-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerforatedCell {
    pub height: f64,
    pub n: usize,
    pub hole: HoleShape,
}

impl PerforatedCell {
    pub fn new(height: f64, n: usize, hole: HoleShape) -> Result<Self> {
        if n == 0 {
            return Err(Error::Geometry("number of holes must be positive".into()));
        }
        hole.validate(height)?;
        Ok(Self { height, n, hole })
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Exact area of the perforated cell (smooth holes).
    pub fn area(&self) -> f64 {
        let eps = self.epsilon();
        self.height - self.n as f64 * eps * eps * self.hole.area()
    }

    /// Segments per hole used by [`build_perforated_mesh`] with `opts`.
    /// A strip mesh built with the same count carries the same hole polygon.
    pub fn hole_segments(&self, opts: MeshOptions) -> usize {
        opts.hole_segments
            .unwrap_or_else(|| HoleShape::default_segments(self.epsilon() * self.hole.radius(), opts.h))
    }

    /// Default strip half-length `max(6R, 2H)` for the boundary-layer problem.
    pub fn default_strip_length(hole: &HoleShape, height: f64) -> Result<f64> {
        let rep = hole.validate(height)?;
        Ok((6.0 * rep.r_enclose).max(2.0 * height))
    }
}
