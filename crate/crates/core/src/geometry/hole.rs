use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative tolerance for the mirror-symmetry test.
const SYMMETRY_TOL: f64 = 1e-9;

/// Margin applied to the hole half-width when choosing the enclosing strip.
pub const R_MARGIN: f64 = 1.05;

#[derive(Debug, Clone, PartialEq)]
pub enum HoleKind {
    /// No hole at all; used for the unperforated oracle runs.
    Empty,
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
    },
    /// Vertices of a simple polygon, either orientation.
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
}

/// Reference hole `omega` in stretched coordinates, living inside the unit
/// period `(-1/2, 1/2) x (0, H)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoleShape {
    pub kind: HoleKind,
    /// Claimed invariance under `xi2 -> H - xi2`.
    pub mirror_symmetric: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoleReport {
    /// Enclosing half-width: `omega` lies in `|xi1| < r_enclose`.
    pub r_enclose: f64,
    pub bbox: [[f64; 2]; 2],
    pub mirror_checked: bool,
}

impl HoleShape {
    pub fn empty() -> Self {
        Self {
            kind: HoleKind::Empty,
            mirror_symmetric: true,
        }
    }

    pub fn disk(center: [f64; 2], radius: f64, mirror_symmetric: bool) -> Self {
        Self {
            kind: HoleKind::Disk { center, radius },
            mirror_symmetric,
        }
    }

    pub fn ellipse(center: [f64; 2], semi_axes: [f64; 2], mirror_symmetric: bool) -> Self {
        Self {
            kind: HoleKind::Ellipse { center, semi_axes },
            mirror_symmetric,
        }
    }

    pub fn polygon(vertices: Vec<[f64; 2]>, mirror_symmetric: bool) -> Self {
        Self {
            kind: HoleKind::Polygon { vertices },
            mirror_symmetric,
        }
    }

    /// Disk of radius `0.2 H` centered at `(0, H/2)`.
    pub fn canonical(height: f64) -> Self {
        Self::disk([0.0, height / 2.0], 0.2 * height, true)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.kind, HoleKind::Empty)
    }

    /// Radius of a circle around the shape's center that contains it.
    pub fn radius(&self) -> f64 {
        match &self.kind {
            HoleKind::Empty => 0.0,
            HoleKind::Disk { radius, .. } => *radius,
            HoleKind::Ellipse { semi_axes, .. } => semi_axes[0].max(semi_axes[1]),
            HoleKind::Polygon { vertices } => {
                let c = self.center();
                vertices
                    .iter()
                    .map(|v| (v[0] - c[0]).hypot(v[1] - c[1]))
                    .fold(0.0, f64::max)
            }
        }
    }

    pub fn center(&self) -> [f64; 2] {
        match &self.kind {
            HoleKind::Empty => [0.0, 0.0],
            HoleKind::Disk { center, .. } | HoleKind::Ellipse { center, .. } => *center,
            HoleKind::Polygon { vertices } => {
                let n = vertices.len() as f64;
                let sx: f64 = vertices.iter().map(|v| v[0]).sum();
                let sy: f64 = vertices.iter().map(|v| v[1]).sum();
                [sx / n, sy / n]
            }
        }
    }

    /// Exact area of the (unpolygonized) shape.
    pub fn area(&self) -> f64 {
        match &self.kind {
            HoleKind::Empty => 0.0,
            HoleKind::Disk { radius, .. } => PI * radius * radius,
            HoleKind::Ellipse { semi_axes, .. } => PI * semi_axes[0] * semi_axes[1],
            HoleKind::Polygon { vertices } => polygon_area(vertices).abs(),
        }
    }

    /// Number of boundary segments for a hole of physical radius
    /// `scaled_radius` meshed at element size `h`.
    pub fn default_segments(scaled_radius: f64, h: f64) -> usize {
        let n = (2.0 * PI * scaled_radius / h).ceil() as usize;
        n.max(16)
    }

    /// Counter-clockwise boundary polygon with roughly `segments` edges.
    ///
    /// Disks and ellipses are sampled at `theta_k = 2 pi (k + 1/2) / n` with
    /// `n` a multiple of four, so the polygon keeps both reflection symmetries
    /// of the smooth shape.
    pub fn polygonize(&self, segments: usize) -> Vec<[f64; 2]> {
        match &self.kind {
            HoleKind::Empty => Vec::new(),
            HoleKind::Disk { center, radius } => ellipse_points(*center, [*radius, *radius], segments),
            HoleKind::Ellipse { center, semi_axes } => ellipse_points(*center, *semi_axes, segments),
            HoleKind::Polygon { vertices } => {
                let mut v = vertices.clone();
                if polygon_area(&v) < 0.0 {
                    v.reverse();
                }
                let perimeter: f64 = (0..v.len()).map(|i| dist(v[i], v[(i + 1) % v.len()])).sum();
                let target = perimeter / segments.max(v.len()) as f64;
                let mut out = Vec::new();
                for i in 0..v.len() {
                    let (a, b) = (v[i], v[(i + 1) % v.len()]);
                    let pieces = (dist(a, b) / target).round().max(1.0) as usize;
                    for s in 0..pieces {
                        let t = s as f64 / pieces as f64;
                        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                    }
                }
                out
            }
        }
    }

    /// Whether the shape is invariant under `xi1 -> -xi1`. Such holes are
    /// meshed on one half of the strip and reflected.
    pub fn is_xi1_symmetric(&self) -> bool {
        match &self.kind {
            HoleKind::Empty => true,
            HoleKind::Disk { center, .. } | HoleKind::Ellipse { center, .. } => center[0] == 0.0,
            HoleKind::Polygon { .. } => false,
        }
    }

    pub fn validate(&self, height: f64) -> Result<HoleReport> {
        validate_hole(self, height)
    }

    /// Stable content hash used in file names and cache keys.
    pub fn hash_hex(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(format!("{:?}", self).as_bytes());
        hex::encode(&hasher.finalize()[..8])
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn ellipse_points(center: [f64; 2], axes: [f64; 2], segments: usize) -> Vec<[f64; 2]> {
    let q = segments.max(4).div_ceil(4);
    let n = 4 * q;
    // first quadrant, then exact sign flips for the other three
    let quad: Vec<(f64, f64)> = (0..q)
        .map(|k| {
            let theta = 2.0 * PI * (k as f64 + 0.5) / n as f64;
            (axes[0] * theta.cos(), axes[1] * theta.sin())
        })
        .collect();
    let mut out = vec![[0.0; 2]; n];
    for (k, &(x, y)) in quad.iter().enumerate() {
        out[k] = [x, y];
        out[2 * q - 1 - k] = [-x, y];
        out[2 * q + k] = [-x, -y];
        out[4 * q - 1 - k] = [x, -y];
    }
    out.iter().map(|p| [center[0] + p[0], center[1] + p[1]]).collect()
}

/// Signed area, positive for counter-clockwise vertex order.
pub fn polygon_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

/// Even-odd point in polygon test.
pub fn point_in_polygon(p: [f64; 2], v: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = v.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn is_simple(v: &[[f64; 2]]) -> bool {
    let n = v.len();
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Checks that the closure of `hole` lies strictly inside
/// `(-1/2, 1/2) x (0, H)`, that its boundary is simple and, when flagged,
/// that it is symmetric under `xi2 -> H - xi2`.
pub fn validate_hole(hole: &HoleShape, height: f64) -> Result<HoleReport> {
    if !(height.is_finite() && height > 0.0) {
        return Err(Error::Geometry(format!("cell height must be positive, got {height}")));
    }
    let boundary: Vec<[f64; 2]> = match &hole.kind {
        HoleKind::Empty => {
            return Ok(HoleReport {
                r_enclose: 0.0,
                bbox: [[0.0; 2]; 2],
                mirror_checked: true,
            });
        }
        HoleKind::Disk { radius, .. } if !(*radius > 0.0) => {
            return Err(Error::Geometry(format!("disk radius must be positive, got {radius}")));
        }
        HoleKind::Ellipse { semi_axes, .. } if !(semi_axes[0] > 0.0 && semi_axes[1] > 0.0) => {
            return Err(Error::Geometry(format!(
                "ellipse semi-axes must be positive, got {semi_axes:?}"
            )));
        }
        HoleKind::Polygon { vertices } => {
            if vertices.len() < 3 {
                return Err(Error::Geometry("polygon needs at least three vertices".into()));
            }
            if !is_simple(vertices) || polygon_area(vertices).abs() == 0.0 {
                return Err(Error::Geometry("polygon boundary is not a simple closed curve".into()));
            }
            vertices.clone()
        }
        // dense sampling is exact enough for the bounding box of a conic
        _ => hole.polygonize(4096),
    };

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &boundary {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    if let HoleKind::Disk { center, radius } = hole.kind {
        lo = [center[0] - radius, center[1] - radius];
        hi = [center[0] + radius, center[1] + radius];
    }
    if let HoleKind::Ellipse { center, semi_axes } = hole.kind {
        lo = [center[0] - semi_axes[0], center[1] - semi_axes[1]];
        hi = [center[0] + semi_axes[0], center[1] + semi_axes[1]];
    }
    let offending = if lo[0] <= -0.5 {
        Some([lo[0], 0.0])
    } else if hi[0] >= 0.5 {
        Some([hi[0], 0.0])
    } else if lo[1] <= 0.0 {
        Some([0.0, lo[1]])
    } else if hi[1] >= height {
        Some([0.0, hi[1]])
    } else {
        None
    };
    if let Some(p) = offending {
        return Err(Error::Geometry(format!(
            "hole leaves the cell (-1/2,1/2)x(0,{height}) at coordinate ({}, {})",
            p[0], p[1]
        )));
    }

    if hole.mirror_symmetric {
        let scale = hole.radius().max(1e-300);
        let ok = match &hole.kind {
            HoleKind::Disk { center, .. } | HoleKind::Ellipse { center, .. } => {
                (center[1] - height / 2.0).abs() <= SYMMETRY_TOL * scale
            }
            HoleKind::Polygon { vertices } => vertices.iter().all(|v| {
                let m = [v[0], height - v[1]];
                vertices.iter().any(|w| dist(*w, m) <= SYMMETRY_TOL * scale)
            }),
            HoleKind::Empty => true,
        };
        if !ok {
            return Err(Error::Geometry(format!(
                "hole is flagged mirror symmetric but is not invariant under xi2 -> {height} - xi2"
            )));
        }
    }

    let half_width = lo[0].abs().max(hi[0].abs());
    Ok(HoleReport {
        r_enclose: half_width * R_MARGIN,
        bbox: [lo, hi],
        mirror_checked: hole.mirror_symmetric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn canonical_disk_is_valid() {
        let hole = HoleShape::disk([0.0, 0.5], 0.2, true);
        let rep = validate_hole(&hole, 1.0).unwrap();
        assert!(rep.mirror_checked);
        assert_relative_eq!(rep.r_enclose, 0.2 * R_MARGIN);
    }

    #[test]
    fn oversized_disk_rejected() {
        let h = 0.4;
        let err = validate_hole(&HoleShape::disk([0.0, h / 2.0], h, false), h).unwrap_err();
        assert!(err.to_string().contains("leaves the cell"));
    }

    #[test]
    fn off_center_disk_fails_symmetry() {
        let h = 1.0;
        let err = validate_hole(&HoleShape::disk([0.0, 0.3 * h], 0.1 * h, true), h).unwrap_err();
        assert!(err.to_string().contains("mirror"));
        assert!(validate_hole(&HoleShape::disk([0.0, 0.3 * h], 0.1 * h, false), h).is_ok());
    }

    #[test]
    fn polygon_checks() {
        let square = vec![[-0.1, 0.4], [0.1, 0.4], [0.1, 0.6], [-0.1, 0.6]];
        let rep = validate_hole(&HoleShape::polygon(square.clone(), true), 1.0).unwrap();
        assert_relative_eq!(rep.r_enclose, 0.1 * R_MARGIN);
        let bow = vec![[-0.1, 0.4], [0.1, 0.6], [0.1, 0.4], [-0.1, 0.6]];
        assert!(validate_hole(&HoleShape::polygon(bow, false), 1.0).is_err());
        let tilted = vec![[-0.1, 0.3], [0.1, 0.4], [0.1, 0.6], [-0.1, 0.6]];
        assert!(validate_hole(&HoleShape::polygon(tilted, true), 1.0).is_err());
    }

    #[test]
    fn polygonization_is_symmetric_and_ccw() {
        let hole = HoleShape::canonical(0.3);
        let pts = hole.polygonize(18);
        assert_eq!(pts.len(), 20);
        assert!(polygon_area(&pts) > 0.0);
        for p in &pts {
            let m = [-p[0], p[1]];
            assert!(pts.iter().any(|q| q[0] == m[0] && (q[1] - m[1]).abs() < 1e-15));
        }
        // polygon area approaches the disk area as O(n^-2)
        let a16 = polygon_area(&hole.polygonize(16));
        let a64 = polygon_area(&hole.polygonize(64));
        let exact = hole.area();
        assert!((exact - a64) < (exact - a16) / 10.0);
    }

    #[test]
    fn point_location_in_polygon() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(point_in_polygon([0.5, 0.5], &sq));
        assert!(!point_in_polygon([1.5, 0.5], &sq));
    }
}
