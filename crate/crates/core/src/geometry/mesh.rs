use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeTag {
    Left,
    Right,
    Bottom,
    Top,
    Hole,
}

impl EdgeTag {
    pub fn name(&self) -> &'static str {
        match self {
            EdgeTag::Left => "left",
            EdgeTag::Right => "right",
            EdgeTag::Bottom => "bottom",
            EdgeTag::Top => "top",
            EdgeTag::Hole => "hole",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "left" => EdgeTag::Left,
            "right" => EdgeTag::Right,
            "bottom" => EdgeTag::Bottom,
            "top" => EdgeTag::Top,
            "hole" => EdgeTag::Hole,
            _ => return None,
        })
    }
}

/// Boundary edge oriented so that the domain lies to its left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub tag: EdgeTag,
}

/// Which pair of opposite sides is identified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Periodicity {
    /// `x1 = -1/2` (master) against `x1 = +1/2` (slave); period 1.
    Lateral,
    /// `xi2 = 0` (master) against `xi2 = H` (slave); period `H`.
    Vertical { period: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<BoundaryEdge>,
    /// `(master, slave)` vertex pairs with equal non-periodic coordinate.
    pub pairs: Vec<(usize, usize)>,
    pub periodicity: Periodicity,
    /// Target element size.
    pub h: f64,
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut best = 180.0f64;
        for tri in &self.triangles {
            let p = tri.map(|i| self.vertices[i]);
            for k in 0..3 {
                let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                best = best.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        best
    }

    /// Number of closed loops formed by the `hole` edges.
    pub fn hole_loops(&self) -> usize {
        let next: HashMap<usize, usize> = self
            .edges
            .iter()
            .filter(|e| e.tag == EdgeTag::Hole)
            .map(|e| (e.v[0], e.v[1]))
            .collect();
        let mut seen = std::collections::HashSet::new();
        let mut loops = 0;
        let mut starts: Vec<usize> = next.keys().copied().collect();
        starts.sort_unstable();
        for start in starts {
            if seen.contains(&start) {
                continue;
            }
            loops += 1;
            let mut v = start;
            while seen.insert(v) {
                match next.get(&v) {
                    Some(&w) => v = w,
                    None => break,
                }
            }
        }
        loops
    }

    /// Longest mesh edge touching a hole-boundary vertex.
    pub fn max_hole_incident_edge(&self) -> Option<f64> {
        let on_hole: std::collections::HashSet<usize> = self
            .edges
            .iter()
            .filter(|e| e.tag == EdgeTag::Hole)
            .flat_map(|e| e.v)
            .collect();
        let mut best: Option<f64> = None;
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if on_hole.contains(&a) || on_hole.contains(&b) {
                    let (p, q) = (self.vertices[a], self.vertices[b]);
                    let len = (p[0] - q[0]).hypot(p[1] - q[1]);
                    best = Some(best.map_or(len, |x: f64| x.max(len)));
                }
            }
        }
        best
    }

    /// Checks positivity, pairing geometry and boundary closure.
    pub fn check(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            if !(self.triangle_area(t) > 0.0) {
                return Err(Error::Mesh(format!("triangle {t} has non-positive area")));
            }
        }
        for &(m, s) in &self.pairs {
            let (p, q) = (self.vertices[m], self.vertices[s]);
            let ok = match self.periodicity {
                Periodicity::Lateral => (q[0] - p[0] - 1.0).abs() <= 1e-12 && (p[1] - q[1]).abs() <= 1e-12,
                Periodicity::Vertical { period } => {
                    (q[1] - p[1] - period).abs() <= 1e-12 && (p[0] - q[0]).abs() <= 1e-12
                }
            };
            if !ok {
                return Err(Error::Mesh(format!("pair ({m}, {s}) does not match: {p:?} vs {q:?}")));
            }
        }
        Ok(())
    }

    /// Uniform red refinement: every triangle is split into four by its edge
    /// midpoints. Tags and pairing carry over, and the boundary polygon is
    /// unchanged, so the result discretizes exactly the same domain.
    pub fn refine_uniform(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let mut edges = Vec::with_capacity(2 * self.edges.len());
        for e in &self.edges {
            let m = midpoint(e.v[0], e.v[1], &mut vertices);
            edges.push(BoundaryEdge {
                v: [e.v[0], m],
                tag: e.tag,
            });
            edges.push(BoundaryEdge {
                v: [m, e.v[1]],
                tag: e.tag,
            });
        }
        let mut pairs = self.pairs.clone();
        let slave_of: HashMap<usize, usize> = self.pairs.iter().copied().collect();
        let (master_tag, slave_tag) = match self.periodicity {
            Periodicity::Lateral => (EdgeTag::Left, EdgeTag::Right),
            Periodicity::Vertical { .. } => (EdgeTag::Bottom, EdgeTag::Top),
        };
        let slave_edges: HashMap<(usize, usize), usize> = self
            .edges
            .iter()
            .filter(|e| e.tag == slave_tag)
            .map(|e| ((e.v[0].min(e.v[1]), e.v[0].max(e.v[1])), 0))
            .collect();
        for e in self.edges.iter().filter(|e| e.tag == master_tag) {
            let (Some(&s0), Some(&s1)) = (slave_of.get(&e.v[0]), slave_of.get(&e.v[1])) else {
                continue;
            };
            if slave_edges.contains_key(&(s0.min(s1), s0.max(s1))) {
                let m = midpoint(e.v[0], e.v[1], &mut vertices);
                let s = midpoint(s0, s1, &mut vertices);
                pairs.push((m, s));
            }
        }
        Mesh {
            vertices,
            triangles,
            edges,
            pairs,
            periodicity: self.periodicity,
            h: self.h / 2.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Mesh {
        // two triangles on [-1/2,1/2] x [0,1]
        Mesh {
            vertices: vec![[-0.5, 0.0], [0.5, 0.0], [0.5, 1.0], [-0.5, 1.0]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            edges: vec![
                BoundaryEdge {
                    v: [0, 1],
                    tag: EdgeTag::Bottom,
                },
                BoundaryEdge {
                    v: [1, 2],
                    tag: EdgeTag::Right,
                },
                BoundaryEdge {
                    v: [2, 3],
                    tag: EdgeTag::Top,
                },
                BoundaryEdge {
                    v: [3, 0],
                    tag: EdgeTag::Left,
                },
            ],
            pairs: vec![(0, 1), (3, 2)],
            periodicity: Periodicity::Lateral,
            h: 1.0,
        }
    }

    #[test]
    fn refinement_keeps_area_and_pairs() {
        let m = unit_square();
        m.check().unwrap();
        let r = m.refine_uniform().refine_uniform();
        r.check().unwrap();
        assert_eq!(r.triangles.len(), 32);
        assert_eq!(r.pairs.len(), 5);
        assert!((r.area() - 1.0).abs() < 1e-15);
        assert_eq!(r.edges.len(), 16);
        assert!((r.min_angle_deg() - 45.0).abs() < 1e-9);
    }
}
