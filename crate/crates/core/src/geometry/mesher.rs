//! Triangulation of the perforated cell and of the truncated strip.
//!
//! Every boundary is discretized first by a graded 1D rule; periodic sides
//! share one list of abscissae or ordinates. The interior is filled by
//! constrained Delaunay refinement. Whenever the refinement splits a periodic
//! side, the same point is inserted on the partner side and the refinement is
//! repeated, so paired vertices coincide bit for bit.

use std::collections::HashMap;

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::hole::{point_in_polygon, HoleShape};
use super::mesh::{BoundaryEdge, EdgeTag, Mesh, Periodicity};
use super::PerforatedCell;
use crate::error::{Error, Result};

/// Minimum angle requested from the Delaunay refinement.
pub const ANGLE_LIMIT_DEG: f64 = 25.0;
/// Growth rate of the element size away from hole boundaries.
const GRADING: f64 = 0.3;
/// Elements may exceed the local size field by this factor.
const SIZE_SLACK: f64 = 1.3;
/// Boundary segments are this fraction of the local size, leaving the
/// interior refinement room to meet the angle bound next to them.
const BOUNDARY_FACTOR: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    pub h: f64,
    /// Segments per hole boundary; `None` picks `max(16, ceil(2 pi r / h))`.
    pub hole_segments: Option<usize>,
}

impl MeshOptions {
    pub fn new(h: f64) -> Self {
        Self { h, hole_segments: None }
    }

    pub fn with_hole_segments(mut self, n: usize) -> Self {
        self.hole_segments = Some(n);
        self
    }
}

/// Local element size wanted near a set of circular hole envelopes.
struct Sizing<'a> {
    h: f64,
    holes: &'a [([f64; 2], f64, f64)],
}

impl Sizing<'_> {
    fn at(&self, p: [f64; 2]) -> f64 {
        let mut s = self.h;
        for &(c, r, seg) in self.holes {
            let d = ((p[0] - c[0]).hypot(p[1] - c[1]) - r).max(0.0);
            s = s.min(seg + GRADING * d);
        }
        s
    }
}

/// Parameters `t` in `[0, 1]` splitting the segment `a -> b` into pieces
/// whose length follows `size`. Endpoints are exactly 0 and 1.
fn graded_params(a: [f64; 2], b: [f64; 2], size: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let point = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    let samples = 4096usize;
    let mut cum = vec![0.0; samples + 1];
    let mut prev = 1.0 / size(point(0.0));
    for i in 1..=samples {
        let t = i as f64 / samples as f64;
        let cur = 1.0 / size(point(t));
        cum[i] = cum[i - 1] + 0.5 * (prev + cur) * len / samples as f64;
        prev = cur;
    }
    let pieces = (cum[samples] / BOUNDARY_FACTOR - 1e-9).ceil().max(1.0) as usize;
    let mut out = vec![0.0];
    let mut idx = 0;
    for k in 1..pieces {
        let target = cum[samples] * k as f64 / pieces as f64;
        while cum[idx + 1] < target {
            idx += 1;
        }
        let frac = (target - cum[idx]) / (cum[idx + 1] - cum[idx]);
        out.push((idx as f64 + frac) / samples as f64);
    }
    out.push(1.0);
    out
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 1.0 {
        b
    } else {
        a + t * (b - a)
    }
}

/// Planar straight-line graph: points plus closed constraint chains.
#[derive(Default)]
struct Pslg {
    points: Vec<[f64; 2]>,
    index: HashMap<(u64, u64), usize>,
    segments: Vec<[usize; 2]>,
    holes: Vec<Vec<[f64; 2]>>,
    /// Lines `coord[axis] = c0` and `coord[axis] = c1` whose vertex sets must
    /// match in the other coordinate.
    matched: Vec<(usize, f64, f64)>,
}

fn key(p: [f64; 2]) -> (u64, u64) {
    ((p[0] + 0.0).to_bits(), (p[1] + 0.0).to_bits())
}

impl Pslg {
    fn point(&mut self, p: [f64; 2]) -> usize {
        let p = [p[0] + 0.0, p[1] + 0.0];
        let n = self.points.len();
        *self.index.entry(key(p)).or_insert_with(|| {
            self.points.push(p);
            n
        })
    }

    fn chain(&mut self, pts: &[[f64; 2]], closed: bool) {
        let ids: Vec<usize> = pts.iter().map(|&p| self.point(p)).collect();
        for w in ids.windows(2) {
            if w[0] != w[1] {
                self.segments.push([w[0], w[1]]);
            }
        }
        if closed && ids.len() > 2 {
            self.segments.push([ids[ids.len() - 1], ids[0]]);
        }
    }

    fn triangulate(&self, max_area: f64, size: &dyn Fn([f64; 2]) -> f64) -> Result<(Vec<[f64; 2]>, Vec<[usize; 3]>)> {
        let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
        let mut handles = Vec::with_capacity(self.points.len());
        for p in &self.points {
            let h = cdt
                .insert(Point2::new(p[0], p[1]))
                .map_err(|e| Error::Mesh(format!("cannot insert boundary point {p:?}: {e:?}")))?;
            handles.push(h);
        }
        for s in &self.segments {
            if cdt.can_add_constraint(handles[s[0]], handles[s[1]]) {
                cdt.add_constraint(handles[s[0]], handles[s[1]]);
            } else {
                return Err(Error::Mesh(format!(
                    "boundary segment {:?} -> {:?} intersects another segment",
                    self.points[s[0]], self.points[s[1]]
                )));
            }
        }
        let params = RefinementParameters::<f64>::new()
            .with_angle_limit(AngleLimit::from_deg(ANGLE_LIMIT_DEG))
            .with_max_allowed_area(max_area)
            .exclude_outer_faces(true)
            .with_max_additional_vertices(20_000_000);
        // away from holes the area bound alone controls the element size
        let bulk = (4.0 * max_area / 3f64.sqrt()).sqrt() * 0.999;
        let inside = |c: [f64; 2]| !self.holes.iter().any(|poly| point_in_polygon(c, poly));
        for pass in 0.. {
            let result = cdt.refine(params.clone());
            if !result.refinement_complete {
                return Err(Error::Mesh("Delaunay refinement hit its vertex budget".into()));
            }
            // graded size field: split elements that are too long for their position
            let mut extra = Vec::new();
            for f in cdt.inner_faces() {
                let p = f.vertices().map(|v| [v.position().x, v.position().y]);
                let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
                let longest = (0..3)
                    .map(|k| (p[k][0] - p[(k + 1) % 3][0]).hypot(p[k][1] - p[(k + 1) % 3][1]))
                    .fold(0.0, f64::max);
                let target = size(c);
                if target < bulk && longest > SIZE_SLACK * target && inside(c) {
                    extra.push(c);
                }
            }
            // periodic sides: copy every vertex to its partner line
            for &(axis, c0, c1) in &self.matched {
                let other = 1 - axis;
                let on = |c: f64| -> std::collections::BTreeSet<u64> {
                    cdt.vertices()
                        .map(|v| [v.position().x, v.position().y])
                        .filter(|p| p[axis] == c)
                        .map(|p| (p[other] + 0.0).to_bits())
                        .collect()
                };
                let (a, b) = (on(c0), on(c1));
                for (from, to) in [(&a, c1), (&b, c0)] {
                    let missing = if to == c1 {
                        from.difference(&b)
                    } else {
                        from.difference(&a)
                    };
                    for bits in missing {
                        let mut p = [0.0; 2];
                        p[axis] = to;
                        p[other] = f64::from_bits(*bits);
                        extra.push(p);
                    }
                }
            }
            if extra.is_empty() {
                break;
            }
            if pass > 60 {
                return Err(Error::Mesh(format!("size field not met after {pass} passes")));
            }
            for c in extra {
                cdt.insert(Point2::new(c[0], c[1]))
                    .map_err(|e| Error::Mesh(format!("cannot insert interior point {c:?}: {e:?}")))?;
            }
        }

        let vertices: Vec<[f64; 2]> = cdt.vertices().map(|v| [v.position().x, v.position().y]).collect();
        let mut triangles = Vec::new();
        for f in cdt.inner_faces() {
            let vs = f.vertices().map(|v| v.fix().index());
            let p = vs.map(|i| vertices[i]);
            let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
            if !inside(c) {
                continue;
            }
            triangles.push(vs);
        }
        Ok(compact(vertices, triangles))
    }
}

/// Drops unreferenced vertices and renumbers.
fn compact(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let mut map = vec![usize::MAX; vertices.len()];
    let mut out = Vec::new();
    let mut tris = Vec::with_capacity(triangles.len());
    for t in triangles {
        let t = t.map(|i| {
            if map[i] == usize::MAX {
                map[i] = out.len();
                out.push(vertices[i]);
            }
            map[i]
        });
        tris.push(t);
    }
    (out, tris)
}

/// Builds boundary edges (tagged by `classify`) and periodic pairs.
fn finish(
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    periodicity: Periodicity,
    h: f64,
    classify: &dyn Fn([f64; 2], [f64; 2]) -> EdgeTag,
) -> Result<Mesh> {
    let mut count: HashMap<(usize, usize), (usize, [usize; 2])> = HashMap::new();
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let e = count.entry((a.min(b), a.max(b))).or_insert((0, [a, b]));
            e.0 += 1;
        }
    }
    let mut edges: Vec<BoundaryEdge> = count
        .values()
        .filter(|(c, _)| *c == 1)
        .map(|&(_, v)| BoundaryEdge {
            v,
            tag: classify(vertices[v[0]], vertices[v[1]]),
        })
        .collect();
    edges.sort_by_key(|e| (e.tag, e.v));

    let (master_tag, slave_tag) = match periodicity {
        Periodicity::Lateral => (EdgeTag::Left, EdgeTag::Right),
        Periodicity::Vertical { .. } => (EdgeTag::Bottom, EdgeTag::Top),
    };
    let coord = |p: [f64; 2]| match periodicity {
        Periodicity::Lateral => p[1],
        Periodicity::Vertical { .. } => p[0],
    };
    let collect = |tag: EdgeTag| {
        let mut v: Vec<usize> = edges.iter().filter(|e| e.tag == tag).flat_map(|e| e.v).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let slaves: HashMap<u64, usize> = collect(slave_tag)
        .into_iter()
        .map(|i| ((coord(vertices[i]) + 0.0).to_bits(), i))
        .collect();
    let masters = collect(master_tag);
    if masters.len() != slaves.len() {
        return Err(Error::Mesh(format!(
            "periodic sides carry {} and {} vertices",
            masters.len(),
            slaves.len()
        )));
    }
    let mut pairs = Vec::with_capacity(masters.len());
    for m in masters {
        let c = coord(vertices[m]);
        let s = slaves
            .get(&(c + 0.0).to_bits())
            .ok_or_else(|| Error::Mesh(format!("no periodic partner for coordinate {c}")))?;
        pairs.push((m, *s));
    }
    pairs.sort_by(|a, b| coord(vertices[a.0]).total_cmp(&coord(vertices[b.0])));
    let mesh = Mesh {
        vertices,
        triangles,
        edges,
        pairs,
        periodicity,
        h,
    };
    mesh.check()?;
    Ok(mesh)
}

fn max_area(h: f64) -> f64 {
    h * h * 3f64.sqrt() / 4.0
}

/// Structured mesh of `[x0, x1] x [0, height]` with uniform diagonals.
fn structured(x0: f64, x1: f64, height: f64, h: f64) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let nx = ((x1 - x0) / h - 1e-9).ceil().max(1.0) as usize;
    let ny = (height / h - 1e-9).ceil().max(1.0) as usize;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = lerp(0.0, height, j as f64 / ny as f64);
        for i in 0..=nx {
            vertices.push([lerp(x0, x1, i as f64 / nx as f64), y]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    (vertices, triangles)
}

/// Triangulation of the perforated cell `(-1/2,1/2) x (0,H)` minus the
/// `N` scaled holes, with matched lateral sides.
pub fn build_perforated_mesh(cell: &PerforatedCell, opts: MeshOptions) -> Result<Mesh> {
    let h = opts.h;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Mesh(format!("element size must be positive, got {h}")));
    }
    let height = cell.height;
    cell.hole.validate(height)?;
    let classify = move |p: [f64; 2], q: [f64; 2]| {
        if p[0] == -0.5 && q[0] == -0.5 {
            EdgeTag::Left
        } else if p[0] == 0.5 && q[0] == 0.5 {
            EdgeTag::Right
        } else if p[1] == 0.0 && q[1] == 0.0 {
            EdgeTag::Bottom
        } else if p[1] == height && q[1] == height {
            EdgeTag::Top
        } else {
            EdgeTag::Hole
        }
    };
    if cell.hole.is_empty() {
        let (v, t) = structured(-0.5, 0.5, height, h);
        return finish(v, t, Periodicity::Lateral, h, &classify);
    }

    let eps = cell.epsilon();
    let segs = cell.hole_segments(opts);
    let reference = cell.hole.polygonize(segs);
    let seg_len = reference
        .iter()
        .zip(reference.iter().cycle().skip(1))
        .map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1]))
        .fold(0.0, f64::max)
        * eps;
    let c = cell.hole.center();
    let r = cell.hole.radius();
    let envelopes: Vec<([f64; 2], f64, f64)> = (0..cell.n)
        .map(|k| {
            (
                [eps * c[0], eps * c[1] + eps * k as f64 * height],
                eps * r,
                seg_len.min(eps / 8.0),
            )
        })
        .collect();
    let sizing = Sizing { h, holes: &envelopes };

    let mut g = Pslg::default();
    let both = |p: [f64; 2]| sizing.at(p).min(sizing.at([-p[0], p[1]]));
    let side = graded_params([-0.5, 0.0], [-0.5, height], &|p| both(p));
    let ys: Vec<f64> = side.iter().map(|&t| lerp(0.0, height, t)).collect();
    let bottom = graded_params([-0.5, 0.0], [0.5, 0.0], &|p| sizing.at(p));
    let top = graded_params([0.5, height], [-0.5, height], &|p| sizing.at(p));

    let mut outer: Vec<[f64; 2]> = bottom.iter().map(|&t| [lerp(-0.5, 0.5, t), 0.0]).collect();
    outer.extend(ys.iter().skip(1).map(|&y| [0.5, y]));
    outer.extend(top.iter().skip(1).map(|&t| [lerp(0.5, -0.5, t), height]));
    outer.extend(ys.iter().rev().skip(1).map(|&y| [-0.5, y]));
    outer.pop();
    g.chain(&outer, true);
    g.matched.push((0, -0.5, 0.5));

    for k in 0..cell.n {
        let shift = eps * k as f64 * height;
        let poly: Vec<[f64; 2]> = reference.iter().map(|p| [eps * p[0], eps * p[1] + shift]).collect();
        g.chain(&poly, true);
        g.holes.push(poly);
    }
    let (v, t) = g.triangulate(max_area(h), &|p| sizing.at(p))?;
    finish(v, t, Periodicity::Lateral, h, &classify)
}

/// Half-width of the Delaunay core of the strip mesh; beyond it the strip is
/// filled by structured columns.
pub fn strip_core_half_width(height: f64, r_enclose: f64, h: f64) -> f64 {
    ((r_enclose + height / 2.0) / h - 1e-9).ceil() * h
}

/// Triangulation of `(-L, L) x (0, H)` minus the reference hole, periodic in
/// `xi2`. The length `L` is rounded up so that the structured end columns have
/// width `h`; meshes built with the same `h` and a larger `L` contain this one.
pub fn build_strip_mesh(height: f64, hole: &HoleShape, length: f64, opts: MeshOptions) -> Result<Mesh> {
    let h = opts.h;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Mesh(format!("element size must be positive, got {h}")));
    }
    let rep = hole.validate(height)?;
    if length < 4.0 * rep.r_enclose || !(length > 0.0) {
        return Err(Error::Mesh(format!(
            "strip half-length {length} is below 4R = {}",
            4.0 * rep.r_enclose
        )));
    }
    let periodicity = Periodicity::Vertical { period: height };

    if hole.is_empty() {
        let nx = (length / h - 1e-9).ceil();
        let l = nx * h;
        let (v, t) = structured(-l, l, height, h);
        return finish(v, t, periodicity, h, &strip_classifier(l, height));
    }

    let a = strip_core_half_width(height, rep.r_enclose, h).min((length / h - 1e-9).ceil() * h);
    let ny = (height / h - 1e-9).ceil().max(1.0) as usize;
    let ys: Vec<f64> = (0..=ny).map(|j| lerp(0.0, height, j as f64 / ny as f64)).collect();

    let segs = opts
        .hole_segments
        .unwrap_or_else(|| HoleShape::default_segments(hole.radius(), h));
    let poly = hole.polygonize(segs);
    let seg_len = poly
        .iter()
        .zip(poly.iter().cycle().skip(1))
        .map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1]))
        .fold(0.0, f64::max);
    let env = [(hole.center(), hole.radius(), seg_len)];
    let sizing = Sizing { h, holes: &env };
    let both = |p: [f64; 2]| sizing.at(p).min(sizing.at([p[0], height - p[1]]));

    let (mut vertices, mut triangles) = if hole.is_xi1_symmetric() {
        half_core(height, a, &poly, &ys, &both)?
    } else {
        full_core(height, a, &poly, &ys, &both)?
    };

    let nx = ((length - a) / h - 1e-9).ceil().max(0.0) as usize;
    let l = a + nx as f64 * h;
    for sign in [1.0, -1.0] {
        let cols: Vec<f64> = (0..=nx).map(|i| sign * (a + i as f64 * h)).collect();
        // continue whatever ordinates the core ended up with on this side
        let mut side: Vec<f64> = vertices.iter().filter(|p| p[0] == cols[0]).map(|p| p[1]).collect();
        side.sort_by(f64::total_cmp);
        side.dedup();
        append_columns(&mut vertices, &mut triangles, &cols, &side);
    }
    let (v, t) = merge_duplicates(vertices, triangles);
    finish(v, t, periodicity, h, &strip_classifier(l, height))
}

fn strip_classifier(l: f64, height: f64) -> impl Fn([f64; 2], [f64; 2]) -> EdgeTag {
    move |p, q| {
        if p[0] == -l && q[0] == -l {
            EdgeTag::Left
        } else if p[0] == l && q[0] == l {
            EdgeTag::Right
        } else if p[1] == 0.0 && q[1] == 0.0 {
            EdgeTag::Bottom
        } else if p[1] == height && q[1] == height {
            EdgeTag::Top
        } else {
            EdgeTag::Hole
        }
    }
}

fn bottom_top(g: &mut Pslg, x0: f64, x1: f64, height: f64, size: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
    let params = graded_params([x0, 0.0], [x1, 0.0], size);
    let xs: Vec<f64> = params.iter().map(|&t| lerp(x0, x1, t)).collect();
    let bottom: Vec<[f64; 2]> = xs.iter().map(|&x| [x, 0.0]).collect();
    let top: Vec<[f64; 2]> = xs.iter().map(|&x| [x, height]).collect();
    g.chain(&bottom, false);
    g.chain(&top, false);
    xs
}

fn full_core(
    height: f64,
    a: f64,
    poly: &[[f64; 2]],
    ys: &[f64],
    size: &dyn Fn([f64; 2]) -> f64,
) -> Result<(Vec<[f64; 2]>, Vec<[usize; 3]>)> {
    let mut g = Pslg::default();
    g.matched.push((1, 0.0, height));
    bottom_top(&mut g, -a, a, height, size);
    let right: Vec<[f64; 2]> = ys.iter().map(|&y| [a, y]).collect();
    let left: Vec<[f64; 2]> = ys.iter().map(|&y| [-a, y]).collect();
    g.chain(&right, false);
    g.chain(&left, false);
    g.chain(poly, true);
    g.holes.push(poly.to_vec());
    g.triangulate(max_area(g_h(ys, height)), size)
}

fn g_h(ys: &[f64], height: f64) -> f64 {
    height / (ys.len() - 1) as f64
}

/// Meshes `[0, a] x [0, H]` minus the right half of the hole and reflects it.
fn half_core(
    height: f64,
    a: f64,
    poly: &[[f64; 2]],
    ys: &[f64],
    size: &dyn Fn([f64; 2]) -> f64,
) -> Result<(Vec<[f64; 2]>, Vec<[usize; 3]>)> {
    // right half of the hole boundary, with the two crossings of xi1 = 0
    let n = poly.len();
    let mut chain: Vec<[f64; 2]> = Vec::new();
    let start = (0..n)
        .find(|&i| poly[i][0] < 0.0 && poly[(i + 1) % n][0] > 0.0)
        .ok_or_else(|| Error::Mesh("symmetric hole does not cross xi1 = 0".into()))?;
    for s in 0..=n {
        let i = (start + s) % n;
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        if p[0] > 0.0 {
            chain.push(p);
        }
        if (p[0] < 0.0) != (q[0] < 0.0) {
            let y = p[1] + (0.0 - p[0]) * (q[1] - p[1]) / (q[0] - p[0]);
            chain.push([0.0, y]);
            if chain.len() > 1 {
                break;
            }
        }
    }
    let (y_lo, y_hi) = (chain[0][1], chain[chain.len() - 1][1]);
    let (y_lo, y_hi) = (y_lo.min(y_hi), y_lo.max(y_hi));

    let mut g = Pslg::default();
    g.matched.push((1, 0.0, height));
    bottom_top(&mut g, 0.0, a, height, size);
    let right: Vec<[f64; 2]> = ys.iter().map(|&y| [a, y]).collect();
    g.chain(&right, false);
    let lower = graded_params([0.0, 0.0], [0.0, y_lo], size);
    let lower: Vec<[f64; 2]> = lower.iter().map(|&t| [0.0, lerp(0.0, y_lo, t)]).collect();
    let upper = graded_params([0.0, y_hi], [0.0, height], size);
    let upper: Vec<[f64; 2]> = upper.iter().map(|&t| [0.0, lerp(y_hi, height, t)]).collect();
    g.chain(&lower, false);
    g.chain(&upper, false);
    g.chain(&chain, false);
    let mut cut = chain.clone();
    cut.push([-1.0, chain[chain.len() - 1][1]]);
    cut.push([-1.0, chain[0][1]]);
    g.holes.push(cut);
    let (v, t) = g.triangulate(max_area(g_h(ys, height)), size)?;
    if v.iter().any(|p| p[0] < 0.0) {
        return Err(Error::Mesh("half-core mesh crossed the symmetry line".into()));
    }

    let mut vertices = v.clone();
    let mut mirror = vec![0usize; v.len()];
    for (i, p) in v.iter().enumerate() {
        mirror[i] = if p[0] == 0.0 {
            i
        } else {
            vertices.push([-p[0], p[1]]);
            vertices.len() - 1
        };
    }
    let mut triangles = t.clone();
    triangles.extend(t.iter().map(|&[p, q, r]| [mirror[p], mirror[r], mirror[q]]));
    Ok((vertices, triangles))
}

fn append_columns(vertices: &mut Vec<[f64; 2]>, triangles: &mut Vec<[usize; 3]>, cols: &[f64], ys: &[f64]) {
    if cols.len() < 2 {
        return;
    }
    let base = vertices.len();
    let ny = ys.len();
    for &x in cols {
        for &y in ys {
            vertices.push([x, y]);
        }
    }
    let id = |i: usize, j: usize| base + i * ny + j;
    let flip = cols[1] < cols[0];
    for i in 0..cols.len() - 1 {
        for j in 0..ny - 1 {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if flip {
                triangles.push([a, c, b]);
                triangles.push([a, d, c]);
            } else {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
    }
}

fn merge_duplicates(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let mut index: HashMap<(u64, u64), usize> = HashMap::new();
    let mut out = Vec::new();
    let map: Vec<usize> = vertices
        .iter()
        .map(|&p| {
            let n = out.len();
            *index.entry(key(p)).or_insert_with(|| {
                out.push([p[0] + 0.0, p[1] + 0.0]);
                n
            })
        })
        .collect();
    let tris = triangles.into_iter().map(|t| t.map(|i| map[i])).collect();
    (out, tris)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_params_are_monotone() {
        let t = graded_params([0.0, 0.0], [1.0, 0.0], &|p| 0.01 + 0.3 * p[0]);
        assert_eq!(t[0], 0.0);
        assert_eq!(*t.last().unwrap(), 1.0);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        // finer at the left end
        assert!(t[1] - t[0] < t[t.len() - 1] - t[t.len() - 2]);
    }

    #[test]
    fn structured_rectangle() {
        let cell = PerforatedCell::new(0.3, 1, HoleShape::empty()).unwrap();
        let m = build_perforated_mesh(&cell, MeshOptions::new(0.1)).unwrap();
        assert_eq!(m.n_vertices(), 11 * 4);
        assert_eq!(m.pairs.len(), 4);
        assert!((m.area() - 0.3).abs() < 1e-14);
        assert_eq!(m.hole_loops(), 0);
    }
}
