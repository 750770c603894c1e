use super::mesh::Mesh;

/// Uniform bucket grid over triangle bounding boxes.
#[derive(Debug, Clone)]
pub struct PointLocator {
    lo: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<u32>>,
}

impl PointLocator {
    pub fn new(mesh: &Mesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &mesh.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let n = (mesh.triangles.len() as f64).sqrt().ceil().max(1.0);
        let span = [(hi[0] - lo[0]).max(1e-300), (hi[1] - lo[1]).max(1e-300)];
        let aspect = span[0] / span[1];
        let nx = (n * aspect.sqrt()).ceil().clamp(1.0, 4096.0) as usize;
        let ny = (n / aspect.sqrt()).ceil().clamp(1.0, 4096.0) as usize;
        let cell = [span[0] / nx as f64, span[1] / ny as f64];
        let mut buckets = vec![Vec::new(); nx * ny];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let p = tri.map(|i| mesh.vertices[i]);
            let (mut a, mut b) = ([usize::MAX; 2], [0usize; 2]);
            for q in p {
                for d in 0..2 {
                    let dim = [nx, ny][d];
                    let k = (((q[d] - lo[d]) / cell[d]).floor().max(0.0) as usize).min(dim - 1);
                    a[d] = a[d].min(k);
                    b[d] = b[d].max(k);
                }
            }
            for j in a[1]..=b[1] {
                for i in a[0]..=b[0] {
                    buckets[j * nx + i].push(t as u32);
                }
            }
        }
        Self {
            lo,
            cell,
            dims: [nx, ny],
            buckets,
        }
    }

    /// Triangle containing `p` and its barycentric coordinates. Points within
    /// `tol` (in barycentric units) outside a triangle are accepted; among
    /// several candidates the least violating one wins.
    pub fn locate(&self, mesh: &Mesh, p: [f64; 2], tol: f64) -> Option<(usize, [f64; 3])> {
        let i = ((p[0] - self.lo[0]) / self.cell[0]).floor();
        let j = ((p[1] - self.lo[1]) / self.cell[1]).floor();
        if i < -1.0 || j < -1.0 || i > self.dims[0] as f64 || j > self.dims[1] as f64 {
            return None;
        }
        let i = (i.max(0.0) as usize).min(self.dims[0] - 1);
        let j = (j.max(0.0) as usize).min(self.dims[1] - 1);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.dims[0] + i] {
            let t = t as usize;
            let bary = barycentric(mesh, t, p);
            let worst = bary.iter().fold(0.0f64, |m, &b| m.max(-b));
            if worst <= tol && best.as_ref().is_none_or(|b| worst < b.2) {
                best = Some((t, bary, worst));
                if worst == 0.0 {
                    break;
                }
            }
        }
        best.map(|(t, b, _)| (t, b))
    }
}

pub(crate) fn barycentric(mesh: &Mesh, t: usize, p: [f64; 2]) -> [f64; 3] {
    let [a, b, c] = mesh.triangles[t].map(|i| mesh.vertices[i]);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (p[1] - a[1]) * (c[0] - a[0])) / det;
    let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])) / det;
    [1.0 - l1 - l2, l1, l2]
}
