//! Piecewise linear finite elements with quasi-periodic coupling.

mod eigen;
pub mod io;
mod richardson;

pub use eigen::{solve_lowest, solve_lowest_with, EigResult, EigenOptions};
pub use richardson::{clusters, richardson, solve_extrapolated, Extrapolated, RichardsonSolver};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Mesh, Periodicity};
use crate::linalg::{CsrMatrix, Scalar, TripletBuilder};

/// Elimination of slave vertices: `u(slave) = phase * u(master)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap<T> {
    /// Degree of freedom carrying each vertex.
    pub dof_of_vertex: Vec<usize>,
    /// Coefficient applied to that dof at each vertex: 1 or `phase`.
    pub coeff: Vec<T>,
    /// A representative (non-slave) vertex for each dof.
    pub vertex_of_dof: Vec<usize>,
    pub phase: T,
}

impl<T: Scalar> DofMap<T> {
    pub fn new(mesh: &Mesh, phase: T) -> Result<Self> {
        if mesh.pairs.is_empty() {
            return Err(Error::Mesh("mesh carries no periodic pairing".into()));
        }
        if (phase.abs2() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain("phase factor must have unit modulus".into()));
        }
        let n = mesh.n_vertices();
        let mut master_of = vec![usize::MAX; n];
        for &(m, s) in &mesh.pairs {
            master_of[s] = m;
        }
        let mut dof_of_vertex = vec![usize::MAX; n];
        let mut vertex_of_dof = Vec::new();
        for v in 0..n {
            if master_of[v] == usize::MAX {
                dof_of_vertex[v] = vertex_of_dof.len();
                vertex_of_dof.push(v);
            }
        }
        let mut coeff = vec![T::from_real(1.0); n];
        for v in 0..n {
            let m = master_of[v];
            if m != usize::MAX {
                if master_of[m] != usize::MAX {
                    return Err(Error::Mesh(format!("vertex {m} is both master and slave")));
                }
                dof_of_vertex[v] = dof_of_vertex[m];
                coeff[v] = phase;
            }
        }
        Ok(Self {
            dof_of_vertex,
            coeff,
            vertex_of_dof,
            phase,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.vertex_of_dof.len()
    }

    /// Nodal values at every vertex from reduced coefficients.
    pub fn expand(&self, u: &[T]) -> Vec<T> {
        self.dof_of_vertex
            .iter()
            .zip(&self.coeff)
            .map(|(&d, &c)| c * u[d])
            .collect()
    }

    /// Reduced coefficients from nodal values (slave values are ignored).
    pub fn restrict(&self, nodal: &[T]) -> Vec<T> {
        self.vertex_of_dof.iter().map(|&v| nodal[v]).collect()
    }
}

/// Exact P1 element matrices of a triangle: `(stiffness, mass)`.
pub fn element_matrices(p: [[f64; 2]; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]));
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let mut k = [[0.0; 3]; 3];
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
            m[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    (k, m)
}

/// Reduced stiffness and mass matrices; they share one sparsity pattern.
pub fn assemble_generic<T: Scalar>(mesh: &Mesh, dofmap: &DofMap<T>) -> Result<(CsrMatrix<T>, CsrMatrix<T>)> {
    let n = dofmap.n_dofs();
    let mut kb = TripletBuilder::with_capacity(n, 9 * mesh.triangles.len());
    let mut mb = TripletBuilder::with_capacity(n, 9 * mesh.triangles.len());
    for tri in &mesh.triangles {
        let (ke, me) = element_matrices(tri.map(|v| mesh.vertices[v]));
        for a in 0..3 {
            let (da, ca) = (dofmap.dof_of_vertex[tri[a]], dofmap.coeff[tri[a]]);
            for b in 0..3 {
                let (db, cb) = (dofmap.dof_of_vertex[tri[b]], dofmap.coeff[tri[b]]);
                let w = ca.conj() * cb;
                kb.push(da, db, w.scale(ke[a][b]));
                mb.push(da, db, w.scale(me[a][b]));
            }
        }
    }
    let (k, m) = (kb.build(), mb.build());
    if k.vals.iter().chain(&m.vals).any(|v| !v.is_finite()) {
        return Err(Error::Mesh("non-finite matrix entry (degenerate triangle?)".into()));
    }
    Ok((k, m))
}

/// Quasi-periodically coupled stiffness/mass pair on a perforated-cell mesh.
#[derive(Debug, Clone)]
pub struct HermitianPair {
    pub k: CsrMatrix<Complex64>,
    pub m: CsrMatrix<Complex64>,
    pub dofmap: DofMap<Complex64>,
    pub eta: f64,
}

/// Stiffness and mass for the Floquet parameter `eta`; slave values carry the
/// factor `e^{i eta}`.
pub fn assemble(mesh: &Mesh, eta: f64) -> Result<HermitianPair> {
    if mesh.periodicity != Periodicity::Lateral {
        return Err(Error::Mesh(
            "quasi-periodic assembly needs a laterally paired mesh".into(),
        ));
    }
    let dofmap = DofMap::new(mesh, Complex64::from_polar(1.0, eta))?;
    let (k, m) = assemble_generic(mesh, &dofmap)?;
    Ok(HermitianPair { k, m, dofmap, eta })
}

impl HermitianPair {
    pub fn n_dofs(&self) -> usize {
        self.dofmap.n_dofs()
    }

    /// `K + M`, the matrix of the energy inner product.
    pub fn energy_matrix(&self) -> CsrMatrix<Complex64> {
        self.k.combine_same_pattern(1.0, &self.m, 1.0)
    }

    fn check_dims(&self, u: &[Complex64], v: &[Complex64]) -> Result<()> {
        if u.len() != self.n_dofs() || v.len() != self.n_dofs() {
            return Err(Error::Domain(format!(
                "vector lengths {} and {} do not match {} dofs",
                u.len(),
                v.len(),
                self.n_dofs()
            )));
        }
        Ok(())
    }

    /// `u^H (K + M) v`
    pub fn h1_product(&self, u: &[Complex64], v: &[Complex64]) -> Result<Complex64> {
        self.check_dims(u, v)?;
        Ok(self.k.form(u, v) + self.m.form(u, v))
    }

    /// `u^H M v`
    pub fn l2_product(&self, u: &[Complex64], v: &[Complex64]) -> Result<Complex64> {
        self.check_dims(u, v)?;
        Ok(self.m.form(u, v))
    }
}
