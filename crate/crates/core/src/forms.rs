//! Element-local blocks of the bilinear forms and load vectors.
//!
//! With `K = [[A, -B], [B^T, S2]]` on a single element (vector unknowns first),
//! the local problem reads `a(u, v) - b(v, p) = (f, v0)` and
//! `b(u, q) + s2(p, q) = -(g, q0)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, WgError};
use crate::mesh::{Mesh, Vec3};
use crate::weakcalc::{weak_curl_matrix, weak_gradient_matrix, Element};

pub type VectorField = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;

/// Piecewise constant coefficient `nu = mu / eps`.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Uniform(f64),
    PerCell(Vec<f64>),
}

impl Coefficient {
    pub fn at(&self, cell: usize) -> f64 {
        match self {
            Self::Uniform(v) => *v,
            Self::PerCell(v) => v[cell],
        }
    }

    fn validate(&self, mesh: &Mesh) -> Result<()> {
        let ok = match self {
            Self::Uniform(v) => v.is_finite() && *v > 0.0,
            Self::PerCell(v) => {
                v.len() == mesh.num_cells() && v.iter().all(|x| x.is_finite() && *x > 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(WgError::InvalidArgument(
                "nu must be positive on every cell".into(),
            ))
        }
    }
}

/// Coefficients and data of one boundary value problem.
#[derive(Clone)]
pub struct ProblemData {
    pub nu: Coefficient,
    pub f: VectorField,
    pub g: ScalarField,
    /// Field whose tangential trace is imposed on the boundary.
    pub boundary_u: Option<VectorField>,
    /// Field whose trace is imposed on the boundary `p_b`.
    pub boundary_p: Option<ScalarField>,
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("nu", &self.nu)
            .field("boundary_u", &self.boundary_u.is_some())
            .field("boundary_p", &self.boundary_p.is_some())
            .finish_non_exhaustive()
    }
}

impl ProblemData {
    /// All data zero and `nu = 1`.
    pub fn homogeneous() -> Self {
        Self {
            nu: Coefficient::Uniform(1.0),
            f: Arc::new(|_| Vec3::zeros()),
            g: Arc::new(|_| 0.0),
            boundary_u: Some(Arc::new(|_| Vec3::zeros())),
            boundary_p: Some(Arc::new(|_| 0.0)),
        }
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        self.nu.validate(mesh)
    }
}

/// Load-independent local matrices with unit coefficient.
#[derive(Debug, Clone)]
pub struct LocalMatrices {
    pub a_curl: DMatrix<f64>,
    pub s1: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub s2: DMatrix<f64>,
}

impl LocalMatrices {
    pub fn new(el: &Element) -> Result<Self> {
        Ok(Self {
            a_curl: local_curl_curl(el)?,
            s1: local_s1(el),
            b: local_b(el)?,
            s2: local_s2(el),
        })
    }
}

/// Local matrices and loads of one element.
#[derive(Debug, Clone)]
pub struct LocalBlocks {
    /// `nu * curl part + s1`
    pub a: DMatrix<f64>,
    pub a_curl: DMatrix<f64>,
    pub s1: DMatrix<f64>,
    /// `b(v, q) = v^T B q`; only the interior vector rows are nonzero.
    pub b: DMatrix<f64>,
    pub s2: DMatrix<f64>,
    pub fv: DVector<f64>,
    pub gq: DVector<f64>,
}

impl LocalBlocks {
    pub fn new(el: &Element, nu: f64, data: &ProblemData) -> Result<Self> {
        Ok(Self::from_matrices(
            &LocalMatrices::new(el)?,
            nu,
            local_loads(el, data),
        ))
    }

    /// Combines precomputed matrices (valid for any translate of the element
    /// they were built on) with a coefficient and loads.
    pub fn from_matrices(
        m: &LocalMatrices,
        nu: f64,
        (fv, gq): (DVector<f64>, DVector<f64>),
    ) -> Self {
        Self {
            a: &m.a_curl * nu + &m.s1,
            a_curl: m.a_curl.clone(),
            s1: m.s1.clone(),
            b: m.b.clone(),
            s2: m.s2.clone(),
            fv,
            gq,
        }
    }

    /// Element saddle matrix `[[A, -B], [B^T, S2]]`.
    pub fn saddle(&self) -> DMatrix<f64> {
        let (nv, ns) = (self.a.nrows(), self.s2.nrows());
        let mut k = DMatrix::zeros(nv + ns, nv + ns);
        k.view_mut((0, 0), (nv, nv)).copy_from(&self.a);
        k.view_mut((0, nv), (nv, ns)).copy_from(&(-&self.b));
        k.view_mut((nv, 0), (ns, nv)).copy_from(&self.b.transpose());
        k.view_mut((nv, nv), (ns, ns)).copy_from(&self.s2);
        k
    }

    pub fn rhs(&self) -> DVector<f64> {
        let mut r = DVector::zeros(self.fv.len() + self.gq.len());
        r.rows_mut(0, self.fv.len()).copy_from(&self.fv);
        r.rows_mut(self.fv.len(), self.gq.len()).copy_from(&self.gq);
        r
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// `(curl_w v, curl_w w)` with unit coefficient.
pub fn local_curl_curl(el: &Element) -> Result<DMatrix<f64>> {
    let c = weak_curl_matrix(el)?;
    let mut m = c.matrix.transpose() * &c.moments;
    symmetrize(&mut m);
    Ok(m)
}

/// `h^-1 <(v0 - vb) x n, (w0 - wb) x n>` summed over the element faces.
pub fn local_s1(el: &Element) -> DMatrix<f64> {
    let lay = el.layout;
    let nk = lay.cell_k;
    let mut s = DMatrix::zeros(lay.vec_dim(), lay.vec_dim());
    let scale = 1.0 / el.h();
    let mut d = DVector::zeros(lay.vec_dim());
    for (lf, ef) in el.faces.iter().enumerate() {
        let off = lay.vec_face_offset(lf);
        for (x, &w) in ef.rule.points.iter().zip(&ef.rule.weights) {
            let phi = el.vec_basis.eval(x);
            let mu = ef.vec_basis.eval(x);
            for (t, tan) in [ef.face.t1, ef.face.t2].iter().enumerate() {
                d.fill(0.0);
                for c in 0..3 {
                    for (i, p) in phi.iter().enumerate() {
                        d[c * nk + i] = tan[c] * p;
                    }
                }
                for (m, u) in mu.iter().enumerate() {
                    d[off + t * lay.face_k + m] = -u;
                }
                s.ger(scale * w, &d, &d, 1.0);
            }
        }
    }
    symmetrize(&mut s);
    s
}

/// `b(v, q) = (v0, grad_w q)`: the weak-gradient moments placed in the
/// interior vector rows.
pub fn local_b(el: &Element) -> Result<DMatrix<f64>> {
    let lay = el.layout;
    let g = weak_gradient_matrix(el)?;
    let mut b = DMatrix::zeros(lay.vec_dim(), lay.scalar_dim());
    b.view_mut((0, 0), (lay.vec_interior(), lay.scalar_dim()))
        .copy_from(&g.moments);
    Ok(b)
}

/// `h <p0 - pb, q0 - qb>` summed over the element faces.
pub fn local_s2(el: &Element) -> DMatrix<f64> {
    let lay = el.layout;
    let mut s = DMatrix::zeros(lay.scalar_dim(), lay.scalar_dim());
    let mut d = DVector::zeros(lay.scalar_dim());
    for (lf, ef) in el.faces.iter().enumerate() {
        let off = lay.scalar_face_offset(lf);
        for (x, &w) in ef.rule.points.iter().zip(&ef.rule.weights) {
            d.fill(0.0);
            for (i, p) in el.scalar_basis.eval(x).iter().enumerate() {
                d[i] = *p;
            }
            for (m, u) in ef.scalar_basis.eval(x).iter().enumerate() {
                d[off + m] = -u;
            }
            s.ger(el.h() * w, &d, &d, 1.0);
        }
    }
    symmetrize(&mut s);
    s
}

/// `Fv_i = (f, phi_i)` over interior vector basis functions and
/// `Gq_j = -(g, psi_j)` over interior scalar basis functions, zero-padded to
/// the full local layouts.
pub fn local_loads(el: &Element, data: &ProblemData) -> (DVector<f64>, DVector<f64>) {
    let lay = el.layout;
    let nk = lay.cell_k;
    let mut fv = DVector::zeros(lay.vec_dim());
    let mut gq = DVector::zeros(lay.scalar_dim());
    for (x, &w) in el.rule.points.iter().zip(&el.rule.weights) {
        let fx = (data.f)(x);
        for (i, p) in el.vec_basis.eval(x).iter().enumerate() {
            for c in 0..3 {
                fv[c * nk + i] += w * fx[c] * p;
            }
        }
        let gx = (data.g)(x);
        for (j, p) in el.scalar_basis.eval(x).iter().enumerate() {
            gq[j] -= w * gx * p;
        }
    }
    (fv, gq)
}
