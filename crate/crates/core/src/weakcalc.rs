//! Element-local discrete weak gradient and weak curl, and the L2
//! projections onto the weak function spaces.
//!
//! A local weak vector is stored as `[v0 | face 0 | ... | face 5]` where `v0`
//! holds `3 * dim P_k(T)` coefficients (component-major) and each face holds
//! `(v1, v2)` in the face frame, `dim P_k(e)` coefficients each. A local weak
//! scalar is `[q0 | face 0 | ... | face 5]` with `q0` in `P_{k-1}(T)` (or `P_0`)
//! and `q_b` in `P_k(e)` (or `P_0(e)`).

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Result, WgError};
use crate::mesh::{Cell, Face, Mesh, Vec3, LOCAL_FACES};
use crate::polybasis::{
    cell_mass_matrix, cell_quadrature, dim_p2, dim_p3, face_mass_matrix, face_quadrature,
    spd_solve, CellBasis, FaceBasis, QuadRule,
};

/// Polynomial degrees of the scalar space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarVariant {
    /// `P_{k-1}(T) x P_k(e)`
    Full,
    /// `P_0(T) x P_0(e)`
    Lowest,
}

impl FromStr for ScalarVariant {
    type Err = WgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "lowest" => Ok(Self::Lowest),
            other => Err(WgError::InvalidArgument(format!(
                "unknown variant '{other}', expected full or lowest"
            ))),
        }
    }
}

impl std::fmt::Display for ScalarVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Full => "full",
            Self::Lowest => "lowest",
        })
    }
}

/// Discretization parameters shared by every element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Scheme {
    pub k: usize,
    pub variant: ScalarVariant,
    /// Gauss points per direction for cell and face integrals.
    pub quad: usize,
}

impl Scheme {
    pub fn new(k: usize, variant: ScalarVariant) -> Result<Self> {
        if k < 1 {
            return Err(WgError::InvalidArgument(format!(
                "polynomial order must be >= 1, got {k}"
            )));
        }
        if k > 5 {
            return Err(WgError::InvalidArgument(format!(
                "polynomial order {k} is not supported"
            )));
        }
        Ok(Self {
            k,
            variant,
            quad: k + 3,
        })
    }

    pub fn with_quad(mut self, quad: usize) -> Result<Self> {
        if quad < self.k + 1 {
            return Err(WgError::InvalidArgument(format!(
                "quadrature with {quad} points per direction cannot integrate degree-{} products",
                2 * self.k
            )));
        }
        self.quad = quad;
        Ok(self)
    }

    pub fn scalar_interior_degree(&self) -> usize {
        match self.variant {
            ScalarVariant::Full => self.k - 1,
            ScalarVariant::Lowest => 0,
        }
    }

    pub fn scalar_face_degree(&self) -> usize {
        match self.variant {
            ScalarVariant::Full => self.k,
            ScalarVariant::Lowest => 0,
        }
    }

    pub fn layout(&self) -> LocalLayout {
        LocalLayout {
            cell_k: dim_p3(self.k),
            cell_km1: dim_p3(self.k - 1),
            face_k: dim_p2(self.k),
            scalar_cell: dim_p3(self.scalar_interior_degree()),
            scalar_face: dim_p2(self.scalar_face_degree()),
        }
    }
}

/// Sizes of the local coefficient blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalLayout {
    pub cell_k: usize,
    pub cell_km1: usize,
    pub face_k: usize,
    pub scalar_cell: usize,
    pub scalar_face: usize,
}

impl LocalLayout {
    pub fn vec_interior(&self) -> usize {
        3 * self.cell_k
    }

    pub fn vec_face(&self) -> usize {
        2 * self.face_k
    }

    pub fn vec_dim(&self) -> usize {
        self.vec_interior() + LOCAL_FACES * self.vec_face()
    }

    pub fn vec_face_offset(&self, local_face: usize) -> usize {
        self.vec_interior() + local_face * self.vec_face()
    }

    pub fn scalar_dim(&self) -> usize {
        self.scalar_cell + LOCAL_FACES * self.scalar_face
    }

    pub fn scalar_face_offset(&self, local_face: usize) -> usize {
        self.scalar_cell + local_face * self.scalar_face
    }

    /// Rows of the weak curl: `[P_{k-1}(T)]^3`.
    pub fn curl_dim(&self) -> usize {
        3 * self.cell_km1
    }
}

/// One face of an element, seen from that element.
#[derive(Debug, Clone)]
pub struct ElementFace {
    pub face: Face,
    pub outward: Vec3,
    pub rule: QuadRule,
    pub vec_basis: FaceBasis,
    pub scalar_basis: FaceBasis,
}

/// Bases and quadrature for one cell.
#[derive(Debug, Clone)]
pub struct Element {
    pub cell: Cell,
    pub scheme: Scheme,
    pub layout: LocalLayout,
    pub rule: QuadRule,
    /// `P_k(T)`
    pub vec_basis: CellBasis,
    /// `P_{k-1}(T)`, range of the weak curl
    pub curl_basis: CellBasis,
    /// interior scalar space
    pub scalar_basis: CellBasis,
    pub faces: Vec<ElementFace>,
}

impl Element {
    pub fn new(mesh: &Mesh, cell: usize, scheme: Scheme) -> Result<Self> {
        let c = mesh.cell(cell)?.clone();
        let faces = c
            .faces
            .iter()
            .zip(&c.signs)
            .map(|(&f, &sign)| {
                let face = mesh.faces[f].clone();
                ElementFace {
                    outward: face.normal * sign,
                    rule: face_quadrature(&face, scheme.quad),
                    vec_basis: FaceBasis::new(&face, scheme.k),
                    scalar_basis: FaceBasis::new(&face, scheme.scalar_face_degree()),
                    face,
                }
            })
            .collect();
        Ok(Self {
            rule: cell_quadrature(&c, scheme.quad),
            vec_basis: CellBasis::new(&c, scheme.k),
            curl_basis: CellBasis::new(&c, scheme.k - 1),
            scalar_basis: CellBasis::new(&c, scheme.scalar_interior_degree()),
            layout: scheme.layout(),
            scheme,
            cell: c,
            faces,
        })
    }

    pub fn h(&self) -> f64 {
        self.cell.h
    }
}

/// Block-diagonal `[P_r]^3` mass matrix from a scalar mass matrix.
pub fn vector_mass(scalar: &DMatrix<f64>) -> DMatrix<f64> {
    let n = scalar.nrows();
    let mut m = DMatrix::zeros(3 * n, 3 * n);
    for c in 0..3 {
        m.view_mut((c * n, c * n), (n, n)).copy_from(scalar);
    }
    m
}

/// A discrete weak derivative on one element: `mass * matrix = moments`.
#[derive(Debug, Clone)]
pub struct WeakDerivMatrix {
    /// Right-hand sides of the defining moment equations, one column per input coefficient.
    pub moments: DMatrix<f64>,
    /// Mass matrix of the (vector) target space.
    pub mass: DMatrix<f64>,
    /// Coefficients of the weak derivative in the target basis.
    pub matrix: DMatrix<f64>,
}

impl WeakDerivMatrix {
    fn from_moments(moments: DMatrix<f64>, mass: DMatrix<f64>) -> Result<Self> {
        let chol = mass
            .clone()
            .cholesky()
            .ok_or_else(|| WgError::Internal("singular mass system in weak derivative".into()))?;
        let matrix = chol.solve(&moments);
        Ok(Self {
            moments,
            mass,
            matrix,
        })
    }

    pub fn apply(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        &self.matrix * coeffs
    }
}

/// Weak gradient of a local weak scalar into `[P_k(T)]^3`:
/// `(w, phi) = -(q0, div phi) + <q_b, phi . n>` for all `phi` in `[P_k(T)]^3`.
pub fn weak_gradient_matrix(el: &Element) -> Result<WeakDerivMatrix> {
    let lay = el.layout;
    let nk = lay.cell_k;
    let mut r = DMatrix::zeros(3 * nk, lay.scalar_dim());
    for (x, &w) in el.rule.points.iter().zip(&el.rule.weights) {
        let grads = el.vec_basis.grad(x);
        let svals = el.scalar_basis.eval(x);
        for c in 0..3 {
            for (i, g) in grads.iter().enumerate() {
                for (j, s) in svals.iter().enumerate() {
                    r[(c * nk + i, j)] -= w * s * g[c];
                }
            }
        }
    }
    for (lf, ef) in el.faces.iter().enumerate() {
        let off = lay.scalar_face_offset(lf);
        for (x, &w) in ef.rule.points.iter().zip(&ef.rule.weights) {
            let vals = el.vec_basis.eval(x);
            let mu = ef.scalar_basis.eval(x);
            for c in 0..3 {
                let nc = ef.outward[c];
                if nc == 0.0 {
                    continue;
                }
                for (i, v) in vals.iter().enumerate() {
                    for (m, u) in mu.iter().enumerate() {
                        r[(c * nk + i, off + m)] += w * v * u * nc;
                    }
                }
            }
        }
    }
    let mass = vector_mass(&cell_mass_matrix(&el.vec_basis, &el.rule)?);
    WeakDerivMatrix::from_moments(r, mass)
}

/// Weak curl of a local weak vector into `[P_{k-1}(T)]^3`:
/// `(w, phi) = (v0, curl phi) + <n x v_b, phi>` for all `phi` in `[P_{k-1}(T)]^3`.
///
/// The boundary term is oriented so that a trace-compatible field reproduces
/// its classical curl (integration by parts gives `n x v`, not `v x n`).
pub fn weak_curl_matrix(el: &Element) -> Result<WeakDerivMatrix> {
    let lay = el.layout;
    let (nk, nc) = (lay.cell_k, lay.cell_km1);
    let e = |i: usize| Vec3::ith(i, 1.0);
    let mut r = DMatrix::zeros(3 * nc, lay.vec_dim());
    for (x, &w) in el.rule.points.iter().zip(&el.rule.weights) {
        let psi = el.vec_basis.eval(x);
        let chi_grad = el.curl_basis.grad(x);
        for c in 0..3 {
            for (i, g) in chi_grad.iter().enumerate() {
                // curl(e_c chi) = grad chi x e_c
                let curl = g.cross(&e(c));
                for d in 0..3 {
                    if curl[d] == 0.0 {
                        continue;
                    }
                    for (j, p) in psi.iter().enumerate() {
                        r[(c * nc + i, d * nk + j)] += w * p * curl[d];
                    }
                }
            }
        }
    }
    for (lf, ef) in el.faces.iter().enumerate() {
        let off = lay.vec_face_offset(lf);
        let mk = lay.face_k;
        let tx = [ef.outward.cross(&ef.face.t1), ef.outward.cross(&ef.face.t2)];
        for (x, &w) in ef.rule.points.iter().zip(&ef.rule.weights) {
            let chi = el.curl_basis.eval(x);
            let mu = ef.vec_basis.eval(x);
            for (t, txn) in tx.iter().enumerate() {
                for c in 0..3 {
                    if txn[c] == 0.0 {
                        continue;
                    }
                    for (i, ch) in chi.iter().enumerate() {
                        for (m, u) in mu.iter().enumerate() {
                            r[(c * nc + i, off + t * mk + m)] += w * u * txn[c] * ch;
                        }
                    }
                }
            }
        }
    }
    let mass = vector_mass(&cell_mass_matrix(&el.curl_basis, &el.rule)?);
    WeakDerivMatrix::from_moments(r, mass)
}

/// L2 projection of a scalar function onto a cell basis.
pub fn project_cell(
    f: impl Fn(&Vec3) -> f64,
    basis: &CellBasis,
    rule: &QuadRule,
) -> Result<DVector<f64>> {
    let mut rhs = DVector::zeros(basis.dim());
    for (x, &w) in rule.points.iter().zip(&rule.weights) {
        let fx = f(x);
        for (i, v) in basis.eval(x).iter().enumerate() {
            rhs[i] += w * fx * v;
        }
    }
    spd_solve(&cell_mass_matrix(basis, rule)?, &rhs)
}

/// Componentwise L2 projection of a vector function onto `[basis]^3`,
/// component-major.
pub fn project_cell_vector(
    f: impl Fn(&Vec3) -> Vec3,
    basis: &CellBasis,
    rule: &QuadRule,
) -> Result<DVector<f64>> {
    let n = basis.dim();
    let mut rhs = DMatrix::zeros(n, 3);
    for (x, &w) in rule.points.iter().zip(&rule.weights) {
        let fx = f(x);
        for (i, v) in basis.eval(x).iter().enumerate() {
            for c in 0..3 {
                rhs[(i, c)] += w * fx[c] * v;
            }
        }
    }
    let chol = cell_mass_matrix(basis, rule)?
        .cholesky()
        .ok_or_else(|| WgError::Internal("singular mass system".into()))?;
    let sol = chol.solve(&rhs);
    Ok(DVector::from_iterator(3 * n, sol.iter().copied()))
}

/// L2 projection of a scalar function onto a face basis.
pub fn project_face(
    f: impl Fn(&Vec3) -> f64,
    basis: &FaceBasis,
    rule: &QuadRule,
) -> Result<DVector<f64>> {
    let mut rhs = DVector::zeros(basis.dim());
    for (x, &w) in rule.points.iter().zip(&rule.weights) {
        let fx = f(x);
        for (i, v) in basis.eval(x).iter().enumerate() {
            rhs[i] += w * fx * v;
        }
    }
    spd_solve(&face_mass_matrix(basis, rule)?, &rhs)
}

/// Projection of the tangential part of a vector function onto `P(e)^2`:
/// `[Q_b(u . t1) | Q_b(u . t2)]`.
pub fn project_face_tangential(
    f: impl Fn(&Vec3) -> Vec3,
    basis: &FaceBasis,
    rule: &QuadRule,
) -> Result<DVector<f64>> {
    let a = project_face(|x| f(x).dot(&basis.t1), basis, rule)?;
    let b = project_face(|x| f(x).dot(&basis.t2), basis, rule)?;
    Ok(DVector::from_iterator(
        a.len() + b.len(),
        a.iter().chain(b.iter()).copied(),
    ))
}

/// Local coefficients of the vector projection `{Q_0 u, Q_b u}`.
pub fn project_weak_vector(el: &Element, u: impl Fn(&Vec3) -> Vec3) -> Result<DVector<f64>> {
    let lay = el.layout;
    let mut out = DVector::zeros(lay.vec_dim());
    out.rows_mut(0, lay.vec_interior())
        .copy_from(&project_cell_vector(&u, &el.vec_basis, &el.rule)?);
    for (lf, ef) in el.faces.iter().enumerate() {
        out.rows_mut(lay.vec_face_offset(lf), lay.vec_face())
            .copy_from(&project_face_tangential(&u, &ef.vec_basis, &ef.rule)?);
    }
    Ok(out)
}

/// Local coefficients of the scalar projection `{Q_0 p, Q_b p}`.
pub fn project_weak_scalar(el: &Element, p: impl Fn(&Vec3) -> f64) -> Result<DVector<f64>> {
    let lay = el.layout;
    let mut out = DVector::zeros(lay.scalar_dim());
    out.rows_mut(0, lay.scalar_cell)
        .copy_from(&project_cell(&p, &el.scalar_basis, &el.rule)?);
    for (lf, ef) in el.faces.iter().enumerate() {
        out.rows_mut(lay.scalar_face_offset(lf), lay.scalar_face)
            .copy_from(&project_face(&p, &ef.scalar_basis, &ef.rule)?);
    }
    Ok(out)
}

/// Evaluates a component-major `[basis]^3` coefficient vector.
pub fn eval_vector(basis: &CellBasis, coeffs: &[f64], x: &Vec3) -> Vec3 {
    let n = basis.dim();
    let vals = basis.eval(x);
    Vec3::from_fn(|c, _| {
        vals.iter()
            .zip(&coeffs[c * n..(c + 1) * n])
            .map(|(a, b)| a * b)
            .sum()
    })
}
