//! Scaled monomial bases, tensor Gauss quadrature and mass matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, WgError};
use crate::mesh::{Cell, Face, Vec3};

/// Dimension of `P_k` in three variables.
pub fn dim_p3(k: usize) -> usize {
    (k + 1) * (k + 2) * (k + 3) / 6
}

/// Dimension of `P_k` in two variables.
pub fn dim_p2(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Exponents of the monomials of total degree `<= k`, graded then reverse
/// lexicographic: `1, x, y, z, x^2, xy, xz, y^2, ...`.
pub fn exponents_3d(k: usize) -> Vec<[u32; 3]> {
    let mut out = Vec::with_capacity(dim_p3(k));
    for d in 0..=k as u32 {
        for a in (0..=d).rev() {
            for b in (0..=d - a).rev() {
                out.push([a, b, d - a - b]);
            }
        }
    }
    out
}

pub fn exponents_2d(k: usize) -> Vec<[u32; 2]> {
    let mut out = Vec::with_capacity(dim_p2(k));
    for d in 0..=k as u32 {
        for a in (0..=d).rev() {
            out.push([a, d - a]);
        }
    }
    out
}

fn powers(t: f64, max: u32) -> [f64; 8] {
    let mut p = [1.0; 8];
    for i in 1..=max.min(7) as usize {
        p[i] = p[i - 1] * t;
    }
    p
}

/// Monomials `((x - c) / h)^alpha` on a cell.
#[derive(Debug, Clone)]
pub struct CellBasis {
    pub degree: usize,
    pub center: Vec3,
    pub h: f64,
    exps: Vec<[u32; 3]>,
}

impl CellBasis {
    pub fn new(cell: &Cell, degree: usize) -> Self {
        assert!(degree <= 7, "polynomial degree {degree} is not supported");
        Self {
            degree,
            center: cell.center(),
            h: cell.h,
            exps: exponents_3d(degree),
        }
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    pub fn exponents(&self) -> &[[u32; 3]] {
        &self.exps
    }

    pub fn eval(&self, x: &Vec3) -> Vec<f64> {
        let s = (x - self.center) / self.h;
        let p: Vec<[f64; 8]> = (0..3).map(|a| powers(s[a], self.degree as u32)).collect();
        self.exps
            .iter()
            .map(|e| p[0][e[0] as usize] * p[1][e[1] as usize] * p[2][e[2] as usize])
            .collect()
    }

    pub fn grad(&self, x: &Vec3) -> Vec<Vec3> {
        let s = (x - self.center) / self.h;
        let p: Vec<[f64; 8]> = (0..3).map(|a| powers(s[a], self.degree as u32)).collect();
        let d = |a: usize, e: u32| -> f64 {
            if e == 0 {
                0.0
            } else {
                e as f64 * p[a][e as usize - 1] / self.h
            }
        };
        self.exps
            .iter()
            .map(|e| {
                let v = |a: usize| p[a][e[a] as usize];
                Vec3::new(
                    d(0, e[0]) * v(1) * v(2),
                    v(0) * d(1, e[1]) * v(2),
                    v(0) * v(1) * d(2, e[2]),
                )
            })
            .collect()
    }

    /// Evaluates `sum_i coeffs[i] * phi_i(x)`.
    pub fn combine(&self, coeffs: &[f64], x: &Vec3) -> f64 {
        self.eval(x).iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn combine_grad(&self, coeffs: &[f64], x: &Vec3) -> Vec3 {
        self.grad(x).iter().zip(coeffs).map(|(g, c)| g * *c).sum()
    }
}

/// Monomials in the face frame coordinates `((x - c).t1 / h, (x - c).t2 / h)`.
#[derive(Debug, Clone)]
pub struct FaceBasis {
    pub degree: usize,
    pub center: Vec3,
    pub t1: Vec3,
    pub t2: Vec3,
    pub h: f64,
    exps: Vec<[u32; 2]>,
}

impl FaceBasis {
    pub fn new(face: &Face, degree: usize) -> Self {
        assert!(degree <= 7, "polynomial degree {degree} is not supported");
        Self {
            degree,
            center: face.center,
            t1: face.t1,
            t2: face.t2,
            h: face.h,
            exps: exponents_2d(degree),
        }
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    /// Frame coordinates `(xi, eta)` of a point, unscaled.
    pub fn frame_coords(&self, x: &Vec3) -> (f64, f64) {
        let d = x - self.center;
        (d.dot(&self.t1), d.dot(&self.t2))
    }

    pub fn eval(&self, x: &Vec3) -> Vec<f64> {
        let (xi, eta) = self.frame_coords(x);
        let p = powers(xi / self.h, self.degree as u32);
        let q = powers(eta / self.h, self.degree as u32);
        self.exps
            .iter()
            .map(|e| p[e[0] as usize] * q[e[1] as usize])
            .collect()
    }

    pub fn combine(&self, coeffs: &[f64], x: &Vec3) -> f64 {
        self.eval(x).iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }
}

/// Quadrature points in physical coordinates with positive weights.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Vec3) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one Gauss point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Tensor Gauss rule with `order` points per direction; exact for
/// polynomials of degree `2 * order - 1` in each variable.
pub fn cell_quadrature(cell: &Cell, order: usize) -> QuadRule {
    let (x, w) = gauss_legendre(order.max(1));
    let half = 0.5 * cell.h;
    let c = cell.center();
    let mut points = Vec::with_capacity(order.pow(3));
    let mut weights = Vec::with_capacity(order.pow(3));
    for k in 0..x.len() {
        for j in 0..x.len() {
            for i in 0..x.len() {
                points.push(c + Vec3::new(x[i], x[j], x[k]) * half);
                weights.push(w[i] * w[j] * w[k] * half.powi(3));
            }
        }
    }
    QuadRule { points, weights }
}

/// Tensor Gauss rule on a face, laid out in its `(t1, t2)` frame.
pub fn face_quadrature(face: &Face, order: usize) -> QuadRule {
    let (x, w) = gauss_legendre(order.max(1));
    let half = 0.5 * face.h;
    let mut points = Vec::with_capacity(order * order);
    let mut weights = Vec::with_capacity(order * order);
    for j in 0..x.len() {
        for i in 0..x.len() {
            points.push(face.center + (face.t1 * x[i] + face.t2 * x[j]) * half);
            weights.push(w[i] * w[j] * half * half);
        }
    }
    QuadRule { points, weights }
}

/// Gram matrix of basis values tabulated at quadrature points
/// (`values[q][i]` is basis function `i` at point `q`). Fails when the
/// result is not symmetric positive definite.
pub fn mass_matrix(values: &[Vec<f64>], rule: &QuadRule) -> Result<DMatrix<f64>> {
    let n = values.first().map_or(0, Vec::len);
    let mut m = DMatrix::zeros(n, n);
    for (vals, &w) in values.iter().zip(&rule.weights) {
        for j in 0..n {
            let wj = w * vals[j];
            for i in 0..n {
                m[(i, j)] += vals[i] * wj;
            }
        }
    }
    if m.clone().cholesky().is_none() {
        return Err(WgError::Internal(
            "mass matrix is not positive definite; basis or quadrature is broken".into(),
        ));
    }
    Ok(m)
}

pub fn cell_mass_matrix(basis: &CellBasis, rule: &QuadRule) -> Result<DMatrix<f64>> {
    let values: Vec<Vec<f64>> = rule.points.iter().map(|x| basis.eval(x)).collect();
    mass_matrix(&values, rule)
}

pub fn face_mass_matrix(basis: &FaceBasis, rule: &QuadRule) -> Result<DMatrix<f64>> {
    let values: Vec<Vec<f64>> = rule.points.iter().map(|x| basis.eval(x)).collect();
    mass_matrix(&values, rule)
}

/// Solves `M c = rhs` for a symmetric positive definite `M`.
pub fn spd_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.solve(rhs))
        .ok_or_else(|| WgError::Internal("singular mass system".into()))
}
