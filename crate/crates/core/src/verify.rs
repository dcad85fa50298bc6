//! Manufactured solutions, error norms, convergence studies and slice export.

use std::f64::consts::PI;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::condense::{solve, SolvePath};
use crate::error::{Result, WgError};
use crate::forms::{Coefficient, ProblemData, ScalarField, VectorField};
use crate::mesh::{Mesh, Vec3};
use crate::polybasis::{face_quadrature, CellBasis, FaceBasis};
use crate::system::{ElementFactory, WeakSolution};
use crate::weakcalc::{eval_vector, project_weak_scalar, project_weak_vector, Element, Scheme};

/// The four manufactured test problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseName {
    S1,
    S2,
    S3,
    S4,
}

impl CaseName {
    pub const ALL: [CaseName; 4] = [Self::S1, Self::S2, Self::S3, Self::S4];
}

impl FromStr for CaseName {
    type Err = WgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s1" => Ok(Self::S1),
            "s2" => Ok(Self::S2),
            "s3" => Ok(Self::S3),
            "s4" => Ok(Self::S4),
            other => Err(WgError::InvalidArgument(format!(
                "unknown case '{other}', expected s1, s2, s3 or s4"
            ))),
        }
    }
}

impl std::fmt::Display for CaseName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::S1 => "s1",
            Self::S2 => "s2",
            Self::S3 => "s3",
            Self::S4 => "s4",
        })
    }
}

/// Exact solution and the differential quantities needed to build its data.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: CaseName,
    pub u: VectorField,
    pub p: ScalarField,
    pub curl_u: VectorField,
    /// `curl curl u`
    pub curl_curl_u: VectorField,
    pub grad_p: VectorField,
    pub div_u: ScalarField,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

impl ManufacturedCase {
    pub fn new(name: CaseName) -> Self {
        let v = Vec3::new;
        match name {
            CaseName::S1 => Self {
                name,
                u: Arc::new(move |x| v(x[1] - x[2], x[2] - x[0], 3.0 * x[2] - 2.0 * x[1])),
                p: Arc::new(|_| 1.0),
                curl_u: Arc::new(move |_| v(-3.0, -1.0, -2.0)),
                curl_curl_u: Arc::new(|_| Vec3::zeros()),
                grad_p: Arc::new(|_| Vec3::zeros()),
                div_u: Arc::new(|_| 3.0),
            },
            CaseName::S2 => Self {
                name,
                u: Arc::new(move |x| v(x[1] * x[2], x[2] * x[0], 3.0 * x[2] - 2.0 * x[1] * x[0])),
                p: Arc::new(|x| x[0] * x[2]),
                curl_u: Arc::new(move |x| v(-3.0 * x[0], 3.0 * x[1], 0.0)),
                curl_curl_u: Arc::new(|_| Vec3::zeros()),
                grad_p: Arc::new(move |x| v(x[2], 0.0, x[0])),
                div_u: Arc::new(|_| 3.0),
            },
            CaseName::S3 => Self {
                name,
                u: Arc::new(move |x| {
                    v(
                        (x[1] * x[2]).exp(),
                        x[2] / (x[0] + 1.0),
                        (x[0] * x[1]).exp(),
                    )
                }),
                p: Arc::new(|x| (-x[0] * x[1] * x[2]).exp()),
                curl_u: Arc::new(move |x| {
                    let (eyz, exy) = ((x[1] * x[2]).exp(), (x[0] * x[1]).exp());
                    let r = 1.0 / (x[0] + 1.0);
                    v(
                        x[0] * exy - r,
                        x[1] * eyz - x[1] * exy,
                        -x[2] * r * r - x[2] * eyz,
                    )
                }),
                curl_curl_u: Arc::new(move |x| {
                    let (eyz, exy) = ((x[1] * x[2]).exp(), (x[0] * x[1]).exp());
                    let r = 1.0 / (x[0] + 1.0);
                    v(
                        -(x[1] * x[1] + x[2] * x[2]) * eyz,
                        -2.0 * x[2] * r * r * r,
                        -(x[0] * x[0] + x[1] * x[1]) * exy,
                    )
                }),
                grad_p: Arc::new(move |x| {
                    let e = (-x[0] * x[1] * x[2]).exp();
                    -v(x[1] * x[2], x[0] * x[2], x[0] * x[1]) * e
                }),
                div_u: Arc::new(|_| 0.0),
            },
            CaseName::S4 => Self {
                name,
                u: Arc::new(move |x| {
                    let (s, c) = (x.map(|t| (PI * t).sin()), x.map(|t| (PI * t).cos()));
                    v(c[0] * s[1] * s[2], s[0] * c[1] * s[2], s[0] * s[1] * c[2])
                }),
                p: Arc::new(|x| {
                    (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin() * (2.0 * PI * x[2]).sin()
                }),
                curl_u: Arc::new(|_| Vec3::zeros()),
                curl_curl_u: Arc::new(|_| Vec3::zeros()),
                grad_p: Arc::new(move |x| {
                    let (s, c) = (
                        x.map(|t| (2.0 * PI * t).sin()),
                        x.map(|t| (2.0 * PI * t).cos()),
                    );
                    v(c[0] * s[1] * s[2], s[0] * c[1] * s[2], s[0] * s[1] * c[2]) * (2.0 * PI)
                }),
                div_u: Arc::new(|x| {
                    -3.0 * PI * (PI * x[0]).sin() * (PI * x[1]).sin() * (PI * x[2]).sin()
                }),
            },
        }
    }

    /// `f = nu curl curl u - grad p`
    pub fn f(&self, nu: f64) -> VectorField {
        let (cc, gp) = (self.curl_curl_u.clone(), self.grad_p.clone());
        Arc::new(move |x| cc(x) * nu - gp(x))
    }

    /// `g = div u`
    pub fn g(&self) -> ScalarField {
        self.div_u.clone()
    }

    /// Problem data with uniform `nu`; boundary data are the exact traces.
    pub fn data(&self, nu: f64) -> ProblemData {
        ProblemData {
            nu: Coefficient::Uniform(nu),
            f: self.f(nu),
            g: self.g(),
            boundary_u: Some(self.u.clone()),
            boundary_p: Some(self.p.clone()),
        }
    }
}

/// Labels of the five error quantities, in report order.
pub const NORM_LABELS: [&str; 5] = [
    "|||e|||_1",
    "||e0||",
    "|||eps|||_0",
    "|||eps|||_0h",
    "||eps0||",
];

/// The five error norms of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    /// `|||e|||_1`
    pub energy_plus: f64,
    /// `||e0||`
    pub u_l2: f64,
    /// `|||eps|||_0`
    pub p_triple: f64,
    /// `|||eps|||_{0,h}` with the face average
    pub p_face_avg: f64,
    /// `||eps0||`
    pub p_l2: f64,
    /// `sqrt(a(e, e))`, the first term of `|||e|||_1`.
    pub energy: f64,
}

impl ErrorNorms {
    pub fn values(&self) -> [f64; 5] {
        [
            self.energy_plus,
            self.u_l2,
            self.p_triple,
            self.p_face_avg,
            self.p_l2,
        ]
    }
}

#[derive(Default, Clone, Copy)]
struct CellSums {
    energy: f64,
    div: f64,
    u_l2: f64,
    s2: f64,
    grad_p: f64,
    face_avg: f64,
    p_l2: f64,
}

/// Error norms of `e = Q_h u - u_h` and `eps = Q_h p - p_h`.
pub fn error_norms(
    mesh: &Mesh,
    scheme: &Scheme,
    solution: &WeakSolution,
    case: &ManufacturedCase,
    nu: &Coefficient,
) -> Result<ErrorNorms> {
    let factory = ElementFactory::new(mesh, *scheme)?;
    let h = mesh.h;
    let per_cell: Vec<(CellSums, DVector<f64>)> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| -> Result<_> {
            let el = Element::new(mesh, c, *scheme)?;
            let cell = &mesh.cells[c];
            let e = project_weak_vector(&el, |x| (case.u)(x))? - solution.local_vector(cell);
            let eps = project_weak_scalar(&el, |x| (case.p)(x))? - solution.local_scalar(cell);
            let a = &factory.reference.a_curl * nu.at(c) + &factory.reference.s1;
            let mut s = CellSums {
                energy: e.dot(&(&a * &e)),
                s2: eps.dot(&(&factory.reference.s2 * &eps)),
                ..Default::default()
            };
            let nk = el.layout.cell_k;
            let ns = el.layout.scalar_cell;
            for (x, &w) in el.rule.points.iter().zip(&el.rule.weights) {
                let g = el.vec_basis.grad(x);
                let div: f64 = (0..3)
                    .map(|comp| (0..nk).map(|i| e[comp * nk + i] * g[i][comp]).sum::<f64>())
                    .sum();
                let e0 = eval_vector(&el.vec_basis, &e.as_slice()[..3 * nk], x);
                let p0 = el.scalar_basis.combine(&eps.as_slice()[..ns], x);
                let gp = el.scalar_basis.combine_grad(&eps.as_slice()[..ns], x);
                s.div += w * div * div;
                s.u_l2 += w * e0.norm_squared();
                s.p_l2 += w * p0 * p0;
                s.grad_p += w * gp.norm_squared();
            }
            for (lf, ef) in el.faces.iter().enumerate() {
                let off = el.layout.scalar_face_offset(lf);
                let pb = &eps.as_slice()[off..off + el.layout.scalar_face];
                let avg = ef.rule.integrate(|x| ef.scalar_basis.combine(pb, x)) / ef.face.area;
                s.face_avg += h * ef.rule.integrate(|x| {
                    let d = el.scalar_basis.combine(&eps.as_slice()[..ns], x) - avg;
                    d * d
                });
            }
            Ok((s, e.rows(0, 3 * nk).into_owned()))
        })
        .collect::<Result<_>>()?;

    let jump: Vec<f64> = mesh
        .faces
        .par_iter()
        .filter(|f| !f.is_boundary())
        .map(|face| {
            let [Some(a), Some(b)] = face.cells else {
                unreachable!()
            };
            let (ba, bb) = (
                CellBasis::new(&mesh.cells[a], scheme.k),
                CellBasis::new(&mesh.cells[b], scheme.k),
            );
            face_quadrature(face, scheme.quad).integrate(|x| {
                let ja = eval_vector(&ba, per_cell[a].1.as_slice(), x).dot(&face.normal);
                let jb = eval_vector(&bb, per_cell[b].1.as_slice(), x).dot(&face.normal);
                (jb - ja) * (jb - ja)
            }) / face.h
        })
        .collect();

    let mut t = CellSums::default();
    for (s, _) in &per_cell {
        t.energy += s.energy;
        t.div += s.div;
        t.u_l2 += s.u_l2;
        t.s2 += s.s2;
        t.grad_p += s.grad_p;
        t.face_avg += s.face_avg;
        t.p_l2 += s.p_l2;
    }
    let jump: f64 = jump.iter().sum();
    let energy = t.energy.max(0.0).sqrt();
    Ok(ErrorNorms {
        energy_plus: energy + t.div.sqrt() + jump.sqrt(),
        u_l2: t.u_l2.sqrt(),
        p_triple: t.s2.max(0.0).sqrt() + h * t.grad_p.sqrt(),
        p_face_avg: t.face_avg.sqrt(),
        p_l2: t.p_l2.sqrt(),
        energy,
    })
}

/// One level of a convergence study.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub level: usize,
    pub h: f64,
    pub unknowns: usize,
    pub norms: ErrorNorms,
    /// `log2(err_{L-1} / err_L)` per norm; absent on the first row.
    pub rates: Option<[f64; 5]>,
}

/// Errors and observed rates over a sequence of levels.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub case: CaseName,
    pub scheme: Scheme,
    pub path: SolvePath,
    pub nu: f64,
    pub rows: Vec<ReportRow>,
}

pub fn rate(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

impl ErrorReport {
    pub fn row(&self, level: usize) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.level == level)
    }
}

/// Solves a case on each level and tabulates the error norms and rates.
pub fn convergence_study(
    case: CaseName,
    levels: &[usize],
    scheme: &Scheme,
    path: SolvePath,
    nu: f64,
) -> Result<ErrorReport> {
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(WgError::InvalidArgument(
            "levels must be nonempty and ascending".into(),
        ));
    }
    let mc = ManufacturedCase::new(case);
    let data = mc.data(nu);
    let mut rows: Vec<ReportRow> = Vec::with_capacity(levels.len());
    for &level in levels {
        let mesh = Mesh::build(level)?;
        let sol = solve(&mesh, scheme, &data, path)
            .map_err(|e| WgError::Internal(format!("case {case}, level {level}: {e}")))?;
        let norms = error_norms(&mesh, scheme, &sol, &mc, &data.nu)?;
        let rates = rows
            .last()
            .filter(|prev| prev.level + 1 == level)
            .map(|prev| {
                let (a, b) = (prev.norms.values(), norms.values());
                std::array::from_fn(|i| rate(a[i], b[i]))
            });
        rows.push(ReportRow {
            level,
            h: mesh.h,
            unknowns: sol.dofs.total(),
            norms,
            rates,
        });
    }
    Ok(ErrorReport {
        case,
        scheme: *scheme,
        path,
        nu,
        rows,
    })
}

/// Samples of the solution and its errors on a horizontal plane.
#[derive(Debug, Clone)]
pub struct SliceData {
    pub z: f64,
    /// `z` of the face plane used for the face unknowns.
    pub face_z: f64,
    pub resolution: usize,
    pub points: Vec<(f64, f64)>,
    pub fields: Vec<(&'static str, Vec<f64>)>,
}

impl SliceData {
    /// Writes one field as `x,y,value` rows under a header line.
    pub fn write_field(&self, index: usize, out: &mut impl Write) -> Result<()> {
        let (name, values) = &self.fields[index];
        writeln!(out, "x,y,{name}")?;
        for ((x, y), v) in self.points.iter().zip(values) {
            writeln!(out, "{x:.6},{y:.6},{v:.9e}")?;
        }
        Ok(())
    }
}

/// Samples `p`, `p - p0`, `p - p_b`, `u_3`, `(u - u0)_3` and the two tangential
/// mismatches `(u - u_b) . t1`, `(u - u_b) . t2` on an `n x n` grid of cell
/// midpoints of the plane `z`. Face unknowns are read on the nearest plane of
/// horizontal faces, where the exact fields are also evaluated.
pub fn export_slice(
    mesh: &Mesh,
    scheme: &Scheme,
    solution: &WeakSolution,
    case: &ManufacturedCase,
    z: f64,
    resolution: usize,
) -> Result<SliceData> {
    if !(z > 0.0 && z < 1.0) {
        return Err(WgError::InvalidArgument(format!(
            "slice plane z = {z} must lie in (0, 1)"
        )));
    }
    if resolution == 0 {
        return Err(WgError::InvalidArgument(
            "slice resolution must be positive".into(),
        ));
    }
    let face_z = (z / mesh.h).round() * mesh.h;
    let names = [
        "p",
        "p-p0",
        "p-pb",
        "u3",
        "(u-u0)3",
        "(u-ub).t1",
        "(u-ub).t2",
    ];
    let mut fields: Vec<(&'static str, Vec<f64>)> =
        names.iter().map(|&n| (n, Vec::new())).collect();
    let mut points = Vec::with_capacity(resolution * resolution);
    let nk = scheme.layout().cell_k;
    let ns = scheme.layout().scalar_cell;
    for j in 0..resolution {
        for i in 0..resolution {
            let (x, y) = (
                (i as f64 + 0.5) / resolution as f64,
                (j as f64 + 0.5) / resolution as f64,
            );
            points.push((x, y));
            let at = Vec3::new(x, y, z);
            let cell = &mesh.cells[mesh.locate(&at).expect("grid point inside the cube")];
            let vb = CellBasis::new(cell, scheme.k);
            let sb = CellBasis::new(cell, scheme.scalar_interior_degree());
            let u = (case.u)(&at);
            let p = (case.p)(&at);
            let u0 = eval_vector(&vb, solution.u0(cell.id), &at);
            let p0 = sb.combine(&solution.p0(cell.id)[..ns], &at);

            let on_face = Vec3::new(x, y, face_z);
            let fcell = mesh.locate(&on_face).expect("face point inside the cube");
            let face = mesh.cells[fcell]
                .faces
                .iter()
                .map(|&f| &mesh.faces[f])
                .find(|f| f.axis == 2 && (f.center[2] - face_z).abs() < 0.5 * mesh.h)
                .expect("horizontal face on the sampling plane");
            let fvb = FaceBasis::new(face, scheme.k);
            let fsb = FaceBasis::new(face, scheme.scalar_face_degree());
            let ub = solution.ub(face.id);
            let mk = fvb.dim();
            let uf = (case.u)(&on_face);
            let values = [
                p,
                p - p0,
                (case.p)(&on_face) - fsb.combine(solution.pb(face.id), &on_face),
                u[2],
                u[2] - u0[2],
                uf.dot(&face.t1) - fvb.combine(&ub[..mk], &on_face),
                uf.dot(&face.t2) - fvb.combine(&ub[mk..], &on_face),
            ];
            for (slot, v) in fields.iter_mut().zip(values) {
                slot.1.push(v);
            }
            debug_assert_eq!(solution.u0(cell.id).len(), 3 * nk);
        }
    }
    Ok(SliceData {
        z,
        face_z,
        resolution,
        points,
        fields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weakcalc::ScalarVariant;
    use approx::assert_relative_eq;

    fn scheme() -> Scheme {
        Scheme::new(1, ScalarVariant::Full).unwrap()
    }

    #[test]
    fn case_names() {
        for c in CaseName::ALL {
            assert_eq!(c.to_string().parse::<CaseName>().unwrap(), c);
        }
        assert!(matches!(
            "s5".parse::<CaseName>(),
            Err(WgError::InvalidArgument(_))
        ));
    }

    #[test]
    fn closed_form_data() {
        let x = Vec3::new(0.3, 0.7, 0.2);
        let s1 = ManufacturedCase::new(CaseName::S1);
        assert_eq!((s1.f(1.0))(&x), Vec3::zeros());
        assert_eq!((s1.g())(&x), 3.0);
        assert_eq!((s1.curl_u)(&x), Vec3::new(-3.0, -1.0, -2.0));
        let s2 = ManufacturedCase::new(CaseName::S2);
        assert_relative_eq!((s2.f(1.0))(&x), -Vec3::new(0.2, 0.0, 0.3), epsilon = 1e-15);
        let s4 = ManufacturedCase::new(CaseName::S4);
        let want = -3.0 * PI * (PI * 0.3f64).sin() * (PI * 0.7f64).sin() * (PI * 0.2f64).sin();
        assert_relative_eq!((s4.g())(&x), want, epsilon = 1e-14);
    }

    /// Fourth-order central difference of a vector field along `axis`.
    fn d(f: &dyn Fn(&Vec3) -> Vec3, x: &Vec3, axis: usize) -> Vec3 {
        let h = 1e-3;
        let e = Vec3::ith(axis, h);
        (f(&(x - 2.0 * e)) - f(&(x + 2.0 * e)) + (f(&(x + e)) - f(&(x - e))) * 8.0) / (12.0 * h)
    }

    fn fd_curl(f: &dyn Fn(&Vec3) -> Vec3, x: &Vec3) -> Vec3 {
        let (dx, dy, dz) = (d(f, x, 0), d(f, x, 1), d(f, x, 2));
        Vec3::new(dy[2] - dz[1], dz[0] - dx[2], dx[1] - dy[0])
    }

    #[test]
    fn data_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for name in CaseName::ALL {
            let c = ManufacturedCase::new(name);
            let f = c.f(1.0);
            for _ in 0..20 {
                let x = Vec3::new(
                    rng.random_range(0.05..0.95),
                    rng.random_range(0.05..0.95),
                    rng.random_range(0.05..0.95),
                );
                let u = |y: &Vec3| (c.u)(y);
                let curl = |y: &Vec3| fd_curl(&u, y);
                let p = |y: &Vec3| Vec3::repeat((c.p)(y));
                let grad_p = Vec3::new(d(&p, &x, 0)[0], d(&p, &x, 1)[0], d(&p, &x, 2)[0]);
                let want_f = fd_curl(&curl, &x) - grad_p;
                let want_g = d(&u, &x, 0)[0] + d(&u, &x, 1)[1] + d(&u, &x, 2)[2];
                assert!(
                    (f(&x) - want_f).norm() <= 1e-6 * want_f.norm().max(1.0),
                    "{name} f at {x}"
                );
                assert!(
                    ((c.g())(&x) - want_g).abs() <= 1e-6 * want_g.abs().max(1.0),
                    "{name} g at {x}"
                );
                assert!(
                    ((c.curl_u)(&x) - fd_curl(&u, &x)).norm()
                        <= 1e-6 * fd_curl(&u, &x).norm().max(1.0)
                );
            }
        }
    }

    #[test]
    fn zero_error_for_projected_solution() {
        let m = Mesh::build(2).unwrap();
        let sch = scheme();
        let c = ManufacturedCase::new(CaseName::S3);
        let dofs = crate::system::DofMap::new(&m, &sch);
        let mut coeffs = vec![0.0; dofs.total()];
        for cell in &m.cells {
            let el = Element::new(&m, cell.id, sch).unwrap();
            let v = project_weak_vector(&el, |x| (c.u)(x)).unwrap();
            let q = project_weak_scalar(&el, |x| (c.p)(x)).unwrap();
            let ids = dofs.element_dofs(cell);
            for (i, &g) in ids.iter().enumerate() {
                coeffs[g] = if i < v.len() { v[i] } else { q[i - v.len()] };
            }
        }
        let sol = WeakSolution::new(dofs, coeffs).unwrap();
        let n = error_norms(&m, &sch, &sol, &c, &Coefficient::Uniform(1.0)).unwrap();
        for v in n.values() {
            assert!(v < 1e-12, "{v}");
        }
    }

    #[test]
    fn energy_equals_its_explicit_terms() {
        use crate::forms::LocalMatrices;
        use crate::weakcalc::weak_curl_matrix;
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let m = Mesh::build(2).unwrap();
        let el = Element::new(&m, 5, scheme()).unwrap();
        let mats = LocalMatrices::new(&el).unwrap();
        let nu = 2.5;
        let lay = el.layout;
        let nk = lay.cell_k;
        for _ in 0..5 {
            let e = DVector::from_fn(lay.vec_dim(), |_, _| rng.random_range(-1.0..1.0));
            let matrix = e.dot(&((&mats.a_curl * nu + &mats.s1) * &e));
            let w = weak_curl_matrix(&el).unwrap().apply(&e);
            let curl = el
                .rule
                .integrate(|x| eval_vector(&el.curl_basis, w.as_slice(), x).norm_squared());
            let mut tangential = 0.0;
            for (lf, ef) in el.faces.iter().enumerate() {
                let off = lay.vec_face_offset(lf);
                let mk = lay.face_k;
                tangential += ef.rule.integrate(|x| {
                    let e0 = eval_vector(&el.vec_basis, &e.as_slice()[..3 * nk], x);
                    let eb = ef.face.t1 * ef.vec_basis.combine(&e.as_slice()[off..off + mk], x)
                        + ef.face.t2
                            * ef.vec_basis
                                .combine(&e.as_slice()[off + mk..off + 2 * mk], x);
                    (e0 - eb).cross(&ef.outward).norm_squared()
                }) / el.h();
            }
            assert_relative_eq!(matrix, nu * curl + tangential, max_relative = 1e-12);
        }
    }

    fn zero_case() -> ManufacturedCase {
        let zero_v: VectorField = Arc::new(|_| Vec3::zeros());
        let zero_s: ScalarField = Arc::new(|_| 0.0);
        ManufacturedCase {
            name: CaseName::S1,
            u: zero_v.clone(),
            p: zero_s.clone(),
            curl_u: zero_v.clone(),
            curl_curl_u: zero_v.clone(),
            grad_p: zero_v,
            div_u: zero_s,
        }
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let m = Mesh::build(2).unwrap();
        let dofs = crate::system::DofMap::new(&m, &scheme());
        let sol = WeakSolution::new(dofs.clone(), vec![0.0; dofs.total()]).unwrap();
        let n = error_norms(
            &m,
            &scheme(),
            &sol,
            &zero_case(),
            &Coefficient::Uniform(1.0),
        )
        .unwrap();
        assert_eq!(n.values(), [0.0; 5]);
    }

    #[test]
    fn s1_slices_have_zero_errors() {
        let m = Mesh::build(2).unwrap();
        let c = ManufacturedCase::new(CaseName::S1);
        let sol = solve(&m, &scheme(), &c.data(1.0), SolvePath::Condensed).unwrap();
        let slice = export_slice(&m, &scheme(), &sol, &c, 0.3, 5).unwrap();
        assert_eq!(slice.points.len(), 25);
        assert_eq!(slice.face_z, 0.5);
        for (name, values) in &slice.fields {
            assert_eq!(values.len(), 25);
            if name.contains('-') {
                assert!(values.iter().all(|v| v.abs() < 1e-10), "{name}");
            }
        }
        let mut out = Vec::new();
        slice.write_field(0, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 26);
        assert!(export_slice(&m, &scheme(), &sol, &c, 1.0, 5).is_err());
    }

    #[test]
    fn slice_matches_pointwise_evaluation() {
        // oracle: locate the cell by index arithmetic and evaluate p0 from the
        // raw coefficients
        let level = 4;
        let m = Mesh::build(level).unwrap();
        let c = ManufacturedCase::new(CaseName::S3);
        let sol = solve(&m, &scheme(), &c.data(1.0), SolvePath::Condensed).unwrap();
        let res = 16;
        let slice = export_slice(&m, &scheme(), &sol, &c, 0.3, res).unwrap();
        let n = 1usize << (level - 1);
        let p_minus_p0 = &slice.fields.iter().find(|f| f.0 == "p-p0").unwrap().1;
        for (idx, &(x, y)) in slice.points.iter().enumerate() {
            let (i, j, k) = (
                (x * n as f64) as usize,
                (y * n as f64) as usize,
                (0.3 * n as f64) as usize,
            );
            let cell = i + n * (j + n * k);
            let p0 = sol.p0(cell)[0];
            let want = (-x * y * 0.3f64).exp() - p0;
            assert_relative_eq!(p_minus_p0[idx], want, epsilon = 1e-14);
        }
        let max = p_minus_p0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        // p - p0 is dominated by p - Q0 p, of order h |grad p| / 2
        assert!(max > 1e-3 && max < 0.5 * m.h, "{max}");
    }

    #[test]
    fn rates_are_log_ratios() {
        assert_relative_eq!(rate(2.10e-2, 5.10e-3), 2.0418, epsilon = 1e-4);
        assert!(convergence_study(CaseName::S1, &[2, 1], &scheme(), SolvePath::Full, 1.0).is_err());
        let r = convergence_study(CaseName::S1, &[1], &scheme(), SolvePath::Full, 1.0).unwrap();
        assert!(r.rows[0].rates.is_none());
    }
}
