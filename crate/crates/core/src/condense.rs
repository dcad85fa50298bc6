//! Static condensation: the interior unknowns `(u0, p0)` of every element are
//! eliminated locally, a global system in the face unknowns `(u_b, p_b)` is
//! solved, and the interiors are recovered element by element.
//!
//! With the element system split as
//! `[[K_II, K_IB], [K_BI, K_BB]] (x_I; x_B) = (F_I; 0)`, the local maps are
//! `x_I = D2 + D1 x_B` where `D1 = -K_II^-1 K_IB` and `D2 = K_II^-1 F_I`, and the
//! element contributes `S = K_BB + K_BI D1` and `-K_BI D2` to the global system.

use std::collections::HashMap;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, WgError};
use crate::forms::{local_loads, LocalBlocks, ProblemData};
use crate::mesh::Mesh;
use crate::system::{
    boundary_constraints, entity_blocks, solve_full, ConstrainedSystem, Constraints, DirectSolver,
    DofMap, ElementFactory, ReducedAssembler, WeakSolution,
};
use crate::weakcalc::{Element, Scheme};

/// How the global system is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolvePath {
    Full,
    Condensed,
}

impl FromStr for SolvePath {
    type Err = WgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "condensed" => Ok(Self::Condensed),
            other => Err(WgError::InvalidArgument(format!(
                "unknown solve path '{other}', expected full or condensed"
            ))),
        }
    }
}

impl std::fmt::Display for SolvePath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Full => "full",
            Self::Condensed => "condensed",
        })
    }
}

/// Load-independent part of the elimination, shared by all cells with the
/// same coefficient.
#[derive(Debug)]
pub struct LocalOperator {
    /// Local positions of `(u0, p0)` and `(u_b, p_b)` in the element vector.
    pub interior: Vec<usize>,
    pub interface: Vec<usize>,
    /// Number of `u0` entries at the start of `interior`.
    pub vec_interior: usize,
    kii: LU<f64, Dyn, Dyn>,
    kbi: DMatrix<f64>,
    /// `-K_II^-1 K_IB`
    pub d1: DMatrix<f64>,
    /// `K_BB + K_BI D1`
    pub schur: DMatrix<f64>,
}

fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

impl LocalOperator {
    pub fn new(k: &DMatrix<f64>, dofs: &DofMap) -> Result<Self> {
        let (interior, interface) = dofs.local_split();
        let kii = select(k, &interior, &interior);
        let kib = select(k, &interior, &interface);
        let kbi = select(k, &interface, &interior);
        let kbb = select(k, &interface, &interface);
        let lu = kii.lu();
        let d1 = -lu.solve(&kib).ok_or_else(|| {
            WgError::Internal("singular interior block in element elimination".into())
        })?;
        let schur = kbb + &kbi * &d1;
        Ok(Self {
            interior,
            interface,
            vec_interior: dofs.layout.vec_interior(),
            kii: lu,
            kbi,
            d1,
            schur,
        })
    }
}

/// Element elimination for one cell.
#[derive(Debug, Clone)]
pub struct LocalSolver {
    pub cell: usize,
    pub op: Arc<LocalOperator>,
    /// `K_II^-1 F_I`
    pub d2: DVector<f64>,
    /// Condensed load `-K_BI D2`.
    pub rhs: DVector<f64>,
}

impl LocalSolver {
    pub fn new(cell: usize, op: Arc<LocalOperator>, local_rhs: &DVector<f64>) -> Result<Self> {
        let fi = DVector::from_fn(op.interior.len(), |i, _| local_rhs[op.interior[i]]);
        let d2 = op.kii.solve(&fi).ok_or_else(|| {
            WgError::Internal("singular interior block in element elimination".into())
        })?;
        let rhs = -(&op.kbi * &d2);
        Ok(Self { cell, op, d2, rhs })
    }

    /// Interior unknowns `(u0; p0)` from the element's face unknowns.
    pub fn recover(&self, x_b: &DVector<f64>) -> DVector<f64> {
        &self.d2 + &self.op.d1 * x_b
    }

    /// `u0` part of the homogeneous map, `D1(u_b, p_b)`.
    pub fn d1_apply(&self, x_b: &DVector<f64>) -> DVector<f64> {
        (&self.op.d1 * x_b)
            .rows(0, self.op.vec_interior)
            .into_owned()
    }

    /// `p0` part of the homogeneous map, `E1(u_b, p_b)`.
    pub fn e1_apply(&self, x_b: &DVector<f64>) -> DVector<f64> {
        let n = self.op.vec_interior;
        (&self.op.d1 * x_b).rows(n, self.d2.len() - n).into_owned()
    }

    /// `u0` part of the particular map, `D2(f, g)`.
    pub fn d2(&self) -> DVector<f64> {
        self.d2.rows(0, self.op.vec_interior).into_owned()
    }

    /// `p0` part of the particular map, `E2(f, g)`.
    pub fn e2(&self) -> DVector<f64> {
        let n = self.op.vec_interior;
        self.d2.rows(n, self.d2.len() - n).into_owned()
    }
}

/// Builds the element eliminations of every cell. Cells with equal
/// coefficients share one [`LocalOperator`].
pub fn build_local_solvers(
    mesh: &Mesh,
    scheme: &Scheme,
    data: &ProblemData,
) -> Result<Vec<LocalSolver>> {
    data.validate(mesh)?;
    let dofs = DofMap::new(mesh, scheme);
    let factory = ElementFactory::new(mesh, *scheme)?;
    let mut ops: HashMap<u64, Arc<LocalOperator>> = HashMap::new();
    for c in 0..mesh.num_cells() {
        let nu = data.nu.at(c);
        if let std::collections::hash_map::Entry::Vacant(slot) = ops.entry(nu.to_bits()) {
            let zero = (DVector::zeros(0), DVector::zeros(0));
            let k = LocalBlocks::from_matrices(&factory.reference, nu, zero).saddle();
            slot.insert(Arc::new(LocalOperator::new(&k, &dofs)?));
        }
    }
    (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let el = Element::new(mesh, c, *scheme)?;
            let (fv, gq) = local_loads(&el, data);
            let mut r = DVector::zeros(fv.len() + gq.len());
            r.rows_mut(0, fv.len()).copy_from(&fv);
            r.rows_mut(fv.len(), gq.len()).copy_from(&gq);
            LocalSolver::new(c, ops[&data.nu.at(c).to_bits()].clone(), &r)
        })
        .collect()
}

/// Global unknowns of a cell's face block in local interface order.
pub fn interface_dofs(mesh: &Mesh, dofs: &DofMap, cell: usize, op: &LocalOperator) -> Vec<usize> {
    let all = dofs.element_dofs(&mesh.cells[cell]);
    op.interface.iter().map(|&i| all[i]).collect()
}

/// Keeps only face unknowns free, so the numbering covers exactly the
/// condensed system.
fn interface_constraints(dofs: &DofMap, full: &Constraints) -> Constraints {
    let mut free_index = vec![None; full.free_index.len()];
    let mut free_dofs = Vec::new();
    for (d, slot) in free_index.iter_mut().enumerate() {
        let is_face = matches!(dofs.entity(d), crate::system::Entity::Face(_));
        if is_face && full.free_index[d].is_some() {
            *slot = Some(free_dofs.len());
            free_dofs.push(d);
        }
    }
    Constraints {
        free_index,
        free_dofs,
        values: full.values.clone(),
    }
}

/// The condensed system over free face unknowns.
pub struct CondensedSystem {
    pub dofs: DofMap,
    pub system: ConstrainedSystem,
}

/// Scatters the element Schur complements and condensed loads, with boundary
/// values lifted to the right-hand side.
pub fn assemble_condensed(
    mesh: &Mesh,
    scheme: &Scheme,
    solvers: &[LocalSolver],
    data: &ProblemData,
) -> Result<CondensedSystem> {
    let dofs = DofMap::new(mesh, scheme);
    let full = boundary_constraints(mesh, scheme, &dofs, data)?;
    let constraints = interface_constraints(&dofs, &full);
    let ids: Vec<Vec<usize>> = solvers
        .iter()
        .map(|s| interface_dofs(mesh, &dofs, s.cell, &s.op))
        .collect();
    let mut asm = ReducedAssembler::new(constraints, &ids)?;
    for (s, ids) in solvers.iter().zip(&ids) {
        asm.add(ids, &s.op.schur, &s.rhs)?;
    }
    Ok(CondensedSystem {
        dofs,
        system: asm.finish(),
    })
}

/// Fills in every interior unknown from the face unknowns.
pub fn recover_interiors(
    mesh: &Mesh,
    dofs: &DofMap,
    solvers: &[LocalSolver],
    mut coeffs: Vec<f64>,
) -> Result<WeakSolution> {
    let interiors: Vec<(Vec<usize>, DVector<f64>)> = solvers
        .par_iter()
        .map(|s| {
            let all = dofs.element_dofs(&mesh.cells[s.cell]);
            let xb = DVector::from_iterator(
                s.op.interface.len(),
                s.op.interface.iter().map(|&i| coeffs[all[i]]),
            );
            let ids = s.op.interior.iter().map(|&i| all[i]).collect();
            (ids, s.recover(&xb))
        })
        .collect();
    for (ids, x) in interiors {
        for (&g, &v) in ids.iter().zip(x.iter()) {
            coeffs[g] = v;
        }
    }
    WeakSolution::new(dofs.clone(), coeffs)
}

/// Solves the condensed system directly and recovers the interiors.
pub fn solve_condensed_and_recover(
    mesh: &Mesh,
    condensed: CondensedSystem,
    solvers: &[LocalSolver],
) -> Result<WeakSolution> {
    let CondensedSystem { dofs, system } = condensed;
    let (block_of, points) = entity_blocks(mesh, &dofs, &system.constraints);
    let solver = DirectSolver::new(system.matrix, &block_of, &points)?;
    let x = solver.solve(&system.rhs)?;
    let coeffs = system.constraints.expand(&x);
    recover_interiors(mesh, &dofs, solvers, coeffs)
}

/// Solves one boundary value problem along the chosen path.
pub fn solve(
    mesh: &Mesh,
    scheme: &Scheme,
    data: &ProblemData,
    path: SolvePath,
) -> Result<WeakSolution> {
    match path {
        SolvePath::Full => solve_full(mesh, scheme, data),
        SolvePath::Condensed => {
            let solvers = build_local_solvers(mesh, scheme, data)?;
            let condensed = assemble_condensed(mesh, scheme, &solvers, data)?;
            solve_condensed_and_recover(mesh, condensed, &solvers)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Vec3;
    use crate::weakcalc::ScalarVariant;
    use std::sync::Arc as StdArc;

    fn scheme() -> Scheme {
        Scheme::new(1, ScalarVariant::Full).unwrap()
    }

    #[test]
    fn condensed_dimension() {
        let m = Mesh::build(2).unwrap();
        let sch = scheme();
        let solvers = build_local_solvers(&m, &sch, &ProblemData::homogeneous()).unwrap();
        let mut data = ProblemData::homogeneous();
        data.boundary_u = Some(StdArc::new(|_| Vec3::zeros()));
        let c = assemble_condensed(&m, &sch, &solvers, &data).unwrap();
        // 36 faces carry 9 unknowns each, 24 of them on the boundary
        assert_eq!(c.system.matrix.nrows(), (36 - 24) * 9);
        assert!(c.system.rhs.iter().all(|&v| v == 0.0));
        assert_eq!(solvers[0].op.schur.nrows(), 54);
    }

    #[test]
    fn homogeneous_maps_vanish() {
        let m = Mesh::build(1).unwrap();
        let solvers = build_local_solvers(&m, &scheme(), &ProblemData::homogeneous()).unwrap();
        let s = &solvers[0];
        let zero = DVector::zeros(54);
        assert_eq!(s.d1_apply(&zero).amax(), 0.0);
        assert_eq!(s.e1_apply(&zero).amax(), 0.0);
        assert_eq!(s.d2().amax(), 0.0);
        assert_eq!(s.e2().amax(), 0.0);
    }

    #[test]
    fn interior_recovery_solves_local_equations() {
        let m = Mesh::build(2).unwrap();
        let sch = scheme();
        let mut data = ProblemData::homogeneous();
        data.f = StdArc::new(|x| Vec3::new(x[1], -x[2], 1.0));
        data.g = StdArc::new(|x| x[0] * x[0]);
        let solvers = build_local_solvers(&m, &sch, &data).unwrap();
        let factory = ElementFactory::new(&m, sch).unwrap();
        let s = &solvers[5];
        let blocks = factory.blocks(&m, 5, &data).unwrap();
        let k = blocks.saddle();
        let r = blocks.rhs();
        let xb = DVector::from_fn(54, |i, _| (i as f64 * 0.37).sin());
        let xi = s.recover(&xb);
        let mut x = DVector::zeros(67);
        for (a, &i) in s.op.interior.iter().enumerate() {
            x[i] = xi[a];
        }
        for (a, &i) in s.op.interface.iter().enumerate() {
            x[i] = xb[a];
        }
        let res = &k * &x - &r;
        for &i in &s.op.interior {
            assert!(res[i].abs() < 1e-12, "row {i}: {}", res[i]);
        }
    }

    #[test]
    fn path_names() {
        assert_eq!("full".parse::<SolvePath>().unwrap(), SolvePath::Full);
        assert!("both".parse::<SolvePath>().is_err());
        assert_eq!(SolvePath::Condensed.to_string(), "condensed");
    }
}
