//! Global numbering, assembly, boundary constraints and the monolithic solve.

use std::ops::Range;

use multifrontal::{
    nested_dissection, solve_refined, CsrMatrix, DissectionOptions, EliminationTree, FactorStats,
    LuFactors,
};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Result, WgError};
use crate::forms::{local_loads, LocalBlocks, LocalMatrices, ProblemData};
use crate::mesh::{Cell, Mesh};
use crate::polybasis::{face_quadrature, FaceBasis};
use crate::weakcalc::{project_face, project_face_tangential, Element, LocalLayout, Scheme};

/// Cells processed per parallel batch during assembly.
const BATCH: usize = 512;

/// Mesh entity carrying a block of unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Entity {
    Cell(usize),
    Face(usize),
}

/// Global numbering: all `u0`, then all `u_b`, then all `p0`, then all `p_b`.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub layout: LocalLayout,
    num_cells: usize,
    num_faces: usize,
    boundary: Vec<bool>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, scheme: &Scheme) -> Self {
        Self {
            layout: scheme.layout(),
            num_cells: mesh.num_cells(),
            num_faces: mesh.num_faces(),
            boundary: mesh.faces.iter().map(|f| f.is_boundary()).collect(),
        }
    }

    fn u0_len(&self) -> usize {
        self.num_cells * self.layout.vec_interior()
    }

    fn ub_len(&self) -> usize {
        self.num_faces * self.layout.vec_face()
    }

    fn p0_len(&self) -> usize {
        self.num_cells * self.layout.scalar_cell
    }

    fn pb_len(&self) -> usize {
        self.num_faces * self.layout.scalar_face
    }

    /// Sizes of the `(u0, u_b, p0, p_b)` groups.
    pub fn counts(&self) -> [usize; 4] {
        [self.u0_len(), self.ub_len(), self.p0_len(), self.pb_len()]
    }

    pub fn total(&self) -> usize {
        self.counts().iter().sum()
    }

    pub fn u0(&self, cell: usize) -> Range<usize> {
        let n = self.layout.vec_interior();
        cell * n..(cell + 1) * n
    }

    pub fn ub(&self, face: usize) -> Range<usize> {
        let n = self.layout.vec_face();
        let s = self.u0_len() + face * n;
        s..s + n
    }

    pub fn p0(&self, cell: usize) -> Range<usize> {
        let n = self.layout.scalar_cell;
        let s = self.u0_len() + self.ub_len() + cell * n;
        s..s + n
    }

    pub fn pb(&self, face: usize) -> Range<usize> {
        let n = self.layout.scalar_face;
        let s = self.u0_len() + self.ub_len() + self.p0_len() + face * n;
        s..s + n
    }

    /// Entity owning a global unknown.
    pub fn entity(&self, dof: usize) -> Entity {
        let [nu0, nub, np0, _] = self.counts();
        let lay = &self.layout;
        if dof < nu0 {
            Entity::Cell(dof / lay.vec_interior())
        } else if dof < nu0 + nub {
            Entity::Face((dof - nu0) / lay.vec_face())
        } else if dof < nu0 + nub + np0 {
            Entity::Cell((dof - nu0 - nub) / lay.scalar_cell)
        } else {
            Entity::Face((dof - nu0 - nub - np0) / lay.scalar_face)
        }
    }

    /// True for face unknowns on the domain boundary.
    pub fn is_constrained(&self, dof: usize) -> bool {
        matches!(self.entity(dof), Entity::Face(f) if self.boundary[f])
    }

    /// Global indices of an element's unknowns in local order
    /// (vector layout followed by scalar layout).
    pub fn element_dofs(&self, cell: &Cell) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.layout.vec_dim() + self.layout.scalar_dim());
        out.extend(self.u0(cell.id));
        for &f in &cell.faces {
            out.extend(self.ub(f));
        }
        out.extend(self.p0(cell.id));
        for &f in &cell.faces {
            out.extend(self.pb(f));
        }
        out
    }

    /// Local positions of the interior `(u0, p0)` unknowns and of the face
    /// `(u_b, p_b)` unknowns inside an element vector.
    pub fn local_split(&self) -> (Vec<usize>, Vec<usize>) {
        let lay = &self.layout;
        let nv = lay.vec_dim();
        let interior: Vec<usize> = (0..lay.vec_interior())
            .chain(nv..nv + lay.scalar_cell)
            .collect();
        let faces: Vec<usize> = (lay.vec_interior()..nv)
            .chain(nv + lay.scalar_cell..nv + lay.scalar_dim())
            .collect();
        (interior, faces)
    }
}

/// Boundary values of the constrained unknowns and the numbering of the free ones.
#[derive(Debug, Clone)]
pub struct Constraints {
    /// Position of each global unknown among the free ones, `None` when constrained.
    pub free_index: Vec<Option<usize>>,
    pub free_dofs: Vec<usize>,
    /// Prescribed values; zero at free unknowns.
    pub values: Vec<f64>,
}

impl Constraints {
    pub fn num_free(&self) -> usize {
        self.free_dofs.len()
    }

    /// Full coefficient vector from free values.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut x = self.values.clone();
        for (&d, &v) in self.free_dofs.iter().zip(free) {
            x[d] = v;
        }
        x
    }
}

/// Projects the boundary data onto the boundary face unknowns: `u_b` gets the
/// face projection of the tangential components in the face frame and `p_b`
/// the face projection of the scalar data.
pub fn boundary_constraints(
    mesh: &Mesh,
    scheme: &Scheme,
    dofs: &DofMap,
    data: &ProblemData,
) -> Result<Constraints> {
    let bu = data
        .boundary_u
        .as_ref()
        .ok_or_else(|| WgError::InvalidArgument("missing tangential boundary data".into()))?;
    let bp = data
        .boundary_p
        .as_ref()
        .ok_or_else(|| WgError::InvalidArgument("missing scalar boundary data".into()))?;
    let mut values = vec![0.0; dofs.total()];
    for face in mesh.faces.iter().filter(|f| f.is_boundary()) {
        let rule = face_quadrature(face, scheme.quad);
        let ub = project_face_tangential(|x| bu(x), &FaceBasis::new(face, scheme.k), &rule)?;
        let pb = project_face(
            |x| bp(x),
            &FaceBasis::new(face, scheme.scalar_face_degree()),
            &rule,
        )?;
        values[dofs.ub(face.id)].copy_from_slice(ub.as_slice());
        values[dofs.pb(face.id)].copy_from_slice(pb.as_slice());
    }
    let mut free_index = vec![None; dofs.total()];
    let mut free_dofs = Vec::new();
    for (d, slot) in free_index.iter_mut().enumerate() {
        if !dofs.is_constrained(d) {
            *slot = Some(free_dofs.len());
            free_dofs.push(d);
        }
    }
    Ok(Constraints {
        free_index,
        free_dofs,
        values,
    })
}

/// Element matrices for a mesh of translated cells: the load-independent part
/// is computed once on a reference cell.
#[derive(Debug, Clone)]
pub struct ElementFactory {
    pub scheme: Scheme,
    pub reference: LocalMatrices,
}

impl ElementFactory {
    pub fn new(mesh: &Mesh, scheme: Scheme) -> Result<Self> {
        let el = Element::new(mesh, 0, scheme)?;
        Ok(Self {
            scheme,
            reference: LocalMatrices::new(&el)?,
        })
    }

    pub fn blocks(&self, mesh: &Mesh, cell: usize, data: &ProblemData) -> Result<LocalBlocks> {
        let el = Element::new(mesh, cell, self.scheme)?;
        Ok(LocalBlocks::from_matrices(
            &self.reference,
            data.nu.at(cell),
            local_loads(&el, data),
        ))
    }
}

/// The assembled saddle-point system over all unknowns, before constraints.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub dofs: DofMap,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// Assembles `[[A, -B], [B^T, S2]] (u; p) = (F; G)` over every unknown.
pub fn assemble(mesh: &Mesh, scheme: &Scheme, data: &ProblemData) -> Result<SaddleSystem> {
    data.validate(mesh)?;
    let dofs = DofMap::new(mesh, scheme);
    let factory = ElementFactory::new(mesh, *scheme)?;
    let n = dofs.total();
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n];
    for batch in (0..mesh.num_cells()).collect::<Vec<_>>().chunks(BATCH) {
        let locals = batch
            .par_iter()
            .map(|&c| factory.blocks(mesh, c, data).map(|b| (b.saddle(), b.rhs())))
            .collect::<Result<Vec<_>>>()?;
        for (&c, (k, r)) in batch.iter().zip(locals) {
            let ids = dofs.element_dofs(&mesh.cells[c]);
            for (i, &gi) in ids.iter().enumerate() {
                rhs[gi] += r[i];
                for (j, &gj) in ids.iter().enumerate() {
                    if k[(i, j)] != 0.0 {
                        triplets.push((gi, gj, k[(i, j)]));
                    }
                }
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(n, n, triplets)?;
    Ok(SaddleSystem { dofs, matrix, rhs })
}

/// A linear system over free unknowns, with lifted boundary values.
#[derive(Debug, Clone)]
pub struct ConstrainedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub constraints: Constraints,
}

/// Eliminates constrained rows and columns symmetrically, moving the known
/// values to the right-hand side.
pub fn apply_boundary(
    system: &SaddleSystem,
    constraints: Constraints,
) -> Result<ConstrainedSystem> {
    let nf = constraints.num_free();
    let mut row_ptr = Vec::with_capacity(nf + 1);
    let mut col_idx = Vec::new();
    let mut vals = Vec::new();
    let mut rhs = Vec::with_capacity(nf);
    row_ptr.push(0);
    for &d in &constraints.free_dofs {
        let (cols, v) = system.matrix.row(d);
        let mut r = system.rhs[d];
        for (&c, &a) in cols.iter().zip(v) {
            match constraints.free_index[c] {
                Some(fc) => {
                    col_idx.push(fc);
                    vals.push(a);
                }
                None => r -= a * constraints.values[c],
            }
        }
        rhs.push(r);
        row_ptr.push(col_idx.len());
    }
    let mut matrix = CsrMatrix::from_pattern(nf, nf, row_ptr, col_idx)?;
    matrix.values_mut().copy_from_slice(&vals);
    Ok(ConstrainedSystem {
        matrix,
        rhs,
        constraints,
    })
}

/// Scatters element matrices straight into a constrained sparse system.
///
/// The pattern is the union of the element couplings between free unknowns;
/// couplings to constrained unknowns are lifted into the right-hand side.
pub struct ReducedAssembler {
    matrix: CsrMatrix,
    rhs: Vec<f64>,
    constraints: Constraints,
}

impl ReducedAssembler {
    /// `element_dofs[e]` lists the global unknowns of element `e` in local order.
    pub fn new(constraints: Constraints, element_dofs: &[Vec<usize>]) -> Result<Self> {
        let nf = constraints.num_free();
        // free unknown -> elements touching it
        let mut count = vec![0usize; nf + 1];
        for ids in element_dofs {
            for &g in ids {
                if let Some(f) = constraints.free_index[g] {
                    count[f + 1] += 1;
                }
            }
        }
        for i in 0..nf {
            count[i + 1] += count[i];
        }
        let mut next = count.clone();
        let mut touching = vec![0usize; count[nf]];
        for (e, ids) in element_dofs.iter().enumerate() {
            for &g in ids {
                if let Some(f) = constraints.free_index[g] {
                    touching[next[f]] = e;
                    next[f] += 1;
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(nf + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        let mut scratch = Vec::new();
        for f in 0..nf {
            scratch.clear();
            for &e in &touching[count[f]..count[f + 1]] {
                scratch.extend(
                    element_dofs[e]
                        .iter()
                        .filter_map(|&g| constraints.free_index[g]),
                );
            }
            scratch.sort_unstable();
            scratch.dedup();
            col_idx.extend_from_slice(&scratch);
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            matrix: CsrMatrix::from_pattern(nf, nf, row_ptr, col_idx)?,
            rhs: vec![0.0; nf],
            constraints,
        })
    }

    pub fn add(&mut self, ids: &[usize], k: &DMatrix<f64>, r: &DVector<f64>) -> Result<()> {
        for (i, &gi) in ids.iter().enumerate() {
            let Some(fi) = self.constraints.free_index[gi] else {
                continue;
            };
            self.rhs[fi] += r[i];
            for (j, &gj) in ids.iter().enumerate() {
                let a = k[(i, j)];
                match self.constraints.free_index[gj] {
                    Some(fj) => {
                        let p = self.matrix.position(fi, fj).ok_or_else(|| {
                            WgError::Internal(format!(
                                "entry ({fi}, {fj}) missing from the pattern"
                            ))
                        })?;
                        self.matrix.values_mut()[p] += a;
                    }
                    None => self.rhs[fi] -= a * self.constraints.values[gj],
                }
            }
        }
        Ok(())
    }

    pub fn finish(self) -> ConstrainedSystem {
        ConstrainedSystem {
            matrix: self.matrix,
            rhs: self.rhs,
            constraints: self.constraints,
        }
    }
}

/// Sparse LU of a system whose unknowns are grouped into geometric blocks.
pub struct DirectSolver {
    matrix: CsrMatrix,
    factors: LuFactors,
}

/// Relative residual accepted from the direct solver.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

impl DirectSolver {
    /// `block_of[i]` is the block of unknown `i`; `points[b]` the centre of block `b`.
    pub fn new(matrix: CsrMatrix, block_of: &[usize], points: &[[f64; 3]]) -> Result<Self> {
        let nb = points.len();
        let mut block_vars = vec![Vec::new(); nb];
        for (i, &b) in block_of.iter().enumerate() {
            block_vars[b].push(i);
        }
        let mut adjacency = vec![Vec::new(); nb];
        for (b, vars) in block_vars.iter().enumerate() {
            let adj = &mut adjacency[b];
            for &i in vars {
                adj.extend(
                    matrix
                        .row(i)
                        .0
                        .iter()
                        .map(|&j| block_of[j])
                        .filter(|&c| c != b),
                );
            }
            adj.sort_unstable();
            adj.dedup();
        }
        // the pattern is structurally symmetric, but make sure
        let snapshot = adjacency.clone();
        for (b, adj) in snapshot.iter().enumerate() {
            for &c in adj {
                if snapshot[c].binary_search(&b).is_err() {
                    adjacency[c].push(b);
                }
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        let tree = nested_dissection(points, &adjacency, DissectionOptions::default())?;
        let tree = EliminationTree::from_blocks(&tree, &block_vars)?;
        let factors = LuFactors::factor(&matrix, &tree).map_err(|e| match e {
            multifrontal::FactorError::SingularPivot { .. } => {
                WgError::SingularSystem(e.to_string())
            }
            other => other.into(),
        })?;
        Ok(Self { matrix, factors })
    }

    pub fn stats(&self) -> FactorStats {
        self.factors.stats()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let (x, rel) = solve_refined(&self.matrix, &self.factors, rhs, 2)?;
        if !(rel < SOLVE_TOLERANCE) {
            return Err(WgError::SingularSystem(format!(
                "relative residual {rel:.3e} after refinement"
            )));
        }
        Ok(x)
    }
}

/// Block index and centre point for every free unknown, one block per entity.
pub fn entity_blocks(
    mesh: &Mesh,
    dofs: &DofMap,
    constraints: &Constraints,
) -> (Vec<usize>, Vec<[f64; 3]>) {
    let mut block_id = std::collections::HashMap::new();
    let mut points = Vec::new();
    let block_of = constraints
        .free_dofs
        .iter()
        .map(|&d| {
            let entity = dofs.entity(d);
            *block_id.entry(entity).or_insert_with(|| {
                let c = match entity {
                    Entity::Cell(c) => mesh.cells[c].center(),
                    Entity::Face(f) => mesh.faces[f].center,
                };
                points.push([c[0], c[1], c[2]]);
                points.len() - 1
            })
        })
        .collect();
    (block_of, points)
}

/// Coefficients of a discrete solution `(u_h, p_h)` over every unknown.
#[derive(Debug, Clone)]
pub struct WeakSolution {
    pub dofs: DofMap,
    pub coeffs: Vec<f64>,
}

impl WeakSolution {
    pub fn new(dofs: DofMap, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != dofs.total() {
            return Err(WgError::InvalidArgument(format!(
                "coefficient vector has length {}, expected {}",
                coeffs.len(),
                dofs.total()
            )));
        }
        Ok(Self { dofs, coeffs })
    }

    pub fn u0(&self, cell: usize) -> &[f64] {
        &self.coeffs[self.dofs.u0(cell)]
    }

    pub fn ub(&self, face: usize) -> &[f64] {
        &self.coeffs[self.dofs.ub(face)]
    }

    pub fn p0(&self, cell: usize) -> &[f64] {
        &self.coeffs[self.dofs.p0(cell)]
    }

    pub fn pb(&self, face: usize) -> &[f64] {
        &self.coeffs[self.dofs.pb(face)]
    }

    /// Local weak vector `[u0 | u_b per local face]` of a cell.
    pub fn local_vector(&self, cell: &Cell) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.dofs.layout.vec_dim());
        v.extend_from_slice(self.u0(cell.id));
        for &f in &cell.faces {
            v.extend_from_slice(self.ub(f));
        }
        DVector::from_vec(v)
    }

    /// Local weak scalar `[p0 | p_b per local face]` of a cell.
    pub fn local_scalar(&self, cell: &Cell) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.dofs.layout.scalar_dim());
        v.extend_from_slice(self.p0(cell.id));
        for &f in &cell.faces {
            v.extend_from_slice(self.pb(f));
        }
        DVector::from_vec(v)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Assembles, constrains and solves the full saddle-point system.
pub fn solve_full(mesh: &Mesh, scheme: &Scheme, data: &ProblemData) -> Result<WeakSolution> {
    let system = assemble(mesh, scheme, data)?;
    let constraints = boundary_constraints(mesh, scheme, &system.dofs, data)?;
    let dofs = system.dofs.clone();
    let constrained = apply_boundary(&system, constraints)?;
    drop(system);
    let (block_of, points) = entity_blocks(mesh, &dofs, &constrained.constraints);
    let solver = DirectSolver::new(constrained.matrix, &block_of, &points)?;
    let x = solver.solve(&constrained.rhs)?;
    WeakSolution::new(dofs, constrained.constraints.expand(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Vec3;
    use crate::weakcalc::{project_weak_vector, ScalarVariant};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn scheme() -> Scheme {
        Scheme::new(1, ScalarVariant::Full).unwrap()
    }

    #[test]
    fn dof_counts() {
        let m = Mesh::build(2).unwrap();
        let d = DofMap::new(&m, &scheme());
        assert_eq!(d.counts(), [96, 216, 8, 108]);
        assert_eq!(d.total(), 428);
        let m1 = Mesh::build(1).unwrap();
        assert_eq!(DofMap::new(&m1, &scheme()).total(), 67);
    }

    #[test]
    fn dof_ranges_do_not_collide() {
        let m = Mesh::build(2).unwrap();
        let d = DofMap::new(&m, &scheme());
        let mut hit = vec![0u8; d.total()];
        for c in 0..m.num_cells() {
            d.u0(c).chain(d.p0(c)).for_each(|i| hit[i] += 1);
            assert!(d.u0(c).all(|i| d.entity(i) == Entity::Cell(c)));
        }
        for f in 0..m.num_faces() {
            d.ub(f).chain(d.pb(f)).for_each(|i| hit[i] += 1);
            assert!(d.pb(f).all(|i| d.entity(i) == Entity::Face(f)));
        }
        assert!(hit.iter().all(|&h| h == 1));
    }

    #[test]
    fn zero_data_gives_zero_rhs() {
        let m = Mesh::build(2).unwrap();
        let s = assemble(&m, &scheme(), &ProblemData::homogeneous()).unwrap();
        assert!(s.rhs.iter().all(|&v| v == 0.0));
        assert_eq!(s.matrix.nrows(), 428);
    }

    #[test]
    fn constant_field_has_zero_global_energy() {
        let m = Mesh::build(2).unwrap();
        let sch = scheme();
        let s = assemble(&m, &sch, &ProblemData::homogeneous()).unwrap();
        let mut x = vec![0.0; s.dofs.total()];
        for cell in &m.cells {
            let el = Element::new(&m, cell.id, sch).unwrap();
            let v = project_weak_vector(&el, |_| Vec3::new(0.2, 1.0, -0.7)).unwrap();
            let ids = s.dofs.element_dofs(cell);
            for (i, &g) in ids.iter().take(v.len()).enumerate() {
                x[g] = v[i];
            }
        }
        let y = s.matrix.mul_vec(&x);
        let energy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!(energy.abs() < 1e-13);
    }

    #[test]
    fn boundary_projection() {
        let m = Mesh::build(2).unwrap();
        let sch = scheme();
        let d = DofMap::new(&m, &sch);
        let mut data = ProblemData::homogeneous();
        data.boundary_u = Some(Arc::new(|x| {
            Vec3::new(x[1] - x[2], x[2] - x[0], 3.0 * x[2] - 2.0 * x[1])
        }));
        data.boundary_p = Some(Arc::new(|x| (-x[0] * x[1] * x[2]).exp()));
        let c = boundary_constraints(&m, &sch, &d, &data).unwrap();
        for face in m.faces.iter().filter(|f| f.is_boundary()) {
            let fb = FaceBasis::new(face, 1);
            let ub = &c.values[d.ub(face.id)];
            // linear data is reproduced exactly at any point of the face
            let y = face.center + face.t1 * 0.2 * face.h - face.t2 * 0.1 * face.h;
            let u = data.boundary_u.as_ref().unwrap()(&y);
            assert_relative_eq!(fb.combine(&ub[..3], &y), u.dot(&face.t1), epsilon = 1e-13);
            assert_relative_eq!(fb.combine(&ub[3..], &y), u.dot(&face.t2), epsilon = 1e-13);
            // oracle for p_b: normal equations with an independent 10-point rule
            let fine = face_quadrature(face, 10);
            let mut g = DMatrix::<f64>::zeros(3, 3);
            let mut rhs = DVector::<f64>::zeros(3);
            for (x, &w) in fine.points.iter().zip(&fine.weights) {
                let (xi, eta) = fb.frame_coords(x);
                let phi = [1.0, xi, eta];
                for i in 0..3 {
                    rhs[i] += w * phi[i] * (-x[0] * x[1] * x[2]).exp();
                    for j in 0..3 {
                        g[(i, j)] += w * phi[i] * phi[j];
                    }
                }
            }
            let coef = g.lu().solve(&rhs).unwrap();
            let (xi, eta) = fb.frame_coords(&y);
            let want = coef[0] + coef[1] * xi + coef[2] * eta;
            assert_relative_eq!(
                fb.combine(&c.values[d.pb(face.id)], &y),
                want,
                epsilon = 1e-10
            );
        }
        let mut missing = data.clone();
        missing.boundary_p = None;
        assert!(matches!(
            boundary_constraints(&m, &sch, &d, &missing),
            Err(WgError::InvalidArgument(_))
        ));
    }

    #[test]
    fn reduced_assembly_matches_elimination() {
        let m = Mesh::build(2).unwrap();
        let sch = scheme();
        let mut data = ProblemData::homogeneous();
        data.g = Arc::new(|x| x[0] + 1.0);
        data.boundary_p = Some(Arc::new(|x| x[1]));
        let s = assemble(&m, &sch, &data).unwrap();
        let c = boundary_constraints(&m, &sch, &s.dofs, &data).unwrap();
        let eliminated = apply_boundary(&s, c.clone()).unwrap();
        let ids: Vec<Vec<usize>> = m
            .cells
            .iter()
            .map(|cell| s.dofs.element_dofs(cell))
            .collect();
        let mut asm = ReducedAssembler::new(c, &ids).unwrap();
        let factory = ElementFactory::new(&m, sch).unwrap();
        for (cell, ids) in m.cells.iter().zip(&ids) {
            let b = factory.blocks(&m, cell.id, &data).unwrap();
            asm.add(ids, &b.saddle(), &b.rhs()).unwrap();
        }
        let direct = asm.finish();
        // the element pattern may carry explicit zeros that triplet assembly drops
        assert!(direct.matrix.nnz() >= eliminated.matrix.nnz());
        for i in 0..eliminated.matrix.nrows() {
            let (cols, vals) = eliminated.matrix.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                assert_relative_eq!(v, direct.matrix.get(i, j), epsilon = 1e-13);
            }
        }
        for i in 0..direct.matrix.nrows() {
            let (cols, vals) = direct.matrix.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                assert_relative_eq!(v, eliminated.matrix.get(i, j), epsilon = 1e-13);
            }
            assert_relative_eq!(direct.rhs[i], eliminated.rhs[i], epsilon = 1e-13);
        }
    }

    #[test]
    fn homogeneous_problem_has_zero_solution() {
        for level in 1..=2 {
            let m = Mesh::build(level).unwrap();
            let sol = solve_full(&m, &scheme(), &ProblemData::homogeneous()).unwrap();
            assert_eq!(sol.max_abs(), 0.0);
        }
    }
}
