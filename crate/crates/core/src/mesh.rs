//! Uniform hexahedral meshes of the unit cube.
//!
//! Level `L` splits the cube into `n = 2^(L-1)` cells per side. Every face
//! carries one global frame `(t1, t2, normal)` shared by its neighbours; each
//! cell stores the sign that turns the global normal into its outward normal.

use nalgebra::Vector3;
use serde::Serialize;

use crate::error::{Result, WgError};

pub type Vec3 = Vector3<f64>;

/// Local face order inside a cell: `-x, +x, -y, +y, -z, +z`.
pub const LOCAL_FACES: usize = 6;

#[derive(Debug, Clone)]
pub struct Cell {
    pub id: usize,
    pub origin: Vec3,
    pub h: f64,
    pub faces: [usize; LOCAL_FACES],
    pub signs: [f64; LOCAL_FACES],
}

impl Cell {
    pub fn center(&self) -> Vec3 {
        self.origin + Vec3::repeat(0.5 * self.h)
    }

    pub fn volume(&self) -> f64 {
        self.h.powi(3)
    }

    pub fn contains(&self, x: &Vec3, tol: f64) -> bool {
        (0..3).all(|a| x[a] >= self.origin[a] - tol && x[a] <= self.origin[a] + self.h + tol)
    }
}

#[derive(Debug, Clone)]
pub struct Face {
    pub id: usize,
    pub axis: usize,
    pub center: Vec3,
    pub normal: Vec3,
    pub t1: Vec3,
    pub t2: Vec3,
    /// Edge length of the square face.
    pub h: f64,
    pub area: f64,
    /// Adjacent cells: the one on the negative side of `normal` first.
    pub cells: [Option<usize>; 2],
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.cells[0].is_none() || self.cells[1].is_none()
    }
}

/// Axis-canonical tangent frame for a face normal to `axis`.
pub fn face_frame(axis: usize) -> (Vec3, Vec3, Vec3) {
    let e = |i: usize| Vec3::ith(i, 1.0);
    match axis {
        0 => (e(1), e(2), e(0)),
        1 => (e(2), e(0), e(1)),
        _ => (e(0), e(1), e(2)),
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub level: usize,
    pub n: usize,
    pub h: f64,
    pub cells: Vec<Cell>,
    pub faces: Vec<Face>,
}

impl Mesh {
    pub fn build(level: usize) -> Result<Self> {
        if level < 1 {
            return Err(WgError::InvalidArgument(format!(
                "mesh level must be >= 1, got {level}"
            )));
        }
        if level > 10 {
            return Err(WgError::InvalidArgument(format!(
                "mesh level {level} is too large"
            )));
        }
        let n = 1usize << (level - 1);
        let h = 1.0 / n as f64;
        let cell_id = |i: usize, j: usize, k: usize| i + n * (j + n * k);
        let per_axis = n * n * (n + 1);
        // faces normal to `axis` at grid index `idx` (idx[axis] in 0..=n)
        let face_id = |axis: usize, idx: [usize; 3]| -> usize {
            let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
            axis * per_axis + idx[axis] + (n + 1) * (idx[a] + n * idx[b])
        };

        let mut faces: Vec<Face> = Vec::with_capacity(3 * per_axis);
        for axis in 0..3 {
            let (t1, t2, normal) = face_frame(axis);
            let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
            for ib in 0..n {
                for ia in 0..n {
                    for i in 0..=n {
                        let mut idx = [0usize; 3];
                        idx[axis] = i;
                        idx[a] = ia;
                        idx[b] = ib;
                        let id = face_id(axis, idx);
                        debug_assert_eq!(id, faces.len());
                        let mut center = Vec3::zeros();
                        center[axis] = i as f64 * h;
                        center[a] = (ia as f64 + 0.5) * h;
                        center[b] = (ib as f64 + 0.5) * h;
                        let neighbour = |shift: usize| {
                            let mut c = idx;
                            c[axis] = shift;
                            cell_id(c[0], c[1], c[2])
                        };
                        let cells = [
                            (i > 0).then(|| neighbour(i - 1)),
                            (i < n).then(|| neighbour(i)),
                        ];
                        faces.push(Face {
                            id,
                            axis,
                            center,
                            normal,
                            t1,
                            t2,
                            h,
                            area: h * h,
                            cells,
                        });
                    }
                }
            }
        }

        let mut cells = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let ijk = [i, j, k];
                    let mut local = [0usize; LOCAL_FACES];
                    for axis in 0..3 {
                        let lo = ijk;
                        let mut hi = ijk;
                        hi[axis] += 1;
                        local[2 * axis] = face_id(axis, lo);
                        local[2 * axis + 1] = face_id(axis, hi);
                    }
                    cells.push(Cell {
                        id: cell_id(i, j, k),
                        origin: Vec3::new(i as f64 * h, j as f64 * h, k as f64 * h),
                        h,
                        faces: local,
                        signs: [-1.0, 1.0, -1.0, 1.0, -1.0, 1.0],
                    });
                }
            }
        }
        Ok(Self {
            level,
            n,
            h,
            cells,
            faces,
        })
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Position of `face` among the local faces of `cell`.
    pub fn local_face_index(&self, cell: usize, face: usize) -> Result<usize> {
        let c = self.cell(cell)?;
        c.faces.iter().position(|&f| f == face).ok_or_else(|| {
            WgError::InvalidArgument(format!("face {face} is not a face of cell {cell}"))
        })
    }

    /// Unit normal of `face` pointing out of `cell`.
    pub fn outward_normal(&self, cell: usize, face: usize) -> Result<Vec3> {
        let local = self.local_face_index(cell, face)?;
        Ok(self.faces[face].normal * self.cells[cell].signs[local])
    }

    pub fn cell(&self, id: usize) -> Result<&Cell> {
        self.cells
            .get(id)
            .ok_or_else(|| WgError::InvalidArgument(format!("cell {id} out of range")))
    }

    /// Cell containing `x`; points on a shared face go to the cell on its positive side.
    pub fn locate(&self, x: &Vec3) -> Option<usize> {
        if (0..3).any(|a| x[a] < 0.0 || x[a] > 1.0) {
            return None;
        }
        let idx = |v: f64| ((v / self.h).floor() as usize).min(self.n - 1);
        Some(idx(x[0]) + self.n * (idx(x[1]) + self.n * idx(x[2])))
    }

    pub fn to_dump(&self) -> MeshDump {
        let arr = |v: &Vec3| [v[0], v[1], v[2]];
        MeshDump {
            level: self.level,
            h: self.h,
            cells: self
                .cells
                .iter()
                .map(|c| CellRecord {
                    id: c.id,
                    origin: arr(&c.origin),
                    h: c.h,
                    faces: c.faces,
                    signs: c.signs,
                })
                .collect(),
            faces: self
                .faces
                .iter()
                .map(|f| FaceRecord {
                    id: f.id,
                    center: arr(&f.center),
                    normal: arr(&f.normal),
                    t1: arr(&f.t1),
                    t2: arr(&f.t2),
                    area: f.area,
                    boundary: f.is_boundary(),
                    cells: f.cells,
                })
                .collect(),
        }
    }
}

/// JSON debugging dump of a mesh.
#[derive(Debug, Serialize)]
pub struct MeshDump {
    pub level: usize,
    pub h: f64,
    pub cells: Vec<CellRecord>,
    pub faces: Vec<FaceRecord>,
}

#[derive(Debug, Serialize)]
pub struct CellRecord {
    pub id: usize,
    pub origin: [f64; 3],
    pub h: f64,
    pub faces: [usize; LOCAL_FACES],
    pub signs: [f64; LOCAL_FACES],
}

#[derive(Debug, Serialize)]
pub struct FaceRecord {
    pub id: usize,
    pub center: [f64; 3],
    pub normal: [f64; 3],
    pub t1: [f64; 3],
    pub t2: [f64; 3],
    pub area: f64,
    pub boundary: bool,
    pub cells: [Option<usize>; 2],
}
