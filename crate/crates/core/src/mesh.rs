//! Structured Cartesian cell-centered meshes and rock properties.
//!
//! Cells are numbered lexicographically, `id = i + nx*j + nx*ny*k`. Interior
//! faces are enumerated axis by axis (all x-normal faces, then y, then z);
//! boundary faces follow the same per-axis order with the low side first.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the six sides of the box domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundarySide {
    #[serde(rename = "x-")]
    XMin,
    #[serde(rename = "x+")]
    XMax,
    #[serde(rename = "y-")]
    YMin,
    #[serde(rename = "y+")]
    YMax,
    #[serde(rename = "z-")]
    ZMin,
    #[serde(rename = "z+")]
    ZMax,
}

impl BoundarySide {
    pub const ALL: [BoundarySide; 6] = [
        BoundarySide::XMin,
        BoundarySide::XMax,
        BoundarySide::YMin,
        BoundarySide::YMax,
        BoundarySide::ZMin,
        BoundarySide::ZMax,
    ];

    pub fn axis(self) -> usize {
        match self {
            BoundarySide::XMin | BoundarySide::XMax => 0,
            BoundarySide::YMin | BoundarySide::YMax => 1,
            BoundarySide::ZMin | BoundarySide::ZMax => 2,
        }
    }

    pub fn is_high(self) -> bool {
        matches!(
            self,
            BoundarySide::XMax | BoundarySide::YMax | BoundarySide::ZMax
        )
    }
}

/// The cell on the far side of a face.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Neighbor {
    Cell(usize),
    Boundary(BoundarySide),
}

/// A face of the mesh. `distance` is center-to-center for interior faces and
/// center-to-face for boundary faces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Face {
    pub left_cell: usize,
    pub right: Neighbor,
    pub area: f64,
    pub distance: f64,
    /// Center-to-face distance on the left side.
    pub half_left: f64,
    /// Face-to-center distance on the right side (zero for boundary faces).
    pub half_right: f64,
    pub normal_axis: usize,
}

impl Face {
    pub fn right_cell(&self) -> Option<usize> {
        match self.right {
            Neighbor::Cell(c) => Some(c),
            Neighbor::Boundary(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CartesianMesh {
    dims: [usize; 3],
    cell_size: [f64; 3],
    origin: [f64; 3],
    interior: Vec<Face>,
    boundary: Vec<Face>,
}

impl CartesianMesh {
    pub fn new(dims: [usize; 3], cell_size: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Mesh(format!("cell counts must be >= 1, got {dims:?}")));
        }
        if cell_size.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::Mesh(format!(
                "cell sizes must be positive and finite, got {cell_size:?}"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::Mesh(format!("origin must be finite, got {origin:?}")));
        }

        let [nx, ny, nz] = dims;
        let [dx, dy, dz] = cell_size;
        let areas = [dy * dz, dx * dz, dx * dy];
        let id = |i: usize, j: usize, k: usize| i + nx * j + nx * ny * k;

        let mut interior = Vec::new();
        for axis in 0..3 {
            let h = cell_size[axis];
            for k in 0..nz {
                for j in 0..ny {
                    for i in 0..nx {
                        let mut ijk = [i, j, k];
                        if ijk[axis] + 1 >= dims[axis] {
                            continue;
                        }
                        let left = id(i, j, k);
                        ijk[axis] += 1;
                        let right = id(ijk[0], ijk[1], ijk[2]);
                        interior.push(Face {
                            left_cell: left,
                            right: Neighbor::Cell(right),
                            area: areas[axis],
                            distance: h,
                            half_left: 0.5 * h,
                            half_right: 0.5 * h,
                            normal_axis: axis,
                        });
                    }
                }
            }
        }

        let mut boundary = Vec::new();
        for side in BoundarySide::ALL {
            let axis = side.axis();
            let h = cell_size[axis];
            for k in 0..nz {
                for j in 0..ny {
                    for i in 0..nx {
                        let ijk = [i, j, k];
                        let on_side = if side.is_high() {
                            ijk[axis] == dims[axis] - 1
                        } else {
                            ijk[axis] == 0
                        };
                        if !on_side {
                            continue;
                        }
                        boundary.push(Face {
                            left_cell: id(i, j, k),
                            right: Neighbor::Boundary(side),
                            area: areas[axis],
                            distance: 0.5 * h,
                            half_left: 0.5 * h,
                            half_right: 0.0,
                            normal_axis: axis,
                        });
                    }
                }
            }
        }

        Ok(CartesianMesh {
            dims,
            cell_size,
            origin,
            interior,
            boundary,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cell_size(&self) -> [f64; 3] {
        self.cell_size
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn num_cells(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size.iter().product()
    }

    pub fn extent(&self) -> [f64; 3] {
        [
            self.dims[0] as f64 * self.cell_size[0],
            self.dims[1] as f64 * self.cell_size[1],
            self.dims[2] as f64 * self.cell_size[2],
        ]
    }

    pub fn cell_id(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.dims[0] && j < self.dims[1] && k < self.dims[2]);
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn cell_ijk(&self, id: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [id % nx, (id / nx) % ny, id / (nx * ny)]
    }

    pub fn cell_center(&self, id: usize) -> [f64; 3] {
        let ijk = self.cell_ijk(id);
        std::array::from_fn(|a| self.origin[a] + (ijk[a] as f64 + 0.5) * self.cell_size[a])
    }

    /// Center of a face; for boundary faces this is the ghost location used by
    /// Dirichlet conditions.
    pub fn face_center(&self, face: &Face) -> [f64; 3] {
        let mut c = self.cell_center(face.left_cell);
        let sign = match face.right {
            Neighbor::Cell(_) => 1.0,
            Neighbor::Boundary(side) if side.is_high() => 1.0,
            Neighbor::Boundary(_) => -1.0,
        };
        c[face.normal_axis] += sign * face.half_left;
        c
    }

    pub fn interior_faces(&self) -> &[Face] {
        &self.interior
    }

    pub fn boundary_faces(&self) -> &[Face] {
        &self.boundary
    }

    /// Indices into [`boundary_faces`](Self::boundary_faces) whose face
    /// centers lie on `side` inside the closed box `[lower, upper]`.
    pub fn boundary_faces_in(&self, side: BoundarySide, lower: [f64; 3], upper: [f64; 3]) -> Vec<usize> {
        let tol = 1e-9 * self.extent().iter().cloned().fold(0.0, f64::max);
        self.boundary
            .iter()
            .enumerate()
            .filter(|(_, f)| f.right == Neighbor::Boundary(side))
            .filter(|(_, f)| {
                let c = self.face_center(f);
                (0..3).all(|a| a == side.axis() || (c[a] >= lower[a] - tol && c[a] <= upper[a] + tol))
            })
            .map(|(idx, _)| idx)
            .collect()
    }
}

/// Per-cell absolute permeability (m²) and porosity.
#[derive(Clone, Debug, PartialEq)]
pub struct RockField {
    permeability: Vec<f64>,
    porosity: Vec<f64>,
}

impl RockField {
    pub fn new(permeability: Vec<f64>, porosity: Vec<f64>) -> Result<Self> {
        if permeability.len() != porosity.len() {
            return Err(Error::Dimension {
                expected: permeability.len(),
                found: porosity.len(),
            });
        }
        if permeability.is_empty() {
            return Err(Error::Mesh("rock field is empty".into()));
        }
        if let Some((i, k)) = permeability
            .iter()
            .enumerate()
            .find(|(_, &k)| !(k > 0.0 && k.is_finite()))
        {
            return Err(Error::Mesh(format!("permeability must be positive, cell {i} has {k}")));
        }
        if let Some((i, p)) = porosity
            .iter()
            .enumerate()
            .find(|(_, &p)| !(p > 0.0 && p <= 1.0))
        {
            return Err(Error::Mesh(format!("porosity must be in (0, 1], cell {i} has {p}")));
        }
        Ok(RockField {
            permeability,
            porosity,
        })
    }

    pub fn uniform(num_cells: usize, permeability: f64, porosity: f64) -> Result<Self> {
        Self::new(vec![permeability; num_cells], vec![porosity; num_cells])
    }

    pub fn len(&self) -> usize {
        self.permeability.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permeability.is_empty()
    }

    pub fn permeability(&self) -> &[f64] {
        &self.permeability
    }

    pub fn porosity(&self) -> &[f64] {
        &self.porosity
    }

    pub fn check_mesh(&self, mesh: &CartesianMesh) -> Result<()> {
        if self.len() != mesh.num_cells() {
            return Err(Error::Dimension {
                expected: mesh.num_cells(),
                found: self.len(),
            });
        }
        Ok(())
    }
}

/// Two-point transmissibility `area * K_harm / distance`, with `K_harm` the
/// distance-weighted harmonic mean of the adjacent permeabilities. Boundary
/// faces use the half-cell distance and the interior cell's permeability.
pub fn face_transmissibility(face: &Face, rock: &RockField) -> f64 {
    let k = rock.permeability();
    match face.right {
        Neighbor::Cell(r) => face.area / (face.half_left / k[face.left_cell] + face.half_right / k[r]),
        Neighbor::Boundary(_) => face.area * k[face.left_cell] / face.half_left,
    }
}

/// Reads a raster with one value per line, lexicographic cell order. Blank
/// lines and lines starting with `#` are ignored.
pub fn read_raster(path: &Path, expected_len: usize) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Raster {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut values = Vec::with_capacity(expected_len);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Raster {
            path: path.to_path_buf(),
            reason: format!("line {}: cannot parse `{line}`", lineno + 1),
        })?;
        values.push(v);
    }
    if values.len() != expected_len {
        return Err(Error::Raster {
            path: path.to_path_buf(),
            reason: format!("expected {expected_len} values, found {}", values.len()),
        });
    }
    Ok(values)
}
