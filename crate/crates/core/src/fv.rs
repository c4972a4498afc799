//! Finite-volume spatial discretization: uniform bulk grids (1D interval,
//! 2D rectangle), the boundary face chain doubling as the surface mesh,
//! two-point flux diffusion operators in the bulk and along the surface
//! chain, first-order upwind advection for a discretely divergence-free
//! stream-function velocity, and the conservative bulk<->surface sorption
//! coupling.
//!
//! Operators are stored in difference form: the action on a field is
//! `diag[k] x_k + sum_j w_j (x_j - x_k)`. Applied to a constant field the
//! differences vanish termwise, so diffusion and advection annihilate
//! constants exactly in floating point, not just up to rounding.

use crate::model::{ModelError, SorptionModel};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FvError {
    #[error("cell counts must be at least 2 per axis, got {0}")]
    TooFewCells(usize),
    #[error("grid extents must be positive, got {0}")]
    BadExtent(f64),
    #[error("grid dimension must be 1 or 2, got {0}")]
    BadDim(usize),
    #[error("a stream-function velocity requires a 2D grid")]
    StreamFunctionNeeds2d,
    #[error("field has {got} entries, grid expects {expected}")]
    FieldShape { expected: usize, got: usize },
    #[error("state shape mismatch: {0}")]
    StateShape(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Outward normal direction of a boundary face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outward {
    XMinus,
    XPlus,
    YMinus,
    YPlus,
}

/// One boundary face: also one cell of the surface mesh.
#[derive(Debug, Clone)]
pub struct BoundaryFace {
    /// Adjacent bulk cell.
    pub cell: usize,
    /// Face measure: arclength in 2D, 1 in 1D.
    pub area: f64,
    /// Face midpoint.
    pub center: [f64; 2],
    pub outward: Outward,
}

/// A uniform structured grid on an interval (1D) or rectangle (2D) whose
/// boundary faces form the surface mesh: a closed periodic chain in 2D, two
/// isolated points in 1D.
#[derive(Debug, Clone)]
pub struct Grid {
    pub dim: usize,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dx: f64,
    pub dy: f64,
    cell_volume: f64,
    faces: Vec<BoundaryFace>,
}

impl Grid {
    pub fn build(
        dim: usize,
        counts: (usize, usize),
        extents: (f64, f64),
    ) -> Result<Self, FvError> {
        match dim {
            1 => Self::line(counts.0, extents.0),
            2 => Self::rectangle(counts.0, counts.1, extents.0, extents.1),
            other => Err(FvError::BadDim(other)),
        }
    }

    pub fn line(nx: usize, lx: f64) -> Result<Self, FvError> {
        if nx < 2 {
            return Err(FvError::TooFewCells(nx));
        }
        if !(lx > 0.0) {
            return Err(FvError::BadExtent(lx));
        }
        let dx = lx / nx as f64;
        let faces = vec![
            BoundaryFace {
                cell: 0,
                area: 1.0,
                center: [0.0, 0.0],
                outward: Outward::XMinus,
            },
            BoundaryFace {
                cell: nx - 1,
                area: 1.0,
                center: [lx, 0.0],
                outward: Outward::XPlus,
            },
        ];
        Ok(Self {
            dim: 1,
            nx,
            ny: 1,
            lx,
            ly: 1.0,
            dx,
            dy: 1.0,
            cell_volume: dx,
            faces,
        })
    }

    pub fn rectangle(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, FvError> {
        if nx < 2 {
            return Err(FvError::TooFewCells(nx));
        }
        if ny < 2 {
            return Err(FvError::TooFewCells(ny));
        }
        for l in [lx, ly] {
            if !(l > 0.0) {
                return Err(FvError::BadExtent(l));
            }
        }
        let dx = lx / nx as f64;
        let dy = ly / ny as f64;
        let idx = |i: usize, j: usize| j * nx + i;
        // closed chain: bottom left->right, right bottom->top, top
        // right->left, left top->bottom
        let mut faces = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            faces.push(BoundaryFace {
                cell: idx(i, 0),
                area: dx,
                center: [(i as f64 + 0.5) * dx, 0.0],
                outward: Outward::YMinus,
            });
        }
        for j in 0..ny {
            faces.push(BoundaryFace {
                cell: idx(nx - 1, j),
                area: dy,
                center: [lx, (j as f64 + 0.5) * dy],
                outward: Outward::XPlus,
            });
        }
        for i in (0..nx).rev() {
            faces.push(BoundaryFace {
                cell: idx(i, ny - 1),
                area: dx,
                center: [(i as f64 + 0.5) * dx, ly],
                outward: Outward::YPlus,
            });
        }
        for j in (0..ny).rev() {
            faces.push(BoundaryFace {
                cell: idx(0, j),
                area: dy,
                center: [0.0, (j as f64 + 0.5) * dy],
                outward: Outward::XMinus,
            });
        }
        Ok(Self {
            dim: 2,
            nx,
            ny,
            lx,
            ly,
            dx,
            dy,
            cell_volume: dx * dy,
            faces,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn faces(&self) -> &[BoundaryFace] {
        &self.faces
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell_center(&self, k: usize) -> [f64; 2] {
        let i = k % self.nx;
        let j = k / self.nx;
        [(i as f64 + 0.5) * self.dx, (j as f64 + 0.5) * self.dy]
    }

    /// Volume-weighted sum over bulk cells.
    pub fn bulk_integral(&self, field: &[f64]) -> f64 {
        field.iter().map(|v| v * self.cell_volume).sum()
    }

    /// Area-weighted sum over surface cells.
    pub fn surface_integral(&self, field: &[f64]) -> f64 {
        field
            .iter()
            .zip(self.faces.iter())
            .map(|(v, f)| v * f.area)
            .sum()
    }
}

/// Sparse linear operator in difference form: the action on `x` is
/// `y_k = diag[k] x_k + sum_{entries j of row k} w_j (x_{col_j} - x_k)`.
///
/// Operators assembled from fluxes have `diag = 0`, hence exactly zero row
/// sums; the equivalent matrix coefficient is `w_j` off the diagonal and
/// `diag[k] - sum_j w_j` on it.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
    diag: Vec<f64>,
}

impl SparseOperator {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            weights: Vec::new(),
            diag: vec![0.0; n],
        }
    }

    /// Builds from (row, col, weight) difference entries, merging duplicates.
    pub fn from_entries(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(r, c, w) in entries {
            debug_assert!(r != c, "difference entries must be off-diagonal");
            if let Some(slot) = rows[r].iter_mut().find(|(col, _)| *col == c) {
                slot.1 += w;
            } else {
                rows[r].push((c, w));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_by_key(|(c, _)| *c);
            for &(c, w) in row.iter() {
                cols.push(c);
                weights.push(w);
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            weights,
            diag: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[k]..self.row_ptr[k + 1]).map(move |idx| (self.cols[idx], self.weights[idx]))
    }

    /// Row sum of the equivalent matrix (exactly the explicit diagonal part).
    pub fn row_sum(&self, k: usize) -> f64 {
        self.diag[k]
    }

    /// Matrix coefficient at (k, j) of the equivalent matrix.
    pub fn coefficient(&self, k: usize, j: usize) -> f64 {
        let off: f64 = self
            .row(k)
            .filter_map(|(c, w)| (c == j).then_some(w))
            .sum();
        if k == j {
            let wsum: f64 = self.row(k).map(|(_, w)| w).sum();
            self.diag[k] - wsum
        } else {
            off
        }
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for k in 0..self.n {
            let mut acc = self.diag[k] * x[k];
            for idx in self.row_ptr[k]..self.row_ptr[k + 1] {
                acc += self.weights[idx] * (x[self.cols[idx]] - x[k]);
            }
            y[k] = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply_into(x, &mut y);
        y
    }

    /// Sum of positive difference weights per row; for an upwind advection
    /// operator this is the total volumetric influx rate per unit volume,
    /// which equals the outflux rate and governs the CFL bound.
    pub fn max_rate(&self) -> f64 {
        (0..self.n)
            .map(|k| self.row(k).map(|(_, w)| w.max(0.0)).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

fn bulk_neighbor_weights(grid: &Grid, d: f64) -> Vec<(usize, usize, f64)> {
    let mut entries = Vec::new();
    match grid.dim {
        1 => {
            let w = d / (grid.dx * grid.dx); // face area 1, distance dx, volume dx
            for i in 0..grid.nx - 1 {
                entries.push((i, i + 1, w));
                entries.push((i + 1, i, w));
            }
        }
        _ => {
            let wx = d / (grid.dx * grid.dx);
            let wy = d / (grid.dy * grid.dy);
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let k = grid.cell_index(i, j);
                    if i + 1 < grid.nx {
                        let n = grid.cell_index(i + 1, j);
                        entries.push((k, n, wx));
                        entries.push((n, k, wx));
                    }
                    if j + 1 < grid.ny {
                        let n = grid.cell_index(i, j + 1);
                        entries.push((k, n, wy));
                        entries.push((n, k, wy));
                    }
                }
            }
        }
    }
    entries
}

/// Two-point flux bulk diffusion with homogeneous Neumann walls:
/// `(L c)_K ~ d (Laplace c)(K)`. The sorption flux is added separately by
/// [`apply_coupling`].
pub fn assemble_bulk_diffusion(grid: &Grid, d: f64) -> SparseOperator {
    SparseOperator::from_entries(grid.n_cells(), &bulk_neighbor_weights(grid, d))
}

fn surface_neighbor_weights(grid: &Grid, d_surf: f64) -> Vec<(usize, usize, f64)> {
    if grid.dim == 1 {
        // zero-dimensional surface: two isolated points
        return Vec::new();
    }
    let faces = grid.faces();
    let m = faces.len();
    let mut entries = Vec::new();
    for f in 0..m {
        let g = (f + 1) % m;
        // two-point flux along the chain; centers are half an arclength
        // apart on each side, corners simply join the two face lengths
        let h = 0.5 * (faces[f].area + faces[g].area);
        entries.push((f, g, d_surf / (h * faces[f].area)));
        entries.push((g, f, d_surf / (h * faces[g].area)));
    }
    entries
}

/// Surface diffusion along the boundary chain: a periodic arclength-weighted
/// two-point flux operator in 2D, the zero operator in 1D.
pub fn assemble_surface_diffusion(grid: &Grid, d_surf: f64) -> SparseOperator {
    if grid.dim == 1 {
        return SparseOperator::zero(grid.n_faces());
    }
    SparseOperator::from_entries(grid.n_faces(), &surface_neighbor_weights(grid, d_surf))
}

/// Symmetric volume-weighted flux weights for the implicit bulk solve:
/// entries `d * A_face / dist`, so `diag(V) - dt * W` is SPD.
pub fn bulk_flux_weights(grid: &Grid, d: f64) -> SparseOperator {
    let entries: Vec<(usize, usize, f64)> = bulk_neighbor_weights(grid, d)
        .into_iter()
        .map(|(r, c, w)| (r, c, w * grid.cell_volume()))
        .collect();
    SparseOperator::from_entries(grid.n_cells(), &entries)
}

/// Symmetric area-weighted flux weights for the implicit surface solve.
pub fn surface_flux_weights(grid: &Grid, d_surf: f64) -> SparseOperator {
    if grid.dim == 1 {
        return SparseOperator::zero(grid.n_faces());
    }
    let faces = grid.faces();
    let entries: Vec<(usize, usize, f64)> = surface_neighbor_weights(grid, d_surf)
        .into_iter()
        .map(|(r, c, w)| (r, c, w * faces[r].area))
        .collect();
    SparseOperator::from_entries(grid.n_faces(), &entries)
}

/// Externally given macroscopic velocity: zero, or the divergence-free
/// field of the stream function `psi = A sin(pi x / Lx) sin(pi y / Ly)`.
#[derive(Debug, Clone, Copy)]
pub enum VelocityField {
    Zero,
    StreamFunction { amplitude: f64 },
}

/// Node values of the stream function are snapped to a fixed binary
/// quantum so that the staggered differences telescope exactly in floating
/// point: per-cell discrete divergence and every boundary flux are exact
/// zeros, not merely small.
const PSI_QUANTUM: f64 = 1.0 / 4294967296.0; // 2^-32

fn quantize(x: f64) -> f64 {
    (x / PSI_QUANTUM).round() * PSI_QUANTUM
}

/// Volumetric face fluxes of the velocity field on a 2D grid.
///
/// `x_flux[i][j]` is the flux through the vertical face at node column `i`
/// between rows `j` and `j+1` (positive in +x); `y_flux[i][j]` the flux
/// through the horizontal face at node row `j` (positive in +y).
#[derive(Debug, Clone)]
pub struct FaceFluxes {
    pub x_flux: Vec<Vec<f64>>, // (nx+1) x ny
    pub y_flux: Vec<Vec<f64>>, // nx x (ny+1)
}

impl VelocityField {
    pub fn face_fluxes(&self, grid: &Grid) -> Result<FaceFluxes, FvError> {
        let (nx, ny) = (grid.nx, grid.ny);
        let mut x_flux = vec![vec![0.0; ny]; nx + 1];
        let mut y_flux = vec![vec![0.0; ny + 1]; nx];
        match self {
            VelocityField::Zero => {}
            VelocityField::StreamFunction { amplitude } => {
                if grid.dim != 2 {
                    return Err(FvError::StreamFunctionNeeds2d);
                }
                // psi at nodes, exactly zero on the boundary
                let psi = |i: usize, j: usize| -> f64 {
                    if i == 0 || i == nx || j == 0 || j == ny {
                        0.0
                    } else {
                        quantize(
                            amplitude
                                * (std::f64::consts::PI * i as f64 / nx as f64).sin()
                                * (std::f64::consts::PI * j as f64 / ny as f64).sin(),
                        )
                    }
                };
                for (i, col) in x_flux.iter_mut().enumerate() {
                    for (j, v) in col.iter_mut().enumerate() {
                        *v = psi(i, j + 1) - psi(i, j);
                    }
                }
                for (i, row) in y_flux.iter_mut().enumerate() {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = psi(i, j) - psi(i + 1, j);
                    }
                }
            }
        }
        Ok(FaceFluxes { x_flux, y_flux })
    }

    /// Signed outward fluxes per cell, for divergence and CFL diagnostics.
    pub fn cell_divergence(&self, grid: &Grid) -> Result<Vec<f64>, FvError> {
        let fl = self.face_fluxes(grid)?;
        let mut div = vec![0.0; grid.n_cells()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let k = grid.cell_index(i, j);
                div[k] = (fl.x_flux[i + 1][j] - fl.x_flux[i][j])
                    + (fl.y_flux[i][j + 1] - fl.y_flux[i][j]);
            }
        }
        Ok(div)
    }
}

/// First-order upwind advection: the action approximates `-v . grad c`.
///
/// Because the discrete divergence vanishes exactly, the upwind matrix
/// reduces to difference form with the influx weights on the upstream
/// neighbors; constants are annihilated exactly and no mass crosses the
/// boundary (`v . nu = 0` on every boundary face).
pub fn assemble_advection(grid: &Grid, velocity: &VelocityField) -> Result<SparseOperator, FvError> {
    if matches!(velocity, VelocityField::Zero) {
        return Ok(SparseOperator::zero(grid.n_cells()));
    }
    let fl = velocity.face_fluxes(grid)?;
    let vol = grid.cell_volume();
    let mut entries = Vec::new();
    // interior vertical faces: flux F > 0 flows from (i-1, j) into (i, j)
    for i in 1..grid.nx {
        for j in 0..grid.ny {
            let f = fl.x_flux[i][j];
            let left = grid.cell_index(i - 1, j);
            let right = grid.cell_index(i, j);
            if f > 0.0 {
                entries.push((right, left, f / vol));
            } else if f < 0.0 {
                entries.push((left, right, -f / vol));
            }
        }
    }
    // interior horizontal faces: flux F > 0 flows from (i, j-1) into (i, j)
    for i in 0..grid.nx {
        for j in 1..grid.ny {
            let f = fl.y_flux[i][j];
            let below = grid.cell_index(i, j - 1);
            let above = grid.cell_index(i, j);
            if f > 0.0 {
                entries.push((above, below, f / vol));
            } else if f < 0.0 {
                entries.push((below, above, -f / vol));
            }
        }
    }
    Ok(SparseOperator::from_entries(grid.n_cells(), &entries))
}

/// Concentration fields at one instant: bulk `c[species][cell]` and surface
/// `c_surf[species][face]`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub c: Vec<Vec<f64>>,
    pub c_surf: Vec<Vec<f64>>,
}

impl State {
    pub fn new(t: f64, c: Vec<Vec<f64>>, c_surf: Vec<Vec<f64>>, grid: &Grid) -> Result<Self, FvError> {
        if c.len() != c_surf.len() {
            return Err(FvError::StateShape(format!(
                "{} bulk species vs {} surface species",
                c.len(),
                c_surf.len()
            )));
        }
        for (i, field) in c.iter().enumerate() {
            if field.len() != grid.n_cells() {
                return Err(FvError::StateShape(format!(
                    "bulk field {i} has {} cells, grid has {}",
                    field.len(),
                    grid.n_cells()
                )));
            }
        }
        for (i, field) in c_surf.iter().enumerate() {
            if field.len() != grid.n_faces() {
                return Err(FvError::StateShape(format!(
                    "surface field {i} has {} cells, chain has {}",
                    field.len(),
                    grid.n_faces()
                )));
            }
        }
        for field in c.iter().chain(c_surf.iter()) {
            for &v in field.iter() {
                if !v.is_finite() {
                    return Err(FvError::StateShape(format!("non-finite entry {v}")));
                }
            }
        }
        Ok(Self { t, c, c_surf })
    }

    pub fn constant(grid: &Grid, bulk: &[f64], surf: &[f64]) -> Self {
        Self {
            t: 0.0,
            c: bulk.iter().map(|&v| vec![v; grid.n_cells()]).collect(),
            c_surf: surf.iter().map(|&v| vec![v; grid.n_faces()]).collect(),
        }
    }

    pub fn n_species(&self) -> usize {
        self.c.len()
    }

    pub fn min_value(&self) -> f64 {
        self.c
            .iter()
            .chain(self.c_surf.iter())
            .flat_map(|f| f.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.c
            .iter()
            .chain(self.c_surf.iter())
            .flat_map(|f| f.iter().map(|v| v.abs()))
            .fold(0.0, f64::max)
    }
}

/// Evaluates the sorption coupling for the current state: the Neumann flux
/// out of each boundary cell and the matching surface source.
///
/// For face `f` (area `a`) adjacent to cell `K` (volume `V`) the bulk trace
/// is the adjacent cell value, the rate is `s_i(c_K, c^S_f)`, the bulk
/// source density is `-s_i a / V` and the surface source is `+s_i`, so the
/// total exchanged mass cancels by construction.
pub fn apply_coupling(
    grid: &Grid,
    model: &SorptionModel,
    state: &State,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), FvError> {
    let n = model.n_species();
    if state.n_species() != n {
        return Err(FvError::StateShape(format!(
            "state has {} species, sorption model has {n}",
            state.n_species()
        )));
    }
    for field in state.c.iter().chain(state.c_surf.iter()) {
        for (k, &v) in field.iter().enumerate() {
            if !(v >= 0.0) {
                return Err(FvError::Model(ModelError::NegativeConcentration {
                    index: k,
                    value: v,
                }));
            }
        }
    }
    let vol = grid.cell_volume();
    let mut bulk_source = vec![vec![0.0; grid.n_cells()]; n];
    let mut surf_source = vec![vec![0.0; grid.n_faces()]; n];
    let mut trace = vec![0.0; n];
    let mut surf = vec![0.0; n];
    for (f, face) in grid.faces().iter().enumerate() {
        for i in 0..n {
            trace[i] = state.c[i][face.cell];
            surf[i] = state.c_surf[i][f];
        }
        let s = model.rates(&trace, &surf)?;
        for i in 0..n {
            bulk_source[i][face.cell] -= s[i] * face.area / vol;
            surf_source[i][f] += s[i];
        }
    }
    Ok((bulk_source, surf_source))
}

fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders a bulk or surface field in the plain-text snapshot format:
/// header lines prefixed `#` (time, species, grid shape), then one line per
/// cell `i x [y] value`.
pub fn dump_field(grid: &Grid, field: &[f64], t: f64, species: &str, surface: bool) -> String {
    let mut out = String::new();
    out.push_str(&format!("# t = {}\n", fmt_value(t)));
    out.push_str(&format!("# species = {species}\n"));
    if grid.dim == 1 {
        out.push_str(&format!("# grid = dim=1 nx={} lx={}\n", grid.nx, grid.lx));
    } else {
        out.push_str(&format!(
            "# grid = dim=2 nx={} ny={} lx={} ly={}\n",
            grid.nx, grid.ny, grid.lx, grid.ly
        ));
    }
    out.push_str(&format!(
        "# field = {}\n",
        if surface { "surface" } else { "bulk" }
    ));
    if surface {
        for (i, (face, v)) in grid.faces().iter().zip(field.iter()).enumerate() {
            if grid.dim == 1 {
                out.push_str(&format!("{i} {} {}\n", face.center[0], fmt_value(*v)));
            } else {
                out.push_str(&format!(
                    "{i} {} {} {}\n",
                    face.center[0],
                    face.center[1],
                    fmt_value(*v)
                ));
            }
        }
    } else {
        for (k, v) in field.iter().enumerate() {
            let c = grid.cell_center(k);
            if grid.dim == 1 {
                out.push_str(&format!("{k} {} {}\n", c[0], fmt_value(*v)));
            } else {
                out.push_str(&format!("{k} {} {} {}\n", c[0], c[1], fmt_value(*v)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_1d_partition() {
        let g = Grid::line(4, 1.0).unwrap();
        assert_eq!(g.n_cells(), 4);
        assert_eq!(g.cell_volume(), 0.25);
        assert_eq!(g.n_faces(), 2);
        assert!(g.faces().iter().all(|f| f.area == 1.0));
        assert_eq!(g.faces()[0].cell, 0);
        assert_eq!(g.faces()[1].cell, 3);
        assert!(Grid::line(1, 1.0).is_err());
        assert!(Grid::line(4, 0.0).is_err());
    }

    #[test]
    fn grid_2d_boundary_chain() {
        let g = Grid::rectangle(3, 3, 1.0, 1.0).unwrap();
        assert_eq!(g.n_cells(), 9);
        assert_eq!(g.n_faces(), 12);
        let perimeter: f64 = g.faces().iter().map(|f| f.area).sum();
        assert!((perimeter - 4.0).abs() < 1e-14);
        let area: f64 = g.cell_volume() * g.n_cells() as f64;
        assert!((area - 1.0).abs() < 1e-14);
        // every boundary face maps to a boundary cell
        for f in g.faces() {
            let c = g.cell_center(f.cell);
            assert!(
                c[0] < g.dx || c[0] > g.lx - g.dx || c[1] < g.dy || c[1] > g.ly - g.dy
            );
        }
    }

    #[test]
    fn chain_is_one_closed_cycle() {
        let g = Grid::rectangle(4, 3, 2.0, 1.0).unwrap();
        let faces = g.faces();
        let m = faces.len();
        assert_eq!(m, 2 * (4 + 3));
        // consecutive faces (periodically) are adjacent along the boundary:
        // the arclength between centers equals the mean of the two lengths
        for f in 0..m {
            let gnext = (f + 1) % m;
            let a = faces[f].center;
            let b = faces[gnext].center;
            let dist = (a[0] - b[0]).abs() + (a[1] - b[1]).abs();
            let expected = 0.5 * (faces[f].area + faces[gnext].area);
            assert!(
                (dist - expected).abs() < 1e-12,
                "faces {f},{gnext}: dist {dist} vs {expected}"
            );
        }
        // and every face appears exactly once
        let mut seen = vec![0usize; g.n_cells()];
        for f in faces {
            seen[f.cell] += 1;
        }
        assert!(seen.iter().all(|&s| s <= 2)); // corners twice, edges once
    }

    #[test]
    fn bulk_diffusion_stencil_and_row_sums() {
        let g = Grid::line(3, 1.0).unwrap();
        let op = assemble_bulk_diffusion(&g, 1.0);
        // interior row: (1, -2, 1)/h^2 with h = 1/3
        let h2 = (1.0f64 / 3.0) * (1.0f64 / 3.0);
        assert!((op.coefficient(1, 0) - 1.0 / h2).abs() < 1e-9);
        assert!((op.coefficient(1, 1) + 2.0 / h2).abs() < 1e-9);
        assert!((op.coefficient(1, 2) - 1.0 / h2).abs() < 1e-9);
        for k in 0..3 {
            assert_eq!(op.row_sum(k), 0.0);
        }
        // constants are annihilated exactly
        let c = vec![0.7; 3];
        assert_eq!(op.apply(&c), vec![0.0; 3]);
    }

    #[test]
    fn bulk_diffusion_conserves_mass() {
        let g = Grid::rectangle(5, 4, 1.0, 2.0).unwrap();
        let op = assemble_bulk_diffusion(&g, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c: Vec<f64> = (0..g.n_cells()).map(|_| rng.gen_range(0.0..5.0)).collect();
        let lc = op.apply(&c);
        let total = g.bulk_integral(&lc);
        assert!(total.abs() < 1e-12, "mass rate {total}");
        // symmetry of the volume-weighted form on a uniform grid
        let w = bulk_flux_weights(&g, 0.3);
        for k in 0..g.n_cells() {
            for (j, wkj) in w.row(k) {
                let wjk = w
                    .row(j)
                    .find_map(|(c2, v)| (c2 == k).then_some(v))
                    .unwrap();
                assert_eq!(wkj, wjk);
            }
        }
    }

    #[test]
    fn surface_diffusion_1d_is_zero_and_2d_is_periodic() {
        let g1 = Grid::line(8, 1.0).unwrap();
        let op1 = assemble_surface_diffusion(&g1, 2.0);
        assert_eq!(op1.nnz(), 0);
        assert_eq!(op1.apply(&[1.0, 3.0]), vec![0.0, 0.0]);

        // uniform square chain: interior stencil d (1,-2,1)/h^2 with wrap
        let g2 = Grid::rectangle(4, 4, 1.0, 1.0).unwrap();
        let d = 0.5;
        let op2 = assemble_surface_diffusion(&g2, d);
        let h = 0.25;
        let m = g2.n_faces();
        for f in 0..m {
            let prev = (f + m - 1) % m;
            let next = (f + 1) % m;
            assert!((op2.coefficient(f, prev) - d / (h * h)).abs() < 1e-9);
            assert!((op2.coefficient(f, next) - d / (h * h)).abs() < 1e-9);
            assert_eq!(op2.row_sum(f), 0.0);
        }
        let c = vec![2.25; m];
        assert_eq!(op2.apply(&c), vec![0.0; m]);
    }

    #[test]
    fn stream_function_is_exactly_divergence_free() {
        let g = Grid::rectangle(8, 8, 1.0, 1.0).unwrap();
        let v = VelocityField::StreamFunction { amplitude: 1.0 };
        let div = v.cell_divergence(&g).unwrap();
        assert!(div.iter().all(|&d| d == 0.0), "nonzero divergence {div:?}");
        // no flow through the boundary
        let fl = v.face_fluxes(&g).unwrap();
        for j in 0..g.ny {
            assert_eq!(fl.x_flux[0][j], 0.0);
            assert_eq!(fl.x_flux[g.nx][j], 0.0);
        }
        for i in 0..g.nx {
            assert_eq!(fl.y_flux[i][0], 0.0);
            assert_eq!(fl.y_flux[i][g.ny], 0.0);
        }
        // non-square grids too
        let g = Grid::rectangle(6, 9, 2.0, 1.0).unwrap();
        let div = v.cell_divergence(&g).unwrap();
        assert!(div.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn advection_operator_properties() {
        let g = Grid::rectangle(8, 8, 1.0, 1.0).unwrap();
        let zero = assemble_advection(&g, &VelocityField::Zero).unwrap();
        assert_eq!(zero.nnz(), 0);

        let v = VelocityField::StreamFunction { amplitude: 1.0 };
        let op = assemble_advection(&g, &v).unwrap();
        // constants are annihilated exactly
        let c = vec![3.5; g.n_cells()];
        assert_eq!(op.apply(&c), vec![0.0; g.n_cells()]);
        // advection moves no net mass
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c: Vec<f64> = (0..g.n_cells()).map(|_| rng.gen_range(0.0..2.0)).collect();
        let ac = op.apply(&c);
        let total = g.bulk_integral(&ac);
        let scale: f64 = g.bulk_integral(&c.iter().map(|v| v.abs()).collect::<Vec<_>>())
            * op.max_rate();
        assert!(total.abs() <= 1e-13 * scale.max(1.0), "net mass rate {total}");

        // stream function on a 1D grid is a usage error
        let g1 = Grid::line(8, 1.0).unwrap();
        assert!(matches!(
            assemble_advection(&g1, &v),
            Err(FvError::StreamFunctionNeeds2d)
        ));
    }

    #[test]
    fn coupling_henry_equilibrium_vanishes() {
        let g = Grid::line(4, 1.0).unwrap();
        let m = SorptionModel::henry(vec![1.0], vec![1.0]).unwrap();
        let st = State::constant(&g, &[2.0], &[2.0]);
        let (bulk, surf) = apply_coupling(&g, &m, &st).unwrap();
        assert!(bulk[0].iter().all(|&v| v == 0.0));
        assert!(surf[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coupling_single_face_scaling() {
        // Henry with c_K = 2, c_surf = 0.5: s = 1.5; a = 1, V = 0.25
        let g = Grid::line(4, 1.0).unwrap();
        let m = SorptionModel::henry(vec![1.0], vec![1.0]).unwrap();
        let mut st = State::constant(&g, &[2.0], &[0.5]);
        // silence the right face by putting it at equilibrium
        st.c_surf[0][1] = 2.0;
        let (bulk, surf) = apply_coupling(&g, &m, &st).unwrap();
        assert_eq!(bulk[0][0], -6.0);
        assert_eq!(surf[0][0], 1.5);
        assert_eq!(bulk[0][3], 0.0);
        assert_eq!(surf[0][1], 0.0);
    }

    #[test]
    fn coupling_antisymmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        // 1D power-of-two grid: the exchange cancels exactly
        let g = Grid::line(8, 1.0).unwrap();
        let m = SorptionModel::langmuir(vec![1.0, 2.0], vec![0.5, 1.0], vec![1.0, 1.0], 2.0)
            .unwrap();
        let st = State::new(
            0.0,
            (0..2)
                .map(|_| (0..8).map(|_| rng.gen_range(0.0..3.0)).collect())
                .collect(),
            (0..2)
                .map(|_| (0..2).map(|_| rng.gen_range(0.0..3.0)).collect())
                .collect(),
            &g,
        )
        .unwrap();
        let (bulk, surf) = apply_coupling(&g, &m, &st).unwrap();
        for i in 0..2 {
            let bulk_rate = g.bulk_integral(&bulk[i]);
            let surf_rate = g.surface_integral(&surf[i]);
            assert_eq!(bulk_rate + surf_rate, 0.0);
        }

        // 2D: cancellation up to summation-order rounding
        let g = Grid::rectangle(16, 16, 1.0, 1.0).unwrap();
        let st = State::new(
            0.0,
            (0..2)
                .map(|_| (0..g.n_cells()).map(|_| rng.gen_range(0.0..3.0)).collect())
                .collect(),
            (0..2)
                .map(|_| (0..g.n_faces()).map(|_| rng.gen_range(0.0..3.0)).collect())
                .collect(),
            &g,
        )
        .unwrap();
        let (bulk, surf) = apply_coupling(&g, &m, &st).unwrap();
        for i in 0..2 {
            let bulk_rate = g.bulk_integral(&bulk[i]);
            let surf_rate = g.surface_integral(&surf[i]);
            let scale: f64 = surf[i]
                .iter()
                .zip(g.faces())
                .map(|(s, f)| (s * f.area).abs())
                .sum();
            assert!(
                (bulk_rate + surf_rate).abs() <= 1e-14 * scale.max(1.0),
                "species {i}: {bulk_rate} vs {surf_rate}"
            );
        }
    }

    #[test]
    fn semi_discrete_rhs_conserves_total_mass() {
        // with reactions off, the assembled right-hand side (diffusion +
        // advection + coupling) moves no net mass on random states
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let g = Grid::rectangle(8, 8, 1.0, 1.0).unwrap();
        let m = SorptionModel::volmer(vec![1.3], vec![0.7], vec![1.0], 2.0, 0.5).unwrap();
        let diff = assemble_bulk_diffusion(&g, 0.6);
        let sdiff = assemble_surface_diffusion(&g, 0.4);
        let adv = assemble_advection(&g, &VelocityField::StreamFunction { amplitude: 1.0 })
            .unwrap();
        for _ in 0..10 {
            let c: Vec<f64> = (0..g.n_cells()).map(|_| rng.gen_range(0.0..3.0)).collect();
            let cs: Vec<f64> = (0..g.n_faces()).map(|_| rng.gen_range(0.0..3.0)).collect();
            let st = State::new(0.0, vec![c.clone()], vec![cs.clone()], &g).unwrap();
            let (bulk_src, surf_src) = apply_coupling(&g, &m, &st).unwrap();
            let mut bulk_rate = diff.apply(&c);
            let advected = adv.apply(&c);
            for k in 0..g.n_cells() {
                bulk_rate[k] += advected[k] + bulk_src[0][k];
            }
            let mut surf_rate = sdiff.apply(&cs);
            for f in 0..g.n_faces() {
                surf_rate[f] += surf_src[0][f];
            }
            let total = g.bulk_integral(&bulk_rate) + g.surface_integral(&surf_rate);
            let scale: f64 = g.bulk_integral(&c) + g.surface_integral(&cs);
            assert!(
                total.abs() <= 1e-12 * scale.max(1.0) * diff.max_rate().max(adv.max_rate()),
                "net mass rate {total}"
            );
        }
    }

    #[test]
    fn coupling_rejects_negative_state() {
        let g = Grid::line(4, 1.0).unwrap();
        let m = SorptionModel::henry(vec![1.0], vec![1.0]).unwrap();
        let mut st = State::constant(&g, &[1.0], &[1.0]);
        st.c[0][2] = -0.5;
        assert!(apply_coupling(&g, &m, &st).is_err());
    }

    #[test]
    fn snapshot_format() {
        let g = Grid::line(2, 1.0).unwrap();
        let text = dump_field(&g, &[1.0, 2.0], 0.5, "A", false);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# t = "));
        assert!(lines[1].contains("species = A"));
        assert!(lines[2].contains("dim=1 nx=2"));
        assert!(lines[4].starts_with("0 0.25 "));
        assert!(lines[5].starts_with("1 0.75 "));
        // surface dump carries face coordinates
        let g2 = Grid::rectangle(2, 2, 1.0, 1.0).unwrap();
        let text = dump_field(&g2, &[0.0; 8], 0.0, "B", true);
        assert_eq!(text.lines().count(), 4 + 8);
    }
}
