//! Narrow band of Cartesian grid points around a surface.

use crate::geometry::Vec3;
use crate::surfaces::{ClosestPointField, CpResult, SurfaceError};
use rayon::prelude::*;

/// Default cap on the number of band points.
pub const DEFAULT_MAX_POINTS: usize = 5_000_000;
/// Cap on the number of candidate cells in the search box.
pub const MAX_BOX_CELLS: usize = 400_000_000;

const ABSENT: u32 = u32::MAX;

#[derive(Debug, thiserror::Error)]
pub enum BandError {
    #[error("invalid band parameters: {0}")]
    InvalidInput(String),
    #[error("no grid point lies within the band (dx = {dx} is too large for the surface)")]
    EmptyBand { dx: f64 },
    #[error("band has {points} points, above the cap of {cap}")]
    BandTooLarge { points: usize, cap: usize },
    #[error("closest point query failed: {0}")]
    Surface(#[from] SurfaceError),
}

#[derive(Debug, Clone, Copy)]
pub struct BandOptions {
    pub max_points: usize,
}

impl Default for BandOptions {
    fn default() -> Self {
        Self {
            max_points: DEFAULT_MAX_POINTS,
        }
    }
}

/// Band radius that closes the difference stencil around every node of a
/// degree-`p` interpolation stencil, `p = max(degree, 3)`.
pub fn bandwidth(dim: usize, dx: f64, interp_degree: usize) -> f64 {
    let p = interp_degree.max(3) as f64;
    let h = (p + 1.0) / 2.0;
    (((dim - 1) as f64) * h * h + (1.0 + h) * (1.0 + h)).sqrt() * dx
}

/// One axis neighbor of a band point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub axis: usize,
    /// `-1` or `+1`.
    pub direction: i8,
    /// Band row of the neighbor, `None` when it is outside the band.
    pub row: Option<usize>,
}

/// Grid points within `bandwidth` of a surface, sorted lexicographically by
/// integer coordinate. Point `g` sits at `origin + g·dx`.
#[derive(Debug, Clone)]
pub struct BandGrid {
    dx: f64,
    dim: usize,
    origin: Vec3,
    bandwidth: f64,
    lo: [i64; 3],
    shape: [usize; 3],
    points: Vec<[i64; 3]>,
    cp: Vec<CpResult>,
    lookup: Vec<u32>,
}

pub fn build_band(
    field: &dyn ClosestPointField,
    dx: f64,
    interp_degree: usize,
) -> Result<BandGrid, BandError> {
    build_band_with(field, dx, interp_degree, &BandOptions::default())
}

pub fn build_band_with(
    field: &dyn ClosestPointField,
    dx: f64,
    interp_degree: usize,
    opts: &BandOptions,
) -> Result<BandGrid, BandError> {
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(BandError::InvalidInput(format!(
            "dx must be positive, got {dx}"
        )));
    }
    if !(interp_degree == 1 || interp_degree == 3) {
        return Err(BandError::InvalidInput(format!(
            "interpolation degree must be 1 or 3, got {interp_degree}"
        )));
    }
    let dim = field.embedding_dim();
    if !(dim == 2 || dim == 3) {
        return Err(BandError::InvalidInput(format!(
            "embedding dimension {dim} is not 2 or 3"
        )));
    }
    let bw = bandwidth(dim, dx, interp_degree);
    let bbox = field.bounding_box();
    // A grid coarser than the surface itself resolves nothing.
    if dx > bbox.diagonal() {
        return Err(BandError::EmptyBand { dx });
    }
    let mut origin = field.center() - Vec3::repeat(dx / 2.0);
    if dim == 2 {
        origin.z = 0.0;
    }

    let mut lo = [0i64; 3];
    let mut shape = [1usize; 3];
    for a in 0..dim {
        let l = ((bbox.min[a] - bw - origin[a]) / dx).floor() as i64;
        let h = ((bbox.max[a] + bw - origin[a]) / dx).ceil() as i64;
        lo[a] = l;
        shape[a] = (h - l + 1) as usize;
    }
    let cells = shape.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s));
    let cells = match cells {
        Some(c) if c <= MAX_BOX_CELLS => c,
        _ => {
            return Err(BandError::BandTooLarge {
                points: cells.unwrap_or(usize::MAX),
                cap: opts.max_points,
            })
        }
    };

    let [_, ny, nz] = shape;
    let pos = |g: &[i64; 3]| -> Vec3 {
        let mut p = origin;
        for a in 0..dim {
            p[a] += g[a] as f64 * dx;
        }
        p
    };
    let hits: Vec<(usize, CpResult)> = (0..cells)
        .into_par_iter()
        .filter_map(|flat| {
            let g = [
                lo[0] + (flat / (ny * nz)) as i64,
                lo[1] + ((flat / nz) % ny) as i64,
                lo[2] + (flat % nz) as i64,
            ];
            match field.closest_point(&pos(&g)) {
                Ok(c) if c.dist <= bw => Some(Ok((flat, c))),
                Ok(_) => None,
                Err(e) => Some(Err(e)),
            }
        })
        .collect::<Result<_, _>>()?;

    if hits.is_empty() {
        return Err(BandError::EmptyBand { dx });
    }
    if hits.len() > opts.max_points {
        return Err(BandError::BandTooLarge {
            points: hits.len(),
            cap: opts.max_points,
        });
    }
    let mut lookup = vec![ABSENT; cells];
    let mut points = Vec::with_capacity(hits.len());
    let mut cp = Vec::with_capacity(hits.len());
    for (row, (flat, c)) in hits.into_iter().enumerate() {
        lookup[flat] = row as u32;
        points.push([
            lo[0] + (flat / (ny * nz)) as i64,
            lo[1] + ((flat / nz) % ny) as i64,
            lo[2] + (flat % nz) as i64,
        ]);
        cp.push(c);
    }
    Ok(BandGrid {
        dx,
        dim,
        origin,
        bandwidth: bw,
        lo,
        shape,
        points,
        cp,
        lookup,
    })
}

impl BandGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn points(&self) -> &[[i64; 3]] {
        &self.points
    }

    pub fn cp(&self, row: usize) -> &CpResult {
        &self.cp[row]
    }

    pub fn cp_cache(&self) -> &[CpResult] {
        &self.cp
    }

    /// Physical position of grid coordinate `g`.
    pub fn grid_position(&self, g: &[i64; 3]) -> Vec3 {
        let mut p = self.origin;
        for a in 0..self.dim {
            p[a] += g[a] as f64 * self.dx;
        }
        p
    }

    pub fn position(&self, row: usize) -> Vec3 {
        self.grid_position(&self.points[row])
    }

    /// Fractional grid coordinate of a physical point.
    pub fn to_grid(&self, x: &Vec3) -> [f64; 3] {
        let mut t = [0.0; 3];
        for a in 0..self.dim {
            t[a] = (x[a] - self.origin[a]) / self.dx;
        }
        t
    }

    /// Band row of grid coordinate `g`, if it is in the band.
    pub fn index_of(&self, g: &[i64; 3]) -> Option<usize> {
        let mut flat = 0usize;
        for a in 0..3 {
            let off = g[a] - self.lo[a];
            if off < 0 || off as usize >= self.shape[a] {
                return None;
            }
            flat = flat * self.shape[a] + off as usize;
        }
        match self.lookup[flat] {
            ABSENT => None,
            r => Some(r as usize),
        }
    }

    pub fn neighbor(&self, row: usize, axis: usize, direction: i8) -> Option<usize> {
        let mut g = self.points[row];
        g[axis] += direction as i64;
        self.index_of(&g)
    }

    /// The `2·dim` axis neighbors, ordered by axis then `-1` before `+1`.
    pub fn neighbors(&self, row: usize) -> Vec<Neighbor> {
        let mut out = Vec::with_capacity(2 * self.dim);
        for axis in 0..self.dim {
            for direction in [-1i8, 1] {
                out.push(Neighbor {
                    axis,
                    direction,
                    row: self.neighbor(row, axis, direction),
                });
            }
        }
        out
    }
}
