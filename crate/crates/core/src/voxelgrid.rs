//! Segmented binary voxel volumes.
//!
//! Phase labels are fixed as `0 = pore`, `1 = solid`, stored x-fastest
//! (`index = x + nx * (y + ny * z)`). The on-disk format is a headerless
//! `u8` payload plus a plain-text sidecar carrying the dimensions,
//! resolution and phase convention.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::rng_from_seed;

pub const PORE: u8 = 0;
pub const SOLID: u8 = 1;

/// Phase convention string written to every header.
pub const PHASE_CONVENTION: &str = "pore=0,solid=1";

/// Voxel edge length used by the synthetic generators (meters).
pub const DEFAULT_RESOLUTION: f64 = 2e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    dims: [usize; 3],
    resolution: f64,
    data: Vec<u8>,
}

/// Pore volume fraction in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Porosity(f64);

impl Porosity {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(invalid(format!("porosity {value} outside [0, 1]")));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl VoxelGrid {
    pub fn new(dims: [usize; 3], resolution: f64, data: Vec<u8>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(invalid(format!("grid dimensions must be positive, got {dims:?}")));
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(invalid(format!("resolution must be positive, got {resolution}")));
        }
        let n = voxel_count(dims)?;
        if data.len() != n {
            return Err(invalid(format!(
                "data length {} does not match {}x{}x{}",
                data.len(),
                dims[0],
                dims[1],
                dims[2]
            )));
        }
        if let Some(pos) = data.iter().position(|&v| v > SOLID) {
            return Err(invalid(format!("voxel {pos} has label {} (expected 0 or 1)", data[pos])));
        }
        Ok(Self { dims, resolution, data })
    }

    /// Uniform grid of a single phase.
    pub fn filled(dims: [usize; 3], resolution: f64, phase: u8) -> Result<Self> {
        let n = if dims.contains(&0) { 0 } else { voxel_count(dims)? };
        Self::new(dims, resolution, vec![phase; n])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> u8 {
        self.data[self.index(x, y, z)]
    }

    /// Inverse of [`VoxelGrid::index`].
    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    pub fn count_phase(&self, phase: u8) -> usize {
        self.data.iter().filter(|&&v| v == phase).count()
    }

    pub fn porosity(&self) -> Porosity {
        Porosity(self.count_phase(PORE) as f64 / self.data.len() as f64)
    }

    /// Copy of the axis-aligned block `[origin, origin + size)`.
    pub fn subcube(&self, origin: [usize; 3], size: [usize; 3]) -> Result<VoxelGrid> {
        for a in 0..3 {
            if size[a] == 0 || origin[a].checked_add(size[a]).is_none_or(|end| end > self.dims[a]) {
                return Err(invalid(format!(
                    "subcube origin {origin:?} size {size:?} exceeds grid {:?}",
                    self.dims
                )));
            }
        }
        let mut data = Vec::with_capacity(size[0] * size[1] * size[2]);
        for z in origin[2]..origin[2] + size[2] {
            for y in origin[1]..origin[1] + size[1] {
                let start = self.index(origin[0], y, z);
                data.extend_from_slice(&self.data[start..start + size[0]]);
            }
        }
        VoxelGrid::new(size, self.resolution, data)
    }

    pub fn with_resolution(mut self, resolution: f64) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(invalid(format!("resolution must be positive, got {resolution}")));
        }
        self.resolution = resolution;
        Ok(self)
    }
}

fn voxel_count(dims: [usize; 3]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| invalid(format!("grid {dims:?} is too large")))
}

pub fn porosity(grid: &VoxelGrid) -> Porosity {
    grid.porosity()
}

pub fn subcube(grid: &VoxelGrid, origin: [usize; 3], size: [usize; 3]) -> Result<VoxelGrid> {
    grid.subcube(origin, size)
}

// ---------------------------------------------------------------------------
// Synthetic generators
// ---------------------------------------------------------------------------

/// Solid sphere in continuous voxel coordinates (voxel `i` spans `[i, i+1)`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sphere {
    pub center: [f64; 3],
    pub radius: f64,
}

/// Draws `n` spheres with centers uniform over the volume and radii uniform
/// in `radius_range`. Each sphere consumes a fixed number of draws, so the
/// first `k` spheres for a seed are the same for every `n >= k`.
pub fn sample_spheres(
    dims: [usize; 3],
    n: usize,
    radius_range: (f64, f64),
    seed: u64,
) -> Result<Vec<Sphere>> {
    if dims.contains(&0) {
        return Err(invalid(format!("grid dimensions must be positive, got {dims:?}")));
    }
    let (rmin, rmax) = radius_range;
    if !(rmin.is_finite() && rmax.is_finite() && rmin > 0.0 && rmax >= rmin) {
        return Err(invalid(format!("radius range ({rmin}, {rmax}) must be positive and ordered")));
    }
    let mut rng = rng_from_seed(seed);
    let spheres = (0..n)
        .map(|_| {
            let center = [
                rng.random::<f64>() * dims[0] as f64,
                rng.random::<f64>() * dims[1] as f64,
                rng.random::<f64>() * dims[2] as f64,
            ];
            let u: f64 = rng.random();
            Sphere { center, radius: rmin + u * (rmax - rmin) }
        })
        .collect();
    Ok(spheres)
}

/// Marks every voxel whose center lies inside (or on) a sphere as solid,
/// leaving the rest pore.
pub fn rasterize_spheres(dims: [usize; 3], resolution: f64, spheres: &[Sphere]) -> Result<VoxelGrid> {
    let mut grid = VoxelGrid::filled(dims, resolution, PORE)?;
    let [nx, ny, nz] = dims;
    for s in spheres {
        let r2 = s.radius * s.radius;
        let range = |c: f64, n: usize| {
            // Voxel centers at i + 0.5 within [c - r, c + r].
            let lo = (c - s.radius - 0.5).ceil().max(0.0) as usize;
            let hi = ((c + s.radius - 0.5).floor() + 1.0).clamp(0.0, n as f64) as usize;
            lo..hi
        };
        for z in range(s.center[2], nz) {
            let dz = z as f64 + 0.5 - s.center[2];
            for y in range(s.center[1], ny) {
                let dy = y as f64 + 0.5 - s.center[1];
                let rem = r2 - dz * dz - dy * dy;
                if rem < 0.0 {
                    continue;
                }
                for x in range(s.center[0], nx) {
                    let dx = x as f64 + 0.5 - s.center[0];
                    if dx * dx <= rem {
                        let i = grid.index(x, y, z);
                        grid.data[i] = SOLID;
                    }
                }
            }
        }
    }
    Ok(grid)
}

/// Random solid-sphere pack on a pore background; overlapping spheres union.
pub fn gen_sphere_pack(
    dims: [usize; 3],
    n_spheres: usize,
    radius_range: (f64, f64),
    seed: u64,
) -> Result<VoxelGrid> {
    let spheres = sample_spheres(dims, n_spheres, radius_range, seed)?;
    rasterize_spheres(dims, DEFAULT_RESOLUTION, &spheres)
}

// ---------------------------------------------------------------------------
// Raw I/O
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawHeader {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub resolution_m: f64,
    pub phase_convention: String,
}

/// Sidecar path for a raw payload: `sample.raw` -> `sample.raw.hdr`.
pub fn header_path(raw: &Path) -> PathBuf {
    let mut s = raw.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}

pub fn write_raw(grid: &VoxelGrid, path: &Path) -> Result<()> {
    let header = RawHeader {
        nx: grid.dims[0],
        ny: grid.dims[1],
        nz: grid.dims[2],
        resolution_m: grid.resolution,
        phase_convention: PHASE_CONVENTION.to_string(),
    };
    let text = toml::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(header_path(path), text)?;
    fs::write(path, &grid.data)?;
    Ok(())
}

pub fn read_raw(path: &Path) -> Result<VoxelGrid> {
    let hpath = header_path(path);
    let text = fs::read_to_string(&hpath)
        .map_err(|e| Error::Format(format!("cannot read header {}: {e}", hpath.display())))?;
    let header: RawHeader =
        toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", hpath.display())))?;
    if header.phase_convention != PHASE_CONVENTION {
        return Err(Error::Format(format!(
            "unsupported phase convention {:?} (expected {PHASE_CONVENTION:?})",
            header.phase_convention
        )));
    }
    let data = fs::read(path)?;
    let dims = [header.nx, header.ny, header.nz];
    let expected = voxel_count(dims).map_err(|e| Error::Format(e.to_string()))?;
    if data.len() != expected {
        return Err(Error::Format(format!(
            "payload has {} bytes but header declares {}x{}x{} = {expected}",
            data.len(),
            dims[0],
            dims[1],
            dims[2]
        )));
    }
    VoxelGrid::new(dims, header.resolution_m, data).map_err(|e| Error::Format(e.to_string()))
}
