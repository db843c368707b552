//! Synthetic labeled corpora: random sphere packs at several subcube sizes,
//! converted to Mapper graphs and labeled by the differential effective
//! medium model plus Gaussian noise.
//!
//! Solid spheres with radii uniform in `[r_min, r_max]` are placed uniformly
//! (a Boolean model), so the expected porosity after placing `n` spheres in a
//! cube of edge `s` is `exp(-n E[V] / s^3)`. Each sample draws a target
//! porosity and inverts that relation for `n`; the label uses the porosity
//! actually realized on the grid. Sphere centers are confined to the cube, so
//! coverage near the faces is lower and the realized porosity runs somewhat
//! above the target, more so for small cubes.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{synth_labels, write_manifest, Sample};
use crate::effmed::{DemParams, ElasticModuli};
use crate::error::{invalid, Result};
use crate::mapper::{build_graph, MapperParams, RockGraph};
use crate::rng::{child_seed, derive_seed, rng_from_seed};
use crate::voxelgrid::{gen_sphere_pack, write_raw, VoxelGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub n_samples: usize,
    /// Subcube edge lengths, assigned round-robin by sample index.
    pub sizes: Vec<usize>,
    pub radius_range: (f64, f64),
    /// Range of the target porosity drawn per sample.
    pub porosity_range: (f64, f64),
    pub mapper: MapperParams,
    pub noise_sigma: f64,
    pub dem: DemParams,
    pub seed: u64,
}

impl CorpusSpec {
    pub fn new(n_samples: usize, sizes: Vec<usize>, dem: DemParams, seed: u64) -> Self {
        CorpusSpec {
            n_samples,
            sizes,
            radius_range: (3.0, 6.0),
            porosity_range: (0.05, 0.40),
            mapper: MapperParams::default(),
            noise_sigma: 0.5,
            dem,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (r0, r1) = self.radius_range;
        let (p0, p1) = self.porosity_range;
        if self.sizes.is_empty() || self.sizes.iter().any(|&s| s < self.mapper.n_intervals) {
            return Err(invalid("every subcube size must be at least the number of cover intervals"));
        }
        if !(r0 > 0.0 && r0 <= r1 && r1.is_finite()) {
            return Err(invalid(format!("bad radius range ({r0}, {r1})")));
        }
        if !(p0 > 0.0 && p0 <= p1 && p1 < 1.0) {
            return Err(invalid(format!("porosity range ({p0}, {p1}) must lie in (0, 1)")));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(invalid("noise sigma must be finite and non-negative"));
        }
        self.dem.validate()
    }
}

/// Mean sphere volume for radii uniform in `[a, b]`.
pub fn mean_sphere_volume(a: f64, b: f64) -> f64 {
    if b == a {
        4.0 / 3.0 * PI * a.powi(3)
    } else {
        PI / 3.0 * (b.powi(4) - a.powi(4)) / (b - a)
    }
}

/// Sphere count whose expected Boolean-model porosity is `phi` in a cube of
/// edge `size`.
pub fn spheres_for_porosity(phi: f64, size: usize, radius_range: (f64, f64)) -> usize {
    let vol = (size as f64).powi(3);
    (-phi.ln() * vol / mean_sphere_volume(radius_range.0, radius_range.1)).round() as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSample {
    pub id: String,
    pub size: usize,
    pub porosity: f64,
    pub grid: VoxelGrid,
    pub graph: RockGraph,
    pub label: ElasticModuli,
}

/// Builds sample `index` of the corpus; depends only on `(spec, index)`.
pub fn generate_sample(spec: &CorpusSpec, index: usize) -> Result<CorpusSample> {
    let size = spec.sizes[index % spec.sizes.len()];
    let seed = child_seed(spec.seed, index as u64);
    let mut rng = rng_from_seed(derive_seed(seed, "porosity"));
    let (p0, p1) = spec.porosity_range;
    let target = if p1 > p0 { rng.random_range(p0..p1) } else { p0 };
    let n = spheres_for_porosity(target, size, spec.radius_range);
    let grid = gen_sphere_pack([size; 3], n, spec.radius_range, derive_seed(seed, "spheres"))?;
    let graph = build_graph(&grid, &spec.mapper)?;
    let label = synth_labels(&grid, &spec.dem, spec.noise_sigma, derive_seed(seed, "noise"))?;
    Ok(CorpusSample {
        id: format!("s{index:04}_w{size}"),
        size,
        porosity: grid.porosity().value(),
        grid,
        graph,
        label,
    })
}

/// Generates all samples (in parallel; output ordered by index).
pub fn generate(spec: &CorpusSpec) -> Result<Vec<CorpusSample>> {
    spec.validate()?;
    (0..spec.n_samples).into_par_iter().map(|i| generate_sample(spec, i)).collect()
}

/// Writes `<id>.json` graphs (and `<id>.raw` volumes when `with_voxels`) plus
/// `manifest.csv` into `dir`, with paths relative to the manifest.
pub fn write_corpus(dir: &Path, samples: &[CorpusSample], with_voxels: bool) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let rows = samples
        .par_iter()
        .map(|s| {
            let graph_name = format!("{}.json", s.id);
            s.graph.save(&dir.join(&graph_name))?;
            let voxel_path = if with_voxels {
                let name = format!("{}.raw", s.id);
                write_raw(&s.grid, &dir.join(&name))?;
                Some(PathBuf::from(name))
            } else {
                None
            };
            Ok(Sample {
                id: s.id.clone(),
                graph_path: PathBuf::from(graph_name),
                voxel_path,
                subcube_size: s.size,
                porosity: s.porosity,
                k_gpa: Some(s.label.k),
                mu_gpa: Some(s.label.mu),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = dir.join("manifest.csv");
    write_manifest(&manifest, &rows)?;
    Ok(manifest)
}
