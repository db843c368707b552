//! Mapper graphs of two-phase voxel volumes.
//!
//! The filter projects each voxel onto one coordinate axis (x by default).
//! The filter range is covered by `n_intervals` overlapping intervals; inside
//! each interval the voxels of one phase are split into face-connected
//! clusters (6-connectivity), and clusters from consecutive intervals that
//! share a voxel are joined by an edge. The procedure runs once for the
//! solid phase and once for the pore phase, and the two graphs are
//! concatenated (solid nodes first). They never share edges.
//!
//! Every node carries a 12-slot feature vector, see [`FEATURE_NAMES`].

use std::collections::BTreeSet;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graphmetrics::{node_metrics, NodeMetrics, SimpleGraph};
use crate::voxelgrid::{VoxelGrid, PORE, SOLID};

pub const FEATURE_DIM: usize = 12;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "center_x",
    "center_y",
    "center_z",
    "extent_a",
    "extent_b",
    "extent_c",
    "point_count",
    "degree",
    "closeness",
    "eigencentrality",
    "pagerank",
    "phase",
];

/// Index of the phase indicator inside a node feature vector.
pub const PHASE_SLOT: usize = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Solid,
    Pore,
}

impl Phase {
    pub fn label(self) -> u8 {
        match self {
            Phase::Solid => SOLID,
            Phase::Pore => PORE,
        }
    }

    /// Feature-vector encoding, matching the voxel labels.
    pub fn indicator(self) -> f64 {
        f64::from(self.label())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterAxis {
    #[default]
    X,
    Y,
    Z,
}

impl FilterAxis {
    pub fn index(self) -> usize {
        match self {
            FilterAxis::X => 0,
            FilterAxis::Y => 1,
            FilterAxis::Z => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapperParams {
    pub n_intervals: usize,
    pub overlap: f64,
    #[serde(default)]
    pub filter: FilterAxis,
}

impl MapperParams {
    pub fn new(n_intervals: usize, overlap: f64) -> Result<Self> {
        let p = Self { n_intervals, overlap, filter: FilterAxis::X };
        p.validate()?;
        Ok(p)
    }

    pub fn with_filter(mut self, filter: FilterAxis) -> Self {
        self.filter = filter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_intervals == 0 {
            return Err(invalid("n_intervals must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(invalid(format!("overlap {} must lie in [0, 1)", self.overlap)));
        }
        Ok(())
    }
}

impl Default for MapperParams {
    fn default() -> Self {
        Self { n_intervals: 10, overlap: 0.5, filter: FilterAxis::X }
    }
}

/// Half-open interval `[lo, hi)` of the filter axis, in voxel units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverInterval {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
}

impl CoverInterval {
    /// Integer voxel coordinates `c` with `lo <= c < hi`.
    pub fn voxel_range(&self) -> Range<usize> {
        let lo = self.lo.max(0.0).ceil() as usize;
        let hi = self.hi.max(0.0).ceil() as usize;
        lo..hi.max(lo)
    }

    pub fn contains(&self, c: f64) -> bool {
        self.lo <= c && c < self.hi
    }
}

/// Base width `w = length / N`; interval `i` is `[i w - p w / 2, (i + 1) w + p w / 2)`
/// clamped to `[0, length)`.
pub fn build_cover(length: usize, params: &MapperParams) -> Result<Vec<CoverInterval>> {
    params.validate()?;
    if params.n_intervals > length {
        return Err(invalid(format!(
            "{} intervals do not fit a filter range of length {length}",
            params.n_intervals
        )));
    }
    let len = length as f64;
    let w = len / params.n_intervals as f64;
    let ext = params.overlap * w / 2.0;
    Ok((0..params.n_intervals)
        .map(|i| CoverInterval {
            index: i,
            lo: (i as f64 * w - ext).max(0.0),
            hi: ((i + 1) as f64 * w + ext).min(len),
        })
        .collect())
}

/// Face-connected component of one phase inside one cover interval.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub id: usize,
    pub phase: Phase,
    pub interval_index: usize,
    /// Flat grid indices, in discovery order.
    pub voxels: Vec<usize>,
    pub center: [f64; 3],
    /// Bounding-box extents in voxels.
    pub dims: [usize; 3],
}

impl Cluster {
    pub fn point_count(&self) -> usize {
        self.voxels.len()
    }
}

/// Cluster labels of the voxels in one slab; `NONE` where the phase is absent.
struct SlabLabels {
    range: Range<usize>,
    axis: usize,
    labels: Vec<u32>,
}

impl SlabLabels {
    const NONE: u32 = u32::MAX;

    fn get(&self, grid: &VoxelGrid, p: [usize; 3]) -> u32 {
        let dims = grid.dims();
        let mut local = p;
        local[self.axis] -= self.range.start;
        let mut d = dims;
        d[self.axis] = self.range.len();
        self.labels[local[0] + d[0] * (local[1] + d[1] * local[2])]
    }
}

fn label_slab(
    grid: &VoxelGrid,
    interval: &CoverInterval,
    phase: Phase,
    axis: usize,
) -> (Vec<Cluster>, SlabLabels) {
    let dims = grid.dims();
    let range = {
        let r = interval.voxel_range();
        r.start.min(dims[axis])..r.end.min(dims[axis])
    };
    let mut sd = dims;
    sd[axis] = range.len();
    let slab_len = sd[0] * sd[1] * sd[2];
    let mut labels = vec![SlabLabels::NONE; slab_len];
    let mut clusters: Vec<Cluster> = Vec::new();
    let target = phase.label();
    let to_global = |l: [usize; 3]| {
        let mut g = l;
        g[axis] += range.start;
        g
    };
    let local_index = |l: [usize; 3]| l[0] + sd[0] * (l[1] + sd[1] * l[2]);

    let mut stack: Vec<[usize; 3]> = Vec::new();
    for lz in 0..sd[2] {
        for ly in 0..sd[1] {
            for lx in 0..sd[0] {
                let l = [lx, ly, lz];
                let li = local_index(l);
                if labels[li] != SlabLabels::NONE {
                    continue;
                }
                let g = to_global(l);
                if grid.get(g[0], g[1], g[2]) != target {
                    continue;
                }
                // Depth-first flood fill from this seed.
                let id = clusters.len() as u32;
                labels[li] = id;
                stack.push(l);
                let mut voxels = Vec::new();
                let mut sum = [0.0f64; 3];
                let mut min = [usize::MAX; 3];
                let mut max = [0usize; 3];
                while let Some(cur) = stack.pop() {
                    let gc = to_global(cur);
                    voxels.push(grid.index(gc[0], gc[1], gc[2]));
                    for a in 0..3 {
                        sum[a] += gc[a] as f64;
                        min[a] = min[a].min(gc[a]);
                        max[a] = max[a].max(gc[a]);
                    }
                    for a in 0..3 {
                        for step in [-1isize, 1] {
                            let c = cur[a] as isize + step;
                            if c < 0 || c as usize >= sd[a] {
                                continue;
                            }
                            let mut nb = cur;
                            nb[a] = c as usize;
                            let ni = local_index(nb);
                            if labels[ni] != SlabLabels::NONE {
                                continue;
                            }
                            let gn = to_global(nb);
                            if grid.get(gn[0], gn[1], gn[2]) == target {
                                labels[ni] = id;
                                stack.push(nb);
                            }
                        }
                    }
                }
                let n = voxels.len() as f64;
                clusters.push(Cluster {
                    id: id as usize,
                    phase,
                    interval_index: interval.index,
                    center: [sum[0] / n, sum[1] / n, sum[2] / n],
                    dims: [max[0] - min[0] + 1, max[1] - min[1] + 1, max[2] - min[2] + 1],
                    voxels,
                });
            }
        }
    }
    (clusters, SlabLabels { range, axis, labels })
}

/// Connected components (6-connectivity) of `phase` voxels whose filter
/// coordinate falls in `interval`. Cluster ids are local to the interval.
pub fn cluster_interval(
    grid: &VoxelGrid,
    interval: &CoverInterval,
    phase: Phase,
    filter: FilterAxis,
) -> Vec<Cluster> {
    label_slab(grid, interval, phase, filter.index()).0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapperNode {
    pub id: usize,
    pub phase: Phase,
    pub interval: usize,
    pub feature: [f64; FEATURE_DIM],
}

/// Two-phase Mapper graph. Edges are `(i, j)` with `i < j`, sorted, unique.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RockGraph {
    pub params: MapperParams,
    pub nodes: Vec<MapperNode>,
    pub edges: Vec<(usize, usize)>,
}

impl RockGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn structure(&self) -> Result<SimpleGraph> {
        SimpleGraph::from_edges(self.nodes.len(), &self.edges)
    }

    /// Subgraph induced by one phase, with the global id of each local node.
    pub fn phase_subgraph(&self, phase: Phase) -> (SimpleGraph, Vec<usize>) {
        let ids: Vec<usize> =
            self.nodes.iter().filter(|n| n.phase == phase).map(|n| n.id).collect();
        let mut local = vec![usize::MAX; self.nodes.len()];
        for (i, &g) in ids.iter().enumerate() {
            local[g] = i;
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|&&(a, b)| local[a] != usize::MAX && local[b] != usize::MAX)
            .map(|&(a, b)| (local[a], local[b]))
            .collect();
        let g = SimpleGraph::from_edges(ids.len(), &edges)
            .expect("phase subgraph edges are in range by construction");
        (g, ids)
    }

    pub fn count_phase(&self, phase: Phase) -> usize {
        self.nodes.iter().filter(|n| n.phase == phase).count()
    }

    /// Checks the structural invariants: ids, edge ordering, and phase
    /// separation.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(Error::Format(format!("node {i} has id {}", n.id)));
            }
            if n.feature.iter().any(|v| !v.is_finite()) {
                return Err(Error::Format(format!("node {i} has a non-finite feature")));
            }
            if n.feature[PHASE_SLOT] != n.phase.indicator() {
                return Err(Error::Format(format!("node {i} phase slot disagrees with its phase")));
            }
        }
        let mut seen = BTreeSet::new();
        for &(a, b) in &self.edges {
            if a >= b || b >= self.nodes.len() {
                return Err(Error::Format(format!("edge ({a}, {b}) is not an ordered in-range pair")));
            }
            if !seen.insert((a, b)) {
                return Err(Error::Format(format!("duplicate edge ({a}, {b})")));
            }
            if self.nodes[a].phase != self.nodes[b].phase {
                return Err(Error::Format(format!("edge ({a}, {b}) joins different phases")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: RockGraph = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Relabels nodes: new node `perm[i]` is old node `i`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.nodes.len();
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(invalid("not a permutation of the node ids"));
        }
        let mut nodes = self.nodes.clone();
        for (old, node) in self.nodes.iter().enumerate() {
            nodes[perm[old]] = MapperNode { id: perm[old], ..node.clone() };
        }
        let mut edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (perm[a], perm[b]);
                (x.min(y), x.max(y))
            })
            .collect();
        edges.sort_unstable();
        Ok(Self { params: self.params, nodes, edges })
    }
}

/// Feature layout: `[cx, cy, cz, a, b, c, point_count, degree, closeness,
/// eigencentrality, pagerank, phase]`.
pub fn node_features(cluster: &Cluster, metrics: &NodeMetrics, local: usize) -> [f64; FEATURE_DIM] {
    [
        cluster.center[0],
        cluster.center[1],
        cluster.center[2],
        cluster.dims[0] as f64,
        cluster.dims[1] as f64,
        cluster.dims[2] as f64,
        cluster.point_count() as f64,
        metrics.degree[local] as f64,
        metrics.closeness[local],
        metrics.eigencentrality[local],
        metrics.pagerank[local],
        cluster.phase.indicator(),
    ]
}

struct PhaseGraph {
    clusters: Vec<Cluster>,
    edges: Vec<(usize, usize)>,
}

/// Mapper for one phase: clusters of every interval (ids renumbered to be
/// phase-global) and the overlap edges between them.
fn map_phase(grid: &VoxelGrid, cover: &[CoverInterval], phase: Phase, axis: usize) -> PhaseGraph {
    let slabs: Vec<(Vec<Cluster>, SlabLabels)> =
        cover.iter().map(|iv| label_slab(grid, iv, phase, axis)).collect();
    let mut offsets = Vec::with_capacity(slabs.len());
    let mut total = 0;
    for (clusters, _) in &slabs {
        offsets.push(total);
        total += clusters.len();
    }

    let dims = grid.dims();
    let mut edges = BTreeSet::new();
    // Only consecutive intervals can overlap when overlap < 1.
    for i in 0..slabs.len().saturating_sub(1) {
        let (a, b) = (&slabs[i].1, &slabs[i + 1].1);
        let band = a.range.start.max(b.range.start)..a.range.end.min(b.range.end);
        for c in band {
            for v in 0..dims[(axis + 1) % 3] {
                for u in 0..dims[(axis + 2) % 3] {
                    let mut p = [0usize; 3];
                    p[axis] = c;
                    p[(axis + 1) % 3] = v;
                    p[(axis + 2) % 3] = u;
                    let la = a.get(grid, p);
                    if la == SlabLabels::NONE {
                        continue;
                    }
                    let lb = b.get(grid, p);
                    edges.insert((offsets[i] + la as usize, offsets[i + 1] + lb as usize));
                }
            }
        }
    }

    let mut clusters = Vec::with_capacity(total);
    for (k, (cs, _)) in slabs.into_iter().enumerate() {
        clusters.extend(cs.into_iter().map(|mut c| {
            c.id += offsets[k];
            c
        }));
    }
    PhaseGraph { clusters, edges: edges.into_iter().collect() }
}

/// Runs the Mapper pipeline for solid then pore and concatenates the two
/// graphs. Graph metrics are computed on each phase subgraph separately.
pub fn build_graph(grid: &VoxelGrid, params: &MapperParams) -> Result<RockGraph> {
    params.validate()?;
    let axis = params.filter.index();
    let cover = build_cover(grid.dims()[axis], params)?;

    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for phase in [Phase::Solid, Phase::Pore] {
        let pg = map_phase(grid, &cover, phase, axis);
        let sub = SimpleGraph::from_edges(pg.clusters.len(), &pg.edges)?;
        let metrics = node_metrics(&sub)?;
        let offset = nodes.len();
        for (local, c) in pg.clusters.iter().enumerate() {
            nodes.push(MapperNode {
                id: offset + local,
                phase,
                interval: c.interval_index,
                feature: node_features(c, &metrics, local),
            });
        }
        edges.extend(pg.edges.iter().map(|&(a, b)| (offset + a, offset + b)));
    }
    Ok(RockGraph { params: *params, nodes, edges })
}
