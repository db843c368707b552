//! Sample manifests, synthetic labels, train/val/test splits, feature
//! standardization and regression metrics.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::effmed::{dem_moduli, DemParams, ElasticModuli};
use crate::error::{invalid, Error, Result};
use crate::rng::rng_from_seed;
use crate::voxelgrid::VoxelGrid;

/// One manifest row. Paths are stored as written; relative paths resolve
/// against the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub graph_path: PathBuf,
    #[serde(default, deserialize_with = "empty_path_is_none")]
    pub voxel_path: Option<PathBuf>,
    pub subcube_size: usize,
    pub porosity: f64,
    #[serde(default)]
    pub k_gpa: Option<f64>,
    #[serde(default)]
    pub mu_gpa: Option<f64>,
}

fn empty_path_is_none<'de, D>(d: D) -> std::result::Result<Option<PathBuf>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let s: Option<String> = Option::deserialize(d)?;
    Ok(s.filter(|s| !s.is_empty()).map(PathBuf::from))
}

impl Sample {
    pub fn labels(&self) -> Option<ElasticModuli> {
        Some(ElasticModuli { k: self.k_gpa?, mu: self.mu_gpa? })
    }

    pub fn require_labels(&self) -> Result<ElasticModuli> {
        self.labels().ok_or_else(|| invalid(format!("sample {} has no labels", self.id)))
    }
}

pub const MANIFEST_HEADER: [&str; 7] =
    ["id", "graph_path", "voxel_path", "subcube_size", "porosity", "k_gpa", "mu_gpa"];

pub fn write_manifest(path: &Path, samples: &[Sample]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<Sample>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != MANIFEST_HEADER {
        return Err(Error::Format(format!(
            "manifest header {header:?} does not match {MANIFEST_HEADER:?}"
        )));
    }
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for row in r.deserialize() {
        let mut s: Sample = row?;
        if !(0.0..=1.0).contains(&s.porosity) {
            return Err(Error::Format(format!("sample {} porosity {} outside [0, 1]", s.id, s.porosity)));
        }
        if s.graph_path.is_relative() {
            s.graph_path = base.join(&s.graph_path);
        }
        if let Some(v) = &s.voxel_path {
            if v.is_relative() {
                s.voxel_path = Some(base.join(v));
            }
        }
        out.push(s);
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn ids(&self, part: Partition) -> &[String] {
        match part {
            Partition::Train => &self.train,
            Partition::Val => &self.val,
            Partition::Test => &self.test,
        }
    }

    /// Plain-text form: one `[partition]` heading per block, one id per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, ids) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            out.push_str(&format!("[{name}]\n"));
            for id in ids {
                out.push_str(id);
                out.push('\n');
            }
        }
        out
    }
}

pub const DEFAULT_RATIOS: (f64, f64, f64) = (0.8, 0.1, 0.1);

/// Seeded shuffle followed by contiguous slicing. Validation and test
/// sizes are `n * ratio` rounded half-up; the remainder goes to training.
pub fn make_split(ids: &[String], ratios: (f64, f64, f64), seed: u64) -> Result<Split> {
    if ids.is_empty() {
        return Err(invalid("cannot split an empty id list"));
    }
    let (tr, va, te) = ratios;
    if [tr, va, te].iter().any(|r| !(0.0..=1.0).contains(r)) || (tr + va + te - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("split ratios {ratios:?} must be fractions summing to 1")));
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut rng_from_seed(seed));
    let n = ids.len();
    let count = |r: f64| (n as f64 * r + 0.5 + 1e-9).floor() as usize;
    let n_val = count(va).min(n);
    let n_test = count(te).min(n - n_val);
    let n_train = n - n_val - n_test;
    let test = shuffled.split_off(n_train + n_val);
    let val = shuffled.split_off(n_train);
    Ok(Split { train: shuffled, val, test })
}

/// DEM label at the grid's porosity plus independent Gaussian noise on each
/// modulus, clamped at zero.
pub fn synth_labels(grid: &VoxelGrid, params: &DemParams, noise_sigma: f64, seed: u64) -> Result<ElasticModuli> {
    label_at_porosity(grid.porosity().value(), params, noise_sigma, seed)
}

pub fn label_at_porosity(phi: f64, params: &DemParams, noise_sigma: f64, seed: u64) -> Result<ElasticModuli> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(invalid(format!("noise sigma {noise_sigma} must be non-negative")));
    }
    let clean = dem_moduli(params, phi)?;
    if noise_sigma == 0.0 {
        return Ok(clean);
    }
    let normal = Normal::new(0.0, noise_sigma).map_err(|e| invalid(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    Ok(ElasticModuli { k: clean.k + normal.sample(&mut rng), mu: clean.mu + normal.sample(&mut rng) }.clamped())
}

/// Per-feature z-score transform. Constant features keep `std = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Self> {
        let first = vectors.first().ok_or_else(|| invalid("cannot fit a standardizer to zero vectors"))?;
        let dim = first.as_ref().len();
        if vectors.iter().any(|v| v.as_ref().len() != dim) {
            return Err(invalid("vectors have inconsistent lengths"));
        }
        let n = vectors.len() as f64;
        let mut mean = vec![0.0; dim];
        for v in vectors {
            for (m, x) in mean.iter_mut().zip(v.as_ref()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for v in vectors {
            for ((s, x), m) in var.iter_mut().zip(v.as_ref()).zip(&mean) {
                *s += (x - m).powi(2);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 * (1.0 + sd.abs()) && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    /// Keeps the scales but drops the shift, so `apply` maps 0 to 0.
    pub fn without_centering(mut self) -> Self {
        self.mean.iter_mut().for_each(|m| *m = 0.0);
        self
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (x - m) / s).collect()
    }

    pub fn apply_in_place(&self, v: &mut [f64]) {
        for ((x, m), s) in v.iter_mut().zip(&self.mean).zip(&self.std) {
            *x = (*x - m) / s;
        }
    }

    pub fn inverse(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| x * s + m).collect()
    }
}

fn check_pair(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.is_empty() || pred.len() != truth.len() {
        return Err(invalid(format!(
            "prediction and truth lengths must match and be non-zero ({} vs {})",
            pred.len(),
            truth.len()
        )));
    }
    Ok(())
}

pub fn mse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len() as f64)
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r2(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth)?;
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(invalid("R² is undefined for constant truth"));
    }
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// R² and MSE for both moduli.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub r2_k: f64,
    pub r2_mu: f64,
    pub mse_k: f64,
    pub mse_mu: f64,
}

pub fn regression_report(pred: &[ElasticModuli], truth: &[ElasticModuli]) -> Result<RegressionReport> {
    let col = |v: &[ElasticModuli], f: fn(&ElasticModuli) -> f64| v.iter().map(f).collect::<Vec<f64>>();
    let (pk, pm) = (col(pred, |m| m.k), col(pred, |m| m.mu));
    let (tk, tm) = (col(truth, |m| m.k), col(truth, |m| m.mu));
    Ok(RegressionReport { r2_k: r2(&pk, &tk)?, r2_mu: r2(&pm, &tm)?, mse_k: mse(&pk, &tk)?, mse_mu: mse(&pm, &tm)? })
}

/// Parity rows `(id, k_true, k_pred, mu_true, mu_pred)`.
pub fn write_parity_csv(path: &Path, ids: &[String], truth: &[ElasticModuli], pred: &[ElasticModuli]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "k_true", "k_pred", "mu_true", "mu_pred"])?;
    for ((id, t), p) in ids.iter().zip(truth).zip(pred) {
        w.write_record([id.clone(), t.k.to_string(), p.k.to_string(), t.mu.to_string(), p.mu.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxelgrid::{VoxelGrid, SOLID};
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i:03}")).collect()
    }

    #[test]
    fn split_counts() {
        let s = make_split(&ids(10), DEFAULT_RATIOS, 7).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (8, 1, 1));
        assert_eq!(make_split(&ids(10), DEFAULT_RATIOS, 7).unwrap(), s);
        assert!(make_split(&[], DEFAULT_RATIOS, 1).is_err());
        assert!(make_split(&ids(4), (0.5, 0.5, 0.5), 1).is_err());
    }

    fn s_counts(s: &Split) -> (usize, usize, usize) {
        (s.train.len(), s.val.len(), s.test.len())
    }

    #[test]
    fn remainder_goes_to_train() {
        let s = make_split(&ids(9), DEFAULT_RATIOS, 3).unwrap();
        assert_eq!(s_counts(&s), (7, 1, 1));
        let s = make_split(&ids(11), DEFAULT_RATIOS, 3).unwrap();
        assert_eq!(s_counts(&s), (9, 1, 1));
        let s = make_split(&ids(500), DEFAULT_RATIOS, 3).unwrap();
        assert_eq!(s_counts(&s), (400, 50, 50));
        let s = make_split(&ids(1), (0.0, 0.5, 0.5), 3).unwrap();
        assert_eq!(s_counts(&s), (0, 1, 0));
    }

    #[test]
    fn split_text_lists_partitions() {
        let s = make_split(&ids(10), DEFAULT_RATIOS, 1).unwrap();
        let text = s.to_text();
        assert!(text.starts_with("[train]\n"));
        assert!(text.contains("[val]\n") && text.contains("[test]\n"));
        assert_eq!(text.lines().count(), 13);
    }

    #[test]
    fn labels_without_noise_are_dem() {
        let params = DemParams::new(ElasticModuli { k: 36.6, mu: 45.0 }, 0.25).unwrap();
        let grid = VoxelGrid::filled([4, 4, 4], 1.0, SOLID).unwrap();
        assert_eq!(synth_labels(&grid, &params, 0.0, 5).unwrap(), params.mineral);
        let a = label_at_porosity(0.2, &params, 0.5, 11).unwrap();
        let b = label_at_porosity(0.2, &params, 0.5, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, dem_moduli(&params, 0.2).unwrap());
        assert!(label_at_porosity(0.2, &params, -1.0, 1).is_err());
    }

    #[test]
    fn uncentered_standardizer_only_scales() {
        let s = Standardizer::fit(&[vec![2.0], vec![6.0]]).unwrap().without_centering();
        assert_eq!(s.mean, vec![0.0]);
        assert_eq!(s.apply(&[4.0]), vec![2.0]);
        assert_eq!(s.apply(&[0.0]), vec![0.0]);
    }

    #[test]
    fn standardizer_edge_cases() {
        let s = Standardizer::fit(&[vec![1.0, 5.0], vec![3.0, 5.0]]).unwrap();
        assert_eq!(s.std[1], 1.0);
        assert_eq!(s.apply(&[2.0, 5.0]), vec![0.0, 0.0]);
        let single = Standardizer::fit(&[vec![4.0, -2.0, 9.0]]).unwrap();
        assert_eq!(single.apply(&[4.0, -2.0, 9.0]), vec![0.0; 3]);
        assert!(Standardizer::fit::<Vec<f64>>(&[]).is_err());
        // Fit on one set, applied to another: statistics are not (0, 1).
        let train = Standardizer::fit(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(train.apply(&[10.0]), vec![9.0]);
    }

    #[test]
    fn metrics_examples() {
        let t = [1.0, 2.0, 3.0];
        assert_eq!(r2(&t, &t).unwrap(), 1.0);
        assert_eq!(mse(&t, &t).unwrap(), 0.0);
        assert_eq!(r2(&[2.0; 3], &t).unwrap(), 0.0);
        assert!((mse(&[1.0, 2.0, 4.0], &t).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((r2(&[1.0, 2.0, 4.0], &t).unwrap() - 0.5).abs() < 1e-15);
        assert!(r2(&[1.0, 1.0], &[2.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        let samples = vec![
            Sample {
                id: "a".into(),
                graph_path: "graphs/a.json".into(),
                voxel_path: Some("raw/a.raw".into()),
                subcube_size: 32,
                porosity: 0.21,
                k_gpa: Some(20.5),
                mu_gpa: Some(21.0),
            },
            Sample {
                id: "b".into(),
                graph_path: "graphs/b.json".into(),
                voxel_path: None,
                subcube_size: 48,
                porosity: 0.1,
                k_gpa: None,
                mu_gpa: None,
            },
        ];
        write_manifest(&path, &samples).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("id,graph_path,voxel_path,subcube_size,porosity,k_gpa,mu_gpa\n"));
        let back = read_manifest(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].graph_path, dir.path().join("graphs/a.json"));
        assert_eq!(back[0].labels(), Some(ElasticModuli { k: 20.5, mu: 21.0 }));
        assert_eq!(back[1].voxel_path, None);
        assert!(back[1].require_labels().is_err());
    }

    proptest! {
        #[test]
        fn split_is_disjoint_partition(n in 1usize..200, seed in any::<u64>()) {
            let all = ids(n);
            let s = make_split(&all, DEFAULT_RATIOS, seed).unwrap();
            let mut joined: Vec<String> = s.train.iter().chain(&s.val).chain(&s.test).cloned().collect();
            joined.sort();
            prop_assert_eq!(joined, all);
            prop_assert_eq!(s.val.len(), (n + 5) / 10);
        }

        #[test]
        fn standardizer_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 4), 1..20)) {
            let s = Standardizer::fit(&rows).unwrap();
            for r in &rows {
                let back = s.inverse(&s.apply(r));
                for (a, b) in back.iter().zip(r) {
                    prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
                }
            }
            let z: Vec<Vec<f64>> = rows.iter().map(|r| s.apply(r)).collect();
            for j in 0..4 {
                let m = z.iter().map(|r| r[j]).sum::<f64>() / z.len() as f64;
                prop_assert!(m.abs() < 1e-9);
            }
        }

        #[test]
        fn r2_and_mse_bounds(pairs in prop::collection::vec((-100f64..100.0, -100f64..100.0), 2..40)) {
            let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assert!(mse(&p, &t).unwrap() >= 0.0);
            if let Ok(v) = r2(&p, &t) {
                prop_assert!(v <= 1.0);
            }
        }
    }
}
