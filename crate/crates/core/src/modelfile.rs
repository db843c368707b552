//! Versioned JSON model files holding either regressor together with the
//! metadata needed to evaluate it (split seed, training configuration and
//! history).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::effmed::ElasticModuli;
use crate::error::{Error, Result};
use crate::ginnet::{GinModel, History, TrainConfig};
use crate::graphmetrics::summarize;
use crate::mapper::RockGraph;
use crate::randomforest::Forest;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regressor {
    RandomForest { forest: Forest },
    Gin { model: GinModel, train: TrainConfig, history: History },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    /// Seed of the train/val/test split the model was fitted on.
    pub split_seed: u64,
    pub regressor: Regressor,
}

impl ModelFile {
    pub fn new(split_seed: u64, regressor: Regressor) -> Self {
        ModelFile { format_version: FORMAT_VERSION, split_seed, regressor }
    }

    pub fn kind(&self) -> &'static str {
        match self.regressor {
            Regressor::RandomForest { .. } => "random_forest",
            Regressor::Gin { .. } => "gin",
        }
    }

    /// Predicted moduli in GPa, clamped at zero.
    pub fn predict(&self, graph: &RockGraph) -> Result<ElasticModuli> {
        match &self.regressor {
            Regressor::RandomForest { forest } => {
                let p = forest.predict(&summarize(graph)?.features())?;
                Ok(ElasticModuli { k: p[0], mu: p[1] }.clamped())
            }
            Regressor::Gin { model, .. } => model.predict(graph),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "model format version {} is not supported (expected {FORMAT_VERSION})",
                file.format_version
            )));
        }
        match &file.regressor {
            Regressor::RandomForest { forest } => forest.validate()?,
            Regressor::Gin { model, .. } => {
                GinModel::from_json(&serde_json::to_string(model)?)?;
            }
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Format(format!("cannot read model {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ginnet::{FeatureScaling, GinConfig};
    use crate::graphmetrics::SUMMARY_FEATURE_NAMES;
    use crate::mapper::{build_graph, MapperParams};
    use crate::randomforest::Tree;
    use crate::voxelgrid::gen_sphere_pack;

    fn graph() -> RockGraph {
        let grid = gen_sphere_pack([16, 16, 16], 20, (2.0, 4.0), 1).unwrap();
        build_graph(&grid, &MapperParams::new(4, 0.5).unwrap()).unwrap()
    }

    #[test]
    fn forest_file_round_trip_and_predict() {
        let names = SUMMARY_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        let forest = Forest::from_trees(vec![Tree::leaf([20.0, -1.0], 12)], names).unwrap();
        let file = ModelFile::new(7, Regressor::RandomForest { forest });
        let back = ModelFile::from_json(&file.to_json().unwrap()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.kind(), "random_forest");
        assert_eq!(back.predict(&graph()).unwrap(), ElasticModuli { k: 20.0, mu: 0.0 });
    }

    #[test]
    fn untrained_gin_file_predict_is_state_error() {
        let model = GinModel::new(GinConfig::default(), FeatureScaling::default(), 0).unwrap();
        let file = ModelFile::new(0, Regressor::Gin { model, train: TrainConfig::default(), history: History::default() });
        let back = ModelFile::from_json(&file.to_json().unwrap()).unwrap();
        assert_eq!(back.kind(), "gin");
        assert!(matches!(back.predict(&graph()), Err(Error::State(_))));
    }

    #[test]
    fn rejects_other_versions_and_garbage() {
        let names = SUMMARY_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        let forest = Forest::from_trees(vec![Tree::leaf([1.0, 1.0], 12)], names).unwrap();
        let mut file = ModelFile::new(0, Regressor::RandomForest { forest });
        file.format_version = 99;
        assert!(matches!(ModelFile::from_json(&file.to_json().unwrap()), Err(Error::Format(_))));
        assert!(ModelFile::from_json("{\"format_version\": 1}").is_err());
    }
}
