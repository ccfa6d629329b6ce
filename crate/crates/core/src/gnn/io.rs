use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GnnError, Model, ModelConfig, TrainConfig, TENSORS};
use crate::encode::{Direction, FeatureSet, InverterMode};

pub const CHECKPOINT_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

/// Everything needed to rebuild a trained model and encode inputs for it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub seed: u64,
    pub direction: Direction,
    pub inverters: InverterMode,
    #[serde(default)]
    pub feature_set: FeatureSet,
    pub tensors: Vec<Tensor>,
}

impl Checkpoint {
    pub fn new(
        model: &Model,
        train: &TrainConfig,
        seed: u64,
        direction: Direction,
        inverters: InverterMode,
        feature_set: FeatureSet,
    ) -> Self {
        let shapes = model.config().shapes();
        let tensors = TENSORS
            .iter()
            .zip(shapes)
            .map(|(name, (r, c))| Tensor {
                name: name.to_string(),
                shape: [r, c],
                data: model.tensor(name).expect("known tensor").to_vec(),
            })
            .collect();
        Checkpoint {
            schema_version: CHECKPOINT_SCHEMA,
            model: *model.config(),
            train: train.clone(),
            seed,
            direction,
            inverters,
            feature_set,
            tensors,
        }
    }

    pub fn to_model(&self) -> Result<Model, GnnError> {
        let shapes = self.model.shapes();
        let mut params = Vec::with_capacity(self.model.num_params());
        for (i, name) in TENSORS.iter().enumerate() {
            let t = self
                .tensors
                .iter()
                .find(|t| t.name == *name)
                .ok_or_else(|| GnnError::SchemaMismatch(format!("tensor {name} missing")))?;
            let (r, c) = shapes[i];
            if t.shape != [r, c] || t.data.len() != r * c {
                return Err(GnnError::DimensionMismatch {
                    what: format!("tensor {name}"),
                    expected: r * c,
                    got: t.data.len(),
                });
            }
            params.extend_from_slice(&t.data);
        }
        Model::from_params(self.model, params)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), GnnError> {
        fs::write(path, self.to_json()).map_err(|source| GnnError::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> Result<Checkpoint, GnnError> {
        let text = fs::read_to_string(path).map_err(|source| GnnError::Io { path: path.to_path_buf(), source })?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| GnnError::SchemaMismatch(e.to_string()))?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == CHECKPOINT_SCHEMA as u64 => {}
            other => {
                return Err(GnnError::SchemaMismatch(format!(
                    "expected schema_version {CHECKPOINT_SCHEMA}, found {other:?}"
                )))
            }
        }
        serde_json::from_value(value).map_err(|e| GnnError::SchemaMismatch(e.to_string()))
    }
}

/// `record,label,e0..e{H-1}` — one row per record.
pub fn embeddings_csv(rows: &[(usize, usize)], embeddings: &[Vec<f64>]) -> String {
    let h = embeddings.first().map_or(0, Vec::len);
    let mut s = String::from("record,label");
    for j in 0..h {
        s.push_str(&format!(",e{j}"));
    }
    s.push('\n');
    for ((record, label), e) in rows.iter().zip(embeddings) {
        s.push_str(&format!("{record},{label}"));
        for v in e {
            s.push_str(&format!(",{v}"));
        }
        s.push('\n');
    }
    s
}
