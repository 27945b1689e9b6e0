//! APDF model file: `{"n_d", "n_a", "w_q", "w_k", "w_v", "w_o", "flatten", "version"}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::apdf::ApdfModel;
use super::linalg::Matrix;
use crate::error::FusionError;

const FLATTEN: &str = "agent_major";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    n_d: usize,
    n_a: usize,
    w_q: Vec<Vec<f64>>,
    w_k: Vec<Vec<f64>>,
    w_v: Vec<Vec<f64>>,
    w_o: Vec<Vec<f64>>,
    flatten: String,
    version: u32,
}

pub fn model_to_json(model: &ApdfModel) -> String {
    let f = ModelFile {
        n_d: model.n_d,
        n_a: model.n_a,
        w_q: model.w_q.to_rows(),
        w_k: model.w_k.to_rows(),
        w_v: model.w_v.to_rows(),
        w_o: model.w_o.to_rows(),
        flatten: FLATTEN.into(),
        version: VERSION,
    };
    let mut s = serde_json::to_string(&f).expect("model serializes");
    s.push('\n');
    s
}

pub fn model_from_json(text: &str) -> Result<ApdfModel, FusionError> {
    let f: ModelFile = serde_json::from_str(text).map_err(|e| FusionError::ModelFile(e.to_string()))?;
    if f.flatten != FLATTEN {
        return Err(FusionError::ModelFile(format!("unsupported flatten layout '{}'", f.flatten)));
    }
    if f.version != VERSION {
        return Err(FusionError::ModelFile(format!("unsupported version {}", f.version)));
    }
    let d = f.n_d * f.n_a;
    let mat = |name: &str, rows: &[Vec<f64>], r: usize, c: usize| {
        Matrix::from_rows(rows)
            .filter(|m| m.rows == r && m.cols == c)
            .ok_or_else(|| FusionError::ModelFile(format!("{name} must be {r}x{c}")))
    };
    let model = ApdfModel {
        n_d: f.n_d,
        n_a: f.n_a,
        w_q: mat("w_q", &f.w_q, d, d)?,
        w_k: mat("w_k", &f.w_k, d, d)?,
        w_v: mat("w_v", &f.w_v, d, d)?,
        w_o: mat("w_o", &f.w_o, f.n_d, d)?,
    };
    if !model.is_finite() {
        return Err(FusionError::ModelFile("non-finite weight".into()));
    }
    Ok(model)
}

pub fn save_model(model: &ApdfModel, path: &Path) -> Result<(), FusionError> {
    fs::write(path, model_to_json(model)).map_err(|e| FusionError::ModelFile(format!("{}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<ApdfModel, FusionError> {
    let text = fs::read_to_string(path).map_err(|e| FusionError::ModelFile(format!("{}: {e}", path.display())))?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::apdf::apdf_init;

    #[test]
    fn round_trip_is_exact() {
        let m = apdf_init(3, 2, 5, 1.0);
        assert_eq!(model_from_json(&model_to_json(&m)).unwrap(), m);
    }

    #[test]
    fn rejects_unknown_layout() {
        let m = apdf_init(2, 1, 5, 1.0);
        let text = model_to_json(&m).replace("agent_major", "disease_major");
        assert!(model_from_json(&text).is_err());
    }

    #[test]
    fn rejects_wrong_shapes() {
        let m = apdf_init(2, 2, 5, 1.0);
        let text = model_to_json(&m).replace("\"n_a\":2", "\"n_a\":1");
        assert!(model_from_json(&text).is_err());
    }
}
