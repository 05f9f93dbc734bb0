//! Versioned JSON persistence for trained models. Weights serialize as
//! nested arrays through the shortest round-trip float formatter, so a
//! saved model reloads to bitwise-identical parameters and predictions.

use super::{MlpConfig, MlpModel};
use crate::dataset::Normalizer;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    config: MlpConfig,
    normalizer: Normalizer,
    /// One entry per layer; each is a row-per-output-unit weight matrix.
    weights: Vec<Vec<Vec<f64>>>,
    biases: Vec<Vec<f64>>,
}

pub fn save_model<W: Write>(model: &MlpModel, writer: W) -> Result<()> {
    model.validate()?;
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        config: model.config,
        normalizer: model.normalizer.clone(),
        weights: model
            .weights
            .iter()
            .map(|w| w.iter_rows().map(<[f64]>::to_vec).collect())
            .collect(),
        biases: model.biases.clone(),
    };
    serde_json::to_writer(writer, &file)?;
    Ok(())
}

pub fn load_model<R: Read>(reader: R) -> Result<MlpModel> {
    let file: ModelFile = serde_json::from_reader(reader)?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::Config(format!(
            "unsupported model format version {} (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    let weights = file
        .weights
        .iter()
        .map(|rows| Matrix::from_rows(rows))
        .collect::<Result<Vec<_>>>()?;
    let model = MlpModel {
        config: file.config,
        normalizer: file.normalizer,
        weights,
        biases: file.biases,
    };
    model.validate()?;
    Ok(model)
}
