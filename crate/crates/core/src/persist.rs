//! Versioned JSON form of a trained model.
//!
//! Floats are written in the shortest decimal form that parses back to the
//! same bits, so a save/load cycle is exact.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::NormParams;
use crate::error::{Error, Result};
use crate::models::{Hyperparams, ModelKind, QuadraticClassifier, SolveReport, TrainedModel};
use crate::symvec::SymHalfVec;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub kind: ModelKind,
    pub n: usize,
    pub w_half: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
    pub norm_params: Option<NormParams>,
    pub hyperparams: Hyperparams,
    pub solve_report: SolveReport,
}

impl ModelFile {
    pub fn from_model(model: &TrainedModel) -> Self {
        let cl = &model.classifier;
        Self {
            version: MODEL_FORMAT_VERSION,
            kind: model.kind,
            n: cl.n,
            w_half: cl.w_half.as_slice().to_vec(),
            b: cl.b.clone(),
            c: cl.c,
            norm_params: cl.norm.clone(),
            hyperparams: model.hyperparams,
            solve_report: model.report.clone(),
        }
    }

    pub fn classifier(&self) -> Result<QuadraticClassifier> {
        let w = SymHalfVec::from_vec(self.n, self.w_half.clone())?;
        Ok(QuadraticClassifier::new(w, self.b.clone(), self.c)?.with_norm(self.norm_params.clone()))
    }

    pub fn to_writer<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn from_reader<R: io::Read>(input: R) -> Result<Self> {
        let file: Self = serde_json::from_reader(input)?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                file.version
            )));
        }
        file.classifier()?;
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.to_writer(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }
}
