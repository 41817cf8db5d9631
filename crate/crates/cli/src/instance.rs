use std::path::Path;

use block_ising::{BlockModel, Proportion};
use serde::Deserialize;

use crate::CliError;

/// On-disk instance: `{"n": 64, "p": [0.5, "1/2"], "k": [[1, 0.5], [0.5, 1]]}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub p: Vec<ProportionField>,
    pub k: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ProportionField {
    Number(f64),
    Text(String),
}

impl InstanceFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("instance: cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::validation(format!("instance: {e}")))
    }

    /// Builds the model, optionally on a different number of sites.
    pub fn model(&self, n_override: Option<usize>) -> Result<BlockModel, CliError> {
        let props = self
            .p
            .iter()
            .map(|f| match f {
                ProportionField::Number(x) => Ok(Proportion::Float(*x)),
                ProportionField::Text(s) => Proportion::parse(s),
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::validation(format!("p: {e}")))?;
        let n = n_override.unwrap_or(self.n);
        BlockModel::with_proportions(n, &props, self.k.clone()).map_err(|e| CliError::validation(format!("instance: {e}")))
    }
}
