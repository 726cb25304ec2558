//! JSON coin-field configuration.
//!
//! Two shapes are accepted. The general form:
//!
//! ```json
//! { "c_minus": <coin>, "c_plus": <coin>, "x_minus": 0, "x_plus": 1, "defects": [<coin>] }
//! ```
//!
//! and the model shorthands `{"model": "one-defect", "bulk": .., "origin": ..}`,
//! `{"model": "two-phase", "left": .., "right": ..}` and
//! `{"model": "homogeneous", "coin": ..}`.
//!
//! A `<coin>` is either `{"preset": "fourier" | "grover", "phase": θ}` or
//! `{"rows": [[[re, im], [re, im], [re, im]], ...]}`. Complex numbers are
//! always `[re, im]` pairs.

use serde::{Deserialize, Serialize};

use crate::coin::{CoinError, CoinField, CoinMatrix, FieldError};
use crate::linalg::{Complex, Mat3, ZERO};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("invalid coin at {position}: {source}")]
    Coin {
        position: String,
        #[source]
        source: CoinError,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// One coin as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoinSpec {
    Preset {
        preset: String,
        #[serde(default)]
        phase: f64,
    },
    Rows {
        rows: [[[f64; 2]; 3]; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralSpec {
    pub c_minus: CoinSpec,
    pub c_plus: CoinSpec,
    pub x_minus: i64,
    pub x_plus: i64,
    #[serde(default)]
    pub defects: Vec<CoinSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    OneDefect { bulk: CoinSpec, origin: CoinSpec },
    TwoPhase { left: CoinSpec, right: CoinSpec },
    Homogeneous { coin: CoinSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Model(ModelSpec),
    General(GeneralSpec),
}

impl CoinSpec {
    pub fn build(&self, position: &str) -> Result<CoinMatrix, ConfigError> {
        let wrap = |source| ConfigError::Coin {
            position: position.to_string(),
            source,
        };
        match self {
            CoinSpec::Preset { preset, phase } => CoinMatrix::preset(preset, *phase).map_err(wrap),
            CoinSpec::Rows { rows } => {
                let mut m = Mat3([[ZERO; 3]; 3]);
                for (r, row) in rows.iter().enumerate() {
                    for (c, [re, im]) in row.iter().enumerate() {
                        m.0[r][c] = Complex::new(*re, *im);
                    }
                }
                CoinMatrix::new(m).map_err(wrap)
            }
        }
    }

    pub fn from_coin(coin: &CoinMatrix) -> Self {
        let rows = coin.matrix().0.map(|row| row.map(|z| [z.re, z.im]));
        CoinSpec::Rows { rows }
    }
}

impl FieldSpec {
    pub fn build(&self) -> Result<CoinField, ConfigError> {
        match self {
            FieldSpec::Model(ModelSpec::OneDefect { bulk, origin }) => Ok(CoinField::one_defect(
                bulk.build("bulk")?,
                origin.build("origin")?,
            )),
            FieldSpec::Model(ModelSpec::TwoPhase { left, right }) => Ok(CoinField::two_phase(
                left.build("left")?,
                right.build("right")?,
            )),
            FieldSpec::Model(ModelSpec::Homogeneous { coin }) => {
                Ok(CoinField::homogeneous(coin.build("coin")?))
            }
            FieldSpec::General(g) => {
                let c_minus = g.c_minus.build("c_minus")?;
                let c_plus = g.c_plus.build("c_plus")?;
                let defects = g
                    .defects
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.build(&format!("defects[{i}] (x = {})", g.x_minus + i as i64)))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(CoinField::new(c_minus, c_plus, g.x_minus, g.x_plus, defects)?)
            }
        }
    }

    /// General-form spec with explicit rows, reproducing every entry exactly.
    pub fn from_field(field: &CoinField) -> Self {
        FieldSpec::General(GeneralSpec {
            c_minus: CoinSpec::from_coin(field.c_minus()),
            c_plus: CoinSpec::from_coin(field.c_plus()),
            x_minus: field.x_minus(),
            x_plus: field.x_plus(),
            defects: field.defects().iter().map(CoinSpec::from_coin).collect(),
        })
    }
}

/// Parse and validate a config document.
pub fn parse_field_config(text: &str) -> Result<CoinField, ConfigError> {
    let spec: FieldSpec = serde_json::from_str(text)?;
    spec.build()
}

/// Serialize a field in the general form.
pub fn serialize_field(field: &CoinField) -> String {
    serde_json::to_string_pretty(&FieldSpec::from_field(field)).expect("field serializes")
}
