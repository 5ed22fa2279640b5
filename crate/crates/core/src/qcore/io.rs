//! JSON interchange for states and channels.
//!
//! Matrices are nested row-major arrays of `[re, im]` pairs:
//!
//! ```json
//! { "schema_version": 1, "kind": "density_operator",
//!   "systems": [{"label": "A", "dim": 2}],
//!   "matrix": [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]] }
//!
//! { "schema_version": 1, "kind": "channel", "in_dim": 2, "out_dim": 2,
//!   "kraus": [ <matrix>, ... ] }
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

use super::channel::Channel;
use super::state::{DensityOperator, System};

pub const INTERCHANGE_SCHEMA_VERSION: u32 = 1;

pub type MatrixDoc = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_doc(m: &CMat) -> MatrixDoc {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_doc(doc: &MatrixDoc) -> Result<CMat> {
    let rows = doc.len();
    let cols = doc.first().map_or(0, |r| r.len());
    if doc.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidConfig("ragged matrix rows".into()));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| C64::new(doc[i][j][0], doc[i][j][1])))
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct StateDoc {
    pub schema_version: u32,
    pub kind: String,
    pub systems: Vec<System>,
    pub matrix: MatrixDoc,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct ChannelDoc {
    pub schema_version: u32,
    pub kind: String,
    pub in_dim: usize,
    pub out_dim: usize,
    pub kraus: Vec<MatrixDoc>,
}

fn check_header(version: u32, kind: &str, expected: &str) -> Result<()> {
    if version != INTERCHANGE_SCHEMA_VERSION {
        return Err(Error::InvalidConfig(format!("unsupported schema_version {version}")));
    }
    if kind != expected {
        return Err(Error::InvalidConfig(format!("expected kind {expected:?}, found {kind:?}")));
    }
    Ok(())
}

impl StateDoc {
    pub fn from_state(rho: &DensityOperator) -> Self {
        Self {
            schema_version: INTERCHANGE_SCHEMA_VERSION,
            kind: "density_operator".into(),
            systems: rho.systems().to_vec(),
            matrix: matrix_to_doc(rho.matrix()),
        }
    }

    pub fn to_state(&self) -> Result<DensityOperator> {
        check_header(self.schema_version, &self.kind, "density_operator")?;
        DensityOperator::new(self.systems.clone(), matrix_from_doc(&self.matrix)?)
    }
}

impl ChannelDoc {
    pub fn from_channel(ch: &Channel) -> Self {
        Self {
            schema_version: INTERCHANGE_SCHEMA_VERSION,
            kind: "channel".into(),
            in_dim: ch.in_dim(),
            out_dim: ch.out_dim(),
            kraus: ch.kraus().iter().map(matrix_to_doc).collect(),
        }
    }

    pub fn to_channel(&self) -> Result<Channel> {
        check_header(self.schema_version, &self.kind, "channel")?;
        let kraus = self
            .kraus
            .iter()
            .map(matrix_from_doc)
            .collect::<Result<Vec<_>>>()?;
        let ch = Channel::from_kraus(kraus)?;
        if ch.in_dim() != self.in_dim || ch.out_dim() != self.out_dim {
            return Err(Error::DimensionMismatch {
                context: "channel document",
                expected: self.in_dim * self.out_dim,
                found: ch.in_dim() * ch.out_dim(),
            });
        }
        Ok(ch)
    }
}

pub fn state_to_json(rho: &DensityOperator) -> String {
    serde_json::to_string(&StateDoc::from_state(rho)).expect("serializable")
}

pub fn state_from_json(s: &str) -> Result<DensityOperator> {
    serde_json::from_str::<StateDoc>(s)?.to_state()
}

pub fn channel_to_json(ch: &Channel) -> String {
    serde_json::to_string(&ChannelDoc::from_channel(ch)).expect("serializable")
}

pub fn channel_from_json(s: &str) -> Result<Channel> {
    serde_json::from_str::<ChannelDoc>(s)?.to_channel()
}
