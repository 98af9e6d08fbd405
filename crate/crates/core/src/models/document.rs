//! Serializable model descriptions: either a named preset with parameters or
//! fully explicit matrices. Complex numbers are `[re, im]` pairs and matrices
//! are lists of rows.

use serde::{Deserialize, Serialize};

use super::{preset_qubit, preset_qutrit_forbidden, preset_two_qubit, ControlledSystem, IncoherentChannel};
use crate::error::{ModelError, ModelErrorCode};
use crate::linalg::{CMatrix, C64};

pub type ComplexDoc = [f64; 2];
pub type MatrixDoc = Vec<Vec<ComplexDoc>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelDocument {
    Qubit {
        omega: f64,
        gamma: f64,
    },
    QutritForbidden {
        energies: [f64; 3],
        v13: ComplexDoc,
        v23: ComplexDoc,
        a1: f64,
        a2: f64,
    },
    TwoQubit {
        omega1: f64,
        omega2: f64,
        #[serde(rename = "J")]
        coupling: f64,
        gamma1: f64,
        gamma2: f64,
    },
    Explicit {
        h0: MatrixDoc,
        #[serde(default)]
        controls: Vec<MatrixDoc>,
        #[serde(default)]
        channels: Vec<ChannelDoc>,
        n_controls: usize,
    },
}

/// A channel between two levels (`lower`, `upper`) or with an explicit
/// lowering operator (`jump`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump: Option<MatrixDoc>,
    pub rate: f64,
    pub control: usize,
}

pub fn complex_from_doc(z: ComplexDoc) -> C64 {
    C64::new(z[0], z[1])
}

/// Square matrix from nested `[re, im]` rows.
pub fn matrix_from_doc(doc: &MatrixDoc, field: &str) -> Result<CMatrix, ModelError> {
    let n = doc.len();
    if n == 0 {
        return Err(ModelError::new(ModelErrorCode::Schema, field, "matrix must be nonempty"));
    }
    for (i, row) in doc.iter().enumerate() {
        if row.len() != n {
            return Err(ModelError::new(
                ModelErrorCode::Schema,
                format!("{field}[{i}]"),
                format!("row has {} entries, expected {n}", row.len()),
            ));
        }
    }
    Ok(CMatrix::from_fn(n, n, |i, j| complex_from_doc(doc[i][j])))
}

pub fn matrix_to_doc(m: &CMatrix) -> MatrixDoc {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

/// Build and validate the system a document describes.
pub fn load_model(doc: &ModelDocument) -> Result<ControlledSystem, ModelError> {
    match doc {
        ModelDocument::Qubit { omega, gamma } => preset_qubit(*omega, *gamma),
        ModelDocument::QutritForbidden { energies, v13, v23, a1, a2 } => {
            preset_qutrit_forbidden(*energies, complex_from_doc(*v13), complex_from_doc(*v23), *a1, *a2)
        }
        ModelDocument::TwoQubit { omega1, omega2, coupling, gamma1, gamma2 } => {
            preset_two_qubit(*omega1, *omega2, *coupling, *gamma1, *gamma2)
        }
        ModelDocument::Explicit { h0, controls, channels, n_controls } => {
            let h0 = matrix_from_doc(h0, "h0")?;
            let controls = controls
                .iter()
                .enumerate()
                .map(|(k, m)| matrix_from_doc(m, &format!("controls[{k}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let channels =
                channels.iter().enumerate().map(|(i, ch)| channel_from_doc(ch, i)).collect::<Result<Vec<_>, _>>()?;
            ControlledSystem::new(h0, controls, channels, *n_controls).map_err(rename_fields)
        }
    }
}

fn channel_from_doc(ch: &ChannelDoc, i: usize) -> Result<IncoherentChannel, ModelError> {
    let field = format!("channels[{i}]");
    match (ch.lower, ch.upper, &ch.jump) {
        (Some(lower), Some(upper), None) => Ok(IncoherentChannel::levels(lower, upper, ch.rate, ch.control)),
        (None, None, Some(jump)) => {
            Ok(IncoherentChannel::operator(matrix_from_doc(jump, &format!("{field}.jump"))?, ch.rate, ch.control))
        }
        _ => Err(ModelError::new(ModelErrorCode::Schema, field, "give either `lower` and `upper`, or `jump`")),
    }
}

/// Map in-memory field names onto document keys.
fn rename_fields(mut e: ModelError) -> ModelError {
    if e.field == "H0" {
        e.field = "h0".into();
    } else if let Some(rest) = e.field.strip_prefix("V[") {
        e.field = format!("controls[{rest}");
    }
    e.field = e.field.replace(".einstein_coeff", ".rate").replace(".control_index", ".control");
    e
}
