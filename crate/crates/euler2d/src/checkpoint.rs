//! Self-describing flow-state checkpoints.
//!
//! A checkpoint is a single JSON document.  Metadata — format name, version,
//! grid size, time — is stored as plain fields; field arrays are stored as
//! base64 text encoding IEEE-754 binary64 values, little-endian, in row-major
//! order (`index = i·n + j` for the point `(x_i, y_j)`).  The encoding block
//! inside the document declares exactly that, so a reader in any language can
//! verify what it is looking at instead of guessing.
//!
//! Round trips are bit-exact: signs of zero, subnormals, and the state time
//! all survive unchanged, and a reloaded state continues a run on the same
//! floating-point trajectory.  Loading validates structure (format, version,
//! declared encoding, payload lengths) and physics (finite fields, positive
//! density) and reports failures as typed errors naming the offending field.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::TorusGrid;
use crate::solver::{CoEvolved, FlowState};

/// Format version written by this build; loading any other version fails.
pub const CHECKPOINT_VERSION: u32 = 1;

const FORMAT_NAME: &str = "euler2d-state";
const DTYPE: &str = "f64";
const BYTE_ORDER: &str = "little_endian";
const LAYOUT: &str = "row_major";
const CODEC: &str = "base64";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Encoding {
    dtype: String,
    byte_order: String,
    layout: String,
    codec: String,
}

impl Encoding {
    fn current() -> Encoding {
        Encoding {
            dtype: DTYPE.into(),
            byte_order: BYTE_ORDER.into(),
            layout: LAYOUT.into(),
            codec: CODEC.into(),
        }
    }

    fn check(&self) -> Result<()> {
        let expect = |field: &str, got: &str, want: &str| -> Result<()> {
            if got == want {
                Ok(())
            } else {
                Err(Error::Data(format!(
                    "checkpoint declares {field} = {got:?}, this reader handles only {want:?}"
                )))
            }
        };
        expect("dtype", &self.dtype, DTYPE)?;
        expect("byte_order", &self.byte_order, BYTE_ORDER)?;
        expect("layout", &self.layout, LAYOUT)?;
        expect("codec", &self.codec, CODEC)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoPayload {
    x_tilde_x: String,
    x_tilde_y: String,
    eta_tilde: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format: String,
    version: u32,
    encoding: Encoding,
    /// Grid points per side.
    grid: usize,
    /// State time.
    t: f64,
    rho: String,
    u_x: String,
    u_y: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    co_evolved: Option<CoPayload>,
}

fn encode(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    BASE64.encode(bytes)
}

fn decode(name: &str, text: &str, expected_len: usize) -> Result<Vec<f64>> {
    let bytes = BASE64
        .decode(text)
        .map_err(|e| Error::Data(format!("field {name}: invalid base64 ({e})")))?;
    if bytes.len() != expected_len * 8 {
        return Err(Error::Data(format!(
            "field {name}: payload holds {} bytes, grid metadata implies {}",
            bytes.len(),
            expected_len * 8
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks of 8")))
        .collect())
}

fn decode_scalar(name: &str, text: &str, grid: TorusGrid) -> Result<ScalarField> {
    let values = decode(name, text, grid.n() * grid.n())?;
    let field = ScalarField::from_values(grid, values)?;
    if !field.is_finite() {
        return Err(Error::Data(format!(
            "field {name}: contains non-finite values"
        )));
    }
    Ok(field)
}

/// Serialize a state to checkpoint JSON.
pub fn to_json(state: &FlowState) -> String {
    let doc = Document {
        format: FORMAT_NAME.into(),
        version: CHECKPOINT_VERSION,
        encoding: Encoding::current(),
        grid: state.grid().n(),
        t: state.t,
        rho: encode(state.rho.values()),
        u_x: encode(state.u.x.values()),
        u_y: encode(state.u.y.values()),
        co_evolved: state.co.as_ref().map(|co| CoPayload {
            x_tilde_x: encode(co.x_tilde.x.values()),
            x_tilde_y: encode(co.x_tilde.y.values()),
            eta_tilde: encode(co.eta_tilde.values()),
        }),
    };
    serde_json::to_string(&doc).expect("checkpoint documents serialize")
}

/// Reconstruct a state from checkpoint JSON, verbatim — no re-projection, so
/// a round trip is bit-exact.
pub fn from_json(text: &str) -> Result<FlowState> {
    let doc: Document =
        serde_json::from_str(text).map_err(|e| Error::Data(format!("checkpoint JSON: {e}")))?;
    if doc.format != FORMAT_NAME {
        return Err(Error::Data(format!(
            "not a flow-state checkpoint (format {:?}, expected {FORMAT_NAME:?})",
            doc.format
        )));
    }
    if doc.version != CHECKPOINT_VERSION {
        return Err(Error::Data(format!(
            "checkpoint version {} unsupported (this build reads version {CHECKPOINT_VERSION})",
            doc.version
        )));
    }
    doc.encoding.check()?;
    if !doc.t.is_finite() {
        return Err(Error::Data(format!("state time {} is not finite", doc.t)));
    }
    let grid = TorusGrid::new(doc.grid)?;
    let rho = decode_scalar("rho", &doc.rho, grid)?;
    let min_rho = rho.min();
    if !(min_rho > 0.0) {
        return Err(Error::Vacuum { min_rho });
    }
    let u = VectorField::new(
        decode_scalar("u_x", &doc.u_x, grid)?,
        decode_scalar("u_y", &doc.u_y, grid)?,
    );
    let co = match doc.co_evolved {
        None => None,
        Some(p) => Some(CoEvolved {
            x_tilde: VectorField::new(
                decode_scalar("x_tilde_x", &p.x_tilde_x, grid)?,
                decode_scalar("x_tilde_y", &p.x_tilde_y, grid)?,
            ),
            eta_tilde: decode_scalar("eta_tilde", &p.eta_tilde, grid)?,
        }),
    };
    Ok(FlowState {
        t: doc.t,
        rho,
        u,
        co,
    })
}

/// Write a checkpoint file.
pub fn save(state: &FlowState, path: &Path) -> Result<()> {
    fs::write(path, to_json(state))?;
    Ok(())
}

/// Read a checkpoint file.
pub fn load(path: &Path) -> Result<FlowState> {
    from_json(&fs::read_to_string(path)?)
}
