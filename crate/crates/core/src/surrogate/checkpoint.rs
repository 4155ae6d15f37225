//! Binary checkpoint container.
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `NLWGSURR` |
//! | 4 | format version, u32 LE |
//! | 8 | header length `h`, u64 LE |
//! | h | UTF-8 JSON header: polarization, wavelength, grid spacing, encoding, standardization, layer sizes, metadata |
//! | 8 | parameter count `p`, u64 LE |
//! | 8p | parameters as f64 LE, layer by layer: `out × in` row-major weights, then biases |
//! | 8 | shortcut parameter count `q`, u64 LE |
//! | 8q | shortcut `out × in` row-major weights, then biases, f64 LE |

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Encoding, LinearHead, Mlp, ModelMetadata, Standardization, SurrogateError, SurrogateModel};
use crate::modes::Polarization;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"NLWGSURR";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    polarization: Polarization,
    lambda_nm: f64,
    grid_spacing_nm: f64,
    encoding: Encoding,
    standardization: Standardization,
    sizes: Vec<usize>,
    metadata: ModelMetadata,
}

pub fn write_checkpoint<W: Write>(model: &SurrogateModel, mut w: W) -> Result<(), SurrogateError> {
    let header = Header {
        polarization: model.polarization,
        lambda_nm: model.lambda_nm,
        grid_spacing_nm: model.grid_spacing_nm,
        encoding: model.encoding,
        standardization: model.standardization.clone(),
        sizes: model.network.sizes.clone(),
        metadata: model.metadata.clone(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| SurrogateError::Checkpoint(e.to_string()))?;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    w.write_all(&(model.network.params.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * model.network.params.len());
    for p in &model.network.params {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    w.write_all(&buf)?;
    let sc = &model.shortcut;
    w.write_all(&((sc.weights.len() + sc.bias.len()) as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * (sc.weights.len() + sc.bias.len()));
    for p in sc.weights.iter().chain(&sc.bias) {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, SurrogateError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>, SurrogateError> {
    let mut raw = vec![0u8; 8 * count];
    r.read_exact(&mut raw)?;
    let v: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    if v.iter().any(|p| !p.is_finite()) {
        return Err(SurrogateError::Checkpoint("non-finite weight".into()));
    }
    Ok(v)
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<SurrogateModel, SurrogateError> {
    let bad = |m: String| SurrogateError::Checkpoint(m);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad("not a surrogate checkpoint".into()));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v)?;
    let version = u32::from_le_bytes(v);
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let len = read_u64(&mut r)? as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let h: Header = serde_json::from_slice(&json).map_err(|e| bad(e.to_string()))?;
    let count = read_u64(&mut r)? as usize;
    if h.sizes.len() < 2 || count != Mlp::param_count(&h.sizes) {
        return Err(bad(format!("{count} parameters do not fit layer sizes {:?}", h.sizes)));
    }
    if h.sizes[0] != h.encoding.n_inputs || *h.sizes.last().unwrap() != h.encoding.n_nodes + 1 {
        return Err(bad("layer sizes disagree with the encoding".into()));
    }
    let params = read_f64s(&mut r, count)?;
    let (n_in, n_out) = (h.encoding.n_inputs, h.encoding.n_nodes + 1);
    let q = read_u64(&mut r)? as usize;
    if q != n_in * n_out + n_out {
        return Err(bad(format!("{q} shortcut parameters for a {n_in} → {n_out} map")));
    }
    let mut sc = read_f64s(&mut r, q)?;
    let bias = sc.split_off(n_in * n_out);
    let mut tail = [0u8; 1];
    if r.read(&mut tail)? != 0 {
        return Err(bad("trailing bytes".into()));
    }
    Ok(SurrogateModel {
        polarization: h.polarization,
        lambda_nm: h.lambda_nm,
        grid_spacing_nm: h.grid_spacing_nm,
        encoding: h.encoding,
        standardization: h.standardization,
        network: Mlp { sizes: h.sizes, params },
        shortcut: LinearHead { n_in, n_out, weights: sc, bias },
        metadata: h.metadata,
    })
}
