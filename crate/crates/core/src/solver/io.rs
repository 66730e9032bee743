//! `HELMSOL1` flat files: 8 magic bytes, a little-endian `u32` header length, a JSON
//! header, then little-endian `f64` pairs `(re, im)` for every node, and for grid
//! solutions one mask byte per node.

use super::grid::{Grid3, GridField};
use super::radial::{radial_nodes, RadialProfile};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"HELMSOL1";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Layout {
    Radial { n: usize, r0: f64, r_max: f64, m: usize },
    Grid { grid: Grid3 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolutionHeader {
    pub layout: Layout,
    pub dims: Vec<usize>,
    pub lambda: f64,
    pub eps: f64,
    pub preset: String,
    pub relative_residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub enum StoredField {
    Radial(RadialProfile),
    Grid(GridField),
}

impl StoredField {
    pub fn layout(&self) -> Layout {
        match self {
            StoredField::Radial(p) => Layout::Radial {
                n: p.n,
                r0: p.r0,
                r_max: p.r_max,
                m: p.v.len(),
            },
            StoredField::Grid(g) => Layout::Grid { grid: g.grid },
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        match self {
            StoredField::Radial(p) => vec![p.v.len()],
            StoredField::Grid(g) => vec![g.grid.p; 3],
        }
    }

    fn values(&self) -> &[Complex64] {
        match self {
            StoredField::Radial(p) => &p.v,
            StoredField::Grid(g) => &g.v,
        }
    }
}

pub fn encode(header: &SolutionHeader, field: &StoredField) -> Result<Vec<u8>> {
    let json = serde_json::to_vec(header)?;
    let mut out = Vec::with_capacity(12 + json.len() + 16 * field.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for z in field.values() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    if let StoredField::Grid(g) = field {
        out.extend(g.mask.iter().map(|&m| m as u8));
    }
    Ok(out)
}

fn corrupt(msg: &str) -> Error {
    Error::InvalidInput(format!("malformed solution file: {msg}"))
}

pub fn decode(bytes: &[u8]) -> Result<(SolutionHeader, StoredField)> {
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = bytes.get(12..12 + hlen).ok_or_else(|| corrupt("truncated header"))?;
    let header: SolutionHeader = serde_json::from_slice(body)?;
    let count: usize = match &header.layout {
        Layout::Radial { m, .. } => *m,
        Layout::Grid { grid } => grid.len(),
    };
    let start = 12 + hlen;
    let data = bytes
        .get(start..start + 16 * count)
        .ok_or_else(|| corrupt("truncated values"))?;
    let v: Vec<Complex64> = data
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let field = match header.layout.clone() {
        Layout::Radial { n, r0, r_max, m } => StoredField::Radial(RadialProfile {
            n,
            r0,
            r_max,
            r: radial_nodes(r0, r_max, m),
            v,
        }),
        Layout::Grid { grid } => {
            let mstart = start + 16 * count;
            let mask = bytes
                .get(mstart..mstart + count)
                .ok_or_else(|| corrupt("truncated mask"))?;
            StoredField::Grid(GridField {
                grid,
                v,
                mask: mask.iter().map(|&b| b != 0).collect(),
            })
        }
    };
    Ok((header, field))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_solution(path: &Path, header: &SolutionHeader, field: &StoredField) -> Result<()> {
    write_atomic(path, &encode(header, field)?)
}

pub fn read_solution(path: &Path) -> Result<(SolutionHeader, StoredField)> {
    decode(&std::fs::read(path)?)
}
