//! Binary field snapshots.
//!
//! Layout: `EPLF`, u32 version, u32 n, f64 L, u8 kind (0 scalar, 1 vector),
//! f64 time, then little-endian f64 nodal values, x fastest, components
//! concatenated.

use anyhow::{bail, Context, Result};
use epflow_core::{GridSpec, ScalarField, VectorField};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"EPLF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 1 + 8;

#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl Field {
    fn kind(&self) -> u8 {
        match self {
            Field::Scalar(_) => 0,
            Field::Vector(_) => 1,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        match self {
            Field::Scalar(f) => f.grid(),
            Field::Vector(f) => f.grid(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub field: Field,
    pub time: f64,
}

pub fn encode(snap: &Snapshot) -> Vec<u8> {
    // grid storage order is already x fastest
    let g = *snap.field.grid();
    let comps: Vec<&ScalarField> = match &snap.field {
        Field::Scalar(f) => vec![f],
        Field::Vector(v) => v.comps().iter().collect(),
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * comps.len() * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    out.extend_from_slice(&g.length().to_le_bytes());
    out.push(snap.field.kind());
    out.extend_from_slice(&snap.time.to_le_bytes());
    for c in comps {
        for v in c.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn take<const N: usize>(bytes: &[u8], at: &mut usize) -> Result<[u8; N]> {
    let end = *at + N;
    if end > bytes.len() {
        bail!("snapshot header truncated at byte {}", bytes.len());
    }
    let a: [u8; N] = bytes[*at..end].try_into().expect("length checked");
    *at = end;
    Ok(a)
}

/// Decode, checking the header against `expected` when given.
/// `vector` selects the required kind.
pub fn decode(bytes: &[u8], expected: Option<&GridSpec>, vector: bool) -> Result<Snapshot> {
    let mut at = 0;
    let magic: [u8; 4] = take(bytes, &mut at)?;
    if &magic != MAGIC {
        bail!("bad magic {:?}, expected EPLF", String::from_utf8_lossy(&magic));
    }
    let version = u32::from_le_bytes(take(bytes, &mut at)?);
    if version != VERSION {
        bail!("snapshot version {version} is not supported (expected {VERSION})");
    }
    let n = u32::from_le_bytes(take(bytes, &mut at)?) as usize;
    let l = f64::from_le_bytes(take(bytes, &mut at)?);
    let kind = take::<1>(bytes, &mut at)?[0];
    let time = f64::from_le_bytes(take(bytes, &mut at)?);
    let comps = match kind {
        0 => 1,
        1 => 3,
        k => bail!("unknown snapshot kind {k}"),
    };
    if vector != (kind == 1) {
        bail!(
            "snapshot holds a {} field, a {} field was requested",
            if kind == 1 { "vector" } else { "scalar" },
            if vector { "vector" } else { "scalar" }
        );
    }
    let grid = GridSpec::new(n, l).with_context(|| format!("snapshot header n = {n}, L = {l}"))?;
    if let Some(e) = expected {
        if e.n() != n {
            bail!("snapshot has n = {n}, the run grid has n = {}", e.n());
        }
        if e.length().to_bits() != l.to_bits() {
            bail!("snapshot has L = {l}, the run grid has L = {}", e.length());
        }
    }
    let need = HEADER_LEN + 8 * comps * grid.len();
    if bytes.len() != need {
        bail!("snapshot payload truncated or oversized: {} bytes, expected {need}", bytes.len());
    }
    let mut fields = Vec::with_capacity(comps);
    for _ in 0..comps {
        let vals = (0..grid.len())
            .map(|_| take(bytes, &mut at).map(f64::from_le_bytes))
            .collect::<Result<Vec<_>>>()?;
        fields.push(ScalarField::new(grid, vals)?);
    }
    let field = if comps == 1 {
        Field::Scalar(fields.pop().expect("one component"))
    } else {
        let [a, b, c]: [ScalarField; 3] = fields.try_into().expect("three components");
        Field::Vector(VectorField::new([a, b, c])?)
    };
    Ok(Snapshot { field, time })
}

pub fn write_field(path: &Path, snap: &Snapshot) -> Result<()> {
    std::fs::write(path, encode(snap)).with_context(|| format!("cannot write snapshot {}", path.display()))
}

pub fn read_field(path: &Path, expected: Option<&GridSpec>, vector: bool) -> Result<Snapshot> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read snapshot {}", path.display()))?;
    decode(&bytes, expected, vector).with_context(|| format!("snapshot {}", path.display()))
}

pub fn read_scalar(path: &Path, grid: &GridSpec) -> Result<ScalarField> {
    match read_field(path, Some(grid), false)?.field {
        Field::Scalar(f) => Ok(f),
        Field::Vector(_) => unreachable!("kind checked"),
    }
}

pub fn read_vector(path: &Path, grid: &GridSpec) -> Result<VectorField> {
    match read_field(path, Some(grid), true)?.field {
        Field::Vector(f) => Ok(f),
        Field::Scalar(_) => unreachable!("kind checked"),
    }
}
