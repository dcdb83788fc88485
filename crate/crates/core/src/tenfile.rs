//! TEN1 binary tensor files.
//!
//! Layout (little-endian throughout):
//!
//! ```text
//! offset 0   magic  "TEN1"
//! offset 4   dtype  u8   0 = f32, 1 = u16, 2 = u8
//! offset 5   ndim   u8
//! offset 6   dims   ndim × u64
//! then       payload, row-major, product(dims) × dtype size bytes
//! ```
//!
//! Floats are stored by bit pattern, so NaN payloads survive a round trip.

use thiserror::Error;

use crate::error::{Error, Result};
use crate::tensor::{LabelMap, OneHotMap, ProbMap};

pub const MAGIC: [u8; 4] = *b"TEN1";
const HEADER_FIXED: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("bad magic {found:?} at offset 0, expected \"TEN1\"")]
    BadMagic { found: Vec<u8> },
    #[error("unknown dtype code {code} at offset 4")]
    UnknownDtype { code: u8 },
    #[error("file truncated at offset {offset}: {needed} bytes required")]
    Truncated { offset: usize, needed: usize },
    #[error("{extra} trailing bytes after payload end at offset {offset}")]
    TrailingBytes { offset: usize, extra: usize },
    #[error("dimensions {dims:?} overflow the addressable size")]
    Overflow { dims: Vec<u64> },
    #[error("expected a {expected}, found a {found}")]
    WrongKind { expected: String, found: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32 = 0,
    U16 = 1,
    U8 = 2,
}

impl DType {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Self::F32),
            1 => Some(Self::U16),
            2 => Some(Self::U8),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Self::F32 => 4,
            Self::U16 => 2,
            Self::U8 => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::F32 => "f32",
            Self::U16 => "u16",
            Self::U8 => "u8",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    U16(Vec<u16>),
    U8(Vec<u8>),
}

impl TensorData {
    pub fn dtype(&self) -> DType {
        match self {
            Self::F32(_) => DType::F32,
            Self::U16(_) => DType::U16,
            Self::U8(_) => DType::U8,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::F32(v) => v.len(),
            Self::U16(v) => v.len(),
            Self::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An n-dimensional array as stored in a TEN1 file.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<u64>,
    data: TensorData,
}

fn element_count(dims: &[u64]) -> Option<usize> {
    dims.iter().try_fold(1usize, |acc, &d| {
        usize::try_from(d).ok().and_then(|d| acc.checked_mul(d))
    })
}

impl Tensor {
    pub fn new(dims: Vec<u64>, data: TensorData) -> Result<Self> {
        if dims.len() > usize::from(u8::MAX) {
            return Err(Error::ShapeMismatch(format!(
                "{} dimensions exceed 255",
                dims.len()
            )));
        }
        let count = element_count(&dims).ok_or(FormatError::Overflow { dims: dims.clone() })?;
        if count != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "dims {dims:?} hold {count} elements, data has {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    fn kind(&self) -> String {
        format!("{}-d {} tensor", self.dims.len(), self.dtype().name())
    }

    fn dims_usize(&self) -> Vec<usize> {
        // Tensor::new guarantees every dim fits in usize.
        self.dims.iter().map(|&d| d as usize).collect()
    }
}

/// Serializes `tensor` to TEN1 bytes.
pub fn write_tensor(tensor: &Tensor) -> Vec<u8> {
    let payload = tensor.data.len() * tensor.dtype().size();
    let mut out = Vec::with_capacity(HEADER_FIXED + 8 * tensor.dims.len() + payload);
    out.extend_from_slice(&MAGIC);
    out.push(tensor.dtype() as u8);
    out.push(tensor.dims.len() as u8);
    for &d in &tensor.dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    match &tensor.data {
        TensorData::F32(v) => v
            .iter()
            .for_each(|x| out.extend_from_slice(&x.to_bits().to_le_bytes())),
        TensorData::U16(v) => v
            .iter()
            .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::U8(v) => out.extend_from_slice(v),
    }
    out
}

fn need(bytes: &[u8], end: usize) -> Result<(), FormatError> {
    if bytes.len() < end {
        return Err(FormatError::Truncated {
            offset: bytes.len(),
            needed: end,
        });
    }
    Ok(())
}

/// Parses TEN1 bytes. The whole buffer must be consumed.
pub fn read_tensor(bytes: &[u8]) -> Result<Tensor, FormatError> {
    need(bytes, 4)?;
    if bytes[..4] != MAGIC {
        return Err(FormatError::BadMagic {
            found: bytes[..4].to_vec(),
        });
    }
    need(bytes, HEADER_FIXED)?;
    let dtype = DType::from_code(bytes[4]).ok_or(FormatError::UnknownDtype { code: bytes[4] })?;
    let ndim = usize::from(bytes[5]);
    let header_end = HEADER_FIXED + 8 * ndim;
    need(bytes, header_end)?;
    let dims: Vec<u64> = bytes[HEADER_FIXED..header_end]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let count = element_count(&dims).ok_or_else(|| FormatError::Overflow { dims: dims.clone() })?;
    let payload_end = count
        .checked_mul(dtype.size())
        .and_then(|p| p.checked_add(header_end))
        .ok_or_else(|| FormatError::Overflow { dims: dims.clone() })?;
    need(bytes, payload_end)?;
    if bytes.len() > payload_end {
        return Err(FormatError::TrailingBytes {
            offset: payload_end,
            extra: bytes.len() - payload_end,
        });
    }
    let payload = &bytes[header_end..payload_end];
    let data = match dtype {
        DType::F32 => TensorData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_bits(u32::from_le_bytes(c.try_into().expect("4-byte chunk"))))
                .collect(),
        ),
        DType::U16 => TensorData::U16(
            payload
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes(c.try_into().expect("2-byte chunk")))
                .collect(),
        ),
        DType::U8 => TensorData::U8(payload.to_vec()),
    };
    Ok(Tensor { dims, data })
}

impl From<&ProbMap> for Tensor {
    fn from(map: &ProbMap) -> Self {
        Tensor {
            dims: vec![
                map.height() as u64,
                map.width() as u64,
                map.classes() as u64,
            ],
            data: TensorData::F32(map.data().to_vec()),
        }
    }
}

impl From<&LabelMap> for Tensor {
    fn from(map: &LabelMap) -> Self {
        Tensor {
            dims: vec![map.height() as u64, map.width() as u64],
            data: TensorData::U16(map.data().to_vec()),
        }
    }
}

impl From<&OneHotMap> for Tensor {
    fn from(map: &OneHotMap) -> Self {
        Tensor {
            dims: vec![
                map.height() as u64,
                map.width() as u64,
                map.classes() as u64,
            ],
            data: TensorData::U8(map.data().to_vec()),
        }
    }
}

impl TryFrom<&Tensor> for ProbMap {
    type Error = Error;

    fn try_from(t: &Tensor) -> Result<Self> {
        match (t.data(), t.dims.len()) {
            (TensorData::F32(v), 3) => {
                let d = t.dims_usize();
                ProbMap::new(d[0], d[1], d[2], v.clone())
            }
            _ => Err(FormatError::WrongKind {
                expected: "3-d f32 tensor".into(),
                found: t.kind(),
            }
            .into()),
        }
    }
}

impl TryFrom<&Tensor> for LabelMap {
    type Error = Error;

    fn try_from(t: &Tensor) -> Result<Self> {
        match (t.data(), t.dims.len()) {
            (TensorData::U16(v), 2) => {
                let d = t.dims_usize();
                LabelMap::new(d[0], d[1], v.clone())
            }
            _ => Err(FormatError::WrongKind {
                expected: "2-d u16 tensor".into(),
                found: t.kind(),
            }
            .into()),
        }
    }
}

/// A 2-d f32 tensor holding an `height × width` plane.
pub fn plane_tensor(height: usize, width: usize, values: Vec<f32>) -> Result<Tensor> {
    Tensor::new(vec![height as u64, width as u64], TensorData::F32(values))
}

/// A 3-d f32 tensor holding an `height × width × classes` map.
pub fn map_tensor(height: usize, width: usize, classes: usize, values: Vec<f32>) -> Result<Tensor> {
    Tensor::new(
        vec![height as u64, width as u64, classes as u64],
        TensorData::F32(values),
    )
}
