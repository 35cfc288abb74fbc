//! Field and mask files: one JSON header line, then raw little-endian data.
//!
//! Field payload: `N^d` 64-bit floats, row-major. Mask payload: `N^d` bytes
//! (1 = value at or above threshold).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dft::DFT_NORMALIZATION;
use crate::error::{Error, Result};
use crate::field::{Construction, FieldMeta, LatticeField};
use crate::grid::LatticeGrid;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FileKind {
    #[default]
    Field,
    Mask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format_version: u32,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L_box")]
    pub box_length: f64,
    pub s: Option<f64>,
    pub construction: Construction,
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
    pub modulo_constant: bool,
    pub dft_normalization: String,
    #[serde(default)]
    pub kind: FileKind,
    #[serde(default)]
    pub config: serde_json::Value,
    /// `(axis, index)` restrictions applied, outermost first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slices: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl FieldHeader {
    pub fn for_field(field: &LatticeField) -> Self {
        let g = field.grid();
        let meta = field.meta();
        Self {
            format_version: FORMAT_VERSION,
            d: g.dimension(),
            n: g.points_per_axis(),
            box_length: g.box_length(),
            s: meta.exponent,
            construction: meta.construction,
            seed: meta.seed,
            stream: meta.stream,
            modulo_constant: field.modulo_constant(),
            dft_normalization: DFT_NORMALIZATION.to_string(),
            kind: FileKind::Field,
            config: meta.config.clone(),
            slices: Vec::new(),
            threshold: None,
        }
    }

    pub fn grid(&self) -> Result<LatticeGrid> {
        LatticeGrid::new(self.d, self.n, self.box_length)
    }

    pub fn meta(&self) -> FieldMeta {
        FieldMeta {
            construction: self.construction,
            seed: self.seed,
            stream: self.stream,
            exponent: self.s,
            config: self.config.clone(),
        }
    }

    pub fn to_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// A field together with the header it was read with or will be written with.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub header: FieldHeader,
    pub field: LatticeField,
}

impl FieldFile {
    pub fn new(field: LatticeField) -> Self {
        Self { header: FieldHeader::for_field(&field), field }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = self.header.to_line()?.into_bytes();
        out.push(b'\n');
        out.reserve(8 * self.field.values().len());
        for v in self.field.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&self.to_bytes()?)?;
        w.flush()?;
        Ok(())
    }

    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut r = BufReader::new(reader);
        let header = read_header(&mut r)?;
        if header.kind != FileKind::Field {
            return Err(Error::Format("expected a field file, found a mask".into()));
        }
        let grid = header.grid()?;
        let mut raw = Vec::new();
        r.read_to_end(&mut raw)?;
        let count = grid.site_count();
        if raw.len() != 8 * count {
            return Err(Error::Format(format!("payload has {} bytes, expected {}", raw.len(), 8 * count)));
        }
        let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let field = LatticeField::new(grid, values, header.modulo_constant, header.meta())?;
        Ok(Self { header, field })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(File::open(path)?)
    }

    /// Restriction to `x[axis] = index * dx`, inheriting the header.
    pub fn slice(&self, axis: usize, index: usize) -> Result<Self> {
        let field = self.field.slice(axis, index)?;
        let mut header = self.header.clone();
        header.d = field.grid().dimension();
        header.slices.push([axis, index]);
        Ok(Self { header, field })
    }

    /// `mask = value >= threshold`.
    pub fn levelset(&self, threshold: f64) -> Result<MaskFile> {
        if !threshold.is_finite() {
            return Err(Error::InvalidArgument(format!("threshold {threshold} is not finite")));
        }
        let mut header = self.header.clone();
        header.kind = FileKind::Mask;
        header.threshold = Some(threshold);
        let mask = self.field.values().iter().map(|v| u8::from(*v >= threshold)).collect();
        Ok(MaskFile { header, mask })
    }
}

fn read_header(r: &mut impl BufRead) -> Result<FieldHeader> {
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Format("missing header line".into()));
    }
    line.pop();
    let header: FieldHeader = serde_json::from_slice(&line)?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format_version {}", header.format_version)));
    }
    Ok(header)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskFile {
    pub header: FieldHeader,
    pub mask: Vec<u8>,
}

impl MaskFile {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = self.header.to_line()?.into_bytes();
        out.push(b'\n');
        out.extend_from_slice(&self.mask);
        Ok(out)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&self.to_bytes()?)?;
        w.flush()?;
        Ok(())
    }

    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut r = BufReader::new(reader);
        let header = read_header(&mut r)?;
        if header.kind != FileKind::Mask {
            return Err(Error::Format("expected a mask file".into()));
        }
        let mut mask = Vec::new();
        r.read_to_end(&mut mask)?;
        if mask.len() != header.grid()?.site_count() {
            return Err(Error::Format("mask payload length mismatch".into()));
        }
        Ok(Self { header, mask })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(File::open(path)?)
    }

    pub fn true_fraction(&self) -> f64 {
        self.mask.iter().map(|&b| b as usize).sum::<usize>() as f64 / self.mask.len() as f64
    }
}
