//! Teacher embedding tables and the TEB1 file format.
//!
//! Layout (little-endian): `b"TEB1"`, `u32` record count, `u32` dim, then per
//! record a `u32` UTF-8 byte length, the text bytes, and `dim` `f32` values.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub const TEB_MAGIC: &[u8; 4] = b"TEB1";

/// Number of histogram bins for the synthetic teacher's byte-bigram features.
pub const BIGRAM_BINS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct TeacherTable {
    dim: usize,
    records: Vec<(String, Vec<f32>)>,
    index: HashMap<String, usize>,
}

impl TeacherTable {
    pub fn new(dim: usize) -> Self {
        Self { dim, records: Vec::new(), index: HashMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[(String, Vec<f32>)] {
        &self.records
    }

    pub fn push(&mut self, text: impl Into<String>, vector: Vec<f32>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: vector.len() });
        }
        let text = text.into();
        self.index.insert(text.clone(), self.records.len());
        self.records.push((text, vector));
        Ok(())
    }

    /// Vector for `text`; the last record wins when texts repeat.
    pub fn get(&self, text: &str) -> Option<&[f32]> {
        self.index.get(text).map(|&i| self.records[i].1.as_slice())
    }

    pub fn get_f64(&self, text: &str) -> Option<Vec<f64>> {
        self.get(text).map(|v| v.iter().map(|&x| f64::from(x)).collect())
    }

    pub fn read<R: Read>(mut reader: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(&mut reader, &mut magic, "magic")?;
        if &magic != TEB_MAGIC {
            return Err(Error::Teacher(format!("bad magic {magic:?}")));
        }
        let count = read_u32(&mut reader, "record count")? as usize;
        let dim = read_u32(&mut reader, "dim")? as usize;
        let mut table = TeacherTable::new(dim);
        let mut floats = vec![0u8; dim * 4];
        for r in 0..count {
            let len = read_u32(&mut reader, "text length")? as usize;
            let mut text = vec![0u8; len];
            read_exact(&mut reader, &mut text, "text")?;
            let text = String::from_utf8(text).map_err(|_| Error::Teacher(format!("record {r}: text is not UTF-8")))?;
            read_exact(&mut reader, &mut floats, "vector")
                .map_err(|_| Error::Teacher(format!("record {r}: truncated vector, expected {dim} floats")))?;
            let vector: Vec<f32> =
                floats.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
            if let Some(i) = vector.iter().position(|x| !x.is_finite()) {
                return Err(Error::Teacher(format!("record {r}: non-finite value at component {i}")));
            }
            table.push(text, vector)?;
        }
        Ok(table)
    }

    /// Write the table; returns the number of bytes written.
    pub fn write<W: Write>(&self, mut writer: W) -> Result<usize> {
        let count = u32::try_from(self.records.len()).map_err(|_| Error::Teacher("too many records".into()))?;
        let dim = u32::try_from(self.dim).map_err(|_| Error::Teacher("dim too large".into()))?;
        let mut buf = Vec::with_capacity(12 + self.records.len() * (4 + self.dim * 4));
        buf.extend_from_slice(TEB_MAGIC);
        buf.extend_from_slice(&count.to_le_bytes());
        buf.extend_from_slice(&dim.to_le_bytes());
        for (text, vector) in &self.records {
            let len = u32::try_from(text.len()).map_err(|_| Error::Teacher("text too long".into()))?;
            buf.extend_from_slice(&len.to_le_bytes());
            buf.extend_from_slice(text.as_bytes());
            for x in vector {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        writer.write_all(&buf)?;
        Ok(buf.len())
    }
}

fn read_exact<R: Read>(reader: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    reader.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Teacher(format!("truncated file while reading {what}")),
        _ => Error::from(e),
    })
}

fn read_u32<R: Read>(reader: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(reader, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

/// Byte-bigram count histogram of a text's UTF-8 bytes.
pub fn bigram_histogram(text: &str) -> [f64; BIGRAM_BINS] {
    let mut h = [0.0; BIGRAM_BINS];
    for w in text.as_bytes().windows(2) {
        let bin = (usize::from(w[0]) * 31 + usize::from(w[1])) % BIGRAM_BINS;
        h[bin] += 1.0;
    }
    h
}

/// Deterministic stand-in for a frozen text encoder:
/// `tanh(A · h(text))` with `A ~ Normal(0, 1/16)` drawn from `seed`.
#[derive(Debug, Clone)]
pub struct SyntheticTeacher {
    dim: usize,
    projection: Vec<f64>,
}

impl SyntheticTeacher {
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.25).expect("valid std");
        let projection = (0..dim * BIGRAM_BINS).map(|_| normal.sample(&mut rng)).collect();
        Self { dim, projection }
    }

    pub fn encode(&self, text: &str) -> Vec<f32> {
        let h = bigram_histogram(text);
        (0..self.dim)
            .map(|d| {
                let row = &self.projection[d * BIGRAM_BINS..(d + 1) * BIGRAM_BINS];
                let z: f64 = row.iter().zip(&h).map(|(a, x)| a * x).sum();
                z.tanh() as f32
            })
            .collect()
    }
}

/// Teacher table for `texts` from the synthetic encoder.
pub fn synthetic_teacher(texts: &[String], dim: usize, seed: u64) -> TeacherTable {
    let teacher = SyntheticTeacher::new(dim, seed);
    let mut table = TeacherTable::new(dim);
    for (text, v) in texts.iter().zip(crate::par::map(texts, |t| teacher.encode(t))) {
        table.push(text.clone(), v).expect("encoder emits dim values");
    }
    table
}
