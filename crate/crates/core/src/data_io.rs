//! IDX ingestion, model files and binarized dataset caches.
//!
//! Model and dataset containers share one framing, all integers
//! little-endian:
//!
//! ```text
//! magic    [u8; 4]   "CTMM" (model) or "CTMD" (dataset)
//! version  u16
//! length   u64       body length in bytes
//! body     [u8; length]
//! crc32    u32       CRC-32 (IEEE) of body
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian, WriteBytesExt};

use crate::automata::{Polarity, TaBank};
use crate::binarize::{adaptive_gaussian_binarize, BitImage, GrayImage};
use crate::classifier::{ClassModel, MulticlassModel, OutputHead};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::feedback::ClauseWeights;
use crate::params::Hyperparams;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

pub const MODEL_MAGIC: [u8; 4] = *b"CTMM";
pub const DATASET_MAGIC: [u8; 4] = *b"CTMD";
pub const MODEL_VERSION: u16 = 1;
pub const DATASET_VERSION: u16 = 1;

const FRAME_HEADER: usize = 4 + 2 + 8;
const FRAME_TRAILER: usize = 4;

fn need(bytes: &[u8], n: usize) -> Result<()> {
    if bytes.len() < n {
        Err(Error::Truncated {
            needed: n,
            available: bytes.len(),
        })
    } else {
        Ok(())
    }
}

fn idx_header(bytes: &[u8], expected_magic: u32, dims: usize) -> Result<Vec<usize>> {
    need(bytes, 4)?;
    let magic = BigEndian::read_u32(bytes);
    if magic != expected_magic {
        return Err(Error::BadMagic {
            expected: expected_magic,
            found: magic,
        });
    }
    need(bytes, 4 * (1 + dims))?;
    Ok((0..dims)
        .map(|i| BigEndian::read_u32(&bytes[4 + 4 * i..]) as usize)
        .collect())
}

/// Parses an IDX image file (`0x00000803`, count, rows, cols, pixels).
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<GrayImage>> {
    let dims = idx_header(bytes, IDX_IMAGES_MAGIC, 3)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    if count > 0 && (rows == 0 || cols == 0) {
        return Err(Error::MalformedHeader(format!("zero image size {rows}x{cols}")));
    }
    let body = &bytes[16..];
    let expected = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| Error::MalformedHeader("image count overflows".into()))?;
    need(body, expected)?;
    if body.len() != expected {
        return Err(Error::MalformedHeader(format!(
            "{} trailing bytes after {count} images",
            body.len() - expected
        )));
    }
    body.chunks_exact(rows * cols)
        .take(count)
        .map(|px| GrayImage::new(cols, rows, px.to_vec()))
        .collect()
}

/// Parses an IDX label file (`0x00000801`, count, labels).
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let dims = idx_header(bytes, IDX_LABELS_MAGIC, 1)?;
    let count = dims[0];
    let body = &bytes[8..];
    need(body, count)?;
    if body.len() != count {
        return Err(Error::MalformedHeader(format!(
            "{} trailing bytes after {count} labels",
            body.len() - count
        )));
    }
    Ok(body.iter().map(|&b| usize::from(b)).collect())
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Vec<GrayImage>> {
    parse_idx_images(&fs::read(path)?)
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    parse_idx_labels(&fs::read(path)?)
}

/// Loads an IDX image/label pair and binarizes every image with adaptive
/// Gaussian thresholding.
pub fn load_idx_dataset(
    images: impl AsRef<Path>,
    labels: impl AsRef<Path>,
    window: usize,
    offset: i32,
) -> Result<Dataset> {
    let images = load_idx_images(images)?;
    let labels = load_idx_labels(labels)?;
    binarize_dataset(&images, labels, window, offset)
}

pub fn binarize_dataset(images: &[GrayImage], labels: Vec<usize>, window: usize, offset: i32) -> Result<Dataset> {
    use rayon::prelude::*;
    if images.len() != labels.len() {
        return Err(Error::CountMismatch {
            images: images.len(),
            labels: labels.len(),
        });
    }
    let (w, h) = images.first().map_or((1, 1), |i| (i.width(), i.height()));
    let bits = images
        .par_iter()
        .map(|img| adaptive_gaussian_binarize(img, window, offset))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(w, h, 1, bits, labels)
}

fn frame(magic: [u8; 4], version: u16, body: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(FRAME_HEADER + body.len() + FRAME_TRAILER);
    out.extend_from_slice(&magic);
    out.write_u16::<LittleEndian>(version).unwrap();
    out.write_u64::<LittleEndian>(body.len() as u64).unwrap();
    out.extend_from_slice(body);
    out.write_u32::<LittleEndian>(crc32fast::hash(body)).unwrap();
    out
}

fn unframe(bytes: &[u8], magic: [u8; 4], version: u16) -> Result<&[u8]> {
    need(bytes, FRAME_HEADER)?;
    if bytes[..4] != magic {
        return Err(Error::BadMagic {
            expected: u32::from_be_bytes(magic),
            found: u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]),
        });
    }
    let found = LittleEndian::read_u16(&bytes[4..]);
    if found != version {
        return Err(Error::UnsupportedVersion {
            expected: version,
            found,
        });
    }
    let declared = LittleEndian::read_u64(&bytes[6..]);
    let actual = (bytes.len() - FRAME_HEADER).saturating_sub(FRAME_TRAILER) as u64;
    if bytes.len() < FRAME_HEADER + FRAME_TRAILER || declared != actual {
        return Err(Error::CorruptLength { declared, actual });
    }
    let body = &bytes[FRAME_HEADER..bytes.len() - FRAME_TRAILER];
    let stored = LittleEndian::read_u32(&bytes[bytes.len() - FRAME_TRAILER..]);
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }
    Ok(body)
}

/// Bounds-checked little-endian reader over a container body.
struct BodyReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BodyReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(Error::Truncated {
                needed: self.pos.saturating_add(n),
                available: self.bytes.len(),
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(LittleEndian::read_u16(self.take(2)?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(LittleEndian::read_u32(self.take(4)?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(LittleEndian::read_u64(self.take(8)?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(LittleEndian::read_f64(self.take(8)?))
    }

    fn usize(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::MalformedHeader(format!(
                "{} unread bytes at end of body",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.write_u32::<LittleEndian>(u32::try_from(v).expect("value fits in u32"))
        .unwrap();
}

fn write_params(out: &mut Vec<u8>, p: &Hyperparams) {
    put_u32(out, p.clauses_per_class);
    out.write_u32::<LittleEndian>(p.threshold).unwrap();
    out.write_f64::<LittleEndian>(p.specificity).unwrap();
    out.write_u16::<LittleEndian>(p.states_per_action).unwrap();
    put_u32(out, p.filter_size.unwrap_or(0));
    put_u32(out, p.stride);
    put_u32(out, p.layers);
    out.write_u8(u8::from(p.weighting)).unwrap();
    out.write_u8(u8::from(p.boost_true_positive)).unwrap();
    put_u32(out, p.epochs);
    out.write_u64::<LittleEndian>(p.rng_seed).unwrap();
}

fn read_params(r: &mut BodyReader<'_>) -> Result<Hyperparams> {
    Ok(Hyperparams {
        clauses_per_class: r.usize()?,
        threshold: r.u32()?,
        specificity: r.f64()?,
        states_per_action: r.u16()?,
        filter_size: match r.usize()? {
            0 => None,
            f => Some(f),
        },
        stride: r.usize()?,
        layers: r.usize()?,
        weighting: match r.u8()? {
            0 => false,
            1 => true,
            v => return Err(Error::MalformedHeader(format!("weighting flag {v}"))),
        },
        boost_true_positive: match r.u8()? {
            0 => false,
            1 => true,
            v => return Err(Error::MalformedHeader(format!("boost flag {v}"))),
        },
        epochs: r.usize()?,
        rng_seed: r.u64()?,
    })
}

/// Serializes a model into a self-describing container.
pub fn encode_model(model: &MulticlassModel) -> Vec<u8> {
    let mut body = Vec::new();
    write_params(&mut body, model.params());
    let (w, h, z) = model.layout().dims();
    put_u32(&mut body, w);
    put_u32(&mut body, h);
    put_u32(&mut body, z);
    match model.head() {
        OutputHead::Argmax { classes } => {
            body.write_u8(0).unwrap();
            put_u32(&mut body, classes);
        }
        OutputHead::Threshold => {
            body.write_u8(1).unwrap();
            put_u32(&mut body, 1);
        }
    }
    put_u32(&mut body, model.class_models().len());
    for class in model.class_models() {
        for pol in [Polarity::Positive, Polarity::Negative] {
            let bank = class.bank(pol);
            put_u32(&mut body, bank.clauses());
            put_u32(&mut body, bank.literals());
            for &s in bank.states() {
                body.write_u16::<LittleEndian>(s).unwrap();
            }
            for &w in class.weights(pol).as_slice() {
                body.write_u32::<LittleEndian>(w).unwrap();
            }
        }
    }
    frame(MODEL_MAGIC, MODEL_VERSION, &body)
}

pub fn decode_model(bytes: &[u8]) -> Result<MulticlassModel> {
    let body = unframe(bytes, MODEL_MAGIC, MODEL_VERSION)?;
    let mut r = BodyReader::new(body);
    let params = read_params(&mut r)?;
    params.validate()?;
    let dims = (r.usize()?, r.usize()?, r.usize()?);
    let head = match (r.u8()?, r.usize()?) {
        (0, classes) => OutputHead::Argmax { classes },
        (1, _) => OutputHead::Threshold,
        (tag, _) => return Err(Error::MalformedHeader(format!("output head tag {tag}"))),
    };
    let count = r.usize()?;
    let top = 2 * u32::from(params.states_per_action);
    let mut classes = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let mut banks = Vec::with_capacity(2);
        let mut weights = Vec::with_capacity(2);
        for pol in [Polarity::Positive, Polarity::Negative] {
            let clauses = r.usize()?;
            let literals = r.usize()?;
            if literals % 2 != 0 {
                return Err(Error::MalformedHeader(format!("odd literal count {literals}")));
            }
            let n = clauses
                .checked_mul(literals)
                .ok_or_else(|| Error::MalformedHeader("bank size overflows".into()))?;
            let raw = r.take(
                n.checked_mul(2)
                    .ok_or_else(|| Error::MalformedHeader("bank size overflows".into()))?,
            )?;
            let states: Vec<u16> = raw.chunks_exact(2).map(LittleEndian::read_u16).collect();
            if let Some(&bad) = states.iter().find(|&&s| s == 0 || u32::from(s) > top) {
                return Err(Error::MalformedHeader(format!(
                    "automaton state {bad} outside 1..={top}"
                )));
            }
            banks.push(TaBank::from_states(
                pol,
                clauses,
                literals,
                params.states_per_action,
                states,
            ));
            let raw = r.take(clauses * 4)?;
            let w: Vec<u32> = raw.chunks_exact(4).map(LittleEndian::read_u32).collect();
            if w.contains(&0) {
                return Err(Error::MalformedHeader("zero clause weight".into()));
            }
            weights.push(ClauseWeights::from_vec(w));
        }
        let neg_w = weights.pop().unwrap();
        let pos_w = weights.pop().unwrap();
        let neg = banks.pop().unwrap();
        let pos = banks.pop().unwrap();
        if pos.literals() != neg.literals() {
            return Err(Error::MalformedHeader("polarity banks disagree in width".into()));
        }
        classes.push(ClassModel::from_parts(pos, neg, pos_w, neg_w));
    }
    r.finish()?;
    MulticlassModel::from_parts(params, dims, head, classes)
}

pub fn save_model(model: &MulticlassModel, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_model(model))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MulticlassModel> {
    decode_model(&fs::read(path)?)
}

fn pack_bits(bits: &[bool], out: &mut Vec<u8>) {
    for chunk in bits.chunks(8) {
        let mut byte = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            byte |= u8::from(b) << i;
        }
        out.push(byte);
    }
}

pub fn encode_dataset(data: &Dataset) -> Vec<u8> {
    let mut body = Vec::new();
    let (w, h, z) = data.dims();
    put_u32(&mut body, data.len());
    put_u32(&mut body, w);
    put_u32(&mut body, h);
    put_u32(&mut body, z);
    for &l in data.labels() {
        put_u32(&mut body, l);
    }
    for img in data.images() {
        pack_bits(img.bits(), &mut body);
    }
    frame(DATASET_MAGIC, DATASET_VERSION, &body)
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    let body = unframe(bytes, DATASET_MAGIC, DATASET_VERSION)?;
    let mut r = BodyReader::new(body);
    let count = r.usize()?;
    let (w, h, z) = (r.usize()?, r.usize()?, r.usize()?);
    if w == 0 || h == 0 || z == 0 {
        return Err(Error::MalformedHeader(format!("image size {w}x{h}x{z}")));
    }
    let raw = r.take(
        count
            .checked_mul(4)
            .ok_or_else(|| Error::MalformedHeader("count overflows".into()))?,
    )?;
    let labels: Vec<usize> = raw
        .chunks_exact(4)
        .map(|c| LittleEndian::read_u32(c) as usize)
        .collect();
    let n_bits = w * h * z;
    let per_image = n_bits.div_ceil(8);
    let mut images = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let raw = r.take(per_image)?;
        let bits = (0..n_bits).map(|i| raw[i / 8] >> (i % 8) & 1 == 1).collect();
        images.push(BitImage::new(w, h, z, bits)?);
    }
    r.finish()?;
    Dataset::new(w, h, z, images, labels)
}

pub fn export_dataset_binary(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_dataset(data))
}

pub fn import_dataset_binary(path: impl AsRef<Path>) -> Result<Dataset> {
    decode_dataset(&fs::read(path)?)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
