//! On-disk formats for tensors and weights.
//!
//! Both files share one framing: a 4-byte ASCII magic, a little-endian u32
//! header length, a JSON header of exactly that many bytes, then a raw
//! little-endian payload.
//!
//! Tensor files (`DNNT`) carry one tensor; the header names its dtype
//! (`real32`, `act_u8`, `act_s16` with `frac_bits`) and `[h, w, c]` shape,
//! and the payload is the elements in row-major `(y, x, c)` order.
//!
//! Weight files (`DNNW`) carry any number of records; the header is an
//! index of `{layer_id, role, dtype, shape, offset, len}` entries whose
//! offsets are relative to the start of the payload. `weight_f10` records
//! store one 16-bit word per weight (sign bit 9, integer bit 8, fraction
//! bits 7..0).
//!
//! Every parse error reports the absolute byte offset it was detected at.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fxp::WeightF10;
use crate::netmodel::TensorShape;

use super::tensor::{Tensor, TensorData};
use super::weights::{WeightData, WeightRecord, WeightRole, WeightStore};

pub const TENSOR_MAGIC: &[u8; 4] = b"DNNT";
pub const WEIGHTS_MAGIC: &[u8; 4] = b"DNNW";

const FRAME_PREFIX: usize = 8;

fn fmt_err(path: &Path, offset: u64, message: impl Into<String>) -> Error {
    Error::FileFormat {
        path: path.to_path_buf(),
        offset,
        message: message.into(),
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_all(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Splits `bytes` into (header JSON, payload), validating the framing.
fn split_frame<'a>(path: &Path, bytes: &'a [u8], magic: &[u8; 4]) -> Result<(&'a [u8], &'a [u8])> {
    if bytes.len() < FRAME_PREFIX {
        return Err(fmt_err(
            path,
            bytes.len() as u64,
            format!("file ends after {} bytes, before the header", bytes.len()),
        ));
    }
    if &bytes[..4] != magic {
        return Err(fmt_err(
            path,
            0,
            format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&bytes[..4]),
                String::from_utf8_lossy(magic)
            ),
        ));
    }
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let Some(payload) = bytes.get(FRAME_PREFIX + header_len..) else {
        return Err(fmt_err(
            path,
            bytes.len() as u64,
            format!(
                "header claims {header_len} bytes but the file ends at byte {}",
                bytes.len()
            ),
        ));
    };
    Ok((&bytes[FRAME_PREFIX..FRAME_PREFIX + header_len], payload))
}

fn frame(magic: &[u8; 4], header: &[u8], payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(FRAME_PREFIX + header.len() + payload.len());
    out.extend_from_slice(magic);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header);
    out.extend_from_slice(payload);
    out
}

// --- tensors ------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorHeader {
    dtype: String,
    shape: [u32; 3],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    frac_bits: Option<u32>,
}

fn element_size(dtype: &str) -> Option<usize> {
    match dtype {
        "real32" => Some(4),
        "act_u8" => Some(1),
        "act_s16" => Some(2),
        _ => None,
    }
}

pub fn tensor_to_bytes(tensor: &Tensor) -> Vec<u8> {
    let header = TensorHeader {
        dtype: tensor.dtype_name().to_string(),
        shape: [
            tensor.shape.height,
            tensor.shape.width,
            tensor.shape.channels,
        ],
        frac_bits: match &tensor.data {
            TensorData::ActS16 { frac_bits, .. } => Some(*frac_bits),
            _ => None,
        },
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut payload = Vec::new();
    match &tensor.data {
        TensorData::Real32(v) => {
            for x in v {
                payload.extend_from_slice(&x.to_le_bytes());
            }
        }
        TensorData::ActU8(v) => payload.extend_from_slice(v),
        TensorData::ActS16 { raw, .. } => {
            for x in raw {
                payload.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    frame(TENSOR_MAGIC, &header, &payload)
}

pub fn tensor_from_bytes(path: &Path, bytes: &[u8]) -> Result<Tensor> {
    let (header_bytes, payload) = split_frame(path, bytes, TENSOR_MAGIC)?;
    let header: TensorHeader = serde_json::from_slice(header_bytes)
        .map_err(|e| fmt_err(path, FRAME_PREFIX as u64, format!("bad tensor header: {e}")))?;
    let header_end = (FRAME_PREFIX + header_bytes.len()) as u64;
    let [h, w, c] = header.shape;
    if h == 0 || w == 0 || c == 0 {
        return Err(fmt_err(
            path,
            FRAME_PREFIX as u64,
            format!("tensor shape {h}x{w}x{c} has a zero dimension"),
        ));
    }
    let shape = TensorShape::new(h, w, c);
    let count = shape.element_count() as usize;
    let elem = element_size(&header.dtype).ok_or_else(|| {
        fmt_err(
            path,
            FRAME_PREFIX as u64,
            format!("unknown tensor dtype {:?}", header.dtype),
        )
    })?;
    let expected = count * elem;
    if payload.len() != expected {
        return Err(fmt_err(
            path,
            header_end + payload.len() as u64,
            format!(
                "payload holds {} bytes but {h}x{w}x{c} {} needs {expected}",
                payload.len(),
                header.dtype
            ),
        ));
    }
    let data = match header.dtype.as_str() {
        "real32" => TensorData::Real32(
            payload
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect(),
        ),
        "act_u8" => TensorData::ActU8(payload.to_vec()),
        "act_s16" => TensorData::ActS16 {
            raw: payload
                .chunks_exact(2)
                .map(|b| i16::from_le_bytes(b.try_into().unwrap()))
                .collect(),
            frac_bits: header.frac_bits.ok_or_else(|| {
                fmt_err(
                    path,
                    FRAME_PREFIX as u64,
                    "act_s16 tensors must declare frac_bits",
                )
            })?,
        },
        _ => unreachable!("dtype validated above"),
    };
    Tensor::new(shape, data)
}

pub fn write_tensor(path: &Path, tensor: &Tensor) -> Result<()> {
    write_all(path, &tensor_to_bytes(tensor))
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    let bytes = read_all(path)?;
    tensor_from_bytes(path, &bytes)
}

// --- weights --------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsHeader {
    records: Vec<RecordHeader>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordHeader {
    layer_id: String,
    role: String,
    dtype: String,
    shape: [u32; 3],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    frac_bits: Option<u32>,
    offset: u64,
    len: u64,
}

pub fn weights_to_bytes(store: &WeightStore) -> Vec<u8> {
    let mut payload = Vec::new();
    let mut records = Vec::new();
    for record in &store.records {
        let offset = payload.len() as u64;
        match &record.data {
            WeightData::Real32(v) => {
                for x in v {
                    payload.extend_from_slice(&x.to_le_bytes());
                }
            }
            WeightData::WeightF10(v) => {
                for w in v {
                    payload.extend_from_slice(&w.to_le_bytes());
                }
            }
        }
        records.push(RecordHeader {
            layer_id: record.layer_id.clone(),
            role: record.role.name().to_string(),
            dtype: record.data.dtype_name().to_string(),
            shape: [
                record.shape.height,
                record.shape.width,
                record.shape.channels,
            ],
            frac_bits: None,
            offset,
            len: payload.len() as u64 - offset,
        });
    }
    let header = serde_json::to_vec(&WeightsHeader { records }).expect("header serializes");
    frame(WEIGHTS_MAGIC, &header, &payload)
}

pub fn weights_from_bytes(path: &Path, bytes: &[u8]) -> Result<WeightStore> {
    let (header_bytes, payload) = split_frame(path, bytes, WEIGHTS_MAGIC)?;
    let header: WeightsHeader = serde_json::from_slice(header_bytes)
        .map_err(|e| fmt_err(path, FRAME_PREFIX as u64, format!("bad weights header: {e}")))?;
    let payload_start = (FRAME_PREFIX + header_bytes.len()) as u64;

    let mut store = WeightStore::default();
    for rec in &header.records {
        let role = match rec.role.as_str() {
            "kernel" => WeightRole::Kernel,
            "bias" => WeightRole::Bias,
            other => {
                return Err(fmt_err(
                    path,
                    FRAME_PREFIX as u64,
                    format!("record {}: unknown role {other:?}", rec.layer_id),
                ))
            }
        };
        let end = rec.offset.checked_add(rec.len).filter(|&e| e <= payload.len() as u64);
        let Some(end) = end else {
            return Err(fmt_err(
                path,
                payload_start + payload.len() as u64,
                format!(
                    "record {}/{} spans bytes {}..{} of a {}-byte payload",
                    rec.layer_id,
                    rec.role,
                    rec.offset,
                    rec.offset.saturating_add(rec.len),
                    payload.len()
                ),
            ));
        };
        let slice = &payload[rec.offset as usize..end as usize];
        let [h, w, c] = rec.shape;
        let shape = TensorShape::new(h, w, c);
        let count = shape.element_count();
        let data = match rec.dtype.as_str() {
            "real32" => {
                if rec.len != count * 4 {
                    return Err(fmt_err(
                        path,
                        payload_start + rec.offset,
                        format!(
                            "record {}/{}: {} bytes for shape {h}x{w}x{c} real32 (needs {})",
                            rec.layer_id,
                            rec.role,
                            rec.len,
                            count * 4
                        ),
                    ));
                }
                WeightData::Real32(
                    slice
                        .chunks_exact(4)
                        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                        .collect(),
                )
            }
            "weight_f10" => {
                if rec.len != count * 2 {
                    return Err(fmt_err(
                        path,
                        payload_start + rec.offset,
                        format!(
                            "record {}/{}: {} bytes for shape {h}x{w}x{c} weight_f10 (needs {})",
                            rec.layer_id,
                            rec.role,
                            rec.len,
                            count * 2
                        ),
                    ));
                }
                let mut words = Vec::with_capacity(count as usize);
                for (i, b) in slice.chunks_exact(2).enumerate() {
                    let word = WeightF10::from_le_bytes(b.try_into().unwrap()).map_err(|e| {
                        fmt_err(
                            path,
                            payload_start + rec.offset + 2 * i as u64,
                            format!("record {}/{}: {e}", rec.layer_id, rec.role),
                        )
                    })?;
                    words.push(word);
                }
                WeightData::WeightF10(words)
            }
            other => {
                return Err(fmt_err(
                    path,
                    FRAME_PREFIX as u64,
                    format!("record {}: unknown weight dtype {other:?}", rec.layer_id),
                ))
            }
        };
        store
            .push(WeightRecord {
                layer_id: rec.layer_id.clone(),
                role,
                shape,
                data,
            })
            .map_err(|e| fmt_err(path, FRAME_PREFIX as u64, e.to_string()))?;
    }
    Ok(store)
}

pub fn write_weights(path: &Path, store: &WeightStore) -> Result<()> {
    write_all(path, &weights_to_bytes(store))
}

pub fn read_weights(path: &Path) -> Result<WeightStore> {
    let bytes = read_all(path)?;
    weights_from_bytes(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test.dnnt")
    }

    #[test]
    fn tensor_round_trip_all_dtypes() {
        let shape = TensorShape::new(2, 2, 2);
        let tensors = [
            Tensor::from_real(shape, vec![0.5, -1.25, 3e7, f32::MIN_POSITIVE, 0.0, -0.0, 1.0, 2.0])
                .unwrap(),
            Tensor::new(shape, TensorData::ActU8(vec![0, 1, 2, 3, 4, 5, 254, 255])).unwrap(),
            Tensor::new(
                shape,
                TensorData::ActS16 {
                    raw: vec![0, -1, 1, i16::MIN, i16::MAX, 256, -256, 7],
                    frac_bits: 8,
                },
            )
            .unwrap(),
        ];
        for t in tensors {
            let bytes = tensor_to_bytes(&t);
            let back = tensor_from_bytes(p(), &bytes).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn tensor_errors_carry_byte_offsets() {
        let t = Tensor::from_real(TensorShape::new(1, 1, 4), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let good = tensor_to_bytes(&t);

        let err = tensor_from_bytes(p(), &good[..3]).unwrap_err();
        assert!(err.to_string().contains("(byte 3)"), "{err}");

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        let err = tensor_from_bytes(p(), &bad_magic).unwrap_err();
        assert!(err.to_string().contains("(byte 0)"), "{err}");

        let truncated = &good[..good.len() - 4];
        let err = tensor_from_bytes(p(), truncated).unwrap_err();
        let expect = format!("(byte {})", truncated.len());
        assert!(err.to_string().contains(&expect), "{err}");

        let mut short_header = good.clone();
        short_header[4..8].copy_from_slice(&u32::MAX.to_le_bytes());
        let err = tensor_from_bytes(p(), &short_header).unwrap_err();
        assert!(err.to_string().contains("ends at byte"), "{err}");
    }

    #[test]
    fn tensor_header_validation() {
        let make = |header: &str, payload: &[u8]| frame(TENSOR_MAGIC, header.as_bytes(), payload);

        let err = tensor_from_bytes(
            p(),
            &make(r#"{"dtype": "real64", "shape": [1, 1, 1]}"#, &[0; 8]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("real64"), "{err}");

        let err = tensor_from_bytes(
            p(),
            &make(r#"{"dtype": "real32", "shape": [0, 1, 1]}"#, &[]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("zero dimension"), "{err}");

        let err = tensor_from_bytes(
            p(),
            &make(r#"{"dtype": "act_s16", "shape": [1, 1, 1]}"#, &[0, 0]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("frac_bits"), "{err}");

        let err = tensor_from_bytes(
            p(),
            &make(r#"{"dtype": "real32", "shape": [1, 1, 1], "extra": 1}"#, &[0; 4]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
    }

    #[test]
    fn weights_round_trip_mixed_dtypes() {
        let mut store = WeightStore::default();
        store
            .push(WeightRecord {
                layer_id: "c1".into(),
                role: WeightRole::Kernel,
                shape: TensorShape::new(1, 1, 4),
                data: WeightData::Real32(vec![0.25, -0.5, 1.5, 0.0]),
            })
            .unwrap();
        store
            .push(WeightRecord {
                layer_id: "c1".into(),
                role: WeightRole::Bias,
                shape: TensorShape::new(1, 1, 2),
                data: WeightData::WeightF10(vec![
                    WeightF10::quantize(0.5),
                    WeightF10::quantize(-1.25),
                ]),
            })
            .unwrap();
        let bytes = weights_to_bytes(&store);
        let back = weights_from_bytes(p(), &bytes).unwrap();
        assert_eq!(back, store);
    }

    #[test]
    fn weights_reject_bad_spans_and_duplicates() {
        let header = r#"{"records": [
            {"layer_id": "a", "role": "kernel", "dtype": "real32",
             "shape": [1, 1, 2], "offset": 0, "len": 8},
            {"layer_id": "a", "role": "kernel", "dtype": "real32",
             "shape": [1, 1, 2], "offset": 0, "len": 8}
        ]}"#;
        let bytes = frame(WEIGHTS_MAGIC, header.as_bytes(), &[0; 8]);
        let err = weights_from_bytes(p(), &bytes).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");

        let header = r#"{"records": [
            {"layer_id": "a", "role": "kernel", "dtype": "real32",
             "shape": [1, 1, 2], "offset": 4, "len": 8}
        ]}"#;
        let bytes = frame(WEIGHTS_MAGIC, header.as_bytes(), &[0; 8]);
        let err = weights_from_bytes(p(), &bytes).unwrap_err();
        assert!(err.to_string().contains("spans bytes 4..12"), "{err}");

        let header = r#"{"records": [
            {"layer_id": "a", "role": "gamma", "dtype": "real32",
             "shape": [1, 1, 1], "offset": 0, "len": 4}
        ]}"#;
        let bytes = frame(WEIGHTS_MAGIC, header.as_bytes(), &[0; 4]);
        let err = weights_from_bytes(p(), &bytes).unwrap_err();
        assert!(err.to_string().contains("gamma"), "{err}");
    }

    #[test]
    fn weight_f10_words_are_validated() {
        let header = r#"{"records": [
            {"layer_id": "a", "role": "kernel", "dtype": "weight_f10",
             "shape": [1, 1, 1], "offset": 0, "len": 2}
        ]}"#;
        // 0x0800 has a bit above bit 9.
        let bytes = frame(WEIGHTS_MAGIC, header.as_bytes(), &0x0800u16.to_le_bytes());
        let err = weights_from_bytes(p(), &bytes).unwrap_err();
        assert!(err.to_string().contains("bit 9"), "{err}");
    }

    #[test]
    fn files_round_trip_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let tpath = dir.path().join("x.dnnt");
        let t = Tensor::from_real(TensorShape::new(1, 2, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        write_tensor(&tpath, &t).unwrap();
        assert_eq!(read_tensor(&tpath).unwrap(), t);

        let missing = read_tensor(&dir.path().join("nope.dnnt"));
        assert!(missing.is_err());
    }
}
