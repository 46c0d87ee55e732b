//! In-memory activation tensors.
//!
//! Layout is always row-major height x width x channels: element `(y, x, c)`
//! lives at `(y * width + x) * channels + c`. Flat tensors are `1 x 1 x n`
//! in the same scheme.

use crate::error::{Error, Result};
use crate::netmodel::TensorShape;

#[derive(Clone, PartialEq, Debug)]
pub enum TensorData {
    Real32(Vec<f32>),
    ActU8(Vec<u8>),
    ActS16 { raw: Vec<i16>, frac_bits: u32 },
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::Real32(v) => v.len(),
            TensorData::ActU8(v) => v.len(),
            TensorData::ActS16 { raw, .. } => raw.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype_name(&self) -> &'static str {
        match self {
            TensorData::Real32(_) => "real32",
            TensorData::ActU8(_) => "act_u8",
            TensorData::ActS16 { .. } => "act_s16",
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Tensor {
    pub shape: TensorShape,
    pub data: TensorData,
}

impl Tensor {
    pub fn new(shape: TensorShape, data: TensorData) -> Result<Self> {
        let expected = shape.element_count();
        if data.len() as u64 != expected {
            return Err(Error::InvalidArgument(format!(
                "tensor data has {} elements but shape {} needs {}",
                data.len(),
                shape,
                expected
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn from_real(shape: TensorShape, values: Vec<f32>) -> Result<Self> {
        Tensor::new(shape, TensorData::Real32(values))
    }

    pub fn zeros_real(shape: TensorShape) -> Self {
        let n = shape.element_count() as usize;
        Tensor {
            shape,
            data: TensorData::Real32(vec![0.0; n]),
        }
    }

    pub fn element_count(&self) -> usize {
        self.data.len()
    }

    pub fn dtype_name(&self) -> &'static str {
        self.data.dtype_name()
    }

    pub fn index(&self, y: u32, x: u32, c: u32) -> usize {
        ((y as usize * self.shape.width as usize + x as usize) * self.shape.channels as usize)
            + c as usize
    }

    /// Borrows the raw real-valued storage; integer tensors are an error.
    pub fn real(&self) -> Result<&[f32]> {
        match &self.data {
            TensorData::Real32(v) => Ok(v),
            other => Err(Error::InvalidArgument(format!(
                "expected a real32 tensor, got {}",
                other.dtype_name()
            ))),
        }
    }

    /// Real-valued view of any dtype: integer activations dequantize by
    /// their binary point.
    pub fn to_real_values(&self) -> Vec<f32> {
        match &self.data {
            TensorData::Real32(v) => v.clone(),
            TensorData::ActU8(v) => v.iter().map(|&b| b as f32).collect(),
            TensorData::ActS16 { raw, frac_bits } => {
                let scale = (1u32 << frac_bits) as f32;
                raw.iter().map(|&r| r as f32 / scale).collect()
            }
        }
    }

    pub fn to_real(&self) -> Tensor {
        Tensor {
            shape: self.shape,
            data: TensorData::Real32(self.to_real_values()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_row_major_hwc() {
        let shape = TensorShape::new(2, 3, 4);
        let t = Tensor::zeros_real(shape);
        assert_eq!(t.index(0, 0, 0), 0);
        assert_eq!(t.index(0, 0, 3), 3);
        assert_eq!(t.index(0, 1, 0), 4);
        assert_eq!(t.index(1, 0, 0), 12);
        assert_eq!(t.index(1, 2, 3), 23);
        assert_eq!(t.element_count(), 24);
    }

    #[test]
    fn length_must_match_shape() {
        let shape = TensorShape::new(2, 2, 1);
        assert!(Tensor::from_real(shape, vec![0.0; 3]).is_err());
        assert!(Tensor::from_real(shape, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn integer_tensors_dequantize() {
        let shape = TensorShape::new(1, 1, 3);
        let u8t = Tensor::new(shape, TensorData::ActU8(vec![0, 7, 255])).unwrap();
        assert_eq!(u8t.to_real_values(), vec![0.0, 7.0, 255.0]);

        let s16 = Tensor::new(
            shape,
            TensorData::ActS16 {
                raw: vec![256, -128, 1],
                frac_bits: 8,
            },
        )
        .unwrap();
        assert_eq!(s16.to_real_values(), vec![1.0, -0.5, 0.00390625]);
        assert!(s16.real().is_err());
        assert_eq!(s16.to_real().dtype_name(), "real32");
    }
}
