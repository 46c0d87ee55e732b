//! Sign-magnitude fixed-point arithmetic for the node's integer datapath.
//!
//! Weights are 10-bit sign-magnitude values (1 sign + 1 integer + 8 fraction
//! bits): `value = (-1)^s * m / 256` with magnitude `m` in `0..=511`, so the
//! representable range is roughly (-2, 2) in steps of 1/256. Activations
//! enter as unsigned 8-bit integers, intermediate activations are signed
//! 16-bit with a binary point (Q7.8 by default), and accumulation happens in
//! 32 bits with saturate-and-flag semantics so overflow is observable
//! instead of silent.
//!
//! All rounding here is round-to-nearest, ties-to-even, matching what the
//! quantizer does at training-export time.

use crate::error::{Error, Result};

/// Fraction bits in a weight word.
pub const WEIGHT_FRAC_BITS: u32 = 8;
/// Largest weight magnitude: 1 integer bit + 8 fraction bits.
pub const WEIGHT_MAG_MAX: u16 = 511;
/// Default fraction bits for signed 16-bit activations (Q7.8).
pub const ACT_FRAC_BITS: u32 = 8;

fn round_ties_even(x: f64) -> f64 {
    let floor = x.floor();
    let frac = x - floor;
    if frac > 0.5 {
        floor + 1.0
    } else if frac < 0.5 {
        floor
    } else if (floor / 2.0).floor() * 2.0 == floor {
        floor
    } else {
        floor + 1.0
    }
}

/// A 10-bit sign-magnitude weight: sign bit, integer bit, 8 fraction bits.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct WeightF10 {
    negative: bool,
    magnitude: u16,
}

impl WeightF10 {
    pub fn new(negative: bool, magnitude: u16) -> Result<Self> {
        if magnitude > WEIGHT_MAG_MAX {
            return Err(Error::InvalidArgument(format!(
                "weight magnitude {magnitude} exceeds {WEIGHT_MAG_MAX}"
            )));
        }
        Ok(WeightF10 {
            // Negative zero normalizes to plus zero.
            negative: negative && magnitude != 0,
            magnitude,
        })
    }

    pub fn zero() -> Self {
        WeightF10 {
            negative: false,
            magnitude: 0,
        }
    }

    /// Nearest representable weight: round-to-nearest-even on the scaled
    /// magnitude, saturating at the format's limits. NaN maps to zero.
    pub fn quantize(w: f32) -> Self {
        if w.is_nan() {
            return WeightF10::zero();
        }
        let scaled = round_ties_even((w.abs() as f64) * (1u32 << WEIGHT_FRAC_BITS) as f64);
        let magnitude = if scaled >= WEIGHT_MAG_MAX as f64 {
            WEIGHT_MAG_MAX
        } else {
            scaled as u16
        };
        WeightF10 {
            negative: w.is_sign_negative() && magnitude != 0,
            magnitude,
        }
    }

    pub fn to_f32(self) -> f32 {
        let v = self.magnitude as f32 / (1u32 << WEIGHT_FRAC_BITS) as f32;
        if self.negative {
            -v
        } else {
            v
        }
    }

    pub fn magnitude(self) -> u16 {
        self.magnitude
    }

    pub fn is_negative(self) -> bool {
        self.negative
    }

    /// Magnitude with the sign applied, as a plain integer.
    pub fn signed_magnitude(self) -> i32 {
        if self.negative {
            -(self.magnitude as i32)
        } else {
            self.magnitude as i32
        }
    }

    /// Packs into the storage word: bit 9 sign, bit 8 integer, bits 7..0
    /// fraction.
    pub fn to_word(self) -> u16 {
        ((self.negative as u16) << 9) | self.magnitude
    }

    pub fn from_word(word: u16) -> Result<Self> {
        if word & !0x3FF != 0 {
            return Err(Error::InvalidArgument(format!(
                "weight word {word:#06x} has bits set above bit 9"
            )));
        }
        WeightF10::new(word & 0x200 != 0, word & 0x1FF)
    }

    pub fn to_le_bytes(self) -> [u8; 2] {
        self.to_word().to_le_bytes()
    }

    pub fn from_le_bytes(bytes: [u8; 2]) -> Result<Self> {
        WeightF10::from_word(u16::from_le_bytes(bytes))
    }
}

/// Unsigned 8-bit activation with no fraction bits (network inputs).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ActU8 {
    pub raw: u8,
}

impl ActU8 {
    /// Nearest 8-bit code for a real-valued sample, clamped to [0, 255].
    pub fn from_real(x: f32) -> Self {
        if x.is_nan() {
            return ActU8 { raw: 0 };
        }
        let r = round_ties_even(x as f64);
        ActU8 {
            raw: r.clamp(0.0, 255.0) as u8,
        }
    }

    pub fn value(self) -> f32 {
        self.raw as f32
    }
}

/// Signed 16-bit activation with a binary point.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ActS16 {
    pub raw: i16,
    pub frac_bits: u32,
}

impl ActS16 {
    pub fn value(self) -> f32 {
        self.raw as f32 / (1u32 << self.frac_bits) as f32
    }
}

/// 32-bit accumulator that saturates and remembers it did.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Acc32 {
    pub raw: i32,
    pub frac_bits: u32,
    pub overflowed: bool,
}

impl Acc32 {
    pub fn zero(frac_bits: u32) -> Self {
        Acc32 {
            raw: 0,
            frac_bits,
            overflowed: false,
        }
    }

    /// Accumulator preloaded with a bias, scaled to the accumulator's
    /// binary point. Non-finite biases land as a flagged zero.
    pub fn from_bias(bias: f32, frac_bits: u32) -> Self {
        if !bias.is_finite() {
            return Acc32 {
                raw: 0,
                frac_bits,
                overflowed: true,
            };
        }
        let scaled = round_ties_even(bias as f64 * (1u64 << frac_bits) as f64);
        let mut acc = Acc32::zero(frac_bits);
        acc.add_raw(scaled as i64);
        acc
    }

    pub fn add_raw(&mut self, v: i64) {
        let sum = self.raw as i64 + v;
        if sum > i32::MAX as i64 {
            self.raw = i32::MAX;
            self.overflowed = true;
        } else if sum < i32::MIN as i64 {
            self.raw = i32::MIN;
            self.overflowed = true;
        } else {
            self.raw = sum as i32;
        }
    }

    /// Accumulates `act x weight`. The product carries the weight's 8
    /// fraction bits, so the accumulator must sit at that binary point.
    pub fn mac_u8(&mut self, act: ActU8, w: WeightF10) {
        debug_assert_eq!(self.frac_bits, WEIGHT_FRAC_BITS);
        self.add_raw(act.raw as i64 * w.signed_magnitude() as i64);
    }

    /// Accumulates `act x weight` for a signed activation; the accumulator's
    /// binary point is the activation's plus the weight's 8 bits.
    pub fn mac_s16(&mut self, act: ActS16, w: WeightF10) {
        debug_assert_eq!(self.frac_bits, act.frac_bits + WEIGHT_FRAC_BITS);
        self.add_raw(act.raw as i64 * w.signed_magnitude() as i64);
    }

    pub fn value(&self) -> f64 {
        self.raw as f64 / (1u64 << self.frac_bits) as f64
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Rounding {
    NearestEven,
    Truncate,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Requantized {
    pub raw: i16,
    pub saturated: bool,
}

/// Drops accumulator fraction bits down to `target_frac_bits` and narrows
/// to 16 bits, saturating. `NearestEven` rounds the discarded bits;
/// `Truncate` floors them (plain arithmetic shift).
pub fn requantize(acc: &Acc32, target_frac_bits: u32, mode: Rounding) -> Requantized {
    debug_assert!(target_frac_bits <= acc.frac_bits);
    let shift = acc.frac_bits - target_frac_bits;
    let v = acc.raw as i64;
    let shifted = match mode {
        Rounding::Truncate => v >> shift,
        Rounding::NearestEven => {
            if shift == 0 {
                v
            } else {
                let floor = v >> shift;
                let rem = v - (floor << shift);
                let half = 1i64 << (shift - 1);
                if rem > half {
                    floor + 1
                } else if rem < half {
                    floor
                } else {
                    floor + (floor & 1)
                }
            }
        }
    };
    if shifted > i16::MAX as i64 {
        Requantized {
            raw: i16::MAX,
            saturated: true,
        }
    } else if shifted < i16::MIN as i64 {
        Requantized {
            raw: i16::MIN,
            saturated: true,
        }
    } else {
        Requantized {
            raw: shifted as i16,
            saturated: false,
        }
    }
}
