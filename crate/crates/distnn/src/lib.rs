//! Design-space exploration for splitting neural-network inference between
//! an ultra-low-power sensing node and a resource-rich hub.
//!
//! The crate answers three questions about a chain-structured network:
//!
//! * **Where to cut** — [`costmodel`] scores every layer by data volume,
//!   MAC count, and their product (the figure of merit); the minimum marks
//!   the cheapest boundary to transmit.
//! * **What the node pays** — [`hwmodel`] turns MAC-block counts into energy,
//!   power, and latency for a parallel or serial MAC array; [`commmodel`]
//!   prices the radio link and checks whether distribution actually saves
//!   energy.
//! * **What the cut costs in accuracy** — [`infer`] executes the network in
//!   full precision or with the 10-bit sign-magnitude weight format from
//!   [`fxp`], and compares outputs with SSIM/PSNR.
//!
//! Networks are described by a strict JSON document format ([`netmodel`]);
//! tensors and weights travel in small binary containers ([`infer::files`]).

pub mod commmodel;
pub mod costmodel;
pub mod error;
pub mod fxp;
pub mod hwmodel;
pub mod infer;
pub mod netmodel;
pub mod report;

pub use error::{Error, ErrorClass, Result};
