//! Classical restoration: non-local means for noise, fast-marching
//! inpainting for masks.

mod fmm;
mod nlm;

pub use fmm::{fmm_inpaint, fmm_inpaint_traced, FmmParams, TraceStep};
pub use nlm::{nlm_denoise, nlm_denoise_all, NlmParams};

use rayon::prelude::*;

use crate::degrade::MaskImage;
use crate::error::{Error, Result};
use crate::media::Frame;

/// Mask of pixels that are exactly white.
pub fn infer_mask_from_white(frame: &Frame) -> MaskImage {
    MaskImage::from_fn(frame.width(), frame.height(), |x, y| frame.pixel(x, y) == [255, 255, 255])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Restoration {
    Nlm(NlmParams),
    Fmm(FmmParams),
}

impl Restoration {
    pub fn name(&self) -> &'static str {
        match self {
            Restoration::Nlm(_) => "nlm",
            Restoration::Fmm(_) => "fmm",
        }
    }

    /// Restores every frame. FMM uses `masks` when given, otherwise masks
    /// inferred from white pixels.
    pub fn apply(&self, frames: &[Frame], masks: Option<&[MaskImage]>) -> Result<Vec<Frame>> {
        match self {
            Restoration::Nlm(p) => nlm_denoise_all(frames, p),
            Restoration::Fmm(p) => {
                if let Some(m) = masks {
                    if m.len() != frames.len() {
                        return Err(Error::LengthMismatch(frames.len(), m.len()));
                    }
                }
                frames
                    .par_iter()
                    .enumerate()
                    .map(|(i, f)| match masks {
                        Some(m) => fmm_inpaint(f, &m[i], p),
                        None => fmm_inpaint(f, &infer_mask_from_white(f), p),
                    })
                    .collect()
            }
        }
    }
}
