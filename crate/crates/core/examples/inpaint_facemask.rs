//! Fast-marching inpainting of a facemask occlusion.

use pulsebench::degrade::Degradation;
use pulsebench::quality::ssim;
use pulsebench::restore::{fmm_inpaint_traced, FmmParams};
use pulsebench::synth::{generate, SynthSpec};

fn main() -> pulsebench::Result<()> {
    let video = generate(&SynthSpec::default())?;
    let clean = &video.frames.frames()[0];
    let (masked, mask) = Degradation::Facemask.apply(clean, 0, Some(&video.landmarks))?;
    let mask = mask.expect("facemask returns its mask");

    let (filled, order) = fmm_inpaint_traced(&masked, &mask, &FmmParams::default())?;
    println!("{} pixels inpainted, arrival time up to {:.2}", order.len(), order.last().map_or(0.0, |s| s.t));
    println!("SSIM masked {:.4} -> inpainted {:.4}", ssim(clean, &masked)?, ssim(clean, &filled)?);
    Ok(())
}
