//! Apply each of the four degradations to one synthetic frame.
//!
//! ```bash
//! cargo run --example degrade_gallery -- /tmp/gallery
//! ```

use std::path::PathBuf;

use pulsebench::degrade::{BlurParams, Degradation, NoiseParams};
use pulsebench::media::encode_ppm;
use pulsebench::quality::score;
use pulsebench::synth::{generate, SynthSpec};

fn main() -> pulsebench::Result<()> {
    let video = generate(&SynthSpec { side: 96, ..Default::default() })?;
    let frame = &video.frames.frames()[0];
    let out = std::env::args().nth(1).map(PathBuf::from);

    let kinds = [
        Degradation::Blur(BlurParams::with_kernel(15)?),
        Degradation::Noise(NoiseParams::new(10.0, 0)?),
        Degradation::Eyemask,
        Degradation::Facemask,
    ];
    for d in kinds {
        let (degraded, mask) = d.apply(frame, 0, Some(&video.landmarks))?;
        let q = score(frame, &degraded)?;
        let masked = mask.map_or(0, |m| m.count());
        println!("{:>8}: PSNR {:6.2} dB  SSIM {:.4}  masked px {masked}", d.name(), q.psnr_db, q.ssim);
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir).map_err(|e| pulsebench::Error::io(dir, e))?;
            let p = dir.join(format!("{}.ppm", d.name()));
            std::fs::write(&p, encode_ppm(&degraded)).map_err(|e| pulsebench::Error::io(&p, e))?;
        }
    }
    Ok(())
}
