//! Denoise a noisy frame with non-local means and compare quality.

use pulsebench::degrade::{add_noise, NoiseParams};
use pulsebench::quality::score;
use pulsebench::restore::{nlm_denoise, NlmParams};
use pulsebench::synth::{generate, SynthSpec};

fn main() -> pulsebench::Result<()> {
    let video = generate(&SynthSpec::default())?;
    let clean = &video.frames.frames()[0];
    let noisy = add_noise(clean, &NoiseParams::new(10.0, 42)?);

    let before = score(clean, &noisy)?;
    println!("noisy:    PSNR {:.2} dB  SSIM {:.4}", before.psnr_db, before.ssim);
    for sigma_hat in [0.0, 10.0] {
        let params = NlmParams { sigma_hat, ..Default::default() };
        let after = score(clean, &nlm_denoise(&noisy, &params)?)?;
        println!("nlm s^={sigma_hat:<4} PSNR {:.2} dB  SSIM {:.4}", after.psnr_db, after.ssim);
    }
    Ok(())
}
