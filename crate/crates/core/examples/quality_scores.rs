//! Image and heart-rate error metrics.

use pulsebench::media::Frame;
use pulsebench::quality::{hr_errors, psnr, ssim};

fn main() -> pulsebench::Result<()> {
    let a = Frame::filled(16, 16, [100, 50, 200]);
    let b = Frame::filled(16, 16, [101, 49, 201]);
    println!("unit difference: PSNR {:.4} dB", psnr(&a, &b)?);
    println!("identical:       PSNR {} dB, SSIM {}", psnr(&a, &a)?, ssim(&a, &a)?);

    let e = hr_errors(&[72.0, 80.0], &[70.0, 84.0])?;
    println!("MAE {:.4}  RMSE {:.4}  MAPE {:.4}%  (n={})", e.mae, e.rmse, e.mape, e.n);
    Ok(())
}
