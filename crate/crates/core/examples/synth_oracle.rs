//! Generate a synthetic video and check the ground truth it carries.
//!
//! ```bash
//! cargo run --example synth_oracle -- /tmp/synth72
//! ```

use pulsebench::synth::{generate, SynthSpec};

fn main() -> pulsebench::Result<()> {
    let spec = SynthSpec { pulse_bpm: 72.0, seed: 1, ..Default::default() };
    let video = generate(&spec)?;
    println!(
        "{}: {} frames of {}x{} at {} fps, pulse {} Hz",
        video.frames.source_id(),
        video.frames.len(),
        spec.side,
        spec.side,
        video.frames.fps(),
        spec.pulse_hz()
    );
    let g: Vec<f64> = video.frames.frames().iter().map(|f| f.plane(1).iter().sum::<f64>() / f.pixel_count() as f64).collect();
    let (lo, hi) = g.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    println!("mean green swings between {lo:.3} and {hi:.3}");

    if let Some(dir) = std::env::args().nth(1) {
        video.save(std::path::Path::new(&dir))?;
        println!("saved to {dir}");
    }
    Ok(())
}
