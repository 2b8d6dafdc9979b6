//! Landmark-driven face box and 72x72 analysis crop.

use pulsebench::media::{Frame, Point};
use pulsebench::roi::{adjust_box, crop_resize, RawBox, ANALYSIS_SIDE, DEFAULT_MARGIN};
use pulsebench::synth::canonical_landmarks;

fn main() -> pulsebench::Result<()> {
    // a 200x160 frame with a small face drawn off-centre
    let face = canonical_landmarks(100).map(|p| Point::new(p.x * 0.6 + 90.0, p.y * 0.6 + 40.0));
    let frame = Frame::from_fn(200, 160, |x, y| [(x % 256) as u8, (y % 256) as u8, 90]);

    let detector = RawBox { x0: 10.0, y0: 10.0, w: 50.0, h: 50.0 };
    let bx = adjust_box(detector, Some(&face), DEFAULT_MARGIN, frame.width(), frame.height())?;
    println!("face box: x0 {:.2} y0 {:.2} side {:.2}", bx.x0, bx.y0, bx.side);

    let crop = crop_resize(&frame, &bx, ANALYSIS_SIDE)?;
    println!("crop {}x{}, corner pixel {:?}", crop.width(), crop.height(), crop.pixel(0, 0));

    let fallback = adjust_box(detector, None, DEFAULT_MARGIN, frame.width(), frame.height())?;
    println!("without landmarks the detector box is used: side {:.2}", fallback.side);
    Ok(())
}
