//! Property checks shared by the invariant tests and the acceptance run.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError, TestRunner};

use pulsebench::degrade::{apply_mask, eyemask_geometry, facemask_geometry, gaussian_kernel, BlurParams, MaskImage, MaskShape};
use pulsebench::media::{Frame, LandmarkSet, Point};
use pulsebench::restore::{fmm_inpaint, fmm_inpaint_traced, nlm_denoise, FmmParams, NlmParams};
use pulsebench::rppg::{chrom, pbv, pos, Method, PbvVector, RgbTrace};
use pulsebench::synth::canonical_landmarks;
use pulsebench::Error;

pub fn frame(min_side: usize, max_side: usize) -> impl Strategy<Value = Frame> {
    (min_side..=max_side, min_side..=max_side).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<u8>(), w * h * 3).prop_map(move |d| Frame::new(w, h, d).unwrap())
    })
}

pub fn mask_for(w: usize, h: usize) -> impl Strategy<Value = MaskImage> {
    proptest::collection::vec(prop::bool::weighted(0.3), w * h)
        .prop_map(move |bits| MaskImage::from_fn(w, h, |x, y| bits[y * w + x]))
}

/// Canonical face scaled by `s` and shifted by `(dx, dy)`.
pub fn face(s: f64, dx: f64, dy: f64) -> LandmarkSet {
    canonical_landmarks(100).map(|p| Point::new(p.x * s + dx, p.y * s + dy))
}

pub fn trace(len: impl Into<proptest::collection::SizeRange>) -> impl Strategy<Value = Vec<[f64; 3]>> {
    proptest::collection::vec(prop::array::uniform3(40.0..200.0f64), len)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn channel_range(f: &Frame) -> [(u8, u8); 3] {
    let mut r = [(255u8, 0u8); 3];
    for px in f.as_bytes().chunks(3) {
        for c in 0..3 {
            r[c] = (r[c].0.min(px[c]), r[c].1.max(px[c]));
        }
    }
    r
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let config = Config {
        cases,
        failure_persistence: None,
        rng_seed: RngSeed::Fixed(0x5eed),
        ..Config::default()
    };
    TestRunner::new(config).run(&strategy, test).map_err(|e| e.to_string())
}

pub fn kernel_normalized_symmetric(cases: u32) -> Result<(), String> {
    run(cases, (0usize..10, 0.3..6.0f64), |(half, sigma)| {
        let k = gaussian_kernel(&BlurParams::new(sigma, 2 * half + 1).unwrap());
        let sum: f64 = k.weights().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        let r = half as isize;
        for dy in -r..=r {
            for dx in -r..=r {
                prop_assert_eq!(k.at(dx, dy), k.at(-dx, dy));
                prop_assert_eq!(k.at(dx, dy), k.at(dx, -dy));
            }
        }
        Ok(())
    })
}

pub fn mask_whitens_inside_and_is_idempotent(cases: u32) -> Result<(), String> {
    let strategy = (frame(20, 40), 0.1..0.35f64, 0.0..5.0f64, 0.0..5.0f64, any::<bool>());
    run(cases, strategy, |(f, s, dx, dy, eyes)| {
        let lm = face(s, dx, dy);
        let shape = if eyes {
            MaskShape::Ellipse(eyemask_geometry(&lm).unwrap())
        } else {
            MaskShape::Polygon(facemask_geometry(&lm).unwrap())
        };
        let (once, mask) = apply_mask(&f, &shape);
        for y in 0..f.height() {
            for x in 0..f.width() {
                if mask.get(x, y) {
                    prop_assert_eq!(once.pixel(x, y), [255, 255, 255]);
                } else {
                    prop_assert_eq!(once.pixel(x, y), f.pixel(x, y));
                }
            }
        }
        let (twice, mask2) = apply_mask(&once, &shape);
        prop_assert_eq!(twice, once);
        prop_assert_eq!(mask2, mask);
        Ok(())
    })
}

pub fn nlm_convex_combination(cases: u32) -> Result<(), String> {
    let strategy = (frame(1, 12), 1.0..40.0f64, 1usize..3, 0usize..3);
    run(cases, strategy, |(f, h, p, extra)| {
        let params = NlmParams { h, patch_radius: p, search_radius: p + extra, sigma_hat: 0.0 };
        let out = nlm_denoise(&f, &params).unwrap();
        prop_assert_eq!((out.width(), out.height()), (f.width(), f.height()));
        let (ri, ro) = (channel_range(&f), channel_range(&out));
        for ch in 0..3 {
            prop_assert!(ro[ch].0 >= ri[ch].0 && ro[ch].1 <= ri[ch].1);
        }
        prop_assert_eq!(nlm_denoise(&f, &params).unwrap(), out);
        Ok(())
    })
}

pub fn fmm_preserves_unmasked_in_order(cases: u32) -> Result<(), String> {
    let strategy = frame(3, 14).prop_flat_map(|f| {
        let (w, h) = (f.width(), f.height());
        (Just(f), mask_for(w, h), 1.0..6.0f64)
    });
    run(cases, strategy, |(f, mask, eps)| {
        prop_assume!(mask.count() < mask.width() * mask.height());
        let params = FmmParams::new(eps).unwrap();
        let (out, steps) = fmm_inpaint_traced(&f, &mask, &params).unwrap();
        prop_assert_eq!((out.width(), out.height()), (f.width(), f.height()));
        for y in 0..f.height() {
            for x in 0..f.width() {
                if !mask.get(x, y) {
                    prop_assert_eq!(out.pixel(x, y), f.pixel(x, y));
                }
            }
        }
        prop_assert_eq!(steps.len(), mask.count());
        prop_assert!(steps.windows(2).all(|w| w[0].t <= w[1].t));
        prop_assert_eq!(fmm_inpaint(&f, &mask, &params).unwrap(), out);
        Ok(())
    })
}

pub fn ratio_transforms_scale_invariant(cases: u32) -> Result<(), String> {
    run(cases, (trace(64), 0.5..1.25f64), |(t, k)| {
        let a = RgbTrace::new(t.clone(), 20.0).unwrap();
        let b = RgbTrace::new(t.iter().map(|s| s.map(|v| v * k)).collect(), 20.0).unwrap();
        let sig = PbvVector::default();
        for (x, y) in [
            (chrom(&a).unwrap(), chrom(&b).unwrap()),
            (pos(&a).unwrap(), pos(&b).unwrap()),
            (pbv(&a, &sig).unwrap(), pbv(&b, &sig).unwrap()),
        ] {
            prop_assert!(max_abs_diff(&x.samples, &y.samples) <= 1e-9);
        }
        Ok(())
    })
}

/// Constant traces give all-zero output, or the typed error the method
/// documents for that case (ICA: constant channel, PBV: singular Gram).
pub fn constant_trace_zero_output(cases: u32) -> Result<(), String> {
    run(cases, (prop::array::uniform3(1.0..255.0f64), 32usize..80), |(rgb, len)| {
        let tr = RgbTrace::new(vec![rgb; len], 20.0).unwrap();
        for m in Method::all() {
            match (m, m.apply(&tr)) {
                (_, Ok(out)) => prop_assert!(out.samples.iter().all(|&v| v == 0.0), "{} not zero", m.name()),
                (Method::Ica(_), Err(Error::ConstantChannel(_))) => {}
                (Method::Pbv(_), Err(Error::SingularGram)) => {}
                (_, Err(e)) => prop_assert!(false, "{} failed with {e}", m.name()),
            }
        }
        Ok(())
    })
}
