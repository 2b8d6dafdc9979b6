//! Batch runner: every video goes through segment selection, ROI crop,
//! degradation, optional restoration, trace extraction, each configured
//! transform and spectral HR estimation, and is compared with its reference.

mod config;
mod report;

pub use config::{PipelineConfig, Protocol, ResampleMode, SigmaHat};
pub use report::{
    aggregate, emit_report, parse_per_video, per_video_csv, AggregateRow, QualityCell, QualityStage,
    RunReport, VideoQuality, VideoRow,
};

use std::path::Path;

use rayon::prelude::*;

use crate::degrade::{Degradation, MaskImage, NoiseParams};
use crate::error::{Error, Result};
use crate::media::{
    load_frame_sequence, load_landmarks, load_reference, Frame, FrameSequence, LandmarkSet, ReferenceKind,
    ReferenceSignal,
};
use crate::quality::{mean_score, QualityScore};
use crate::roi::{adjust_box, crop_resize, RawBox, ANALYSIS_SIDE};
use crate::rppg::{extract_trace, Method, RgbTrace};
use crate::seed;
use crate::signal::{butterworth_bandpass, estimate_hr, fourier_resample, segment_range, standardize};
use crate::synth::{self, LANDMARKS_FILE, REFERENCE_FILE, VIDEO_META_FILE};

/// One video ready for processing.
#[derive(Clone, Debug)]
pub struct VideoInput {
    pub id: String,
    pub frames: FrameSequence,
    /// One set per frame, or a single set used for every frame.
    pub landmarks: Vec<LandmarkSet>,
    pub reference: ReferenceSignal,
}

/// Reads the frame rate from a `video.ini` file (`fps = <Hz>`).
pub fn read_video_fps(dir: &Path) -> Result<f64> {
    let path = dir.join(VIDEO_META_FILE);
    let ini = ini::Ini::load_from_file(&path).map_err(|e| match e {
        ini::Error::Io(io) => Error::io(&path, io),
        ini::Error::Parse(p) => Error::Config(format!("{}: {p}", path.display())),
    })?;
    let fps = ini
        .general_section()
        .get("fps")
        .ok_or_else(|| Error::Config(format!("{} has no fps key", path.display())))?;
    fps.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{}: fps {fps:?} is not a number", path.display())))
}

/// Loads frames, `landmarks.csv`, `reference.csv` and the frame rate from
/// `video.ini` (unless `fps` is given).
pub fn load_video_dir(dir: &Path, fps: Option<f64>) -> Result<VideoInput> {
    let fps = match fps {
        Some(f) => f,
        None => read_video_fps(dir)?,
    };
    let frames = load_frame_sequence(dir, fps)?;
    let landmarks = load_landmarks(&dir.join(LANDMARKS_FILE))?;
    let reference = load_reference(&dir.join(REFERENCE_FILE))?;
    Ok(VideoInput {
        id: frames.source_id().to_string(),
        frames,
        landmarks,
        reference,
    })
}

impl VideoInput {
    pub fn from_synth(video: synth::SynthVideo) -> Self {
        Self {
            id: video.frames.source_id().to_string(),
            landmarks: vec![video.landmarks],
            frames: video.frames,
            reference: video.reference,
        }
    }

    fn landmarks_at(&self, i: usize) -> Result<&LandmarkSet> {
        match self.landmarks.len() {
            1 => Ok(&self.landmarks[0]),
            n if n == self.frames.len() => Ok(&self.landmarks[i]),
            n => Err(Error::LengthMismatch(self.frames.len(), n)),
        }
    }
}

/// Result of the per-video image stages.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub clean: Vec<Frame>,
    pub degraded: Vec<Frame>,
    pub masks: Option<Vec<MaskImage>>,
    pub restored: Option<Vec<Frame>>,
    pub fps: f64,
}

impl Prepared {
    pub fn final_frames(&self) -> &[Frame] {
        self.restored.as_deref().unwrap_or(&self.degraded)
    }
}

fn video_degradation(d: Degradation, video_index: usize) -> Degradation {
    match d {
        Degradation::Noise(p) => Degradation::Noise(
            NoiseParams::new(p.sigma_n(), seed::mix(p.seed, video_index as u64)).expect("validated sigma"),
        ),
        d => d,
    }
}

/// Segment, ROI crop, degrade and restore one video.
pub fn prepare(video: &VideoInput, video_index: usize, config: &PipelineConfig) -> Result<Prepared> {
    let p = &config.protocol;
    let range = segment_range(video.frames.len(), video.frames.fps(), p.segment_seconds)?;
    let mut indices: Vec<usize> = range.collect();
    let mut fps = video.frames.fps();
    if p.resample == ResampleMode::Frames {
        let n = (indices.len() as f64 * p.target_fps / fps).round() as usize;
        let ratio = fps / p.target_fps;
        indices = (0..n)
            .map(|k| indices[((k as f64 * ratio).round() as usize).min(indices.len() - 1)])
            .collect();
        fps = p.target_fps;
    }
    let degradation = config.degradation.map(|d| video_degradation(d, video_index));

    let per_frame = indices
        .par_iter()
        .enumerate()
        .map(|(k, &i)| {
            let frame = &video.frames.frames()[i];
            let lm = video.landmarks_at(i)?;
            let (w, h) = (frame.width(), frame.height());
            let bx = adjust_box(RawBox::full_frame(w, h), Some(lm), p.roi_margin, w, h)?;
            let roi = crop_resize(frame, &bx, ANALYSIS_SIDE)?;
            let roi_lm = lm.map(|q| bx.to_crop(q, ANALYSIS_SIDE));
            let (deg, mask) = match degradation {
                Some(d) => d.apply(&roi, k, Some(&roi_lm))?,
                None => (roi.clone(), None),
            };
            Ok((roi, deg, mask))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut clean = Vec::with_capacity(per_frame.len());
    let mut degraded = Vec::with_capacity(per_frame.len());
    let mut masks = Vec::new();
    for (c, d, m) in per_frame {
        clean.push(c);
        degraded.push(d);
        masks.extend(m);
    }
    let masks = (masks.len() == degraded.len()).then_some(masks);
    let restored = match config.effective_restoration() {
        Some(r) => Some(r.apply(&degraded, masks.as_deref())?),
        None => None,
    };
    Ok(Prepared { clean, degraded, masks, restored, fps })
}

/// Mean quality of `test` against `clean` over every `stride`-th frame.
pub fn sequence_quality(clean: &[Frame], test: &[Frame], stride: usize) -> Result<QualityScore> {
    let pick = |v: &[Frame]| v.iter().step_by(stride).cloned().collect::<Vec<_>>();
    mean_score(&pick(clean), &pick(test))
}

/// Trace of the frames the transforms see, at the target rate.
pub fn analysis_trace(prep: &Prepared, config: &PipelineConfig) -> Result<RgbTrace> {
    let masks = match (&prep.restored, &prep.masks) {
        (None, Some(m)) if config.protocol.mask_exclude => Some(m.as_slice()),
        _ => None,
    };
    let trace = extract_trace(prep.final_frames(), prep.fps, masks)?;
    if (trace.fps() - config.protocol.target_fps).abs() > 0.0 {
        trace.resample(config.protocol.target_fps)
    } else {
        Ok(trace)
    }
}

/// Band-passes a pulse signal and picks its spectral HR.
pub fn pulse_hr(samples: &[f64], fps: f64, protocol: &Protocol) -> Result<f64> {
    let f = butterworth_bandpass(samples, fps, protocol.hr_low, protocol.hr_high)?;
    Ok(estimate_hr(&f, fps, protocol.hr_low, protocol.hr_high)?.bpm)
}

/// Ground-truth HR over the analysed segment.
pub fn reference_hr(video: &VideoInput, protocol: &Protocol) -> Result<f64> {
    let r = &video.reference;
    let fps = video.frames.fps();
    let seg = segment_range(video.frames.len(), fps, protocol.segment_seconds)?;
    let start = (seg.start as f64 / fps * r.sample_rate).round() as usize;
    let len = (protocol.segment_seconds * r.sample_rate).round() as usize;
    if start + len > r.samples.len() || len < 2 {
        return Err(Error::TooShort { needed: start + len, available: r.samples.len() });
    }
    let x = &r.samples[start..start + len];
    match r.kind {
        ReferenceKind::HrSeriesBpm => Ok(x.iter().sum::<f64>() / x.len() as f64),
        ReferenceKind::BvpWaveform => {
            let y = fourier_resample(x, r.sample_rate, protocol.target_fps)?;
            let z = standardize(&y)?;
            pulse_hr(&z.samples, protocol.target_fps, protocol)
        }
    }
}

fn process_video(video: &VideoInput, index: usize, config: &PipelineConfig) -> (Vec<VideoRow>, VideoQuality) {
    let deg_name = config.degradation.map_or("none", |d| d.name());
    let res_name = config.restoration.map_or("none", |r| r.name());
    let row = |method: &Method| VideoRow {
        video_id: video.id.clone(),
        method: method.name().to_string(),
        degradation: deg_name.to_string(),
        restoration: res_name.to_string(),
        predicted_bpm: None,
        reference_bpm: None,
        warning: None,
        error: None,
    };
    let fail = |e: &Error| {
        let rows = config
            .methods
            .iter()
            .map(|m| VideoRow { error: Some(e.code().to_string()), ..row(m) })
            .collect();
        (rows, VideoQuality { video_id: video.id.clone(), degraded: None, restored: None })
    };

    let prep = match prepare(video, index, config) {
        Ok(p) => p,
        Err(e) => return fail(&e),
    };
    let stride = config.protocol.quality_stride;
    let degraded = sequence_quality(&prep.clean, &prep.degraded, stride).ok();
    let restored = prep
        .restored
        .as_ref()
        .and_then(|r| sequence_quality(&prep.clean, r, stride).ok());
    let quality = VideoQuality { video_id: video.id.clone(), degraded, restored };

    let reference = reference_hr(video, &config.protocol);
    let trace = analysis_trace(&prep, config);
    let rows = config
        .methods
        .iter()
        .map(|m| {
            let outcome = trace.as_ref().map_err(|e| e.code()).and_then(|t| {
                let pulse = m.apply(t).map_err(|e| e.code())?;
                let bpm = pulse_hr(&pulse.samples, pulse.fps, &config.protocol).map_err(|e| e.code())?;
                Ok((bpm, pulse.warning))
            });
            let reference_bpm = reference.as_ref().ok().copied();
            match (outcome, &reference) {
                (Ok((bpm, warning)), Ok(_)) => VideoRow {
                    predicted_bpm: Some(bpm),
                    reference_bpm,
                    warning: warning.map(|w| format!("{w:?}")),
                    ..row(m)
                },
                (Ok((bpm, _)), Err(e)) => VideoRow {
                    predicted_bpm: Some(bpm),
                    error: Some(e.code().to_string()),
                    ..row(m)
                },
                (Err(code), _) => VideoRow { reference_bpm, error: Some(code.to_string()), ..row(m) },
            }
        })
        .collect();
    (rows, quality)
}

/// Synthetic inputs listed in the config, generated in memory.
pub fn synth_inputs(config: &PipelineConfig) -> Result<Vec<VideoInput>> {
    config
        .synth
        .par_iter()
        .map(|s| synth::generate(s).map(VideoInput::from_synth))
        .collect()
}

/// Runs every configured video. Per-video failures become error rows; only
/// configuration problems abort the run.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    config.validate()?;
    let mut inputs: Vec<std::result::Result<VideoInput, (String, Error)>> = config
        .videos
        .par_iter()
        .map(|dir| {
            load_video_dir(dir, None).map_err(|e| {
                let id = dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into());
                (id, e)
            })
        })
        .collect();
    inputs.extend(synth_inputs(config)?.into_iter().map(Ok));
    run_inputs(config, &inputs)
}

/// Runs the pipeline over already loaded inputs.
pub fn run_inputs(
    config: &PipelineConfig,
    inputs: &[std::result::Result<VideoInput, (String, Error)>],
) -> Result<RunReport> {
    let results: Vec<(Vec<VideoRow>, VideoQuality)> = inputs
        .par_iter()
        .enumerate()
        .map(|(i, input)| match input {
            Ok(v) => process_video(v, i, config),
            Err((id, e)) => {
                let rows = config
                    .methods
                    .iter()
                    .map(|m| VideoRow {
                        video_id: id.clone(),
                        method: m.name().to_string(),
                        degradation: config.degradation.map_or("none", |d| d.name()).to_string(),
                        restoration: config.restoration.map_or("none", |r| r.name()).to_string(),
                        predicted_bpm: None,
                        reference_bpm: None,
                        warning: None,
                        error: Some(e.code().to_string()),
                    })
                    .collect();
                (rows, VideoQuality { video_id: id.clone(), degraded: None, restored: None })
            }
        })
        .collect();
    let (rows, quality): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(RunReport::new(config, rows.into_iter().flatten().collect(), quality))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SynthSpec;

    fn synth_config(bpms: &[f64]) -> PipelineConfig {
        PipelineConfig {
            synth: bpms
                .iter()
                .enumerate()
                .map(|(i, &b)| SynthSpec { pulse_bpm: b, seed: i as u64 + 1, ..Default::default() })
                .collect(),
            methods: vec![Method::Pos],
            ..Default::default()
        }
    }

    #[test]
    fn clean_synth_pos() {
        let r = run_pipeline(&synth_config(&[60.0, 90.0])).unwrap();
        assert_eq!(r.rows.len(), 2);
        for row in &r.rows {
            assert!(row.error.is_none(), "{row:?}");
            assert!((row.predicted_bpm.unwrap() - row.reference_bpm.unwrap()).abs() < 1.0);
        }
        assert_eq!(r.aggregate.len(), 1);
        assert!(r.aggregate[0].report.unwrap().mae < 1.0);
    }

    #[test]
    fn reference_hr_series_is_averaged() {
        let mut v = VideoInput::from_synth(synth::generate(&SynthSpec::default()).unwrap());
        v.reference = ReferenceSignal::new((0..16).map(|i| 70.0 + (i % 2) as f64).collect(), 1.0, ReferenceKind::HrSeriesBpm)
            .unwrap();
        assert_eq!(reference_hr(&v, &Protocol::default()).unwrap(), 70.5);
    }

    #[test]
    fn short_video_becomes_error_rows() {
        let mut cfg = synth_config(&[72.0]);
        cfg.synth[0].duration_s = 10.0;
        cfg.methods = vec![Method::Green, Method::Chrom];
        let r = run_pipeline(&cfg).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows.iter().all(|row| row.error.as_deref() == Some("TooShort")));
        assert_eq!(r.failed_rows(), 2);
    }

    #[test]
    fn frame_subsampling_mode() {
        let mut cfg = synth_config(&[72.0]);
        cfg.synth[0].fps = 30.0;
        cfg.protocol.resample = ResampleMode::Frames;
        let v = VideoInput::from_synth(synth::generate(&cfg.synth[0]).unwrap());
        let prep = prepare(&v, 0, &cfg).unwrap();
        assert_eq!(prep.clean.len(), 320);
        assert_eq!(prep.fps, 20.0);
        let r = run_pipeline(&cfg).unwrap();
        assert!((r.rows[0].predicted_bpm.unwrap() - 72.0).abs() < 1.0);
    }
}
