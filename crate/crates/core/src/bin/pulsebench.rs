use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pulsebench::degrade::{BlurParams, Degradation, MaskImage, NoiseParams, DEFAULT_KERNEL_SIZE};
use pulsebench::media::{
    load_frame_sequence, load_landmarks, load_masks, load_reference, save_frame_sequence, save_masks,
    save_reference, FrameSequence, LandmarkSet, ReferenceKind, ReferenceSignal,
};
use pulsebench::pipeline::{emit_report, read_video_fps, run_pipeline, PipelineConfig};
use pulsebench::quality::score;
use pulsebench::restore::{FmmParams, NlmParams, Restoration};
use pulsebench::roi::{adjust_box, crop_resize, RawBox, ANALYSIS_SIDE, DEFAULT_MARGIN};
use pulsebench::rppg::{extract_trace, IcaParams, IcaSelect, Method, PbvVector};
use pulsebench::signal::{butterworth_bandpass, estimate_hr, HR_BAND, TARGET_FPS};
use pulsebench::synth::{self, SynthSpec, LANDMARKS_FILE, REFERENCE_FILE, VIDEO_META_FILE};
use pulsebench::{Error, Result};

/// Frame rate assumed when neither `--fps` nor `video.ini` gives one.
const FALLBACK_FPS: f64 = 20.0;

#[derive(Parser)]
#[command(name = "pulsebench", version, about = "Degrade, restore and measure rPPG heart-rate pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic pulsing-skin video with exact ground truth.
    Synth(SynthArgs),
    /// Apply one degradation to every frame of a video directory.
    Degrade(DegradeArgs),
    /// Denoise (NLM) or inpaint (FMM) a video directory.
    Restore(RestoreArgs),
    /// Crop the face, extract the RGB trace and apply one rPPG method.
    Extract(ExtractArgs),
    /// Band-pass a pulse signal and estimate heart rate.
    Hr(HrArgs),
    /// PSNR and SSIM of a test video against a reference video.
    Quality(QualityArgs),
    /// Run the full pipeline from an INI config.
    Run(RunArgs),
    /// Print the version.
    Version,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 72.0)]
    bpm: f64,
    #[arg(long, default_value_t = 16.0)]
    seconds: f64,
    #[arg(long, default_value_t = 20.0)]
    fps: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 72)]
    side: usize,
    /// Per-pixel sensor noise sigma.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Static skin texture sigma.
    #[arg(long, default_value_t = 4.0)]
    texture: f64,
    /// Reference waveform rate; the video rate by default.
    #[arg(long)]
    reference_rate: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DegradeKind {
    Blur,
    Noise,
    Eyemask,
    Facemask,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Frame rate; read from video.ini when omitted.
    #[arg(long)]
    fps: Option<f64>,
    /// Landmark CSV; `<in>/landmarks.csv` when omitted.
    #[arg(long)]
    landmarks: Option<PathBuf>,
}

#[derive(Args)]
struct DegradeArgs {
    #[arg(long, value_enum)]
    kind: DegradeKind,
    /// Blur sigma; derived from the kernel size when omitted.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_KERNEL_SIZE)]
    kernel: usize,
    #[arg(long, default_value_t = 10.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum RestoreKind {
    Nlm,
    Fmm,
}

#[derive(Args)]
struct RestoreArgs {
    #[arg(long, value_enum)]
    kind: RestoreKind,
    #[arg(long, default_value_t = 10.0)]
    h: f64,
    #[arg(long, default_value_t = 3)]
    patch_radius: usize,
    #[arg(long, default_value_t = 10)]
    search_radius: usize,
    #[arg(long, default_value_t = 0.0)]
    sigma_hat: f64,
    #[arg(long, default_value_t = 5.0)]
    epsilon: f64,
    /// Directory of mask_%06d.pbm files.
    #[arg(long, conflicts_with = "infer_mask")]
    mask_dir: Option<PathBuf>,
    /// Treat pure white pixels as the inpainting mask.
    #[arg(long)]
    infer_mask: bool,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    fps: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    method: String,
    /// ICA initialisation seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// ICA component selection: second or periodic.
    #[arg(long, default_value = "second")]
    ica_select: String,
    #[command(flatten)]
    input: InputArgs,
    /// Exclude pixels set in these masks from the trace.
    #[arg(long)]
    mask_dir: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
    #[arg(long, default_value_t = TARGET_FPS)]
    target_fps: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct HrArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Band in Hz as `low:high`.
    #[arg(long, default_value = "0.75:2.5")]
    band: String,
    /// Output CSV; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QualityArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn input_fps(dir: &Path, fps: Option<f64>) -> Result<f64> {
    match fps {
        Some(f) => Ok(f),
        None if dir.join(VIDEO_META_FILE).exists() => read_video_fps(dir),
        None => Ok(FALLBACK_FPS),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn copy_sidecars(from: &Path, to: &Path) -> Result<()> {
    for name in [VIDEO_META_FILE, LANDMARKS_FILE, REFERENCE_FILE] {
        let src = from.join(name);
        if src.exists() {
            std::fs::copy(&src, to.join(name)).map_err(|e| Error::io(&src, e))?;
        }
    }
    Ok(())
}

fn landmark_sets(args: &InputArgs, frames: usize, required: bool) -> Result<Option<Vec<LandmarkSet>>> {
    let path = args.landmarks.clone().unwrap_or_else(|| args.input.join(LANDMARKS_FILE));
    if !required && !path.exists() {
        return Ok(None);
    }
    let sets = load_landmarks(&path)?;
    if sets.len() != 1 && sets.len() != frames {
        return Err(Error::LengthMismatch(frames, sets.len()));
    }
    Ok(Some(sets))
}

fn landmarks_at(sets: &Option<Vec<LandmarkSet>>, i: usize) -> Option<&LandmarkSet> {
    sets.as_ref().map(|s| if s.len() == 1 { &s[0] } else { &s[i] })
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        duration_s: a.seconds,
        fps: a.fps,
        side: a.side,
        pulse_bpm: a.bpm,
        texture_sigma: a.texture,
        sensor_noise_sigma: a.noise,
        seed: a.seed,
        reference_rate: a.reference_rate,
        ..Default::default()
    };
    synth::generate(&spec)?.save(&a.out)
}

fn cmd_degrade(a: DegradeArgs) -> Result<()> {
    let fps = input_fps(&a.input.input, a.input.fps)?;
    let seq = load_frame_sequence(&a.input.input, fps)?;
    let degradation = match a.kind {
        DegradeKind::Blur => Degradation::Blur(match a.sigma {
            Some(s) => BlurParams::new(s, a.kernel)?,
            None => BlurParams::with_kernel(a.kernel)?,
        }),
        DegradeKind::Noise => Degradation::Noise(NoiseParams::new(a.noise_sigma, a.seed)?),
        DegradeKind::Eyemask => Degradation::Eyemask,
        DegradeKind::Facemask => Degradation::Facemask,
    };
    let sets = landmark_sets(&a.input, seq.len(), degradation.needs_landmarks())?;
    let mut frames = Vec::with_capacity(seq.len());
    let mut masks = Vec::new();
    for (i, f) in seq.frames().iter().enumerate() {
        let (d, m) = degradation.apply(f, i, landmarks_at(&sets, i))?;
        frames.push(d);
        masks.extend(m);
    }
    save_frame_sequence(&seq.with_frames(frames)?, &a.out)?;
    if !masks.is_empty() {
        save_masks(&masks, &a.out)?;
    }
    copy_sidecars(&a.input.input, &a.out)
}

fn cmd_restore(a: RestoreArgs) -> Result<()> {
    let seq = load_frame_sequence(&a.input, input_fps(&a.input, a.fps)?)?;
    let restoration = match a.kind {
        RestoreKind::Nlm => Restoration::Nlm(NlmParams {
            h: a.h,
            patch_radius: a.patch_radius,
            search_radius: a.search_radius,
            sigma_hat: a.sigma_hat,
        }),
        RestoreKind::Fmm => Restoration::Fmm(FmmParams::new(a.epsilon)?),
    };
    let masks: Option<Vec<MaskImage>> = match (&a.mask_dir, a.kind) {
        (Some(dir), RestoreKind::Fmm) => Some(load_masks(dir)?),
        (None, RestoreKind::Fmm) if !a.infer_mask => Some(load_masks(&a.input)?),
        _ => None,
    };
    let restored = restoration.apply(seq.frames(), masks.as_deref())?;
    save_frame_sequence(&seq.with_frames(restored)?, &a.out)?;
    copy_sidecars(&a.input, &a.out)
}

fn parse_method(a: &ExtractArgs) -> Result<Method> {
    Ok(match Method::from_name(&a.method)? {
        Method::Ica(_) => Method::Ica(IcaParams { seed: a.seed, select: IcaSelect::from_name(&a.ica_select)? }),
        Method::Pbv(_) => Method::Pbv(PbvVector::default()),
        m => m,
    })
}

fn cmd_extract(a: ExtractArgs) -> Result<()> {
    let method = parse_method(&a)?;
    let seq: FrameSequence = load_frame_sequence(&a.input.input, input_fps(&a.input.input, a.input.fps)?)?;
    let sets = landmark_sets(&a.input, seq.len(), a.input.landmarks.is_some())?;
    let masks = a.mask_dir.as_deref().map(load_masks).transpose()?;
    if let Some(m) = &masks {
        if m.len() != seq.len() {
            return Err(Error::LengthMismatch(seq.len(), m.len()));
        }
    }
    let mut crops = Vec::with_capacity(seq.len());
    let mut crop_masks = Vec::new();
    for (i, f) in seq.frames().iter().enumerate() {
        let (w, h) = (f.width(), f.height());
        let bx = adjust_box(RawBox::full_frame(w, h), landmarks_at(&sets, i), a.margin, w, h)?;
        crops.push(crop_resize(f, &bx, ANALYSIS_SIDE)?);
        if let Some(m) = &masks {
            let m = &m[i];
            crop_masks.push(MaskImage::from_fn(ANALYSIS_SIDE, ANALYSIS_SIDE, |x, y| {
                let s = bx.side / ANALYSIS_SIDE as f64;
                let px = (bx.x0 + (x as f64 + 0.5) * s).floor();
                let py = (bx.y0 + (y as f64 + 0.5) * s).floor();
                px >= 0.0
                    && py >= 0.0
                    && (px as usize) < m.width()
                    && (py as usize) < m.height()
                    && m.get(px as usize, py as usize)
            }));
        }
    }
    let masks = masks.map(|_| crop_masks);
    let trace = extract_trace(&crops, seq.fps(), masks.as_deref())?.resample(a.target_fps)?;
    let pulse = method.apply(&trace)?;
    if let Some(w) = pulse.warning {
        eprintln!("warning: {w:?}");
    }
    save_reference(&ReferenceSignal::new(pulse.samples, pulse.fps, ReferenceKind::BvpWaveform)?, &a.out)
}

fn parse_band(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::Config(format!("band must look like 0.75:2.5, got {s:?}"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

fn cmd_hr(a: HrArgs) -> Result<()> {
    let (low, high) = if a.band.is_empty() { HR_BAND } else { parse_band(&a.band)? };
    let sig = load_reference(&a.input)?;
    let filtered = butterworth_bandpass(&sig.samples, sig.sample_rate, low, high)?;
    let est = estimate_hr(&filtered, sig.sample_rate, low, high)?;
    let text = format!(
        "bpm,peak_freq_hz,spectrum_snr_db\n{},{},{}\n",
        est.bpm, est.peak_freq, est.spectrum_snr
    );
    match a.out {
        Some(p) => write_text(&p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_quality(a: QualityArgs) -> Result<()> {
    let r = load_frame_sequence(&a.reference, FALLBACK_FPS)?;
    let t = load_frame_sequence(&a.test, FALLBACK_FPS)?;
    if r.len() != t.len() {
        return Err(Error::LengthMismatch(r.len(), t.len()));
    }
    let mut text = String::from("frame,psnr_db,ssim\n");
    let (mut psnr, mut ssim) = (0.0, 0.0);
    for (i, (rf, tf)) in r.frames().iter().zip(t.frames()).enumerate() {
        let s = score(rf, tf)?;
        psnr += s.psnr_db;
        ssim += s.ssim;
        text.push_str(&format!("{i},{},{}\n", s.psnr_db, s.ssim));
    }
    let n = r.len() as f64;
    text.push_str(&format!("mean,{},{}\n", psnr / n, ssim / n));
    match a.out {
        Some(p) => write_text(&p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_run(a: RunArgs) -> Result<ExitCode> {
    let config = PipelineConfig::from_file(&a.config)?;
    let out = a
        .out
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: set [output] dir or pass --out".into()))?;
    let report = run_pipeline(&config)?;
    emit_report(&report, &out)?;
    let failed = report.failed_rows();
    println!("{} rows, {} failed, report in {}", report.rows.len(), failed, out.display());
    Ok(if failed > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Synth(a) => cmd_synth(a).map(|_| ExitCode::SUCCESS),
        Command::Degrade(a) => cmd_degrade(a).map(|_| ExitCode::SUCCESS),
        Command::Restore(a) => cmd_restore(a).map(|_| ExitCode::SUCCESS),
        Command::Extract(a) => cmd_extract(a).map(|_| ExitCode::SUCCESS),
        Command::Hr(a) => cmd_hr(a).map(|_| ExitCode::SUCCESS),
        Command::Quality(a) => cmd_quality(a).map(|_| ExitCode::SUCCESS),
        Command::Run(a) => cmd_run(a),
        Command::Version => {
            println!("pulsebench {}", pulsebench::VERSION);
            Ok(ExitCode::SUCCESS)
        }
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error [{}]: {e}", e.code());
        ExitCode::from(1)
    })
}
