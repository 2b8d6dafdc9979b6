//! INI pipeline configuration.
//!
//! ```ini
//! [input]
//! videos = clips/a, clips/b      ; directories with frames, landmarks, reference
//! [synth]
//! bpms = 60, 72, 90              ; in-memory synthetic videos
//! seeds = 1, 2, 3
//! [degrade]
//! kind = noise                   ; none | blur | noise | eyemask | facemask
//! sigma = 10
//! [restore]
//! kind = nlm                     ; none | nlm | fmm
//! [rppg]
//! methods = green, ica, chrom, pbv, pos, lgi
//! [protocol]
//! segment_seconds = 16
//! [output]
//! dir = results
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ini::Ini;

use crate::degrade::{BlurParams, Degradation, NoiseParams, DEFAULT_KERNEL_SIZE, DEFAULT_NOISE_SIGMA};
use crate::error::{Error, Result};
use crate::restore::{FmmParams, NlmParams, Restoration};
use crate::roi::DEFAULT_MARGIN;
use crate::rppg::{IcaParams, IcaSelect, Method, PbvVector};
use crate::signal::{HR_BAND, SEGMENT_SECONDS, TARGET_FPS};
use crate::synth::SynthSpec;

/// How the video timeline reaches the target rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResampleMode {
    /// Fourier-resample the extracted RGB trace.
    Trace,
    /// Pick the nearest source frame for every target instant.
    Frames,
}

impl ResampleMode {
    pub fn name(self) -> &'static str {
        match self {
            ResampleMode::Trace => "trace",
            ResampleMode::Frames => "frames",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    pub segment_seconds: f64,
    pub target_fps: f64,
    pub hr_low: f64,
    pub hr_high: f64,
    pub roi_margin: f64,
    /// Leave masked pixels out of the trace when frames stay unrestored.
    pub mask_exclude: bool,
    pub resample: ResampleMode,
    /// Score image quality on every n-th frame.
    pub quality_stride: usize,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            segment_seconds: SEGMENT_SECONDS,
            target_fps: TARGET_FPS,
            hr_low: HR_BAND.0,
            hr_high: HR_BAND.1,
            roi_margin: DEFAULT_MARGIN,
            mask_exclude: true,
            resample: ResampleMode::Trace,
            quality_stride: 1,
        }
    }
}

/// Noise-offset setting for NLM.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SigmaHat {
    /// The degradation noise level when noise is applied, else 0.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub videos: Vec<PathBuf>,
    pub synth: Vec<SynthSpec>,
    pub degradation: Option<Degradation>,
    pub restoration: Option<Restoration>,
    pub sigma_hat: SigmaHat,
    pub methods: Vec<Method>,
    pub protocol: Protocol,
    pub output_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            videos: Vec::new(),
            synth: Vec::new(),
            degradation: None,
            restoration: None,
            sigma_hat: SigmaHat::Auto,
            methods: Method::all(),
            protocol: Protocol::default(),
            output_dir: None,
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

struct Section<'a> {
    name: &'static str,
    props: Option<&'a ini::Properties>,
}

impl<'a> Section<'a> {
    fn raw(&self, key: &str) -> Option<&'a str> {
        self.props.and_then(|p| p.get(key)).map(str::trim)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None | Some("") => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| cfg_err(format!("[{}] {key} = {v:?} is not valid", self.name))),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>> {
        match self.raw(key) {
            None | Some("") => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| cfg_err(format!("[{}] {key}: bad item {s:?}", self.name)))
                })
                .collect(),
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        if let Some(p) = self.props {
            for (k, _) in p.iter() {
                if !allowed.contains(&k) {
                    return Err(cfg_err(format!("unknown key [{}] {k}", self.name)));
                }
            }
        }
        Ok(())
    }
}

const SECTIONS: [(&str, &[&str]); 7] = [
    ("input", &["videos"]),
    ("synth", &["bpms", "seeds", "seconds", "fps", "side", "noise", "texture"]),
    ("degrade", &["kind", "sigma", "seed", "kernel", "blur_sigma"]),
    ("restore", &["kind", "h", "patch_radius", "search_radius", "sigma_hat", "epsilon"]),
    ("rppg", &["methods", "ica_seed", "ica_select", "pbv_signature"]),
    (
        "protocol",
        &[
            "segment_seconds",
            "target_fps",
            "hr_low",
            "hr_high",
            "roi_margin",
            "mask_exclude",
            "resample",
            "quality_stride",
        ],
    ),
    ("output", &["dir"]),
];

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses INI text; relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        for (name, _) in ini.iter() {
            match name {
                None => {
                    if ini.general_section().iter().next().is_some() {
                        return Err(cfg_err("keys must live inside a section"));
                    }
                }
                Some(n) if SECTIONS.iter().any(|(s, _)| *s == n) => {}
                Some(n) => return Err(cfg_err(format!("unknown section [{n}]"))),
            }
        }
        let sec = |name: &'static str| {
            let s = Section { name, props: ini.section(Some(name)) };
            let allowed = SECTIONS.iter().find(|(n, _)| *n == name).expect("known section").1;
            s.check_keys(allowed).map(|_| s)
        };
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };

        let input = sec("input")?;
        let videos: Vec<PathBuf> = input.list::<String>("videos")?.iter().map(|p| resolve(p)).collect();

        let synth_sec = sec("synth")?;
        let bpms: Vec<f64> = synth_sec.list("bpms")?;
        let mut seeds: Vec<u64> = synth_sec.list("seeds")?;
        if seeds.is_empty() {
            seeds = (1..=bpms.len() as u64).collect();
        }
        if seeds.len() != bpms.len() {
            return Err(cfg_err(format!(
                "[synth] has {} bpms but {} seeds",
                bpms.len(),
                seeds.len()
            )));
        }
        let template = SynthSpec::default();
        let synth = bpms
            .iter()
            .zip(&seeds)
            .map(|(&bpm, &seed)| {
                let spec = SynthSpec {
                    pulse_bpm: bpm,
                    seed,
                    duration_s: synth_sec.parse("seconds", template.duration_s)?,
                    fps: synth_sec.parse("fps", template.fps)?,
                    side: synth_sec.parse("side", template.side)?,
                    sensor_noise_sigma: synth_sec.parse("noise", template.sensor_noise_sigma)?,
                    texture_sigma: synth_sec.parse("texture", template.texture_sigma)?,
                    ..template.clone()
                };
                spec.validate().map_err(|e| cfg_err(format!("[synth] {e}")))?;
                Ok(spec)
            })
            .collect::<Result<Vec<_>>>()?;

        let deg = sec("degrade")?;
        let degradation = match deg.parse("kind", "none".to_string())?.as_str() {
            "none" => None,
            "noise" => Some(Degradation::Noise(
                NoiseParams::new(deg.parse("sigma", DEFAULT_NOISE_SIGMA)?, deg.parse("seed", 1)?)
                    .map_err(|e| cfg_err(e.to_string()))?,
            )),
            "blur" => {
                let k = deg.parse("kernel", DEFAULT_KERNEL_SIZE)?;
                let p = match deg.raw("blur_sigma") {
                    Some(_) => BlurParams::new(deg.parse("blur_sigma", 0.0)?, k),
                    None => BlurParams::with_kernel(k),
                };
                Some(Degradation::Blur(p.map_err(|e| cfg_err(e.to_string()))?))
            }
            "eyemask" => Some(Degradation::Eyemask),
            "facemask" => Some(Degradation::Facemask),
            other => return Err(cfg_err(format!("[degrade] unknown kind {other:?}"))),
        };

        let res = sec("restore")?;
        let sigma_hat = match res.raw("sigma_hat") {
            None | Some("") | Some("auto") => SigmaHat::Auto,
            Some(_) => SigmaHat::Fixed(res.parse("sigma_hat", 0.0)?),
        };
        let restoration = match res.parse("kind", "none".to_string())?.as_str() {
            "none" => None,
            "nlm" => {
                let d = NlmParams::default();
                let p = NlmParams {
                    h: res.parse("h", d.h)?,
                    patch_radius: res.parse("patch_radius", d.patch_radius)?,
                    search_radius: res.parse("search_radius", d.search_radius)?,
                    sigma_hat: 0.0,
                };
                p.validate().map_err(|e| cfg_err(e.to_string()))?;
                Some(Restoration::Nlm(p))
            }
            "fmm" => Some(Restoration::Fmm(
                FmmParams::new(res.parse("epsilon", FmmParams::default().epsilon)?)
                    .map_err(|e| cfg_err(e.to_string()))?,
            )),
            other => return Err(cfg_err(format!("[restore] unknown kind {other:?}"))),
        };

        let rp = sec("rppg")?;
        let ica = IcaParams {
            seed: rp.parse("ica_seed", 0)?,
            select: IcaSelect::from_name(&rp.parse("ica_select", "second".to_string())?)
                .map_err(|e| cfg_err(e.to_string()))?,
        };
        let signature = match rp.list::<f64>("pbv_signature")?.as_slice() {
            [] => PbvVector::default(),
            [a, b, c] => PbvVector::normalized([*a, *b, *c]).map_err(|e| cfg_err(e.to_string()))?,
            other => return Err(cfg_err(format!("[rppg] pbv_signature needs 3 values, got {}", other.len()))),
        };
        let names: Vec<String> = rp.list("methods")?;
        let methods = if names.is_empty() {
            Method::NAMES.iter().map(|s| s.to_string()).collect()
        } else {
            names
        };
        let methods = methods
            .iter()
            .map(|n| {
                Method::from_name(n).map_err(|e| cfg_err(e.to_string())).map(|m| match m {
                    Method::Ica(_) => Method::Ica(ica),
                    Method::Pbv(_) => Method::Pbv(signature),
                    m => m,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let pr = sec("protocol")?;
        let d = Protocol::default();
        let protocol = Protocol {
            segment_seconds: pr.parse("segment_seconds", d.segment_seconds)?,
            target_fps: pr.parse("target_fps", d.target_fps)?,
            hr_low: pr.parse("hr_low", d.hr_low)?,
            hr_high: pr.parse("hr_high", d.hr_high)?,
            roi_margin: pr.parse("roi_margin", d.roi_margin)?,
            mask_exclude: pr.parse("mask_exclude", d.mask_exclude)?,
            resample: match pr.parse("resample", "trace".to_string())?.as_str() {
                "trace" => ResampleMode::Trace,
                "frames" => ResampleMode::Frames,
                other => return Err(cfg_err(format!("[protocol] unknown resample mode {other:?}"))),
            },
            quality_stride: pr.parse("quality_stride", d.quality_stride)?,
        };

        let output_dir = sec("output")?.raw("dir").filter(|s| !s.is_empty()).map(resolve);

        let cfg = Self {
            videos,
            synth,
            degradation,
            restoration,
            sigma_hat,
            methods,
            protocol,
            output_dir,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.protocol;
        if !(p.segment_seconds > 0.0 && p.target_fps > 0.0) {
            return Err(cfg_err("segment_seconds and target_fps must be positive"));
        }
        if !(0.0 < p.hr_low && p.hr_low < p.hr_high && p.hr_high < p.target_fps / 2.0) {
            return Err(cfg_err(format!(
                "hr band {}..{} must lie inside (0, {})",
                p.hr_low,
                p.hr_high,
                p.target_fps / 2.0
            )));
        }
        if !(p.roi_margin > 0.0) {
            return Err(cfg_err("roi_margin must be positive"));
        }
        if p.quality_stride == 0 {
            return Err(cfg_err("quality_stride must be >= 1"));
        }
        if self.methods.is_empty() {
            return Err(cfg_err("no rPPG methods configured"));
        }
        if let Some(v) = self.videos.iter().find(|v| !v.is_dir()) {
            return Err(cfg_err(format!("video directory {} does not exist", v.display())));
        }
        Ok(())
    }

    /// NLM parameters with the noise offset resolved.
    pub(crate) fn effective_restoration(&self) -> Option<Restoration> {
        self.restoration.map(|r| match r {
            Restoration::Nlm(mut p) => {
                p.sigma_hat = match (self.sigma_hat, self.degradation) {
                    (SigmaHat::Fixed(s), _) => s,
                    (SigmaHat::Auto, Some(Degradation::Noise(n))) => n.sigma_n(),
                    (SigmaHat::Auto, _) => 0.0,
                };
                Restoration::Nlm(p)
            }
            r => r,
        })
    }

    /// Every setting, defaults included, as INI text that parses back to
    /// this configuration.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let join = |v: Vec<String>| v.join(", ");
        let _ = writeln!(s, "[input]");
        let _ = writeln!(s, "videos = {}", join(self.videos.iter().map(|p| p.display().to_string()).collect()));
        let _ = writeln!(s, "\n[synth]");
        let _ = writeln!(s, "bpms = {}", join(self.synth.iter().map(|x| x.pulse_bpm.to_string()).collect()));
        let _ = writeln!(s, "seeds = {}", join(self.synth.iter().map(|x| x.seed.to_string()).collect()));
        let t = self.synth.first().cloned().unwrap_or_default();
        let _ = writeln!(s, "seconds = {}", t.duration_s);
        let _ = writeln!(s, "fps = {}", t.fps);
        let _ = writeln!(s, "side = {}", t.side);
        let _ = writeln!(s, "noise = {}", t.sensor_noise_sigma);
        let _ = writeln!(s, "texture = {}", t.texture_sigma);

        let _ = writeln!(s, "\n[degrade]");
        match self.degradation {
            None => {
                let _ = writeln!(s, "kind = none");
            }
            Some(Degradation::Noise(p)) => {
                let _ = writeln!(s, "kind = noise\nsigma = {}\nseed = {}", p.sigma_n(), p.seed);
            }
            Some(Degradation::Blur(p)) => {
                let _ = writeln!(s, "kind = blur\nkernel = {}\nblur_sigma = {}", p.kernel_size(), p.sigma());
            }
            Some(d) => {
                let _ = writeln!(s, "kind = {}", d.name());
            }
        }

        let _ = writeln!(s, "\n[restore]");
        let sigma_hat = match self.sigma_hat {
            SigmaHat::Auto => "auto".to_string(),
            SigmaHat::Fixed(v) => v.to_string(),
        };
        match self.restoration {
            None => {
                let _ = writeln!(s, "kind = none");
            }
            Some(Restoration::Nlm(p)) => {
                let _ = writeln!(
                    s,
                    "kind = nlm\nh = {}\npatch_radius = {}\nsearch_radius = {}\nsigma_hat = {sigma_hat}",
                    p.h, p.patch_radius, p.search_radius
                );
            }
            Some(Restoration::Fmm(p)) => {
                let _ = writeln!(s, "kind = fmm\nepsilon = {}", p.epsilon);
            }
        }

        let _ = writeln!(s, "\n[rppg]");
        let _ = writeln!(s, "methods = {}", join(self.methods.iter().map(|m| m.name().to_string()).collect()));
        let ica = self
            .methods
            .iter()
            .find_map(|m| if let Method::Ica(p) = m { Some(*p) } else { None })
            .unwrap_or_default();
        let sig = self
            .methods
            .iter()
            .find_map(|m| if let Method::Pbv(p) = m { Some(*p) } else { None })
            .unwrap_or_default();
        let _ = writeln!(s, "ica_seed = {}\nica_select = {}", ica.seed, ica.select.name());
        let _ = writeln!(s, "pbv_signature = {}", join(sig.components().iter().map(|v| v.to_string()).collect()));

        let p = &self.protocol;
        let _ = writeln!(s, "\n[protocol]");
        let _ = writeln!(s, "segment_seconds = {}\ntarget_fps = {}", p.segment_seconds, p.target_fps);
        let _ = writeln!(s, "hr_low = {}\nhr_high = {}\nroi_margin = {}", p.hr_low, p.hr_high, p.roi_margin);
        let _ = writeln!(
            s,
            "mask_exclude = {}\nresample = {}\nquality_stride = {}",
            p.mask_exclude,
            p.resample.name(),
            p.quality_stride
        );

        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(
            s,
            "dir = {}",
            self.output_dir.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty_text() {
        let c = PipelineConfig::parse("", Path::new(".")).unwrap();
        assert_eq!(c, PipelineConfig::default());
    }

    #[test]
    fn full_config() {
        let text = "[synth]\nbpms = 60, 72\nseeds = 4, 5\nseconds = 20\n\
                    [degrade]\nkind = noise\nsigma = 12\nseed = 9\n\
                    [restore]\nkind = nlm\nh = 8\n\
                    [rppg]\nmethods = pos, ica\nica_select = periodic\nica_seed = 3\n\
                    [protocol]\nquality_stride = 4\n\
                    [output]\ndir = out\n";
        let c = PipelineConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(c.synth.len(), 2);
        assert_eq!(c.synth[1].seed, 5);
        assert_eq!(c.synth[0].duration_s, 20.0);
        assert_eq!(c.degradation, Some(Degradation::Noise(NoiseParams::new(12.0, 9).unwrap())));
        assert_eq!(c.methods[0], Method::Pos);
        assert_eq!(c.methods[1], Method::Ica(IcaParams { seed: 3, select: IcaSelect::Periodic }));
        assert_eq!(c.output_dir, Some(PathBuf::from("/base/out")));
        match c.effective_restoration() {
            Some(Restoration::Nlm(p)) => assert_eq!((p.h, p.sigma_hat), (8.0, 12.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn echo_round_trips() {
        let text = "[synth]\nbpms = 60, 72.5\n[degrade]\nkind = blur\nkernel = 9\n\
                    [restore]\nkind = fmm\nepsilon = 3\n[rppg]\npbv_signature = 1, 2, 2\n";
        let c = PipelineConfig::parse(text, Path::new(".")).unwrap();
        let again = PipelineConfig::parse(&c.to_ini(), Path::new(".")).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "[bogus]\nx = 1\n",
            "[degrade]\nkind = smudge\n",
            "[degrade]\nsigmaa = 3\n",
            "[rppg]\nmethods = pos, nope\n",
            "[synth]\nbpms = 60, 70\nseeds = 1\n",
            "[synth]\nbpms = 200\n",
            "[protocol]\nhr_high = 11\n",
            "[input]\nvideos = /definitely/not/here\n",
            "[restore]\nkind = nlm\npatch_radius = 0\n",
        ] {
            let err = PipelineConfig::parse(text, Path::new(".")).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{text}: {err:?}");
        }
    }
}
