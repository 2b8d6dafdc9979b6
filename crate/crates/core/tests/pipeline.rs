use std::path::Path;

use pulsebench::degrade::{Degradation, NoiseParams};
use pulsebench::pipeline::{
    aggregate, emit_report, parse_per_video, run_inputs, run_pipeline, synth_inputs, PipelineConfig, VideoRow,
};
use pulsebench::restore::{NlmParams, Restoration};
use pulsebench::rppg::{IcaParams, IcaSelect, Method};
use pulsebench::synth::{self, SynthSpec};
use pulsebench::Error;

fn synth_config(bpms: &[f64], seeds: &[u64]) -> PipelineConfig {
    PipelineConfig {
        synth: bpms
            .iter()
            .zip(seeds)
            .map(|(&b, &s)| SynthSpec { pulse_bpm: b, seed: s, ..Default::default() })
            .collect(),
        methods: vec![Method::Pos],
        ..Default::default()
    }
}

fn mae(rows: &[VideoRow]) -> f64 {
    let errs: Vec<f64> = rows.iter().map(|r| (r.predicted_bpm.unwrap() - r.reference_bpm.unwrap()).abs()).collect();
    errs.iter().sum::<f64>() / errs.len() as f64
}

fn noise(sigma: f64) -> Option<Degradation> {
    Some(Degradation::Noise(NoiseParams::new(sigma, 7).unwrap()))
}

#[test]
fn three_clean_videos_pos_under_two_bpm() {
    let r = run_pipeline(&synth_config(&[60.0, 72.0, 90.0], &[1, 2, 3])).unwrap();
    assert_eq!(r.failed_rows(), 0);
    assert!(r.aggregate[0].report.unwrap().mae < 2.0);
}

#[test]
fn noise_does_not_help_and_nlm_raises_psnr() {
    let clean = synth_config(&[60.0, 72.0, 90.0], &[1, 2, 3]);
    let noisy = PipelineConfig { degradation: noise(10.0), ..clean.clone() };
    let restored = PipelineConfig { restoration: Some(Restoration::Nlm(NlmParams::default())), ..noisy.clone() };
    let (c, n, r) = (
        run_pipeline(&clean).unwrap(),
        run_pipeline(&noisy).unwrap(),
        run_pipeline(&restored).unwrap(),
    );
    assert!(mae(&n.rows) >= mae(&c.rows));
    for q in &r.quality {
        let (d, s) = (q.degraded.unwrap(), q.restored.unwrap());
        assert!(s.psnr_db > d.psnr_db, "{q:?}");
    }
}

#[test]
fn pos_error_grows_with_sensor_noise() {
    let seeds: Vec<u64> = (1..=10).collect();
    let bpms: Vec<f64> = seeds.iter().map(|s| [60.0, 72.0, 84.0, 96.0, 108.0][(*s as usize - 1) % 5]).collect();
    let maes: Vec<f64> = [0.0, 10.0, 25.0]
        .iter()
        .map(|&sigma| {
            let mut cfg = synth_config(&bpms, &seeds);
            for s in &mut cfg.synth {
                s.sensor_noise_sigma = sigma;
            }
            mae(&run_pipeline(&cfg).unwrap().rows)
        })
        .collect();
    assert!(maes[0] <= maes[1] && maes[1] <= maes[2], "{maes:?}");
}

#[test]
fn five_methods_and_periodic_ica_recover_synth_hr() {
    let mut cfg = synth_config(&[60.0, 84.0, 108.0], &[1, 3, 5]);
    cfg.methods = vec![
        Method::Green,
        Method::Chrom,
        Method::Pbv(Default::default()),
        Method::Pos,
        Method::Lgi,
        Method::Ica(IcaParams { seed: 0, select: IcaSelect::Periodic }),
    ];
    let r = run_pipeline(&cfg).unwrap();
    for row in &r.rows {
        let err = (row.predicted_bpm.unwrap() - row.reference_bpm.unwrap()).abs();
        assert!(err <= 2.0, "{row:?}");
    }
}

#[test]
fn identical_configs_give_identical_reports() {
    let mut cfg = synth_config(&[66.0, 99.0], &[4, 9]);
    cfg.degradation = noise(10.0);
    cfg.methods = Method::all();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit_report(&run_pipeline(&cfg).unwrap(), a.path()).unwrap();
    emit_report(&run_pipeline(&cfg).unwrap(), b.path()).unwrap();
    for name in ["per_video.csv", "aggregate.csv", "quality.csv", "manifest.txt"] {
        let read = |d: &Path| std::fs::read(d.join(name)).unwrap();
        assert_eq!(read(a.path()), read(b.path()), "{name}");
    }
}

#[test]
fn failing_video_does_not_touch_other_rows() {
    let cfg = synth_config(&[72.0, 90.0], &[1, 2]);
    let good = synth_inputs(&cfg).unwrap();
    let alone = run_inputs(&cfg, &[Ok(good[0].clone()), Ok(good[1].clone())]).unwrap();

    let mut short = SynthSpec { duration_s: 8.0, ..cfg.synth[0].clone() };
    short.seed = 11;
    let broken = pulsebench::pipeline::VideoInput::from_synth(synth::generate(&short).unwrap());
    let mixed = run_inputs(
        &cfg,
        &[
            Ok(good[0].clone()),
            Err(("missing".into(), Error::Config("gone".into()))),
            Ok(broken),
            Ok(good[1].clone()),
        ],
    )
    .unwrap();
    assert_eq!(mixed.rows[0], alone.rows[0]);
    assert_eq!(mixed.rows[3], alone.rows[1]);
    assert_eq!(mixed.rows[1].error.as_deref(), Some("ConfigError"));
    assert_eq!(mixed.rows[2].error.as_deref(), Some("TooShort"));
    assert_eq!(mixed.failed_rows(), 2);
}

#[test]
fn emitted_aggregate_matches_reparsed_rows() {
    let mut cfg = synth_config(&[72.0], &[2]);
    cfg.methods = vec![Method::Green, Method::Pos];
    let dir = tempfile::tempdir().unwrap();
    let report = run_pipeline(&cfg).unwrap();
    emit_report(&report, dir.path()).unwrap();
    let rows = parse_per_video(&std::fs::read_to_string(dir.path().join("per_video.csv")).unwrap()).unwrap();
    assert_eq!(rows, report.rows);
    assert_eq!(aggregate(&rows), report.aggregate);
    let one = report.aggregate[0].report.unwrap();
    assert_eq!(one.mae, one.rmse);
}
