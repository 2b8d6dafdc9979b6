//! Run report assembly and CSV emission.

use std::path::Path;

use crate::error::{Error, Result};
use crate::quality::{hr_errors, ErrorReport, QualityScore};
use crate::rppg::Method;

use super::config::PipelineConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct VideoRow {
    pub video_id: String,
    pub method: String,
    pub degradation: String,
    pub restoration: String,
    pub predicted_bpm: Option<f64>,
    pub reference_bpm: Option<f64>,
    pub warning: Option<String>,
    /// Error code when this row failed.
    pub error: Option<String>,
}

impl VideoRow {
    /// The (predicted, reference) pair when the row succeeded.
    pub fn pair(&self) -> Option<(f64, f64)> {
        match (self.error.as_ref(), self.predicted_bpm, self.reference_bpm) {
            (None, Some(p), Some(r)) => Some((p, r)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VideoQuality {
    pub video_id: String,
    /// Degraded frames against the clean crop.
    pub degraded: Option<QualityScore>,
    /// Restored frames against the clean crop, when restoration ran.
    pub restored: Option<QualityScore>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub method: String,
    pub degradation: String,
    pub restoration: String,
    /// `None` when every row of the cell failed.
    pub report: Option<ErrorReport>,
    pub failed: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QualityStage {
    Degraded,
    Restored,
}

impl QualityStage {
    pub fn name(self) -> &'static str {
        match self {
            QualityStage::Degraded => "degraded",
            QualityStage::Restored => "restored",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QualityCell {
    pub degradation: String,
    pub restoration: String,
    pub stage: QualityStage,
    pub videos: usize,
    pub mean: QualityScore,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub rows: Vec<VideoRow>,
    pub quality: Vec<VideoQuality>,
    pub aggregate: Vec<AggregateRow>,
    pub quality_cells: Vec<QualityCell>,
    pub version: String,
    pub seeds: Vec<(String, String)>,
    pub config_echo: String,
}

/// Error metrics per (method, degradation, restoration), in order of first
/// appearance.
pub fn aggregate(rows: &[VideoRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(&str, &str, &str)> = Vec::new();
    for r in rows {
        let k = (r.method.as_str(), r.degradation.as_str(), r.restoration.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(m, d, s)| {
            let cell: Vec<&VideoRow> = rows
                .iter()
                .filter(|r| r.method == m && r.degradation == d && r.restoration == s)
                .collect();
            let (p, r): (Vec<f64>, Vec<f64>) = cell.iter().filter_map(|r| r.pair()).unzip();
            AggregateRow {
                method: m.to_string(),
                degradation: d.to_string(),
                restoration: s.to_string(),
                report: hr_errors(&p, &r).ok(),
                failed: cell.len() - p.len(),
            }
        })
        .collect()
}

fn quality_cells(config: &PipelineConfig, quality: &[VideoQuality]) -> Vec<QualityCell> {
    let deg = config.degradation.map_or("none", |d| d.name());
    let res = config.restoration.map_or("none", |r| r.name());
    let mut cells = Vec::new();
    for stage in [QualityStage::Degraded, QualityStage::Restored] {
        let scores: Vec<QualityScore> = quality
            .iter()
            .filter_map(|q| match stage {
                QualityStage::Degraded => q.degraded,
                QualityStage::Restored => q.restored,
            })
            .collect();
        if scores.is_empty() {
            continue;
        }
        let n = scores.len() as f64;
        cells.push(QualityCell {
            degradation: deg.to_string(),
            restoration: res.to_string(),
            stage,
            videos: scores.len(),
            mean: QualityScore {
                psnr_db: scores.iter().map(|s| s.psnr_db).sum::<f64>() / n,
                ssim: scores.iter().map(|s| s.ssim).sum::<f64>() / n,
            },
        });
    }
    cells
}

impl RunReport {
    pub fn new(config: &PipelineConfig, rows: Vec<VideoRow>, quality: Vec<VideoQuality>) -> Self {
        let mut seeds = Vec::new();
        if let Some(crate::degrade::Degradation::Noise(p)) = config.degradation {
            seeds.push(("degrade".to_string(), p.seed.to_string()));
        }
        for m in &config.methods {
            if let Method::Ica(p) = m {
                seeds.push(("ica".to_string(), p.seed.to_string()));
            }
        }
        if !config.synth.is_empty() {
            let list: Vec<String> = config.synth.iter().map(|s| s.seed.to_string()).collect();
            seeds.push(("synth".to_string(), list.join(",")));
        }
        Self {
            aggregate: aggregate(&rows),
            quality_cells: quality_cells(config, &quality),
            rows,
            quality,
            version: crate::VERSION.to_string(),
            seeds,
            config_echo: config.to_ini(),
        }
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv(header: &[&str], records: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in records {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

const PER_VIDEO_HEADER: [&str; 9] = [
    "video_id",
    "method",
    "degradation",
    "restoration",
    "predicted_bpm",
    "reference_bpm",
    "abs_error",
    "warning",
    "error",
];

pub fn per_video_csv(rows: &[VideoRow]) -> String {
    write_csv(
        &PER_VIDEO_HEADER,
        rows.iter().map(|r| {
            vec![
                r.video_id.clone(),
                r.method.clone(),
                r.degradation.clone(),
                r.restoration.clone(),
                num(r.predicted_bpm),
                num(r.reference_bpm),
                num(r.pair().map(|(p, q)| (p - q).abs())),
                r.warning.clone().unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    write_csv(
        &["method", "degradation", "restoration", "n", "failed", "mae", "rmse", "mape"],
        rows.iter().map(|a| {
            vec![
                a.method.clone(),
                a.degradation.clone(),
                a.restoration.clone(),
                a.report.map_or(0, |r| r.n).to_string(),
                a.failed.to_string(),
                num(a.report.map(|r| r.mae)),
                num(a.report.map(|r| r.rmse)),
                num(a.report.map(|r| r.mape)),
            ]
        }),
    )
}

fn quality_csv(report: &RunReport) -> String {
    let deg = report.rows.first().map_or("none", |r| r.degradation.as_str());
    let res = report.rows.first().map_or("none", |r| r.restoration.as_str());
    let mut records = Vec::new();
    for q in &report.quality {
        for (stage, s) in [(QualityStage::Degraded, q.degraded), (QualityStage::Restored, q.restored)] {
            if let Some(s) = s {
                records.push(vec![
                    q.video_id.clone(),
                    deg.to_string(),
                    res.to_string(),
                    stage.name().to_string(),
                    s.psnr_db.to_string(),
                    s.ssim.to_string(),
                ]);
            }
        }
    }
    for c in &report.quality_cells {
        records.push(vec![
            format!("mean({})", c.videos),
            c.degradation.clone(),
            c.restoration.clone(),
            c.stage.name().to_string(),
            c.mean.psnr_db.to_string(),
            c.mean.ssim.to_string(),
        ]);
    }
    write_csv(&["video_id", "degradation", "restoration", "stage", "psnr_db", "ssim"], records)
}

/// Reads rows written by [`per_video_csv`].
pub fn parse_per_video(text: &str) -> Result<Vec<VideoRow>> {
    let bad = |reason: String| Error::MalformedCsv { path: "per_video.csv".into(), reason };
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(PER_VIDEO_HEADER.iter().copied()) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let opt_num = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| bad(format!("bad number {s:?}")))
        }
    };
    let opt_str = |s: &str| (!s.is_empty()).then(|| s.to_string());
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            Ok(VideoRow {
                video_id: rec[0].to_string(),
                method: rec[1].to_string(),
                degradation: rec[2].to_string(),
                restoration: rec[3].to_string(),
                predicted_bpm: opt_num(&rec[4])?,
                reference_bpm: opt_num(&rec[5])?,
                warning: opt_str(&rec[7]),
                error: opt_str(&rec[8]),
            })
        })
        .collect()
}

fn manifest(report: &RunReport) -> String {
    let mut s = format!("# pulsebench run manifest\nversion = {}\n", report.version);
    for (k, v) in &report.seeds {
        s.push_str(&format!("seed.{k} = {v}\n"));
    }
    s.push_str(&format!(
        "rows = {}\nfailed_rows = {}\n\n{}",
        report.rows.len(),
        report.failed_rows(),
        report.config_echo
    ));
    s
}

/// Writes `per_video.csv`, `aggregate.csv`, `quality.csv` and
/// `manifest.txt`, then re-derives the aggregate from the written
/// per-video file and checks it matches.
pub fn emit_report(report: &RunReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let write = |name: &str, text: &str| {
        let p = out_dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(p, e))
    };
    let aggregate_text = aggregate_csv(&report.aggregate);
    write("per_video.csv", &per_video_csv(&report.rows))?;
    write("aggregate.csv", &aggregate_text)?;
    write("quality.csv", &quality_csv(report))?;
    write("manifest.txt", &manifest(report))?;

    let path = out_dir.join("per_video.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let rederived = aggregate_csv(&aggregate(&parse_per_video(&text)?));
    if rederived != aggregate_text {
        return Err(Error::ReportInconsistent(
            "aggregate.csv differs from the aggregate of per_video.csv".into(),
        ));
    }
    Ok(())
}
