use std::fs;
use std::path::Path;

use super::{ReferenceKind, ReferenceSignal};
use crate::error::{Error, Result};

/// Relative tolerance on the sample spacing.
const SPACING_TOLERANCE: f64 = 1e-6;

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedCsv {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn parse_kind(line: &str, path: &Path) -> Result<ReferenceKind> {
    let value = line
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|s| s.strip_prefix("kind="))
        .ok_or_else(|| malformed(path, "first line must be `# kind=BVP` or `# kind=HR`"))?;
    match value.trim() {
        "BVP" => Ok(ReferenceKind::BvpWaveform),
        "HR" => Ok(ReferenceKind::HrSeriesBpm),
        other => Err(malformed(path, format!("unknown kind {other:?}"))),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Reads a `t,value` CSV preceded by a `# kind=...` line. The sample rate is
/// inferred from the median time step.
pub fn load_reference(path: &Path) -> Result<ReferenceSignal> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let kind = parse_kind(first.trim_end_matches('\r'), path)?;

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(rest.as_bytes());
    let header = reader.headers().map_err(|e| malformed(path, e.to_string()))?;
    if header.iter().ne(["t", "value"]) {
        return Err(malformed(path, format!("header must be t,value, got {header:?}")));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(path, e.to_string()))?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| malformed(path, format!("bad row {record:?}")))
        };
        times.push(parse(0)?);
        values.push(parse(1)?);
    }
    if times.len() < 2 {
        return Err(Error::EmptySignal);
    }

    let steps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let med = median(steps.clone());
    if !(med > 0.0) {
        return Err(Error::NonUniformSampling { step: med, median: med });
    }
    if let Some(&bad) = steps
        .iter()
        .find(|&&d| (d - med).abs() > SPACING_TOLERANCE * med)
    {
        return Err(Error::NonUniformSampling { step: bad, median: med });
    }
    ReferenceSignal::new(values, 1.0 / med, kind)
}

/// Writes `# kind=...`, the header and one row per sample with `t = i / rate`.
pub fn save_reference(signal: &ReferenceSignal, path: &Path) -> Result<()> {
    let mut text = format!("# kind={}\nt,value\n", signal.kind.tag());
    for (i, v) in signal.samples.iter().enumerate() {
        text.push_str(&format!("{},{}\n", i as f64 / signal.sample_rate, v));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn infers_62_hz() {
        let samples: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin()).collect();
        let sig = ReferenceSignal::new(samples.clone(), 62.0, ReferenceKind::BvpWaveform).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_reference(&sig, f.path()).unwrap();
        let back = load_reference(f.path()).unwrap();
        assert!((back.sample_rate - 62.0).abs() < 1e-9);
        assert_eq!(back.samples, samples);
        assert_eq!(back.kind, ReferenceKind::BvpWaveform);
    }

    #[test]
    fn single_row_is_empty_signal() {
        let f = write("# kind=HR\nt,value\n0,70\n");
        assert!(matches!(load_reference(f.path()), Err(Error::EmptySignal)));
    }

    #[test]
    fn jitter_is_rejected() {
        let mut text = String::from("# kind=BVP\nt,value\n");
        let mut t = 0.0;
        for i in 0..50 {
            text.push_str(&format!("{t},{i}\n"));
            t += 0.01 * if i % 2 == 0 { 1.01 } else { 0.99 };
        }
        let f = write(&text);
        assert!(matches!(load_reference(f.path()), Err(Error::NonUniformSampling { .. })));
    }

    #[test]
    fn kind_line_is_required() {
        let f = write("t,value\n0,1\n1,2\n");
        assert!(matches!(load_reference(f.path()), Err(Error::MalformedCsv { .. })));
        let f = write("# kind=HR\nt,value\n0,71\n0.5,72\n1.0,73\n");
        let r = load_reference(f.path()).unwrap();
        assert_eq!(r.kind, ReferenceKind::HrSeriesBpm);
        assert!((r.sample_rate - 2.0).abs() < 1e-12);
    }

    #[test]
    fn decreasing_time_is_rejected() {
        let f = write("# kind=HR\nt,value\n1,71\n0,72\n");
        assert!(matches!(load_reference(f.path()), Err(Error::NonUniformSampling { .. })));
    }
}
