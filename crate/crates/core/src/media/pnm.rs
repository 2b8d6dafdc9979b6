use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Frame, FrameSequence};
use crate::degrade::MaskImage;
use crate::error::{Error, Result};

const FRAME_PREFIX: &str = "frame_";
const MASK_PREFIX: &str = "mask_";

fn indexed_name(prefix: &str, index: usize, ext: &str) -> String {
    format!("{prefix}{index:06}.{ext}")
}

/// Parses `<prefix>NNNNNN.<ext>` and returns the index.
fn parse_indexed_name(name: &str, prefix: &str, ext: &str) -> Option<usize> {
    let digits = name.strip_prefix(prefix)?.strip_suffix(ext)?.strip_suffix('.')?;
    if digits.len() == 6 && digits.bytes().all(|b| b.is_ascii_digit()) {
        digits.parse().ok()
    } else {
        None
    }
}

/// Lists the indices of matching files and checks they run 0..n without gaps.
fn consecutive_indices(dir: &Path, prefix: &str, ext: &str) -> Result<usize> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut indices = BTreeSet::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if let Some(i) = entry
            .file_name()
            .to_str()
            .and_then(|n| parse_indexed_name(n, prefix, ext))
        {
            indices.insert(i);
        }
    }
    for (expected, &found) in indices.iter().enumerate() {
        if found != expected {
            return Err(Error::MissingFrame {
                dir: dir.to_path_buf(),
                index: expected,
            });
        }
    }
    if indices.is_empty() {
        return Err(Error::MissingFrame {
            dir: dir.to_path_buf(),
            index: 0,
        });
    }
    Ok(indices.len())
}

/// Reads the whitespace/comment separated header tokens of a NetPBM file.
/// Returns the tokens and the offset of the first raster byte.
fn read_header<'a>(bytes: &'a [u8], count: usize, path: &Path) -> Result<(Vec<&'a str>, usize)> {
    let bad = |reason: &str| Error::MalformedPixmap {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut tokens = Vec::with_capacity(count);
    let mut pos = 0;
    while tokens.len() < count {
        match bytes.get(pos) {
            None => return Err(bad("truncated header")),
            Some(b'#') => {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            Some(_) => {
                let start = pos;
                while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
                    pos += 1;
                }
                let tok = std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ascii header"))?;
                tokens.push(tok);
            }
        }
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => Ok((tokens, pos + 1)),
        _ => Err(bad("missing separator after header")),
    }
}

fn parse_dim(tok: &str, path: &Path) -> Result<usize> {
    match tok.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::MalformedPixmap {
            path: path.to_path_buf(),
            reason: format!("bad dimension {tok:?}"),
        }),
    }
}

pub fn encode_ppm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.as_bytes());
    out
}

pub fn decode_ppm(bytes: &[u8], path: &Path) -> Result<Frame> {
    let (tokens, offset) = read_header(bytes, 4, path)?;
    let bad = |reason: String| Error::MalformedPixmap {
        path: path.to_path_buf(),
        reason,
    };
    if tokens[0] != "P6" {
        return Err(bad(format!("magic {:?} is not P6", tokens[0])));
    }
    let w = parse_dim(tokens[1], path)?;
    let h = parse_dim(tokens[2], path)?;
    if tokens[3] != "255" {
        return Err(bad(format!("maxval {} is not 255", tokens[3])));
    }
    let raster = &bytes[offset..];
    if raster.len() != w * h * 3 {
        return Err(bad(format!("raster has {} bytes, expected {}", raster.len(), w * h * 3)));
    }
    Frame::new(w, h, raster.to_vec())
}

/// P4 bitmap; a set bit marks an occluded pixel.
pub fn encode_pbm(mask: &MaskImage) -> Vec<u8> {
    let (w, h) = (mask.width(), mask.height());
    let mut out = format!("P4\n{w} {h}\n").into_bytes();
    let row_bytes = w.div_ceil(8);
    for y in 0..h {
        let mut row = vec![0u8; row_bytes];
        for x in 0..w {
            if mask.get(x, y) {
                row[x / 8] |= 0x80 >> (x % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    out
}

pub fn decode_pbm(bytes: &[u8], path: &Path) -> Result<MaskImage> {
    let (tokens, offset) = read_header(bytes, 3, path)?;
    if tokens[0] != "P4" {
        return Err(Error::MalformedPixmap {
            path: path.to_path_buf(),
            reason: format!("magic {:?} is not P4", tokens[0]),
        });
    }
    let w = parse_dim(tokens[1], path)?;
    let h = parse_dim(tokens[2], path)?;
    let row_bytes = w.div_ceil(8);
    let raster = &bytes[offset..];
    if raster.len() != row_bytes * h {
        return Err(Error::MalformedPixmap {
            path: path.to_path_buf(),
            reason: format!("raster has {} bytes, expected {}", raster.len(), row_bytes * h),
        });
    }
    let mut mask = MaskImage::empty(w, h);
    for y in 0..h {
        for x in 0..w {
            if raster[y * row_bytes + x / 8] & (0x80 >> (x % 8)) != 0 {
                mask.set(x, y, true);
            }
        }
    }
    Ok(mask)
}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<()> {
    fs::write(&path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes `frame_%06d.ppm` files into `dir`, creating it if needed.
pub fn save_frame_sequence(seq: &FrameSequence, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, frame) in seq.frames().iter().enumerate() {
        write_file(dir.join(indexed_name(FRAME_PREFIX, i, "ppm")), &encode_ppm(frame))?;
    }
    Ok(())
}

/// Loads `frame_%06d.ppm` files, which must be consecutive from index 0.
pub fn load_frame_sequence(dir: &Path, fps: f64) -> Result<FrameSequence> {
    let n = consecutive_indices(dir, FRAME_PREFIX, "ppm")?;
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let path = dir.join(indexed_name(FRAME_PREFIX, i, "ppm"));
        frames.push(decode_ppm(&read_file(&path)?, &path)?);
    }
    let source_id = dir
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string();
    FrameSequence::new(frames, fps, source_id)
}

pub fn save_masks(masks: &[MaskImage], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, m) in masks.iter().enumerate() {
        write_file(dir.join(indexed_name(MASK_PREFIX, i, "pbm")), &encode_pbm(m))?;
    }
    Ok(())
}

pub fn load_masks(dir: &Path) -> Result<Vec<MaskImage>> {
    let n = consecutive_indices(dir, MASK_PREFIX, "pbm")?;
    (0..n)
        .map(|i| {
            let path = dir.join(indexed_name(MASK_PREFIX, i, "pbm"));
            decode_pbm(&read_file(&path)?, &path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(n: usize, side: usize) -> FrameSequence {
        let frames = (0..n)
            .map(|k| Frame::from_fn(side, side, |x, y| [(x * 3 + k) as u8, (y * 5) as u8, (x ^ y) as u8]))
            .collect();
        FrameSequence::new(frames, 20.0, "t").unwrap()
    }

    #[test]
    fn header_is_bit_exact() {
        let f = Frame::filled(2, 1, [1, 2, 3]);
        assert_eq!(encode_ppm(&f), b"P6\n2 1\n255\n\x01\x02\x03\x01\x02\x03".to_vec());
    }

    #[test]
    fn three_frames_load_at_requested_fps() {
        let dir = tempfile::tempdir().unwrap();
        let s = seq(3, 72);
        save_frame_sequence(&s, dir.path()).unwrap();
        let loaded = load_frame_sequence(dir.path(), 20.0).unwrap();
        assert_eq!(loaded.len(), 3);
        assert_eq!(loaded.fps(), 20.0);
        assert_eq!(loaded.frames(), s.frames());
    }

    #[test]
    fn empty_dir_is_missing_frame_zero() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_frame_sequence(dir.path(), 20.0).unwrap_err();
        assert!(matches!(err, Error::MissingFrame { index: 0, .. }));
    }

    #[test]
    fn gap_names_the_missing_index() {
        let dir = tempfile::tempdir().unwrap();
        save_frame_sequence(&seq(4, 8), dir.path()).unwrap();
        fs::remove_file(dir.path().join("frame_000002.ppm")).unwrap();
        let err = load_frame_sequence(dir.path(), 20.0).unwrap_err();
        assert!(matches!(err, Error::MissingFrame { index: 2, .. }), "{err}");
    }

    #[test]
    fn mixed_sizes_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_frame_sequence(&seq(2, 8), dir.path()).unwrap();
        fs::write(dir.path().join("frame_000002.ppm"), encode_ppm(&Frame::filled(9, 8, [0; 3]))).unwrap();
        let err = load_frame_sequence(dir.path(), 20.0).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { index: 2, .. }));
    }

    #[test]
    fn malformed_pixmaps() {
        let p = Path::new("x.ppm");
        assert!(decode_ppm(b"P5\n1 1\n255\n\0", p).is_err());
        assert!(decode_ppm(b"P6\n1 1\n65535\n\0\0\0\0\0\0", p).is_err());
        assert!(decode_ppm(b"P6\n2 2\n255\n\0\0\0", p).is_err());
        assert!(decode_ppm(b"P6\n1 1\n255", p).is_err());
        // comments in the header are legal
        let f = decode_ppm(b"P6\n# c\n1 1\n255\n\x07\x08\x09", p).unwrap();
        assert_eq!(f.pixel(0, 0), [7, 8, 9]);
    }

    #[test]
    fn pbm_round_trip_with_odd_width() {
        let mut m = MaskImage::empty(11, 3);
        m.set(0, 0, true);
        m.set(10, 2, true);
        m.set(7, 1, true);
        let bytes = encode_pbm(&m);
        assert!(bytes.starts_with(b"P4\n11 3\n"));
        assert_eq!(decode_pbm(&bytes, Path::new("m.pbm")).unwrap(), m);
    }

    #[test]
    fn ignores_unrelated_files() {
        let dir = tempfile::tempdir().unwrap();
        save_frame_sequence(&seq(2, 4), dir.path()).unwrap();
        fs::write(dir.path().join("landmarks.csv"), "frame,idx,x,y\n").unwrap();
        fs::write(dir.path().join("frame_12.ppm"), "junk").unwrap();
        assert_eq!(load_frame_sequence(dir.path(), 30.0).unwrap().len(), 2);
    }
}
