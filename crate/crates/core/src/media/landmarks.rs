use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::{LandmarkSet, Point, LANDMARK_COUNT};
use crate::error::{Error, Result};

const HEADER: [&str; 4] = ["frame", "idx", "x", "y"];

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedCsv {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

struct Pending {
    frame: usize,
    points: [Option<Point>; LANDMARK_COUNT],
    rows: usize,
}

impl Pending {
    fn new(frame: usize) -> Self {
        Self {
            frame,
            points: [None; LANDMARK_COUNT],
            rows: 0,
        }
    }

    fn finish(self) -> Result<LandmarkSet> {
        let wrong = Error::WrongPointCount {
            frame: self.frame,
            count: self.rows,
        };
        if self.rows != LANDMARK_COUNT {
            return Err(wrong);
        }
        let mut points = [Point::default(); LANDMARK_COUNT];
        for (dst, src) in points.iter_mut().zip(self.points) {
            *dst = src.ok_or(Error::WrongPointCount {
                frame: self.frame,
                count: self.rows,
            })?;
        }
        Ok(LandmarkSet::new(points))
    }
}

/// Reads a `frame,idx,x,y` CSV into one landmark set per frame.
pub fn load_landmarks(path: &Path) -> Result<Vec<LandmarkSet>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = reader.headers().map_err(|e| malformed(path, e.to_string()))?;
    if header.iter().ne(HEADER) {
        return Err(malformed(path, format!("header must be frame,idx,x,y, got {header:?}")));
    }

    let mut out = Vec::new();
    let mut pending: Option<Pending> = None;
    for record in reader.records() {
        let record = record.map_err(|e| malformed(path, e.to_string()))?;
        let field = |i: usize| record.get(i).ok_or_else(|| malformed(path, "short row"));
        let frame: usize = field(0)?
            .parse()
            .map_err(|_| malformed(path, format!("bad frame index {:?}", &record[0])))?;
        let idx: usize = field(1)?
            .parse()
            .map_err(|_| malformed(path, format!("bad point index {:?}", &record[1])))?;
        let x: f64 = field(2)?.parse().map_err(|_| malformed(path, "bad x"))?;
        let y: f64 = field(3)?.parse().map_err(|_| malformed(path, "bad y"))?;

        let current = pending.as_ref().map(|p| p.frame);
        if current != Some(frame) {
            let expected = current.map_or(0, |c| c + 1);
            if frame != expected {
                return Err(Error::NonMonotonicFrames {
                    previous: current,
                    found: frame,
                });
            }
            if let Some(done) = pending.take() {
                out.push(done.finish()?);
            }
            pending = Some(Pending::new(frame));
        }
        let p = pending.as_mut().expect("set above");
        p.rows += 1;
        if idx >= LANDMARK_COUNT || p.points[idx].is_some() {
            return Err(Error::WrongPointCount {
                frame,
                count: p.rows,
            });
        }
        p.points[idx] = Some(Point::new(x, y));
    }
    if let Some(done) = pending {
        out.push(done.finish()?);
    }
    Ok(out)
}

/// Writes landmark sets with four decimal places.
pub fn save_landmarks(sets: &[LandmarkSet], path: &Path) -> Result<()> {
    let mut text = String::from("frame,idx,x,y\n");
    for (frame, set) in sets.iter().enumerate() {
        for (idx, p) in set.points().iter().enumerate() {
            text.push_str(&format!("{frame},{idx},{:.4},{:.4}\n", p.x, p.y));
        }
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
