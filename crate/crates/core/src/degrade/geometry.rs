use super::MaskImage;
use crate::error::{Error, Result};
use crate::media::{Frame, LandmarkSet, Point};

const RIGHT_EYE: std::ops::RangeInclusive<usize> = 36..=41;
const LEFT_EYE: std::ops::RangeInclusive<usize> = 42..=47;
const RIGHT_EYE_OUTER: usize = 36;
const LEFT_EYE_OUTER: usize = 45;
const BROW_MIDS: [usize; 2] = [19, 24];
const NOSE_BRIDGE_SECOND: usize = 28;
/// Jaw points used for the facemask contour, in order.
const FACEMASK_JAW: std::ops::RangeInclusive<usize> = 1..=15;

const MAJOR_SCALE: f64 = 1.25;
const MINOR_SCALE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    pub center: Point,
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Orientation of the major axis, radians, counter-clockwise from +x in
    /// image coordinates.
    pub angle: f64,
}

impl Ellipse {
    pub fn contains(&self, p: Point) -> bool {
        let (s, c) = self.angle.sin_cos();
        let (dx, dy) = (p.x - self.center.x, p.y - self.center.y);
        let u = (dx * c + dy * s) / self.semi_major;
        let v = (-dx * s + dy * c) / self.semi_minor;
        u * u + v * v <= 1.0
    }
}

/// Closed simple polygon (the last vertex connects back to the first).
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test, touching counts.
fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d))
        || (d2 == 0.0 && on_segment(b, c, d))
        || (d3 == 0.0 && on_segment(c, a, b))
        || (d4 == 0.0 && on_segment(d, a, b))
}

impl Polygon {
    /// Validates that the contour is simple and encloses positive area.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::ZeroAreaPolygon);
        }
        let poly = Self { vertices };
        let scale = poly
            .vertices
            .iter()
            .map(|p| p.x.abs().max(p.y.abs()))
            .fold(1.0f64, f64::max);
        if !poly.is_simple() {
            return Err(Error::SelfIntersectingPolygon);
        }
        if poly.signed_area().abs() <= 1e-12 * scale * scale {
            return Err(Error::ZeroAreaPolygon);
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
    }

    fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    /// No two non-adjacent edges meet, and adjacent edges do not fold back
    /// onto each other.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = self.edge(i);
            let (_, c) = self.edge((i + 1) % n);
            if cross(a, b, c) == 0.0 && (b.x - a.x) * (c.x - b.x) + (b.y - a.y) * (c.y - b.y) < 0.0 {
                return false;
            }
            if a == b {
                return false;
            }
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = self.edge(j);
                if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    /// Even-odd ray casting.
    pub fn contains(&self, p: Point) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (vi, vj) = (self.vertices[i], self.vertices[j]);
            if (vi.y > p.y) != (vj.y > p.y)
                && p.x < (vj.x - vi.x) * (p.y - vi.y) / (vj.y - vi.y) + vi.x
            {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MaskShape {
    Ellipse(Ellipse),
    Polygon(Polygon),
}

impl MaskShape {
    pub fn contains(&self, p: Point) -> bool {
        match self {
            MaskShape::Ellipse(e) => e.contains(p),
            MaskShape::Polygon(poly) => poly.contains(p),
        }
    }
}

/// Sunglasses-like ellipse over both eyes.
///
/// Centre is the midpoint of the two eye centres and the major axis follows
/// the line joining them. The major semi-axis is 1.25 times half the outer
/// eye-corner distance; the minor semi-axis is half the distance from the
/// eyebrow midpoint to the second nose-bridge point.
pub fn eyemask_geometry(lm: &LandmarkSet) -> Result<Ellipse> {
    let right = lm.mean_of(RIGHT_EYE);
    let left = lm.mean_of(LEFT_EYE);
    if right.dist(left) <= 1e-12 {
        return Err(Error::DegenerateGeometry("eye centres coincide"));
    }
    let semi_major = 0.5 * lm.get(RIGHT_EYE_OUTER).dist(lm.get(LEFT_EYE_OUTER)) * MAJOR_SCALE;
    let brow = lm.mean_of(BROW_MIDS);
    let semi_minor = brow.dist(lm.get(NOSE_BRIDGE_SECOND)) * MINOR_SCALE;
    if !(semi_major > 0.0 && semi_minor > 0.0) {
        return Err(Error::DegenerateGeometry("ellipse axis has zero length"));
    }
    Ok(Ellipse {
        center: right.midpoint(left),
        semi_major,
        semi_minor,
        angle: (left.y - right.y).atan2(left.x - right.x),
    })
}

/// Jaw points 1..=15 followed by the second nose-bridge point.
pub fn facemask_geometry(lm: &LandmarkSet) -> Result<Polygon> {
    let mut vertices: Vec<Point> = FACEMASK_JAW.map(|i| lm.get(i)).collect();
    vertices.push(lm.get(NOSE_BRIDGE_SECOND));
    Polygon::new(vertices)
}

/// Marks every pixel whose centre lies inside the shape.
pub fn rasterize(shape: &MaskShape, width: usize, height: usize) -> MaskImage {
    MaskImage::from_fn(width, height, |x, y| {
        shape.contains(Point::new(x as f64 + 0.5, y as f64 + 0.5))
    })
}

/// ORs the rasterized shape (as white) into the frame. Unmasked pixels are
/// untouched.
pub fn apply_mask(frame: &Frame, shape: &MaskShape) -> (Frame, MaskImage) {
    let mask = rasterize(shape, frame.width(), frame.height());
    let mut out = frame.clone();
    for y in 0..frame.height() {
        for x in 0..frame.width() {
            if mask.get(x, y) {
                let p = out.pixel(x, y);
                out.set_pixel(x, y, [p[0] | 0xFF, p[1] | 0xFF, p[2] | 0xFF]);
            }
        }
    }
    (out, mask)
}
