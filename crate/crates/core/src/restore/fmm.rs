//! Fast-marching inpainting.
//!
//! Arrival times `T` are propagated inward from the known pixels bordering the
//! mask. A masked pixel is filled when it leaves the heap, so pixels are
//! painted in nondecreasing `T`. Each is the weighted mean of first-order
//! extrapolations `I(q) + grad I(q) . (p - q)` from valid pixels `q` within
//! `epsilon`, weighted by direction, distance and level-set agreement.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::media::{quantize, Frame};
use crate::degrade::MaskImage;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FmmParams {
    pub epsilon: f64,
}

impl Default for FmmParams {
    fn default() -> Self {
        Self { epsilon: 5.0 }
    }
}

impl FmmParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon >= 1.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be >= 1, got {epsilon}")));
        }
        Ok(Self { epsilon })
    }
}

/// One painted pixel: row-major index and its arrival time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceStep {
    pub index: usize,
    pub t: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Known,
    Band,
    Inside,
}

#[derive(PartialEq)]
struct Item {
    t: f64,
    index: usize,
}

impl Eq for Item {}

impl Ord for Item {
    // BinaryHeap is a max-heap; invert so the smallest (t, index) pops first
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn fmm_inpaint(frame: &Frame, mask: &MaskImage, params: &FmmParams) -> Result<Frame> {
    fmm_inpaint_traced(frame, mask, params).map(|(f, _)| f)
}

/// Like [`fmm_inpaint`], also returning the painting order.
pub fn fmm_inpaint_traced(
    frame: &Frame,
    mask: &MaskImage,
    params: &FmmParams,
) -> Result<(Frame, Vec<TraceStep>)> {
    FmmParams::new(params.epsilon)?;
    if !mask.matches(frame) {
        return Err(Error::SizeMismatch(frame.width(), frame.height(), mask.width(), mask.height()));
    }
    if mask.is_clear() {
        return Ok((frame.clone(), Vec::new()));
    }
    if mask.count() == frame.pixel_count() {
        return Err(Error::AllMasked);
    }
    let mut m = Marcher::new(frame, mask);
    let trace = m.run(params.epsilon);
    Ok((m.into_frame(), trace))
}

struct Marcher {
    w: usize,
    h: usize,
    state: Vec<State>,
    t: Vec<f64>,
    valid: Vec<bool>,
    img: Vec<[f64; 3]>,
    heap: BinaryHeap<Item>,
}

impl Marcher {
    fn new(frame: &Frame, mask: &MaskImage) -> Self {
        let (w, h) = (frame.width(), frame.height());
        let bits = mask.bits();
        let img = frame
            .as_bytes()
            .chunks_exact(3)
            .map(|p| [f64::from(p[0]), f64::from(p[1]), f64::from(p[2])])
            .collect();
        let mut m = Self {
            w,
            h,
            state: bits.iter().map(|&b| if b { State::Inside } else { State::Known }).collect(),
            t: bits.iter().map(|&b| if b { f64::INFINITY } else { 0.0 }).collect(),
            valid: bits.iter().map(|&b| !b).collect(),
            img,
            heap: BinaryHeap::new(),
        };
        for i in 0..w * h {
            if !bits[i] && m.neighbours(i).any(|n| bits[n]) {
                m.state[i] = State::Band;
                m.heap.push(Item { t: 0.0, index: i });
            }
        }
        m
    }

    fn neighbours(&self, i: usize) -> impl Iterator<Item = usize> {
        let (x, y, w, h) = (i % self.w, i / self.w, self.w, self.h);
        [
            (y > 0).then(|| i - w),
            (x > 0).then(|| i - 1),
            (x + 1 < w).then(|| i + 1),
            (y + 1 < h).then(|| i + w),
        ]
        .into_iter()
        .flatten()
    }

    /// Arrival time at `i` from the one or two upwind neighbours `a`, `b`.
    fn solve_pair(&self, a: Option<usize>, b: Option<usize>) -> f64 {
        let known = |n: Option<usize>| n.filter(|&n| self.state[n] != State::Inside).map(|n| self.t[n]);
        match (known(a), known(b)) {
            (Some(t1), Some(t2)) => {
                let d = t1 - t2;
                if d.abs() <= 1.0 {
                    (t1 + t2 + (2.0 - d * d).sqrt()) / 2.0
                } else {
                    1.0 + t1.min(t2)
                }
            }
            (Some(t), None) | (None, Some(t)) => 1.0 + t,
            (None, None) => f64::INFINITY,
        }
    }

    fn solve(&self, i: usize) -> f64 {
        let (x, y) = (i % self.w, i / self.w);
        let up = (y > 0).then(|| i - self.w);
        let down = (y + 1 < self.h).then(|| i + self.w);
        let left = (x > 0).then(|| i - 1);
        let right = (x + 1 < self.w).then(|| i + 1);
        [(up, left), (down, left), (up, right), (down, right)]
            .into_iter()
            .map(|(a, b)| self.solve_pair(a, b))
            .fold(f64::INFINITY, f64::min)
    }

    fn run(&mut self, epsilon: f64) -> Vec<TraceStep> {
        let mut trace = Vec::new();
        while let Some(Item { t, index }) = self.heap.pop() {
            if self.state[index] == State::Known || t != self.t[index] {
                continue;
            }
            self.state[index] = State::Known;
            if !self.valid[index] {
                self.paint(index, epsilon);
                self.valid[index] = true;
                trace.push(TraceStep { index, t });
            }
            let nbrs: Vec<usize> = self.neighbours(index).collect();
            for n in nbrs {
                if self.state[n] == State::Known {
                    continue;
                }
                let cand = self.solve(n).max(t);
                if cand < self.t[n] {
                    self.t[n] = cand;
                    self.state[n] = State::Band;
                    self.heap.push(Item { t: cand, index: n });
                }
            }
        }
        trace
    }

    /// Derivative of `values` along one axis at `i`, using only entries for
    /// which `ok` holds: central where possible, one-sided otherwise.
    fn derivative(
        &self,
        i: usize,
        prev: Option<usize>,
        next: Option<usize>,
        ok: impl Fn(usize) -> bool,
        value: impl Fn(usize) -> f64,
    ) -> f64 {
        match (prev.filter(|&n| ok(n)), next.filter(|&n| ok(n))) {
            (Some(p), Some(n)) => (value(n) - value(p)) / 2.0,
            (None, Some(n)) => value(n) - value(i),
            (Some(p), None) => value(i) - value(p),
            (None, None) => 0.0,
        }
    }

    fn axis_neighbours(&self, i: usize) -> [(Option<usize>, Option<usize>); 2] {
        let (x, y) = (i % self.w, i / self.w);
        [
            ((x > 0).then(|| i - 1), (x + 1 < self.w).then(|| i + 1)),
            ((y > 0).then(|| i - self.w), (y + 1 < self.h).then(|| i + self.w)),
        ]
    }

    fn paint(&mut self, p: usize, epsilon: f64) {
        let [ax, ay] = self.axis_neighbours(p);
        let finite = |n: usize| self.t[n].is_finite();
        let tv = |n: usize| self.t[n];
        let gx = self.derivative(p, ax.0, ax.1, finite, tv);
        let gy = self.derivative(p, ay.0, ay.1, finite, tv);
        let gnorm = gx.hypot(gy);
        let normal = if gnorm > 0.0 { [gx / gnorm, gy / gnorm] } else { [0.0, 0.0] };

        let (px, py) = ((p % self.w) as isize, (p / self.w) as isize);
        let reach = epsilon.floor() as isize;
        let mut acc = [0.0; 3];
        let mut wsum = 0.0;
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let (qx, qy) = (px + dx, py + dy);
                if qx < 0 || qy < 0 || qx >= self.w as isize || qy >= self.h as isize {
                    continue;
                }
                let q = qy as usize * self.w + qx as usize;
                let len2 = (dx * dx + dy * dy) as f64;
                if q == p || len2 > epsilon * epsilon || !self.valid[q] {
                    continue;
                }
                // r = p - q
                let (rx, ry) = (-dx as f64, -dy as f64);
                let len = len2.sqrt();
                let mut dir = ((rx * normal[0] + ry * normal[1]) / len).abs();
                if dir <= 0.01 {
                    dir = 1e-6;
                }
                let dst = 1.0 / len2;
                let lev = 1.0 / (1.0 + (self.t[p] - self.t[q]).abs());
                let wt = dir * dst * lev;

                let [qax, qay] = self.axis_neighbours(q);
                for c in 0..3 {
                    let ok = |n: usize| self.valid[n];
                    let val = |n: usize| self.img[n][c];
                    let ix = self.derivative(q, qax.0, qax.1, ok, val);
                    let iy = self.derivative(q, qay.0, qay.1, ok, val);
                    acc[c] += wt * (self.img[q][c] + ix * rx + iy * ry);
                }
                wsum += wt;
            }
        }
        if wsum > 0.0 {
            self.img[p] = acc.map(|v| (v / wsum).clamp(0.0, 255.0));
        } else {
            // no valid pixel within reach: copy the upwind neighbour
            let src = self
                .neighbours(p)
                .filter(|&n| self.valid[n])
                .min_by(|&a, &b| self.t[a].total_cmp(&self.t[b]).then(a.cmp(&b)))
                .expect("popped pixels have a finalized neighbour");
            self.img[p] = self.img[src];
        }
    }

    fn into_frame(self) -> Frame {
        let data = self.img.iter().flat_map(|p| p.map(quantize)).collect();
        Frame::new(self.w, self.h, data).expect("same dimensions")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_mask(n: usize, x0: usize, y0: usize, side: usize) -> MaskImage {
        MaskImage::from_fn(n, n, |x, y| (x0..x0 + side).contains(&x) && (y0..y0 + side).contains(&y))
    }

    #[test]
    fn empty_mask_is_identity() {
        let f = Frame::from_fn(9, 7, |x, y| [x as u8, y as u8, 3]);
        let out = fmm_inpaint(&f, &MaskImage::empty(9, 7), &FmmParams::default()).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn constant_frame_stays_constant() {
        let f = Frame::filled(20, 20, [40, 120, 200]);
        let mut masked = f.clone();
        let mask = square_mask(20, 3, 5, 9);
        for y in 0..20 {
            for x in 0..20 {
                if mask.get(x, y) {
                    masked.set_pixel(x, y, [255, 255, 255]);
                }
            }
        }
        assert_eq!(fmm_inpaint(&masked, &mask, &FmmParams::default()).unwrap(), f);
    }

    #[test]
    fn linear_gradient_is_recovered() {
        // analytic ground truth: value = 3.5 * x + 10
        let truth = |x: usize| 3.5 * x as f64 + 10.0;
        let f = Frame::from_fn(72, 72, |x, _| [quantize(truth(x)); 3]);
        let mask = square_mask(72, 31, 31, 10);
        let mut masked = f.clone();
        for y in 31..41 {
            for x in 31..41 {
                masked.set_pixel(x, y, [255; 3]);
            }
        }
        let out = fmm_inpaint(&masked, &mask, &FmmParams::new(5.0).unwrap()).unwrap();
        let mut worst = 0.0f64;
        for y in 0..72 {
            for x in 0..72 {
                let err = (f64::from(out.channel(x, y, 0)) - truth(x)).abs();
                worst = worst.max(err);
                if !mask.get(x, y) {
                    assert_eq!(out.pixel(x, y), f.pixel(x, y));
                }
            }
        }
        assert!(worst <= 8.0, "worst error {worst}");
    }

    #[test]
    fn trace_is_nondecreasing_and_complete() {
        let f = Frame::from_fn(16, 16, |x, y| [(x * 9) as u8, (y * 11) as u8, 50]);
        let mask = MaskImage::from_fn(16, 16, |x, y| (x as isize - 8).pow(2) + (y as isize - 7).pow(2) < 20);
        let (_, trace) = fmm_inpaint_traced(&f, &mask, &FmmParams::default()).unwrap();
        assert_eq!(trace.len(), mask.count());
        assert!(trace.windows(2).all(|w| w[0].t <= w[1].t));
        assert!(trace.iter().all(|s| mask.bits()[s.index]));
    }

    #[test]
    fn distance_grows_inward() {
        let f = Frame::filled(21, 21, [0; 3]);
        let mask = square_mask(21, 5, 5, 11);
        let (_, trace) = fmm_inpaint_traced(&f, &mask, &FmmParams::default()).unwrap();
        let t_of = |x: usize, y: usize| trace.iter().find(|s| s.index == y * 21 + x).unwrap().t;
        assert_eq!(t_of(5, 10), 1.0);
        assert!(t_of(10, 10) > t_of(7, 10));
        assert!((t_of(10, 10) - 6.0).abs() < 1.0);
    }

    #[test]
    fn all_masked_errors() {
        let f = Frame::filled(4, 4, [1; 3]);
        let mask = MaskImage::from_fn(4, 4, |_, _| true);
        assert!(matches!(fmm_inpaint(&f, &mask, &FmmParams::default()), Err(Error::AllMasked)));
    }

    #[test]
    fn mismatched_mask_errors() {
        let f = Frame::filled(4, 4, [1; 3]);
        assert!(fmm_inpaint(&f, &MaskImage::empty(4, 5), &FmmParams::default()).is_err());
        assert!(FmmParams::new(0.5).is_err());
    }
}
