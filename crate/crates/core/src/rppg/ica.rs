//! FastICA on standardized, whitened traces: cubic nonlinearity, deflation,
//! seeded initialization.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::transforms::MIN_TRACE_LEN;
use super::{PulseSignal, RgbTrace, Warning};
use crate::error::{Error, Result};
use crate::signal::{band_peak_fraction, mean_std, TRANSFORM_BAND};

const TOLERANCE: f64 = 1e-6;
const MAX_ITER: usize = 200;
/// Whitened directions with smaller relative variance are dropped.
const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IcaSelect {
    /// The second extracted component.
    Second,
    /// The component with the sharpest in-band spectral peak.
    Periodic,
}

impl IcaSelect {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "second" => Ok(IcaSelect::Second),
            "periodic" => Ok(IcaSelect::Periodic),
            other => Err(Error::InvalidParameter(format!("unknown ICA selection {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IcaSelect::Second => "second",
            IcaSelect::Periodic => "periodic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IcaParams {
    pub seed: u64,
    pub select: IcaSelect,
}

impl Default for IcaParams {
    fn default() -> Self {
        Self { seed: 0, select: IcaSelect::Second }
    }
}

/// All extracted components in deflation order, plus whether every unit
/// converged.
pub fn ica_components(trace: &RgbTrace, seed: u64) -> Result<(Vec<Vec<f64>>, bool)> {
    if trace.len() < MIN_TRACE_LEN {
        return Err(Error::TooShort { needed: MIN_TRACE_LEN, available: trace.len() });
    }
    let t = trace.len();
    let mut x = [vec![0.0; t], vec![0.0; t], vec![0.0; t]];
    for c in 0..3 {
        let col = trace.column(c);
        let (mean, sd) = mean_std(&col);
        if sd == 0.0 {
            return Err(Error::ConstantChannel(c));
        }
        x[c] = col.iter().map(|v| (v - mean) / sd).collect();
    }

    let mut cov = Matrix3::zeros();
    for i in 0..t {
        let v = Vector3::new(x[0][i], x[1][i], x[2][i]);
        cov += v * v.transpose();
    }
    cov /= t as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    let dims: Vec<usize> = order.into_iter().filter(|&k| eig.eigenvalues[k] > top * RANK_TOL).collect();
    let d = dims.len();

    // whitened data, one row per retained direction
    let z: Vec<Vec<f64>> = dims
        .iter()
        .map(|&k| {
            let e = eig.eigenvectors.column(k);
            let s = eig.eigenvalues[k].sqrt();
            (0..t).map(|i| (e[0] * x[0][i] + e[1] * x[1][i] + e[2] * x[2][i]) / s).collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut converged = true;
    let orthonormalize = |w: &mut Vec<f64>, found: &[Vec<f64>]| {
        for f in found {
            let dot: f64 = w.iter().zip(f).map(|(a, b)| a * b).sum();
            for (a, b) in w.iter_mut().zip(f) {
                *a -= dot * b;
            }
        }
        let n = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        w.iter_mut().for_each(|a| *a /= n);
    };
    for _ in 0..d {
        let mut w: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        orthonormalize(&mut w, &found);
        let mut ok = false;
        for _ in 0..MAX_ITER {
            let mut next = vec![0.0; d];
            for i in 0..t {
                let y: f64 = (0..d).map(|k| w[k] * z[k][i]).sum();
                let y3 = y * y * y;
                for k in 0..d {
                    next[k] += z[k][i] * y3;
                }
            }
            for k in 0..d {
                next[k] = next[k] / t as f64 - 3.0 * w[k];
            }
            orthonormalize(&mut next, &found);
            let dot: f64 = next.iter().zip(&w).map(|(a, b)| a * b).sum();
            w = next;
            if (1.0 - dot.abs()).abs() < TOLERANCE {
                ok = true;
                break;
            }
        }
        converged &= ok;
        found.push(w);
    }

    let components = found
        .iter()
        .map(|w| (0..t).map(|i| (0..d).map(|k| w[k] * z[k][i]).sum()).collect())
        .collect();
    Ok((components, converged))
}

pub fn ica(trace: &RgbTrace, params: &IcaParams) -> Result<PulseSignal> {
    let (components, converged) = ica_components(trace, params.seed)?;
    let index = match params.select {
        IcaSelect::Second => 1.min(components.len() - 1),
        IcaSelect::Periodic => {
            let score = |c: &Vec<f64>| band_peak_fraction(c, trace.fps(), TRANSFORM_BAND.0, TRANSFORM_BAND.1);
            (0..components.len())
                .max_by(|&a, &b| score(&components[a]).total_cmp(&score(&components[b])).then(b.cmp(&a)))
                .expect("at least one component")
        }
    };
    let mut s = components[index].clone();
    let g = trace.column(1);
    let (gm, _) = mean_std(&g);
    let cov: f64 = s.iter().zip(&g).map(|(a, b)| a * (b - gm)).sum();
    if cov < 0.0 {
        s.iter_mut().for_each(|v| *v = -*v);
    }
    let mut out = PulseSignal::unit_variance(s, trace.fps());
    if components.len() < 2 && params.select == IcaSelect::Second {
        out.warning = Some(Warning::RankDeficient);
    } else if !converged {
        out.warning = Some(Warning::NotConverged);
    }
    Ok(out)
}
