//! Misassignment probability versus acquisition time.
//!
//! Since every template shares the ring-up factor `r_k`, the squared
//! distance to template `s` over `K` samples is
//! `|p_s|^2 sum r_k^2 - 2 p_s . sum r_k z_k` plus a term common to all
//! templates. Only the running vector `sum r_k z_k` is needed; its noise
//! part over a block of samples is one Gaussian draw with variance
//! `sigma^2 sum r_k^2`, so a whole curve costs one draw pair per grid point.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{sample_count, sample_jumps, Level, ResponseTemplates};
use crate::error::{Error, Result};
use crate::par::map_chunks;
use crate::params::SystemParams;
use crate::rng::RandomStream;

/// Point radius over per-sample noise that puts the best aggregate g/h
/// error near 4.0e-4 at the device rates.
pub const DEFAULT_SNR: f64 = 0.36;

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSettings {
    pub templates: ResponseTemplates,
    pub dt: f64,
    /// Acquisition times, increasing multiples of `dt`.
    pub tm_grid: Vec<f64>,
}

impl CurveSettings {
    pub fn new(templates: ResponseTemplates, dt: f64, tm_grid: Vec<f64>) -> Result<Self> {
        templates.validate()?;
        let mut prev = 0;
        for &t in &tm_grid {
            let k = sample_count(t, dt)?;
            if k <= prev {
                return Err(Error::invalid("tm_grid", "must be strictly increasing"));
            }
            prev = k;
        }
        if tm_grid.is_empty() {
            return Err(Error::invalid("tm_grid", "empty"));
        }
        Ok(Self { templates, dt, tm_grid })
    }

    fn grid_counts(&self) -> Vec<usize> {
        self.tm_grid
            .iter()
            .map(|&t| sample_count(t, self.dt).expect("validated"))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t_m: f64,
    pub level: Level,
    /// `P(not g)` for g, `P(g)` for excited levels.
    pub misassignment: f64,
    pub stderr: f64,
    pub errors: u64,
    pub trials: u64,
}

/// Labels of one simulated trial at each grid point, from the sufficient
/// statistic.
pub(crate) struct FastClassifier<'a> {
    settings: &'a CurveSettings,
    counts: Vec<usize>,
    /// `cum_r2[k] = sum_{j < k} r_j^2`
    cum_r2: Vec<f64>,
}

impl<'a> FastClassifier<'a> {
    pub(crate) fn new(settings: &'a CurveSettings) -> Self {
        let counts = settings.grid_counts();
        let k_max = *counts.last().expect("non-empty grid");
        let mut cum_r2 = Vec::with_capacity(k_max + 1);
        let mut acc = 0.0;
        cum_r2.push(0.0);
        for j in 0..k_max {
            let r = settings.templates.ring_up((j + 1) as f64 * settings.dt);
            acc += r * r;
            cum_r2.push(acc);
        }
        Self {
            settings,
            counts,
            cum_r2,
        }
    }

    /// Index of the first sample taken at or after `time`.
    fn sample_index(&self, time: f64) -> usize {
        ((time / self.settings.dt).ceil() as usize).saturating_sub(1)
    }

    pub(crate) fn labels<R: Rng + ?Sized>(
        &self,
        initial: Level,
        params: &SystemParams,
        rng: &mut R,
        out: &mut Vec<Level>,
    ) {
        out.clear();
        let tmpl = &self.settings.templates;
        let k_max = *self.counts.last().expect("non-empty grid");
        let jumps = sample_jumps(initial, params, k_max as f64 * self.settings.dt, rng);
        // level runs as (first sample index, level)
        let mut runs: Vec<(usize, Level)> = vec![(0, initial)];
        for j in &jumps {
            let idx = self.sample_index(j.time);
            match runs.last_mut() {
                Some(last) if last.0 == idx => last.1 = j.to,
                _ => runs.push((idx, j.to)),
            }
        }
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut run = 0;
        let mut k0 = 0;
        for &k1 in &self.counts {
            // deterministic part over samples [k0, k1)
            let mut a = k0;
            while a < k1 {
                while run + 1 < runs.len() && runs[run + 1].0 <= a {
                    run += 1;
                }
                let b = if run + 1 < runs.len() { runs[run + 1].0.min(k1) } else { k1 };
                let w = self.cum_r2[b] - self.cum_r2[a];
                let (px, py) = tmpl.points[runs[run].1.index()];
                sx += w * px;
                sy += w * py;
                a = b;
            }
            let s = tmpl.noise_std * (self.cum_r2[k1] - self.cum_r2[k0]).sqrt();
            let nx: f64 = rng.sample(StandardNormal);
            let ny: f64 = rng.sample(StandardNormal);
            sx += s * nx;
            sy += s * ny;
            k0 = k1;

            let r2 = self.cum_r2[k1];
            let mut best = (f64::INFINITY, Level::G);
            for level in Level::ALL {
                let (px, py) = tmpl.points[level.index()];
                let score = (px * px + py * py) * r2 - 2.0 * (px * sx + py * sy);
                if score < best.0 {
                    best = (score, level);
                }
            }
            out.push(best.1);
        }
    }
}

fn is_error(initial: Level, label: Level) -> bool {
    match initial {
        Level::G => label != Level::G,
        _ => label == Level::G,
    }
}

/// For g, the probability of an excited label; for e, f, h the probability
/// of a g label, at every acquisition time of the grid.
pub fn misassignment_curves(
    levels: &[Level],
    settings: &CurveSettings,
    trials: u64,
    params: &SystemParams,
    stream: &RandomStream,
) -> Result<Vec<CurvePoint>> {
    if trials == 0 {
        return Err(Error::invalid("trials", "need at least one"));
    }
    let fast = FastClassifier::new(settings);
    let g = settings.tm_grid.len();
    let mut out = Vec::with_capacity(levels.len() * g);
    for &level in levels {
        let family = stream.derive(&format!("curve/{}", level.label()));
        let parts = map_chunks(trials, |range| {
            let mut errors = vec![0u64; g];
            let mut labels = Vec::with_capacity(g);
            for t in range {
                fast.labels(level, params, &mut family.at(t).rng(), &mut labels);
                for (e, &l) in errors.iter_mut().zip(&labels) {
                    *e += is_error(level, l) as u64;
                }
            }
            errors
        });
        let mut errors = vec![0u64; g];
        for p in parts {
            errors.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
        }
        for (i, &t_m) in settings.tm_grid.iter().enumerate() {
            let p = errors[i] as f64 / trials as f64;
            out.push(CurvePoint {
                t_m,
                level,
                misassignment: p,
                stderr: (p * (1.0 - p) / trials as f64).sqrt(),
                errors: errors[i],
                trials,
            });
        }
    }
    Ok(out)
}
