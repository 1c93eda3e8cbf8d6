//! Continuous two-quadrature readout of a four-level transmon.
//!
//! The resonator response of level `s` rings up toward a fixed IQ point,
//! `zbar_s(t) = p_s (1 - exp(-t / t_rise))`, sampled at `t_k = (k + 1) dt`
//! with white Gaussian noise on each quadrature. Records are classified by
//! the template with the smallest summed squared distance.

mod curves;
mod shelving;

pub use curves::{
    misassignment_curves, CurvePoint, CurveSettings, DEFAULT_SNR,
};
pub use shelving::{rabi_minimum, shelving_rabi, RabiPoint, StagePopulations};

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    G,
    E,
    F,
    H,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::G, Level::E, Level::F, Level::H];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        ["g", "e", "f", "h"][self.index()]
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "g" => Ok(Level::G),
            "e" => Ok(Level::E),
            "f" => Ok(Level::F),
            "h" => Ok(Level::H),
            _ => Err(Error::invalid("level", format!("unknown level `{s}`"))),
        }
    }

    /// Level reached by the next spontaneous transition and its rate.
    fn next(self, params: &SystemParams) -> (Level, f64) {
        match self {
            Level::G => (Level::E, params.ancilla_gamma_up()),
            Level::E => (Level::G, 1.0 / params.ancilla_t1_ge),
            Level::F => (Level::E, 1.0 / params.ancilla_t1_ef),
            Level::H => (Level::F, 1.0 / params.ancilla_t1_fh),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    pub from: Level,
    pub to: Level,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseTemplates {
    /// Steady-state IQ point per level.
    pub points: [(f64, f64); 4],
    /// Standard deviation of each quadrature per sample.
    pub noise_std: f64,
    pub t_rise: f64,
}

impl ResponseTemplates {
    /// Unit-radius points at 0, 90, 180 and 270 degrees for g, e, f, h;
    /// `snr` is the point radius over the per-sample noise.
    pub fn circle(snr: f64, t_rise: f64) -> Result<Self> {
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(Error::invalid("snr", "must be positive"));
        }
        let t = Self {
            points: [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)],
            noise_std: 1.0 / snr,
            t_rise,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_std >= 0.0) {
            return Err(Error::invalid("noise_std", "must be non-negative"));
        }
        if !(self.t_rise >= 0.0) {
            return Err(Error::invalid("t_rise", "must be non-negative"));
        }
        for i in 0..4 {
            for j in 0..i {
                if self.points[i] == self.points[j] {
                    return Err(Error::invalid("points", "levels must map to distinct points"));
                }
            }
        }
        Ok(())
    }

    pub fn ring_up(&self, t: f64) -> f64 {
        if self.t_rise == 0.0 {
            1.0
        } else {
            -(-t / self.t_rise).exp_m1()
        }
    }

    pub fn mean(&self, level: Level, t: f64) -> (f64, f64) {
        let r = self.ring_up(t);
        let (x, y) = self.points[level.index()];
        (r * x, r * y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub samples: Vec<(f64, f64)>,
    pub jump_history: Vec<Jump>,
    pub true_initial_level: Level,
    pub dt: f64,
}

/// Number of samples in `t_m` at spacing `dt`; errors unless `t_m / dt` is a
/// positive integer.
pub fn sample_count(t_m: f64, dt: f64) -> Result<usize> {
    if !(t_m > 0.0) || !(dt > 0.0) {
        return Err(Error::invalid("t_m/dt", "must be positive"));
    }
    let k = (t_m / dt).round();
    if k < 1.0 || ((t_m / dt) - k).abs() > 1e-6 {
        return Err(Error::invalid("t_m", format!("{t_m} is not a multiple of dt = {dt}")));
    }
    Ok(k as usize)
}

/// Level path on `[0, t_end]` from the decay cascade and thermal excitation.
pub fn sample_jumps<R: Rng + ?Sized>(
    initial: Level,
    params: &SystemParams,
    t_end: f64,
    rng: &mut R,
) -> Vec<Jump> {
    let mut jumps = Vec::new();
    let mut level = initial;
    let mut t = 0.0;
    loop {
        let (to, rate) = level.next(params);
        if rate <= 0.0 {
            return jumps;
        }
        t += Exp::new(rate).expect("positive rate").sample(rng);
        if t > t_end {
            return jumps;
        }
        jumps.push(Jump { time: t, from: level, to });
        level = to;
    }
}

pub fn simulate_record<R: Rng + ?Sized>(
    initial_level: Level,
    params: &SystemParams,
    templates: &ResponseTemplates,
    t_m: f64,
    dt: f64,
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    let k = sample_count(t_m, dt)?;
    let jumps = sample_jumps(initial_level, params, t_m, rng);
    let mut samples = Vec::with_capacity(k);
    let mut level = initial_level;
    let mut next_jump = 0;
    for i in 0..k {
        let t = (i + 1) as f64 * dt;
        while next_jump < jumps.len() && jumps[next_jump].time <= t {
            level = jumps[next_jump].to;
            next_jump += 1;
        }
        let (mx, my) = templates.mean(level, t);
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        samples.push((mx + templates.noise_std * nx, my + templates.noise_std * ny));
    }
    Ok(TrajectoryRecord {
        samples,
        jump_history: jumps,
        true_initial_level: initial_level,
        dt,
    })
}

/// Template with the smallest summed squared distance over samples up to
/// `t_m`; ties go to the lower level.
pub fn classify_record(
    record: &TrajectoryRecord,
    templates: &ResponseTemplates,
    t_m: f64,
) -> Result<Level> {
    let k = sample_count(t_m, record.dt)?;
    if k > record.samples.len() {
        return Err(Error::invalid("t_m", "longer than the record"));
    }
    let mut best = (f64::INFINITY, Level::G);
    for level in Level::ALL {
        let d: f64 = record.samples[..k]
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| {
                let (mx, my) = templates.mean(level, (i + 1) as f64 * record.dt);
                (x - mx).powi(2) + (y - my).powi(2)
            })
            .sum();
        if d < best.0 {
            best = (d, level);
        }
    }
    Ok(best.1)
}
