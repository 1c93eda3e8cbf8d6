//! Four-level ancilla readout and the feedforward reset loop.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::expm;
use crate::params::SystemParams;

/// True ancilla level. `Leaked` is anything above `h`; no conditional pulse
/// addresses it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AncillaLevel {
    G,
    E,
    F,
    H,
    Leaked,
}

impl AncillaLevel {
    pub const READABLE: [AncillaLevel; 4] = [Self::G, Self::E, Self::F, Self::H];

    pub fn index(self) -> usize {
        match self {
            Self::G => 0,
            Self::E => 1,
            Self::F => 2,
            Self::H => 3,
            Self::Leaked => 4,
        }
    }

    pub fn from_index(i: usize) -> Self {
        [Self::G, Self::E, Self::F, Self::H, Self::Leaked][i]
    }
}

/// Readout label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AncillaOutcome {
    G,
    E,
    F,
    H,
}

impl AncillaOutcome {
    pub fn from_index(i: usize) -> Self {
        [Self::G, Self::E, Self::F, Self::H][i]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn level(self) -> AncillaLevel {
        AncillaLevel::from_index(self.index())
    }
}

/// `m[true][assigned]` over levels g, e, f, h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AncillaConfusion {
    pub m: [[f64; 4]; 4],
}

impl AncillaConfusion {
    pub fn new(m: [[f64; 4]; 4]) -> Result<Self> {
        let c = Self { m };
        c.validate()?;
        Ok(c)
    }

    pub fn perfect() -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { m }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.m.iter().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::invalid("confusion", format!("row {i} has entries outside [0, 1]")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::invalid("confusion", format!("row {i} sums to {s}")));
            }
            if row[i] <= 0.5 {
                return Err(Error::invalid("confusion", format!("diagonal entry {i} is not > 0.5")));
            }
        }
        Ok(())
    }

    /// Readout model: the level relaxes (and `g` thermally excites) during
    /// the first half of the acquisition window, then the integrated signal
    /// is assigned to a neighbouring point on the IQ circle with probability
    /// `noise` per neighbour (`noise^2` to the opposite point).
    pub fn cascade(params: &SystemParams, noise: f64) -> Result<Self> {
        if !(0.0..0.25).contains(&noise) {
            return Err(Error::invalid("noise", "must lie in [0, 0.25)"));
        }
        let decay = expm(&(ancilla_generator(params) * (0.5 * params.readout_acquisition)));
        let mut nm = [[0.0; 4]; 4];
        for (k, row) in nm.iter_mut().enumerate() {
            row[(k + 1) % 4] = noise;
            row[(k + 3) % 4] = noise;
            row[(k + 2) % 4] = noise * noise;
            row[k] = 1.0 - 2.0 * noise - noise * noise;
        }
        let mut m = [[0.0; 4]; 4];
        for (s, row) in m.iter_mut().enumerate() {
            for (o, x) in row.iter_mut().enumerate() {
                *x = (0..4).map(|k| decay[(k, s)] * nm[k][o]).sum();
            }
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= sum);
        }
        Self::new(m)
    }

    /// Cascade model with the noise floor chosen so that
    /// `P(g | h) + P(not g | g)` equals `target`.
    pub fn calibrated(params: &SystemParams, target: f64) -> Result<Self> {
        let agg = |c: &Self| c.m[3][0] + (1.0 - c.m[0][0]);
        if agg(&Self::cascade(params, 0.0)?) > target {
            return Err(Error::invalid("target", "below the relaxation-limited aggregate"));
        }
        let (mut lo, mut hi) = (0.0, 0.2);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if agg(&Self::cascade(params, mid)?) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Self::cascade(params, 0.5 * (lo + hi))
    }

    /// Default used by the protocol: aggregate g/h error of 4.0e-4.
    pub fn default_for(params: &SystemParams) -> Result<Self> {
        Self::calibrated(params, 4.0e-4)
    }

    pub fn sample<R: Rng + ?Sized>(&self, level: AncillaLevel, rng: &mut R) -> AncillaOutcome {
        sample_row(&self.m[level.index().min(3)], rng)
    }
}

fn sample_row<R: Rng + ?Sized>(row: &[f64; 4], rng: &mut R) -> AncillaOutcome {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return AncillaOutcome::from_index(i);
        }
    }
    // u landed in the roundoff gap above the row sum
    AncillaOutcome::from_index(row.iter().rposition(|&p| p > 0.0).unwrap_or(0))
}

/// Column-stochastic generator over g, e, f, h: the decay cascade plus
/// thermal g -> e.
pub fn ancilla_generator(params: &SystemParams) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(4, 4);
    let mut add = |from: usize, to: usize, rate: f64| {
        g[(to, from)] += rate;
        g[(from, from)] -= rate;
    };
    add(1, 0, 1.0 / params.ancilla_t1_ge);
    add(2, 1, 1.0 / params.ancilla_t1_ef);
    add(3, 2, 1.0 / params.ancilla_t1_fh);
    add(0, 1, params.ancilla_gamma_up());
    g
}

/// Rare excitation above `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakModel {
    /// Probability per readout that the ancilla ends up above `h`.
    pub prob: f64,
    /// Probability that a leaked ancilla is assigned `g`; the remainder is
    /// split evenly over e, f, h.
    pub reads_g: f64,
    /// Lifetime of the leaked level before it decays to `h`.
    pub lifetime: f64,
}

impl LeakModel {
    pub fn none() -> Self {
        Self {
            prob: 0.0,
            reads_g: 0.0,
            lifetime: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.prob) {
            return Err(Error::invalid("leak.prob", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.reads_g) {
            return Err(Error::invalid("leak.reads_g", "must lie in [0, 1)"));
        }
        if !(self.lifetime > 0.0) {
            return Err(Error::invalid("leak.lifetime", "must be positive"));
        }
        Ok(())
    }

    fn row(&self) -> [f64; 4] {
        let r = (1.0 - self.reads_g) / 3.0;
        [self.reads_g, r, r, r]
    }
}

pub const STUCK_THRESHOLD: usize = 5;
pub const MAX_RESET_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct ResetOutcome {
    pub iterations: usize,
    pub duration: f64,
    pub stuck: bool,
    pub final_level: AncillaLevel,
    /// Assignment of each readout, the first being the one before any pulse.
    pub outcomes: Vec<AncillaOutcome>,
}

/// One readout: possible leak, assignment, and collapse. A label below the
/// true level is read as relaxation during the acquisition and the level
/// follows it; a label above it is assignment noise and leaves it alone.
pub fn read_ancilla<R: Rng + ?Sized>(
    level: AncillaLevel,
    confusion: &AncillaConfusion,
    leak: &LeakModel,
    rng: &mut R,
) -> (AncillaOutcome, AncillaLevel) {
    let mut level = level;
    if leak.prob > 0.0 && rng.random::<f64>() < leak.prob {
        level = AncillaLevel::Leaked;
    }
    if level == AncillaLevel::Leaked {
        return (sample_row(&leak.row(), rng), level);
    }
    let o = confusion.sample(level, rng);
    if o.index() < level.index() {
        level = o.level();
    }
    (o, level)
}

/// Conditional pulses for a non-g outcome: e -> pi_ge; f -> pi_ef, pi_ge;
/// h -> pi_fh, pi_ef, pi_ge. Pulses swap the addressed pair.
pub fn apply_ladder(level: AncillaLevel, outcome: AncillaOutcome) -> AncillaLevel {
    use AncillaLevel::*;
    let swap = |l: AncillaLevel, a: AncillaLevel, b: AncillaLevel| {
        if l == a {
            b
        } else if l == b {
            a
        } else {
            l
        }
    };
    let pulses: &[(AncillaLevel, AncillaLevel)] = match outcome {
        AncillaOutcome::G => &[],
        AncillaOutcome::E => &[(G, E)],
        AncillaOutcome::F => &[(E, F), (G, E)],
        AncillaOutcome::H => &[(F, H), (E, F), (G, E)],
    };
    pulses.iter().fold(level, |l, &(a, b)| swap(l, a, b))
}

/// Free evolution for `t` by exact competing-exponential jumps.
pub fn relax_ancilla<R: Rng + ?Sized>(
    mut level: AncillaLevel,
    t: f64,
    params: &SystemParams,
    leak: &LeakModel,
    rng: &mut R,
) -> AncillaLevel {
    let mut left = t;
    loop {
        let (rate, next) = match level {
            AncillaLevel::G => (params.ancilla_gamma_up(), AncillaLevel::E),
            AncillaLevel::E => (1.0 / params.ancilla_t1_ge, AncillaLevel::G),
            AncillaLevel::F => (1.0 / params.ancilla_t1_ef, AncillaLevel::E),
            AncillaLevel::H => (1.0 / params.ancilla_t1_fh, AncillaLevel::F),
            AncillaLevel::Leaked => (1.0 / leak.lifetime, AncillaLevel::H),
        };
        if rate <= 0.0 {
            return level;
        }
        let dt = Exp::new(rate).expect("positive rate").sample(rng);
        if dt >= left {
            return level;
        }
        left -= dt;
        level = next;
    }
}

/// Reads the ancilla until it is assigned `g`, applying the conditional
/// ladder and one reset interval of free evolution after every other label.
pub fn reset_ancilla<R: Rng + ?Sized>(
    true_level: AncillaLevel,
    confusion: &AncillaConfusion,
    params: &SystemParams,
    leak: &LeakModel,
    rng: &mut R,
) -> Result<ResetOutcome> {
    let mut level = true_level;
    let mut outcomes = Vec::with_capacity(2);
    loop {
        if outcomes.len() >= MAX_RESET_ITERATIONS {
            return Err(Error::ResetRunaway(outcomes.len()));
        }
        let (o, after) = read_ancilla(level, confusion, leak, rng);
        outcomes.push(o);
        level = after;
        if o == AncillaOutcome::G {
            break;
        }
        level = apply_ladder(level, o);
        level = relax_ancilla(level, params.t_readout_reset, params, leak, rng);
    }
    let iterations = outcomes.len();
    Ok(ResetOutcome {
        iterations,
        duration: iterations as f64 * params.t_readout_reset,
        stuck: iterations >= STUCK_THRESHOLD,
        final_level: level,
        outcomes,
    })
}
