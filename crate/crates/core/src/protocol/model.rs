use serde::{Deserialize, Serialize};

use super::ancilla::{AncillaConfusion, LeakModel};
use crate::error::{Error, Result};
use crate::params::SystemParams;

pub const DELTA_0: f64 = 5.2e-2;
pub const DELTA_1: f64 = 1.5e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResetModel {
    /// Votes err with the lumped per-round probabilities, every reset takes
    /// one iteration and returns the ancilla to g.
    Ideal,
    /// Four-level readout through the confusion matrix and the feedforward
    /// reset loop.
    Feedforward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    /// Per-round probability that a photon number inside the flip set
    /// produces a no-flip vote.
    pub delta_in: f64,
    /// Per-round probability that a photon number outside the flip set
    /// produces a flip vote.
    pub delta_out: f64,
    pub reset: ResetModel,
    pub confusion: AncillaConfusion,
    pub leak: LeakModel,
    /// Reset iterations of the final heralding check that precede cycle 1.
    pub herald_tail: usize,
}

impl ErrorModel {
    /// Feedforward model at the device parameters.
    pub fn matched(params: &SystemParams) -> Result<Self> {
        Ok(Self {
            delta_in: DELTA_0,
            delta_out: DELTA_1,
            reset: ResetModel::Feedforward,
            confusion: AncillaConfusion::default_for(params)?,
            leak: LeakModel::calibrated(),
            herald_tail: 1,
        })
    }

    pub fn ideal_reset(delta_in: f64, delta_out: f64) -> Self {
        Self {
            delta_in,
            delta_out,
            reset: ResetModel::Ideal,
            confusion: AncillaConfusion::perfect(),
            leak: LeakModel::none(),
            herald_tail: 1,
        }
    }

    pub fn noiseless() -> Self {
        Self::ideal_reset(0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, d) in [("delta_in", self.delta_in), ("delta_out", self.delta_out)] {
            if !(0.0..0.5).contains(&d) {
                return Err(Error::invalid(name, format!("must lie in [0, 0.5), got {d}")));
            }
        }
        self.confusion.validate()?;
        self.leak.validate()?;
        if self.reset == ResetModel::Feedforward {
            self.mapping_errors()?;
        }
        Ok(())
    }

    /// Mapping error probabilities `(inside, outside)` that, composed with
    /// the g/e rows of the confusion matrix, reproduce `delta_in` and
    /// `delta_out` for an ancilla starting in g.
    pub fn mapping_errors(&self) -> Result<(f64, f64)> {
        let c = &self.confusion.m;
        let gap = c[0][0] - c[1][0];
        let eps_in = (self.delta_in - c[1][0]) / gap;
        let eps_out = (self.delta_out - (1.0 - c[0][0])) / gap;
        for (name, e) in [("delta_in", eps_in), ("delta_out", eps_out)] {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::invalid(
                    name,
                    "not reachable with this confusion matrix (readout alone is worse)",
                ));
            }
        }
        Ok((eps_in, eps_out))
    }
}

impl LeakModel {
    /// Leak knobs tuned so that about 0.2% of 30-cycle records contain a
    /// stuck reset. The leaked level rarely reads as g and decays within a
    /// few resets, so most episodes stay inside one stuck reset.
    pub fn calibrated() -> Self {
        Self {
            prob: 5e-5,
            reads_g: 0.05,
            lifetime: 30e-6,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matched_mapping_errors_feasible() {
        let m = ErrorModel::matched(&SystemParams::default()).unwrap();
        let (ei, eo) = m.mapping_errors().unwrap();
        assert!(ei > 0.0 && ei < DELTA_0);
        assert!(eo > 0.0 && eo < DELTA_1);
        // recompose
        let c = &m.confusion.m;
        let din = (1.0 - ei) * c[1][0] + ei * c[0][0];
        let dout = (1.0 - eo) * (1.0 - c[0][0]) + eo * (1.0 - c[1][0]);
        assert!((din - DELTA_0).abs() < 1e-15);
        assert!((dout - DELTA_1).abs() < 1e-15);
    }

    #[test]
    fn infeasible_delta_rejected() {
        let mut m = ErrorModel::matched(&SystemParams::default()).unwrap();
        m.delta_in = 1e-3;
        assert!(m.validate().is_err());
    }
}
