//! Device parameters.
//!
//! Defaults are the measured values of the storage/ancilla system. The
//! config file is flat TOML, one key per parameter, SI units (seconds,
//! rad/s, plain fractions).

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    #[serde(rename = "storage_T1")]
    pub storage_t1: f64,
    pub storage_thermal_pop: f64,
    /// Photon gain rate of the storage (1/s). Fitted directly, not derived
    /// from the thermal population.
    pub storage_kappa_up: f64,
    /// Stored only; no computation uses it.
    pub storage_kerr: f64,
    #[serde(rename = "ancilla_T1_ge")]
    pub ancilla_t1_ge: f64,
    #[serde(rename = "ancilla_T1_ef")]
    pub ancilla_t1_ef: f64,
    #[serde(rename = "ancilla_T1_fh")]
    pub ancilla_t1_fh: f64,
    #[serde(rename = "ancilla_T2_ge")]
    pub ancilla_t2_ge: f64,
    #[serde(rename = "ancilla_T2_gf")]
    pub ancilla_t2_gf: f64,
    pub ancilla_thermal_pop: f64,
    pub anharmonicity: f64,
    pub dispersive_shift_chi_st: f64,
    pub storage_freq: f64,
    pub ancilla_freq: f64,
    pub readout_freq: f64,
    pub t_map: f64,
    pub t_readout_reset: f64,
    pub demolition_prob: f64,
    /// Ancilla readout acquisition window.
    pub readout_acquisition: f64,
    /// Largest photon number kept in the storage model.
    pub fock_cutoff: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        let t_map = 2.4e-6;
        let t_r = 2.16e-6;
        Self {
            storage_t1: 0.99e-3,
            storage_thermal_pop: 0.021,
            storage_kappa_up: 2.7e-4 / (t_map + t_r),
            storage_kerr: -2.0 * PI * 2.2e3,
            ancilla_t1_ge: 51e-6,
            ancilla_t1_ef: 47e-6,
            ancilla_t1_fh: 40e-6,
            ancilla_t2_ge: 74e-6,
            ancilla_t2_gf: 57e-6,
            ancilla_thermal_pop: 0.004,
            anharmonicity: -2.0 * PI * 137e6,
            dispersive_shift_chi_st: -2.0 * PI * 900e3,
            storage_freq: 2.0 * PI * 4.5e9,
            ancilla_freq: 2.0 * PI * 4.2e9,
            readout_freq: 2.0 * PI * 9.33e9,
            t_map,
            t_readout_reset: t_r,
            demolition_prob: 2e-4,
            readout_acquisition: 2e-6,
            fock_cutoff: 10,
        }
    }
}

impl SystemParams {
    /// Defaults overridden by the keys of `src`, validated.
    pub fn from_toml_str(src: &str) -> Result<Self> {
        let p: SystemParams = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    /// Loads from `path`, or returns validated defaults when absent.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => {
                let p = Self::default();
                p.validate()?;
                Ok(p)
            }
            Some(path) => {
                let src = std::fs::read_to_string(path).map_err(|e| {
                    std::io::Error::new(e.kind(), format!("cannot read {}: {e}", path.display()))
                })?;
                Self::from_toml_str(&src)
            }
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat struct always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let times = [
            ("storage_T1", self.storage_t1),
            ("ancilla_T1_ge", self.ancilla_t1_ge),
            ("ancilla_T1_ef", self.ancilla_t1_ef),
            ("ancilla_T1_fh", self.ancilla_t1_fh),
            ("ancilla_T2_ge", self.ancilla_t2_ge),
            ("ancilla_T2_gf", self.ancilla_t2_gf),
            ("t_map", self.t_map),
            ("t_readout_reset", self.t_readout_reset),
            ("readout_acquisition", self.readout_acquisition),
        ];
        for (name, v) in times {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("time must be positive, got {v}")));
            }
        }
        let fractions = [
            ("storage_thermal_pop", self.storage_thermal_pop),
            ("ancilla_thermal_pop", self.ancilla_thermal_pop),
            ("demolition_prob", self.demolition_prob),
        ];
        for (name, v) in fractions {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::invalid(name, format!("must lie in [0, 1), got {v}")));
            }
        }
        if !(self.storage_kappa_up >= 0.0 && self.storage_kappa_up.is_finite()) {
            return Err(Error::invalid("storage_kappa_up", "rate must be non-negative"));
        }
        for (name, v) in [
            ("storage_kerr", self.storage_kerr),
            ("anharmonicity", self.anharmonicity),
            ("dispersive_shift_chi_st", self.dispersive_shift_chi_st),
            ("storage_freq", self.storage_freq),
            ("ancilla_freq", self.ancilla_freq),
            ("readout_freq", self.readout_freq),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if self.ancilla_t2_ge > 2.0 * self.ancilla_t1_ge {
            return Err(Error::invalid("ancilla_T2_ge", "T2 exceeds 2*T1 of the g-e pair"));
        }
        if self.ancilla_t2_gf > 2.0 * self.ancilla_t1_ef {
            return Err(Error::invalid("ancilla_T2_gf", "T2 exceeds 2*T1 of the f level"));
        }
        if self.fock_cutoff < 1 {
            return Err(Error::invalid("fock_cutoff", "must be at least 1"));
        }
        Ok(())
    }

    pub fn cycle_time(&self) -> f64 {
        self.t_map + self.t_readout_reset
    }

    pub fn kappa_down(&self) -> f64 {
        1.0 / self.storage_t1
    }

    /// Loss rate seen by inference: intrinsic decay plus demolition spread
    /// over a nominal cycle.
    pub fn effective_kappa_down(&self) -> f64 {
        self.kappa_down() + self.demolition_prob / self.cycle_time()
    }

    /// Thermal g -> e excitation rate of the ancilla.
    pub fn ancilla_gamma_up(&self) -> f64 {
        self.ancilla_thermal_pop / self.ancilla_t1_ge
    }

    /// Pure dephasing rate of e.
    pub fn gamma_phi_e(&self) -> f64 {
        1.0 / self.ancilla_t2_ge - 0.5 / self.ancilla_t1_ge
    }

    /// Pure dephasing rate of f.
    pub fn gamma_phi_f(&self) -> f64 {
        1.0 / self.ancilla_t2_gf - 0.5 / self.ancilla_t1_ef
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let p = SystemParams::from_toml_str("").unwrap();
        assert_eq!(p.storage_t1, 0.99e-3);
        assert_eq!(p, SystemParams::default());
    }

    #[test]
    fn negative_time_rejected() {
        let e = SystemParams::from_toml_str("storage_T1 = -1.0").unwrap_err();
        assert!(matches!(e, Error::InvalidParameter { ref name, .. } if name == "storage_T1"));
    }

    #[test]
    fn partial_override() {
        let p = SystemParams::from_toml_str("ancilla_thermal_pop = 0.0").unwrap();
        let mut expect = SystemParams::default();
        expect.ancilla_thermal_pop = 0.0;
        assert_eq!(p, expect);
    }

    #[test]
    fn malformed_keys_rejected() {
        assert!(SystemParams::from_toml_str("storage_t2 = 1.0").is_err());
        assert!(SystemParams::from_toml_str("storage_T1 = \"long\"").is_err());
        assert!(SystemParams::from_toml_str("storage_T1 = ").is_err());
    }

    #[test]
    fn population_bounds() {
        assert!(SystemParams::from_toml_str("ancilla_thermal_pop = 1.0").is_err());
        assert!(SystemParams::from_toml_str("demolition_prob = -0.1").is_err());
    }

    #[test]
    fn t2_bound() {
        assert!(SystemParams::from_toml_str("ancilla_T2_ge = 1.1e-4").is_err());
    }

    #[test]
    fn kappa_up_default() {
        let p = SystemParams::default();
        assert!((p.storage_kappa_up * p.cycle_time() - 2.7e-4).abs() < 1e-18);
    }

    #[test]
    fn dephasing_rates_non_negative() {
        let p = SystemParams::default();
        assert!(p.gamma_phi_e() > 0.0 && p.gamma_phi_f() > 0.0);
    }
}
