use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Relative rate difference below which the equal-rate limit is used.
const DEGENERATE_REL: f64 = 1e-12;

/// Populations `(g, e, f)` after free decay for `t` through the f -> e -> g
/// cascade with rates `1/T1_ef` and `1/T1_ge`.
pub fn rate_equation(p0: [f64; 3], t: f64, params: &SystemParams) -> Result<[f64; 3]> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("{t} must be a non-negative time")));
    }
    if p0.iter().any(|&p| !(p >= -1e-12)) || (p0.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("p0", format!("{p0:?} is not a distribution")));
    }
    let k1 = 1.0 / params.ancilla_t1_ge;
    let k2 = 1.0 / params.ancilla_t1_ef;
    let [_, pe0, pf0] = p0;
    let e1 = (-k1 * t).exp();
    let pf = pf0 * (-k2 * t).exp();
    // f -> e feed: k2 (e^{-k1 t} - e^{-k2 t}) / (k2 - k1)
    let feed = if (k2 - k1).abs() <= DEGENERATE_REL * k1.max(k2) {
        k1 * t * e1
    } else {
        k2 * e1 * (-(-(k2 - k1) * t).exp_m1()) / (k2 - k1)
    };
    let pe = pe0 * e1 + pf0 * feed;
    let pg = 1.0 - pe - pf;
    Ok([pg, pe, pf])
}
