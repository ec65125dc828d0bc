//! Numerical tolerances shared by every module.
//!
//! Decisions that can be made exactly (traces, norms, lattice preimages) never
//! consult these values; they only govern floating point comparisons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative residual accepted for a refined polynomial root.
    pub root: f64,
    /// Width of the band around |z| = 1 used for PV / Salem classification.
    pub unit: f64,
    /// Linear-algebra identities such as C V = V D.
    pub lin: f64,
    /// Relative slack on fitted decay ratios.
    pub decay: f64,
    /// Distance to the window boundary below which a point is undecidable.
    pub boundary: f64,
    /// Sum rule |sum a_j - |lambda|| for refinement masks.
    pub mask: f64,
    /// |A| below this is treated as an exact zero of the mask.
    pub zero: f64,
    /// Convergence threshold for torus quadrature of ln|P|.
    pub mahler: f64,
    /// Clip level used in place of ln 0.
    pub v_clip: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            root: 1e-13,
            unit: 1e-9,
            lin: 1e-10,
            decay: 0.02,
            boundary: 1e-9,
            mask: 1e-12,
            zero: 1e-12,
            mahler: 1e-8,
            v_clip: 1e-300,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 9] = [
        "root", "unit", "lin", "decay", "boundary", "mask", "zero", "mahler", "v_clip",
    ];

    /// Override a single tolerance by name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidArgument(format!("tolerance {key} must be positive, got {value}")));
        }
        let slot = match key.replace('-', "_").as_str() {
            "root" => &mut self.root,
            "unit" => &mut self.unit,
            "lin" => &mut self.lin,
            "decay" => &mut self.decay,
            "boundary" => &mut self.boundary,
            "mask" => &mut self.mask,
            "zero" => &mut self.zero,
            "mahler" => &mut self.mahler,
            "v_clip" => &mut self.v_clip,
            _ => return Err(Error::InvalidArgument(format!("unknown tolerance key {key}"))),
        };
        *slot = value;
        Ok(())
    }
}
