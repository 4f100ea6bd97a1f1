//! Geometric and empirical stem volume models.
//!
//! Lengths are in feet and volumes in cubic feet unless a function says
//! otherwise. Honer's equation keeps the diameter in inches.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Taper reported for black cherry in the forestry literature, measured
/// directly on 79 trees.
pub const LITERATURE_TAPER: f64 = -0.0098;

/// Honer's published black cherry parameters.
pub const HONER_CHERRY: HonerParams = HonerParams { c1: 0.033, c2: 393.336 };

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("lambda {0} outside [0, 1]")]
    LambdaOutOfRange(f64),
    #[error("gamma0 = {gamma0} outside [pi/12, pi/4] = [{cone}, {cylinder}] (cone to cylinder)")]
    GammaOutOfRange { gamma0: f64, cone: f64, cylinder: f64 },
    #[error("Honer denominator c1 + c2/h = {0} is not positive")]
    HonerDenominator(f64),
    #[error("log small-end diameter {small} exceeds large-end {large}")]
    InvertedLog { small: f64, large: f64 },
    #[error("core diameter {core} exceeds roll diameter {roll}")]
    InvertedRoll { roll: f64, core: f64 },
    #[error("a stem needs at least one log")]
    EmptyStem,
}

fn positive(name: &'static str, value: f64) -> Result<f64, GeometryError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(GeometryError::NonPositive { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolidKind {
    Cylinder,
    Cone,
    Frustum,
}

/// A cone truncated at top/bottom diameter ratio `lambda`; the cylinder and
/// the full cone are the two ends of the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolidModel {
    kind: SolidKind,
    lambda: f64,
}

impl SolidModel {
    pub fn cylinder() -> Self {
        SolidModel { kind: SolidKind::Cylinder, lambda: 1.0 }
    }

    pub fn cone() -> Self {
        SolidModel { kind: SolidKind::Cone, lambda: 0.0 }
    }

    pub fn frustum(lambda: f64) -> Result<Self, GeometryError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(GeometryError::LambdaOutOfRange(lambda));
        }
        Ok(SolidModel { kind: SolidKind::Frustum, lambda })
    }

    pub fn kind(&self) -> SolidKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Form factor `(π/12)(1 + λ + λ²)` multiplying `d²h`.
    pub fn form_factor(&self) -> f64 {
        form_factor(self.lambda)
    }
}

/// `(π/12)(1 + λ + λ²)`.
pub fn form_factor(lambda: f64) -> f64 {
    PI / 12.0 * (1.0 + lambda + lambda * lambda)
}

pub fn solid_volume(m: &SolidModel, d: f64, h: f64) -> Result<f64, GeometryError> {
    let d = positive("diameter", d)?;
    let h = positive("height", h)?;
    Ok(m.form_factor() * d * d * h)
}

/// Top/bottom diameter ratio of the frustum whose form factor is `gamma0`:
/// the nonnegative root of `λ² + λ + (1 − 12γ₀/π) = 0`.
pub fn lambda_from_gamma(gamma0: f64) -> Result<f64, GeometryError> {
    let cone = PI / 12.0;
    let cylinder = PI / 4.0;
    // allow rounding at the end points
    let slack = 1e-12;
    if !(gamma0 >= cone - slack && gamma0 <= cylinder + slack) {
        return Err(GeometryError::GammaOutOfRange { gamma0, cone, cylinder });
    }
    let c = 1.0 - 12.0 * gamma0 / PI;
    let disc = (1.0 - 4.0 * c).max(0.0);
    Ok(((disc.sqrt() - 1.0) / 2.0).clamp(0.0, 1.0))
}

/// Taper `t = (λ − 1)d/h`, negative for a narrowing stem.
pub fn taper(lambda: f64, d: f64, h: f64) -> Result<f64, GeometryError> {
    let h = positive("height", h)?;
    Ok((lambda - 1.0) * d / h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaperEstimate {
    pub lambda_hat: f64,
    pub taper: f64,
    pub reference_d: f64,
    pub reference_h: f64,
}

impl TaperEstimate {
    pub fn from_gamma(gamma0: f64, d: f64, h: f64) -> Result<Self, GeometryError> {
        let lambda_hat = lambda_from_gamma(gamma0)?;
        Ok(TaperEstimate {
            lambda_hat,
            taper: taper(lambda_hat, d, h)?,
            reference_d: d,
            reference_h: h,
        })
    }
}

/// Parameters of Honer's volume equation `V = d²/(c1 + c2/h)` with `d` in
/// inches, `h` in feet and `V` in cubic feet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HonerParams {
    pub c1: f64,
    pub c2: f64,
}

pub fn honer_volume(d_inches: f64, h: f64, p: &HonerParams) -> Result<f64, GeometryError> {
    if !(d_inches >= 0.0) {
        return Err(GeometryError::NonPositive { name: "diameter", value: d_inches });
    }
    let h = positive("height", h)?;
    let denom = p.c1 + p.c2 / h;
    if !(denom > 0.0) {
        return Err(GeometryError::HonerDenominator(denom));
    }
    Ok(d_inches * d_inches / denom)
}

/// One log cut from a stem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSegment {
    pub d_small: f64,
    pub d_large: f64,
    pub length: f64,
}

impl LogSegment {
    pub fn new(d_small: f64, d_large: f64, length: f64) -> Result<Self, GeometryError> {
        let seg = LogSegment { d_small, d_large, length };
        seg.validate()?;
        Ok(seg)
    }

    fn validate(&self) -> Result<(), GeometryError> {
        positive("small-end diameter", self.d_small)?;
        positive("large-end diameter", self.d_large)?;
        positive("log length", self.length)?;
        if self.d_small > self.d_large {
            return Err(GeometryError::InvertedLog { small: self.d_small, large: self.d_large });
        }
        Ok(())
    }
}

/// Smalian's formula `(π/8)(d_se² + d_le²)L`.
pub fn smalian_volume(seg: &LogSegment) -> Result<f64, GeometryError> {
    seg.validate()?;
    Ok(PI / 8.0 * (seg.d_small.powi(2) + seg.d_large.powi(2)) * seg.length)
}

/// Sum of Smalian volumes over the logs of a stem.
pub fn stem_volume(segments: &[LogSegment]) -> Result<f64, GeometryError> {
    if segments.is_empty() {
        return Err(GeometryError::EmptyStem);
    }
    segments.iter().map(smalian_volume).sum()
}

/// Paper length on a roll of outer diameter `roll`, core diameter `core`
/// and sheet thickness `t`: `L = (π/4)(D² − d²)/t`.
///
/// In terms of groups, `L/(D − d) = (π/4)(D/t + d/t)`.
pub fn toilet_roll_length(roll: f64, core: f64, t: f64) -> Result<f64, GeometryError> {
    let core = positive("core diameter", core)?;
    let t = positive("thickness", t)?;
    if roll < core {
        return Err(GeometryError::InvertedRoll { roll, core });
    }
    Ok(PI / 4.0 * (roll * roll - core * core) / t)
}

/// Rate at which the roll diameter changes with paper length, `2t/(πD)`.
pub fn toilet_roll_shrink_rate(roll: f64, t: f64) -> Result<f64, GeometryError> {
    let roll = positive("roll diameter", roll)?;
    let t = positive("thickness", t)?;
    Ok(2.0 * t / (PI * roll))
}

/// Diameter-only model `V = k·d^b`.
pub fn meyer_cubic_volume(d: f64, k: f64, b: f64) -> Result<f64, GeometryError> {
    let d = positive("diameter", d)?;
    Ok(k * d.powf(b))
}
