//! First-order transmission of diameter and height measurement error to the
//! volume `V = γ₀hd²`.
//!
//! Measurement standard deviations scale with the measured value through a
//! coefficient of variation: `σ_d = cv_d·d`, `σ_h = cv_h·h`. The correlated
//! term is carried as `|∂V/∂d|·|∂V/∂h|·ρ·σ_d·σ_h` (no factor of two) unless
//! [`CrossTerm::StandardDelta`] is requested.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default coefficient of variation for diameter (±1 %).
pub const DEFAULT_CV_D: f64 = 0.0082;
/// Default coefficient of variation for height (±5 %).
pub const DEFAULT_CV_H: f64 = 0.0408;
/// Default diameter/height correlation.
pub const DEFAULT_RHO_DH: f64 = 0.52;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagateError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("coefficient of variation {name} = {value} is negative")]
    NegativeCv { name: &'static str, value: f64 },
    #[error("correlation {0} outside [-1, 1]")]
    BadCorrelation(f64),
    #[error("grid axis needs 0 < lo < hi and at least 2 steps (lo = {lo}, hi = {hi}, steps = {steps})")]
    BadAxis { lo: f64, hi: f64, steps: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub cv_d: f64,
    pub cv_h: f64,
    pub rho_dh: f64,
}

impl ErrorModel {
    pub fn new(cv_d: f64, cv_h: f64, rho_dh: f64) -> Result<Self, PropagateError> {
        if !(cv_d >= 0.0) {
            return Err(PropagateError::NegativeCv { name: "cv_d", value: cv_d });
        }
        if !(cv_h >= 0.0) {
            return Err(PropagateError::NegativeCv { name: "cv_h", value: cv_h });
        }
        if !(-1.0..=1.0).contains(&rho_dh) {
            return Err(PropagateError::BadCorrelation(rho_dh));
        }
        Ok(ErrorModel { cv_d, cv_h, rho_dh })
    }
}

impl Default for ErrorModel {
    fn default() -> Self {
        ErrorModel {
            cv_d: DEFAULT_CV_D,
            cv_h: DEFAULT_CV_H,
            rho_dh: DEFAULT_RHO_DH,
        }
    }
}

/// Form of the correlated-input term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossTerm {
    /// `|∂V/∂d|·|∂V/∂h|·ρ·σ_d·σ_h`
    #[default]
    AsPrinted,
    /// `2·(∂V/∂d)(∂V/∂h)·ρ·σ_d·σ_h`, the usual delta-method term.
    StandardDelta,
}

/// Per-source contributions to `σ_V²` (ft⁶).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceBudget {
    pub term_d: f64,
    pub term_h: f64,
    pub term_cross: f64,
    pub total: f64,
    pub sigma_v: f64,
    /// `∂V/∂d` (ft²)
    pub dv_dd: f64,
    /// `∂V/∂h` (ft²)
    pub dv_dh: f64,
}

/// `V = γ₀hd²`.
pub fn da_volume(gamma0: f64, d: f64, h: f64) -> f64 {
    gamma0 * h * d * d
}

pub fn transmit(
    gamma0: f64,
    d: f64,
    h: f64,
    em: &ErrorModel,
    cross: CrossTerm,
) -> Result<VarianceBudget, PropagateError> {
    if !(d > 0.0) {
        return Err(PropagateError::NonPositive { name: "d", value: d });
    }
    if !(h > 0.0) {
        return Err(PropagateError::NonPositive { name: "h", value: h });
    }
    let dv_dd = 2.0 * gamma0 * h * d;
    let dv_dh = gamma0 * d * d;
    let sigma_d = em.cv_d * d;
    let sigma_h = em.cv_h * h;
    let term_d = (dv_dd * sigma_d).powi(2);
    let term_h = (dv_dh * sigma_h).powi(2);
    let term_cross = match cross {
        CrossTerm::AsPrinted => dv_dd.abs() * dv_dh.abs() * em.rho_dh * sigma_d * sigma_h,
        CrossTerm::StandardDelta => 2.0 * dv_dd * dv_dh * em.rho_dh * sigma_d * sigma_h,
    };
    let total = term_d + term_h + term_cross;
    Ok(VarianceBudget {
        term_d,
        term_h,
        term_cross,
        total,
        sigma_v: if total >= 0.0 { total.sqrt() } else { f64::NAN },
        dv_dd,
        dv_dh,
    })
}

/// Evenly spaced axis `lo..=hi` with `steps` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self, PropagateError> {
        let axis = GridAxis { lo, hi, steps };
        axis.validate()?;
        Ok(axis)
    }

    fn validate(&self) -> Result<(), PropagateError> {
        if self.lo > 0.0 && self.hi > self.lo && self.hi.is_finite() && self.steps >= 2 {
            Ok(())
        } else {
            Err(PropagateError::BadAxis { lo: self.lo, hi: self.hi, steps: self.steps })
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.steps {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.steps).map(|i| self.value(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCell {
    pub d: f64,
    pub h: f64,
    pub volume: f64,
    pub var_v: f64,
}

/// Cells in row-major order: one row per height, diameter varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceGrid {
    pub d_axis: GridAxis,
    pub h_axis: GridAxis,
    pub cells: Vec<GridCell>,
}

impl VarianceGrid {
    pub fn cell(&self, d_index: usize, h_index: usize) -> &GridCell {
        &self.cells[h_index * self.d_axis.steps + d_index]
    }

    /// CSV with header `d_ft,h_ft,V_ft3,varV_ft6`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), PropagateError> {
        let io = |e: std::io::Error| PropagateError::Io(e.to_string());
        writeln!(w, "d_ft,h_ft,V_ft3,varV_ft6").map_err(io)?;
        for c in &self.cells {
            writeln!(w, "{},{},{},{}", c.d, c.h, c.volume, c.var_v).map_err(io)?;
        }
        Ok(())
    }
}

pub fn variance_grid(
    gamma0: f64,
    d_axis: GridAxis,
    h_axis: GridAxis,
    em: &ErrorModel,
    cross: CrossTerm,
) -> Result<VarianceGrid, PropagateError> {
    d_axis.validate()?;
    h_axis.validate()?;
    let mut cells = Vec::with_capacity(d_axis.steps * h_axis.steps);
    for h in h_axis.values() {
        for d in d_axis.values() {
            let budget = transmit(gamma0, d, h, em, cross)?;
            cells.push(GridCell {
                d,
                h,
                volume: da_volume(gamma0, d, h),
                var_v: budget.total,
            });
        }
    }
    Ok(VarianceGrid { d_axis, h_axis, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_measurement_transmits_nothing() {
        let em = ErrorModel::new(0.0, 0.0, 0.52).unwrap();
        let b = transmit(0.302, 1.2, 75.0, &em, CrossTerm::AsPrinted).unwrap();
        assert_eq!((b.term_d, b.term_h, b.term_cross, b.total, b.sigma_v), (0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn single_source_reduction() {
        let (g, d, h, cv) = (0.302, 1.3, 81.0, 0.01);
        let em = ErrorModel::new(cv, 0.0, 0.0).unwrap();
        let b = transmit(g, d, h, &em, CrossTerm::AsPrinted).unwrap();
        let want = (2.0 * g * h * d).powi(2) * (cv * d).powi(2);
        assert!((b.total - want).abs() <= 1e-14 * want);
    }

    #[test]
    fn largest_cherry_tree_budget() {
        let (g, d, h) = (0.302, 20.6 / 12.0, 87.0);
        let em = ErrorModel::new(0.0082, 0.0408, 0.52).unwrap();
        let b = transmit(g, d, h, &em, CrossTerm::AsPrinted).unwrap();

        let v = |d: f64, h: f64| g * h * d * d;
        let step = 1e-6;
        let fd_d = (v(d + step, h) - v(d - step, h)) / (2.0 * step);
        let fd_h = (v(d, h + step) - v(d, h - step)) / (2.0 * step);
        assert!((fd_d - b.dv_dd).abs() / b.dv_dd < 1e-6);
        assert!((fd_h - b.dv_dh).abs() / b.dv_dh < 1e-6);

        let (sd, sh) = (0.0082 * d, 0.0408 * h);
        let term_d = (fd_d * sd).powi(2);
        let term_h = (fd_h * sh).powi(2);
        let cross = fd_d * fd_h * 0.52 * sd * sh;
        assert!((b.term_d - term_d).abs() / term_d < 1e-5);
        assert!((b.term_h - term_h).abs() / term_h < 1e-5);
        assert!((b.term_cross - cross).abs() / cross < 1e-5);
        assert!((b.total - (term_d + term_h + cross)).abs() / b.total < 1e-5);
        // hand-summed terms, 1.6124 + 9.9797 + 2.0859
        assert!((b.total - 13.678).abs() < 1e-3);
        assert_eq!(b.total, b.term_d + b.term_h + b.term_cross);
    }

    #[test]
    fn standard_delta_doubles_cross_term() {
        let em = ErrorModel::default();
        let a = transmit(0.302, 1.1, 76.0, &em, CrossTerm::AsPrinted).unwrap();
        let s = transmit(0.302, 1.1, 76.0, &em, CrossTerm::StandardDelta).unwrap();
        assert!((s.term_cross - 2.0 * a.term_cross).abs() < 1e-15);
        assert_eq!(s.term_d, a.term_d);
    }

    #[test]
    fn input_validation() {
        assert!(ErrorModel::new(-0.1, 0.0, 0.0).is_err());
        assert!(ErrorModel::new(0.1, 0.0, 1.5).is_err());
        let em = ErrorModel::default();
        assert!(transmit(0.3, 0.0, 70.0, &em, CrossTerm::AsPrinted).is_err());
        assert!(transmit(0.3, 1.0, -70.0, &em, CrossTerm::AsPrinted).is_err());
        assert!(GridAxis::new(1.0, 1.0, 3).is_err());
        assert!(GridAxis::new(0.0, 1.0, 3).is_err());
        assert!(GridAxis::new(0.5, 1.0, 1).is_err());
    }

    #[test]
    fn grid_basics() {
        let d = GridAxis::new(0.5, 2.0, 2).unwrap();
        let h = GridAxis::new(60.0, 90.0, 2).unwrap();
        let zero = ErrorModel::new(0.0, 0.0, 0.0).unwrap();
        let g = variance_grid(0.302, d, h, &zero, CrossTerm::AsPrinted).unwrap();
        assert_eq!(g.cells.len(), 4);
        assert!(g.cells.iter().all(|c| c.var_v == 0.0));
        for c in &g.cells {
            assert_eq!(c.volume, 0.302 * c.h * c.d * c.d);
        }
        assert_eq!(g.cell(1, 0).d, 2.0);
        assert_eq!(g.cell(1, 0).h, 60.0);

        let mut out = Vec::new();
        g.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("d_ft,h_ft,V_ft3,varV_ft6\n"));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn variance_increases_along_diameter() {
        let d = GridAxis::new(0.6, 1.8, 25).unwrap();
        let h = GridAxis::new(60.0, 90.0, 13).unwrap();
        let g = variance_grid(0.302, d, h, &ErrorModel::default(), CrossTerm::AsPrinted).unwrap();
        for hi in 0..h.steps {
            for di in 1..d.steps {
                assert!(g.cell(di, hi).var_v > g.cell(di - 1, hi).var_v);
            }
        }
    }

    proptest! {
        #[test]
        fn variance_scales_as_sixth_power(
            d in 0.5f64..2.0, h in 50.0f64..100.0,
            s in prop::sample::select(vec![0.5, 2.0, 3.28084, 0.3048]),
        ) {
            let em = ErrorModel::default();
            let a = transmit(0.302, d, h, &em, CrossTerm::AsPrinted).unwrap();
            let b = transmit(0.302, d * s, h * s, &em, CrossTerm::AsPrinted).unwrap();
            prop_assert!((b.total - a.total * s.powi(6)).abs() <= 1e-12 * b.total);
        }

        #[test]
        fn monotone_in_cv_for_nonnegative_rho(
            cv1 in 0.0f64..0.1, cv2 in 0.0f64..0.1, other in 0.0f64..0.1, rho in 0.0f64..=1.0,
            d in 0.5f64..2.0, h in 50.0f64..100.0,
        ) {
            let (lo, hi) = if cv1 <= cv2 { (cv1, cv2) } else { (cv2, cv1) };
            let t = |cv_d: f64, cv_h: f64| {
                transmit(0.302, d, h, &ErrorModel::new(cv_d, cv_h, rho).unwrap(), CrossTerm::AsPrinted)
                    .unwrap()
                    .total
            };
            prop_assert!(t(lo, other) <= t(hi, other));
            prop_assert!(t(other, lo) <= t(other, hi));
        }
    }
}
