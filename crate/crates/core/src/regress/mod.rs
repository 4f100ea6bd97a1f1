//! Least squares with and without intercept, coefficient correlation and
//! joint confidence-ellipsoid tests.

mod fdist;

pub use fdist::{f_cdf, f_quantile, ln_gamma, regularized_incomplete_beta};

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::Serialize;
use thiserror::Error;

use crate::data::Dataset;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegressError {
    #[error("need more observations than parameters (n = {n}, p = {p})")]
    TooFewObservations { n: usize, p: usize },
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("observation {index} is not positive ({value})")]
    NonPositiveData { index: usize, value: f64 },
    #[error("coefficient {0} has zero standard error")]
    ZeroStandardError(usize),
    #[error("predictor is identically zero")]
    ZeroPredictor,
    #[error("input has zero variance")]
    ZeroVariance,
    #[error("probability {0} outside (0, 1)")]
    InvalidProbability(f64),
    #[error("degrees of freedom must be positive (d1 = {d1}, d2 = {d2})")]
    InvalidDegreesOfFreedom { d1: u32, d2: u32 },
    #[error("quantile search did not converge")]
    NoConvergence,
    #[error("non-finite value in input")]
    NonFinite,
}

/// Ordinary least-squares fit `y = Xβ + ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// `s²(XᵀX)⁻¹`, row-major.
    pub covariance: Vec<Vec<f64>>,
    /// `s² = RSS / df`.
    pub residual_variance: f64,
    pub df: usize,
    pub rss: f64,
    /// `XᵀX`, kept for the ellipsoid quadratic form.
    pub design_crossproduct: Vec<Vec<f64>>,
    #[serde(skip)]
    pub residuals: Vec<f64>,
    pub n: usize,
}

impl OlsFit {
    pub fn p(&self) -> usize {
        self.coefficients.len()
    }
}

/// Build an `n × p` design from predictor columns, optionally prefixed by an
/// intercept column of ones.
pub fn design_matrix(columns: &[&[f64]], intercept: bool) -> Result<DMatrix<f64>, RegressError> {
    let n = match (columns.first(), intercept) {
        (Some(c), _) => c.len(),
        (None, _) => 0,
    };
    for c in columns {
        if c.len() != n {
            return Err(RegressError::LengthMismatch { left: n, right: c.len() });
        }
    }
    let p = columns.len() + usize::from(intercept);
    let offset = usize::from(intercept);
    Ok(DMatrix::from_fn(n, p, |i, j| {
        if intercept && j == 0 {
            1.0
        } else {
            columns[j - offset][i]
        }
    }))
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Least squares through a Householder QR factorization of the design.
pub fn ols(design: &DMatrix<f64>, response: &[f64]) -> Result<OlsFit, RegressError> {
    let (n, p) = design.shape();
    if response.len() != n {
        return Err(RegressError::LengthMismatch { left: n, right: response.len() });
    }
    if n <= p || p == 0 {
        return Err(RegressError::TooFewObservations { n, p });
    }
    if design.iter().chain(response).any(|x| !x.is_finite()) {
        return Err(RegressError::NonFinite);
    }
    let y = DVector::from_column_slice(response);
    let qr = design.clone().qr();
    let r = qr.r();
    let q = qr.q();

    let scale = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if scale == 0.0 || (0..p).any(|i| r[(i, i)].abs() <= 1e-10 * scale) {
        return Err(RegressError::RankDeficient);
    }

    let qty = q.transpose() * &y;
    let beta = r.solve_upper_triangular(&qty).ok_or(RegressError::RankDeficient)?;
    let residuals = &y - design * &beta;
    let rss = residuals.norm_squared();
    let df = n - p;
    let s2 = rss / df as f64;

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(RegressError::RankDeficient)?;
    let xtx_inv = &r_inv * r_inv.transpose();
    let mut covariance = xtx_inv * s2;
    // symmetrize away rounding
    for i in 0..p {
        for j in 0..i {
            let m = 0.5 * (covariance[(i, j)] + covariance[(j, i)]);
            covariance[(i, j)] = m;
            covariance[(j, i)] = m;
        }
    }
    let standard_errors = (0..p).map(|i| covariance[(i, i)].max(0.0).sqrt()).collect();
    let xtx = design.transpose() * design;

    Ok(OlsFit {
        coefficients: beta.iter().copied().collect(),
        standard_errors,
        covariance: to_rows(&covariance),
        residual_variance: s2,
        df,
        rss,
        design_crossproduct: to_rows(&xtx),
        residuals: residuals.iter().copied().collect(),
        n,
    })
}

/// Correlation matrix of the coefficient estimates.
pub fn coeff_correlation(fit: &OlsFit) -> Result<Vec<Vec<f64>>, RegressError> {
    if let Some(i) = fit.standard_errors.iter().position(|&s| s <= 0.0) {
        return Err(RegressError::ZeroStandardError(i));
    }
    let se = &fit.standard_errors;
    Ok((0..fit.p())
        .map(|i| {
            (0..fit.p())
                .map(|j| {
                    if i == j {
                        1.0
                    } else {
                        fit.covariance[i][j] / (se[i] * se[j])
                    }
                })
                .collect()
        })
        .collect())
}

/// Fit of `y = γ₀x` with no intercept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OriginFit {
    pub gamma0: f64,
    pub standard_error: f64,
    pub rss: f64,
    pub df: usize,
}

/// `γ̂₀ = Σxy/Σx²`, `SE = sqrt(s²/Σx²)` with `s² = RSS/(n−1)`.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> Result<OriginFit, RegressError> {
    if x.len() != y.len() {
        return Err(RegressError::LengthMismatch { left: x.len(), right: y.len() });
    }
    let n = x.len();
    if n < 2 {
        return Err(RegressError::TooFewObservations { n, p: 1 });
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(RegressError::ZeroPredictor);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let gamma0 = sxy / sxx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - gamma0 * a).powi(2)).sum();
    let df = n - 1;
    let s2 = rss / df as f64;
    Ok(OriginFit {
        gamma0,
        standard_error: (s2 / sxx).sqrt(),
        rss,
        df,
    })
}

/// Fit `ln y = γ₀* + γ₁ ln x`; coefficient 1 of the result is the slope γ₁.
pub fn loglog_slope_check(x: &[f64], y: &[f64]) -> Result<OlsFit, RegressError> {
    if x.len() != y.len() {
        return Err(RegressError::LengthMismatch { left: x.len(), right: y.len() });
    }
    let positive = |v: &[f64]| -> Result<Vec<f64>, RegressError> {
        v.iter()
            .enumerate()
            .map(|(index, &value)| {
                if value > 0.0 {
                    Ok(value.ln())
                } else {
                    Err(RegressError::NonPositiveData { index, value })
                }
            })
            .collect()
    };
    let lx = positive(x)?;
    let ly = positive(y)?;
    ols(&design_matrix(&[&lx], true)?, &ly)
}

/// Outcome of a joint F test of a coefficient point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipsoidVerdict {
    pub statistic: f64,
    pub critical: f64,
    pub inside: bool,
    pub level: f64,
}

fn check_level(level: f64) -> Result<(), RegressError> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(RegressError::InvalidProbability(level))
    }
}

fn quadratic_form(a: &[Vec<f64>], v: &[f64]) -> f64 {
    a.iter()
        .zip(v)
        .map(|(row, vi)| vi * row.iter().zip(v).map(|(x, vj)| x * vj).sum::<f64>())
        .sum()
}

/// Joint test of `β = b`: `(b − β̂)ᵀ XᵀX (b − β̂) / (p s²)` against the
/// `level` quantile of `F(p, n − p)`.
pub fn ellipsoid_test(fit: &OlsFit, hypothesis: &[f64], level: f64) -> Result<EllipsoidVerdict, RegressError> {
    if hypothesis.len() != fit.p() {
        return Err(RegressError::LengthMismatch { left: fit.p(), right: hypothesis.len() });
    }
    check_level(level)?;
    let delta: Vec<f64> = hypothesis.iter().zip(&fit.coefficients).map(|(b, c)| b - c).collect();
    let q = quadratic_form(&fit.design_crossproduct, &delta);
    let statistic = if q == 0.0 {
        0.0
    } else {
        q / (fit.p() as f64 * fit.residual_variance)
    };
    let critical = f_quantile(level, fit.p() as u32, fit.df as u32)?;
    Ok(EllipsoidVerdict {
        statistic,
        critical,
        inside: statistic <= critical,
        level,
    })
}

/// Marginal test of a subset of coefficients using the matching block of
/// the covariance matrix, against `F(k, n − p)`.
pub fn marginal_ellipsoid_test(
    fit: &OlsFit,
    indices: &[usize],
    hypothesis: &[f64],
    level: f64,
) -> Result<EllipsoidVerdict, RegressError> {
    if hypothesis.len() != indices.len() {
        return Err(RegressError::LengthMismatch { left: indices.len(), right: hypothesis.len() });
    }
    if indices.is_empty() || indices.iter().any(|&i| i >= fit.p()) {
        return Err(RegressError::LengthMismatch { left: fit.p(), right: indices.len() });
    }
    check_level(level)?;
    let k = indices.len();
    let block = DMatrix::from_fn(k, k, |a, b| fit.covariance[indices[a]][indices[b]]);
    let inv = block.try_inverse().ok_or(RegressError::RankDeficient)?;
    let delta = DVector::from_iterator(
        k,
        indices.iter().zip(hypothesis).map(|(&i, b)| b - fit.coefficients[i]),
    );
    let q = (delta.transpose() * inv * &delta)[(0, 0)];
    let statistic = q / k as f64;
    let critical = f_quantile(level, k as u32, fit.df as u32)?;
    Ok(EllipsoidVerdict {
        statistic,
        critical,
        inside: statistic <= critical,
        level,
    })
}

/// Intersection of the joint confidence ellipsoid with the plane through
/// `anchor` in which only coefficients `free.0` and `free.1` vary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipseSlice {
    pub free: (usize, usize),
    pub center: (f64, f64),
    /// Closed boundary polyline in coefficient coordinates; empty when the
    /// plane misses the ellipsoid.
    pub boundary: Vec<(f64, f64)>,
}

pub fn ellipsoid_slice(
    fit: &OlsFit,
    free: (usize, usize),
    anchor: &[f64],
    level: f64,
    points: usize,
) -> Result<EllipseSlice, RegressError> {
    let p = fit.p();
    if anchor.len() != p {
        return Err(RegressError::LengthMismatch { left: p, right: anchor.len() });
    }
    if free.0 >= p || free.1 >= p || free.0 == free.1 {
        return Err(RegressError::LengthMismatch { left: p, right: 2 });
    }
    check_level(level)?;
    let a = &fit.design_crossproduct;
    let (i, j) = free;
    let fixed: Vec<usize> = (0..p).filter(|&k| k != i && k != j).collect();
    let delta_f: Vec<f64> = fixed.iter().map(|&k| anchor[k] - fit.coefficients[k]).collect();

    let a_uu = Matrix2::new(a[i][i], a[i][j], a[j][i], a[j][j]);
    let a_uf = Vector2::new(
        fixed.iter().zip(&delta_f).map(|(&k, d)| a[i][k] * d).sum(),
        fixed.iter().zip(&delta_f).map(|(&k, d)| a[j][k] * d).sum(),
    );
    let inv = a_uu.try_inverse().ok_or(RegressError::RankDeficient)?;
    let u0 = -(inv * a_uf);
    let a_ff: f64 = fixed
        .iter()
        .zip(&delta_f)
        .map(|(&k, dk)| dk * fixed.iter().zip(&delta_f).map(|(&l, dl)| a[k][l] * dl).sum::<f64>())
        .sum();
    let constant = a_ff - (u0.transpose() * a_uu * u0)[(0, 0)];
    let critical = f_quantile(level, p as u32, fit.df as u32)?;
    let radius2 = p as f64 * fit.residual_variance * critical - constant;

    let center = (fit.coefficients[i] + u0[0], fit.coefficients[j] + u0[1]);
    let mut boundary = Vec::new();
    if radius2 > 0.0 && points >= 3 {
        for step in 0..=points {
            let theta = 2.0 * std::f64::consts::PI * (step % points) as f64 / points as f64;
            let e = Vector2::new(theta.cos(), theta.sin());
            let norm = (e.transpose() * a_uu * e)[(0, 0)].sqrt();
            let w = e * (radius2.sqrt() / norm);
            boundary.push((center.0 + w[0], center.1 + w[1]));
        }
    }
    Ok(EllipseSlice { free, center, boundary })
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, RegressError> {
    if x.len() != y.len() {
        return Err(RegressError::LengthMismatch { left: x.len(), right: y.len() });
    }
    let n = x.len();
    if n < 2 {
        return Err(RegressError::TooFewObservations { n, p: 1 });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(RegressError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// `Σ (V_i − V̂(d_i, h_i))²` with `d`, `h` in feet.
pub fn prediction_rss(data: &Dataset, predict: impl Fn(f64, f64) -> f64) -> f64 {
    data.records()
        .iter()
        .map(|r| (r.volume - predict(r.dbh, r.height)).powi(2))
        .sum()
}

/// Round to `digits` significant figures.
pub fn round_significant(x: f64, digits: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits as i32 - 1 - magnitude);
    (x * factor).round() / factor
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_fit_exactly() {
        let x = [0.0, 1.0, 2.0];
        let y = [1.0, 2.0, 3.0];
        let fit = ols(&design_matrix(&[&x], true).unwrap(), &y).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-14);
        assert!((fit.coefficients[1] - 1.0).abs() < 1e-14);
        assert!(fit.rss < 1e-28);
        assert_eq!(fit.df, 1);
    }

    #[test]
    fn response_equal_to_a_column() {
        let a = [1.0, 4.0, 2.0, 8.0, 5.0];
        let b = [3.0, 1.0, 4.0, 1.0, 5.0];
        let fit = ols(&design_matrix(&[&a, &b], true).unwrap(), &b).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-12);
        assert!(fit.coefficients[1].abs() < 1e-12);
        assert!((fit.coefficients[2] - 1.0).abs() < 1e-12);
        assert!(fit.rss < 1e-24);
    }

    #[test]
    fn ols_errors() {
        let x = [1.0, 2.0];
        assert_eq!(
            ols(&design_matrix(&[&x], true).unwrap(), &[1.0, 2.0]),
            Err(RegressError::TooFewObservations { n: 2, p: 2 })
        );
        let x = [1.0, 2.0, 3.0, 4.0];
        let twice = [2.0, 4.0, 6.0, 8.0];
        assert_eq!(
            ols(&design_matrix(&[&x, &twice], true).unwrap(), &[1.0, 0.0, 1.0, 0.0]),
            Err(RegressError::RankDeficient)
        );
        assert!(matches!(
            ols(&design_matrix(&[&x], true).unwrap(), &[1.0]),
            Err(RegressError::LengthMismatch { .. })
        ));
        assert!(matches!(design_matrix(&[&x, &[1.0]], false), Err(RegressError::LengthMismatch { .. })));
    }

    #[test]
    fn orthogonal_design_has_identity_correlation() {
        let x1 = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let x2 = [1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let y = [3.0, 1.2, 0.4, -2.0, 2.2, 0.7, 0.1, -1.1];
        let fit = ols(&design_matrix(&[&x1, &x2], true).unwrap(), &y).unwrap();
        let c = coeff_correlation(&fit).unwrap();
        for (i, row) in c.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_standard_error_rejected() {
        let x = [0.0, 1.0, 2.0];
        let fit = ols(&design_matrix(&[&x], true).unwrap(), &[1.0, 2.0, 3.0]).unwrap();
        let mut fit = fit;
        fit.standard_errors = vec![0.0, 0.0];
        assert_eq!(coeff_correlation(&fit), Err(RegressError::ZeroStandardError(0)));
    }

    #[test]
    fn exact_proportionality_through_origin() {
        let x = [0.5, 1.0, 3.0, 7.5];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let f = fit_through_origin(&x, &y).unwrap();
        assert_eq!(f.gamma0, 2.0);
        assert_eq!(f.standard_error, 0.0);
        assert_eq!(f.df, 3);
        assert_eq!(fit_through_origin(&[0.0, 0.0], &[1.0, 2.0]), Err(RegressError::ZeroPredictor));
        assert!(matches!(fit_through_origin(&[1.0], &[1.0]), Err(RegressError::TooFewObservations { .. })));
    }

    #[test]
    fn loglog_recovers_power_law() {
        let x: Vec<f64> = (1..=10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
        let fit = loglog_slope_check(&x, &y).unwrap();
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-12);
        assert!(fit.coefficients[0].abs() < 1e-12);
        assert!(fit.rss < 1e-20);
        assert_eq!(
            loglog_slope_check(&[1.0, 0.0, 2.0], &[1.0, 1.0, 1.0]),
            Err(RegressError::NonPositiveData { index: 1, value: 0.0 })
        );
    }

    #[test]
    fn centre_of_ellipsoid_is_inside() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [1.1, 1.9, 3.2, 3.9, 5.1, 5.8];
        let fit = ols(&design_matrix(&[&x], true).unwrap(), &y).unwrap();
        for level in [0.01, 0.5, 0.999] {
            let v = ellipsoid_test(&fit, &fit.coefficients, level).unwrap();
            assert_eq!(v.statistic, 0.0);
            assert!(v.inside);
        }
        assert!(matches!(ellipsoid_test(&fit, &[1.0], 0.9), Err(RegressError::LengthMismatch { .. })));
        assert_eq!(
            ellipsoid_test(&fit, &fit.coefficients, 1.0),
            Err(RegressError::InvalidProbability(1.0))
        );
    }

    #[test]
    fn pearson_cases() {
        let x = [1.0, 2.0, 4.0, 8.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -3.0 * v + 1.0).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&x, &[1.0; 4]), Err(RegressError::ZeroVariance));
        assert!(pearson(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn significant_figure_rounding() {
        assert_eq!(round_significant(0.99533, 2), 1.0);
        assert_eq!(round_significant(1.00933, 2), 1.0);
        assert_eq!(round_significant(1.99067, 2), 2.0);
        assert_eq!(round_significant(-1.0093, 2), -1.0);
        assert_eq!(round_significant(0.0123456, 3), 0.0123);
    }
}
