//! The full analysis of one dataset, assembled into a serializable report.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use mensura_core::data::{summary, Dataset};
use mensura_core::geometry::{
    honer_volume, lambda_from_gamma, meyer_cubic_volume, taper, SolidModel, HONER_CHERRY,
    LITERATURE_TAPER,
};
use mensura_core::pi::{evaluate_group, exponent_strings, groups_for_trees, Formulation};
use mensura_core::propagate::{da_volume, transmit, CrossTerm, ErrorModel};
use mensura_core::regress::{
    coeff_correlation, design_matrix, ellipsoid_test, fit_through_origin, loglog_slope_check,
    marginal_ellipsoid_test, ols, prediction_rss, round_significant, OlsFit,
};
use serde::Serialize;

use crate::error::CliError;

/// Published figures for the builtin cherry data.
pub mod reference {
    pub const BETA: [f64; 3] = [-1.705, 1.98, 1.117];
    pub const BETA_SE: [f64; 3] = [0.8819, 0.0750, 0.2044];
    pub const CORR_B0_B2: f64 = -0.9998;
    pub const LN_CONE: f64 = -1.3408;
    pub const LN_CYLINDER: f64 = -0.2416;
    pub const GAMMA_A: (f64, f64) = (0.302355, 0.003893);
    pub const GAMMA_C: (f64, f64) = (0.30270, 0.00423);
    pub const LAMBDA: f64 = 0.13526;
    pub const TAPER: f64 = -0.0126;
    pub const RSS_DA: f64 = 0.302;
    pub const RSS_DA_VALUE: f64 = 181.4;
    pub const LARGEST_TREE_VARIANCE: f64 = 3.5;
    pub const MEAN_DBH: f64 = 1.1;
    pub const MEAN_HEIGHT: f64 = 76.0;
    pub const CORR_DBH_HEIGHT: f64 = 0.52;
    pub const CORR_DBH_VOLUME: f64 = 0.97;
}

/// Level of the joint confidence region used throughout.
pub const ELLIPSOID_LEVEL: f64 = 0.999;

/// A number with its unit and, where one exists, a published comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Value {
    pub value: f64,
    pub unit: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
}

impl Value {
    pub fn new(value: f64, unit: &str) -> Self {
        Value { value, unit: unit.to_string(), reference: None, deviation: None }
    }

    fn against(mut self, reference: Option<f64>) -> Self {
        self.reference = reference;
        self.deviation = reference.map(|r| (self.value - r).abs());
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    pub error_model: ErrorModel,
    pub cross: CrossTerm,
    /// Attach the published cherry figures.
    pub references: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetInfo {
    pub name: String,
    pub n: usize,
    pub source_units: BTreeMap<&'static str, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryBlock {
    pub mean_dbh: Value,
    pub mean_height: Value,
    pub mean_volume: Value,
    pub corr_dbh_height: Option<Value>,
    pub corr_dbh_volume: Option<Value>,
    pub corr_height_volume: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRegression {
    pub model: &'static str,
    pub coefficients: Vec<Value>,
    pub standard_errors: Vec<Value>,
    pub residual_variance: Value,
    pub rss: Value,
    pub df: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correlations {
    pub unit: &'static str,
    pub matrix: Vec<Vec<f64>>,
    pub b0_b1: Value,
    pub b0_b2: Value,
    pub b1_b2: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipsoidPoint {
    pub name: &'static str,
    pub hypothesis: Vec<f64>,
    pub intercept: Value,
    pub statistic: Value,
    pub inside: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_inside: Option<bool>,
    /// Test of (b0, b2) alone against F(2, n - p).
    pub marginal_statistic: Value,
    pub marginal_inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipsoidBlock {
    pub level: f64,
    pub critical: Value,
    pub marginal_critical: Value,
    pub points: Vec<EllipsoidPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OriginBlock {
    pub gamma0: Value,
    pub standard_error: Value,
    pub rss: Value,
    pub df: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormulationBlock {
    pub label: String,
    pub pi0: String,
    pub pi1: String,
    pub pi0_exponents: BTreeMap<String, String>,
    pub pi1_exponents: BTreeMap<String, String>,
    pub loglog_slope: Value,
    pub loglog_slope_se: Value,
    pub slope_2sf: f64,
    /// Slope rounds to 1 at two significant figures, so `π₀ ∝ π₁`.
    pub monomial: bool,
    pub through_origin: OriginBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryBlock {
    pub gamma0: Value,
    pub gamma0_rounded: Value,
    pub lambda_rounded: Option<Value>,
    pub lambda_hat: Option<Value>,
    pub solid: Option<SolidModel>,
    pub average_dbh: Value,
    pub average_height: Value,
    pub taper: Option<Value>,
    pub literature_taper: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeBudget {
    pub id: usize,
    pub d: f64,
    pub h: f64,
    pub volume: f64,
    pub dv_dd: f64,
    pub dv_dh: f64,
    pub term_d: f64,
    pub term_h: f64,
    pub term_cross: f64,
    pub total: f64,
    pub sigma_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LargestTree {
    pub id: usize,
    pub total: Value,
    pub sigma_v: Value,
    pub standard_delta_total: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceBlock {
    pub cv_d: Value,
    pub cv_h: Value,
    pub rho_dh: Value,
    pub cross_term: CrossTerm,
    pub gamma0: Value,
    pub units: BTreeMap<&'static str, &'static str>,
    pub budgets: Vec<TreeBudget>,
    pub largest_tree: LargestTree,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RssBlock {
    pub da_rounded_gamma: Value,
    pub da_rounded: Value,
    pub da_full: Value,
    pub honer: Value,
    pub d_only_k: Value,
    pub d_only: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HonerTree {
    pub id: usize,
    pub dbh_in: f64,
    pub height_ft: f64,
    pub observed: f64,
    pub predicted: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HonerBlock {
    pub c1: Value,
    pub c2: Value,
    pub units: BTreeMap<&'static str, &'static str>,
    pub trees: Vec<HonerTree>,
    pub mean_ratio: Value,
    pub rss: Value,
}

/// A computed figure that does not match, or cannot be reconciled with, a
/// published one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub id: &'static str,
    pub computed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    pub unit: &'static str,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub dataset: DatasetInfo,
    pub summary: SummaryBlock,
    pub log_regression: LogRegression,
    pub coeff_correlations: Correlations,
    pub ellipsoid: EllipsoidBlock,
    pub formulations: Vec<FormulationBlock>,
    pub geometry: GeometryBlock,
    pub variance: VarianceBlock,
    pub rss: RssBlock,
    pub honer: HonerBlock,
    pub discrepancies: Vec<Discrepancy>,
}

impl Report {
    pub fn formulation(&self, label: char) -> Option<&FormulationBlock> {
        let label = label.to_string();
        self.formulations.iter().find(|f| f.label == label)
    }

    pub fn discrepancy(&self, id: &str) -> Option<&Discrepancy> {
        self.discrepancies.iter().find(|d| d.id == id)
    }
}

/// Fit of `ln V = b0 + b1 ln d + b2 ln h`.
pub fn log_fit(ds: &Dataset) -> Result<OlsFit, CliError> {
    let ln = |v: Vec<f64>| v.into_iter().map(f64::ln).collect::<Vec<_>>();
    let (ld, lh, lv) = (ln(ds.dbh()), ln(ds.heights()), ln(ds.volumes()));
    Ok(ols(&design_matrix(&[&ld, &lh], true)?, &lv)?)
}

/// `(π₁, π₀)` for every tree.
pub fn formulation_points(ds: &Dataset, f: &Formulation) -> Result<Vec<(f64, f64)>, CliError> {
    ds.records()
        .iter()
        .map(|r| {
            let q = r.quantities();
            let x = evaluate_group(f.pi1(), &q).map_err(CliError::data)?;
            let y = evaluate_group(f.pi0(), &q).map_err(CliError::data)?;
            Ok((x, y))
        })
        .collect()
}

fn formulation_block(ds: &Dataset, f: &Formulation, refs: bool) -> Result<FormulationBlock, CliError> {
    let (x, y): (Vec<f64>, Vec<f64>) = formulation_points(ds, f)?.into_iter().unzip();
    let slope = loglog_slope_check(&x, &y)?;
    let origin = fit_through_origin(&x, &y)?;
    let published = match (refs, f.label) {
        (true, 'a') => Some(reference::GAMMA_A),
        (true, 'c') => Some(reference::GAMMA_C),
        _ => None,
    };
    let slope_2sf = round_significant(slope.coefficients[1], 2);
    Ok(FormulationBlock {
        label: f.label.to_string(),
        pi0: f.pi0().to_string(),
        pi1: f.pi1().to_string(),
        pi0_exponents: exponent_strings(f.pi0()),
        pi1_exponents: exponent_strings(f.pi1()),
        loglog_slope: Value::new(slope.coefficients[1], "1"),
        loglog_slope_se: Value::new(slope.standard_errors[1], "1"),
        slope_2sf,
        monomial: slope_2sf == 1.0,
        through_origin: OriginBlock {
            gamma0: Value::new(origin.gamma0, "1").against(published.map(|p| p.0)),
            standard_error: Value::new(origin.standard_error, "1").against(published.map(|p| p.1)),
            rss: Value::new(origin.rss, "1"),
            df: origin.df,
        },
    })
}

fn ellipsoid_block(fit: &OlsFit, gamma_a: f64, refs: bool) -> Result<EllipsoidBlock, CliError> {
    let named = [
        ("cylinder", (PI / 4.0).ln(), Some(reference::LN_CYLINDER), false),
        ("cone", (PI / 12.0).ln(), Some(reference::LN_CONE), false),
        ("da", gamma_a.ln(), None, true),
    ];
    let mut points = Vec::new();
    let mut critical = 0.0;
    let mut marginal_critical = 0.0;
    for (name, b0, published, expected) in named {
        let hypothesis = vec![b0, 2.0, 1.0];
        let joint = ellipsoid_test(fit, &hypothesis, ELLIPSOID_LEVEL)?;
        let marginal = marginal_ellipsoid_test(fit, &[0, 2], &[b0, 1.0], ELLIPSOID_LEVEL)?;
        critical = joint.critical;
        marginal_critical = marginal.critical;
        points.push(EllipsoidPoint {
            name,
            hypothesis,
            intercept: Value::new(b0, "1").against(published.filter(|_| refs)),
            statistic: Value::new(joint.statistic, "1"),
            inside: joint.inside,
            expected_inside: refs.then_some(expected),
            marginal_statistic: Value::new(marginal.statistic, "1"),
            marginal_inside: marginal.inside,
        });
    }
    Ok(EllipsoidBlock {
        level: ELLIPSOID_LEVEL,
        critical: Value::new(critical, "1"),
        marginal_critical: Value::new(marginal_critical, "1"),
        points,
    })
}

fn variance_block(ds: &Dataset, gamma0: f64, opts: &AnalysisOptions) -> Result<VarianceBlock, CliError> {
    let em = &opts.error_model;
    let mut budgets = Vec::with_capacity(ds.len());
    for r in ds.records() {
        let b = transmit(gamma0, r.dbh, r.height, em, opts.cross).map_err(CliError::numerical)?;
        budgets.push(TreeBudget {
            id: r.id,
            d: r.dbh,
            h: r.height,
            volume: da_volume(gamma0, r.dbh, r.height),
            dv_dd: b.dv_dd,
            dv_dh: b.dv_dh,
            term_d: b.term_d,
            term_h: b.term_h,
            term_cross: b.term_cross,
            total: b.total,
            sigma_v: b.sigma_v,
        });
    }
    let big = ds.largest();
    let at = |cross| transmit(gamma0, big.dbh, big.height, em, cross).map_err(CliError::numerical);
    let chosen = at(opts.cross)?;
    let standard = at(CrossTerm::StandardDelta)?;
    let units = BTreeMap::from([
        ("d", "ft"),
        ("h", "ft"),
        ("volume", "ft3"),
        ("dv_dd", "ft2"),
        ("dv_dh", "ft2"),
        ("term_d", "ft6"),
        ("term_h", "ft6"),
        ("term_cross", "ft6"),
        ("total", "ft6"),
        ("sigma_v", "ft3"),
    ]);
    Ok(VarianceBlock {
        cv_d: Value::new(em.cv_d, "1"),
        cv_h: Value::new(em.cv_h, "1"),
        rho_dh: Value::new(em.rho_dh, "1"),
        cross_term: opts.cross,
        gamma0: Value::new(gamma0, "1"),
        units,
        budgets,
        largest_tree: LargestTree {
            id: big.id,
            total: Value::new(chosen.total, "ft6")
                .against(opts.references.then_some(reference::LARGEST_TREE_VARIANCE)),
            sigma_v: Value::new(chosen.sigma_v, "ft3"),
            standard_delta_total: Value::new(standard.total, "ft6"),
        },
    })
}

fn honer_block(ds: &Dataset) -> Result<HonerBlock, CliError> {
    let mut trees = Vec::with_capacity(ds.len());
    for r in ds.records() {
        let dbh_in = r.dbh * 12.0;
        let predicted = honer_volume(dbh_in, r.height, &HONER_CHERRY).map_err(CliError::numerical)?;
        trees.push(HonerTree {
            id: r.id,
            dbh_in,
            height_ft: r.height,
            observed: r.volume,
            predicted,
            ratio: predicted / r.volume,
        });
    }
    let mean_ratio = trees.iter().map(|t| t.ratio).sum::<f64>() / trees.len() as f64;
    let rss = trees.iter().map(|t| (t.observed - t.predicted).powi(2)).sum();
    Ok(HonerBlock {
        c1: Value::new(HONER_CHERRY.c1, "1"),
        c2: Value::new(HONER_CHERRY.c2, "ft"),
        units: BTreeMap::from([
            ("dbh_in", "in"),
            ("height_ft", "ft"),
            ("observed", "ft3"),
            ("predicted", "ft3"),
            ("ratio", "1"),
        ]),
        trees,
        mean_ratio: Value::new(mean_ratio, "1"),
        rss: Value::new(rss, "ft6"),
    })
}

/// Run the whole pipeline on `ds`.
pub fn analyze(ds: &Dataset, opts: &AnalysisOptions) -> Result<Report, CliError> {
    let refs = opts.references;
    let r = |x: f64| refs.then_some(x);

    let units = ds.source_units();
    let dataset = DatasetInfo {
        name: ds.name().to_string(),
        n: ds.len(),
        source_units: BTreeMap::from([
            ("dbh", units.dbh.to_string()),
            ("height", units.height.to_string()),
            ("volume", units.volume.to_string()),
        ]),
    };

    let s = summary(ds);
    let summary = SummaryBlock {
        mean_dbh: Value::new(s.mean_dbh_ft, "ft").against(r(reference::MEAN_DBH)),
        mean_height: Value::new(s.mean_height_ft, "ft").against(r(reference::MEAN_HEIGHT)),
        mean_volume: Value::new(s.mean_volume_ft3, "ft3"),
        corr_dbh_height: s.corr_dbh_height.map(|c| Value::new(c, "1").against(r(reference::CORR_DBH_HEIGHT))),
        corr_dbh_volume: s.corr_dbh_volume.map(|c| Value::new(c, "1").against(r(reference::CORR_DBH_VOLUME))),
        corr_height_volume: s.corr_height_volume.map(|c| Value::new(c, "1")),
    };

    let fit = log_fit(ds)?;
    let log_regression = LogRegression {
        model: "ln V = b0 + b1 ln d + b2 ln h",
        coefficients: (0..3)
            .map(|i| Value::new(fit.coefficients[i], "1").against(r(reference::BETA[i])))
            .collect(),
        standard_errors: (0..3)
            .map(|i| Value::new(fit.standard_errors[i], "1").against(r(reference::BETA_SE[i])))
            .collect(),
        residual_variance: Value::new(fit.residual_variance, "1"),
        rss: Value::new(fit.rss, "1"),
        df: fit.df,
        n: fit.n,
    };

    let c = coeff_correlation(&fit)?;
    let coeff_correlations = Correlations {
        unit: "1",
        b0_b1: Value::new(c[0][1], "1"),
        b0_b2: Value::new(c[0][2], "1").against(r(reference::CORR_B0_B2)),
        b1_b2: Value::new(c[1][2], "1"),
        matrix: c,
    };

    let formulations = groups_for_trees()
        .iter()
        .map(|f| formulation_block(ds, f, refs))
        .collect::<Result<Vec<_>, _>>()?;
    let gamma_a = formulations[0].through_origin.gamma0.value;

    let ellipsoid = ellipsoid_block(&fit, gamma_a, refs)?;

    let gamma_rounded = round_significant(gamma_a, 3);
    let lambda_rounded = lambda_from_gamma(gamma_rounded).ok();
    let lambda_hat = lambda_from_gamma(gamma_a).ok();
    let taper_hat = match lambda_hat {
        Some(l) => Some(taper(l, s.mean_dbh_ft, s.mean_height_ft).map_err(CliError::numerical)?),
        None => None,
    };
    let geometry = GeometryBlock {
        gamma0: Value::new(gamma_a, "1"),
        gamma0_rounded: Value::new(gamma_rounded, "1"),
        lambda_rounded: lambda_rounded.map(|l| Value::new(l, "1").against(r(reference::LAMBDA))),
        lambda_hat: lambda_hat.map(|l| Value::new(l, "1").against(r(reference::LAMBDA))),
        solid: lambda_hat.and_then(|l| SolidModel::frustum(l).ok()),
        average_dbh: Value::new(s.mean_dbh_ft, "ft"),
        average_height: Value::new(s.mean_height_ft, "ft"),
        taper: taper_hat.map(|t| Value::new(t, "ft/ft").against(r(reference::TAPER))),
        literature_taper: Value::new(LITERATURE_TAPER, "ft/ft"),
    };

    let variance = variance_block(ds, gamma_a, opts)?;
    let honer = honer_block(ds)?;

    let d3: Vec<f64> = ds.dbh().iter().map(|d| d.powi(3)).collect();
    let k = fit_through_origin(&d3, &ds.volumes())?.gamma0;
    let rss_rounded = prediction_rss(ds, |d, h| da_volume(gamma_rounded, d, h));
    let rss = RssBlock {
        da_rounded_gamma: Value::new(gamma_rounded, "1"),
        da_rounded: Value::new(rss_rounded, "ft6")
            .against(r(reference::RSS_DA_VALUE).filter(|_| gamma_rounded == reference::RSS_DA)),
        da_full: Value::new(prediction_rss(ds, |d, h| da_volume(gamma_a, d, h)), "ft6"),
        honer: honer.rss.clone(),
        d_only_k: Value::new(k, "1"),
        d_only: Value::new(
            prediction_rss(ds, |d, _| meyer_cubic_volume(d, k, 3.0).unwrap_or(f64::NAN)),
            "ft6",
        ),
    };

    let discrepancies = discrepancies(&ellipsoid, &variance, &honer, &rss, refs);

    Ok(Report {
        dataset,
        summary,
        log_regression,
        coeff_correlations,
        ellipsoid,
        formulations,
        geometry,
        variance,
        rss,
        honer,
        discrepancies,
    })
}

fn discrepancies(
    ellipsoid: &EllipsoidBlock,
    variance: &VarianceBlock,
    honer: &HonerBlock,
    rss: &RssBlock,
    refs: bool,
) -> Vec<Discrepancy> {
    let mut out = Vec::new();
    let big = &variance.largest_tree;
    out.push(Discrepancy {
        id: "cross_term_factor",
        computed: big.standard_delta_total.value,
        reference: None,
        unit: "ft6",
        note: format!(
            "the transmitted-variance cross term is {} the factor 2 of the delta method; \
             with the factor the largest tree's variance would be {:.6}",
            match variance.cross_term {
                CrossTerm::AsPrinted => "used without",
                CrossTerm::StandardDelta => "used with",
            },
            big.standard_delta_total.value,
        ),
    });
    for p in &ellipsoid.points {
        if p.inside != p.marginal_inside {
            out.push(Discrepancy {
                id: "ellipsoid_projection",
                computed: p.statistic.value,
                reference: None,
                unit: "1",
                note: format!(
                    "{}: the joint 3-parameter test and the (b0, b2) marginal test disagree; the joint test is reported",
                    p.name
                ),
            });
        }
    }
    if !refs {
        return out;
    }
    out.push(Discrepancy {
        id: "largest_tree_variance",
        computed: big.total.value,
        reference: Some(reference::LARGEST_TREE_VARIANCE),
        unit: "ft6",
        note: format!(
            "direct evaluation for tree {} gives {:.6} ft6, not the published figure of about 3.5 ft6",
            big.id, big.total.value
        ),
    });
    let over = (honer.mean_ratio.value - 1.0) * 100.0;
    out.push(Discrepancy {
        id: "honer_fit",
        computed: honer.mean_ratio.value,
        reference: Some(1.0),
        unit: "1",
        note: format!(
            "the published Honer constants are said to fit these trees closely, but predictions exceed \
             the observed volumes by {over:.1}% on average (RSS {:.6} ft6)",
            honer.rss.value
        ),
    });
    if let Some(published) = rss.da_rounded.reference {
        if rss.da_rounded.deviation.unwrap_or(0.0) > 0.05 {
            out.push(Discrepancy {
                id: "da_rss_rounding",
                computed: rss.da_rounded.value,
                reference: Some(published),
                unit: "ft6",
                note: format!(
                    "with gamma0 = {} the RSS is {:.6} ft6; the published {published} matches the unrounded gamma0 ({:.6} ft6)",
                    rss.da_rounded_gamma.value, rss.da_rounded.value, rss.da_full.value
                ),
            });
        }
    }
    if let Some(cone) = ellipsoid.points.iter().find(|p| p.name == "cone") {
        if cone.intercept.deviation.unwrap_or(0.0) > 5e-5 {
            out.push(Discrepancy {
                id: "ln_cone_constant",
                computed: cone.intercept.value,
                reference: cone.intercept.reference,
                unit: "1",
                note: format!("ln(pi/12) = {:.5}; the published value is slightly off", cone.intercept.value),
            });
        }
    }
    out
}
