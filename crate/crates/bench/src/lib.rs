//! Shared inputs for the benchmarks.

use mensura_core::data::cherry_dataset;
use mensura_core::nalgebra::DMatrix;
use mensura_core::regress::design_matrix;

/// Design matrix and response of the cherry log-log regression.
pub fn cherry_log_problem() -> (DMatrix<f64>, Vec<f64>) {
    let ds = cherry_dataset();
    let ln = |v: Vec<f64>| v.into_iter().map(f64::ln).collect::<Vec<_>>();
    let (ld, lh, lv) = (ln(ds.dbh()), ln(ds.heights()), ln(ds.volumes()));
    (design_matrix(&[&ld, &lh], true).expect("cherry design"), lv)
}
