//! Buckingham Pi reduction.
//!
//! The dimension matrix of a problem has one row per base dimension in use
//! and one column per variable. Its kernel, computed exactly, spans every
//! dimensionless monomial of the variables; the number of independent groups
//! is `n - rank`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::units::{
    big_to_exponent, exponent_to_big, format_ratio, parse_dimension_expr, BaseDimension, Dimension,
    Exponent, Quantity, UnitError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PiError {
    #[error("a dimensional problem needs at least one variable")]
    NoVariables,
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("bad variable spec `{spec}`: {reason}")]
    BadSpec { spec: String, reason: String },
    #[error("group `{0}` is not dimensionless")]
    NotDimensionless(String),
    #[error("group `{0}` has no nonzero exponent")]
    TrivialGroup(String),
    #[error("groups are not linearly independent")]
    Dependent,
    #[error("expected {expected} groups, got {found}")]
    WrongCount { expected: usize, found: usize },
    #[error("exponent does not fit in 64-bit rational")]
    ExponentOverflow,
    #[error("missing value for variable `{0}`")]
    MissingVariable(String),
    #[error("variable `{name}` has dimension {found}, declared {declared}")]
    DimensionMismatch {
        name: String,
        declared: Dimension,
        found: Dimension,
    },
    #[error("variable `{name}` = {value} cannot be raised to {exponent}")]
    InvalidBase {
        name: String,
        value: f64,
        exponent: String,
    },
}

/// A named physical variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSpec {
    pub name: String,
    pub dimension: Dimension,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, dimension: Dimension) -> Self {
        VariableSpec {
            name: name.into(),
            dimension,
        }
    }

    /// Parse `name:dims`, e.g. `V:L^3` or `n:1`.
    pub fn parse(spec: &str) -> Result<Self, PiError> {
        let bad = |reason: String| PiError::BadSpec {
            spec: spec.to_string(),
            reason,
        };
        let (name, dims) = spec
            .split_once(':')
            .ok_or_else(|| bad("expected `name:dimension`".into()))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(bad("empty variable name".into()));
        }
        let dimension = parse_dimension_expr(dims).map_err(|e: UnitError| bad(e.to_string()))?;
        Ok(VariableSpec::new(name, dimension))
    }
}

fn check_names(vars: &[VariableSpec]) -> Result<(), PiError> {
    if vars.is_empty() {
        return Err(PiError::NoVariables);
    }
    for (i, v) in vars.iter().enumerate() {
        if vars[..i].iter().any(|w| w.name == v.name) {
            return Err(PiError::DuplicateVariable(v.name.clone()));
        }
    }
    Ok(())
}

/// Dense matrix of exact rationals, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<BigRational>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        RationalMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().cloned().collect(),
        }
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let rows: Vec<Vec<BigRational>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigRational::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &BigRational {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: BigRational) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[BigRational] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(BigRational::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    /// Rank by exact elimination.
    pub fn rank(&self) -> usize {
        eliminate(self).pivots.len()
    }
}

struct Echelon {
    // integer rows in reduced form: every pivot column is zero outside its pivot row
    rows: Vec<Vec<BigInt>>,
    // (row, column) of each pivot
    pivots: Vec<(usize, usize)>,
}

fn row_to_integers(row: &[BigRational]) -> Vec<BigInt> {
    let lcm = row
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    row.iter()
        .map(|x| x.numer() * (&lcm / x.denom()))
        .collect()
}

fn divide_by_content(row: &mut [BigInt]) {
    let g = row.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in row.iter_mut() {
            *x /= &g;
        }
    }
}

// Fraction-free Gauss-Jordan elimination over the integers.
fn eliminate(m: &RationalMatrix) -> Echelon {
    let mut rows: Vec<Vec<BigInt>> = (0..m.rows).map(|r| row_to_integers(m.row(r))).collect();
    let mut pivots = Vec::new();
    let mut next = 0;
    for col in 0..m.cols {
        let Some(found) = (next..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(next, found);
        let pivot_row = rows[next].clone();
        let p = &pivot_row[col];
        for (r, row) in rows.iter_mut().enumerate() {
            if r == next || row[col].is_zero() {
                continue;
            }
            let a = row[col].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                *x = &*x * p - &a * y;
            }
            divide_by_content(row);
        }
        pivots.push((next, col));
        next += 1;
        if next == rows.len() {
            break;
        }
    }
    Echelon { rows, pivots }
}

fn canonicalize(v: Vec<BigRational>) -> Vec<BigRational> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let mut ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    divide_by_content(&mut ints);
    if ints.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
        for x in ints.iter_mut() {
            *x = -&*x;
        }
    }
    ints.into_iter().map(BigRational::from_integer).collect()
}

/// Basis of the kernel of `m`.
///
/// One vector per free column, each scaled to coprime integers with a
/// positive leading entry. The basis is empty when `m` has full column rank.
pub fn nullspace_basis(m: &RationalMatrix) -> Vec<Vec<BigRational>> {
    let ech = eliminate(m);
    let pivot_cols: Vec<usize> = ech.pivots.iter().map(|&(_, c)| c).collect();
    (0..m.cols)
        .filter(|c| !pivot_cols.contains(c))
        .map(|free| {
            let mut v = vec![BigRational::zero(); m.cols];
            v[free] = BigRational::one();
            for &(r, c) in &ech.pivots {
                let row = &ech.rows[r];
                v[c] = -BigRational::new(row[free].clone(), row[c].clone());
            }
            canonicalize(v)
        })
        .collect()
}

/// Dimension matrix of a problem: rows are base dimensions, columns variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionMatrix {
    pub bases: Vec<BaseDimension>,
    pub variables: Vec<VariableSpec>,
    pub matrix: RationalMatrix,
}

/// Build the dimension matrix, keeping only the base dimensions that occur.
///
/// A problem whose variables are all dimensionless gets a single zero
/// `Length` row.
pub fn dimension_matrix(vars: &[VariableSpec]) -> Result<DimensionMatrix, PiError> {
    check_names(vars)?;
    let mut bases: Vec<BaseDimension> = BaseDimension::ALL
        .into_iter()
        .filter(|&b| vars.iter().any(|v| !v.dimension.exponent(b).is_zero()))
        .collect();
    if bases.is_empty() {
        bases.push(BaseDimension::Length);
    }
    let mut matrix = RationalMatrix::zeros(bases.len(), vars.len());
    for (i, &b) in bases.iter().enumerate() {
        for (j, v) in vars.iter().enumerate() {
            matrix.set(i, j, exponent_to_big(&v.dimension.exponent(b)));
        }
    }
    Ok(DimensionMatrix {
        bases,
        variables: vars.to_vec(),
        matrix,
    })
}

/// A dimensionless monomial over a problem's variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionlessGroup {
    label: String,
    terms: Vec<(VariableSpec, Exponent)>,
}

impl DimensionlessGroup {
    /// `exponents` pairs variable names with exponents; variables not named
    /// get exponent zero.
    pub fn new(
        label: impl Into<String>,
        vars: &[VariableSpec],
        exponents: &[(&str, Exponent)],
    ) -> Result<Self, PiError> {
        check_names(vars)?;
        let label = label.into();
        for (name, _) in exponents {
            if !vars.iter().any(|v| v.name == *name) {
                return Err(PiError::MissingVariable(name.to_string()));
            }
        }
        let terms = vars
            .iter()
            .map(|v| {
                let e = exponents
                    .iter()
                    .filter(|(n, _)| *n == v.name)
                    .fold(Exponent::zero(), |acc, (_, e)| acc + e);
                (v.clone(), e)
            })
            .collect();
        let group = DimensionlessGroup { label, terms };
        group.validate()?;
        Ok(group)
    }

    fn validate(&self) -> Result<(), PiError> {
        if self.terms.iter().all(|(_, e)| e.is_zero()) {
            return Err(PiError::TrivialGroup(self.label.clone()));
        }
        if !self.dimension().is_dimensionless() {
            return Err(PiError::NotDimensionless(self.label.clone()));
        }
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Net dimension `Σ exponent(v)·dimension(v)`; zero for a valid group.
    pub fn dimension(&self) -> Dimension {
        self.terms
            .iter()
            .fold(Dimension::dimensionless(), |acc, (v, e)| acc * v.dimension.powr(*e))
    }

    pub fn exponent(&self, name: &str) -> Option<Exponent> {
        self.terms.iter().find(|(v, _)| v.name == name).map(|(_, e)| *e)
    }

    pub fn terms(&self) -> &[(VariableSpec, Exponent)] {
        &self.terms
    }

    pub fn exponent_vector(&self) -> Vec<Exponent> {
        self.terms.iter().map(|(_, e)| *e).collect()
    }
}

impl fmt::Display for DimensionlessGroup {
    /// Monomial form, e.g. `V/h^3` or `d^2/h^2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let factor = |name: &str, e: Exponent| {
            if e.is_one() {
                name.to_string()
            } else if e.is_integer() {
                format!("{name}^{}", e.numer())
            } else {
                format!("{name}^({})", format_ratio(&e))
            }
        };
        let num: Vec<String> = self
            .terms
            .iter()
            .filter(|(_, e)| e.is_positive())
            .map(|(v, e)| factor(&v.name, *e))
            .collect();
        let den: Vec<String> = self
            .terms
            .iter()
            .filter(|(_, e)| e.is_negative())
            .map(|(v, e)| factor(&v.name, -*e))
            .collect();
        let num = if num.is_empty() { "1".to_string() } else { num.join("*") };
        match den.len() {
            0 => f.write_str(&num),
            1 => write!(f, "{num}/{}", den[0]),
            _ => write!(f, "{num}/({})", den.join("*")),
        }
    }
}

impl Serialize for DimensionlessGroup {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.terms.len()))?;
        for (v, e) in &self.terms {
            map.serialize_entry(&v.name, &format_ratio(e))?;
        }
        map.end()
    }
}

/// A complete set of independent dimensionless groups for a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PiBasis {
    variables: Vec<VariableSpec>,
    groups: Vec<DimensionlessGroup>,
}

impl PiBasis {
    /// Validate a hand-chosen basis: each group dimensionless, the groups
    /// independent, and exactly `n - rank` of them.
    pub fn new(vars: &[VariableSpec], groups: Vec<DimensionlessGroup>) -> Result<Self, PiError> {
        let dm = dimension_matrix(vars)?;
        for g in &groups {
            if g.terms.len() != vars.len()
                || g.terms.iter().zip(vars).any(|((v, _), w)| v != w)
            {
                return Err(PiError::MissingVariable(g.label.clone()));
            }
            g.validate()?;
        }
        let expected = vars.len() - dm.matrix.rank();
        if groups.len() != expected {
            return Err(PiError::WrongCount {
                expected,
                found: groups.len(),
            });
        }
        let rows: Vec<Vec<BigRational>> = groups
            .iter()
            .map(|g| g.exponent_vector().iter().map(exponent_to_big).collect())
            .collect();
        if !rows.is_empty() && RationalMatrix::from_rows(&rows).rank() != groups.len() {
            return Err(PiError::Dependent);
        }
        Ok(PiBasis {
            variables: vars.to_vec(),
            groups,
        })
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn groups(&self) -> &[DimensionlessGroup] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

impl Serialize for PiBasis {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("size", &self.groups.len())?;
        map.serialize_entry("groups", &self.groups)?;
        map.end()
    }
}

/// Canonical Pi basis of a problem from the kernel of its dimension matrix.
pub fn pi_basis(vars: &[VariableSpec]) -> Result<PiBasis, PiError> {
    let dm = dimension_matrix(vars)?;
    let groups = nullspace_basis(&dm.matrix)
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let exps = v
                .iter()
                .map(|x| big_to_exponent(x).ok_or(PiError::ExponentOverflow))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(DimensionlessGroup {
                label: format!("pi{i}"),
                terms: vars.iter().cloned().zip(exps).collect(),
            })
        })
        .collect::<Result<Vec<_>, PiError>>()?;
    PiBasis::new(vars, groups)
}

/// Variables of the tree volume problem: `V` (L³), `d` (L), `h` (L).
pub fn tree_variables() -> Vec<VariableSpec> {
    vec![
        VariableSpec::new("V", Dimension::length_pow(3)),
        VariableSpec::new("d", Dimension::length()),
        VariableSpec::new("h", Dimension::length()),
    ]
}

/// Variables of the toilet-roll problem: paper length `L`, roll diameter
/// `D`, core diameter `d`, paper thickness `t`.
pub fn toilet_roll_variables() -> Vec<VariableSpec> {
    ["L", "D", "d", "t"]
        .into_iter()
        .map(|n| VariableSpec::new(n, Dimension::length()))
        .collect()
}

/// One of the four labelled choices of (π₀, π₁) for the tree problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Formulation {
    pub label: char,
    pub basis: PiBasis,
}

impl Formulation {
    /// Response group, always carrying `V`.
    pub fn pi0(&self) -> &DimensionlessGroup {
        &self.basis.groups[0]
    }

    pub fn pi1(&self) -> &DimensionlessGroup {
        &self.basis.groups[1]
    }
}

/// The formulations (a)-(d):
///
/// | label | π₀      | π₁        |
/// |-------|---------|-----------|
/// | a     | V/h³    | d²/h²     |
/// | b     | V/h³    | d/h       |
/// | c     | V/d³    | h/d       |
/// | d     | V/d³    | d/h       |
pub fn groups_for_trees() -> [Formulation; 4] {
    let vars = tree_variables();
    let r = Exponent::from_integer;
    type Monomial = [(&'static str, i64); 2];
    let spec: [(char, Monomial, Monomial); 4] = [
        ('a', [("V", 1), ("h", -3)], [("d", 2), ("h", -2)]),
        ('b', [("V", 1), ("h", -3)], [("d", 1), ("h", -1)]),
        ('c', [("V", 1), ("d", -3)], [("h", 1), ("d", -1)]),
        ('d', [("V", 1), ("d", -3)], [("d", 1), ("h", -1)]),
    ];
    spec.map(|(label, p0, p1)| {
        let g0 = DimensionlessGroup::new("pi0", &vars, &p0.map(|(n, e)| (n, r(e))))
            .expect("fixed group is dimensionless");
        let g1 = DimensionlessGroup::new("pi1", &vars, &p1.map(|(n, e)| (n, r(e))))
            .expect("fixed group is dimensionless");
        Formulation {
            label,
            basis: PiBasis::new(&vars, vec![g0, g1]).expect("fixed basis is valid"),
        }
    })
}

/// Evaluate `Π value(v)^exponent(v)` over canonical-unit quantities.
pub fn evaluate_group(
    g: &DimensionlessGroup,
    values: &BTreeMap<String, Quantity>,
) -> Result<f64, PiError> {
    let mut acc = Quantity::dimensionless(1.0);
    for (v, e) in &g.terms {
        if e.is_zero() {
            continue;
        }
        let q = values
            .get(&v.name)
            .ok_or_else(|| PiError::MissingVariable(v.name.clone()))?;
        if q.dimension != v.dimension {
            return Err(PiError::DimensionMismatch {
                name: v.name.clone(),
                declared: v.dimension,
                found: q.dimension,
            });
        }
        let bad_base = (q.value <= 0.0 && !e.is_integer()) || (q.value == 0.0 && e.is_negative());
        if bad_base || !q.value.is_finite() {
            return Err(PiError::InvalidBase {
                name: v.name.clone(),
                value: q.value,
                exponent: format_ratio(e),
            });
        }
        acc = acc * q.powr(*e);
    }
    debug_assert!(acc.dimension.is_dimensionless());
    Ok(acc.value)
}

/// `name -> "p/q"` view of a group, as serialized.
pub fn exponent_strings(g: &DimensionlessGroup) -> BTreeMap<String, String> {
    g.terms
        .iter()
        .map(|(v, e)| (v.name.clone(), format_ratio(e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn int_rows(m: &RationalMatrix) -> Vec<Vec<i64>> {
        (0..m.rows())
            .map(|i| m.row(i).iter().map(|x| x.to_integer().try_into().unwrap()).collect())
            .collect()
    }

    #[test]
    fn tree_dimension_matrix() {
        let dm = dimension_matrix(&tree_variables()).unwrap();
        assert_eq!(dm.bases, vec![BaseDimension::Length]);
        assert_eq!(int_rows(&dm.matrix), vec![vec![3, 1, 1]]);
    }

    #[test]
    fn toilet_roll_dimension_matrix() {
        let dm = dimension_matrix(&toilet_roll_variables()).unwrap();
        assert_eq!(int_rows(&dm.matrix), vec![vec![1, 1, 1, 1]]);
    }

    #[test]
    fn dimension_matrix_edge_cases() {
        assert_eq!(dimension_matrix(&[]), Err(PiError::NoVariables));
        let one = [VariableSpec::new("n", Dimension::dimensionless())];
        assert_eq!(int_rows(&dimension_matrix(&one).unwrap().matrix), vec![vec![0]]);
        let dup = [
            VariableSpec::new("x", Dimension::length()),
            VariableSpec::new("x", Dimension::length()),
        ];
        assert_eq!(dimension_matrix(&dup), Err(PiError::DuplicateVariable("x".into())));
    }

    #[test]
    fn tree_nullspace() {
        let basis = nullspace_basis(&RationalMatrix::from_i64_rows(&[vec![3, 1, 1]]));
        assert_eq!(basis, vec![vec![r(1), r(-3), r(0)], vec![r(1), r(0), r(-3)]]);
        // V/h^3 is a basis vector and d/h = (V/h^3) / (V/d^3)
        let combo: Vec<BigRational> = (0..3).map(|i| &basis[1][i] - &basis[0][i]).collect();
        assert_eq!(combo, vec![r(0), r(3), r(-3)]);
    }

    #[test]
    fn toilet_roll_nullspace_has_three_vectors() {
        let m = RationalMatrix::from_i64_rows(&[vec![1, 1, 1, 1]]);
        let basis = nullspace_basis(&m);
        assert_eq!(basis.len(), 3);
        for v in &basis {
            assert!(m.mul_vec(v).iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn full_rank_has_empty_kernel() {
        assert!(nullspace_basis(&RationalMatrix::identity(2)).is_empty());
    }

    #[test]
    fn nullspace_scaling_is_canonical() {
        let m = RationalMatrix::from_rows(&[vec![
            BigRational::new(1.into(), 2.into()),
            BigRational::new(1.into(), 3.into()),
        ]]);
        // x/2 + y/3 = 0  =>  (2, -3)
        assert_eq!(nullspace_basis(&m), vec![vec![r(2), r(-3)]]);
    }

    #[test]
    fn mechanics_problem() {
        // force, mass, length, time: F = m L / T^2 gives one group
        let vars: Vec<VariableSpec> = ["F:M*L/T^2", "m:M", "x:L", "t:T"]
            .iter()
            .map(|s| VariableSpec::parse(s).unwrap())
            .collect();
        let basis = pi_basis(&vars).unwrap();
        assert_eq!(basis.len(), 1);
        assert!(basis.groups()[0].dimension().is_dimensionless());
        assert_eq!(basis.groups()[0].to_string(), "F*t^2/(m*x)");
    }

    #[test]
    fn tree_formulations() {
        let f = groups_for_trees();
        let labels: Vec<char> = f.iter().map(|x| x.label).collect();
        assert_eq!(labels, vec!['a', 'b', 'c', 'd']);
        let a1 = f[0].pi1();
        assert_eq!(a1.exponent("d"), Some(Exponent::from_integer(2)));
        assert_eq!(a1.exponent("h"), Some(Exponent::from_integer(-2)));
        assert_eq!(a1.exponent("V"), Some(Exponent::from_integer(0)));
        let c1 = f[2].pi1();
        assert_eq!(c1.exponent("h"), Some(Exponent::from_integer(1)));
        assert_eq!(c1.exponent("d"), Some(Exponent::from_integer(-1)));
        assert_eq!(c1.exponent("V"), Some(Exponent::from_integer(0)));
        for form in &f {
            for g in form.basis.groups() {
                assert!(g.dimension().is_dimensionless());
            }
        }
        assert_eq!(f[0].pi0().to_string(), "V/h^3");
        assert_eq!(f[0].pi1().to_string(), "d^2/h^2");
        assert_eq!(f[3].pi0().to_string(), "V/d^3");
    }

    #[test]
    fn invalid_groups_rejected() {
        let vars = tree_variables();
        let one = Exponent::from_integer(1);
        assert_eq!(
            DimensionlessGroup::new("bad", &vars, &[("V", one)]),
            Err(PiError::NotDimensionless("bad".into()))
        );
        assert_eq!(
            DimensionlessGroup::new("zero", &vars, &[]),
            Err(PiError::TrivialGroup("zero".into()))
        );
        let g = DimensionlessGroup::new("g", &vars, &[("d", one), ("h", -one)]).unwrap();
        let g2 = DimensionlessGroup::new("g2", &vars, &[("d", one * 2), ("h", -one * 2)]).unwrap();
        assert_eq!(PiBasis::new(&vars, vec![g.clone(), g2]), Err(PiError::Dependent));
        assert!(matches!(
            PiBasis::new(&vars, vec![g]),
            Err(PiError::WrongCount { expected: 2, found: 1 })
        ));
    }

    fn tree_one() -> BTreeMap<String, Quantity> {
        BTreeMap::from([
            ("V".to_string(), Quantity::cubic_feet(10.3)),
            ("d".to_string(), Quantity::feet(8.3 / 12.0)),
            ("h".to_string(), Quantity::feet(70.0)),
        ])
    }

    #[test]
    fn evaluate_tree_one() {
        let f = groups_for_trees();
        let values = tree_one();
        let p1 = evaluate_group(f[0].pi1(), &values).unwrap();
        let p0 = evaluate_group(f[0].pi0(), &values).unwrap();
        let e1 = (8.3f64 / 12.0 / 70.0).powi(2);
        let e0 = 10.3 / 70f64.powi(3);
        assert!((p1 - e1).abs() / e1 < 1e-14);
        assert!((p1 - 9.7633e-5).abs() < 1e-8);
        assert!((p0 - e0).abs() / e0 < 1e-14);
        assert!((p0 - 3.00292e-5).abs() < 1e-9);

        let vars = tree_variables();
        let one = Exponent::from_integer(1);
        let vv = DimensionlessGroup::new("VV", &vars, &[("V", one), ("V", -one)]);
        assert_eq!(vv, Err(PiError::TrivialGroup("VV".into())));
    }

    #[test]
    fn evaluate_errors() {
        let f = groups_for_trees();
        let mut values = tree_one();
        values.remove("h");
        assert_eq!(
            evaluate_group(f[0].pi0(), &values),
            Err(PiError::MissingVariable("h".into()))
        );
        let mut values = tree_one();
        values.insert("h".into(), Quantity::cubic_feet(1.0));
        assert!(matches!(
            evaluate_group(f[0].pi0(), &values),
            Err(PiError::DimensionMismatch { .. })
        ));
        let vars = tree_variables();
        let half = Exponent::new(1, 2);
        let g = DimensionlessGroup::new("root", &vars, &[("d", half), ("h", -half)]).unwrap();
        let mut values = tree_one();
        values.insert("d".into(), Quantity::feet(-1.0));
        assert!(matches!(evaluate_group(&g, &values), Err(PiError::InvalidBase { .. })));
    }

    #[test]
    fn groups_serialize_as_ratio_maps() {
        let vars = tree_variables();
        let g = DimensionlessGroup::new(
            "g",
            &vars,
            &[("V", Exponent::new(1, 3)), ("d", Exponent::new(-1, 2)), ("h", Exponent::new(-1, 2))],
        )
        .unwrap();
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, r#"{"V":"1/3","d":"-1/2","h":"-1/2"}"#);
    }

    fn small_matrix() -> impl Strategy<Value = RationalMatrix> {
        (1usize..4, 1usize..6).prop_flat_map(|(rows, cols)| {
            prop::collection::vec((-4i64..=4, 1i64..=3), rows * cols).prop_map(move |cells| {
                let rows: Vec<Vec<BigRational>> = cells
                    .chunks(cols)
                    .map(|c| c.iter().map(|&(n, d)| BigRational::new(n.into(), d.into())).collect())
                    .collect();
                RationalMatrix::from_rows(&rows)
            })
        })
    }

    // Plain rational row reduction, kept apart from the fraction-free path.
    fn brute_rank(m: &RationalMatrix) -> usize {
        let mut rows: Vec<Vec<BigRational>> = (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
        let mut rank = 0;
        for c in 0..m.cols() {
            if let Some(p) = (rank..rows.len()).find(|&i| !rows[i][c].is_zero()) {
                rows.swap(rank, p);
                let pivot = rows[rank].clone();
                for row in rows.iter_mut().skip(rank + 1) {
                    let f = &row[c] / &pivot[c];
                    for (x, y) in row.iter_mut().zip(&pivot) {
                        *x -= &f * y;
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    proptest! {
        #[test]
        fn kernel_vectors_are_annihilated(m in small_matrix()) {
            let basis = nullspace_basis(&m);
            for v in &basis {
                prop_assert!(m.mul_vec(v).iter().all(Zero::is_zero));
                prop_assert!(v.iter().any(|x| !x.is_zero()));
                prop_assert!(v.iter().all(|x| x.is_integer()));
                prop_assert!(v.iter().find(|x| !x.is_zero()).unwrap().is_positive());
            }
            prop_assert_eq!(basis.len() + brute_rank(&m), m.cols());
            if !basis.is_empty() {
                prop_assert_eq!(brute_rank(&RationalMatrix::from_rows(&basis)), basis.len());
            }
        }

        #[test]
        fn groups_are_scale_invariant(
            d in 0.3f64..3.0, h in 40.0f64..120.0, v in 5.0f64..90.0,
            s in prop::sample::select(vec![0.3048, 12.0, 0.5, 2.0, 3.28084]),
        ) {
            let values = BTreeMap::from([
                ("V".to_string(), Quantity::cubic_feet(v)),
                ("d".to_string(), Quantity::feet(d)),
                ("h".to_string(), Quantity::feet(h)),
            ]);
            let scaled: BTreeMap<String, Quantity> =
                values.iter().map(|(k, q)| (k.clone(), q.rescale_length(s))).collect();
            for f in groups_for_trees() {
                for g in f.basis.groups() {
                    let a = evaluate_group(g, &values).unwrap();
                    let b = evaluate_group(g, &scaled).unwrap();
                    prop_assert!((a - b).abs() <= 1e-10 * a.abs());
                }
            }
        }
    }
}
