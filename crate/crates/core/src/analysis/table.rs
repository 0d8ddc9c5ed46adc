//! The table of extra-recovery counts `C(x, j)` and its column sums `C_j`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::analysis::occupancy::binomial;
use crate::analysis::substitution::c_x1;
use crate::error::{domain, Error, Result};
use crate::segment::{count_valid_sequences, enumerate_valid_sequences, Segment, SegmentSequence};

/// Default limit on `|P_beta|` for table construction.
pub const DEFAULT_TABLE_CAP: u128 = 5_000_000;

/// One row per valid sequence; column 1 is exact, columns `j >= 2` use the
/// lower bound.
#[derive(Debug, Clone)]
pub struct CTable {
    l: usize,
    beta: Segment,
    r: Segment,
    rows: Vec<(SegmentSequence, u64)>,
    /// Multiplicity of each `C(x, 1)` value.
    c1_histogram: BTreeMap<u64, u64>,
    /// `C_j` for `j = 0..=F`; index 0 is unused and zero.
    column_sums: Vec<BigUint>,
    /// `ln C_j`, `-inf` where `C_j = 0`.
    ln_column_sums: Vec<f64>,
}

pub(crate) fn ln_big(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    match v.to_f64() {
        Some(f) if f.is_finite() => f.ln(),
        _ => {
            let shift = v.bits() - 64;
            (v >> shift).to_f64().expect("64-bit value").ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
}

impl CTable {
    pub fn build(l: usize, beta: Segment, r: Segment) -> Result<Self> {
        Self::build_capped(l, beta, r, DEFAULT_TABLE_CAP)
    }

    pub fn build_capped(l: usize, beta: Segment, r: Segment, cap: u128) -> Result<Self> {
        let size = count_valid_sequences(l, beta, r)?;
        if size > cap {
            return Err(Error::Resource(format!("|P_beta| = {size} exceeds the table cap {cap}; reduce L or beta")));
        }
        let seqs: Vec<SegmentSequence> = enumerate_valid_sequences(l, beta, r)?.collect();
        let rows: Vec<(SegmentSequence, u64)> = seqs
            .into_par_iter()
            .map(|x| {
                let c = c_x1(&x, beta, r).expect("enumerated sequences are valid");
                (x, c)
            })
            .collect();
        let mut c1_histogram = BTreeMap::new();
        for (_, c) in &rows {
            *c1_histogram.entry(*c).or_insert(0u64) += 1;
        }
        let f = l as u64 * u64::from(r - 1);
        let column_sums: Vec<BigUint> = (0..=f)
            .map(|j| {
                if j == 0 {
                    return BigUint::zero();
                }
                let all = binomial(f, j);
                c1_histogram.iter().fold(BigUint::zero(), |acc, (&c, &n)| acc + (&all - binomial(f - c, j)) * n)
            })
            .collect();
        let ln_column_sums = column_sums.iter().map(ln_big).collect();
        Ok(Self { l, beta, r, rows, c1_histogram, column_sums, ln_column_sums })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn beta(&self) -> Segment {
        self.beta
    }

    pub fn r(&self) -> Segment {
        self.r
    }

    /// `|F| = L (r - 1)`.
    pub fn false_pairs(&self) -> u64 {
        self.l as u64 * u64::from(self.r - 1)
    }

    /// `|P_beta|`.
    pub fn sequence_count(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[(SegmentSequence, u64)] {
        &self.rows
    }

    pub fn c1_histogram(&self) -> &BTreeMap<u64, u64> {
        &self.c1_histogram
    }

    /// `C(x, j)` for row `row`.
    pub fn entry(&self, row: usize, j: u64) -> Result<BigUint> {
        let (_, c) = self.rows.get(row).ok_or_else(|| Error::Domain(format!("row {row} out of range")))?;
        if j == 0 || j > self.false_pairs() {
            return domain(format!("column {j} outside [1, {}]", self.false_pairs()));
        }
        let f = self.false_pairs();
        Ok(binomial(f, j) - binomial(f - c, j))
    }

    /// `C_j`; zero outside `[1, F]`.
    pub fn column_sum(&self, j: u64) -> BigUint {
        self.column_sums.get(j as usize).cloned().unwrap_or_default()
    }

    pub(crate) fn ln_column_sums(&self) -> &[f64] {
        &self.ln_column_sums
    }

    /// CSV with one row per sequence, columns `j = 1..=F`, and a final
    /// `Total` row.
    pub fn to_csv(&self) -> String {
        let f = self.false_pairs();
        let mut out = String::from("sequence");
        for j in 1..=f {
            write!(out, ",j={j}").expect("writing to a String cannot fail");
        }
        out.push('\n');
        for i in 0..self.rows.len() {
            out.push_str(&self.rows[i].0.to_string());
            for j in 1..=f {
                write!(out, ",{}", self.entry(i, j).expect("in range")).expect("infallible");
            }
            out.push('\n');
        }
        out.push_str("Total");
        for j in 1..=f {
            write!(out, ",{}", self.column_sums[j as usize]).expect("infallible");
        }
        out.push('\n');
        out
    }
}

/// Free-function form of [`CTable::build`].
pub fn build_c_table(l: usize, beta: Segment, r: Segment) -> Result<CTable> {
    CTable::build(l, beta, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_row() {
        let t = build_c_table(2, 2, 7).unwrap();
        let row = t.rows().iter().position(|(x, _)| x.values() == [3, 5]).unwrap();
        assert_eq!(t.entry(row, 1).unwrap(), BigUint::from(2u32));
        assert_eq!(t.entry(row, 2).unwrap(), BigUint::from(21u32));
    }

    #[test]
    fn single_position_has_no_columns_beyond_r_minus_1() {
        let t = build_c_table(1, 2, 6).unwrap();
        assert_eq!(t.false_pairs(), 5);
        assert!(t.column_sum(6).is_zero());
        assert!(!t.column_sum(5).is_zero());
    }

    #[test]
    fn column_sums_are_row_sums() {
        let t = build_c_table(3, 2, 5).unwrap();
        for j in 1..=t.false_pairs() {
            let by_row = (0..t.sequence_count()).fold(BigUint::zero(), |a, i| a + t.entry(i, j).unwrap());
            assert_eq!(by_row, t.column_sum(j));
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(CTable::build_capped(5, 2, 15, 10), Err(Error::Resource(_))));
    }

    #[test]
    fn csv_has_total_row() {
        let csv = build_c_table(1, 1, 3).unwrap().to_csv();
        assert_eq!(csv, "sequence,j=1,j=2\nA1,1,1\nA2,1,1\nTotal,2,2\n");
    }

    #[test]
    fn ln_of_large_values() {
        let v = BigUint::from(10u32).pow(400);
        assert!((ln_big(&v) - 400.0 * 10f64.ln()).abs() < 1e-9);
    }
}
