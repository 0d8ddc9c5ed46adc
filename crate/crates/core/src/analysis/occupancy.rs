//! Distribution of the number of lit bits after `n = k2 * L` uniform
//! insertions into `m2` bits.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `num / den` as `f64`, keeping about 64 significant bits.
pub(crate) fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = (den.bits() as i64 - num.bits() as i64 + 64).max(0) as u64;
    let q = (num << shift) / den;
    let mut v = q.to_f64().unwrap_or(f64::INFINITY);
    // Apply 2^-shift in steps so the intermediate never underflows early.
    let mut s = shift;
    while s > 0 {
        let step = s.min(1000);
        v *= (-(step as f64)).exp2();
        s -= step;
    }
    v
}

pub(crate) fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Probability that exactly `alpha` of `m2` bits are lit after `k2 * l`
/// uniform insertions, by exact inclusion-exclusion:
///
/// `C(m2, a) * sum_g (-1)^g C(a, g) (a - g)^n / m2^n`.
///
/// Returns 0 outside the support `1..=min(m2, k2 * l)`.
pub fn pr_alpha(alpha: u64, m2: u64, k2: u64, l: u64) -> f64 {
    let n = k2 * l;
    if m2 == 0 || n == 0 || alpha == 0 || alpha > m2.min(n) {
        return 0.0;
    }
    let n32 = u32::try_from(n).expect("insertion count fits u32");
    let mut surj = BigInt::zero();
    for g in 0..=alpha {
        let term = BigInt::from(binomial(alpha, g)) * BigInt::from(alpha - g).pow(n32);
        if g % 2 == 0 {
            surj += term;
        } else {
            surj -= term;
        }
    }
    debug_assert!(!surj.is_negative());
    let num = binomial(m2, alpha) * surj.magnitude();
    let den = BigUint::from(m2).pow(n32);
    ratio_f64(&num, &den).clamp(0.0, 1.0)
}

/// Occupancy distribution evolved one insertion at a time.
///
/// Every update adds non-negative terms, so the floating-point result has no
/// cancellation. `dist()[a]` is the probability of `a` lit bits.
#[derive(Debug, Clone)]
pub struct Occupancy {
    m: usize,
    insertions: u64,
    p: Vec<f64>,
    scratch: Vec<f64>,
}

impl Occupancy {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "filter size must be positive");
        let mut p = vec![0.0; m + 1];
        p[0] = 1.0;
        Self { m, insertions: 0, p, scratch: vec![0.0; m + 1] }
    }

    pub fn insertions(&self) -> u64 {
        self.insertions
    }

    pub fn dist(&self) -> &[f64] {
        &self.p
    }

    pub fn advance(&mut self, steps: u64) {
        let m = self.m as f64;
        for _ in 0..steps {
            self.insertions += 1;
            let top = (self.insertions as usize).min(self.m);
            self.scratch[0] = 0.0;
            for a in 1..=top {
                self.scratch[a] = self.p[a] * (a as f64 / m) + self.p[a - 1] * ((self.m - a + 1) as f64 / m);
            }
            std::mem::swap(&mut self.p, &mut self.scratch);
        }
    }
}

/// Full distribution of lit bits after `n` insertions.
pub fn occupancy_distribution(m: usize, n: u64) -> Vec<f64> {
    let mut occ = Occupancy::new(m);
    occ.advance(n);
    occ.p
}
