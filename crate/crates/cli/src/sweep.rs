//! `lo:hi:step` ranges and a single value as the degenerate case.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep<T> {
    pub lo: T,
    pub hi: T,
    pub step: T,
}

impl<T: FromStr + PartialOrd + Copy + Default> FromStr for Sweep<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |p: &str| p.trim().parse::<T>().map_err(|_| format!("`{p}` is not a number"));
        let parts: Vec<&str> = s.split(':').collect();
        let (lo, hi, step) = match parts.as_slice() {
            [v] => {
                let v = num(v)?;
                (v, v, v)
            }
            [lo, hi] => return Err(format!("`{lo}:{hi}` needs a step, as in lo:hi:step")),
            [lo, hi, step] => (num(lo)?, num(hi)?, num(step)?),
            _ => return Err(format!("`{s}` is not of the form lo:hi:step")),
        };
        if hi < lo {
            return Err(format!("sweep upper end is below its lower end in `{s}`"));
        }
        if parts.len() == 3 && step.partial_cmp(&T::default()) != Some(Ordering::Greater) {
            return Err(format!("sweep step must be positive in `{s}`"));
        }
        Ok(Self { lo, hi, step })
    }
}

impl<T: fmt::Display + PartialEq> fmt::Display for Sweep<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}:{}:{}", self.lo, self.hi, self.step)
        }
    }
}

impl Sweep<u64> {
    pub fn points(&self) -> Vec<u64> {
        if self.lo == self.hi {
            return vec![self.lo];
        }
        (self.lo..=self.hi).step_by(self.step as usize).collect()
    }
}

impl Sweep<f64> {
    /// Points `lo + i * step` up to `hi`, computed by index so rounding does
    /// not accumulate.
    pub fn points(&self) -> Vec<f64> {
        if self.lo == self.hi {
            return vec![self.lo];
        }
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as u64;
        (0..=n).map(|i| self.lo + i as f64 * self.step).collect()
    }
}
