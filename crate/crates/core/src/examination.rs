//! Position-based examination curves `v(x)`: the probability that a user
//! looks at the item in rank `x` (1-based).

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub enum ExaminationFunction {
    /// `v(x) = 1 / x`
    Inv,
    /// `v(x) = 1 / log2(x + 1)`
    Log,
    /// `v(x) = exp(1 - x)`
    Exp,
    /// Tabulated `v(1), v(2), ...`, linearly interpolated between ranks and
    /// zero past the end of the table.
    Table(Vec<f64>),
}

impl ExaminationFunction {
    /// Validates a tabulated curve: entries in `[0, 1]`, non-increasing.
    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("examination table is empty".into()));
        }
        if let Some(bad) = values.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidInput(format!("examination table entry {bad} outside [0, 1]")));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput("examination table must be non-increasing".into()));
        }
        Ok(Self::Table(values))
    }

    /// Parses `inv`, `log` or `exp`.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "inv" => Some(Self::Inv),
            "log" => Some(Self::Log),
            "exp" => Some(Self::Exp),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Inv => "inv",
            Self::Log => "log",
            Self::Exp => "exp",
            Self::Table(_) => "table",
        }
    }

    /// Evaluates `v(x)` for real `x >= 1`.
    pub fn value(&self, x: f64) -> Result<f64> {
        if !(x >= 1.0) {
            return Err(Error::Domain { x });
        }
        Ok(self.eval(x))
    }

    /// `v` at the 1-based integer rank `rank`.
    #[inline]
    pub fn at_rank(&self, rank: usize) -> f64 {
        debug_assert!(rank >= 1);
        self.eval(rank as f64)
    }

    /// `v(k)` for `k = 1..=n`.
    pub fn rank_values(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|k| self.at_rank(k)).collect()
    }

    // Callers guarantee x >= 1.
    #[inline]
    pub(crate) fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Inv => 1.0 / x,
            Self::Log => 1.0 / math::log2(x + 1.0),
            Self::Exp => math::exp(1.0 - x),
            Self::Table(t) => {
                let hi = math::ceil(x) as usize;
                if hi > t.len() {
                    return 0.0;
                }
                let lo = math::floor(x) as usize;
                if lo == hi {
                    return t[lo - 1];
                }
                let frac = x - lo as f64;
                t[lo - 1] + frac * (t[hi - 1] - t[lo - 1])
            }
        }
    }

    /// First derivative `v'(x)`, defined for the closed-form kinds only.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        if !(x >= 1.0) {
            return Err(Error::Domain { x });
        }
        self.derivative_unchecked(x)
    }

    pub(crate) fn derivative_unchecked(&self, x: f64) -> Result<f64> {
        match self {
            Self::Inv => Ok(-1.0 / (x * x)),
            Self::Log => {
                let l = math::ln(x + 1.0);
                Ok(-core::f64::consts::LN_2 / ((x + 1.0) * l * l))
            }
            Self::Exp => Ok(-math::exp(1.0 - x)),
            Self::Table(_) => Err(Error::Unsupported("tabulated examination functions have no derivative")),
        }
    }

    /// Whether the curve is convex on `[1, inf)`. Tables are checked on
    /// their second differences, including the drop to zero past the end.
    pub fn is_convex(&self) -> bool {
        match self {
            Self::Inv | Self::Log | Self::Exp => true,
            Self::Table(t) => {
                let mut ext = t.clone();
                ext.push(0.0);
                ext.push(0.0);
                ext.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-15)
            }
        }
    }
}
