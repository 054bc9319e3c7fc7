//! Integer time discretization.
//!
//! Every time quantity in the source data is a decimal number of base units
//! (hours by default). Quantities are multiplied by `10^L`, where `L` is the
//! largest number of fractional digits observed, so the solver only ever sees
//! exact integers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scaled integer time. One unit is `1 / factor` of a base unit.
pub type Time = i64;

/// Real-world unit represented by one unscaled time unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BaseUnit {
    #[default]
    Hours,
    Minutes,
    Days,
}

impl BaseUnit {
    pub fn units_per_day(self) -> i64 {
        match self {
            BaseUnit::Hours => 24,
            BaseUnit::Minutes => 1440,
            BaseUnit::Days => 1,
        }
    }
}

impl fmt::Display for BaseUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaseUnit::Hours => "hours",
            BaseUnit::Minutes => "minutes",
            BaseUnit::Days => "days",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TimeScale {
    decimal_digits: u32,
    factor: i64,
    base_unit: BaseUnit,
    origin_label: String,
}

/// Largest supported `L`; `10^18` still fits in an `i64`.
pub const MAX_DECIMAL_DIGITS: u32 = 18;

impl TimeScale {
    pub fn new(
        decimal_digits: u32,
        base_unit: BaseUnit,
        origin_label: impl Into<String>,
    ) -> Result<Self> {
        if decimal_digits > MAX_DECIMAL_DIGITS {
            return Err(Error::invalid(
                "scale.decimal_digits",
                format!("{decimal_digits} exceeds the supported maximum {MAX_DECIMAL_DIGITS}"),
            ));
        }
        Ok(Self {
            decimal_digits,
            factor: 10i64.pow(decimal_digits),
            base_unit,
            origin_label: origin_label.into(),
        })
    }

    /// Scale with `L = 0` in hours and an empty origin label.
    pub fn unit() -> Self {
        Self::new(0, BaseUnit::Hours, "").expect("L = 0 is always valid")
    }

    pub fn decimal_digits(&self) -> u32 {
        self.decimal_digits
    }

    pub fn factor(&self) -> i64 {
        self.factor
    }

    pub fn base_unit(&self) -> BaseUnit {
        self.base_unit
    }

    pub fn origin_label(&self) -> &str {
        &self.origin_label
    }

    /// Model time units per calendar day.
    pub fn units_per_day(&self) -> i64 {
        self.factor * self.base_unit.units_per_day()
    }

    /// Returns a copy of this scale with a different number of digits.
    pub fn with_decimal_digits(&self, decimal_digits: u32) -> Result<Self> {
        Self::new(decimal_digits, self.base_unit, self.origin_label.clone())
    }
}

/// An exact decimal literal as it appears in source data.
///
/// Stored as `mantissa / 10^frac_digits` with trailing fractional zeros
/// stripped, so `3.670` and `3.67` compare equal and both count as two
/// fractional digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RawDecimal {
    mantissa: i128,
    frac_digits: u32,
}

impl RawDecimal {
    pub fn from_integer(value: i64) -> Self {
        Self {
            mantissa: value as i128,
            frac_digits: 0,
        }
    }

    pub fn new(mantissa: i128, frac_digits: u32) -> Self {
        let mut out = Self {
            mantissa,
            frac_digits,
        };
        out.normalize();
        out
    }

    fn normalize(&mut self) {
        while self.frac_digits > 0 && self.mantissa % 10 == 0 {
            self.mantissa /= 10;
            self.frac_digits -= 1;
        }
    }

    /// Number of significant fractional digits.
    pub fn frac_digits(&self) -> u32 {
        self.frac_digits
    }

    pub fn mantissa(&self) -> i128 {
        self.mantissa
    }
}

impl FromStr for RawDecimal {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::Decimal(text.to_string());
        let s = text.trim();
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        // Plain positional notation, optionally with an exponent as serde_json emits it.
        let (digits, exponent) = match body.find(['e', 'E']) {
            Some(pos) => {
                let exp: i32 = body[pos + 1..].parse().map_err(|_| bad())?;
                (&body[..pos], exp)
            }
            None => (body, 0),
        };
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        let mut mantissa: i128 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            mantissa = mantissa
                .checked_mul(10)
                .and_then(|m| m.checked_add((b - b'0') as i128))
                .ok_or_else(|| Error::Overflow(text.to_string()))?;
        }
        let mut frac = frac_part.len() as i64 - exponent as i64;
        while frac < 0 {
            mantissa = mantissa
                .checked_mul(10)
                .ok_or_else(|| Error::Overflow(text.to_string()))?;
            frac += 1;
        }
        if frac > 60 {
            return Err(bad());
        }
        if negative {
            mantissa = -mantissa;
        }
        Ok(Self::new(mantissa, frac as u32))
    }
}

impl fmt::Display for RawDecimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.frac_digits == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let pow = 10i128.pow(self.frac_digits);
        let sign = if self.mantissa < 0 { "-" } else { "" };
        let abs = self.mantissa.unsigned_abs();
        let pow = pow as u128;
        write!(
            f,
            "{sign}{}.{:0width$}",
            abs / pow,
            abs % pow,
            width = self.frac_digits as usize
        )
    }
}

/// Converts a raw decimal quantity into scaled integer time.
///
/// Rejects values carrying more fractional digits than the scale allows.
pub fn scale_time(raw: &RawDecimal, scale: &TimeScale) -> Result<Time> {
    if raw.frac_digits > scale.decimal_digits {
        return Err(Error::Scale {
            value: raw.to_string(),
            found: raw.frac_digits,
            allowed: scale.decimal_digits,
        });
    }
    let shift = 10i128.pow(scale.decimal_digits - raw.frac_digits);
    raw.mantissa
        .checked_mul(shift)
        .and_then(|v| Time::try_from(v).ok())
        .ok_or_else(|| Error::Overflow(raw.to_string()))
}

/// Inverse of [`scale_time`].
pub fn unscale_time(value: Time, scale: &TimeScale) -> RawDecimal {
    RawDecimal::new(value as i128, scale.decimal_digits)
}
