//! Fixed-point money arithmetic and currency conversion.
//!
//! Amounts are stored as integer minor units (cents for fiat, satoshi-scale
//! 1e-8 for Bitcoin) so that per-account conservation checks are exact.

use serde::{Deserialize, Serialize};

/// Index into the run's currency table.
pub type CurrencyId = u8;

/// The first configured currency anchors all exchange rates.
pub const REFERENCE_CURRENCY: CurrencyId = 0;

/// One configured currency. `rate` is the value of one major unit in the
/// reference currency (the first table entry, whose rate must be 1.0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurrencySpec {
    pub code: String,
    pub name: String,
    pub rate: f64,
    /// Probability that an entity uses this as its home currency.
    pub weight: f64,
    /// Minor-unit digits shown in the CSV (2 for fiat, 8 for Bitcoin).
    #[serde(default = "default_decimals")]
    pub decimals: u8,
}

fn default_decimals() -> u8 {
    2
}

/// Immutable per-run view of the configured currencies.
#[derive(Debug, Clone)]
pub struct CurrencyTable {
    specs: Vec<CurrencySpec>,
    /// 10^decimals per currency, precomputed.
    scale: Vec<f64>,
}

impl CurrencyTable {
    pub fn new(specs: &[CurrencySpec]) -> Self {
        let scale = specs
            .iter()
            .map(|s| 10f64.powi(i32::from(s.decimals)))
            .collect();
        Self {
            specs: specs.to_vec(),
            scale,
        }
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn spec(&self, id: CurrencyId) -> &CurrencySpec {
        &self.specs[id as usize]
    }

    pub fn name(&self, id: CurrencyId) -> &str {
        &self.specs[id as usize].name
    }

    pub fn decimals(&self, id: CurrencyId) -> u8 {
        self.specs[id as usize].decimals
    }

    pub fn by_name(&self, name: &str) -> Option<CurrencyId> {
        self.specs
            .iter()
            .position(|s| s.name == name || s.code == name)
            .map(|i| i as CurrencyId)
    }

    /// Convert minor units of `from` into minor units of `to`, rounding
    /// half-even. Identity when the currencies are equal.
    pub fn convert(&self, amount_minor: i64, from: CurrencyId, to: CurrencyId) -> i64 {
        if from == to {
            return amount_minor;
        }
        let f = &self.specs[from as usize];
        let t = &self.specs[to as usize];
        let major = amount_minor as f64 / self.scale[from as usize];
        let converted = major * f.rate / t.rate;
        (converted * self.scale[to as usize]).round_ties_even() as i64
    }

    /// Value of `amount_minor` of `currency` in minor units of the
    /// reference currency. Used for cross-currency aggregates.
    pub fn to_reference_minor(&self, amount_minor: i64, currency: CurrencyId) -> i64 {
        self.convert(amount_minor, currency, 0)
    }

    /// Render minor units as a fixed-decimal string (`1234` -> `12.34`).
    pub fn format_minor(&self, amount_minor: i64, currency: CurrencyId) -> String {
        format_minor_units(amount_minor, self.decimals(currency))
    }

    /// Parse a fixed-decimal string into minor units, tolerating fewer
    /// fractional digits than the currency carries.
    pub fn parse_minor(&self, text: &str, currency: CurrencyId) -> Option<i64> {
        parse_minor_units(text, self.decimals(currency))
    }
}

/// Render an amount in minor units with exactly `decimals` fractional digits.
pub fn format_minor_units(amount_minor: i64, decimals: u8) -> String {
    let scale = 10i64.pow(u32::from(decimals));
    let sign = if amount_minor < 0 { "-" } else { "" };
    let abs = amount_minor.unsigned_abs();
    let whole = abs / scale as u64;
    let frac = abs % scale as u64;
    if decimals == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{frac:0width$}", width = decimals as usize)
    }
}

/// Parse a decimal string into minor units at the given scale.
pub fn parse_minor_units(text: &str, decimals: u8) -> Option<i64> {
    let (sign, text) = match text.strip_prefix('-') {
        Some(rest) => (-1i64, rest),
        None => (1i64, text),
    };
    let (whole, frac) = match text.split_once('.') {
        Some((w, f)) => (w, f),
        None => (text, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    let whole_v: i64 = if whole.is_empty() {
        0
    } else {
        whole.parse().ok()?
    };
    if frac.len() > decimals as usize {
        return None;
    }
    let mut frac_v: i64 = 0;
    if !frac.is_empty() {
        frac_v = frac.parse().ok()?;
        frac_v *= 10i64.pow(u32::from(decimals) - frac.len() as u32);
    }
    let scale = 10i64.pow(u32::from(decimals));
    Some(sign * (whole_v * scale + frac_v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> CurrencyTable {
        CurrencyTable::new(&[
            CurrencySpec {
                code: "USD".into(),
                name: "US Dollar".into(),
                rate: 1.0,
                weight: 0.6,
                decimals: 2,
            },
            CurrencySpec {
                code: "EUR".into(),
                name: "Euro".into(),
                rate: 1.0 / 0.9,
                weight: 0.3,
                decimals: 2,
            },
            CurrencySpec {
                code: "BTC".into(),
                name: "Bitcoin".into(),
                rate: 42_000.0,
                weight: 0.1,
                decimals: 8,
            },
        ])
    }

    #[test]
    fn identity_conversion_is_exact() {
        let t = table();
        assert_eq!(t.convert(10_000, 0, 0), 10_000);
    }

    #[test]
    fn usd_to_eur_at_rate() {
        // 100.00 USD at a pair rate of 0.9 is 90.00 EUR.
        let t = table();
        assert_eq!(t.convert(10_000, 0, 1), 9_000);
    }

    #[test]
    fn round_trip_drift_bounded() {
        let t = table();
        for amount in [1i64, 7, 99, 12_345, 1_000_000, 987_654_321] {
            let eur = t.convert(amount, 0, 1);
            let back = t.convert(eur, 1, 0);
            assert!(
                (back - amount).abs() <= 1,
                "round trip {amount} -> {eur} -> {back}"
            );
        }
    }

    #[test]
    fn bitcoin_uses_eight_decimals() {
        let t = table();
        // 420.00 USD = 0.01 BTC = 1_000_000 satoshi-scale units.
        assert_eq!(t.convert(42_000, 0, 2), 1_000_000);
        assert_eq!(t.format_minor(1_000_000, 2), "0.01000000");
    }

    #[test]
    fn format_parse_round_trip() {
        for (minor, dec, text) in [
            (123_456i64, 2u8, "1234.56"),
            (5, 2, "0.05"),
            (0, 2, "0.00"),
            (100_000_000, 8, "1.00000000"),
        ] {
            assert_eq!(format_minor_units(minor, dec), text);
            assert_eq!(parse_minor_units(text, dec), Some(minor));
        }
        assert_eq!(parse_minor_units("12.3", 2), Some(1230));
        assert_eq!(parse_minor_units("", 2), None);
        assert_eq!(parse_minor_units("1.234", 2), None);
    }
}
