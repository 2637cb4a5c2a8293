//! World configuration: the single JSON document that parameterizes a run.
//!
//! Every knob has a default, so a config file may specify any subset of
//! fields; unknown keys are rejected to catch typos. [`validate`] checks the
//! cross-field rules and reports every violation at once.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::PatternKind;
use crate::money::CurrencySpec;

/// One bin of an income histogram: uniform in `[min, max)` major units of
/// the reference currency; a degenerate bin (`min == max`) yields exactly
/// that value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncomeBin {
    pub min: f64,
    pub max: f64,
    pub p: f64,
}

impl IncomeBin {
    pub fn new(min: f64, max: f64, p: f64) -> Self {
        Self { min, max, p }
    }
}

/// One bin of the pattern node-count histogram: integer counts in
/// `[min, max)`; `max = null` means unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeBin {
    pub min: u32,
    pub max: Option<u32>,
    pub p: f64,
}

impl SizeBin {
    pub fn new(min: u32, max: Option<u32>, p: f64) -> Self {
        Self { min, max, p }
    }
}

/// Weight of one payment format in the target output mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormatWeight {
    pub format: String,
    pub p: f64,
}

/// Income parameters for one criminal activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivityRate {
    pub name: String,
    /// Mean take per event, major units of the reference currency.
    pub mean_amount: f64,
    /// Mean days between events for one enterprise running this activity.
    pub mean_interval_days: f64,
}

/// The nine criminal income sources.
pub const ACTIVITY_NAMES: [&str; 9] = [
    "extortion",
    "loan sharking",
    "gambling",
    "prostitution",
    "kidnapping",
    "robbery",
    "embezzlement",
    "drugs",
    "smuggling",
];

/// Explicit per-kind pattern instance targets. When absent from the config,
/// the generator derives a budget from `target_laundering_interval`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternBudget {
    #[serde(default)]
    pub fan_out: u32,
    #[serde(default)]
    pub fan_in: u32,
    #[serde(default)]
    pub gather_scatter: u32,
    #[serde(default)]
    pub scatter_gather: u32,
    #[serde(default)]
    pub cycle: u32,
    #[serde(default)]
    pub random: u32,
    #[serde(default)]
    pub bipartite: u32,
    #[serde(default)]
    pub stack: u32,
}

impl PatternBudget {
    pub fn get(&self, kind: PatternKind) -> u32 {
        match kind {
            PatternKind::FanOut => self.fan_out,
            PatternKind::FanIn => self.fan_in,
            PatternKind::GatherScatter => self.gather_scatter,
            PatternKind::ScatterGather => self.scatter_gather,
            PatternKind::Cycle => self.cycle,
            PatternKind::Random => self.random,
            PatternKind::Bipartite => self.bipartite,
            PatternKind::Stack => self.stack,
        }
    }

    pub fn set(&mut self, kind: PatternKind, count: u32) {
        match kind {
            PatternKind::FanOut => self.fan_out = count,
            PatternKind::FanIn => self.fan_in = count,
            PatternKind::GatherScatter => self.gather_scatter = count,
            PatternKind::ScatterGather => self.scatter_gather = count,
            PatternKind::Cycle => self.cycle = count,
            PatternKind::Random => self.random = count,
            PatternKind::Bipartite => self.bipartite = count,
            PatternKind::Stack => self.stack = count,
        }
    }

    pub fn uniform(per_kind: u32) -> Self {
        let mut b = Self::default();
        for kind in PatternKind::ALL {
            b.set(kind, per_kind);
        }
        b
    }

    pub fn total(&self) -> u32 {
        PatternKind::ALL.iter().map(|&k| self.get(k)).sum()
    }
}

/// Full parameterization of one generated world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldConfig {
    pub seed: u64,
    pub sim_start: NaiveDate,
    pub sim_days: u32,

    // Population.
    pub num_individuals: u32,
    pub num_companies: u32,
    pub num_banks: u32,
    pub criminal_fraction: f64,
    pub salary_participation: f64,
    pub pension_participation: f64,
    pub salary_histogram: Vec<IncomeBin>,
    pub pension_histogram: Vec<IncomeBin>,
    /// Relative weights for weekly/biweekly/monthly pay cadence.
    pub salary_frequency_weights: [f64; 3],
    /// Company headcount drawn log-uniform in this range.
    pub company_size_range: (u32, u32),
    /// Extra accounts per entity follow a capped geometric distribution.
    pub extra_account_p: f64,
    pub max_accounts_per_entity: u32,
    /// Shell companies opened per criminal enterprise (inclusive range).
    pub shells_per_criminal: (u32, u32),
    /// Ownership chain depth for shells, drawn uniformly in [1, this].
    pub max_shell_depth: u32,
    pub shell_accounts_range: (u32, u32),

    // Currencies and formats.
    pub currencies: Vec<CurrencySpec>,
    pub format_distribution: Vec<FormatWeight>,

    // Legitimate activity.
    pub target_annual_tx_per_account: f64,
    /// Poisson rate of retail purchases per individual per 30 days; the
    /// calibrator's free parameter for the transaction-rate target.
    pub purchase_rate_per_month: f64,
    /// Log-normal (median, sigma) of purchase amounts in major units.
    pub purchase_amount: (f64, f64),
    /// Recurring bills per individual (inclusive range).
    pub bills_per_individual: (u32, u32),
    pub bill_amount: (f64, f64),
    /// Supplier relationships per company (inclusive range).
    pub suppliers_per_company: (u32, u32),
    /// Monthly interest credited on positive balances.
    pub monthly_interest_rate: f64,
    /// Months of expected outgoings prefunded as initial balances.
    pub initial_balance_months: f64,

    // Laundering.
    /// Target ratio of total transactions to laundering transactions
    /// (e.g. 1750 means 1 in 1750); drives the derived pattern budget.
    pub target_laundering_interval: f64,
    /// Share of laundering transactions that belong to explicit patterns.
    pub pattern_share_of_laundering: f64,
    /// Non-pattern laundering volume as a multiple of pattern volume.
    pub natural_laundering_multiplier: f64,
    /// Share of non-pattern laundering rows that are cash placements.
    pub placement_share: f64,
    /// Explicit per-kind instance counts; when null the budget is derived
    /// from the laundering-interval target.
    pub pattern_budget: Option<PatternBudget>,
    pub pattern_size_histogram: Vec<SizeBin>,
    pub pattern_span_days: (f64, f64),
    pub taint_label_threshold: f64,
    pub hop_retention_range: (f64, f64),
    pub account_reuse_probability: f64,
    pub criminal_activities: Vec<ActivityRate>,
    /// Multiplier on criminal income intervals (lower-illicit presets
    /// launder less frequently).
    pub criminal_interval_scale: f64,
    /// Rescale placement counts so non-pattern laundering lands at
    /// `placement_share` of budget; disable to use raw activity rates.
    pub auto_scale_placements: bool,
}

fn default_currencies() -> Vec<CurrencySpec> {
    let c = |code: &str, name: &str, rate: f64, weight: f64, decimals: u8| CurrencySpec {
        code: code.to_string(),
        name: name.to_string(),
        rate,
        weight,
        decimals,
    };
    vec![
        c("USD", "US Dollar", 1.0, 0.58, 2),
        c("EUR", "Euro", 1.11, 0.16, 2),
        c("CNY", "Yuan", 0.14, 0.12, 2),
        c("JPY", "Yen", 0.0068, 0.12, 2),
        c("BTC", "Bitcoin", 42_000.0, 0.02, 8),
    ]
}

fn default_format_distribution() -> Vec<FormatWeight> {
    let w = |format: &str, p: f64| FormatWeight {
        format: format.to_string(),
        p,
    };
    vec![
        w("ACH", 0.34),
        w("Cheque", 0.22),
        w("Credit Card", 0.17),
        w("Wire", 0.12),
        w("Cash", 0.08),
        w("Bitcoin", 0.02),
        w("Reinvestment", 0.05),
    ]
}

fn default_salary_histogram() -> Vec<IncomeBin> {
    vec![
        IncomeBin::new(15_000.0, 30_000.0, 0.25),
        IncomeBin::new(30_000.0, 50_000.0, 0.28),
        IncomeBin::new(50_000.0, 75_000.0, 0.20),
        IncomeBin::new(75_000.0, 100_000.0, 0.12),
        IncomeBin::new(100_000.0, 150_000.0, 0.09),
        IncomeBin::new(150_000.0, 300_000.0, 0.05),
        IncomeBin::new(300_000.0, 1_000_000.0, 0.01),
    ]
}

fn default_pension_histogram() -> Vec<IncomeBin> {
    vec![
        IncomeBin::new(5_000.0, 12_000.0, 0.35),
        IncomeBin::new(12_000.0, 20_000.0, 0.30),
        IncomeBin::new(20_000.0, 30_000.0, 0.20),
        IncomeBin::new(30_000.0, 45_000.0, 0.10),
        IncomeBin::new(45_000.0, 70_000.0, 0.05),
    ]
}

/// Aggregate node-count distribution observed across all pattern kinds
/// (counts 586/383/568/498/477 over 2512 instances).
fn default_pattern_size_histogram() -> Vec<SizeBin> {
    let t = 2512.0;
    vec![
        SizeBin::new(1, Some(2), 586.0 / t),
        SizeBin::new(2, Some(4), 383.0 / t),
        SizeBin::new(4, Some(8), 568.0 / t),
        SizeBin::new(8, Some(12), 498.0 / t),
        SizeBin::new(12, Some(18), 477.0 / t),
        SizeBin::new(18, None, 0.0),
    ]
}

fn default_activities() -> Vec<ActivityRate> {
    let a = |name: &str, mean_amount: f64, mean_interval_days: f64| ActivityRate {
        name: name.to_string(),
        mean_amount,
        mean_interval_days,
    };
    vec![
        a("extortion", 5_000.0, 7.0),
        a("loan sharking", 3_000.0, 5.0),
        a("gambling", 2_000.0, 3.0),
        a("prostitution", 1_500.0, 2.0),
        a("kidnapping", 50_000.0, 60.0),
        a("robbery", 10_000.0, 30.0),
        a("embezzlement", 8_000.0, 14.0),
        a("drugs", 4_000.0, 2.0),
        a("smuggling", 12_000.0, 10.0),
    ]
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            sim_start: NaiveDate::from_ymd_opt(2022, 9, 1).unwrap(),
            sim_days: 97,
            num_individuals: 1_000,
            num_companies: 50,
            num_banks: 5,
            criminal_fraction: 0.003,
            salary_participation: 0.625,
            pension_participation: 0.183,
            salary_histogram: default_salary_histogram(),
            pension_histogram: default_pension_histogram(),
            salary_frequency_weights: [0.2, 0.3, 0.5],
            company_size_range: (1, 500),
            extra_account_p: 0.5,
            max_accounts_per_entity: 5,
            shells_per_criminal: (3, 8),
            max_shell_depth: 3,
            shell_accounts_range: (2, 4),
            currencies: default_currencies(),
            format_distribution: default_format_distribution(),
            target_annual_tx_per_account: 120.0,
            purchase_rate_per_month: 4.0,
            purchase_amount: (40.0, 1.0),
            bills_per_individual: (1, 3),
            bill_amount: (120.0, 0.6),
            suppliers_per_company: (2, 6),
            monthly_interest_rate: 0.001,
            initial_balance_months: 6.0,
            target_laundering_interval: 1_750.0,
            pattern_share_of_laundering: 19_461.0 / 100_604.0,
            natural_laundering_multiplier: 81_143.0 / 19_461.0,
            placement_share: 0.4,
            pattern_budget: None,
            pattern_size_histogram: default_pattern_size_histogram(),
            pattern_span_days: (6.0, 42.0),
            taint_label_threshold: 0.5,
            hop_retention_range: (0.0, 0.1),
            account_reuse_probability: 0.2,
            criminal_activities: default_activities(),
            criminal_interval_scale: 2.0,
            auto_scale_placements: true,
        }
    }
}

/// One failed validation rule, naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigViolation {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ConfigViolation>),
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

const PROB_SUM_TOL: f64 = 1e-9;

fn check_prob_sum(out: &mut Vec<ConfigViolation>, field: &str, probs: &[f64]) {
    if probs.iter().any(|p| *p < 0.0) {
        out.push(ConfigViolation {
            field: field.to_string(),
            message: "contains a negative probability".to_string(),
        });
        return;
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        out.push(ConfigViolation {
            field: field.to_string(),
            message: format!("sums to {sum}"),
        });
    }
}

fn check_fraction(out: &mut Vec<ConfigViolation>, field: &str, v: f64) {
    if !(v > 0.0 && v < 1.0) {
        out.push(ConfigViolation {
            field: field.to_string(),
            message: format!("must lie in (0,1), got {v}"),
        });
    }
}

/// Validate every cross-field rule; returns the config on success, or the
/// full list of violations.
pub fn validate(config: &WorldConfig) -> Result<(), ConfigError> {
    let mut v = Vec::new();

    if config.sim_days == 0 {
        v.push(ConfigViolation {
            field: "sim_days".into(),
            message: "must be positive".into(),
        });
    }
    for (field, n) in [
        ("num_individuals", config.num_individuals),
        ("num_companies", config.num_companies),
        ("num_banks", config.num_banks),
    ] {
        if n == 0 {
            v.push(ConfigViolation {
                field: field.into(),
                message: "must be positive".into(),
            });
        }
    }

    check_fraction(&mut v, "criminal_fraction", config.criminal_fraction);
    check_fraction(&mut v, "salary_participation", config.salary_participation);
    check_fraction(&mut v, "pension_participation", config.pension_participation);

    check_prob_sum(
        &mut v,
        "salary_histogram",
        &config.salary_histogram.iter().map(|b| b.p).collect::<Vec<_>>(),
    );
    check_prob_sum(
        &mut v,
        "pension_histogram",
        &config.pension_histogram.iter().map(|b| b.p).collect::<Vec<_>>(),
    );
    for (field, hist) in [
        ("salary_histogram", &config.salary_histogram),
        ("pension_histogram", &config.pension_histogram),
    ] {
        if hist.iter().any(|b| b.min > b.max || b.min < 0.0) {
            v.push(ConfigViolation {
                field: field.into(),
                message: "has a bin with min > max or negative bounds".into(),
            });
        }
    }

    if config.currencies.is_empty() {
        v.push(ConfigViolation {
            field: "currencies".into(),
            message: "must list at least one currency".into(),
        });
    } else {
        if config.currencies.iter().any(|c| c.rate <= 0.0) {
            v.push(ConfigViolation {
                field: "currencies".into(),
                message: "every exchange rate must be strictly positive".into(),
            });
        }
        if config.currencies[0].rate != 1.0 {
            v.push(ConfigViolation {
                field: "currencies".into(),
                message: format!(
                    "reference currency {} must have rate exactly 1, got {}",
                    config.currencies[0].code, config.currencies[0].rate
                ),
            });
        }
        let weight_sum: f64 = config.currencies.iter().map(|c| c.weight).sum();
        if weight_sum <= 0.0 {
            v.push(ConfigViolation {
                field: "currencies".into(),
                message: "home-currency weights must sum to a positive value".into(),
            });
        }
    }

    check_prob_sum(
        &mut v,
        "format_distribution",
        &config.format_distribution.iter().map(|f| f.p).collect::<Vec<_>>(),
    );
    for fw in &config.format_distribution {
        if crate::model::PaymentFormat::parse(&fw.format).is_none() {
            v.push(ConfigViolation {
                field: "format_distribution".into(),
                message: format!("unknown payment format {:?}", fw.format),
            });
        }
    }

    check_prob_sum(
        &mut v,
        "pattern_size_histogram",
        &config.pattern_size_histogram.iter().map(|b| b.p).collect::<Vec<_>>(),
    );
    for bin in &config.pattern_size_histogram {
        let upper = bin.max.unwrap_or(u32::MAX);
        if upper > 18 && bin.p > 0.0 {
            v.push(ConfigViolation {
                field: "pattern_size_histogram".into(),
                message: format!(
                    "assigns probability {} to node counts at or above 18 (bin {}..{:?})",
                    bin.p, bin.min, bin.max
                ),
            });
        }
        if bin.min == 0 || upper <= bin.min {
            v.push(ConfigViolation {
                field: "pattern_size_histogram".into(),
                message: format!("bin {}..{:?} is empty or starts at 0", bin.min, bin.max),
            });
        }
    }

    if config.target_annual_tx_per_account <= 0.0 {
        v.push(ConfigViolation {
            field: "target_annual_tx_per_account".into(),
            message: "must be positive".into(),
        });
    }
    if config.purchase_rate_per_month <= 0.0 {
        v.push(ConfigViolation {
            field: "purchase_rate_per_month".into(),
            message: "must be positive".into(),
        });
    }
    if config.target_laundering_interval <= 1.0 {
        v.push(ConfigViolation {
            field: "target_laundering_interval".into(),
            message: "must exceed 1".into(),
        });
    }
    if !(config.pattern_share_of_laundering > 0.0 && config.pattern_share_of_laundering <= 1.0) {
        v.push(ConfigViolation {
            field: "pattern_share_of_laundering".into(),
            message: "must lie in (0,1]".into(),
        });
    }
    if config.natural_laundering_multiplier <= 0.0 {
        v.push(ConfigViolation {
            field: "natural_laundering_multiplier".into(),
            message: "must be positive".into(),
        });
    }
    if !(config.placement_share > 0.0 && config.placement_share < 1.0) {
        v.push(ConfigViolation {
            field: "placement_share".into(),
            message: "must lie in (0,1)".into(),
        });
    }
    if !(config.taint_label_threshold > 0.0 && config.taint_label_threshold <= 1.0) {
        v.push(ConfigViolation {
            field: "taint_label_threshold".into(),
            message: "must lie in (0,1]".into(),
        });
    }
    let (rmin, rmax) = config.hop_retention_range;
    if !(0.0..=0.2).contains(&rmin) || !(0.0..=0.2).contains(&rmax) || rmin > rmax {
        v.push(ConfigViolation {
            field: "hop_retention_range".into(),
            message: format!("must be an ordered subrange of [0, 0.2], got ({rmin}, {rmax})"),
        });
    }
    let (smin, smax) = config.pattern_span_days;
    if !(smin > 0.0 && smax >= smin) {
        v.push(ConfigViolation {
            field: "pattern_span_days".into(),
            message: format!("must be ordered and positive, got ({smin}, {smax})"),
        });
    }
    if !(0.0..=1.0).contains(&config.account_reuse_probability) {
        v.push(ConfigViolation {
            field: "account_reuse_probability".into(),
            message: "must lie in [0,1]".into(),
        });
    }
    // Frequency weights are relative, not probabilities; only the total matters.
    if config.salary_frequency_weights.iter().sum::<f64>() <= 0.0
        || config.salary_frequency_weights.iter().any(|w| *w < 0.0)
    {
        v.push(ConfigViolation {
            field: "salary_frequency_weights".into(),
            message: "must be nonnegative with a positive total".into(),
        });
    }

    if config.criminal_activities.is_empty() {
        v.push(ConfigViolation {
            field: "criminal_activities".into(),
            message: "must list at least one activity".into(),
        });
    }
    for a in &config.criminal_activities {
        if !ACTIVITY_NAMES.contains(&a.name.as_str()) {
            v.push(ConfigViolation {
                field: "criminal_activities".into(),
                message: format!("unknown activity {:?}", a.name),
            });
        }
        if a.mean_amount <= 0.0 || a.mean_interval_days <= 0.0 {
            v.push(ConfigViolation {
                field: "criminal_activities".into(),
                message: format!("{:?} must have positive amount and interval", a.name),
            });
        }
    }

    let (clo, chi) = config.company_size_range;
    if clo == 0 || chi < clo {
        v.push(ConfigViolation {
            field: "company_size_range".into(),
            message: "must be an ordered positive range".into(),
        });
    }
    if !(config.extra_account_p > 0.0 && config.extra_account_p < 1.0) {
        v.push(ConfigViolation {
            field: "extra_account_p".into(),
            message: "must lie in (0,1)".into(),
        });
    }
    if config.max_accounts_per_entity == 0 {
        v.push(ConfigViolation {
            field: "max_accounts_per_entity".into(),
            message: "must be positive".into(),
        });
    }
    if config.max_shell_depth == 0 {
        v.push(ConfigViolation {
            field: "max_shell_depth".into(),
            message: "must be at least 1".into(),
        });
    }
    for (field, (lo, hi)) in [
        ("shells_per_criminal", config.shells_per_criminal),
        ("shell_accounts_range", config.shell_accounts_range),
        ("bills_per_individual", config.bills_per_individual),
        ("suppliers_per_company", config.suppliers_per_company),
    ] {
        if lo == 0 || hi < lo {
            v.push(ConfigViolation {
                field: field.into(),
                message: "must be an ordered positive range".into(),
            });
        }
    }

    if v.is_empty() {
        Ok(())
    } else {
        Err(ConfigError::Invalid(v))
    }
}

/// Parse a JSON config and validate it.
pub fn from_json(text: &str) -> Result<WorldConfig, ConfigError> {
    let config: WorldConfig = serde_json::from_str(text)?;
    validate(&config)?;
    Ok(config)
}

pub fn to_json(config: &WorldConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let config = WorldConfig::default();
        validate(&config).expect("shipped defaults must validate");
    }

    #[test]
    fn json_round_trip_preserves_config() {
        let config = WorldConfig::default();
        let text = to_json(&config);
        let back = from_json(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn format_distribution_sum_violation_names_field_and_sum() {
        let mut config = WorldConfig::default();
        config.format_distribution = vec![
            FormatWeight {
                format: "ACH".into(),
                p: 0.5,
            },
            FormatWeight {
                format: "Wire".into(),
                p: 0.47,
            },
        ];
        let err = validate(&config).unwrap_err();
        let ConfigError::Invalid(violations) = err else {
            panic!("expected violations");
        };
        let rendered: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        assert!(
            rendered.iter().any(|m| m == "format_distribution sums to 0.97"),
            "got {rendered:?}"
        );
    }

    #[test]
    fn pattern_histogram_mass_at_18_rejected() {
        let mut config = WorldConfig::default();
        config.pattern_size_histogram = vec![
            SizeBin::new(1, Some(18), 0.9),
            SizeBin::new(18, None, 0.1),
        ];
        let err = validate(&config).unwrap_err();
        let ConfigError::Invalid(violations) = err else {
            panic!("expected violations");
        };
        assert!(violations.iter().any(|v| v.field == "pattern_size_histogram"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = from_json(r#"{"seed": 3, "warp_factor": 9}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
    }

    #[test]
    fn partial_json_fills_defaults() {
        let config = from_json(r#"{"seed": 99, "num_individuals": 2000}"#).unwrap();
        assert_eq!(config.seed, 99);
        assert_eq!(config.num_individuals, 2000);
        assert_eq!(config.num_banks, WorldConfig::default().num_banks);
    }

    #[test]
    fn zero_population_rejected() {
        let mut config = WorldConfig::default();
        config.num_banks = 0;
        assert!(validate(&config).is_err());
    }

    #[test]
    fn reference_rate_must_be_one() {
        let mut config = WorldConfig::default();
        config.currencies[0].rate = 1.01;
        assert!(validate(&config).is_err());
    }

    #[test]
    fn activity_names_fixed_at_nine() {
        assert_eq!(ACTIVITY_NAMES.len(), 9);
        let config = WorldConfig::default();
        assert_eq!(config.criminal_activities.len(), 9);
        for a in &config.criminal_activities {
            assert!(ACTIVITY_NAMES.contains(&a.name.as_str()), "{}", a.name);
        }
    }
}
