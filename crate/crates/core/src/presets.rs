//! Named world presets: two illicit-intensity families (HI ≈ 1 laundering
//! row in 807, LI ≈ 1 in 1750) in three sizes each.
//!
//! Full-size presets target roughly 5M (small), 30M (medium), and 175M
//! (large) rows over the default 97-day span. A `scale` factor shrinks
//! the population for desk-scale runs without touching rates, so
//! per-account behavior is unchanged.

use crate::config::WorldConfig;

pub const PRESET_NAMES: [&str; 6] = [
    "hi-small", "li-small", "hi-medium", "li-medium", "hi-large", "li-large",
];

/// Intensity family: how aggressively the criminal sub-population launders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    /// Higher illicit ratio: more frequent criminal income, tighter
    /// pattern spans.
    Hi,
    /// Lower illicit ratio: criminals earn and launder half as often,
    /// over spans twice as long.
    Li,
}

fn apply_family(cfg: &mut WorldConfig, family: Family) {
    match family {
        Family::Hi => {
            cfg.target_laundering_interval = 807.0;
            cfg.pattern_span_days = (3.0, 21.0);
            cfg.criminal_interval_scale = 1.0;
        }
        Family::Li => {
            cfg.target_laundering_interval = 1_750.0;
            cfg.pattern_span_days = (6.0, 42.0);
            cfg.criminal_interval_scale = 2.0;
        }
    }
}

/// Look up a preset by its public name. Returns `None` for unknown names.
pub fn preset(name: &str) -> Option<WorldConfig> {
    let (family, size) = match name {
        "hi-small" => (Family::Hi, 1.0),
        "li-small" => (Family::Li, 1.0),
        "hi-medium" => (Family::Hi, 6.0),
        "li-medium" => (Family::Li, 6.0),
        "hi-large" => (Family::Hi, 35.0),
        "li-large" => (Family::Li, 35.0),
        _ => return None,
    };
    let mut cfg = WorldConfig::default();
    cfg.num_individuals = 100_000;
    cfg.num_companies = 5_000;
    cfg.num_banks = 30;
    cfg.sim_days = 97;
    apply_family(&mut cfg, family);
    Some(scale_population(&cfg, size))
}

/// Multiply population sizes by `scale`, holding rates and duration
/// fixed. Floors keep tiny scales viable: banks never drop below 3,
/// companies below 5, individuals below 100.
pub fn scale_population(cfg: &WorldConfig, scale: f64) -> WorldConfig {
    let mut out = cfg.clone();
    let s = |n: u32, floor: u32| -> u32 {
        ((f64::from(n) * scale).round() as u32).max(floor)
    };
    out.num_individuals = s(cfg.num_individuals, 100);
    out.num_companies = s(cfg.num_companies, 5);
    out.num_banks = s(cfg.num_banks, 3);
    out
}
