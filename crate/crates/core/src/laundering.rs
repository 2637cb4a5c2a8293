//! Criminal-side planning: placement of illicit proceeds into stash
//! accounts, layering pattern instances over controlled accounts, and
//! integration spending back into the legitimate economy.
//!
//! The planner works against a funding ledger so patterns only move money
//! that placements have actually put in place, and it sizes every budget
//! from the legitimate row forecast so the laundering share of total
//! traffic lands on the configured interval.

use serde::{Deserialize, Serialize};

use crate::config::WorldConfig;
use crate::model::{AccountIdx, EntityId, Minute, PatternKind, MINUTES_PER_DAY};
use crate::money::{CurrencyTable, REFERENCE_CURRENCY};
use crate::patterns::{
    expected_tx_per_instance, extra_tranche_p, instantiate, sample_size, PatternInstance, Shape,
};
use crate::population::Population;
use crate::rng::rng_stream;
use std::collections::BTreeMap;

/// One cash deposit of criminal proceeds into a stash account.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Placement {
    pub account: AccountIdx,
    pub minute: Minute,
    /// Minor units of the stash account's currency.
    pub amount_local: i64,
    /// Index into the configured activity table.
    pub activity: u8,
}

/// A pattern instance pinned to an absolute start minute.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlannedInstance {
    pub instance: PatternInstance,
    pub start_minute: Minute,
}

/// One integration spend from a stash account into a company account.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Integration {
    pub from_account: AccountIdx,
    pub to_account: AccountIdx,
    pub minute: Minute,
    pub amount_local: i64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PlanStats {
    pub laundering_row_budget: u64,
    pub pattern_tx_budget: u64,
    pub pattern_tx_planned: u64,
    pub placements_planned: u64,
    pub integrations_planned: u64,
    pub instances_planned: u32,
    pub instances_dropped: u32,
    pub instances_downsized: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaunderingPlan {
    pub placements: Vec<Placement>,
    pub instances: Vec<PlannedInstance>,
    pub integrations: Vec<Integration>,
    pub stats: PlanStats,
}

/// Per-kind instance counts that spend the pattern transaction budget.
/// Counts are near-uniform across kinds; the expected emitted rows per
/// instance differ per kind, so the total is solved against their mean.
pub fn derive_budget(cfg: &WorldConfig, pattern_tx_budget: f64) -> BTreeMap<PatternKind, u32> {
    if let Some(budget) = &cfg.pattern_budget {
        return PatternKind::ALL
            .iter()
            .map(|&k| (k, budget.get(k)))
            .collect();
    }
    let hist = &cfg.pattern_size_histogram;
    let mean_tx: f64 = PatternKind::ALL
        .iter()
        .map(|&k| expected_tx_per_instance(k, hist))
        .sum::<f64>()
        / 8.0;
    let mut total = (pattern_tx_budget / mean_tx.max(1e-9)).round().max(0.0) as i64;
    if total == 0 && pattern_tx_budget > 0.0 {
        // Tiny worlds round to zero instances; keep laundering present
        // whenever it was asked for at all.
        total = 1;
    }
    let counts = crate::rng::largest_remainder_round(total, &[1.0 / 8.0; 8]);
    PatternKind::ALL
        .iter()
        .zip(counts)
        .map(|(&k, c)| (k, c as u32))
        .collect()
}

/// Funding state for one criminal enterprise while instances are planned.
struct Enterprise {
    /// All stash accounts of controlled shells, in stable order.
    stash: Vec<AccountIdx>,
    /// Cumulative placement value per stash account, sorted by minute.
    deposits: BTreeMap<AccountIdx, Vec<(Minute, i64)>>,
    /// Value already committed to planned pattern sources.
    committed: BTreeMap<AccountIdx, i64>,
    /// Accounts already serving in some instance.
    used: BTreeMap<AccountIdx, bool>,
}

impl Enterprise {
    fn available(&self, account: AccountIdx, at: Minute) -> i64 {
        let placed: i64 = self
            .deposits
            .get(&account)
            .map(|v| v.iter().take_while(|(m, _)| *m <= at).map(|(_, a)| a).sum())
            .unwrap_or(0);
        placed - self.committed.get(&account).copied().unwrap_or(0)
    }
}

/// Floor on what a source account must hold to participate.
const MIN_SOURCE_FUNDS: i64 = 10_000;

/// Average placements each active criminal enterprise should receive;
/// sets how many criminals carry the placement budget.
const PLACEMENTS_PER_ENTERPRISE: f64 = 8.0;

/// Shrink a shape until it fits the number of controlled accounts.
fn clamp_shape(shape: &Shape, max_nodes: u32) -> Option<Shape> {
    let mut s = shape.clone();
    loop {
        if s.node_count() <= max_nodes {
            return Some(s);
        }
        s = match s {
            Shape::FanOut { k } if k > 2 => Shape::FanOut { k: k - 1 },
            Shape::FanIn { k } if k > 2 => Shape::FanIn { k: k - 1 },
            Shape::GatherScatter { a, b } if b > 2 => Shape::GatherScatter { a, b: b - 1 },
            Shape::GatherScatter { a, b } if a > 2 => Shape::GatherScatter { a: a - 1, b },
            Shape::ScatterGather { k } if k > 2 => Shape::ScatterGather { k: k - 1 },
            Shape::Cycle { n } if n > 3 => Shape::Cycle { n: n - 1 },
            Shape::Random { n } if n > 3 => Shape::Random { n: n - 1 },
            Shape::Bipartite { k, m, e } if k.max(m) > 2 => {
                let (k, m) = if k >= m { (k - 1, m) } else { (k, m - 1) };
                Shape::Bipartite {
                    k,
                    m,
                    e: e.min(k * m).max(k.max(m)),
                }
            }
            Shape::Stack { k, m, n } if k.max(m).max(n) > 2 => {
                if k >= m && k >= n {
                    Shape::Stack { k: k - 1, m, n }
                } else if m >= n {
                    Shape::Stack { k, m: m - 1, n }
                } else {
                    Shape::Stack { k, m, n: n - 1 }
                }
            }
            _ => return None,
        };
    }
}

/// Build the full laundering plan. `n_legit_forecast` is the expected
/// number of non-laundering rows, which sets every budget downstream.
pub fn plan(
    cfg: &WorldConfig,
    pop: &Population,
    currencies: &CurrencyTable,
    n_legit_forecast: u64,
) -> LaunderingPlan {
    let mut stats = PlanStats::default();
    if pop.criminals.is_empty() || cfg.target_laundering_interval <= 1.0 {
        return LaunderingPlan {
            placements: Vec::new(),
            instances: Vec::new(),
            integrations: Vec::new(),
            stats,
        };
    }

    // One laundering row per (interval - 1) legitimate rows makes the
    // laundering share of all rows equal 1/interval.
    let l_budget = n_legit_forecast as f64 / (cfg.target_laundering_interval - 1.0);
    let pattern_tx_budget = l_budget * cfg.pattern_share_of_laundering;
    stats.laundering_row_budget = l_budget.round() as u64;

    // Instance counts come first; the rest of the laundering economy is
    // sized from what those instances are expected to emit, so explicit
    // per-kind budgets still get funded placements.
    let budget = derive_budget(cfg, pattern_tx_budget);
    let expected_pattern_tx: f64 = budget
        .iter()
        .map(|(&k, &c)| f64::from(c) * expected_tx_per_instance(k, &cfg.pattern_size_histogram))
        .sum();
    let other_budget = cfg.natural_laundering_multiplier * expected_pattern_tx;
    stats.pattern_tx_budget = expected_pattern_tx.round() as u64;

    let sim_minutes = cfg.sim_days * MINUTES_PER_DAY;
    let placements_target = (cfg.placement_share * other_budget).round().max(0.0);

    // --- Placements ---------------------------------------------------
    // Natural activity cadence, thinned or densified so the expected
    // placement count hits the share of the "other" budget that placement
    // is supposed to carry. Placements concentrate on a subset of
    // criminals dense enough that each active enterprise can fund
    // multi-source patterns.
    let natural_per_criminal: f64 = cfg
        .criminal_activities
        .iter()
        .map(|a| f64::from(cfg.sim_days) / (a.mean_interval_days * cfg.criminal_interval_scale))
        .sum();
    let scaling = cfg.auto_scale_placements && natural_per_criminal > 0.0;
    let n_active = if scaling {
        ((placements_target / PLACEMENTS_PER_ENTERPRISE).ceil() as usize)
            .clamp(1, pop.criminals.len())
    } else {
        pop.criminals.len()
    };
    let mut active: Vec<EntityId> = pop.criminals.clone();
    if n_active < active.len() {
        let mut stream = rng_stream(cfg.seed, "launder.active", 0);
        for i in (1..active.len()).rev() {
            let j = stream.range_usize(0, i + 1);
            active.swap(i, j);
        }
        active.truncate(n_active);
        active.sort_unstable();
    }
    let cadence = if scaling {
        placements_target / (natural_per_criminal * n_active as f64)
    } else {
        1.0
    };

    let mut placements: Vec<Placement> = Vec::new();
    let mut enterprises: Vec<Enterprise> = Vec::new();
    for (ci, &criminal) in active.iter().enumerate() {
        let mut stream = rng_stream(cfg.seed, "launder.placements", ci as u64);
        let stash = pop.stash_accounts_of(criminal);
        if stash.is_empty() {
            continue;
        }
        let currency = pop.entities[criminal as usize].currency;
        let mut deposits: BTreeMap<AccountIdx, Vec<(Minute, i64)>> = BTreeMap::new();
        for (ai, act) in cfg.criminal_activities.iter().enumerate() {
            let interval =
                act.mean_interval_days * cfg.criminal_interval_scale / cadence.max(1e-12);
            let mut t_days = stream.exp(interval);
            while t_days < f64::from(cfg.sim_days) {
                let minute = ((t_days * f64::from(MINUTES_PER_DAY)) as u32).min(sim_minutes - 1);
                let sigma = 0.8;
                let mu = act.mean_amount.max(1.0).ln() - sigma * sigma / 2.0;
                let amount_ref = (stream.log_normal(mu, sigma) * 100.0).round().max(100.0) as i64;
                let amount_local = currencies
                    .convert(amount_ref, REFERENCE_CURRENCY, currency)
                    .max(1);
                let account = stash[stream.range_usize(0, stash.len())];
                placements.push(Placement {
                    account,
                    minute,
                    amount_local,
                    activity: ai as u8,
                });
                deposits.entry(account).or_default().push((minute, amount_local));
                t_days += stream.exp(interval);
            }
        }
        for v in deposits.values_mut() {
            v.sort_unstable_by_key(|(m, _)| *m);
        }
        enterprises.push(Enterprise {
            stash,
            deposits,
            committed: BTreeMap::new(),
            used: BTreeMap::new(),
        });
    }
    placements.sort_unstable_by_key(|p| (p.minute, p.account));
    stats.placements_planned = placements.len() as u64;

    // --- Pattern instances ---------------------------------------------
    let mut kinds: Vec<PatternKind> = Vec::new();
    for (&kind, &count) in &budget {
        kinds.extend(std::iter::repeat_n(kind, count as usize));
    }
    {
        let mut stream = rng_stream(cfg.seed, "launder.kind-order", 0);
        for i in (1..kinds.len()).rev() {
            let j = stream.range_usize(0, i + 1);
            kinds.swap(i, j);
        }
    }
    let mut starts: Vec<Minute> = {
        let mut stream = rng_stream(cfg.seed, "launder.starts", 0);
        let lo = sim_minutes / 20;
        let hi = sim_minutes * 17 / 20;
        (0..kinds.len())
            .map(|_| stream.range_u64(u64::from(lo), u64::from(hi.max(lo + 1))) as u32)
            .collect()
    };
    starts.sort_unstable();

    // With an interval-derived budget the instance count is a means, not
    // an end: keep planning until the transaction budget is met (within
    // half an average instance), extending or cutting the kind queue as
    // realized sizes come in. Explicit per-kind budgets are exact.
    let adaptive = cfg.pattern_budget.is_none();
    let mean_tx: f64 = PatternKind::ALL
        .iter()
        .map(|&k| expected_tx_per_instance(k, &cfg.pattern_size_histogram))
        .sum::<f64>()
        / 8.0;
    let base_len = kinds.len().max(1);
    let mut extra_starts = rng_stream(cfg.seed, "launder.starts", 1);

    let mut instances: Vec<PlannedInstance> = Vec::new();
    let mut pattern_id: u32 = 0;
    let mut i = 0usize;
    while i < kinds.len() {
        let (kind, start0) = (kinds[i], starts[i]);
        if enterprises.is_empty() {
            stats.instances_dropped += 1;
            i += 1;
            continue;
        }
        let mut stream = rng_stream(cfg.seed, "launder.instance", i as u64);

        let draw = sample_size(kind, &cfg.pattern_size_histogram, &mut stream);
        let shape0 = Shape::for_size(kind, draw);
        let (rlo, rhi) = cfg.hop_retention_range;
        let retention = stream.range_f64(rlo, rhi);
        let rounds = if stream.chance(extra_tranche_p(kind)) { 2 } else { 1 };

        // Retry a week later (up to three times) when funding has not
        // arrived yet.
        let mut planned = false;
        for attempt in 0..4u32 {
            let start = start0 + attempt * 7 * MINUTES_PER_DAY;
            let (slo, shi) = cfg.pattern_span_days;
            let span_days = stream.range_f64(slo, shi);
            let mut span = (span_days * f64::from(MINUTES_PER_DAY)) as u32;
            let latest_end = sim_minutes.saturating_sub(MINUTES_PER_DAY);
            if start + MINUTES_PER_DAY >= latest_end {
                break;
            }
            span = span.min(latest_end - start).max(60);

            // The enterprise best able to fund this shape right now:
            // most fundable source accounts, then deepest pockets.
            let want_sources = shape0.source_count();
            let ent_idx = (0..enterprises.len())
                .max_by_key(|&e| {
                    let ent = &enterprises[e];
                    let mut fundable = 0u32;
                    let mut total = 0i64;
                    for &a in &ent.stash {
                        let v = ent.available(a, start);
                        if v >= MIN_SOURCE_FUNDS {
                            fundable += 1;
                            total += v;
                        }
                    }
                    (fundable.min(want_sources), total, std::cmp::Reverse(e))
                })
                .expect("enterprises checked nonempty");
            let ent = &mut enterprises[ent_idx];

            // Funded stash accounts at this start, best-funded first.
            let mut funded: Vec<(AccountIdx, i64)> = ent
                .stash
                .iter()
                .map(|&a| (a, ent.available(a, start)))
                .filter(|&(_, v)| v >= MIN_SOURCE_FUNDS)
                .collect();
            funded.sort_unstable_by_key(|&(a, v)| (std::cmp::Reverse(v), a));
            if funded.len() < 2 && shape0.source_count() >= 2 {
                continue;
            }
            if funded.is_empty() {
                continue;
            }

            let max_nodes = ent.stash.len() as u32;
            let Some(mut shape) = clamp_shape(&shape0, max_nodes) else {
                break;
            };
            let want_sources = shape.source_count();
            let have_sources = funded.len() as u32;
            if have_sources < want_sources {
                if want_sources >= 2 && have_sources >= 2 {
                    shape = shape.with_sources(have_sources);
                    stats.instances_downsized += 1;
                } else {
                    continue;
                }
            }
            let n_sources = shape.source_count() as usize;
            let sources: Vec<AccountIdx> = funded.iter().take(n_sources).map(|&(a, _)| a).collect();
            let amounts: Vec<i64> = funded
                .iter()
                .take(n_sources)
                .map(|&(_, v)| ((v as f64 * stream.range_f64(0.5, 0.9)) as i64).max(1_000))
                .collect();

            // Remaining roles drawn from the other stash accounts,
            // preferring never-used ones unless a reuse roll says otherwise.
            let needed = shape.node_count() as usize - n_sources;
            let mut rest: Vec<AccountIdx> = Vec::with_capacity(needed);
            let mut unused: Vec<AccountIdx> = ent
                .stash
                .iter()
                .copied()
                .filter(|a| !sources.contains(a) && !ent.used.contains_key(a))
                .collect();
            let mut used_pool: Vec<AccountIdx> = ent
                .stash
                .iter()
                .copied()
                .filter(|a| !sources.contains(a) && ent.used.contains_key(a))
                .collect();
            for _ in 0..needed {
                let from_used = (unused.is_empty() && !used_pool.is_empty())
                    || (!used_pool.is_empty() && stream.chance(cfg.account_reuse_probability));
                let pool = if from_used { &mut used_pool } else { &mut unused };
                if pool.is_empty() {
                    break;
                }
                let pick = stream.range_usize(0, pool.len());
                rest.push(pool.swap_remove(pick));
            }
            if rest.len() < needed {
                // Not enough distinct accounts even after clamping.
                break;
            }
            let mut accounts = sources.clone();
            accounts.extend(&rest);
            let reused = accounts.iter().any(|a| ent.used.contains_key(a));

            match instantiate(
                pattern_id, &shape, &accounts, &amounts, span, rounds, retention, reused,
                &mut stream,
            ) {
                Ok(instance) => {
                    for (acct, need) in instance.source_requirements() {
                        *ent.committed.entry(acct).or_insert(0) += need;
                    }
                    for &a in &accounts {
                        ent.used.insert(a, true);
                    }
                    stats.pattern_tx_planned += instance.steps.len() as u64;
                    instances.push(PlannedInstance {
                        instance,
                        start_minute: start,
                    });
                    pattern_id += 1;
                    planned = true;
                }
                Err(_) => {
                    // Amounts too thin for the step count; try later.
                    continue;
                }
            }
            break;
        }
        if !planned {
            stats.instances_dropped += 1;
        }
        i += 1;
        if adaptive {
            let planned_tx = stats.pattern_tx_planned as f64;
            if planned_tx >= expected_pattern_tx + mean_tx * 0.5 {
                break;
            }
            if i == kinds.len()
                && kinds.len() < base_len * 4
                && planned_tx < expected_pattern_tx - mean_tx * 0.5
            {
                kinds.push(kinds[i % base_len]);
                let lo = sim_minutes / 20;
                let hi = (sim_minutes * 17 / 20).max(lo + 1);
                starts.push(extra_starts.range_u64(u64::from(lo), u64::from(hi)) as u32);
            }
        }
    }
    stats.instances_planned = instances.len() as u32;

    // --- Integration ----------------------------------------------------
    // Whatever the "other" budget still owes after placements is spent
    // from stash accounts into companies. Planned value per account is the
    // net of placements, pattern outflows, and pattern inflows.
    let o_total = (cfg.natural_laundering_multiplier * stats.pattern_tx_planned as f64).round();
    let integrations_target = (o_total as i64 - placements.len() as i64).max(0) as usize;

    // `ready` is the last minute an account's planned funds move; only
    // after that is its net balance safe to spend.
    let mut net: BTreeMap<AccountIdx, i64> = BTreeMap::new();
    let mut ready: BTreeMap<AccountIdx, Minute> = BTreeMap::new();
    let touch = |m: &mut BTreeMap<AccountIdx, Minute>, a: AccountIdx, minute: Minute| {
        let e = m.entry(a).or_insert(0);
        *e = (*e).max(minute);
    };
    for p in &placements {
        *net.entry(p.account).or_insert(0) += p.amount_local;
        touch(&mut ready, p.account, p.minute);
    }
    for pi in &instances {
        for step in &pi.instance.steps {
            let from = pi.instance.accounts[step.from as usize];
            let to = pi.instance.accounts[step.to as usize];
            *net.entry(from).or_insert(0) -= step.amount;
            *net.entry(to).or_insert(0) += step.amount;
            let minute = pi.start_minute + step.offset_minutes;
            touch(&mut ready, from, minute);
            touch(&mut ready, to, minute);
        }
    }
    let mut pool: Vec<(AccountIdx, i64)> = net
        .into_iter()
        .filter(|&(_, v)| v > 100)
        .collect();
    pool.sort_unstable_by_key(|&(a, v)| (std::cmp::Reverse(v), a));

    let mut integrations = Vec::with_capacity(integrations_target);
    if !pool.is_empty() && !pop.companies.is_empty() {
        let mut stream = rng_stream(cfg.seed, "launder.integration", 0);
        let size_picker = crate::rng::WeightedPicker::new(
            pop.companies
                .iter()
                .map(|&c| f64::from(pop.entities[c as usize].size.max(1))),
        );
        let mut cursor = 0usize;
        for _ in 0..integrations_target {
            // Round-robin over funded stash accounts, spending a slice of
            // what is left each visit.
            let mut hops = 0;
            while pool[cursor].1 <= 100 && hops < pool.len() {
                cursor = (cursor + 1) % pool.len();
                hops += 1;
            }
            if pool[cursor].1 <= 100 {
                break;
            }
            let (account, avail) = pool[cursor];
            // Spend only once the account's planned movements are done
            // (plus a day of slack for in-engine retries).
            let after = ready.get(&account).copied().unwrap_or(0) + MINUTES_PER_DAY;
            let hi = u64::from(sim_minutes) * 49 / 50;
            let lo = u64::from(sim_minutes * 3 / 10).max(u64::from(after));
            if lo + 60 >= hi {
                pool[cursor].1 = 0;
                cursor = (cursor + 1) % pool.len();
                continue;
            }
            let spend = ((avail as f64 * stream.range_f64(0.1, 0.4)) as i64).clamp(100, avail);
            pool[cursor].1 -= spend;
            let company = pop.companies[size_picker.pick(&mut stream)];
            let to_account = pop.entities[company as usize].primary_account();
            let minute = stream.range_u64(lo, hi) as u32;
            integrations.push(Integration {
                from_account: account,
                to_account,
                minute,
                amount_local: spend,
            });
            cursor = (cursor + 1) % pool.len();
        }
    }
    integrations.sort_unstable_by_key(|i| (i.minute, i.from_account));
    stats.integrations_planned = integrations.len() as u64;

    LaunderingPlan {
        placements,
        instances,
        integrations,
        stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::WorldConfig;
    use crate::population::build_population;

    fn setup(n_legit: u64) -> (WorldConfig, Population, CurrencyTable, LaunderingPlan) {
        let mut cfg = WorldConfig::default();
        cfg.num_individuals = 3000;
        cfg.num_companies = 80;
        cfg.criminal_fraction = 0.01;
        let pop = build_population(&cfg);
        let currencies = CurrencyTable::new(&cfg.currencies);
        let plan = plan(&cfg, &pop, &currencies, n_legit);
        (cfg, pop, currencies, plan)
    }

    #[test]
    fn row_budget_tracks_interval() {
        let (_, _, _, plan) = setup(1_750_000);
        // 1.75M legit rows at a 1-in-1750 interval wants ~1000 laundering
        // rows in total.
        assert!(
            (plan.stats.laundering_row_budget as i64 - 1000).abs() <= 1,
            "budget {}",
            plan.stats.laundering_row_budget
        );
    }

    #[test]
    fn planned_pattern_tx_near_budget() {
        let (_, _, _, plan) = setup(2_000_000);
        let budget = plan.stats.pattern_tx_budget as f64;
        let planned = plan.stats.pattern_tx_planned as f64;
        assert!(budget > 100.0);
        assert!(
            (planned - budget).abs() / budget < 0.25,
            "planned {planned} vs budget {budget}"
        );
    }

    #[test]
    fn other_rows_track_multiplier() {
        let (cfg, _, _, plan) = setup(2_000_000);
        let other = plan.stats.placements_planned + plan.stats.integrations_planned;
        let want = cfg.natural_laundering_multiplier * plan.stats.pattern_tx_planned as f64;
        assert!(
            (other as f64 - want).abs() / want < 0.05,
            "other {other} vs {want}"
        );
    }

    #[test]
    fn uniform_budget_when_not_configured() {
        let cfg = WorldConfig::default();
        let budget = derive_budget(&cfg, 1000.0);
        let counts: Vec<u32> = budget.values().copied().collect();
        let max = counts.iter().max().unwrap();
        let min = counts.iter().min().unwrap();
        assert!(max - min <= 1, "near-uniform counts, got {counts:?}");
        // Mean tx/instance is ~9.6, so ~104 instances spend 1000 rows.
        let total: u32 = counts.iter().sum();
        assert!((100..=110).contains(&total), "total {total}");
    }

    #[test]
    fn explicit_budget_is_honored() {
        let mut cfg = WorldConfig::default();
        cfg.pattern_budget = Some(crate::config::PatternBudget::uniform(50));
        let budget = derive_budget(&cfg, 0.0);
        assert!(budget.values().all(|&c| c == 50));
    }

    #[test]
    fn sources_are_funded_at_start() {
        let (_, _, _, plan) = setup(2_000_000);
        assert!(!plan.instances.is_empty());
        // Every instance's source outflow is covered by placements into
        // that account before the instance starts.
        let mut by_account: BTreeMap<AccountIdx, Vec<(Minute, i64)>> = BTreeMap::new();
        for p in &plan.placements {
            by_account
                .entry(p.account)
                .or_default()
                .push((p.minute, p.amount_local));
        }
        let mut committed: BTreeMap<AccountIdx, i64> = BTreeMap::new();
        for pi in &plan.instances {
            for (acct, need) in pi.instance.source_requirements() {
                let placed: i64 = by_account
                    .get(&acct)
                    .map(|v| {
                        v.iter()
                            .filter(|(m, _)| *m <= pi.start_minute)
                            .map(|(_, a)| a)
                            .sum()
                    })
                    .unwrap_or(0);
                let already = committed.entry(acct).or_insert(0);
                assert!(
                    placed - *already >= need,
                    "instance {} draws {} from {} but only {} is free",
                    pi.instance.pattern_id,
                    need,
                    acct,
                    placed - *already
                );
                *already += need;
            }
        }
    }

    #[test]
    fn instances_stay_within_enterprise_stash() {
        let (_, pop, _, plan) = setup(2_000_000);
        for pi in &plan.instances {
            let owner0 = pop.accounts[pi.instance.accounts[0] as usize].owner;
            let controller = pop.entities[owner0 as usize].controller.unwrap();
            for &a in &pi.instance.accounts {
                let owner = pop.accounts[a as usize].owner;
                assert!(pop.accounts[a as usize].is_stash);
                assert_eq!(
                    pop.entities[owner as usize].controller,
                    Some(controller),
                    "instances never cross enterprises"
                );
            }
        }
    }

    #[test]
    fn integration_amounts_stay_within_pool() {
        let (_, _, _, plan) = setup(2_000_000);
        // Integration never spends more from an account than placements
        // plus pattern inflows minus pattern outflows left there.
        let mut net: BTreeMap<AccountIdx, i64> = BTreeMap::new();
        for p in &plan.placements {
            *net.entry(p.account).or_insert(0) += p.amount_local;
        }
        for pi in &plan.instances {
            for s in &pi.instance.steps {
                *net.entry(pi.instance.accounts[s.from as usize]).or_insert(0) -= s.amount;
                *net.entry(pi.instance.accounts[s.to as usize]).or_insert(0) += s.amount;
            }
        }
        for i in &plan.integrations {
            let left = net.get_mut(&i.from_account).unwrap();
            *left -= i.amount_local;
            assert!(*left >= 0, "account {} oversold", i.from_account);
        }
    }

    #[test]
    fn plan_is_deterministic() {
        let (_, _, _, a) = setup(2_000_000);
        let (_, _, _, b) = setup(2_000_000);
        assert_eq!(a.placements.len(), b.placements.len());
        assert_eq!(a.instances.len(), b.instances.len());
        for (x, y) in a.instances.iter().zip(&b.instances) {
            assert_eq!(x.start_minute, y.start_minute);
            assert_eq!(x.instance.steps, y.instance.steps);
            assert_eq!(x.instance.accounts, y.instance.accounts);
        }
        for (x, y) in a.integrations.iter().zip(&b.integrations) {
            assert_eq!(x.amount_local, y.amount_local);
        }
    }

    #[test]
    fn no_criminals_no_plan() {
        let mut cfg = WorldConfig::default();
        cfg.criminal_fraction = 0.0;
        let pop = build_population(&cfg);
        let currencies = CurrencyTable::new(&cfg.currencies);
        let plan = plan(&cfg, &pop, &currencies, 1_000_000);
        assert!(plan.placements.is_empty());
        assert!(plan.instances.is_empty());
    }
}
