//! World construction: banks, individuals, companies, criminal shells,
//! accounts, and the static relationship graph (jobs, pensions, bills,
//! suppliers, shell ownership).
//!
//! Everything here is a pure function of the configuration; each entity
//! draws from its own derived stream so populations are stable under
//! parallel schedule building later on.

use serde::{Deserialize, Serialize};

use crate::config::{IncomeBin, WorldConfig};
use crate::model::{
    account_display_id, Account, AccountIdx, BankId, Entity, EntityId, EntityKind, FIRST_BANK_ID,
};
use crate::money::{CurrencyId, CurrencyTable, REFERENCE_CURRENCY};
use crate::rng::{rng_stream, RngStream, WeightedPicker};

/// Minute-of-day window in which scheduled business payments land.
const BUSINESS_OPEN: u32 = 8 * 60;
const BUSINESS_CLOSE: u32 = 18 * 60;

/// Operating float per bank, reference major units.
const BANK_FLOAT_MAJOR: i64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayFrequency {
    Weekly,
    Biweekly,
    Monthly,
}

impl PayFrequency {
    pub fn periods_per_year(self) -> u32 {
        match self {
            PayFrequency::Weekly => 52,
            PayFrequency::Biweekly => 26,
            PayFrequency::Monthly => 12,
        }
    }

    pub fn cycle_days(self) -> u32 {
        match self {
            PayFrequency::Weekly => 7,
            PayFrequency::Biweekly => 14,
            PayFrequency::Monthly => 0, // day-of-month semantics
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Employment {
    pub employee: EntityId,
    pub employer: EntityId,
    pub frequency: PayFrequency,
    /// Weekly/biweekly: offset within the cycle. Monthly: day of month
    /// (1-28).
    pub pay_day: u32,
    pub pay_minute: u32,
    /// Gross amount per payment, reference minor units.
    pub amount_ref: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PensionPlan {
    pub pensioner: EntityId,
    pub provider: EntityId,
    /// Day of month (1-28).
    pub pay_day: u32,
    pub pay_minute: u32,
    pub amount_ref: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BillEdge {
    pub payer: EntityId,
    pub payee: EntityId,
    /// Day of month (1-28).
    pub due_day: u32,
    pub pay_minute: u32,
    pub amount_ref: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupplierEdge {
    pub buyer: EntityId,
    pub supplier: EntityId,
    /// Day of month (1-28).
    pub pay_day: u32,
    pub pay_minute: u32,
    pub amount_ref: i64,
}

/// Equity stake; control flows along stakes above one half.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ownership {
    pub owner: EntityId,
    pub owned: EntityId,
    pub fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Population {
    pub entities: Vec<Entity>,
    pub accounts: Vec<Account>,
    pub num_banks: u32,
    pub individuals: Vec<EntityId>,
    pub companies: Vec<EntityId>,
    pub bank_entities: Vec<EntityId>,
    pub shells: Vec<EntityId>,
    pub criminals: Vec<EntityId>,
    pub employments: Vec<Employment>,
    pub pensions: Vec<PensionPlan>,
    pub bills: Vec<BillEdge>,
    pub suppliers: Vec<SupplierEdge>,
    pub ownerships: Vec<Ownership>,
}

impl Population {
    pub fn bank_ids(&self) -> impl Iterator<Item = BankId> {
        (0..self.num_banks).map(|i| FIRST_BANK_ID + i)
    }

    /// Entities controlled by `root` through majority stakes: depth-first
    /// over ownership edges with fraction > 0.5.
    pub fn controlled_by(&self, root: EntityId) -> Vec<EntityId> {
        let mut out = Vec::new();
        let mut stack = vec![root];
        let mut seen = vec![false; self.entities.len()];
        seen[root as usize] = true;
        while let Some(cur) = stack.pop() {
            for o in &self.ownerships {
                if o.owner == cur && o.fraction > 0.5 && !seen[o.owned as usize] {
                    seen[o.owned as usize] = true;
                    out.push(o.owned);
                    stack.push(o.owned);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// All stash accounts of the shells a criminal controls.
    pub fn stash_accounts_of(&self, criminal: EntityId) -> Vec<AccountIdx> {
        let mut out = Vec::new();
        for shell in self.controlled_by(criminal) {
            out.extend(&self.entities[shell as usize].accounts);
        }
        out
    }
}

fn sample_income(histogram: &[IncomeBin], stream: &mut RngStream) -> i64 {
    let mut cum = Vec::with_capacity(histogram.len());
    let mut acc = 0.0;
    for bin in histogram {
        acc += bin.p.max(0.0);
        cum.push(acc);
    }
    let bin = &histogram[stream.pick_cumulative(&cum)];
    let major = if bin.max > bin.min {
        stream.range_f64(bin.min, bin.max)
    } else {
        bin.min
    };
    (major * 100.0).round() as i64
}

fn business_minute(stream: &mut RngStream) -> u32 {
    stream.range_u64(u64::from(BUSINESS_OPEN), u64::from(BUSINESS_CLOSE)) as u32
}

/// Mean of a log-normal with the given linear-space mean and log-space
/// sigma; draws around `mean` without changing the expectation.
fn log_normal_mean(stream: &mut RngStream, mean: f64, sigma: f64) -> f64 {
    let mu = mean.max(1e-9).ln() - sigma * sigma / 2.0;
    stream.log_normal(mu, sigma)
}

struct Builder<'a> {
    cfg: &'a WorldConfig,
    currencies: CurrencyTable,
    currency_picker: WeightedPicker,
    entities: Vec<Entity>,
    accounts: Vec<Account>,
}

impl<'a> Builder<'a> {
    fn add_entity(&mut self, kind: EntityKind, currency: CurrencyId) -> EntityId {
        let id = self.entities.len() as EntityId;
        self.entities.push(Entity {
            id,
            kind,
            currency,
            accounts: Vec::new(),
            annual_salary: 0,
            monthly_pension: 0,
            size: 0,
            controller: None,
        });
        id
    }

    fn add_account(&mut self, owner: EntityId, bank: BankId, is_stash: bool) -> AccountIdx {
        let idx = self.accounts.len() as AccountIdx;
        let currency = self.entities[owner as usize].currency;
        self.accounts.push(Account {
            idx,
            owner,
            bank,
            display_id: account_display_id(u64::from(idx), self.cfg.seed),
            currency,
            balance: 0,
            is_stash,
        });
        self.entities[owner as usize].accounts.push(idx);
        idx
    }

    fn pick_bank(&self, stream: &mut RngStream) -> BankId {
        FIRST_BANK_ID + stream.range_u64(0, u64::from(self.cfg.num_banks)) as BankId
    }

    /// 1 + geometric extras, capped by config.
    fn account_count(&self, stream: &mut RngStream) -> u32 {
        let mut n = 1;
        while n < self.cfg.max_accounts_per_entity && stream.chance(self.cfg.extra_account_p) {
            n += 1;
        }
        n
    }
}

/// Build the full static world for a configuration.
pub fn build_population(cfg: &WorldConfig) -> Population {
    let currencies = CurrencyTable::new(&cfg.currencies);
    let currency_picker = WeightedPicker::new(cfg.currencies.iter().map(|c| c.weight));
    let mut b = Builder {
        cfg,
        currencies,
        currency_picker,
        entities: Vec::new(),
        accounts: Vec::new(),
    };

    // Individuals first, then companies, then bank entities, then shells.
    // Owners always precede what they own, so ownership edges form a DAG.
    let mut individuals = Vec::with_capacity(cfg.num_individuals as usize);
    // Probability a non-pensioner is salaried, chosen so the overall
    // salaried share matches salary_participation while pensioners are
    // salaried at half the population rate (semi-retired part-timers).
    let pensioner_salaried_p = (cfg.salary_participation * 0.5).min(1.0);
    let other_salaried_p = ((cfg.salary_participation
        - cfg.pension_participation * pensioner_salaried_p)
        / (1.0 - cfg.pension_participation))
        .clamp(0.0, 1.0);

    for i in 0..cfg.num_individuals {
        let mut stream = rng_stream(cfg.seed, "pop.individual", u64::from(i));
        let currency = b.currency_picker.pick(&mut stream) as CurrencyId;
        let id = b.add_entity(EntityKind::Individual, currency);
        let pensioner = stream.chance(cfg.pension_participation);
        let salaried = if pensioner {
            stream.chance(pensioner_salaried_p)
        } else {
            stream.chance(other_salaried_p)
        };
        if salaried {
            b.entities[id as usize].annual_salary = sample_income(&cfg.salary_histogram, &mut stream);
        }
        if pensioner {
            let annual = sample_income(&cfg.pension_histogram, &mut stream);
            b.entities[id as usize].monthly_pension = annual / 12;
        }
        let n_accounts = b.account_count(&mut stream);
        for _ in 0..n_accounts {
            let bank = b.pick_bank(&mut stream);
            b.add_account(id, bank, false);
        }
        individuals.push(id);
    }

    let mut companies = Vec::with_capacity(cfg.num_companies as usize);
    let (size_lo, size_hi) = cfg.company_size_range;
    for i in 0..cfg.num_companies {
        let mut stream = rng_stream(cfg.seed, "pop.company", u64::from(i));
        let currency = b.currency_picker.pick(&mut stream) as CurrencyId;
        let id = b.add_entity(EntityKind::Company, currency);
        // Log-uniform headcount: most companies are small, a few are large.
        let ln_size = stream.range_f64(f64::from(size_lo).ln(), f64::from(size_hi + 1).ln());
        b.entities[id as usize].size = (ln_size.exp().floor() as u32).clamp(size_lo, size_hi);
        let n_accounts = b.account_count(&mut stream);
        for _ in 0..n_accounts {
            let bank = b.pick_bank(&mut stream);
            b.add_account(id, bank, false);
        }
        companies.push(id);
    }

    let mut bank_entities = Vec::with_capacity(cfg.num_banks as usize);
    for i in 0..cfg.num_banks {
        let id = b.add_entity(EntityKind::Bank, REFERENCE_CURRENCY);
        let acct = b.add_account(id, FIRST_BANK_ID + i, false);
        let decimals = b.currencies.decimals(REFERENCE_CURRENCY);
        b.accounts[acct as usize].balance = BANK_FLOAT_MAJOR * 10i64.pow(u32::from(decimals));
        bank_entities.push(id);
    }

    // Criminal designation and shell networks.
    let mut criminals = Vec::new();
    {
        let mut stream = rng_stream(cfg.seed, "pop.criminals", 0);
        for &id in &individuals {
            if stream.chance(cfg.criminal_fraction) {
                criminals.push(id);
            }
        }
        if criminals.is_empty() && cfg.criminal_fraction > 0.0 && !individuals.is_empty() {
            criminals.push(individuals[0]);
        }
    }

    let mut shells = Vec::new();
    let mut ownerships = Vec::new();
    for (ci, &criminal) in criminals.iter().enumerate() {
        let mut stream = rng_stream(cfg.seed, "pop.shells", ci as u64);
        let (lo, hi) = cfg.shells_per_criminal;
        let count = stream.range_u64(u64::from(lo), u64::from(hi) + 1) as u32;
        let currency = b.entities[criminal as usize].currency;
        // Owners eligible to hold a new shell: the criminal (depth 0) and
        // shells shallower than the depth cap.
        let mut eligible: Vec<(EntityId, u32)> = vec![(criminal, 0)];
        for _ in 0..count {
            let (owner, owner_depth) = eligible[stream.range_usize(0, eligible.len())];
            let id = b.add_entity(EntityKind::Shell, currency);
            b.entities[id as usize].controller = Some(criminal);
            ownerships.push(Ownership {
                owner,
                owned: id,
                fraction: stream.range_f64(0.51, 1.0),
            });
            let (alo, ahi) = cfg.shell_accounts_range;
            let n_accounts = stream.range_u64(u64::from(alo), u64::from(ahi) + 1) as u32;
            for _ in 0..n_accounts {
                let bank = b.pick_bank(&mut stream);
                b.add_account(id, bank, true);
            }
            if owner_depth + 1 < cfg.max_shell_depth {
                eligible.push((id, owner_depth + 1));
            }
            shells.push(id);
        }
    }
    // Minority stakes between enterprises: realistic noise that must not
    // extend control.
    {
        let mut stream = rng_stream(cfg.seed, "pop.minority", 0);
        for &shell in &shells {
            if shells.len() > 1 && stream.chance(0.15) {
                let other = shells[stream.range_usize(0, shells.len())];
                if other != shell
                    && b.entities[other as usize].controller != b.entities[shell as usize].controller
                {
                    ownerships.push(Ownership {
                        owner: other,
                        owned: shell,
                        fraction: stream.range_f64(0.05, 0.49),
                    });
                }
            }
        }
    }

    // Relationship edges. Companies are weighted by headcount wherever an
    // individual or company chooses a counterparty.
    let size_picker = WeightedPicker::new(
        companies
            .iter()
            .map(|&c| f64::from(b.entities[c as usize].size.max(1))),
    );

    let mut employments = Vec::new();
    let mut pensions = Vec::new();
    let mut bills = Vec::new();
    let freq_picker = WeightedPicker::new(cfg.salary_frequency_weights);
    for (i, &id) in individuals.iter().enumerate() {
        let mut stream = rng_stream(cfg.seed, "pop.edges.individual", i as u64);
        let ent = &b.entities[id as usize];
        let (salary, pension) = (ent.annual_salary, ent.monthly_pension);
        if salary > 0 && !companies.is_empty() {
            let employer = companies[size_picker.pick(&mut stream)];
            let frequency = match freq_picker.pick(&mut stream) {
                0 => PayFrequency::Weekly,
                1 => PayFrequency::Biweekly,
                _ => PayFrequency::Monthly,
            };
            let pay_day = match frequency {
                PayFrequency::Monthly => stream.range_u64(1, 29) as u32,
                f => stream.range_u64(0, u64::from(f.cycle_days())) as u32,
            };
            employments.push(Employment {
                employee: id,
                employer,
                frequency,
                pay_day,
                pay_minute: business_minute(&mut stream),
                amount_ref: salary / i64::from(frequency.periods_per_year()),
            });
        }
        if pension > 0 && !companies.is_empty() {
            let provider = companies[size_picker.pick(&mut stream)];
            pensions.push(PensionPlan {
                pensioner: id,
                provider,
                pay_day: stream.range_u64(1, 29) as u32,
                pay_minute: business_minute(&mut stream),
                amount_ref: pension,
            });
        }
        if !companies.is_empty() {
            let (blo, bhi) = cfg.bills_per_individual;
            let n_bills = stream.range_u64(u64::from(blo), u64::from(bhi) + 1) as u32;
            let (mean, sigma) = cfg.bill_amount;
            for _ in 0..n_bills {
                let payee = companies[size_picker.pick(&mut stream)];
                let amount = log_normal_mean(&mut stream, mean, sigma);
                bills.push(BillEdge {
                    payer: id,
                    payee,
                    due_day: stream.range_u64(1, 29) as u32,
                    pay_minute: business_minute(&mut stream),
                    amount_ref: ((amount * 100.0).round() as i64).max(100),
                });
            }
        }
    }

    let mut suppliers = Vec::new();
    if companies.len() > 1 {
        for (i, &id) in companies.iter().enumerate() {
            let mut stream = rng_stream(cfg.seed, "pop.edges.company", i as u64);
            let (slo, shi) = cfg.suppliers_per_company;
            let n = stream.range_u64(u64::from(slo), u64::from(shi) + 1) as u32;
            let size = b.entities[id as usize].size.max(1);
            for _ in 0..n {
                let mut supplier = companies[size_picker.pick(&mut stream)];
                if supplier == id {
                    supplier = companies[(i + 1) % companies.len()];
                }
                // Supplier spend scales with buyer headcount.
                let amount = log_normal_mean(&mut stream, f64::from(size) * 100.0, 0.7);
                suppliers.push(SupplierEdge {
                    buyer: id,
                    supplier,
                    pay_day: stream.range_u64(1, 29) as u32,
                    pay_minute: business_minute(&mut stream),
                    amount_ref: ((amount * 100.0).round() as i64).max(1_000),
                });
            }
        }
    }

    // Opening balances: enough float that scheduled outflows rarely bounce.
    let mut monthly_payroll_ref = vec![0i64; b.entities.len()];
    for e in &employments {
        monthly_payroll_ref[e.employer as usize] +=
            e.amount_ref * i64::from(e.frequency.periods_per_year()) / 12;
    }
    for p in &pensions {
        monthly_payroll_ref[p.provider as usize] += p.amount_ref;
    }
    let mut monthly_supplier_ref = vec![0i64; b.entities.len()];
    for s in &suppliers {
        monthly_supplier_ref[s.buyer as usize] += s.amount_ref;
    }

    for &id in individuals.iter() {
        let mut stream = rng_stream(cfg.seed, "pop.balance", u64::from(id));
        let ent = &b.entities[id as usize];
        let monthly = (ent.annual_salary / 12 + ent.monthly_pension).max(80_000);
        let total_ref = ((monthly as f64) * cfg.initial_balance_months * stream.range_f64(0.6, 1.4))
            .round() as i64;
        distribute_balance(&mut b, id, total_ref.max(20_000), &mut stream);
    }
    for &id in companies.iter() {
        let mut stream = rng_stream(cfg.seed, "pop.balance", u64::from(id));
        let outflow = monthly_payroll_ref[id as usize] + monthly_supplier_ref[id as usize];
        let total_ref = ((outflow.max(2_000_000) as f64)
            * cfg.initial_balance_months
            * stream.range_f64(0.8, 1.2))
        .round() as i64;
        distribute_balance(&mut b, id, total_ref, &mut stream);
    }

    Population {
        entities: b.entities,
        accounts: b.accounts,
        num_banks: cfg.num_banks,
        individuals,
        companies,
        bank_entities,
        shells,
        criminals,
        employments,
        pensions,
        bills,
        suppliers,
        ownerships,
    }
}

/// Convert a reference-currency total into the entity's currency and
/// spread it over its accounts, primary-heavy.
fn distribute_balance(b: &mut Builder, id: EntityId, total_ref: i64, stream: &mut RngStream) {
    let ent = b.entities[id as usize].clone();
    let local = b.currencies.convert(total_ref, REFERENCE_CURRENCY, ent.currency);
    let n = ent.accounts.len();
    if n == 0 || local <= 0 {
        return;
    }
    if n == 1 {
        b.accounts[ent.accounts[0] as usize].balance = local;
        return;
    }
    let primary = (local as f64 * 0.7).round() as i64;
    b.accounts[ent.accounts[0] as usize].balance = primary;
    let rest = stream.simplex_split(local - primary, n - 1);
    for (acct, share) in ent.accounts[1..].iter().zip(rest) {
        b.accounts[*acct as usize].balance = share;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::WorldConfig;

    fn world() -> Population {
        let mut cfg = WorldConfig::default();
        cfg.num_individuals = 4000;
        cfg.num_companies = 120;
        cfg.num_banks = 7;
        cfg.criminal_fraction = 0.01;
        build_population(&cfg)
    }

    #[test]
    fn participation_rates_match_config() {
        let pop = world();
        let n = pop.individuals.len() as f64;
        let salaried = pop
            .individuals
            .iter()
            .filter(|&&i| pop.entities[i as usize].annual_salary > 0)
            .count() as f64;
        let pensioners = pop
            .individuals
            .iter()
            .filter(|&&i| pop.entities[i as usize].monthly_pension > 0)
            .count() as f64;
        // Binomial three-sigma bands around the configured rates.
        let sig_s = (0.625 * 0.375 / n).sqrt();
        let sig_p = (0.183 * 0.817 / n).sqrt();
        assert!(
            (salaried / n - 0.625).abs() < 3.0 * sig_s,
            "salaried share {} off target",
            salaried / n
        );
        assert!(
            (pensioners / n - 0.183).abs() < 3.0 * sig_p,
            "pensioner share {} off target",
            pensioners / n
        );
    }

    #[test]
    fn every_salaried_individual_has_one_job() {
        let pop = world();
        for &i in &pop.individuals {
            let jobs = pop.employments.iter().filter(|e| e.employee == i).count();
            let expected = usize::from(pop.entities[i as usize].annual_salary > 0);
            assert_eq!(jobs, expected, "individual {i}");
        }
    }

    #[test]
    fn account_counts_respect_cap() {
        let pop = world();
        for e in &pop.entities {
            if e.kind == EntityKind::Individual || e.kind == EntityKind::Company {
                assert!(!e.accounts.is_empty());
                assert!(e.accounts.len() <= 5);
            }
        }
    }

    #[test]
    fn control_closure_matches_shell_assignment() {
        let pop = world();
        assert!(!pop.criminals.is_empty());
        for &criminal in &pop.criminals {
            let controlled = pop.controlled_by(criminal);
            let assigned: Vec<EntityId> = pop
                .shells
                .iter()
                .copied()
                .filter(|&s| pop.entities[s as usize].controller == Some(criminal))
                .collect();
            assert_eq!(
                controlled, assigned,
                "majority-stake closure must equal the controller field"
            );
            assert!(controlled.len() >= 3, "criminal {criminal} has too few shells");
            assert!(controlled.len() <= 8);
        }
    }

    #[test]
    fn minority_stakes_never_grant_control() {
        let pop = world();
        for o in &pop.ownerships {
            if o.fraction <= 0.5 {
                let owner_ctl = pop.entities[o.owner as usize].controller;
                let owned_ctl = pop.entities[o.owned as usize].controller;
                assert_ne!(owner_ctl, owned_ctl, "minority edges cross enterprises");
            }
        }
    }

    #[test]
    fn ownership_edges_form_a_dag() {
        let pop = world();
        for o in &pop.ownerships {
            if o.fraction > 0.5 {
                assert!(o.owner < o.owned, "owners precede owned entities");
            }
        }
    }

    #[test]
    fn shell_accounts_are_stash_and_empty() {
        let pop = world();
        for &s in &pop.shells {
            let ent = &pop.entities[s as usize];
            assert!(ent.accounts.len() >= 2 && ent.accounts.len() <= 4);
            for &a in &ent.accounts {
                assert!(pop.accounts[a as usize].is_stash);
                assert_eq!(pop.accounts[a as usize].balance, 0);
                assert_eq!(pop.accounts[a as usize].currency, ent.currency);
            }
        }
    }

    #[test]
    fn every_bank_hosts_accounts() {
        let pop = world();
        for bank in pop.bank_ids() {
            assert!(
                pop.accounts.iter().any(|a| a.bank == bank),
                "bank {bank} has no accounts"
            );
        }
    }

    #[test]
    fn display_ids_unique() {
        let pop = world();
        let mut ids: Vec<&str> = pop.accounts.iter().map(|a| a.display_id.as_str()).collect();
        ids.sort_unstable();
        let before = ids.len();
        ids.dedup();
        assert_eq!(ids.len(), before, "display ids must not collide");
    }

    #[test]
    fn company_sizes_within_range() {
        let pop = world();
        let sizes: Vec<u32> = pop
            .companies
            .iter()
            .map(|&c| pop.entities[c as usize].size)
            .collect();
        assert!(sizes.iter().all(|&s| (1..=500).contains(&s)));
        // Log-uniform sizing puts well over half the companies under 25.
        let small = sizes.iter().filter(|&&s| s < 25).count();
        assert!(small * 2 > sizes.len(), "{small} of {} small", sizes.len());
    }

    #[test]
    fn balances_are_funded_for_non_shells() {
        let pop = world();
        for &i in pop.individuals.iter().chain(&pop.companies) {
            let total: i64 = pop.entities[i as usize]
                .accounts
                .iter()
                .map(|&a| pop.accounts[a as usize].balance)
                .sum();
            assert!(total > 0, "entity {i} starts broke");
        }
    }

    #[test]
    fn build_is_deterministic() {
        let cfg = WorldConfig::default();
        let a = build_population(&cfg);
        let b = build_population(&cfg);
        assert_eq!(a.accounts.len(), b.accounts.len());
        for (x, y) in a.accounts.iter().zip(&b.accounts) {
            assert_eq!(x.display_id, y.display_id);
            assert_eq!(x.balance, y.balance);
            assert_eq!(x.bank, y.bank);
        }
        assert_eq!(a.criminals, b.criminals);
        assert_eq!(a.employments.len(), b.employments.len());
    }
}
