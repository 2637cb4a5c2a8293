//! Core world model: banks, entities, accounts, transaction records.

use serde::{Deserialize, Serialize};

use crate::money::CurrencyId;

/// Minutes since simulation start. One year fits comfortably in u32.
pub type Minute = u32;

pub const MINUTES_PER_DAY: u32 = 24 * 60;

/// Index into the entity table.
pub type EntityId = u32;
/// Index into the account table.
pub type AccountIdx = u32;
/// Bank identifier as it appears in output (10 + bank index).
pub type BankId = u32;

pub const FIRST_BANK_ID: BankId = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Individual,
    Company,
    /// Shell company controlled by a criminal enterprise.
    Shell,
    /// The bank itself (operating accounts, interest and fee flows).
    Bank,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub kind: EntityKind,
    /// Currency all of this entity's accounts are denominated in.
    pub currency: CurrencyId,
    pub accounts: Vec<AccountIdx>,
    /// For individuals: gross annual salary in reference-currency minor
    /// units (0 if unsalaried). Converted per payment.
    pub annual_salary: i64,
    /// For individuals: monthly pension in reference-currency minor units
    /// (0 if not a pensioner).
    pub monthly_pension: i64,
    /// For companies: headcount driving payroll and supplier volume.
    pub size: u32,
    /// For shells: the criminal enterprise that controls it.
    pub controller: Option<EntityId>,
}

impl Entity {
    pub fn primary_account(&self) -> AccountIdx {
        self.accounts[0]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Account {
    pub idx: AccountIdx,
    pub owner: EntityId,
    pub bank: BankId,
    /// Rendered identifier (9 uppercase hex chars, unique per run).
    pub display_id: String,
    pub currency: CurrencyId,
    /// Balance in minor units of `currency`.
    pub balance: i64,
    /// Stash accounts host laundering flows and are kept out of ordinary
    /// liquidity sourcing.
    pub is_stash: bool,
}

/// Payment rails a transaction can use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PaymentFormat {
    Ach,
    CreditCard,
    Cheque,
    Wire,
    Cash,
    Bitcoin,
    /// Self-loop rows crediting an account from outside the simulated
    /// economy (interest and similar externally funded inflows).
    Reinvestment,
}

impl PaymentFormat {
    pub const ALL: [PaymentFormat; 7] = [
        PaymentFormat::Ach,
        PaymentFormat::CreditCard,
        PaymentFormat::Cheque,
        PaymentFormat::Wire,
        PaymentFormat::Cash,
        PaymentFormat::Bitcoin,
        PaymentFormat::Reinvestment,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PaymentFormat::Ach => "ACH",
            PaymentFormat::CreditCard => "Credit Card",
            PaymentFormat::Cheque => "Cheque",
            PaymentFormat::Wire => "Wire",
            PaymentFormat::Cash => "Cash",
            PaymentFormat::Bitcoin => "Bitcoin",
            PaymentFormat::Reinvestment => "Reinvestment",
        }
    }

    pub fn parse(s: &str) -> Option<PaymentFormat> {
        Some(match s {
            "ACH" => PaymentFormat::Ach,
            "Credit Card" => PaymentFormat::CreditCard,
            "Cheque" => PaymentFormat::Cheque,
            "Wire" => PaymentFormat::Wire,
            "Cash" => PaymentFormat::Cash,
            "Bitcoin" => PaymentFormat::Bitcoin,
            "Reinvestment" => PaymentFormat::Reinvestment,
            _ => return None,
        })
    }

    pub fn ordinal(self) -> usize {
        match self {
            PaymentFormat::Ach => 0,
            PaymentFormat::CreditCard => 1,
            PaymentFormat::Cheque => 2,
            PaymentFormat::Wire => 3,
            PaymentFormat::Cash => 4,
            PaymentFormat::Bitcoin => 5,
            PaymentFormat::Reinvestment => 6,
        }
    }
}

impl std::fmt::Display for PaymentFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The shapes laundering flows are arranged in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternKind {
    FanOut,
    FanIn,
    GatherScatter,
    ScatterGather,
    Cycle,
    Random,
    Bipartite,
    Stack,
}

impl PatternKind {
    pub const ALL: [PatternKind; 8] = [
        PatternKind::FanOut,
        PatternKind::FanIn,
        PatternKind::GatherScatter,
        PatternKind::ScatterGather,
        PatternKind::Cycle,
        PatternKind::Random,
        PatternKind::Bipartite,
        PatternKind::Stack,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PatternKind::FanOut => "FAN-OUT",
            PatternKind::FanIn => "FAN-IN",
            PatternKind::GatherScatter => "GATHER-SCATTER",
            PatternKind::ScatterGather => "SCATTER-GATHER",
            PatternKind::Cycle => "CYCLE",
            PatternKind::Random => "RANDOM",
            PatternKind::Bipartite => "BIPARTITE",
            PatternKind::Stack => "STACK",
        }
    }

    pub fn parse(s: &str) -> Option<PatternKind> {
        Some(match s {
            "FAN-OUT" => PatternKind::FanOut,
            "FAN-IN" => PatternKind::FanIn,
            "GATHER-SCATTER" => PatternKind::GatherScatter,
            "SCATTER-GATHER" => PatternKind::ScatterGather,
            "CYCLE" => PatternKind::Cycle,
            "RANDOM" => PatternKind::Random,
            "BIPARTITE" => PatternKind::Bipartite,
            "STACK" => PatternKind::Stack,
            _ => return None,
        })
    }

    pub fn ordinal(self) -> usize {
        match self {
            PatternKind::FanOut => 0,
            PatternKind::FanIn => 1,
            PatternKind::GatherScatter => 2,
            PatternKind::ScatterGather => 3,
            PatternKind::Cycle => 4,
            PatternKind::Random => 5,
            PatternKind::Bipartite => 6,
            PatternKind::Stack => 7,
        }
    }
}

impl std::fmt::Display for PatternKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One emitted ledger row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub minute: Minute,
    pub from_bank: BankId,
    pub from_account: AccountIdx,
    pub to_bank: BankId,
    pub to_account: AccountIdx,
    /// Amount credited, in minor units of `receiving_currency`.
    pub amount_received: i64,
    pub receiving_currency: CurrencyId,
    /// Amount debited, in minor units of `payment_currency`.
    pub amount_paid: i64,
    pub payment_currency: CurrencyId,
    pub format: PaymentFormat,
    pub is_laundering: bool,
    /// Laundering pattern this row belongs to, if any.
    pub pattern_id: Option<u32>,
}

impl Transaction {
    /// Self-loop rows model credits arriving from outside the simulated
    /// economy (cash placements, interest); they credit without debiting.
    pub fn is_external_credit(&self) -> bool {
        self.from_account == self.to_account
    }
}

/// 36-bit Feistel permutation: maps each account index to a unique 9-digit
/// hex identifier without needing a collision table. Keyed by run seed so
/// different runs produce unrelated identifier sets.
pub fn feistel36(index: u64, seed: u64) -> u64 {
    debug_assert!(index < (1u64 << 36));
    let mut l = (index >> 18) as u32; // 18 bits
    let mut r = (index & 0x3ffff) as u32;
    for round in 0..4 {
        let k = seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(round as u64);
        let mut f = (r as u64).wrapping_add(k);
        f ^= f >> 23;
        f = f.wrapping_mul(0x2545_f491_4f6c_dd1d);
        f ^= f >> 29;
        let nl = r;
        r = l ^ ((f as u32) & 0x3ffff);
        l = nl;
    }
    ((l as u64) << 18) | r as u64
}

/// Render an account index as its 9-char uppercase hex display id.
pub fn account_display_id(index: u64, seed: u64) -> String {
    format!("{:09X}", feistel36(index, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn feistel_is_injective_on_prefix() {
        let mut seen = HashSet::new();
        for i in 0..200_000u64 {
            assert!(seen.insert(feistel36(i, 42)), "collision at {i}");
        }
    }

    #[test]
    fn feistel_stays_in_36_bits() {
        for i in [0u64, 1, 12345, (1 << 36) - 1] {
            assert!(feistel36(i, 7) < (1 << 36));
        }
    }

    #[test]
    fn display_id_is_nine_upper_hex() {
        let id = account_display_id(31337, 99);
        assert_eq!(id.len(), 9);
        assert!(id.chars().all(|c| c.is_ascii_hexdigit() && !c.is_ascii_lowercase()));
    }

    #[test]
    fn seeds_permute_differently() {
        let a: Vec<u64> = (0..32).map(|i| feistel36(i, 1)).collect();
        let b: Vec<u64> = (0..32).map(|i| feistel36(i, 2)).collect();
        assert_ne!(a, b);
    }

    #[test]
    fn format_names_round_trip() {
        for f in PaymentFormat::ALL {
            assert_eq!(PaymentFormat::parse(f.as_str()), Some(f));
        }
        assert_eq!(PaymentFormat::parse("Barter"), None);
    }

    #[test]
    fn pattern_names_round_trip() {
        for k in PatternKind::ALL {
            assert_eq!(PatternKind::parse(k.as_str()), Some(k));
        }
    }

    #[test]
    fn self_loop_is_external_credit() {
        let t = Transaction {
            minute: 0,
            from_bank: 10,
            from_account: 5,
            to_bank: 10,
            to_account: 5,
            amount_received: 100,
            receiving_currency: 0,
            amount_paid: 100,
            payment_currency: 0,
            format: PaymentFormat::Cash,
            is_laundering: true,
            pattern_id: None,
        };
        assert!(t.is_external_credit());
    }
}
