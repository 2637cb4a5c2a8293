//! Illicit sub-balance tracking ("taint") per account.
//!
//! Each account carries, next to its balance, the portion known to descend
//! from criminal income. Deposits add to it, withdrawals drain it either
//! pro-rata (co-mingled spending) or illicit-first (deliberate laundering
//! hops), and the label rule marks a transfer as laundering when the illicit
//! share crosses the configured threshold or the transfer belongs to a
//! planned pattern. The tag is transitive: funds that arrive tainted leave
//! tainted.

use thiserror::Error;

/// Balance and illicit sub-balance of one account, in minor units of the
/// account's currency. Invariant: `0 <= illicit <= balance`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Holdings {
    pub balance: i64,
    pub illicit: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WithdrawMode {
    /// Illicit portion proportional to the account's illicit share,
    /// rounded half-even and clamped to feasibility.
    ProRata,
    /// Drain illicit funds before clean ones.
    IllicitFirst,
}

/// How a withdrawal decomposed into clean and illicit funds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WithdrawSplit {
    pub clean: i64,
    pub illicit: i64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TaintError {
    #[error("negative amount {0}")]
    NegativeAmount(i64),
    #[error("illicit portion {illicit} exceeds amount {amount}")]
    IllicitExceedsAmount { illicit: i64, amount: i64 },
    #[error("insufficient balance: need {needed}, have {available}")]
    InsufficientBalance { needed: i64, available: i64 },
}

impl Holdings {
    pub fn new(balance: i64) -> Self {
        Self {
            balance,
            illicit: 0,
        }
    }

    fn check_invariant(&self) {
        debug_assert!(
            0 <= self.illicit && self.illicit <= self.balance,
            "taint invariant violated: illicit {} balance {}",
            self.illicit,
            self.balance
        );
    }

    /// Credit `amount`, of which `illicit_portion` is tainted.
    pub fn deposit(&mut self, amount: i64, illicit_portion: i64) -> Result<(), TaintError> {
        if amount < 0 || illicit_portion < 0 {
            return Err(TaintError::NegativeAmount(amount.min(illicit_portion)));
        }
        if illicit_portion > amount {
            return Err(TaintError::IllicitExceedsAmount {
                illicit: illicit_portion,
                amount,
            });
        }
        self.balance += amount;
        self.illicit += illicit_portion;
        self.check_invariant();
        Ok(())
    }

    /// Debit `amount` and report how much of it was illicit.
    pub fn withdraw(&mut self, amount: i64, mode: WithdrawMode) -> Result<WithdrawSplit, TaintError> {
        if amount < 0 {
            return Err(TaintError::NegativeAmount(amount));
        }
        if amount > self.balance {
            return Err(TaintError::InsufficientBalance {
                needed: amount,
                available: self.balance,
            });
        }
        let illicit_portion = match mode {
            WithdrawMode::IllicitFirst => amount.min(self.illicit),
            WithdrawMode::ProRata => {
                let clean_available = self.balance - self.illicit;
                // A withdrawal larger than the clean pool must carry illicit
                // funds, or the remaining illicit would exceed the balance.
                let lo = (amount - clean_available).max(0);
                let hi = amount.min(self.illicit);
                pro_rata_portion(amount, self.illicit, self.balance).clamp(lo, hi)
            }
        };
        self.balance -= amount;
        self.illicit -= illicit_portion;
        self.check_invariant();
        Ok(WithdrawSplit {
            clean: amount - illicit_portion,
            illicit: illicit_portion,
        })
    }

    pub fn illicit_fraction(&self) -> f64 {
        if self.balance == 0 {
            0.0
        } else {
            self.illicit as f64 / self.balance as f64
        }
    }
}

/// `amount * illicit / balance` rounded half to even, in exact integer
/// arithmetic.
fn pro_rata_portion(amount: i64, illicit: i64, balance: i64) -> i64 {
    debug_assert!(balance > 0 || amount == 0);
    if balance == 0 || illicit == 0 {
        return 0;
    }
    let num = amount as i128 * illicit as i128;
    let den = balance as i128;
    let floor = num / den;
    let rem = num % den;
    let up = match (2 * rem).cmp(&den) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Equal => (floor % 2 != 0) as i128,
        std::cmp::Ordering::Less => 0,
    };
    (floor + up) as i64
}

/// The laundering label rule: a transfer is laundering when it belongs to a
/// planned pattern or its illicit share reaches the threshold.
pub fn label(illicit_portion: i64, amount: i64, in_pattern: bool, threshold: f64) -> bool {
    debug_assert!(amount > 0);
    in_pattern || (illicit_portion as f64 / amount as f64) >= threshold
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placement_into_empty_account_is_fully_tainted() {
        let mut h = Holdings::default();
        h.deposit(1000, 1000).unwrap();
        assert_eq!(h.balance, 1000);
        assert_eq!(h.illicit, 1000);
        assert_eq!(h.illicit_fraction(), 1.0);
    }

    #[test]
    fn clean_deposit_dilutes_fraction() {
        let mut h = Holdings::default();
        h.deposit(100, 100).unwrap();
        h.deposit(100, 0).unwrap();
        assert_eq!(h.illicit, 100);
        assert_eq!(h.balance, 200);
        assert_eq!(h.illicit_fraction(), 0.5);
    }

    #[test]
    fn overfull_illicit_rejected() {
        let mut h = Holdings::default();
        assert_eq!(
            h.deposit(100, 150),
            Err(TaintError::IllicitExceedsAmount {
                illicit: 150,
                amount: 100
            })
        );
    }

    #[test]
    fn pro_rata_half_split() {
        let mut h = Holdings::default();
        h.deposit(200, 100).unwrap();
        let split = h.withdraw(50, WithdrawMode::ProRata).unwrap();
        assert_eq!(split.illicit, 25);
        assert_eq!(split.clean, 25);
        assert_eq!(h.balance, 150);
        assert_eq!(h.illicit, 75);
    }

    #[test]
    fn illicit_first_drains_taint() {
        let mut h = Holdings::default();
        h.deposit(200, 100).unwrap();
        let split = h.withdraw(50, WithdrawMode::IllicitFirst).unwrap();
        assert_eq!(split.illicit, 50);
        assert_eq!(h.illicit, 50);
        assert_eq!(h.balance, 150);
    }

    #[test]
    fn transitive_chain_stays_labeled() {
        // A pays B 100 in illicit funds; B sends 50 on; the receiver sends
        // 25 on. Every hop draws illicit-first and stays fully tainted.
        let tau = 0.5;
        let mut b = Holdings::default();
        b.deposit(100, 100).unwrap();
        let hop1 = b.withdraw(50, WithdrawMode::IllicitFirst).unwrap();
        assert!(label(hop1.illicit, 50, false, tau));

        let mut c = Holdings::default();
        c.deposit(50, hop1.illicit).unwrap();
        let hop2 = c.withdraw(25, WithdrawMode::IllicitFirst).unwrap();
        assert_eq!(hop2.illicit, 25);
        assert!(label(hop2.illicit, 25, false, tau));
    }

    #[test]
    fn withdraw_beyond_clean_pool_forces_illicit() {
        let mut h = Holdings::default();
        h.deposit(100, 90).unwrap();
        // Clean pool is 10; withdrawing 40 must carry at least 30 illicit.
        let split = h.withdraw(40, WithdrawMode::ProRata).unwrap();
        assert!(split.illicit >= 30, "split {split:?}");
        assert!(h.illicit <= h.balance);
    }

    #[test]
    fn insufficient_balance_rejected() {
        let mut h = Holdings::new(30);
        assert_eq!(
            h.withdraw(50, WithdrawMode::ProRata),
            Err(TaintError::InsufficientBalance {
                needed: 50,
                available: 30
            })
        );
    }

    #[test]
    fn label_rule_cases() {
        assert!(label(25, 25, false, 0.5));
        assert!(!label(0, 100, false, 0.5));
        assert!(label(0, 100, true, 0.5));
        assert!(label(50, 100, false, 0.5));
        assert!(!label(49, 100, false, 0.5));
    }

    #[test]
    fn pro_rata_rounds_half_even() {
        // 5 * 1/2 = 2.5 -> rounds to 2 (even).
        assert_eq!(pro_rata_portion(5, 1, 2), 2);
        // 7 * 1/2 = 3.5 -> rounds to 4 (even).
        assert_eq!(pro_rata_portion(7, 1, 2), 4);
        // Large values stay exact via 128-bit intermediates.
        assert_eq!(
            pro_rata_portion(1_000_000_000_000, 999_999_999_999, 1_000_000_000_000),
            999_999_999_999
        );
    }
}
