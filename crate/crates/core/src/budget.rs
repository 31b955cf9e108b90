//! Resource budgets shared by every potentially unbounded operation.
//!
//! Enumerations over the universal model and the type saturation engine are
//! only semidecidable in general; budgets keep every public operation total.
//! Exhausting a budget is always reported honestly (`BudgetExceeded`-style
//! errors or an `Unknown` verdict), never silently truncated.

/// Limits for saturation, fragment growth and brute-force search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Budgets {
    /// Maximum number of realized types a saturation run may store.
    pub max_types: usize,
    /// Maximum number of distinct successor-set meets tracked during saturation.
    pub max_meets: usize,
    /// Maximum number of universal-model nodes an enumeration may create or count.
    pub max_nodes: usize,
    /// Deepest level a k-set enumeration or classification may explore.
    pub max_levels: u32,
    /// Step counter cap for brute-force model search and antichain sweeps.
    pub max_steps: u64,
    /// Maximum subformula-closure width accepted by the prover.
    pub width_cap: usize,
}

impl Default for Budgets {
    /// Conservative library default; formulas of modest size fit comfortably.
    fn default() -> Self {
        Budgets {
            max_types: 50_000,
            max_meets: 100_000,
            max_nodes: 50_000,
            max_levels: 8,
            max_steps: 10_000_000,
            width_cap: 64,
        }
    }
}

impl Budgets {
    /// Small limits for quick smoke runs.
    pub fn ci() -> Self {
        Budgets {
            max_types: 20_000,
            max_meets: 40_000,
            max_nodes: 20_000,
            max_levels: 6,
            max_steps: 4_000_000,
            width_cap: 128,
        }
    }

    /// Workstation-scale limits; the acceptance suite runs under this profile.
    pub fn desk() -> Self {
        Budgets {
            max_types: 400_000,
            max_meets: 800_000,
            max_nodes: 400_000,
            max_levels: 10,
            max_steps: 200_000_000,
            width_cap: 2048,
        }
    }

    /// Generous limits for long exploratory runs.
    pub fn deep() -> Self {
        Budgets {
            max_types: 4_000_000,
            max_meets: 8_000_000,
            max_nodes: 4_000_000,
            max_levels: 14,
            max_steps: 2_000_000_000,
            width_cap: 4096,
        }
    }

    /// Look up a named profile (`ci`, `desk`, `deep`).
    pub fn from_profile(name: &str) -> Option<Self> {
        match name {
            "ci" => Some(Self::ci()),
            "desk" => Some(Self::desk()),
            "deep" => Some(Self::deep()),
            _ => None,
        }
    }

    /// Fresh step meter capped at this budget's `max_steps`.
    pub fn meter(&self) -> StepMeter {
        StepMeter::new(self.max_steps)
    }
}

/// A search gave up because its step cap was reached; results so far are
/// discarded, never partially reported.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("step budget exhausted after {used} steps during {phase}")]
pub struct BudgetExhausted {
    pub phase: &'static str,
    pub used: u64,
}

/// Running step counter checked against `max_steps`.
#[derive(Debug)]
pub struct StepMeter {
    used: u64,
    cap: u64,
}

impl StepMeter {
    pub fn new(cap: u64) -> Self {
        StepMeter { used: 0, cap }
    }

    /// Count `n` steps; `false` once the cap is passed.
    #[inline]
    pub fn tick(&mut self, n: u64) -> bool {
        self.used = self.used.saturating_add(n);
        self.used <= self.cap
    }

    pub fn used(&self) -> u64 {
        self.used
    }
}
