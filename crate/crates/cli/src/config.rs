//! Budget resolution: profile from the environment, overridden per flag.

use anyhow::{bail, Result};
use heyting_core::budget::Budgets;

use crate::Common;

pub struct RunConfig {
    pub n: u16,
    pub budgets: Budgets,
    pub profile: String,
    pub seed: Option<u64>,
}

/// Resolve the effective configuration: the `HEYTING_BUDGET_PROFILE`
/// environment variable picks a preset (`ci`, `desk`, `deep`; the library
/// default otherwise), then individual `--budget-*` flags override fields.
pub fn resolve(common: &Common) -> Result<RunConfig> {
    let (profile, mut budgets) = match std::env::var("HEYTING_BUDGET_PROFILE") {
        Ok(name) => match Budgets::from_profile(&name) {
            Some(b) => (name, b),
            None => bail!("unknown budget profile {name:?}; expected ci, desk or deep"),
        },
        Err(_) => ("default".to_string(), Budgets::default()),
    };
    if let Some(v) = common.budget_types {
        budgets.max_types = v;
    }
    if let Some(v) = common.budget_meets {
        budgets.max_meets = v;
    }
    if let Some(v) = common.budget_nodes {
        budgets.max_nodes = v;
    }
    if let Some(v) = common.budget_levels {
        budgets.max_levels = v;
    }
    if let Some(v) = common.budget_steps {
        budgets.max_steps = v;
    }
    if let Some(v) = common.budget_width {
        budgets.width_cap = v;
    }
    if budgets.max_types == 0
        || budgets.max_meets == 0
        || budgets.max_nodes == 0
        || budgets.max_levels == 0
        || budgets.max_steps == 0
        || budgets.width_cap == 0
    {
        bail!("budgets must be positive");
    }
    Ok(RunConfig {
        n: common.n,
        budgets,
        profile,
        seed: common.seed,
    })
}
