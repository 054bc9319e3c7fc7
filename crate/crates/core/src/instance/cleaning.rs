//! Cleaning-time table keyed by product attributes and operation family.

use std::collections::BTreeMap;

use super::{TaskAttributes, Time, DEFAULT_LABEL};

/// Lookup key of one table entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CleaningKey {
    pub from_product_family: String,
    pub from_strength: String,
    pub to_product_family: String,
    pub to_strength: String,
    pub operation_family: String,
}

impl CleaningKey {
    pub fn new(
        from: (&str, &str),
        to: (&str, &str),
        operation_family: &str,
    ) -> Self {
        Self {
            from_product_family: from.0.to_string(),
            from_strength: from.1.to_string(),
            to_product_family: to.0.to_string(),
            to_strength: to.1.to_string(),
            operation_family: operation_family.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CleaningTable {
    pub entries: BTreeMap<CleaningKey, Time>,
    pub family_defaults: BTreeMap<String, Time>,
    pub global_default: Time,
}

// Key fields in the order they are relaxed to the wildcard label: the mask
// bit `i` replaces field `i` with "default".
const FIELDS: usize = 5;

fn wildcard_masks() -> impl Iterator<Item = u32> {
    // Fewest wildcards first; among equal counts, lower mask first, so the
    // operation family is the last field to be relaxed.
    let mut masks: Vec<u32> = (0..(1u32 << FIELDS)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    masks.into_iter()
}

impl CleaningTable {
    pub fn uniform(value: Time) -> Self {
        Self {
            global_default: value,
            ..Self::default()
        }
    }

    /// Cleaning time when a task with attributes `to` directly follows one
    /// with attributes `from` on a machine of `operation_family`.
    ///
    /// Resolution order: the most specific pair entry (entries whose fields
    /// read "default" match anything, fewer wildcards win), then the
    /// operation-family default, then the global default.
    pub fn lookup(&self, from: &TaskAttributes, to: &TaskAttributes, operation_family: &str) -> Time {
        if !self.entries.is_empty() {
            let actual = [
                from.product_family.as_str(),
                from.ingredient_strength.as_str(),
                to.product_family.as_str(),
                to.ingredient_strength.as_str(),
                operation_family,
            ];
            for mask in wildcard_masks() {
                let mut probe = actual;
                for (i, field) in probe.iter_mut().enumerate() {
                    if mask & (1 << i) != 0 {
                        *field = DEFAULT_LABEL;
                    }
                }
                // A wildcard over a field that already reads "default" repeats an earlier probe.
                if (0..FIELDS).any(|i| mask & (1 << i) != 0 && actual[i] == DEFAULT_LABEL) {
                    continue;
                }
                let key = CleaningKey::new((probe[0], probe[1]), (probe[2], probe[3]), probe[4]);
                if let Some(&v) = self.entries.get(&key) {
                    return v;
                }
            }
        }
        self.family_defaults
            .get(operation_family)
            .copied()
            .unwrap_or(self.global_default)
    }

    pub fn max_value(&self) -> Time {
        self.entries
            .values()
            .chain(self.family_defaults.values())
            .copied()
            .fold(self.global_default, Time::max)
    }
}
