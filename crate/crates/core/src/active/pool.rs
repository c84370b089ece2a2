use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Labeled / unlabeled partition of the question ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pool {
    pub cycle: usize,
    pub labeled: BTreeSet<String>,
    pub unlabeled: BTreeSet<String>,
}

impl Pool {
    /// Everything unlabeled at cycle 0.
    pub fn new<I, S>(ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut unlabeled = BTreeSet::new();
        for id in ids {
            let id = id.into();
            if unlabeled.contains(&id) {
                return Err(Error::Validation {
                    id,
                    message: "duplicate id in pool".into(),
                });
            }
            unlabeled.insert(id);
        }
        Ok(Pool {
            cycle: 0,
            labeled: BTreeSet::new(),
            unlabeled,
        })
    }

    pub fn len(&self) -> usize {
        self.labeled.len() + self.unlabeled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_exhausted(&self) -> bool {
        self.unlabeled.is_empty()
    }

    /// Percentage of ids labeled.
    pub fn labeled_percent(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            100.0 * self.labeled.len() as f64 / self.len() as f64
        }
    }

    /// Moves `ids` from unlabeled to labeled and advances the cycle counter.
    pub fn label(&mut self, ids: &[String]) -> Result<()> {
        let mut seen = BTreeSet::new();
        for id in ids {
            if !self.unlabeled.contains(id) || !seen.insert(id) {
                return Err(Error::Validation {
                    id: id.clone(),
                    message: "selected id is not an unlabeled pool member (or repeated)".into(),
                });
            }
        }
        for id in ids {
            self.unlabeled.remove(id);
            self.labeled.insert(id.clone());
        }
        self.cycle += 1;
        Ok(())
    }

    /// Disjointness check; used when loading snapshots from disk.
    pub fn validate(&self) -> Result<()> {
        if let Some(id) = self.labeled.intersection(&self.unlabeled).next() {
            return Err(Error::Validation {
                id: id.clone(),
                message: "id is both labeled and unlabeled".into(),
            });
        }
        Ok(())
    }
}
