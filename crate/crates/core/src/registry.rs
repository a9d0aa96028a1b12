//! Name-keyed registries of interchangeable strategies.
//!
//! Charts, dynamical systems, density formulas and integral estimators
//! are all selected at runtime by name. Each family exposes a
//! `registry()` function returning a [`Registry`] of constructors.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

type Constructor<T> = Box<dyn Fn() -> Box<T> + Send + Sync>;

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<&'static str, (&'static str, Constructor<T>)>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers a constructor under `name`, replacing any previous entry.
    pub fn register<F>(&mut self, name: &'static str, summary: &'static str, make: F) -> &mut Self
    where
        F: Fn() -> Box<T> + Send + Sync + 'static,
    {
        self.entries.insert(name, (summary, Box::new(make)));
        self
    }

    pub fn create(&self, name: &str) -> Result<Box<T>> {
        match self.entries.get(name) {
            Some((_, make)) => Ok(make()),
            None => Err(Error::UnknownName {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            }),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    /// `(name, one-line summary)` pairs in name order.
    pub fn describe(&self) -> Vec<(&'static str, &'static str)> {
        self.entries.iter().map(|(k, (s, _))| (*k, *s)).collect()
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }
}
