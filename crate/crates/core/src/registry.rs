//! Name-keyed registries of interchangeable strategies.
//!
//! Noise families, rate functions and mechanisms are all trait objects that
//! are looked up by name at runtime (from the CLI or a config file). Each kind
//! has a process-wide default registry holding the built-in variants; callers
//! can also assemble their own [`Registry`] and register extra constructors.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type Constructor<T, A> = fn(&A) -> Result<Arc<T>>;

struct Entry<T: ?Sized, A> {
    name: &'static str,
    summary: &'static str,
    build: Constructor<T, A>,
}

/// Constructors for one kind of strategy, keyed by name.
pub struct Registry<T: ?Sized, A> {
    kind: &'static str,
    entries: Vec<Entry<T, A>>,
}

impl<T: ?Sized, A> Registry<T, A> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    /// Registers `build` under `name`, replacing any previous entry with that name.
    pub fn register(&mut self, name: &'static str, summary: &'static str, build: Constructor<T, A>) {
        self.entries.retain(|e| e.name != name);
        self.entries.push(Entry {
            name,
            summary,
            build,
        });
    }

    pub fn build(&self, name: &str, args: &A) -> Result<Arc<T>> {
        let wanted = name.trim().to_ascii_lowercase();
        match self.entries.iter().find(|e| e.name == wanted) {
            Some(entry) => (entry.build)(args),
            None => Err(Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().join(", "),
            }),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        let wanted = name.trim().to_ascii_lowercase();
        self.entries.iter().any(|e| e.name == wanted)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name).collect()
    }

    /// `(name, summary)` pairs in registration order.
    pub fn describe(&self) -> Vec<(&'static str, &'static str)> {
        self.entries.iter().map(|e| (e.name, e.summary)).collect()
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }
}

impl<T: ?Sized, A> fmt::Debug for Registry<T, A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("entries", &self.names())
            .finish()
    }
}
