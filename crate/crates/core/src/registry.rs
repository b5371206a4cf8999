//! Name-keyed registries of interchangeable backends.
//!
//! Every pluggable piece of the pipeline (rankers, search providers, page
//! sources, language models, answer scorers, pairwise losses) is a trait
//! object constructed from a spec string of the form `name` or `name:arg`,
//! e.g. `bm25`, `dense:models/encoder.json`, `fixture:search.json`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::RegistryError;

type Constructor<T> = Box<dyn Fn(Option<&str>) -> Result<Arc<T>, RegistryError> + Send + Sync>;

struct Entry<T: ?Sized> {
    name: &'static str,
    help: &'static str,
    construct: Constructor<T>,
}

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<Entry<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    /// Later registrations under an existing name replace the earlier one.
    pub fn register<F>(&mut self, name: &'static str, help: &'static str, construct: F) -> &mut Self
    where
        F: Fn(Option<&str>) -> Result<Arc<T>, RegistryError> + Send + Sync + 'static,
    {
        self.entries.retain(|e| e.name != name);
        self.entries.push(Entry {
            name,
            help,
            construct: Box::new(construct),
        });
        self
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name).collect()
    }

    pub fn describe(&self) -> Vec<(&'static str, &'static str)> {
        self.entries.iter().map(|e| (e.name, e.help)).collect()
    }

    pub fn build(&self, spec: &str) -> Result<Arc<T>, RegistryError> {
        let (name, arg) = split_spec(spec);
        let entry = self
            .entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| RegistryError::Unknown {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().join(", "),
            })?;
        (entry.construct)(arg)
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }
}

/// Splits `name:arg` at the first colon. `http://..` style specs have no
/// registered name containing `/`, so the split is unambiguous for them as
/// long as callers register `http` rather than passing raw URLs.
pub fn split_spec(spec: &str) -> (&str, Option<&str>) {
    match spec.split_once(':') {
        Some((name, arg)) => (name.trim(), Some(arg.trim())),
        None => (spec.trim(), None),
    }
}

pub fn require_arg<'a>(
    kind: &'static str,
    name: &str,
    arg: Option<&'a str>,
) -> Result<&'a str, RegistryError> {
    arg.filter(|a| !a.is_empty())
        .ok_or_else(|| RegistryError::MissingArgument {
            kind,
            name: name.to_string(),
        })
}

/// Reachability of one backend as reported by the health endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendStatus {
    Ok,
    Unconfigured,
    Unreachable,
}

impl fmt::Display for BackendStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendStatus::Ok => "ok",
            BackendStatus::Unconfigured => "unconfigured",
            BackendStatus::Unreachable => "unreachable",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter: Send + Sync {
        fn greet(&self) -> String;
    }
    struct Hello(String);
    impl Greeter for Hello {
        fn greet(&self) -> String {
            format!("hello {}", self.0)
        }
    }

    #[test]
    fn build_by_name_and_arg() {
        let mut reg: Registry<dyn Greeter> = Registry::new("greeter");
        reg.register("hello", "says hello", |arg| {
            Ok(Arc::new(Hello(arg.unwrap_or("world").to_string())))
        });
        assert_eq!(reg.build("hello").unwrap().greet(), "hello world");
        assert_eq!(reg.build("hello:bob").unwrap().greet(), "hello bob");
        let err = match reg.build("bye") {
            Err(e) => e,
            Ok(_) => panic!("expected unknown"),
        };
        assert!(err.to_string().contains("known: hello"));
    }

    #[test]
    fn spec_splitting() {
        assert_eq!(split_spec("dense:a/b.json"), ("dense", Some("a/b.json")));
        assert_eq!(split_spec("bm25"), ("bm25", None));
        assert_eq!(split_spec("fixture:C:/x"), ("fixture", Some("C:/x")));
    }
}
