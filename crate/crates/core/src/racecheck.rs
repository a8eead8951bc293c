//! Shared-memory race detection. Every byte of shared memory carries the
//! accesses made to it since its block last synchronized.

use std::collections::{HashMap, HashSet};

use crate::diag::{Diagnostic, SourceLoc};
use crate::memory::{AccessKind, ThreadKey};
use crate::value::ObjectId;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Access {
    pub thread: ThreadKey,
    pub kind: AccessKind,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, Default)]
pub struct RaceState {
    pub enabled: bool,
    shadow: HashMap<ObjectId, HashMap<u64, Vec<Access>>>,
    reported: HashSet<(ObjectId, u64, u32)>,
}

impl RaceState {
    pub fn new(enabled: bool) -> Self {
        RaceState {
            enabled,
            ..RaceState::default()
        }
    }

    /// Records an access to `n` bytes of a shared object and returns the
    /// race diagnostics it triggers.
    pub fn record(
        &mut self,
        object: ObjectId,
        offset: u64,
        n: u64,
        thread: ThreadKey,
        kind: AccessKind,
        loc: &SourceLoc,
    ) -> Vec<Diagnostic> {
        let mut found = Vec::new();
        if !self.enabled {
            return found;
        }
        let bytes = self.shadow.entry(object).or_default();
        for byte in offset..offset + n {
            let record = bytes.entry(byte).or_default();
            let conflict = record.iter().any(|a| {
                a.thread != thread && (a.kind == AccessKind::Write || kind == AccessKind::Write)
            });
            if conflict && self.reported.insert((object, byte, loc.line)) && found.is_empty() {
                found.push(Diagnostic::race(loc));
            }
            let access = Access {
                thread,
                kind,
                loc: loc.clone(),
            };
            if !record.contains(&access) {
                record.push(access);
            }
        }
        found
    }

    /// Forgets every access to the given objects: a new epoch begins.
    pub fn clear_epoch(&mut self, objects: &[ObjectId]) {
        for o in objects {
            self.shadow.remove(o);
        }
    }

    pub fn accesses(&self, object: ObjectId, byte: u64) -> &[Access] {
        self.shadow
            .get(&object)
            .and_then(|m| m.get(&byte))
            .map_or(&[], Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.shadow.values().all(HashMap::is_empty)
    }
}
