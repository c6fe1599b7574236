//! Interned program variable names.

use std::collections::HashMap;
use std::fmt;
use std::sync::{LazyLock, RwLock};

use crate::error::Error;

struct Interner {
    ids: HashMap<&'static str, u32>,
    names: Vec<&'static str>,
}

static INTERNER: LazyLock<RwLock<Interner>> = LazyLock::new(|| {
    RwLock::new(Interner {
        ids: HashMap::new(),
        names: Vec::new(),
    })
});

/// A program variable. Cheap to copy and compare; the textual name lives in
/// a process-wide interner.
///
/// The `Ord` instance follows interning order. It is only used to keep
/// internal maps deterministic; anything user-facing is ordered by a
/// program's declaration order instead.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(u32);

impl Var {
    /// Interns `name`, validating it against `[A-Za-z_][A-Za-z0-9_']*`.
    pub fn new(name: &str) -> Result<Var, Error> {
        if !is_identifier(name) {
            return Err(Error::InvalidName(name.to_string()));
        }
        Ok(Var::intern(name))
    }

    pub(crate) fn intern(name: &str) -> Var {
        if let Some(&id) = INTERNER.read().unwrap().ids.get(name) {
            return Var(id);
        }
        let mut table = INTERNER.write().unwrap();
        if let Some(&id) = table.ids.get(name) {
            return Var(id);
        }
        let leaked: &'static str = Box::leak(name.to_string().into_boxed_str());
        let id = table.names.len() as u32;
        table.names.push(leaked);
        table.ids.insert(leaked, id);
        Var(id)
    }

    pub fn name(self) -> &'static str {
        INTERNER.read().unwrap().names[self.0 as usize]
    }
}

pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Declaration order of a program's variables; drives every canonical
/// ordering (printing, template enumeration, parameter numbering).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarOrder {
    vars: Vec<Var>,
    rank: HashMap<Var, usize>,
}

impl VarOrder {
    pub fn new(vars: impl IntoIterator<Item = Var>) -> Self {
        let mut order = VarOrder::default();
        for v in vars {
            order.push(v);
        }
        order
    }

    /// Appends `v` unless already present.
    pub fn push(&mut self, v: Var) {
        if !self.rank.contains_key(&v) {
            self.rank.insert(v, self.vars.len());
            self.vars.push(v);
        }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn contains(&self, v: Var) -> bool {
        self.rank.contains_key(&v)
    }

    /// Position of `v`; unknown variables sort after every known one.
    pub fn rank(&self, v: Var) -> usize {
        self.rank.get(&v).copied().unwrap_or(usize::MAX)
    }
}
