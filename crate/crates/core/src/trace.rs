//! Execution traces: the enter/exit sequence of rule names along a derivation.
//!
//! A trace is a persistent snoc-list, so every prefix handed out during a run
//! shares structure with the final trace and cloning is O(1).

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::ast::RuleName;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Dir {
    Enter,
    Exit,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TraceAtom {
    pub name: RuleName,
    pub dir: Dir,
}

impl TraceAtom {
    pub fn enter(name: RuleName) -> Self {
        TraceAtom {
            name,
            dir: Dir::Enter,
        }
    }

    pub fn exit(name: RuleName) -> Self {
        TraceAtom {
            name,
            dir: Dir::Exit,
        }
    }

    /// Parses `i:Name` / `o:Name`.
    pub fn parse(s: &str) -> Option<Self> {
        let (d, n) = s.split_once(':')?;
        let name = RuleName::from_name(n)?;
        match d {
            "i" => Some(TraceAtom::enter(name)),
            "o" => Some(TraceAtom::exit(name)),
            _ => None,
        }
    }
}

impl fmt::Display for TraceAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.dir {
            Dir::Enter => "i",
            Dir::Exit => "o",
        };
        write!(f, "{d}:{}", self.name)
    }
}

struct Node {
    atom: TraceAtom,
    prev: Option<Arc<Node>>,
}

#[derive(Clone, Default)]
pub struct Trace {
    last: Option<Arc<Node>>,
    len: usize,
}

impl Trace {
    pub fn new() -> Self {
        Trace::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&self, atom: TraceAtom) -> Trace {
        Trace {
            last: Some(Arc::new(Node {
                atom,
                prev: self.last.clone(),
            })),
            len: self.len + 1,
        }
    }

    pub fn enter(&self, name: RuleName) -> Trace {
        self.push(TraceAtom::enter(name))
    }

    pub fn exit(&self, name: RuleName) -> Trace {
        self.push(TraceAtom::exit(name))
    }

    pub fn last(&self) -> Option<TraceAtom> {
        self.last.as_ref().map(|n| n.atom)
    }

    /// Atoms from the most recent backwards.
    pub fn iter_rev(&self) -> RevIter<'_> {
        RevIter {
            cur: self.last.as_deref(),
        }
    }

    pub fn to_vec(&self) -> Vec<TraceAtom> {
        let mut v: Vec<_> = self.iter_rev().collect();
        v.reverse();
        v
    }

    pub fn from_atoms(atoms: &[TraceAtom]) -> Trace {
        atoms.iter().fold(Trace::new(), |t, a| t.push(*a))
    }

    fn same_node(&self, other: &Trace) -> bool {
        match (&self.last, &other.last) {
            (Some(a), Some(b)) => Arc::ptr_eq(a, b),
            (None, None) => true,
            _ => false,
        }
    }

    /// True if `self` is a prefix of `other`.
    pub fn is_prefix_of(&self, other: &Trace) -> bool {
        if self.len > other.len {
            return false;
        }
        let mut cur = other.last.as_ref();
        for _ in 0..(other.len - self.len) {
            cur = cur.and_then(|n| n.prev.as_ref());
        }
        let cut = Trace {
            last: cur.cloned(),
            len: self.len,
        };
        cut == *self
    }

    /// Last `n` atoms, with a leading ellipsis when truncated.
    pub fn short(&self, n: usize) -> String {
        let mut atoms: Vec<String> = self.iter_rev().take(n).map(|a| a.to_string()).collect();
        atoms.reverse();
        let body = atoms.join(".");
        if self.len > n {
            format!("…{body}")
        } else if body.is_empty() {
            "[]".to_string()
        } else {
            body
        }
    }

    /// Enter/exit atoms match like brackets.
    pub fn is_balanced(&self) -> bool {
        let mut stack = Vec::new();
        for a in self.to_vec() {
            match a.dir {
                Dir::Enter => stack.push(a.name),
                Dir::Exit => {
                    if stack.pop() != Some(a.name) {
                        return false;
                    }
                }
            }
        }
        stack.is_empty()
    }
}

pub struct RevIter<'a> {
    cur: Option<&'a Node>,
}

impl Iterator for RevIter<'_> {
    type Item = TraceAtom;

    fn next(&mut self) -> Option<TraceAtom> {
        let n = self.cur?;
        self.cur = n.prev.as_deref();
        Some(n.atom)
    }
}

// Long traces would otherwise be freed recursively.
impl Drop for Trace {
    fn drop(&mut self) {
        let mut cur = self.last.take();
        while let Some(node) = cur {
            match Arc::try_unwrap(node) {
                Ok(mut n) => cur = n.prev.take(),
                Err(_) => break,
            }
        }
    }
}

impl PartialEq for Trace {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len && (self.same_node(other) || self.iter_rev().eq(other.iter_rev()))
    }
}

impl Eq for Trace {}

impl Ord for Trace {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then_with(|| {
            if self.same_node(other) {
                Ordering::Equal
            } else {
                self.iter_rev().cmp(other.iter_rev())
            }
        })
    }
}

impl PartialOrd for Trace {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for Trace {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.len.hash(state);
        self.last().hash(state);
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("[]");
        }
        for (i, a) in self.to_vec().iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "τ{}[{}]", self.len, self.short(4))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_equality_across_runs() {
        let a = Trace::new().enter(RuleName::Skip).exit(RuleName::Skip);
        let b = Trace::new().enter(RuleName::Skip).exit(RuleName::Skip);
        assert_eq!(a, b);
        assert_eq!(a.cmp(&b), Ordering::Equal);
        assert_ne!(a, Trace::new().enter(RuleName::Skip).exit(RuleName::Cst));
    }

    #[test]
    fn prefixes() {
        let a = Trace::new().enter(RuleName::Seq);
        let b = a.enter(RuleName::Skip).exit(RuleName::Skip);
        assert!(a.is_prefix_of(&b));
        assert!(!b.is_prefix_of(&a));
        assert!(Trace::new().is_prefix_of(&a));
    }

    #[test]
    fn balanced() {
        let t = Trace::new()
            .enter(RuleName::Seq)
            .enter(RuleName::Skip)
            .exit(RuleName::Skip);
        assert!(!t.is_balanced());
        assert!(t.exit(RuleName::Seq).is_balanced());
        assert!(!t.exit(RuleName::Skip).is_balanced());
    }

    #[test]
    fn long_trace_drops_without_overflow() {
        let mut t = Trace::new();
        for _ in 0..1_000_000 {
            t = t.enter(RuleName::Skip);
        }
        assert_eq!(t.len(), 1_000_000);
        drop(t);
    }

    #[test]
    fn atom_text() {
        let a = TraceAtom::enter(RuleName::WhileTrue1);
        assert_eq!(a.to_string(), "i:WhileTrue1");
        assert_eq!(TraceAtom::parse("i:WhileTrue1"), Some(a));
        assert_eq!(TraceAtom::parse("x:Skip"), None);
    }
}
