//! Program points: syntactic paths locating a sub-term in a program.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::ast::RuleName;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum PathAtom {
    Seq1,
    Seq2,
    IfE,
    If1,
    If2,
    WhileE,
    WhileS,
    AsgE,
    FldAsg1,
    FldAsg2,
    DelE,
    Bin1,
    Bin2,
    FldE,
    // Terminal construct names.
    Skip,
    Seq,
    If,
    While,
    Asg,
    FldAsg,
    Del,
    Cst,
    Var,
    Bin,
    Obj,
    Fld,
}

impl PathAtom {
    pub fn is_terminal(self) -> bool {
        self >= PathAtom::Skip
    }

    /// Terminal atom for the construct evaluated by a normal rule.
    pub fn construct(rule: RuleName) -> Option<PathAtom> {
        Some(match rule {
            RuleName::Skip => PathAtom::Skip,
            RuleName::Seq => PathAtom::Seq,
            RuleName::If => PathAtom::If,
            RuleName::While => PathAtom::While,
            RuleName::Asg => PathAtom::Asg,
            RuleName::FldAsg => PathAtom::FldAsg,
            RuleName::Del => PathAtom::Del,
            RuleName::Cst => PathAtom::Cst,
            RuleName::Var => PathAtom::Var,
            RuleName::Bin => PathAtom::Bin,
            RuleName::Obj => PathAtom::Obj,
            RuleName::Fld => PathAtom::Fld,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            PathAtom::Seq1 => "Seq1",
            PathAtom::Seq2 => "Seq2",
            PathAtom::IfE => "IfE",
            PathAtom::If1 => "If1",
            PathAtom::If2 => "If2",
            PathAtom::WhileE => "WhileE",
            PathAtom::WhileS => "WhileS",
            PathAtom::AsgE => "AsgE",
            PathAtom::FldAsg1 => "FldAsg1",
            PathAtom::FldAsg2 => "FldAsg2",
            PathAtom::DelE => "DelE",
            PathAtom::Bin1 => "Bin1",
            PathAtom::Bin2 => "Bin2",
            PathAtom::FldE => "FldE",
            PathAtom::Skip => "Skip",
            PathAtom::Seq => "Seq",
            PathAtom::If => "If",
            PathAtom::While => "While",
            PathAtom::Asg => "Asg",
            PathAtom::FldAsg => "FldAsg",
            PathAtom::Del => "Del",
            PathAtom::Cst => "Cst",
            PathAtom::Var => "Var",
            PathAtom::Bin => "Bin",
            PathAtom::Obj => "Obj",
            PathAtom::Fld => "Fld",
        }
    }

    const ALL: [PathAtom; 26] = [
        PathAtom::Seq1,
        PathAtom::Seq2,
        PathAtom::IfE,
        PathAtom::If1,
        PathAtom::If2,
        PathAtom::WhileE,
        PathAtom::WhileS,
        PathAtom::AsgE,
        PathAtom::FldAsg1,
        PathAtom::FldAsg2,
        PathAtom::DelE,
        PathAtom::Bin1,
        PathAtom::Bin2,
        PathAtom::FldE,
        PathAtom::Skip,
        PathAtom::Seq,
        PathAtom::If,
        PathAtom::While,
        PathAtom::Asg,
        PathAtom::FldAsg,
        PathAtom::Del,
        PathAtom::Cst,
        PathAtom::Var,
        PathAtom::Bin,
        PathAtom::Obj,
        PathAtom::Fld,
    ];

    pub fn from_name(s: &str) -> Option<PathAtom> {
        PathAtom::ALL.into_iter().find(|a| a.name() == s)
    }
}

/// Outermost-first list of path atoms. The empty point is the root context.
#[derive(Clone)]
pub struct ProgramPoint(Arc<[PathAtom]>);

impl PartialEq for ProgramPoint {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for ProgramPoint {}

impl std::hash::Hash for ProgramPoint {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.hash(state);
    }
}

impl Ord for ProgramPoint {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return std::cmp::Ordering::Equal;
        }
        self.0.cmp(&other.0)
    }
}

impl PartialOrd for ProgramPoint {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Default for ProgramPoint {
    fn default() -> Self {
        ProgramPoint::root()
    }
}

impl ProgramPoint {
    pub fn root() -> Self {
        ProgramPoint(Arc::from([]))
    }

    pub fn from_atoms(atoms: Vec<PathAtom>) -> Self {
        ProgramPoint(atoms.into())
    }

    pub fn atoms(&self) -> &[PathAtom] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, atom: PathAtom) -> Self {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(atom);
        ProgramPoint(v.into())
    }

    pub fn last(&self) -> Option<PathAtom> {
        self.0.last().copied()
    }

    /// Terminal atoms only in last position.
    pub fn is_valid(&self) -> bool {
        match self.0.split_last() {
            None => true,
            Some((_, init)) => init.iter().all(|a| !a.is_terminal()),
        }
    }

    /// Parses the `/`-joined rendering; `·` (or the empty string) is the root.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if s.is_empty() || s == "·" {
            return Some(ProgramPoint::root());
        }
        s.split('/')
            .map(PathAtom::from_name)
            .collect::<Option<Vec<_>>>()
            .map(ProgramPoint::from_atoms)
    }
}

impl fmt::Display for ProgramPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("·");
        }
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            f.write_str(a.name())?;
        }
        Ok(())
    }
}

impl fmt::Debug for ProgramPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for ProgramPoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
