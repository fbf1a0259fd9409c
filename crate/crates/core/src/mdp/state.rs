use std::fmt;

use serde::{Deserialize, Serialize};

/// Index into the action set shared by every state of an MDP.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct ActionId(pub u32);

impl ActionId {
    pub const LEFT: ActionId = ActionId(0);
    pub const RIGHT: ActionId = ActionId(1);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// A root-anchored path through a binary tree.
///
/// Bits are stored most-significant-first: the action taken at level 0 is the
/// highest of the `len` low bits. With this layout `bits` is also the
/// left-to-right index of the node among all nodes on its level, and the
/// ancestor at level `l` is simply `bits >> (len - l)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct TreePath {
    bits: u64,
    len: u8,
}

impl TreePath {
    pub const MAX_LEN: u32 = 63;

    pub const fn root() -> Self {
        TreePath { bits: 0, len: 0 }
    }

    /// Node with left-to-right index `bits` on level `len`.
    pub fn from_bits(bits: u64, len: u32) -> Self {
        assert!(len <= Self::MAX_LEN, "tree path longer than {}", Self::MAX_LEN);
        TreePath {
            bits: bits & mask(len),
            len: len as u8,
        }
    }

    pub fn from_actions(actions: &[ActionId]) -> Self {
        actions
            .iter()
            .fold(TreePath::root(), |p, &a| p.child(a))
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> u32 {
        self.len as u32
    }

    pub fn is_root(&self) -> bool {
        self.len == 0
    }

    /// Binary child; only actions 0 and 1 are meaningful in a tree.
    pub fn child(&self, a: ActionId) -> Self {
        debug_assert!(a.0 < 2, "tree paths are binary");
        TreePath::from_bits((self.bits << 1) | (a.0 as u64 & 1), self.len() + 1)
    }

    /// Appends the `n` low bits of `suffix`, most significant first.
    pub fn extend(&self, suffix: u64, n: u32) -> Self {
        if n == 0 {
            return *self;
        }
        TreePath::from_bits((self.bits << n) | (suffix & mask(n)), self.len() + n)
    }

    /// Action taken at `level` along this path.
    pub fn action_at(&self, level: u32) -> ActionId {
        assert!(level < self.len(), "level {level} beyond path of length {}", self.len);
        ActionId(((self.bits >> (self.len() - 1 - level)) & 1) as u32)
    }

    pub fn actions(&self) -> Vec<ActionId> {
        (0..self.len()).map(|l| self.action_at(l)).collect()
    }

    pub fn prefix(&self, len: u32) -> Self {
        assert!(len <= self.len());
        TreePath::from_bits(self.bits >> (self.len() - len), len)
    }

    /// Bits of this path below `level`, i.e. the position of the node inside the
    /// subtree rooted at its level-`level` ancestor.
    pub fn suffix_bits(&self, level: u32) -> u64 {
        assert!(level <= self.len());
        self.bits & mask(self.len() - level)
    }

    pub fn is_prefix_of(&self, other: &TreePath) -> bool {
        self.len <= other.len && other.prefix(self.len()).bits == self.bits
    }
}

impl fmt::Debug for TreePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("p")?;
        for l in 0..self.len() {
            write!(f, "{}", self.action_at(l).0)?;
        }
        Ok(())
    }
}

fn mask(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Address of a state.
///
/// Tree and chain states are addressed structurally so that exponentially large
/// families never need a state table. The terminal markers carry the level at
/// which they were entered, which keeps the layering intact when a transition
/// skips ahead.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StateRef {
    Tree(TreePath),
    Chain { leaf: TreePath, depth: u32 },
    TerminalOne { level: u32 },
    TerminalZero { level: u32 },
    Tabular { index: u32, level: u32 },
}

impl StateRef {
    pub const fn root() -> Self {
        StateRef::Tree(TreePath::root())
    }

    pub fn level(&self) -> u32 {
        match *self {
            StateRef::Tree(p) => p.len(),
            StateRef::Chain { leaf, depth } => leaf.len() + depth,
            StateRef::TerminalOne { level }
            | StateRef::TerminalZero { level }
            | StateRef::Tabular { level, .. } => level,
        }
    }

    pub fn tree_path(&self) -> Option<TreePath> {
        match *self {
            StateRef::Tree(p) => Some(p),
            _ => None,
        }
    }

    /// Stable 3-word key used for keyed pseudo-randomness.
    pub fn key_words(&self) -> [u64; 3] {
        match *self {
            StateRef::Tree(p) => [1, p.bits(), p.len() as u64],
            StateRef::Chain { leaf, depth } => {
                [2, leaf.bits(), ((leaf.len() as u64) << 32) | depth as u64]
            }
            StateRef::TerminalOne { level } => [3, 0, level as u64],
            StateRef::TerminalZero { level } => [4, 0, level as u64],
            StateRef::Tabular { index, level } => [5, index as u64, level as u64],
        }
    }
}

impl fmt::Debug for StateRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateRef::Tree(p) => write!(f, "Tree({p:?})"),
            StateRef::Chain { leaf, depth } => write!(f, "Chain({leaf:?}+{depth})"),
            StateRef::TerminalOne { level } => write!(f, "One@{level}"),
            StateRef::TerminalZero { level } => write!(f, "Zero@{level}"),
            StateRef::Tabular { index, level } => write!(f, "S{index}@{level}"),
        }
    }
}
