//! Block-tree rule engine shared by the simulator and the Markov builder.
//!
//! A [`WorldState`] holds every block that is not yet settled, relative to
//! the deepest block all miners agree on (the settled root). It records the
//! public branch (or competing branches during a tie) and each attacker's
//! hidden chain. [`WorldState::moves`] lists the possible next blocks with
//! their probabilities and [`WorldState::apply`] adds one block, runs every
//! release it triggers and settles what became final.
//!
//! Release rules, evaluated whenever the public view changes:
//!
//! * an attacker whose hidden tip is below the public height abandons it;
//! * an attacker whose hidden tip is level with the public height, or one
//!   block ahead, publishes the whole hidden chain (level creates a tie);
//! * an attacker whose hidden chain reaches the cap publishes it at once.
//!
//! Alice is evaluated before Bob and the pass repeats until nothing fires.
//! Any block mined on top of a tied branch is broadcast immediately and
//! ends the tie.
//!
//! After each step the tree is pruned: blocks no tip descends from are
//! orphaned, blocks every tip descends from are credited, and the remainder
//! is relabelled in a canonical order so that equal situations compare equal.

use std::fmt;

use arrayvec::ArrayVec;

use crate::error::{Error, Result};
use crate::model::{MinerId, Scenario};

/// Capacity for unsettled blocks. Far above what caps up to 8 produce.
pub const MAX_PENDING: usize = 64;

type Node = u8;
const ROOT: Node = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Block {
    parent: Node,
    owner: MinerId,
    height: u8,
}

/// Who put a public branch forward. `Incumbent` is the chain everyone
/// followed before the tie.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Claimant {
    Incumbent,
    Alice,
    Bob,
}

impl Claimant {
    fn of(miner: MinerId) -> Claimant {
        match miner {
            MinerId::Alice => Claimant::Alice,
            MinerId::Bob => Claimant::Bob,
            MinerId::Henry => Claimant::Incumbent,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Branch {
    claimant: Claimant,
    tip: Node,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Hidden {
    tip: Node,
    len: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieKind {
    None,
    /// One attacker's branch against the incumbent chain.
    TwoWay(MinerId),
    /// Alice's branch against Bob's.
    Attackers,
    /// Alice, Bob and the incumbent chain.
    ThreeWay,
}

/// Where the next block goes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Placement {
    /// On the miner's hidden chain (starting one on the public tip if needed).
    Hidden,
    /// On the unique public tip.
    Public,
    /// On the named branch of a tie.
    Branch(Claimant),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Move {
    pub miner: MinerId,
    pub placement: Placement,
}

/// Which tie-breaking parameter a move's probability depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Choice {
    Certain,
    Gamma(MinerId),
    NotGamma(MinerId),
    Beta(MinerId),
    Theta(MinerId),
    ThetaRest,
}

impl Choice {
    pub fn probability(self, scenario: &Scenario) -> f64 {
        let t = &scenario.tie;
        match self {
            Choice::Certain => 1.0,
            Choice::Gamma(m) => t.gamma(m),
            Choice::NotGamma(m) => 1.0 - t.gamma(m),
            Choice::Beta(m) => {
                // Without any gamma preference Henry splits evenly.
                let (b1, b2) = t.betas().unwrap_or((0.5, 0.5));
                if m == MinerId::Alice {
                    b1
                } else {
                    b2
                }
            }
            Choice::Theta(MinerId::Alice) => t.theta1,
            Choice::Theta(_) => t.theta2,
            Choice::ThetaRest => 1.0 - t.theta1 - t.theta2,
        }
    }
}

/// A possible next block: who mines it, where, and the probability factors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    pub mv: Move,
    pub choice: Choice,
    pub probability: f64,
}

/// Blocks credited to or orphaned from each miner, indexed by [`MinerId::index`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub credited: [u32; 3],
    pub orphaned: [u32; 3],
}

impl Tally {
    pub fn credited_total(&self) -> u32 {
        self.credited.iter().sum()
    }
}

/// Number of tip slots tracked by [`Trace`] and [`Skeleton::live_slots`].
pub const SLOTS: usize = 5;

/// How tips moved during one step. For every occupied slot after the step,
/// `from` names the slot whose earlier tip it equals or directly extends;
/// `fresh` has a bit for each slot whose tip is the newly mined block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trace {
    pub from: [Option<u8>; SLOTS],
    pub fresh: u8,
}

impl Trace {
    /// Slots after the step that descend from a block supporting `support`
    /// (a bitmask of slots before the step).
    pub fn carry(&self, support: u8) -> u8 {
        let mut out = 0;
        for (slot, from) in self.from.iter().enumerate() {
            if let Some(f) = from {
                if support & (1 << f) != 0 {
                    out |= 1 << slot;
                }
            }
        }
        out
    }
}

/// Dynamics-relevant summary of a [`WorldState`]: which branches are public,
/// the owner of a lone public tip, and each hidden chain's lead over the
/// public height and its length. Block ownership below the tips is dropped,
/// so the set of skeletons is finite for every cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Skeleton {
    claimants: u8,
    tip_owner: Option<MinerId>,
    hidden: [Option<(i8, u8)>; 2],
}

impl Skeleton {
    /// Bitmask of occupied tip slots.
    pub fn live_slots(&self) -> u8 {
        let mut mask = self.claimants;
        for (i, h) in self.hidden.iter().enumerate() {
            if h.is_some() {
                mask |= 1 << (3 + i);
            }
        }
        mask
    }

    pub fn is_root(&self) -> bool {
        self.claimants == 1 && self.hidden == [None, None]
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct WorldState {
    blocks: ArrayVec<Block, MAX_PENDING>,
    public: ArrayVec<Branch, 3>,
    hidden: [Option<Hidden>; 2],
}

impl Default for WorldState {
    fn default() -> Self {
        WorldState::root()
    }
}

impl WorldState {
    /// Everyone mines on one settled tip; no hidden blocks.
    pub fn root() -> Self {
        let mut public = ArrayVec::new();
        public.push(Branch {
            claimant: Claimant::Incumbent,
            tip: ROOT,
        });
        WorldState {
            blocks: ArrayVec::new(),
            public,
            hidden: [None, None],
        }
    }

    pub fn is_root(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn pending_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Length of an attacker's hidden chain (0 for Henry or no chain).
    pub fn hidden_len(&self, miner: MinerId) -> u8 {
        attacker_slot(miner)
            .and_then(|i| self.hidden[i])
            .map_or(0, |h| h.len)
    }

    /// Height of an attacker's hidden tip above the settled root.
    pub fn hidden_height(&self, miner: MinerId) -> Option<u8> {
        attacker_slot(miner)
            .and_then(|i| self.hidden[i])
            .map(|h| self.height(h.tip))
    }

    /// Height of the public chain (all tied branches share it).
    pub fn public_height(&self) -> u8 {
        self.height(self.public[0].tip)
    }

    /// Owners along the public branch of `claimant`, root first.
    pub fn branch_owners(&self, claimant: Claimant) -> Option<Vec<MinerId>> {
        let branch = self.public.iter().find(|b| b.claimant == claimant)?;
        let mut owners = Vec::new();
        let mut node = branch.tip;
        while node != ROOT {
            let b = self.block(node);
            owners.push(b.owner);
            node = b.parent;
        }
        owners.reverse();
        Some(owners)
    }

    pub fn tie_kind(&self) -> TieKind {
        match self.public.len() {
            1 => TieKind::None,
            2 => {
                let claimants = [self.public[0].claimant, self.public[1].claimant];
                match claimants {
                    [Claimant::Incumbent, Claimant::Alice] => TieKind::TwoWay(MinerId::Alice),
                    [Claimant::Incumbent, Claimant::Bob] => TieKind::TwoWay(MinerId::Bob),
                    _ => TieKind::Attackers,
                }
            }
            _ => TieKind::ThreeWay,
        }
    }

    /// Every possible next block with positive probability. Probabilities
    /// sum to one.
    pub fn moves(&self, scenario: &Scenario) -> ArrayVec<Outcome, 12> {
        let mut out = ArrayVec::new();
        let tie = self.tie_kind();
        for miner in MinerId::ALL {
            let alpha = scenario.hashrate.of(miner);
            if alpha <= 0.0 {
                continue;
            }
            let mut push = |placement, choice: Choice| {
                let probability = alpha * choice.probability(scenario);
                if probability > 0.0 {
                    out.push(Outcome {
                        mv: Move { miner, placement },
                        choice,
                        probability,
                    });
                }
            };
            if self.hidden_len(miner) > 0 {
                push(Placement::Hidden, Choice::Certain);
                continue;
            }
            let own = Claimant::of(miner);
            match tie {
                TieKind::None => {
                    if miner.is_selfish() {
                        push(Placement::Hidden, Choice::Certain);
                    } else {
                        push(Placement::Public, Choice::Certain);
                    }
                }
                _ if miner.is_selfish() && self.public.iter().any(|b| b.claimant == own) => {
                    push(Placement::Branch(own), Choice::Certain);
                }
                TieKind::TwoWay(owner) => {
                    push(Placement::Branch(Claimant::of(owner)), Choice::Gamma(owner));
                    push(
                        Placement::Branch(Claimant::Incumbent),
                        Choice::NotGamma(owner),
                    );
                }
                TieKind::Attackers => {
                    push(
                        Placement::Branch(Claimant::Alice),
                        Choice::Beta(MinerId::Alice),
                    );
                    push(Placement::Branch(Claimant::Bob), Choice::Beta(MinerId::Bob));
                }
                TieKind::ThreeWay => {
                    push(
                        Placement::Branch(Claimant::Alice),
                        Choice::Theta(MinerId::Alice),
                    );
                    push(
                        Placement::Branch(Claimant::Bob),
                        Choice::Theta(MinerId::Bob),
                    );
                    push(Placement::Branch(Claimant::Incumbent), Choice::ThetaRest);
                }
            }
        }
        out
    }

    /// Pick the outcome whose cumulative probability interval contains `u`
    /// (a uniform draw in `[0, 1)`).
    pub fn sample_move(&self, scenario: &Scenario, u: f64) -> Move {
        let outcomes = self.moves(scenario);
        let mut acc = 0.0;
        for o in &outcomes {
            acc += o.probability;
            if u < acc {
                return o.mv;
            }
        }
        outcomes.last().expect("at least one miner has hashrate").mv
    }

    /// Mine one block according to `mv`, run the releases it triggers and
    /// settle. Returns the quiesced successor and what became final.
    pub fn apply(&self, mv: Move, n_cap: u8) -> Result<(WorldState, Tally)> {
        let (next, tally, _) = self.apply_traced(mv, n_cap)?;
        Ok((next, tally))
    }

    /// [`apply`](Self::apply), also reporting how the tip slots moved.
    pub fn apply_traced(&self, mv: Move, n_cap: u8) -> Result<(WorldState, Tally, Trace)> {
        let before = self.slot_tips();
        let mut next = self.clone();
        let mut tally = Tally::default();
        next.mine(mv, n_cap)?;
        let fresh_node = next.blocks.len() as Node;
        let mut trace = Trace {
            from: [None; SLOTS],
            fresh: 0,
        };
        for (slot, tip) in next.slot_tips().into_iter().enumerate() {
            let Some(tip) = tip else { continue };
            let origin = if tip == fresh_node {
                trace.fresh |= 1 << slot;
                next.block(tip).parent
            } else {
                tip
            };
            trace.from[slot] = before
                .iter()
                .position(|&t| t == Some(origin))
                .map(|i| i as u8);
            if trace.from[slot].is_none() {
                return Err(Error::InconsistentState(format!(
                    "tip of slot {slot} descends from no earlier tip"
                )));
            }
        }
        next.settle(&mut tally);
        Ok((next, tally, trace))
    }

    /// Tip node of each slot: public branches by claimant (incumbent, Alice,
    /// Bob), then Alice's and Bob's hidden chains.
    fn slot_tips(&self) -> [Option<Node>; SLOTS] {
        let mut tips = [None; SLOTS];
        for b in &self.public {
            tips[b.claimant as usize] = Some(b.tip);
        }
        for (i, h) in self.hidden.iter().enumerate() {
            tips[3 + i] = h.map(|h| h.tip);
        }
        tips
    }

    /// The part of the state that future dynamics depend on.
    pub fn skeleton(&self) -> Skeleton {
        let public_height = self.public_height() as i8;
        let mut claimants = 0u8;
        for b in &self.public {
            claimants |= 1 << b.claimant as u8;
        }
        let tip_owner = match self.public.as_slice() {
            [only] if only.tip != ROOT => Some(self.block(only.tip).owner),
            _ => None,
        };
        let hidden = self
            .hidden
            .map(|h| h.map(|h| (self.height(h.tip) as i8 - public_height, h.len)));
        Skeleton {
            claimants,
            tip_owner,
            hidden,
        }
    }

    /// Decide every outstanding block: the longest tip wins (public branches
    /// before hidden chains on equal height) and everything else is orphaned.
    pub fn finalize(&self) -> Tally {
        let mut tally = Tally::default();
        let tips = self.tips();
        let mut best = tips[0];
        for &tip in &tips[1..] {
            if self.height(tip) > self.height(best) {
                best = tip;
            }
        }
        let mut on_chain = [false; MAX_PENDING + 1];
        let mut node = best;
        while node != ROOT {
            on_chain[node as usize] = true;
            node = self.block(node).parent;
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if on_chain[i + 1] {
                tally.credited[b.owner.index()] += 1;
            } else {
                tally.orphaned[b.owner.index()] += 1;
            }
        }
        tally
    }

    fn block(&self, node: Node) -> &Block {
        &self.blocks[node as usize - 1]
    }

    fn height(&self, node: Node) -> u8 {
        if node == ROOT {
            0
        } else {
            self.block(node).height
        }
    }

    fn push_block(&mut self, parent: Node, owner: MinerId) -> Result<Node> {
        let height = self.height(parent) + 1;
        self.blocks
            .try_push(Block {
                parent,
                owner,
                height,
            })
            .map_err(|_| {
                Error::InconsistentState(format!("more than {MAX_PENDING} pending blocks"))
            })?;
        Ok(self.blocks.len() as Node)
    }

    fn single_public_tip(&self) -> Result<Node> {
        match self.public.as_slice() {
            [only] => Ok(only.tip),
            _ => Err(Error::InconsistentState(
                "expected a single public branch".into(),
            )),
        }
    }

    fn mine(&mut self, mv: Move, n_cap: u8) -> Result<()> {
        let miner = mv.miner;
        match mv.placement {
            Placement::Hidden => {
                let slot = attacker_slot(miner).ok_or_else(|| {
                    Error::InconsistentState("honest miner cannot hide blocks".into())
                })?;
                let (parent, len) = match self.hidden[slot] {
                    Some(h) => (h.tip, h.len),
                    None => (self.single_public_tip()?, 0),
                };
                let tip = self.push_block(parent, miner)?;
                self.hidden[slot] = Some(Hidden { tip, len: len + 1 });
                if len + 1 >= n_cap {
                    self.publish(slot)?;
                    self.release_cascade()?;
                }
            }
            Placement::Public => {
                let parent = self.single_public_tip()?;
                let tip = self.push_block(parent, miner)?;
                self.set_single_public(tip);
                self.release_cascade()?;
            }
            Placement::Branch(claimant) => {
                let parent = self
                    .public
                    .iter()
                    .find(|b| b.claimant == claimant)
                    .map(|b| b.tip)
                    .ok_or_else(|| {
                        Error::InconsistentState(format!("no public branch for {claimant:?}"))
                    })?;
                let tip = self.push_block(parent, miner)?;
                self.set_single_public(tip);
                self.release_cascade()?;
            }
        }
        Ok(())
    }

    fn set_single_public(&mut self, tip: Node) {
        self.public.clear();
        self.public.push(Branch {
            claimant: Claimant::Incumbent,
            tip,
        });
    }

    /// Reveal an attacker's whole hidden chain.
    fn publish(&mut self, slot: usize) -> Result<()> {
        let Some(hidden) = self.hidden[slot].take() else {
            return Ok(());
        };
        let attacker = MinerId::ATTACKERS[slot];
        let height = self.height(hidden.tip);
        let public_height = self.public_height();
        if height > public_height {
            self.set_single_public(hidden.tip);
        } else if height == public_height {
            if self.public.len() == 1 {
                // The chain being challenged belongs to whoever put its tip up.
                let tip = self.public[0].tip;
                let owner = if tip == ROOT {
                    MinerId::Henry
                } else {
                    self.block(tip).owner
                };
                self.public[0].claimant = if owner == attacker {
                    Claimant::Incumbent
                } else {
                    Claimant::of(owner)
                };
            }
            let claimant = Claimant::of(attacker);
            if self.public.iter().any(|b| b.claimant == claimant) {
                return Err(Error::InconsistentState(format!(
                    "{attacker} already holds a public branch"
                )));
            }
            self.public
                .try_push(Branch {
                    claimant,
                    tip: hidden.tip,
                })
                .map_err(|_| Error::InconsistentState("more than three tied branches".into()))?;
            self.public.sort_by_key(|b| b.claimant);
        }
        // A shorter chain is simply dropped; settle() orphans it.
        Ok(())
    }

    fn release_cascade(&mut self) -> Result<()> {
        loop {
            let mut fired = false;
            for slot in 0..2 {
                let Some(hidden) = self.hidden[slot] else {
                    continue;
                };
                let lead = self.height(hidden.tip) as i32 - self.public_height() as i32;
                if lead < 0 {
                    self.hidden[slot] = None;
                    fired = true;
                } else if lead <= 1 {
                    self.publish(slot)?;
                    fired = true;
                }
            }
            if !fired {
                return Ok(());
            }
        }
    }

    fn tips(&self) -> ArrayVec<Node, 5> {
        let mut tips: ArrayVec<Node, 5> = self.public.iter().map(|b| b.tip).collect();
        tips.extend(self.hidden.iter().flatten().map(|h| h.tip));
        tips
    }

    /// Orphan unreachable blocks, credit blocks common to every tip and
    /// relabel the rest canonically.
    fn settle(&mut self, tally: &mut Tally) {
        let tips = self.tips();
        let n = self.blocks.len();
        // Number of tips each block supports.
        let mut support = [0u8; MAX_PENDING + 1];
        for &tip in &tips {
            let mut node = tip;
            while node != ROOT {
                support[node as usize] += 1;
                node = self.block(node).parent;
            }
        }
        // Tips are pairwise distinct: hidden blocks are never public tips.
        let all = tips.len() as u8;

        let mut new_root_height = 0u8;
        for (b, &count) in self.blocks[..n].iter().zip(&support[1..]) {
            if count == 0 {
                tally.orphaned[b.owner.index()] += 1;
            } else if count >= all {
                tally.credited[b.owner.index()] += 1;
                new_root_height = new_root_height.max(b.height);
            }
        }

        // Relabel surviving blocks in path order over the tips.
        let mut relabel = [ROOT; MAX_PENDING + 1];
        let mut kept: ArrayVec<Block, MAX_PENDING> = ArrayVec::new();
        let mut path: ArrayVec<Node, MAX_PENDING> = ArrayVec::new();
        for &tip in &tips {
            path.clear();
            let mut node = tip;
            while node != ROOT && support[node as usize] < all && relabel[node as usize] == ROOT {
                path.push(node);
                node = self.block(node).parent;
            }
            for &old in path.iter().rev() {
                let b = *self.block(old);
                let parent = if support[b.parent as usize] >= all || b.parent == ROOT {
                    ROOT
                } else {
                    relabel[b.parent as usize]
                };
                kept.push(Block {
                    parent,
                    owner: b.owner,
                    height: b.height - new_root_height,
                });
                relabel[old as usize] = kept.len() as Node;
            }
        }
        let map = |node: Node| -> Node {
            if node == ROOT || support[node as usize] >= all {
                ROOT
            } else {
                relabel[node as usize]
            }
        };
        for b in self.public.iter_mut() {
            b.tip = map(b.tip);
        }
        for h in self.hidden.iter_mut().flatten() {
            h.tip = map(h.tip);
        }
        self.blocks = kept;
    }
}

fn attacker_slot(miner: MinerId) -> Option<usize> {
    match miner {
        MinerId::Alice => Some(0),
        MinerId::Bob => Some(1),
        MinerId::Henry => None,
    }
}

impl fmt::Debug for WorldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Compact label, e.g. `A2 B0 P1[H] tie:none`: hidden lengths, public height
/// and the owners along each public branch.
impl fmt::Display for WorldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = |m: MinerId| match m {
            MinerId::Alice => 'A',
            MinerId::Bob => 'B',
            MinerId::Henry => 'H',
        };
        write!(f, "A{}", self.hidden_len(MinerId::Alice))?;
        if let Some(h) = self.hidden_height(MinerId::Alice) {
            write!(f, "@{h}")?;
        }
        write!(f, " B{}", self.hidden_len(MinerId::Bob))?;
        if let Some(h) = self.hidden_height(MinerId::Bob) {
            write!(f, "@{h}")?;
        }
        write!(f, " P{}", self.public_height())?;
        for branch in &self.public {
            let owners: String = self
                .branch_owners(branch.claimant)
                .unwrap_or_default()
                .into_iter()
                .map(letter)
                .collect();
            let tag = match branch.claimant {
                Claimant::Incumbent => "",
                Claimant::Alice => "a:",
                Claimant::Bob => "b:",
            };
            write!(f, "[{tag}{owners}]")?;
        }
        Ok(())
    }
}
