//! Finite state machines generated from the rule engine, their stationary
//! distributions and the long-run reward rates they imply.
//!
//! Two constructions are available:
//!
//! * [`ChainKind::Exact`] enumerates canonical block trees. Each transition
//!   carries the blocks it settles, so rewards are whole blocks. When both
//!   attackers can hold chains of five or more blocks they can leapfrog each
//!   other indefinitely without settling anything, and this chain is
//!   infinite; enumeration stops with [`Error::StateExplosion`].
//! * [`ChainKind::Lumped`] enumerates [`Skeleton`]s, which carry everything
//!   the dynamics depend on and nothing else, so it is finite for every cap.
//!   A transition's reward is the probability that the block it mines ends
//!   up on the main chain, found by following a marked block through the
//!   skeleton chain until it is settled either way.
//!
//! Both give the same long-run rates wherever the exact chain is finite.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::analytic::{relative_revenue, RelativeRevenue, RewardRates};
use crate::engine::{Choice, Move, Skeleton, Trace, WorldState};
use crate::error::{Error, Result};
use crate::model::Scenario;

/// Default bound on enumerated states.
pub const DEFAULT_STATE_LIMIT: usize = 50_000;

/// Largest linear system solved with a dense LU factorisation.
pub const DENSE_LIMIT: usize = 2_000;

/// Largest cap for which [`build_chain`] uses the exact construction.
pub const EXACT_CAP_LIMIT: u8 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainKind {
    Exact,
    Lumped,
}

impl ChainKind {
    pub fn for_cap(n_cap: u8) -> ChainKind {
        if n_cap <= EXACT_CAP_LIMIT {
            ChainKind::Exact
        } else {
            ChainKind::Lumped
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub to: usize,
    pub probability: f64,
    /// Blocks credited to (Alice, Bob, Henry) on this transition; expected
    /// eventual credit of the mined block for lumped chains.
    pub reward: [f64; 3],
    /// Blocks orphaned on this transition (expected, for lumped chains).
    pub orphaned: [f64; 3],
    pub mv: Move,
    pub choice: Choice,
}

/// States reachable from the root (index 0) and their outgoing
/// transitions. For lumped chains `states` holds one representative block
/// tree per skeleton.
#[derive(Clone, Debug)]
pub struct TransitionSystem {
    pub kind: ChainKind,
    pub states: Vec<WorldState>,
    pub transitions: Vec<Vec<Transition>>,
    pub n_cap: u8,
}

#[derive(Clone, Debug)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
    pub root_probability: f64,
}

/// Exact chain for caps up to [`EXACT_CAP_LIMIT`], lumped beyond.
pub fn build_chain(scenario: &Scenario) -> Result<TransitionSystem> {
    match ChainKind::for_cap(scenario.n_cap()) {
        ChainKind::Exact => build_exact(scenario, DEFAULT_STATE_LIMIT),
        ChainKind::Lumped => build_lumped(scenario, DEFAULT_STATE_LIMIT),
    }
}

/// Breadth-first enumeration of canonical block trees from the root.
pub fn build_exact(scenario: &Scenario, limit: usize) -> Result<TransitionSystem> {
    let n_cap = scenario.n_cap();
    let mut index: HashMap<WorldState, usize> = HashMap::new();
    let mut states = vec![WorldState::root()];
    index.insert(WorldState::root(), 0);
    let mut transitions: Vec<Vec<Transition>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);

    while let Some(s) = queue.pop_front() {
        let state = states[s].clone();
        let mut out = Vec::new();
        for outcome in state.moves(scenario) {
            let (next, tally) = state.apply(outcome.mv, n_cap)?;
            let to = match index.get(&next) {
                Some(&i) => i,
                None => {
                    if states.len() >= limit {
                        return Err(Error::StateExplosion { limit });
                    }
                    let i = states.len();
                    index.insert(next.clone(), i);
                    states.push(next);
                    queue.push_back(i);
                    i
                }
            };
            out.push(Transition {
                to,
                probability: outcome.probability,
                reward: tally.credited.map(f64::from),
                orphaned: tally.orphaned.map(f64::from),
                mv: outcome.mv,
                choice: outcome.choice,
            });
        }
        if transitions.len() <= s {
            transitions.resize_with(s + 1, Vec::new);
        }
        transitions[s] = out;
    }
    Ok(TransitionSystem {
        kind: ChainKind::Exact,
        states,
        transitions,
        n_cap,
    })
}

struct SkeletonEdge {
    to: usize,
    probability: f64,
    trace: Trace,
    mv: Move,
    choice: Choice,
}

/// Breadth-first enumeration of skeletons, with rewards from marked-block
/// absorption probabilities.
pub fn build_lumped(scenario: &Scenario, limit: usize) -> Result<TransitionSystem> {
    let (states, skeletons, edges) = enumerate_skeletons(scenario, limit)?;
    let credit = MarkerCredit::solve(&skeletons, &edges)?;
    let transitions = edges
        .iter()
        .map(|out| {
            out.iter()
                .map(|e| {
                    let p = credit.value(&skeletons, e.to, e.trace.fresh);
                    let mut reward = [0.0; 3];
                    let mut orphaned = [0.0; 3];
                    reward[e.mv.miner.index()] = p;
                    orphaned[e.mv.miner.index()] = 1.0 - p;
                    Transition {
                        to: e.to,
                        probability: e.probability,
                        reward,
                        orphaned,
                        mv: e.mv,
                        choice: e.choice,
                    }
                })
                .collect()
        })
        .collect();
    Ok(TransitionSystem {
        kind: ChainKind::Lumped,
        states,
        transitions,
        n_cap: scenario.n_cap(),
    })
}

type SkeletonChain = (Vec<WorldState>, Vec<Skeleton>, Vec<Vec<SkeletonEdge>>);

fn enumerate_skeletons(scenario: &Scenario, limit: usize) -> Result<SkeletonChain> {
    let n_cap = scenario.n_cap();
    let mut index: HashMap<Skeleton, usize> = HashMap::new();
    let root = WorldState::root();
    index.insert(root.skeleton(), 0);
    let mut skeletons = vec![root.skeleton()];
    let mut states = vec![root];
    let mut edges: Vec<Vec<SkeletonEdge>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);

    while let Some(s) = queue.pop_front() {
        let state = states[s].clone();
        let mut out = Vec::new();
        for outcome in state.moves(scenario) {
            let (next, _, trace) = state.apply_traced(outcome.mv, n_cap)?;
            let skeleton = next.skeleton();
            let to = match index.get(&skeleton) {
                Some(&i) => i,
                None => {
                    if states.len() >= limit {
                        return Err(Error::StateExplosion { limit });
                    }
                    let i = states.len();
                    index.insert(skeleton, i);
                    skeletons.push(skeleton);
                    states.push(next);
                    queue.push_back(i);
                    i
                }
            };
            out.push(SkeletonEdge {
                to,
                probability: outcome.probability,
                trace,
                mv: outcome.mv,
                choice: outcome.choice,
            });
        }
        if edges.len() <= s {
            edges.resize_with(s + 1, Vec::new);
        }
        edges[s] = out;
    }

    Ok((states, skeletons, edges))
}

/// Probability that a block supporting a given set of tip slots in a given
/// skeleton ends up on the main chain.
struct MarkerCredit {
    unknowns: HashMap<(usize, u8), usize>,
    values: Vec<f64>,
}

/// Linear system `x = Q x + b` over the unsettled (skeleton, support) pairs.
struct AbsorptionSystem {
    unknowns: HashMap<(usize, u8), usize>,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
}

impl AbsorptionSystem {
    fn assemble(skeletons: &[Skeleton], edges: &[Vec<SkeletonEdge>]) -> AbsorptionSystem {
        let settled =
            |state: usize, support: u8| support == 0 || support == skeletons[state].live_slots();
        // Only pairs reachable from freshly mined blocks are needed.
        let mut unknowns: HashMap<(usize, u8), usize> = HashMap::new();
        let mut order: Vec<(usize, u8)> = Vec::new();
        let mut work: Vec<(usize, u8)> = Vec::new();
        for out in edges {
            for e in out {
                work.push((e.to, e.trace.fresh));
            }
        }
        while let Some(pair) = work.pop() {
            if settled(pair.0, pair.1) || unknowns.contains_key(&pair) {
                continue;
            }
            unknowns.insert(pair, order.len());
            order.push(pair);
            for e in &edges[pair.0] {
                work.push((e.to, e.trace.carry(pair.1)));
            }
        }

        let n = order.len();
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        let mut rhs = vec![0.0; n];
        for (row, &(state, support)) in order.iter().enumerate() {
            let mut coeffs = Vec::new();
            for e in &edges[state] {
                let next = e.trace.carry(support);
                if next == 0 {
                    continue;
                }
                if next == skeletons[e.to].live_slots() {
                    rhs[row] += e.probability;
                } else {
                    coeffs.push((unknowns[&(e.to, next)], e.probability));
                }
            }
            rows.push(coeffs);
        }
        AbsorptionSystem {
            unknowns,
            rows,
            rhs,
        }
    }
}

impl MarkerCredit {
    fn solve(skeletons: &[Skeleton], edges: &[Vec<SkeletonEdge>]) -> Result<MarkerCredit> {
        let system = AbsorptionSystem::assemble(skeletons, edges);
        let values = solve_absorption(&system.rows, &system.rhs)?;
        Ok(MarkerCredit {
            unknowns: system.unknowns,
            values,
        })
    }

    fn value(&self, skeletons: &[Skeleton], state: usize, support: u8) -> f64 {
        if support == 0 {
            0.0
        } else if support == skeletons[state].live_slots() {
            1.0
        } else {
            self.values[self.unknowns[&(state, support)]]
        }
    }
}

/// Absorption systems are very sparse; beyond this size Gauss-Seidel beats LU.
const DENSE_ABSORPTION_LIMIT: usize = 256;

/// Solve `x = Q x + b` for a substochastic `Q` given as sparse rows.
fn solve_absorption(rows: &[Vec<(usize, f64)>], rhs: &[f64]) -> Result<Vec<f64>> {
    solve_absorption_with(rows, rhs, rows.len() <= DENSE_ABSORPTION_LIMIT)
}

fn solve_absorption_with(rows: &[Vec<(usize, f64)>], rhs: &[f64], dense: bool) -> Result<Vec<f64>> {
    let n = rows.len();
    if dense {
        let mut a = DMatrix::<f64>::identity(n, n);
        for (i, row) in rows.iter().enumerate() {
            for &(j, p) in row {
                a[(i, j)] -= p;
            }
        }
        return a
            .lu()
            .solve(&DVector::from_column_slice(rhs))
            .map(|x| x.iter().copied().collect())
            .ok_or_else(|| Error::SingularSystem("absorption system is singular".into()));
    }
    let mut x = vec![0.0; n];
    for _ in 0..100_000 {
        let mut change = 0.0f64;
        for i in 0..n {
            let mut diag = 1.0;
            let mut acc = rhs[i];
            for &(j, p) in &rows[i] {
                if j == i {
                    diag -= p;
                } else {
                    acc += p * x[j];
                }
            }
            let v = acc / diag;
            change = change.max((v - x[i]).abs());
            x[i] = v;
        }
        if change < 1e-15 {
            return Ok(x);
        }
    }
    Err(Error::SingularSystem(
        "absorption iteration did not converge".into(),
    ))
}

impl TransitionSystem {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Recompute transition probabilities of an exact chain for a scenario
    /// with the same support (same set of positive hashrates and tie
    /// choices). Lumped rewards depend on the probabilities and are not
    /// recomputed here; rebuild those instead.
    pub fn reweight(&mut self, scenario: &Scenario) {
        debug_assert_eq!(self.kind, ChainKind::Exact);
        for edges in &mut self.transitions {
            for t in edges.iter_mut() {
                t.probability = scenario.hashrate.of(t.mv.miner) * t.choice.probability(scenario);
            }
        }
    }

    /// Largest deviation of any state's outgoing probability mass from 1.
    pub fn max_row_defect(&self) -> f64 {
        self.transitions
            .iter()
            .map(|edges| (edges.iter().map(|t| t.probability).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Plain-text edge list: `from to probability r1 r2 rh`, preceded by a
    /// `#`-commented state legend.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# kind: {:?}  states: {}  cap: {}",
            self.kind,
            self.len(),
            self.n_cap
        )?;
        for (i, s) in self.states.iter().enumerate() {
            writeln!(w, "# {i}: {s}")?;
        }
        writeln!(w, "state successor probability r1 r2 rh")?;
        for (from, edges) in self.transitions.iter().enumerate() {
            for t in edges {
                writeln!(
                    w,
                    "{} {} {:.17e} {} {} {}",
                    from, t.to, t.probability, t.reward[0], t.reward[1], t.reward[2]
                )?;
            }
        }
        Ok(())
    }
}

pub fn solve_stationary(ts: &TransitionSystem) -> Result<StationaryDistribution> {
    let pi = if ts.len() <= DENSE_LIMIT {
        solve_dense(ts)?
    } else {
        solve_iterative(ts)?
    };
    let residual = stationary_residual(ts, &pi);
    if residual.is_nan() || residual > 1e-10 {
        return Err(Error::SingularSystem(format!(
            "residual {residual:e} exceeds 1e-10"
        )));
    }
    Ok(StationaryDistribution {
        root_probability: pi[0],
        pi,
    })
}

/// `max |pi P - pi|`.
pub fn stationary_residual(ts: &TransitionSystem, pi: &[f64]) -> f64 {
    let mut next = vec![0.0; pi.len()];
    for (from, edges) in ts.transitions.iter().enumerate() {
        for t in edges {
            next[t.to] += pi[from] * t.probability;
        }
    }
    next.iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn solve_dense(ts: &TransitionSystem) -> Result<Vec<f64>> {
    let n = ts.len();
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (from, edges) in ts.transitions.iter().enumerate() {
        for t in edges {
            a[(t.to, from)] += t.probability;
        }
        a[(from, from)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SingularSystem("LU factorisation is singular".into()))?;
    let pi: Vec<f64> = x
        .iter()
        .map(|&v| if v < 0.0 && v > -1e-14 { 0.0 } else { v })
        .collect();
    if pi.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::SingularSystem(
            "negative or non-finite probability".into(),
        ));
    }
    Ok(pi)
}

/// Gauss-Seidel sweeps on `pi = pi P` for chains beyond the dense limit.
fn solve_iterative(ts: &TransitionSystem) -> Result<Vec<f64>> {
    let n = ts.len();
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut self_loop = vec![0.0; n];
    for (from, edges) in ts.transitions.iter().enumerate() {
        for t in edges {
            if t.to == from {
                self_loop[from] += t.probability;
            } else {
                incoming[t.to].push((from, t.probability));
            }
        }
    }
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let mut change = 0.0f64;
        for s in 0..n {
            let inflow: f64 = incoming[s].iter().map(|&(f, p)| pi[f] * p).sum();
            let value = inflow / (1.0 - self_loop[s]);
            change = change.max((value - pi[s]).abs());
            pi[s] = value;
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|v| *v /= total);
        if change < 1e-15 {
            return Ok(pi);
        }
    }
    Err(Error::SingularSystem(
        "Gauss-Seidel did not converge".into(),
    ))
}

/// Long-run credited blocks per visit to the root state.
pub fn reward_rates_from_chain(
    ts: &TransitionSystem,
    stationary: &StationaryDistribution,
) -> RewardRates {
    let mut r = [0.0; 3];
    for (from, edges) in ts.transitions.iter().enumerate() {
        let weight = stationary.pi[from];
        for t in edges {
            for (k, rk) in r.iter_mut().enumerate() {
                *rk += weight * t.probability * t.reward[k];
            }
        }
    }
    let root = stationary.root_probability;
    RewardRates {
        r1: r[0] / root,
        r2: r[1] / root,
        rh: r[2] / root,
        p000: Some(root),
    }
}

/// Everything a caller usually wants from one chain solve.
#[derive(Clone, Debug)]
pub struct ChainAnalysis {
    pub states: usize,
    pub rates: RewardRates,
    pub relative: RelativeRevenue,
    /// Main-chain blocks per mined block.
    pub main_chain_yield: f64,
    /// Orphaned blocks per mined block.
    pub orphan_rate: f64,
    pub residual: f64,
}

pub fn analyze(scenario: &Scenario) -> Result<ChainAnalysis> {
    let ts = build_chain(scenario)?;
    analyze_system(&ts)
}

pub fn analyze_system(ts: &TransitionSystem) -> Result<ChainAnalysis> {
    let stationary = solve_stationary(ts)?;
    let rates = reward_rates_from_chain(ts, &stationary);
    let relative = relative_revenue(&rates)?;
    let mut orphans = 0.0;
    for (from, edges) in ts.transitions.iter().enumerate() {
        for t in edges {
            orphans += stationary.pi[from] * t.probability * t.orphaned.iter().sum::<f64>();
        }
    }
    Ok(ChainAnalysis {
        states: ts.len(),
        main_chain_yield: rates.total() * stationary.root_probability,
        orphan_rate: orphans,
        residual: stationary_residual(ts, &stationary.pi),
        rates,
        relative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{p000_n2, reward_rates_n2};
    use crate::model::{HashrateProfile, ProtocolParams, TieBreakParams};

    fn two_state(p: f64) -> TransitionSystem {
        let mk = |to, probability| Transition {
            to,
            probability,
            reward: [0.0; 3],
            orphaned: [0.0; 3],
            mv: Move {
                miner: crate::MinerId::Henry,
                placement: crate::engine::Placement::Public,
            },
            choice: Choice::Certain,
        };
        TransitionSystem {
            kind: ChainKind::Exact,
            states: vec![WorldState::root(), WorldState::root()],
            transitions: vec![
                vec![mk(0, 1.0 - p), mk(1, p)],
                vec![mk(0, p), mk(1, 1.0 - p)],
            ],
            n_cap: 2,
        }
    }

    #[test]
    fn honest_only_chain_is_a_self_loop() {
        let s = Scenario::new(
            HashrateProfile::new(0.0, 0.0, 1.0),
            TieBreakParams::default(),
            ProtocolParams::with_cap(4),
        );
        let ts = build_chain(&s).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts.transitions[0].len(), 1);
        assert_eq!(ts.transitions[0][0].reward, [0.0, 0.0, 1.0]);
        let st = solve_stationary(&ts).unwrap();
        assert_eq!(st.pi, vec![1.0]);
        let r = reward_rates_from_chain(&ts, &st);
        assert_eq!((r.r1, r.r2, r.rh), (0.0, 0.0, 1.0));
    }

    #[test]
    fn symmetric_two_state_chain() {
        let st = solve_stationary(&two_state(0.5)).unwrap();
        assert!((st.pi[0] - 0.5).abs() < 1e-15 && (st.pi[1] - 0.5).abs() < 1e-15);
        let it = solve_iterative(&two_state(0.3)).unwrap();
        assert!((it[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cap_two_chain_has_seven_states() {
        let ts = build_chain(&Scenario::attackers(0.25, 0.25, 2)).unwrap();
        let labels: Vec<String> = ts.states.iter().map(|s| s.to_string()).collect();
        assert_eq!(ts.len(), 7, "{labels:#?}");
        assert!(ts.max_row_defect() < 1e-12);
    }

    #[test]
    fn cap_two_matches_closed_form() {
        let s = Scenario::attackers(0.25, 0.25, 2);
        let ts = build_chain(&s).unwrap();
        let st = solve_stationary(&ts).unwrap();
        assert!((st.root_probability - p000_n2(&s.hashrate)).abs() < 1e-12);
        let r = reward_rates_from_chain(&ts, &st);
        let expect = reward_rates_n2(&s.hashrate, &s.tie);
        assert!((r.r1 - expect.r1).abs() < 1e-9);
        assert!((r.r2 - expect.r2).abs() < 1e-9);
        assert!((r.rh - expect.rh).abs() < 1e-9);
    }

    #[test]
    fn iterative_and_dense_agree() {
        let ts = build_chain(&Scenario::attackers(0.2, 0.15, 4)).unwrap();
        let dense = solve_dense(&ts).unwrap();
        let iter = solve_iterative(&ts).unwrap();
        let diff = dense
            .iter()
            .zip(&iter)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-11, "{diff}");
    }

    #[test]
    fn reweight_matches_rebuild() {
        let mut ts = build_chain(&Scenario::attackers(0.2, 0.15, 3)).unwrap();
        let other = Scenario::attackers(0.31, 0.05, 3);
        ts.reweight(&other);
        let a = analyze_system(&ts).unwrap();
        let b = analyze(&other).unwrap();
        assert!(a.relative.max_abs_diff(&b.relative) < 1e-12);
    }

    #[test]
    fn state_limit_is_enforced() {
        assert!(matches!(
            build_exact(&Scenario::attackers(0.2, 0.2, 4), 5),
            Err(Error::StateExplosion { limit: 5 })
        ));
    }

    #[test]
    fn edge_list_export() {
        let ts = build_chain(&Scenario::attackers(0.25, 0.25, 2)).unwrap();
        let mut buf = Vec::new();
        ts.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let edges = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
        assert_eq!(edges, ts.transitions.iter().map(Vec::len).sum::<usize>());
    }

    #[test]
    fn lumped_agrees_with_exact_where_both_exist() {
        for (a1, a2, cap) in [
            (0.25, 0.25, 2),
            (0.3, 0.1, 3),
            (0.22, 0.22, 4),
            (0.12, 0.27, 4),
        ] {
            let s = Scenario::attackers(a1, a2, cap);
            let exact = analyze_system(&build_exact(&s, DEFAULT_STATE_LIMIT).unwrap()).unwrap();
            let lumped = analyze_system(&build_lumped(&s, DEFAULT_STATE_LIMIT).unwrap()).unwrap();
            assert!(
                exact.relative.max_abs_diff(&lumped.relative) < 1e-12,
                "{a1} {a2} {cap}: {:?} vs {:?}",
                exact.relative,
                lumped.relative
            );
            assert!((exact.main_chain_yield - lumped.main_chain_yield).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_chain_is_infinite_beyond_cap_four() {
        assert!(matches!(
            build_exact(&Scenario::attackers(0.2, 0.2, 5), 20_000),
            Err(Error::StateExplosion { .. }) | Err(Error::InconsistentState(_))
        ));
        let ts = build_chain(&Scenario::attackers(0.2, 0.2, 8)).unwrap();
        assert_eq!(ts.kind, ChainKind::Lumped);
        assert!(ts.max_row_defect() < 1e-12);
    }

    #[test]
    fn absorption_solvers_agree() {
        let (_, skeletons, edges) =
            enumerate_skeletons(&Scenario::attackers(0.2, 0.2, 6), DEFAULT_STATE_LIMIT).unwrap();
        let system = AbsorptionSystem::assemble(&skeletons, &edges);
        assert!(system.rows.len() > DENSE_ABSORPTION_LIMIT);
        let dense = solve_absorption_with(&system.rows, &system.rhs, true).unwrap();
        let iterative = solve_absorption_with(&system.rows, &system.rhs, false).unwrap();
        let worst = dense
            .iter()
            .zip(&iterative)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
        assert!(dense.iter().all(|&q| (0.0..=1.0).contains(&q)));
    }
}
