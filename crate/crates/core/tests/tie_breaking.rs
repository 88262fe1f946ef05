use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use selfmine::engine::{Claimant, Move, Placement, TieKind, WorldState};
use selfmine::{HashrateProfile, MinerId, ProtocolParams, Scenario, TieBreakParams};

fn mine(w: &WorldState, miner: MinerId, placement: Placement) -> WorldState {
    w.apply(Move { miner, placement }, 4).unwrap().0
}

fn three_way() -> WorldState {
    let w = mine(&WorldState::root(), MinerId::Alice, Placement::Hidden);
    let w = mine(&w, MinerId::Bob, Placement::Hidden);
    let w = mine(&w, MinerId::Henry, Placement::Public);
    assert_eq!(w.tie_kind(), TieKind::ThreeWay);
    w
}

#[test]
fn henry_splits_three_way_tie_by_theta() {
    let s = Scenario::attackers(0.2, 0.2, 4);
    let w = three_way();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts = [0u32; 3];
    let trials = 100_000;
    let mut seen = 0;
    while seen < trials {
        let mv = w.sample_move(&s, rng.gen());
        if mv.miner != MinerId::Henry {
            continue;
        }
        let slot = match mv.placement {
            Placement::Branch(Claimant::Alice) => 0,
            Placement::Branch(Claimant::Bob) => 1,
            Placement::Branch(Claimant::Incumbent) => 2,
            other => panic!("unexpected placement {other:?}"),
        };
        counts[slot] += 1;
        seen += 1;
    }
    let p = 1.0 / 3.0;
    let sigma = (p * (1.0 - p) / f64::from(trials)).sqrt();
    for c in counts {
        let freq = f64::from(c) / f64::from(trials);
        assert!((freq - p).abs() < 3.0 * sigma, "{counts:?}");
    }
}

#[test]
fn attackers_stay_on_their_own_branch() {
    let s = Scenario::attackers(0.2, 0.2, 4);
    let w = three_way();
    for o in w.moves(&s) {
        match o.mv.miner {
            MinerId::Alice => assert_eq!(o.mv.placement, Placement::Branch(Claimant::Alice)),
            MinerId::Bob => assert_eq!(o.mv.placement, Placement::Branch(Claimant::Bob)),
            MinerId::Henry => {}
        }
    }
}

#[test]
fn henry_resolving_for_alice_credits_both_blocks() {
    let s = Scenario::attackers(0.25, 0.25, 4);
    let w = mine(&WorldState::root(), MinerId::Alice, Placement::Hidden);
    let w = mine(&w, MinerId::Henry, Placement::Public);
    assert_eq!(w.tie_kind(), TieKind::TwoWay(MinerId::Alice));
    let on_alice = w
        .moves(&s)
        .into_iter()
        .find(|o| {
            o.mv.miner == MinerId::Henry && o.mv.placement == Placement::Branch(Claimant::Alice)
        })
        .unwrap();
    assert!((on_alice.probability - 0.5 * 0.5).abs() < 1e-15);
    let (next, tally) = w.apply(on_alice.mv, 4).unwrap();
    assert!(next.is_root());
    assert_eq!(tally.credited, [1, 0, 1]);
    assert_eq!(tally.orphaned, [0, 0, 1]);
}

#[test]
fn certain_gamma_always_extends_attacker_branch() {
    let s = Scenario::new(
        HashrateProfile::from_attackers(0.25, 0.1),
        TieBreakParams::new(1.0, 0.5, 0.3, 0.3),
        ProtocolParams::with_cap(4),
    );
    let w = mine(&WorldState::root(), MinerId::Alice, Placement::Hidden);
    let w = mine(&w, MinerId::Henry, Placement::Public);
    for o in w.moves(&s) {
        assert_ne!(
            o.mv.placement,
            Placement::Branch(Claimant::Incumbent),
            "{o:?}"
        );
        let (_, tally) = w.apply(o.mv, 4).unwrap();
        assert_eq!(tally.orphaned[MinerId::Henry.index()], 1);
    }
}
