use proptest::prelude::*;
use stoch_align::model::{init_world, step_with_drift, stretch, stretch_update, ModelConfig, MoveVector, WorldState};
use stoch_align::rng::ReplicationStreams;

fn positions() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3..1e3f64, 2..40)
}

proptest! {
    #[test]
    fn stretches_sum_to_zero(p in positions()) {
        let scale = p.iter().map(|x| x.abs()).fold(1.0, f64::max);
        let sum: f64 = stretch(&WorldState::new(p)).iter().sum();
        prop_assert!(sum.abs() <= 1e-12 * scale * 40.0);
    }

    #[test]
    fn shifting_everyone_keeps_stretches(p in positions(), c in -100.0..100.0f64) {
        let a = stretch(&WorldState::new(p.clone()));
        let b = stretch(&WorldState::new(p.iter().map(|x| x + c).collect()));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn position_step_matches_stretch_update(
        (p, m, d) in (2usize..20).prop_flat_map(|n| (
            prop::collection::vec(-10.0..10.0f64, n),
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec(-1.0..1.0f64, n),
        ))
    ) {
        let w = WorldState::new(p);
        let next = step_with_drift(&w, &MoveVector { values: m.clone() }, &d).unwrap();
        let direct = stretch_update(&stretch(&w), &m, &d).unwrap();
        for (x, y) in stretch(&next).iter().zip(&direct) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn init_replays_bit_for_bit(seed in any::<u64>(), rep in 0u64..1000, n in 2usize..12) {
        let cfg = ModelConfig::new(n, 1.0f64, 1.0, 1.0, 0, seed).unwrap();
        let a = init_world(&cfg, &mut ReplicationStreams::new(seed, rep, n));
        let b = init_world(&cfg, &mut ReplicationStreams::new(seed, rep, n));
        prop_assert_eq!(
            a.positions.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.positions.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }
}
