#[path = "support/instances.rs"]
mod instances;

use proptest::prelude::*;
use rand::SeedableRng;
use spectral_dispatch::solve_dispatch;

use instances::{merit_order_violation, random_instance, single_zone, Limits};

const FUZZ: Limits = Limits {
    max_zones: 3,
    max_plants: 6,
    max_storages: 2,
    max_hours: 12,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solutions_are_feasible(seed in any::<u64>()) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = random_instance(&mut rng, &FUZZ);
        let r = solve_dispatch(&p, p.hours()).unwrap();
        prop_assert!(r.balance_residual(&p) <= 1e-6);
        prop_assert!(r.storage_replay_error(&p) <= 1e-6);
        prop_assert!(r.bound_violation(&p) <= 1e-6);
        prop_assert!((r.objective - r.cost(&p)).abs() <= 1e-9 * r.objective.abs().max(1.0));
    }

    #[test]
    fn single_zone_follows_merit_order(
        demand in prop::collection::vec(0.0f64..400.0, 1..8),
        plants in prop::collection::vec((1.0f64..100.0, 0.0f64..100.0), 1..6),
    ) {
        let p = single_zone(demand, &plants);
        let r = solve_dispatch(&p, p.hours()).unwrap();
        prop_assert!(merit_order_violation(&p, &r.plant_output, r.hours) <= 1e-6);
    }

    #[test]
    fn more_transfer_capacity_never_costs_more(seed in any::<u64>(), extra in 0.0f64..100.0) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = random_instance(&mut rng, &FUZZ);
        let mut q = p.clone();
        for l in &mut q.interconnectors {
            l.ntc += extra;
        }
        let a = solve_dispatch(&p, p.hours()).unwrap().objective;
        let b = solve_dispatch(&q, q.hours()).unwrap().objective;
        prop_assert!(b <= a + 1e-6 * a.abs().max(1.0), "{b} > {a}");
    }
}
