//! Random small dispatch instances.

#![allow(dead_code)]

use rand::Rng;
use spectral_dispatch::{DispatchProblem, Interconnector, Plant, Storage, Zone};

pub struct Limits {
    pub max_zones: usize,
    pub max_plants: usize,
    pub max_storages: usize,
    pub max_hours: usize,
}

pub const TINY: Limits = Limits {
    max_zones: 3,
    max_plants: 5,
    max_storages: 1,
    max_hours: 6,
};

/// Costs are drawn on a 0.5 grid so ties occur now and then.
pub fn random_instance<R: Rng>(rng: &mut R, limits: &Limits) -> DispatchProblem {
    let nz = rng.random_range(1..=limits.max_zones);
    let hours = rng.random_range(1..=limits.max_hours);
    let zones: Vec<Zone> = (0..nz)
        .map(|m| Zone {
            id: format!("z{m}"),
            demand: (0..hours).map(|_| rng.random_range(0.0..150.0)).collect(),
            res_availability: (0..hours)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        rng.random_range(0.0..60.0)
                    } else {
                        0.0
                    }
                })
                .collect(),
        })
        .collect();
    let np = rng.random_range(1..=limits.max_plants);
    let plants = (0..np)
        .map(|k| Plant {
            id: format!("p{k}"),
            zone: format!("z{}", rng.random_range(0..nz)),
            fuel: ["gas", "coal", "oil"][k % 3].to_string(),
            capacity: rng.random_range(10.0..120.0),
            cost: (rng.random_range(0.0..200.0) * 2.0f64).round() / 2.0,
        })
        .collect();
    let ns = rng.random_range(0..=limits.max_storages);
    let storages = (0..ns)
        .map(|s| {
            let cap = rng.random_range(10.0..100.0);
            Storage {
                id: format!("s{s}"),
                zone: format!("z{}", rng.random_range(0..nz)),
                max_charge: rng.random_range(5.0..50.0),
                max_discharge: rng.random_range(5.0..50.0),
                energy_capacity: cap,
                efficiency: rng.random_range(0.6..=1.0),
                initial_energy: rng.random_range(0.0..=cap),
            }
        })
        .collect();
    let mut interconnectors = Vec::new();
    for a in 0..nz {
        for b in 0..nz {
            if a != b && rng.random_bool(0.6) {
                interconnectors.push(Interconnector {
                    from: format!("z{a}"),
                    to: format!("z{b}"),
                    ntc: rng.random_range(0.0..80.0),
                });
            }
        }
    }
    DispatchProblem {
        zones,
        plants,
        storages,
        interconnectors,
        voll: 3000.0,
        block_hours: 0,
    }
}

pub fn single_zone(demand: Vec<f64>, plants: &[(f64, f64)]) -> DispatchProblem {
    let hours = demand.len();
    DispatchProblem {
        zones: vec![Zone {
            id: "z".into(),
            demand,
            res_availability: vec![0.0; hours],
        }],
        plants: plants
            .iter()
            .enumerate()
            .map(|(k, &(capacity, cost))| Plant {
                id: format!("p{k}"),
                zone: "z".into(),
                fuel: "gas".into(),
                capacity,
                cost,
            })
            .collect(),
        storages: vec![],
        interconnectors: vec![],
        voll: 3000.0,
        block_hours: 168,
    }
}

/// Largest distance from the merit-order rule: a plant produces only if
/// every strictly cheaper plant runs at capacity. Single zone, no storage.
pub fn merit_order_violation(problem: &DispatchProblem, output: &[Vec<f64>], hours: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, pk) in problem.plants.iter().enumerate() {
        for t in (0..hours).filter(|&t| output[k][t] > 1e-7) {
            for (j, pj) in problem.plants.iter().enumerate() {
                if pj.cost < pk.cost {
                    worst = worst.max((pj.capacity - output[j][t]).min(output[k][t]));
                }
            }
        }
    }
    worst
}
