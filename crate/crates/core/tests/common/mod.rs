#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rjsp::instance::Instance;
use rjsp::io::{generate_spec, GeneratorParams};
use rjsp::oracle::check_budget;
use rjsp::preprocess::{assign_machines, build_setup_matrices, AssignmentResult, SetupMatrix};

pub struct Case {
    pub seed: u64,
    pub instance: Instance,
    pub assignment: AssignmentResult,
    pub setups: Vec<SetupMatrix>,
}

pub fn prepare(instance: Instance) -> (Instance, AssignmentResult, Vec<SetupMatrix>) {
    let assignment = assign_machines(&instance);
    let setups = build_setup_matrices(&instance, &assignment);
    (instance, assignment, setups)
}

/// Oracle-sized parameters: at most 4 jobs, 3 machines and 3 tasks per job,
/// random calendars and asymmetric cleaning.
pub fn small_params(seed: u64) -> GeneratorParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let machines = rng.gen_range(1..=3);
    GeneratorParams {
        job_count: rng.gen_range(1..=4),
        machine_count: machines,
        tasks_per_job: (1, rng.gen_range(1..=3)),
        duration: (1, rng.gen_range(2..=9)),
        eligibility: (1, rng.gen_range(1..=machines as i64)),
        calendar_density: [0.0, 0.1, 0.25, 0.4][rng.gen_range(0..4)],
        cleaning: (0, rng.gen_range(0..=6)),
        due_tightness: rng.gen_range(0..=30) as f64 / 10.0,
        product_families: rng.gen_range(1..=3),
        operation_families: rng.gen_range(1..=2),
        seed,
        ..GeneratorParams::default()
    }
}

/// The first `count` oracle-sized cases from consecutive seeds, skipping
/// any whose machine loads exceed the oracle budget.
pub fn small_cases(count: usize, first_seed: u64) -> Vec<Case> {
    let mut out = Vec::with_capacity(count);
    let mut seed = first_seed;
    while out.len() < count {
        let instance = Instance::build(generate_spec(&small_params(seed)).unwrap()).unwrap();
        let (instance, assignment, setups) = prepare(instance);
        if check_budget(&instance, &assignment).is_ok() {
            out.push(Case {
                seed,
                instance,
                assignment,
                setups,
            });
        }
        seed += 1;
    }
    out
}
