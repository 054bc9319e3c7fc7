//! Seeded synthetic instances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{
    BaseUnit, CleaningKey, CleaningTable, Instance, InstanceSpec, JobSpec, MachineSpec, TaskAttributes, TaskSpec,
    Time, TimeScale, DEFAULT_LABEL,
};

use super::instance_doc::InstanceDocument;

const STRENGTHS: [&str; 3] = ["low", "mid", "high"];

/// Inclusive integer range.
pub type Range = (i64, i64);

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub job_count: usize,
    pub machine_count: usize,
    pub tasks_per_job: Range,
    /// Task durations in model units.
    pub duration: Range,
    /// Number of eligible machines per task.
    pub eligibility: Range,
    /// Fraction of each calendar period that is non-working, in `[0, 1)`.
    pub calendar_density: f64,
    /// Cleaning times between different products, in model units.
    pub cleaning: Range,
    /// Due date centre as a multiple of the job's total processing.
    pub due_tightness: f64,
    pub product_families: usize,
    pub operation_families: usize,
    /// Share of tasks restricted to the first machine.
    pub bottleneck_share: f64,
    pub decimal_digits: u32,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            job_count: 10,
            machine_count: 4,
            tasks_per_job: (1, 3),
            duration: (1, 10),
            eligibility: (1, 2),
            calendar_density: 0.0,
            cleaning: (0, 3),
            due_tightness: 1.5,
            product_families: 3,
            operation_families: 2,
            bottleneck_share: 0.0,
            decimal_digits: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Small,
    Medium,
    Large,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Small, Preset::Medium, Preset::Large];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Small => "small",
            Preset::Medium => "medium",
            Preset::Large => "large",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// 10, 30 and 84 jobs; hour base with two decimals.
    pub fn params(self, seed: u64) -> GeneratorParams {
        let base = GeneratorParams {
            duration: (50, 1200),
            cleaning: (0, 300),
            calendar_density: 0.15,
            due_tightness: 2.0,
            product_families: 4,
            decimal_digits: 2,
            seed,
            ..GeneratorParams::default()
        };
        match self {
            Preset::Small => GeneratorParams {
                job_count: 10,
                machine_count: 6,
                tasks_per_job: (1, 4),
                eligibility: (1, 2),
                ..base
            },
            Preset::Medium => GeneratorParams {
                job_count: 30,
                machine_count: 12,
                tasks_per_job: (2, 4),
                eligibility: (1, 3),
                bottleneck_share: 0.1,
                ..base
            },
            Preset::Large => GeneratorParams {
                job_count: 84,
                machine_count: 24,
                tasks_per_job: (2, 4),
                eligibility: (1, 3),
                bottleneck_share: 0.15,
                ..base
            },
        }
    }
}

fn check_range(name: &str, r: Range, min: i64) -> Result<()> {
    if r.0 > r.1 {
        return Err(Error::Generator(format!("{name} range [{}, {}] is empty", r.0, r.1)));
    }
    if r.0 < min {
        return Err(Error::Generator(format!("{name} must be at least {min}, got {}", r.0)));
    }
    Ok(())
}

impl GeneratorParams {
    pub fn check(&self) -> Result<()> {
        if self.job_count == 0 || self.machine_count == 0 {
            return Err(Error::Generator("job and machine counts must be positive".into()));
        }
        check_range("tasks_per_job", self.tasks_per_job, 1)?;
        check_range("duration", self.duration, 1)?;
        check_range("eligibility", self.eligibility, 1)?;
        check_range("cleaning", self.cleaning, 0)?;
        if self.eligibility.0 > self.machine_count as i64 {
            return Err(Error::Generator(format!(
                "eligibility minimum {} exceeds machine count {}",
                self.eligibility.0, self.machine_count
            )));
        }
        if !(0.0..1.0).contains(&self.calendar_density) {
            return Err(Error::Generator(format!(
                "calendar density {} outside [0, 1)",
                self.calendar_density
            )));
        }
        if !(0.0..=1.0).contains(&self.bottleneck_share) {
            return Err(Error::Generator("bottleneck share outside [0, 1]".into()));
        }
        if !(self.due_tightness >= 0.0 && self.due_tightness.is_finite()) {
            return Err(Error::Generator("due tightness must be a nonnegative number".into()));
        }
        if self.product_families == 0 || self.operation_families == 0 {
            return Err(Error::Generator("family counts must be positive".into()));
        }
        let (_, blocked) = self.calendar_period();
        let working = self.period() - blocked;
        if blocked > 0 && working < self.duration.1 {
            return Err(Error::Generator(format!(
                "longest task ({}) exceeds the working stretch ({working}) left by density {}",
                self.duration.1, self.calendar_density
            )));
        }
        Ok(())
    }

    fn period(&self) -> Time {
        4 * self.duration.1
    }

    /// Calendar period and the non-working length at its end.
    fn calendar_period(&self) -> (Time, Time) {
        let p = self.period();
        (p, (self.calendar_density * p as f64).floor() as Time)
    }
}

fn label(prefix: &str, i: usize, count: usize) -> String {
    let width = count.to_string().len();
    format!("{prefix}{:0width$}", i + 1)
}

pub fn generate_spec(params: &GeneratorParams) -> Result<InstanceSpec> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let scale = TimeScale::new(params.decimal_digits, BaseUnit::Hours, "t0")?;
    let mut spec = InstanceSpec::new(scale);

    let machine_ids: Vec<String> = (0..params.machine_count)
        .map(|i| label("M", i, params.machine_count))
        .collect();
    for (i, id) in machine_ids.iter().enumerate() {
        let family = label("op", i % params.operation_families, params.operation_families);
        spec.machines.push(MachineSpec::new(id, &family));
    }
    let products: Vec<String> = (0..params.product_families)
        .map(|i| label("P", i, params.product_families))
        .collect();

    let mut total_work = 0;
    for j in 0..params.job_count {
        let count = rng.gen_range(params.tasks_per_job.0..=params.tasks_per_job.1);
        let product = products.choose(&mut rng).expect("nonempty");
        let strength = STRENGTHS.choose(&mut rng).expect("nonempty");
        let mut tasks = Vec::new();
        let mut job_work = 0;
        for _ in 0..count {
            let duration = rng.gen_range(params.duration.0..=params.duration.1);
            job_work += duration;
            let eligible: Vec<&str> = if rng.gen_bool(params.bottleneck_share) {
                vec![machine_ids[0].as_str()]
            } else {
                let width = rng
                    .gen_range(params.eligibility.0..=params.eligibility.1)
                    .min(params.machine_count as i64) as usize;
                let mut pool: Vec<&str> = machine_ids.iter().map(String::as_str).collect();
                pool.shuffle(&mut rng);
                pool.truncate(width);
                pool.sort_unstable();
                pool
            };
            tasks.push(TaskSpec::new(duration, &eligible).with_attributes(TaskAttributes::new(product, strength, "")));
        }
        total_work += job_work;
        let centre = (params.due_tightness * job_work as f64).round() as Time;
        let due_date = rng.gen_range(centre * 4 / 5..=centre * 6 / 5);
        spec.jobs.push(JobSpec {
            id: label("J", j, params.job_count),
            due_date,
            tasks,
        });
    }

    // Asymmetric cleaning between distinct (product, strength) pairs;
    // identical pairs fall through to the zero-valued entry below.
    let mut table = CleaningTable::uniform(params.cleaning.1);
    for pf in &products {
        for sf in STRENGTHS {
            for pt in &products {
                for st in STRENGTHS {
                    let v = if pf == pt && sf == st {
                        0
                    } else {
                        rng.gen_range(params.cleaning.0..=params.cleaning.1)
                    };
                    table.entries.insert(CleaningKey::new((pf, sf), (pt, st), DEFAULT_LABEL), v);
                }
            }
        }
    }
    spec.cleaning = table;

    // Periodic calendar: the end of each period is either globally
    // non-working or, every fourth period, maintenance on some machines.
    let (period, blocked) = params.calendar_period();
    if blocked > 0 {
        let span = total_work + params.cleaning.1 * spec.task_count() as Time;
        let mut k = 0;
        while k * period < span {
            let window = ((k + 1) * period - blocked, (k + 1) * period);
            if k % 4 == 3 {
                for m in &mut spec.machines {
                    if rng.gen_bool(0.5) {
                        m.maintenance.push(window);
                    }
                }
            } else {
                spec.global_nonworking.push(window);
            }
            k += 1;
        }
    }
    Ok(spec)
}

pub fn generate_instance(params: &GeneratorParams) -> Result<InstanceDocument> {
    let instance = Instance::build(generate_spec(params)?)?;
    Ok(InstanceDocument::from_instance(&instance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{assign_machines, build_setup_matrices};
    use crate::solver::greedy_schedule;

    #[test]
    fn same_seed_same_document() {
        let p = GeneratorParams {
            seed: 7,
            ..GeneratorParams::default()
        };
        assert_eq!(generate_instance(&p).unwrap().to_json(), generate_instance(&p).unwrap().to_json());
        let q = GeneratorParams { seed: 8, ..p };
        assert_ne!(generate_instance(&p).unwrap().to_json(), generate_instance(&q).unwrap().to_json());
    }

    #[test]
    fn zero_density_has_no_calendar() {
        let spec = generate_spec(&GeneratorParams::default()).unwrap();
        assert!(spec.global_nonworking.is_empty());
        assert!(spec.machines.iter().all(|m| m.maintenance.is_empty()));
    }

    #[test]
    fn density_is_respected() {
        let p = GeneratorParams {
            calendar_density: 0.25,
            ..GeneratorParams::default()
        };
        let spec = generate_spec(&p).unwrap();
        assert!(!spec.global_nonworking.is_empty());
        let (period, _) = p.calendar_period();
        let blocked: Time = spec.global_nonworking.iter().map(|w| w.1 - w.0).sum();
        let periods = spec.global_nonworking.last().unwrap().1 / period;
        assert!(blocked * 4 <= periods * period);
    }

    #[test]
    fn impossible_params_are_rejected() {
        let p = GeneratorParams {
            calendar_density: 0.9,
            ..GeneratorParams::default()
        };
        let err = generate_spec(&p).unwrap_err();
        assert!(err.to_string().contains("working stretch"), "{err}");
        let p = GeneratorParams {
            duration: (5, 2),
            ..GeneratorParams::default()
        };
        assert!(generate_spec(&p).is_err());
    }

    #[test]
    fn presets_parse_and_admit_a_schedule() {
        for preset in Preset::ALL {
            let doc = generate_instance(&preset.params(1)).unwrap();
            let inst = doc.to_instance().unwrap();
            assert_eq!(inst.jobs().len(), [10, 30, 84][preset as usize]);
            let a = assign_machines(&inst);
            let s = build_setup_matrices(&inst, &a);
            assert!(greedy_schedule(&inst, &a, &s).is_some(), "{}", preset.name());
        }
    }
}
