//! Versioned JSON instance documents.
//!
//! Time quantities are decimal numbers of base units; they are kept as
//! exact text while parsing and scaled to integers once the number of
//! decimal digits is known.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Number;

use crate::error::{Error, Result};
use crate::instance::{
    scale_time, unscale_time, BaseUnit, CleaningKey, CleaningTable, Instance, InstanceSpec, JobSpec, MachineSpec,
    RawDecimal, TaskAttributes, TaskSpec, Time, TimeScale, DEFAULT_LABEL,
};

pub const FORMAT_VERSION: u32 = 1;

/// How unknown document fields are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    #[default]
    Strict,
    /// Unknown fields are reported as warnings.
    Lenient,
}

fn default_label() -> String {
    DEFAULT_LABEL.to_string()
}

fn is_default_label(s: &String) -> bool {
    s == DEFAULT_LABEL
}

fn zero() -> Number {
    Number::from(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleDoc {
    /// Fractional digits kept; inferred from the data when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decimal_digits: Option<u32>,
    #[serde(default)]
    pub base_unit: BaseUnit,
    #[serde(default)]
    pub origin_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDoc {
    pub duration: Number,
    pub eligible_machines: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assigned_machine: Option<String>,
    #[serde(default = "default_label", skip_serializing_if = "is_default_label")]
    pub product_family: String,
    #[serde(default = "default_label", skip_serializing_if = "is_default_label")]
    pub ingredient_strength: String,
    #[serde(default = "default_label", skip_serializing_if = "is_default_label")]
    pub operation_family: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobDoc {
    pub id: String,
    pub due_date: Number,
    pub tasks: Vec<TaskDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineDoc {
    pub id: String,
    #[serde(default = "default_label")]
    pub operation_family: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub maintenance: Vec<[Number; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningEntryDoc {
    #[serde(default = "default_label")]
    pub from_product_family: String,
    #[serde(default = "default_label")]
    pub from_strength: String,
    #[serde(default = "default_label")]
    pub to_product_family: String,
    #[serde(default = "default_label")]
    pub to_strength: String,
    #[serde(default = "default_label")]
    pub operation_family: String,
    pub time: Number,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningDoc {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entries: Vec<CleaningEntryDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub family_defaults: BTreeMap<String, Number>,
    #[serde(default = "zero")]
    pub global_default: Number,
}

impl Default for CleaningDoc {
    fn default() -> Self {
        Self {
            entries: Vec::new(),
            family_defaults: BTreeMap::new(),
            global_default: zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub format_version: u32,
    pub scale: ScaleDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<Number>,
    pub machines: Vec<MachineDoc>,
    pub jobs: Vec<JobDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub global_nonworking: Vec<[Number; 2]>,
    #[serde(default)]
    pub cleaning: CleaningDoc,
}

/// Result of parsing, with unknown-field warnings in lenient mode.
#[derive(Debug, Clone)]
pub struct ParsedInstance {
    pub instance: Instance,
    pub warnings: Vec<String>,
}

fn decimal(n: &Number, location: &str) -> Result<RawDecimal> {
    RawDecimal::from_str(&n.to_string()).map_err(|e| e.at(location))
}

fn number(d: RawDecimal) -> Number {
    Number::from_str(&d.to_string()).expect("decimal text is a valid JSON number")
}

impl InstanceDocument {
    /// Parses JSON text into a document without interpreting times.
    pub fn from_json(text: &str, mode: Strictness) -> Result<(Self, Vec<String>)> {
        let mut unknown = Vec::new();
        let mut de = serde_json::Deserializer::from_str(text);
        let doc: Self = serde_ignored::deserialize(&mut de, |path| unknown.push(path.to_string()))
            .map_err(|e| Error::Document(e.to_string()))?;
        de.end().map_err(|e| Error::Document(e.to_string()))?;
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::invalid(
                "format_version",
                format!("unsupported version {} (expected {FORMAT_VERSION})", doc.format_version),
            ));
        }
        let warnings: Vec<String> = unknown.iter().map(|p| format!("unknown field {p}")).collect();
        if mode == Strictness::Strict && !warnings.is_empty() {
            return Err(Error::Document(warnings.join("; ")));
        }
        Ok((doc, warnings))
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("document serializes");
        out.push('\n');
        out
    }

    /// Every time literal with its location.
    fn times(&self) -> Vec<(String, &Number)> {
        let mut out = Vec::new();
        if let Some(h) = &self.horizon {
            out.push(("horizon".to_string(), h));
        }
        for (i, w) in self.global_nonworking.iter().enumerate() {
            out.push((format!("global_nonworking[{i}][0]"), &w[0]));
            out.push((format!("global_nonworking[{i}][1]"), &w[1]));
        }
        for (i, m) in self.machines.iter().enumerate() {
            for (k, w) in m.maintenance.iter().enumerate() {
                out.push((format!("machines[{i}].maintenance[{k}][0]"), &w[0]));
                out.push((format!("machines[{i}].maintenance[{k}][1]"), &w[1]));
            }
        }
        for (j, job) in self.jobs.iter().enumerate() {
            out.push((format!("jobs[{j}].due_date"), &job.due_date));
            for (k, t) in job.tasks.iter().enumerate() {
                out.push((format!("jobs[{j}].tasks[{k}].duration"), &t.duration));
            }
        }
        for (i, e) in self.cleaning.entries.iter().enumerate() {
            out.push((format!("cleaning.entries[{i}].time"), &e.time));
        }
        for (f, v) in &self.cleaning.family_defaults {
            out.push((format!("cleaning.family_defaults[{f:?}]"), v));
        }
        out.push(("cleaning.global_default".to_string(), &self.cleaning.global_default));
        out
    }

    /// Scales every time and builds the validated instance.
    pub fn to_instance(&self) -> Result<Instance> {
        let mut observed = 0;
        for (loc, n) in self.times() {
            observed = observed.max(decimal(n, &loc)?.frac_digits());
        }
        let digits = self.scale.decimal_digits.unwrap_or(observed);
        let scale = TimeScale::new(digits, self.scale.base_unit, self.scale.origin_label.clone())?;
        let t = |n: &Number, loc: &str| -> Result<Time> {
            scale_time(&decimal(n, loc)?, &scale).map_err(|e| e.at(loc))
        };
        let window = |w: &[Number; 2], loc: &str| -> Result<(Time, Time)> {
            Ok((t(&w[0], &format!("{loc}[0]"))?, t(&w[1], &format!("{loc}[1]"))?))
        };

        let mut spec = InstanceSpec::new(scale.clone());
        spec.horizon = self.horizon.as_ref().map(|h| t(h, "horizon")).transpose()?;
        for (i, w) in self.global_nonworking.iter().enumerate() {
            spec.global_nonworking.push(window(w, &format!("global_nonworking[{i}]"))?);
        }
        for (i, m) in self.machines.iter().enumerate() {
            let mut ms = MachineSpec::new(&m.id, &m.operation_family);
            for (k, w) in m.maintenance.iter().enumerate() {
                ms.maintenance.push(window(w, &format!("machines[{i}].maintenance[{k}]"))?);
            }
            spec.machines.push(ms);
        }
        for (j, job) in self.jobs.iter().enumerate() {
            let mut tasks = Vec::with_capacity(job.tasks.len());
            for (k, task) in job.tasks.iter().enumerate() {
                tasks.push(TaskSpec {
                    duration: t(&task.duration, &format!("jobs[{j}].tasks[{k}].duration"))?,
                    eligible_machines: task.eligible_machines.clone(),
                    assigned_machine: task.assigned_machine.clone(),
                    attributes: TaskAttributes::new(
                        &task.product_family,
                        &task.ingredient_strength,
                        &task.operation_family,
                    ),
                });
            }
            spec.jobs.push(JobSpec {
                id: job.id.clone(),
                due_date: t(&job.due_date, &format!("jobs[{j}].due_date"))?,
                tasks,
            });
        }
        let mut table = CleaningTable::uniform(t(&self.cleaning.global_default, "cleaning.global_default")?);
        for (i, e) in self.cleaning.entries.iter().enumerate() {
            let key = CleaningKey::new(
                (&e.from_product_family, &e.from_strength),
                (&e.to_product_family, &e.to_strength),
                &e.operation_family,
            );
            let loc = format!("cleaning.entries[{i}]");
            let v = t(&e.time, &format!("{loc}.time"))?;
            if table.entries.insert(key, v).is_some() {
                return Err(Error::invalid(loc, "duplicate cleaning entry"));
            }
        }
        for (f, v) in &self.cleaning.family_defaults {
            table
                .family_defaults
                .insert(f.clone(), t(v, &format!("cleaning.family_defaults[{f:?}]"))?);
        }
        spec.cleaning = table;
        Instance::build(spec)
    }

    /// Document for `instance`, with explicit digits and horizon.
    pub fn from_instance(instance: &Instance) -> Self {
        let spec = instance.to_spec();
        let scale = instance.time_scale();
        let n = |v: Time| number(unscale_time(v, scale));
        let w = |(a, b): (Time, Time)| [n(a), n(b)];
        Self {
            format_version: FORMAT_VERSION,
            scale: ScaleDoc {
                decimal_digits: Some(scale.decimal_digits()),
                base_unit: scale.base_unit(),
                origin_label: scale.origin_label().to_string(),
            },
            horizon: spec.horizon.map(n),
            machines: spec
                .machines
                .into_iter()
                .map(|m| MachineDoc {
                    id: m.id,
                    operation_family: m.operation_family,
                    maintenance: m.maintenance.into_iter().map(w).collect(),
                })
                .collect(),
            jobs: spec
                .jobs
                .into_iter()
                .map(|j| JobDoc {
                    id: j.id,
                    due_date: n(j.due_date),
                    tasks: j
                        .tasks
                        .into_iter()
                        .map(|t| TaskDoc {
                            duration: n(t.duration),
                            eligible_machines: t.eligible_machines,
                            assigned_machine: t.assigned_machine,
                            product_family: t.attributes.product_family,
                            ingredient_strength: t.attributes.ingredient_strength,
                            operation_family: t.attributes.operation_family,
                        })
                        .collect(),
                })
                .collect(),
            global_nonworking: spec.global_nonworking.into_iter().map(w).collect(),
            cleaning: CleaningDoc {
                entries: spec
                    .cleaning
                    .entries
                    .into_iter()
                    .map(|(k, v)| CleaningEntryDoc {
                        from_product_family: k.from_product_family,
                        from_strength: k.from_strength,
                        to_product_family: k.to_product_family,
                        to_strength: k.to_strength,
                        operation_family: k.operation_family,
                        time: n(v),
                    })
                    .collect(),
                family_defaults: spec.cleaning.family_defaults.into_iter().map(|(f, v)| (f, n(v))).collect(),
                global_default: n(spec.cleaning.global_default),
            },
        }
    }
}

pub fn parse_instance(text: &str, mode: Strictness) -> Result<ParsedInstance> {
    let (doc, warnings) = InstanceDocument::from_json(text, mode)?;
    Ok(ParsedInstance {
        instance: doc.to_instance()?,
        warnings,
    })
}

pub fn serialize_instance(instance: &Instance) -> String {
    InstanceDocument::from_instance(instance).to_json()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "format_version": 1,
        "scale": {"base_unit": "hours"},
        "machines": [{"id": "M1"}],
        "jobs": [{"id": "J1", "due_date": 4, "tasks": [{"duration": 2.5, "eligible_machines": ["M1"]}]}]
    }"#;

    #[test]
    fn minimal_document_has_horizon_equal_to_duration() {
        let p = parse_instance(MINIMAL, Strictness::Strict).unwrap();
        assert_eq!(p.instance.time_scale().decimal_digits(), 1);
        assert_eq!(p.instance.task(crate::instance::TaskId(0)).duration, 25);
        assert_eq!(p.instance.horizon(), 25);
        assert_eq!(p.instance.job(crate::instance::JobIdx(0)).due_date, 40);
    }

    #[test]
    fn too_many_decimals_is_a_scale_error() {
        let text = MINIMAL.replace(r#""base_unit": "hours""#, r#""decimal_digits": 0"#);
        let err = parse_instance(&text, Strictness::Strict).unwrap_err();
        assert!(matches!(err.root(), Error::Scale { found: 1, allowed: 0, .. }), "{err}");
        assert!(err.to_string().starts_with("jobs[0].tasks[0].duration"), "{err}");
    }

    #[test]
    fn unknown_fields_strict_and_lenient() {
        let text = MINIMAL.replace(r#""id": "M1""#, r#""id": "M1", "colour": "red""#);
        assert!(parse_instance(&text, Strictness::Strict).is_err());
        let p = parse_instance(&text, Strictness::Lenient).unwrap();
        assert_eq!(p.warnings, vec!["unknown field machines.0.colour"]);
    }

    #[test]
    fn wrong_version_is_rejected() {
        let text = MINIMAL.replace(r#""format_version": 1"#, r#""format_version": 2"#);
        assert!(parse_instance(&text, Strictness::Strict).is_err());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = MINIMAL.replace(r#"[{"id": "M1"}]"#, r#"[{"id": "M1"}, {"id": "M1"}]"#);
        let err = parse_instance(&text, Strictness::Strict).unwrap_err();
        assert!(matches!(err, Error::DuplicateId { .. }), "{err}");
    }

    #[test]
    fn round_trip_is_exact() {
        let text = r#"{
            "format_version": 1,
            "scale": {"decimal_digits": 2, "base_unit": "hours", "origin_label": "2024-03-01T00:00"},
            "machines": [
                {"id": "M2", "operation_family": "mix", "maintenance": [[10, 12.5]]},
                {"id": "M1", "operation_family": "fill"}
            ],
            "jobs": [
                {"id": "B", "due_date": 30.25, "tasks": [
                    {"duration": 3.75, "eligible_machines": ["M1", "M2"], "product_family": "p1", "ingredient_strength": "high"},
                    {"duration": 1, "eligible_machines": ["M2"], "assigned_machine": "M2"}
                ]},
                {"id": "A", "due_date": 5, "tasks": [{"duration": 2, "eligible_machines": ["M1"]}]}
            ],
            "global_nonworking": [[20, 24]],
            "cleaning": {
                "entries": [{"from_product_family": "p1", "to_product_family": "default", "time": 1.5}],
                "family_defaults": {"mix": 0.5},
                "global_default": 0.25
            }
        }"#;
        let first = parse_instance(text, Strictness::Strict).unwrap().instance;
        let written = serialize_instance(&first);
        let second = parse_instance(&written, Strictness::Strict).unwrap().instance;
        assert_eq!(first, second);
        assert_eq!(written, serialize_instance(&second));
        assert!(written.contains("3.75"), "{written}");
    }
}
