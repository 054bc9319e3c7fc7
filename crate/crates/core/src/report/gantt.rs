//! Machine-level Gantt chart as a plain SVG document.
//!
//! Coordinates are integer hundredths of a pixel, so the same schedule
//! always renders to the same bytes and adjacent tasks never overlap.

use std::fmt::Write;

use crate::instance::{Instance, Time};
use crate::preprocess::clean_cost;
use crate::solver::Schedule;

const PALETTE: [&str; 12] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
    "#86bcb6", "#d37295",
];

const LEFT: i64 = 8000;
const PLOT: i64 = 100_000;
const TOP: i64 = 3000;
const ROW: i64 = 3600;
const BAR: i64 = 2200;
const CLEAN_GAP: i64 = 300;
const CLEAN_BAR: i64 = 500;
const HATCH: i64 = 600;

fn px(v: i64) -> String {
    format!("{}.{:02}", v.div_euclid(100), v.rem_euclid(100))
}

struct Canvas {
    out: String,
    span: Time,
}

impl Canvas {
    fn x(&self, t: Time) -> i64 {
        LEFT + (t.clamp(0, self.span) as i128 * PLOT as i128 / self.span as i128) as i64
    }

    fn rect(&mut self, x0: i64, y: i64, x1: i64, h: i64, attrs: &str) {
        let _ = writeln!(
            self.out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" {attrs}/>"#,
            px(x0),
            px(y),
            px(x1 - x0),
            px(h)
        );
    }

    fn line(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, attrs: &str) {
        let _ = writeln!(
            self.out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" {attrs}/>"#,
            px(x0),
            px(y0),
            px(x1),
            px(y1)
        );
    }

    fn text(&mut self, x: i64, y: i64, anchor: &str, body: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="{anchor}">{}</text>"#,
            px(x),
            px(y),
            escape(body)
        );
    }

    /// Grey block with 45-degree hatching clipped to its bounds.
    fn hatched(&mut self, x0: i64, y0: i64, x1: i64, h: i64) {
        self.rect(x0, y0, x1, h, r##"fill="#dddddd" stroke="none""##);
        let mut c = x0 + HATCH;
        while c < x1 + h {
            let lo = (c - x1).max(0);
            let hi = h.min(c - x0);
            if lo < hi {
                self.line(c - lo, y0 + lo, c - hi, y0 + hi, r##"stroke="#888888" stroke-width="0.5""##);
            }
            c += HATCH;
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One row per machine with tasks coloured by job, hatched non-working and
/// maintenance windows, and cleaning drawn as a thin bar under each gap.
pub fn render_gantt(schedule: &Schedule, instance: &Instance) -> String {
    let span = schedule.makespan().max(1);
    let machines = instance.machines();
    let height = TOP + ROW * machines.len() as i64 + 2000;
    let width = LEFT + PLOT + 2000;
    let mut c = Canvas {
        out: String::new(),
        span,
    };
    let _ = writeln!(
        c.out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        px(width),
        px(height),
        px(width),
        px(height)
    );
    c.rect(0, 0, width, height, r##"fill="#ffffff""##);

    // Day grid.
    let per_day = instance.time_scale().units_per_day();
    let days = (span + per_day - 1) / per_day;
    let step = (days / 20).max(1);
    let bottom = TOP + ROW * machines.len() as i64;
    let mut d = 0;
    while d * per_day <= span {
        let x = c.x(d * per_day);
        c.line(x, TOP - 500, x, bottom, r##"stroke="#cccccc" stroke-width="0.5""##);
        c.text(x, TOP - 800, "middle", &format!("d{d}"));
        d += step;
    }

    for (m, machine) in machines.iter().enumerate() {
        let y = TOP + ROW * m as i64;
        c.text(LEFT - 500, y + BAR - 700, "end", &machine.id);
        for w in instance.global_nonworking().iter().chain(&machine.maintenance) {
            if w.start < span {
                let (x0, x1) = (c.x(w.start), c.x(w.end));
                c.hatched(x0, y, x1, BAR);
            }
        }
        let order = schedule.machine_orders.get(m).map(Vec::as_slice).unwrap_or(&[]);
        for &t in order {
            let task = instance.task(t);
            let (x0, x1) = (c.x(schedule.starts[t.0]), c.x(schedule.ends[t.0]));
            let fill = PALETTE[task.job.0 % PALETTE.len()];
            c.rect(x0, y, x1, BAR, &format!(r##"fill="{fill}" stroke="#333333" stroke-width="0.5""##));
            if x1 - x0 >= 3000 {
                c.text((x0 + x1) / 2, y + BAR - 700, "middle", &instance.task_label(t));
            }
        }
        for pair in order.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let kappa = clean_cost(instance.task(a), instance.task(b), &instance.machines()[m], instance.cleaning());
            if kappa > 0 {
                let from = schedule.ends[a.0];
                let (x0, x1) = (c.x(from), c.x(from + kappa));
                c.rect(x0, y + BAR + CLEAN_GAP, x1, CLEAN_BAR, r##"fill="#222222" stroke="none""##);
            }
        }
    }
    c.out.push_str("</svg>\n");
    c.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{InstanceSpec, JobSpec, MachineSpec, TaskSpec, TimeScale};
    use crate::preprocess::assign_machines;

    fn count(svg: &str, tag: &str) -> usize {
        svg.matches(&format!("<{tag} ")).count()
    }

    fn two_tasks(cleaning: Time) -> (Instance, Schedule) {
        let mut spec = InstanceSpec::new(TimeScale::unit());
        spec.machines.push(MachineSpec::new("M", "f"));
        spec.machines.push(MachineSpec::new("N", "f"));
        spec.cleaning.global_default = cleaning;
        for i in 0..2 {
            spec.jobs.push(JobSpec {
                id: format!("J{i}"),
                due_date: 0,
                tasks: vec![TaskSpec::new(3, &["M"])],
            });
        }
        let inst = Instance::build(spec).unwrap();
        let a = assign_machines(&inst);
        let s = Schedule::from_starts(&inst, &a, vec![0, 3 + cleaning]);
        (inst, s)
    }

    #[test]
    fn cleaning_gap_adds_one_thin_block() {
        let (inst, s) = two_tasks(2);
        let svg = render_gantt(&s, &inst);
        // background + two tasks + one cleaning bar
        assert_eq!(count(&svg, "rect"), 4);
        assert_eq!(svg.matches(r##"fill="#222222""##).count(), 1);
        let (inst, s) = two_tasks(0);
        assert_eq!(count(&render_gantt(&s, &inst), "rect"), 3);
    }

    #[test]
    fn only_allowed_elements() {
        let (inst, s) = two_tasks(2);
        let svg = render_gantt(&s, &inst);
        for line in svg.lines().skip(2) {
            assert!(
                ["<rect ", "<line ", "<text ", "</svg>"].iter().any(|p| line.starts_with(p)),
                "{line}"
            );
        }
        assert_eq!(svg, render_gantt(&s, &inst));
    }

    #[test]
    fn empty_machine_row_shows_only_calendar() {
        let mut spec = InstanceSpec::new(TimeScale::unit());
        spec.machines.push(MachineSpec::new("M", "f"));
        let mut idle = MachineSpec::new("N", "f");
        idle.maintenance.push((1, 2));
        spec.machines.push(idle);
        spec.jobs.push(JobSpec {
            id: "J".into(),
            due_date: 0,
            tasks: vec![TaskSpec::new(4, &["M"])],
        });
        let inst = Instance::build(spec).unwrap();
        let a = assign_machines(&inst);
        let s = Schedule::from_starts(&inst, &a, vec![0]);
        let svg = render_gantt(&s, &inst);
        assert_eq!(svg.matches(r##"fill="#dddddd""##).count(), 1);
        assert_eq!(count(&svg, "rect"), 3);
    }

    #[test]
    fn hatch_lines_stay_inside_block() {
        let mut c = Canvas {
            out: String::new(),
            span: 10,
        };
        c.hatched(1000, 500, 4000, 2200);
        for line in c.out.lines().filter(|l| l.starts_with("<line")) {
            let nums: Vec<f64> = line
                .split('"')
                .filter_map(|s| s.parse().ok())
                .take(4)
                .collect();
            assert!(nums[0] >= 10.0 && nums[0] <= 40.0 && nums[2] >= 10.0 && nums[2] <= 40.0, "{line}");
            assert!(nums[1] >= 5.0 && nums[3] <= 27.0, "{line}");
        }
    }
}
