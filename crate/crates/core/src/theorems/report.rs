use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    /// Nothing to check (for example an empty positivity set).
    VacuousPass,
    /// A strict inequality held only within `[−tol, floor]`.
    WeakPass,
    Fail,
}

impl Status {
    pub fn is_pass(self) -> bool {
        self != Status::Fail
    }

    pub fn tag(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::VacuousPass => "vacuous-pass",
            Status::WeakPass => "weak-pass",
            Status::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginKind {
    /// Holds when `value ≥ −tolerance`.
    Inequality,
    /// Holds strictly when `value > floor`; `value ∈ [−tolerance, floor]`
    /// is a weak pass.
    Strict { floor: f64 },
    /// Logged only.
    Info,
}

/// A signed slack: nonnegative means the inequality holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub label: String,
    pub value: f64,
    pub tolerance: f64,
    pub kind: MarginKind,
    /// Number of evaluations folded into this worst case.
    pub count: usize,
}

impl Margin {
    pub fn inequality(label: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { label: label.into(), value, tolerance, kind: MarginKind::Inequality, count: 1 }
    }

    pub fn strict(label: impl Into<String>, value: f64, tolerance: f64, floor: f64) -> Self {
        Self { label: label.into(), value, tolerance, kind: MarginKind::Strict { floor }, count: 1 }
    }

    pub fn info(label: impl Into<String>, value: f64) -> Self {
        Self { label: label.into(), value, tolerance: 0.0, kind: MarginKind::Info, count: 1 }
    }

    pub fn status(&self) -> Status {
        if self.value.is_nan() {
            return match self.kind {
                MarginKind::Info => Status::Pass,
                _ => Status::Fail,
            };
        }
        match self.kind {
            MarginKind::Info => Status::Pass,
            MarginKind::Inequality if self.value >= -self.tolerance => Status::Pass,
            MarginKind::Inequality => Status::Fail,
            MarginKind::Strict { floor } if self.value > floor => Status::Pass,
            MarginKind::Strict { .. } if self.value >= -self.tolerance => Status::WeakPass,
            MarginKind::Strict { .. } => Status::Fail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    /// Stable key such as `"L:lemma2.form"`.
    pub id: String,
    pub s: Option<f64>,
    pub size: usize,
    /// Human-readable description of the instances.
    pub instance: String,
    pub instances: usize,
    pub margins: Vec<Margin>,
    pub status: Status,
    pub vacuous: bool,
    pub notes: Vec<String>,
}

impl TheoremReport {
    pub fn new(id: impl Into<String>, s: Option<f64>, size: usize, instance: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            s,
            size,
            instance: instance.into(),
            instances: 0,
            margins: Vec::new(),
            status: Status::Pass,
            vacuous: false,
            notes: Vec::new(),
        }
    }

    /// Fold a margin into the worst case kept under the same label.
    pub fn record(&mut self, margin: Margin) {
        match self.margins.iter_mut().find(|m| m.label == margin.label) {
            Some(existing) => {
                let count = existing.count + margin.count;
                let worse = match (margin.status(), existing.status()) {
                    (a, b) if a != b => a > b,
                    _ => margin.value < existing.value || margin.value.is_nan(),
                };
                if worse {
                    *existing = margin;
                }
                existing.count = count;
            }
            None => self.margins.push(margin),
        }
        self.refresh();
    }

    pub fn instance_done(&mut self) {
        self.instances += 1;
    }

    pub fn mark_vacuous(&mut self, note: impl Into<String>) {
        self.vacuous = true;
        self.notes.push(note.into());
        self.refresh();
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    fn refresh(&mut self) {
        let worst = self.margins.iter().map(Margin::status).max().unwrap_or(Status::Pass);
        self.status = match worst {
            Status::Pass if self.vacuous => Status::VacuousPass,
            other => other,
        };
    }

    /// Smallest non-informational margin value.
    pub fn worst_margin(&self) -> Option<f64> {
        self.margins
            .iter()
            .filter(|m| m.kind != MarginKind::Info)
            .map(|m| m.value)
            .reduce(f64::min)
    }

    pub fn passed(&self) -> bool {
        self.status.is_pass()
    }
}

pub fn summary_csv(reports: &[TheoremReport]) -> String {
    let mut out = String::from("theorem,s,size,instances,worst_margin,status\n");
    for r in reports {
        let s = r.s.map(|s| s.to_string()).unwrap_or_default();
        let worst = r.worst_margin().map(|w| format!("{w:.6e}")).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{},{}", r.id, s, r.size, r.instances, worst, r.status.tag());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_statuses() {
        assert_eq!(Margin::inequality("a", -1e-9, 1e-8).status(), Status::Pass);
        assert_eq!(Margin::inequality("a", -1e-7, 1e-8).status(), Status::Fail);
        assert_eq!(Margin::strict("a", 1e-3, 1e-8, 1e-12).status(), Status::Pass);
        assert_eq!(Margin::strict("a", 0.0, 1e-8, 1e-12).status(), Status::WeakPass);
        assert_eq!(Margin::strict("a", -1.0, 1e-8, 1e-12).status(), Status::Fail);
        assert_eq!(Margin::info("a", -1.0).status(), Status::Pass);
        assert_eq!(Margin::inequality("a", f64::NAN, 1.0).status(), Status::Fail);
    }

    #[test]
    fn record_keeps_worst_and_counts() {
        let mut r = TheoremReport::new("X", Some(0.5), 7, "test");
        r.record(Margin::strict("m", 1.0, 1e-8, 1e-12));
        r.record(Margin::strict("m", 0.5, 1e-8, 1e-12));
        r.record(Margin::strict("m", 2.0, 1e-8, 1e-12));
        assert_eq!(r.margins.len(), 1);
        assert_eq!(r.margins[0].value, 0.5);
        assert_eq!(r.margins[0].count, 3);
        assert_eq!(r.status, Status::Pass);
        r.record(Margin::strict("m", 0.0, 1e-8, 1e-12));
        assert_eq!(r.status, Status::WeakPass);
        r.record(Margin::inequality("other", -1.0, 1e-8));
        assert_eq!(r.status, Status::Fail);
        assert_eq!(r.worst_margin(), Some(-1.0));
    }

    #[test]
    fn vacuous_only_upgrades_plain_pass() {
        let mut r = TheoremReport::new("X", None, 3, "t");
        r.mark_vacuous("empty set");
        assert_eq!(r.status, Status::VacuousPass);
        r.record(Margin::inequality("m", -1.0, 0.0));
        assert_eq!(r.status, Status::Fail);
    }

    #[test]
    fn csv_shape() {
        let mut r = TheoremReport::new("T:x", Some(0.25), 31, "t");
        r.record(Margin::inequality("m", 0.125, 1e-8));
        r.instance_done();
        let csv = summary_csv(&[r]);
        assert_eq!(csv.lines().nth(1).unwrap(), "T:x,0.25,31,1,1.250000e-1,pass");
    }
}
