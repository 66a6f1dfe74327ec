//! Per-session metrics and condition-paired comparisons across sessions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{
    completion_rates, detect_breaches, drill_time, BreachEvent, CompletionRates, RemovalEvent,
    BREACH_MERGE_WINDOW_MS, BREACH_MIN_VOXELS,
};
use crate::plan::ZonePlan;
use crate::stats::{paired_t_one_sided, PairedTTestResult};

/// Whether the operator saw the zone overlay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Guided,
    Unguided,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Guided => "guided",
            Condition::Unguided => "unguided",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "guided" | "navigated" => Ok(Condition::Guided),
            "unguided" | "non-navigated" | "control" => Ok(Condition::Unguided),
            other => Err(format!("unknown condition {other:?}")),
        }
    }
}

/// Identifies a session and the pairing unit (usually a participant) it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionLabel {
    pub session_id: String,
    pub subject: String,
    pub condition: Condition,
}

impl SessionLabel {
    /// Parses `subject:condition`.
    pub fn parse(session_id: impl Into<String>, s: &str) -> Result<Self> {
        let (subject, cond) = s
            .rsplit_once(':')
            .ok_or_else(|| Error::InvalidParams(format!("label {s:?} is not subject:condition")))?;
        let condition = cond.parse().map_err(Error::InvalidParams)?;
        Ok(Self {
            session_id: session_id.into(),
            subject: subject.to_string(),
            condition,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub session_id: String,
    pub subject: String,
    pub condition: Condition,
    pub voxels_removed: usize,
    pub completion_pct: CompletionRates,
    pub drill_time_s: f64,
    pub breach_count: usize,
    pub breaches: Vec<BreachEvent>,
}

/// Metrics of one session with the default breach rule.
pub fn session_metrics(
    label: &SessionLabel,
    log: &[RemovalEvent],
    plan: &ZonePlan,
) -> Result<SessionMetrics> {
    let breaches = detect_breaches(log, BREACH_MIN_VOXELS, BREACH_MERGE_WINDOW_MS)?;
    Ok(SessionMetrics {
        session_id: label.session_id.clone(),
        subject: label.subject.clone(),
        condition: label.condition,
        voxels_removed: log.len(),
        completion_pct: completion_rates(log, plan)?,
        drill_time_s: drill_time(log),
        breach_count: breaches.len(),
        breaches,
    })
}

/// The metrics compared across conditions, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    CompletionGreen,
    CompletionYellow,
    CompletionRed,
    DrillTimeS,
    BreachCount,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::CompletionGreen,
        Metric::CompletionYellow,
        Metric::CompletionRed,
        Metric::DrillTimeS,
        Metric::BreachCount,
    ];

    pub fn value(self, m: &SessionMetrics) -> Option<f64> {
        match self {
            Metric::CompletionGreen => m.completion_pct.green,
            Metric::CompletionYellow => m.completion_pct.yellow,
            Metric::CompletionRed => m.completion_pct.red,
            Metric::DrillTimeS => Some(m.drill_time_s),
            Metric::BreachCount => Some(m.breach_count as f64),
        }
    }

    /// The condition expected to score higher: guidance should raise green
    /// and yellow completion and lower everything else.
    pub fn expected_higher(self) -> Condition {
        match self {
            Metric::CompletionGreen | Metric::CompletionYellow => Condition::Guided,
            _ => Condition::Unguided,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTest {
    pub metric: Metric,
    /// Human-readable alternative hypothesis, e.g. `guided > unguided`.
    pub alternative: String,
    pub subjects: Vec<String>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub result: PairedTTestResult,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub sessions: Vec<SessionMetrics>,
    pub tests: Vec<MetricTest>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Builds the report for aligned sessions. A single plan may be shared by
/// every log.
///
/// Sessions are paired by subject: each subject's metric is averaged per
/// condition, and subjects seen under both conditions form the pairs. A test
/// runs only when at least two pairs exist.
pub fn session_report(
    logs: &[&[RemovalEvent]],
    plans: &[&ZonePlan],
    labels: &[SessionLabel],
) -> Result<Report> {
    if labels.len() != logs.len() {
        return Err(Error::MisalignedInputs(format!(
            "{} logs but {} labels",
            logs.len(),
            labels.len()
        )));
    }
    if !(plans.len() == logs.len() || (plans.len() == 1 && !logs.is_empty())) && !logs.is_empty() {
        return Err(Error::MisalignedInputs(format!(
            "{} logs but {} plans",
            logs.len(),
            plans.len()
        )));
    }
    let mut sessions = Vec::with_capacity(logs.len());
    for (i, (log, label)) in logs.iter().zip(labels).enumerate() {
        let plan = plans[if plans.len() == 1 { 0 } else { i }];
        let m = session_metrics(label, log, plan).map_err(|e| match e {
            Error::UnknownVoxel(v) => Error::MisalignedInputs(format!(
                "session {} removes voxel {v:?} outside its plan",
                label.session_id
            )),
            other => other,
        })?;
        sessions.push(m);
    }

    let mut tests = Vec::new();
    for metric in Metric::ALL {
        // subject -> condition -> values
        let mut by_subject: BTreeMap<&str, BTreeMap<Condition, Vec<f64>>> = BTreeMap::new();
        for s in &sessions {
            if let Some(v) = metric.value(s) {
                by_subject
                    .entry(&s.subject)
                    .or_default()
                    .entry(s.condition)
                    .or_default()
                    .push(v);
            }
        }
        let hi = metric.expected_higher();
        let lo = match hi {
            Condition::Guided => Condition::Unguided,
            Condition::Unguided => Condition::Guided,
        };
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mut subjects, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
        for (subject, conds) in &by_subject {
            if let (Some(x), Some(y)) = (conds.get(&hi), conds.get(&lo)) {
                subjects.push(subject.to_string());
                a.push(mean(x));
                b.push(mean(y));
            }
        }
        if a.len() < 2 {
            continue;
        }
        let result = paired_t_one_sided(&a, &b)?;
        tests.push(MetricTest {
            metric,
            alternative: format!("{hi} > {lo}"),
            subjects,
            a,
            b,
            result,
        });
    }
    Ok(Report { sessions, tests })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{ShellParams, Zone};
    use crate::volume::GridSpec;

    #[test]
    fn label_parsing() {
        let l = SessionLabel::parse("s1", "p01:guided").unwrap();
        assert_eq!(l.subject, "p01");
        assert_eq!(l.condition, Condition::Guided);
        assert_eq!(
            SessionLabel::parse("s2", "p:a:non-navigated").unwrap().subject,
            "p:a"
        );
        assert!(SessionLabel::parse("s", "p01").is_err());
        assert!(SessionLabel::parse("s", "p01:maybe").is_err());
    }

    #[test]
    fn empty_input_gives_empty_report() {
        let r = session_report(&[], &[], &[]).unwrap();
        assert!(r.sessions.is_empty() && r.tests.is_empty());
    }

    #[test]
    fn one_session_has_no_tests() {
        let spec = GridSpec::isotropic([2, 2, 2], 1.0).unwrap();
        let plan = ZonePlan::new(spec, vec![Zone::Green; 8], ShellParams::default()).unwrap();
        let log = [RemovalEvent {
            t_ms: 0,
            voxel: [0, 0, 0],
            zone: Zone::Green,
        }];
        let label = SessionLabel::parse("s1", "p1:guided").unwrap();
        let r = session_report(&[&log], &[&plan], &[label]).unwrap();
        assert_eq!(r.sessions.len(), 1);
        assert_eq!(r.sessions[0].completion_pct.green, Some(12.5));
        assert!(r.tests.is_empty());
    }

    #[test]
    fn misaligned_lengths() {
        let spec = GridSpec::isotropic([2, 2, 2], 1.0).unwrap();
        let plan = ZonePlan::new(spec, vec![Zone::Green; 8], ShellParams::default()).unwrap();
        let label = SessionLabel::parse("s1", "p1:guided").unwrap();
        assert!(matches!(
            session_report(&[&[], &[]], &[&plan, &plan, &plan], &[label.clone(), label.clone()]),
            Err(Error::MisalignedInputs(_))
        ));
        assert!(matches!(
            session_report(&[&[]], &[&plan], &[]),
            Err(Error::MisalignedInputs(_))
        ));
    }
}
