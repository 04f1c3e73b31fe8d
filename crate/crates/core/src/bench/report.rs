//! Success-rate tables and the three comparison reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::TrialRecord;
use super::BenchError;
use crate::floorplan::{Difficulty, LabelingScheme};
use crate::stats::{two_proportion_z_test, welch_t_test_outcomes, TTestResult, ZTestResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    MapLabel,
    MapId,
    BaseMap,
    Doubled,
    Labeling,
    Difficulty,
    Backend,
    Task,
}

impl GroupKey {
    fn value(self, r: &TrialRecord) -> String {
        match self {
            GroupKey::MapLabel => r.map_label.clone(),
            GroupKey::MapId => r.map_id.clone(),
            GroupKey::BaseMap => r.base_map_id.clone(),
            GroupKey::Doubled => r.doubled.to_string(),
            GroupKey::Labeling => r.labeling.tag().to_string(),
            GroupKey::Difficulty => difficulty_tag(r.difficulty).to_string(),
            GroupKey::Backend => r.backend_id.clone(),
            GroupKey::Task => format!("{}|{}|{}", r.map_label, r.start_room, r.goal_room),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GroupKey::MapLabel => "map_label",
            GroupKey::MapId => "map_id",
            GroupKey::BaseMap => "base_map",
            GroupKey::Doubled => "doubled",
            GroupKey::Labeling => "labeling",
            GroupKey::Difficulty => "difficulty",
            GroupKey::Backend => "backend",
            GroupKey::Task => "task",
        }
    }
}

fn difficulty_tag(d: Difficulty) -> &'static str {
    match d {
        Difficulty::Easy => "easy",
        Difficulty::Hard => "hard",
        Difficulty::Other => "other",
        Difficulty::Degenerate => "degenerate",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub group: BTreeMap<String, String>,
    pub correct: usize,
    /// Trials excluding infrastructure failures.
    pub graded: usize,
    pub infrastructure_failures: usize,
    /// Absent when no trial was graded.
    pub rate: Option<f64>,
}

/// Rate = correct / (trials - infrastructure failures), per group, with
/// groups in sorted key order.
pub fn success_rate(records: &[TrialRecord], keys: &[GroupKey]) -> Vec<RateRow> {
    let mut groups: BTreeMap<Vec<String>, (usize, usize, usize)> = BTreeMap::new();
    for r in records {
        let g = groups.entry(keys.iter().map(|k| k.value(r)).collect()).or_default();
        if r.is_infrastructure_failure() {
            g.2 += 1;
        } else {
            g.1 += 1;
            g.0 += usize::from(r.correct);
        }
    }
    groups
        .into_iter()
        .map(|(values, (correct, graded, infra))| RateRow {
            group: keys.iter().map(|k| k.as_str().to_string()).zip(values).collect(),
            correct,
            graded,
            infrastructure_failures: infra,
            rate: (graded > 0).then(|| correct as f64 / graded as f64),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub alpha: f64,
    /// Restrict the map-size and task-difficulty arms to one labeling scheme.
    pub size_and_difficulty_labeling: Option<LabelingScheme>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            size_and_difficulty_labeling: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub label: String,
    pub correct: usize,
    pub graded: usize,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// `pooled`, or the map the comparison is restricted to.
    pub scope: String,
    pub a: ArmSummary,
    pub b: ArmSummary,
    pub welch: Option<TTestResult>,
    pub z: Option<ZTestResult>,
    /// Why a test could not be computed.
    pub note: Option<String>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisResult {
    pub id: String,
    pub name: String,
    /// The arm expected to do better comes first.
    pub arm_a: String,
    pub arm_b: String,
    pub available: bool,
    pub reason: Option<String>,
    pub pooled: Option<Comparison>,
    pub per_map: Vec<Comparison>,
    /// Pooled Welch test rejects equal success rates at `alpha`.
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub alpha: f64,
    pub total_trials: usize,
    pub infrastructure_failures: usize,
    pub by_map: Vec<RateRow>,
    pub hypotheses: Vec<HypothesisResult>,
}

struct Arm {
    label: &'static str,
    doubled: bool,
    labeling: Option<LabelingScheme>,
    difficulty: Difficulty,
}

impl Arm {
    fn admits(&self, r: &TrialRecord) -> bool {
        !r.is_infrastructure_failure()
            && r.doubled == self.doubled
            && r.difficulty == self.difficulty
            && self.labeling.is_none_or(|l| l == r.labeling)
    }
}

fn summarize(label: &str, records: &[&TrialRecord]) -> (ArmSummary, Vec<bool>) {
    // Sorted so the statistics do not depend on record order.
    let mut outcomes: Vec<bool> = records.iter().map(|r| r.correct).collect();
    outcomes.sort_unstable();
    let correct = outcomes.iter().filter(|c| **c).count();
    (
        ArmSummary {
            label: label.to_string(),
            correct,
            graded: outcomes.len(),
            rate: (!outcomes.is_empty()).then(|| correct as f64 / outcomes.len() as f64),
        },
        outcomes,
    )
}

fn compare(scope: &str, a: &Arm, b: &Arm, ra: &[&TrialRecord], rb: &[&TrialRecord], alpha: f64) -> Comparison {
    let (sa, oa) = summarize(a.label, ra);
    let (sb, ob) = summarize(b.label, rb);
    let (welch, note) = match welch_t_test_outcomes(&oa, &ob) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let z = two_proportion_z_test(sa.correct, sa.graded, sb.correct, sb.graded).ok();
    Comparison {
        scope: scope.to_string(),
        significant: welch.is_some_and(|t| t.p_two_sided < alpha),
        a: sa,
        b: sb,
        welch,
        z,
        note,
    }
}

pub fn hypothesis_report(records: &[TrialRecord], options: &ReportOptions) -> HypothesisReport {
    let sd = options.size_and_difficulty_labeling;
    let defs = [
        (
            "H1",
            "map_size",
            Arm { label: "original", doubled: false, labeling: sd, difficulty: Difficulty::Hard },
            Arm { label: "doubled", doubled: true, labeling: sd, difficulty: Difficulty::Hard },
        ),
        (
            "H2",
            "task_difficulty",
            Arm { label: "easy", doubled: true, labeling: sd, difficulty: Difficulty::Easy },
            Arm { label: "hard", doubled: true, labeling: sd, difficulty: Difficulty::Hard },
        ),
        (
            "H3",
            "label_density",
            Arm {
                label: "dense",
                doubled: false,
                labeling: Some(LabelingScheme::Dense),
                difficulty: Difficulty::Hard,
            },
            Arm {
                label: "sparse",
                doubled: false,
                labeling: Some(LabelingScheme::Sparse),
                difficulty: Difficulty::Hard,
            },
        ),
    ];
    let hypotheses = defs
        .into_iter()
        .map(|(id, name, a, b)| {
            let ra: Vec<&TrialRecord> = records.iter().filter(|r| a.admits(r)).collect();
            let rb: Vec<&TrialRecord> = records.iter().filter(|r| b.admits(r)).collect();
            let mut result = HypothesisResult {
                id: id.into(),
                name: name.into(),
                arm_a: a.label.into(),
                arm_b: b.label.into(),
                available: false,
                reason: None,
                pooled: None,
                per_map: Vec::new(),
                significant: false,
            };
            let missing: Vec<&str> = [(&ra, a.label), (&rb, b.label)]
                .iter()
                .filter(|(r, _)| r.is_empty())
                .map(|(_, l)| *l)
                .collect();
            if !missing.is_empty() {
                result.reason = Some(format!("no graded trials in arm(s): {}", missing.join(", ")));
                return result;
            }
            let pooled = compare("pooled", &a, &b, &ra, &rb, options.alpha);
            result.available = true;
            result.significant = pooled.significant;
            result.pooled = Some(pooled);
            let maps: std::collections::BTreeSet<&str> =
                ra.iter().chain(&rb).map(|r| r.base_map_id.as_str()).collect();
            for m in maps {
                let ma: Vec<&TrialRecord> = ra.iter().copied().filter(|r| r.base_map_id == m).collect();
                let mb: Vec<&TrialRecord> = rb.iter().copied().filter(|r| r.base_map_id == m).collect();
                if !ma.is_empty() && !mb.is_empty() {
                    result.per_map.push(compare(m, &a, &b, &ma, &mb, options.alpha));
                }
            }
            result
        })
        .collect();
    HypothesisReport {
        alpha: options.alpha,
        total_trials: records.len(),
        infrastructure_failures: records.iter().filter(|r| r.is_infrastructure_failure()).count(),
        by_map: success_rate(records, &[GroupKey::MapLabel, GroupKey::Difficulty]),
        hypotheses,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl HypothesisReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per comparison (pooled first, then per map).
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "hypothesis", "name", "scope", "arm_a", "a_correct", "a_graded", "a_rate", "arm_b", "b_correct",
            "b_graded", "b_rate", "t", "df", "p_welch", "z", "p_z", "significant", "note",
        ])
        .unwrap();
        for h in &self.hypotheses {
            if !h.available {
                let reason = h.reason.clone().unwrap_or_default();
                let mut row = vec![h.id.clone(), h.name.clone(), "unavailable".into(), h.arm_a.clone()];
                row.extend(std::iter::repeat_n(String::new(), 3));
                row.push(h.arm_b.clone());
                row.extend(std::iter::repeat_n(String::new(), 9));
                row.push(reason);
                w.write_record(&row).unwrap();
                continue;
            }
            for c in h.pooled.iter().chain(&h.per_map) {
                w.write_record([
                    h.id.clone(),
                    h.name.clone(),
                    c.scope.clone(),
                    c.a.label.clone(),
                    c.a.correct.to_string(),
                    c.a.graded.to_string(),
                    opt(c.a.rate),
                    c.b.label.clone(),
                    c.b.correct.to_string(),
                    c.b.graded.to_string(),
                    opt(c.b.rate),
                    opt(c.welch.map(|t| t.t)),
                    opt(c.welch.map(|t| t.degrees_of_freedom)),
                    opt(c.welch.map(|t| t.p_two_sided)),
                    opt(c.z.map(|z| z.z)),
                    opt(c.z.map(|z| z.p_two_sided)),
                    c.significant.to_string(),
                    c.note.clone().unwrap_or_default(),
                ])
                .unwrap();
            }
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    /// Grouped bar chart of success rates: one pair of bars per scope.
    pub fn to_svg(&self, h: &HypothesisResult) -> String {
        const BAR: f64 = 28.0;
        const GAP: f64 = 24.0;
        const PLOT_H: f64 = 200.0;
        const TOP: f64 = 40.0;
        const LEFT: f64 = 50.0;
        let comps: Vec<&Comparison> = h.pooled.iter().chain(&h.per_map).collect();
        let width = LEFT + comps.len().max(1) as f64 * (2.0 * BAR + GAP) + GAP;
        let height = TOP + PLOT_H + 60.0;
        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
        )
        .unwrap();
        writeln!(s, r#"<text x="{LEFT}" y="20" font-size="14">{} {}</text>"#, h.id, escape(&h.name)).unwrap();
        for tick in 0..=4 {
            let v = tick as f64 / 4.0;
            let y = TOP + PLOT_H * (1.0 - v);
            writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{y}" x2="{width}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{v:.2}</text>"##,
                LEFT - 6.0,
                y + 4.0
            )
            .unwrap();
        }
        if comps.is_empty() {
            writeln!(
                s,
                r#"<text x="{LEFT}" y="{}">unavailable: {}</text>"#,
                TOP + PLOT_H / 2.0,
                escape(h.reason.as_deref().unwrap_or(""))
            )
            .unwrap();
        }
        for (i, c) in comps.iter().enumerate() {
            let x0 = LEFT + GAP + i as f64 * (2.0 * BAR + GAP);
            for (k, (arm, color)) in [(&c.a, "#4878a8"), (&c.b, "#d08040")].into_iter().enumerate() {
                let rate = arm.rate.unwrap_or(0.0);
                let bh = PLOT_H * rate;
                let x = x0 + k as f64 * BAR;
                writeln!(
                    s,
                    r#"<rect x="{x}" y="{}" width="{}" height="{bh}" fill="{color}"><title>{}: {}/{}</title></rect>"#,
                    TOP + PLOT_H - bh,
                    BAR - 2.0,
                    escape(&arm.label),
                    arm.correct,
                    arm.graded
                )
                .unwrap();
                writeln!(
                    s,
                    r#"<text x="{}" y="{}" text-anchor="middle">{rate:.2}</text>"#,
                    x + BAR / 2.0 - 1.0,
                    TOP + PLOT_H - bh - 4.0
                )
                .unwrap();
            }
            let mark = if c.significant { " *" } else { "" };
            writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{}{mark}</text>"#,
                x0 + BAR,
                TOP + PLOT_H + 16.0,
                escape(&c.scope)
            )
            .unwrap();
        }
        writeln!(
            s,
            r##"<text x="{LEFT}" y="{}"><tspan fill="#4878a8">{}</tspan> vs <tspan fill="#d08040">{}</tspan>; * p &lt; {}</text>"##,
            height - 12.0,
            escape(&h.arm_a),
            escape(&h.arm_b),
            self.alpha
        )
        .unwrap();
        s.push_str("</svg>\n");
        s
    }

    /// Writes `report.json`, `report.csv` and `<id>.svg` per hypothesis.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
        let mut files = vec![
            (dir.join("report.json"), self.to_json()),
            (dir.join("report.csv"), self.to_csv()),
        ];
        for h in &self.hypotheses {
            files.push((dir.join(format!("{}.svg", h.id.to_lowercase())), self.to_svg(h)));
        }
        for (path, body) in &files {
            std::fs::write(path, body).map_err(|e| BenchError::io(path, e))?;
        }
        Ok(files.into_iter().map(|(p, _)| p).collect())
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
