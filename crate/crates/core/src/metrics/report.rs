use std::fmt;

use serde::Serialize;

use super::{
    accuracy, auc_ovr_macro, confusion, joint_accuracy, precision_recall_f1, Averaging,
    PredictionRecord, Task,
};
use crate::dataset::DatasetSchema;
use crate::Result;

/// Metrics for one grading task, keyed like a results-table row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskMetrics {
    pub acc: f64,
    /// `None` when fewer than two true classes are present.
    pub auc: Option<f64>,
    pub pre: f64,
    pub rec: f64,
    pub f1: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub auc_skipped_classes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub schema: String,
    pub averaging: Averaging,
    pub records: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint_acc: Option<f64>,
    pub dr: TaskMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dme: Option<TaskMetrics>,
}

fn task_metrics(records: &[PredictionRecord], task: Task, avg: Averaging) -> Result<TaskMetrics> {
    let cm = confusion(records, task)?;
    let prf = precision_recall_f1(&cm).averaged(avg);
    let (auc, skipped) = match auc_ovr_macro(records, task) {
        Ok(s) => (Some(s.macro_auc), s.skipped),
        Err(_) => (None, Vec::new()),
    };
    Ok(TaskMetrics {
        acc: accuracy(&cm)?,
        auc,
        pre: prf.precision,
        rec: prf.recall,
        f1: prf.f1,
        auc_skipped_classes: skipped,
    })
}

/// Macro-averaged report.
pub fn report(records: &[PredictionRecord], schema: &DatasetSchema) -> Result<MetricsReport> {
    report_with(records, schema, Averaging::Macro)
}

/// DME columns and joint accuracy appear only when every record carries a
/// DME prediction.
pub fn report_with(
    records: &[PredictionRecord],
    schema: &DatasetSchema,
    averaging: Averaging,
) -> Result<MetricsReport> {
    let has_dme = !records.is_empty() && records.iter().all(|r| r.prob_dme.is_some());
    let dr = task_metrics(records, Task::Dr, averaging)?;
    let (dme, joint_acc) = if has_dme {
        (
            Some(task_metrics(records, Task::Dme, averaging)?),
            Some(joint_accuracy(records)?),
        )
    } else {
        (None, None)
    };
    Ok(MetricsReport {
        schema: schema.name.clone(),
        averaging,
        records: records.len(),
        joint_acc,
        dr,
        dme,
    })
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Table-style rendering: `Joint Acc | Acc AUC Pre Rec F1` per task.
impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |v: Option<f64>| v.map_or_else(|| "  -  ".to_string(), |v| format!("{v:.3}"));
        let row = |t: &TaskMetrics| {
            format!(
                "{}  {}  {}  {}  {}",
                cell(Some(t.acc)),
                cell(t.auc),
                cell(Some(t.pre)),
                cell(Some(t.rec)),
                cell(Some(t.f1))
            )
        };
        if let (Some(j), Some(dme)) = (self.joint_acc, &self.dme) {
            writeln!(f, "Joint Acc  | DR: Acc    AUC    Pre    Rec    F1    | DME: Acc    AUC    Pre    Rec    F1")?;
            writeln!(
                f,
                "{}      |     {} |      {}",
                cell(Some(j)),
                row(&self.dr),
                row(dme)
            )
        } else {
            writeln!(f, "DR: Acc    AUC    Pre    Rec    F1")?;
            writeln!(f, "    {}", row(&self.dr))
        }
    }
}
