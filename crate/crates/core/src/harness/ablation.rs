use serde::{Deserialize, Serialize};

use super::runner::{mean, run_seed, RunRecord};
use super::{ControllerKind, ExperimentConfig, Scenario};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub controller: ControllerKind,
    pub final_att: Vec<f64>,
    pub mean_final_att: f64,
    pub mean_best_att: f64,
}

#[derive(Clone, Debug)]
pub struct AblationResult {
    pub rows: Vec<AblationRow>,
    pub records: Vec<RunRecord>,
    pub configs: Vec<ExperimentConfig>,
}

impl AblationResult {
    pub fn row(&self, k: ControllerKind) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.controller == k)
    }
}

/// Trains each listed variant on the same scenario with the same seeds
/// (paired comparison), in the given order.
pub fn ablation_suite(base: &ExperimentConfig, variants: &[ControllerKind]) -> Result<AblationResult> {
    base.validate()?;
    let scn = Scenario::build(&base.scenario)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut configs = Vec::new();
    for &v in variants {
        let mut cfg = base.clone();
        cfg.controller = v;
        cfg.validate()?;
        let recs = cfg
            .seeds
            .iter()
            .map(|&s| Ok(run_seed(&cfg, &scn, s)?.0))
            .collect::<Result<Vec<_>>>()?;
        let final_att: Vec<f64> = recs.iter().map(RunRecord::final_att).collect();
        rows.push(AblationRow {
            controller: v,
            mean_final_att: mean(&final_att),
            mean_best_att: mean(&recs.iter().map(RunRecord::best_att).collect::<Vec<_>>()),
            final_att,
        });
        records.extend(recs);
        configs.push(cfg);
    }
    Ok(AblationResult { rows, records, configs })
}

/// Markdown-style table of an ablation, one row per variant.
pub fn format_table(rows: &[AblationRow]) -> String {
    let mut s = String::from("| controller | mean final ATT | mean best ATT | per-seed final ATT |\n|---|---|---|---|\n");
    for r in rows {
        let per: Vec<String> = r.final_att.iter().map(|x| format!("{x:.2}")).collect();
        s.push_str(&format!(
            "| {} | {:.2} | {:.2} | {} |\n",
            r.controller,
            r.mean_final_att,
            r.mean_best_att,
            per.join(", ")
        ));
    }
    s
}
