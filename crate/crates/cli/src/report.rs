use std::path::{Path, PathBuf};

use r2s_core::agreement::{detection_agreement, AgreementConfig, AgreementResult};
use r2s_core::analysis::{gap_table, GapTable, MethodResults};
use r2s_core::det_eval::{evaluate_detections, DetEvalConfig, DetEvalReport};
use r2s_core::model::{merge_boxes, FrameBoxes};
use r2s_core::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::{load_manifests, read_json, to_json, write_file};
use crate::ReportArgs;

/// Run description for `report --config`. Paths are relative to the file.
#[derive(Debug, Deserialize)]
struct RunConfig {
    gt: Vec<PathBuf>,
    #[serde(default)]
    baseline: Option<String>,
    #[serde(default)]
    detection: DetEvalConfig,
    #[serde(default)]
    agreement: AgreementConfig,
    methods: Vec<MethodRun>,
}

#[derive(Debug, Deserialize)]
struct MethodRun {
    name: String,
    real: Vec<PathBuf>,
    sim: Vec<PathBuf>,
}

/// Input of `report --table`.
#[derive(Debug, Deserialize)]
struct TableInput {
    columns: Vec<String>,
    #[serde(default)]
    baseline: Option<String>,
    methods: Vec<MethodResults>,
}

#[derive(Serialize)]
struct MethodDetail {
    method: String,
    real: DetEvalReport,
    sim: DetEvalReport,
    agreement: AgreementResult,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    table: &'a GapTable,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    details: Vec<MethodDetail>,
}

const COLUMNS: [&str; 3] = ["mAP", "NDS", "DA"];

fn resolve(base: &Path, paths: &[PathBuf]) -> Vec<PathBuf> {
    paths.iter().map(|p| if p.is_absolute() { p.clone() } else { base.join(p) }).collect()
}

fn evaluate_method(
    m: &MethodRun,
    base: &Path,
    gt: &FrameBoxes,
    det: &DetEvalConfig,
    agree: &AgreementConfig,
) -> Result<(MethodResults, MethodDetail)> {
    let real = merge_boxes(&load_manifests(&resolve(base, &m.real))?);
    let sim = merge_boxes(&load_manifests(&resolve(base, &m.sim))?);
    let real_report = evaluate_detections(&real, gt, det)?;
    let sim_report = evaluate_detections(&sim, gt, det)?;
    let self_agreement = detection_agreement(&real, &real, agree)?;
    let agreement = detection_agreement(&real, &sim, agree)?;
    let row = |r: &DetEvalReport, da: f64| vec![Some(100.0 * r.map_score), Some(100.0 * r.nds), Some(da)];
    Ok((
        MethodResults {
            method: m.name.clone(),
            real: row(&real_report, self_agreement.da),
            sim: row(&sim_report, agreement.da),
        },
        MethodDetail {
            method: m.name.clone(),
            real: real_report,
            sim: sim_report,
            agreement,
        },
    ))
}

fn write_outputs(out: &Path, table: &GapTable, details: Vec<MethodDetail>) -> Result<()> {
    let md = format!("# Real2sim gap\n\nGap (%) is measured against the real row of `{}`.\n\n{}", table.baseline, table.to_markdown());
    write_file(&out.join("report.md"), &md)?;
    write_file(&out.join("report.csv"), &table.to_csv())?;
    write_file(&out.join("report.json"), &to_json(&ReportJson { table, details }))
}

pub fn run(args: ReportArgs) -> Result<()> {
    if let Some(path) = &args.table {
        let input: TableInput = read_json(path)?;
        let baseline = args.baseline.as_deref().or(input.baseline.as_deref());
        let table = gap_table(&input.columns, &input.methods, baseline)?;
        return write_outputs(&args.out, &table, Vec::new());
    }

    let path = args.config.as_ref().expect("clap enforces --config or --table");
    let config: RunConfig = read_json(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let gt = merge_boxes(&load_manifests(&resolve(base, &config.gt))?);
    let evaluated: Vec<(MethodResults, MethodDetail)> = config
        .methods
        .par_iter()
        .map(|m| evaluate_method(m, base, &gt, &config.detection, &config.agreement))
        .collect::<Result<_>>()?;
    let (rows, details): (Vec<_>, Vec<_>) = evaluated.into_iter().unzip();
    let columns: Vec<String> = COLUMNS.iter().map(|c| c.to_string()).collect();
    let baseline = args.baseline.as_deref().or(config.baseline.as_deref());
    let table = gap_table(&columns, &rows, baseline)?;
    write_outputs(&args.out, &table, details)
}
