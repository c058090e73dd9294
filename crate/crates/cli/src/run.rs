use std::collections::{BTreeMap, BTreeSet};
use std::error::Error as StdError;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use aiou_core::labels::read_predictions;
use aiou_core::planner::{apply_plan, attainable_interval, original_counts, Attainable, PlanRow};
use aiou_core::scoring::{write_reports_csv, MergedReport};
use aiou_core::stats::{default_n_ref, WorstGroup};
use aiou_core::synth::{BACKGROUND_MASK, OBJECT_MASK, PROTECTED_ATTRIBUTE, TARGET_ATTRIBUTE};
use aiou_core::{
    average_map, average_precision, gen_bias_fixture, heatmap_score, mask_score, mcc_labels,
    merge_reports, normalized_average_precision, read_container, read_labels, sweep,
    worst_group_accuracy, write_container, BiasFixture, Error, LabelSource, LabelTable, Map,
    MapContainer, RecordKind, ScoreKind, ScoreReport, Stratification,
};
use serde::{Deserialize, Serialize};

use crate::args::{
    Command, Format, Grouping, MergeArgs, Output, PlanArgs, ScoreHeatmapArgs, ScoreMaskArgs,
    SynthArgs, ValidateArgs,
};
use crate::config::RunConfig;

pub type CmdResult<T> = Result<T, Box<dyn StdError>>;

/// Analysis-level problems that still let the command produce its output.
#[derive(Debug, Default)]
pub struct Warnings(pub Vec<String>);

impl Warnings {
    fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }
}

pub fn run(cmd: &Command, cfg: &RunConfig) -> CmdResult<Warnings> {
    let mut warnings = Warnings::default();
    match cmd {
        Command::ScoreMask(a) => score_mask(a, cfg, &mut warnings)?,
        Command::ScoreHeatmap(a) => score_heatmap(a, cfg, &mut warnings)?,
        Command::Plan(a) => plan(a, cfg)?,
        Command::Synth(a) => synth(a, cfg)?,
        Command::Validate(a) => validate(a, cfg, &mut warnings)?,
        Command::Merge(a) => merge(a, cfg)?,
    }
    Ok(warnings)
}

fn open(path: &Path) -> CmdResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| format!("Io: {}: {e}", path.display()).into())
}

fn load_container(path: &Path) -> CmdResult<MapContainer> {
    read_container(open(path)?).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_labels(labels: &Path, predictions: Option<&Path>) -> CmdResult<LabelTable> {
    let mut table = read_labels(open(labels)?).map_err(|e| format!("{}: {e}", labels.display()))?;
    if let Some(p) = predictions {
        let preds = read_predictions(open(p)?).map_err(|e| format!("{}: {e}", p.display()))?;
        table.attach_predictions(&preds)?;
    }
    Ok(table)
}

/// Labels for grouping, if given. `protected_needs_labels` is false when the
/// protected attribute is also used for something other than grouping.
fn grouping_labels(g: &Grouping, protected_needs_labels: bool) -> CmdResult<Option<LabelTable>> {
    if g.use_predictions && g.predictions.is_none() {
        return Err("usage: --use-predictions needs --predictions".into());
    }
    if g.predictions.is_some() && g.labels.is_none() {
        return Err("usage: --predictions needs --labels".into());
    }
    match (&g.labels, &g.protected) {
        (Some(l), _) => Ok(Some(load_labels(l, g.predictions.as_deref())?)),
        (None, Some(_)) if protected_needs_labels => Err("usage: --protected needs --labels".into()),
        (None, _) => Ok(None),
    }
}

fn source(g: &Grouping) -> LabelSource {
    if g.use_predictions {
        LabelSource::Predicted
    } else {
        LabelSource::GroundTruth
    }
}

fn emit(out: &Output, cfg: &RunConfig, json: impl Serialize, csv: impl FnOnce(&mut Vec<u8>) -> CmdResult<()>) -> CmdResult<()> {
    let mut bytes = Vec::new();
    match out.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a, T> {
                config: &'a RunConfig,
                #[serde(flatten)]
                body: T,
            }
            serde_json::to_writer_pretty(&mut bytes, &Doc { config: cfg, body: json })?;
            bytes.push(b'\n');
        }
        Format::Csv => {
            writeln!(bytes, "# config: {}", serde_json::to_string(cfg)?)?;
            csv(&mut bytes)?;
        }
    }
    write_out(out.out.as_deref(), &bytes)
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> CmdResult<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| format!("Io: {}: {e}", p.display()).into()),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(bytes)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn report_warnings(r: &ScoreReport, w: &mut Warnings) {
    if r.skipped_degenerate > 0 {
        w.push(format!(
            "{}/{}: skipped {} images with an all-zero map",
            r.target, r.reference, r.skipped_degenerate
        ));
    }
    if r.unmatched > 0 {
        w.push(format!(
            "{}/{}: {} images present in only one input",
            r.target, r.reference, r.unmatched
        ));
    }
    if r.all_groups_excluded() {
        w.push(format!(
            "{}/{}: every group falls below the exclusion threshold",
            r.target, r.reference
        ));
    }
}

fn map_csv(m: &Map) -> String {
    let mut s = String::new();
    for r in 0..m.height() {
        let row: Vec<String> = (0..m.width()).map(|c| m.get(r, c).to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn score_mask(a: &ScoreMaskArgs, cfg: &RunConfig, warnings: &mut Warnings) -> CmdResult<()> {
    let labels = grouping_labels(&a.grouping, true)?;
    let attn = load_container(&a.maps)?.select(&a.target);
    if attn.is_empty() {
        return Err(Error::UnknownAttribute(a.target.clone()).into());
    }
    let masks = load_container(&a.masks)?.select(&a.reference);
    if masks.is_empty() {
        return Err(Error::UnknownAttribute(a.reference.clone()).into());
    }
    let mut report = mask_score(&a.target, &a.reference, &attn, &masks)?;
    let mut worst_group = None;
    if let (Some(labels), Some(protected)) = (&labels, &a.grouping.protected) {
        let strata = Stratification {
            source: source(&a.grouping),
            threshold: a.grouping.threshold,
            ..Stratification::new(labels, &a.target, protected)
        };
        report = report.stratified(&strata)?;
        if labels.has_predictions(&a.target) {
            match worst_group_accuracy(labels, &a.target, protected, a.grouping.threshold) {
                Ok(w) => worst_group = Some(w),
                Err(Error::AllGroupsExcluded) => {
                    warnings.push("worst-group accuracy: every group excluded")
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    report_warnings(&report, warnings);

    if let Some(path) = &a.average_map {
        let avg = average_map(attn.values())?;
        write_out(Some(path), map_csv(&avg).as_bytes())?;
    }

    #[derive(Serialize)]
    struct Body<'a> {
        reports: [&'a ScoreReport; 1],
        worst_group: Option<WorstGroup>,
    }
    let reports = [&report];
    emit(
        &a.output,
        cfg,
        Body {
            reports,
            worst_group,
        },
        |buf| Ok(write_reports_csv(&[report.clone()], buf)?),
    )
}

#[derive(Debug, Serialize)]
struct HeatmapRow {
    target: String,
    reference: String,
    score_mean: f64,
    score_std: f64,
    n: usize,
    mcc: Option<f64>,
    abs_mcc: Option<f64>,
    mcc_source: Option<&'static str>,
    ap: Option<f64>,
    ap_n: Option<f64>,
}

fn score_heatmap(a: &ScoreHeatmapArgs, cfg: &RunConfig, warnings: &mut Warnings) -> CmdResult<()> {
    let protected = a
        .grouping
        .protected
        .as_deref()
        .ok_or("usage: score-heatmap needs --protected")?;
    let labels = grouping_labels(&a.grouping, false)?;
    let container = load_container(&a.maps)?;
    let reference_maps = container.select(protected);
    if reference_maps.is_empty() {
        return Err(Error::UnknownAttribute(protected.to_owned()).into());
    }

    let n_ref = match (a.n_ref, &labels) {
        (Some(n), _) => Some(n),
        (None, Some(l)) => {
            let counts = a
                .target
                .iter()
                .map(|t| l.positive_count(t))
                .collect::<aiou_core::Result<Vec<_>>>()?;
            default_n_ref(&counts).filter(|&n| n > 0.0)
        }
        (None, None) => None,
    };

    let mut reports = Vec::with_capacity(a.target.len());
    let mut rows = Vec::with_capacity(a.target.len());
    for target in &a.target {
        let maps = container.select(target);
        if maps.is_empty() {
            return Err(Error::UnknownAttribute(target.clone()).into());
        }
        let mut report = heatmap_score(target, protected, &maps, &reference_maps)?;
        let mut row = HeatmapRow {
            target: target.clone(),
            reference: protected.to_owned(),
            score_mean: report.overall_mean,
            score_std: report.overall_std,
            n: report.n,
            mcc: None,
            abs_mcc: None,
            mcc_source: None,
            ap: None,
            ap_n: None,
        };
        if let Some(labels) = &labels {
            let strata = Stratification {
                source: source(&a.grouping),
                threshold: a.grouping.threshold,
                ..Stratification::new(labels, target, protected)
            };
            report = report.stratified(&strata)?;
            let (src, name) = if labels.has_predictions(target) && labels.has_predictions(protected) {
                (LabelSource::Predicted, "predicted")
            } else {
                (LabelSource::GroundTruth, "ground_truth")
            };
            match mcc_labels(labels, target, protected, src) {
                Ok(m) => {
                    row.mcc = Some(m);
                    row.abs_mcc = Some(m.abs());
                    row.mcc_source = Some(name);
                }
                Err(Error::UndefinedMcc) => warnings.push(format!("{target}: MCC undefined")),
                Err(e) => return Err(e.into()),
            }
            if let Some(scores) = labels.scores(target)? {
                let truth = labels.truth(target)?;
                match average_precision(scores, truth) {
                    Ok(ap) => row.ap = Some(ap),
                    Err(Error::NoPositives) => warnings.push(format!("{target}: no positive labels")),
                    Err(e) => return Err(e.into()),
                }
                if let (Some(_), Some(n)) = (row.ap, n_ref) {
                    row.ap_n = Some(normalized_average_precision(scores, truth, n)?);
                }
            }
        }
        report_warnings(&report, warnings);
        reports.push(report);
        rows.push(row);
    }

    #[derive(Serialize)]
    struct Body<'a> {
        reports: &'a [ScoreReport],
        rows: &'a [HeatmapRow],
    }
    emit(
        &a.output,
        cfg,
        Body {
            reports: &reports,
            rows: &rows,
        },
        |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record([
                "target", "reference", "score_mean", "score_std", "n", "mcc", "abs_mcc",
                "mcc_source", "ap", "ap_n",
            ])?;
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            for r in &rows {
                w.write_record([
                    r.target.clone(),
                    r.reference.clone(),
                    r.score_mean.to_string(),
                    r.score_std.to_string(),
                    r.n.to_string(),
                    opt(r.mcc),
                    opt(r.abs_mcc),
                    r.mcc_source.unwrap_or_default().to_owned(),
                    opt(r.ap),
                    opt(r.ap_n),
                ])?;
            }
            w.flush()?;
            Ok(())
        },
    )
}

fn plan(a: &PlanArgs, cfg: &RunConfig) -> CmdResult<()> {
    let labels = load_labels(&a.labels, None)?;
    let counts = original_counts(&labels, &a.target, &a.protected)?;
    let ascending = a.targets.windows(2).all(|w| w[0] <= w[1]);
    let descending = a.targets.windows(2).all(|w| w[0] >= w[1]);
    if !(ascending || descending) {
        return Err("usage: --targets must be sorted".into());
    }
    let attainable = attainable_interval(&counts)?;
    let plans = sweep(&counts, &a.targets)?;

    if let Some(dir) = &a.subsets {
        fs::create_dir_all(dir).map_err(|e| format!("Io: {}: {e}", dir.display()))?;
        for (i, p) in plans.iter().enumerate() {
            let rows = apply_plan(&labels, &a.target, &a.protected, p)?;
            let subset = labels.subset(&rows)?;
            let path = dir.join(format!("plan_{i:02}.csv"));
            let mut w = BufWriter::new(
                File::create(&path).map_err(|e| format!("Io: {}: {e}", path.display()))?,
            );
            subset.write_csv(&mut w)?;
            w.flush()?;
        }
    }

    #[derive(Serialize)]
    struct Body {
        original: [u64; 4],
        attainable: Attainable,
        plans: Vec<PlanRow>,
    }
    let rows: Vec<PlanRow> = plans.iter().map(|p| p.row()).collect();
    emit(
        &a.output,
        cfg,
        Body {
            original: counts.as_array(),
            attainable,
            plans: rows.clone(),
        },
        |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record([
                "target_mcc", "planned_n11", "planned_n10", "planned_n01", "planned_n00",
                "rounded_n11", "rounded_n10", "rounded_n01", "rounded_n00", "achieved_mcc",
                "l2_distance", "total",
            ])?;
            for r in &rows {
                let mut rec = vec![r.target_mcc.to_string()];
                rec.extend(r.planned.iter().map(|v| v.to_string()));
                rec.extend(r.rounded.iter().map(|v| v.to_string()));
                rec.push(r.achieved_mcc.to_string());
                rec.push(r.l2_distance.to_string());
                rec.push(r.total.to_string());
                w.write_record(&rec)?;
            }
            w.flush()?;
            Ok(())
        },
    )
}

fn synth(a: &SynthArgs, cfg: &RunConfig) -> CmdResult<()> {
    let fixture = BiasFixture {
        n_images: a.images,
        map_size: (a.size, a.size),
        mask_scale: a.mask_scale,
        leakage: a.leakage,
        seed: a.seed,
    };
    let set = gen_bias_fixture(&fixture)?;
    fs::create_dir_all(&a.out).map_err(|e| format!("Io: {}: {e}", a.out.display()))?;
    let create = |name: &str| -> CmdResult<BufWriter<File>> {
        let path = a.out.join(name);
        Ok(BufWriter::new(
            File::create(&path).map_err(|e| format!("Io: {}: {e}", path.display()))?,
        ))
    };
    write_container(&set.attention.records, create("attention.aiou")?)?;
    write_container(&set.masks.records, create("masks.aiou")?)?;
    let mut labels = create("labels.csv")?;
    set.labels.write_csv(&mut labels)?;
    labels.flush()?;

    #[derive(Serialize)]
    struct Fixture<'a> {
        config: &'a RunConfig,
        target: &'static str,
        protected: &'static str,
        masks: [&'static str; 2],
    }
    let mut meta = serde_json::to_vec_pretty(&Fixture {
        config: cfg,
        target: TARGET_ATTRIBUTE,
        protected: PROTECTED_ATTRIBUTE,
        masks: [OBJECT_MASK, BACKGROUND_MASK],
    })?;
    meta.push(b'\n');
    write_out(Some(&a.out.join("fixture.json")), &meta)
}

#[derive(Debug, Serialize)]
struct ContainerSummary {
    path: String,
    version: u8,
    records: usize,
    attention_records: usize,
    mask_records: usize,
    images: usize,
    features: Vec<String>,
    degenerate: Vec<String>,
    mask_out_of_range: Vec<String>,
}

fn summarize(path: &Path) -> CmdResult<(ContainerSummary, BTreeSet<String>)> {
    let c = load_container(path)?;
    let count = |k: RecordKind| c.records.iter().filter(|r| r.kind == k).count();
    let ids: BTreeSet<String> = c.image_ids().into_iter().collect();
    let summary = ContainerSummary {
        path: path.display().to_string(),
        version: c.version,
        records: c.records.len(),
        attention_records: count(RecordKind::Attention),
        mask_records: count(RecordKind::Mask),
        images: ids.len(),
        features: c.features(),
        degenerate: c
            .records
            .iter()
            .filter(|r| r.map.is_degenerate())
            .map(|r| r.name.clone())
            .collect(),
        mask_out_of_range: c
            .records
            .iter()
            .filter(|r| r.kind == RecordKind::Mask && r.map.data().iter().any(|&v| v > 1.0))
            .map(|r| r.name.clone())
            .collect(),
    };
    Ok((summary, ids))
}

fn validate(a: &ValidateArgs, cfg: &RunConfig, warnings: &mut Warnings) -> CmdResult<()> {
    if a.maps.is_none() && a.masks.is_none() && a.labels.is_none() {
        return Err("usage: validate needs --maps, --masks or --labels".into());
    }
    let mut containers = Vec::new();
    let mut id_sets: Vec<(String, BTreeSet<String>)> = Vec::new();
    for p in [&a.maps, &a.masks].into_iter().flatten() {
        let (summary, ids) = summarize(p)?;
        for name in &summary.mask_out_of_range {
            warnings.push(format!("{}: mask {name} has values above 1", summary.path));
        }
        id_sets.push((summary.path.clone(), ids));
        containers.push(summary);
    }

    #[derive(Serialize)]
    struct LabelSummary {
        path: String,
        images: usize,
        attributes: Vec<String>,
        positives: BTreeMap<String, usize>,
        predictions: bool,
    }
    let mut label_summary = None;
    if let Some(l) = &a.labels {
        let table = load_labels(l, a.predictions.as_deref())?;
        let positives = table
            .attributes()
            .iter()
            .map(|attr| Ok((attr.clone(), table.positive_count(attr)?)))
            .collect::<aiou_core::Result<BTreeMap<_, _>>>()?;
        id_sets.push((
            l.display().to_string(),
            table.image_ids().iter().cloned().collect(),
        ));
        label_summary = Some(LabelSummary {
            path: l.display().to_string(),
            images: table.len(),
            attributes: table.attributes().to_vec(),
            positives,
            predictions: a.predictions.is_some(),
        });
    }

    // ids missing from at least one input, listed per input that lacks them
    let all: BTreeSet<&String> = id_sets.iter().flat_map(|(_, s)| s.iter()).collect();
    let mut orphans: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (path, ids) in &id_sets {
        let missing: Vec<String> = all.iter().filter(|id| !ids.contains(**id)).map(|id| (*id).clone()).collect();
        if !missing.is_empty() {
            warnings.push(format!("{path}: {} image ids missing", missing.len()));
            orphans.insert(path.clone(), missing);
        }
    }

    #[derive(Serialize)]
    struct Body {
        containers: Vec<ContainerSummary>,
        labels: Option<LabelSummary>,
        missing_ids: BTreeMap<String, Vec<String>>,
        ok: bool,
    }
    let ok = warnings.0.is_empty();
    let body = Body {
        containers,
        labels: label_summary,
        missing_ids: orphans,
        ok,
    };
    emit(&a.output, cfg, &body, |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["input", "check", "value"])?;
        for c in &body.containers {
            w.write_record([&c.path, "records", &c.records.to_string()])?;
            w.write_record([&c.path, "images", &c.images.to_string()])?;
            w.write_record([&c.path, "degenerate", &c.degenerate.len().to_string()])?;
            w.write_record([&c.path, "mask_out_of_range", &c.mask_out_of_range.len().to_string()])?;
        }
        if let Some(l) = &body.labels {
            w.write_record([&l.path, "images", &l.images.to_string()])?;
        }
        for (path, ids) in &body.missing_ids {
            for id in ids {
                w.write_record([path.as_str(), "missing_id", id])?;
            }
        }
        w.flush()?;
        Ok(())
    })
}

fn merge(a: &MergeArgs, cfg: &RunConfig) -> CmdResult<()> {
    #[derive(Deserialize)]
    struct ReportFile {
        reports: Vec<ScoreReport>,
    }
    let mut groups: BTreeMap<(&'static str, String, String), Vec<ScoreReport>> = BTreeMap::new();
    for path in &a.reports {
        let file: ReportFile = serde_json::from_reader(open(path)?)
            .map_err(|e| format!("{}: not a JSON score report: {e}", path.display()))?;
        for r in file.reports {
            let kind = match r.score_kind {
                ScoreKind::Mask => "mask",
                ScoreKind::Heatmap => "heatmap",
            };
            groups
                .entry((kind, r.target.clone(), r.reference.clone()))
                .or_default()
                .push(r);
        }
    }
    let merged = groups
        .values()
        .map(|rs| merge_reports(rs))
        .collect::<aiou_core::Result<Vec<MergedReport>>>()?;

    #[derive(Serialize)]
    struct Body<'a> {
        merged: &'a [MergedReport],
    }
    emit(&a.output, cfg, Body { merged: &merged }, |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["score_kind", "target", "reference", "group", "models", "mean", "std"])?;
        for m in &merged {
            let kind = match m.score_kind {
                ScoreKind::Mask => "mask",
                ScoreKind::Heatmap => "heatmap",
            };
            let mut row = |group: String, s: Option<&aiou_core::scoring::MeanStd>| {
                w.write_record([
                    kind.to_owned(),
                    m.target.clone(),
                    m.reference.clone(),
                    group,
                    s.map(|s| s.models.to_string()).unwrap_or_else(|| "0".into()),
                    s.map(|s| s.mean.to_string()).unwrap_or_default(),
                    s.map(|s| s.std.to_string()).unwrap_or_default(),
                ])
            };
            row("all".into(), Some(&m.overall))?;
            for g in &m.per_group {
                row(g.group.label(), g.score.as_ref())?;
            }
        }
        w.flush()?;
        Ok(())
    })
}
