use std::path::{Path, PathBuf};
use std::sync::Arc;

use mlat_core::dataset::{
    generate_synthetic, summarize, Dataset, DatasetSummary, FeatureSet, GeneratorSpec, RawFeature,
    RawFeatures, FEATURE_NAMES,
};
use mlat_core::gbdt::fit_named;
use mlat_core::metrics::{
    ablation, compare_models, compute_metrics, cross_validate_with, overfit_ratio, MetricsReport,
    ModelSpec,
};
use mlat_core::presets::{layout_fixture, pinned_model};
use mlat_core::report::{table, usd};
use mlat_core::schema::{
    DRAFT_SCHEMA_JSON, RESEARCH_SCHEMA_JSON, SCORE_SCHEMA_JSON, TRANSCRIPT_FACTS_SCHEMA_JSON,
};
use mlat_core::sensitivity::{
    monotonicity_check, sweep_ratio, tech_stack_sweep, typical_baseline, univariate_sweep,
    Direction, MonotonicityReport, SensitivityCurve,
};
use mlat_core::splits::{group_kfold, group_shuffle_split, verify_no_leakage, LeakageReport, SplitPlan};
use mlat_core::{GbdtModel, Hyperparameters};
use mlat_runtime::{
    http_pricing_tool, local_pricing_tool, run_pipeline, standard_registry, ExternalAdapter,
    LlmClient, LlmError, PipelineError, ResearchStubs, ScriptedMock, StageError, ToolError,
};
use mlat_service::{model_version, PricingService};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::{CliError, Command, DataArgs, HpArgs, ModelKind, PartitionArgs, SchemaAction, SchemaName};

pub fn dispatch(command: Command, cfg: &Config, json: bool) -> Result<String, CliError> {
    match command {
        Command::GenData {
            spec,
            n,
            seed,
            layout_fixture: fixture,
            out,
        } => gen_data(cfg, spec.as_deref(), n, seed, fixture, out.as_deref()),
        Command::Summarize { data } => {
            let s = summarize(&load_dataset(&data, cfg)?)?;
            emit(json, &s, || render_summary(&s))
        }
        Command::Split {
            data,
            test_fraction,
            seed,
            out,
        } => split(cfg, &data, test_fraction, seed, out.as_deref(), json),
        Command::Kfold { data, k, split, out } => kfold(cfg, &data, k, split.as_deref(), out.as_deref(), json),
        Command::Train {
            data,
            partition,
            hp,
            out_model,
        } => train(cfg, &data, &partition, &hp, out_model.as_deref(), json),
        Command::Cv {
            data,
            partition,
            hp,
            folds,
            model,
            alpha,
            metrics_out,
        } => {
            let ds = load_dataset(&data, cfg)?;
            let (eval, _) = partition_of(&ds, &partition, cfg)?;
            let plan = group_kfold(&eval, folds.unwrap_or(cfg.folds))?;
            let spec = model_spec(model, hyperparameters(cfg, &hp)?, alpha)?;
            let reference = ds.target_mean().ok_or(mlat_core::metrics::MetricsError::Empty)?;
            let report = cross_validate_with(&eval, &spec, &plan, &FeatureSet::full(), reference)?;
            if let Some(p) = metrics_out {
                write(&p, &to_json(&report))?;
            }
            emit(json, &report, || report.render())
        }
        Command::Compare {
            data,
            hp,
            folds,
            test_fraction,
            seed,
            alpha,
        } => {
            let ds = load_dataset(&data, cfg)?;
            let split = group_shuffle_split(
                &ds,
                test_fraction.unwrap_or(cfg.test_fraction),
                seed.unwrap_or(cfg.seed),
            )?;
            let plan = group_kfold(&ds.subset(&split.train_indices), folds.unwrap_or(cfg.folds))?;
            let specs = [
                model_spec(ModelKind::Gbdt, hyperparameters(cfg, &hp)?, alpha)?,
                model_spec(ModelKind::Ridge, Hyperparameters::default(), alpha)?,
            ];
            let report = compare_models(&ds, &split, &plan, &specs)?;
            emit(json, &report, || report.render())
        }
        Command::Ablate {
            data,
            partition,
            hp,
            folds,
            drop,
        } => {
            let ds = load_dataset(&data, cfg)?;
            let (eval, _) = partition_of(&ds, &partition, cfg)?;
            let plan = group_kfold(&eval, folds.unwrap_or(cfg.folds))?;
            let spec = model_spec(ModelKind::Gbdt, hyperparameters(cfg, &hp)?, 1.0)?;
            let report = ablation(&eval, &plan, &spec, &drop)?;
            emit(json, &report, || report.render())
        }
        Command::Sensitivity {
            model,
            baseline,
            feature,
            values,
            csv,
        } => sensitivity(model.as_deref(), baseline.as_deref(), &feature, values, csv.as_deref(), json),
        Command::Serve { model, bind } => {
            let service = PricingService::new(load_model(model.as_deref())?)
                .map_err(|e| CliError::Invalid(e.to_string()))?;
            mlat_service::serve_blocking(service, bind.as_deref().unwrap_or(&cfg.bind)).map_err(|e| match e {
                mlat_service::ServiceError::Bind { .. } | mlat_service::ServiceError::Io(_) => {
                    CliError::Failed(e.to_string())
                }
                other => CliError::Invalid(other.to_string()),
            })?;
            Ok(String::new())
        }
        Command::Pipeline {
            transcript,
            mock_fixtures,
            research_stubs,
            pricing_url,
            model,
            template,
            out,
        } => pipeline(
            cfg,
            PipelinePaths {
                transcript: transcript.or_else(|| cfg.transcript.clone()),
                mock_fixtures: mock_fixtures.or_else(|| cfg.mock_fixtures.clone()),
                research_stubs: research_stubs.or_else(|| cfg.research_stubs.clone()),
                template: template.or_else(|| cfg.template.clone()),
            },
            pricing_url,
            model.as_deref(),
            out.as_deref(),
            json,
        ),
        Command::Schema {
            action: SchemaAction::Dump { name },
        } => Ok(match name {
            SchemaName::Research => RESEARCH_SCHEMA_JSON,
            SchemaName::Draft => DRAFT_SCHEMA_JSON,
            SchemaName::TranscriptFacts => TRANSCRIPT_FACTS_SCHEMA_JSON,
            SchemaName::Score => SCORE_SCHEMA_JSON,
        }
        .to_string()),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) -> Result<String, CliError> {
    if json {
        return Ok(to_json(value));
    }
    let mut s = text();
    if !s.ends_with('\n') {
        s.push('\n');
    }
    Ok(s)
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Failed(format!("cannot write {}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn load_dataset(args: &DataArgs, cfg: &Config) -> Result<Dataset, CliError> {
    match args.data.as_ref().or(cfg.data.as_ref()) {
        Some(p) => Ok(Dataset::load_csv(p)?),
        None => Ok(generate_synthetic(&cfg.generator, cfg.n)?),
    }
}

fn load_model(path: Option<&Path>) -> Result<GbdtModel, CliError> {
    Ok(match path {
        Some(p) => GbdtModel::load(p)?,
        None => pinned_model()?,
    })
}

fn hyperparameters(cfg: &Config, args: &HpArgs) -> Result<Hyperparameters, CliError> {
    let mut hp = cfg.hyperparameters.clone();
    for o in &args.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--hp expects NAME=VALUE, got {o:?}")))?;
        hp = hp.with_override(k.trim(), v.trim())?;
    }
    Ok(hp)
}

fn model_spec(kind: ModelKind, hp: Hyperparameters, alpha: f64) -> Result<ModelSpec, CliError> {
    Ok(match kind {
        ModelKind::Gbdt => ModelSpec::Gbdt { hyperparameters: hp },
        ModelKind::Ridge => {
            if !(alpha.is_finite() && alpha >= 0.0) {
                return Err(CliError::Invalid(format!("ridge alpha must be finite and >= 0, got {alpha}")));
            }
            ModelSpec::Ridge { alpha }
        }
    })
}

fn checked_plan(ds: &Dataset, plan: SplitPlan) -> Result<SplitPlan, CliError> {
    let leakage = verify_no_leakage(&plan, ds)?;
    if !leakage.ok {
        return Err(CliError::Invalid(format!(
            "split plan puts groups on both sides: {}",
            leakage.offending_groups.join(", ")
        )));
    }
    Ok(plan)
}

/// The records to evaluate on and the split they came from.
fn partition_of(ds: &Dataset, args: &PartitionArgs, cfg: &Config) -> Result<(Dataset, Option<SplitPlan>), CliError> {
    if args.all {
        return Ok((ds.clone(), None));
    }
    let plan = match &args.split {
        Some(p) => checked_plan(ds, read_json(p)?)?,
        None => group_shuffle_split(
            ds,
            args.test_fraction.unwrap_or(cfg.test_fraction),
            args.seed.unwrap_or(cfg.seed),
        )?,
    };
    Ok((ds.subset(&plan.train_indices), Some(plan)))
}

fn gen_data(
    cfg: &Config,
    spec: Option<&Path>,
    n: Option<usize>,
    seed: Option<u64>,
    fixture: bool,
    out: Option<&Path>,
) -> Result<String, CliError> {
    let ds = if fixture {
        layout_fixture()?
    } else {
        let mut spec: GeneratorSpec = match spec {
            None => cfg.generator.clone(),
            Some(p) if p.extension().is_some_and(|e| e == "json") => read_json(p)?,
            Some(p) => toml::from_str(&read(p)?)
                .map_err(|e| CliError::Invalid(format!("{}: {}", p.display(), e.message())))?,
        };
        if let Some(s) = seed {
            spec.seed = s;
        }
        generate_synthetic(&spec, n.unwrap_or(cfg.n))?
    };
    let mut buf = Vec::new();
    ds.write_csv(&mut buf)?;
    let csv = String::from_utf8(buf).expect("csv is utf-8");
    match out {
        Some(p) => {
            write(p, &csv)?;
            eprintln!("wrote {} records to {}", ds.len(), p.display());
            Ok(String::new())
        }
        None => Ok(csv),
    }
}

pub fn render_summary(s: &DatasetSummary) -> String {
    let rows: Vec<Vec<String>> = s
        .columns
        .iter()
        .map(|c| {
            let money = c.name == "client_revenue" || c.name == "price";
            let f = |v: f64| if money { usd(v, false) } else { format!("{v:.1}") };
            vec![c.name.clone(), f(c.mean), f(c.std), f(c.min), f(c.max)]
        })
        .collect();
    let mut out = format!(
        "{} records ({} real, {} synthetic) in {} client groups\n",
        s.n, s.real, s.synthetic, s.distinct_groups
    );
    out.push_str(&table(&["Feature", "Mean", "Std", "Min", "Max"], &rows));
    let [a, b, c] = s.tech_stack_shares;
    out.push_str(&format!(
        "tech_stack: no_code {:.0}%, low_code {:.0}%, custom {:.0}%\n",
        a * 100.0,
        b * 100.0,
        c * 100.0
    ));
    out
}

#[derive(Serialize)]
struct PlanOutput<P: Serialize> {
    plan: P,
    leakage: LeakageReport,
}

fn split(
    cfg: &Config,
    data: &DataArgs,
    test_fraction: Option<f64>,
    seed: Option<u64>,
    out: Option<&Path>,
    json: bool,
) -> Result<String, CliError> {
    let ds = load_dataset(data, cfg)?;
    let plan = group_shuffle_split(&ds, test_fraction.unwrap_or(cfg.test_fraction), seed.unwrap_or(cfg.seed))?;
    let leakage = verify_no_leakage(&plan, &ds)?;
    if let Some(p) = out {
        write(p, &to_json(&plan))?;
    }
    let groups = |idx: &[usize]| ds.subset(idx).distinct_groups();
    let text = format!(
        "train {} records in {} groups, test {} records in {} groups (seed {}, fraction {})\nleakage: {}\n",
        plan.train_indices.len(),
        groups(&plan.train_indices),
        plan.test_indices.len(),
        groups(&plan.test_indices),
        plan.seed,
        plan.test_fraction,
        leakage_line(&leakage)
    );
    emit(json, &PlanOutput { plan, leakage }, || text)
}

fn leakage_line(l: &LeakageReport) -> String {
    if l.ok {
        "none".into()
    } else {
        format!("groups on both sides: {}", l.offending_groups.join(", "))
    }
}

fn kfold(
    cfg: &Config,
    data: &DataArgs,
    k: Option<usize>,
    split: Option<&Path>,
    out: Option<&Path>,
    json: bool,
) -> Result<String, CliError> {
    let ds = load_dataset(data, cfg)?;
    let ds = match split {
        Some(p) => ds.subset(&checked_plan(&ds, read_json(p)?)?.train_indices),
        None => ds,
    };
    let plan = group_kfold(&ds, k.unwrap_or(cfg.folds))?;
    let leakage = verify_no_leakage(&plan, &ds)?;
    if let Some(p) = out {
        write(p, &to_json(&plan))?;
    }
    let sizes: Vec<String> = plan.sizes().iter().map(usize::to_string).collect();
    let text = format!(
        "{} folds over {} records: sizes {}\nleakage: {}\n",
        plan.k,
        ds.len(),
        sizes.join(" / "),
        leakage_line(&leakage)
    );
    emit(json, &PlanOutput { plan, leakage }, || text)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainReport {
    pub model_version: String,
    pub n_train: usize,
    pub n_test: usize,
    pub train: MetricsReport,
    pub test: Option<MetricsReport>,
    pub overfit_ratio: Option<f64>,
    pub feature_importance: Vec<(String, f64)>,
}

fn render_train(r: &TrainReport) -> String {
    let row = |label: &str, m: &MetricsReport| {
        vec![
            label.to_string(),
            m.n.to_string(),
            m.r2.map_or("undefined".into(), |v| format!("{v:.3}")),
            usd(m.mae, false),
            usd(m.rmse, false),
            format!("{:.1}%", m.relative_mae * 100.0),
        ]
    };
    let mut rows = vec![row("Train", &r.train)];
    if let Some(t) = &r.test {
        rows.push(row("Test", t));
    }
    let mut out = format!("model {}\n", r.model_version);
    out.push_str(&table(&["Set", "N", "R2", "MAE", "RMSE", "Relative MAE"], &rows));
    if let Some(o) = r.overfit_ratio {
        out.push_str(&format!("train/test RMSE ratio: {o:.3}\n"));
    }
    let imp: Vec<Vec<String>> = r
        .feature_importance
        .iter()
        .map(|(n, v)| vec![n.clone(), format!("{v:.3}")])
        .collect();
    out.push('\n');
    out.push_str(&table(&["Feature", "Importance"], &imp));
    out
}

fn train(
    cfg: &Config,
    data: &DataArgs,
    partition: &PartitionArgs,
    hp: &HpArgs,
    out_model: Option<&Path>,
    json: bool,
) -> Result<String, CliError> {
    let ds = load_dataset(data, cfg)?;
    let reference = ds.target_mean().ok_or(mlat_core::metrics::MetricsError::Empty)?;
    let (train, plan) = partition_of(&ds, partition, cfg)?;
    let features = FeatureSet::full();
    let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let model = fit_named(&train.design_matrix(&features), &train.targets(), &hyperparameters(cfg, hp)?, names)?;
    let train_metrics = compute_metrics(&train.targets(), &model.predict_many(&train.design_matrix(&features))?, reference)?;
    let test_metrics = match &plan {
        Some(p) => {
            let test = ds.subset(&p.test_indices);
            let pred = model.predict_many(&test.design_matrix(&features))?;
            Some(compute_metrics(&test.targets(), &pred, reference)?)
        }
        None => None,
    };
    if let Some(p) = out_model {
        model.save(p)?;
    }
    let report = TrainReport {
        model_version: model_version(&model),
        n_train: train.len(),
        n_test: plan.as_ref().map_or(0, |p| p.test_indices.len()),
        overfit_ratio: test_metrics.as_ref().and_then(|t| overfit_ratio(&train_metrics, t)),
        train: train_metrics,
        test: test_metrics,
        feature_importance: model.feature_importance(),
    };
    emit(json, &report, || render_train(&report))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SensitivityOutput {
    pub curve: SensitivityCurve,
    pub monotonicity: MonotonicityReport,
    pub sweep_ratio: Option<f64>,
}

fn sensitivity(
    model: Option<&Path>,
    baseline: Option<&str>,
    feature: &str,
    values: Vec<f64>,
    csv: Option<&Path>,
    json: bool,
) -> Result<String, CliError> {
    let model = load_model(model)?;
    let base: RawFeatures = match baseline {
        None => typical_baseline(),
        Some(s) if s.trim_start().starts_with('{') => serde_json::from_str(s)?,
        Some(path) => read_json(&PathBuf::from(path))?,
    };
    let feature: RawFeature = feature.parse()?;
    let curve = match (feature, values.is_empty()) {
        (RawFeature::TechStack, true) => tech_stack_sweep(&model, &base)?,
        (RawFeature::PainSeverityScore | RawFeature::IntegrationComplexity, true) => {
            univariate_sweep(&model, &base, feature, &[1.0, 2.0, 3.0, 4.0, 5.0])?
        }
        (RawFeature::Phase, true) => univariate_sweep(&model, &base, feature, &[1.0, 2.0, 3.0, 4.0])?,
        (_, true) => {
            return Err(CliError::Usage(format!("--values is required for {}", feature.name())));
        }
        (_, false) => univariate_sweep(&model, &base, feature, &values)?,
    };
    if let Some(p) = csv {
        write(p, &curve.to_csv())?;
    }
    let out = SensitivityOutput {
        monotonicity: monotonicity_check(&curve, Direction::NonDecreasing),
        sweep_ratio: sweep_ratio(&curve).ok(),
        curve,
    };
    emit(json, &out, || {
        let mut s = out.curve.render();
        s.push_str(&format!(
            "non-decreasing: {}   last/first: {}\n",
            if out.monotonicity.ok { "yes" } else { "no" },
            out.sweep_ratio.map_or("undefined".into(), |r| format!("{r:.2}x"))
        ));
        s
    })
}

struct PipelinePaths {
    transcript: Option<PathBuf>,
    mock_fixtures: Option<PathBuf>,
    research_stubs: Option<PathBuf>,
    template: Option<PathBuf>,
}

fn required(p: Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
    p.ok_or_else(|| CliError::Usage(format!("--{flag} is required (or set it in the config file)")))
}

fn pipeline_error(e: PipelineError) -> CliError {
    match &e.source {
        StageError::Tool(ToolError::Failed { .. }) | StageError::Llm(LlmError::Transport(_)) => {
            CliError::Failed(e.to_string())
        }
        _ => CliError::Invalid(e.to_string()),
    }
}

#[derive(Serialize)]
struct PipelineSummary<'a> {
    document: &'a str,
    findings: &'a mlat_core::schema::ResearchFindings,
    proposal: &'a mlat_core::schema::ProposalDoc,
    decision: &'a mlat_runtime::PricingDecision,
    trace: &'a [mlat_runtime::TraceEvent],
}

fn pipeline(
    cfg: &Config,
    paths: PipelinePaths,
    pricing_url: Option<String>,
    model: Option<&Path>,
    out: Option<&Path>,
    json: bool,
) -> Result<String, CliError> {
    let transcript = read(&required(paths.transcript, "transcript")?)?;
    let template = read(&required(paths.template, "template")?)?;
    let stubs = ResearchStubs::load(required(paths.research_stubs, "research-stubs")?)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let llm: Box<dyn LlmClient> = match paths.mock_fixtures {
        Some(p) => Box::new(ScriptedMock::load(p).map_err(|e| CliError::Usage(e.to_string()))?),
        None if cfg.llm.enabled => Box::new(ExternalAdapter::new(cfg.llm.clone())),
        None => {
            return Err(CliError::Usage(
                "--mock-fixtures is required unless [llm] enabled = true in the config".into(),
            ))
        }
    };
    let pricing = match pricing_url {
        Some(url) => http_pricing_tool(&url),
        None => {
            let svc = PricingService::new(load_model(model)?).map_err(|e| CliError::Invalid(e.to_string()))?;
            local_pricing_tool(Arc::new(svc))
        }
    };
    let registry = standard_registry(stubs, pricing);
    let result = run_pipeline(&transcript, llm.as_ref(), &registry, &template).map_err(pipeline_error)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        write(&dir.join("proposal.txt"), &result.document)?;
        write(&dir.join("proposal.json"), &to_json(&result.proposal))?;
        write(&dir.join("findings.json"), &to_json(&result.findings))?;
        write(&dir.join("trace.jsonl"), &result.trace.to_jsonl())?;
    }
    let summary = PipelineSummary {
        document: &result.document,
        findings: &result.findings,
        proposal: &result.proposal,
        decision: &result.decision,
        trace: result.trace.events(),
    };
    emit(json, &summary, || result.document.clone())
}
