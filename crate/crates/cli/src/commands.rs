use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use lit_core::benchmark::{
    aggregate, evaluate_instance, instantiate, match_question, render_text, trace_path, Condition, RunRecord,
    ScoreReport,
};
use lit_core::chat::{ChatClient, ChatConfig, Generator};
use lit_core::classify::HttpClassifier;
use lit_core::cost::CostTable;
use lit_core::executor::{ChatInferencer, Inferencer, ModelRegistry, OfflineInferencer, Toolbox};
use lit_core::planner::{CandidateSource, ChatPlanner, ScriptedPlanner};
use lit_core::table::{generate_fixtures, generate_tables, FixtureConfig, TableStore};
use rayon::prelude::*;

use crate::config::{InferencerChoice, PlannerChoice, RunConfig};
use crate::{CliError, GenDataArgs, ReportArgs};

/// Seed for classifier training, fixed so models do not depend on the
/// benchmark seed.
const MODEL_SEED: u64 = 0;

fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(run_err)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Run(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub struct Engine {
    pub toolbox: Arc<Toolbox>,
    pub planner: Box<dyn CandidateSource>,
}

/// Builds the table store, toolbox and planner a config describes.
pub fn build_engine(cfg: &RunConfig) -> Result<Engine, CliError> {
    let store = Arc::new(match &cfg.data_dir {
        Some(dir) => TableStore::open(dir).map_err(|e| CliError::Config(e.to_string()))?,
        None => {
            let fixture = FixtureConfig {
                seed: cfg.fixture_seed,
                ..FixtureConfig::default()
            };
            let (hupd, neurips, _) = generate_tables(fixture).map_err(run_err)?;
            TableStore::from_tables(hupd, neurips)
        }
    });
    let costs = match &cfg.cost_table {
        Some(p) => CostTable::from_file(p).map_err(|e| CliError::Config(e.to_string()))?,
        None => CostTable::default(),
    };
    let generator: Option<Arc<dyn Generator>> = cfg.chat.as_ref().map(|c| {
        Arc::new(ChatClient::new(ChatConfig {
            endpoint: c.endpoint.clone(),
            model: c.model.clone(),
            api_key: c.api_key.clone(),
            timeout: c.timeout,
        })) as Arc<dyn Generator>
    });
    // resolve() guarantees chat settings whenever a chat component is chosen.
    let inferencer: Arc<dyn Inferencer> = match (&cfg.inferencer, &generator) {
        (InferencerChoice::Chat, Some(g)) => Arc::new(ChatInferencer { generator: Arc::clone(g) }),
        _ => Arc::new(OfflineInferencer),
    };
    let planner: Box<dyn CandidateSource> = match (&cfg.planner, &generator) {
        (PlannerChoice::Chat, Some(g)) => Box::new(ChatPlanner {
            generator: Arc::clone(g),
            costs: costs.clone(),
        }),
        _ => Box::new(ScriptedPlanner {
            grouping: cfg.month_grouping,
        }),
    };
    let mut tb = Toolbox::new(Arc::clone(&store), inferencer);
    tb.costs = costs;
    tb.models = ModelRegistry::new(Arc::clone(&store), MODEL_SEED, cfg.model_cache.clone());
    tb.step_timeout = cfg.step_timeout;
    if let Some(endpoint) = &cfg.classifier_endpoint {
        tb.remote = Some(Arc::new(HttpClassifier::new(cfg.step_timeout)));
        tb.remote_endpoint = endpoint.clone();
    }
    Ok(Engine {
        toolbox: Arc::new(tb),
        planner,
    })
}

pub fn gen_data(args: &GenDataArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = FixtureConfig {
        seed: args.seed,
        n_patents: args.patents,
        n_papers: args.papers,
    };
    let summary = generate_fixtures(cfg, &args.out).map_err(run_err)?;
    write_out(out, &pretty(&summary))
}

pub fn ask(question: &str, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let inst = match_question(question).ok_or_else(|| {
        CliError::Run("the question does not match any of the 13 benchmark templates".into())
    })?;
    let engine = build_engine(cfg)?;
    let record = evaluate_instance(&inst, Condition::Lit, engine.planner.as_ref(), &engine.toolbox);
    write_out(out, &pretty(&record))?;
    match &record.error {
        Some(e) => Err(CliError::Run(format!("no plan produced an answer: {e}"))),
        None => Ok(()),
    }
}

fn report_json(report: &ScoreReport) -> String {
    pretty(report)
}

/// Runs every selected template under both conditions. Writes
/// `traces/{condition}/{id}.json`, `report.json`, `report.txt` and the
/// resolved `config.json` into the output directory, whose previous
/// `traces/` are replaced.
pub fn bench(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let engine = build_engine(cfg)?;
    let mut instances = Vec::new();
    for t in &cfg.templates {
        let batch = instantiate(&engine.toolbox.store, *t, cfg.count, cfg.seed).map_err(run_err)?;
        let _ = writeln!(err, "{t}: {} instances", batch.len());
        instances.extend(batch);
    }
    let work: Vec<_> = instances
        .iter()
        .flat_map(|i| Condition::ALL.into_iter().map(move |c| (i, c)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(run_err)?;
    let records: Vec<RunRecord> = pool.install(|| {
        work.par_iter()
            .map(|(inst, cond)| evaluate_instance(inst, *cond, engine.planner.as_ref(), &engine.toolbox))
            .collect()
    });
    if records.is_empty() {
        return Err(CliError::Run("no instances to run (count is 0)".into()));
    }
    let report = aggregate(&records, cfg.seed).map_err(run_err)?;

    let traces = cfg.out.join("traces");
    if traces.exists() {
        fs::remove_dir_all(&traces).map_err(|e| CliError::Run(format!("{}: {e}", traces.display())))?;
    }
    for r in &records {
        write_file(&cfg.out.join(trace_path(r.condition, &r.id)), &pretty(r))?;
    }
    write_file(&cfg.out.join("config.json"), &pretty(cfg))?;
    write_file(&cfg.out.join("report.json"), &report_json(&report))?;
    let text = render_text(&report);
    write_file(&cfg.out.join("report.txt"), &text)?;
    write_out(out, &text)
}

/// Reads every trace file under `dir/traces`, in path order.
pub fn read_records(dir: &Path) -> Result<Vec<RunRecord>, CliError> {
    let root = dir.join("traces");
    let mut paths = Vec::new();
    let conds = fs::read_dir(&root).map_err(|e| CliError::Run(format!("{}: {e}", root.display())))?;
    for cond in conds {
        let cond = cond.map_err(run_err)?.path();
        if !cond.is_dir() {
            continue;
        }
        for f in fs::read_dir(&cond).map_err(run_err)? {
            let p = f.map_err(run_err)?.path();
            if p.extension().is_some_and(|e| e == "json") {
                paths.push(p);
            }
        }
    }
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| CliError::Run(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Run(format!("{}: {e}", p.display())))
        })
        .collect()
}

fn recorded_seed(dir: &Path) -> Option<u64> {
    let text = fs::read_to_string(dir.join("config.json")).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v.get("seed")?.as_u64()
}

pub fn report(args: &ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let records = read_records(&args.dir)?;
    let seed = args
        .seed
        .or_else(|| recorded_seed(&args.dir))
        .ok_or_else(|| CliError::Config("no --seed given and no config.json in the run directory".into()))?;
    let report = aggregate(&records, seed).map_err(run_err)?;
    if args.json {
        write_out(out, &report_json(&report))
    } else {
        write_out(out, &render_text(&report))
    }
}
