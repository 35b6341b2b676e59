use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use log::warn;
use serde::Serialize;
use serde_json::{Map, Value};

use fca2vec::closure2vec::{self, Closure2VecConfig, Distance, SiameseModel, TargetScale};
use fca2vec::context::{
    self, load_burmeister, load_nominal_csv, load_years, scale_nominal, MissingValues,
};
use fca2vec::eval::{self, ClusteringConfig, EmbeddingSource, LinkPredictionConfig, TemporalSplit};
use fca2vec::fc2vec::{self, Architecture, EmbeddingMeta, EmbeddingTable, Fc2VecConfig};
use fca2vec::lattice::{self, canonical_base, enumerate_concepts, ConceptLattice};
use fca2vec::nn::{loss_trace_csv, Init};
use fca2vec::rudolph;
use fca2vec::{EmptyPolicy, Execution, FormalContext};

use crate::config::{self, merge, require, OutDir};
use crate::*;

pub fn run(cli: Cli) -> Result<Status> {
    fca2vec::par::init_threads(cli.threads);
    let file = cli.config.as_deref().map(config::load_file).transpose()?;
    let file = file.as_ref();
    let policy = if cli.drop_empty {
        EmptyPolicy::Drop
    } else {
        EmptyPolicy::Reject
    };
    match cli.command {
        Command::Info(a) => info(merge(a, file)?, policy),
        Command::Concepts(a) => export(merge(a, file)?, policy, Export::Concepts),
        Command::Covers(a) => export(merge(a, file)?, policy, Export::Covers),
        Command::Base(a) => export(merge(a, file)?, policy, Export::Base),
        Command::Scale(a) => scale(merge(a, file)?, policy),
        Command::TrainClosure2vec(a) => train_closure2vec(merge(a, file)?, policy),
        Command::TrainO2v(a) => train_fc2vec(merge(a, file)?, policy, false),
        Command::TrainA2v(a) => train_fc2vec(merge(a, file)?, policy, true),
        Command::EvalLinkpred(a) => eval_linkpred(merge(a, file)?, policy),
        Command::EvalCluster(a) => eval_cluster(merge(a, file)?, policy),
        Command::EvalCovers(a) => eval_distances(merge(a, file)?, policy, false),
        Command::EvalImplications(a) => eval_distances(merge(a, file)?, policy, true),
        Command::Scatter(a) => scatter(merge(a, file)?),
        Command::VerifyRudolph(a) => verify_rudolph(merge(a, file)?, policy),
        Command::AffineResidual(a) => affine_residual(merge(a, file)?, policy),
        Command::DiagLinear(a) => diag_linear(merge(a, file)?, policy),
    }
}

fn exec() -> Execution {
    Execution::default()
}

fn load_context(input: &Option<PathBuf>, policy: EmptyPolicy) -> Result<FormalContext> {
    let path = require(input, "input")?;
    load_burmeister(&path, policy).with_context(|| format!("loading context {}", path.display()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn check_dim(d: usize) {
    if !(2..=3).contains(&d) {
        warn!("d = {d}: embeddings outside 2 or 3 dimensions are not meant for plotting");
    }
}

/// Report warnings are already logged by the experiments.
fn status(warnings: &[String]) -> Status {
    if warnings.is_empty() {
        Status::Ok
    } else {
        Status::Warnings
    }
}

fn info(a: InfoArgs, policy: EmptyPolicy) -> Result<Status> {
    let ctx = load_context(&a.input, policy)?;
    let mut fields: Vec<(&str, Value)> = vec![
        ("objects", ctx.n_objects().into()),
        ("attributes", ctx.n_attributes().into()),
        ("incidences", ctx.n_incidences().into()),
        ("density", ctx.density().into()),
    ];
    if a.full {
        let concepts = enumerate_concepts(&ctx);
        let n = concepts.len() as f64;
        let intents = concepts.iter().map(|c| c.intent.len()).sum::<usize>() as f64 / n;
        let extents = concepts.iter().map(|c| c.extent.len()).sum::<usize>() as f64 / n;
        fields.push(("concepts", concepts.len().into()));
        fields.push(("mean_attributes_per_concept", intents.into()));
        fields.push(("mean_objects_per_concept", extents.into()));
        fields.push(("canonical_base", canonical_base(&ctx).len().into()));
    }
    if a.json {
        let map: Map<String, Value> = fields
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        print!("{}", json(&map)?);
    } else {
        for (k, v) in fields {
            match v.as_f64() {
                Some(x) if !v.is_u64() => println!("{k}\t{x:.4}"),
                _ => println!("{k}\t{v}"),
            }
        }
    }
    Ok(Status::Ok)
}

enum Export {
    Concepts,
    Covers,
    Base,
}

fn export(a: ExportArgs, policy: EmptyPolicy, what: Export) -> Result<Status> {
    let ctx = load_context(&a.input, policy)?;
    let text = match what {
        Export::Concepts => lattice::concepts_tsv(&enumerate_concepts(&ctx)),
        Export::Covers => lattice::covers_tsv(&ConceptLattice::build(&ctx, exec())?.covers),
        Export::Base => lattice::base_text(&ctx, &canonical_base(&ctx)),
    };
    emit(&a.out, &text)?;
    Ok(Status::Ok)
}

fn scale(a: ScaleArgs, policy: EmptyPolicy) -> Result<Status> {
    let path = require(&a.input, "input")?;
    let table =
        load_nominal_csv(&path).with_context(|| format!("loading table {}", path.display()))?;
    let missing = if a.missing_as_value {
        MissingValues::AsValue
    } else {
        MissingValues::Skip
    };
    let ctx = scale_nominal(&table, missing, policy)?;
    emit(&a.out, &context::write_burmeister(&ctx))?;
    Ok(Status::Ok)
}

/// Resolves closure2vec options, writing the defaults back so the manifest
/// is complete.
fn closure2vec_config(a: &mut Closure2VecArgs) -> Result<Closure2VecConfig> {
    let seed = require(&a.seed, "seed")?;
    let d = *a.d.get_or_insert(3);
    let distance = match *a.distance.get_or_insert(DistanceArg::Euclidean) {
        DistanceArg::Euclidean => Distance::Euclidean,
        DistanceArg::Cosine => Distance::Cosine,
    };
    let mut cfg = Closure2VecConfig::new(d, distance, seed);
    cfg.train.epochs = *a.epochs.get_or_insert(cfg.train.epochs);
    cfg.train.lr0 = *a.lr0.get_or_insert(cfg.train.lr0);
    cfg.train.batch_size = *a.batch.get_or_insert(cfg.train.batch_size);
    cfg.max_set_size = *a.max_set_size.get_or_insert(cfg.max_set_size);
    let default_target = match cfg.target_scale() {
        TargetScale::Plain => TargetArg::Plain,
        TargetScale::Squared => TargetArg::Squared,
    };
    cfg.target = Some(match *a.target.get_or_insert(default_target) {
        TargetArg::Plain => TargetScale::Plain,
        TargetArg::Squared => TargetScale::Squared,
    });
    cfg.init = match *a.init.get_or_insert(InitArg::Glorot) {
        InitArg::Word2vec => Init::Word2Vec,
        InitArg::Glorot => Init::Glorot,
    };
    cfg.train.validate()?;
    Ok(cfg)
}

fn fit_closure2vec(
    ctx: &FormalContext,
    cfg: &Closure2VecConfig,
) -> Result<(SiameseModel, Vec<f64>)> {
    let samples = closure2vec::generate_chd_samples(
        ctx,
        cfg.max_set_size,
        cfg.target_scale(),
        cfg.train.seed,
        exec(),
    );
    Ok(closure2vec::train_closure2vec(ctx, &samples, cfg)?)
}

fn train_closure2vec(mut a: Closure2VecArgs, policy: EmptyPolicy) -> Result<Status> {
    let ctx = load_context(&a.input, policy)?;
    let mut out = OutDir::create(&require(&a.out, "out")?)?;
    let cfg = closure2vec_config(&mut a)?;
    let (model, trace) = fit_closure2vec(&ctx, &cfg)?;
    let concepts = enumerate_concepts(&ctx);
    let vectors = concepts
        .iter()
        .map(|c| model.embed(&c.intent))
        .collect::<fca2vec::Result<Vec<_>>>()?;
    let names = (0..concepts.len()).map(|i| i.to_string()).collect();
    out.write("concepts.tsv", &lattice::concepts_tsv(&concepts))?;
    out.write(
        "embeddings.tsv",
        &EmbeddingTable::new(names, vectors)?.to_tsv(),
    )?;
    out.write("model.txt", &model.to_text())?;
    out.write("loss.csv", &loss_trace_csv(&trace))?;
    out.finish("train-closure2vec", &a, Some(ctx.content_hash()), &[])?;
    Ok(Status::Ok)
}

fn arch_of(a: ArchArg) -> Architecture {
    match a {
        ArchArg::Sg => Architecture::SkipGram,
        ArchArg::Cbow => Architecture::Cbow,
    }
}

fn train_fc2vec(mut a: Fc2VecArgs, policy: EmptyPolicy, attributes: bool) -> Result<Status> {
    let ctx = load_context(&a.input, policy)?;
    let mut out = OutDir::create(&require(&a.out, "out")?)?;
    let seed = require(&a.seed, "seed")?;
    let arch = arch_of(*a.arch.get_or_insert(ArchArg::Sg));
    let d = *a.d.get_or_insert(3);
    check_dim(d);
    let mut cfg = Fc2VecConfig::new(arch, d, *a.epochs.get_or_insert(5), seed);
    cfg.train.lr0 = *a.lr0.get_or_insert(cfg.train.lr0);
    cfg.train.batch_size = *a.batch.get_or_insert(cfg.train.batch_size);
    let trained = if attributes {
        fc2vec::attribute2vec(&ctx, &cfg)?
    } else {
        fc2vec::object2vec(&ctx, &cfg)?
    };
    let command = if attributes { "train-a2v" } else { "train-o2v" };
    let meta = EmbeddingMeta {
        method: command.trim_start_matches("train-").to_string(),
        arch: Some(arch),
        dim: d,
        seed,
        epochs: cfg.train.epochs,
        lr0: cfg.train.lr0,
        context_hash: ctx.content_hash(),
    };
    let path = out.path("embeddings.tsv");
    trained.table.save(&path, Some(&meta))?;
    let meta_name = fc2vec::meta_path(&path);
    out.path(&meta_name.file_name().unwrap().to_string_lossy());
    trained.net.save(out.path("net.tsv"))?;
    out.write("loss.csv", &loss_trace_csv(&trained.losses))?;
    out.finish(command, &a, Some(ctx.content_hash()), &[])?;
    Ok(Status::Ok)
}

fn years_path(a: &LinkPredArgs, input: &Path) -> PathBuf {
    a.years
        .clone()
        .unwrap_or_else(|| input.with_extension("years.tsv"))
}

fn eval_linkpred(mut a: LinkPredArgs, policy: EmptyPolicy) -> Result<Status> {
    let input = require(&a.input, "input")?;
    let mut ctx = load_context(&a.input, policy)?;
    let years = years_path(&a, &input);
    if !years.exists() {
        bail!("year sidecar {} not found (pass --years)", years.display());
    }
    load_years(&mut ctx, &years)?;
    a.years = Some(years);
    let mut out = OutDir::create(&require(&a.out, "out")?)?;
    let seed = require(&a.seed, "seed")?;
    let cutoff = require(&a.train_cutoff, "train_cutoff")?;
    let last = ctx
        .attribute_years()
        .and_then(|y| y.iter().copied().max())
        .unwrap_or(cutoff);
    let split = TemporalSplit::new(
        cutoff,
        *a.test_start.get_or_insert(cutoff + 1),
        *a.test_end.get_or_insert(last),
    )?;
    let d = *a.d.get_or_insert(3);
    check_dim(d);
    let mut cfg = LinkPredictionConfig::new(split, d, seed);
    cfg.rounds = *a.rounds.get_or_insert(cfg.rounds);
    cfg.epochs = *a.epochs.get_or_insert(cfg.epochs);
    cfg.lr0 = *a.lr0.get_or_insert(cfg.lr0);
    let source = match *a.source.get_or_insert(SourceArg::O2vCbow) {
        SourceArg::O2vSg => EmbeddingSource::Object2Vec(Architecture::SkipGram),
        SourceArg::O2vCbow => EmbeddingSource::Object2Vec(Architecture::Cbow),
        SourceArg::Random => EmbeddingSource::Random,
        SourceArg::External => {
            let p = require(&a.embeddings, "embeddings")?;
            EmbeddingSource::External(
                EmbeddingTable::load(&p).with_context(|| format!("loading {}", p.display()))?,
            )
        }
    };
    let report = eval::link_prediction_experiment(&ctx, &source, &cfg, exec())?;
    out.write("report.json", &json(&report)?)?;
    let mut csv = String::from(
        "method,d,train_examples,test_examples,recall,recall_sd,precision,precision_sd,f1,f1_sd\n",
    );
    csv += &format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        report.method,
        d,
        report.train_examples,
        report.test_examples,
        report.recall.mean,
        report.recall.stdev,
        report.precision.mean,
        report.precision.stdev,
        report.f1.mean,
        report.f1.stdev
    );
    out.write("summary.csv", &csv)?;
    out.finish(
        "eval-linkpred",
        &a,
        Some(ctx.content_hash()),
        &report.warnings,
    )?;
    Ok(status(&report.warnings))
}

fn eval_cluster(mut a: ClusterArgs, policy: EmptyPolicy) -> Result<Status> {
    let ctx = load_context(&a.input, policy)?;
    let mut out = OutDir::create(&require(&a.out, "out")?)?;
    let seed = require(&a.seed, "seed")?;
    let d = *a.d.get_or_insert(3);
    check_dim(d);
    let mut cfg = ClusteringConfig::new(d, seed);
    cfg.k_set = a.k.get_or_insert_with(|| cfg.k_set.clone()).clone();
    cfg.archs = a
        .archs
        .get_or_insert_with(|| vec![ArchArg::Sg, ArchArg::Cbow])
        .iter()
        .map(|&x| arch_of(x))
        .collect();
    cfg.rounds = *a.rounds.get_or_insert(cfg.rounds);
    cfg.random_rounds = *a.random_rounds.get_or_insert(cfg.random_rounds);
    cfg.epochs = *a.epochs.get_or_insert(cfg.epochs);
    cfg.lr0 = *a.lr0.get_or_insert(cfg.lr0);
    let concepts = enumerate_concepts(&ctx);
    let base = canonical_base(&ctx);
    let report = eval::clustering_experiment(&ctx, &concepts, &base, &cfg, exec())?;
    out.write("report.json", &json(&report)?)?;
    let mut csv = String::from("method,k,ratio,ratio_sd,random,random_sd,mean_max_cluster_size\n");
    for s in &report.summary {
        csv += &format!(
            "{},{},{},{},{},{},{}\n",
            s.method,
            s.k,
            s.ratio.mean,
            s.ratio.stdev,
            s.random.mean,
            s.random.stdev,
            s.mean_max_cluster_size
        );
    }
    out.write("summary.csv", &csv)?;
    out.finish(
        "eval-cluster",
        &a,
        Some(ctx.content_hash()),
        &report.warnings,
    )?;
    Ok(status(&report.warnings))
}

fn eval_distances(mut a: DistanceArgs, policy: EmptyPolicy, implications: bool) -> Result<Status> {
    let ctx = load_context(&a.train.input, policy)?;
    let mut out = OutDir::create(&require(&a.train.out, "out")?)?;
    let model = match &a.model {
        Some(p) => {
            SiameseModel::load(p).with_context(|| format!("loading model {}", p.display()))?
        }
        None => {
            let cfg = closure2vec_config(&mut a.train)?;
            let (model, trace) = fit_closure2vec(&ctx, &cfg)?;
            out.write("model.txt", &model.to_text())?;
            out.write("loss.csv", &loss_trace_csv(&trace))?;
            model
        }
    };
    if model.input_width() != ctx.n_attributes() {
        bail!(
            "model expects {} attributes, context has {}",
            model.input_width(),
            ctx.n_attributes()
        );
    }
    let seed = a.train.seed.unwrap_or(0);
    let (stats, warnings, command) = if implications {
        let base = canonical_base(&ctx);
        let r = eval::implication_distance_experiment(&model, &base, seed, exec())?;
        out.write("report.json", &json(&r)?)?;
        (
            vec![r.s_imp, r.non_s_imp, r.imp, r.non_imp],
            r.warnings,
            "eval-implications",
        )
    } else {
        let lattice = ConceptLattice::build(&ctx, exec())?;
        let cap = *a.cap.get_or_insert(eval::NON_COVER_CAP);
        let r = eval::covering_distance_experiment(&model, &lattice, cap, seed, exec())?;
        out.write("report.json", &json(&r)?)?;
        (vec![r.cr, r.non_cr], r.warnings, "eval-covers")
    };
    let mut csv = String::from("label,mean,stdev,pairs\n");
    for s in &stats {
        csv += &format!("{},{},{},{}\n", s.label, s.mean, s.stdev, s.pairs);
    }
    out.write("summary.csv", &csv)?;
    out.finish(command, &a, Some(ctx.content_hash()), &warnings)?;
    Ok(status(&warnings))
}

fn scatter(a: ScatterArgs) -> Result<Status> {
    let path = require(&a.input, "input")?;
    let table =
        EmbeddingTable::load(&path).with_context(|| format!("loading {}", path.display()))?;
    let labels: HashMap<String, String> = match &a.labels {
        Some(p) => fs::read_to_string(p)
            .with_context(|| format!("reading labels {}", p.display()))?
            .lines()
            .filter_map(|l| l.split_once('\t'))
            .map(|(n, l)| (n.to_string(), l.to_string()))
            .collect(),
        None => HashMap::new(),
    };
    let row_labels: Vec<String> = table
        .names
        .iter()
        .map(|n| labels.get(n).cloned().unwrap_or_default())
        .collect();
    emit(&a.out, &eval::scatter_csv(&table.vectors, &row_labels)?)?;
    Ok(Status::Ok)
}

fn verify_rudolph(a: VerifyArgs, policy: EmptyPolicy) -> Result<Status> {
    let ctx = load_context(&a.input, policy)?;
    let net = rudolph::ClosureNet::build(&ctx);
    let seed = if ctx.n_attributes() > rudolph::EXHAUSTIVE_LIMIT {
        require(&a.seed, "seed")?
    } else {
        a.seed.unwrap_or(0)
    };
    let v = rudolph::verify_closure_net(&ctx, &net, a.samples.unwrap_or(100_000), seed, exec())?;
    println!("tested\t{}", v.tested);
    println!("exhaustive\t{}", v.exhaustive);
    println!("passed\t{}", v.passed());
    if let Some(b) = &v.counterexample {
        bail!("closure net disagrees with the closure on {}", b.to_hex());
    }
    Ok(Status::Ok)
}

fn affine_residual(a: InputArgs, policy: EmptyPolicy) -> Result<Status> {
    let ctx = load_context(&a.input, policy)?;
    println!("{}", rudolph::best_affine_fit_residual(&ctx)?);
    Ok(Status::Ok)
}

fn diag_linear(a: DiagArgs, policy: EmptyPolicy) -> Result<Status> {
    let ctx = load_context(&a.input, policy)?;
    let seed = require(&a.seed, "seed")?;
    let r = rudolph::linear_derivation_diagnostic(
        &ctx,
        a.t.unwrap_or(2),
        a.samples.unwrap_or(1000),
        a.epochs.unwrap_or(200),
        seed,
    )?;
    print!("{}", json(&r)?);
    Ok(Status::Ok)
}
