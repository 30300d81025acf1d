use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use lumen_rem::dataset::io::{fmt_float, read_dataset, read_features, write_dataset};
use lumen_rem::dataset::{
    add_noise, generate_fixed, generate_reference, generate_variable, rng, Dataset, ReferenceConfig,
};
use lumen_rem::evalmap::campaign::CampaignSpec;
use lumen_rem::evalmap::{
    benchmark, evaluate, predict_map, predicted_profile, run_campaign, simulate_map, simulated_profile,
    train_model, Predictor, TrainSpec, TrainedModel,
};
use lumen_rem::forest::{ForestParams, TreeParams};
use lumen_rem::scene::{preset_scene_named, variable_scene};
use lumen_rem::{Error, Result, Scene};

use crate::args::{
    BenchArgs, CampaignArgs, Cli, Command, EvaluateArgs, GenerateArgs, MapArgs, PredictArgs, SceneArgs,
    TrainArgs, TrainKnobs,
};

pub const META_FILE: &str = "run.meta.json";

#[derive(Serialize)]
struct RunMeta<'a> {
    tool: &'static str,
    version: &'static str,
    argv: &'a [String],
    cwd: PathBuf,
    config: &'a Command,
    outputs: Vec<PathBuf>,
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

fn out_dir_of(p: &Path) -> PathBuf {
    match absolute(p).parent() {
        Some(d) => d.to_path_buf(),
        None => PathBuf::from("."),
    }
}

fn ensure_parent(p: &Path) -> Result<()> {
    fs::create_dir_all(out_dir_of(p))?;
    Ok(())
}

fn write_meta(dir: &Path, argv: &[String], config: &Command, outputs: &[&Path]) -> Result<()> {
    let meta = RunMeta {
        tool: "lumen-rem",
        version: env!("CARGO_PKG_VERSION"),
        argv,
        cwd: std::env::current_dir()?,
        config,
        outputs: outputs.iter().map(|p| absolute(p)).collect(),
    };
    let text = serde_json::to_string_pretty(&meta).expect("run metadata serializes");
    fs::write(dir.join(META_FILE), text + "\n")?;
    Ok(())
}

pub fn run(cli: Cli, argv: &[String]) -> Result<()> {
    let (dir, outputs) = match &cli.command {
        Command::Generate(a) => (out_dir_of(&a.out), generate(a)?),
        Command::Train(a) => (out_dir_of(&a.out), train(a)?),
        Command::Evaluate(a) => (out_dir_of(&a.out), evaluate_cmd(a)?),
        Command::Predict(a) => (out_dir_of(&a.out), predict(a)?),
        Command::Map(a) => (out_dir_of(&a.out), map(a)?),
        Command::Bench(a) => {
            let dir = match &a.out {
                Some(p) => out_dir_of(p),
                None => std::env::current_dir()?,
            };
            (dir, bench(a)?)
        }
        Command::Campaign(a) => (absolute(&a.out), campaign(a)?),
    };
    let refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    write_meta(&dir, argv, &cli.command, &refs)
}

fn is_variable(s: &SceneArgs) -> bool {
    s.scene == "variable"
}

fn build_scene(s: &SceneArgs) -> Result<Scene> {
    let scene = if is_variable(s) {
        match (s.lx, s.ly) {
            (Some(lx), Some(ly)) => variable_scene(lx, ly, s.leds)?,
            _ => {
                return Err(Error::InvalidArgument(
                    "--scene variable needs --lx and --ly".into(),
                ))
            }
        }
    } else {
        if s.lx.is_some() || s.ly.is_some() {
            return Err(Error::InvalidArgument(
                "--lx/--ly only apply to --scene variable".into(),
            ));
        }
        preset_scene_named(&s.scene, s.leds)?
    };
    let scene = match s.reflectance {
        Some(rho) => scene.with_reflectance(rho),
        None => scene,
    };
    scene.validate()?;
    Ok(scene)
}

fn generate(a: &GenerateArgs) -> Result<Vec<PathBuf>> {
    let s = &a.scene;
    let ds = if is_variable(s) {
        if s.reflectance.is_some() || s.lx.is_some() || s.ly.is_some() {
            return Err(Error::InvalidArgument(
                "variable-room datasets sample their own room sizes with the standard walls".into(),
            ));
        }
        match a.reference {
            Some(n) => generate_reference(&ReferenceConfig::Variable { led_count: s.leds }, n, s.patch_edge, a.seed)?,
            None => generate_variable(s.leds, a.per_xy, a.per_z, a.per_dim, s.patch_edge, a.seed)?,
        }
    } else {
        let scene = build_scene(s)?;
        match a.reference {
            Some(n) => generate_reference(&ReferenceConfig::Fixed(scene), n, s.patch_edge, a.seed)?,
            None => generate_fixed(&scene, a.per_axis, s.patch_edge, a.seed)?,
        }
    };
    let (ds, osnr) = add_noise(&ds, a.noise_factor, rng::sub_seed(a.seed, "noise"))?;
    if osnr.is_finite() {
        println!("mean OSNR {osnr:.3} dB");
    }
    ensure_parent(&a.out)?;
    write_dataset(&ds, &a.out)?;
    println!("wrote {} rows to {}", ds.len(), a.out.display());
    Ok(vec![a.out.clone(), lumen_rem::dataset::io::sidecar_path(&a.out)])
}

fn train_spec(model: lumen_rem::evalmap::ModelKind, k: &TrainKnobs) -> TrainSpec {
    TrainSpec {
        model,
        train_size: Some(k.train_size),
        epochs: k.epochs,
        batch_size: k.batch_size,
        seed: k.seed,
        forest: ForestParams {
            tree: TreeParams {
                max_depth: k.trees.max_depth,
                min_samples_split: k.trees.min_samples_split,
                min_samples_leaf: k.trees.min_samples_leaf,
            },
            n_trees: k.trees.n_trees,
            n_estimators: k.trees.n_estimators,
            base_trees: k.trees.base_trees,
            seed: k.seed,
        },
    }
}

fn train(a: &TrainArgs) -> Result<Vec<PathBuf>> {
    let pool = read_dataset(&a.data)?;
    let spec = train_spec(a.model, &a.knobs);
    let (model, splits) = train_model(&spec, &pool)?;
    ensure_parent(&a.out)?;
    model.save(&a.out)?;
    if let TrainedModel::Mlp(m) = &model {
        if let Some(last) = m.training_log.last() {
            print!("epoch {} train MSE {:.6}", last.epoch + 1, last.train_mse);
            if let Some(v) = last.validation_mse {
                print!(" validation MSE {v:.6}");
            }
            println!(" (standardized)");
        }
    }
    let test = evaluate(&model, &splits.test)?;
    println!(
        "{}: {} training rows, test MAE {:.4} dB on {} rows",
        model.label(),
        splits.train.len(),
        test.mae_dbm,
        test.n_points
    );
    Ok(vec![a.out.clone()])
}

fn evaluate_cmd(a: &EvaluateArgs) -> Result<Vec<PathBuf>> {
    let model = TrainedModel::load(&a.model)?;
    let reference = read_dataset(&a.reference)?;
    let mut report = evaluate(&model, &reference)?;
    report.mean_osnr_db = reference.meta.noise.as_ref().and_then(|n| n.mean_osnr_db);
    ensure_parent(&a.out)?;
    fs::write(&a.out, serde_json::to_string_pretty(&report).expect("report serializes") + "\n")?;
    match report.mape_percent {
        Some(p) => println!("MAE {:.4} dB, MAPE {:.4} % over {} points", report.mae_dbm, p, report.n_points),
        None => println!("MAE {:.4} dB over {} points", report.mae_dbm, report.n_points),
    }
    Ok(vec![a.out.clone()])
}

fn predict(a: &PredictArgs) -> Result<Vec<PathBuf>> {
    let model = TrainedModel::load(&a.model)?;
    let (arity, feats) = read_features(&a.input)?;
    if arity != model.arity() {
        return Err(Error::InvalidArgument(format!(
            "input has {arity} feature columns, model expects {}",
            model.arity()
        )));
    }
    if feats.is_empty() {
        return Err(Error::InvalidArgument("input has no rows".into()));
    }
    let pred = model.predict_rows(&feats)?;
    let mut out = String::from(if arity == 5 { "x,y,z,lx,ly,rss_dbm\n" } else { "x,y,z,rss_dbm\n" });
    for (row, p) in feats.chunks(arity).zip(&pred) {
        for v in row {
            out.push_str(&fmt_float(*v));
            out.push(',');
        }
        out.push_str(&fmt_float(*p));
        out.push('\n');
    }
    ensure_parent(&a.out)?;
    fs::write(&a.out, out)?;
    println!("wrote {} predictions to {}", pred.len(), a.out.display());
    Ok(vec![a.out.clone()])
}

fn map(a: &MapArgs) -> Result<Vec<PathBuf>> {
    let scene = build_scene(&a.scene)?;
    let model = a.model.as_deref().map(TrainedModel::load).transpose()?;
    let m = match &model {
        Some(model) => predict_map(model as &dyn Predictor<f64>, &scene, a.z, a.spacing)?,
        None => simulate_map(&scene, a.z, a.spacing, a.scene.patch_edge)?,
    };
    let mut outputs = vec![a.out.clone()];
    ensure_parent(&a.out)?;
    fs::write(&a.out, m.to_csv())?;
    if let Some(p) = &a.pgm {
        ensure_parent(p)?;
        fs::write(p, m.to_pgm())?;
        outputs.push(p.clone());
    }
    if let Some(p) = &a.profile {
        let prof = match &model {
            Some(model) => predicted_profile(model as &dyn Predictor<f64>, &scene, a.z, a.profile_points)?,
            None => simulated_profile(&scene, a.z, a.profile_points, a.scene.patch_edge)?,
        };
        let mut text = String::from("x,rss_dbm\n");
        for (x, v) in prof {
            text.push_str(&format!("{},{}\n", fmt_float(x), fmt_float(v)));
        }
        ensure_parent(p)?;
        fs::write(p, text)?;
        outputs.push(p.clone());
    }
    let (i, j) = m.argmax();
    let (x, y) = m.cell_center(i, j);
    println!(
        "{}x{} map at z = {} m; peak {:.3} dBm at ({x:.3}, {y:.3})",
        m.nx,
        m.ny,
        a.z,
        m.value(i, j)
    );
    Ok(outputs)
}

fn bench(a: &BenchArgs) -> Result<Vec<PathBuf>> {
    let pool: Dataset = read_dataset(&a.data)?;
    let spec = train_spec(a.model_kind, &a.knobs);
    let report = benchmark(&spec, &pool, a.reps)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match &a.out {
        Some(p) => {
            ensure_parent(p)?;
            fs::write(p, &text)?;
            println!(
                "{}: train {:.4} s, predict {:.3} us/sample over {} reps",
                report.model, report.train_seconds, report.predict_us_per_sample, report.repetitions
            );
            Ok(vec![p.clone()])
        }
        None => {
            print!("{text}");
            Ok(vec![])
        }
    }
}

fn campaign(a: &CampaignArgs) -> Result<Vec<PathBuf>> {
    let spec = CampaignSpec::from_json(&fs::read_to_string(&a.spec)?)?;
    let result = run_campaign(&spec, &a.out, |c| {
        eprintln!(
            "{} {} n={} epochs={} batch={} noise={}: mean MAE {:.4} dB",
            c.experiment, c.model, c.train_size, c.epochs, c.batch_size, c.noise_factor, c.mae_summary.mean
        );
    })?;
    println!("{} cells written to {}", result.cells.len(), a.out.display());
    let mut outputs = vec![a.out.join("campaign.json")];
    for e in &spec.experiments {
        outputs.push(a.out.join(format!("{}.csv", e.name)));
        outputs.push(a.out.join(format!("{}_summary.csv", e.name)));
        if e.profile.is_some() {
            outputs.push(a.out.join(format!("{}_profile.csv", e.name)));
        }
    }
    Ok(outputs)
}
