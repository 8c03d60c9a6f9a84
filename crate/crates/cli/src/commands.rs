use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fermat_core::alpha_select::{
    alpha_bound_clutter, alpha_bound_covering, alpha_bound_discontinuous, alpha_bound_geodesic,
    optimize_discontinuous, AlphaBoundInput, BoundFormula,
};
use fermat_core::clustering::{feasibility_audit, kmedoids_with, score};
use fermat_core::datasets::{
    gen_clutter, gen_poisson_cube, gen_swiss_roll, gen_uniform_cube, load_csv, save_csv, PointCloud,
};
use fermat_core::macro_fermat::{
    macro_feasibility_check, macro_fermat_grid, DensityPreset, GridConfig,
};
use fermat_core::spacing_stats::mc_moments_sweep;
use fermat_core::{fermat_matrix, ClutterSpec, FermatGraphConfig, FermatMatrix, SwissRollSpec};
use serde_json::{json, Value};

use crate::args::{
    AlphaBoundArgs, ClusterArgs, Command, CvSweepArgs, FermatArgs, GenCommand, MacroArgs,
    ReplayArgs,
};
use crate::{manifest, CliError};

/// What a finished command produced.
pub struct RunOutput {
    pub seed: Option<u64>,
    pub artifacts: Vec<PathBuf>,
}

pub fn output_of(command: &Command) -> Option<&PathBuf> {
    match command {
        Command::Gen(g) => Some(match g {
            GenCommand::Clutter { out, .. }
            | GenCommand::SwissRoll { out, .. }
            | GenCommand::Cube { out, .. }
            | GenCommand::Poisson { out, .. } => out,
        }),
        Command::Fermat(a) => Some(&a.out),
        Command::Cluster(a) => Some(&a.out),
        Command::AlphaBound(a) => a.out.as_ref(),
        Command::CvSweep(a) => Some(&a.out),
        Command::Macro(a) => a.out.as_ref(),
        Command::Replay(_) => None,
    }
}

pub fn output_of_mut(command: &mut Command) -> Option<&mut PathBuf> {
    match command {
        Command::Gen(g) => Some(match g {
            GenCommand::Clutter { out, .. }
            | GenCommand::SwissRoll { out, .. }
            | GenCommand::Cube { out, .. }
            | GenCommand::Poisson { out, .. } => out,
        }),
        Command::Fermat(a) => Some(&mut a.out),
        Command::Cluster(a) => Some(&mut a.out),
        Command::AlphaBound(a) => a.out.as_mut(),
        Command::CvSweep(a) => Some(&mut a.out),
        Command::Macro(a) => a.out.as_mut(),
        Command::Replay(_) => None,
    }
}

pub fn name_of(command: &Command) -> String {
    match command {
        Command::Gen(g) => match g {
            GenCommand::Clutter { .. } => "gen clutter",
            GenCommand::SwissRoll { .. } => "gen swiss-roll",
            GenCommand::Cube { .. } => "gen cube",
            GenCommand::Poisson { .. } => "gen poisson",
        },
        Command::Fermat(_) => "fermat",
        Command::Cluster(_) => "cluster",
        Command::AlphaBound(_) => "alpha-bound",
        Command::CvSweep(_) => "cv-sweep",
        Command::Macro(_) => "macro",
        Command::Replay(_) => "replay",
    }
    .to_string()
}

/// Runs one command. Replay is handled by [`replay`].
pub fn execute(command: &Command) -> Result<RunOutput, CliError> {
    match command {
        Command::Gen(g) => gen(g),
        Command::Fermat(a) => fermat(a),
        Command::Cluster(a) => cluster(a),
        Command::AlphaBound(a) => alpha_bound(a),
        Command::CvSweep(a) => cv_sweep(a),
        Command::Macro(a) => macro_distance(a),
        Command::Replay(_) => Err(CliError::Usage("replay cannot be nested".into())),
    }
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    ensure_parent(path)?;
    fs::write(path, text)?;
    Ok(())
}

fn gen(command: &GenCommand) -> Result<RunOutput, CliError> {
    let (cloud, seed, out) = match command {
        GenCommand::Clutter {
            d,
            lambda,
            n,
            seed,
            out,
        } => (
            gen_clutter(&ClutterSpec::new(*d, *lambda, *n), *seed)?,
            *seed,
            out,
        ),
        GenCommand::SwissRoll { n, seed, out } => {
            (gen_swiss_roll(&SwissRollSpec::new(*n), *seed)?, *seed, out)
        }
        GenCommand::Cube { n, d, seed, out } => (gen_uniform_cube(*n, *d, *seed)?, *seed, out),
        GenCommand::Poisson {
            intensity,
            d,
            seed,
            out,
        } => (gen_poisson_cube(*intensity, *d, *seed)?, *seed, out),
    };
    ensure_parent(out)?;
    save_csv(&cloud, out)?;
    eprintln!("wrote {} points to {}", cloud.len(), out.display());
    Ok(RunOutput {
        seed: Some(seed),
        artifacts: vec![out.clone()],
    })
}

fn fermat(args: &FermatArgs) -> Result<RunOutput, CliError> {
    if args.normalize && args.d.is_none() {
        return Err(CliError::Usage("--normalize requires --d".into()));
    }
    let cloud = load_csv(&args.input)?;
    let config = FermatGraphConfig {
        alpha: args.alpha,
        graph: args.graph,
        rescale: !args.no_rescale,
    };
    let mut matrix = fermat_matrix(&cloud, &config)?;
    if let (true, Some(d)) = (args.normalize, args.d) {
        matrix = matrix.normalize(d)?;
    }
    if args.root {
        matrix = matrix.root_variant();
    }
    ensure_parent(&args.out)?;
    matrix.save(&args.out)?;
    Ok(RunOutput {
        seed: None,
        artifacts: vec![
            args.out.clone(),
            fermat_core::fermat::sidecar_path(&args.out),
        ],
    })
}

/// Labels from a file holding one label per line or a CSV whose last
/// column is the label; a non-numeric first line is taken as a header.
fn read_labels(path: &Path) -> Result<Vec<usize>, CliError> {
    let text = fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or("").trim();
        match field.parse::<usize>() {
            Ok(l) => labels.push(l),
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(CliError::Usage(format!(
                    "{}: line {}: `{field}` is not a label",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(labels)
}

fn cluster(args: &ClusterArgs) -> Result<RunOutput, CliError> {
    if args.seeds.is_empty() {
        return Err(CliError::Usage(
            "--seeds must list at least one seed".into(),
        ));
    }
    let (matrices, cloud_labels, dim): (Vec<FermatMatrix>, Option<Vec<usize>>, Option<usize>) =
        match (&args.matrix, &args.input) {
            (Some(path), _) => (vec![FermatMatrix::load(path)?], None, None),
            (None, Some(path)) => {
                let sweep = args.alpha_sweep.as_deref().unwrap_or_default();
                if sweep.is_empty() {
                    return Err(CliError::Usage(
                        "--alpha-sweep must list at least one power".into(),
                    ));
                }
                let cloud = load_csv(path)?;
                let mut out = Vec::new();
                for &alpha in sweep {
                    eprintln!("alpha {alpha}: computing matrix");
                    let config = FermatGraphConfig {
                        alpha,
                        graph: args.graph,
                        rescale: true,
                    };
                    out.push(fermat_matrix(&cloud, &config)?);
                }
                (
                    out,
                    cloud.labels().map(<[usize]>::to_vec),
                    Some(cloud.dim()),
                )
            }
            (None, None) => {
                return Err(CliError::Usage(
                    "one of --matrix or --in is required".into(),
                ))
            }
        };
    let n = matrices[0].n();
    let truth = match &args.truth {
        Some(path) => Some(read_labels(path)?),
        None => cloud_labels,
    };
    if let Some(t) = &truth {
        if t.len() != n {
            return Err(fermat_core::Error::LengthMismatch {
                left: n,
                right: t.len(),
            }
            .into());
        }
    }
    let keep: Vec<usize> = match &truth {
        Some(t) => (0..n)
            .filter(|&i| Some(t[i]) != args.ignore_label)
            .collect(),
        None => Vec::new(),
    };

    fs::create_dir_all(&args.out)?;
    let mut sweep_csv = String::from("alpha,seed,metric,value\n");
    let mut assign_csv = String::from("alpha,seed,point,cluster\n");
    let mut runs = Vec::new();
    let mut audits = Vec::new();
    for matrix in &matrices {
        let alpha = matrix.alpha();
        for &seed in &args.seeds {
            let model = kmedoids_with(matrix, args.m, seed, args.max_iter, args.init)?;
            let mut metrics: BTreeMap<&str, f64> = BTreeMap::new();
            metrics.insert("objective", model.objective);
            let scores = match &truth {
                Some(t) => {
                    let pred: Vec<usize> = keep.iter().map(|&i| model.assignment[i]).collect();
                    let want: Vec<usize> = keep.iter().map(|&i| t[i]).collect();
                    let s = score(&pred, &want)?;
                    metrics.extend([
                        ("ami", s.ami),
                        ("ari", s.ari),
                        ("accuracy", s.accuracy),
                        ("f1", s.f1),
                    ]);
                    Some(s)
                }
                None => None,
            };
            for (metric, value) in &metrics {
                let _ = writeln!(sweep_csv, "{alpha},{seed},{metric},{value}");
            }
            for (i, c) in model.assignment.iter().enumerate() {
                let _ = writeln!(assign_csv, "{alpha},{seed},{i},{c}");
            }
            runs.push(json!({
                "seed": seed,
                "alpha": alpha,
                "m": args.m,
                "iterations": model.iterations,
                "converged": model.converged,
                "objective": model.objective,
                "medoids": model.medoid_indices,
                "scores": scores,
            }));
        }
        if let Some(t) = &truth {
            let normalized = match (matrix.is_normalized(), args.d.or(dim).or(matrix.meta().d)) {
                (true, _) => Some(matrix.clone()),
                (false, Some(d)) => Some(matrix.normalize(d)?),
                (false, None) => None,
            };
            if let Some(m) = normalized {
                let groups: Vec<Option<usize>> = t
                    .iter()
                    .map(|&l| (Some(l) != args.ignore_label).then_some(l))
                    .collect();
                match feasibility_audit(&m, &groups) {
                    Ok(r) => audits.push(json!({"alpha": alpha, "feasible": r.feasible, "epsilon_hat": r.epsilon_hat})),
                    Err(e) => eprintln!("alpha {alpha}: feasibility audit skipped: {e}"),
                }
            }
        }
    }
    let report = json!({
        "m": args.m,
        "init": args.init,
        "runs": runs,
        "feasibility": audits,
    });
    let paths = [
        args.out.join("sweep.csv"),
        args.out.join("report.json"),
        args.out.join("assignments.csv"),
    ];
    fs::write(&paths[0], sweep_csv)?;
    fs::write(&paths[1], serde_json::to_string_pretty(&report)? + "\n")?;
    fs::write(&paths[2], assign_csv)?;
    Ok(RunOutput {
        seed: args.seeds.first().copied(),
        artifacts: paths.to_vec(),
    })
}

fn need<T: Copy>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("this formula requires --{flag}")))
}

fn alpha_bound(args: &AlphaBoundArgs) -> Result<RunOutput, CliError> {
    let formula: BoundFormula = args
        .formula
        .parse()
        .map_err(|e: fermat_core::Error| CliError::Usage(e.to_string()))?;
    let (bound, inputs) = match formula {
        BoundFormula::Clutter => {
            let spec = ClutterSpec::new(args.d.unwrap_or(2), need(args.lambda, "lambda")?, 1);
            let b = alpha_bound_clutter(&spec)?;
            let inputs = json!({
                "d": spec.d,
                "lambda": spec.lambda,
                "a0": b.a0,
                "a1": b.a1,
                "geodesic_bound": b.geodesic_bound,
                "tau": b.tau,
            });
            (b.bound, inputs)
        }
        _ => {
            let mut input = AlphaBoundInput::new(
                need(args.d, "d")?,
                need(args.a0, "a0")?,
                need(args.a1, "a1")?,
                need(args.tau, "tau")?,
                args.c,
            );
            input.geodesic_bound = args.geodesic_bound;
            input.eta = args.eta;
            input.r = args.r;
            let bound = match formula {
                BoundFormula::Covering => alpha_bound_covering(&input)?,
                BoundFormula::Geodesic => {
                    need(args.geodesic_bound, "geodesic-bound")?;
                    alpha_bound_geodesic(&input)?
                }
                _ => {
                    need(args.eta, "eta")?;
                    if input.r.is_some() {
                        alpha_bound_discontinuous(&input)?
                    } else {
                        let (b, r) = optimize_discontinuous(&input, 1000)?;
                        input.r = Some(r);
                        b
                    }
                }
            };
            (bound, serde_json::to_value(&input)?)
        }
    };
    let report = json!({"formula_id": formula.id(), "bound": bound, "inputs": inputs});
    let text = serde_json::to_string_pretty(&report)? + "\n";
    print!("{text}");
    let artifacts = match &args.out {
        Some(out) => {
            write_text(out, &text)?;
            vec![out.clone()]
        }
        None => Vec::new(),
    };
    Ok(RunOutput {
        seed: None,
        artifacts,
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn cv_sweep(args: &CvSweepArgs) -> Result<RunOutput, CliError> {
    if args.d_list.is_empty() {
        return Err(CliError::Usage(
            "--d-list must list at least one dimension".into(),
        ));
    }
    let mut csv = String::from(
        "d,n,alpha,theta,mean,var,cv,se_mean,se_var,se_cv,closed_form_mean,closed_form_var\n",
    );
    for &d in &args.d_list {
        let alphas: Vec<f64> = match (&args.alpha_list, &args.theta_list) {
            (Some(a), _) => a.clone(),
            (None, Some(t)) => t.iter().map(|t| t * d as f64).collect(),
            (None, None) => {
                return Err(CliError::Usage(
                    "one of --alpha-list or --theta-list is required".into(),
                ))
            }
        };
        if alphas.is_empty() {
            return Err(CliError::Usage("the power list is empty".into()));
        }
        eprintln!(
            "d {d}: {} powers x {} replicates",
            alphas.len(),
            args.replicates
        );
        for r in mc_moments_sweep(d, args.n, &alphas, args.replicates, None, args.seed)? {
            let _ = writeln!(
                csv,
                "{d},{},{},{},{},{},{},{},{},{},{},{}",
                args.n,
                r.alpha,
                r.alpha / d as f64,
                r.mean_hat,
                r.var_hat,
                r.cv_hat,
                r.mean_se,
                r.var_se,
                r.cv_se,
                fmt_opt(r.closed_form_mean),
                fmt_opt(r.closed_form_var),
            );
        }
    }
    write_text(&args.out, &csv)?;
    Ok(RunOutput {
        seed: Some(args.seed),
        artifacts: vec![args.out.clone()],
    })
}

fn probe_clusters(cloud: &PointCloud) -> Result<Vec<Vec<Vec<f64>>>, CliError> {
    let labels = cloud
        .labels()
        .ok_or_else(|| CliError::Usage("--probes needs a label column".into()))?;
    let mut groups: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
    for (p, &l) in cloud.points().zip(labels) {
        groups.entry(l).or_default().push(p.to_vec());
    }
    Ok(groups.into_values().collect())
}

fn macro_distance(args: &MacroArgs) -> Result<RunOutput, CliError> {
    let preset: DensityPreset = args.density.parse()?;
    let field = preset.field()?;
    let cfg = GridConfig {
        resolution: args.resolution,
        floor: args.floor,
        ..GridConfig::default()
    };
    let report: Value = match (&args.from, &args.to, &args.probes) {
        (Some(x), Some(y), _) => {
            let distance = macro_fermat_grid(&field, &cfg, args.alpha, x, y)?;
            json!({"density": args.density, "alpha": args.alpha, "from": x, "to": y, "distance": distance})
        }
        (_, _, Some(path)) => {
            let clusters = probe_clusters(&load_csv(path)?)?;
            let r = macro_feasibility_check(&field, &cfg, args.alpha, &clusters)?;
            json!({"density": args.density, "alpha": args.alpha, "feasible": r.feasible, "margin": r.margin})
        }
        _ => return Err(CliError::Usage("give --from and --to, or --probes".into())),
    };
    let text = serde_json::to_string_pretty(&report)? + "\n";
    print!("{text}");
    let artifacts = match &args.out {
        Some(out) => {
            write_text(out, &text)?;
            vec![out.clone()]
        }
        None => Vec::new(),
    };
    Ok(RunOutput {
        seed: None,
        artifacts,
    })
}

/// Re-runs a manifest's command into a fresh location and compares every
/// artifact byte for byte. Returns whether all matched.
pub fn replay(args: &ReplayArgs) -> Result<bool, CliError> {
    let recorded = manifest::read(&args.manifest)?;
    let dir = match &args.into {
        Some(d) => d.clone(),
        None => args
            .manifest
            .parent()
            .unwrap_or(Path::new("."))
            .join("replay"),
    };
    fs::create_dir_all(&dir)?;
    let (command, pairs) = manifest::redirect(&recorded, &dir);
    let out = crate::run_recorded(command)?;
    let mut all = true;
    let mut rows = Vec::new();
    for (original, replayed) in &pairs {
        let same = matches!((fs::read(original), fs::read(replayed)), (Ok(a), Ok(b)) if a == b);
        all &= same;
        rows.push(json!({"original": original, "replayed": replayed, "identical": same}));
    }
    let produced: Vec<&PathBuf> = out
        .artifacts
        .iter()
        .filter(|a| !pairs.iter().any(|(_, r)| r == *a))
        .collect();
    if !produced.is_empty() {
        all = false;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(
            &json!({"identical": all, "artifacts": rows, "unexpected": produced})
        )?
    );
    Ok(all)
}
