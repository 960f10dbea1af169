use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use lightsense::inference::{in_range_mask, infer as run_inference, sensor_votes};
use lightsense::ingest::{
    calibrate_contributions, calibrate_least_squares, evaluate_fused, evaluate_locations,
    extract_baselines, synthesize_logs, CommandLog, SampleLog, Summary, SynthSpec,
};
use lightsense::planning::{aggregate_scores, door_state_scores};
use lightsense::report::{self, FusedRow, InferenceRow};
use lightsense::transport::reading;
use lightsense::{
    build_cover_instance_for, exact_min_cover, fuse_votes, greedy_set_cover, load_scene, sweep,
    ContributionMatrix, CoverError, LightConfig, Membership, NoiseModel, PerfectSumQuery, Scene,
    StateSpace,
};

use crate::{CoverArgs, InferArgs, IngestArgs, NoiseArgs, SceneArgs, SynthArgs, Universe, Usage};

struct Loaded {
    scene: Scene,
    matrix: ContributionMatrix,
}

fn load(args: &SceneArgs) -> Result<Scene> {
    let scene = load_scene(&args.scene)?;
    match args.grid_spacing {
        Some(s) => Ok(scene.with_grid_spacing(s)?),
        None => Ok(scene),
    }
}

fn load_and_sweep(args: &SceneArgs) -> Result<Loaded> {
    let scene = load(args)?;
    if scene.candidates.is_empty() {
        bail!("scene has no candidate points");
    }
    let start = Instant::now();
    let matrix = sweep(&scene, &scene.door_states(), &scene.candidates)?;
    log::info!(
        "swept {} points x {} door states in {:.3} s",
        matrix.point_count(),
        matrix.door_state_count(),
        start.elapsed().as_secs_f64()
    );
    Ok(Loaded { scene, matrix })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn noise(args: &NoiseArgs) -> NoiseModel {
    if args.sigma > 0.0 {
        NoiseModel::gaussian(args.sigma, args.seed)
    } else {
        NoiseModel::None
    }
}

fn check_points(points: &[usize], count: usize) -> Result<()> {
    if let Some(&p) = points.iter().find(|&&p| p >= count) {
        return Err(Usage(format!(
            "point index {p} out of range (scene has {count} candidates)"
        ))
        .into());
    }
    Ok(())
}

pub fn simulate(args: &SceneArgs) -> Result<()> {
    let start = Instant::now();
    let Loaded { scene, matrix } = load_and_sweep(args)?;
    let elapsed = start.elapsed().as_secs_f64();
    write(
        &args.out,
        "contributions.csv",
        &report::contributions_csv(&matrix),
    )?;
    let space = StateSpace::of(&matrix);
    println!("luminaires   {}", scene.luminaire_count());
    println!("points       {}", matrix.point_count());
    println!("door states  {}", matrix.door_state_count());
    println!("states       {}", space.total());
    println!("elapsed      {elapsed:.3} s");
    Ok(())
}

pub fn heatmap(args: &SceneArgs) -> Result<()> {
    let Loaded { scene, matrix } = load_and_sweep(args)?;
    let points = &scene.candidates;
    let configs = 1usize << matrix.luminaire_count();
    let mut total = vec![0; matrix.point_count()];
    for q in 0..matrix.door_state_count() {
        let scores = door_state_scores(&matrix, args.tau, q);
        for (t, s) in total.iter_mut().zip(&scores) {
            *t += s;
        }
        let best = scores.iter().max().copied().unwrap_or(0);
        println!(
            "q{q} {:<24} max {best}/{configs}",
            scene.door_state_label(&scene.door_states()[q])
        );
        write(
            &args.out,
            &format!("heatmap_q{q}.csv"),
            &report::heatmap_csv(points, &scores),
        )?;
        let raster = report::heatmap_raster(points, &scores);
        write(
            &args.out,
            &format!("heatmap_q{q}.pgm"),
            &report::pgm(&raster, configs),
        )?;
    }
    debug_assert_eq!(total, aggregate_scores(&matrix, args.tau));
    let states = StateSpace::of(&matrix).total();
    println!(
        "total max {}/{states}",
        total.iter().max().copied().unwrap_or(0)
    );
    write(
        &args.out,
        "heatmap_total.csv",
        &report::heatmap_csv(points, &total),
    )?;
    let raster = report::heatmap_raster(points, &total);
    write(
        &args.out,
        "heatmap_total.pgm",
        &report::pgm(&raster, states),
    )?;
    Ok(())
}

fn universe_states(scene: &Scene, matrix: &ContributionMatrix, universe: Universe) -> Vec<usize> {
    match universe {
        Universe::OpenDoor => vec![scene.open_door_state()],
        Universe::Full => (0..matrix.door_state_count()).collect(),
    }
}

pub fn solve_cover(args: &CoverArgs) -> Result<()> {
    let Loaded { scene, matrix } = load_and_sweep(&args.scene)?;
    let membership = Membership::from(args.membership);
    let door_states = universe_states(&scene, &matrix, args.universe);
    let instance = build_cover_instance_for(&matrix, args.scene.tau, &door_states, membership);
    let solution = greedy_set_cover(&instance);

    let space = StateSpace::of(&matrix);
    let states = space
        .covered_states(&solution.covered, membership)
        .count_ones(..);
    println!(
        "greedy cover: {} sensors, {}/{} elements, {}/{} states, complete {}",
        solution.size(),
        solution.covered.count_ones(..),
        instance.universe_size(),
        states,
        door_states.len() * space.config_count(),
        solution.complete
    );
    let mut cumulative = 0;
    for (step, (&i, &gain)) in solution.chosen.iter().zip(&solution.gains).enumerate() {
        cumulative += gain;
        let p = scene.candidates[i].position;
        println!(
            "  {step}: point {i} ({}, {}) gain {gain} cumulative {cumulative}",
            p.x, p.y
        );
    }
    write(
        &args.scene.out,
        "cover.csv",
        &report::cover_csv(&solution, &scene.candidates),
    )?;

    if args.exact {
        match exact_min_cover(&instance, args.exact_limit) {
            Ok(exact) => {
                println!("exact cover: {} sensors {:?}", exact.size(), exact.chosen);
                write(
                    &args.scene.out,
                    "cover_exact.csv",
                    &report::cover_csv(&exact, &scene.candidates),
                )?;
            }
            Err(e @ CoverError::TooLarge { .. }) => {
                return Err(Usage(format!("--exact: {e}")).into())
            }
        }
    }
    Ok(())
}

/// One sensor reading awaiting disaggregation.
struct Observation {
    reading: u64,
    point: usize,
    door_state: usize,
    lux: f64,
    truth: Option<u32>,
}

/// Row index, observation and its candidate configurations.
type Solved<'a> = (usize, &'a Observation, Vec<LightConfig>);

fn simulated_observations(args: &InferArgs, loaded: &Loaded) -> Result<Vec<Observation>> {
    let matrix = &loaded.matrix;
    let points = if args.points.is_empty() {
        let all: Vec<usize> = (0..matrix.door_state_count()).collect();
        let instance =
            build_cover_instance_for(matrix, args.scene.tau, &all, Membership::Luminaire);
        greedy_set_cover(&instance).chosen
    } else {
        check_points(&args.points, matrix.point_count())?;
        args.points.clone()
    };
    log::info!("simulating readings at points {points:?}");
    let noise = noise(&args.noise);
    let space = StateSpace::of(matrix);
    let mut out = Vec::new();
    for q in 0..space.door_states {
        for config in LightConfig::all(space.luminaires) {
            let p = config.index();
            for &point in &points {
                let task = noise.for_task(&[point as u64, q as u64, u64::from(p)]);
                out.push(Observation {
                    reading: space.id(p as usize, q) as u64,
                    point,
                    door_state: q,
                    lux: reading(matrix.values(point, q), config, &task),
                    truth: Some(p),
                });
            }
        }
    }
    Ok(out)
}

fn read_observations(path: &Path, matrix: &ContributionMatrix) -> Result<Vec<Observation>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let expected = ["reading", "point_index", "door_state", "lux"];
    if header.len() < 4
        || header[..4] != expected
        || (header.len() == 5 && header[4] != "config_p")
        || header.len() > 5
    {
        bail!(
            "{}: header must be `reading,point_index,door_state,lux[,config_p]`",
            path.display()
        );
    }
    let mut out = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let line = k + 2;
        let record = record.with_context(|| format!("{} line {line}", path.display()))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let bad = |what: &str| anyhow::anyhow!("{} line {line}: invalid {what}", path.display());
        let obs = Observation {
            reading: field(0).parse().map_err(|_| bad("reading"))?,
            point: field(1).parse().map_err(|_| bad("point_index"))?,
            door_state: field(2).parse().map_err(|_| bad("door_state"))?,
            lux: field(3).parse().map_err(|_| bad("lux"))?,
            truth: match field(4) {
                "" => None,
                s => Some(s.parse().map_err(|_| bad("config_p"))?),
            },
        };
        if obs.point >= matrix.point_count() || obs.door_state >= matrix.door_state_count() {
            bail!(
                "{} line {line}: point or door state out of range",
                path.display()
            );
        }
        if !(obs.lux.is_finite() && obs.lux >= 0.0) {
            bail!(
                "{} line {line}: lux must be finite and >= 0",
                path.display()
            );
        }
        if obs
            .truth
            .is_some_and(|p| p >> matrix.luminaire_count() != 0)
        {
            bail!(
                "{} line {line}: config_p does not fit the scene",
                path.display()
            );
        }
        out.push(obs);
    }
    Ok(out)
}

pub fn infer(args: &InferArgs) -> Result<()> {
    let loaded = load_and_sweep(&args.scene)?;
    let matrix = &loaded.matrix;
    let n = matrix.luminaire_count();
    let observations = match &args.readings {
        Some(path) => read_observations(path, matrix)?,
        None => simulated_observations(args, &loaded)?,
    };

    let mut rows = Vec::with_capacity(observations.len());
    let mut candidates_out = String::from("reading,point_index,candidate_p\n");
    let mut groups: BTreeMap<u64, Vec<Solved>> = BTreeMap::new();
    for obs in &observations {
        let values = matrix.values(obs.point, obs.door_state);
        let query = PerfectSumQuery::new(values.to_vec(), obs.lux, args.epsilon)?;
        let truth = obs.truth.map(|p| LightConfig::from_index(p, n));
        let result = run_inference(&query, truth, args.nearest);
        for c in &result.candidates {
            candidates_out.push_str(&format!("{},{},{}\n", obs.reading, obs.point, c.index()));
        }
        rows.push(InferenceRow {
            point_index: obs.point,
            door_state: obs.door_state,
            config_p: obs.truth,
            n_candidates: result.candidates.len(),
            accuracy: result.mean_accuracy,
            no_solution: result.no_solution,
        });
        groups
            .entry(obs.reading)
            .or_default()
            .push((obs.point, obs, result.candidates));
    }

    let mut fused_rows = Vec::with_capacity(groups.len());
    for (id, members) in &groups {
        let door_state = members[0].1.door_state;
        let truth = members[0].1.truth;
        if members
            .iter()
            .any(|m| m.1.door_state != door_state || m.1.truth != truth)
        {
            bail!("reading {id}: sensors disagree on door state or true configuration");
        }
        let votes: Vec<_> = members
            .iter()
            .map(|(point, _, cands)| {
                sensor_votes(cands, &in_range_mask(matrix.values(*point, door_state)))
            })
            .collect();
        let fused = fuse_votes(&votes)?;
        fused_rows.push(FusedRow {
            reading: *id,
            door_state,
            sensors: members.len(),
            config_p: truth,
            fused_p: fused.index(),
            accuracy: truth
                .map(|p| lightsense::inference::jaccard(LightConfig::from_index(p, n), fused)),
        });
    }

    write(
        &args.scene.out,
        "inference_report.csv",
        &report::inference_csv(&rows),
    )?;
    write(&args.scene.out, "candidates.csv", &candidates_out)?;
    write(
        &args.scene.out,
        "fused_report.csv",
        &report::fused_csv(&fused_rows),
    )?;

    let per_sensor: Vec<f64> = rows.iter().filter_map(|r| r.accuracy).collect();
    let fused: Vec<f64> = fused_rows.iter().filter_map(|r| r.accuracy).collect();
    println!(
        "readings {} in {} observations",
        rows.len(),
        fused_rows.len()
    );
    if let (Some(a), Some(b)) = (Summary::of(&per_sensor), Summary::of(&fused)) {
        println!(
            "per-sensor accuracy mean {} median {}",
            report::format_sig(a.mean, 6),
            report::format_sig(a.median, 6)
        );
        println!(
            "fused accuracy      mean {} median {}",
            report::format_sig(b.mean, 6),
            report::format_sig(b.median, 6)
        );
    }
    Ok(())
}

pub fn ingest(args: &IngestArgs) -> Result<()> {
    let open = |p: &Path| File::open(p).with_context(|| format!("opening {}", p.display()));
    let samples = SampleLog::parse(open(&args.samples)?)?;
    let commands = CommandLog::parse(open(&args.commands)?, args.luminaires)?;
    let table = extract_baselines(&samples, &commands, args.settle, args.window);
    for f in &table.flagged {
        log::warn!(
            "location {}: command {} ({}) not averaged",
            f.location,
            f.command,
            f.config
        );
    }
    let calibrations = table
        .locations()
        .into_iter()
        .map(|loc| {
            if args.least_squares {
                calibrate_least_squares(&table, loc)
            } else {
                calibrate_contributions(&table, loc)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let results = evaluate_locations(&table, &calibrations, args.epsilon)?;
    write(
        &args.out,
        "accuracy_by_location.csv",
        &report::accuracy_csv(&results),
    )?;
    for r in &results {
        println!(
            "location {} median {} mean {} (n={})",
            r.location,
            report::format_sig(r.summary.median, 6),
            report::format_sig(r.summary.mean, 6),
            r.summary.n
        );
    }
    let fused: Vec<f64> = evaluate_fused(&table, &calibrations, args.epsilon)?
        .into_iter()
        .map(|r| r.1)
        .collect();
    if let Some(s) = Summary::of(&fused) {
        println!(
            "fused median {} mean {} (n={})",
            report::format_sig(s.median, 6),
            report::format_sig(s.mean, 6),
            s.n
        );
    }
    Ok(())
}

pub fn synth_log(args: &SynthArgs) -> Result<()> {
    let scene = load(&args.scene)?;
    check_points(&args.points, scene.candidates.len())?;
    let states = scene.door_states();
    let q = args.door_state.unwrap_or_else(|| scene.open_door_state());
    if q >= states.len() {
        return Err(Usage(format!(
            "door state {q} out of range (scene has {})",
            states.len()
        ))
        .into());
    }
    let points: Vec<_> = args.points.iter().map(|&i| scene.candidates[i]).collect();
    let matrix = sweep(&scene, &states[q..=q], &points)?;
    let locations: Vec<Vec<f64>> = (0..points.len())
        .map(|k| matrix.values(k, 0).to_vec())
        .collect();
    let spec = SynthSpec {
        dwell: args.dwell,
        background: args.background,
        noise: noise(&args.noise),
        ..SynthSpec::default()
    };
    let (samples, commands) = synthesize_logs(&locations, &spec);
    write(&args.scene.out, "samples.csv", &samples.to_csv())?;
    write(&args.scene.out, "commands.csv", &commands.to_csv())?;
    println!(
        "{} samples at {} locations, {} commands ({})",
        samples.rows.len(),
        points.len(),
        commands.rows.len(),
        scene.door_state_label(&states[q])
    );
    Ok(())
}
