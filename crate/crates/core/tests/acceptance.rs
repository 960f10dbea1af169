//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use lightsense::ingest::{
    calibrate_contributions, evaluate_locations, extract_baselines, synthesize_logs, Summary,
    SynthSpec,
};
use lightsense::planning::{door_state_scores, harmonic, state_sums};
use lightsense::scene::SensorNormal;
use lightsense::transport::config_sum;
use lightsense::{
    build_cover_instance_for, contribution, contribution_vector, distinctness_vector,
    exact_min_cover, greedy_set_cover, load_scene, perfect_sum, reading, sweep, CandidatePoint,
    CoverInstance, DoorState, LightConfig, Luminaire, Membership, NoiseModel, PerfectSumQuery,
    PhotometricProfile, Point2, Scene, StateSpace, WallSegment,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn apartment() -> Scene {
    load_scene(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/apartment.scene")).unwrap()
}

fn ms(d: Duration) -> String {
    format!("{:.1} ms", d.as_secs_f64() * 1e3)
}

fn distinctness_example() -> Outcome {
    let start = Instant::now();
    let d1 = distinctness_vector(&[1.0, 2.0, 4.0], 1.0);
    let d05 = distinctness_vector(&[1.0, 2.0, 4.0], 0.5);
    let elapsed = start.elapsed();
    let pass = d1.flags == [false, false, true]
        && d1.score() == 1
        && d05.flags == [true, true, true]
        && d05.score() == 3
        && elapsed < Duration::from_millis(1);
    outcome(
        pass,
        format!(
            "D_1 = {:?} ({}), D_0.5 score {} in {}",
            d1.flags,
            d1.score(),
            d05.score(),
            ms(elapsed)
        ),
    )
}

fn ambiguity_example() -> Outcome {
    let q = PerfectSumQuery::new(vec![2.0, 3.0, 4.0, 5.0], 7.0, 0.0).unwrap();
    let found: Vec<Vec<f64>> = perfect_sum(&q)
        .iter()
        .map(|c| {
            (0..4)
                .filter(|&i| c.is_on(i))
                .map(|i| q.contributions()[i])
                .collect()
        })
        .collect();
    let mut sets = found.clone();
    sets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    outcome(
        sets == vec![vec![2.0, 5.0], vec![3.0, 4.0]],
        format!("solutions {sets:?}"),
    )
}

struct Planning {
    scene: Scene,
    open: usize,
    open_greedy: usize,
    full_greedy: usize,
    full_complete: bool,
    full_state_greedy: usize,
    full_state_covered: usize,
    best_open_score: usize,
    elapsed: Duration,
}

fn plan() -> Planning {
    let start = Instant::now();
    let scene = apartment();
    let matrix = sweep(&scene, &scene.door_states(), &scene.candidates).unwrap();
    let open = scene.open_door_state();
    let best_open_score = door_state_scores(&matrix, 0.01, open)
        .into_iter()
        .max()
        .unwrap();
    let open_cover = greedy_set_cover(&build_cover_instance_for(
        &matrix,
        0.01,
        &[open],
        Membership::State,
    ));
    let open_greedy = if open_cover.complete {
        open_cover.size()
    } else {
        usize::MAX
    };
    let elapsed = start.elapsed();
    let all: Vec<usize> = (0..matrix.door_state_count()).collect();
    let full = greedy_set_cover(&build_cover_instance_for(
        &matrix,
        0.01,
        &all,
        Membership::Luminaire,
    ));
    let by_state = greedy_set_cover(&build_cover_instance_for(
        &matrix,
        0.01,
        &all,
        Membership::State,
    ));
    Planning {
        scene,
        open,
        open_greedy,
        full_greedy: full.size(),
        full_complete: full.complete,
        full_state_greedy: by_state.size(),
        full_state_covered: by_state.covered.count_ones(..),
        best_open_score,
        elapsed,
    }
}

fn open_door_single_sensor(p: &Planning) -> Outcome {
    let points = p.scene.candidates.len();
    let pass = p.best_open_score == 64
        && p.open_greedy == 1
        && points >= 2000
        && p.elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "state {} best score {}/64, greedy {} sensor(s), {} points in {}",
            p.scene.door_state_label(&p.scene.door_states()[p.open]),
            p.best_open_score,
            p.open_greedy,
            points,
            ms(p.elapsed)
        ),
    )
}

fn dynamic_door_growth(p: &Planning) -> Outcome {
    let pass = p.full_complete && p.full_greedy > p.open_greedy && p.full_greedy >= 3;
    outcome(
        pass,
        format!(
            "full universe greedy {} sensors (complete {}) vs open-door {}; whole-state membership: {} sensor(s) covering {}/576, no complete cover exists",
            p.full_greedy, p.full_complete, p.open_greedy, p.full_state_greedy, p.full_state_covered
        ),
    )
}

fn state_accounting(p: &Planning) -> Outcome {
    let matrix = sweep(&p.scene, &p.scene.door_states(), &p.scene.candidates[..1]).unwrap();
    let space = StateSpace::of(&matrix);
    let pass = space.config_count() == 64 && space.door_states == 9 && space.total() == 576;
    outcome(
        pass,
        format!(
            "{} configs x {} door states = {}",
            space.config_count(),
            space.door_states,
            space.total()
        ),
    )
}

fn brute_force(values: &[f64], target: f64, epsilon: f64) -> Vec<u32> {
    (0..1u32 << values.len())
        .filter(|&p| {
            let s: f64 = (0..values.len())
                .filter(|i| p >> i & 1 == 1)
                .map(|i| values[i])
                .sum();
            (s - target).abs() <= epsilon
        })
        .collect()
}

fn perfect_sum_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let start = Instant::now();
    let mut mismatches = 0;
    let mut solutions = 0;
    for _ in 0..500 {
        let n = rng.gen_range(1..=12);
        let values: Vec<f64> = (0..n)
            .map(|_| match rng.gen_range(0..3) {
                0 => f64::from(rng.gen_range(0..10)),
                1 => 0.0,
                _ => rng.gen_range(0.0..100.0),
            })
            .collect();
        let truth = LightConfig::from_index(rng.gen_range(0..1u32 << n), n);
        let target = (config_sum(&values, truth) + rng.gen_range(-1.0..1.0)).max(0.0);
        let epsilon = if rng.gen_bool(0.3) {
            0.0
        } else {
            rng.gen_range(0.0..2.0)
        };
        let q = PerfectSumQuery::new(values.clone(), target, epsilon).unwrap();
        let got: Vec<u32> = perfect_sum(&q).iter().map(|c| c.index()).collect();
        let want = brute_force(&values, target, epsilon);
        solutions += want.len();
        mismatches += usize::from(got != want);
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!(
            "500 instances, {mismatches} mismatches, {solutions} solutions, {}",
            ms(elapsed)
        ),
    )
}

fn set_cover_guarantee() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = Instant::now();
    let mut violations = 0;
    let mut worst: f64 = 1.0;
    for _ in 0..200 {
        let size = rng.gen_range(1..=20);
        let count = rng.gen_range(1..=15);
        let density = rng.gen_range(0.1..0.6);
        let mut universe = FixedBitSet::with_capacity(size);
        universe.insert_range(..);
        let sets = (0..count)
            .map(|_| {
                let mut s = FixedBitSet::with_capacity(size);
                (0..size)
                    .filter(|_| rng.gen_bool(density))
                    .for_each(|e| s.insert(e));
                s
            })
            .collect();
        let inst = CoverInstance::new(universe, sets);
        let greedy = greedy_set_cover(&inst);
        let exact = exact_min_cover(&inst, 20).unwrap();
        let largest = inst.sets.iter().map(|s| s.count_ones(..)).max().unwrap();
        if exact.size() > 0 {
            worst = worst.max(greedy.size() as f64 / exact.size() as f64);
        }
        if greedy.size() as f64 > harmonic(largest) * exact.size() as f64
            || greedy.covered != exact.covered
        {
            violations += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && elapsed < Duration::from_secs(30),
        format!(
            "200 instances, {violations} violations, worst greedy/exact {worst:.3}, {}",
            ms(elapsed)
        ),
    )
}

fn random_scene(rng: &mut ChaCha8Rng, dome: &lightsense::IesTable) -> Scene {
    let n = rng.gen_range(1..=6);
    let luminaires = (0..n)
        .map(|id| Luminaire {
            id,
            label: format!("L{id}"),
            position: Point2::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)),
            mount_height: rng.gen_range(2.0..3.0),
            intensity: rng.gen_range(10.0..500.0),
            profile: match rng.gen_range(0..3) {
                0 => PhotometricProfile::Isotropic,
                1 => PhotometricProfile::CosineLobe,
                _ => PhotometricProfile::Ies {
                    source: "dome.ies".into(),
                    table: dome.clone(),
                },
            },
        })
        .collect();
    Scene::new(
        3.0,
        random_walls(rng, 4),
        vec![],
        luminaires,
        vec![],
        vec![],
    )
    .unwrap()
}

fn random_walls(rng: &mut ChaCha8Rng, max: usize) -> Vec<WallSegment> {
    (0..rng.gen_range(0..=max))
        .filter_map(|_| {
            let mut p = || Point2::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
            WallSegment::new(p(), p()).ok()
        })
        .collect()
}

fn physics() -> Outcome {
    let dome = lightsense::parse_ies(include_str!("../data/dome.ies")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let none = DoorState { angles: vec![] };
    let (mut additive, mut square, mut monotone) = (0, 0, 0);
    let mut worst_rel: f64 = 0.0;
    for _ in 0..100 {
        let scene = random_scene(&mut rng, &dome);
        let n = scene.luminaire_count();
        let mut blocked = scene.walls.clone();
        blocked.extend(random_walls(&mut rng, 4));
        let more = Scene::new(
            3.0,
            blocked,
            vec![],
            scene.luminaires.clone(),
            vec![],
            vec![],
        )
        .unwrap();
        for _ in 0..10 {
            let point = CandidatePoint {
                position: Point2::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)),
                height: rng.gen_range(0.0..1.5),
                normal: SensorNormal::Omni,
            };
            let values = contribution_vector(&scene, &none, &point).unwrap();
            let a = rng.gen_range(0..1u32 << n);
            let b = rng.gen_range(0..1u32 << n) & !a;
            let union = LightConfig::from_index(a | b, n);
            let direct = (0..n)
                .filter(|i| (a | b) >> i & 1 == 1)
                .map(|i| contribution(&scene, &none, &scene.luminaires[i], &point).unwrap())
                .fold(0.0, |acc, v| acc + v);
            additive += usize::from(reading(&values, union, &NoiseModel::None) != direct);

            let after = contribution_vector(&more, &none, &point).unwrap();
            monotone += after.iter().zip(&values).filter(|(x, y)| x > y).count();

            // move the sensor along the ray from one luminaire
            let lum = &scene.luminaires[rng.gen_range(0..n)];
            let dir = [
                point.position.x - lum.position.x,
                point.position.y - lum.position.y,
                point.height - lum.mount_height,
            ];
            let d = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
            let at = |t: f64| CandidatePoint {
                position: Point2::new(
                    lum.position.x + t * dir[0] / d,
                    lum.position.y + t * dir[1] / d,
                ),
                height: lum.mount_height + t * dir[2] / d,
                normal: SensorNormal::Omni,
            };
            let free = Scene::new(
                3.0,
                vec![],
                vec![],
                vec![Luminaire {
                    id: 0,
                    ..lum.clone()
                }],
                vec![],
                vec![],
            )
            .unwrap();
            let e =
                |t: f64| contribution(&free, &none, &free.luminaires[0], &at(t)).unwrap() * t * t;
            let (e1, e2) = (e(d), e(rng.gen_range(0.3..8.0)));
            let rel = (e1 - e2).abs() / e1.abs().max(e2.abs()).max(f64::MIN_POSITIVE);
            worst_rel = worst_rel.max(rel);
            square += usize::from(rel > 1e-9);
        }
    }
    outcome(
        additive == 0 && square == 0 && monotone == 0,
        format!(
            "100 scenes x 10 points: {additive} additivity, {square} inverse-square (worst rel {worst_rel:.1e}), {monotone} occlusion violations"
        ),
    )
}

fn separated(values: &[f64], gap: f64) -> bool {
    let mut sums = state_sums(values);
    sums.sort_by(f64::total_cmp);
    sums.windows(2).all(|w| w[1] - w[0] > gap)
}

fn round_trip() -> Outcome {
    let scene = apartment();
    let open = scene.open_door_state();
    let epsilon = 0.01;
    let grid = sweep(&scene, &scene.door_states()[open..=open], &scene.candidates).unwrap();
    // four locations whose sums are all separated, three arbitrary ones
    let clear: Vec<usize> = (0..grid.point_count())
        .filter(|&i| separated(grid.values(i, 0), 2.0 * epsilon))
        .collect();
    let mut picks: Vec<usize> = (0..4).map(|k| clear[k * clear.len() / 4]).collect();
    picks.extend((0..3).map(|k| (k * 911 + 400) % grid.point_count()));
    let x: Vec<Vec<f64>> = picks.iter().map(|&i| grid.values(i, 0).to_vec()).collect();

    let accuracy = |sigma: f64| {
        let spec = SynthSpec {
            noise: NoiseModel::gaussian(sigma, 9),
            ..SynthSpec::default()
        };
        let (samples, commands) = synthesize_logs(&x, &spec);
        let table = extract_baselines(&samples, &commands, 3.0, 3.0);
        let cals: Vec<_> = (0..x.len())
            .map(|l| calibrate_contributions(&table, l).unwrap())
            .collect();
        evaluate_locations(&table, &cals, epsilon).unwrap()
    };

    let noiseless = accuracy(0.0);
    let eligible: Vec<usize> = (0..x.len())
        .filter(|&l| separated(&x[l], 2.0 * epsilon))
        .collect();
    let exact = eligible
        .iter()
        .all(|&l| noiseless[l].summary.min == 1.0 && noiseless[l].summary.mean == 1.0);

    let sigmas = [0.0, 0.002, 0.01, 0.05, 0.2, 1.0];
    let medians: Vec<f64> = sigmas
        .iter()
        .map(|&s| {
            let all: Vec<f64> = accuracy(s)
                .iter()
                .flat_map(|r| r.per_config.iter().map(|c| c.1))
                .collect();
            Summary::of(&all).unwrap().median
        })
        .collect();
    let monotone = medians.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        exact && !eligible.is_empty() && monotone,
        format!(
            "{} of {} locations separated, noiseless accuracy 1.0 at all of them: {exact}; median by sigma {:?}: {:?}",
            eligible.len(),
            x.len(),
            sigmas,
            medians.iter().map(|m| (m * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    )
}

fn throughput(p: &Planning) -> Outcome {
    let start = Instant::now();
    let states = p.scene.door_states();
    let matrix = sweep(&p.scene, &states, &p.scene.candidates).unwrap();
    let scores: usize = (0..states.len())
        .map(|q| door_state_scores(&matrix, 0.01, q).iter().sum::<usize>())
        .sum();
    let elapsed = start.elapsed();
    let space = StateSpace::of(&matrix);
    // reference rate: 2,800 points every five minutes, to be beaten five-fold
    let budget = Duration::from_secs(60);
    outcome(
        elapsed < budget,
        format!(
            "{} points x {} states swept and scored in {} (budget {} s, score mass {scores})",
            matrix.point_count(),
            space.total(),
            ms(elapsed),
            budget.as_secs()
        ),
    )
}

fn main() -> ExitCode {
    let planning = plan();
    let results = [
        ("distinctness worked example", distinctness_example()),
        ("perfect-sum ambiguity example", ambiguity_example()),
        (
            "open-door single sensor",
            open_door_single_sensor(&planning),
        ),
        ("dynamic-door cover growth", dynamic_door_growth(&planning)),
        ("state-space accounting", state_accounting(&planning)),
        ("perfect-sum oracle equivalence", perfect_sum_oracle()),
        ("set-cover harmonic guarantee", set_cover_guarantee()),
        ("physics properties", physics()),
        ("round-trip accuracy", round_trip()),
        ("throughput", throughput(&planning)),
    ];
    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        println!(
            "{} {:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
