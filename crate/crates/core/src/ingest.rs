//! Reduction of logged sensor streams to per-configuration baselines, and
//! accuracy evaluation of the disaggregation on those baselines.
//!
//! Inputs are two CSV files: `t,location,lux` samples and `t,bitmask`
//! commands, where bit `i` of the mask switches luminaire `i`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use nalgebra::{DMatrix, DVector};

use crate::error::IngestError;
use crate::inference::{fuse_votes, in_range_mask, infer, jaccard, sensor_votes, PerfectSumQuery};
use crate::transport::{reading, LightConfig, NoiseModel, SENSOR_MAX_LUX};

pub const DEFAULT_SETTLE: f64 = 3.0;
pub const DEFAULT_WINDOW: f64 = 3.0;
/// Sampling rate of the reference sensor rig, Hz.
pub const SAMPLE_RATE_HZ: f64 = 4.7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub location: usize,
    pub lux: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleLog {
    pub rows: Vec<Sample>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub t: f64,
    pub config: LightConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandLog {
    pub n: usize,
    pub rows: Vec<Command>,
}

fn malformed(file: &'static str, line: usize, message: impl Into<String>) -> IngestError {
    IngestError::Malformed {
        file,
        line,
        message: message.into(),
    }
}

fn csv_rows<R: Read>(
    reader: R,
    file: &'static str,
    header: &[&str],
) -> Result<Vec<(usize, Vec<String>)>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let found: Vec<String> = rdr
        .headers()
        .map_err(|e| malformed(file, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(malformed(
            file,
            1,
            format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.join(",")
            ),
        ));
    }
    rdr.records()
        .enumerate()
        .map(|(i, r)| {
            let r = r.map_err(|e| malformed(file, i + 2, e.to_string()))?;
            Ok((i + 2, r.iter().map(str::to_string).collect()))
        })
        .collect()
}

fn field<T: std::str::FromStr>(
    file: &'static str,
    line: usize,
    raw: &str,
    what: &str,
) -> Result<T, IngestError> {
    raw.parse()
        .map_err(|_| malformed(file, line, format!("bad {what} `{raw}`")))
}

impl SampleLog {
    pub fn parse<R: Read>(reader: R) -> Result<Self, IngestError> {
        const FILE: &str = "samples.csv";
        let mut rows = Vec::new();
        let mut last_t: BTreeMap<usize, f64> = BTreeMap::new();
        for (line, rec) in csv_rows(reader, FILE, &["t", "location", "lux"])? {
            let t: f64 = field(FILE, line, &rec[0], "timestamp")?;
            let location: usize = field(FILE, line, &rec[1], "location")?;
            let lux: f64 = field(FILE, line, &rec[2], "lux")?;
            if !t.is_finite() {
                return Err(malformed(FILE, line, "non-finite timestamp"));
            }
            if !(0.0..=SENSOR_MAX_LUX).contains(&lux) {
                return Err(IngestError::OutOfRange(lux));
            }
            if let Some(&prev) = last_t.get(&location) {
                if t < prev {
                    return Err(IngestError::SampleOrder { location, t });
                }
            }
            last_t.insert(location, t);
            rows.push(Sample { t, location, lux });
        }
        Ok(Self { rows })
    }

    pub fn locations(&self) -> BTreeSet<usize> {
        self.rows.iter().map(|r| r.location).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,location,lux\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.t, r.location, r.lux));
        }
        out
    }
}

impl CommandLog {
    pub fn parse<R: Read>(reader: R, n: usize) -> Result<Self, IngestError> {
        const FILE: &str = "commands.csv";
        let mut rows: Vec<Command> = Vec::new();
        for (line, rec) in csv_rows(reader, FILE, &["t", "bitmask"])? {
            let t: f64 = field(FILE, line, &rec[0], "timestamp")?;
            let mask: u64 = field(FILE, line, &rec[1], "bitmask")?;
            if !t.is_finite() {
                return Err(malformed(FILE, line, "non-finite timestamp"));
            }
            if mask >> n != 0 {
                return Err(IngestError::BadMask { mask, n });
            }
            if rows.last().is_some_and(|c| t <= c.t) {
                return Err(IngestError::CommandOrder(line));
            }
            rows.push(Command {
                t,
                config: LightConfig::from_index(mask as u32, n),
            });
        }
        Ok(Self { n, rows })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,bitmask\n");
        for c in &self.rows {
            out.push_str(&format!("{},{}\n", c.t, c.config.index()));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineCell {
    pub mean: f64,
    pub count: usize,
    /// Population standard deviation of the averaged samples.
    pub stddev: f64,
}

/// A command whose interval could not supply a full settle + window span,
/// or whose window held no samples for a location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlaggedInterval {
    pub location: usize,
    pub command: usize,
    pub config: LightConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTable {
    pub n: usize,
    pub cells: BTreeMap<(usize, u32), BaselineCell>,
    pub flagged: Vec<FlaggedInterval>,
}

impl BaselineTable {
    pub fn get(&self, location: usize, config: LightConfig) -> Option<&BaselineCell> {
        self.cells.get(&(location, config.index()))
    }

    pub fn locations(&self) -> BTreeSet<usize> {
        self.cells.keys().map(|k| k.0).collect()
    }
}

/// Welford running mean/variance; a constant stream yields its value
/// exactly.
#[derive(Default)]
struct Accumulator {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn cell(&self) -> BaselineCell {
        BaselineCell {
            mean: self.mean,
            count: self.count,
            stddev: (self.m2 / self.count as f64).max(0.0).sqrt(),
        }
    }
}

/// Whether a location's log runs up to `t`, allowing one typical sampling
/// period of slack.
fn reaches(rows: &[&Sample], t: f64) -> bool {
    let Some(last) = rows.last() else {
        return false;
    };
    let mut gaps: Vec<f64> = rows.windows(2).map(|w| w[1].t - w[0].t).collect();
    gaps.sort_by(f64::total_cmp);
    let period = gaps.get(gaps.len() / 2).copied().unwrap_or(0.0);
    last.t >= t - period
}

/// For every command, drops samples from the first `settle` seconds and
/// averages those in the following `window` seconds. Windows never extend
/// past the next command. Commands that leave less than `settle + window`
/// before the next one are flagged and not averaged; so is the final
/// command when the log stops before its window closes. Repeated
/// configurations pool their samples.
pub fn extract_baselines(
    samples: &SampleLog,
    commands: &CommandLog,
    settle: f64,
    window: f64,
) -> BaselineTable {
    let mut by_location: BTreeMap<usize, Vec<&Sample>> = BTreeMap::new();
    for s in &samples.rows {
        by_location.entry(s.location).or_default().push(s);
    }
    for rows in by_location.values_mut() {
        rows.sort_by(|a, b| a.t.total_cmp(&b.t));
    }

    let mut acc: BTreeMap<(usize, u32), Accumulator> = BTreeMap::new();
    let mut flagged = Vec::new();
    for (k, cmd) in commands.rows.iter().enumerate() {
        let next = commands.rows.get(k + 1).map_or(f64::INFINITY, |c| c.t);
        let start = cmd.t + settle;
        let end = (start + window).min(next);
        let short = next - cmd.t < settle + window;
        for (&location, rows) in &by_location {
            let flag = FlaggedInterval {
                location,
                command: k,
                config: cmd.config,
            };
            if short || (next.is_infinite() && !reaches(rows, start + window)) {
                flagged.push(flag);
                continue;
            }
            let from = rows.partition_point(|s| s.t < start);
            let to = rows.partition_point(|s| s.t < end);
            if from == to {
                flagged.push(flag);
                continue;
            }
            let a = acc.entry((location, cmd.config.index())).or_default();
            rows[from..to].iter().for_each(|s| a.push(s.lux));
        }
    }
    if !flagged.is_empty() {
        log::warn!("{} command intervals flagged as unusable", flagged.len());
    }
    BaselineTable {
        n: commands.n,
        cells: acc.into_iter().map(|(k, a)| (k, a.cell())).collect(),
        flagged,
    }
}

/// Per-luminaire contributions at one location, with the all-off level
/// that readings are measured against.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub location: usize,
    pub background: f64,
    pub contributions: Vec<f64>,
    /// Luminaires whose estimate came out negative and was clamped to 0.
    pub clamped: Vec<usize>,
}

fn baseline(table: &BaselineTable, location: usize, p: u32) -> Result<f64, IngestError> {
    table
        .cells
        .get(&(location, p))
        .map(|c| c.mean)
        .ok_or(IngestError::MissingConfig {
            location,
            config: p,
        })
}

/// `x_i = baseline(only i on) - baseline(all off)`, clamped at 0.
pub fn calibrate_contributions(
    table: &BaselineTable,
    location: usize,
) -> Result<Calibration, IngestError> {
    let background = baseline(table, location, 0)?;
    let mut contributions = Vec::with_capacity(table.n);
    let mut clamped = Vec::new();
    for i in 0..table.n {
        let x = baseline(table, location, 1 << i)? - background;
        if x < 0.0 {
            log::warn!("location {location}: luminaire {i} reads below background; clamped");
            clamped.push(i);
        }
        contributions.push(x.max(0.0));
    }
    Ok(Calibration {
        location,
        background,
        contributions,
        clamped,
    })
}

/// Least-squares fit of background and contributions over every baseline
/// available at the location.
pub fn calibrate_least_squares(
    table: &BaselineTable,
    location: usize,
) -> Result<Calibration, IngestError> {
    let n = table.n;
    let rows: Vec<(u32, f64)> = table
        .cells
        .range((location, 0)..=(location, u32::MAX))
        .map(|(&(_, p), c)| (p, c.mean))
        .collect();
    // the single-light design must be present for the system to be determined
    baseline(table, location, 0)?;
    for i in 0..n {
        baseline(table, location, 1 << i)?;
    }
    let design = DMatrix::from_fn(rows.len(), n + 1, |r, c| {
        if c == 0 || rows[r].0 >> (c - 1) & 1 == 1 {
            1.0
        } else {
            0.0
        }
    });
    let observed = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let fit = design
        .svd(true, true)
        .solve(&observed, 1e-12)
        .expect("SVD computed with both factors");
    let mut clamped = Vec::new();
    let contributions = (0..n)
        .map(|i| {
            let x = fit[i + 1];
            if x < 0.0 {
                clamped.push(i);
            }
            x.max(0.0)
        })
        .collect();
    Ok(Calibration {
        location,
        background: fit[0],
        contributions,
        clamped,
    })
}

/// Min, quartiles (linear interpolation), median, mean and max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |f: f64| {
            let pos = f * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(Self {
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            q3: q(0.75),
            max: v[v.len() - 1],
            n: v.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationAccuracy {
    pub location: usize,
    /// `(configuration, accuracy)` for every configuration with a baseline.
    pub per_config: Vec<(LightConfig, f64)>,
    pub summary: Summary,
}

/// Disaggregates every baseline at every calibrated location and scores it
/// against the commanded configuration.
pub fn evaluate_locations(
    table: &BaselineTable,
    calibrations: &[Calibration],
    epsilon: f64,
) -> Result<Vec<LocationAccuracy>, IngestError> {
    calibrations
        .iter()
        .filter_map(|cal| {
            let per_config: Result<Vec<_>, IngestError> = table
                .cells
                .range((cal.location, 0)..=(cal.location, u32::MAX))
                .map(|(&(_, p), cell)| {
                    let truth = LightConfig::from_index(p, table.n);
                    let query = query_for(cal, cell.mean, epsilon)?;
                    let acc = infer(&query, Some(truth), false)
                        .mean_accuracy
                        .unwrap_or(0.0);
                    Ok((truth, acc))
                })
                .collect();
            match per_config {
                Err(e) => Some(Err(e)),
                Ok(per_config) => {
                    let accs: Vec<f64> = per_config.iter().map(|r| r.1).collect();
                    Summary::of(&accs).map(|summary| {
                        Ok(LocationAccuracy {
                            location: cal.location,
                            per_config,
                            summary,
                        })
                    })
                }
            }
        })
        .collect()
}

fn query_for(cal: &Calibration, lux: f64, epsilon: f64) -> Result<PerfectSumQuery, IngestError> {
    PerfectSumQuery::new(cal.contributions.clone(), lux - cal.background, epsilon).map_err(|e| {
        IngestError::Malformed {
            file: "calibration",
            line: cal.location,
            message: e.to_string(),
        }
    })
}

/// Accuracy of the vote-fused verdict over all calibrated locations, for
/// every configuration that has a baseline at each of them.
pub fn evaluate_fused(
    table: &BaselineTable,
    calibrations: &[Calibration],
    epsilon: f64,
) -> Result<Vec<(LightConfig, f64)>, IngestError> {
    let mut out = Vec::new();
    for truth in LightConfig::all(table.n) {
        let mut votes = Vec::with_capacity(calibrations.len());
        for cal in calibrations {
            let Some(cell) = table.get(cal.location, truth) else {
                break;
            };
            let query = query_for(cal, cell.mean, epsilon)?;
            let result = infer(&query, None, false);
            votes.push(sensor_votes(
                &result.candidates,
                &in_range_mask(&cal.contributions),
            ));
        }
        if votes.len() != calibrations.len() || votes.is_empty() {
            continue;
        }
        let fused = fuse_votes(&votes).expect("vote vectors share the luminaire count");
        out.push((truth, jaccard(truth, fused)));
    }
    Ok(out)
}

/// Parameters for synthesising a logged run.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub rate_hz: f64,
    /// Seconds each configuration is held.
    pub dwell: f64,
    /// Seconds over which the reading ramps to its new level after a switch.
    pub ramp: f64,
    /// Ambient level added to every reading.
    pub background: f64,
    pub noise: NoiseModel,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            rate_hz: SAMPLE_RATE_HZ,
            dwell: 8.0,
            ramp: 1.0,
            background: 0.0,
            noise: NoiseModel::None,
        }
    }
}

/// Steps through every configuration in index order and records what each
/// location would read. `locations[k]` holds location `k`'s contributions.
pub fn synthesize_logs(locations: &[Vec<f64>], spec: &SynthSpec) -> (SampleLog, CommandLog) {
    let n = locations.first().map_or(0, Vec::len);
    let configs: Vec<LightConfig> = LightConfig::all(n).collect();
    let commands = CommandLog {
        n,
        rows: configs
            .iter()
            .enumerate()
            .map(|(k, &config)| Command {
                t: k as f64 * spec.dwell,
                config,
            })
            .collect(),
    };
    let total = configs.len() as f64 * spec.dwell;
    let steps = (total * spec.rate_hz).floor() as usize;
    let mut rows = Vec::with_capacity(steps * locations.len());
    for step in 0..steps {
        let t = step as f64 / spec.rate_hz;
        let k = ((t / spec.dwell).floor() as usize).min(configs.len() - 1);
        for (loc, x) in locations.iter().enumerate() {
            let noise = spec.noise.for_task(&[loc as u64, step as u64]);
            let level = reading(x, configs[k], &noise);
            let since = t - k as f64 * spec.dwell;
            let lux = if k > 0 && since < spec.ramp {
                let prev = reading(x, configs[k - 1], &noise);
                prev + (level - prev) * since / spec.ramp
            } else {
                level
            };
            rows.push(Sample {
                t,
                location: loc,
                lux: (lux + spec.background).clamp(0.0, SENSOR_MAX_LUX),
            });
        }
    }
    (SampleLog { rows }, commands)
}
