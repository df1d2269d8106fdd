use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{toml_error, RunConfig};
use super::export::{self, verify_files, FileRecord, Writer};
use super::run::simulate_variants;
use crate::dsp::DtmVariant;
use crate::error::{Error, Result};
use crate::kinematics::{Activity, ActivityParams, REFERENCE_HEIGHT};
use crate::par;
use crate::rng::GaussianStream;

/// Side length of resampled network-input images.
pub const RESAMPLED_SIZE: u32 = 256;

/// Randomised dataset description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatchSpec {
    /// Samples per activity.
    pub count: usize,
    pub activities: Vec<Activity>,
    pub train_fraction: f64,
    pub seed: u64,
    /// Subject height range, m.
    pub height: [f64; 2],
    /// Walking direction range, degrees from the range axis.
    pub motion_angle: [f64; 2],
    /// Initial range (x position) of the torso, m.
    pub initial_range: [f64; 2],
    /// Joint amplitudes are scaled by U(1 - j, 1 + j).
    pub amplitude_jitter: f64,
    pub variant: DtmVariant,
    pub export_all_variants: bool,
    /// Resample PNGs to 256 x 256.
    pub resample: bool,
}

impl Default for BatchSpec {
    fn default() -> Self {
        Self {
            count: 300,
            activities: Activity::ALL.to_vec(),
            train_fraction: 0.8,
            seed: 0,
            height: [1.5, 1.9],
            motion_angle: [-30.0, 30.0],
            initial_range: [1.0, 3.0],
            amplitude_jitter: 0.2,
            variant: DtmVariant::DEFAULT,
            export_all_variants: false,
            resample: false,
        }
    }
}

fn check_range(name: &str, r: [f64; 2], lo: f64, hi: f64) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite() && lo <= r[0] && r[0] <= r[1] && r[1] <= hi) {
        return Err(Error::Config(format!(
            "{name} = [{}, {}] must be ordered and within [{lo}, {hi}]",
            r[0], r[1]
        )));
    }
    Ok(())
}

impl BatchSpec {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let spec: BatchSpec = toml::from_str(text).map_err(|e| toml_error(text, origin, e))?;
        spec.validate().map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{origin}: {m}")),
            other => other,
        })?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config("count must be positive".into()));
        }
        if self.activities.is_empty() {
            return Err(Error::Config("activities must not be empty".into()));
        }
        let mut seen = self.activities.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.activities.len() {
            return Err(Error::Config("activities contains duplicates".into()));
        }
        if !(0.0..=1.0).contains(&self.train_fraction) {
            return Err(Error::Config(format!(
                "train_fraction must lie in [0, 1], got {}",
                self.train_fraction
            )));
        }
        check_range("height", self.height, 0.5, 2.5)?;
        check_range("motion_angle", self.motion_angle, -90.0, 90.0)?;
        check_range("initial_range", self.initial_range, 0.1, 100.0)?;
        if !(0.0..1.0).contains(&self.amplitude_jitter) {
            return Err(Error::Config(format!(
                "amplitude_jitter must lie in [0, 1), got {}",
                self.amplitude_jitter
            )));
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.count * self.activities.len()
    }

    /// Training items per activity.
    pub fn train_count(&self) -> usize {
        (self.train_fraction * self.count as f64).round() as usize
    }

    fn variants(&self) -> Vec<DtmVariant> {
        if self.export_all_variants {
            DtmVariant::ALL.to_vec()
        } else {
            vec![self.variant]
        }
    }
}

/// Randomised parameters of one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub height: f64,
    /// Degrees.
    pub motion_angle: f64,
    pub initial_range: f64,
    /// Factors applied to thigh, calf, arm and turn amplitudes.
    pub amplitude_scale: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedItem {
    pub id: String,
    /// Position in the batch; the item seed is `spec.seed ^ index`.
    pub index: usize,
    pub activity: Activity,
    pub seed: u64,
    pub split: Split,
    pub draw: Draw,
}

/// Stream key separating parameter draws from echo noise.
const DRAW_STREAM: u64 = 0x6472_6177;
const SPLIT_STREAM: u64 = 0x7370_6c74;

pub fn draw_item(spec: &BatchSpec, seed: u64) -> Draw {
    let mut g = GaussianStream::new(seed, DRAW_STREAM);
    let height = g.uniform_in(spec.height[0], spec.height[1]);
    let motion_angle = g.uniform_in(spec.motion_angle[0], spec.motion_angle[1]);
    let initial_range = g.uniform_in(spec.initial_range[0], spec.initial_range[1]);
    let j = spec.amplitude_jitter;
    let amplitude_scale = std::array::from_fn(|_| g.uniform_in(1.0 - j, 1.0 + j));
    Draw {
        height,
        motion_angle,
        initial_range,
        amplitude_scale,
    }
}

/// Every item with its draw and split, in batch order.
pub fn plan(spec: &BatchSpec) -> Vec<PlannedItem> {
    let train = spec.train_count();
    let mut items = Vec::with_capacity(spec.total());
    for (a, &activity) in spec.activities.iter().enumerate() {
        // seeded shuffle decides which items of this activity are held out
        let mut order: Vec<usize> = (0..spec.count).collect();
        let mut g = GaussianStream::new(spec.seed, SPLIT_STREAM + activity.index() as u64);
        for i in (1..order.len()).rev() {
            order.swap(i, g.below(i + 1));
        }
        let mut split = vec![Split::Val; spec.count];
        for &i in &order[..train] {
            split[i] = Split::Train;
        }
        for (i, &s) in split.iter().enumerate() {
            let index = a * spec.count + i;
            let seed = spec.seed ^ index as u64;
            items.push(PlannedItem {
                id: format!("{}_{i:04}", activity.label()),
                index,
                activity,
                seed,
                split: s,
                draw: draw_item(spec, seed),
            });
        }
    }
    items
}

/// Run configuration of `item` derived from `base`.
pub fn item_config(base: &RunConfig, item: &PlannedItem) -> RunConfig {
    let d = &item.draw;
    let tmpl = &base.activity;
    let speed = tmpl.velocity[0].hypot(tmpl.velocity[1]);
    let speed = if speed > 0.0 { speed } else { 1.5 };
    let mut p = ActivityParams::with_motion(item.activity, d.height, speed, d.motion_angle.to_radians());
    p.gait_frequency = tmpl.gait_frequency;
    p.thigh_amplitude = tmpl.thigh_amplitude * d.amplitude_scale[0];
    p.calf_amplitude = tmpl.calf_amplitude * d.amplitude_scale[1];
    p.arm_amplitude = tmpl.arm_amplitude * d.amplitude_scale[2];
    p.turn_amplitude = tmpl.turn_amplitude * d.amplitude_scale[3];
    p.initial_position[0] = d.initial_range;
    p.torso_height = 1.2 * d.height / REFERENCE_HEIGHT;
    p.walk_start = tmpl.walk_start;
    p.sit_start = tmpl.sit_start;
    p.fall_start = tmpl.fall_start;
    p.sit_duration = tmpl.sit_duration;
    p.transition_blend = tmpl.transition_blend;
    let mut cfg = base.clone();
    cfg.height = d.height;
    cfg.activity = p;
    cfg.seed = item.seed;
    cfg
}

/// Resume record written once an item's files are complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    #[serde(flatten)]
    pub item: PlannedItem,
    pub entropy_nats: Option<f64>,
    pub files: Vec<FileRecord>,
}

/// Summary written to `dataset.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub spec: BatchSpec,
    pub train: usize,
    pub val: usize,
    pub items: Vec<ItemRecord>,
}

impl DatasetManifest {
    pub fn verify(&self, dir: &Path) -> Result<()> {
        verify_files(self.items.iter().flat_map(|i| &i.files), dir)
    }
}

fn record_path(dir: &Path, id: &str) -> std::path::PathBuf {
    dir.join("items").join(format!("{id}.json"))
}

/// Reuses a finished item if its record and files are intact.
fn load_record(dir: &Path, item: &PlannedItem) -> Option<ItemRecord> {
    let bytes = fs::read(record_path(dir, &item.id)).ok()?;
    let rec: ItemRecord = serde_json::from_slice(&bytes).ok()?;
    if rec.item != *item || verify_files(&rec.files, dir).is_err() {
        return None;
    }
    Some(rec)
}

fn run_item(base: &RunConfig, spec: &BatchSpec, item: &PlannedItem, dir: &Path) -> Result<ItemRecord> {
    if let Some(rec) = load_record(dir, item) {
        log::debug!("{}: already complete", item.id);
        return Ok(rec);
    }
    let cfg = item_config(base, item);
    let variants = spec.variants();
    let sim = simulate_variants(&cfg, &variants).inspect_err(|e| log::error!("{}: {e}", item.id))?;
    let w = Writer::new(dir);
    let size = spec.resample.then_some((RESAMPLED_SIZE, RESAMPLED_SIZE));
    let prefix = format!("items/{}/", item.id);
    let p = &sim.processed;
    let mut files = Vec::new();
    for d in &p.dtms {
        files.extend(export::export_dtm(&w, &prefix, d, p.entropies[&d.variant.tag()], size)?.files);
    }
    let rec = ItemRecord {
        item: item.clone(),
        entropy_nats: p.entropies[&spec.variant.tag()],
        files,
    };
    w.put_json(&format!("items/{}.json", item.id), &rec)?;
    log::info!("{}: done", item.id);
    Ok(rec)
}

/// Generates (or completes) the dataset described by `spec` under `out_dir`.
pub fn run_batch(spec: &BatchSpec, base: &RunConfig, out_dir: &Path) -> Result<DatasetManifest> {
    spec.validate()?;
    base.validate()?;
    let items = plan(spec);
    // fail on the first bad configuration before simulating anything
    for item in &items {
        item_config(base, item).validate()?;
    }
    let records = par::map_slice(&items, |item| run_item(base, spec, item, out_dir))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let w = Writer::new(out_dir);
    let mut csv = String::from("id,activity,class,split,seed,dtm\n");
    for r in &records {
        let dtm = r
            .files
            .iter()
            .find(|f| f.path.ends_with(&format!("dtm_{}.rhm", spec.variant.tag())))
            .map(|f| f.path.as_str())
            .unwrap_or("");
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.item.id,
            r.item.activity,
            r.item.activity.index(),
            match r.item.split {
                Split::Train => "train",
                Split::Val => "val",
            },
            r.item.seed,
            dtm
        ));
    }
    w.put("split.csv", export::FileFormat::Csv, csv.as_bytes())?;
    let train = records.iter().filter(|r| r.item.split == Split::Train).count();
    let manifest = DatasetManifest {
        spec: spec.clone(),
        train,
        val: records.len() - train,
        items: records,
    };
    w.put_json("dataset.json", &manifest)?;
    Ok(manifest)
}
