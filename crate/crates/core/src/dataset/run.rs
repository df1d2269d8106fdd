use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::config::RunConfig;
use super::export::{self, Artifact, ArtifactKind, FileFormat, Manifest, Writer};
use crate::dsp::{process_variants, DtmVariant, Processed};
use crate::echo::{synthesize_trajectory, RawData};
use crate::error::Result;
use crate::kinematics::Trajectory;
use crate::matrix;

/// In-memory result of one simulation.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub trajectory: Trajectory,
    pub raw: RawData,
    pub processed: Processed,
}

/// Kinematics, echo synthesis and processing for `cfg`, computing `variants`.
pub fn simulate_variants(cfg: &RunConfig, variants: &[DtmVariant]) -> Result<Simulation> {
    cfg.validate()?;
    let body = cfg.body()?;
    let trajectory = Trajectory::from_body(&body, &cfg.activity, cfg.radar.prf, cfg.radar.pulses())
        .map_err(|e| e.in_stage("kinematics"))?;
    let raw = synthesize_trajectory(&trajectory, &cfg.radar, cfg.wall.as_ref(), cfg.seed)
        .map_err(|e| e.in_stage("echo"))?;
    let torso: Vec<_> = trajectory.positions.iter().map(|p| p[0]).collect();
    let processed = process_variants(&raw.samples, &cfg.radar, &torso, &cfg.processing, variants)?;
    Ok(Simulation {
        trajectory,
        raw,
        processed,
    })
}

pub fn simulate(cfg: &RunConfig) -> Result<Simulation> {
    simulate_variants(cfg, &DtmVariant::ALL)
}

/// What to write for a run.
#[derive(Debug, Clone)]
pub struct ExportOptions {
    pub variants: Vec<DtmVariant>,
    pub raw: bool,
    pub trajectory: bool,
    /// PNG size override (width, height).
    pub image_size: Option<(u32, u32)>,
}

impl Default for ExportOptions {
    fn default() -> Self {
        Self {
            variants: DtmVariant::ALL.to_vec(),
            raw: true,
            trajectory: true,
            image_size: None,
        }
    }
}

#[derive(Serialize)]
struct EntropyFile<'a> {
    unit: &'static str,
    values: &'a BTreeMap<String, Option<f64>>,
}

/// Writes every artefact of `sim` under `w` and returns the manifest.
pub fn export_simulation(
    w: &Writer,
    cfg: &RunConfig,
    sim: &Simulation,
    opts: &ExportOptions,
) -> Result<Manifest> {
    let p = &sim.processed;
    let mut artifacts = Vec::new();
    if opts.raw {
        let bytes = matrix::encode_complex(&sim.raw.samples, sim.raw.steps())?;
        artifacts.push(Artifact {
            kind: ArtifactKind::Raw,
            variant: None,
            files: vec![w.put("raw.rhs", FileFormat::Rhs, &bytes)?],
        });
    }
    artifacts.push(export::export_rtm(w, &p.rtm, p.entropies["rtm"], opts.image_size)?);
    for d in &p.dtms {
        if opts.variants.contains(&d.variant) {
            let h = p.entropies[&d.variant.tag()];
            artifacts.push(export::export_dtm(w, "", d, h, opts.image_size)?);
        }
    }
    if opts.trajectory {
        let mut csv = Vec::new();
        sim.trajectory.write_csv(&mut csv).expect("vec write");
        artifacts.push(Artifact {
            kind: ArtifactKind::Trajectory,
            variant: None,
            files: vec![w.put("trajectory.csv", FileFormat::Csv, &csv)?],
        });
    }
    let entropy = w.put_json(
        "entropy.json",
        &EntropyFile {
            unit: "nats",
            values: &p.entropies,
        },
    )?;
    artifacts.push(Artifact {
        kind: ArtifactKind::Entropy,
        variant: None,
        files: vec![entropy],
    });
    let manifest = Manifest {
        activity: cfg.activity.activity.to_string(),
        seed: cfg.seed,
        artifacts,
    };
    w.put_json("manifest.json", &manifest)?;
    Ok(manifest)
}

/// Simulates `cfg` and writes the full output set to `out_dir`.
pub fn run_single(cfg: &RunConfig, out_dir: &Path) -> Result<Manifest> {
    let sim = simulate(cfg)?;
    for warning in &sim.raw.warnings {
        log::warn!("{warning}");
    }
    export_simulation(&Writer::new(out_dir), cfg, &sim, &ExportOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::config::Scenario;
    use crate::kinematics::Activity;

    fn short(scenario: Scenario, activity: Activity, seconds: f64) -> RunConfig {
        let mut cfg = RunConfig::preset(scenario, activity);
        cfg.radar.duration = seconds;
        cfg
    }

    #[test]
    fn single_run_writes_the_full_set() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = short(Scenario::ThroughWall, Activity::S2, 2.0);
        let m = run_single(&cfg, dir.path()).unwrap();
        assert_eq!(m.count(ArtifactKind::Dtm), 8);
        assert_eq!(m.count(ArtifactKind::Rtm), 1);
        assert_eq!(m.count(ArtifactKind::Raw), 1);
        assert_eq!(m.count(ArtifactKind::Trajectory), 1);
        m.verify(dir.path()).unwrap();
        let back = Manifest::load(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(back, m);
        for v in DtmVariant::ALL {
            assert!(dir.path().join(format!("dtm_{}.png", v.tag())).exists());
        }
        let raw = matrix::decode(std::fs::read(dir.path().join("raw.rhs")).unwrap().as_slice()).unwrap();
        assert_eq!(raw.shape(), (cfg.radar.adc_samples(), cfg.radar.pulses()));
        let text = export::inspect(&dir.path().join("dtm_stft_denoised_comp.rhm")).unwrap();
        assert!(text.contains("RHM1") && text.contains("doppler"));
    }

    #[test]
    fn same_seed_same_outputs() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let cfg = short(Scenario::ThroughWall, Activity::S5, 1.0);
        let ma = run_single(&cfg, a.path()).unwrap();
        let mb = run_single(&cfg, b.path()).unwrap();
        assert_eq!(ma, mb);
    }

    #[test]
    fn static_subject_is_far_below_moving_one() {
        // MTI removes everything static, leaving noise only
        let s1 = simulate_variants(&short(Scenario::FreeSpace, Activity::S1, 1.0), &[DtmVariant::DEFAULT]).unwrap();
        let s8 = simulate_variants(&short(Scenario::FreeSpace, Activity::S8, 1.0), &[DtmVariant::DEFAULT]).unwrap();
        let p1 = s1.processed.dtm(DtmVariant::DEFAULT).power.max();
        let p8 = s8.processed.dtm(DtmVariant::DEFAULT).power.max();
        assert!(10.0 * (p1 / p8).log10() < -40.0, "{p1} vs {p8}");
    }

    #[test]
    fn errors_are_tagged_with_stage() {
        let mut cfg = short(Scenario::ThroughWall, Activity::S2, 1.0);
        cfg.activity.gait_frequency = f64::NAN;
        let err = simulate(&cfg).unwrap_err();
        assert_eq!(err.kind(), crate::ErrorKind::Config);
    }
}
