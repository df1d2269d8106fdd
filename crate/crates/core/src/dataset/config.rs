use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dsp::ProcessingConfig;
use crate::echo::{RadarConfig, WallConfig};
use crate::error::{Error, Result};
use crate::kinematics::{Activity, ActivityParams, BodyModel, REFERENCE_HEIGHT, REFERENCE_WEIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    FreeSpace,
    ThroughWall,
}

/// Fully resolved settings for one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub radar: RadarConfig,
    pub wall: Option<WallConfig>,
    pub height: f64,
    pub weight: f64,
    pub activity: ActivityParams,
    pub processing: ProcessingConfig,
    pub seed: u64,
}

impl RunConfig {
    /// Defaults for `scenario` and `activity`.
    pub fn preset(scenario: Scenario, activity: Activity) -> Self {
        let (radar, wall) = match scenario {
            Scenario::FreeSpace => (RadarConfig::free_space(), None),
            Scenario::ThroughWall => (RadarConfig::through_wall(), Some(WallConfig::through_wall())),
        };
        Self {
            scenario,
            radar,
            wall,
            height: REFERENCE_HEIGHT,
            weight: REFERENCE_WEIGHT,
            activity: ActivityParams::defaults(activity, REFERENCE_HEIGHT),
            processing: ProcessingConfig::default(),
            seed: 0,
        }
    }

    pub fn body(&self) -> Result<BodyModel> {
        BodyModel::new(self.height, self.weight)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.scenario, &self.wall) {
            (Scenario::FreeSpace, Some(_)) => {
                return Err(Error::Config("free_space scenario cannot have a wall".into()))
            }
            (Scenario::ThroughWall, None) => {
                return Err(Error::Config("through_wall scenario needs a [wall] block".into()))
            }
            _ => {}
        }
        let as_config = |e: Error| Error::Config(e.to_string());
        self.radar.validate().map_err(as_config)?;
        if let Some(w) = &self.wall {
            w.validate().map_err(as_config)?;
        }
        self.body().map_err(as_config)?;
        self.activity.validate(Some(self.radar.duration)).map_err(as_config)?;
        let p = &self.processing;
        if !p.nfft.is_power_of_two() || p.nfft < self.radar.adc_samples() {
            return Err(Error::Config(format!(
                "nfft must be a power of two >= {} samples, got {}",
                self.radar.adc_samples(),
                p.nfft
            )));
        }
        Ok(())
    }
}

// ---- file format -------------------------------------------------------

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    scenario: Option<Scenario>,
    seed: Option<u64>,
    radar: Option<RadarSection>,
    subject: Option<SubjectSection>,
    activity: Option<ActivitySection>,
    wall: Option<WallSection>,
    processing: Option<ProcessingSection>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RadarSection {
    carrier_frequency: Option<f64>,
    bandwidth: Option<f64>,
    pulse_repetition_frequency: Option<f64>,
    sampling_frequency: Option<f64>,
    pulse_duration: Option<f64>,
    transmitter_position: Option<[f64; 3]>,
    receiver_position: Option<[f64; 3]>,
    antenna_gain: Option<f64>,
    antenna_isolation: Option<f64>,
    snr: Option<f64>,
    simulation_time: Option<f64>,
    direct_coupling: Option<bool>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SubjectSection {
    height: Option<f64>,
    weight: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ActivitySection {
    kind: Option<String>,
    initial_position: Option<[f64; 2]>,
    torso_velocity: Option<f64>,
    /// Degrees from the +x axis.
    motion_angle: Option<f64>,
    gait_frequency: Option<f64>,
    thigh_rotation_amplitude: Option<f64>,
    calf_rotation_amplitude: Option<f64>,
    arm_rotation_amplitude: Option<f64>,
    turn_amplitude: Option<f64>,
    walk_start: Option<f64>,
    sit_start: Option<f64>,
    fall_start: Option<f64>,
    sit_duration: Option<f64>,
    transition_blend: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct WallSection {
    center_position: Option<[f64; 3]>,
    dimensions: Option<[f64; 3]>,
    relative_dielectric_constant: Option<f64>,
    loss_tangent: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ProcessingSection {
    nfft: Option<usize>,
    window_fraction: Option<f64>,
    overlap_fraction: Option<f64>,
    savgol_order: Option<usize>,
    savgol_frame: Option<usize>,
    fsst_threshold: Option<f64>,
    range_gate: Option<[f64; 2]>,
}

/// Line number (1-based) of `key` inside `[section]` (or the top level when
/// `section` is empty).
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(h) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = h.trim().to_string();
            continue;
        }
        if current == section {
            if let Some(rest) = t.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

struct Checker<'a> {
    text: &'a str,
    origin: &'a str,
}

impl Checker<'_> {
    fn fail(&self, section: &str, key: &str, msg: impl std::fmt::Display) -> Error {
        let name = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        match locate(self.text, section, key) {
            Some(line) => Error::Config(format!("{}:{line}: {name}: {msg}", self.origin)),
            None => Error::Config(format!("{}: {name}: {msg}", self.origin)),
        }
    }

    fn positive(&self, section: &str, key: &str, v: f64) -> Result<()> {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(self.fail(section, key, format!("must be positive, got {v}")))
        }
    }

    fn finite(&self, section: &str, key: &str, v: &[f64]) -> Result<()> {
        if v.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(self.fail(section, key, "must be finite"))
        }
    }
}

/// `origin:line: message` for a TOML syntax or schema error.
pub(crate) fn toml_error(text: &str, origin: &str, e: toml::de::Error) -> Error {
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            Error::Config(format!("{origin}:{line}: {}", e.message().trim_end()))
        }
        None => Error::Config(format!("{origin}: {}", e.message().trim_end())),
    }
}

/// Parses configuration text; `origin` names the source in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| toml_error(text, origin, e))?;
    let ck = Checker { text, origin };

    let scenario = match (file.scenario, file.wall.is_some()) {
        (Some(Scenario::ThroughWall), false) => {
            return Err(ck.fail("", "scenario", "through_wall needs a [wall] block"))
        }
        (Some(Scenario::FreeSpace), true) => {
            return Err(ck.fail("", "scenario", "free_space cannot have a [wall] block"))
        }
        (Some(s), _) => s,
        (None, true) => Scenario::ThroughWall,
        (None, false) => Scenario::FreeSpace,
    };

    let act = file.activity.unwrap_or_default();
    let activity = match &act.kind {
        Some(k) => k.parse::<Activity>().map_err(|e| ck.fail("activity", "kind", e))?,
        None => Activity::S1,
    };
    let mut cfg = RunConfig::preset(scenario, activity);
    if let Some(seed) = file.seed {
        cfg.seed = seed;
    }

    let r = file.radar.unwrap_or_default();
    let radar = &mut cfg.radar;
    for (key, slot, v) in [
        ("carrier_frequency", &mut radar.carrier_frequency, r.carrier_frequency),
        ("bandwidth", &mut radar.bandwidth, r.bandwidth),
        ("pulse_repetition_frequency", &mut radar.prf, r.pulse_repetition_frequency),
        ("sampling_frequency", &mut radar.sampling_frequency, r.sampling_frequency),
        ("pulse_duration", &mut radar.pulse_duration, r.pulse_duration),
        ("simulation_time", &mut radar.duration, r.simulation_time),
    ] {
        if let Some(v) = v {
            ck.positive("radar", key, v)?;
            *slot = v;
        }
    }
    if let Some(p) = r.transmitter_position {
        ck.finite("radar", "transmitter_position", &p)?;
        radar.tx_position = Vector3::from(p);
    }
    if let Some(p) = r.receiver_position {
        ck.finite("radar", "receiver_position", &p)?;
        radar.rx_position = Vector3::from(p);
    }
    if let Some(v) = r.antenna_gain {
        ck.finite("radar", "antenna_gain", &[v])?;
        radar.antenna_gain_dbi = v;
    }
    if let Some(v) = r.antenna_isolation {
        ck.finite("radar", "antenna_isolation", &[v])?;
        radar.antenna_isolation_db = v;
    }
    if let Some(v) = r.snr {
        if v.is_nan() || v == f64::NEG_INFINITY {
            return Err(ck.fail("radar", "snr", format!("must be a number of dB or inf, got {v}")));
        }
        radar.snr_db = v;
    }
    if let Some(v) = r.direct_coupling {
        radar.direct_coupling = v;
    }
    if radar.adc_samples() < 2 {
        return Err(ck.fail(
            "radar",
            "sampling_frequency",
            format!("gives {} samples per pulse, need at least 2", radar.adc_samples()),
        ));
    }
    if radar.prf * radar.pulse_duration > 1.0 + 1e-9 {
        return Err(ck.fail(
            "radar",
            "pulse_repetition_frequency",
            format!("times pulse_duration is {}, must not exceed 1", radar.prf * radar.pulse_duration),
        ));
    }
    if radar.pulses() < 2 {
        return Err(ck.fail("radar", "simulation_time", "must cover at least 2 pulses"));
    }

    let s = file.subject.unwrap_or_default();
    if let Some(h) = s.height {
        ck.positive("subject", "height", h)?;
        cfg.height = h;
    }
    if let Some(w) = s.weight {
        ck.positive("subject", "weight", w)?;
        cfg.weight = w;
    }

    let speed = act.torso_velocity.unwrap_or(1.5);
    ck.finite("activity", "torso_velocity", &[speed])?;
    let angle = act.motion_angle.unwrap_or(0.0);
    ck.finite("activity", "motion_angle", &[angle])?;
    let mut params = ActivityParams::with_motion(activity, cfg.height, speed, angle.to_radians());
    if let Some(p) = act.initial_position {
        ck.finite("activity", "initial_position", &p)?;
        params.initial_position = p;
    }
    for (key, slot, v) in [
        ("thigh_rotation_amplitude", &mut params.thigh_amplitude, act.thigh_rotation_amplitude),
        ("calf_rotation_amplitude", &mut params.calf_amplitude, act.calf_rotation_amplitude),
        ("arm_rotation_amplitude", &mut params.arm_amplitude, act.arm_rotation_amplitude),
        ("turn_amplitude", &mut params.turn_amplitude, act.turn_amplitude),
    ] {
        if let Some(deg) = v {
            ck.finite("activity", key, &[deg])?;
            *slot = deg.to_radians();
        }
    }
    for (key, slot, v) in [
        ("gait_frequency", &mut params.gait_frequency, act.gait_frequency),
        ("sit_duration", &mut params.sit_duration, act.sit_duration),
        ("transition_blend", &mut params.transition_blend, act.transition_blend),
    ] {
        if let Some(v) = v {
            ck.positive("activity", key, v)?;
            *slot = v;
        }
    }
    for (key, slot, v) in [
        ("walk_start", &mut params.walk_start, act.walk_start),
        ("sit_start", &mut params.sit_start, act.sit_start),
        ("fall_start", &mut params.fall_start, act.fall_start),
    ] {
        if let Some(v) = v {
            if !(v.is_finite() && v >= 0.0 && v <= cfg.radar.duration) {
                return Err(ck.fail(
                    "activity",
                    key,
                    format!("must lie within the simulation time [0, {}] s, got {v}", cfg.radar.duration),
                ));
            }
            *slot = v;
        }
    }
    cfg.activity = params;

    if let Some(w) = file.wall {
        let wall = cfg.wall.get_or_insert_with(WallConfig::through_wall);
        if let Some(c) = w.center_position {
            ck.finite("wall", "center_position", &c)?;
            wall.center = Vector3::from(c);
        }
        if let Some(d) = w.dimensions {
            if !d.iter().all(|x| x.is_finite() && *x > 0.0) {
                return Err(ck.fail("wall", "dimensions", format!("must all be positive, got {d:?}")));
            }
            wall.dimensions = Vector3::from(d);
        }
        if let Some(e) = w.relative_dielectric_constant {
            if !(e.is_finite() && e >= 1.0) {
                return Err(ck.fail("wall", "relative_dielectric_constant", format!("must be >= 1, got {e}")));
            }
            wall.epsilon_r = e;
        }
        if let Some(t) = w.loss_tangent {
            if !(t.is_finite() && t >= 0.0) {
                return Err(ck.fail("wall", "loss_tangent", format!("must be >= 0, got {t}")));
            }
            wall.loss_tangent = t;
        }
    }

    let p = file.processing.unwrap_or_default();
    let proc = &mut cfg.processing;
    if let Some(n) = p.nfft {
        if !n.is_power_of_two() || n < cfg.radar.adc_samples() {
            return Err(ck.fail(
                "processing",
                "nfft",
                format!("must be a power of two >= {} samples, got {n}", cfg.radar.adc_samples()),
            ));
        }
        proc.nfft = n;
    }
    if let Some(f) = p.window_fraction {
        if !(f > 0.0 && f <= 1.0) {
            return Err(ck.fail("processing", "window_fraction", format!("must be in (0, 1], got {f}")));
        }
        proc.window_fraction = f;
    }
    if let Some(f) = p.overlap_fraction {
        if !(0.0..1.0).contains(&f) {
            return Err(ck.fail("processing", "overlap_fraction", format!("must be in [0, 1), got {f}")));
        }
        proc.overlap_fraction = f;
    }
    if let Some(o) = p.savgol_order {
        proc.savgol_order = o;
    }
    if let Some(f) = p.savgol_frame {
        proc.savgol_frame = f;
    }
    if proc.savgol_frame.is_multiple_of(2) || proc.savgol_frame <= proc.savgol_order {
        let key = if p.savgol_frame.is_some() { "savgol_frame" } else { "savgol_order" };
        return Err(ck.fail(
            "processing",
            key,
            format!(
                "frame length must be odd and exceed the order (order {}, frame {})",
                proc.savgol_order, proc.savgol_frame
            ),
        ));
    }
    if let Some(t) = p.fsst_threshold {
        if !(t.is_finite() && (0.0..1.0).contains(&t)) {
            return Err(ck.fail("processing", "fsst_threshold", format!("must be in [0, 1), got {t}")));
        }
        proc.fsst_threshold = t;
    }
    if let Some([near, far]) = p.range_gate {
        if !(near >= 0.0 && far > near && far.is_finite()) {
            return Err(ck.fail("processing", "range_gate", format!("needs 0 <= near < far, got [{near}, {far}]")));
        }
        proc.range_gate = Some((near, far));
    }

    cfg.validate().map_err(|e| Error::Config(format!("{origin}: {e}")))?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, &path.display().to_string())
}

/// TOML text that parses back to `cfg`.
pub fn to_toml(cfg: &RunConfig) -> String {
    let a = &cfg.activity;
    let speed = a.velocity[0].hypot(a.velocity[1]);
    let angle = a.velocity[1].atan2(a.velocity[0]).to_degrees();
    let file = ConfigFile {
        scenario: Some(cfg.scenario),
        seed: Some(cfg.seed),
        radar: Some(RadarSection {
            carrier_frequency: Some(cfg.radar.carrier_frequency),
            bandwidth: Some(cfg.radar.bandwidth),
            pulse_repetition_frequency: Some(cfg.radar.prf),
            sampling_frequency: Some(cfg.radar.sampling_frequency),
            pulse_duration: Some(cfg.radar.pulse_duration),
            transmitter_position: Some(cfg.radar.tx_position.into()),
            receiver_position: Some(cfg.radar.rx_position.into()),
            antenna_gain: Some(cfg.radar.antenna_gain_dbi),
            antenna_isolation: Some(cfg.radar.antenna_isolation_db),
            snr: Some(cfg.radar.snr_db),
            simulation_time: Some(cfg.radar.duration),
            direct_coupling: Some(cfg.radar.direct_coupling),
        }),
        subject: Some(SubjectSection {
            height: Some(cfg.height),
            weight: Some(cfg.weight),
        }),
        activity: Some(ActivitySection {
            kind: Some(a.activity.label().to_string()),
            initial_position: Some(a.initial_position),
            torso_velocity: Some(speed),
            motion_angle: Some(angle),
            gait_frequency: Some(a.gait_frequency),
            thigh_rotation_amplitude: Some(a.thigh_amplitude.to_degrees()),
            calf_rotation_amplitude: Some(a.calf_amplitude.to_degrees()),
            arm_rotation_amplitude: Some(a.arm_amplitude.to_degrees()),
            turn_amplitude: Some(a.turn_amplitude.to_degrees()),
            walk_start: Some(a.walk_start),
            sit_start: Some(a.sit_start),
            fall_start: Some(a.fall_start),
            sit_duration: Some(a.sit_duration),
            transition_blend: Some(a.transition_blend),
        }),
        wall: cfg.wall.as_ref().map(|w| WallSection {
            center_position: Some(w.center.into()),
            dimensions: Some(w.dimensions.into()),
            relative_dielectric_constant: Some(w.epsilon_r),
            loss_tangent: Some(w.loss_tangent),
        }),
        processing: Some(ProcessingSection {
            nfft: Some(cfg.processing.nfft),
            window_fraction: Some(cfg.processing.window_fraction),
            overlap_fraction: Some(cfg.processing.overlap_fraction),
            savgol_order: Some(cfg.processing.savgol_order),
            savgol_frame: Some(cfg.processing.savgol_frame),
            fsst_threshold: Some(cfg.processing.fsst_threshold),
            range_gate: cfg.processing.range_gate.map(|(a, b)| [a, b]),
        }),
    };
    toml::to_string(&file).expect("config sections serialise")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_file_gives_free_space_defaults() {
        let cfg = parse_config("", "empty").unwrap();
        assert_eq!(cfg.scenario, Scenario::FreeSpace);
        assert_eq!(cfg.radar.carrier_frequency, 77e9);
        assert_eq!(cfg.radar.bandwidth, 4e9);
        assert_eq!(cfg.radar.prf, 5000.0);
        assert_eq!(cfg.radar.pulse_duration, 40e-6);
        assert_eq!(cfg.radar.snr_db, 30.0);
        assert_eq!(cfg.wall, None);
        assert_eq!(cfg.processing, ProcessingConfig::default());
        assert_eq!(cfg.processing.fsst_threshold, crate::dsp::FSST_THRESHOLD);
    }

    #[test]
    fn through_wall_needs_wall_block() {
        let err = parse_config("scenario = \"through_wall\"\n", "cfg.toml").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("cfg.toml:1"), "{err}");
    }

    #[test]
    fn through_wall_column_is_valid() {
        let text = r#"
[radar]
carrier_frequency = 2e9
bandwidth = 1e9
pulse_repetition_frequency = 128

[activity]
kind = "S8"

[wall]
relative_dielectric_constant = 6
"#;
        let cfg = parse_config(text, "tw").unwrap();
        assert_eq!(cfg.scenario, Scenario::ThroughWall);
        assert_eq!(cfg.radar.pulses(), 512);
        let w = cfg.wall.unwrap();
        assert_eq!(w.loss_tangent, 0.03);
        assert_eq!(w.dimensions, Vector3::new(0.24, 5.0, 2.5));
        assert_eq!(cfg.activity.initial_position, [1.0, 0.0]);
    }

    #[test]
    fn unknown_key_is_rejected_with_position() {
        let err = parse_config("[radar]\ncarrier = 1\n", "x.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("carrier") && msg.contains("x.toml:2:"), "{msg}");
    }

    #[test]
    fn invariant_errors_name_the_line() {
        let text = "seed = 1\n\n[radar]\nbandwidth = 4e9\npulse_repetition_frequency = 30000\n";
        let msg = parse_config(text, "c.toml").unwrap_err().to_string();
        assert!(msg.contains("c.toml:5") && msg.contains("pulse_repetition_frequency"), "{msg}");
        let msg = parse_config("[processing]\nsavgol_frame = 10\n", "c").unwrap_err().to_string();
        assert!(msg.contains("c:2"), "{msg}");
        let msg = parse_config("[subject]\nheight = -1\n", "c").unwrap_err().to_string();
        assert!(msg.contains("c:2") && msg.contains("subject.height"), "{msg}");
    }

    #[test]
    fn angles_are_degrees() {
        let text = "[activity]\nkind = \"walking\"\nmotion_angle = 90\nthigh_rotation_amplitude = 20\n";
        let cfg = parse_config(text, "a").unwrap();
        assert_relative_eq!(cfg.activity.velocity[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(cfg.activity.velocity[1], 1.5, epsilon = 1e-12);
        assert_relative_eq!(cfg.activity.thigh_amplitude, 20f64.to_radians());
    }

    #[test]
    fn infinite_snr_allowed() {
        let cfg = parse_config("[radar]\nsnr = inf\n", "a").unwrap();
        assert_eq!(cfg.radar.snr_db, f64::INFINITY);
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig::preset(Scenario::ThroughWall, Activity::S10);
        cfg.seed = 77;
        cfg.height = 1.65;
        cfg.processing.range_gate = Some((0.5, 4.0));
        let back = parse_config(&to_toml(&cfg), "rt").unwrap();
        assert_eq!(back.radar, cfg.radar);
        assert_eq!(back.wall, cfg.wall);
        assert_eq!(back.processing, cfg.processing);
        assert_eq!(back.seed, 77);
        assert_eq!(back.activity.activity, Activity::S10);
        assert_relative_eq!(back.activity.thigh_amplitude, cfg.activity.thigh_amplitude, epsilon = 1e-12);
    }
}
