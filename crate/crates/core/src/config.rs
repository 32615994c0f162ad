//! Engine parameters and the flat `key = value` configuration file.
//!
//! Every threshold used by perception, relation detection, the neuron graph
//! and prediction lives in [`EngineConfig`]. A config file lists any subset of
//! keys; omitted keys keep their defaults, unknown keys are rejected.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable that may name the config file.
pub const CONFIG_ENV: &str = "SRNN_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Validation { key: &'static str, message: String },
}

/// Word order inside an entity phrase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeOrder {
    TextureColorShape,
    ColorTextureShape,
}

impl AttributeOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributeOrder::TextureColorShape => "texture_color_shape",
            AttributeOrder::ColorTextureShape => "color_texture_shape",
        }
    }
}

impl FromStr for AttributeOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "texture_color_shape" => Ok(AttributeOrder::TextureColorShape),
            "color_texture_shape" => Ok(AttributeOrder::ColorTextureShape),
            other => Err(format!("unknown attribute order `{other}`")),
        }
    }
}

/// One named color anchor used by nearest-neighbor color classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteEntry {
    pub name: String,
    pub rgb: [u8; 3],
}

impl PaletteEntry {
    fn new(name: &str, rgb: [u8; 3]) -> Self {
        Self {
            name: name.to_string(),
            rgb,
        }
    }
}

/// The eight default color anchors, in tie-break order.
pub fn default_palette() -> Vec<PaletteEntry> {
    vec![
        PaletteEntry::new("gray", [128, 128, 128]),
        PaletteEntry::new("red", [220, 20, 60]),
        PaletteEntry::new("blue", [42, 75, 215]),
        PaletteEntry::new("green", [29, 105, 20]),
        PaletteEntry::new("brown", [129, 74, 25]),
        PaletteEntry::new("purple", [129, 38, 192]),
        PaletteEntry::new("cyan", [41, 208, 208]),
        PaletteEntry::new("yellow", [255, 238, 51]),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Minimum shape/texture box IoU for attribute binding.
    pub attention_iou_thd: f64,
    /// Central box area fraction the detector aggregates `mean_rgb` over.
    pub color_focus_area_ratio: f64,
    /// Detections below this confidence are discarded.
    pub confidence_thd: f64,
    /// Focal length in pixels, used when the input omits one.
    pub focal_length: f64,
    /// Minimum frame-to-frame box IoU for track continuation.
    pub box_overlap_thd: f64,
    /// Net displacement above which an object is moving.
    pub move_thd: f64,
    /// Pairs farther apart than this are not attended for distance trends.
    pub dist_att_thd: f64,
    /// Trailing moving-average window for distance series, in frames.
    pub moving_avg_window: usize,
    /// Center distance below which a pair is a touch candidate.
    pub touch_thd: f64,
    /// Box IoU at closest approach at or above which a pair is a touch candidate.
    pub touch_box_overlap_thd: f64,
    pub slot_count: usize,
    pub slot_duration_s: f64,
    pub frames_per_second: f64,
    /// Degrees; smaller turns are not direction changes.
    pub direction_change_angle_thd: f64,
    /// Smoothed distance range above which a distance trend is reported.
    pub distance_amplitude_thd: f64,
    /// Pairs initially farther apart than this are never forecast to touch.
    pub predict_att_thd: f64,
    /// Base firing threshold; joint-signal neurons use twice this value.
    pub neuron_activation_threshold: f64,
    pub rng_seed: u64,
    /// Samples averaged at each end of a window when measuring displacement.
    pub endpoint_window: usize,
    /// Longest track gap (missing frames) bridged by linear interpolation.
    pub max_interp_gap: usize,
    pub attribute_order: AttributeOrder,
    /// Forecast horizon, in slots, for queries about the next slot.
    pub in_video_horizon_slots: f64,
    /// Forecast horizon, in slots, for queries past the end of the video.
    pub after_video_horizon_slots: f64,
    pub palette: Vec<PaletteEntry>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            attention_iou_thd: 0.85,
            color_focus_area_ratio: 0.7,
            confidence_thd: 0.7,
            focal_length: 420.0,
            box_overlap_thd: 0.1,
            move_thd: 0.01,
            dist_att_thd: 0.1,
            moving_avg_window: 5,
            touch_thd: 0.04,
            touch_box_overlap_thd: 0.01,
            slot_count: 5,
            slot_duration_s: 1.0,
            frames_per_second: 25.0,
            direction_change_angle_thd: 22.5,
            distance_amplitude_thd: 0.02,
            predict_att_thd: 0.5,
            neuron_activation_threshold: 1.0,
            rng_seed: 0,
            endpoint_window: 5,
            max_interp_gap: 5,
            attribute_order: AttributeOrder::TextureColorShape,
            in_video_horizon_slots: 1.0,
            after_video_horizon_slots: 2.0,
            palette: default_palette(),
        }
    }
}

impl EngineConfig {
    /// Frames per slot, never less than one.
    pub fn slot_len_frames(&self) -> usize {
        ((self.frames_per_second * self.slot_duration_s).round() as usize).max(1)
    }

    pub fn frame_dt(&self) -> f64 {
        1.0 / self.frames_per_second
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn ratio(key: &'static str, v: f64) -> Result<(), ConfigError> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(ConfigError::Validation {
                    key,
                    message: format!("{v} is outside [0, 1]"),
                })
            }
        }
        fn positive(key: &'static str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::Validation {
                    key,
                    message: format!("{v} must be finite and > 0"),
                })
            }
        }
        fn at_least_one(key: &'static str, v: usize) -> Result<(), ConfigError> {
            if v >= 1 {
                Ok(())
            } else {
                Err(ConfigError::Validation {
                    key,
                    message: "must be >= 1".into(),
                })
            }
        }

        ratio("attention_iou_thd", self.attention_iou_thd)?;
        ratio("color_focus_area_ratio", self.color_focus_area_ratio)?;
        if self.color_focus_area_ratio == 0.0 {
            return Err(ConfigError::Validation {
                key: "color_focus_area_ratio",
                message: "must be > 0".into(),
            });
        }
        ratio("confidence_thd", self.confidence_thd)?;
        ratio("box_overlap_thd", self.box_overlap_thd)?;
        ratio("touch_box_overlap_thd", self.touch_box_overlap_thd)?;
        positive("focal_length", self.focal_length)?;
        positive("move_thd", self.move_thd)?;
        positive("dist_att_thd", self.dist_att_thd)?;
        positive("touch_thd", self.touch_thd)?;
        positive("slot_duration_s", self.slot_duration_s)?;
        positive("frames_per_second", self.frames_per_second)?;
        positive("direction_change_angle_thd", self.direction_change_angle_thd)?;
        if self.direction_change_angle_thd >= 180.0 {
            return Err(ConfigError::Validation {
                key: "direction_change_angle_thd",
                message: "must be < 180 degrees".into(),
            });
        }
        positive("distance_amplitude_thd", self.distance_amplitude_thd)?;
        positive("predict_att_thd", self.predict_att_thd)?;
        positive("neuron_activation_threshold", self.neuron_activation_threshold)?;
        positive("in_video_horizon_slots", self.in_video_horizon_slots)?;
        positive("after_video_horizon_slots", self.after_video_horizon_slots)?;
        at_least_one("moving_avg_window", self.moving_avg_window)?;
        at_least_one("slot_count", self.slot_count)?;
        at_least_one("endpoint_window", self.endpoint_window)?;
        if self.palette.is_empty() {
            return Err(ConfigError::Validation {
                key: "palette",
                message: "needs at least one color".into(),
            });
        }
        Ok(())
    }

    /// Parses config text. Keys not present keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = EngineConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Parse {
                    line: line_no,
                    message: format!("duplicate key `{key}`"),
                });
            }
            cfg.set(key, value).map_err(|message| ConfigError::Parse {
                line: line_no,
                message,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse::<T>()
                .map_err(|_| format!("`{key}`: cannot parse `{v}`"))
        }
        match key {
            "attention_iou_thd" => self.attention_iou_thd = num(key, value)?,
            "color_focus_area_ratio" => self.color_focus_area_ratio = num(key, value)?,
            "confidence_thd" => self.confidence_thd = num(key, value)?,
            "focal_length" => self.focal_length = num(key, value)?,
            "box_overlap_thd" => self.box_overlap_thd = num(key, value)?,
            "move_thd" => self.move_thd = num(key, value)?,
            "dist_att_thd" => self.dist_att_thd = num(key, value)?,
            "moving_avg_window" => self.moving_avg_window = num(key, value)?,
            "touch_thd" => self.touch_thd = num(key, value)?,
            "touch_box_overlap_thd" => self.touch_box_overlap_thd = num(key, value)?,
            "slot_count" => self.slot_count = num(key, value)?,
            "slot_duration_s" => self.slot_duration_s = num(key, value)?,
            "frames_per_second" => self.frames_per_second = num(key, value)?,
            "direction_change_angle_thd" => self.direction_change_angle_thd = num(key, value)?,
            "distance_amplitude_thd" => self.distance_amplitude_thd = num(key, value)?,
            "predict_att_thd" => self.predict_att_thd = num(key, value)?,
            "neuron_activation_threshold" => {
                self.neuron_activation_threshold = num(key, value)?
            }
            "rng_seed" => self.rng_seed = num(key, value)?,
            "endpoint_window" => self.endpoint_window = num(key, value)?,
            "max_interp_gap" => self.max_interp_gap = num(key, value)?,
            "attribute_order" => self.attribute_order = value.parse()?,
            "in_video_horizon_slots" => self.in_video_horizon_slots = num(key, value)?,
            "after_video_horizon_slots" => self.after_video_horizon_slots = num(key, value)?,
            "palette" => self.palette = parse_palette(value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Serializes every key. `parse(&cfg.to_config_string())` reproduces `cfg`.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        // `{:?}` on f64 prints the shortest string that round-trips exactly.
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("attention_iou_thd", format!("{:?}", self.attention_iou_thd));
        kv("color_focus_area_ratio", format!("{:?}", self.color_focus_area_ratio));
        kv("confidence_thd", format!("{:?}", self.confidence_thd));
        kv("focal_length", format!("{:?}", self.focal_length));
        kv("box_overlap_thd", format!("{:?}", self.box_overlap_thd));
        kv("move_thd", format!("{:?}", self.move_thd));
        kv("dist_att_thd", format!("{:?}", self.dist_att_thd));
        kv("moving_avg_window", self.moving_avg_window.to_string());
        kv("touch_thd", format!("{:?}", self.touch_thd));
        kv("touch_box_overlap_thd", format!("{:?}", self.touch_box_overlap_thd));
        kv("slot_count", self.slot_count.to_string());
        kv("slot_duration_s", format!("{:?}", self.slot_duration_s));
        kv("frames_per_second", format!("{:?}", self.frames_per_second));
        kv(
            "direction_change_angle_thd",
            format!("{:?}", self.direction_change_angle_thd),
        );
        kv("distance_amplitude_thd", format!("{:?}", self.distance_amplitude_thd));
        kv("predict_att_thd", format!("{:?}", self.predict_att_thd));
        kv(
            "neuron_activation_threshold",
            format!("{:?}", self.neuron_activation_threshold),
        );
        kv("rng_seed", self.rng_seed.to_string());
        kv("endpoint_window", self.endpoint_window.to_string());
        kv("max_interp_gap", self.max_interp_gap.to_string());
        kv("attribute_order", self.attribute_order.as_str().to_string());
        kv("in_video_horizon_slots", format!("{:?}", self.in_video_horizon_slots));
        kv(
            "after_video_horizon_slots",
            format!("{:?}", self.after_video_horizon_slots),
        );
        kv("palette", format_palette(&self.palette));
        out
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// `name:r/g/b; name:r/g/b; ...`
fn parse_palette(value: &str) -> Result<Vec<PaletteEntry>, String> {
    let mut entries = Vec::new();
    for item in value.split(';') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (name, rgb) = item
            .split_once(':')
            .ok_or_else(|| format!("palette entry `{item}` is not `name:r/g/b`"))?;
        let name = name.trim();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(format!("bad palette color name `{name}`"));
        }
        let channels: Vec<&str> = rgb.split('/').map(str::trim).collect();
        if channels.len() != 3 {
            return Err(format!("palette entry `{item}` needs three channels"));
        }
        let mut out = [0u8; 3];
        for (slot, c) in out.iter_mut().zip(channels) {
            *slot = c
                .parse::<u8>()
                .map_err(|_| format!("palette channel `{c}` is not in 0..=255"))?;
        }
        entries.push(PaletteEntry {
            name: name.to_string(),
            rgb: out,
        });
    }
    Ok(entries)
}

fn format_palette(palette: &[PaletteEntry]) -> String {
    palette
        .iter()
        .map(|e| format!("{}:{}/{}/{}", e.name, e.rgb[0], e.rgb[1], e.rgb[2]))
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn load_config(path: impl AsRef<Path>) -> Result<EngineConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    EngineConfig::parse(&text)
}

pub fn write_config(cfg: &EngineConfig, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, cfg.to_config_string())
}
