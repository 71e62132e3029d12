//! TOML run configuration.
//!
//! ```toml
//! [frame]
//! m = 32            # subcarriers / delay bins
//! n = 16            # symbols / Doppler bins
//! delta_f = 15e3    # Hz
//! cp_len = 4        # samples
//!
//! [channel]
//! profile = "ETU"   # ETU, EVA, single-tap, two-tap or custom
//! doppler_max = 300.0
//!
//! [link]
//! snr_db = [10.0, 14.0]
//! trials = 200
//! ```
//!
//! Unknown keys anywhere are errors. Every error names the offending key.

use std::fmt;
use std::path::Path;

use otfs_core::channel::{doppler_shift, ChannelProfile, DopplerModel};
use otfs_core::equalization::{DetectionOrder, EqualizerKind, Scheme};
use otfs_core::link::{LinkConfig, Mcs, SchemeSetup};
use otfs_core::FrameParams;
use serde::Deserialize;

/// A configuration problem tied to a key such as `link.trials`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, reason: impl fmt::Display) -> Self {
        ConfigError {
            key: key.into(),
            reason: reason.to_string(),
        }
    }

    /// Keeps the key of a core configuration error, otherwise files it
    /// under `fallback`.
    pub fn from_core(err: otfs_core::Error, fallback: &str) -> Self {
        match err {
            otfs_core::Error::InvalidConfig { key, reason } => ConfigError { key, reason },
            other => ConfigError::new(fallback, other),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config key `{}`: {}", self.key, self.reason)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub frame: Option<FrameSection>,
    pub channel: Option<ChannelSection>,
    pub link: Option<LinkSection>,
    pub pilots: Option<PilotsSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSection {
    pub m: usize,
    pub n: usize,
    pub delta_f: f64,
    pub cp_len: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub profile: String,
    /// Hz. Alternatively give `speed` and `carrier_frequency`.
    pub doppler_max: Option<f64>,
    /// m/s.
    pub speed: Option<f64>,
    /// Hz.
    pub carrier_frequency: Option<f64>,
    pub doppler_model: Option<String>,
    /// Seconds, custom profiles only.
    pub tap_delays: Option<Vec<f64>>,
    pub tap_powers_db: Option<Vec<f64>>,
    #[serde(default)]
    pub snap_to_grid: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub schemes: Option<Vec<String>>,
    pub otfs_equalizer: Option<String>,
    pub ofdm_equalizer: Option<String>,
    /// Labels such as `16QAM/conv-r12`; defaults to the five-entry set.
    pub mcs: Option<Vec<String>>,
    pub codeblock_bits: Option<usize>,
    pub snr_db: Vec<f64>,
    /// `[tx, rx]`.
    pub mimo: Option<[usize; 2]>,
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    pub workers: Option<usize>,
    pub detection_order: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotsSection {
    /// Seconds.
    pub delay_spread: f64,
    /// Hz.
    pub doppler_spread: f64,
    pub region_fraction: f64,
    /// Per-bin pilot SNR for `estimate-demo`.
    pub pilot_snr_db: Option<f64>,
    /// Seed of the `estimate-demo` channel and noise.
    #[serde(default)]
    pub seed: u64,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        toml::from_str(text).map_err(|e| toml_error(text, &e))
    }

    pub fn frame(&self) -> Result<FrameParams, ConfigError> {
        let f = self.frame.as_ref().ok_or_else(|| missing("frame"))?;
        if !(f.delta_f.is_finite() && f.delta_f > 0.0) {
            return Err(ConfigError::new("frame.delta_f", "must be a positive number of Hz"));
        }
        if f.m == 0 {
            return Err(ConfigError::new("frame.m", "must be at least 1"));
        }
        if f.n == 0 {
            return Err(ConfigError::new("frame.n", "must be at least 1"));
        }
        if f.m.checked_mul(f.n).map_or(true, |b| b > 1 << 24) {
            return Err(ConfigError::new("frame.m", "grid is too large"));
        }
        FrameParams::new(f.m, f.n, f.delta_f, f.cp_len).map_err(|e| ConfigError::new("frame", e))
    }

    pub fn channel(&self) -> Result<ChannelProfile, ConfigError> {
        let c = self.channel.as_ref().ok_or_else(|| missing("channel"))?;
        let doppler = match (c.doppler_max, c.speed, c.carrier_frequency) {
            (Some(d), None, None) => d,
            (None, Some(v), Some(fc)) => {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(ConfigError::new("channel.speed", "must be a non-negative number of m/s"));
                }
                if !(fc.is_finite() && fc > 0.0) {
                    return Err(ConfigError::new("channel.carrier_frequency", "must be a positive number of Hz"));
                }
                doppler_shift(v, fc)
            }
            (None, None, None) => 0.0,
            (Some(_), _, _) => {
                return Err(ConfigError::new(
                    "channel.doppler_max",
                    "give either doppler_max or speed with carrier_frequency, not both",
                ))
            }
            (None, Some(_), None) => return Err(missing("channel.carrier_frequency")),
            (None, None, Some(_)) => return Err(missing("channel.speed")),
        };
        if !(doppler.is_finite() && doppler >= 0.0) {
            return Err(ConfigError::new("channel.doppler_max", "must be a non-negative number of Hz"));
        }
        let model = match c.doppler_model.as_deref() {
            None | Some("jakes-angle") => DopplerModel::JakesAngle,
            Some("fixed-per-tap") => DopplerModel::FixedPerTap,
            Some(other) => {
                return Err(ConfigError::new(
                    "channel.doppler_model",
                    format!("unknown model `{other}` (expected jakes-angle or fixed-per-tap)"),
                ))
            }
        };
        let custom = c.profile.eq_ignore_ascii_case("custom");
        if !custom && (c.tap_delays.is_some() || c.tap_powers_db.is_some()) {
            let key = if c.tap_delays.is_some() { "channel.tap_delays" } else { "channel.tap_powers_db" };
            return Err(ConfigError::new(key, "only allowed with profile = \"custom\""));
        }
        let profile = if custom {
            let delays = c.tap_delays.clone().ok_or_else(|| missing("channel.tap_delays"))?;
            let powers = c.tap_powers_db.clone().ok_or_else(|| missing("channel.tap_powers_db"))?;
            ChannelProfile::new("custom", delays, powers, doppler, model)
                .map_err(|e| ConfigError::new("channel.tap_delays", e))?
        } else {
            ChannelProfile::builtin(&c.profile, doppler)
                .ok_or_else(|| {
                    ConfigError::new(
                        "channel.profile",
                        format!("unknown profile `{}` (expected ETU, EVA, single-tap, two-tap or custom)", c.profile),
                    )
                })?
                .with_doppler_model(model)
        };
        Ok(profile)
    }

    /// Worker count from the config, if set.
    pub fn workers(&self) -> Option<usize> {
        self.link.as_ref().and_then(|l| l.workers)
    }

    pub fn link(&self) -> Result<LinkConfig, ConfigError> {
        let frame = self.frame()?;
        let channel = self.channel()?;
        let l = self.link.as_ref().ok_or_else(|| missing("link"))?;
        let mcs = match &l.mcs {
            None => Mcs::default_set(),
            Some(list) => list
                .iter()
                .map(|s| Mcs::parse(s).map_err(|e| ConfigError::new("link.mcs", e)))
                .collect::<Result<Vec<_>, _>>()?,
        };
        let schemes = match &l.schemes {
            None => vec![Scheme::Otfs, Scheme::Ofdm],
            Some(list) => {
                let mut out: Vec<Scheme> = Vec::new();
                for s in list {
                    let scheme: Scheme = s.parse().map_err(|e| ConfigError::new("link.schemes", e))?;
                    if out.contains(&scheme) {
                        return Err(ConfigError::new("link.schemes", format!("{scheme} listed twice")));
                    }
                    out.push(scheme);
                }
                out
            }
        };
        let equalizer = |key: &str, value: &Option<String>, scheme: Scheme| -> Result<EqualizerKind, ConfigError> {
            match value {
                None => Ok(EqualizerKind::default_for(scheme)),
                Some(v) => {
                    let kind: EqualizerKind = v.parse().map_err(|e| ConfigError::new(key, e))?;
                    if kind.scheme() != scheme {
                        return Err(ConfigError::new(key, format!("{kind} cannot receive {scheme}")));
                    }
                    Ok(kind)
                }
            }
        };
        let otfs_eq = equalizer("link.otfs_equalizer", &l.otfs_equalizer, Scheme::Otfs)?;
        let ofdm_eq = equalizer("link.ofdm_equalizer", &l.ofdm_equalizer, Scheme::Ofdm)?;
        let schemes = schemes
            .into_iter()
            .map(|s| SchemeSetup::new(s, if s == Scheme::Otfs { otfs_eq } else { ofdm_eq }))
            .collect();
        let detection_order = match l.detection_order.as_deref() {
            None | Some("natural") => DetectionOrder::Natural,
            Some("column-norm") => DetectionOrder::ColumnNormDescending,
            Some(other) => {
                return Err(ConfigError::new(
                    "link.detection_order",
                    format!("unknown order `{other}` (expected natural or column-norm)"),
                ))
            }
        };
        let [tx, rx] = l.mimo.unwrap_or([1, 1]);
        if tx > 8 || rx > 8 {
            return Err(ConfigError::new("link.mimo", "at most 8 streams per side"));
        }
        if l.workers == Some(0) {
            return Err(ConfigError::new("link.workers", "must be at least 1"));
        }
        let cfg = LinkConfig {
            frame,
            schemes,
            mcs,
            codeblock_bits: l.codeblock_bits,
            channel,
            snap_to_grid: self.channel.as_ref().map_or(false, |c| c.snap_to_grid),
            snr_db: l.snr_db.clone(),
            tx_streams: tx,
            rx_streams: rx,
            trials: l.trials,
            master_seed: l.master_seed,
            detection_order,
        };
        cfg.validate().map_err(|e| ConfigError::from_core(e, "link"))?;
        Ok(cfg)
    }

    pub fn pilots(&self) -> Result<&PilotsSection, ConfigError> {
        let p = self.pilots.as_ref().ok_or_else(|| missing("pilots"))?;
        if !(p.delay_spread.is_finite() && p.delay_spread >= 0.0) {
            return Err(ConfigError::new("pilots.delay_spread", "must be a non-negative number of seconds"));
        }
        if !(p.doppler_spread.is_finite() && p.doppler_spread >= 0.0) {
            return Err(ConfigError::new("pilots.doppler_spread", "must be a non-negative number of Hz"));
        }
        if !(p.region_fraction > 0.0 && p.region_fraction <= 1.0) {
            return Err(ConfigError::new("pilots.region_fraction", "must be in (0, 1]"));
        }
        if p.pilot_snr_db.is_some_and(|s| !s.is_finite()) {
            return Err(ConfigError::new("pilots.pilot_snr_db", "must be finite"));
        }
        Ok(p)
    }
}

fn missing(key: &str) -> ConfigError {
    ConfigError::new(key, "missing")
}

// Deserialization errors carry a byte span; recover the dotted key from the
// source text around it.
fn toml_error(text: &str, err: &toml::de::Error) -> ConfigError {
    let message = err.message().trim().to_string();
    let Some(span) = err.span() else {
        return ConfigError::new("config", message);
    };
    let start = span.start.min(text.len());
    let line_start = text[..start].rfind('\n').map_or(0, |i| i + 1);
    let line_end = text[start..].find('\n').map_or(text.len(), |i| start + i);
    let line = &text[line_start..line_end];
    let line_no = text[..line_start].matches('\n').count() + 1;
    let section = text[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('[') && !l.starts_with("[["))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    let quoted = message.split('`').nth(1).map(str::to_string);

    let trimmed = line.trim();
    let key = if trimmed.starts_with('[') {
        // whole-table errors such as a missing field point at the header
        let table = trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        match (&quoted, message.starts_with("missing field")) {
            (Some(field), true) => format!("{table}.{field}"),
            _ if message.starts_with("unknown field") => quoted.clone().unwrap_or(table),
            _ => table,
        }
    } else if let Some((k, _)) = trimmed.split_once('=') {
        let k = k.trim().trim_matches('"');
        match &section {
            Some(s) => format!("{s}.{k}"),
            None => k.to_string(),
        }
    } else if let (Some(field), Some(s)) = (&quoted, &section) {
        format!("{s}.{field}")
    } else {
        quoted.unwrap_or_else(|| "config".to_string())
    };
    ConfigError::new(key, format!("{message} (line {line_no})"))
}
