//! Doubly-dispersive channel simulation.
//!
//! A channel realization is a short list of paths, each a point of the
//! delay-Doppler impulse response: a complex gain, a delay and a Doppler
//! shift. The waveform model is
//!
//! ```text
//! r[t] = Σ_i g_i · s[t − d_i] · exp(j2π ν_i (t − d_i) / fs)
//! ```
//!
//! with `d_i = round(τ_i · fs)` and `t` counted from the start of the frame.
//! Delays are quantized to whole samples; fractional delays are not
//! interpolated.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // unused when a dependency links std
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::equalization::EffectiveChannelMatrix;
use crate::linalg::CMatrix;
use crate::multicarrier::{Ofdm, SampleStream};
use crate::transforms::SymplecticTransform;
use crate::{Error, FrameParams, Result, C64};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Maximum Doppler shift seen by a receiver moving at `speed` m/s on a
/// carrier of `carrier` Hz.
pub fn doppler_shift(speed: f64, carrier: f64) -> f64 {
    speed * carrier / SPEED_OF_LIGHT
}

/// Converts km/h to m/s.
pub fn kmh_to_ms(kmh: f64) -> f64 {
    kmh / 3.6
}

/// One point of the delay-Doppler impulse response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathTap {
    pub gain: C64,
    /// Seconds, non-negative.
    pub delay: f64,
    /// Hz, signed.
    pub doppler: f64,
}

impl PathTap {
    pub fn new(gain: C64, delay: f64, doppler: f64) -> Self {
        PathTap {
            gain,
            delay,
            doppler,
        }
    }

    /// Delay rounded to whole samples.
    pub fn delay_samples(&self, sample_rate: f64) -> usize {
        (self.delay * sample_rate).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub taps: Vec<PathTap>,
    pub profile_name: String,
    pub seed: u64,
}

impl ChannelRealization {
    pub fn new(taps: Vec<PathTap>, profile_name: impl Into<String>, seed: u64) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::invalid("channel needs at least one tap"));
        }
        for (i, t) in taps.iter().enumerate() {
            if !(t.delay.is_finite() && t.delay >= 0.0) {
                return Err(Error::invalid(format!("tap {i}: delay must be finite and >= 0")));
            }
            let g = t.gain.norm();
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::invalid(format!("tap {i}: gain must be finite and non-zero")));
            }
            if !t.doppler.is_finite() {
                return Err(Error::invalid(format!("tap {i}: doppler must be finite")));
            }
        }
        Ok(ChannelRealization {
            taps,
            profile_name: profile_name.into(),
            seed,
        })
    }

    /// Single unit tap with no delay or Doppler.
    pub fn identity() -> Self {
        ChannelRealization {
            taps: vec![PathTap::new(C64::new(1.0, 0.0), 0.0, 0.0)],
            profile_name: "identity".to_string(),
            seed: 0,
        }
    }

    /// Σ|g_i|².
    pub fn total_power(&self) -> f64 {
        self.taps.iter().map(|t| t.gain.norm_sqr()).sum()
    }

    /// Copy with gains scaled to unit total power.
    pub fn normalized(&self) -> Self {
        let s = 1.0 / self.total_power().sqrt();
        let mut out = self.clone();
        for t in &mut out.taps {
            t.gain *= s;
        }
        out
    }

    pub fn max_delay_samples(&self, sample_rate: f64) -> usize {
        self.taps
            .iter()
            .map(|t| t.delay_samples(sample_rate))
            .max()
            .unwrap_or(0)
    }

    /// Copy with delays rounded to delay bins and Doppler shifts rounded to
    /// Doppler bins of `p`.
    pub fn snapped_to_grid(&self, p: &FrameParams) -> Self {
        let dres = p.delay_resolution();
        let nres = p.doppler_resolution();
        let mut out = self.clone();
        for t in &mut out.taps {
            t.delay = (t.delay / dres).round() * dres;
            t.doppler = (t.doppler / nres).round() * nres;
        }
        out
    }

    /// Logs a warning when some path outlasts the cyclic prefix.
    pub fn check_against_frame(&self, p: &FrameParams) -> bool {
        let max = self.max_delay_samples(p.sample_rate());
        if max > p.cp_len() {
            log::warn!(
                "channel `{}` delay of {max} samples exceeds the cyclic prefix ({} samples)",
                self.profile_name,
                p.cp_len()
            );
            false
        } else {
            true
        }
    }

    pub(crate) fn quantized(&self, sample_rate: f64) -> Vec<QuantizedTap> {
        self.taps
            .iter()
            .map(|t| QuantizedTap {
                gain: t.gain,
                delay: t.delay_samples(sample_rate),
                // radians per sample
                omega: 2.0 * PI * t.doppler / sample_rate,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct QuantizedTap {
    gain: C64,
    delay: usize,
    omega: f64,
}

/// How per-tap Doppler shifts are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DopplerModel {
    /// Every tap gets `doppler_max`.
    FixedPerTap,
    /// Tap `i` gets `doppler_max · cos θ_i`, θ_i uniform on [0, 2π).
    JakesAngle,
}

/// Power-delay profile with a Doppler description.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    pub name: String,
    /// Seconds.
    pub tap_delays: Vec<f64>,
    pub tap_powers_db: Vec<f64>,
    /// Hz.
    pub doppler_max: f64,
    pub doppler_model: DopplerModel,
}

/// Extended Typical Urban delays (ns), 3GPP TS 36.101 Annex B.2.
pub const ETU_DELAYS_NS: [f64; 9] = [0.0, 50.0, 120.0, 200.0, 230.0, 500.0, 1600.0, 2300.0, 5000.0];
/// Extended Typical Urban relative powers (dB).
pub const ETU_POWERS_DB: [f64; 9] = [-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -3.0, -5.0, -7.0];
/// Extended Vehicular A delays (ns), 3GPP TS 36.101 Annex B.2.
pub const EVA_DELAYS_NS: [f64; 9] = [0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0];
/// Extended Vehicular A relative powers (dB).
pub const EVA_POWERS_DB: [f64; 9] = [0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9];

/// Names accepted by [`ChannelProfile::builtin`].
pub const BUILTIN_PROFILES: [&str; 4] = ["ETU", "EVA", "single-tap", "two-tap"];

impl ChannelProfile {
    pub fn new(
        name: impl Into<String>,
        tap_delays: Vec<f64>,
        tap_powers_db: Vec<f64>,
        doppler_max: f64,
        doppler_model: DopplerModel,
    ) -> Result<Self> {
        let profile = ChannelProfile {
            name: name.into(),
            tap_delays,
            tap_powers_db,
            doppler_max,
            doppler_model,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tap_delays.is_empty() {
            return Err(Error::invalid("profile has no taps"));
        }
        if self.tap_delays.len() != self.tap_powers_db.len() {
            return Err(Error::invalid(format!(
                "profile has {} delays but {} powers",
                self.tap_delays.len(),
                self.tap_powers_db.len()
            )));
        }
        if self.tap_delays.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::invalid("profile delays must be finite and >= 0"));
        }
        if self.tap_delays.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("profile delays must be non-decreasing"));
        }
        if self.tap_powers_db.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("profile powers must be finite"));
        }
        if !self.doppler_max.is_finite() {
            return Err(Error::invalid("doppler_max must be finite"));
        }
        Ok(())
    }

    pub fn etu(doppler_max: f64) -> Self {
        Self::from_ns("ETU", &ETU_DELAYS_NS, &ETU_POWERS_DB, doppler_max)
    }

    pub fn eva(doppler_max: f64) -> Self {
        Self::from_ns("EVA", &EVA_DELAYS_NS, &EVA_POWERS_DB, doppler_max)
    }

    pub fn single_tap(doppler_max: f64) -> Self {
        Self::from_ns("single-tap", &[0.0], &[0.0], doppler_max)
    }

    /// Two paths 4 µs apart, the second 3 dB weaker.
    pub fn two_tap(doppler_max: f64) -> Self {
        Self::from_ns("two-tap", &[0.0, 4000.0], &[0.0, -3.0], doppler_max)
    }

    /// Looks up a built-in profile by name (case-insensitive).
    pub fn builtin(name: &str, doppler_max: f64) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "etu" => Some(Self::etu(doppler_max)),
            "eva" => Some(Self::eva(doppler_max)),
            "single-tap" => Some(Self::single_tap(doppler_max)),
            "two-tap" => Some(Self::two_tap(doppler_max)),
            _ => None,
        }
    }

    pub fn with_doppler_model(mut self, model: DopplerModel) -> Self {
        self.doppler_model = model;
        self
    }

    fn from_ns(name: &str, delays_ns: &[f64], powers_db: &[f64], doppler_max: f64) -> Self {
        ChannelProfile {
            name: name.to_string(),
            tap_delays: delays_ns.iter().map(|d| d * 1e-9).collect(),
            tap_powers_db: powers_db.to_vec(),
            doppler_max,
            doppler_model: DopplerModel::JakesAngle,
        }
    }

    pub fn max_delay(&self) -> f64 {
        self.tap_delays.iter().copied().fold(0.0, f64::max)
    }
}

/// Draws one realization of `profile`: unit total power, uniform tap
/// phases, Doppler per the profile's model.
pub fn realize_profile(profile: &ChannelProfile, seed: u64) -> Result<ChannelRealization> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let linear: Vec<f64> = profile
        .tap_powers_db
        .iter()
        .map(|db| 10f64.powf(db / 10.0))
        .collect();
    let total: f64 = linear.iter().sum();
    let taps = profile
        .tap_delays
        .iter()
        .zip(&linear)
        .map(|(&delay, &power)| {
            let phase = rng.random::<f64>() * 2.0 * PI;
            let angle = rng.random::<f64>() * 2.0 * PI;
            let doppler = match profile.doppler_model {
                DopplerModel::FixedPerTap => profile.doppler_max,
                DopplerModel::JakesAngle => profile.doppler_max * angle.cos(),
            };
            PathTap::new(C64::from_polar((power / total).sqrt(), phase), delay, doppler)
        })
        .collect();
    ChannelRealization::new(taps, profile.name.clone(), seed)
}

/// Passes `s` through the channel. The output has the input's length; the
/// echo beyond the last input sample is dropped.
pub fn apply(s: &SampleStream, ch: &ChannelRealization) -> Result<SampleStream> {
    apply_at(s, ch, 0)
}

/// Like [`apply`] with the stream starting `offset` samples after the
/// channel's time origin, which only changes the Doppler phases.
pub fn apply_at(s: &SampleStream, ch: &ChannelRealization, offset: usize) -> Result<SampleStream> {
    if !(s.sample_rate.is_finite() && s.sample_rate > 0.0) {
        return Err(Error::invalid("stream sample rate must be set"));
    }
    let taps = ch.quantized(s.sample_rate);
    if let Some(t) = taps.iter().find(|t| t.delay > s.len()) {
        return Err(Error::invalid(format!(
            "tap delay of {} samples exceeds stream length {}",
            t.delay,
            s.len()
        )));
    }
    let mut out = vec![C64::new(0.0, 0.0); s.len()];
    apply_window(&s.samples, offset, &taps, &mut out);
    Ok(SampleStream::new(out, s.sample_rate))
}

/// Accumulates the channel response of `input` (whose first sample sits at
/// absolute time `start`) into `out`, where `out[t]` is at time `start + t`.
pub(crate) fn apply_window(input: &[C64], start: usize, taps: &[QuantizedTap], out: &mut [C64]) {
    for tap in taps {
        if tap.delay >= out.len() {
            continue;
        }
        let end = out.len().min(input.len() + tap.delay);
        // phase at output index t is omega·(start + t − d)
        let step = C64::from_polar(1.0, tap.omega);
        let mut rot = C64::from_polar(1.0, tap.omega * start as f64) * tap.gain;
        for (t, o) in out[tap.delay..end].iter_mut().enumerate() {
            // refresh the recursion periodically to bound rounding drift
            if t % 64 == 0 {
                rot = C64::from_polar(1.0, tap.omega * (start + t) as f64) * tap.gain;
            }
            *o += input[t] * rot;
            rot *= step;
        }
    }
}

/// Adds circularly-symmetric complex Gaussian noise of variance
/// `signal_power / 10^(snr_db/10)`.
pub fn add_awgn(s: &SampleStream, snr_db: f64, signal_power: f64, seed: u64) -> SampleStream {
    let mut out = s.clone();
    add_awgn_in_place(&mut out.samples, noise_variance(snr_db, signal_power), seed);
    out
}

/// Noise variance for a given SNR and reference power.
pub fn noise_variance(snr_db: f64, signal_power: f64) -> f64 {
    signal_power / 10f64.powf(snr_db / 10.0)
}

pub(crate) fn add_awgn_in_place(samples: &mut [C64], variance: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = (variance / 2.0).sqrt();
    for v in samples.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *v += C64::new(re * sigma, im * sigma);
    }
}

/// Exact delay-Doppler input/output map of the noiseless chain
/// `isfft → modulate → apply → demodulate → sfft`, built column by column
/// from unit impulses. Column `l·N + k` is the response to an impulse at
/// delay `l`, Doppler `k`.
pub fn dd_oracle_matrix(ch: &ChannelRealization, p: &FrameParams) -> Result<EffectiveChannelMatrix> {
    dd_oracle_matrix_at(ch, p, 0)
}

/// [`dd_oracle_matrix`] for a frame starting `offset` samples after the
/// channel's time origin.
pub fn dd_oracle_matrix_at(
    ch: &ChannelRealization,
    p: &FrameParams,
    offset: usize,
) -> Result<EffectiveChannelMatrix> {
    ch.check_against_frame(p);
    let len = p.grid_len();
    let sfft = SymplecticTransform::new(p);
    let ofdm = Ofdm::new(p);
    let taps = ch.quantized(p.sample_rate());
    let mut matrix = CMatrix::zeros(len, len);
    let mut grid = vec![C64::new(0.0, 0.0); len];
    let mut tx = vec![C64::new(0.0, 0.0); p.frame_samples()];
    let mut rx = vec![C64::new(0.0, 0.0); p.frame_samples()];
    for col in 0..len {
        grid.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        grid[col] = C64::new(1.0, 0.0);
        sfft.isfft_in_place(&mut grid);
        ofdm.modulate_into(&grid, &mut tx);
        rx.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        apply_window(&tx, offset, &taps, &mut rx);
        ofdm.demodulate_into(&rx, &mut grid);
        sfft.sfft_in_place(&mut grid);
        for (row, v) in grid.iter().enumerate() {
            matrix.set(row, col, *v);
        }
    }
    Ok(EffectiveChannelMatrix::siso(p.grid_len(), matrix))
}
