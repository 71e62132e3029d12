//! CP-OFDM modulator and demodulator.
//!
//! Each column of a [`TimeFrequencyGrid`] becomes one OFDM symbol: a
//! length-M inverse DFT scaled by `1/√M`, preceded by its last `cp_len`
//! samples. Pulses are rectangular and there is no windowing between
//! symbols.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // unused when a dependency links std
use num_traits::Float;

use crate::fft::Fft;
use crate::{Error, FrameParams, Result, TimeFrequencyGrid, C64};

/// Complex baseband samples with their sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    pub samples: Vec<C64>,
    pub sample_rate: f64,
}

impl SampleStream {
    pub fn new(samples: Vec<C64>, sample_rate: f64) -> Self {
        SampleStream {
            samples,
            sample_rate,
        }
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Self {
        Self::new(vec![C64::new(0.0, 0.0); len], sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Mean power per sample.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }
}

/// CP-OFDM modem with cached FFT plans.
#[derive(Debug, Clone)]
pub struct Ofdm {
    params: FrameParams,
    fft: Fft,
    scale: f64,
}

impl Ofdm {
    pub fn new(p: &FrameParams) -> Self {
        Ofdm {
            params: *p,
            fft: Fft::new(p.m()),
            scale: 1.0 / (p.m() as f64).sqrt(),
        }
    }

    pub fn params(&self) -> &FrameParams {
        &self.params
    }

    pub fn modulate(&self, tf: &TimeFrequencyGrid) -> Result<SampleStream> {
        tf.check_shape(&self.params)?;
        let mut out = vec![C64::new(0.0, 0.0); self.params.frame_samples()];
        self.modulate_into(tf.as_slice(), &mut out);
        Ok(SampleStream::new(out, self.params.sample_rate()))
    }

    /// Modulates row-major TF storage into `out` (length `frame_samples`).
    pub(crate) fn modulate_into(&self, tf: &[C64], out: &mut [C64]) {
        let (m, n, cp) = (self.params.m(), self.params.n(), self.params.cp_len());
        let sym_len = m + cp;
        let mut body = vec![C64::new(0.0, 0.0); m];
        for sym in 0..n {
            for (row, b) in body.iter_mut().enumerate() {
                *b = tf[row * n + sym];
            }
            self.modulate_symbol(&mut body, &mut out[sym * sym_len..(sym + 1) * sym_len]);
        }
    }

    /// Turns one column of subcarrier values (overwritten) into `m + cp`
    /// samples.
    pub(crate) fn modulate_symbol(&self, body: &mut [C64], out: &mut [C64]) {
        let (m, cp) = (self.params.m(), self.params.cp_len());
        self.fft.inverse(body);
        for t in 0..m {
            out[cp + t] = body[t] * self.scale;
        }
        for t in 0..cp {
            // the prefix may be longer than the symbol body
            out[t] = out[cp + (m - (cp - t) % m) % m];
        }
    }

    pub fn demodulate(&self, s: &SampleStream) -> Result<TimeFrequencyGrid> {
        let expected = self.params.frame_samples();
        if s.len() != expected {
            return Err(Error::invalid(format!(
                "stream has {} samples, frame needs {expected}",
                s.len()
            )));
        }
        if (s.sample_rate - self.params.sample_rate()).abs() > 1e-9 * self.params.sample_rate() {
            return Err(Error::invalid(format!(
                "stream sample rate {} does not match frame sample rate {}",
                s.sample_rate,
                self.params.sample_rate()
            )));
        }
        let mut tf = vec![C64::new(0.0, 0.0); self.params.grid_len()];
        self.demodulate_into(&s.samples, &mut tf);
        TimeFrequencyGrid::from_vec(self.params.m(), self.params.n(), tf)
    }

    pub(crate) fn demodulate_into(&self, samples: &[C64], tf: &mut [C64]) {
        let (m, n) = (self.params.m(), self.params.n());
        let sym_len = self.params.symbol_len();
        let mut body = vec![C64::new(0.0, 0.0); m];
        for sym in 0..n {
            self.demodulate_symbol(&samples[sym * sym_len..(sym + 1) * sym_len], &mut body);
            for (row, b) in body.iter().enumerate() {
                tf[row * n + sym] = *b;
            }
        }
    }

    /// Strips the prefix from `m + cp` samples and returns the subcarrier
    /// values in `body`.
    pub(crate) fn demodulate_symbol(&self, symbol: &[C64], body: &mut [C64]) {
        let cp = self.params.cp_len();
        body.copy_from_slice(&symbol[cp..]);
        self.fft.forward(body);
        for b in body.iter_mut() {
            *b *= self.scale;
        }
    }
}

/// CP-OFDM modulation of a full frame.
pub fn modulate(tf: &TimeFrequencyGrid, p: &FrameParams) -> Result<SampleStream> {
    Ofdm::new(p).modulate(tf)
}

/// CP-OFDM demodulation of a full frame.
pub fn demodulate(s: &SampleStream, p: &FrameParams) -> Result<TimeFrequencyGrid> {
    Ofdm::new(p).demodulate(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_grid(p: &FrameParams, seed: u64) -> TimeFrequencyGrid {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..p.grid_len())
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        TimeFrequencyGrid::from_vec(p.m(), p.n(), data).unwrap()
    }

    #[test]
    fn dc_subcarrier_is_constant() {
        let p = FrameParams::new(4, 1, 15e3, 0).unwrap();
        let mut tf = TimeFrequencyGrid::zeros(&p);
        tf.set(0, 0, C64::new(1.0, 0.0));
        let s = modulate(&tf, &p).unwrap();
        assert_eq!(s.len(), 4);
        for v in &s.samples {
            assert!((v - C64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn prefix_copies_symbol_tail() {
        let p = FrameParams::new(4, 1, 15e3, 2).unwrap();
        let s = modulate(&random_grid(&p, 3), &p).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.samples[0], s.samples[4]);
        assert_eq!(s.samples[1], s.samples[5]);
    }

    #[test]
    fn prefix_longer_than_symbol_wraps() {
        let p = FrameParams::new(4, 1, 15e3, 6).unwrap();
        let s = modulate(&random_grid(&p, 4), &p).unwrap();
        // the periodic extension of the body continues backwards
        for t in 0..6 {
            let body_idx = (t as isize - 6).rem_euclid(4) as usize;
            assert!((s.samples[t] - s.samples[6 + body_idx]).norm() < 1e-15);
        }
        let back = demodulate(&s, &p).unwrap();
        assert!(back.max_abs_diff(&random_grid(&p, 4)) < 1e-12);
    }

    #[test]
    fn round_trip_and_zero_stream() {
        let p = FrameParams::new(16, 8, 15e3, 4).unwrap();
        let tf = random_grid(&p, 7);
        let back = demodulate(&modulate(&tf, &p).unwrap(), &p).unwrap();
        assert!(back.max_abs_diff(&tf) < 1e-12);

        let zero = demodulate(&SampleStream::zeros(p.frame_samples(), p.sample_rate()), &p).unwrap();
        assert_eq!(zero.energy(), 0.0);
    }

    #[test]
    fn circular_delay_within_prefix_is_a_phase_ramp() {
        // Oracle: shift theorem evaluated by a direct DFT of the delayed body.
        let p = FrameParams::new(8, 1, 15e3, 3).unwrap();
        let tf = random_grid(&p, 11);
        let s = modulate(&tf, &p).unwrap();
        for d in 0..=3usize {
            // delaying the whole symbol by d samples reads the prefix
            let mut delayed = vec![C64::new(0.0, 0.0); s.len()];
            for t in d..s.len() {
                delayed[t] = s.samples[t - d];
            }
            // the first d prefix samples are never read by the receiver
            let rx = demodulate(&SampleStream::new(delayed, s.sample_rate), &p).unwrap();
            let body: Vec<C64> = s.samples[3 - d..3 - d + 8].to_vec();
            let direct = crate::fft::dft_naive(&body, false);
            for m in 0..8 {
                let want = tf.get(m, 0)
                    * C64::from_polar(1.0, -2.0 * core::f64::consts::PI * (m * d) as f64 / 8.0);
                assert!((rx.get(m, 0) - want).norm() < 1e-12, "d={d} m={m}");
                assert!((rx.get(m, 0) - direct[m] / 8f64.sqrt()).norm() < 1e-12);
                assert!((rx.get(m, 0).norm() - tf.get(m, 0).norm()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn length_and_rate_mismatch_rejected() {
        let p = FrameParams::new(8, 2, 15e3, 2).unwrap();
        assert!(demodulate(&SampleStream::zeros(19, p.sample_rate()), &p).is_err());
        assert!(demodulate(&SampleStream::zeros(20, 1.0), &p).is_err());
        let wrong = TimeFrequencyGrid::zeros_with_shape(4, 2);
        assert!(modulate(&wrong, &p).is_err());
    }
}
