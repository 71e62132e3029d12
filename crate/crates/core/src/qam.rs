//! Gray-labelled square QAM with unit average power.
//!
//! Each axis is a Gray-coded PAM: the first bit of an axis picks the sign
//! (0 is positive) and the remaining bits pick the magnitude. Bits
//! `b0..b(k-1)` drive the in-phase axis and `bk..b(2k-1)` the quadrature
//! axis, so QPSK `00` is `(1 + j)/√2`.

use alloc::format;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)] // unused when a dependency links std
use num_traits::Float;

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modulation {
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_axis()
    }

    fn bits_per_axis(&self) -> usize {
        match self {
            Modulation::Qpsk => 1,
            Modulation::Qam16 => 2,
            Modulation::Qam64 => 3,
        }
    }

    /// Amplitude scale giving unit average symbol power.
    fn scale(&self) -> f64 {
        match self {
            Modulation::Qpsk => 1.0 / 2f64.sqrt(),
            Modulation::Qam16 => 1.0 / 10f64.sqrt(),
            Modulation::Qam64 => 1.0 / 42f64.sqrt(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "16QAM",
            Modulation::Qam64 => "64QAM",
        }
    }

    /// All constellation points in label order.
    pub fn points(&self) -> Vec<C64> {
        let k = self.bits_per_symbol();
        (0..1usize << k)
            .map(|label| {
                let bits: Vec<u8> = (0..k).map(|i| ((label >> (k - 1 - i)) & 1) as u8).collect();
                self.map_symbol(&bits)
            })
            .collect()
    }

    fn map_symbol(&self, bits: &[u8]) -> C64 {
        let k = self.bits_per_axis();
        C64::new(pam_level(&bits[..k]), pam_level(&bits[k..])) * self.scale()
    }

    pub fn map(&self, bits: &[u8]) -> Result<Vec<C64>> {
        let k = self.bits_per_symbol();
        if bits.len() % k != 0 {
            return Err(Error::invalid(format!(
                "{} bits is not a multiple of {k} bits per {} symbol",
                bits.len(),
                self.name()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::invalid("bits must be 0 or 1"));
        }
        Ok(bits.chunks_exact(k).map(|c| self.map_symbol(c)).collect())
    }

    /// Minimum-distance decisions.
    pub fn demap_hard(&self, symbols: &[C64]) -> Vec<u8> {
        let k = self.bits_per_axis();
        let levels = axis_levels(k);
        let s = self.scale();
        let mut out = Vec::with_capacity(symbols.len() * 2 * k);
        for y in symbols {
            for v in [y.re / s, y.im / s] {
                let best = levels
                    .iter()
                    .min_by(|a, b| (a.0 - v).abs().partial_cmp(&(b.0 - v).abs()).unwrap())
                    .unwrap();
                out.extend_from_slice(&best.1[..k]);
            }
        }
        out
    }

    /// Max-log LLRs, positive favouring bit 0:
    /// `(min_{b=1}|y−s|² − min_{b=0}|y−s|²) / σ²`.
    pub fn llr(&self, symbols: &[C64], noise_variance: &[f64]) -> Result<Vec<f64>> {
        if symbols.len() != noise_variance.len() {
            return Err(Error::invalid("one noise variance per symbol is required"));
        }
        let k = self.bits_per_axis();
        let levels = axis_levels(k);
        let s = self.scale();
        let mut out = Vec::with_capacity(symbols.len() * 2 * k);
        for (y, &var) in symbols.iter().zip(noise_variance) {
            let var = var.max(1e-300);
            // the squared distance splits over the two axes
            for v in [y.re, y.im] {
                for bit in 0..k {
                    let (mut d0, mut d1) = (f64::INFINITY, f64::INFINITY);
                    for (lvl, label) in &levels {
                        let d = (v - lvl * s) * (v - lvl * s);
                        if label[bit] == 0 {
                            d0 = d0.min(d);
                        } else {
                            d1 = d1.min(d);
                        }
                    }
                    out.push((d1 - d0) / var);
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "QPSK" | "4QAM" => Ok(Modulation::Qpsk),
            "16QAM" | "QAM16" => Ok(Modulation::Qam16),
            "64QAM" | "QAM64" => Ok(Modulation::Qam64),
            _ => Err(Error::invalid(format!("unknown modulation `{s}` (expected QPSK, 16QAM or 64QAM)"))),
        }
    }
}

/// Unscaled Gray PAM level for `bits` (sign bit first).
fn pam_level(bits: &[u8]) -> f64 {
    let sign = 1.0 - 2.0 * bits[0] as f64;
    let mut mag = 1.0;
    // innermost bit first: 1 → {1,3} → {1,3,5,7}
    let rest = &bits[1..];
    let mut half = 1.0;
    for &b in rest.iter().rev() {
        half *= 2.0;
        mag = half - (1.0 - 2.0 * b as f64) * mag;
    }
    sign * mag
}

fn axis_levels(k: usize) -> Vec<(f64, [u8; 3])> {
    (0..1usize << k)
        .map(|label| {
            let mut bits = [0u8; 3];
            for (i, b) in bits.iter_mut().enumerate().take(k) {
                *b = ((label >> (k - 1 - i)) & 1) as u8;
            }
            (pam_level(&bits[..k]), bits)
        })
        .collect()
}
