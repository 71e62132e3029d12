//! Symplectic finite Fourier transform between the delay-Doppler and
//! time-frequency grids.
//!
//! Repository convention (unitary, opposing signs):
//!
//! ```text
//! X[m,n] = 1/√(NM) Σ_k Σ_l x[l,k] · exp(+j2π(nk/N − ml/M))      (isfft)
//! x[l,k] = 1/√(NM) Σ_n Σ_m X[m,n] · exp(−j2π(nk/N − ml/M))      (sfft)
//! ```
//!
//! with `l` the delay index, `k` the Doppler index, `m` the subcarrier and
//! `n` the symbol index. Both directions are computed as two composed 1-D
//! FFTs: along each delay row (length N) and then along each column
//! (length M).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // unused when a dependency links std
use num_traits::Float;

use crate::fft::Fft;
use crate::{DelayDopplerGrid, Error, FrameParams, Result, TimeFrequencyGrid, C64};

/// Reusable FFT plans for one grid shape.
#[derive(Debug, Clone)]
pub struct SymplecticTransform {
    m: usize,
    n: usize,
    fft_m: Fft,
    fft_n: Fft,
    scale: f64,
}

impl SymplecticTransform {
    pub fn new(p: &FrameParams) -> Self {
        Self::with_shape(p.m(), p.n())
    }

    pub fn with_shape(m: usize, n: usize) -> Self {
        SymplecticTransform {
            m,
            n,
            fft_m: Fft::new(m),
            fft_n: Fft::new(n),
            scale: 1.0 / ((m * n) as f64).sqrt(),
        }
    }

    /// In-place ISFFT on row-major `m × n` storage (DD in, TF out).
    pub fn isfft_in_place(&self, data: &mut [C64]) {
        self.apply(data, false);
    }

    /// In-place SFFT on row-major `m × n` storage (TF in, DD out).
    pub fn sfft_in_place(&self, data: &mut [C64]) {
        self.apply(data, true);
    }

    fn apply(&self, data: &mut [C64], forward_rows: bool) {
        assert_eq!(data.len(), self.m * self.n, "grid length mismatch");
        // Doppler <-> time along each row
        for row in data.chunks_exact_mut(self.n) {
            if forward_rows {
                self.fft_n.forward(row);
            } else {
                self.fft_n.inverse(row);
            }
        }
        // delay <-> frequency along each column
        let mut column = vec![C64::new(0.0, 0.0); self.m];
        for col in 0..self.n {
            for (r, c) in column.iter_mut().enumerate() {
                *c = data[r * self.n + col];
            }
            if forward_rows {
                self.fft_m.inverse(&mut column);
            } else {
                self.fft_m.forward(&mut column);
            }
            for (r, c) in column.iter().enumerate() {
                data[r * self.n + col] = c * self.scale;
            }
        }
    }

    pub fn isfft(&self, dd: &DelayDopplerGrid) -> Result<TimeFrequencyGrid> {
        self.check(dd.shape())?;
        let mut data = dd.as_slice().to_vec();
        self.isfft_in_place(&mut data);
        TimeFrequencyGrid::from_vec(self.m, self.n, data)
    }

    pub fn sfft(&self, tf: &TimeFrequencyGrid) -> Result<DelayDopplerGrid> {
        self.check(tf.shape())?;
        let mut data = tf.as_slice().to_vec();
        self.sfft_in_place(&mut data);
        DelayDopplerGrid::from_vec(self.m, self.n, data)
    }

    fn check(&self, shape: (usize, usize)) -> Result<()> {
        if shape != (self.m, self.n) {
            return Err(Error::DimensionMismatch {
                expected: (self.m, self.n),
                actual: shape,
            });
        }
        Ok(())
    }
}

/// Inverse symplectic finite Fourier transform (delay-Doppler to
/// time-frequency).
pub fn isfft(dd: &DelayDopplerGrid, p: &FrameParams) -> Result<TimeFrequencyGrid> {
    dd.check_shape(p)?;
    SymplecticTransform::new(p).isfft(dd)
}

/// Symplectic finite Fourier transform (time-frequency to delay-Doppler),
/// the exact inverse of [`isfft`].
pub fn sfft(tf: &TimeFrequencyGrid, p: &FrameParams) -> Result<DelayDopplerGrid> {
    tf.check_shape(p)?;
    SymplecticTransform::new(p).sfft(tf)
}

/// The time-frequency basis function carried by the delay-Doppler symbol at
/// Doppler index `k`, delay index `l`.
///
/// Evaluated in closed form: `exp(+j2π(nk/N − ml/M)) / √(NM)`.
pub fn basis_function(k: usize, l: usize, p: &FrameParams) -> Result<TimeFrequencyGrid> {
    let (m_len, n_len) = (p.m(), p.n());
    if k >= n_len || l >= m_len {
        return Err(Error::invalid(format!(
            "basis index (k={k}, l={l}) outside {n_len} Doppler x {m_len} delay bins"
        )));
    }
    let scale = 1.0 / (p.grid_len() as f64).sqrt();
    let mut data = Vec::with_capacity(p.grid_len());
    for m in 0..m_len {
        for n in 0..n_len {
            let dop = ((n * k) % n_len) as f64 / n_len as f64;
            let del = ((m * l) % m_len) as f64 / m_len as f64;
            data.push(C64::from_polar(scale, 2.0 * core::f64::consts::PI * (dop - del)));
        }
    }
    TimeFrequencyGrid::from_vec(m_len, n_len, data)
}
