use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result, C64};

/// Frame numerology shared by the delay-Doppler and time-frequency grids.
///
/// `m` is the number of subcarriers (delay bins) and `n` the number of
/// multicarrier symbols per frame (Doppler bins).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameParams {
    m: usize,
    n: usize,
    delta_f: f64,
    cp_len: usize,
}

impl FrameParams {
    pub fn new(m: usize, n: usize, delta_f: f64, cp_len: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid(format!("grid must be non-empty, got {m}x{n}")));
        }
        if !(delta_f.is_finite() && delta_f > 0.0) {
            return Err(Error::invalid(format!("subcarrier spacing must be positive, got {delta_f}")));
        }
        Ok(FrameParams {
            m,
            n,
            delta_f,
            cp_len,
        })
    }

    /// Number of subcarriers / delay bins.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of multicarrier symbols / Doppler bins.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta_f(&self) -> f64 {
        self.delta_f
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    /// Symbols per frame, `m * n`.
    pub fn grid_len(&self) -> usize {
        self.m * self.n
    }

    /// Baseband sample rate, `m * delta_f`.
    pub fn sample_rate(&self) -> f64 {
        self.m as f64 * self.delta_f
    }

    /// Samples per multicarrier symbol including the cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        self.m + self.cp_len
    }

    /// Duration of one multicarrier symbol including the cyclic prefix.
    pub fn symbol_duration(&self) -> f64 {
        self.symbol_len() as f64 / self.sample_rate()
    }

    /// Samples in one frame, `n * (m + cp_len)`.
    pub fn frame_samples(&self) -> usize {
        self.n * self.symbol_len()
    }

    pub fn frame_duration(&self) -> f64 {
        self.n as f64 * self.symbol_duration()
    }

    /// Width of one delay bin in seconds, `1 / (m * delta_f)`.
    pub fn delay_resolution(&self) -> f64 {
        1.0 / self.sample_rate()
    }

    /// Width of one Doppler bin in Hz, `1 / (n * T_sym)`.
    pub fn doppler_resolution(&self) -> f64 {
        1.0 / self.frame_duration()
    }

    /// Duration of the cyclic prefix in seconds.
    pub fn cp_duration(&self) -> f64 {
        self.cp_len as f64 / self.sample_rate()
    }
}

macro_rules! grid_type {
    ($(#[$meta:meta])* $name:ident, $row:literal, $col:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            rows: usize,
            cols: usize,
            data: Vec<C64>,
        }

        impl $name {
            /// All-zero grid shaped for `p`.
            pub fn zeros(p: &FrameParams) -> Self {
                Self::zeros_with_shape(p.m(), p.n())
            }

            pub fn zeros_with_shape(rows: usize, cols: usize) -> Self {
                $name {
                    rows,
                    cols,
                    data: vec![C64::new(0.0, 0.0); rows * cols],
                }
            }

            /// Wraps row-major storage of `rows * cols` entries.
            pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
                if data.len() != rows * cols {
                    return Err(Error::invalid(format!(
                        "expected {} entries for a {rows}x{cols} grid, got {}",
                        rows * cols,
                        data.len()
                    )));
                }
                if data.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                    return Err(Error::invalid("grid entries must be finite"));
                }
                Ok($name { rows, cols, data })
            }

            #[doc = concat!("Number of ", $row, " bins.")]
            pub fn rows(&self) -> usize {
                self.rows
            }

            #[doc = concat!("Number of ", $col, " bins.")]
            pub fn cols(&self) -> usize {
                self.cols
            }

            pub fn shape(&self) -> (usize, usize) {
                (self.rows, self.cols)
            }

            #[doc = concat!("Entry at (", $row, " `row`, ", $col, " `col`).")]
            pub fn get(&self, row: usize, col: usize) -> C64 {
                self.data[row * self.cols + col]
            }

            pub fn set(&mut self, row: usize, col: usize, value: C64) {
                self.data[row * self.cols + col] = value;
            }

            /// Row-major storage.
            pub fn as_slice(&self) -> &[C64] {
                &self.data
            }

            pub fn as_mut_slice(&mut self) -> &mut [C64] {
                &mut self.data
            }

            pub fn into_vec(self) -> Vec<C64> {
                self.data
            }

            /// Sum of squared magnitudes.
            pub fn energy(&self) -> f64 {
                self.data.iter().map(|v| v.norm_sqr()).sum()
            }

            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                self.data
                    .iter()
                    .zip(&other.data)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
            }

            pub(crate) fn check_shape(&self, p: &FrameParams) -> Result<()> {
                if self.rows != p.m() || self.cols != p.n() {
                    return Err(Error::DimensionMismatch {
                        expected: (p.m(), p.n()),
                        actual: (self.rows, self.cols),
                    });
                }
                Ok(())
            }
        }
    };
}

grid_type!(
    /// Symbols on the delay-Doppler plane, stored delay-major:
    /// row `l` is a delay bin, column `k` a Doppler bin.
    DelayDopplerGrid,
    "delay",
    "Doppler"
);

grid_type!(
    /// Resource elements of the multicarrier frame, stored frequency-major:
    /// row `m` is a subcarrier, column `n` an OFDM symbol.
    TimeFrequencyGrid,
    "subcarrier",
    "symbol"
);
