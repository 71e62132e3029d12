//! Planned complex FFTs of arbitrary length.
//!
//! Power-of-two lengths use an iterative radix-2 kernel; every other length
//! goes through Bluestein's chirp-z algorithm on a power-of-two convolution.
//! Transforms are unnormalized: `forward` uses `exp(-j2πnk/len)` and
//! `inverse` uses `exp(+j2πnk/len)`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::C64;

#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    kernel: Kernel,
}

#[derive(Debug, Clone)]
enum Kernel {
    Trivial,
    Radix2(Radix2),
    Bluestein(Box<Bluestein>),
}

impl Fft {
    pub fn new(len: usize) -> Self {
        let kernel = if len <= 1 {
            Kernel::Trivial
        } else if len.is_power_of_two() {
            Kernel::Radix2(Radix2::new(len))
        } else {
            Kernel::Bluestein(Box::new(Bluestein::new(len)))
        };
        Fft { len, kernel }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward transform. Panics if `buf.len() != self.len()`.
    pub fn forward(&self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.len, "fft length mismatch");
        match &self.kernel {
            Kernel::Trivial => {}
            Kernel::Radix2(r) => r.process(buf),
            Kernel::Bluestein(b) => b.process(buf),
        }
    }

    /// In-place inverse transform (no `1/len` scaling).
    pub fn inverse(&self, buf: &mut [C64]) {
        for v in buf.iter_mut() {
            *v = v.conj();
        }
        self.forward(buf);
        for v in buf.iter_mut() {
            *v = v.conj();
        }
    }
}

#[derive(Debug, Clone)]
struct Radix2 {
    len: usize,
    // exp(-j2πk/len) for k < len/2
    twiddles: Vec<C64>,
}

impl Radix2 {
    fn new(len: usize) -> Self {
        let twiddles = (0..len / 2)
            .map(|k| C64::from_polar(1.0, -2.0 * PI * k as f64 / len as f64))
            .collect();
        Radix2 { len, twiddles }
    }

    fn process(&self, buf: &mut [C64]) {
        let n = self.len;
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }
}

#[derive(Debug, Clone)]
struct Bluestein {
    len: usize,
    // exp(-jπk²/len)
    chirp: Vec<C64>,
    // forward transform of the conjugate chirp, zero padded and wrapped
    filter: Vec<C64>,
    inner: Radix2,
}

impl Bluestein {
    fn new(len: usize) -> Self {
        let conv_len = (2 * len - 1).next_power_of_two();
        let chirp: Vec<C64> = (0..len)
            .map(|k| {
                // k² mod 2·len keeps the phase argument small
                let k2 = (k as u128 * k as u128 % (2 * len as u128)) as f64;
                C64::from_polar(1.0, -PI * k2 / len as f64)
            })
            .collect();
        let inner = Radix2::new(conv_len);
        let mut filter = vec![C64::new(0.0, 0.0); conv_len];
        filter[0] = chirp[0].conj();
        for k in 1..len {
            filter[k] = chirp[k].conj();
            filter[conv_len - k] = chirp[k].conj();
        }
        inner.process(&mut filter);
        Bluestein {
            len,
            chirp,
            filter,
            inner,
        }
    }

    fn process(&self, buf: &mut [C64]) {
        let conv_len = self.filter.len();
        let mut work = vec![C64::new(0.0, 0.0); conv_len];
        for k in 0..self.len {
            work[k] = buf[k] * self.chirp[k];
        }
        self.inner.process(&mut work);
        for (w, f) in work.iter_mut().zip(&self.filter) {
            *w = (*w * f).conj();
        }
        // inverse via conjugation
        self.inner.process(&mut work);
        let scale = 1.0 / conv_len as f64;
        for k in 0..self.len {
            buf[k] = work[k].conj() * scale * self.chirp[k];
        }
    }
}

/// Direct O(n²) DFT with the same sign convention as [`Fft::forward`].
pub fn dft_naive(input: &[C64], inverse: bool) -> Vec<C64> {
    let n = input.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    (0..n)
        .map(|k| {
            input
                .iter()
                .enumerate()
                .map(|(t, &x)| {
                    let idx = (k as u128 * t as u128 % n as u128) as f64;
                    x * C64::from_polar(1.0, sign * 2.0 * PI * idx / n as f64)
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn random_vec(len: usize, seed: u64) -> Vec<C64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..len)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    #[test]
    fn matches_naive_dft_for_many_lengths() {
        for len in [1usize, 2, 3, 4, 5, 7, 8, 12, 14, 16, 31, 32, 64, 100, 600] {
            let x = random_vec(len, len as u64);
            let mut fwd = x.clone();
            let plan = Fft::new(len);
            plan.forward(&mut fwd);
            let expect = dft_naive(&x, false);
            assert!(max_abs_diff(&fwd, &expect) < 1e-9 * (len as f64).max(1.0), "len {len}");

            let mut inv = x.clone();
            plan.inverse(&mut inv);
            let expect = dft_naive(&x, true);
            assert!(max_abs_diff(&inv, &expect) < 1e-9 * (len as f64).max(1.0), "len {len}");
        }
    }

    #[test]
    fn forward_then_inverse_scales_by_len() {
        let x = random_vec(48, 9);
        let plan = Fft::new(48);
        let mut y = x.clone();
        plan.forward(&mut y);
        plan.inverse(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a * 48.0 - b).norm() < 1e-10);
        }
    }
}
