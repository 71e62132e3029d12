//! Receivers: effective-channel construction, delay-Doppler LMMSE and
//! genie-aided MMSE-DFE, and the per-bin OFDM receivers.
//!
//! All estimates returned here are the biased MMSE outputs. The matching
//! unbiased SINR of symbol `i` is reported alongside, so a demapper can use
//! `x̂ / β` with `β = SINR / (1 + SINR)` and noise variance `1 / SINR`.
//!
//! For MIMO the received vector stacks receive streams and the symbol
//! vector stacks transmit streams: symbol `i` of stream `t` sits at
//! `t·M·N + i`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::channel::{apply_window, ChannelRealization};
use crate::linalg::{CMatrix, Cholesky};
use crate::multicarrier::Ofdm;
use crate::transforms::SymplecticTransform;
use crate::{Error, FrameParams, Result, TimeFrequencyGrid, C64};

/// Which domain carries the data symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Otfs,
    Ofdm,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Otfs => "OTFS",
            Scheme::Ofdm => "OFDM",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "OTFS" => Ok(Scheme::Otfs),
            "OFDM" => Ok(Scheme::Ofdm),
            _ => Err(Error::invalid(format!("unknown scheme `{s}` (expected OTFS or OFDM)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EqualizerKind {
    DdLmmse,
    DdGenieDfe,
    TfSingleTap,
    TfGenieSic,
}

impl EqualizerKind {
    pub fn name(&self) -> &'static str {
        match self {
            EqualizerKind::DdLmmse => "dd-lmmse",
            EqualizerKind::DdGenieDfe => "dd-genie-dfe",
            EqualizerKind::TfSingleTap => "tf-single-tap",
            EqualizerKind::TfGenieSic => "tf-genie-sic",
        }
    }

    /// The scheme this receiver works with.
    pub fn scheme(&self) -> Scheme {
        match self {
            EqualizerKind::DdLmmse | EqualizerKind::DdGenieDfe => Scheme::Otfs,
            EqualizerKind::TfSingleTap | EqualizerKind::TfGenieSic => Scheme::Ofdm,
        }
    }

    /// Receiver used when a scheme is configured without one.
    pub fn default_for(scheme: Scheme) -> Self {
        match scheme {
            Scheme::Otfs => EqualizerKind::DdGenieDfe,
            Scheme::Ofdm => EqualizerKind::TfGenieSic,
        }
    }
}

impl fmt::Display for EqualizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EqualizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dd-lmmse" => Ok(EqualizerKind::DdLmmse),
            "dd-genie-dfe" => Ok(EqualizerKind::DdGenieDfe),
            "tf-single-tap" => Ok(EqualizerKind::TfSingleTap),
            "tf-genie-sic" => Ok(EqualizerKind::TfGenieSic),
            _ => Err(Error::invalid(format!(
                "unknown equalizer `{s}` (expected dd-lmmse, dd-genie-dfe, tf-single-tap or tf-genie-sic)"
            ))),
        }
    }
}

/// Order in which a DFE or SIC detects symbols.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum DetectionOrder {
    /// Vectorization order, index 0 first.
    #[default]
    Natural,
    /// Strongest channel column first.
    ColumnNormDescending,
    /// Explicit permutation, first entry detected first.
    Custom(Vec<usize>),
}

impl DetectionOrder {
    /// Resolves to an explicit permutation given the Gram diagonal.
    pub fn resolve(&self, gram_diag: &[f64]) -> Result<Vec<usize>> {
        let n = gram_diag.len();
        match self {
            DetectionOrder::Natural => Ok((0..n).collect()),
            DetectionOrder::ColumnNormDescending => {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| {
                    gram_diag[b]
                        .partial_cmp(&gram_diag[a])
                        .unwrap_or(core::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                });
                Ok(idx)
            }
            DetectionOrder::Custom(p) => {
                let mut seen = vec![false; n];
                if p.len() != n || p.iter().any(|&i| i >= n || core::mem::replace(&mut seen[i], true)) {
                    return Err(Error::invalid(format!("detection order is not a permutation of 0..{n}")));
                }
                Ok(p.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerConfig {
    pub kind: EqualizerKind,
    pub noise_variance: f64,
    pub order: DetectionOrder,
}

impl EqualizerConfig {
    pub fn new(kind: EqualizerKind, noise_variance: f64) -> Result<Self> {
        if !(noise_variance.is_finite() && noise_variance > 0.0) {
            return Err(Error::invalid("noise variance must be positive and finite"));
        }
        Ok(EqualizerConfig {
            kind,
            noise_variance,
            order: DetectionOrder::Natural,
        })
    }
}

/// Dense end-to-end map from stacked transmitted symbols to stacked
/// received symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannelMatrix {
    pub tx_streams: usize,
    pub rx_streams: usize,
    /// Symbols per stream, `M·N`.
    pub block_len: usize,
    pub matrix: CMatrix,
}

impl EffectiveChannelMatrix {
    pub fn new(tx_streams: usize, rx_streams: usize, block_len: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.rows() != rx_streams * block_len || matrix.cols() != tx_streams * block_len {
            return Err(Error::DimensionMismatch {
                expected: (rx_streams * block_len, tx_streams * block_len),
                actual: (matrix.rows(), matrix.cols()),
            });
        }
        if matrix.as_slice().iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::invalid("effective channel has non-finite entries"));
        }
        Ok(EffectiveChannelMatrix {
            tx_streams,
            rx_streams,
            block_len,
            matrix,
        })
    }

    pub(crate) fn siso(block_len: usize, matrix: CMatrix) -> Self {
        EffectiveChannelMatrix {
            tx_streams: 1,
            rx_streams: 1,
            block_len,
            matrix,
        }
    }

    /// Block for receive stream `r` and transmit stream `t`.
    pub fn block(&self, r: usize, t: usize) -> CMatrix {
        let b = self.block_len;
        CMatrix::from_fn(b, b, |i, j| self.matrix.get(r * b + i, t * b + j))
    }
}

/// Noiseless time-frequency response of one transmit/receive pair,
/// stored as `M×M` blocks from input symbol `n` to output symbol `n + δ`
/// for `0 ≤ δ ≤ span`. All other blocks are exactly zero.
#[derive(Debug, Clone)]
pub struct TfResponse {
    m: usize,
    n: usize,
    span: usize,
    // index ((n·(span+1) + δ)·M + m_out)·M + m_in
    blocks: Vec<C64>,
}

impl TfResponse {
    /// Builds the response of `ch` for a frame starting `offset` samples
    /// after the channel's time origin.
    pub fn build(ch: &ChannelRealization, p: &FrameParams, offset: usize) -> Self {
        let (m, n) = (p.m(), p.n());
        let sym_len = p.symbol_len();
        let dmax = ch.max_delay_samples(p.sample_rate());
        let span = ((sym_len - 1 + dmax) / sym_len).min(n - 1);
        let taps = ch.quantized(p.sample_rate());
        let ofdm = Ofdm::new(p);
        let mut blocks = vec![C64::new(0.0, 0.0); n * (span + 1) * m * m];
        let mut body = vec![C64::new(0.0, 0.0); m];
        let mut symbol = vec![C64::new(0.0, 0.0); sym_len];
        let mut window = vec![C64::new(0.0, 0.0); (span + 1) * sym_len];
        for sym in 0..n {
            let reach = (span + 1).min(n - sym);
            let out = &mut window[..reach * sym_len];
            for m_in in 0..m {
                body.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                body[m_in] = C64::new(1.0, 0.0);
                ofdm.modulate_symbol(&mut body, &mut symbol);
                out.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                apply_window(&symbol, offset + sym * sym_len, &taps, out);
                for d in 0..reach {
                    ofdm.demodulate_symbol(&out[d * sym_len..(d + 1) * sym_len], &mut body);
                    let base = (sym * (span + 1) + d) * m * m;
                    for (m_out, v) in body.iter().enumerate() {
                        blocks[base + m_out * m + m_in] = *v;
                    }
                }
            }
        }
        TfResponse { m, n, span, blocks }
    }

    /// Number of later symbols reached by one transmitted symbol.
    pub fn span(&self) -> usize {
        self.span
    }

    #[inline]
    fn block(&self, sym: usize, d: usize) -> &[C64] {
        let mm = self.m * self.m;
        let base = (sym * (self.span + 1) + d) * mm;
        &self.blocks[base..base + mm]
    }

    /// Gain seen by subcarrier `m` of symbol `n` on itself.
    pub fn diagonal(&self, m: usize, n: usize) -> C64 {
        self.block(n, 0)[m * self.m + m]
    }

    /// `y += H·x` on row-major TF storage.
    pub fn apply_add(&self, x: &[C64], y: &mut [C64]) {
        let (m, n) = (self.m, self.n);
        for sym in 0..n {
            for d in 0..=self.span.min(n - 1 - sym) {
                let b = self.block(sym, d);
                let out = sym + d;
                for m_out in 0..m {
                    let row = &b[m_out * m..(m_out + 1) * m];
                    let mut acc = C64::new(0.0, 0.0);
                    for (m_in, h) in row.iter().enumerate() {
                        acc += h * x[m_in * n + sym];
                    }
                    y[m_out * n + out] += acc;
                }
            }
        }
    }

    /// `x += Hᴴ·y` on row-major TF storage.
    pub fn adjoint_add(&self, y: &[C64], x: &mut [C64]) {
        let (m, n) = (self.m, self.n);
        for sym in 0..n {
            for d in 0..=self.span.min(n - 1 - sym) {
                let b = self.block(sym, d);
                let out = sym + d;
                for m_out in 0..m {
                    let yv = y[m_out * n + out];
                    let row = &b[m_out * m..(m_out + 1) * m];
                    for (m_in, h) in row.iter().enumerate() {
                        x[m_in * n + sym] += h.conj() * yv;
                    }
                }
            }
        }
    }

    /// Dense `MN × MN` matrix in TF vectorization order.
    pub fn to_dense(&self) -> CMatrix {
        let (m, n) = (self.m, self.n);
        let mut out = CMatrix::zeros(m * n, m * n);
        for sym in 0..n {
            for d in 0..=self.span.min(n - 1 - sym) {
                let b = self.block(sym, d);
                for m_out in 0..m {
                    for m_in in 0..m {
                        out.set(m_out * n + sym + d, m_in * n + sym, b[m_out * m + m_in]);
                    }
                }
            }
        }
        out
    }

    /// Adds `Aᴴ·B` for two responses sharing the receive antenna into the
    /// `(row_off, col_off)` block of `dst`.
    fn gram_add(a: &TfResponse, b: &TfResponse, dst: &mut CMatrix, row_off: usize, col_off: usize) {
        let (m, n) = (a.m, a.n);
        for out in 0..n {
            for d1 in 0..=a.span.min(out) {
                let s1 = out - d1;
                let ba = a.block(s1, d1);
                for d2 in 0..=b.span.min(out) {
                    let s2 = out - d2;
                    let bb = b.block(s2, d2);
                    // Σ_{m'} conj(A[m', i]) · B[m', j]
                    for m_out in 0..m {
                        let ra = &ba[m_out * m..(m_out + 1) * m];
                        let rb = &bb[m_out * m..(m_out + 1) * m];
                        for (i, av) in ra.iter().enumerate() {
                            if av.re == 0.0 && av.im == 0.0 {
                                continue;
                            }
                            let ac = av.conj();
                            let r = row_off + i * n + s1;
                            for (j, bv) in rb.iter().enumerate() {
                                let c = col_off + j * n + s2;
                                let cur = dst.get(r, c);
                                dst.set(r, c, cur + ac * bv);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Time-frequency responses of every transmit/receive pair of a link.
#[derive(Debug, Clone)]
pub struct MimoTfChannel {
    params: FrameParams,
    tx: usize,
    rx: usize,
    // index r·T + t
    pairs: Vec<TfResponse>,
}

impl MimoTfChannel {
    /// `channels[r·T + t]` is the path from transmit stream `t` to receive
    /// stream `r`.
    pub fn build(channels: &[ChannelRealization], tx: usize, rx: usize, p: &FrameParams) -> Result<Self> {
        Self::build_at(channels, tx, rx, p, 0)
    }

    pub fn build_at(
        channels: &[ChannelRealization],
        tx: usize,
        rx: usize,
        p: &FrameParams,
        offset: usize,
    ) -> Result<Self> {
        if tx == 0 || rx == 0 || channels.len() != tx * rx {
            return Err(Error::invalid(format!(
                "expected {} channel realizations for {tx}x{rx} MIMO, got {}",
                tx * rx,
                channels.len()
            )));
        }
        for ch in channels {
            ch.check_against_frame(p);
        }
        Ok(MimoTfChannel {
            params: *p,
            tx,
            rx,
            pairs: channels.iter().map(|c| TfResponse::build(c, p, offset)).collect(),
        })
    }

    pub fn tx_streams(&self) -> usize {
        self.tx
    }

    pub fn rx_streams(&self) -> usize {
        self.rx
    }

    pub fn params(&self) -> &FrameParams {
        &self.params
    }

    pub fn pair(&self, r: usize, t: usize) -> &TfResponse {
        &self.pairs[r * self.tx + t]
    }

    /// Noiseless received TF grids for the stacked transmitted TF grids.
    pub fn apply(&self, x_tf: &[C64]) -> Vec<C64> {
        let b = self.params.grid_len();
        let mut y = vec![C64::new(0.0, 0.0); self.rx * b];
        for r in 0..self.rx {
            for t in 0..self.tx {
                self.pair(r, t).apply_add(&x_tf[t * b..(t + 1) * b], &mut y[r * b..(r + 1) * b]);
            }
        }
        y
    }

    /// `Hᴴ·y` in the TF domain.
    pub fn matched_filter_tf(&self, y_tf: &[C64]) -> Vec<C64> {
        let b = self.params.grid_len();
        let mut z = vec![C64::new(0.0, 0.0); self.tx * b];
        for r in 0..self.rx {
            for t in 0..self.tx {
                self.pair(r, t).adjoint_add(&y_tf[r * b..(r + 1) * b], &mut z[t * b..(t + 1) * b]);
            }
        }
        z
    }

    /// `Hᴴ·y` for the delay-Doppler model, given received TF grids.
    pub fn matched_filter_dd(&self, y_tf: &[C64]) -> Vec<C64> {
        let mut z = self.matched_filter_tf(y_tf);
        let s = SymplecticTransform::new(&self.params);
        for chunk in z.chunks_exact_mut(self.params.grid_len()) {
            s.sfft_in_place(chunk);
        }
        z
    }

    /// `Hᴴ·H` of the TF-domain model.
    pub fn gram_tf(&self) -> CMatrix {
        let b = self.params.grid_len();
        let mut a = CMatrix::zeros(self.tx * b, self.tx * b);
        for r in 0..self.rx {
            for t1 in 0..self.tx {
                for t2 in 0..self.tx {
                    TfResponse::gram_add(self.pair(r, t1), self.pair(r, t2), &mut a, t1 * b, t2 * b);
                }
            }
        }
        a
    }

    /// `Hᴴ·H` of the delay-Doppler model, `S·(Hᴴ_tf H_tf)·Sᴴ` per stream
    /// block.
    pub fn gram_dd(&self) -> CMatrix {
        let a = self.gram_tf();
        conjugate_by_sfft(&a, &self.params)
    }

    /// Dense effective matrix for `scheme`.
    pub fn effective_matrix(&self, scheme: Scheme) -> EffectiveChannelMatrix {
        let b = self.params.grid_len();
        let mut h = CMatrix::zeros(self.rx * b, self.tx * b);
        for r in 0..self.rx {
            for t in 0..self.tx {
                let mut blk = self.pair(r, t).to_dense();
                if scheme == Scheme::Otfs {
                    blk = conjugate_by_sfft(&blk, &self.params);
                }
                for i in 0..b {
                    for j in 0..b {
                        h.set(r * b + i, t * b + j, blk.get(i, j));
                    }
                }
            }
        }
        EffectiveChannelMatrix {
            tx_streams: self.tx,
            rx_streams: self.rx,
            block_len: b,
            matrix: h,
        }
    }

    /// Per-bin `R×T` channel at subcarrier `m`, symbol `n`, ignoring
    /// leakage from other bins. Row-major.
    pub fn bin_matrix(&self, m: usize, n: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rx * self.tx);
        for r in 0..self.rx {
            for t in 0..self.tx {
                out.push(self.pair(r, t).diagonal(m, n));
            }
        }
        out
    }
}

/// `S·A·Sᴴ` with `S` the SFFT applied to each length-`M·N` stream block.
fn conjugate_by_sfft(a: &CMatrix, p: &FrameParams) -> CMatrix {
    let s = SymplecticTransform::new(p);
    let b = p.grid_len();
    let (rows, cols) = (a.rows(), a.cols());
    // left: transform every column
    let mut left = CMatrix::zeros(rows, cols);
    let mut col = vec![C64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for (r, v) in col.iter_mut().enumerate() {
            *v = a.get(r, c);
        }
        for chunk in col.chunks_exact_mut(b) {
            s.sfft_in_place(chunk);
        }
        left.set_column(c, &col);
    }
    // right: (S·Lᴴ)ᴴ, transforming the conjugated rows
    let mut out = CMatrix::zeros(rows, cols);
    let mut row = vec![C64::new(0.0, 0.0); cols];
    for r in 0..rows {
        for (c, v) in row.iter_mut().enumerate() {
            *v = left.get(r, c).conj();
        }
        for chunk in row.chunks_exact_mut(b) {
            s.sfft_in_place(chunk);
        }
        for (c, v) in row.iter().enumerate() {
            out.set(r, c, v.conj());
        }
    }
    out
}

/// Builds the effective channel matrix of a `T×R` link through the
/// symbol-block route. `channels[r·T + t]` is the path from transmit stream
/// `t` to receive stream `r`. For OTFS this is the same map as
/// [`crate::channel::dd_oracle_matrix`].
pub fn build_effective_matrix(
    channels: &[ChannelRealization],
    tx: usize,
    rx: usize,
    p: &FrameParams,
    scheme: Scheme,
) -> Result<EffectiveChannelMatrix> {
    Ok(MimoTfChannel::build(channels, tx, rx, p)?.effective_matrix(scheme))
}

/// Biased MMSE estimates with the unbiased SINR of each.
#[derive(Debug, Clone, PartialEq)]
pub struct Equalized {
    pub estimates: Vec<C64>,
    pub sinr: Vec<f64>,
}

impl Equalized {
    /// Removes the MMSE bias. Returns the scaled estimates and their
    /// residual noise variances `1 / SINR`.
    pub fn unbiased(&self) -> (Vec<C64>, Vec<f64>) {
        let mut est = Vec::with_capacity(self.estimates.len());
        let mut var = Vec::with_capacity(self.estimates.len());
        for (x, &s) in self.estimates.iter().zip(&self.sinr) {
            let s = s.max(1e-12);
            est.push(x * ((1.0 + s) / s));
            var.push(1.0 / s);
        }
        (est, var)
    }
}

fn check_noise(noise_variance: f64, allow_zero: bool) -> Result<()> {
    if !noise_variance.is_finite() || noise_variance < 0.0 || (!allow_zero && noise_variance == 0.0) {
        return Err(Error::invalid(format!("invalid noise variance {noise_variance}")));
    }
    Ok(())
}

fn regularized(gram: &CMatrix, noise_variance: f64) -> CMatrix {
    let mut a = gram.clone();
    a.add_diagonal(noise_variance);
    a
}

fn sinr_from_inverse_diag(d: &[f64], noise_variance: f64) -> Vec<f64> {
    d.iter().map(|v| (1.0 / (noise_variance * v) - 1.0).max(0.0)).collect()
}

/// `x̂ = (HᴴH + σ²I)⁻¹ Hᴴ y`.
pub fn lmmse(y: &[C64], h: &CMatrix, noise_variance: f64) -> Result<Vec<C64>> {
    check_noise(noise_variance, true)?;
    let z = h.adjoint_mul_vec(y)?;
    let ch = Cholesky::factor(&regularized(&h.gram(), noise_variance))?;
    Ok(ch.solve(&z))
}

/// LMMSE from the Gram matrix `A = HᴴH` and matched-filter output
/// `z = Hᴴy`, with per-symbol SINR.
pub fn lmmse_gram(gram: &CMatrix, z: &[C64], noise_variance: f64) -> Result<Equalized> {
    PreparedReceiver::lmmse(gram, noise_variance)?.equalize(z, None)
}

/// Genie-aided MMSE-DFE: symbols are detected in `order` and the true
/// symbol, not the decision, is cancelled after each detection.
pub fn genie_dfe(
    y: &[C64],
    h: &CMatrix,
    noise_variance: f64,
    true_x: &[C64],
    order: &DetectionOrder,
) -> Result<Equalized> {
    let z = h.adjoint_mul_vec(y)?;
    genie_dfe_gram(&h.gram(), &z, noise_variance, true_x, order)
}

/// [`genie_dfe`] from `A = HᴴH` and `z = Hᴴy`.
pub fn genie_dfe_gram(
    gram: &CMatrix,
    z: &[C64],
    noise_variance: f64,
    true_x: &[C64],
    order: &DetectionOrder,
) -> Result<Equalized> {
    PreparedReceiver::genie_dfe(gram, noise_variance, order)?.equalize(z, Some(true_x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Detector {
    Linear,
    GenieDfe,
}

/// A factored delay-Doppler receiver for one channel and noise level,
/// reusable across any number of received frames.
///
/// For the DFE, `A + σ²I = L·Lᴴ` is factored in detection-reversed order.
/// The whitened observation `L⁻¹z = Lᴴx + noise` is then upper triangular
/// in the symbols, so each step is the MMSE estimate of the remaining
/// system once the already-detected symbols are removed.
#[derive(Debug, Clone)]
pub struct PreparedReceiver {
    detector: Detector,
    chol: Cholesky,
    // perm[pos] = symbol index; identity for the linear receiver
    perm: Vec<usize>,
    sinr: Vec<f64>,
}

impl PreparedReceiver {
    pub fn lmmse(gram: &CMatrix, noise_variance: f64) -> Result<Self> {
        check_noise(noise_variance, false)?;
        let chol = Cholesky::factor(&regularized(gram, noise_variance))?;
        let sinr = sinr_from_inverse_diag(&chol.inverse_diagonal(), noise_variance);
        Ok(PreparedReceiver {
            detector: Detector::Linear,
            perm: (0..gram.rows()).collect(),
            chol,
            sinr,
        })
    }

    pub fn genie_dfe(gram: &CMatrix, noise_variance: f64, order: &DetectionOrder) -> Result<Self> {
        check_noise(noise_variance, true)?;
        let n = gram.rows();
        let diag: Vec<f64> = (0..n).map(|i| gram.get(i, i).re).collect();
        let order = order.resolve(&diag)?;
        // position n-1 holds the first detected symbol
        let perm: Vec<usize> = order.iter().rev().copied().collect();
        let chol = Cholesky::factor(&regularized(&gram.permuted(&perm), noise_variance))?;
        let mut sinr = vec![0.0; n];
        for (pos, &i) in perm.iter().enumerate() {
            let d = chol.diag(pos);
            sinr[i] = if noise_variance > 0.0 {
                (d * d / noise_variance - 1.0).max(0.0)
            } else {
                f64::INFINITY
            };
        }
        Ok(PreparedReceiver {
            detector: Detector::GenieDfe,
            chol,
            perm,
            sinr,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Unbiased post-equalization SINR per symbol.
    pub fn sinr(&self) -> &[f64] {
        &self.sinr
    }

    /// Equalizes a matched-filter output `z = Hᴴy`. The DFE needs the
    /// transmitted symbols for its genie feedback.
    pub fn equalize(&self, z: &[C64], true_x: Option<&[C64]>) -> Result<Equalized> {
        let n = self.dim();
        if z.len() != n {
            return Err(Error::DimensionMismatch {
                expected: (n, 1),
                actual: (z.len(), 1),
            });
        }
        let estimates = match self.detector {
            Detector::Linear => self.chol.solve(z),
            Detector::GenieDfe => {
                let true_x = match true_x {
                    Some(x) if x.len() == n => x,
                    _ => return Err(Error::invalid("genie DFE needs the transmitted symbols")),
                };
                let zp: Vec<C64> = self.perm.iter().map(|&i| z[i]).collect();
                let w = self.chol.forward(&zp);
                // feedback[i] = Σ_{j>i} conj(L[j][i]) · x_j
                let mut feedback = vec![C64::new(0.0, 0.0); n];
                for (j, &sym) in self.perm.iter().enumerate() {
                    let xj = true_x[sym];
                    for (i, f) in feedback.iter_mut().enumerate().take(j) {
                        *f += self.chol.l(j, i).conj() * xj;
                    }
                }
                let mut est = vec![C64::new(0.0, 0.0); n];
                for (pos, &i) in self.perm.iter().enumerate() {
                    est[i] = (w[pos] - feedback[pos]) / self.chol.diag(pos);
                }
                est
            }
        };
        Ok(Equalized {
            estimates,
            sinr: self.sinr.clone(),
        })
    }
}

/// Per-bin MMSE scaling `conj(h)·y / (|h|² + σ²)`.
pub fn tf_single_tap(y_tf: &TimeFrequencyGrid, h_diag: &TimeFrequencyGrid, noise_variance: f64) -> Result<TimeFrequencyGrid> {
    check_noise(noise_variance, true)?;
    if y_tf.shape() != h_diag.shape() {
        return Err(Error::DimensionMismatch {
            expected: y_tf.shape(),
            actual: h_diag.shape(),
        });
    }
    let data = y_tf
        .as_slice()
        .iter()
        .zip(h_diag.as_slice())
        .map(|(y, h)| single_tap(*y, *h, noise_variance))
        .collect();
    TimeFrequencyGrid::from_vec(y_tf.rows(), y_tf.cols(), data)
}

#[inline]
fn single_tap(y: C64, h: C64, noise_variance: f64) -> C64 {
    let den = h.norm_sqr() + noise_variance;
    if den == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        h.conj() * y / den
    }
}

/// Per-bin receiver over the stacked TF observation of a MIMO link.
/// Inter-carrier leakage is ignored. Single tap per stream when `sic` is
/// false; otherwise a genie SIC across transmit layers in natural order.
pub fn tf_per_bin(
    ch: &MimoTfChannel,
    y_tf: &[C64],
    true_x: &[C64],
    noise_variance: f64,
    sic: bool,
) -> Result<Equalized> {
    check_noise(noise_variance, false)?;
    let p = ch.params();
    let (m, n, b) = (p.m(), p.n(), p.grid_len());
    let (tx, rx) = (ch.tx_streams(), ch.rx_streams());
    if y_tf.len() != rx * b || true_x.len() != tx * b {
        return Err(Error::DimensionMismatch {
            expected: (rx * b, tx * b),
            actual: (y_tf.len(), true_x.len()),
        });
    }
    let mut estimates = vec![C64::new(0.0, 0.0); tx * b];
    let mut sinr = vec![0.0; tx * b];
    for mi in 0..m {
        for ni in 0..n {
            let idx = mi * n + ni;
            let hb = ch.bin_matrix(mi, ni);
            let yb: Vec<C64> = (0..rx).map(|r| y_tf[r * b + idx]).collect();
            if sic {
                let h = CMatrix::from_vec(rx, tx, hb)?;
                let xb: Vec<C64> = (0..tx).map(|t| true_x[t * b + idx]).collect();
                let eq = genie_dfe(&yb, &h, noise_variance, &xb, &DetectionOrder::Natural)?;
                for t in 0..tx {
                    estimates[t * b + idx] = eq.estimates[t];
                    sinr[t * b + idx] = eq.sinr[t];
                }
            } else {
                for t in 0..tx {
                    // maximum-ratio combining over receive antennas
                    let mut num = C64::new(0.0, 0.0);
                    let mut gain = 0.0;
                    for r in 0..rx {
                        let h = hb[r * tx + t];
                        num += h.conj() * yb[r];
                        gain += h.norm_sqr();
                    }
                    estimates[t * b + idx] = num / (gain + noise_variance);
                    sinr[t * b + idx] = gain / noise_variance;
                }
            }
        }
    }
    Ok(Equalized { estimates, sinr })
}

/// Post-equalization SINR of every symbol for `kind`.
///
/// For the delay-Doppler kinds `h` is the full effective matrix. For the
/// per-bin kinds `h` must be square and its diagonal is used.
pub fn per_symbol_sinr(h: &CMatrix, noise_variance: f64, kind: EqualizerKind) -> Result<Vec<f64>> {
    check_noise(noise_variance, false)?;
    match kind {
        EqualizerKind::DdLmmse => {
            let ch = Cholesky::factor(&regularized(&h.gram(), noise_variance))?;
            Ok(sinr_from_inverse_diag(&ch.inverse_diagonal(), noise_variance))
        }
        EqualizerKind::DdGenieDfe => {
            let n = h.cols();
            let zeros = vec![C64::new(0.0, 0.0); n];
            Ok(genie_dfe_gram(&h.gram(), &zeros, noise_variance, &zeros, &DetectionOrder::Natural)?.sinr)
        }
        EqualizerKind::TfSingleTap | EqualizerKind::TfGenieSic => {
            if h.rows() != h.cols() {
                return Err(Error::invalid(String::from("per-bin SINR needs a square matrix")));
            }
            Ok((0..h.rows()).map(|i| h.get(i, i).norm_sqr() / noise_variance).collect())
        }
    }
}
