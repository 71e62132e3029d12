//! Monte Carlo link simulation for OTFS and the OFDM baseline.
//!
//! One trial draws a channel per antenna pair, and for every MCS and
//! codeblock size: encodes random payloads, interleaves and maps them,
//! places the symbols (delay-Doppler grid for OTFS, time-frequency grid for
//! OFDM), modulates, passes the waveform through the channel, adds noise at
//! every SNR, demodulates, equalizes with genie channel knowledge, demaps
//! and decodes.
//!
//! Seeds depend only on the master seed, the trial index and what is being
//! drawn, never on the scheme, so OTFS and OFDM see identical channels,
//! payloads and noise waveforms.
//!
//! Codeblocks are laid out contiguously in storage order. In a
//! time-frequency grid that is a band of subcarriers spanning every
//! symbol; in a delay-Doppler grid it is a band of delay bins spanning every
//! Doppler bin. Bits left over after the last whole codeblock are filled
//! with random padding.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{self, add_awgn_in_place, realize_profile, ChannelProfile, ChannelRealization};
use crate::equalization::{
    tf_per_bin, DetectionOrder, EqualizerKind, Equalized, MimoTfChannel, PreparedReceiver, Scheme,
};
use crate::fec::{interleaver, Code};
use crate::multicarrier::{Ofdm, SampleStream};
use crate::qam::Modulation;
use crate::stats::{derive_seed, wilson_interval, Z95};
use crate::transforms::SymplecticTransform;
use crate::{Error, FrameParams, Result, C64};

const TAG_CHANNEL: u64 = 1;
const TAG_DATA: u64 = 2;
const TAG_NOISE: u64 = 3;

/// Modulation and coding pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mcs {
    pub modulation: Modulation,
    pub code: Code,
}

impl Mcs {
    pub fn new(modulation: Modulation, code: Code) -> Self {
        Mcs { modulation, code }
    }

    /// Nominal information bits per channel use.
    pub fn efficiency(&self) -> f64 {
        self.code.rate() * self.modulation.bits_per_symbol() as f64
    }

    /// `QPSK r1/2, QPSK r1/3, 16QAM r1/2, 16QAM r1/3, 64QAM r1/2`.
    pub fn default_set() -> Vec<Mcs> {
        vec![
            Mcs::new(Modulation::Qpsk, Code::ConvR12),
            Mcs::new(Modulation::Qpsk, Code::ConvR13),
            Mcs::new(Modulation::Qam16, Code::ConvR12),
            Mcs::new(Modulation::Qam16, Code::ConvR13),
            Mcs::new(Modulation::Qam64, Code::ConvR12),
        ]
    }

    /// Parses labels such as `16QAM/conv-r12`.
    pub fn parse(s: &str) -> Result<Mcs> {
        let (m, c) = s
            .split_once('/')
            .ok_or_else(|| Error::invalid(format!("MCS `{s}` must look like `16QAM/conv-r12`")))?;
        Ok(Mcs::new(m.trim().parse()?, c.trim().parse()?))
    }
}

impl fmt::Display for Mcs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.modulation, self.code)
    }
}

/// A scheme together with its receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeSetup {
    pub scheme: Scheme,
    pub equalizer: EqualizerKind,
}

impl SchemeSetup {
    pub fn new(scheme: Scheme, equalizer: EqualizerKind) -> Self {
        SchemeSetup { scheme, equalizer }
    }

    /// The scheme with its default receiver.
    pub fn default_for(scheme: Scheme) -> Self {
        SchemeSetup::new(scheme, EqualizerKind::default_for(scheme))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub frame: FrameParams,
    pub schemes: Vec<SchemeSetup>,
    pub mcs: Vec<Mcs>,
    /// Information bits per codeblock; `None` puts one codeblock per layer
    /// filling the frame.
    pub codeblock_bits: Option<usize>,
    pub channel: ChannelProfile,
    /// Round tap delays and Doppler shifts to the grid resolution.
    pub snap_to_grid: bool,
    pub snr_db: Vec<f64>,
    pub tx_streams: usize,
    pub rx_streams: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub detection_order: DetectionOrder,
}

impl LinkConfig {
    /// SISO OTFS versus OFDM with default receivers, one MCS.
    pub fn new(frame: FrameParams, channel: ChannelProfile, mcs: Mcs, snr_db: Vec<f64>, trials: usize) -> Self {
        LinkConfig {
            frame,
            schemes: vec![SchemeSetup::default_for(Scheme::Otfs), SchemeSetup::default_for(Scheme::Ofdm)],
            mcs: vec![mcs],
            codeblock_bits: None,
            channel,
            snap_to_grid: false,
            snr_db,
            tx_streams: 1,
            rx_streams: 1,
            trials,
            master_seed: 0,
            detection_order: DetectionOrder::Natural,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("link.trials", "must be at least 1"));
        }
        if self.snr_db.is_empty() {
            return Err(Error::config("link.snr_db", "must list at least one SNR"));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("link.snr_db", "values must be finite"));
        }
        if self.mcs.is_empty() {
            return Err(Error::config("link.mcs", "must list at least one MCS"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("link.schemes", "must list at least one scheme"));
        }
        for s in &self.schemes {
            if s.equalizer.scheme() != s.scheme {
                return Err(Error::config(
                    "link.equalizer",
                    &format!("{} cannot receive {}", s.equalizer, s.scheme),
                ));
            }
        }
        if self.tx_streams == 0 || self.rx_streams == 0 {
            return Err(Error::config("link.mimo", "stream counts must be at least 1"));
        }
        if self.tx_streams > 1 && self.schemes.iter().any(|s| s.equalizer == EqualizerKind::TfSingleTap) {
            return Err(Error::config(
                "link.equalizer",
                "tf-single-tap cannot separate several transmit streams; use tf-genie-sic",
            ));
        }
        self.channel
            .validate()
            .map_err(|e| Error::config("channel", &format!("{e}")))?;
        for mcs in &self.mcs {
            Layout::new(&self.frame, *mcs, self.codeblock_bits)?;
        }
        Ok(())
    }
}

/// Codeblock arrangement of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub info_bits: usize,
    pub coded_bits: usize,
    pub blocks: usize,
    pub capacity_bits: usize,
}

impl Layout {
    pub fn new(frame: &FrameParams, mcs: Mcs, codeblock_bits: Option<usize>) -> Result<Layout> {
        let capacity_bits = frame.grid_len() * mcs.modulation.bits_per_symbol();
        let info_bits = match codeblock_bits {
            Some(b) => b,
            None => mcs.code.max_info_bits(capacity_bits),
        };
        if info_bits == 0 {
            return Err(Error::config("link.codeblock_bits", "must be at least 1"));
        }
        let coded_bits = mcs.code.coded_len(info_bits);
        if coded_bits > capacity_bits {
            return Err(Error::config(
                "link.codeblock_bits",
                &format!(
                    "{info_bits} bits code to {coded_bits} bits with {mcs}, more than the {capacity_bits}-bit frame"
                ),
            ));
        }
        Ok(Layout {
            info_bits,
            coded_bits,
            blocks: capacity_bits / coded_bits,
            capacity_bits,
        })
    }
}

/// Error counts for one (scheme, SNR, MCS, codeblock size) cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub bit_errors: u64,
    pub bits: u64,
    pub block_errors: u64,
    pub blocks: u64,
}

impl Counts {
    pub fn add(&mut self, o: &Counts) {
        self.bit_errors += o.bit_errors;
        self.bits += o.bits;
        self.block_errors += o.block_errors;
        self.blocks += o.blocks;
    }
}

/// Counts of one or more trials over every cell, in a fixed order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tally {
    pub trials: u64,
    cells: Vec<Counts>,
}

impl Tally {
    /// Adds another tally. Integer counts make this order-independent.
    pub fn merge(&mut self, other: &Tally) {
        self.trials += other.trials;
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.add(b);
        }
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRow {
    pub scheme: Scheme,
    pub equalizer: EqualizerKind,
    pub snr_db: f64,
    pub mcs: Mcs,
    pub codeblock_bits: usize,
    pub trials: u64,
    pub counts: Counts,
    pub seed: u64,
}

impl SimRow {
    pub fn ber(&self) -> f64 {
        ratio(self.counts.bit_errors, self.counts.bits)
    }

    pub fn bler(&self) -> f64 {
        ratio(self.counts.block_errors, self.counts.blocks)
    }

    /// Information bits per channel use per stream, `(1 − BLER)·r·log2(Q)`.
    pub fn throughput(&self) -> f64 {
        (1.0 - self.bler()) * self.mcs.efficiency()
    }

    /// 95% Wilson interval of the BLER.
    pub fn bler_ci(&self) -> (f64, f64) {
        wilson_interval(self.counts.block_errors, self.counts.blocks, Z95)
    }

    /// 95% Wilson interval of the BER.
    pub fn ber_ci(&self) -> (f64, f64) {
        wilson_interval(self.counts.bit_errors, self.counts.bits, Z95)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub rows: Vec<SimRow>,
}

impl SimResult {
    pub fn find(&self, scheme: Scheme, snr_db: f64, mcs: Mcs, codeblock_bits: Option<usize>) -> Option<&SimRow> {
        self.rows.iter().find(|r| {
            r.scheme == scheme
                && r.snr_db == snr_db
                && r.mcs == mcs
                && codeblock_bits.map_or(true, |b| r.codeblock_bits == b)
        })
    }

    /// Best throughput over the MCS set at every SNR, as `(snr, throughput)`.
    pub fn throughput_envelope(&self, scheme: Scheme) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for r in self.rows.iter().filter(|r| r.scheme == scheme) {
            match out.iter_mut().find(|(s, _)| *s == r.snr_db) {
                Some(e) => e.1 = e.1.max(r.throughput()),
                None => out.push((r.snr_db, r.throughput())),
            }
        }
        out
    }
}

/// A validated configuration with everything that is fixed across trials.
#[derive(Debug, Clone)]
pub struct LinkSimulator {
    cfg: LinkConfig,
    sizes: Vec<Option<usize>>,
    // [mcs][size]
    layouts: Vec<Vec<Layout>>,
    // [coded length] -> permutation, shared by all cells with that length
    interleavers: Vec<(usize, Vec<usize>)>,
}

impl LinkSimulator {
    /// Checks `cfg` for every requested codeblock size before any trial.
    pub fn new(cfg: &LinkConfig, sizes: &[Option<usize>]) -> Result<Self> {
        cfg.validate()?;
        if sizes.is_empty() {
            return Err(Error::config("codeblock_sizes", "must list at least one size"));
        }
        let mut layouts = Vec::with_capacity(cfg.mcs.len());
        let mut interleavers: Vec<(usize, Vec<usize>)> = Vec::new();
        for mcs in &cfg.mcs {
            let mut row = Vec::with_capacity(sizes.len());
            for size in sizes {
                let lay = Layout::new(&cfg.frame, *mcs, *size)?;
                if !interleavers.iter().any(|(len, _)| *len == lay.coded_bits) {
                    interleavers.push((lay.coded_bits, interleaver(lay.coded_bits)));
                }
                row.push(lay);
            }
            layouts.push(row);
        }
        Ok(LinkSimulator {
            cfg: cfg.clone(),
            sizes: sizes.to_vec(),
            layouts,
            interleavers,
        })
    }

    pub fn config(&self) -> &LinkConfig {
        &self.cfg
    }

    pub fn trials(&self) -> usize {
        self.cfg.trials
    }

    fn cell(&self, scheme: usize, snr: usize, mcs: usize, size: usize) -> usize {
        ((scheme * self.cfg.snr_db.len() + snr) * self.cfg.mcs.len() + mcs) * self.sizes.len() + size
    }

    fn cell_count(&self) -> usize {
        self.cfg.schemes.len() * self.cfg.snr_db.len() * self.cfg.mcs.len() * self.sizes.len()
    }

    pub fn empty_tally(&self) -> Tally {
        Tally {
            trials: 0,
            cells: vec![Counts::default(); self.cell_count()],
        }
    }

    fn perm(&self, len: usize) -> &[usize] {
        &self.interleavers.iter().find(|(l, _)| *l == len).expect("interleaver prepared").1
    }

    /// Channel realizations of trial `trial`, indexed `r·T + t`.
    pub fn channels(&self, trial: usize) -> Result<Vec<ChannelRealization>> {
        let cfg = &self.cfg;
        (0..cfg.tx_streams * cfg.rx_streams)
            .map(|pair| {
                let seed = derive_seed(cfg.master_seed, &[TAG_CHANNEL, trial as u64, pair as u64]);
                let ch = realize_profile(&cfg.channel, seed)?;
                Ok(if cfg.snap_to_grid { ch.snapped_to_grid(&cfg.frame) } else { ch })
            })
            .collect()
    }

    /// Runs one trial.
    pub fn trial(&self, trial: usize) -> Result<Tally> {
        let cfg = &self.cfg;
        let p = &cfg.frame;
        let b = p.grid_len();
        let (tx, rx) = (cfg.tx_streams, cfg.rx_streams);
        let channels = self.channels(trial)?;
        let tfch = MimoTfChannel::build(&channels, tx, rx, p)?;
        let gram_dd = if cfg.schemes.iter().any(|s| s.scheme == Scheme::Otfs) {
            Some(tfch.gram_dd())
        } else {
            None
        };
        let ofdm = Ofdm::new(p);
        let sfft = SymplecticTransform::new(p);

        // payloads, independent of scheme
        let mut frames = Vec::with_capacity(cfg.mcs.len() * self.sizes.len());
        for (mi, mcs) in cfg.mcs.iter().enumerate() {
            for lay in &self.layouts[mi] {
                frames.push(self.payload(trial, *mcs, lay)?);
            }
        }

        let mut tally = self.empty_tally();
        tally.trials = 1;
        for (sc, setup) in cfg.schemes.iter().enumerate() {
            // noiseless received waveforms per (mcs, size)
            let mut clean = Vec::with_capacity(frames.len());
            let mut placed = Vec::with_capacity(frames.len());
            for f in &frames {
                // symbols as placed on the transmitted TF grid
                let mut x_tf = f.symbols.clone();
                if setup.scheme == Scheme::Otfs {
                    for chunk in x_tf.chunks_exact_mut(b) {
                        sfft.isfft_in_place(chunk);
                    }
                }
                let waves: Vec<Vec<C64>> = x_tf
                    .chunks_exact(b)
                    .map(|g| {
                        let mut w = vec![C64::new(0.0, 0.0); p.frame_samples()];
                        ofdm.modulate_into(g, &mut w);
                        w
                    })
                    .collect();
                let mut rx_waves = Vec::with_capacity(rx);
                for r in 0..rx {
                    let mut acc = vec![C64::new(0.0, 0.0); p.frame_samples()];
                    for (t, w) in waves.iter().enumerate() {
                        let out = channel::apply(&SampleStream::new(w.clone(), p.sample_rate()), &channels[r * tx + t])?;
                        for (a, v) in acc.iter_mut().zip(&out.samples) {
                            *a += v;
                        }
                    }
                    rx_waves.push(acc);
                }
                clean.push(rx_waves);
                placed.push(x_tf);
            }

            for (snr_i, &snr) in cfg.snr_db.iter().enumerate() {
                let nv = channel::noise_variance(snr, 1.0);
                let receiver = match setup.equalizer {
                    EqualizerKind::DdLmmse => Some(PreparedReceiver::lmmse(gram_dd.as_ref().unwrap(), nv)?),
                    EqualizerKind::DdGenieDfe => Some(PreparedReceiver::genie_dfe(
                        gram_dd.as_ref().unwrap(),
                        nv,
                        &cfg.detection_order,
                    )?),
                    _ => None,
                };
                let mut fi = 0;
                for (mi, mcs) in cfg.mcs.iter().enumerate() {
                    for (si, lay) in self.layouts[mi].iter().enumerate() {
                        let frame = &frames[fi];
                        let mut y_tf = vec![C64::new(0.0, 0.0); rx * b];
                        for r in 0..rx {
                            let mut noisy = clean[fi][r].clone();
                            let seed = derive_seed(
                                cfg.master_seed,
                                &[TAG_NOISE, trial as u64, snr_i as u64, mi as u64, lay.info_bits as u64, r as u64],
                            );
                            add_awgn_in_place(&mut noisy, nv, seed);
                            ofdm.demodulate_into(&noisy, &mut y_tf[r * b..(r + 1) * b]);
                        }
                        let eq = match &receiver {
                            Some(rcv) => rcv.equalize(&tfch.matched_filter_dd(&y_tf), Some(&frame.symbols))?,
                            None => tf_per_bin(
                                &tfch,
                                &y_tf,
                                &placed[fi],
                                nv,
                                setup.equalizer == EqualizerKind::TfGenieSic,
                            )?,
                        };
                        let counts = self.count_errors(*mcs, lay, frame, &eq)?;
                        let c = self.cell(sc, snr_i, mi, si);
                        tally.cells[c].add(&counts);
                        fi += 1;
                    }
                }
            }
        }
        Ok(tally)
    }

    fn payload(&self, trial: usize, mcs: Mcs, lay: &Layout) -> Result<Payload> {
        let cfg = &self.cfg;
        let perm = self.perm(lay.coded_bits);
        let mi = cfg.mcs.iter().position(|m| *m == mcs).unwrap_or(0);
        let mut info = Vec::with_capacity(cfg.tx_streams);
        let mut symbols = Vec::with_capacity(cfg.tx_streams * cfg.frame.grid_len());
        for t in 0..cfg.tx_streams {
            let seed = derive_seed(cfg.master_seed, &[TAG_DATA, trial as u64, mi as u64, lay.info_bits as u64, t as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut coded = vec![0u8; lay.capacity_bits];
            let mut layer_info = Vec::with_capacity(lay.blocks);
            for blk in 0..lay.blocks {
                let bits: Vec<u8> = (0..lay.info_bits).map(|_| rng.random_range(0..2u8)).collect();
                let cw = mcs.code.encode(&bits)?;
                let seg = &mut coded[blk * lay.coded_bits..(blk + 1) * lay.coded_bits];
                for (i, &c) in cw.iter().enumerate() {
                    seg[perm[i]] = c;
                }
                layer_info.push(bits);
            }
            for v in coded[lay.blocks * lay.coded_bits..].iter_mut() {
                *v = rng.random_range(0..2u8);
            }
            symbols.extend(mcs.modulation.map(&coded)?);
            info.push(layer_info);
        }
        Ok(Payload { info, symbols })
    }

    fn count_errors(&self, mcs: Mcs, lay: &Layout, frame: &Payload, eq: &Equalized) -> Result<Counts> {
        let b = self.cfg.frame.grid_len();
        let perm = self.perm(lay.coded_bits);
        let (est, var) = eq.unbiased();
        let mut counts = Counts::default();
        for (t, layer_info) in frame.info.iter().enumerate() {
            let llr = mcs.modulation.llr(&est[t * b..(t + 1) * b], &var[t * b..(t + 1) * b])?;
            let mut cw = vec![0.0; lay.coded_bits];
            for (blk, bits) in layer_info.iter().enumerate() {
                let seg = &llr[blk * lay.coded_bits..(blk + 1) * lay.coded_bits];
                for (i, c) in cw.iter_mut().enumerate() {
                    *c = seg[perm[i]];
                }
                let decoded = mcs.code.decode(&cw)?;
                let errors = decoded.iter().zip(bits).filter(|(a, b)| a != b).count() as u64;
                counts.bit_errors += errors;
                counts.bits += bits.len() as u64;
                counts.block_errors += (errors > 0) as u64;
                counts.blocks += 1;
            }
        }
        Ok(counts)
    }

    /// Turns accumulated counts into result rows.
    pub fn result(&self, tally: &Tally) -> SimResult {
        let cfg = &self.cfg;
        let mut rows = Vec::with_capacity(self.cell_count());
        for (sc, setup) in cfg.schemes.iter().enumerate() {
            for (snr_i, &snr) in cfg.snr_db.iter().enumerate() {
                for (mi, mcs) in cfg.mcs.iter().enumerate() {
                    for (si, lay) in self.layouts[mi].iter().enumerate() {
                        rows.push(SimRow {
                            scheme: setup.scheme,
                            equalizer: setup.equalizer,
                            snr_db: snr,
                            mcs: *mcs,
                            codeblock_bits: lay.info_bits,
                            trials: tally.trials,
                            counts: tally.cells[self.cell(sc, snr_i, mi, si)],
                            seed: cfg.master_seed,
                        });
                    }
                }
            }
        }
        SimResult { rows }
    }

    /// Runs every trial in index order.
    pub fn run(&self) -> Result<SimResult> {
        let mut total = self.empty_tally();
        for t in 0..self.cfg.trials {
            total.merge(&self.trial(t)?);
        }
        Ok(self.result(&total))
    }
}

#[derive(Debug, Clone)]
struct Payload {
    // [layer][block] information bits
    info: Vec<Vec<Vec<u8>>>,
    // stacked per-layer grids in storage order
    symbols: Vec<C64>,
}

/// Runs the configured link.
pub fn run_link(cfg: &LinkConfig) -> Result<SimResult> {
    LinkSimulator::new(cfg, &[cfg.codeblock_bits])?.run()
}

/// Runs the link once per codeblock size. Every MCS must fit every size.
pub fn run_codeblock_study(cfg: &LinkConfig, codeblock_sizes: &[usize]) -> Result<SimResult> {
    let sizes: Vec<Option<usize>> = codeblock_sizes.iter().map(|&s| Some(s)).collect();
    LinkSimulator::new(cfg, &sizes)?.run()
}

/// Label used in diagnostics.
pub fn describe(cfg: &LinkConfig) -> String {
    format!(
        "{}x{} grid, {} profile, {} MCS, {} SNR points, {} trials",
        cfg.frame.m(),
        cfg.frame.n(),
        cfg.channel.name,
        cfg.mcs.len(),
        cfg.snr_db.len(),
        cfg.trials
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(profile: ChannelProfile, snr: Vec<f64>, trials: usize) -> LinkConfig {
        let p = FrameParams::new(16, 8, 15e3, 4).unwrap();
        LinkConfig::new(p, profile, Mcs::new(Modulation::Qpsk, Code::ConvR12), snr, trials)
    }

    #[test]
    fn layout_counts_blocks() {
        let p = FrameParams::new(32, 16, 15e3, 4).unwrap();
        let m = Mcs::new(Modulation::Qam16, Code::ConvR12);
        let l = Layout::new(&p, m, Some(250)).unwrap();
        assert_eq!((l.coded_bits, l.blocks, l.capacity_bits), (512, 4, 2048));
        let full = Layout::new(&p, m, None).unwrap();
        assert_eq!((full.info_bits, full.blocks), (1018, 1));
        assert!(Layout::new(&p, m, Some(1019)).is_err());
    }

    #[test]
    fn noiseless_identity_is_error_free() {
        let cfg = small(ChannelProfile::single_tap(0.0), vec![300.0], 2);
        let res = run_link(&cfg).unwrap();
        for row in &res.rows {
            assert_eq!(row.counts.bit_errors, 0, "{:?}", row.scheme);
            assert!(row.counts.bits > 0);
        }
    }

    #[test]
    fn validation_names_keys() {
        let mut cfg = small(ChannelProfile::single_tap(0.0), vec![], 1);
        assert!(matches!(run_link(&cfg), Err(Error::InvalidConfig { key, .. }) if key == "link.snr_db"));
        cfg.snr_db = vec![0.0];
        cfg.trials = 0;
        assert!(matches!(run_link(&cfg), Err(Error::InvalidConfig { key, .. }) if key == "link.trials"));
        cfg.trials = 1;
        cfg.schemes = vec![SchemeSetup::new(Scheme::Otfs, EqualizerKind::TfSingleTap)];
        assert!(matches!(run_link(&cfg), Err(Error::InvalidConfig { key, .. }) if key == "link.equalizer"));
        cfg.schemes = vec![SchemeSetup::default_for(Scheme::Otfs)];
        cfg.codeblock_bits = Some(10_000);
        assert!(matches!(run_link(&cfg), Err(Error::InvalidConfig { key, .. }) if key == "link.codeblock_bits"));
    }

    #[test]
    fn deterministic_and_order_free() {
        let mut cfg = small(ChannelProfile::etu(300.0), vec![2.0, 6.0], 3);
        cfg.master_seed = 11;
        let sim = LinkSimulator::new(&cfg, &[None]).unwrap();
        let a = sim.run().unwrap();
        let mut rev = sim.empty_tally();
        for t in (0..3).rev() {
            rev.merge(&sim.trial(t).unwrap());
        }
        assert_eq!(a, sim.result(&rev));
        assert_eq!(a, run_link(&cfg).unwrap());
    }

    #[test]
    fn whole_frame_study_equals_run_link() {
        let mut cfg = small(ChannelProfile::etu(300.0), vec![4.0], 3);
        let lay = Layout::new(&cfg.frame, cfg.mcs[0], None).unwrap();
        let a = run_link(&cfg).unwrap();
        let b = run_codeblock_study(&cfg, &[lay.info_bits]).unwrap();
        assert_eq!(a, b);
        cfg.codeblock_bits = Some(lay.info_bits);
        assert_eq!(run_link(&cfg).unwrap(), b);
    }

    #[test]
    fn envelope_takes_best_mcs() {
        let mut cfg = small(ChannelProfile::single_tap(0.0), vec![300.0], 1);
        cfg.mcs = vec![Mcs::new(Modulation::Qpsk, Code::ConvR13), Mcs::new(Modulation::Qam16, Code::ConvR12)];
        let res = run_link(&cfg).unwrap();
        let env = res.throughput_envelope(Scheme::Otfs);
        assert_eq!(env.len(), 1);
        assert!((env[0].1 - 2.0).abs() < 1e-12);
        assert_eq!(Mcs::parse("16QAM/conv-r12").unwrap(), cfg.mcs[1]);
        assert!(Mcs::parse("16QAM").is_err());
    }
}
