//! Delay-Doppler impulse pilots: placement, per-port channel estimation and
//! antenna-port packing.
//!
//! A port's pilot sits at Doppler index `k`, delay index `l`. Its guard box
//! covers delays `l..=l+Lτ` and Doppler indices `k-Lν..=k+Lν`, the region a
//! channel with at most `Lτ` bins of delay and `Lν` bins of Doppler can
//! spread it into. Guard boxes may not wrap around the grid edges.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // unused when a dependency links std
use num_traits::Float;

use crate::channel::{ChannelRealization, PathTap};
use crate::{DelayDopplerGrid, Error, FrameParams, Result, C64};

/// Rectangular block of the delay-Doppler grid reserved for pilots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PilotRegion {
    pub delay_start: usize,
    pub delay_len: usize,
    pub doppler_start: usize,
    pub doppler_len: usize,
}

impl PilotRegion {
    pub fn contains(&self, k: usize, l: usize) -> bool {
        (self.delay_start..self.delay_start + self.delay_len).contains(&l)
            && (self.doppler_start..self.doppler_start + self.doppler_len).contains(&k)
    }

    pub fn area(&self) -> usize {
        self.delay_len * self.doppler_len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotPlan {
    m: usize,
    n: usize,
    /// `(k, l)` per port.
    pilot_positions: Vec<(usize, usize)>,
    guard_delay_bins: usize,
    guard_doppler_bins: usize,
    pilot_amplitude: f64,
    region: PilotRegion,
}

impl PilotPlan {
    /// Validates placement on an `m × n` (delay × Doppler) grid.
    pub fn new(
        p: &FrameParams,
        pilot_positions: Vec<(usize, usize)>,
        guard_delay_bins: usize,
        guard_doppler_bins: usize,
        pilot_amplitude: f64,
        region: PilotRegion,
    ) -> Result<Self> {
        let plan = PilotPlan {
            m: p.m(),
            n: p.n(),
            pilot_positions,
            guard_delay_bins,
            guard_doppler_bins,
            pilot_amplitude,
            region,
        };
        plan.validate()?;
        Ok(plan)
    }

    fn validate(&self) -> Result<()> {
        if !(self.pilot_amplitude.is_finite() && self.pilot_amplitude > 0.0) {
            return Err(Error::invalid("pilot amplitude must be positive"));
        }
        let r = &self.region;
        if r.delay_start + r.delay_len > self.m || r.doppler_start + r.doppler_len > self.n {
            return Err(Error::invalid("pilot region extends past the grid"));
        }
        for port in 0..self.pilot_positions.len() {
            let (lo_k, hi_k, lo_l, hi_l) = self.box_bounds(port)?;
            if !(r.contains(lo_k, lo_l) && r.contains(hi_k, hi_l)) {
                return Err(Error::invalid(format!("guard box of port {port} leaves the pilot region")));
            }
        }
        for a in 0..self.pilot_positions.len() {
            let ba = self.box_bounds(a)?;
            for b in 0..a {
                let bb = self.box_bounds(b)?;
                let k_sep = ba.1 < bb.0 || bb.1 < ba.0;
                let l_sep = ba.3 < bb.2 || bb.3 < ba.2;
                if !(k_sep || l_sep) {
                    return Err(Error::GuardOverlap { first: b, second: a });
                }
            }
        }
        Ok(())
    }

    /// `(k_lo, k_hi, l_lo, l_hi)`, inclusive. Wrapping boxes are an error.
    fn box_bounds(&self, port: usize) -> Result<(usize, usize, usize, usize)> {
        let (k, l) = self.pilot_positions[port];
        let (lt, lv) = (self.guard_delay_bins, self.guard_doppler_bins);
        if k < lv || k + lv >= self.n || l + lt >= self.m {
            return Err(Error::invalid(format!(
                "guard box of port {port} at (k={k}, l={l}) wraps around the grid edge"
            )));
        }
        Ok((k - lv, k + lv, l, l + lt))
    }

    pub fn pilot_positions(&self) -> &[(usize, usize)] {
        &self.pilot_positions
    }

    pub fn port_count(&self) -> usize {
        self.pilot_positions.len()
    }

    pub fn guard_delay_bins(&self) -> usize {
        self.guard_delay_bins
    }

    pub fn guard_doppler_bins(&self) -> usize {
        self.guard_doppler_bins
    }

    pub fn pilot_amplitude(&self) -> f64 {
        self.pilot_amplitude
    }

    pub fn region(&self) -> &PilotRegion {
        &self.region
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Result<Self> {
        self.pilot_amplitude = amplitude;
        self.validate()?;
        Ok(self)
    }

    /// Keeps only the listed ports.
    pub fn with_ports(&self, ports: &[usize]) -> Result<Self> {
        let mut out = self.clone();
        out.pilot_positions = ports
            .iter()
            .map(|&i| {
                self.pilot_positions
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::invalid(format!("port {i} out of range")))
            })
            .collect::<Result<_>>()?;
        Ok(out)
    }

    /// Grid bins of a port's guard box as `(k, l)` pairs.
    pub fn guard_box(&self, port: usize) -> Result<Vec<(usize, usize)>> {
        if port >= self.pilot_positions.len() {
            return Err(Error::invalid(format!(
                "port {port} out of range ({} ports)",
                self.pilot_positions.len()
            )));
        }
        let (k0, k1, l0, l1) = self.box_bounds(port)?;
        let mut out = Vec::with_capacity((k1 - k0 + 1) * (l1 - l0 + 1));
        for l in l0..=l1 {
            for k in k0..=k1 {
                out.push((k, l));
            }
        }
        Ok(out)
    }

    /// Bins that may carry data, indexed `l·N + k`.
    ///
    /// Excludes the region widened by `Lτ` delay bins before it and `Lν`
    /// Doppler bins on both sides (circularly), so data spread by the
    /// channel cannot reach a guard box.
    pub fn data_mask(&self) -> Vec<bool> {
        let (m, n) = (self.m, self.n);
        let mut mask = vec![true; m * n];
        let r = &self.region;
        if r.area() == 0 {
            return mask;
        }
        let (lt, lv) = (self.guard_delay_bins, self.guard_doppler_bins);
        let dl = (r.delay_len + lt).min(m);
        let dk = (r.doppler_len + 2 * lv).min(n);
        for i in 0..dl {
            let l = (r.delay_start + m * (lt / m + 1) - lt + i) % m;
            for j in 0..dk {
                let k = (r.doppler_start + n * (lv / n + 1) - lv + j) % n;
                mask[l * n + k] = false;
            }
        }
        mask
    }
}

/// Writes the pilots of `plan` into a copy of `data`.
pub fn place_pilots(data: &DelayDopplerGrid, plan: &PilotPlan) -> Result<DelayDopplerGrid> {
    if data.shape() != (plan.m, plan.n) {
        return Err(Error::DimensionMismatch {
            expected: (plan.m, plan.n),
            actual: data.shape(),
        });
    }
    let r = plan.region;
    for l in r.delay_start..r.delay_start + r.delay_len {
        for k in r.doppler_start..r.doppler_start + r.doppler_len {
            if data.get(l, k) != C64::new(0.0, 0.0) {
                return Err(Error::invalid(format!(
                    "data symbol at (k={k}, l={l}) lies inside the pilot region"
                )));
            }
        }
    }
    let mut out = data.clone();
    for &(k, l) in &plan.pilot_positions {
        out.set(l, k, C64::new(plan.pilot_amplitude, 0.0));
    }
    Ok(out)
}

/// One detected path, relative to the pilot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatedTap {
    pub delay_bins: usize,
    pub doppler_bins: isize,
    pub gain: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DDChannelEstimate {
    pub taps: Vec<EstimatedTap>,
    pub threshold: f64,
}

impl DDChannelEstimate {
    /// Strongest tap, if any.
    pub fn dominant(&self) -> Option<&EstimatedTap> {
        self.taps
            .iter()
            .max_by(|a, b| a.gain.norm().partial_cmp(&b.gain.norm()).unwrap())
    }

    pub fn tap_at(&self, doppler_bins: isize, delay_bins: usize) -> Option<&EstimatedTap> {
        self.taps
            .iter()
            .find(|t| t.doppler_bins == doppler_bins && t.delay_bins == delay_bins)
    }

    /// On-grid channel realization with one path per detected tap.
    pub fn to_realization(&self, p: &FrameParams) -> Result<ChannelRealization> {
        let taps = self
            .taps
            .iter()
            .map(|t| {
                PathTap::new(
                    t.gain,
                    t.delay_bins as f64 * p.delay_resolution(),
                    t.doppler_bins as f64 * p.doppler_resolution(),
                )
            })
            .collect();
        ChannelRealization::new(taps, "estimate", 0)
    }

    /// Divides every gain by its [`calibration`] constant for a pilot at
    /// delay bin `pilot_delay_bin`.
    pub fn calibrated(&self, p: &FrameParams, pilot_delay_bin: usize) -> Self {
        let mut out = self.clone();
        for t in &mut out.taps {
            t.gain /= calibration(p, t.doppler_bins, pilot_delay_bin);
        }
        out
    }
}

/// Unit-modulus factor an on-grid tap with `doppler_bins` of Doppler picks
/// up on its way to the estimate: the Doppler rotation accumulated up to
/// the pilot's sample in the first symbol body.
pub fn calibration(p: &FrameParams, doppler_bins: isize, pilot_delay_bin: usize) -> C64 {
    let omega = 2.0 * core::f64::consts::PI * doppler_bins as f64 * p.doppler_resolution() / p.sample_rate();
    C64::from_polar(1.0, omega * (p.cp_len() + pilot_delay_bin) as f64)
}

/// Smallest reported tap magnitude when the noise level is negligible.
pub const THRESHOLD_FLOOR: f64 = 1e-9;

/// Reads the spread pilot of `port` out of its guard box. The detection
/// threshold is three noise standard deviations, estimated from the
/// received grid.
pub fn estimate_channel(received: &DelayDopplerGrid, plan: &PilotPlan, port: usize) -> Result<DDChannelEstimate> {
    estimate_channel_with(received, plan, port, None)
}

/// [`estimate_channel`] with an optional known per-bin noise standard
/// deviation.
pub fn estimate_channel_with(
    received: &DelayDopplerGrid,
    plan: &PilotPlan,
    port: usize,
    noise_std: Option<f64>,
) -> Result<DDChannelEstimate> {
    if received.shape() != (plan.m, plan.n) {
        return Err(Error::DimensionMismatch {
            expected: (plan.m, plan.n),
            actual: received.shape(),
        });
    }
    let bins = plan.guard_box(port)?;
    let sigma = match noise_std {
        Some(s) if s.is_finite() && s >= 0.0 => s,
        Some(s) => return Err(Error::invalid(format!("invalid noise standard deviation {s}"))),
        None => estimate_noise_std(received, plan, &bins),
    };
    let amp = plan.pilot_amplitude;
    let threshold = (3.0 * sigma / amp).max(THRESHOLD_FLOOR);
    let (k0, l0) = plan.pilot_positions[port];
    let taps = bins
        .iter()
        .filter_map(|&(k, l)| {
            let gain = received.get(l, k) / amp;
            (gain.norm() >= threshold).then_some(EstimatedTap {
                delay_bins: l - l0,
                doppler_bins: k as isize - k0 as isize,
                gain,
            })
        })
        .collect();
    Ok(DDChannelEstimate { taps, threshold })
}

/// Median-based noise level: bins of the region outside every guard box
/// when there are enough of them, else the port's own box.
fn estimate_noise_std(received: &DelayDopplerGrid, plan: &PilotPlan, own: &[(usize, usize)]) -> f64 {
    let mut in_box = vec![false; plan.m * plan.n];
    for port in 0..plan.port_count() {
        if let Ok(bins) = plan.guard_box(port) {
            for (k, l) in bins {
                in_box[l * plan.n + k] = true;
            }
        }
    }
    let r = plan.region;
    let mut mags: Vec<f64> = Vec::new();
    for l in r.delay_start..r.delay_start + r.delay_len {
        for k in r.doppler_start..r.doppler_start + r.doppler_len {
            if !in_box[l * plan.n + k] {
                mags.push(received.get(l, k).norm());
            }
        }
    }
    if mags.len() < 8 {
        mags = own.iter().map(|&(k, l)| received.get(l, k).norm()).collect();
    }
    if mags.is_empty() {
        return 0.0;
    }
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = mags[mags.len() / 2];
    // |n| of a complex Gaussian with variance σ² has median σ·√ln2
    median / core::f64::consts::LN_2.sqrt()
}

/// Summary of a port packing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortReport {
    pub port_count: usize,
    pub guard_delay_bins: usize,
    pub guard_doppler_bins: usize,
    pub region_delay_bins: usize,
    pub region_doppler_bins: usize,
    pub overhead_total: f64,
    pub overhead_per_port: f64,
}

/// Guard extent in bins for a spread, rounding up with a small tolerance
/// so exact multiples of the resolution do not gain a bin.
fn guard_bins(spread_in_bins: f64) -> usize {
    (spread_in_bins - 1e-9).ceil().max(0.0) as usize
}

/// Packs as many ports as fit in `region_fraction` of the grid.
///
/// Guards are `Lτ = ⌈τ·M·Δf⌉` delay bins and `Lν = ⌈ν·N·T⌉` Doppler bins.
/// Every rectangular region shape of at most `⌊fraction·M·N⌋` bins anchored
/// at the grid origin is tried, and ports are laid out on the lattice with
/// pitch `(Lτ + 1, 2Lν + 1)`. The shape with the most ports wins; ties go to
/// the shape spanning more Doppler bins. The region is then trimmed to the
/// lattice it holds.
pub fn plan_ports(
    p: &FrameParams,
    delay_spread: f64,
    doppler_spread: f64,
    region_fraction: f64,
) -> Result<(PilotPlan, PortReport)> {
    if !(region_fraction > 0.0 && region_fraction <= 1.0) {
        return Err(Error::invalid(format!("region fraction must be in (0, 1], got {region_fraction}")));
    }
    if !(delay_spread.is_finite() && delay_spread >= 0.0 && doppler_spread.is_finite() && doppler_spread >= 0.0) {
        return Err(Error::invalid("spreads must be finite and non-negative"));
    }
    let (m, n) = (p.m(), p.n());
    let lt = guard_bins(delay_spread / p.delay_resolution());
    let lv = guard_bins(doppler_spread / p.doppler_resolution());
    let (pitch_l, pitch_k) = (lt + 1, 2 * lv + 1);
    let budget = ((region_fraction * (m * n) as f64) + 1e-9).floor() as usize;
    let mut best: Option<(usize, usize, usize)> = None; // (ports, per_l, per_k)
    for doppler_len in (1..=n).rev() {
        let delay_len = (budget / doppler_len).min(m);
        if delay_len == 0 {
            continue;
        }
        let (per_l, per_k) = (delay_len / pitch_l, doppler_len / pitch_k);
        let ports = per_l * per_k;
        if ports > 0 && best.map_or(true, |b| ports > b.0) {
            best = Some((ports, per_l, per_k));
        }
    }
    let Some((ports, per_l, per_k)) = best else {
        return Err(Error::RegionTooSmall(format!(
            "a {}x{} guard box (delay x Doppler) does not fit in {budget} bins",
            pitch_l, pitch_k
        )));
    };
    let region = PilotRegion {
        delay_start: 0,
        delay_len: per_l * pitch_l,
        doppler_start: 0,
        doppler_len: per_k * pitch_k,
    };
    let mut positions = Vec::with_capacity(ports);
    for i in 0..per_l {
        for j in 0..per_k {
            positions.push((lv + j * pitch_k, i * pitch_l));
        }
    }
    let plan = PilotPlan::new(p, positions, lt, lv, 1.0, region)?;
    let report = PortReport {
        port_count: ports,
        guard_delay_bins: lt,
        guard_doppler_bins: lv,
        region_delay_bins: region.delay_len,
        region_doppler_bins: region.doppler_len,
        overhead_total: region_fraction,
        overhead_per_port: region_fraction / ports as f64,
    };
    Ok((plan, report))
}
