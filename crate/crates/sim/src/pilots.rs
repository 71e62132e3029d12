//! `plan-pilots` and `estimate-demo`.

use std::fmt::Write as _;

use anyhow::Result;
use otfs_core::channel::{add_awgn, apply, realize_profile, ChannelRealization};
use otfs_core::estimation::{estimate_channel, place_pilots, plan_ports, PortReport};
use otfs_core::multicarrier::{demodulate, modulate};
use otfs_core::stats::derive_seed;
use otfs_core::transforms::{isfft, sfft};
use otfs_core::{DelayDopplerGrid, FrameParams};

use crate::config::{Config, ConfigError};
use crate::output::sig6;

pub const PLAN_HEADER: &str = "port_count,guard_delay_bins,guard_doppler_bins,overhead_total,overhead_per_port";

/// Percentage rounded to two decimals, as in `0.08%`.
pub fn percent(fraction: f64) -> String {
    format!("{:.2}%", fraction * 100.0)
}

fn plan(cfg: &Config) -> Result<(FrameParams, PortReport, otfs_core::estimation::PilotPlan)> {
    let p = cfg.frame()?;
    let s = cfg.pilots()?;
    let (plan, report) = plan_ports(&p, s.delay_spread, s.doppler_spread, s.region_fraction)
        .map_err(|e| ConfigError::new("pilots.region_fraction", e))?;
    Ok((p, report, plan))
}

/// Human-readable summary followed by a header and one machine-readable row.
pub fn plan_pilots(cfg: &Config) -> Result<String> {
    let (p, r, _) = plan(cfg)?;
    let mut out = String::new();
    writeln!(out, "grid: {} x {} (delay x Doppler), {} bins", p.m(), p.n(), p.grid_len())?;
    writeln!(
        out,
        "guard: {} delay bins, {} Doppler bins each side",
        r.guard_delay_bins, r.guard_doppler_bins
    )?;
    writeln!(
        out,
        "region: {} x {} bins holding {} ports",
        r.region_delay_bins, r.region_doppler_bins, r.port_count
    )?;
    writeln!(out, "overhead_total: {}", percent(r.overhead_total))?;
    writeln!(out, "overhead_per_port: {}", percent(r.overhead_per_port))?;
    writeln!(out, "{PLAN_HEADER}")?;
    writeln!(
        out,
        "{},{},{},{},{}",
        r.port_count,
        r.guard_delay_bins,
        r.guard_doppler_bins,
        sig6(r.overhead_total),
        sig6(r.overhead_per_port)
    )?;
    Ok(out)
}

/// Sends port 0's pilot alone through one on-grid channel draw and lists
/// the true taps next to the calibrated estimates.
pub fn estimate_demo(cfg: &Config) -> Result<String> {
    let (p, report, plan) = plan(cfg)?;
    let s = cfg.pilots()?;
    let profile = cfg.channel()?;
    let truth = realize_profile(&profile, derive_seed(s.seed, &[1]))?.snapped_to_grid(&p);
    let plan = plan.with_ports(&[0])?;
    let (k0, l0) = plan.pilot_positions()[0];
    let tx = place_pilots(&DelayDopplerGrid::zeros(&p), &plan)?;
    let mut rx = apply(&modulate(&isfft(&tx, &p)?, &p)?, &truth)?;
    if let Some(snr) = s.pilot_snr_db {
        // unit pilot energy in one bin against unit-variance-per-bin noise
        rx = add_awgn(&rx, snr, 1.0, derive_seed(s.seed, &[2]));
    }
    let y = sfft(&demodulate(&rx, &p)?, &p)?;
    let est = estimate_channel(&y, &plan, 0)?.calibrated(&p, l0);

    let merged = merged_true_taps(&truth, &p);
    let mut out = String::new();
    writeln!(
        out,
        "pilot at k={k0}, l={l0}; guard {} delay x {} Doppler bins; {} paths on {} bins",
        report.guard_delay_bins,
        report.guard_doppler_bins,
        truth.taps.len(),
        merged.len()
    )?;
    if !truth.check_against_frame(&p) {
        writeln!(out, "warning: some paths outlast the cyclic prefix")?;
    }
    writeln!(out, "source,delay_bins,doppler_bins,gain_re,gain_im,magnitude")?;
    for (delay, doppler, g) in merged {
        writeln!(out, "true,{delay},{doppler},{},{},{}", sig6(g.re), sig6(g.im), sig6(g.norm()))?;
    }
    for t in &est.taps {
        writeln!(
            out,
            "estimate,{},{},{},{},{}",
            t.delay_bins,
            t.doppler_bins,
            sig6(t.gain.re),
            sig6(t.gain.im),
            sig6(t.gain.norm())
        )?;
    }
    Ok(out)
}

// Taps snapped onto the same bin add up; report them as the estimator sees
// them.
fn merged_true_taps(ch: &ChannelRealization, p: &FrameParams) -> Vec<(usize, isize, otfs_core::C64)> {
    let mut out: Vec<(usize, isize, otfs_core::C64)> = Vec::new();
    for t in &ch.taps {
        let delay = (t.delay / p.delay_resolution()).round() as usize;
        let doppler = (t.doppler / p.doppler_resolution()).round() as isize;
        match out.iter_mut().find(|e| e.0 == delay && e.1 == doppler) {
            Some(e) => e.2 += t.gain,
            None => out.push((delay, doppler, t.gain)),
        }
    }
    out.sort_by_key(|e| (e.0, e.1));
    out
}
