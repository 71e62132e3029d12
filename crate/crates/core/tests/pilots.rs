use otfs_core::channel::{add_awgn, apply, ChannelRealization, PathTap};
use otfs_core::estimation::{estimate_channel, place_pilots, plan_ports, PilotPlan, PilotRegion};
use otfs_core::multicarrier::{demodulate, modulate};
use otfs_core::transforms::{isfft, sfft};
use otfs_core::{DelayDopplerGrid, FrameParams, C64};
use std::f64::consts::PI;

fn params() -> FrameParams {
    FrameParams::new(32, 16, 15e3, 4).unwrap()
}

fn region(dl: usize, dk: usize) -> PilotRegion {
    PilotRegion {
        delay_start: 0,
        delay_len: dl,
        doppler_start: 0,
        doppler_len: dk,
    }
}

fn on_grid(p: &FrameParams, gain: C64, l: usize, k: i64) -> PathTap {
    PathTap::new(gain, l as f64 * p.delay_resolution(), k as f64 * p.doppler_resolution())
}

fn through(p: &FrameParams, tx: &DelayDopplerGrid, ch: &ChannelRealization, noise: Option<(f64, u64)>) -> DelayDopplerGrid {
    let s = modulate(&isfft(tx, p).unwrap(), p).unwrap();
    let mut r = apply(&s, ch).unwrap();
    if let Some((pilot_snr_db, seed)) = noise {
        // the pilot energy sits in one bin; unitary transforms keep the
        // per-bin noise variance equal to the per-sample one
        r = add_awgn(&r, pilot_snr_db, 1.0, seed);
    }
    sfft(&demodulate(&r, p).unwrap(), p).unwrap()
}

// Phase picked up by a tap of `k0` Doppler bins seen through a pilot at
// delay bin `lp`: the Doppler ramp evaluated at the pilot's sample within
// the first symbol body.
fn calibration(p: &FrameParams, k0: i64, lp: usize) -> C64 {
    let omega = 2.0 * PI * k0 as f64 * p.doppler_resolution() / p.sample_rate();
    C64::from_polar(1.0, omega * (p.cp_len() + lp) as f64)
}

#[test]
fn noiseless_tap_is_recovered_after_calibration() {
    let p = params();
    let plan = PilotPlan::new(&p, vec![(4, 2)], 2, 3, 1.0, region(8, 11)).unwrap();
    let tx = place_pilots(&DelayDopplerGrid::zeros(&p), &plan).unwrap();

    // one-time calibration with a unit tap at the same shift
    let unit = ChannelRealization::new(vec![on_grid(&p, C64::new(1.0, 0.0), 1, 2)], "unit", 0).unwrap();
    let c = estimate_channel(&through(&p, &tx, &unit, None), &plan, 0).unwrap().dominant().unwrap().gain;
    assert!((c.norm() - 1.0).abs() < 1e-12);
    assert!((c - calibration(&p, 2, 2)).norm() < 1e-12, "{c}");

    let g = C64::new(0.7, 0.1);
    let ch = ChannelRealization::new(vec![on_grid(&p, g, 1, 2)], "tap", 0).unwrap();
    let est = estimate_channel(&through(&p, &tx, &ch, None), &plan, 0).unwrap();
    let d = est.dominant().unwrap();
    assert_eq!((d.doppler_bins, d.delay_bins), (2, 1));
    assert!(((d.gain / c).norm() - g.norm()).abs() <= 0.02 * g.norm());
    assert!((d.gain / c - g).norm() < 1e-12);
    assert!((est.calibrated(&p, 2).dominant().unwrap().gain - g).norm() < 1e-12);
}

#[test]
fn identity_channel_gives_one_unit_tap() {
    let p = params();
    let plan = PilotPlan::new(&p, vec![(1, 0)], 3, 1, 2.0, region(4, 3)).unwrap();
    let tx = place_pilots(&DelayDopplerGrid::zeros(&p), &plan).unwrap();
    let est = estimate_channel(&through(&p, &tx, &ChannelRealization::identity(), None), &plan, 0).unwrap();
    assert_eq!(est.taps.len(), 1);
    let t = est.taps[0];
    assert_eq!((t.doppler_bins, t.delay_bins), (0, 0));
    assert!((t.gain - C64::new(1.0, 0.0)).norm() < 1e-6);
}

#[test]
fn two_taps_at_forty_db_pilot_snr() {
    let p = params();
    let plan = PilotPlan::new(&p, vec![(2, 0)], 4, 2, 1.0, region(8, 5)).unwrap();
    let tx = place_pilots(&DelayDopplerGrid::zeros(&p), &plan).unwrap();
    let (g1, g2) = (C64::new(0.6, -0.5), C64::new(0.2, 0.55));
    let ch = ChannelRealization::new(vec![on_grid(&p, g1, 0, 1), on_grid(&p, g2, 3, -1)], "pair", 0).unwrap();
    let (c1, c2) = (calibration(&p, 1, 0), calibration(&p, -1, 0));
    let mut worst: f64 = 0.0;
    for draw in 0..100 {
        let y = through(&p, &tx, &ch, Some((40.0, 1000 + draw)));
        let est = estimate_channel(&y, &plan, 0).unwrap();
        let a = est.tap_at(1, 0).expect("first tap detected").gain / c1;
        let b = est.tap_at(-1, 3).expect("second tap detected").gain / c2;
        worst = worst.max((a - g1).norm() / g1.norm()).max((b - g2).norm() / g2.norm());
        assert!(est.taps.len() <= 4, "draw {draw}: {} taps", est.taps.len());
    }
    assert!(worst <= 0.05, "{worst}");
}

#[test]
fn error_shrinks_with_pilot_snr() {
    let p = params();
    let plan = PilotPlan::new(&p, vec![(2, 0)], 4, 2, 1.0, region(8, 5)).unwrap();
    let tx = place_pilots(&DelayDopplerGrid::zeros(&p), &plan).unwrap();
    let g = C64::new(0.8, 0.6);
    let ch = ChannelRealization::new(vec![on_grid(&p, g, 2, 1)], "tap", 0).unwrap();
    let c = calibration(&p, 1, 0);
    let rms = |snr: f64| {
        let mut acc = 0.0;
        for draw in 0..100 {
            let est = estimate_channel(&through(&p, &tx, &ch, Some((snr, 77 + draw))), &plan, 0).unwrap();
            let t = est.tap_at(1, 2).expect("tap detected");
            acc += (t.gain / c - g).norm_sqr();
        }
        (acc / 100.0).sqrt()
    };
    let (e20, e30, e40) = (rms(20.0), rms(30.0), rms(40.0));
    // amplitude error falls by √10 per 10 dB
    for (hi, lo) in [(e20, e30), (e30, e40)] {
        let ratio = hi / lo;
        assert!(ratio > 2.5 && ratio < 4.0, "{e20} {e30} {e40}");
    }
}

#[test]
fn ports_do_not_disturb_each_other() {
    let p = params();
    let plan = PilotPlan::new(&p, vec![(2, 0), (7, 0), (2, 5)], 4, 2, 1.0, region(10, 10)).unwrap();
    let ch = ChannelRealization::new(
        vec![on_grid(&p, C64::new(0.7, 0.2), 0, -1), on_grid(&p, C64::new(-0.3, 0.5), 3, 2)],
        "pair",
        0,
    )
    .unwrap();
    let all = through(&p, &place_pilots(&DelayDopplerGrid::zeros(&p), &plan).unwrap(), &ch, None);
    let alone_plan = plan.with_ports(&[0]).unwrap();
    let alone = through(&p, &place_pilots(&DelayDopplerGrid::zeros(&p), &alone_plan).unwrap(), &ch, None);
    let with = estimate_channel(&all, &plan, 0).unwrap();
    let without = estimate_channel(&alone, &alone_plan, 0).unwrap();
    assert_eq!(with.taps.len(), without.taps.len());
    for (a, b) in with.taps.iter().zip(&without.taps) {
        assert_eq!((a.doppler_bins, a.delay_bins), (b.doppler_bins, b.delay_bins));
        assert!((a.gain - b.gain).norm() <= 0.01 * b.gain.norm());
    }
}

#[test]
fn pilot_energy_stays_in_its_guard_box() {
    let p = params();
    let plan = PilotPlan::new(&p, vec![(3, 2), (10, 2)], 4, 3, 1.0, region(8, 14)).unwrap();
    let ch = ChannelRealization::new(
        vec![
            on_grid(&p, C64::new(0.5, 0.1), 0, 3),
            on_grid(&p, C64::new(0.2, -0.6), 2, -3),
            on_grid(&p, C64::new(-0.4, 0.3), 4, 0),
        ],
        "three",
        0,
    )
    .unwrap();
    for port in 0..2 {
        let single = plan.with_ports(&[port]).unwrap();
        let y = through(&p, &place_pilots(&DelayDopplerGrid::zeros(&p), &single).unwrap(), &ch, None);
        let inside: f64 = single.guard_box(0).unwrap().iter().map(|&(k, l)| y.get(l, k).norm_sqr()).sum();
        assert!(inside / y.energy() >= 0.95, "port {port}: {}", inside / y.energy());
    }
}

// Most guard boxes any axis-aligned region of at most `budget` bins can hold,
// by trying every region shape and every way to tile it.
fn brute_force_ports(m: usize, n: usize, box_l: usize, box_k: usize, budget: usize) -> usize {
    let mut best = 0;
    for dl in 1..=m {
        for dk in 1..=n {
            if dl * dk > budget {
                continue;
            }
            // boxes of a fixed orientation in a rectangle tile best on the
            // aligned grid
            best = best.max((dl / box_l) * (dk / box_k));
        }
    }
    best
}

#[test]
fn lte_scale_port_plan() {
    // 600 subcarriers at 15 kHz, 14 symbols, prefix filling a 1 ms frame
    let p = FrameParams::new(600, 14, 15e3, 43).unwrap();
    assert!((p.frame_duration() - 1e-3).abs() < 1e-6);
    let (plan, report) = plan_ports(&p, 5e-6, 100.0, 0.07).unwrap();
    let (lt, lv) = (report.guard_delay_bins, report.guard_doppler_bins);
    assert_eq!((lt, lv), (45, 1));
    let budget = (0.07 * 8400.0f64).floor() as usize;
    let oracle = brute_force_ports(600, 14, lt + 1, 2 * lv + 1, budget);
    assert_eq!(report.port_count, oracle);
    assert_eq!(report.port_count, 4);
    // the area bound agrees: 588 bins hold at most four 46x3 boxes
    assert_eq!(budget / ((lt + 1) * (2 * lv + 1)), 4);
    assert_eq!(plan.port_count(), 4);
}

#[test]
fn packing_reaches_the_reference_count() {
    // 1 µs of delay guard, no Doppler guard
    let p = FrameParams::new(400, 22, 15e3, 28).unwrap();
    let (_, report) = plan_ports(&p, 1e-6, 0.0, 0.07).unwrap();
    assert_eq!(report.port_count, 88);
    let oracle = brute_force_ports(400, 22, report.guard_delay_bins + 1, 1, (0.07 * 8800.0f64 + 1e-9).floor() as usize);
    assert_eq!(oracle, 88);
    assert!((report.overhead_per_port - 0.07 / 88.0).abs() < 1e-15);
}
