use otfs_core::channel::{dd_oracle_matrix, dd_oracle_matrix_at, realize_profile, ChannelProfile, ChannelRealization, PathTap};
use otfs_core::equalization::{build_effective_matrix, Scheme};
use otfs_core::multicarrier::{demodulate, modulate, SampleStream};
use otfs_core::{FrameParams, TimeFrequencyGrid, C64};

// Fraction of column energy found at the predicted shift for on-grid taps.
// The within-symbol Doppler ramp becomes a per-delay-bin phase after the
// delay-axis transform, so nothing leaks.
const LOCALIZATION_FRACTION: f64 = 1.0;

fn params() -> FrameParams {
    FrameParams::new(32, 16, 15e3, 4).unwrap()
}

fn on_grid(p: &FrameParams, gain: C64, l: usize, k: i64) -> PathTap {
    PathTap::new(gain, l as f64 * p.delay_resolution(), k as f64 * p.doppler_resolution())
}

fn column_energy(h: &otfs_core::linalg::CMatrix, col: usize) -> f64 {
    (0..h.rows()).map(|r| h.get(r, col).norm_sqr()).sum()
}

fn shifted(p: &FrameParams, col: usize, l0: usize, k0: i64) -> usize {
    let (m, n) = (p.m(), p.n());
    let (l, k) = (col / n, col % n);
    ((l + l0) % m) * n + (k as i64 + k0).rem_euclid(n as i64) as usize
}

#[test]
fn single_taps_land_on_their_shift() {
    let p = params();
    for &(l0, k0) in &[(0usize, 0i64), (1, 1), (3, 2), (2, -1), (4, 3), (0, -5)] {
        let ch = ChannelRealization::new(vec![on_grid(&p, C64::new(1.0, 0.0), l0, k0)], "tap", 0).unwrap();
        let h = dd_oracle_matrix(&ch, &p).unwrap().matrix;
        for col in 0..p.grid_len() {
            let frac = h.get(shifted(&p, col, l0, k0), col).norm_sqr() / column_energy(&h, col);
            assert!(frac >= 0.9, "shift ({l0},{k0}) column {col}: {frac}");
            assert!((frac - LOCALIZATION_FRACTION).abs() < 1e-9, "shift ({l0},{k0}) column {col}: {frac}");
        }
    }
}

#[test]
fn two_taps_split_energy_by_gain_ratio() {
    let p = params();
    let (g1, g2) = (C64::new(0.8, 0.3), C64::new(-0.2, 0.4));
    let ch = ChannelRealization::new(vec![on_grid(&p, g1, 0, 1), on_grid(&p, g2, 3, -2)], "pair", 0).unwrap();
    let h = dd_oracle_matrix(&ch, &p).unwrap().matrix;
    let truth = g1.norm_sqr() / g2.norm_sqr();
    for col in 0..p.grid_len() {
        let a = h.get(shifted(&p, col, 0, 1), col).norm_sqr();
        let b = h.get(shifted(&p, col, 3, -2), col).norm_sqr();
        assert!((a + b) / column_energy(&h, col) > 0.999);
        assert!(((a / b) / truth - 1.0).abs() < 0.05);
    }
}

#[test]
fn off_grid_doppler_spreads_but_keeps_energy_near_the_shift() {
    let p = params();
    let tap = PathTap::new(C64::new(1.0, 0.0), 2.0 * p.delay_resolution(), 0.5 * p.doppler_resolution());
    let ch = ChannelRealization::new(vec![tap], "half-bin", 0).unwrap();
    let h = dd_oracle_matrix(&ch, &p).unwrap().matrix;
    let col = 5 * p.n() + 3;
    let near = h.get(shifted(&p, col, 2, 0), col).norm_sqr() + h.get(shifted(&p, col, 2, 1), col).norm_sqr();
    let frac = near / column_energy(&h, col);
    // half a bin splits the main lobe between two Doppler bins
    assert!(frac > 0.7 && frac < 0.95, "{frac}");
}

#[test]
fn back_to_back_frames_see_the_same_channel() {
    let p = params();
    let offset = p.frame_samples();
    // on-grid Doppler: a whole frame advances every tap by full cycles
    let taps = vec![
        on_grid(&p, C64::new(0.6, 0.2), 0, 1),
        on_grid(&p, C64::new(-0.3, 0.5), 2, -2),
        on_grid(&p, C64::new(0.1, -0.4), 4, 0),
    ];
    let ch = ChannelRealization::new(taps, "static", 0).unwrap();
    let first = dd_oracle_matrix(&ch, &p).unwrap().matrix;
    let second = dd_oracle_matrix_at(&ch, &p, offset).unwrap().matrix;
    assert!(first.max_abs_diff(&second) < 1e-10);

    // any single tap: the next frame differs by one frame's Doppler phase
    let nu = 137.0;
    let ch = ChannelRealization::new(vec![PathTap::new(C64::new(1.0, 0.0), 0.0, nu)], "one", 0).unwrap();
    let first = dd_oracle_matrix(&ch, &p).unwrap().matrix;
    let second = dd_oracle_matrix_at(&ch, &p, offset).unwrap().matrix;
    let phase = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * nu * offset as f64 / p.sample_rate());
    let mut diff: f64 = 0.0;
    for r in 0..first.rows() {
        for c in 0..first.cols() {
            diff = diff.max((second.get(r, c) - first.get(r, c) * phase).norm());
        }
    }
    assert!(diff < 1e-10, "{diff}");
}

#[test]
fn static_channels_are_diagonal_in_ofdm() {
    let p = params();
    let ch = realize_profile(&ChannelProfile::etu(0.0), 4).unwrap();
    let h = build_effective_matrix(&[ch], 1, 1, &p, Scheme::Ofdm).unwrap().matrix;
    let mut off = 0.0;
    let total = h.energy();
    for r in 0..h.rows() {
        for c in 0..h.cols() {
            if r != c {
                off += h.get(r, c).norm_sqr();
            }
        }
    }
    assert!(off < 1e-8 * total, "{}", off / total);
}

#[test]
fn effective_matrix_route_matches_the_oracle_for_etu() {
    let p = FrameParams::new(16, 8, 15e3, 3).unwrap();
    let ch = realize_profile(&ChannelProfile::etu(900.0), 21).unwrap();
    let oracle = dd_oracle_matrix(&ch, &p).unwrap().matrix;
    let fast = build_effective_matrix(&[ch], 1, 1, &p, Scheme::Otfs).unwrap().matrix;
    assert!(oracle.max_abs_diff(&fast) < 1e-10);
}

#[test]
fn delay_within_the_prefix_is_a_phase_ramp() {
    let (m, cp, d) = (8, 3, 2);
    let p = FrameParams::new(m, 1, 15e3, cp).unwrap();
    let tf = TimeFrequencyGrid::from_vec(m, 1, (0..m).map(|i| C64::new(1.0 + i as f64, -0.5 * i as f64)).collect()).unwrap();
    let s = modulate(&tf, &p).unwrap();
    // circular delay of the whole CP-extended symbol
    let len = s.len();
    let delayed: Vec<C64> = (0..len).map(|i| s.samples[(i + len - d) % len]).collect();
    let out = demodulate(&SampleStream::new(delayed, p.sample_rate()), &p).unwrap();
    for mi in 0..m {
        let ramp = C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (mi * d) as f64 / m as f64);
        assert!((out.get(mi, 0) - tf.get(mi, 0) * ramp).norm() < 1e-12);
    }
}
