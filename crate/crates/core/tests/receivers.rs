use otfs_core::channel::{add_awgn, noise_variance, realize_profile, ChannelProfile, ChannelRealization};
use otfs_core::equalization::{per_symbol_sinr, DetectionOrder, EqualizerKind, MimoTfChannel, PreparedReceiver, Scheme};
use otfs_core::multicarrier::SampleStream;
use otfs_core::qam::Modulation;
use otfs_core::{FrameParams, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Coefficient of variation of the per-symbol SINR at 15 dB on the two-tap
// profile, seed 0, Doppler snapped to the grid.
const OTFS_DFE_SINR_COV: f64 = 0.157_975;
const OFDM_BIN_SINR_COV: f64 = 0.666_930;

fn params() -> FrameParams {
    FrameParams::new(32, 16, 15e3, 4).unwrap()
}

fn on_grid(profile: &ChannelProfile, p: &FrameParams, seed: u64) -> ChannelRealization {
    realize_profile(profile, seed).unwrap().snapped_to_grid(p)
}

fn cov(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

fn ofdm_bin_sinr(tf: &MimoTfChannel, nv: f64) -> Vec<f64> {
    let p = tf.params();
    let mut out = Vec::with_capacity(p.grid_len());
    for m in 0..p.m() {
        for n in 0..p.n() {
            out.push(tf.pair(0, 0).diagonal(m, n).norm_sqr() / nv);
        }
    }
    out
}

#[test]
fn per_symbol_sinr_spread_is_pinned() {
    let p = params();
    let nv = noise_variance(15.0, 1.0);
    let ch = on_grid(&ChannelProfile::two_tap(p.doppler_resolution()), &p, 0);
    let tf = MimoTfChannel::build(&[ch], 1, 1, &p).unwrap();
    let dfe = PreparedReceiver::genie_dfe(&tf.gram_dd(), nv, &DetectionOrder::Natural).unwrap();
    let otfs = cov(dfe.sinr());
    let ofdm = cov(&ofdm_bin_sinr(&tf, nv));
    assert!((otfs - OTFS_DFE_SINR_COV).abs() < 1e-5, "{otfs}");
    assert!((ofdm - OFDM_BIN_SINR_COV).abs() < 1e-5, "{ofdm}");
    assert!(otfs < ofdm / 4.0);
}

#[test]
fn otfs_sinr_is_flatter_than_ofdm_on_every_realization() {
    let p = params();
    let nv = noise_variance(15.0, 1.0);
    let profile = ChannelProfile::etu(p.doppler_resolution());
    for seed in 0..50 {
        let tf = MimoTfChannel::build(&[on_grid(&profile, &p, seed)], 1, 1, &p).unwrap();
        let dfe = PreparedReceiver::genie_dfe(&tf.gram_dd(), nv, &DetectionOrder::Natural).unwrap();
        let (a, b) = (spread(dfe.sinr()), spread(&ofdm_bin_sinr(&tf, nv)));
        assert!(a < b, "seed {seed}: OTFS {a}, OFDM {b}");
    }
}

#[test]
fn per_bin_sinr_ratio_follows_the_gains() {
    let p = params();
    let nv = 0.05;
    let ch = realize_profile(&ChannelProfile::two_tap(0.0), 3).unwrap();
    let tf = MimoTfChannel::build(&[ch], 1, 1, &p).unwrap();
    let h = tf.effective_matrix(Scheme::Ofdm).matrix;
    let sinr = per_symbol_sinr(&h, nv, EqualizerKind::TfSingleTap).unwrap();
    let gains: Vec<f64> = (0..h.rows()).map(|i| h.get(i, i).norm_sqr()).collect();
    assert!((spread(&sinr) / spread(&gains) - 1.0).abs() < 1e-12);
}

fn qpsk(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let bits: Vec<u8> = (0..2 * n).map(|_| rng.random_range(0..2u8)).collect();
    Modulation::Qpsk.map(&bits).unwrap()
}

#[test]
fn predicted_sinr_matches_measured_error() {
    let p = params();
    let profile = ChannelProfile::etu(p.doppler_resolution());
    for seed in [3u64, 8, 13] {
        let tf = MimoTfChannel::build(&[on_grid(&profile, &p, seed)], 1, 1, &p).unwrap();
        let h = tf.effective_matrix(Scheme::Otfs).matrix;
        let gram = h.gram();
        for snr in [10.0, 15.0, 20.0] {
            let nv = noise_variance(snr, 1.0);
            let dfe = PreparedReceiver::genie_dfe(&gram, nv, &DetectionOrder::Natural).unwrap();
            let lin = PreparedReceiver::lmmse(&gram, nv).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 100 + snr as u64);
            let (mut err_dfe, mut err_lin, mut count) = (0.0, 0.0, 0.0);
            for draw in 0..40 {
                let x = qpsk(p.grid_len(), &mut rng);
                let clean = h.mul_vec(&x).unwrap();
                let y = add_awgn(&SampleStream::new(clean, 1.0), snr, 1.0, rng.random::<u64>() ^ draw);
                let z = h.adjoint_mul_vec(&y.samples).unwrap();
                let (a, _) = dfe.equalize(&z, Some(&x)).unwrap().unbiased();
                let (b, _) = lin.equalize(&z, None).unwrap().unbiased();
                for i in 0..x.len() {
                    err_dfe += (a[i] - x[i]).norm_sqr();
                    err_lin += (b[i] - x[i]).norm_sqr();
                    count += 1.0;
                }
            }
            for (measured, predicted, name) in [
                (err_dfe / count, mean_inverse(dfe.sinr()), "dfe"),
                (err_lin / count, mean_inverse(lin.sinr()), "lmmse"),
            ] {
                let gap_db = 10.0 * (measured / predicted).log10();
                assert!(gap_db.abs() < 0.5, "seed {seed}, {snr} dB, {name}: {gap_db} dB");
            }
        }
    }
}

fn mean_inverse(sinr: &[f64]) -> f64 {
    sinr.iter().map(|s| 1.0 / s).sum::<f64>() / sinr.len() as f64
}

#[test]
fn mimo_gram_matches_the_dense_route() {
    let p = FrameParams::new(8, 4, 15e3, 2).unwrap();
    let profile = ChannelProfile::etu(600.0);
    let chans: Vec<ChannelRealization> = (0..4).map(|s| realize_profile(&profile, s).unwrap()).collect();
    let tf = MimoTfChannel::build(&chans, 2, 2, &p).unwrap();
    let dense = tf.effective_matrix(Scheme::Otfs).matrix;
    assert!(dense.gram().max_abs_diff(&tf.gram_dd()) < 1e-10);
}
