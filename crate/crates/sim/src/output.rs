//! CSV and SVG output.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use otfs_core::equalization::Scheme;
use otfs_core::link::SimResult;
use plotters::prelude::*;

pub const HEADER: [&str; 10] = [
    "scheme",
    "snr_db",
    "mcs",
    "trials",
    "bit_errors",
    "ber",
    "block_errors",
    "bler",
    "throughput",
    "seed",
];

/// Formats `x` with six significant digits, `%g` style.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Writes one row per scheme, SNR, MCS and (when `with_codeblock`)
/// codeblock size.
pub fn write_csv<W: Write>(out: W, result: &SimResult, with_codeblock: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = HEADER.to_vec();
    if with_codeblock {
        header.push("codeblock_bits");
    }
    w.write_record(&header)?;
    for r in &result.rows {
        let mut rec = vec![
            r.scheme.to_string(),
            sig6(r.snr_db),
            r.mcs.to_string(),
            r.trials.to_string(),
            r.counts.bit_errors.to_string(),
            sig6(r.ber()),
            r.counts.block_errors.to_string(),
            sig6(r.bler()),
            sig6(r.throughput()),
            r.seed.to_string(),
        ];
        if with_codeblock {
            rec.push(r.codeblock_bits.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, result: &SimResult, with_codeblock: bool) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_csv(std::io::BufWriter::new(file), result, with_codeblock).with_context(|| format!("writing {}", path.display()))
}

const COLORS: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

/// BLER per scheme and MCS on the left, throughput envelope on the right.
pub fn write_svg(path: &Path, result: &SimResult) -> Result<()> {
    let root = SVGBackend::new(path, (1100, 450)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (left, right) = root.split_horizontally(550);

    let snrs: Vec<f64> = result.rows.iter().map(|r| r.snr_db).collect();
    let (lo, hi) = snrs.iter().fold((f64::MAX, f64::MIN), |(a, b), &s| (a.min(s), b.max(s)));
    let (lo, hi) = if lo < hi { (lo, hi) } else { (lo - 1.0, lo + 1.0) };
    let floor = result
        .rows
        .iter()
        .map(|r| r.bler())
        .filter(|&b| b > 0.0)
        .fold(1.0f64, f64::min)
        .min(0.1)
        / 2.0;

    let mut bler = ChartBuilder::on(&left)
        .caption("BLER", ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(35)
        .y_label_area_size(55)
        .build_cartesian_2d(lo..hi, (floor..1.0).log_scale())
        .map_err(plot_err)?;
    bler.configure_mesh().x_desc("SNR (dB)").y_desc("BLER").draw().map_err(plot_err)?;

    let mut series: Vec<(Scheme, String, usize)> = Vec::new();
    for r in &result.rows {
        let key = (r.scheme, r.mcs.to_string(), r.codeblock_bits);
        if !series.contains(&key) {
            series.push(key);
        }
    }
    for (i, (scheme, mcs, cb)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64)> = result
            .rows
            .iter()
            .filter(|r| r.scheme == *scheme && r.mcs.to_string() == *mcs && r.codeblock_bits == *cb)
            .map(|r| (r.snr_db, r.bler().max(floor)))
            .collect();
        let style = if *scheme == Scheme::Otfs { color.stroke_width(2) } else { color.stroke_width(1) };
        bler.draw_series(LineSeries::new(pts, style))
            .map_err(plot_err)?
            .label(format!("{scheme} {mcs} {cb} b"))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
    }
    bler.configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;

    let top = result.rows.iter().map(|r| r.mcs.efficiency()).fold(0.0, f64::max).max(0.5);
    let mut tput = ChartBuilder::on(&right)
        .caption("Throughput envelope", ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(35)
        .y_label_area_size(55)
        .build_cartesian_2d(lo..hi, 0.0..top * 1.05)
        .map_err(plot_err)?;
    tput.configure_mesh()
        .x_desc("SNR (dB)")
        .y_desc("bits per channel use")
        .draw()
        .map_err(plot_err)?;
    for (i, scheme) in [Scheme::Otfs, Scheme::Ofdm].into_iter().enumerate() {
        let env = result.throughput_envelope(scheme);
        if env.is_empty() {
            continue;
        }
        let color = COLORS[i];
        tput.draw_series(LineSeries::new(env, color.stroke_width(2)))
            .map_err(plot_err)?
            .label(scheme.to_string())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
    }
    tput.configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

fn plot_err<E: std::fmt::Display>(e: E) -> anyhow::Error {
    anyhow::anyhow!("plotting: {e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(14.0), "14");
        assert_eq!(sig6(0.1), "0.1");
        assert_eq!(sig6(1.0 / 3.0), "0.333333");
        assert_eq!(sig6(2.0 / 3.0 * 1e-5), "6.66667e-6");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(-2.5), "-2.5");
        assert_eq!(sig6(0.07 / 88.0), "0.000795455");
        assert_eq!(sig6(9.999996), "10");
    }
}
