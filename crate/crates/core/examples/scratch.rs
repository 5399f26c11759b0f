use mbdelay::estimator::*;
use mbdelay::model::*;
use mbdelay::presets;
use mbdelay::stacking::StackConfig;
use std::io::Write;

fn all_path_mse(variant: Variant, snr: f64, seed: u64) -> f64 {
    let ch = presets::default_channel();
    let plan = presets::default_band_plan();
    let csi = generate_csi(&ch, &plan, 12, snr, true, seed).unwrap();
    let est = mbwde(&csi, &StackConfig::new(171), Some(7), variant, true, 20, 1e-6).unwrap();
    let mut d = est.delays.clone();
    d.sort_by(f64::total_cmp);
    d.iter()
        .zip(&ch.delays)
        .map(|(a, b)| ((a - b) * 1e9).powi(2))
        .sum::<f64>()
        / ch.delays.len() as f64
}

fn main() {
    let mut f = std::fs::File::create("/root/c3data.csv").unwrap();
    writeln!(f, "variant,snr,trial,mse").unwrap();
    for (variant, tag, snrs) in [
        (Variant::FbNr, "fbnr", vec![6.0, 7.0, 8.0, 9.0, 10.0]),
        (Variant::Plain, "plain", vec![10.0, 11.0, 12.0, 13.0, 14.0]),
    ] {
        for &snr in &snrs {
            for t in 0..200u64 {
                let mse = all_path_mse(variant, snr, 300_000 + t);
                writeln!(f, "{tag},{snr},{t},{mse:.6e}").unwrap();
            }
            f.flush().unwrap();
            eprintln!("done {tag} {snr}");
        }
    }
}
