//! Reference estimators for benchmark comparison: delay-domain MUSIC on a
//! grid and ESPRIT over a contiguous spectrum.

use ndarray::{Array1, Array2};

use crate::error::{MbError, Result};
use crate::estimator::esprit_phases;
use crate::linalg;
use crate::model::{MultibandCsi, C64};
use crate::stacking;

/// Delay search grid for MUSIC.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn new(t_min: f64, t_max: f64, step: f64) -> Result<Self> {
        if !(t_min < t_max) {
            return Err(MbError::Invalid("grid: t_min must be below t_max".into()));
        }
        if !(step > 0.0) {
            return Err(MbError::Invalid("grid: step must be positive".into()));
        }
        Ok(Self { t_min, t_max, step })
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.t_max - self.t_min) / self.step).floor() as usize + 1;
        (0..n).map(|i| self.t_min + i as f64 * self.step).collect()
    }
}

/// Concatenate the bands of each snapshot into one long contiguous CFR
/// vector; errors unless adjacent band offsets differ by exactly N.
fn merge_contiguous(csi: &MultibandCsi) -> Result<Vec<Array1<C64>>> {
    let plan = &csi.band_plan;
    let n = plan.n_subcarriers as i64;
    for w in plan.band_offsets.windows(2) {
        if w[1] - w[0] != n {
            return Err(MbError::Invalid(format!(
                "baseline requires a contiguous spectrum; offsets {} and {} are {} subcarriers apart, need {}",
                w[0],
                w[1],
                w[1] - w[0],
                n
            )));
        }
    }
    let total = plan.n_bands() * plan.n_subcarriers;
    let mut out = Vec::with_capacity(csi.snapshots.len());
    for snap in &csi.snapshots {
        let mut v = Array1::zeros(total);
        for (i, band) in snap.per_band.iter().enumerate() {
            v.slice_mut(ndarray::s![i * plan.n_subcarriers..(i + 1) * plan.n_subcarriers])
                .assign(band);
        }
        out.push(v);
    }
    Ok(out)
}

/// Hankel-stack all snapshots of the merged vector and return the `k_order`
/// dominant left singular vectors plus the chosen row count.
fn contiguous_signal_subspace(csi: &MultibandCsi, k_order: usize) -> Result<(Array2<C64>, usize)> {
    if k_order == 0 {
        return Err(MbError::Invalid("model order must be at least 1".into()));
    }
    let merged = merge_contiguous(csi)?;
    let len = merged[0].len();
    let m = merged.len();
    let p = stacking::default_p_rows(len, m, k_order, false);
    let q = len - p + 1;
    if p <= k_order || q * m < k_order {
        return Err(MbError::Invalid(format!(
            "model order {k_order} exceeds the Hankel rank bound (P = {p}, Q*M = {})",
            q * m
        )));
    }
    let mut data = Array2::zeros((p, q * m));
    for (j, v) in merged.iter().enumerate() {
        let h = stacking::hankel(&v.view(), p)?;
        data.slice_mut(ndarray::s![.., j * q..(j + 1) * q]).assign(&h);
    }
    let (_, u) = linalg::left_svd(&data.view())?;
    Ok((u.slice(ndarray::s![.., ..k_order]).to_owned(), p))
}

/// Delay-domain MUSIC over a contiguous spectrum. Evaluates the
/// noise-subspace spectrum `1 / ||E_n^H a(tau)||^2` on the grid (through the
/// complementary signal-subspace form) and returns the `k_order` largest
/// well-separated peaks, sorted ascending.
pub fn music_delays(csi: &MultibandCsi, k_order: usize, grid: &GridSpec) -> Result<Vec<f64>> {
    let (es, p) = contiguous_signal_subspace(csi, k_order)?;
    let w = csi.band_plan.omega_sc();
    let taus = grid.points();
    // residual r = ||a||^2 - ||E_s^H a||^2 = ||E_n^H a||^2; peaks of the
    // MUSIC spectrum are minima of r, which avoids dividing by ~0 at
    // noiseless true delays
    let mut resid = Vec::with_capacity(taus.len());
    let mut a = Array1::<C64>::zeros(p);
    for &tau in &taus {
        let rot = C64::from_polar(1.0, -w * tau);
        let mut cur = C64::new(1.0, 0.0);
        for x in a.iter_mut() {
            *x = cur;
            cur *= rot;
        }
        let proj: f64 = es
            .columns()
            .into_iter()
            .map(|col| col.iter().zip(&a).map(|(e, x)| e.conj() * x).sum::<C64>().norm_sqr())
            .sum();
        resid.push((p as f64 - proj).max(0.0));
    }
    // strict local minima of the residual, ranked best-first
    let mut peaks: Vec<usize> = (1..taus.len().saturating_sub(1))
        .filter(|&i| resid[i] < resid[i - 1] && resid[i] < resid[i + 1])
        .collect();
    peaks.sort_by(|&a, &b| resid[a].total_cmp(&resid[b]));
    let mut chosen: Vec<usize> = Vec::new();
    for i in peaks {
        if chosen.iter().all(|&j| i.abs_diff(j) >= 2) {
            chosen.push(i);
            if chosen.len() == k_order {
                break;
            }
        }
    }
    if chosen.len() < k_order {
        return Err(MbError::Numerical(format!(
            "MUSIC found {} peak(s), need {k_order}",
            chosen.len()
        )));
    }
    let mut delays: Vec<f64> = chosen.into_iter().map(|i| taus[i]).collect();
    delays.sort_by(f64::total_cmp);
    Ok(delays)
}

/// ESPRIT over a contiguous spectrum: Hankel stack, signal subspace,
/// shift-invariance rotation, delays from the eigen-angles, sorted ascending.
pub fn esprit_delays(csi: &MultibandCsi, k_order: usize) -> Result<Vec<f64>> {
    if k_order == 0 {
        return Err(MbError::Invalid("model order must be at least 1".into()));
    }
    let merged = merge_contiguous(csi)?;
    let len = merged[0].len();
    let m = merged.len();
    let p = stacking::default_p_rows(len, m, k_order, false);
    let q = len - p + 1;
    if p <= k_order || q * m < k_order {
        return Err(MbError::Invalid(format!(
            "model order {k_order} exceeds the Hankel rank bound (P = {p}, Q*M = {})",
            q * m
        )));
    }
    let mut data = Array2::zeros((p, q * m));
    for (j, v) in merged.iter().enumerate() {
        let h = stacking::hankel(&v.view(), p)?;
        data.slice_mut(ndarray::s![.., j * q..(j + 1) * q]).assign(&h);
    }
    let w = csi.band_plan.omega_sc();
    let mut delays: Vec<f64> = esprit_phases(&data, k_order)?
        .into_iter()
        .map(|phi| phi / w)
        .collect();
    delays.sort_by(f64::total_cmp);
    Ok(delays)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_csi, BandPlan, MultipathChannel};

    fn single_band_plan(n: usize) -> BandPlan {
        BandPlan::new(78.125e3, n, vec![0], 6.0e9).unwrap()
    }

    fn wide_contiguous_plan() -> BandPlan {
        // 4 adjacent bands of 256 subcarriers: 80 MHz contiguous
        BandPlan::new(78.125e3, 256, vec![0, 256, 512, 768], 6.0e9).unwrap()
    }

    #[test]
    fn grid_points_inclusive() {
        let g = GridSpec::new(0.0, 1e-9, 0.25e-9).unwrap();
        let p = g.points();
        assert_eq!(p.len(), 5);
        assert!((p[4] - 1e-9).abs() < 1e-24);
        assert!(GridSpec::new(1.0, 0.5, 0.1).is_err());
        assert!(GridSpec::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn music_single_path_on_grid_exact() {
        let plan = single_band_plan(256);
        let ch = MultipathChannel::from_ns_db(&[10.0], &[0.0]).unwrap();
        let csi = generate_csi(&ch, &plan, 1, f64::INFINITY, true, 7).unwrap();
        let grid = GridSpec::new(0.0, 30e-9, 0.005e-9).unwrap();
        let d = music_delays(&csi, 1, &grid).unwrap();
        assert_eq!(d.len(), 1);
        // tau is exactly on the grid: 10 / 0.005 = 2000
        assert!((d[0] - 10e-9).abs() < 1e-18, "got {} ns", d[0] * 1e9);
    }

    #[test]
    fn music_two_paths_within_one_grid_step() {
        let plan = wide_contiguous_plan();
        let ch = MultipathChannel::from_ns_db(&[5.0, 15.0], &[0.0, -3.0]).unwrap();
        let csi = generate_csi(&ch, &plan, 2, f64::INFINITY, true, 11).unwrap();
        let grid = GridSpec::new(0.0, 25e-9, 0.005e-9).unwrap();
        let d = music_delays(&csi, 2, &grid).unwrap();
        assert!((d[0] - 5e-9).abs() <= grid.step + 1e-18, "got {} ns", d[0] * 1e9);
        assert!((d[1] - 15e-9).abs() <= grid.step + 1e-18, "got {} ns", d[1] * 1e9);
    }

    #[test]
    fn music_reports_missing_peaks() {
        let plan = single_band_plan(128);
        let ch = MultipathChannel::from_ns_db(&[10.0], &[0.0]).unwrap();
        let csi = generate_csi(&ch, &plan, 1, f64::INFINITY, true, 3).unwrap();
        // grid on the descending flank of the single peak: no local minimum
        let grid = GridSpec::new(10.3e-9, 11.0e-9, 0.1e-9).unwrap();
        let err = music_delays(&csi, 1, &grid).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("0 peak"), "message: {msg}");
    }

    #[test]
    fn music_rejects_noncontiguous_plan() {
        let csi = generate_csi(
            &crate::presets::default_channel(),
            &crate::presets::default_band_plan(),
            1,
            f64::INFINITY,
            true,
            1,
        )
        .unwrap();
        let grid = GridSpec::new(0.0, 40e-9, 0.1e-9).unwrap();
        assert!(music_delays(&csi, 7, &grid).is_err());
        assert!(esprit_delays(&csi, 7).is_err());
    }

    #[test]
    fn esprit_single_path_noiseless_exact() {
        let plan = single_band_plan(256);
        let ch = MultipathChannel::from_ns_db(&[12.5], &[0.0]).unwrap();
        let csi = generate_csi(&ch, &plan, 1, f64::INFINITY, true, 5).unwrap();
        let d = esprit_delays(&csi, 1).unwrap();
        assert!((d[0] - 12.5e-9).abs() < 1e-18, "got {} ns", d[0] * 1e9);
    }

    #[test]
    fn esprit_three_paths_noiseless() {
        let plan = wide_contiguous_plan();
        let ch = MultipathChannel::from_ns_db(&[3.0, 14.0, 27.0], &[0.0, -2.0, -4.0]).unwrap();
        let csi = generate_csi(&ch, &plan, 2, f64::INFINITY, true, 9).unwrap();
        let d = esprit_delays(&csi, 3).unwrap();
        for (est, truth) in d.iter().zip([3e-9, 14e-9, 27e-9]) {
            assert!((est - truth).abs() < 1e-15, "got {} ns", est * 1e9);
        }
    }

    #[test]
    fn esprit_rejects_excess_model_order() {
        let plan = single_band_plan(8);
        let ch = MultipathChannel::from_ns_db(&[5.0], &[0.0]).unwrap();
        let csi = generate_csi(&ch, &plan, 1, f64::INFINITY, true, 2).unwrap();
        assert!(esprit_delays(&csi, 7).is_err());
    }

    #[test]
    fn baselines_invariant_to_global_scaling() {
        let plan = wide_contiguous_plan();
        let ch = MultipathChannel::from_ns_db(&[5.0, 15.0], &[0.0, -3.0]).unwrap();
        let csi = generate_csi(&ch, &plan, 2, 20.0, true, 21).unwrap();
        let mut scaled = csi.clone();
        let g = C64::from_polar(2.0, 0.7);
        for snap in &mut scaled.snapshots {
            for band in &mut snap.per_band {
                band.mapv_inplace(|z| z * g);
            }
        }
        let grid = GridSpec::new(0.0, 25e-9, 0.05e-9).unwrap();
        let m1 = music_delays(&csi, 2, &grid).unwrap();
        let m2 = music_delays(&scaled, 2, &grid).unwrap();
        assert_eq!(m1, m2);
        let e1 = esprit_delays(&csi, 2).unwrap();
        let e2 = esprit_delays(&scaled, 2).unwrap();
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b).abs() < 1e-15 * 1.0_f64.max(a.abs() * 1e9));
        }
    }

    #[test]
    fn noiseless_music_and_esprit_agree() {
        let plan = wide_contiguous_plan();
        let ch = MultipathChannel::from_ns_db(&[5.0, 15.0], &[0.0, -3.0]).unwrap();
        let csi = generate_csi(&ch, &plan, 2, f64::INFINITY, true, 17).unwrap();
        let grid = GridSpec::new(0.0, 25e-9, 0.005e-9).unwrap();
        let m = music_delays(&csi, 2, &grid).unwrap();
        let e = esprit_delays(&csi, 2).unwrap();
        for (a, b) in m.iter().zip(&e) {
            assert!((a - b).abs() <= grid.step, "{} vs {} ns", a * 1e9, b * 1e9);
        }
    }
}
