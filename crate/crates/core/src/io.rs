//! Config parsing, CSI CSV round-tripping, CFR dataset ingestion, and
//! result-file emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array1;

use crate::error::{MbError, Result};
use crate::estimator::DelayEstimate;
use crate::model::{BandPlan, CsiSnapshot, MultibandCsi, C64};

/// Speed of light, meters per second.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Sectioned key=value configuration: `[section]` headers, `key = value`
/// lines, `#` comments, blank lines ignored.
#[derive(Debug, Clone, Default)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                current = name.trim().to_string();
                if current.is_empty() {
                    return Err(MbError::Config(format!("line {}: empty section name", lineno + 1)));
                }
                sections.entry(current.clone()).or_default();
            } else if let Some((k, v)) = line.split_once('=') {
                let key = k.trim();
                if key.is_empty() {
                    return Err(MbError::Config(format!("line {}: empty key", lineno + 1)));
                }
                sections
                    .entry(current.clone())
                    .or_default()
                    .insert(key.to_string(), v.trim().to_string());
            } else {
                return Err(MbError::Config(format!(
                    "line {}: expected `key = value` or `[section]`, got `{line}`",
                    lineno + 1
                )));
            }
        }
        Ok(Self { sections })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MbError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key)
            .ok_or_else(|| MbError::Config(format!("missing `{key}` in section [{section}]")))
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.get(section, key)
            .map(|v| {
                v.parse::<f64>().map_err(|_| {
                    MbError::Config(format!("[{section}] {key}: `{v}` is not a number"))
                })
            })
            .transpose()
    }

    pub fn require_f64(&self, section: &str, key: &str) -> Result<f64> {
        self.require(section, key)?;
        Ok(self.get_f64(section, key)?.unwrap())
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        self.get(section, key)
            .map(|v| {
                v.parse::<usize>().map_err(|_| {
                    MbError::Config(format!("[{section}] {key}: `{v}` is not a nonnegative integer"))
                })
            })
            .transpose()
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        self.get(section, key)
            .map(|v| {
                v.parse::<u64>().map_err(|_| {
                    MbError::Config(format!("[{section}] {key}: `{v}` is not a nonnegative integer"))
                })
            })
            .transpose()
    }

    pub fn get_bool(&self, section: &str, key: &str) -> Result<Option<bool>> {
        self.get(section, key)
            .map(|v| match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" | "on" => Ok(true),
                "false" | "no" | "0" | "off" => Ok(false),
                _ => Err(MbError::Config(format!("[{section}] {key}: `{v}` is not a boolean"))),
            })
            .transpose()
    }

    /// Comma- or whitespace-separated list of numbers.
    pub fn get_f64_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(section, key)
            .map(|v| parse_f64_list(v).map_err(|e| MbError::Config(format!("[{section}] {key}: {e}"))))
            .transpose()
    }

    pub fn require_f64_list(&self, section: &str, key: &str) -> Result<Vec<f64>> {
        self.require(section, key)?;
        Ok(self.get_f64_list(section, key)?.unwrap())
    }

    pub fn get_i64_list(&self, section: &str, key: &str) -> Result<Option<Vec<i64>>> {
        self.get(section, key)
            .map(|v| {
                v.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<i64>().map_err(|_| {
                            MbError::Config(format!("[{section}] {key}: `{s}` is not an integer"))
                        })
                    })
                    .collect()
            })
            .transpose()
    }
}

pub fn parse_f64_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("`{s}` is not a number")))
        .collect()
}

/// Serialize CSI to CSV with columns `snapshot,band,subcarrier,re,im`.
pub fn csi_to_csv(csi: &MultibandCsi) -> String {
    let mut out = String::from("snapshot,band,subcarrier,re,im\n");
    for snap in &csi.snapshots {
        for (b, band) in snap.per_band.iter().enumerate() {
            for (s, z) in band.iter().enumerate() {
                // {:e} round-trips f64 exactly through parse
                let _ = writeln!(out, "{},{},{},{:e},{:e}", snap.snapshot_id, b, s, z.re, z.im);
            }
        }
    }
    out
}

pub fn save_csi(csi: &MultibandCsi, path: &Path) -> Result<()> {
    std::fs::write(path, csi_to_csv(csi))?;
    Ok(())
}

/// Parse CSI CSV written by [`csi_to_csv`]; the band plan is supplied by the
/// caller (config) since the CSV carries only indices.
pub fn csi_from_csv(text: &str, band_plan: BandPlan) -> Result<MultibandCsi> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("").trim();
    if header != "snapshot,band,subcarrier,re,im" {
        return Err(MbError::Config(format!(
            "unexpected CSI CSV header `{header}`; need `snapshot,band,subcarrier,re,im`"
        )));
    }
    let l = band_plan.n_bands();
    let n = band_plan.n_subcarriers;
    let mut per_snapshot: BTreeMap<usize, Vec<Array1<C64>>> = BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(MbError::Config(format!("CSI CSV line {}: need 5 fields", lineno + 2)));
        }
        let parse_err = |what: &str| MbError::Config(format!("CSI CSV line {}: bad {what}", lineno + 2));
        let snap: usize = fields[0].parse().map_err(|_| parse_err("snapshot"))?;
        let band: usize = fields[1].parse().map_err(|_| parse_err("band"))?;
        let sub: usize = fields[2].parse().map_err(|_| parse_err("subcarrier"))?;
        let re: f64 = fields[3].parse().map_err(|_| parse_err("re"))?;
        let im: f64 = fields[4].parse().map_err(|_| parse_err("im"))?;
        if band >= l || sub >= n {
            return Err(MbError::Config(format!(
                "CSI CSV line {}: band {band}/subcarrier {sub} outside the {l}x{n} plan",
                lineno + 2
            )));
        }
        per_snapshot
            .entry(snap)
            .or_insert_with(|| vec![Array1::zeros(n); l])[band][sub] = C64::new(re, im);
    }
    if per_snapshot.is_empty() {
        return Err(MbError::Config("CSI CSV contains no data rows".into()));
    }
    let snapshots = per_snapshot
        .into_iter()
        .map(|(snapshot_id, per_band)| CsiSnapshot { per_band, snapshot_id })
        .collect();
    let csi = MultibandCsi { snapshots, band_plan, noise_variance: None };
    csi.validate()?;
    Ok(csi)
}

pub fn load_csi(path: &Path, band_plan: BandPlan) -> Result<MultibandCsi> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| MbError::Config(format!("cannot read {}: {e}", path.display())))?;
    csi_from_csv(&text, band_plan)
}

/// Ingest a measured CFR dataset (`freq_hz,re,im[,snapshot]`) and slice out
/// the subcarriers requested by the band plan. Frequencies must land on the
/// plan's grid within 1e-3 Hz; no interpolation is performed.
pub fn load_cfr_dataset(path: &Path, band_plan: &BandPlan) -> Result<MultibandCsi> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| MbError::Config(format!("cannot read {}: {e}", path.display())))?;
    cfr_from_csv(&text, band_plan)
}

pub fn cfr_from_csv(text: &str, band_plan: &BandPlan) -> Result<MultibandCsi> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("").trim();
    let has_snapshot = match header {
        "freq_hz,re,im" => false,
        "freq_hz,re,im,snapshot" => true,
        other => {
            return Err(MbError::Config(format!(
                "unexpected CFR header `{other}`; need `freq_hz,re,im[,snapshot]`"
            )))
        }
    };
    // snapshot -> sorted samples (freq, value)
    let mut samples: BTreeMap<usize, Vec<(f64, C64)>> = BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let want = if has_snapshot { 4 } else { 3 };
        if fields.len() != want {
            return Err(MbError::Config(format!("CFR line {}: need {want} fields", lineno + 2)));
        }
        let err = |what: &str| MbError::Config(format!("CFR line {}: bad {what}", lineno + 2));
        let f: f64 = fields[0].parse().map_err(|_| err("freq_hz"))?;
        let re: f64 = fields[1].parse().map_err(|_| err("re"))?;
        let im: f64 = fields[2].parse().map_err(|_| err("im"))?;
        let snap: usize = if has_snapshot {
            fields[3].parse().map_err(|_| err("snapshot"))?
        } else {
            0
        };
        samples.entry(snap).or_default().push((f, C64::new(re, im)));
    }
    if samples.is_empty() {
        return Err(MbError::Config("CFR file contains no data rows".into()));
    }
    for rows in samples.values_mut() {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    // detect the measured grid spacing from the first snapshot to give a
    // pointed resample-refusal message when numerologies differ
    let first = samples.values().next().unwrap();
    let spacing = first
        .windows(2)
        .map(|w| w[1].0 - w[0].0)
        .filter(|d| *d > 1e-9)
        .fold(f64::INFINITY, f64::min);
    if spacing.is_finite() && (spacing - band_plan.subcarrier_spacing).abs() > 1e-3 {
        return Err(MbError::Config(format!(
            "CFR grid spacing {spacing} Hz does not match the plan's {} Hz; \
             resampling/interpolation is not supported — re-export the dataset \
             on the plan's numerology",
            band_plan.subcarrier_spacing
        )));
    }
    let n = band_plan.n_subcarriers;
    let mut snapshots = Vec::new();
    for (&snapshot_id, rows) in &samples {
        let mut per_band = Vec::with_capacity(band_plan.n_bands());
        for (b, &off) in band_plan.band_offsets.iter().enumerate() {
            let mut band = Array1::zeros(n);
            for i in 0..n {
                let target = band_plan.base_frequency
                    + (off as f64 + i as f64) * band_plan.subcarrier_spacing;
                let found = rows
                    .binary_search_by(|(f, _)| f.partial_cmp(&target).unwrap())
                    .map(|idx| rows[idx].1)
                    .or_else(|idx| {
                        for cand in idx.saturating_sub(1)..=idx.min(rows.len().saturating_sub(1)) {
                            if (rows[cand].0 - target).abs() <= 1e-3 {
                                return Ok(rows[cand].1);
                            }
                        }
                        Err(idx)
                    });
                match found {
                    Ok(z) => band[i] = z,
                    Err(_) => {
                        return Err(MbError::Config(format!(
                            "snapshot {snapshot_id}: band {b} subcarrier {i} \
                             ({target} Hz) missing from the CFR file"
                        )))
                    }
                }
            }
            per_band.push(band);
        }
        snapshots.push(CsiSnapshot { per_band, snapshot_id });
    }
    let csi = MultibandCsi { snapshots, band_plan: band_plan.clone(), noise_variance: None };
    csi.validate()?;
    Ok(csi)
}

/// Result CSV for `estimate`: `path_index,delay_ns,range_m,amp_re,amp_im,crb_ns`.
/// Amplitudes are taken from the first snapshot; CRB column is empty when no
/// bound was attached.
pub fn estimate_to_csv(est: &DelayEstimate) -> String {
    let mut out = String::from("path_index,delay_ns,range_m,amp_re,amp_im,crb_ns\n");
    for (k, &tau) in est.delays.iter().enumerate() {
        let amp = est.amplitudes.first().map(|a| a[k]).unwrap_or(C64::new(0.0, 0.0));
        let crb = est
            .crb
            .as_ref()
            .map(|c| format!("{:e}", c[k].sqrt() * 1e9))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{}",
            k,
            tau * 1e9,
            tau * SPEED_OF_LIGHT,
            amp.re,
            amp.im,
            crb
        );
    }
    out
}
