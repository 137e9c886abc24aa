//! RMSE, SSIM and aggregate reports over sets of response volumes.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::femsolver::{Channel, ResponseVolume};
use crate::pipeline::{Normalization, SampleRecord};

pub const REPORT_SCHEMA: &str = "mtforge.metric_report.v1";

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(invalid(format!(
            "shape mismatch: {} vs {} values",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(invalid("empty input"));
    }
    Ok(())
}

/// Root mean squared difference over all elements.
pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(libm::sqrt(s / a.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    /// Dynamic range L; by default the value range of the pair.
    pub dynamic_range: Option<f64>,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            k1: 0.01,
            k2: 0.03,
            dynamic_range: None,
        }
    }
}

impl SsimParams {
    fn constants(&self, x: &[f64], y: &[f64]) -> Result<Option<(f64, f64)>> {
        let l = match self.dynamic_range {
            Some(l) if !(l > 0.0 && l.is_finite()) => {
                return Err(invalid(format!("dynamic range must be positive, got {l}")))
            }
            Some(l) => l,
            None => {
                let (lo, hi) = x
                    .iter()
                    .chain(y)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                        (lo.min(v), hi.max(v))
                    });
                hi - lo
            }
        };
        if l == 0.0 {
            return Ok(None);
        }
        Ok(Some((
            (self.k1 * l) * (self.k1 * l),
            (self.k2 * l) * (self.k2 * l),
        )))
    }
}

fn ssim_from_moments(mx: f64, my: f64, vx: f64, vy: f64, cxy: f64, c1: f64, c2: f64) -> f64 {
    let num = (2.0 * mx * my + c1) * (2.0 * cxy + c2);
    let den = (mx * mx + my * my + c1) * (vx + vy + c2);
    (num / den).clamp(-1.0, 1.0)
}

/// Structural similarity from whole-volume statistics, with
/// `C1 = (k1·L)²` and `C2 = (k2·L)²`. Two identical constant inputs give 1.
pub fn ssim(x: &[f64], y: &[f64], params: &SsimParams) -> Result<f64> {
    same_len(x, y)?;
    let Some((c1, c2)) = params.constants(x, y)? else {
        return Ok(1.0);
    };
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        vx += dx * dx;
        vy += dy * dy;
        cxy += dx * dy;
    }
    Ok(ssim_from_moments(mx, my, vx / n, vy / n, cxy / n, c1, c2))
}

/// Mean SSIM over all `w×w×w` windows (clipped to the volume) of two
/// volumes with shape `dims`, x fastest. The constants use the global range.
pub fn ssim_windowed(
    x: &[f64],
    y: &[f64],
    dims: [usize; 3],
    window: usize,
    params: &SsimParams,
) -> Result<f64> {
    same_len(x, y)?;
    if dims.iter().product::<usize>() != x.len() || window == 0 {
        return Err(invalid(format!(
            "dims {dims:?} / window {window} do not fit {} values",
            x.len()
        )));
    }
    let Some((c1, c2)) = params.constants(x, y)? else {
        return Ok(1.0);
    };
    let w = dims.map(|d| window.min(d));
    let sums = [
        integral(x, dims, |a, _| a),
        integral(y, dims, |_, b| b),
        integral_pair(x, y, dims, |a, _| a * a),
        integral_pair(x, y, dims, |_, b| b * b),
        integral_pair(x, y, dims, |a, b| a * b),
    ];
    let n = (w[0] * w[1] * w[2]) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for k in 0..=dims[2] - w[2] {
        for j in 0..=dims[1] - w[1] {
            for i in 0..=dims[0] - w[0] {
                let box_sum = |s: &Vec<f64>| box_total(s, dims, [i, j, k], w);
                let (sx, sy, sxx, syy, sxy) = (
                    box_sum(&sums[0]),
                    box_sum(&sums[1]),
                    box_sum(&sums[2]),
                    box_sum(&sums[3]),
                    box_sum(&sums[4]),
                );
                let (mx, my) = (sx / n, sy / n);
                let vx = (sxx / n - mx * mx).max(0.0);
                let vy = (syy / n - my * my).max(0.0);
                total += ssim_from_moments(mx, my, vx, vy, sxy / n - mx * my, c1, c2);
                count += 1;
            }
        }
    }
    Ok(total / count as f64)
}

fn integral(v: &[f64], dims: [usize; 3], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    integral_pair(v, v, dims, f)
}

/// Zero-padded 3D prefix sums of `f(x, y)`, shape `(nx+1)(ny+1)(nz+1)`.
fn integral_pair(x: &[f64], y: &[f64], dims: [usize; 3], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let [nx, ny, nz] = dims;
    let (px, py) = (nx + 1, ny + 1);
    let mut s = vec![0.0; px * py * (nz + 1)];
    let at = |i: usize, j: usize, k: usize| i + px * (j + py * k);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let n = i + nx * (j + ny * k);
                s[at(i + 1, j + 1, k + 1)] = f(x[n], y[n])
                    + s[at(i, j + 1, k + 1)]
                    + s[at(i + 1, j, k + 1)]
                    + s[at(i + 1, j + 1, k)]
                    - s[at(i, j, k + 1)]
                    - s[at(i, j + 1, k)]
                    - s[at(i + 1, j, k)]
                    + s[at(i, j, k)];
            }
        }
    }
    s
}

fn box_total(s: &[f64], dims: [usize; 3], lo: [usize; 3], w: [usize; 3]) -> f64 {
    let (px, py) = (dims[0] + 1, dims[1] + 1);
    let at = |i: usize, j: usize, k: usize| s[i + px * (j + py * k)];
    let [i0, j0, k0] = lo;
    let [i1, j1, k1] = [i0 + w[0], j0 + w[1], k0 + w[2]];
    at(i1, j1, k1) - at(i0, j1, k1) - at(i1, j0, k1) - at(i1, j1, k0)
        + at(i0, j0, k1)
        + at(i0, j1, k0)
        + at(i1, j0, k0)
        - at(i0, j0, k0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins over `[lo, hi]`; the last bin is closed.
    pub fn new(values: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|b| lo + width * b as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            if v < lo || v > hi || !v.is_finite() {
                continue;
            }
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Self { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub mean_rmse: f64,
    pub mean_ssim: f64,
    /// Per sample, in `sample_ids` order.
    pub rmse: Vec<f64>,
    pub ssim: Vec<f64>,
    pub rmse_histogram: Histogram,
    pub ssim_histogram: Histogram,
}

/// Comparison of predicted against true responses, keyed by channel name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema: String,
    pub n_samples: usize,
    /// Whether the metrics were computed on normalized channels.
    pub normalized: bool,
    pub sample_ids: Vec<String>,
    pub channels: BTreeMap<String, ChannelReport>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub bins: usize,
    pub ssim: SsimParams,
    /// Use windowed SSIM with this window instead of the global form.
    pub window: Option<usize>,
    /// Compare normalized channels (the default); `None` compares raw units.
    pub normalization: Option<Normalization>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            bins: 20,
            ssim: SsimParams::default(),
            window: None,
            normalization: None,
        }
    }
}

/// Per-channel RMSE and SSIM of every predicted sample against the true
/// sample with the same id.
pub fn report(
    predicted: &[SampleRecord],
    truth: &[SampleRecord],
    options: &ReportOptions,
) -> Result<MetricReport> {
    if options.bins == 0 {
        return Err(invalid("histogram needs at least one bin"));
    }
    let index = |set: &[SampleRecord]| -> Result<BTreeMap<String, usize>> {
        let mut m = BTreeMap::new();
        for (n, r) in set.iter().enumerate() {
            if m.insert(r.meta.id.clone(), n).is_some() {
                return Err(invalid(format!("duplicate sample id {}", r.meta.id)));
            }
        }
        Ok(m)
    };
    let (pi, ti) = (index(predicted)?, index(truth)?);
    if pi.is_empty() {
        return Err(invalid("no samples to compare"));
    }
    if pi.keys().ne(ti.keys()) {
        return Err(invalid("predicted and true sample ids differ"));
    }
    let prepare = |r: &ResponseVolume| -> Result<ResponseVolume> {
        match &options.normalization {
            Some(n) => n.normalize_response(r),
            None => Ok(r.clone()),
        }
    };
    let mut per: BTreeMap<Channel, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (id, &p) in &pi {
        let (a, b) = (&predicted[p].response, &truth[ti[id]].response);
        if a.dims != b.dims {
            return Err(invalid(format!(
                "sample {id}: dims {:?} vs {:?}",
                a.dims, b.dims
            )));
        }
        let (a, b) = (prepare(a)?, prepare(b)?);
        for c in Channel::ALL {
            let (x, y) = (a.channel(c), b.channel(c));
            let s = match options.window {
                Some(w) => ssim_windowed(x, y, a.dims, w, &options.ssim)?,
                None => ssim(x, y, &options.ssim)?,
            };
            let e = per.entry(c).or_default();
            e.0.push(rmse(x, y)?);
            e.1.push(s);
        }
    }
    let n = pi.len();
    let channels = per
        .into_iter()
        .map(|(c, (r, s))| {
            let rmax = r.iter().fold(0.0f64, |a, &v| a.max(v));
            let rep = ChannelReport {
                mean_rmse: r.iter().sum::<f64>() / n as f64,
                mean_ssim: s.iter().sum::<f64>() / n as f64,
                rmse_histogram: Histogram::new(
                    &r,
                    0.0,
                    if rmax > 0.0 { rmax } else { 1.0 },
                    options.bins,
                ),
                ssim_histogram: Histogram::new(&s, -1.0, 1.0, options.bins),
                rmse: r,
                ssim: s,
            };
            (String::from(c.name()), rep)
        })
        .collect();
    Ok(MetricReport {
        schema: REPORT_SCHEMA.into(),
        n_samples: n,
        normalized: options.normalization.is_some(),
        sample_ids: pi.into_keys().collect(),
        channels,
    })
}
