//! Evaluation metrics: Chamfer (squared and L1), EMD, point-to-surface
//! distance and the multi-radius uniformity score.

mod chamfer;
mod emd;
mod p2f;
mod uniformity;

use std::fmt::Write as _;

use serde_json::{Map, Value};

pub use chamfer::{chamfer_l1, chamfer_l2, nearest_sq_distances};
pub use emd::{assignment_cost, auction, emd, hungarian, EmdResult, AUCTION_TARGET_GAP, EXACT_LIMIT};
pub use p2f::{
    closest_point_on_triangle, mesh_distance_brute, p2f, p2f_distances, point_triangle_distance, FaceBvh, P2fStats,
    TriangleMesh, BVH_MIN_FACES,
};
pub use uniformity::{
    clutter_term, default_num_seeds, expected_spacing, uniformity, DEFAULT_RADIUS_FRACTIONS, MAX_SEEDS,
};

use crate::error::{Error, Result};
use crate::geom::PointCloud;

/// Fixed-order pairwise summation; the result depends only on the input
/// order, never on thread count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub cd_l2: f64,
    pub cd_l1: f64,
    /// Absent when the clouds differ in size.
    pub emd: Option<f64>,
    pub p2f_mean: Option<f64>,
    pub p2f_max: Option<f64>,
    /// `(radius fraction, score)` pairs.
    pub uniformity: Vec<(f64, f64)>,
}

impl MetricsReport {
    /// Flat key/value pairs in a fixed order. Uniformity keys are
    /// `uniformity.<fraction>`.
    pub fn entries(&self) -> Vec<(String, f64)> {
        let mut out = vec![("cd_l2".to_string(), self.cd_l2), ("cd_l1".to_string(), self.cd_l1)];
        if let Some(e) = self.emd {
            out.push(("emd".into(), e));
        }
        if let Some(m) = self.p2f_mean {
            out.push(("p2f_mean".into(), m));
        }
        if let Some(m) = self.p2f_max {
            out.push(("p2f_max".into(), m));
        }
        for &(p, s) in &self.uniformity {
            out.push((format!("uniformity.{}", p), s));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (k, v) in self.entries() {
            map.insert(k, Value::from(v));
        }
        Value::Object(map)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("report values are finite")
    }

    /// One `key=value` line per entry.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            writeln!(s, "{}={}", k, v).unwrap();
        }
        s
    }

    fn from_entries(entries: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut cd_l2 = None;
        let mut cd_l1 = None;
        let mut report = MetricsReport {
            cd_l2: 0.0,
            cd_l1: 0.0,
            emd: None,
            p2f_mean: None,
            p2f_max: None,
            uniformity: Vec::new(),
        };
        for (k, v) in entries {
            match k.as_str() {
                "cd_l2" => cd_l2 = Some(v),
                "cd_l1" => cd_l1 = Some(v),
                "emd" => report.emd = Some(v),
                "p2f_mean" => report.p2f_mean = Some(v),
                "p2f_max" => report.p2f_max = Some(v),
                other => {
                    let frac = other
                        .strip_prefix("uniformity.")
                        .and_then(|f| f.parse::<f64>().ok())
                        .ok_or_else(|| Error::parse_line(0, format!("unknown report key '{}'", other)))?;
                    report.uniformity.push((frac, v));
                }
            }
        }
        report.cd_l2 = cd_l2.ok_or_else(|| Error::parse_line(0, "missing cd_l2"))?;
        report.cd_l1 = cd_l1.ok_or_else(|| Error::parse_line(0, "missing cd_l1"))?;
        Ok(report)
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let map = value
            .as_object()
            .ok_or_else(|| Error::parse_line(0, "report must be a JSON object"))?;
        let mut entries = Vec::with_capacity(map.len());
        for (k, v) in map {
            let x = v
                .as_f64()
                .ok_or_else(|| Error::parse_line(0, format!("value of '{}' is not a number", k)))?;
            entries.push((k.clone(), x));
        }
        // serde_json maps are key-sorted; restore the uniformity order.
        let mut report = Self::from_entries(entries)?;
        report.uniformity.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(report)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse_line(n + 1, "expected key=value"))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::parse_line(n + 1, format!("bad number '{}'", v)))?;
            entries.push((k.trim().to_string(), v));
        }
        Self::from_entries(entries)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub uniformity_fractions: Vec<f64>,
    /// Defaults to [`default_num_seeds`] of the prediction size.
    pub num_seeds: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            uniformity_fractions: DEFAULT_RADIUS_FRACTIONS.to_vec(),
            num_seeds: None,
        }
    }
}

/// Computes every metric of `pred` against `gt` (and `mesh`, when given).
/// Uniformity is measured on `pred` as passed in.
pub fn evaluate(
    pred: &PointCloud,
    gt: &PointCloud,
    mesh: Option<&TriangleMesh>,
    opts: &EvalOptions,
) -> Result<MetricsReport> {
    let cd_l2 = chamfer_l2(pred, gt)?;
    let cd_l1 = chamfer_l1(pred, gt)?;
    let emd = match emd(pred, gt) {
        Ok(r) => Some(r.value),
        Err(Error::SizeMismatch { .. }) => None,
        Err(e) => return Err(e),
    };
    let (p2f_mean, p2f_max) = match mesh {
        Some(m) => {
            let s = p2f(pred, m)?;
            (Some(s.mean), Some(s.max))
        }
        None => (None, None),
    };
    let uniformity = if opts.uniformity_fractions.is_empty() {
        Vec::new()
    } else {
        let seeds = opts.num_seeds.unwrap_or_else(|| default_num_seeds(pred.len()));
        uniformity(pred, &opts.uniformity_fractions, seeds)?
    };
    Ok(MetricsReport {
        cd_l2,
        cd_l1,
        emd,
        p2f_mean,
        p2f_max,
        uniformity,
    })
}
