//! Trajectory samples shared by the discrete, continuum and analytic pipelines.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::poset::Side;

/// Fixed CSV header. `side` and `gap` are empty for continuum rows.
pub const CSV_HEADER: &str = "tau,t,x,v,k,side,gap";

/// One sample along a worldline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub tau: f64,
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub k: f64,
    /// `ln k`; kept separately because `k` and `v` saturate at large rapidity.
    pub rapidity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<u64>,
}

impl TrajectoryPoint {
    /// A continuum sample from position and (possibly unnormalized) proper velocity.
    pub fn from_velocity(tau: f64, t: f64, x: f64, u_t: f64, u_x: f64) -> Self {
        let rapidity = 0.5 * ((u_t + u_x) / (u_t - u_x)).ln();
        Self {
            tau,
            t,
            x,
            v: u_x / u_t,
            k: rapidity.exp(),
            rapidity,
            side: None,
            gap: None,
        }
    }

    /// A sample at rapidity `φ`.
    pub fn from_rapidity(tau: f64, t: f64, x: f64, rapidity: f64) -> Self {
        Self {
            tau,
            t,
            x,
            v: rapidity.tanh(),
            k: rapidity.exp(),
            rapidity,
            side: None,
            gap: None,
        }
    }
}

pub fn write_csv<W: Write>(mut out: W, points: &[TrajectoryPoint]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for p in points {
        let side = p.side.map(Side::as_str).unwrap_or("");
        let gap = p.gap.map(|g| g.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{},{side},{gap}", p.tau, p.t, p.x, p.v, p.k)?;
    }
    Ok(())
}

pub fn to_csv_string(points: &[TrajectoryPoint]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, points).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// JSON array of records. Non-finite values serialize as `null`.
pub fn to_json_string(points: &[TrajectoryPoint]) -> String {
    serde_json::to_string_pretty(points).expect("trajectory serializes")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub samples: usize,
}

/// Ordinary least squares `y = slope·x + intercept`; `None` with fewer than
/// two distinct abscissae or non-finite input.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&x, &y) in xs[..n].iter().zip(&ys[..n]) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if !(sxx > 0.0) || !sxy.is_finite() {
        return None;
    }
    let slope = sxy / sxx;
    Some(LineFit {
        slope,
        intercept: my - slope * mx,
        samples: n,
    })
}

/// Least-squares rapidity-versus-proper-time slope: the proper acceleration
/// for hyperbolic motion.
pub fn fit_rapidity_slope(points: &[TrajectoryPoint]) -> Option<LineFit> {
    let xs: Vec<f64> = points.iter().map(|p| p.tau).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.rapidity).collect();
    fit_line(&xs, &ys)
}
