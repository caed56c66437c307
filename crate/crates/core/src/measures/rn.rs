use serde::Serialize;

use crate::error::{Error, Result};

/// Cells whose reference mass is below this are excluded from the ratio.
pub const MASK_TOL: f64 = 1e-14;

/// Hat kernel: 1 on `[0,ε]`, `2 − r/ε` on `[ε,2ε]`, 0 beyond.
pub fn hat_kernel(eps: f64, r: f64) -> f64 {
    if r <= eps {
        1.0
    } else if r <= 2.0 * eps {
        2.0 - r / eps
    } else {
        0.0
    }
}

/// Density estimates `⟨m_g, κ_ε(·−x)⟩ / ⟨m_f, κ_ε(·−x)⟩` at cell centres.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RnDensity {
    pub n: usize,
    pub d: usize,
    pub eps: Vec<f64>,
    /// `values[e][cell]`, `None` on masked cells.
    pub values: Vec<Vec<Option<f64>>>,
    /// Value at the smallest ε.
    pub estimate: Vec<Option<f64>>,
    pub masked: usize,
}

impl RnDensity {
    /// Mean absolute deviation from `exact` over unmasked cells.
    pub fn masked_l1(&self, exact: impl Fn(&[f64]) -> f64) -> f64 {
        let h = 1.0 / self.n as f64;
        let mut sum = 0.0;
        let mut count = 0usize;
        for (i, v) in self.estimate.iter().enumerate() {
            if let Some(v) = v {
                sum += (v - exact(&cell_center(i, self.n, self.d, h))).abs();
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }
}

pub(crate) fn cell_center(mut idx: usize, n: usize, d: usize, h: f64) -> Vec<f64> {
    (0..d)
        .map(|_| {
            let i = idx % n;
            idx /= n;
            (i as f64 + 0.5) * h
        })
        .collect()
}

fn mollify(mass: &[f64], n: usize, d: usize, eps: f64, cell: usize) -> f64 {
    let h = 1.0 / n as f64;
    let reach = (2.0 * eps / h).ceil() as i64;
    let (lo, width) = if 2 * reach + 1 > n as i64 { (-(n as i64 / 2), n) } else { (-reach, (2 * reach + 1) as usize) };
    let mut base = vec![0i64; d];
    let mut rem = cell;
    for b in base.iter_mut() {
        *b = (rem % n) as i64;
        rem /= n;
    }
    let mut total = 0.0;
    for k in 0..width.pow(d as u32) {
        let mut rem = k;
        let mut r2 = 0.0;
        let mut target = 0usize;
        let mut stride = 1usize;
        for &b in &base {
            let off = (rem % width) as i64 + lo;
            rem /= width;
            r2 += (off as f64 * h).powi(2);
            target += (b + off).rem_euclid(n as i64) as usize * stride;
            stride *= n;
        }
        let w = hat_kernel(eps, r2.sqrt());
        if w > 0.0 {
            total += w * mass[target];
        }
    }
    total
}

/// Kernel estimate of `dm_g/dm_f` for cell masses on a periodic `n^d` grid.
/// The estimate is the value at the smallest ε of the ladder.
pub fn radon_nikodym(m_g: &[f64], m_f: &[f64], n: usize, d: usize, eps_ladder: &[f64]) -> Result<RnDensity> {
    let cells = n.checked_pow(d as u32).unwrap_or(0);
    if n == 0 || m_g.len() != cells || m_f.len() != cells {
        return Err(Error::Grid(format!(
            "mass fields of length {} and {} do not match {n}^{d} cells",
            m_g.len(),
            m_f.len()
        )));
    }
    if eps_ladder.is_empty() || eps_ladder.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Config("ε ladder must be nonempty and positive".into()));
    }
    if m_f.iter().any(|m| *m < 0.0) {
        return Err(Error::Measure("reference masses must be nonnegative".into()));
    }
    let masked = m_f.iter().filter(|m| **m < MASK_TOL).count();
    if masked == cells {
        return Err(Error::MaskedAll);
    }
    let values: Vec<Vec<Option<f64>>> = eps_ladder
        .iter()
        .map(|&eps| {
            (0..cells)
                .map(|c| {
                    if m_f[c] < MASK_TOL {
                        return None;
                    }
                    let den = mollify(m_f, n, d, eps, c);
                    Some(mollify(m_g, n, d, eps, c) / den)
                })
                .collect()
        })
        .collect();
    let smallest = eps_ladder
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(RnDensity {
        n,
        d,
        eps: eps_ladder.to_vec(),
        estimate: values[smallest].clone(),
        values,
        masked,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationReport {
    pub pass: bool,
    pub constant: f64,
    /// Largest `|m_g| / (C m_f)` over cells carrying `m_g` mass.
    pub worst_ratio: f64,
    pub worst_cell: Option<usize>,
    /// Largest `|m_g| − C m_f`, clipped below at zero.
    pub max_violation: f64,
}

/// Cellwise test of `|m_g| ≤ C m_f + 1e-12`.
pub fn check_domination(m_g: &[f64], m_f: &[f64], c: f64) -> Result<DominationReport> {
    if m_g.len() != m_f.len() {
        return Err(Error::Grid("mass fields live on different grids".into()));
    }
    let mut worst_ratio = 0.0f64;
    let mut worst_cell = None;
    let mut max_violation = 0.0f64;
    for (i, (g, f)) in m_g.iter().zip(m_f).enumerate() {
        let bound = c * f;
        max_violation = max_violation.max(g.abs() - bound);
        if g.abs() > 1e-12 {
            let ratio = if bound > 0.0 { g.abs() / bound } else { f64::INFINITY };
            if ratio > worst_ratio {
                worst_ratio = ratio;
                worst_cell = Some(i);
            }
        }
    }
    Ok(DominationReport { pass: max_violation <= 1e-12, constant: c, worst_ratio, worst_cell, max_violation })
}
