use serde::{Deserialize, Serialize};

use super::eigen::SpectrumResult;
use crate::bounds::{check_melas_c, li_yau_coefficient};
use crate::error::{Error, Result};
use crate::geometry::GridDomain;
use crate::CSV_SCHEMA;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Holds,
    /// Fails, but by less than the discretization tolerance.
    WithinTolerance,
    Violated,
}

impl RowStatus {
    fn classify(slack: f64, tol: f64) -> Self {
        if slack >= 0.0 {
            RowStatus::Holds
        } else if slack >= -tol {
            RowStatus::WithinTolerance
        } else {
            RowStatus::Violated
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Holds => "holds",
            RowStatus::WithinTolerance => "within_tolerance",
            RowStatus::Violated => "violated",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiYauRow {
    pub m: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub status: RowStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiYauReport {
    pub dim: usize,
    pub h: f64,
    pub volume: f64,
    pub tolerance_factor: f64,
    pub rows: Vec<LiYauRow>,
}

impl LiYauReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.status == RowStatus::Violated).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_SCHEMA}\nm,lhs,rhs,slack,tolerance,status\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.6e},{}\n",
                r.m,
                r.lhs,
                r.rhs,
                r.slack,
                r.tolerance,
                r.status.as_str()
            ));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MelasRow {
    pub m: usize,
    pub lhs: f64,
    pub li_yau: f64,
    pub correction: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub status: RowStatus,
    /// Largest `c` for which this row still holds.
    pub c_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MelasReport {
    pub dim: usize,
    pub h: f64,
    pub c: f64,
    pub c_limit: f64,
    pub volume: f64,
    pub inertia: f64,
    pub tolerance_factor: f64,
    pub rows: Vec<MelasRow>,
}

impl MelasReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.status == RowStatus::Violated).count()
    }

    /// Rows whose empirical `c*` reaches the admissible limit on `c`.
    pub fn rows_with_c_star_above_limit(&self) -> Vec<usize> {
        self.rows.iter().filter(|r| r.c_star >= self.c_limit).map(|r| r.m).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "{CSV_SCHEMA}\nm,lhs,li_yau,correction,rhs,slack,tolerance,status,c_star\n"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e},{},{:.12e}\n",
                r.m,
                r.lhs,
                r.li_yau,
                r.correction,
                r.rhs,
                r.slack,
                r.tolerance,
                r.status.as_str(),
                r.c_star
            ));
        }
        out
    }
}

fn check_spectrum(dom: &GridDomain, spec: &SpectrumResult, m_max: usize) -> Result<()> {
    if !spec.potential.is_zero() {
        return Err(Error::InvalidParameter(
            "eigenvalue-sum bounds need the spectrum of the pure Laplacian".into(),
        ));
    }
    if m_max == 0 || m_max > spec.len() {
        return Err(Error::InvalidParameter(format!(
            "m_max = {m_max} but only {} eigenvalues are available",
            spec.len()
        )));
    }
    if spec.dim != dom.dim() {
        return Err(Error::InvalidParameter("spectrum and domain dimensions differ".into()));
    }
    Ok(())
}

/// Compare partial eigenvalue sums with `N C_N/(N+2) |Omega|^{-2/N} m^{(N+2)/N}`.
/// Rows failing by less than `k * h^2 * lambda_m` are discretization artifacts.
pub fn verify_li_yau(dom: &GridDomain, spec: &SpectrumResult, m_max: usize, k: f64) -> Result<LiYauReport> {
    check_spectrum(dom, spec, m_max)?;
    let n = dom.dim() as f64;
    let vol = dom.volume();
    let beta = li_yau_coefficient(dom.dim());
    let h2 = dom.h() * dom.h();
    let mut lhs = 0.0;
    let rows = (1..=m_max)
        .map(|m| {
            lhs += spec.eigenvalues[m - 1];
            let rhs = beta * vol.powf(-2.0 / n) * (m as f64).powf((n + 2.0) / n);
            let slack = lhs - rhs;
            let tolerance = k * h2 * spec.eigenvalues[m - 1];
            LiYauRow {
                m,
                lhs,
                rhs,
                slack,
                tolerance,
                status: RowStatus::classify(slack, tolerance),
            }
        })
        .collect();
    Ok(LiYauReport {
        dim: dom.dim(),
        h: dom.h(),
        volume: vol,
        tolerance_factor: k,
        rows,
    })
}

/// Li-Yau plus the inertia correction `c/(N+2) (|Omega|/I) m`.
pub fn verify_melas(
    dom: &GridDomain,
    spec: &SpectrumResult,
    m_max: usize,
    c: f64,
    k: f64,
) -> Result<MelasReport> {
    check_melas_c(dom.dim(), c)?;
    let li = verify_li_yau(dom, spec, m_max, k)?;
    let n = dom.dim() as f64;
    let inertia = dom.moment_of_inertia();
    let ratio = li.volume / inertia;
    let m_n = c / (n + 2.0);
    let rows = li
        .rows
        .iter()
        .map(|r| {
            let correction = m_n * ratio * r.m as f64;
            let rhs = r.rhs + correction;
            let slack = r.lhs - rhs;
            MelasRow {
                m: r.m,
                lhs: r.lhs,
                li_yau: r.rhs,
                correction,
                rhs,
                slack,
                tolerance: r.tolerance,
                status: RowStatus::classify(slack, r.tolerance),
                c_star: (r.lhs - r.rhs) * (n + 2.0) / (ratio * r.m as f64),
            }
        })
        .collect();
    Ok(MelasReport {
        dim: dom.dim(),
        h: dom.h(),
        c,
        c_limit: crate::bounds::melas_c_limit(dom.dim()),
        volume: li.volume,
        inertia,
        tolerance_factor: k,
        rows,
    })
}

/// Power law `lambda_j ~ A j^p` fitted over `j_min..=j_max` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub j_min: usize,
    pub j_max: usize,
}

/// Least-squares fit of `log lambda_j` against `log j`.
pub fn weyl_fit(spec: &SpectrumResult, j_min: usize, j_max: usize) -> Result<WeylFit> {
    if j_min < 5 {
        return Err(Error::InvalidParameter(format!("j_min must be >= 5, got {j_min}")));
    }
    if j_max > spec.len() {
        return Err(Error::InvalidParameter(format!(
            "j_max = {j_max} exceeds the {} computed eigenvalues",
            spec.len()
        )));
    }
    if j_max < j_min + 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 5 points, got {}",
            (j_max + 1).saturating_sub(j_min)
        )));
    }
    let pts: Vec<(f64, f64)> = (j_min..=j_max)
        .map(|j| {
            let l = spec.eigenvalues[j - 1];
            if l > 0.0 {
                Ok(((j as f64).ln(), l.ln()))
            } else {
                Err(Error::InvalidParameter(format!("eigenvalue {j} is not positive")))
            }
        })
        .collect::<Result<_>>()?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let exponent = sxy / sxx;
    Ok(WeylFit {
        exponent,
        prefactor: (my - exponent * mx).exp(),
        j_min,
        j_max,
    })
}
