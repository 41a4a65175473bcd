//! Closed-form constants, thresholds and attractor-dimension bounds.
//!
//! Everything here is a pure function of the problem parameters and of the
//! domain functionals (volume, moment of inertia and their ratio `R`).

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::spectral::{norm_equivalence, SingularKind};
use crate::CSV_SCHEMA;

pub const DEFAULT_MELAS_C: f64 = 1.0 / 24.0;

/// Odd polynomial nonlinearity `f(s) = sum_k b_k s^k`, `k = 1..=2g-1`.
///
/// `coefficients[k - 1]` is `b_k`. The empty list is `f = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Nonlinearity {
    coefficients: Vec<f64>,
}

impl Nonlinearity {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        let deg = coefficients.len();
        if deg == 0 || deg % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "nonlinearity must have odd degree, got {} coefficients",
                deg
            )));
        }
        if coefficients.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter("nonlinearity coefficients must be finite".into()));
        }
        if !(coefficients[deg - 1] > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "leading coefficient must be > 0, got {}",
                coefficients[deg - 1]
            )));
        }
        Ok(Nonlinearity { coefficients })
    }

    /// `f = 0`, for heat-flow experiments.
    pub fn zero() -> Self {
        Nonlinearity {
            coefficients: Vec::new(),
        }
    }

    /// `f(s) = s^3 - s`.
    pub fn allen_cahn() -> Self {
        Nonlinearity {
            coefficients: vec![-1.0, 0.0, 1.0],
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len()
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, b| (acc + b) * s)
    }

    pub fn derivative(&self, s: f64) -> f64 {
        horner(&self.derivative_poly(), s)
    }

    /// Ascending coefficients of `f'`.
    fn derivative_poly(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, b)| b * (k + 1) as f64)
            .collect()
    }
}

impl TryFrom<Vec<f64>> for Nonlinearity {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        if v.is_empty() {
            Ok(Nonlinearity::zero())
        } else {
            Nonlinearity::new(v)
        }
    }
}

impl From<Nonlinearity> for Vec<f64> {
    fn from(f: Nonlinearity) -> Vec<f64> {
        f.coefficients
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, b) in self.coefficients.iter().enumerate().rev() {
            if *b == 0.0 {
                continue;
            }
            let sign = if *b < 0.0 { "-" } else if first { "" } else { "+" };
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{sign}")?;
            if !first {
                write!(f, " ")?;
            }
            let a = b.abs();
            if a != 1.0 {
                write!(f, "{a}*")?;
            }
            match k + 1 {
                1 => write!(f, "s")?,
                p => write!(f, "s^{p}")?,
            }
            first = false;
        }
        Ok(())
    }
}

fn horner(p: &[f64], s: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

fn differentiate(p: &[f64]) -> Vec<f64> {
    p.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect()
}

/// Sorted real roots of the polynomial with ascending coefficients `p`.
fn real_roots(p: &[f64]) -> Vec<f64> {
    let mut p = p.to_vec();
    while p.last() == Some(&0.0) {
        p.pop();
    }
    if p.len() <= 1 {
        return Vec::new();
    }
    let lead = *p.last().unwrap();
    let bound = 1.0 + p[..p.len() - 1].iter().map(|c| (c / lead).abs()).fold(0.0, f64::max);
    // Between consecutive critical points p is monotone.
    let mut knots = vec![-bound];
    knots.extend(real_roots(&differentiate(&p)).into_iter().filter(|x| x.abs() < bound));
    knots.push(bound);
    let mut roots: Vec<f64> = Vec::new();
    for w in knots.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (mut fa, fb) = (horner(&p, a), horner(&p, b));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid == a || mid == b {
                break;
            }
            let fm = horner(&p, mid);
            if fm == 0.0 {
                a = mid;
                b = mid;
                break;
            }
            if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        roots.push(0.5 * (a + b));
    }
    if horner(&p, bound) == 0.0 {
        roots.push(bound);
    }
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * bound);
    roots
}

/// Smallest `kappa >= 0` with `f'(s) >= -kappa` for all real `s`.
pub fn kappa(f: &Nonlinearity) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    let d = f.derivative_poly();
    let mut min = horner(&d, 0.0);
    for s in real_roots(&differentiate(&d)) {
        min = min.min(horner(&d, s));
    }
    (-min).max(0.0)
}

/// `kappa` by scanning `f'` on `points` evenly spaced nodes of `[-S, S]`,
/// `S` bounding every critical point of `f'`, then rescanning a few cells
/// around each discrete local minimum.
pub fn kappa_by_scan(f: &Nonlinearity, points: usize) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    let d = f.derivative_poly();
    let dd = differentiate(&d);
    let s = match dd.last() {
        Some(&lead) if lead != 0.0 => {
            1.0 + dd[..dd.len() - 1].iter().map(|c| (c / lead).abs()).fold(0.0, f64::max)
        }
        _ => 1.0,
    };
    let points = points.max(3);
    let scan = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
        let step = (hi - lo) / (points - 1) as f64;
        (0..points)
            .map(|i| {
                let x = lo + i as f64 * step;
                (x, horner(&d, x))
            })
            .collect()
    };
    let mut min = horner(&d, 0.0);
    let coarse = scan(-s, s);
    let step = 2.0 * s / (points - 1) as f64;
    for i in 0..points {
        let here = coarse[i].1;
        let left = if i > 0 { coarse[i - 1].1 } else { f64::INFINITY };
        let right = if i + 1 < points { coarse[i + 1].1 } else { f64::INFINITY };
        min = min.min(here);
        if d.len() > 1 && here < left && here <= right {
            let (mut lo, mut hi) = (coarse[i].0 - step, coarse[i].0 + step);
            for _ in 0..3 {
                let fine = scan(lo, hi);
                let best = fine.iter().copied().fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
                min = min.min(best.1);
                let w = (hi - lo) / (points - 1) as f64;
                lo = best.0 - w;
                hi = best.0 + w;
            }
        }
    }
    (-min).max(0.0)
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Weyl constant `C_N = (2 pi)^2 omega_N^{-2/N}`.
pub fn weyl_constant(n: usize) -> f64 {
    (2.0 * PI).powi(2) * unit_ball_volume(n).powf(-2.0 / n as f64)
}

/// Exclusive upper limit `(2 pi)^2 omega_N^{-4/N}` on the Melas constant `c`.
pub fn melas_c_limit(n: usize) -> f64 {
    (2.0 * PI).powi(2) * unit_ball_volume(n).powf(-4.0 / n as f64)
}

/// `N C_N / (N + 2)`, the Li-Yau coefficient.
pub fn li_yau_coefficient(n: usize) -> f64 {
    n as f64 * weyl_constant(n) / (n as f64 + 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralConstants {
    pub omega_n: f64,
    pub c_n: f64,
    pub m_n: f64,
}

pub fn check_melas_c(n: usize, c: f64) -> Result<()> {
    let limit = melas_c_limit(n);
    if !(c > 0.0 && c < limit) {
        return Err(Error::InvalidParameter(format!(
            "Melas constant c = {c} outside (0, {limit}) for N = {n}"
        )));
    }
    Ok(())
}

pub fn structural_constants(n: usize, c: f64) -> Result<StructuralConstants> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    check_melas_c(n, c)?;
    Ok(StructuralConstants {
        omega_n: unit_ball_volume(n),
        c_n: weyl_constant(n),
        m_n: c / (n as f64 + 2.0),
    })
}

/// Which closed form applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    /// `delta = 0`.
    Classical,
    InverseSquare,
    Borderline,
}

/// Parameters of `phi_t - nu Delta phi - V phi + f(phi) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub nu: f64,
    pub delta: f64,
    pub potential: Option<SingularKind>,
    pub f: Nonlinearity,
    pub dim: usize,
    pub melas_c: f64,
    /// Integrability exponent for the critical inverse-square formula.
    pub q: Option<f64>,
    /// User-supplied constant of the critical formulas.
    pub c1: Option<f64>,
}

impl ProblemParams {
    pub fn new(dim: usize, nu: f64, f: Nonlinearity) -> Self {
        ProblemParams {
            nu,
            delta: 0.0,
            potential: None,
            f,
            dim,
            melas_c: DEFAULT_MELAS_C,
            q: None,
            c1: None,
        }
    }

    pub fn with_potential(mut self, kind: SingularKind, delta: f64) -> Self {
        self.potential = Some(kind);
        self.delta = delta;
        self
    }

    pub fn with_melas_c(mut self, c: f64) -> Self {
        self.melas_c = c;
        self
    }

    /// `mu = delta / nu`.
    pub fn mu(&self) -> f64 {
        self.delta / self.nu
    }

    pub fn mu_star(&self) -> Option<f64> {
        self.potential.and_then(|k| k.critical_constant(self.dim).ok())
    }

    pub fn formula(&self) -> Formula {
        match self.potential {
            _ if self.delta == 0.0 => Formula::Classical,
            Some(SingularKind::InverseSquare) => Formula::InverseSquare,
            Some(SingularKind::Borderline) => Formula::Borderline,
            None => Formula::Classical,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("nu must be > 0, got {}", self.nu)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be >= 0, got {}", self.delta)));
        }
        match self.potential {
            Some(k) => k.check_dimension(self.dim)?,
            None if self.delta > 0.0 => {
                return Err(Error::InvalidParameter("delta > 0 needs a potential kind".into()))
            }
            None => {}
        }
        check_melas_c(self.dim, self.melas_c)
    }

    /// Validate and require `mu < mu*`.
    pub fn check_subcritical(&self) -> Result<()> {
        self.validate()?;
        if let (Some(kind), Some(star)) = (self.potential, self.mu_star()) {
            let mu = self.mu();
            if self.delta > 0.0 && mu >= star {
                return Err(Error::Critical {
                    kind: kind.name(),
                    mu,
                    mu_star: star,
                });
            }
        }
        Ok(())
    }

    /// `C_mu`, equal to 1 without a potential.
    pub fn c_mu(&self) -> Result<f64> {
        match self.potential {
            Some(kind) if self.delta > 0.0 => norm_equivalence(self.mu(), kind, self.dim),
            _ => Ok(1.0),
        }
    }

    pub fn kappa(&self) -> f64 {
        kappa(&self.f)
    }
}

/// `R_thresh`: for `R(Omega) >= R_thresh` the attractor has dimension <= 1.
pub fn threshold(p: &ProblemParams) -> Result<f64> {
    p.check_subcritical()?;
    let k = p.kappa();
    if k == 0.0 {
        return Ok(0.0);
    }
    let m_n = p.melas_c / (p.dim as f64 + 2.0);
    Ok(match p.formula() {
        Formula::Classical => k / (m_n * p.nu),
        Formula::InverseSquare => {
            let star = p.mu_star().unwrap();
            k * star / (m_n * (star * p.nu - p.delta))
        }
        Formula::Borderline => k / (m_n * (p.nu - 4.0 * p.delta)),
    })
}

/// The classical threshold as printed, `M_N kappa / nu`. Kept for reference
/// only: it does not match the branch condition `kappa/nu - M_N R <= 0`.
pub fn printed_classical_threshold(p: &ProblemParams) -> Result<f64> {
    p.validate()?;
    Ok(p.melas_c / (p.dim as f64 + 2.0) * p.kappa() / p.nu)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "dim<=1")]
    AtMostOne,
    #[serde(rename = "dim<=d0")]
    AtMostD0,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::AtMostOne => "dim<=1",
            Regime::AtMostD0 => "dim<=d0",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub formula: Formula,
    pub dim: usize,
    pub nu: f64,
    pub delta: f64,
    pub mu: f64,
    pub kappa: f64,
    pub omega_n: f64,
    pub c_n: f64,
    pub m_n: f64,
    pub c_mu: f64,
    pub nu1: f64,
    pub kappa1: f64,
    pub volume: f64,
    pub inertia: f64,
    pub ratio: f64,
    pub r_thresh: f64,
    /// The classical threshold in its printed form `M_N kappa / nu`.
    pub r_thresh_printed: Option<f64>,
    pub regime: Regime,
    pub d0: f64,
}

impl BoundsReport {
    pub const CSV_COLUMNS: &'static str = "formula,dim,nu,delta,mu,kappa,omega_n,c_n,m_n,c_mu,nu1,kappa1,volume,inertia,ratio,r_thresh,regime,d0";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            serde_json::to_value(self.formula).unwrap().as_str().unwrap(),
            self.dim,
            self.nu,
            self.delta,
            self.mu,
            self.kappa,
            self.omega_n,
            self.c_n,
            self.m_n,
            self.c_mu,
            self.nu1,
            self.kappa1,
            self.volume,
            self.inertia,
            self.ratio,
            self.r_thresh,
            self.regime.as_str(),
            self.d0
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{CSV_SCHEMA}\n{}\n{}\n", Self::CSV_COLUMNS, self.csv_row())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// True when the attractor-dimension bound is `ceil(d0)` or 1.
    pub fn dimension_cap(&self) -> f64 {
        match self.regime {
            Regime::AtMostOne => 1.0,
            Regime::AtMostD0 => self.d0.ceil().max(1.0),
        }
    }
}

pub fn dimension_bound(p: &ProblemParams, geom: &Geometry) -> Result<BoundsReport> {
    p.check_subcritical()?;
    if !(geom.ratio > 0.0 && geom.volume > 0.0 && geom.inertia > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "geometry must be positive (volume {}, inertia {}, ratio {})",
            geom.volume, geom.inertia, geom.ratio
        )));
    }
    let n = p.dim;
    let sc = structural_constants(n, p.melas_c)?;
    let kappa = p.kappa();
    let c_mu = p.c_mu()?;
    let nu1 = p.nu * c_mu;
    let mut kappa1 = kappa - nu1 * sc.m_n * geom.ratio;
    if kappa1.abs() <= 1e-12 * kappa.max(f64::MIN_POSITIVE) {
        kappa1 = 0.0;
    }
    let r_thresh = threshold(p)?;
    let (regime, d0) = if kappa1 <= 0.0 {
        (Regime::AtMostOne, 0.0)
    } else {
        let beta = n as f64 * sc.c_n / (n as f64 + 2.0);
        let half = n as f64 / 2.0;
        (Regime::AtMostD0, beta.powf(-half) * (kappa1 / nu1).powf(half) * geom.volume)
    };
    Ok(BoundsReport {
        formula: p.formula(),
        dim: n,
        nu: p.nu,
        delta: p.delta,
        mu: p.mu(),
        kappa,
        omega_n: sc.omega_n,
        c_n: sc.c_n,
        m_n: sc.m_n,
        c_mu,
        nu1,
        kappa1,
        volume: geom.volume,
        inertia: geom.inertia,
        ratio: geom.ratio,
        r_thresh,
        r_thresh_printed: (p.formula() == Formula::Classical)
            .then(|| printed_classical_threshold(p))
            .transpose()?,
        regime,
        d0,
    })
}

/// `d0` through the closed form stated for each case, written in terms of
/// the original parameters rather than `nu1`, `kappa1`. Zero when the bracket
/// is nonpositive.
pub fn d0_closed_form(p: &ProblemParams, geom: &Geometry) -> Result<f64> {
    p.check_subcritical()?;
    let n = p.dim as f64;
    let sc = structural_constants(p.dim, p.melas_c)?;
    let k = p.kappa();
    let bracket = match p.formula() {
        Formula::Classical => k / p.nu - sc.m_n * geom.ratio,
        Formula::InverseSquare => {
            let star = p.mu_star().unwrap();
            k * star / (star * p.nu - p.delta) - sc.m_n * geom.ratio
        }
        Formula::Borderline => k / (p.nu - 4.0 * p.delta) - sc.m_n * geom.ratio,
    };
    if bracket <= 0.0 {
        return Ok(0.0);
    }
    Ok(((n + 2.0) / (n * sc.c_n)).powf(n / 2.0) * bracket.powf(n / 2.0) * geom.volume)
}

/// Upper bound on the trace of the linearization over an `m`-dimensional
/// subspace: `-nu1 beta |Omega|^{-2/N} m^{(N+2)/N} - nu1 M_N R m + kappa m`.
pub fn trace_bound(p: &ProblemParams, geom: &Geometry, m: f64) -> Result<f64> {
    p.check_subcritical()?;
    let n = p.dim as f64;
    let sc = structural_constants(p.dim, p.melas_c)?;
    let nu1 = p.nu * p.c_mu()?;
    let beta = n * sc.c_n / (n + 2.0);
    Ok(-nu1 * beta * geom.volume.powf(-2.0 / n) * m.powf((n + 2.0) / n) - nu1 * sc.m_n * geom.ratio * m
        + p.kappa() * m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusivityRegime {
    /// `kappa1 <= 0`: dimension at most one.
    Large,
    /// `kappa1 > 0`: the `d0` bound applies.
    Small,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusivityCondition {
    pub regime: DiffusivityRegime,
    pub kappa1: f64,
    /// Truth of `(M_N / R) kappa <= nu` as printed.
    pub printed_holds: bool,
    /// Truth of `kappa / (M_N R) <= nu`, equivalent to `kappa1 <= 0`.
    pub consistent_holds: bool,
}

pub fn diffusivity_condition(p: &ProblemParams, geom: &Geometry) -> Result<DiffusivityCondition> {
    if p.delta != 0.0 {
        return Err(Error::InvalidParameter(
            "the diffusivity dichotomy is stated for delta = 0".into(),
        ));
    }
    let report = dimension_bound(p, geom)?;
    let k = report.kappa;
    Ok(DiffusivityCondition {
        regime: if report.kappa1 <= 0.0 {
            DiffusivityRegime::Large
        } else {
            DiffusivityRegime::Small
        },
        kappa1: report.kappa1,
        printed_holds: report.m_n / geom.ratio * k <= p.nu,
        consistent_holds: k / (report.m_n * geom.ratio) <= p.nu,
    })
}

/// `Nq / (Nq - 2N + 2q)`, the exponent of the critical inverse-square bound.
pub fn critical_exponent(n: usize, q: f64) -> Result<f64> {
    let nf = n as f64;
    let lo = 2.0 * nf / (nf + 2.0);
    if !(q > lo && q < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "q = {q} must lie in ({lo}, 2) for N = {n}"
        )));
    }
    Ok(nf * q / (nf * q - 2.0 * nf + 2.0 * q))
}

/// Reciprocal of [`critical_exponent`]: the eigenvalue growth exponent
/// `(Nq - 2N + 2q) / (Nq)` of the critical operators.
pub fn critical_weyl_exponent(n: usize, q: f64) -> Result<f64> {
    critical_exponent(n, q).map(|e| 1.0 / e)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalBound {
    /// `Nq / (Nq - 2N + 2q)` when `q` was given.
    pub exponent: Option<f64>,
    /// `C1^{-e} (kappa/nu)^e |Omega|`.
    pub d0_tilde: Option<f64>,
    /// `C1^{-N/2} (kappa/nu)^{N/2} |Omega|`, borderline with `N >= 3`.
    pub d0_tilde_half: Option<f64>,
}

/// Dimension bounds for the critical case `mu = mu*`. `C1` (and `q`) are
/// unknown constants supplied by the caller.
pub fn critical_dimension_bound(p: &ProblemParams, volume: f64, c1: f64) -> Result<CriticalBound> {
    p.validate()?;
    if !(c1 > 0.0) {
        return Err(Error::InvalidParameter(format!("C1 must be > 0, got {c1}")));
    }
    let Some(kind) = p.potential else {
        return Err(Error::InvalidParameter("critical bounds need a potential kind".into()));
    };
    let star = kind.critical_constant(p.dim)?;
    if (p.mu() - star).abs() > 1e-12 * star {
        return Err(Error::InvalidParameter(format!(
            "critical bounds need mu = mu* = {star}, got {}",
            p.mu()
        )));
    }
    let ratio = p.kappa() / p.nu;
    let (exponent, d0_tilde) = match p.q {
        Some(q) => {
            let e = critical_exponent(p.dim, q)?;
            (Some(e), Some(c1.powf(-e) * ratio.powf(e) * volume))
        }
        None => (None, None),
    };
    let d0_tilde_half = (kind == SingularKind::Borderline && p.dim >= 3).then(|| {
        let e = p.dim as f64 / 2.0;
        c1.powf(-e) * ratio.powf(e) * volume
    });
    if d0_tilde.is_none() && d0_tilde_half.is_none() {
        return Err(Error::InvalidParameter(
            "this critical case needs an exponent q".into(),
        ));
    }
    Ok(CriticalBound {
        exponent,
        d0_tilde,
        d0_tilde_half,
    })
}
