use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GridDomain;

/// The two singular weights: `1/|x|^2` and `1/d(x)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularKind {
    InverseSquare,
    Borderline,
}

impl SingularKind {
    pub fn name(self) -> &'static str {
        match self {
            SingularKind::InverseSquare => "inverse_square",
            SingularKind::Borderline => "borderline",
        }
    }

    /// Optimal Hardy constant `mu*` in dimension `n`.
    pub fn critical_constant(self, n: usize) -> Result<f64> {
        self.check_dimension(n)?;
        Ok(match self {
            SingularKind::InverseSquare => {
                let a = n as f64 - 2.0;
                a * a / 4.0
            }
            SingularKind::Borderline => 0.25,
        })
    }

    pub fn check_dimension(self, n: usize) -> Result<()> {
        let min = match self {
            SingularKind::InverseSquare => 3,
            SingularKind::Borderline => 2,
        };
        if n < min {
            return Err(Error::InvalidParameter(format!(
                "{} potential needs dimension >= {min}, got {n}",
                self.name()
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for SingularKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse_square" => Ok(SingularKind::InverseSquare),
            "borderline" => Ok(SingularKind::Borderline),
            _ => Err(Error::InvalidParameter(format!("unknown potential kind `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

/// Potential subtracted from the Laplacian: nothing, `mu/|x|^2` or `mu/d(x)^2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    #[default]
    None,
    InverseSquare {
        mu: f64,
    },
    Borderline {
        mu: f64,
    },
}

impl PotentialKind {
    pub fn new(kind: Option<SingularKind>, mu: f64) -> Self {
        match kind {
            None => PotentialKind::None,
            Some(SingularKind::InverseSquare) => PotentialKind::InverseSquare { mu },
            Some(SingularKind::Borderline) => PotentialKind::Borderline { mu },
        }
    }

    pub fn singular(&self) -> Option<(SingularKind, f64)> {
        match *self {
            PotentialKind::None => None,
            PotentialKind::InverseSquare { mu } => Some((SingularKind::InverseSquare, mu)),
            PotentialKind::Borderline { mu } => Some((SingularKind::Borderline, mu)),
        }
    }

    pub fn mu(&self) -> f64 {
        self.singular().map_or(0.0, |(_, mu)| mu)
    }

    /// True when the potential vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.mu() == 0.0
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some((kind, mu)) = self.singular() {
            kind.check_dimension(n)?;
            if !(mu >= 0.0 && mu.is_finite()) {
                return Err(Error::InvalidParameter(format!("mu must be >= 0, got {mu}")));
            }
        }
        Ok(())
    }

    pub fn criticality(&self, n: usize) -> Result<Criticality> {
        self.validate(n)?;
        let Some((kind, mu)) = self.singular() else {
            return Ok(Criticality::Subcritical);
        };
        let star = kind.critical_constant(n)?;
        Ok(if mu < star {
            Criticality::Subcritical
        } else if mu == star {
            Criticality::Critical
        } else {
            Criticality::Supercritical
        })
    }
}

/// Singular weight `1/|x_i|^2` or `1/d(x_i)^2` at every interior point.
/// Distances to the boundary are floored at `h/2`, the closest a node can
/// sit on the cell-centered lattice.
pub fn singular_weight(dom: &GridDomain, kind: SingularKind) -> Result<Vec<f64>> {
    kind.check_dimension(dom.dim())?;
    let base: Vec<f64> = match kind {
        SingularKind::InverseSquare => {
            if !dom.origin_inside() {
                return Err(Error::InvalidDomain(
                    "inverse-square potential needs the origin inside the domain".into(),
                ));
            }
            dom.radii()
        }
        SingularKind::Borderline => dom.distance_field().iter().map(|d| d.max(0.5 * dom.h())).collect(),
    };
    let tiny = 1e-12 * dom.h();
    base.into_iter()
        .enumerate()
        .map(|(i, r)| {
            if r > tiny {
                Ok(1.0 / (r * r))
            } else {
                Err(Error::InvalidDomain(format!(
                    "interior point {i} sits on the singularity of the {} weight",
                    kind.name()
                )))
            }
        })
        .collect()
}

const NO_NEIGHBOR: u32 = u32::MAX;

/// Finite-difference Schrödinger operator `scale * (-Delta_h - mu W)` on the
/// interior points of a grid, with Dirichlet nodes eliminated.
///
/// Stored as a diagonal plus a `2N` neighbor table sharing the constant
/// off-diagonal value, so symmetry is structural.
#[derive(Clone, Debug)]
pub struct SymmetricOperator {
    dim: usize,
    h: f64,
    scale: f64,
    diag: Vec<f64>,
    neighbors: Vec<u32>,
    off: f64,
    potential: PotentialKind,
    weight: Option<Vec<f64>>,
    tensor_counts: Option<Vec<usize>>,
}

/// Assemble `scale * (-Delta_h - V)` on `dom`.
pub fn assemble(dom: &GridDomain, pot: PotentialKind, scale: f64) -> Result<SymmetricOperator> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("operator scaling must be > 0, got {scale}")));
    }
    if dom.is_empty() {
        return Err(Error::EmptyInterior { h: dom.h() });
    }
    let n = dom.len();
    let dim = dom.dim();
    let len = u32::try_from(n).map_err(|_| Error::InvalidDomain("too many interior points".into()))?;
    debug_assert!(len < NO_NEIGHBOR);
    pot.validate(dim)?;
    let h2 = dom.h() * dom.h();
    let mut diag = vec![scale * 2.0 * dim as f64 / h2; n];
    let weight = match pot.singular() {
        Some((kind, mu)) if mu > 0.0 => {
            let w = singular_weight(dom, kind)?;
            diag.iter_mut().zip(&w).for_each(|(d, wi)| *d -= scale * mu * wi);
            Some(w)
        }
        _ => None,
    };
    let mut neighbors = vec![NO_NEIGHBOR; n * 2 * dim];
    for i in 0..n {
        for axis in 0..dim {
            for (s, forward) in [false, true].into_iter().enumerate() {
                if let Some(j) = dom.neighbor(i, axis, forward) {
                    neighbors[(i * dim + axis) * 2 + s] = j as u32;
                }
            }
        }
    }
    Ok(SymmetricOperator {
        dim,
        h: dom.h(),
        scale,
        diag,
        neighbors,
        off: -scale / h2,
        potential: pot,
        weight,
        tensor_counts: dom.is_tensor_box().then(|| dom.lattice_counts().to_vec()),
    })
}

impl SymmetricOperator {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn potential(&self) -> PotentialKind {
        self.potential
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// The common off-diagonal entry `-scale / h^2`.
    pub fn off_diagonal(&self) -> f64 {
        self.off
    }

    /// Singular weight (without `mu`), when a nonzero potential is present.
    pub fn weight(&self) -> Option<&[f64]> {
        self.weight.as_deref()
    }

    /// Lattice counts when the grid is a full tensor product.
    pub fn tensor_counts(&self) -> Option<&[usize]> {
        self.tensor_counts.as_deref()
    }

    /// True for a potential-free operator on a full tensor grid.
    pub fn is_separable(&self) -> bool {
        self.tensor_counts.is_some() && self.weight.is_none()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let w = 2 * self.dim;
        self.neighbors[i * w..(i + 1) * w]
            .iter()
            .filter(|&&j| j != NO_NEIGHBOR)
            .map(|&j| j as usize)
    }

    /// `y = A x`
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let w = 2 * self.dim;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for &j in &self.neighbors[i * w..(i + 1) * w] {
                if j != NO_NEIGHBOR {
                    s += x[j as usize];
                }
            }
            *yi = self.diag[i] * x[i] + self.off * s;
        }
    }

    /// `x^T A x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        super::linalg::dot(x, &y)
    }

    /// `||A v - lambda v||`
    pub fn residual(&self, v: &[f64], lambda: f64) -> f64 {
        let mut y = vec![0.0; v.len()];
        self.apply(v, &mut y);
        y.iter()
            .zip(v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if self.neighbors(i).any(|k| k == j) {
            self.off
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.len();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for j in self.neighbors(i) {
                m[(i, j)] = self.off;
            }
        }
        m
    }

    /// Largest `|i - j|` over nonzero entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.len())
            .flat_map(|i| self.neighbors(i).map(move |j| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// Gershgorin lower bound on the spectrum.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.len())
            .map(|i| self.diag[i] - self.off.abs() * self.neighbors(i).count() as f64)
            .fold(f64::INFINITY, f64::min)
    }

    /// Same stencil with the potential removed.
    pub fn laplacian(&self) -> SymmetricOperator {
        let base = self.scale * 2.0 * self.dim as f64 / (self.h * self.h);
        SymmetricOperator {
            diag: vec![base; self.len()],
            potential: PotentialKind::None,
            weight: None,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{discretize, DomainSpec};

    #[test]
    fn interval_stencil() {
        let dom = discretize(&DomainSpec::unit_interval(0.25)).unwrap();
        let a = assemble(&dom, PotentialKind::None, 1.0).unwrap();
        let d = a.to_dense();
        assert_eq!(d.nrows(), 3);
        for i in 0..3 {
            assert_eq!(d[(i, i)], 32.0);
        }
        assert_eq!(d[(0, 1)], -16.0);
        assert_eq!(d[(1, 2)], -16.0);
        assert_eq!(d[(0, 2)], 0.0);
    }

    #[test]
    fn zero_mu_matches_laplacian() {
        let dom = discretize(&DomainSpec::unit_cube(0.125).centered()).unwrap();
        let a = assemble(&dom, PotentialKind::None, 1.0).unwrap();
        let b = assemble(&dom, PotentialKind::InverseSquare { mu: 0.0 }, 1.0).unwrap();
        assert_eq!(a.to_dense(), b.to_dense());
    }

    #[test]
    fn exact_symmetry() {
        let dom = discretize(&DomainSpec::unit_disk(1.0 / 16.0)).unwrap();
        let a = assemble(&dom, PotentialKind::Borderline { mu: 0.2 }, 0.7).unwrap();
        let d = a.to_dense();
        assert_eq!(d, d.transpose());
    }

    #[test]
    fn borderline_disk_stays_positive() {
        let dom = discretize(&DomainSpec::unit_disk(1.0 / 16.0)).unwrap();
        let a = assemble(&dom, PotentialKind::Borderline { mu: 0.2 }, 1.0).unwrap();
        assert!(a.diagonal().iter().all(|d| *d > 0.0));
    }

    #[test]
    fn singular_diagonal() {
        let dom = discretize(&DomainSpec::unit_cube(0.25).centered()).unwrap();
        let a = assemble(&dom, PotentialKind::InverseSquare { mu: 0.1 }, 1.0).unwrap();
        let r = dom.radii();
        for i in 0..dom.len() {
            let want = 6.0 / 0.0625 - 0.1 / (r[i] * r[i]);
            assert!((a.diagonal()[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_potentials() {
        let sq = discretize(&DomainSpec::unit_square(0.25)).unwrap();
        assert!(assemble(&sq, PotentialKind::InverseSquare { mu: 0.1 }, 1.0).is_err());
        assert!(assemble(&sq, PotentialKind::Borderline { mu: -0.1 }, 1.0).is_err());
        assert!(assemble(&sq, PotentialKind::None, 0.0).is_err());
        let cube = discretize(&DomainSpec::unit_cube(0.25)).unwrap();
        // origin is a corner, not interior
        assert!(assemble(&cube, PotentialKind::InverseSquare { mu: 0.1 }, 1.0).is_err());
        let line = discretize(&DomainSpec::unit_interval(0.25)).unwrap();
        assert!(assemble(&line, PotentialKind::Borderline { mu: 0.1 }, 1.0).is_err());
    }

    #[test]
    fn criticality() {
        let p = PotentialKind::Borderline { mu: 0.25 };
        assert_eq!(p.criticality(2).unwrap(), Criticality::Critical);
        let p = PotentialKind::InverseSquare { mu: 0.1 };
        assert_eq!(p.criticality(3).unwrap(), Criticality::Subcritical);
        let p = PotentialKind::InverseSquare { mu: 0.3 };
        assert_eq!(p.criticality(3).unwrap(), Criticality::Supercritical);
        assert_eq!(SingularKind::InverseSquare.critical_constant(3).unwrap(), 0.25);
    }
}
