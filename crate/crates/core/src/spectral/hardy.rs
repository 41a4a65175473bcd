use serde::{Deserialize, Serialize};

use super::eigen::{ShiftedInverse, DEFAULT_SEED};
use super::lanczos::{self, Check, LanczosConfig};
use super::operator::{assemble, singular_weight, PotentialKind, SingularKind};
use crate::error::{Error, Result};
use crate::geometry::GridDomain;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyProbe {
    pub kind: SingularKind,
    pub quotient: f64,
    pub mu_star: f64,
    /// `||L u - q W u|| / (q ||W u||)` for the computed minimizer.
    pub relative_residual: f64,
    pub applications: usize,
    pub h: f64,
}

/// Discrete best Hardy constant: smallest `q` with `-Delta_h u = q W u`.
pub fn hardy_quotient(dom: &GridDomain, kind: SingularKind) -> Result<f64> {
    hardy_probe(dom, kind, 1e-9).map(|p| p.quotient)
}

/// [`hardy_quotient`] with diagnostics. The pencil is reduced to the
/// largest eigenvalue `1/q` of `W^{1/2} L^{-1} W^{1/2}`.
pub fn hardy_probe(dom: &GridDomain, kind: SingularKind, tol: f64) -> Result<HardyProbe> {
    let mu_star = kind.critical_constant(dom.dim())?;
    let w = singular_weight(dom, kind)?;
    let lap = assemble(dom, PotentialKind::None, 1.0)?;
    let (inv, sigma) = ShiftedInverse::new(&lap)?;
    if sigma != 0.0 {
        return Err(Error::InvalidParameter("Laplacian is not positive definite".into()));
    }
    let n = lap.len();
    let sqrt_w: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let mut buf = vec![0.0; n];
    let minimizer = |y: &[f64]| -> Vec<f64> { y.iter().zip(&sqrt_w).map(|(a, b)| a / b).collect() };
    let residual = |u: &[f64]| -> (f64, f64) {
        let mut lu = vec![0.0; n];
        lap.apply(u, &mut lu);
        let num: f64 = u.iter().zip(&lu).map(|(a, b)| a * b).sum();
        let den: f64 = u.iter().zip(&w).map(|(a, b)| a * a * b).sum();
        let q = num / den;
        let r: f64 = lu.iter().zip(u.iter().zip(&w)).map(|(l, (a, b))| (l - q * b * a).powi(2)).sum();
        let wu: f64 = u.iter().zip(&w).map(|(a, b)| (a * b).powi(2)).sum();
        (q, r.sqrt() / (q * wu.sqrt()))
    };
    let cfg = LanczosConfig {
        block: 1,
        ..LanczosConfig::for_count(n, 1, DEFAULT_SEED, tol * 0.1)
    };
    let ritz = lanczos::largest(
        n,
        1,
        cfg,
        |x, y| {
            for i in 0..n {
                buf[i] = x[i] * sqrt_w[i];
            }
            inv.solve(&buf, y)?;
            y.iter_mut().zip(&sqrt_w).for_each(|(v, s)| *v *= s);
            Ok(())
        },
        |_, vectors| {
            let (_, r) = residual(&minimizer(&vectors[0]));
            Ok(if r <= tol { Check::Accept } else { Check::Refine })
        },
    )?;
    let (quotient, relative_residual) = residual(&minimizer(&ritz.vectors[0]));
    Ok(HardyProbe {
        kind,
        quotient,
        mu_star,
        relative_residual,
        applications: ritz.applications,
        h: dom.h(),
    })
}

/// `C_mu = 1 - mu/mu*`, the equivalence constant between the Schrödinger
/// form and the Dirichlet form.
pub fn norm_equivalence(mu: f64, kind: SingularKind, n: usize) -> Result<f64> {
    let star = kind.critical_constant(n)?;
    if !(mu >= 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be >= 0, got {mu}")));
    }
    if mu >= star {
        return Err(Error::Critical {
            kind: kind.name(),
            mu,
            mu_star: star,
        });
    }
    Ok(1.0 - mu / star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{discretize, DomainSpec};

    #[test]
    fn equivalence_constants() {
        assert_eq!(norm_equivalence(0.5, SingularKind::InverseSquare, 4).unwrap(), 0.5);
        assert_eq!(norm_equivalence(0.125, SingularKind::Borderline, 2).unwrap(), 0.5);
        assert_eq!(norm_equivalence(0.0, SingularKind::Borderline, 3).unwrap(), 1.0);
        assert!(matches!(
            norm_equivalence(0.25, SingularKind::InverseSquare, 3),
            Err(Error::Critical { .. })
        ));
        assert!(norm_equivalence(0.1, SingularKind::InverseSquare, 2).is_err());
    }

    #[test]
    fn square_borderline_quotient_decreases_toward_quarter() {
        let coarse = discretize(&DomainSpec::unit_square(1.0 / 16.0)).unwrap();
        let fine = discretize(&DomainSpec::unit_square(1.0 / 32.0)).unwrap();
        let a = hardy_probe(&coarse, SingularKind::Borderline, 1e-9).unwrap();
        let b = hardy_probe(&fine, SingularKind::Borderline, 1e-9).unwrap();
        assert!(b.quotient > 0.25 && b.quotient < a.quotient, "{} {}", a.quotient, b.quotient);
        assert!(b.relative_residual <= 1e-9);
    }

    #[test]
    fn quotient_is_generalized_eigenvalue() {
        // Small enough for a dense check of L u = q W u.
        let dom = discretize(&DomainSpec::unit_disk(1.0 / 12.0)).unwrap();
        let q = hardy_quotient(&dom, SingularKind::Borderline).unwrap();
        let lap = assemble(&dom, PotentialKind::None, 1.0).unwrap().to_dense();
        let w = singular_weight(&dom, SingularKind::Borderline).unwrap();
        let d = nalgebra::DMatrix::from_fn(w.len(), w.len(), |i, j| {
            lap[(i, j)] / (w[i].sqrt() * w[j].sqrt())
        });
        let min = d.symmetric_eigen().eigenvalues.min();
        assert!((q - min).abs() < 1e-8 * min, "{q} vs {min}");
    }

    #[test]
    fn rejects_incompatible_domains() {
        let cube = discretize(&DomainSpec::unit_cube(0.25)).unwrap();
        assert!(hardy_quotient(&cube, SingularKind::InverseSquare).is_err());
        let sq = discretize(&DomainSpec::unit_square(0.25).centered()).unwrap();
        assert!(hardy_quotient(&sq, SingularKind::InverseSquare).is_err());
    }
}
