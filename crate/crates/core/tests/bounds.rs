use attrbounds::bounds::{
    critical_dimension_bound, dimension_bound, trace_bound, Nonlinearity, ProblemParams, Regime,
};
use attrbounds::geometry::{DomainSpec, Geometry};
use attrbounds::spectral::SingularKind;

fn unit_square() -> Geometry {
    DomainSpec::unit_square(1.0).shape.exact_geometry().unwrap().unwrap()
}

#[test]
fn square_examples() {
    let p = ProblemParams::new(2, 1.0, Nonlinearity::allen_cahn());
    let r = dimension_bound(&p, &unit_square()).unwrap();
    assert_eq!(r.regime, Regime::AtMostD0);
    assert!((r.kappa1 - 0.9375).abs() < 1e-12);
    assert!((r.d0 - 0.9375 / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
    let g1 = trace_bound(&p, &unit_square(), 1.0).unwrap();
    assert!((g1 - (0.9375 - 2.0 * std::f64::consts::PI)).abs() < 1e-12);

    let slow = ProblemParams::new(2, 0.01, Nonlinearity::allen_cahn());
    assert!((dimension_bound(&slow, &unit_square()).unwrap().d0 - 15.91).abs() < 0.01);
}

#[test]
fn potential_shrinks_effective_diffusion() {
    let geom = Geometry::new(1.0, 1.0 / 6.0).unwrap();
    let base = ProblemParams::new(3, 0.5, Nonlinearity::allen_cahn());
    let with = base.clone().with_potential(SingularKind::InverseSquare, 0.5 * 0.2);
    let a = dimension_bound(&base, &geom).unwrap();
    let b = dimension_bound(&with, &geom).unwrap();
    assert!((b.nu1 - 0.5 * 0.2).abs() < 1e-15);
    assert!(b.d0 > a.d0);
}

#[test]
fn critical_case_needs_critical_formulas() {
    let mut p = ProblemParams::new(3, 1.0, Nonlinearity::allen_cahn()).with_potential(SingularKind::Borderline, 0.25);
    assert!(dimension_bound(&p, &unit_square()).is_err());
    p.q = Some(1.8);
    let c = critical_dimension_bound(&p, 1.0, 1.0).unwrap();
    assert!((c.exponent.unwrap() - 5.4 / 3.0).abs() < 1e-12);
    assert_eq!(c.d0_tilde_half, Some(1.0));
}
