use attrbounds::geometry::{discretize, DomainSpec};
use attrbounds::spectral::{
    assemble, hardy_quotient, lowest_eigenvalues, lowest_eigenvalues_with, verify_li_yau, EigenOptions,
    MethodChoice, PotentialKind, SingularKind, SolverMethod,
};

#[test]
fn lanczos_agrees_with_closed_form_on_square() {
    let dom = discretize(&DomainSpec::unit_square(1.0 / 48.0)).unwrap();
    let lap = assemble(&dom, PotentialKind::None, 1.0).unwrap();
    let exact = lowest_eigenvalues(&lap, 12, 1e-10).unwrap();
    assert_eq!(exact.method, SolverMethod::Separable);
    let mut opts = EigenOptions::new(1e-10);
    opts.method = MethodChoice::Lanczos;
    let lz = lowest_eigenvalues_with(&lap, 12, &opts).unwrap();
    assert_eq!(lz.method, SolverMethod::Lanczos);
    for (a, b) in exact.eigenvalues.iter().zip(&lz.eigenvalues) {
        assert!((a - b).abs() < 1e-8 * a, "{a} {b}");
    }
}

#[test]
fn subcritical_potential_lowers_spectrum() {
    let dom = discretize(&DomainSpec::unit_cube(1.0 / 16.0).centered()).unwrap();
    let lap = assemble(&dom, PotentialKind::None, 1.0).unwrap();
    let pot = assemble(&dom, PotentialKind::InverseSquare { mu: 0.2 }, 1.0).unwrap();
    let a = lowest_eigenvalues(&lap, 3, 1e-9).unwrap().eigenvalues;
    let b = lowest_eigenvalues(&pot, 3, 1e-9).unwrap().eigenvalues;
    for (x, y) in a.iter().zip(&b) {
        assert!(y < x && *y > 0.0);
    }
    assert!(hardy_quotient(&dom, SingularKind::InverseSquare).unwrap() > 0.25);
}

#[test]
fn li_yau_on_disk() {
    let dom = discretize(&DomainSpec::unit_disk(1.0 / 48.0)).unwrap();
    let s = lowest_eigenvalues(&assemble(&dom, PotentialKind::None, 1.0).unwrap(), 20, 1e-9).unwrap();
    let r = verify_li_yau(&dom, &s, 20, 1.0).unwrap();
    assert_eq!(r.rows.len(), 20);
    assert_eq!(r.violations(), 0);
}
