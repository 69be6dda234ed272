//! Finite-difference oracles for the pair potential derivatives. The exact
//! values asserted here were frozen from the closed forms before the
//! analytic implementations were trusted anywhere else.

use antiplane::PairPotential;

fn fd4_at_zero(pot: PairPotential, h: f64) -> f64 {
    // Central fourth-difference stencil [1, -4, 6, -4, 1] / h^4.
    (pot.phi(-2.0 * h) - 4.0 * pot.phi(-h) + 6.0 * pot.phi(0.0) - 4.0 * pot.phi(h)
        + pot.phi(2.0 * h))
        / (h * h * h * h)
}

#[test]
fn fourth_derivative_at_zero_is_minus_eighteen() {
    let pot = PairPotential::Saturating;
    let coarse = fd4_at_zero(pot, 1e-2);
    let fine = fd4_at_zero(pot, 5e-3);
    // Truncation is h^2 phi^(6)(0)/6 = 90 h^2 for this potential.
    assert!((coarse + 18.0).abs() <= 2e-2, "coarse {coarse}");
    assert!((fine + 18.0).abs() <= 6e-3, "fine {fine}");
    // Richardson extrapolation kills the h^2 term.
    let rich = (4.0 * fine - coarse) / 3.0;
    assert!((rich + 18.0).abs() <= 1e-3, "extrapolated {rich}");
    assert_eq!(pot.phi4_at_0(), -18.0);
    assert_eq!(PairPotential::Quadratic.phi4_at_0(), 0.0);
}

#[test]
fn first_and_second_derivatives_match_finite_differences() {
    for pot in [PairPotential::Saturating, PairPotential::Quadratic] {
        for &r in &[0.0, 0.1, -0.2, 0.3, 0.7, 1.5] {
            let h = 1e-6;
            let fd1 = (pot.phi(r + h) - pot.phi(r - h)) / (2.0 * h);
            assert!(
                (fd1 - pot.dphi(r)).abs() <= 1e-8,
                "{pot:?} phi' at {r}: {fd1} vs {}",
                pot.dphi(r)
            );
            let h = 1e-4;
            let fd2 = (pot.phi(r + h) - 2.0 * pot.phi(r) + pot.phi(r - h)) / (h * h);
            assert!(
                (fd2 - pot.ddphi(r)).abs() <= 1e-6,
                "{pot:?} phi'' at {r}: {fd2} vs {}",
                pot.ddphi(r)
            );
        }
    }
}

#[test]
fn paper_potential_saturates_and_convexifies_at_zero() {
    let pot = PairPotential::Saturating;
    // phi saturates at 1/6 for large strain; derivatives die off.
    assert!((pot.phi(10.0) - 1.0 / 6.0).abs() <= 1e-15);
    assert!(pot.dphi(10.0).abs() <= 1e-15);
    assert!(pot.ddphi(10.0).abs() <= 1e-15);
    // Unit stiffness at zero strain: the lattice linearizes to the masked
    // Laplacian with unit bonds.
    assert_eq!(pot.ddphi(0.0), 1.0);
    assert_eq!(pot.phi(0.0), 0.0);
    assert_eq!(pot.dphi(0.0), 0.0);
    // Below the quadratic comparison everywhere.
    for &r in &[0.2, 0.5, 1.0, 2.0] {
        assert!(pot.phi(r) < 0.5 * r * r);
    }
}

#[test]
fn quadratic_comparison_is_exact() {
    let pot = PairPotential::Quadratic;
    for &r in &[-1.5, -0.3, 0.0, 0.4, 2.0] {
        assert_eq!(pot.phi(r), 0.5 * r * r);
        assert_eq!(pot.dphi(r), r);
        assert_eq!(pot.ddphi(r), 1.0);
    }
}
