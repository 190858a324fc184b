//! Normal-ordered two-mode characteristic function: the evolved parameter
//! maps `(eta, zeta) -> (eta_bar, zeta_bar)`, the closed form for the
//! cat (x) coherent preparation, and numeric trace evaluators used to
//! cross-check it.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::analytic::{EvolutionCoeffs, Scenario};
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, TwoModeKet};
use crate::oracle::LadderMatrices;

/// Largest displacement magnitude accepted by the numeric evaluators at the
/// default truncations.
pub const MAX_DISPLACEMENT: f64 = 3.0;

/// Occupancy allowed in the top Fock levels before the numeric trace is
/// considered truncation-limited.
const HEADROOM_TOL: f64 = 1e-10;
const HEADROOM_LEVELS: usize = 3;

/// One evaluation point of the characteristic function: the parameters, the
/// mapped parameters carrying the whole time dependence, and the value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharPoint {
    pub eta: Complex64,
    pub zeta: Complex64,
    pub eta_bar: Complex64,
    pub zeta_bar: Complex64,
    pub chi_n: Complex64,
}

/// `eta_bar = eta conj(u1) + zeta conj(v2)`,
/// `zeta_bar = eta conj(v1) + zeta conj(u2)`.
///
/// The map is unitary: `|eta_bar|^2 + |zeta_bar|^2 = |eta|^2 + |zeta|^2`.
pub fn bar_parameters(
    eta: Complex64,
    zeta: Complex64,
    coeffs: &EvolutionCoeffs,
) -> (Complex64, Complex64) {
    (
        eta * coeffs.u1.conj() + zeta * coeffs.v2.conj(),
        eta * coeffs.v1.conj() + zeta * coeffs.u2.conj(),
    )
}

/// Normal characteristic function of the evolved cat (x) coherent state,
/// as a four-exponential closed form in the evolved labels `z_i`.
pub fn chi_n_closed(s: &Scenario, tau: f64, eta: Complex64, zeta: Complex64) -> Result<Complex64> {
    s.cat.validate()?;
    let z = s.z_labels_at(tau);
    let n2 = s.cat.normalization().powi(2);
    let a2 = s.alpha().norm_sqr();
    let phase = Complex64::cis(s.big_phi());

    let t1 =
        (eta * z.z1.conj() - eta.conj() * z.z1 + zeta * z.z3.conj() - zeta.conj() * z.z3).exp();
    let t2 =
        (-eta * z.z2.conj() + eta.conj() * z.z2 - zeta * z.z4.conj() + zeta.conj() * z.z4).exp();
    let t3 =
        (eta * z.z1.conj() + eta.conj() * z.z2 + zeta * z.z3.conj() + zeta.conj() * z.z4).exp();
    let t4 =
        (-eta * z.z2.conj() - eta.conj() * z.z1 - zeta * z.z4.conj() - zeta.conj() * z.z3).exp();
    Ok((t1 + t2 + (-2.0 * a2).exp() * (phase * t3 + phase.conj() * t4)) / n2)
}

/// Symmetric-order value from the normal-order one:
/// `chi_S = chi_N e^{-(|eta|^2 + |zeta|^2)/2}`.
pub fn chi_s_from_chi_n(chi_n: Complex64, eta: Complex64, zeta: Complex64) -> Complex64 {
    chi_n * (-0.5 * (eta.norm_sqr() + zeta.norm_sqr())).exp()
}

/// Closed-form evaluation bundled with the mapped parameters.
pub fn evaluate_point(
    s: &Scenario,
    tau: f64,
    eta: Complex64,
    zeta: Complex64,
) -> Result<CharPoint> {
    let coeffs = s.coeffs_at(tau);
    let (eta_bar, zeta_bar) = bar_parameters(eta, zeta, &coeffs);
    Ok(CharPoint {
        eta,
        zeta,
        eta_bar,
        zeta_bar,
        chi_n: chi_n_closed(s, tau, eta, zeta)?,
    })
}

fn check_displacement(eta: Complex64, zeta: Complex64) -> Result<()> {
    if eta.norm() > MAX_DISPLACEMENT || zeta.norm() > MAX_DISPLACEMENT {
        return Err(Error::TruncationTooSmall(format!(
            "displacement magnitudes ({:.2}, {:.2}) exceed the validated range {}",
            eta.norm(),
            zeta.norm(),
            MAX_DISPLACEMENT
        )));
    }
    Ok(())
}

fn check_headroom(marginal: &[f64], mode: &str) -> Result<()> {
    let top: f64 = marginal.iter().rev().take(HEADROOM_LEVELS).sum();
    if top > HEADROOM_TOL {
        return Err(Error::TruncationTooSmall(format!(
            "mode {mode} holds {top:.2e} occupancy in its top {HEADROOM_LEVELS} Fock levels"
        )));
    }
    Ok(())
}

/// Series exponential of a truncated ladder operator scaled by `c`; the
/// matrix is nilpotent in the truncated basis, so the series terminates.
fn exp_ladder(c: Complex64, ladder: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let dim = ladder.nrows();
    let mut out = DMatrix::identity(dim, dim);
    let mut term = DMatrix::<Complex64>::identity(dim, dim);
    for k in 1..=dim {
        term = (&term * ladder) * (c / k as f64);
        if term.iter().all(|z| z.norm() == 0.0) {
            break;
        }
        out += &term;
    }
    out
}

/// Numeric trace `Tr[rho e^{eta a+} e^{-eta* a} e^{zeta b+} e^{-zeta* b}]`
/// over a two-mode density matrix of factorized dimension `dim_a * dim_b`.
pub fn chi_n_numeric(
    rho: &DensityMatrix,
    dim_a: usize,
    dim_b: usize,
    eta: Complex64,
    zeta: Complex64,
) -> Result<Complex64> {
    if dim_a * dim_b != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: dim_a * dim_b,
        });
    }
    check_displacement(eta, zeta)?;

    let mut marg_a = vec![0.0; dim_a];
    let mut marg_b = vec![0.0; dim_b];
    for (i, ma) in marg_a.iter_mut().enumerate() {
        for (j, mb) in marg_b.iter_mut().enumerate() {
            let p = rho.entry(i * dim_b + j, i * dim_b + j).re;
            *ma += p;
            *mb += p;
        }
    }
    check_headroom(&marg_a, "A")?;
    check_headroom(&marg_b, "B")?;

    let lad_a = LadderMatrices::new(dim_a - 1);
    let lad_b = LadderMatrices::new(dim_b - 1);
    let e_a = exp_ladder(eta, &lad_a.creation()) * exp_ladder(-eta.conj(), lad_a.annihilate());
    let e_b = exp_ladder(zeta, &lad_b.creation()) * exp_ladder(-zeta.conj(), lad_b.annihilate());

    // Tr[rho (E_A (x) E_B)] without materializing the Kronecker product
    let mut acc = Complex64::ZERO;
    for ia in 0..dim_a {
        for ja in 0..dim_a {
            let ea = e_a[(ja, ia)];
            if ea.norm_sqr() == 0.0 {
                continue;
            }
            for ib in 0..dim_b {
                for jb in 0..dim_b {
                    acc += rho.entry(ia * dim_b + ib, ja * dim_b + jb) * ea * e_b[(jb, ib)];
                }
            }
        }
    }
    Ok(acc)
}

fn apply_annihilation_series(psi: &TwoModeKet, c_a: Complex64, c_b: Complex64) -> TwoModeKet {
    let (dim_a, dim_b) = psi.dims();
    // e^{c_a a} over mode A
    let mut mid = psi.clone();
    let mut term = psi.clone();
    for k in 1..dim_a {
        let mut next = TwoModeKet::zeros(dim_a - 1, dim_b - 1);
        for i in 0..dim_a - 1 {
            for j in 0..dim_b {
                *next.amp_mut(i, j) = term.amp(i + 1, j) * ((i + 1) as f64).sqrt() * c_a / k as f64;
            }
        }
        term = next;
        for i in 0..dim_a {
            for j in 0..dim_b {
                *mid.amp_mut(i, j) += term.amp(i, j);
            }
        }
    }
    // e^{c_b b} over mode B
    let mut out = mid.clone();
    let mut term = mid;
    for k in 1..dim_b {
        let mut next = TwoModeKet::zeros(dim_a - 1, dim_b - 1);
        for i in 0..dim_a {
            for j in 0..dim_b - 1 {
                *next.amp_mut(i, j) = term.amp(i, j + 1) * ((j + 1) as f64).sqrt() * c_b / k as f64;
            }
        }
        term = next;
        for i in 0..dim_a {
            for j in 0..dim_b {
                *out.amp_mut(i, j) += term.amp(i, j);
            }
        }
    }
    out
}

/// Pure-state evaluation of the same normal-ordered trace,
/// `<psi| e^{eta a+} e^{zeta b+} e^{-eta* a} e^{-zeta* b} |psi>`, via
/// terminating annihilation series applied to the ket on both sides.
pub fn chi_n_numeric_ket(psi: &TwoModeKet, eta: Complex64, zeta: Complex64) -> Result<Complex64> {
    check_displacement(eta, zeta)?;
    let norm = psi.norm_sqr();
    let (dim_a, dim_b) = psi.dims();
    let mut marg_a = vec![0.0; dim_a];
    let mut marg_b = vec![0.0; dim_b];
    for (i, ma) in marg_a.iter_mut().enumerate() {
        for (j, mb) in marg_b.iter_mut().enumerate() {
            let p = psi.amp(i, j).norm_sqr() / norm;
            *ma += p;
            *mb += p;
        }
    }
    check_headroom(&marg_a, "A")?;
    check_headroom(&marg_b, "B")?;

    let right = apply_annihilation_series(psi, -eta.conj(), -zeta.conj());
    let left = apply_annihilation_series(psi, eta.conj(), zeta.conj());
    Ok(left.overlap(&right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{evolution_coeffs, BetaChoice, ModeCoupling};
    use crate::fock::{cat_ket, coherent_ket, tensor_product, CatSpec, FockKet};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn test_scenario() -> Scenario {
        Scenario::new(
            CatSpec::new(Complex64::ONE, PI / 2.0).unwrap(),
            BetaChoice::Explicit(c(0.6, 0.0)),
            ModeCoupling::resonant(1.0, PI / 2.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn bar_parameters_identity_at_zero_time() {
        let coeffs = evolution_coeffs(0.0, 0.0, PI / 2.0).unwrap();
        let (eb, zb) = bar_parameters(c(0.3, 0.1), c(-0.2, 0.5), &coeffs);
        assert_abs_diff_eq!((eb - c(0.3, 0.1)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((zb - c(-0.2, 0.5)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn bar_parameters_preserve_norm_sum() {
        for i in 0..50 {
            let tau = 0.17 * i as f64;
            let coeffs = evolution_coeffs(tau, 0.42, 1.1).unwrap();
            let eta = c(0.3 + 0.01 * i as f64, -0.2);
            let zeta = c(-0.8, 0.4 - 0.02 * i as f64);
            let (eb, zb) = bar_parameters(eta, zeta, &coeffs);
            assert_abs_diff_eq!(
                eb.norm_sqr() + zb.norm_sqr(),
                eta.norm_sqr() + zeta.norm_sqr(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn chi_n_is_one_at_origin() {
        let s = test_scenario();
        for &tau in &[0.0, 0.4, PI / 2.0] {
            let v = chi_n_closed(&s, tau, Complex64::ZERO, Complex64::ZERO).unwrap();
            assert_abs_diff_eq!((v - Complex64::ONE).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn chi_n_numeric_trace_of_rho_is_one_at_origin() {
        let s = test_scenario();
        let psi = s.initial_state(16).unwrap();
        let rho = psi.projector();
        let v = chi_n_numeric(&rho, 17, 17, Complex64::ZERO, Complex64::ZERO).unwrap();
        assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-11);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn normal_order_in_vacuum_is_unity() {
        let vac = tensor_product(&FockKet::vacuum(12), &FockKet::vacuum(12));
        let v = chi_n_numeric_ket(&vac, c(0.8, 0.5), c(-0.4, 0.9)).unwrap();
        assert_abs_diff_eq!((v - Complex64::ONE).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn coherent_states_give_displacement_phases() {
        let alpha = c(0.7, -0.3);
        let beta = c(-0.2, 0.5);
        let psi = tensor_product(&coherent_ket(alpha, 24), &coherent_ket(beta, 24));
        let eta = c(0.4, 0.6);
        let zeta = c(-0.5, 0.2);
        let got = chi_n_numeric_ket(&psi, eta, zeta).unwrap();
        let expected = (eta * alpha.conj() - eta.conj() * alpha + zeta * beta.conj()
            - zeta.conj() * beta)
            .exp();
        assert_abs_diff_eq!((got - expected).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn matrix_and_ket_routes_agree() {
        let s = test_scenario();
        let psi = s.joint_state(0.7, 18).unwrap();
        let rho = psi.projector();
        let eta = c(0.5, -0.3);
        let zeta = c(0.2, 0.6);
        let a = chi_n_numeric(&rho, 19, 19, eta, zeta).unwrap();
        let b = chi_n_numeric_ket(&psi, eta, zeta).unwrap();
        assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn closed_form_matches_numeric_trace() {
        let s = test_scenario();
        let n = 28;
        for &tau in &[0.0, PI / 8.0, PI / 4.0, PI / 2.0] {
            let psi = s.joint_state(tau, n).unwrap();
            for i in 0..5 {
                let x = -1.5 + 0.75 * i as f64;
                let eta = c(x, x) / 2.0f64.sqrt();
                let zeta = c(x, -x) / 2.0f64.sqrt();
                let closed = chi_n_closed(&s, tau, eta, zeta).unwrap();
                let numeric = chi_n_numeric_ket(&psi, eta, zeta).unwrap();
                assert!(
                    (closed - numeric).norm() < 1e-9,
                    "tau={tau} point {i}: |closed-numeric| = {}",
                    (closed - numeric).norm()
                );
            }
        }
    }

    #[test]
    fn reduced_cat_limit_at_zero_partner() {
        // beta = 0 at tau = 0: chi_N factorizes into the single-mode cat
        // characteristic function times unity
        let s = Scenario::new(
            CatSpec::new(Complex64::ONE, 0.0).unwrap(),
            BetaChoice::Explicit(Complex64::ZERO),
            ModeCoupling::resonant(1.0, PI / 2.0).unwrap(),
        )
        .unwrap();
        let cat = cat_ket(&s.cat, 24).unwrap();
        let psi = tensor_product(&cat, &FockKet::vacuum(24));
        let eta = c(0.9, 0.2);
        let closed = chi_n_closed(&s, 0.0, eta, Complex64::ZERO).unwrap();
        let numeric = chi_n_numeric_ket(&psi, eta, Complex64::ZERO).unwrap();
        assert_abs_diff_eq!((closed - numeric).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn hermiticity_symmetry_of_chi_n() {
        let s = test_scenario();
        let eta = c(0.4, 0.7);
        let zeta = c(-0.3, 0.1);
        let plus = chi_n_closed(&s, 0.9, eta, zeta).unwrap();
        let minus = chi_n_closed(&s, 0.9, -eta, -zeta).unwrap();
        assert_abs_diff_eq!((plus - minus.conj()).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn factorization_through_bar_parameters() {
        // chi_N(eta, zeta, tau) = chi_N^A(eta_bar, 0) chi_N^B(zeta_bar, 0)
        let s = test_scenario();
        let beta = s.beta;
        for &tau in &[0.0, PI / 8.0, PI / 2.0] {
            let coeffs = s.coeffs_at(tau);
            let eta = c(0.5, 0.3);
            let zeta = c(-0.4, 0.6);
            let (eb, zb) = bar_parameters(eta, zeta, &coeffs);
            let full = chi_n_closed(&s, tau, eta, zeta).unwrap();
            let chi_a = chi_n_closed(&s, 0.0, eb, Complex64::ZERO).unwrap();
            let chi_b = (zb * beta.conj() - zb.conj() * beta).exp();
            assert_abs_diff_eq!((full - chi_a * chi_b).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn symmetric_order_conversion() {
        // in vacuum chi_N = 1, so chi_S is the pure Gaussian factor
        let vac = tensor_product(&FockKet::vacuum(10), &FockKet::vacuum(10));
        let eta = c(0.7, -0.2);
        let zeta = c(0.1, 0.9);
        let chi_n = chi_n_numeric_ket(&vac, eta, zeta).unwrap();
        let chi_s = chi_s_from_chi_n(chi_n, eta, zeta);
        let expected = (-0.5 * (eta.norm_sqr() + zeta.norm_sqr())).exp();
        assert_abs_diff_eq!((chi_s - expected).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn displacement_range_enforced() {
        let psi = tensor_product(&FockKet::vacuum(8), &FockKet::vacuum(8));
        let err = chi_n_numeric_ket(&psi, c(3.5, 0.0), Complex64::ZERO).unwrap_err();
        assert!(matches!(err, Error::TruncationTooSmall(_)));
    }

    #[test]
    fn headroom_enforced() {
        // a state sitting at the top of the box cannot be displaced reliably
        let top = tensor_product(&FockKet::fock(8, 8).unwrap(), &FockKet::vacuum(8));
        let err = chi_n_numeric_ket(&top, c(0.5, 0.0), Complex64::ZERO).unwrap_err();
        assert!(matches!(err, Error::TruncationTooSmall(_)));
    }
}
