//! Closed-form slow-time dynamics of two modes under rotating-wave coupling:
//! mode-mixing coefficients, the joint state, linear entropy, mean photon
//! numbers, photon-number variance, the balanced-intensity condition, the
//! state-exchange functional, and the recurrence/exchange schedule.
//!
//! Everything is expressed in the interaction picture and parameterized by
//! the dimensionless slow time `tau = omega_slow * t`; fast free-field phase
//! rotations drop out of every scalar observable evaluated here. At
//! resonance (`Omega = 0`) the slow time is `lambda * t`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fock::{cat_ket, coherent_ket, tensor_product, CatSpec, StateSpec, TwoModeKet};
use crate::fock::{choose_truncation, TRUNCATION_CEILING};

/// Absolute tolerance below which a detuning counts as resonant and a phase
/// as matching its target (all rates are O(1) in units of the coupling).
pub const RESONANCE_TOL: f64 = 1e-12;

/// Guard levels added on top of the tail-mass truncation for oracle runs.
pub const TRUNCATION_GUARD: usize = 4;

pub(crate) mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

/// Pump-mediated coupling between the two modes.
///
/// `lambda` is the coupling rate set by the pump amplitude, `nu` the pump
/// frequency and `pump_phase` its phase. The rotating-wave description is
/// trustworthy only for `lambda, |Omega| << omega_a, omega_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCoupling {
    pub omega_a: f64,
    pub omega_b: f64,
    pub nu: f64,
    pub lambda: f64,
    pub pump_phase: f64,
}

impl ModeCoupling {
    pub fn new(omega_a: f64, omega_b: f64, nu: f64, lambda: f64, pump_phase: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidCoupling(format!(
                "coupling rate must be positive, got {lambda}"
            )));
        }
        Ok(Self {
            omega_a,
            omega_b,
            nu,
            lambda,
            pump_phase,
        })
    }

    /// Resonant coupling (`nu = omega_a - omega_b`) with the given rate and
    /// pump phase, on representative fast frequencies.
    pub fn resonant(lambda: f64, pump_phase: f64) -> Result<Self> {
        let (omega_a, omega_b) = (100.0 * lambda, 60.0 * lambda);
        Self::new(omega_a, omega_b, omega_a - omega_b, lambda, pump_phase)
    }

    /// Detuning `Omega = omega_a - omega_b - nu`.
    pub fn detuning(&self) -> f64 {
        self.omega_a - self.omega_b - self.nu
    }

    /// True when both the coupling rate and the detuning are small against
    /// the mode frequencies, so dropping the counterrotating terms is valid.
    pub fn rwc_valid(&self) -> bool {
        let bound = 0.1 * self.omega_a.min(self.omega_b);
        self.lambda < bound && self.detuning().abs() < bound
    }

    pub fn derived(&self) -> DerivedParams {
        let detuning = self.detuning();
        let omega_slow = (detuning * detuning + 4.0 * self.lambda * self.lambda).sqrt() / 2.0;
        DerivedParams {
            detuning,
            chi: detuning / (2.0 * omega_slow),
            omega_slow,
        }
    }
}

/// Quantities derived from the coupling: the detuning `Omega`, the slow
/// angular rate `omega_slow = sqrt(Omega^2 + 4 lambda^2)/2` and the
/// dimensionless `chi = Omega / (2 omega_slow)` (always `|chi| < 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub detuning: f64,
    pub chi: f64,
    pub omega_slow: f64,
}

impl DerivedParams {
    /// Slow time for a given real time.
    pub fn slow_time(&self, t: f64) -> f64 {
        self.omega_slow * t
    }
}

/// Mode-mixing coefficients at slow time `tau`:
/// `a(tau) = u1 a(0) + v1 b(0)`, `b(tau) = u2 b(0) + v2 a(0)`.
///
/// By construction `u2 = conj(u1)`, `v2 = -conj(v1)` and
/// `|u1|^2 + |v1|^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionCoeffs {
    pub tau: f64,
    pub u1: Complex64,
    pub u2: Complex64,
    pub v1: Complex64,
    pub v2: Complex64,
}

impl EvolutionCoeffs {
    /// `| |u1|^2 + |v1|^2 - 1 |`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.u1.norm_sqr() + self.v1.norm_sqr() - 1.0).abs()
    }
}

/// `u1 = e^{i chi tau} (cos tau - i chi sin tau)`,
/// `v1 = -i sqrt(1 - chi^2) e^{i (chi tau + phi)} sin tau`.
pub fn evolution_coeffs(tau: f64, chi: f64, pump_phase: f64) -> Result<EvolutionCoeffs> {
    if chi.abs() >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "|chi| must be < 1, got {chi}"
        )));
    }
    let (sin, cos) = tau.sin_cos();
    let u1 = Complex64::cis(chi * tau) * Complex64::new(cos, -chi * sin);
    let v1 =
        -Complex64::i() * (1.0 - chi * chi).sqrt() * Complex64::cis(chi * tau + pump_phase) * sin;
    Ok(EvolutionCoeffs {
        tau,
        u1,
        u2: u1.conj(),
        v1,
        v2: -v1.conj(),
    })
}

/// Coherent-state labels of the evolved joint state; linear superpositions
/// of the initial labels under the mode mixing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZLabels {
    pub z1: Complex64,
    pub z2: Complex64,
    pub z3: Complex64,
    pub z4: Complex64,
}

/// `z1 = u1 a + v1 b`, `z2 = u1 a - v1 b`, `z3 = v2 a + u2 b`,
/// `z4 = v2 a - u2 b`.
pub fn z_labels(coeffs: &EvolutionCoeffs, alpha: Complex64, beta: Complex64) -> ZLabels {
    ZLabels {
        z1: coeffs.u1 * alpha + coeffs.v1 * beta,
        z2: coeffs.u1 * alpha - coeffs.v1 * beta,
        z3: coeffs.v2 * alpha + coeffs.u2 * beta,
        z4: coeffs.v2 * alpha - coeffs.u2 * beta,
    }
}

/// The intensity `|beta|^2` that makes both mean photon numbers constant in
/// time: `|alpha|^2 (1 - cos Phi e^{-2|alpha|^2}) / (1 + cos Phi e^{-2|alpha|^2})`.
///
/// For the even cat this is `|alpha|^2 tanh |alpha|^2`, for the odd cat
/// `|alpha|^2 coth |alpha|^2`, which diverges as `alpha -> 0`: the odd-cat
/// branch rejects `|alpha|^2 < 1e-8`.
pub fn balanced_intensity(alpha: Complex64, phi: f64) -> Result<f64> {
    let a2 = alpha.norm_sqr();
    let e2 = (-2.0 * a2).exp();
    let denom = 1.0 + phi.cos() * e2;
    if denom < 1e-12 {
        return Err(Error::NullState);
    }
    if is_phase(phi, PI) && a2 < 1e-8 {
        return Err(Error::NullState);
    }
    Ok(a2 * (1.0 - phi.cos() * e2) / denom)
}

fn is_phase(phi: f64, target: f64) -> bool {
    let two_pi = 2.0 * PI;
    let p = (phi - target).rem_euclid(two_pi);
    p < RESONANCE_TOL || two_pi - p < RESONANCE_TOL
}

/// How to fill mode B's initial coherent label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BetaChoice {
    /// Explicit complex label.
    Explicit(#[serde(with = "complex_pair")] Complex64),
    /// Balanced intensity with the phase of `alpha` (real when `alpha` is).
    Balanced,
}

/// Full physical configuration: cat state on mode A, coherent state on
/// mode B, and the coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub cat: CatSpec,
    pub beta: Complex64,
    pub coupling: ModeCoupling,
}

impl Scenario {
    pub fn new(cat: CatSpec, beta: BetaChoice, coupling: ModeCoupling) -> Result<Self> {
        cat.validate()?;
        let beta = match beta {
            BetaChoice::Explicit(b) => b,
            BetaChoice::Balanced => {
                let mag = balanced_intensity(cat.alpha, cat.phi)?.sqrt();
                if cat.alpha.norm() > 0.0 {
                    cat.alpha / cat.alpha.norm() * mag
                } else {
                    Complex64::new(mag, 0.0)
                }
            }
        };
        Ok(Self {
            cat,
            beta,
            coupling,
        })
    }

    pub fn alpha(&self) -> Complex64 {
        self.cat.alpha
    }

    /// Superposition phase of the mode-A cat.
    pub fn big_phi(&self) -> f64 {
        self.cat.phi
    }

    pub fn derived(&self) -> DerivedParams {
        self.coupling.derived()
    }

    pub fn is_resonant(&self) -> bool {
        self.coupling.detuning().abs() <= RESONANCE_TOL
    }

    fn require_resonant(&self) -> Result<()> {
        if self.is_resonant() {
            Ok(())
        } else {
            Err(Error::DetuningNotSupported(self.coupling.detuning()))
        }
    }

    /// Short human-readable tag for reports.
    pub fn label(&self) -> String {
        format!(
            "|alpha|^2={:.4}, Phi={:.4}, |beta|^2={:.4}",
            self.alpha().norm_sqr(),
            self.big_phi(),
            self.beta.norm_sqr()
        )
    }

    pub fn coeffs_at(&self, tau: f64) -> EvolutionCoeffs {
        evolution_coeffs(tau, self.derived().chi, self.coupling.pump_phase)
            .expect("chi from derived params is strictly inside (-1, 1)")
    }

    pub fn z_labels_at(&self, tau: f64) -> ZLabels {
        z_labels(&self.coeffs_at(tau), self.alpha(), self.beta)
    }

    /// Per-mode truncation for oracle runs: tail mass below `epsilon` for
    /// every initial component *and* for a coherent state carrying the whole
    /// conserved excitation budget `sqrt(|alpha|^2 + |beta|^2)` (the coupling
    /// can concentrate all quanta in one mode), plus guard levels.
    pub fn oracle_truncation(&self, epsilon: f64) -> Result<usize> {
        let combined = (self.alpha().norm_sqr() + self.beta.norm_sqr()).sqrt();
        let n = choose_truncation(
            &[
                StateSpec::Cat(self.cat),
                StateSpec::Coherent(self.beta),
                StateSpec::Coherent(Complex64::new(combined, 0.0)),
            ],
            epsilon,
        )?;
        let n = n + TRUNCATION_GUARD;
        if n > TRUNCATION_CEILING {
            return Err(Error::TruncationTooLarge {
                required: n,
                ceiling: TRUNCATION_CEILING,
            });
        }
        Ok(n)
    }

    /// `cat (x) coherent` at slow time zero.
    pub fn initial_state(&self, n_max: usize) -> Result<TwoModeKet> {
        Ok(tensor_product(
            &cat_ket(&self.cat, n_max)?,
            &coherent_ket(self.beta, n_max),
        ))
    }

    /// The role-swapped initial state `coherent(beta) (x) cat(alpha, Phi)`.
    pub fn exchanged_initial_state(&self, n_max: usize) -> Result<TwoModeKet> {
        Ok(tensor_product(
            &coherent_ket(self.beta, n_max),
            &cat_ket(&self.cat, n_max)?,
        ))
    }

    /// Joint state at slow time `tau`:
    /// `(|z1>(x)|z3> + e^{i Phi} |-z2>(x)|-z4>)/N`, with `N` the initial cat
    /// normalization. Valid for any detuning through `chi`.
    pub fn joint_state(&self, tau: f64, n_max: usize) -> Result<TwoModeKet> {
        self.cat.validate()?;
        let z = self.z_labels_at(tau);
        let norm = self.cat.normalization();
        let phase = Complex64::cis(self.big_phi());

        let k1 = coherent_ket(z.z1, n_max);
        let k3 = coherent_ket(z.z3, n_max);
        let k2 = coherent_ket(-z.z2, n_max);
        let k4 = coherent_ket(-z.z4, n_max);

        let mut out = TwoModeKet::zeros(n_max, n_max);
        for i in 0..=n_max {
            for j in 0..=n_max {
                *out.amp_mut(i, j) = (k1.amp(i) * k3.amp(j) + phase * k2.amp(i) * k4.amp(j)) / norm;
            }
        }
        Ok(out)
    }

    /// Linear entropy of either reduced mode at resonance.
    ///
    /// The last cosine carries the phase `2 Phi + 2 sin(2 tau)
    /// Im(alpha beta*)`; equal-phase preparations (the verified regime)
    /// reduce it to `2 Phi`.
    pub fn linear_entropy(&self, tau: f64) -> Result<f64> {
        self.require_resonant()?;
        let a2 = self.alpha().norm_sqr();
        let n2 = 2.0 * (1.0 + self.big_phi().cos() * (-2.0 * a2).exp());
        let cos2 = (2.0 * tau).cos();
        let im = (self.alpha() * self.beta.conj()).im;
        let bracket = 1.0
            + (-2.0 * a2 * (1.0 + cos2)).exp()
            + (-2.0 * a2 * (1.0 - cos2)).exp()
            + 4.0 * self.big_phi().cos() * (-2.0 * a2).exp()
            + (-4.0 * a2).exp() * (2.0 * self.big_phi() + 2.0 * (2.0 * tau).sin() * im).cos();
        Ok(1.0 - 2.0 * bracket / (n2 * n2))
    }

    /// Mean photon numbers `(n_A, n_B)` at resonance. Energies are
    /// `hbar omega_a n_A` and `hbar omega_b n_B`; the sum `n_A + n_B` is a
    /// constant of motion.
    pub fn mean_photon_numbers(&self, tau: f64) -> Result<(f64, f64)> {
        self.require_resonant()?;
        let a2 = self.alpha().norm_sqr();
        let b2 = self.beta.norm_sqr();
        let e2 = (-2.0 * a2).exp();
        let cphi = self.big_phi().cos();
        let n2 = 2.0 * (1.0 + cphi * e2);
        let (sin, cos) = tau.sin_cos();
        let (c2, s2) = (cos * cos, sin * sin);
        // cross term: Re(e^{i pump_phase} alpha* beta); reduces to
        // Im(alpha beta*) at the pi/2 pump of the exchange regime
        let cross = (Complex64::cis(self.coupling.pump_phase) * self.alpha().conj() * self.beta).re
            * (2.0 * tau).sin()
            * self.big_phi().sin()
            * e2;
        let base_a = a2 * (1.0 - cphi * e2);
        let base_b = b2 * (1.0 + cphi * e2);
        let n_a = 2.0 / n2 * (base_a * c2 + base_b * s2 + cross);
        let n_b = 2.0 / n2 * (base_a * s2 + base_b * c2 - cross);
        Ok((n_a, n_b))
    }

    /// Variance of the mode-A photon number at resonance, for even or odd
    /// cats prepared with equal field phases.
    ///
    /// With `r = tanh|alpha|^2` (even) or `coth|alpha|^2` (odd):
    ///
    /// ```text
    /// V = cos^4(tau) [ |a|^4 (1 - r^2) + |a|^2 r ] + sin^4(tau) |b|^2
    ///   + cos^2(tau) sin^2(tau) [ 2 |a|^2 |b|^2 (1 + r) + |a|^2 r + |b|^2 ]
    /// ```
    ///
    /// This closed form is pinned to the brute-force oracle; it reduces to
    /// the initial cat variance at `tau = 0` and to the Poissonian `|b|^2`
    /// at the exchange time.
    pub fn photon_number_variance(&self, tau: f64) -> Result<f64> {
        self.require_resonant()?;
        let a2 = self.alpha().norm_sqr();
        let b2 = self.beta.norm_sqr();
        let r = if is_phase(self.big_phi(), 0.0) {
            a2.tanh()
        } else if is_phase(self.big_phi(), PI) {
            1.0 / a2.tanh()
        } else {
            return Err(Error::UnsupportedPhase(self.big_phi()));
        };
        let im = (self.alpha() * self.beta.conj()).im;
        if im.abs() > 1e-12 * (self.alpha().norm() * self.beta.norm()).max(1.0) {
            return Err(Error::MisalignedAmplitudes(im));
        }
        let (sin, cos) = tau.sin_cos();
        let (c2, s2) = (cos * cos, sin * sin);
        let v = c2 * c2 * (a2 * a2 * (1.0 - r * r) + a2 * r)
            + s2 * s2 * b2
            + c2 * s2 * (2.0 * a2 * b2 * (1.0 + r) + a2 * r + b2);
        debug_assert!(v > -1e-10);
        Ok(v.max(0.0))
    }

    /// State-exchange functional at resonance with a `pi/2` pump, from the
    /// closed form.
    pub fn exchange_functional(&self, tau: f64) -> Result<f64> {
        self.require_resonant()?;
        if !is_phase(self.coupling.pump_phase, PI / 2.0) {
            return Err(Error::InvalidCoupling(format!(
                "exchange closed form requires pump phase pi/2, got {}",
                self.coupling.pump_phase
            )));
        }
        let alpha = self.alpha();
        let a2 = alpha.norm_sqr();
        let b2 = self.beta.norm_sqr();
        let n2 = self.cat.normalization().powi(2);
        let phi = self.big_phi();
        let z = self.z_labels_at(tau);
        let (sin, cos) = tau.sin_cos();
        let re_ab = (alpha * self.beta.conj()).re;
        let im_ab = (alpha * self.beta.conj()).im;

        let pref = 2.0 * (-2.0 * (a2 + b2 * (1.0 - sin))).exp() / (n2 * n2);
        let angle = phi - 2.0 * cos * im_ab;
        let value = pref
            * ((2.0 * cos * re_ab).exp() * (2.0 * (alpha * z.z3.conj()).re).cosh()
                + (-2.0 * cos * re_ab).exp() * (2.0 * (alpha * z.z4.conj()).re).cosh()
                + (-2.0 * sin * a2).exp()
                + 4.0 * (2.0 * cos * re_ab).cosh() * angle.cos()
                + (2.0 * sin * a2).exp() * (2.0 * angle).cos());
        debug_assert!(value > -1e-10 && value < 1.0 + 1e-10);
        Ok(value.clamp(0.0, 1.0))
    }

    /// State-exchange functional from first principles: the normalized
    /// squared overlap of the evolved joint state with the role-swapped
    /// initial state. Serves as the oracle for [`Self::exchange_functional`]
    /// and is valid for any detuning.
    pub fn exchange_functional_from_overlap(&self, tau: f64, n_max: usize) -> Result<f64> {
        let evolved = self.joint_state(tau, n_max)?;
        let swapped = self.exchanged_initial_state(n_max)?;
        Ok(swapped.fidelity(&evolved))
    }

    /// Recurrence and exchange schedule with `n_terms` entries each.
    pub fn schedule(&self, n_terms: u32) -> ExchangeSchedule {
        let derived = self.derived();
        let chi = derived.chi;
        let recurrences = (1..=n_terms)
            .map(|n| {
                let phase_a = Complex64::cis(n as f64 * PI * (1.0 + chi));
                let phase_b = Complex64::cis(n as f64 * PI * (1.0 - chi));
                let exact = (phase_a - Complex64::ONE).norm() < 1e-9
                    && (phase_b - Complex64::ONE).norm() < 1e-9;
                RecurrencePoint {
                    index: n,
                    tau: n as f64 * PI,
                    phase_a,
                    phase_b,
                    exact,
                }
            })
            .collect();

        let exchange_allowed = self.is_resonant() && is_phase(self.coupling.pump_phase, PI / 2.0);
        let exchanges = if exchange_allowed {
            (1..=n_terms)
                .map(|n| ExchangePoint {
                    index: n,
                    tau: (n as f64 - 0.5) * PI,
                    theta: (n as f64 + 1.0) * PI,
                    delta: n as f64 * PI,
                })
                .collect()
        } else {
            Vec::new()
        };
        let exchange_note = if exchange_allowed {
            None
        } else if !self.is_resonant() {
            Some("exchange requires zero detuning".to_string())
        } else {
            Some("exchange requires pump phase pi/2".to_string())
        };

        ExchangeSchedule {
            recurrence_period_slow: PI,
            recurrence_time: PI / derived.omega_slow,
            exchange_time: exchange_allowed.then(|| PI / (2.0 * self.coupling.lambda)),
            rational_chi: rational_approximation(chi),
            recurrences,
            exchanges,
            exchange_note,
        }
    }
}

/// One recurrence point `tau_n = n pi`, where both modes regain their
/// initial configuration up to the listed phase factors
/// `e^{i n pi (1 +/- chi)}`; `exact` marks phase factors equal to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrencePoint {
    pub index: u32,
    pub tau: f64,
    #[serde(with = "complex_pair")]
    pub phase_a: Complex64,
    #[serde(with = "complex_pair")]
    pub phase_b: Complex64,
    pub exact: bool,
}

/// One exchange point `tau'_n = (n - 1/2) pi` with the phase angles
/// `theta_n = (n+1) pi` and `delta_n = n pi` (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangePoint {
    pub index: u32,
    pub tau: f64,
    pub theta: f64,
    pub delta: f64,
}

/// `chi` written as a reduced fraction `m/n` when one matches to 1e-12 with
/// denominator at most 128; recurrences are exact in the field labels when
/// `m + n` is even.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalChi {
    pub m: u32,
    pub n: u32,
    pub negative: bool,
    pub exact_even: bool,
}

/// Characteristic times of the coupled evolution in slow-time units, plus
/// the corresponding real-time periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeSchedule {
    /// Slow-time spacing of recurrences (always `pi`).
    pub recurrence_period_slow: f64,
    /// Real-time recurrence period `pi / omega_slow`.
    pub recurrence_time: f64,
    /// Real time of the first exchange, `pi / (2 lambda)`; populated only at
    /// resonance with a `pi/2` pump, and then half the recurrence time.
    pub exchange_time: Option<f64>,
    pub rational_chi: Option<RationalChi>,
    pub recurrences: Vec<RecurrencePoint>,
    pub exchanges: Vec<ExchangePoint>,
    pub exchange_note: Option<String>,
}

fn rational_approximation(chi: f64) -> Option<RationalChi> {
    let target = chi.abs();
    for n in 1..=128u32 {
        let m = (target * n as f64).round();
        if m >= 0.0 && (target - m / n as f64).abs() < 1e-12 {
            let m = m as u32;
            let g = gcd(m.max(1), n);
            let (m, n) = (m / g, n / g);
            return Some(RationalChi {
                m,
                n,
                negative: chi < 0.0,
                exact_even: (m + n) % 2 == 0,
            });
        }
    }
    None
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scenario(alpha: f64, phi: f64, beta: BetaChoice) -> Scenario {
        Scenario::new(
            CatSpec::new(c(alpha, 0.0), phi).unwrap(),
            beta,
            ModeCoupling::resonant(1.0, PI / 2.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn derived_params_at_resonance() {
        let d = ModeCoupling::resonant(1.0, 0.0).unwrap().derived();
        assert_abs_diff_eq!(d.detuning, 0.0);
        assert_abs_diff_eq!(d.chi, 0.0);
        assert_abs_diff_eq!(d.omega_slow, 1.0);
    }

    #[test]
    fn derived_params_with_detuning() {
        // Omega = 2 lambda  =>  omega = lambda sqrt(2), chi = 1/sqrt(2)
        let lam = 0.7;
        let cpl = ModeCoupling::new(100.0, 60.0, 40.0 - 2.0 * lam, lam, 0.0).unwrap();
        let d = cpl.derived();
        assert_abs_diff_eq!(d.omega_slow, lam * 2.0f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(d.chi, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-14);
    }

    #[test]
    fn chi_invariant_under_rate_scaling() {
        // scaling (Omega, lambda) -> (k Omega, k lambda) leaves chi unchanged
        let base = ModeCoupling::new(10.0, 6.0, 3.0, 0.5, 0.0).unwrap();
        let omega0 = base.detuning();
        let scaled = ModeCoupling::new(10.0, 6.0, 10.0 - 6.0 - 3.0 * omega0, 1.5, 0.0).unwrap();
        assert_abs_diff_eq!(base.derived().chi, scaled.derived().chi, epsilon = 1e-14);
    }

    #[test]
    fn coefficients_at_special_times() {
        let id = evolution_coeffs(0.0, 0.37, 1.2).unwrap();
        assert_abs_diff_eq!((id.u1 - Complex64::ONE).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(id.v1.norm(), 0.0, epsilon = 1e-15);

        // recurrence: u1(pi) = -1 at chi = 0
        let rec = evolution_coeffs(PI, 0.0, 0.4).unwrap();
        assert_abs_diff_eq!((rec.u1 + Complex64::ONE).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rec.v1.norm(), 0.0, epsilon = 1e-12);

        // exchange: u1(pi/2) = 0, v1(pi/2) = 1 at chi = 0, phi = pi/2
        let ex = evolution_coeffs(PI / 2.0, 0.0, PI / 2.0).unwrap();
        assert_abs_diff_eq!(ex.u1.norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((ex.v1 - Complex64::ONE).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((ex.v2 + Complex64::ONE).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn coefficient_identities() {
        for &chi in &[0.0, 0.3, std::f64::consts::FRAC_1_SQRT_2, 0.99] {
            for i in 0..100 {
                let tau = i as f64 * 0.13;
                let co = evolution_coeffs(tau, chi, 0.77).unwrap();
                assert!(co.unitarity_defect() < 1e-12);
                assert_eq!(co.u2, co.u1.conj());
                assert_eq!(co.v2, -co.v1.conj());
            }
        }
    }

    #[test]
    fn z_label_swap_and_conservation() {
        let alpha = c(1.0, 0.2);
        let beta = c(0.4, -0.7);
        let at0 = z_labels(&evolution_coeffs(0.0, 0.0, PI / 2.0).unwrap(), alpha, beta);
        assert_abs_diff_eq!((at0.z1 - alpha).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((at0.z2 - alpha).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((at0.z3 - beta).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((at0.z4 + beta).norm(), 0.0, epsilon = 1e-15);

        let swap = z_labels(
            &evolution_coeffs(PI / 2.0, 0.0, PI / 2.0).unwrap(),
            alpha,
            beta,
        );
        assert_abs_diff_eq!((swap.z1 - beta).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((swap.z3 + alpha).norm(), 0.0, epsilon = 1e-14);

        for i in 0..64 {
            let tau = i as f64 * 0.21;
            let z = z_labels(&evolution_coeffs(tau, 0.31, 0.9).unwrap(), alpha, beta);
            let budget = alpha.norm_sqr() + beta.norm_sqr();
            assert_abs_diff_eq!(z.z1.norm_sqr() + z.z3.norm_sqr(), budget, epsilon = 1e-12);
            assert_abs_diff_eq!(z.z2.norm_sqr() + z.z4.norm_sqr(), budget, epsilon = 1e-12);
        }
    }

    #[test]
    fn joint_state_initial_condition() {
        let s = scenario(1.0, 0.0, BetaChoice::Balanced);
        let built = s.joint_state(0.0, 20).unwrap();
        let reference = s.initial_state(20).unwrap();
        let diff: f64 = built
            .amps()
            .iter()
            .zip(reference.amps())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12, "joint state at tau=0 deviates by {diff}");
    }

    #[test]
    fn joint_state_recurrence_and_exchange() {
        let s = scenario(1.0, 0.0, BetaChoice::Explicit(c(0.6, 0.0)));
        let n = 24;

        // tau = pi: product state with flipped labels
        let rec = s.joint_state(PI, n).unwrap();
        let flipped = tensor_product(
            &cat_ket(&CatSpec::new(c(-1.0, 0.0), 0.0).unwrap(), n).unwrap(),
            &coherent_ket(c(-0.6, 0.0), n),
        );
        assert!(1.0 - flipped.fidelity(&rec) < 1e-12);

        // tau = pi/2 with Phi = 0: modes swap configurations
        let ex = s.joint_state(PI / 2.0, n).unwrap();
        let swapped = s.exchanged_initial_state(n).unwrap();
        assert!(1.0 - swapped.fidelity(&ex) < 1e-12);
    }

    #[test]
    fn yurke_stoler_exchange_state() {
        // at tau = pi/2 (n = 1) mode A holds |beta> and mode B the cat with
        // its label rotated by pi
        let s = scenario(1.0, PI / 2.0, BetaChoice::Explicit(c(0.6, 0.0)));
        let n = 24;
        let ex = s.joint_state(PI / 2.0, n).unwrap();
        let reference = tensor_product(
            &coherent_ket(c(0.6, 0.0), n),
            &cat_ket(&CatSpec::new(c(-1.0, 0.0), PI / 2.0).unwrap(), n).unwrap(),
        );
        assert!(1.0 - reference.fidelity(&ex) < 1e-12);
    }

    #[test]
    fn four_dyad_reduced_density_construction() {
        // the reduced mode-A operator assembled from its four coherent dyads,
        // with decoherence factor e^{-|alpha|^2 (1 - cos 2 tau)} and phase
        // e^{2i Im(u2 v2* alpha* beta)}, against the partial trace
        use crate::fock::Mode;
        use nalgebra::DMatrix;

        let s = scenario(1.0, 0.0, BetaChoice::Balanced);
        let tau = PI / 4.0;
        let n = 24;
        let dim = n + 1;

        let co = s.coeffs_at(tau);
        let z = s.z_labels_at(tau);
        let alpha = s.alpha();
        let a2 = alpha.norm_sqr();
        let n2 = s.cat.normalization().powi(2);
        let k1 = coherent_ket(z.z1, n);
        let k2 = coherent_ket(-z.z2, n);
        let decay = (-a2 * (1.0 - (2.0 * tau).cos())).exp();
        let cross_phase = Complex64::cis(-s.big_phi())
            * Complex64::cis(2.0 * (co.u2 * co.v2.conj() * alpha.conj() * s.beta).im);
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let cross = decay * cross_phase * k1.amp(i) * k2.amp(j).conj();
                let cross_hc = (decay * cross_phase * k1.amp(j) * k2.amp(i).conj()).conj();
                m[(i, j)] = (k1.amp(i) * k1.amp(j).conj()
                    + k2.amp(i) * k2.amp(j).conj()
                    + cross
                    + cross_hc)
                    / n2;
            }
        }

        let from_state = s.joint_state(tau, n).unwrap().reduced_density(Mode::A);
        let diff = (from_state.matrix() - &m).norm();
        assert!(diff < 1e-10, "four-dyad construction deviates by {diff}");

        let entropy = 1.0 - m.iter().map(|v| v.norm_sqr()).sum::<f64>();
        assert_abs_diff_eq!(entropy, s.linear_entropy(tau).unwrap(), epsilon = 1e-10);
    }

    #[test]
    fn joint_state_stays_normalized() {
        let s = scenario(5.0f64.sqrt(), PI / 2.0, BetaChoice::Balanced);
        let n = s.oracle_truncation(1e-12).unwrap();
        for i in 0..8 {
            let tau = i as f64 * 0.4;
            let psi = s.joint_state(tau, n).unwrap();
            assert_abs_diff_eq!(psi.norm_sqr(), 1.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn entropy_values() {
        let s = scenario(1.0, 0.0, BetaChoice::Balanced);
        assert_abs_diff_eq!(s.linear_entropy(0.0).unwrap(), 0.0, epsilon = 1e-14);
        // disentanglement at every quarter period
        for k in 0..=8 {
            let tau = k as f64 * PI / 2.0;
            assert!(s.linear_entropy(tau).unwrap().abs() < 1e-9);
        }
        assert_abs_diff_eq!(
            s.linear_entropy(PI / 4.0).unwrap(),
            0.290012829192987,
            epsilon = 1e-12
        );
    }

    #[test]
    fn entropy_rejects_detuning() {
        let cpl = ModeCoupling::new(100.0, 60.0, 39.0, 1.0, PI / 2.0).unwrap();
        let s = Scenario::new(
            CatSpec::new(Complex64::ONE, 0.0).unwrap(),
            BetaChoice::Balanced,
            cpl,
        )
        .unwrap();
        assert!(matches!(
            s.linear_entropy(0.3),
            Err(Error::DetuningNotSupported(_))
        ));
    }

    #[test]
    fn mean_photon_numbers_at_zero_time() {
        let s = scenario(1.0, 0.0, BetaChoice::Explicit(c(0.5, 0.0)));
        let (n_a, n_b) = s.mean_photon_numbers(0.0).unwrap();
        assert_abs_diff_eq!(n_a, 1.0f64.tanh(), epsilon = 1e-14);
        assert_abs_diff_eq!(n_b, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn balanced_scenario_energies_are_constant() {
        let s = scenario(1.0, 0.0, BetaChoice::Balanced);
        let (n0, _) = s.mean_photon_numbers(0.0).unwrap();
        assert_abs_diff_eq!(n0, 1.0f64.tanh(), epsilon = 1e-14);
        for i in 0..100 {
            let tau = i as f64 * 0.0713;
            let (n_a, n_b) = s.mean_photon_numbers(tau).unwrap();
            assert_abs_diff_eq!(n_a, n0, epsilon = 1e-12);
            assert_abs_diff_eq!(n_b, n0, epsilon = 1e-12);
        }
    }

    #[test]
    fn photon_sum_is_conserved() {
        let s = scenario(1.3, 0.9, BetaChoice::Explicit(c(0.8, 0.0)));
        let (a0, b0) = s.mean_photon_numbers(0.0).unwrap();
        for i in 0..100 {
            let tau = i as f64 * 0.0917;
            let (n_a, n_b) = s.mean_photon_numbers(tau).unwrap();
            assert_abs_diff_eq!(n_a + n_b, a0 + b0, epsilon = 1e-12);
        }
    }

    #[test]
    fn balanced_intensity_values() {
        assert_abs_diff_eq!(
            balanced_intensity(Complex64::ONE, 0.0).unwrap(),
            1.0f64.tanh(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            balanced_intensity(Complex64::ONE, PI).unwrap(),
            1.0 / 1.0f64.tanh(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            balanced_intensity(c(1.7, 0.0), PI / 2.0).unwrap(),
            1.7 * 1.7,
            epsilon = 1e-14
        );
        assert_eq!(
            balanced_intensity(c(1e-5, 0.0), PI).unwrap_err(),
            Error::NullState
        );
    }

    #[test]
    fn variance_matches_initial_cat_statistics() {
        let s = scenario(1.0, 0.0, BetaChoice::Balanced);
        let v0 = s.photon_number_variance(0.0).unwrap();
        let cat = cat_ket(&s.cat, 24).unwrap();
        let (_, var) = cat.number_statistics();
        assert_abs_diff_eq!(v0, var, epsilon = 1e-10);
        assert_abs_diff_eq!(v0, 1.181568497570, epsilon = 1e-10);
    }

    #[test]
    fn variance_at_exchange_time_is_poissonian() {
        // mode A holds the initial coherent state at tau = pi/2
        let s = scenario(1.0, 0.0, BetaChoice::Balanced);
        let v = s.photon_number_variance(PI / 2.0).unwrap();
        assert_abs_diff_eq!(v, s.beta.norm_sqr(), epsilon = 1e-12);
    }

    #[test]
    fn variance_rejects_yurke_stoler() {
        let s = scenario(1.0, PI / 2.0, BetaChoice::Balanced);
        assert!(matches!(
            s.photon_number_variance(0.1),
            Err(Error::UnsupportedPhase(_))
        ));
    }

    #[test]
    fn exchange_functional_special_values() {
        // perfect exchange for the even cat
        let s = scenario(1.0, 0.0, BetaChoice::Balanced);
        assert_abs_diff_eq!(
            s.exchange_functional(PI / 2.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );

        // Yurke-Stoler plateau: (cos Phi + e^{-2})^2 / (1 + cos Phi e^{-2})^2 = e^{-4}
        let ys = scenario(1.0, PI / 2.0, BetaChoice::Balanced);
        assert_abs_diff_eq!(
            ys.exchange_functional(PI / 2.0).unwrap(),
            (-4.0f64).exp(),
            epsilon = 1e-12
        );

        // E(3 pi/2) = e^{-4 |beta|^2} independent of alpha and Phi
        let beta = c(5.0f64.tanh().sqrt(), 0.0);
        let expected = (-4.0 * 5.0f64.tanh()).exp();
        for &(a, phi) in &[(1.0, 0.0), (5.0f64.sqrt(), PI / 2.0), (5.0f64.sqrt(), PI)] {
            let s = scenario(a, phi, BetaChoice::Explicit(beta));
            assert_abs_diff_eq!(
                s.exchange_functional(1.5 * PI).unwrap(),
                expected,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn exchange_functional_matches_overlap_route() {
        let s = scenario(1.0, 0.7, BetaChoice::Explicit(c(0.6, 0.0)));
        let n = s.oracle_truncation(1e-12).unwrap();
        for i in 0..200 {
            let tau = i as f64 * (2.0 * PI / 199.0);
            let closed = s.exchange_functional(tau).unwrap();
            let overlap = s.exchange_functional_from_overlap(tau, n).unwrap();
            assert_abs_diff_eq!(closed, overlap, epsilon = 1e-9);
        }
    }

    #[test]
    fn exchange_overlap_at_zero_with_vacuum_partner() {
        let s = scenario(5.0f64.sqrt(), 0.0, BetaChoice::Explicit(Complex64::ZERO));
        let got = s.exchange_functional_from_overlap(0.0, 40).unwrap();
        assert_abs_diff_eq!(got, 1.8158323094e-4, epsilon = 1e-10);
    }

    #[test]
    fn schedule_at_resonance() {
        let s = scenario(1.0, 0.0, BetaChoice::Balanced);
        let sched = s.schedule(4);
        assert_abs_diff_eq!(sched.recurrence_time, PI, epsilon = 1e-14);
        assert_abs_diff_eq!(sched.exchange_time.unwrap(), PI / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sched.recurrence_time, 2.0 * sched.exchange_time.unwrap());
        assert_eq!(sched.recurrences[0].tau, PI);
        assert_eq!(sched.exchanges[0].tau, PI / 2.0);
        assert_abs_diff_eq!(sched.exchanges[0].theta, 2.0 * PI);
        // chi = 0: recurrence phases alternate -1, +1; exact at even n
        assert!(!sched.recurrences[0].exact);
        assert!(sched.recurrences[1].exact);
    }

    #[test]
    fn schedule_flags_rational_chi() {
        // chi = 1/3 (m + n even): exact recurrence at tau = 3 pi.
        // chi = Omega / sqrt(Omega^2 + 4 lambda^2) inverts to
        // Omega = 2 lambda chi / sqrt(1 - chi^2).
        let lam: f64 = 0.5;
        let chi = 1.0 / 3.0;
        let detuning = 2.0 * lam * chi / (1.0 - chi * chi).sqrt();
        let cpl = ModeCoupling::new(100.0, 60.0, 40.0 - detuning, lam, PI / 2.0).unwrap();
        let s = Scenario::new(
            CatSpec::new(Complex64::ONE, 0.0).unwrap(),
            BetaChoice::Explicit(c(0.5, 0.0)),
            cpl,
        )
        .unwrap();
        assert_abs_diff_eq!(s.derived().chi, chi, epsilon = 1e-14);
        let sched = s.schedule(4);
        let rat = sched.rational_chi.unwrap();
        assert_eq!((rat.m, rat.n), (1, 3));
        assert!(rat.exact_even);
        assert!(!sched.recurrences[0].exact);
        assert!(!sched.recurrences[1].exact);
        assert!(sched.recurrences[2].exact, "exact recurrence at tau = 3 pi");
        // detuned: no exchange times
        assert!(sched.exchanges.is_empty());
        assert!(sched.exchange_note.is_some());
    }

    #[test]
    fn schedule_without_quarter_pump() {
        let s = Scenario::new(
            CatSpec::new(Complex64::ONE, 0.0).unwrap(),
            BetaChoice::Balanced,
            ModeCoupling::resonant(1.0, 0.0).unwrap(),
        )
        .unwrap();
        let sched = s.schedule(3);
        assert!(sched.exchanges.is_empty());
        assert_eq!(
            sched.exchange_note.as_deref(),
            Some("exchange requires pump phase pi/2")
        );
    }

    #[test]
    fn schedule_real_time_scales_with_coupling_rate() {
        let s = Scenario::new(
            CatSpec::new(Complex64::ONE, 0.0).unwrap(),
            BetaChoice::Balanced,
            ModeCoupling::resonant(2.0, PI / 2.0).unwrap(),
        )
        .unwrap();
        let sched = s.schedule(1);
        assert_abs_diff_eq!(sched.recurrence_time, PI / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sched.exchange_time.unwrap(), PI / 4.0, epsilon = 1e-14);
        // slow-time positions are rate-independent
        assert_abs_diff_eq!(sched.recurrences[0].tau, PI);
        assert_abs_diff_eq!(sched.exchanges[0].tau, PI / 2.0);
    }

    #[test]
    fn rwc_validity_flag() {
        let good = ModeCoupling::resonant(1.0, 0.0).unwrap();
        assert!(good.rwc_valid());
        let bad = ModeCoupling::new(3.0, 2.0, 1.0, 1.0, 0.0).unwrap();
        assert!(!bad.rwc_valid());
    }
}
