//! Closed-form evolution of three-peakon configurations.
//!
//! The residues of the Weyl functions evolve by pure exponentials in time:
//! b_j(t) = b_j(0) e^{t/lambda_j} for a simple eigenvalue, with a secular
//! t e^{t/lambda} correction when an eigenvalue is double, and the adjoint
//! residues evolve with the opposite exponent. Summing them gives the
//! rightmost and leftmost positions exactly:
//!
//!   e^{x3(t)} = sum_j b_j(t),   e^{-x1(t)} = sum_j b~_j(t).
//!
//! The outermost masses follow from one quadrature each,
//!
//!   1/m3(t) = e^{-2 x3} [ e^{2 x3(0)}/m3(0) + 2 int_0^t e^{2 x3} ],
//!   1/m1(t) = e^{ 2 x1} [ e^{-2 x1(0)}/m1(0) - 2 int_0^t e^{-2 x1} ],
//!
//! and the middle peakon comes from the conserved total mass and the
//! momentum balance. Everything on the right-hand sides is a finite sum of
//! terms t^p e^{mu t}, so the quadratures are exact and the formulas are
//! global in t; their validity window is bounded only by the zeros of the
//! two outer exponential sums.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::polycalc::ExpSum;
use crate::polycalc::ExpTerm;
use crate::spectral::{spectrum, PeakonState, SpectrumData};

/// Tuning knobs for the closed-form construction.
#[derive(Clone, Debug)]
pub struct CfOptions {
    /// Relative tolerance for clustering nearby eigenvalues into one.
    pub cluster_tol: f64,
    /// Rates smaller than this integrate as polynomial terms.
    pub resonance_tol: f64,
    /// How far the validity window is scanned in each time direction.
    pub horizon: f64,
}

impl Default for CfOptions {
    fn default() -> Self {
        CfOptions {
            cluster_tol: 1e-7,
            resonance_tol: 1e-9,
            horizon: 50.0,
        }
    }
}

/// One outer inverse mass as a ratio: 1/m = core / envelope. The envelope is
/// the square of the corresponding outer exponential sum, positive inside
/// the validity window, so collisions of the adjacent pair are exactly the
/// zeros of the core.
#[derive(Clone, Debug)]
pub struct InverseMass {
    pub core: ExpSum,
    pub envelope: ExpSum,
}

impl InverseMass {
    pub fn value(&self, t: f64) -> f64 {
        let (cm, ce) = self.core.scaled_value(t);
        let (em, ee) = self.envelope.scaled_value(t);
        cm.re / em.re * (ce - ee).exp()
    }
}

/// Raw coordinate values produced by the formulas, before any validation.
#[derive(Clone, Copy, Debug)]
pub struct Coords3 {
    pub x: [f64; 3],
    pub m: [f64; 3],
}

/// A three-peakon solution in closed form.
#[derive(Clone, Debug)]
pub struct ClosedForm3 {
    /// e^{x3(t)}.
    pub e_x3: ExpSum,
    /// e^{-x1(t)}.
    pub e_mx1: ExpSum,
    pub inv_m3: InverseMass,
    pub inv_m1: InverseMass,
    /// Conserved total mass m1 + m2 + m3.
    pub m_total: f64,
    pub spectrum: SpectrumData,
    window: (f64, f64),
}

impl ClosedForm3 {
    pub fn new(state: &PeakonState, opts: &CfOptions) -> Result<Self> {
        state.validate()?;
        if state.n() != 3 {
            return Err(Error::Unsupported(
                "closed-form evolution is implemented for three peakons".into(),
            ));
        }
        if state.m.iter().any(|&m| m == 0.0) {
            return Err(Error::InvalidState(
                "closed-form evolution needs nonzero masses".into(),
            ));
        }

        let data = spectrum(state, opts.cluster_tol)?;
        if data.eigenvalues.roots.iter().any(|&(_, d)| d > 2) {
            return Err(Error::Internal(
                "an eigenvalue of multiplicity three or more cannot arise from three peakons"
                    .into(),
            ));
        }

        let mut terms_x3 = Vec::new();
        let mut terms_mx1 = Vec::new();
        for (expansion, adj) in data.residues.iter().zip(&data.adjoint_residues) {
            let lam = expansion.pole;
            let rate = Complex64::ONE / lam;
            terms_x3.push(ExpTerm {
                coeff: expansion.coeffs[0],
                power: 0,
                rate,
            });
            terms_mx1.push(ExpTerm {
                coeff: adj.coeffs[0],
                power: 0,
                rate: -rate,
            });
            if expansion.coeffs.len() == 2 {
                let lam2 = lam * lam;
                terms_x3.push(ExpTerm {
                    coeff: -expansion.coeffs[1] / lam2,
                    power: 1,
                    rate,
                });
                terms_mx1.push(ExpTerm {
                    coeff: adj.coeffs[1] / lam2,
                    power: 1,
                    rate: -rate,
                });
            }
        }
        let e_x3 = ExpSum::new(terms_x3);
        let e_mx1 = ExpSum::new(terms_mx1);

        // The sums must reproduce the outer positions and momenta at t = 0.
        // Clustered nearly-degenerate eigenvalues lose some precision to
        // cancellation, so the scale includes the residue magnitudes.
        let spread: f64 = data
            .residues
            .iter()
            .chain(&data.adjoint_residues)
            .flat_map(|e| e.coeffs.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let checks = [
            (e_x3.value(0.0), state.x[2].exp()),
            (e_mx1.value(0.0), (-state.x[0]).exp()),
            (e_x3.derivative().value(0.0), data.m_plus),
            (e_mx1.derivative().value(0.0), -data.m_minus),
        ];
        for (got, want) in checks {
            let scale = spread.max(want.abs()).max(1.0);
            if !got.is_finite() || (got - want).norm() > 1e-8 * scale {
                return Err(Error::Internal(format!(
                    "residue data reproduces {got} instead of {want} at t = 0"
                )));
            }
        }

        // In a direction where the configuration stays free, the constant
        // part of the core cancels exactly against the converged integral;
        // roundoff leaves a residue around 1e-13 relative that would
        // eventually dominate the decaying tail and fake a late collision,
        // so coefficients at that floor are dropped.
        let sq_x3 = e_x3.product(&e_x3);
        let sq_mx1 = e_mx1.product(&e_mx1);
        let inv_m3 = InverseMass {
            core: ExpSum::constant((2.0 * state.x[2]).exp() / state.m[2])
                .add(&sq_x3.antiderivative(opts.resonance_tol).scale(2.0))
                .drop_negligible(1e-12),
            envelope: sq_x3,
        };
        let inv_m1 = InverseMass {
            core: ExpSum::constant((-2.0 * state.x[0]).exp() / state.m[0])
                .sub(&sq_mx1.antiderivative(opts.resonance_tol).scale(2.0))
                .drop_negligible(1e-12),
            envelope: sq_mx1,
        };

        let hi = [
            e_x3.smallest_positive_root(opts.horizon)?,
            e_mx1.smallest_positive_root(opts.horizon)?,
        ]
        .into_iter()
        .flatten()
        .fold(f64::INFINITY, f64::min);
        let lo = -[
            e_x3.reflected().smallest_positive_root(opts.horizon)?,
            e_mx1.reflected().smallest_positive_root(opts.horizon)?,
        ]
        .into_iter()
        .flatten()
        .fold(f64::INFINITY, f64::min);

        Ok(ClosedForm3 {
            e_x3,
            e_mx1,
            inv_m3,
            inv_m1,
            m_total: state.m.iter().sum(),
            spectrum: data,
            window: (lo, hi),
        })
    }

    /// Open interval around 0 on which the formulas define the positions.
    /// Masses may still blow up at isolated interior collision times.
    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// Raw formula values at time t. Masses are infinite exactly at a
    /// collision; the middle position is meaningful only while the
    /// configuration stays ordered. Fails outside the window and when the
    /// middle mass vanishes.
    pub fn coords_at(&self, t: f64) -> Result<Coords3> {
        let (lo, hi) = self.window;
        if !(t > lo && t < hi) {
            return Err(Error::OutsideWindow { t, lo, hi });
        }

        let (man3, exp3) = self.e_x3.scaled_value(t);
        let (man1, exp1) = self.e_mx1.scaled_value(t);
        if man3.re <= 0.0 || man1.re <= 0.0 {
            return Err(Error::Internal(format!(
                "outer exponential sums lost positivity at t = {t}"
            )));
        }
        let x3 = man3.re.ln() + exp3;
        let x1 = -(man1.re.ln() + exp1);

        let m3 = 1.0 / self.inv_m3.value(t);
        let m1 = 1.0 / self.inv_m1.value(t);
        let m2 = self.m_total - m1 - m3;
        if m2.abs() < 1e-12 {
            return Err(Error::MassTwoVanishes { t });
        }

        // x2 = x3 + ln((M+ e^{-x3} - m1 e^{x1 - x3} - m3) / m2), with
        // M+ = d/dt e^{x3} evaluated against e^{x3} at matched scale. The
        // combination cancels almost completely once the outer peakons are
        // separated by more than roughly 36 units; past that point the
        // middle position carries no correct digits and the formula fails
        // loudly instead.
        let (dman, dexp) = self.e_x3.derivative().scaled_value(t);
        let q = dman.re / man3.re * (dexp - exp3).exp();
        let outer = m1 * (x1 - x3).exp();
        let numerator = q - outer - m3;
        let cancellation_scale = q.abs() + outer.abs() + m3.abs();
        if !numerator.is_finite() || numerator.abs() <= 1e-12 * cancellation_scale {
            return Err(Error::SeparationLimit { t });
        }
        let arg = numerator / m2;
        if arg <= 0.0 {
            return Err(Error::SeparationLimit { t });
        }
        let x2 = x3 + arg.ln();

        Ok(Coords3 {
            x: [x1, x2, x3],
            m: [m1, m2, m3],
        })
    }

    /// Validated state at time t: coordinates must be finite and ordered.
    pub fn state_at(&self, t: f64) -> Result<PeakonState> {
        let c = self.coords_at(t)?;
        PeakonState::new(c.x.to_vec(), c.m.to_vec())
    }
}
