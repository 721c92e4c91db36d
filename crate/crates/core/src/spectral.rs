//! Spectral data of a peakon configuration.
//!
//! A configuration of n peakons at positions x1 < ... < xn with masses m_k
//! carries a boundary-value problem whose data is a triple of polynomials
//! (A, B, C) in the spectral parameter z. The triple is built by sweeping the
//! sites left to right and applying a rank-one transition matrix at each one.
//! Eigenvalues are the zeros of A; the residues of the Weyl function
//! -B/(2zA) at those zeros, together with their adjoint counterparts, encode
//! enough of the configuration to reconstruct the outermost peakons exactly.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::polycalc::{partial_fractions, PoleExpansion, Poly, RootSet};

/// Positions and masses of an ordered peakon configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct PeakonState {
    pub x: Vec<f64>,
    pub m: Vec<f64>,
}

impl PeakonState {
    /// Validating constructor: positions strictly increasing, everything
    /// finite, lengths equal and nonzero.
    pub fn new(x: Vec<f64>, m: Vec<f64>) -> Result<Self> {
        let state = PeakonState { x, m };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.is_empty() {
            return Err(Error::InvalidState("no peakons".into()));
        }
        if self.x.len() != self.m.len() {
            return Err(Error::InvalidState(format!(
                "{} positions but {} masses",
                self.x.len(),
                self.m.len()
            )));
        }
        if self.x.iter().chain(self.m.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("positions and masses must be finite".into()));
        }
        if self.x.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidState(
                "positions must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Wave profile u(x) = sum_k m_k e^{-|x - x_k|}.
    pub fn u(&self, x: f64) -> f64 {
        self.x
            .iter()
            .zip(&self.m)
            .map(|(&xk, &mk)| mk * (-(x - xk).abs()).exp())
            .sum()
    }

    /// The configuration read right to left through a sign flip of the
    /// positions. Its spectral triple is the adjoint one.
    pub fn reversed_negated(&self) -> PeakonState {
        PeakonState {
            x: self.x.iter().rev().map(|&x| -x).collect(),
            m: self.m.iter().rev().copied().collect(),
        }
    }
}

/// The polynomials (A, B, C) produced by the site sweep.
#[derive(Clone, Debug)]
pub struct PolyTriple {
    pub a: Poly,
    pub b: Poly,
    pub c: Poly,
}

impl PolyTriple {
    pub fn eval(&self, z: Complex64) -> [Complex64; 3] {
        [self.a.eval(z), self.b.eval(z), self.c.eval(z)]
    }
}

/// Transition matrix of a single site: S = I - z m u v^T with
/// u = (e^{-x}, -2, e^{x}) and v = (e^{x}, 1, e^{-x}). Its determinant is 1
/// for every z.
pub fn transition_matrix(x: f64, m: f64, z: Complex64) -> [[Complex64; 3]; 3] {
    let u = [(-x).exp(), -2.0, x.exp()];
    let v = [x.exp(), 1.0, (-x).exp()];
    let mut s = [[Complex64::ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { Complex64::ONE } else { Complex64::ZERO };
            s[i][j] = delta - z * m * u[i] * v[j];
        }
    }
    s
}

/// Builds (A, B, C) by applying the site transitions in increasing position
/// order to the initial triple (1, 0, 0).
pub fn spectral_polynomials(state: &PeakonState) -> PolyTriple {
    let mut a = Poly::constant(Complex64::ONE);
    let mut b = Poly::zero();
    let mut c = Poly::zero();
    for (&xk, &mk) in state.x.iter().zip(&state.m) {
        let ep = Complex64::new(xk.exp(), 0.0);
        let en = Complex64::new((-xk).exp(), 0.0);
        let w = a.scale(ep).add(&b).add(&c.scale(en));
        let zmw = w.mul_z().scale(Complex64::new(mk, 0.0));
        a = a.sub(&zmw.scale(en));
        b = b.add(&zmw.scale(Complex64::new(2.0, 0.0)));
        c = c.sub(&zmw.scale(ep));
    }
    PolyTriple { a, b, c }
}

/// The adjoint triple: the sweep applied to the reversed, sign-flipped
/// configuration. Its A polynomial coincides with the direct one.
pub fn adjoint_polynomials(state: &PeakonState) -> PolyTriple {
    spectral_polynomials(&state.reversed_negated())
}

/// Eigenvalues of a configuration: the zeros of A, with multiplicities
/// clustered at the given relative tolerance.
pub fn eigenvalues(state: &PeakonState, cluster_tol: f64) -> Result<RootSet> {
    spectral_polynomials(state).a.roots(cluster_tol)
}

/// Symmetric matching distance between two expanded spectra: the largest
/// distance from any member of one set to its nearest member of the other.
/// Index-wise comparison is unreliable here because a conjugate pair's sort
/// order can flip when the real parts agree to the last bit.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let one_sided = |p: &[Complex64], q: &[Complex64]| {
        p.iter()
            .map(|x| {
                q.iter()
                    .map(|y| (x - y).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Largest normalized defect of
/// 2 A(z) C(-z) + 2 A(-z) C(z) - B(z) B(-z) = 0
/// over `samples` random z drawn inside |z| <= 2 / min |eigenvalue|.
pub fn fundamental_identity_defect(
    state: &PeakonState,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let triple = spectral_polynomials(state);
    let roots = triple.a.roots(crate::polycalc::DEFAULT_CLUSTER_TOL)?;
    let min_abs = roots.min_abs();
    if min_abs <= 0.0 {
        return Err(Error::InvalidSpectrum("eigenvalue at the origin".into()));
    }
    let radius = 2.0 / min_abs;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let r = radius * rng.random_range(0.0..1.0_f64);
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let z = Complex64::from_polar(r, theta);
        let [ap, bp, cp] = triple.eval(z);
        let [am, bm, cm] = triple.eval(-z);
        let t1 = 2.0 * ap * cm;
        let t2 = 2.0 * am * cp;
        let t3 = bp * bm;
        let scale = t1.norm().max(t2.norm()).max(t3.norm()).max(1e-30);
        worst = worst.max((t1 + t2 - t3).norm() / scale);
    }
    Ok(worst)
}

/// Eigenvalues plus the residue data of the Weyl functions at them.
#[derive(Clone, Debug)]
pub struct SpectrumData {
    pub eigenvalues: RootSet,
    /// Residue expansions of -B/(2zA), one per eigenvalue, highest-order
    /// coefficient last. A simple eigenvalue carries a single coefficient.
    pub residues: Vec<PoleExpansion>,
    /// Same data for the adjoint Weyl function -B~/(2zA).
    pub adjoint_residues: Vec<PoleExpansion>,
    /// B'(0) / 2, the total momentum seen from the right.
    pub m_plus: f64,
    /// B~'(0) / 2, the total momentum seen from the left.
    pub m_minus: f64,
}

/// Extracts residue data from a direct and adjoint triple. The two A
/// polynomials must agree to 1e-12 relative, which holds for triples built
/// from one configuration.
pub fn weyl_residues(
    triple: &PolyTriple,
    adjoint: &PolyTriple,
    cluster_tol: f64,
) -> Result<SpectrumData> {
    let a_scale = triple.a.max_coeff_norm();
    let degree = triple.a.degree().max(adjoint.a.degree());
    for k in 0..=degree {
        if (triple.a.coeff(k) - adjoint.a.coeff(k)).norm() > 1e-12 * a_scale {
            return Err(Error::Internal(
                "direct and adjoint A polynomials disagree".into(),
            ));
        }
    }

    let roots = triple.a.roots(cluster_tol)?;
    if roots.min_abs() <= 1e-12 {
        return Err(Error::InvalidSpectrum("eigenvalue at the origin".into()));
    }

    let residues = partial_fractions(
        &weyl_numerator(&triple.b)?,
        &roots,
        triple.a.leading(),
    )?
    .terms;
    let adjoint_residues = partial_fractions(
        &weyl_numerator(&adjoint.b)?,
        &roots,
        adjoint.a.leading(),
    )?
    .terms;

    Ok(SpectrumData {
        eigenvalues: roots,
        residues,
        adjoint_residues,
        m_plus: triple.b.coeff(1).re / 2.0,
        m_minus: adjoint.b.coeff(1).re / 2.0,
    })
}

/// -B/(2z) as a polynomial. B always vanishes at the origin, so the division
/// is exact.
fn weyl_numerator(b: &Poly) -> Result<Poly> {
    let scale = b.max_coeff_norm().max(f64::MIN_POSITIVE);
    if b.coeff(0).norm() > 1e-14 * scale {
        return Err(Error::InvalidSpectrum(
            "boundary polynomial does not vanish at the origin".into(),
        ));
    }
    let coeffs = b
        .coeffs()
        .iter()
        .skip(1)
        .map(|&c| -c / 2.0)
        .collect::<Vec<_>>();
    Ok(Poly::new(coeffs))
}

/// Full spectral data of a configuration.
pub fn spectrum(state: &PeakonState, cluster_tol: f64) -> Result<SpectrumData> {
    weyl_residues(
        &spectral_polynomials(state),
        &adjoint_polynomials(state),
        cluster_tol,
    )
}
