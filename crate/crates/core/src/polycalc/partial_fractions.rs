use num_complex::Complex64;

use super::{Poly, RootSet, DEFAULT_CLUSTER_TOL};
use crate::error::{Error, Result};

/// All coefficients attached to one pole: `coeffs[k-1]` multiplies
/// `1/(z - pole)^k`, k = 1..=multiplicity.
#[derive(Clone, Debug)]
pub struct PoleExpansion {
    pub pole: Complex64,
    pub coeffs: Vec<Complex64>,
}

/// Partial fraction decomposition of a strictly proper rational function.
#[derive(Clone, Debug)]
pub struct PartialFractions {
    pub terms: Vec<PoleExpansion>,
}

impl PartialFractions {
    /// Reconstruction: the sum of all pole terms at z.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for term in &self.terms {
            let w = z - term.pole;
            let mut pw = w;
            for &c in &term.coeffs {
                acc += c / pw;
                pw *= w;
            }
        }
        acc
    }
}

/// Decomposes num(z) / (den_scale * prod (z - lambda_j)^{d_j}) over the given
/// poles. Order-k coefficients at a pole of multiplicity d are the Taylor
/// coefficients of num(z) * (z - lambda)^d / den(z) around lambda, computed by
/// exact truncated-series arithmetic (the factored denominator is never
/// expanded, and nothing is differentiated numerically).
pub fn partial_fractions(
    num: &Poly,
    den_roots: &RootSet,
    den_scale: Complex64,
) -> Result<PartialFractions> {
    let total = den_roots.total_multiplicity();
    if num.degree() + 1 > total && !num.is_zero() {
        return Err(Error::Unsupported(format!(
            "partial fractions need deg(num) < deg(den): got {} >= {}",
            num.degree(),
            total
        )));
    }
    if den_scale.norm() == 0.0 {
        return Err(Error::InvalidSpectrum("denominator scale is zero".into()));
    }

    if num.degree() >= 1 {
        let num_roots = num.roots(DEFAULT_CLUSTER_TOL)?;
        for (r, _) in &num_roots.roots {
            for (pole, _) in &den_roots.roots {
                if (r - pole).norm() <= DEFAULT_CLUSTER_TOL * r.norm().max(pole.norm()).max(1.0) {
                    return Err(Error::PoleZeroOverlap { root: *pole });
                }
            }
        }
    }

    let mut terms = Vec::with_capacity(den_roots.roots.len());
    for (i, &(pole, d)) in den_roots.roots.iter().enumerate() {
        // Series of den(z)/(z - pole)^d around pole, truncated to d terms.
        let mut tail = vec![Complex64::ZERO; d];
        tail[0] = den_scale;
        for (j, &(other, dj)) in den_roots.roots.iter().enumerate() {
            if j == i {
                continue;
            }
            for _ in 0..dj {
                series_mul_linear(&mut tail, pole - other);
            }
        }
        if tail[0].norm() == 0.0 {
            return Err(Error::InvalidSpectrum(
                "coincident poles passed as distinct roots".into(),
            ));
        }

        let num_series = num.taylor_at(pole, d);

        // g = num_series / tail, truncated; c^{(k)} is the coefficient of
        // w^{d-k} in g.
        let mut g = vec![Complex64::ZERO; d];
        for k in 0..d {
            let mut acc = num_series[k];
            for j in 1..=k {
                acc -= tail[j] * g[k - j];
            }
            g[k] = acc / tail[0];
        }

        let coeffs = (1..=d).map(|k| g[d - k]).collect();
        terms.push(PoleExpansion { pole, coeffs });
    }
    Ok(PartialFractions { terms })
}

/// Multiplies a truncated series in-place by (a + w).
fn series_mul_linear(series: &mut [Complex64], a: Complex64) {
    for k in (0..series.len()).rev() {
        let lower = if k > 0 { series[k - 1] } else { Complex64::ZERO };
        series[k] = series[k] * a + lower;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_rootset(roots: &[(f64, f64, usize)]) -> RootSet {
        RootSet {
            roots: roots
                .iter()
                .map(|&(re, im, d)| (Complex64::new(re, im), d))
                .collect(),
        }
    }

    #[test]
    fn monic_linear_denominator() {
        let num = Poly::from_real(&[1.0]);
        let den = simple_rootset(&[(0.5, 0.0, 1)]);
        let pf = partial_fractions(&num, &den, Complex64::ONE).unwrap();
        assert_eq!(pf.terms.len(), 1);
        assert!((pf.terms[0].coeffs[0] - Complex64::ONE).norm() <= 1e-14);
    }

    #[test]
    fn pure_double_pole() {
        // 1/(z-1)^2: order-2 coefficient 1, order-1 coefficient 0.
        let num = Poly::from_real(&[1.0]);
        let den = simple_rootset(&[(1.0, 0.0, 2)]);
        let pf = partial_fractions(&num, &den, Complex64::ONE).unwrap();
        assert_eq!(pf.terms[0].coeffs.len(), 2);
        assert!(pf.terms[0].coeffs[0].norm() <= 1e-14);
        assert!((pf.terms[0].coeffs[1] - Complex64::ONE).norm() <= 1e-14);
    }

    #[test]
    fn shared_root_rejected() {
        let num = Poly::from_real(&[-1.0, 1.0]); // z - 1
        let den = simple_rootset(&[(1.0, 0.0, 1), (2.0, 0.0, 1)]);
        let err = partial_fractions(&num, &den, Complex64::ONE).unwrap_err();
        assert!(matches!(err, Error::PoleZeroOverlap { .. }));
    }

    #[test]
    fn improper_fraction_rejected() {
        let num = Poly::from_real(&[0.0, 0.0, 1.0]);
        let den = simple_rootset(&[(1.0, 0.0, 1), (2.0, 0.0, 1)]);
        assert!(partial_fractions(&num, &den, Complex64::ONE).is_err());
    }

    /// Oracle: direct rational evaluation num(z)/den(z) with the factored
    /// denominator.
    fn rational_eval(
        num: &Poly,
        den_roots: &RootSet,
        den_scale: Complex64,
        z: Complex64,
    ) -> Complex64 {
        let mut den = den_scale;
        for &(r, d) in &den_roots.roots {
            den *= (z - r).powu(d as u32);
        }
        num.eval(z) / den
    }

    #[test]
    fn random_cubic_reconstruction_matches_direct_evaluation() {
        let den = simple_rootset(&[(-1.3, 0.0, 1), (0.4, 0.9, 1), (2.2, -0.5, 1)]);
        let num = Poly::from_real(&[0.7, -1.1, 0.3]);
        let scale = Complex64::new(1.7, 0.0);
        let pf = partial_fractions(&num, &den, scale).unwrap();
        for k in 0..10 {
            let z = Complex64::new(0.45 * k as f64 - 2.0, 0.3 * k as f64 - 1.2);
            let direct = rational_eval(&num, &den, scale, z);
            assert!((pf.eval(z) - direct).norm() <= 1e-10 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn reconstruction_identity_with_multiplicities() {
        // Mixed multiplicities up to denominator degree 6.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
        };
        for trial in 0..100 {
            let n_poles = 1 + trial % 3;
            let mut roots = Vec::new();
            let mut total = 0usize;
            for i in 0..n_poles {
                let d = 1 + (trial / 3 + i) % 2;
                // Separate poles enough that they are genuinely distinct.
                let pole = Complex64::new(next() + 3.0 * i as f64, next());
                roots.push((pole, d));
                total += d;
            }
            let den = RootSet { roots };
            let num = Poly::new((0..total).map(|_| Complex64::new(next(), next())).collect());
            if num.degree() + 1 > total {
                continue;
            }
            let den_scale = Complex64::new(next() + 3.0, next());
            let pf = match partial_fractions(&num, &den, den_scale) {
                Ok(pf) => pf,
                // Random numerator landed on a pole: precondition, not a bug.
                Err(Error::PoleZeroOverlap { .. }) => continue,
                Err(e) => panic!("unexpected error: {e}"),
            };
            for _ in 0..10 {
                let z = Complex64::new(1.5 * next() + 8.0, 1.5 * next() + 4.0);
                let direct = rational_eval(&num, &den, den_scale, z);
                let err = (pf.eval(z) - direct).norm();
                assert!(
                    err <= 1e-9 * direct.norm().max(1e-6),
                    "trial {trial}: relative error {}",
                    err / direct.norm().max(1e-6)
                );
            }
        }
    }
}
