use num_complex::Complex64;

/// Dense univariate polynomial, coefficients ascending in degree.
///
/// Coefficients are stored complex; polynomials with real data (such as the
/// spectral polynomials of a real peakon state) simply carry zero imaginary
/// parts.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    /// Builds a polynomial, trimming exactly-zero trailing coefficients so the
    /// degree is well-defined. The zero polynomial keeps a single coefficient.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&Complex64::ZERO) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::ZERO);
        }
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Poly::new(vec![])
    }

    pub fn constant(c: Complex64) -> Self {
        Poly::new(vec![c])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::ZERO)
    }

    /// Coefficient of z^k (zero beyond the stored degree).
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().unwrap()
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * (i as f64 + 1.0))
                .collect(),
        )
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Multiplication by z (degree shift).
    pub fn mul_z(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(Complex64::ZERO);
        coeffs.extend_from_slice(&self.coeffs);
        Poly::new(coeffs)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut coeffs = vec![Complex64::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly::new(coeffs)
    }

    /// First `count` Taylor coefficients around `center`, i.e. p(center + w) =
    /// sum_k out[k] w^k + O(w^count). Computed by repeated synthetic division,
    /// which is exact polynomial calculus (no numerical differentiation).
    pub fn taylor_at(&self, center: Complex64, count: usize) -> Vec<Complex64> {
        let mut work = self.coeffs.clone();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            if work.is_empty() {
                out.push(Complex64::ZERO);
                continue;
            }
            let n = work.len();
            let mut quotient = vec![Complex64::ZERO; n.saturating_sub(1)];
            let mut acc = work[n - 1];
            for i in (0..n - 1).rev() {
                quotient[i] = acc;
                acc = work[i] + acc * center;
            }
            out.push(acc);
            work = quotient;
        }
        out
    }

    /// True when every coefficient is real to within `tol` relative to the
    /// largest coefficient.
    pub fn is_real(&self, tol: f64) -> bool {
        let scale = self.max_coeff_norm().max(f64::MIN_POSITIVE);
        self.coeffs.iter().all(|c| c.im.abs() <= tol * scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let p = Poly::new(vec![c(1.0, 0.0), c(2.0, 0.0), Complex64::ZERO]);
        assert_eq!(p.degree(), 1);
        assert_eq!(p.leading(), c(2.0, 0.0));
    }

    #[test]
    fn horner_matches_naive_evaluation() {
        let p = Poly::from_real(&[1.0, -3.0, 0.5, 2.0]);
        let z = c(0.7, -1.3);
        let naive = p
            .coeffs()
            .iter()
            .enumerate()
            .fold(Complex64::ZERO, |acc, (k, &ck)| acc + ck * z.powu(k as u32));
        assert!((p.eval(z) - naive).norm() <= 1e-14 * naive.norm().max(1.0));
    }

    #[test]
    fn derivative_of_cubic() {
        let p = Poly::from_real(&[1.0, -2.0, 3.0, 4.0]);
        let d = p.derivative();
        assert_eq!(d.coeffs(), &[c(-2.0, 0.0), c(6.0, 0.0), c(12.0, 0.0)]);
    }

    #[test]
    fn taylor_shift_reproduces_evaluation() {
        let p = Poly::from_real(&[2.0, -1.0, 0.25, 3.0, -0.5]);
        let center = c(0.4, 0.9);
        let taylor = p.taylor_at(center, 5);
        let w = c(0.05, -0.03);
        let shifted: Complex64 = taylor
            .iter()
            .enumerate()
            .map(|(k, &a)| a * w.powu(k as u32))
            .sum();
        let direct = p.eval(center + w);
        assert!((shifted - direct).norm() <= 1e-12 * direct.norm().max(1.0));
    }

    #[test]
    fn product_degree_and_values() {
        let p = Poly::from_real(&[1.0, 1.0]);
        let q = Poly::from_real(&[-1.0, 1.0]);
        let prod = p.mul(&q);
        assert_eq!(prod.coeffs(), &[c(-1.0, 0.0), Complex64::ZERO, c(1.0, 0.0)]);
    }
}
