use num_complex::Complex64;

use crate::error::{Error, Result};

/// Exponents closer to zero than this are treated as exactly zero when
/// integrating, so anti-resonant pairs (rates summing to ~0) produce the
/// correct polynomial-in-t terms instead of a division by a vanishing rate.
pub const DEFAULT_RESONANCE_TOL: f64 = 1e-9;

/// One term `coeff * t^power * e^{rate * t}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpTerm {
    pub coeff: Complex64,
    pub power: u32,
    pub rate: Complex64,
}

/// Finite sum of exponential-polynomial terms, closed under differentiation,
/// integration, and multiplication. Coefficients are stored complex;
/// real-valuedness on the real axis is a checked property.
#[derive(Clone, Debug)]
pub struct ExpSum {
    terms: Vec<ExpTerm>,
}

impl ExpSum {
    /// Normalizing constructor: merges terms with identical (power, rate) and
    /// drops terms with |coeff| below 1e-15 of the largest coefficient.
    pub fn new(terms: Vec<ExpTerm>) -> Self {
        let mut terms: Vec<ExpTerm> = terms
            .into_iter()
            .filter(|t| t.coeff != Complex64::ZERO)
            .collect();
        terms.sort_by(|a, b| {
            (a.rate.re, a.rate.im, a.power)
                .partial_cmp(&(b.rate.re, b.rate.im, b.power))
                .expect("term data is finite")
        });
        let mut merged: Vec<ExpTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.power == t.power && last.rate == t.rate => {
                    last.coeff += t.coeff;
                }
                _ => merged.push(t),
            }
        }
        let max_c = merged
            .iter()
            .map(|t| t.coeff.norm())
            .fold(0.0_f64, f64::max);
        merged.retain(|t| t.coeff.norm() > 1e-15 * max_c);
        ExpSum { terms: merged }
    }

    pub fn constant(c: f64) -> Self {
        ExpSum::new(vec![ExpTerm {
            coeff: Complex64::new(c, 0.0),
            power: 0,
            rate: Complex64::ZERO,
        }])
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn value(&self, t: f64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for term in &self.terms {
            acc += term.coeff * t.powi(term.power as i32) * (term.rate * t).exp();
        }
        acc
    }

    pub fn value_real(&self, t: f64) -> f64 {
        self.value(t).re
    }

    /// Overflow-safe evaluation as (mantissa, exponent) with
    /// value = mantissa * e^exponent. Usable far outside the range where the
    /// plain value fits in an f64.
    pub fn scaled_value(&self, t: f64) -> (Complex64, f64) {
        let log_abs_t = if t == 0.0 { 0.0 } else { t.abs().ln() };
        let term_log = |term: &ExpTerm| -> Option<f64> {
            if term.power > 0 && t == 0.0 {
                return None;
            }
            Some(term.rate.re * t + term.power as f64 * log_abs_t + term.coeff.norm().ln())
        };
        let emax = self
            .terms
            .iter()
            .filter_map(term_log)
            .fold(f64::NEG_INFINITY, f64::max);
        if emax == f64::NEG_INFINITY {
            return (Complex64::ZERO, 0.0);
        }
        let mut sum = Complex64::ZERO;
        for term in &self.terms {
            let Some(e) = term_log(term) else { continue };
            let sign = if t < 0.0 && term.power % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            let phase = Complex64::from_polar(1.0, term.coeff.arg() + term.rate.im * t);
            sum += phase * ((e - emax).exp() * sign);
        }
        (sum, emax)
    }

    pub fn derivative(&self) -> ExpSum {
        let mut out = Vec::with_capacity(2 * self.terms.len());
        for term in &self.terms {
            if term.power > 0 {
                out.push(ExpTerm {
                    coeff: term.coeff * term.power as f64,
                    power: term.power - 1,
                    rate: term.rate,
                });
            }
            out.push(ExpTerm {
                coeff: term.coeff * term.rate,
                power: term.power,
                rate: term.rate,
            });
        }
        ExpSum::new(out)
    }

    /// Exact antiderivative with F(0) = 0. A term whose |rate| is below
    /// `resonance_tol` integrates as a pure power; other terms use the
    /// standard reduction in the power. The produced coefficients grow like
    /// 1/rate^(power+1), so for small rates F(0) cancels only to roundoff
    /// relative to that coefficient scale, not absolutely.
    pub fn antiderivative(&self, resonance_tol: f64) -> ExpSum {
        let mut out = Vec::new();
        for term in &self.terms {
            if term.rate.norm() < resonance_tol {
                out.push(ExpTerm {
                    coeff: term.coeff / (term.power + 1) as f64,
                    power: term.power + 1,
                    rate: Complex64::ZERO,
                });
            } else {
                // int t^p e^{mu t} = e^{mu t} sum_k (-1)^k p!/(p-k)! t^{p-k} / mu^{k+1}
                let p = term.power;
                let mut falling = 1.0;
                let mut mu_pow = term.rate;
                for k in 0..=p {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    out.push(ExpTerm {
                        coeff: term.coeff * sign * falling / mu_pow,
                        power: p - k,
                        rate: term.rate,
                    });
                    falling *= (p - k) as f64;
                    mu_pow *= term.rate;
                }
            }
        }
        let raw = ExpSum::new(out);
        let f0 = raw.value(0.0);
        let mut terms = raw.terms;
        terms.push(ExpTerm {
            coeff: -f0,
            power: 0,
            rate: Complex64::ZERO,
        });
        ExpSum::new(terms)
    }

    pub fn product(&self, other: &ExpSum) -> ExpSum {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                out.push(ExpTerm {
                    coeff: a.coeff * b.coeff,
                    power: a.power + b.power,
                    rate: a.rate + b.rate,
                });
            }
        }
        ExpSum::new(out)
    }

    pub fn add(&self, other: &ExpSum) -> ExpSum {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        ExpSum::new(terms)
    }

    pub fn sub(&self, other: &ExpSum) -> ExpSum {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|t| ExpTerm {
            coeff: -t.coeff,
            ..*t
        }));
        ExpSum::new(terms)
    }

    /// Removes terms whose coefficients sit below `rel_tol` times the
    /// largest coefficient magnitude. Combinations built from sums with
    /// exactly cancelling parts keep a roundoff-sized residue on the
    /// cancelled term; left in place it eventually outgrows any decaying
    /// tail and corrupts sign scans at large |t|.
    pub fn drop_negligible(&self, rel_tol: f64) -> ExpSum {
        let scale = self
            .terms
            .iter()
            .map(|t| t.coeff.norm())
            .fold(0.0_f64, f64::max);
        ExpSum::new(
            self.terms
                .iter()
                .filter(|t| t.coeff.norm() > rel_tol * scale)
                .cloned()
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> ExpSum {
        ExpSum::new(
            self.terms
                .iter()
                .map(|t| ExpTerm {
                    coeff: t.coeff * s,
                    ..*t
                })
                .collect(),
        )
    }

    /// Time reflection t -> -t.
    pub fn reflected(&self) -> ExpSum {
        ExpSum::new(
            self.terms
                .iter()
                .map(|t| ExpTerm {
                    coeff: if t.power % 2 == 1 { -t.coeff } else { t.coeff },
                    power: t.power,
                    rate: -t.rate,
                })
                .collect(),
        )
    }

    pub fn max_rate_re(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.rate.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Returns the rate of a term with no conjugate partner, or None when the
    /// term multiset is conjugate-closed (which makes the sum real-valued on
    /// the real axis).
    fn unpaired_term(&self, tol: f64) -> Option<Complex64> {
        let cscale = self
            .terms
            .iter()
            .map(|t| t.coeff.norm())
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let rscale = self
            .terms
            .iter()
            .map(|t| t.rate.norm())
            .fold(0.0_f64, f64::max)
            .max(1.0);
        let n = self.terms.len();
        let mut used = vec![false; n];
        for i in 0..n {
            if used[i] {
                continue;
            }
            let want_c = self.terms[i].coeff.conj();
            let want_r = self.terms[i].rate.conj();
            let partner = (i..n).find(|&j| {
                !used[j]
                    && self.terms[j].power == self.terms[i].power
                    && (self.terms[j].rate - want_r).norm() <= tol * rscale
                    && (self.terms[j].coeff - want_c).norm() <= tol * cscale
            });
            match partner {
                Some(j) => {
                    used[i] = true;
                    used[j] = true;
                }
                None => return Some(self.terms[i].rate),
            }
        }
        None
    }

    /// Sign witness at t, or None when the value is numerically zero: the
    /// scaled mantissa keeps O(1) magnitude even where the plain value
    /// under- or overflows, so a mantissa below the noise floor means the
    /// terms cancel to roundoff and the sign is meaningless.
    fn sign_sample(&self, t: f64) -> Option<f64> {
        const NOISE_FLOOR: f64 = 1e-12;
        let (m, _) = self.scaled_value(t);
        if m.re.is_finite() && m.re.abs() > NOISE_FLOOR {
            Some(m.re)
        } else {
            None
        }
    }

    /// Smallest t in (0, horizon] with value(t) = 0, located by a sign-change
    /// scan over 4096 steps plus bisection to |t - t*| <= 1e-12 max(1, |t*|).
    /// None when no sign change occurs. Requires a real-valued sum. Samples
    /// where the terms cancel to roundoff carry no usable sign and are
    /// skipped, which keeps decaying tails from faking a crossing.
    pub fn smallest_positive_root(&self, horizon: f64) -> Result<Option<f64>> {
        if let Some(rate) = self.unpaired_term(1e-9) {
            return Err(Error::NotRealValued { rate });
        }
        const STEPS: usize = 4096;
        let mut prev = self.sign_sample(0.0).map(|v| (0.0, v));
        for k in 1..=STEPS {
            let t = horizon * k as f64 / STEPS as f64;
            let Some(v) = self.sign_sample(t) else {
                continue;
            };
            if let Some((pt, pv)) = prev {
                if v.signum() != pv.signum() {
                    return Ok(Some(self.bisect(pt, t, pv)));
                }
            }
            prev = Some((t, v));
        }
        Ok(None)
    }

    fn bisect(&self, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if b - a <= 1e-12 * mid.abs().max(1.0) {
                break;
            }
            let Some(fm) = self.sign_sample(mid) else {
                // Inside the cancellation plateau around the root; the
                // plateau is narrower than the requested bracket anyway.
                return mid;
            };
            if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }
}
