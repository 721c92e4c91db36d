use nalgebra::DMatrix;
use num_complex::Complex64;

use super::Poly;
use crate::error::{Error, Result};

/// Relative distance below which two computed roots are declared the same
/// multiple root. Double roots are meaningful here (they change the residue
/// evolution law), and polishing a pair of nearly coincident roots separately
/// splits them, so clustering runs before any polish.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-7;

/// Roots with multiplicities; total multiplicity equals the polynomial degree.
#[derive(Clone, Debug)]
pub struct RootSet {
    pub roots: Vec<(Complex64, usize)>,
}

impl RootSet {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|(_, d)| d).sum()
    }

    /// All roots repeated by multiplicity.
    pub fn expanded(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.total_multiplicity());
        for &(r, d) in &self.roots {
            out.extend(std::iter::repeat(r).take(d));
        }
        out
    }

    pub fn min_abs(&self) -> f64 {
        self.roots
            .iter()
            .map(|(r, _)| r.norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.roots.iter().map(|(r, _)| r.norm()).fold(0.0, f64::max)
    }
}

impl Poly {
    /// All complex roots. Raw roots use the closed-form quadratic/cubic for
    /// degree <= 3 and companion-matrix eigenvalues above; roots closer than
    /// `cluster_tol` (relative) are merged into their centroid with summed
    /// multiplicity, then simple roots are Newton-polished.
    pub fn roots(&self, cluster_tol: f64) -> Result<RootSet> {
        if self.degree() == 0 || self.is_zero() {
            return Err(Error::NoRoots);
        }

        // Exact zeros in the low coefficients are roots at the origin.
        let zero_mult = self
            .coeffs()
            .iter()
            .take_while(|c| **c == Complex64::ZERO)
            .count();
        let reduced: Vec<Complex64> = self.coeffs()[zero_mult..].to_vec();

        let raw = match reduced.len() - 1 {
            0 => Vec::new(),
            1 => vec![-reduced[0] / reduced[1]],
            2 => quadratic_roots(&reduced),
            3 => cubic_roots(&reduced),
            _ => companion_roots(&reduced)?,
        };

        let mut clusters = cluster(&raw, cluster_tol);

        let deriv = self.derivative();
        for (root, d) in clusters.iter_mut() {
            if *d == 1 {
                *root = newton_polish(self, &deriv, *root);
            }
        }

        if zero_mult > 0 {
            clusters.push((Complex64::ZERO, zero_mult));
        }
        clusters.sort_by(|a, b| {
            (a.0.re, a.0.im)
                .partial_cmp(&(b.0.re, b.0.im))
                .expect("root coordinates are finite")
        });
        Ok(RootSet { roots: clusters })
    }
}

/// Stable complex quadratic formula: the root whose numerator avoids
/// cancellation is computed first, the other via the product of roots.
fn quadratic_roots(c: &[Complex64]) -> Vec<Complex64> {
    let (a, b, c0) = (c[2], c[1], c[0]);
    let disc = b * b - 4.0 * a * c0;
    let s = disc.sqrt();
    let q = if (b + s).norm() >= (b - s).norm() {
        -(b + s) / 2.0
    } else {
        -(b - s) / 2.0
    };
    if q.norm() == 0.0 {
        // b = c0 = 0: double root at the origin.
        return vec![Complex64::ZERO, Complex64::ZERO];
    }
    vec![q / a, c0 / q]
}

/// Cardano's formula in complex arithmetic.
fn cubic_roots(c: &[Complex64]) -> Vec<Complex64> {
    let a2 = c[2] / c[3];
    let a1 = c[1] / c[3];
    let a0 = c[0] / c[3];
    let shift = a2 / 3.0;
    // Depressed form w^3 + p w + q after z = w - shift.
    let p = a1 - a2 * a2 / 3.0;
    let q = a0 - a1 * a2 / 3.0 + 2.0 * a2 * a2 * a2 / 27.0;

    let scale = p.norm().sqrt().max(q.norm().cbrt());
    if scale == 0.0 {
        return vec![-shift; 3];
    }

    let d = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
    let s = d.sqrt();
    let u3 = if (-q / 2.0 + s).norm() >= (-q / 2.0 - s).norm() {
        -q / 2.0 + s
    } else {
        -q / 2.0 - s
    };
    if u3.norm() < 1e-280 {
        // p and q both vanish to machine precision: triple root.
        return vec![-shift; 3];
    }
    let u = u3.cbrt();
    let omega = Complex64::new(-0.5, 3.0_f64.sqrt() / 2.0);
    let mut roots = Vec::with_capacity(3);
    let mut uk = u;
    for _ in 0..3 {
        roots.push(uk - p / (3.0 * uk) - shift);
        uk *= omega;
    }
    roots
}

fn companion_roots(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = c.len() - 1;
    let lead = c[n];
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex64::ONE;
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    m.eigenvalues()
        .map(|e| e.iter().copied().collect())
        .ok_or_else(|| Error::Internal("companion eigenvalue iteration failed".into()))
}

/// Single-linkage clustering: roots within `tol * max(|a|,|b|)` of some member
/// join that cluster; each cluster contributes its centroid and count.
fn cluster(raw: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let mut assigned = vec![usize::MAX; raw.len()];
    let mut n_clusters = 0;
    for i in 0..raw.len() {
        if assigned[i] != usize::MAX {
            continue;
        }
        assigned[i] = n_clusters;
        // Grow transitively: anything close to a member joins.
        let mut changed = true;
        while changed {
            changed = false;
            for j in 0..raw.len() {
                if assigned[j] != usize::MAX {
                    continue;
                }
                let close = (0..raw.len()).any(|k| {
                    assigned[k] == n_clusters
                        && (raw[j] - raw[k]).norm() <= tol * raw[j].norm().max(raw[k].norm())
                });
                if close {
                    assigned[j] = n_clusters;
                    changed = true;
                }
            }
        }
        n_clusters += 1;
    }
    (0..n_clusters)
        .map(|c| {
            let members: Vec<Complex64> = raw
                .iter()
                .zip(&assigned)
                .filter(|(_, &a)| a == c)
                .map(|(r, _)| *r)
                .collect();
            let centroid = members.iter().sum::<Complex64>() / members.len() as f64;
            (centroid, members.len())
        })
        .collect()
}

/// Newton iteration keeping the best residual seen; safe only on simple roots.
fn newton_polish(p: &Poly, deriv: &Poly, start: Complex64) -> Complex64 {
    let mut x = start;
    let mut best = start;
    let mut best_res = p.eval(start).norm();
    for _ in 0..30 {
        let d = deriv.eval(x);
        if d.norm() == 0.0 {
            break;
        }
        let step = p.eval(x) / d;
        x -= step;
        let res = p.eval(x).norm();
        if res < best_res {
            best_res = res;
            best = x;
        }
        if step.norm() <= 1e-16 * (1.0 + x.norm()) {
            break;
        }
    }
    best
}
