//! A battery of named self-consistency checks over seeded random states.
//!
//! Every check exercises an exact identity of the peakon system: algebraic
//! relations between the boundary polynomials, residue sum rules, spectral
//! symmetry under reflection, conservation along the flow, and agreement
//! between the closed-form solution and direct integration. Each check
//! reports its worst normalized residual against a pinned tolerance, so a
//! regression anywhere in the pipeline shows up as a named failure rather
//! than a silent drift.

use std::io;

use num_complex::Complex64;

use crate::classify::verify_sign_count;
use crate::closedform::{CfOptions, ClosedForm3};
use crate::dynamics::{integrate, integrate_at, invariants, IntegrateOptions, StopReason};
use crate::error::Result;
use crate::events::{first_collision, Direction};
use crate::polycalc::DEFAULT_CLUSTER_TOL;
use crate::sampling::{all_signatures, random_state, rng_from_seed, SampleOptions};
use crate::spectral::{
    adjoint_polynomials, eigenvalues, fundamental_identity_defect, spectral_polynomials,
    spectrum, spectrum_distance, transition_matrix, PeakonState,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

/// Outcome of one named check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: CheckStatus,
    /// Worst normalized residual seen across all evaluations.
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn from_residual(name: &'static str, residual: f64, tolerance: f64, detail: String) -> Self {
        let status = if !residual.is_finite() || residual > tolerance {
            CheckStatus::Fail
        } else {
            CheckStatus::Pass
        };
        CheckResult {
            name,
            status,
            residual,
            tolerance,
            detail,
        }
    }

    fn skipped(name: &'static str, tolerance: f64, detail: String) -> Self {
        CheckResult {
            name,
            status: CheckStatus::Skipped,
            residual: 0.0,
            tolerance,
            detail,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub seed: u64,
    pub states: usize,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn write_text<W: io::Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "seed {} over {} states", self.seed, self.states)?;
        for c in &self.checks {
            let tag = match c.status {
                CheckStatus::Pass => "PASS",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Skipped => "SKIP",
            };
            writeln!(
                out,
                "[{tag}] {:<26} residual {:.3e} (tol {:.1e}) {}",
                c.name, c.residual, c.tolerance, c.detail
            )?;
        }
        Ok(())
    }
}

/// A residual accumulator that treats any error as an infinite residual.
struct Worst {
    residual: f64,
    evaluations: usize,
    errors: Vec<String>,
}

impl Worst {
    fn new() -> Self {
        Worst {
            residual: 0.0,
            evaluations: 0,
            errors: Vec::new(),
        }
    }

    fn record(&mut self, r: f64) {
        self.residual = self.residual.max(r);
        self.evaluations += 1;
    }

    fn record_result(&mut self, r: Result<f64>) {
        match r {
            Ok(v) => self.record(v),
            Err(e) => {
                self.residual = f64::INFINITY;
                self.evaluations += 1;
                if self.errors.len() < 3 {
                    self.errors.push(e.to_string());
                }
            }
        }
    }

    fn finish(
        self,
        name: &'static str,
        tolerance: f64,
        mut detail: String,
    ) -> CheckResult {
        if !self.errors.is_empty() {
            detail = format!("{detail}; errors: {}", self.errors.join(" | "));
        }
        if self.evaluations == 0 {
            return CheckResult::skipped(name, tolerance, "no evaluations".into());
        }
        CheckResult::from_residual(name, self.residual, tolerance, detail)
    }
}

type Mat3 = [[Complex64; 3]; 3];

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[Complex64::ZERO; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mat_det(a: &Mat3) -> Complex64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

fn identity_defect(a: &Mat3) -> f64 {
    let mut worst = 0.0_f64;
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let want = if i == j { Complex64::ONE } else { Complex64::ZERO };
            worst = worst.max((v - want).norm());
        }
    }
    worst
}

/// Forward time limit inside which the closed form, the first collision,
/// and the validity window all leave room, capped at 1.
fn safe_forward_limit(state: &PeakonState) -> Result<f64> {
    let cf = ClosedForm3::new(state, &CfOptions::default())?;
    let (_, hi) = cf.window();
    let mut limit = 1.0_f64;
    if hi.is_finite() {
        limit = limit.min(0.5 * hi);
    }
    if let Some(ev) = first_collision(&cf, Direction::Forward, 50.0)? {
        limit = limit.min(0.9 * ev.t_c);
    }
    Ok(limit)
}

const SPECTRAL_SAMPLES: usize = 12;

fn check_transition_determinant(corpus: &[PeakonState], seed: u64) -> CheckResult {
    let mut rng = rng_from_seed(seed ^ 0x01);
    let mut worst = Worst::new();
    for state in corpus {
        for _ in 0..SPECTRAL_SAMPLES {
            let z = random_z(&mut rng, 3.0);
            let mut prod = [[Complex64::ZERO; 3]; 3];
            for (i, row) in prod.iter_mut().enumerate() {
                row[i] = Complex64::ONE;
            }
            for (&x, &m) in state.x.iter().zip(&state.m) {
                prod = mat_mul(&transition_matrix(x, m, z), &prod);
            }
            // The determinant is a cubic in the entries, so roundoff in the
            // defect scales with the cube of the matrix magnitude.
            let s = prod
                .iter()
                .flatten()
                .map(|v| v.norm())
                .fold(1.0, f64::max);
            worst.record((mat_det(&prod) - Complex64::ONE).norm() / (s * s * s));
        }
    }
    let detail = format!("{} evaluations", worst.evaluations);
    worst.finish("transition-determinant", 1e-12, detail)
}

fn check_transition_involution(corpus: &[PeakonState], seed: u64) -> CheckResult {
    // J S(z)^T J^{-1} S(-z) = I with J = antidiag(1, -2, 1).
    let j_diag = [
        [Complex64::ZERO, Complex64::ZERO, Complex64::ONE],
        [Complex64::ZERO, Complex64::new(-2.0, 0.0), Complex64::ZERO],
        [Complex64::ONE, Complex64::ZERO, Complex64::ZERO],
    ];
    let j_inv = [
        [Complex64::ZERO, Complex64::ZERO, Complex64::ONE],
        [Complex64::ZERO, Complex64::new(-0.5, 0.0), Complex64::ZERO],
        [Complex64::ONE, Complex64::ZERO, Complex64::ZERO],
    ];
    let mut rng = rng_from_seed(seed ^ 0x02);
    let mut worst = Worst::new();
    for state in corpus {
        for _ in 0..SPECTRAL_SAMPLES {
            let z = random_z(&mut rng, 3.0);
            for (&x, &m) in state.x.iter().zip(&state.m) {
                let s = transition_matrix(x, m, z);
                let mut st = [[Complex64::ZERO; 3]; 3];
                for (i, row) in s.iter().enumerate() {
                    for (jj, v) in row.iter().enumerate() {
                        st[jj][i] = *v;
                    }
                }
                let lhs = mat_mul(
                    &mat_mul(&mat_mul(&j_diag, &st), &j_inv),
                    &transition_matrix(x, m, -z),
                );
                worst.record(identity_defect(&lhs));
            }
        }
    }
    let detail = format!("{} site evaluations", worst.evaluations);
    worst.finish("transition-involution", 1e-11, detail)
}

fn check_adjoint_match(corpus: &[PeakonState]) -> CheckResult {
    let mut worst = Worst::new();
    for state in corpus {
        let a = spectral_polynomials(state).a;
        let b = adjoint_polynomials(state).a;
        let scale = a.max_coeff_norm().max(1e-30);
        let degree = a.degree().max(b.degree());
        let mut defect = 0.0_f64;
        for k in 0..=degree {
            defect = defect.max((a.coeff(k) - b.coeff(k)).norm() / scale);
        }
        worst.record(defect);
    }
    let detail = format!("{} states", worst.evaluations);
    worst.finish("adjoint-first-polynomial", 1e-12, detail)
}

fn check_fundamental_identity(corpus: &[PeakonState], seed: u64) -> CheckResult {
    let mut worst = Worst::new();
    for (i, state) in corpus.iter().enumerate() {
        worst.record_result(fundamental_identity_defect(state, 20, seed ^ (i as u64)));
    }
    let detail = format!("{} states, 20 points each", worst.evaluations);
    worst.finish("fundamental-identity", 1e-10, detail)
}

fn check_sign_count(corpus: &[PeakonState]) -> CheckResult {
    let mut worst = Worst::new();
    let mut imaginary = 0usize;
    for state in corpus {
        match verify_sign_count(state, DEFAULT_CLUSTER_TOL) {
            Ok(report) => {
                worst.record((report.observed as f64 - report.expected as f64).abs());
                if report.numerically_imaginary {
                    imaginary += 1;
                    worst.record(1.0);
                }
            }
            Err(e) => worst.record_result(Err(e)),
        }
    }
    let detail = format!(
        "{} states, {imaginary} numerically imaginary eigenvalues",
        worst.evaluations
    );
    worst.finish("sign-count-law", 0.0, detail)
}

fn check_momenta(corpus: &[PeakonState]) -> CheckResult {
    let mut worst = Worst::new();
    for state in corpus {
        let r = spectrum(state, DEFAULT_CLUSTER_TOL).map(|data| {
            let plus: f64 = state.x.iter().zip(&state.m).map(|(x, m)| m * x.exp()).sum();
            let minus: f64 = state
                .x
                .iter()
                .zip(&state.m)
                .map(|(x, m)| m * (-x).exp())
                .sum();
            let dp = (data.m_plus - plus).abs() / plus.abs().max(1.0);
            let dm = (data.m_minus - minus).abs() / minus.abs().max(1.0);
            dp.max(dm)
        });
        worst.record_result(r);
    }
    let detail = format!("{} states", worst.evaluations);
    worst.finish("one-sided-momenta", 1e-10, detail)
}

fn check_residue_sums(corpus: &[PeakonState]) -> (CheckResult, CheckResult) {
    let mut trailing = Worst::new();
    let mut leading = Worst::new();
    for state in corpus {
        match spectrum(state, DEFAULT_CLUSTER_TOL) {
            Ok(data) => {
                let sum: Complex64 = data.residues.iter().map(|p| p.coeffs[0]).sum();
                let want = state.x[state.n() - 1].exp();
                trailing.record((sum - want).norm() / want);
                let sum: Complex64 = data.adjoint_residues.iter().map(|p| p.coeffs[0]).sum();
                let want = (-state.x[0]).exp();
                leading.record((sum - want).norm() / want);
            }
            Err(e) => {
                trailing.record_result(Err(crate::error::Error::Internal(e.to_string())));
                leading.record_result(Err(e));
            }
        }
    }
    let nt = trailing.evaluations;
    let nl = leading.evaluations;
    (
        trailing.finish("residue-sum-trailing", 1e-10, format!("{nt} states")),
        leading.finish("residue-sum-leading", 1e-10, format!("{nl} states")),
    )
}

fn check_coupling(corpus: &[PeakonState]) -> (CheckResult, CheckResult, CheckResult) {
    let mut b_rel = Worst::new();
    let mut a_rel = Worst::new();
    let mut product = Worst::new();
    let mut a_skipped = 0usize;
    let mut anti_resonant = 0usize;
    for state in corpus {
        let triple = spectral_polynomials(state);
        let adj = adjoint_polynomials(state);
        let data = match spectrum(state, DEFAULT_CLUSTER_TOL) {
            Ok(d) => d,
            Err(e) => {
                b_rel.record_result(Err(e));
                continue;
            }
        };
        let lams = data.eigenvalues.expanded();
        let scale_l = lams.iter().map(|l| l.norm()).fold(0.0, f64::max);
        let near_anti_resonance = lams.iter().enumerate().any(|(i, a)| {
            lams.iter()
                .skip(i + 1)
                .any(|b| (a + b).norm() < 1e-6 * scale_l)
        });
        if near_anti_resonance {
            anti_resonant += 1;
        }
        for (i, &lam) in lams.iter().enumerate() {
            let [_, bp, cp] = triple.eval(lam);
            let [am, bm, _] = triple.eval(-lam);
            let [_, tb, _] = adj.eval(lam);

            let rhs = cp * tb;
            let scale = bm.norm().max(rhs.norm()).max(1e-30);
            b_rel.record((bm - rhs).norm() / scale);

            if bm.norm() > 1e-8 * bp.norm().max(1.0) {
                let lhs = 2.0 * am;
                let rhs = bp * tb;
                let scale = lhs.norm().max(rhs.norm()).max(1e-30);
                a_rel.record((lhs - rhs).norm() / scale);
            } else {
                a_skipped += 1;
            }

            // The residue product formula has eigenvalue sums in its
            // factors, so it degenerates on anti-resonant spectra.
            if near_anti_resonance {
                continue;
            }
            let b_i = data.residues[i].coeffs[0];
            let tb_i = data.adjoint_residues[i].coeffs[0];
            let mut want = Complex64::ONE;
            for (j, &mu) in lams.iter().enumerate() {
                if j == i {
                    continue;
                }
                let q = lam / mu;
                want *= (1.0 + q) / ((1.0 - q) * (1.0 - q));
            }
            let got = b_i * tb_i;
            let scale = got.norm().max(want.norm()).max(1e-30);
            product.record((got - want).norm() / scale);
        }
    }
    let nb = b_rel.evaluations;
    let na = a_rel.evaluations;
    let np = product.evaluations;
    (
        b_rel.finish("coupling-reflection", 1e-10, format!("{nb} eigenvalues")),
        a_rel.finish(
            "coupling-normalization",
            1e-10,
            format!("{na} eigenvalues, {a_skipped} skipped near a zero of B(-z)"),
        ),
        product.finish(
            "coupling-residue-product",
            1e-10,
            format!("{np} eigenvalues, {anti_resonant} anti-resonant states skipped"),
        ),
    )
}

fn check_invariant_drift(corpus: &[PeakonState]) -> CheckResult {
    // Near a collision the invariants are evaluated from huge masses and a
    // tiny position gap, so their reconstruction loses roughly the digits
    // of that gap. Capping masses at 1e6 keeps the gap above 1e-6 and the
    // reconstruction good to about 1e-10; the rest of the budget covers
    // integration error.
    let opts = IntegrateOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        mass_cap: 1e6,
        ..IntegrateOptions::default()
    };
    let mut worst = Worst::new();
    for state in corpus {
        let r = integrate(state, 0.5, &opts).map(|traj| {
            let start = invariants(state);
            let mut defect = 0.0_f64;
            for s in &traj.states {
                let now = invariants(s);
                for (a, b) in now.iter().zip(&start) {
                    defect = defect.max((a - b).abs() / b.abs().max(1.0));
                }
            }
            defect
        });
        worst.record_result(r);
    }
    let detail = format!("{} trajectories to t = 0.5", worst.evaluations);
    worst.finish("invariant-drift", 1e-7, detail)
}

fn check_isospectrality(corpus: &[PeakonState]) -> CheckResult {
    let opts = IntegrateOptions::default();
    let mut worst = Worst::new();
    let mut skipped = 0usize;
    for state in corpus {
        let r = (|| -> Result<Option<f64>> {
            let limit = safe_forward_limit(state)?;
            let start = eigenvalues(state, DEFAULT_CLUSTER_TOL)?.expanded();
            let scale = start.iter().map(|l| l.norm()).fold(0.0, f64::max);
            let times = [0.5 * limit, limit];
            let traj = integrate_at(state, &times, &opts)?;
            if traj.stop != StopReason::Completed {
                return Ok(None);
            }
            let mut defect = 0.0_f64;
            for s in &traj.states {
                let now = eigenvalues(s, DEFAULT_CLUSTER_TOL)?.expanded();
                defect = defect.max(spectrum_distance(&now, &start) / scale);
            }
            Ok(Some(defect))
        })();
        match r {
            Ok(Some(v)) => worst.record(v),
            Ok(None) => skipped += 1,
            Err(e) => worst.record_result(Err(e)),
        }
    }
    let detail = format!(
        "{} trajectories, {skipped} stopped early",
        worst.evaluations
    );
    worst.finish("isospectrality", 1e-6, detail)
}

fn check_closedform_vs_ode(corpus: &[PeakonState]) -> CheckResult {
    let opts = IntegrateOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        ..IntegrateOptions::default()
    };
    let mut worst = Worst::new();
    for state in corpus {
        let r = (|| -> Result<f64> {
            let cf = ClosedForm3::new(state, &CfOptions::default())?;
            let limit = safe_forward_limit(state)?;
            let times: Vec<f64> = [0.3, 0.6, 0.9].iter().map(|f| f * limit).collect();
            let traj = integrate_at(state, &times, &opts)?;
            let mut defect = 0.0_f64;
            for (t, s) in traj.t.iter().zip(&traj.states) {
                let c = cf.coords_at(*t)?;
                for k in 0..3 {
                    defect = defect.max((c.x[k] - s.x[k]).abs());
                    defect = defect.max((c.m[k] - s.m[k]).abs() / s.m[k].abs().max(1.0));
                }
            }
            Ok(defect)
        })();
        worst.record_result(r);
    }
    let detail = format!("{} states, 3 times each", worst.evaluations);
    worst.finish("closedform-vs-ode", 1e-6, detail)
}

fn check_time_reversal(corpus: &[PeakonState]) -> CheckResult {
    let opts = IntegrateOptions::default();
    let mut worst = Worst::new();
    let mut skipped = 0usize;
    for state in corpus {
        let negated = PeakonState {
            x: state.x.clone(),
            m: state.m.iter().map(|m| -m).collect(),
        };
        let fwd = integrate_at(state, &[0.4], &opts);
        let bwd = integrate_at(&negated, &[-0.4], &opts);
        match (fwd, bwd) {
            (Ok(f), Ok(b))
                if f.stop == StopReason::Completed && b.stop == StopReason::Completed =>
            {
                let fs = f.final_state();
                let bs = b.final_state();
                let mut defect = 0.0_f64;
                for k in 0..3 {
                    defect = defect.max((fs.x[k] - bs.x[k]).abs() / fs.x[k].abs().max(1.0));
                    defect = defect.max((fs.m[k] + bs.m[k]).abs() / fs.m[k].abs().max(1.0));
                }
                worst.record(defect);
            }
            (Ok(_), Ok(_)) => skipped += 1,
            (Err(e), _) | (_, Err(e)) => worst.record_result(Err(e)),
        }
    }
    let detail = format!(
        "{} pairs to |t| = 0.4, {skipped} interrupted by collisions",
        worst.evaluations
    );
    worst.finish("time-reversal", 1e-8, detail)
}

fn random_z(rng: &mut rand_chacha::ChaCha8Rng, radius: f64) -> Complex64 {
    use rand::Rng;
    let r = radius * rng.random_range(0.0..1.0_f64);
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(r, theta)
}

/// Sampling conditions for the identity corpus. The pinned 1e-10
/// tolerances need eigenvalue gaps of at least 1e-2 relative, since the
/// residue product formula amplifies roundoff by the square of the inverse
/// relative gap.
pub fn identity_corpus_options() -> SampleOptions {
    SampleOptions {
        min_eigenvalue_gap: 1e-2,
        ..SampleOptions::default()
    }
}

/// Runs every check over a given corpus. The rate-capped corpus feeds the
/// closed-form comparison, which needs bounded separation speeds.
pub fn run_checks(
    corpus: &[PeakonState],
    capped_corpus: &[PeakonState],
    seed: u64,
) -> Vec<CheckResult> {
    let mut checks = Vec::new();
    checks.push(check_transition_determinant(corpus, seed));
    checks.push(check_transition_involution(corpus, seed));
    checks.push(check_adjoint_match(corpus));
    checks.push(check_fundamental_identity(corpus, seed));
    checks.push(check_sign_count(corpus));
    checks.push(check_momenta(corpus));
    let (trailing, leading) = check_residue_sums(corpus);
    checks.push(trailing);
    checks.push(leading);
    let (b_rel, a_rel, product) = check_coupling(corpus);
    checks.push(b_rel);
    checks.push(a_rel);
    checks.push(product);
    checks.push(check_invariant_drift(corpus));
    checks.push(check_isospectrality(corpus));
    checks.push(check_closedform_vs_ode(capped_corpus));
    checks.push(check_time_reversal(corpus));
    checks
}

/// Runs only the algebraic identity checks: the exact relations between
/// boundary polynomials, couplings, and residues that hold at a fixed time
/// with no integration involved. All of them share the 1e-10 budget.
pub fn identity_checks(corpus: &[PeakonState], seed: u64) -> Vec<CheckResult> {
    let mut checks = Vec::new();
    checks.push(check_fundamental_identity(corpus, seed));
    checks.push(check_transition_involution(corpus, seed));
    checks.push(check_adjoint_match(corpus));
    let (b_rel, a_rel, product) = check_coupling(corpus);
    checks.push(b_rel);
    checks.push(a_rel);
    checks.push(product);
    let (trailing, leading) = check_residue_sums(corpus);
    checks.push(trailing);
    checks.push(leading);
    checks
}

/// Runs every check over `states_per_signature` seeded states of each of
/// the eight sign patterns, plus a rate-capped state per pattern for the
/// closed-form comparison.
pub fn run_all(seed: u64, states_per_signature: usize) -> VerifyReport {
    let opts = identity_corpus_options();
    let capped = SampleOptions {
        max_rate_spread: Some(3.0),
        ..identity_corpus_options()
    };
    let mut rng = rng_from_seed(seed);
    let mut corpus = Vec::new();
    let mut capped_corpus = Vec::new();
    for sig in all_signatures() {
        for _ in 0..states_per_signature {
            if let Ok(s) = random_state(sig, &opts, &mut rng) {
                corpus.push(s);
            }
        }
        if let Ok(s) = random_state(sig, &capped, &mut rng) {
            capped_corpus.push(s);
        }
    }
    let checks = run_checks(&corpus, &capped_corpus, seed);
    VerifyReport {
        seed,
        states: corpus.len(),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes_on_seeded_states() {
        let report = run_all(42, 3);
        let mut text = Vec::new();
        report.write_text(&mut text).unwrap();
        assert!(
            report.all_passed(),
            "failing checks:\n{}",
            String::from_utf8(text).unwrap()
        );
        assert_eq!(report.checks.len(), 15);
        assert_eq!(report.states, 24);
        assert!(report
            .checks
            .iter()
            .all(|c| c.status == CheckStatus::Pass));
    }

    #[test]
    fn reports_are_deterministic() {
        let a = run_all(7, 1);
        let b = run_all(7, 1);
        for (x, y) in a.checks.iter().zip(&b.checks) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.residual.to_bits(), y.residual.to_bits());
        }
    }

    #[test]
    fn text_report_has_one_line_per_check() {
        let report = run_all(5, 1);
        let mut out = Vec::new();
        report.write_text(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.trim_end().lines().collect();
        assert_eq!(lines.len(), 1 + report.checks.len());
        for line in &lines[1..] {
            assert!(line.starts_with("[PASS]") || line.starts_with("[FAIL]") || line.starts_with("[SKIP]"));
        }
    }
}
