//! qDRIFT sampling, channel estimation, sweeps and analytic bounds.
//!
//! Channels follow `rho -> e^{iH tau} rho e^{-iH tau}`. A step for fragment
//! `j` applies `e^{i G_j tau}` with `G_j = H_j / h_j`, realised as a product
//! of commuting Pauli rotations. Monte-Carlo work is split into tasks whose
//! random streams depend only on the master seed and the task index.

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{
    apply_superop, expm_i_hermitian, haar_state, is_hermitian, min_eigenvalue_hermitian,
    spectral_norm_hermitian, trace, trace_norm_hermitian, unitary_superop, CMatrix, CVector,
};
use crate::error::{HfError, Result};
use crate::hamiltonian::{Fragment, Hamiltonian};
use crate::pauli::PauliString;

/// Qubit limit of [`estimate_error`].
pub const MAX_SIM_QUBITS: usize = 8;
/// Qubit limit of [`exact_channel`].
pub const MAX_CHANNEL_QUBITS: usize = 10;

const DOMAIN_STATE: u64 = 1;
const DOMAIN_PROTOCOL: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Single,
    Grouped,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Grouped => "grouped",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Mode::Single => 0,
            Mode::Grouped => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QdriftConfig {
    pub t: f64,
    pub n_steps: usize,
    pub m_samples: usize,
    pub k_states: usize,
    pub seed: u64,
    pub mode: Mode,
}

impl Default for QdriftConfig {
    fn default() -> Self {
        QdriftConfig {
            t: 1.0,
            n_steps: 100,
            m_samples: 500,
            k_states: 32,
            seed: 0,
            mode: Mode::Grouped,
        }
    }
}

impl QdriftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 || self.m_samples == 0 || self.k_states == 0 {
            return Err(HfError::arg("N, M and K must be at least 1"));
        }
        if !self.t.is_finite() {
            return Err(HfError::arg("t must be finite"));
        }
        Ok(())
    }
}

/// Independent stream for `(domain, a, b)` under `seed`.
pub fn substream(seed: u64, domain: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(splitmix(splitmix(splitmix(domain) ^ a) ^ b));
    rng
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Splits every non-identity term into its own fragment.
pub fn single_fragments(h: &Hamiltonian) -> Vec<Fragment> {
    h.non_identity()
        .map(|t| Fragment::single(t.pauli.letters(), t.coeff, t.pauli))
        .collect()
}

/// Sum of `|scale|`.
pub fn lambda(frags: &[Fragment]) -> f64 {
    frags.iter().map(|f| f.scale.abs()).sum()
}

/// Sum of `|scale| * sum |unit|`, the single-term 1-norm of a grouping.
pub fn lambda_prime(frags: &[Fragment]) -> f64 {
    frags.iter().map(Fragment::one_norm).sum()
}

/// `N` i.i.d. fragment indices with probability `h_j / lambda`.
pub fn sample_protocol<R: Rng + ?Sized>(frags: &[Fragment], n: usize, rng: &mut R) -> Result<Vec<usize>> {
    if frags.is_empty() {
        return Err(HfError::arg("no fragments to sample"));
    }
    if let Some(f) = frags.iter().find(|f| !(f.scale > 0.0)) {
        return Err(HfError::arg(format!(
            "fragment {} has non-positive scale {}",
            f.label, f.scale
        )));
    }
    let dist = WeightedIndex::new(frags.iter().map(|f| f.scale))
        .map_err(|e| HfError::arg(e.to_string()))?;
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

/// `e^{i theta P}` on a state vector.
#[derive(Debug, Clone, Copy)]
struct PauliRotation {
    flip: usize,
    zmask: usize,
    coef: Complex64,
    cos: f64,
    sin: f64,
}

impl PauliRotation {
    fn new(p: &PauliString, theta: f64) -> Self {
        let a = p.basis_action();
        PauliRotation {
            flip: a.flip,
            zmask: a.zmask,
            coef: a.coef,
            cos: theta.cos(),
            sin: theta.sin(),
        }
    }

    #[inline]
    fn sign(&self, b: usize) -> Complex64 {
        if (self.zmask & b).count_ones() & 1 == 1 {
            -self.coef
        } else {
            self.coef
        }
    }

    fn apply(&self, psi: &mut [Complex64]) {
        let is = Complex64::new(0.0, self.sin);
        if self.flip == 0 {
            for (b, a) in psi.iter_mut().enumerate() {
                *a *= self.cos + is * self.sign(b);
            }
            return;
        }
        for b in 0..psi.len() {
            let c = b ^ self.flip;
            if c < b {
                continue;
            }
            let (a0, a1) = (psi[b], psi[c]);
            // P|b> = s(b)|c>, P|c> = s(c)|b>
            psi[b] = self.cos * a0 + is * self.sign(c) * a1;
            psi[c] = self.cos * a1 + is * self.sign(b) * a0;
        }
    }
}

/// Per-fragment step `e^{i G_j tau}` as commuting rotations.
struct StepTable {
    steps: Vec<Vec<PauliRotation>>,
}

impl StepTable {
    fn new(frags: &[Fragment], tau: f64) -> Self {
        let steps = frags
            .iter()
            .map(|f| {
                let s = f.scale.signum();
                f.paulis
                    .iter()
                    .filter(|(_, p)| !p.is_identity())
                    .map(|(u, p)| PauliRotation::new(p, tau * s * u))
                    .collect()
            })
            .collect();
        StepTable { steps }
    }

    fn run(&self, protocol: &[usize], psi: &mut [Complex64]) {
        for &j in protocol {
            for r in &self.steps[j] {
                r.apply(psi);
            }
        }
    }
}

/// Density matrix with checked invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub rho: CMatrix,
}

impl DensityState {
    pub fn pure(psi: &CVector) -> Self {
        DensityState {
            rho: psi * psi.adjoint(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.rho.nrows().trailing_zeros() as usize
    }

    /// Hermitian and unit trace within 1e-10, eigenvalues above -1e-9.
    pub fn validate(&self) -> Result<()> {
        if !is_hermitian(&self.rho, 1e-10) {
            return Err(HfError::Verification("density matrix is not Hermitian".into()));
        }
        if (trace(&self.rho) - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(HfError::Verification("density matrix trace is not 1".into()));
        }
        if min_eigenvalue_hermitian(&self.rho) < -1e-9 {
            return Err(HfError::Verification("density matrix is not PSD".into()));
        }
        Ok(())
    }
}

fn positive(frags: &[Fragment]) -> Vec<Fragment> {
    frags.iter().map(Fragment::normalized).collect()
}

/// `e^{iHt} rho e^{-iHt}`.
pub fn exact_channel(h: &Hamiltonian, t: f64, rho: &DensityState) -> Result<DensityState> {
    if h.n_qubits() > MAX_CHANNEL_QUBITS {
        return Err(HfError::SizeGuard {
            what: "exact channel",
            got: h.n_qubits(),
            limit: MAX_CHANNEL_QUBITS,
        });
    }
    let u = expm_i_hermitian(&h.to_dense()?, t);
    Ok(DensityState {
        rho: &u * &rho.rho * u.adjoint(),
    })
}

/// `V rho V^dag` for the ordered product of fragment steps.
pub fn apply_protocol(protocol: &[usize], frags: &[Fragment], tau: f64, rho: &DensityState) -> Result<DensityState> {
    let frags = positive(frags);
    if let Some(&j) = protocol.iter().find(|&&j| j >= frags.len()) {
        return Err(HfError::arg(format!("protocol index {j} out of range")));
    }
    let table = StepTable::new(&frags, tau);
    let dim = rho.rho.nrows();
    // V applied to each column, then V applied to each row of the result.
    let mut v = CMatrix::identity(dim, dim);
    for mut col in v.column_iter_mut() {
        table.run(protocol, col.as_mut_slice());
    }
    Ok(DensityState {
        rho: &v * &rho.rho * v.adjoint(),
    })
}

fn guard_sim(n: usize) -> Result<()> {
    if n > MAX_SIM_QUBITS {
        return Err(HfError::SizeGuard {
            what: "qDRIFT simulation",
            got: n,
            limit: MAX_SIM_QUBITS,
        });
    }
    Ok(())
}

/// Haar state `k` of the run.
fn state(seed: u64, dim: usize, k: usize) -> CVector {
    haar_state(dim, &mut substream(seed, DOMAIN_STATE, k as u64, 0))
}

/// Error for one Haar state: `|| E2(rho) - E1(rho) ||` with `M` protocols.
fn state_error(
    table: &StepTable,
    frags: &[Fragment],
    psi: &CVector,
    target: &CVector,
    cfg: &QdriftConfig,
    k: usize,
) -> Result<f64> {
    let dim = psi.len();
    let mut rng = substream(
        cfg.seed,
        DOMAIN_PROTOCOL,
        (cfg.mode.tag() << 40) ^ cfg.n_steps as u64,
        k as u64,
    );
    let mut acc = CMatrix::zeros(dim, dim);
    let mut phi = psi.clone();
    for _ in 0..cfg.m_samples {
        let protocol = sample_protocol(frags, cfg.n_steps, &mut rng)?;
        phi.copy_from(psi);
        table.run(&protocol, phi.as_mut_slice());
        acc.gerc(Complex64::new(1.0, 0.0), &phi, &phi, Complex64::new(1.0, 0.0));
    }
    acc /= Complex64::new(cfg.m_samples as f64, 0.0);
    acc.gerc(Complex64::new(-1.0, 0.0), target, target, Complex64::new(1.0, 0.0));
    Ok(spectral_norm_hermitian(&acc))
}

#[cfg(feature = "parallel")]
fn map_tasks<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_tasks<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Runs `f` on a pool of `jobs` threads (ignored without the `parallel`
/// feature).
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    #[cfg(feature = "parallel")]
    {
        if let Some(j) = jobs {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| HfError::arg(e.to_string()))?;
            return Ok(pool.install(f));
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
    Ok(f())
}

/// Mean over `K` Haar states of the spectral-norm distance between the
/// averaged qDRIFT channel and exact evolution. The step size is
/// `t * lambda / N` with `lambda` the sum of fragment scales.
pub fn estimate_error(h: &Hamiltonian, frags: &[Fragment], cfg: &QdriftConfig) -> Result<f64> {
    Ok(estimate_errors(h, frags, cfg, &[cfg.n_steps])?[0])
}

/// [`estimate_error`] at several `N`, sharing Haar states and exact targets.
pub fn estimate_errors(h: &Hamiltonian, frags: &[Fragment], cfg: &QdriftConfig, ns: &[usize]) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = h.n_qubits();
    guard_sim(n)?;
    let frags = positive(frags);
    if frags.iter().any(|f| f.n_qubits() != n) {
        return Err(HfError::arg("fragment width differs from the Hamiltonian"));
    }
    let dim = 1usize << n;
    let u = expm_i_hermitian(&h.to_dense()?, cfg.t);
    let lam = lambda(&frags);
    let states: Vec<(CVector, CVector)> = (0..cfg.k_states)
        .map(|k| {
            let psi = state(cfg.seed, dim, k);
            let target = &u * &psi;
            (psi, target)
        })
        .collect();
    let tables: Vec<StepTable> = ns
        .iter()
        .map(|&n_steps| StepTable::new(&frags, cfg.t * lam / n_steps.max(1) as f64))
        .collect();
    let tasks = ns.len() * cfg.k_states;
    let per_task = map_tasks(tasks, |i| {
        let (ni, k) = (i / cfg.k_states, i % cfg.k_states);
        let c = QdriftConfig {
            n_steps: ns[ni],
            ..*cfg
        };
        c.validate()?;
        state_error(&tables[ni], &frags, &states[k].0, &states[k].1, &c, k)
    });
    let mut out = vec![0.0; ns.len()];
    for (i, e) in per_task.into_iter().enumerate() {
        out[i / cfg.k_states] += e?;
    }
    Ok(out.into_iter().map(|s| s / cfg.k_states as f64).collect())
}

/// One `(N, mode)` measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub mode: Mode,
    pub error: f64,
    pub rotations: f64,
    pub toffoli_pairs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Expected `(rotations, toffoli_pairs)` per iteration.
pub fn per_iteration_cost(frags: &[Fragment], costs: &[(usize, usize)]) -> Result<(f64, f64)> {
    if frags.len() != costs.len() {
        return Err(HfError::SizeMismatch(frags.len(), costs.len()));
    }
    let lam = lambda(frags);
    if lam <= 0.0 {
        return Err(HfError::arg("zero total weight"));
    }
    Ok(frags.iter().zip(costs).fold((0.0, 0.0), |(r, p), (f, &(cr, cp))| {
        let w = f.scale.abs() / lam;
        (r + w * cr as f64, p + w * cp as f64)
    }))
}

/// Single-term and grouped sweeps over `ns`. Single-term steps cost one
/// rotation; grouped costs come from `grouped_costs`.
pub fn sweep(
    h: &Hamiltonian,
    frags_single: &[Fragment],
    frags_grouped: &[Fragment],
    grouped_costs: &[(usize, usize)],
    ns: &[usize],
    cfg: &QdriftConfig,
) -> Result<(SweepResult, SweepResult)> {
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let ones = vec![(1, 0); frags_single.len()];
    let mut out = Vec::new();
    for (mode, frags, costs) in [
        (Mode::Single, frags_single, ones.as_slice()),
        (Mode::Grouped, frags_grouped, grouped_costs),
    ] {
        let c = QdriftConfig { mode, ..*cfg };
        let (rot, pairs) = per_iteration_cost(frags, costs)?;
        let errors = estimate_errors(h, frags, &c, &ns)?;
        let rows = ns
            .iter()
            .zip(errors)
            .map(|(&n, error)| SweepRow {
                n,
                mode,
                error,
                rotations: n as f64 * rot,
                toffoli_pairs: n as f64 * pairs,
            })
            .collect();
        out.push(SweepResult { rows });
    }
    let grouped = out.pop().expect("two modes");
    let single = out.pop().expect("two modes");
    Ok((single, grouped))
}

fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{:.8e}", x);
    // Normalise through f64 so trailing zeros and exponent form are compact.
    let v: f64 = s.parse().unwrap_or(x);
    format!("{v}")
}

/// CSV with header `N,mode,error,rotations,toffoli_pairs`, floats to 9
/// significant digits.
pub fn sweep_csv(single: &SweepResult, grouped: &SweepResult) -> String {
    let mut s = String::from("N,mode,error,rotations,toffoli_pairs\n");
    for r in single.rows.iter().chain(&grouped.rows) {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n,
            r.mode.name(),
            sig9(r.error),
            sig9(r.rotations),
            sig9(r.toffoli_pairs)
        ));
    }
    s
}

/// Reduction factors read at a shared target error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorSummary {
    pub target_error: f64,
    pub n_single: f64,
    pub n_grouped: f64,
    pub iteration_factor: f64,
    pub rotation_factor: f64,
}

/// `N` where the log-log curve first reaches `target`.
fn crossing(rows: &[SweepRow], target: f64) -> Option<f64> {
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.error == target {
            return Some(a.n as f64);
        }
        if (a.error - target) * (b.error - target) < 0.0 || b.error == target {
            let (la, lb) = (a.error.ln(), b.error.ln());
            let s = (target.ln() - la) / (lb - la);
            let ln_n = (a.n as f64).ln() + s * ((b.n as f64).ln() - (a.n as f64).ln());
            return Some(ln_n.exp());
        }
    }
    None
}

/// Factors at `target`, or at the geometric midpoint of the overlapping
/// error range when `target` is `None`.
pub fn reduction_factors(single: &SweepResult, grouped: &SweepResult, target: Option<f64>) -> Result<FactorSummary> {
    let range = |r: &SweepResult| {
        r.rows
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x.error), hi.max(x.error)))
    };
    let (ls, hs) = range(single);
    let (lg, hg) = range(grouped);
    let (lo, hi) = (ls.max(lg), hs.min(hg));
    let target = match target {
        Some(t) => t,
        None if lo > 0.0 && lo < hi => (lo * hi).sqrt(),
        None => return Err(HfError::arg("error curves do not overlap")),
    };
    let ns = crossing(&single.rows, target)
        .ok_or_else(|| HfError::arg("single curve does not reach the target"))?;
    let ng = crossing(&grouped.rows, target)
        .ok_or_else(|| HfError::arg("grouped curve does not reach the target"))?;
    let per = |r: &SweepResult| r.rows.first().map_or(0.0, |x| x.rotations / x.n as f64);
    let (cs, cg) = (per(single), per(grouped));
    Ok(FactorSummary {
        target_error: target,
        n_single: ns,
        n_grouped: ng,
        iteration_factor: ns / ng,
        rotation_factor: (ns * cs) / (ng * cg),
    })
}

/// Qubit limit of [`step_channels`].
pub const MAX_SUPEROP_QUBITS: usize = 4;

/// One-step superoperators `(grouped, single)` for a grouping: the grouped
/// channel samples fragment `j` with probability `h_j / lambda` and evolves
/// for `lambda t / N`; the single channel samples each member Pauli with
/// probability `h_j |u_i| / lambda'` and evolves for `lambda' t / N`.
pub fn step_channels(frags: &[Fragment], t: f64, n: usize) -> Result<(CMatrix, CMatrix)> {
    if n == 0 {
        return Err(HfError::arg("N must be at least 1"));
    }
    let frags = positive(frags);
    let nq = frags.first().map_or(0, Fragment::n_qubits);
    if nq > MAX_SUPEROP_QUBITS {
        return Err(HfError::SizeGuard {
            what: "step superoperator",
            got: nq,
            limit: MAX_SUPEROP_QUBITS,
        });
    }
    let (lam, lamp) = (lambda(&frags), lambda_prime(&frags));
    let d = 1usize << nq;
    let mut grouped = CMatrix::zeros(d * d, d * d);
    let mut single = CMatrix::zeros(d * d, d * d);
    for f in &frags {
        let g = Hamiltonian::new(nq, f.paulis.iter().copied())?.to_dense()?;
        let u = expm_i_hermitian(&g, lam * t / n as f64);
        grouped += unitary_superop(&u) * Complex64::new(f.scale / lam, 0.0);
        for &(w, p) in &f.paulis {
            if p.is_identity() {
                continue;
            }
            let gp = p.to_dense()? * Complex64::new(w.signum(), 0.0);
            let up = expm_i_hermitian(&gp, lamp * t / n as f64);
            single += unitary_superop(&up) * Complex64::new(f.scale * w.abs() / lamp, 0.0);
        }
    }
    Ok((grouped, single))
}

/// Largest `|| D(rho) ||_1` over computational-basis and `samples` Haar
/// inputs for the superoperator `D`; a lower estimate of its diamond norm.
pub fn superop_distance_estimate(diff: &CMatrix, samples: usize, seed: u64) -> f64 {
    let d = (diff.nrows() as f64).sqrt().round() as usize;
    let mut best: f64 = 0.0;
    let mut probe = |psi: &CVector| {
        let out = apply_superop(diff, &(psi * psi.adjoint()));
        best = best.max(trace_norm_hermitian(&out));
    };
    for b in 0..d {
        let mut e = CVector::zeros(d);
        e[b] = Complex64::new(1.0, 0.0);
        probe(&e);
    }
    for k in 0..samples {
        probe(&haar_state(d, &mut substream(seed, DOMAIN_STATE, k as u64, 1)));
    }
    best
}

/// Trace norm of the unnormalised Choi matrix, an upper estimate of the
/// diamond norm of a Hermiticity-preserving map.
pub fn choi_trace_norm(diff: &CMatrix) -> f64 {
    let d = (diff.nrows() as f64).sqrt().round() as usize;
    let mut choi = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let mut e = CMatrix::zeros(d, d);
            e[(i, j)] = Complex64::new(1.0, 0.0);
            let out = apply_superop(diff, &e);
            for a in 0..d {
                for b in 0..d {
                    choi[(i * d + a, j * d + b)] = out[(a, b)];
                }
            }
        }
    }
    trace_norm_hermitian(&choi)
}

/// `4 t^2 lambda'^2 / N^2`.
pub fn bound_mult(lambda_prime: f64, t: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(HfError::arg("N must be at least 1"));
    }
    Ok(4.0 * t * t * lambda_prime * lambda_prime / (n * n) as f64)
}

/// Per-step `eps_q + 2 delta sqrt(eps_q)` with `eps_q = 2 lambda^2 t^2 / N^2`.
pub fn bound_trunc(lambda: f64, t: f64, n: usize, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(HfError::arg("N must be at least 1"));
    }
    if delta.is_nan() || delta < 0.0 {
        return Err(HfError::arg("delta must be non-negative"));
    }
    let eq = 2.0 * lambda * lambda * t * t / (n * n) as f64;
    Ok(eq + 2.0 * delta * eq.sqrt())
}

/// Total over `N` steps: `2 lambda^2 t^2 / N + 2 sqrt(2) delta lambda t`.
pub fn bound_trunc_total(lambda: f64, t: f64, n: usize, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(HfError::arg("N must be at least 1"));
    }
    if delta.is_nan() || delta < 0.0 {
        return Err(HfError::arg("delta must be non-negative"));
    }
    Ok(2.0 * lambda * lambda * t * t / n as f64 + 2.0 * 2f64.sqrt() * delta * lambda * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostStats {
    /// Per-repetition mean `mu_N`.
    pub mean_per_step: f64,
    /// Per-repetition variance `sigma_N^2`.
    pub variance_per_step: f64,
    /// Expected total `N mu_N`.
    pub mean: f64,
    /// `(c + 1) N mu_N` with `c = (b - a) / (mu_N sqrt(2N)) * log(2 / eps_c)`.
    pub high_prob_bound: f64,
}

/// Cost statistics of an `N`-step protocol with per-fragment costs
/// `costs` and weights `|scale|`.
pub fn expected_cost(frags: &[Fragment], costs: &[f64], n: usize, eps_c: f64) -> Result<CostStats> {
    if !(eps_c > 0.0 && eps_c < 1.0) {
        return Err(HfError::arg("eps_c must lie in (0, 1)"));
    }
    if n == 0 {
        return Err(HfError::arg("N must be at least 1"));
    }
    if frags.len() != costs.len() || frags.is_empty() {
        return Err(HfError::SizeMismatch(frags.len(), costs.len()));
    }
    let lam = lambda(frags);
    let w: Vec<f64> = frags.iter().map(|f| f.scale.abs()).collect();
    let s1: f64 = w.iter().zip(costs).map(|(w, c)| w * c).sum();
    let s2: f64 = w.iter().zip(costs).map(|(w, c)| w * c * c).sum();
    let mu = s1 / lam;
    let var = (lam * s2 - s1 * s1) / (lam * lam);
    let a = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let b = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let c = (b - a) / (mu * (2.0 * n as f64).sqrt()) * (2.0 / eps_c).ln();
    Ok(CostStats {
        mean_per_step: mu,
        variance_per_step: var.max(0.0),
        mean: n as f64 * mu,
        high_prob_bound: (c + 1.0) * n as f64 * mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::parse_hamiltonian;
    use crate::pauli::parse_pauli;

    #[test]
    fn rotation_matches_dense_exponential() {
        for s in ["XZY", "IZI", "YYX", "ZIZ"] {
            let p = parse_pauli(s).unwrap();
            let u = expm_i_hermitian(&p.to_dense().unwrap(), 0.37);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let psi = haar_state(8, &mut rng);
            let want = &u * &psi;
            let mut got = psi.clone();
            PauliRotation::new(&p, 0.37).apply(got.as_mut_slice());
            assert!((got - want).norm() < 1e-14, "{s}");
        }
    }

    #[test]
    fn plug_in_bounds() {
        assert_eq!(bound_mult(1.0, 1.0, 2).unwrap(), 1.0);
        let a = bound_mult(1.3, 0.7, 10).unwrap();
        let b = bound_mult(1.3, 0.7, 20).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);
        assert!((bound_trunc(1.0, 1.0, 10, 0.0).unwrap() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn hand_cost_stats() {
        let h = parse_hamiltonian("1 XI\n1 IX").unwrap();
        let frags = single_fragments(&h);
        let s = expected_cost(&frags, &[1.0, 3.0], 10, 0.05).unwrap();
        assert_eq!(s.mean_per_step, 2.0);
        assert_eq!(s.variance_per_step, 1.0);
        let u = expected_cost(&frags, &[2.0, 2.0], 7, 0.05).unwrap();
        assert_eq!((u.mean, u.variance_per_step), (14.0, 0.0));
        assert!(expected_cost(&frags, &[1.0, 1.0], 7, 1.0).is_err());
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(sig9(0.1234567891234), "0.123456789");
        assert_eq!(sig9(1024.0), "1024");
        assert_eq!(sig9(0.0), "0");
    }
}
