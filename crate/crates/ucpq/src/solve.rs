//! Desk-scale minimization of compiled matrices: exact Gray-code
//! enumeration with incremental energy deltas, and restart-based simulated
//! annealing with a fully deterministic, per-restart-keyed random stream.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::qubo::QuboMatrix;
use crate::reference::{check_feasible, true_cost, Schedule, Violation};
use crate::tailored::{cost_weights, decode, objective_value, CompiledQubo};
use crate::worker_count;

const BRUTE_FORCE_LIMIT: usize = 30;
const TIE_CAP: usize = 1024;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("exhaustive enumeration limited to {limit} variables, matrix has {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("invalid annealing parameters: {0}")]
    InvalidParams(String),
    #[error("internal solve error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Exhaustive,
    Anneal,
}

/// Outcome of a solver run. Ties are listed lexicographically; for the
/// annealer `minimizers` holds the deduplicated per-restart champions that
/// reached the best energy, and `restart_best_energies` the best
/// offset-inclusive energy of each restart.
#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub best_energy: f64,
    pub best_raw: f64,
    #[serde(serialize_with = "bitstrings")]
    pub minimizers: Vec<Vec<u8>>,
    pub evaluations: u64,
    #[serde(rename = "wall_time_seconds", serialize_with = "seconds")]
    pub wall_time: Duration,
    pub solver: SolverKind,
    pub seed: Option<u64>,
    pub restart_best_energies: Vec<f64>,
    /// Set when more than the cap of 1024 tying minimizers exist; the
    /// lexicographically smallest ones are kept.
    pub tie_overflow: bool,
}

impl SolveResult {
    /// Compact 0/1 rendering of the best minimizer in layout order.
    pub fn best_bitstring(&self) -> String {
        render_bits(&self.minimizers[0])
    }
}

pub fn render_bits(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

fn bitstrings<S: Serializer>(bits: &[Vec<u8>], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(bits.iter().map(|b| render_bits(b)))
}

fn seconds<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

/// Simulated annealing configuration. The temperature decays geometrically
/// from `temp_initial` to `temp_final` over the sweeps of each restart, and
/// every restart draws from a stream keyed by `(seed, restart index)` so
/// runs are reproducible and restarts order-independent.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnnealParams {
    pub restarts: usize,
    pub sweeps_per_restart: usize,
    pub temp_initial: f64,
    pub temp_final: f64,
    pub seed: u64,
}

impl AnnealParams {
    /// Defaults bracketing the coefficient scale of the matrix: start at
    /// ten times the largest coefficient, finish two decades below the
    /// smallest nonzero one.
    pub fn defaults_for(matrix: &QuboMatrix, seed: u64) -> Self {
        let mut max_abs = 0.0f64;
        let mut min_abs = f64::INFINITY;
        for (_, _, v) in matrix.entries() {
            max_abs = max_abs.max(v.abs());
            min_abs = min_abs.min(v.abs());
        }
        let temp_initial = if max_abs > 0.0 { max_abs * 10.0 } else { 10.0 };
        let temp_final = if min_abs.is_finite() {
            (min_abs * 1e-2).min(temp_initial / 2.0)
        } else {
            temp_initial * 1e-4
        };
        AnnealParams {
            restarts: 50,
            sweeps_per_restart: 1000,
            temp_initial,
            temp_final,
            seed,
        }
    }

    fn validate(&self) -> Result<(), SolveError> {
        if self.restarts < 1 {
            return Err(SolveError::InvalidParams("restarts must be >= 1".into()));
        }
        if !(self.temp_initial > 0.0) || !(self.temp_final > 0.0) {
            return Err(SolveError::InvalidParams(
                "temperatures must be positive".into(),
            ));
        }
        if self.temp_final >= self.temp_initial {
            return Err(SolveError::InvalidParams(
                "temp_final must be below temp_initial".into(),
            ));
        }
        Ok(())
    }
}

/// Per-variable view of the matrix for O(degree) flip deltas.
struct Adjacency {
    diag: Vec<f64>,
    neighbors: Vec<Vec<(u32, f64)>>,
}

impl Adjacency {
    fn new(q: &QuboMatrix) -> Self {
        let mut diag = vec![0.0; q.n()];
        let mut neighbors = vec![Vec::new(); q.n()];
        for (i, j, v) in q.entries() {
            if i == j {
                diag[i] = v;
            } else {
                neighbors[i].push((j as u32, v));
                neighbors[j].push((i as u32, v));
            }
        }
        Adjacency { diag, neighbors }
    }

    /// Energy change of flipping bit `k` of a mask state.
    fn delta_mask(&self, mask: u64, k: usize) -> f64 {
        let mut sum = self.diag[k];
        for &(j, c) in &self.neighbors[k] {
            if mask & (1u64 << j) != 0 {
                sum += c;
            }
        }
        if mask & (1u64 << k) == 0 {
            sum
        } else {
            -sum
        }
    }

    /// Energy change of flipping bit `k` of a byte-vector state.
    fn delta_bits(&self, bits: &[u8], k: usize) -> f64 {
        let mut sum = self.diag[k];
        for &(j, c) in &self.neighbors[k] {
            if bits[j as usize] != 0 {
                sum += c;
            }
        }
        if bits[k] == 0 {
            sum
        } else {
            -sum
        }
    }
}

fn raw_energy_mask(q: &QuboMatrix, mask: u64) -> f64 {
    let mut e = 0.0;
    for (i, j, v) in q.entries() {
        if mask & (1u64 << i) != 0 && mask & (1u64 << j) != 0 {
            e += v;
        }
    }
    e
}

/// Lexicographic sort key for a mask interpreted as a bitstring with
/// variable 0 first.
fn lex_key(mask: u64, n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        mask.reverse_bits() >> (64 - n)
    }
}

fn mask_to_bits(mask: u64, n: usize) -> Vec<u8> {
    (0..n).map(|k| ((mask >> k) & 1) as u8).collect()
}

/// Visit every state of the hypercube in Gray-code order, calling `f` with
/// the state mask and its raw (offset-free) energy. Each step flips one bit
/// and applies an O(degree) delta.
pub fn for_each_state(
    q: &QuboMatrix,
    mut f: impl FnMut(u64, f64),
) -> Result<(), SolveError> {
    let n = q.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(SolveError::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let adj = Adjacency::new(q);
    let mut mask = 0u64;
    let mut energy = 0.0;
    f(mask, energy);
    for m in 1u64..(1u64 << n) {
        let bit = m.trailing_zeros() as usize;
        energy += adj.delta_mask(mask, bit);
        mask ^= 1u64 << bit;
        f(mask, energy);
    }
    Ok(())
}

struct RangeScan {
    best: f64,
    ties: Vec<u64>,
    overflow: bool,
}

impl RangeScan {
    fn consider(&mut self, mask: u64, energy: f64, n: usize) {
        if energy < self.best {
            self.best = energy;
            self.ties.clear();
            self.overflow = false;
            self.ties.push(mask);
        } else if energy == self.best {
            self.ties.push(mask);
            if self.ties.len() >= 2 * TIE_CAP {
                self.ties.sort_by_key(|&m| lex_key(m, n));
                self.ties.truncate(TIE_CAP);
                self.overflow = true;
            }
        }
    }
}

/// Scan Gray-code positions `lo..hi`. Position `m` corresponds to state
/// `m ^ (m >> 1)`; consecutive positions differ by the single bit
/// `trailing_zeros(m)`.
fn scan_range(q: &QuboMatrix, adj: &Adjacency, lo: u64, hi: u64) -> RangeScan {
    let n = q.n();
    let mut scan = RangeScan {
        best: f64::INFINITY,
        ties: Vec::new(),
        overflow: false,
    };
    let mut mask = lo ^ (lo >> 1);
    let mut energy = raw_energy_mask(q, mask);
    scan.consider(mask, energy, n);
    for m in lo + 1..hi {
        let bit = m.trailing_zeros() as usize;
        energy += adj.delta_mask(mask, bit);
        mask ^= 1u64 << bit;
        scan.consider(mask, energy, n);
    }
    scan
}

pub(crate) fn brute_force_with_workers(
    c: &CompiledQubo,
    workers: usize,
) -> Result<SolveResult, SolveError> {
    let n = c.matrix.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(SolveError::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let started = Instant::now();
    let total: u64 = 1u64 << n;
    let adj = Adjacency::new(&c.matrix);
    let workers = workers.max(1).min(total as usize);
    let parts: Vec<RangeScan> = if workers == 1 || n <= 14 {
        vec![scan_range(&c.matrix, &adj, 0, total)]
    } else {
        let chunk = total.div_ceil(workers as u64);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers as u64)
                .map(|w| {
                    let lo = w * chunk;
                    let hi = ((w + 1) * chunk).min(total);
                    let adj = &adj;
                    let q = &c.matrix;
                    scope.spawn(move || scan_range(q, adj, lo, hi))
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        })
    };

    let best_raw = parts.iter().map(|p| p.best).fold(f64::INFINITY, f64::min);
    let mut ties: Vec<u64> = Vec::new();
    let mut overflow = false;
    for part in &parts {
        if part.best == best_raw {
            ties.extend_from_slice(&part.ties);
            overflow |= part.overflow;
        }
    }
    ties.sort_by_key(|&m| lex_key(m, n));
    if ties.len() > TIE_CAP {
        ties.truncate(TIE_CAP);
        overflow = true;
    }
    Ok(SolveResult {
        best_energy: best_raw + c.matrix.offset(),
        best_raw,
        minimizers: ties.into_iter().map(|m| mask_to_bits(m, n)).collect(),
        evaluations: total,
        wall_time: started.elapsed(),
        solver: SolverKind::Exhaustive,
        seed: None,
        restart_best_energies: Vec::new(),
        tie_overflow: overflow,
    })
}

/// Exact global minimum by Gray-code enumeration of all `2^n` states.
/// Guarded at 30 variables; ties are listed in ascending lexicographic
/// order (capped at 1024 with an overflow flag).
pub fn brute_force(c: &CompiledQubo) -> Result<SolveResult, SolveError> {
    brute_force_with_workers(c, worker_count())
}

/// The best state a solver can defend: minimal energy among zero-penalty
/// bitstrings.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibleOptimum {
    #[serde(serialize_with = "bitstring")]
    pub bits: Vec<u8>,
    pub energy: f64,
    /// Number of zero-penalty states tying at this energy.
    pub ties: usize,
}

fn bitstring<S: Serializer>(bits: &Vec<u8>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&render_bits(bits))
}

/// Exhaustively find the minimum-energy state whose penalty part is exactly
/// zero, i.e. the cost optimum over feasible, correctly wired schedules.
///
/// The penalty part is tracked incrementally: the cost objective is linear,
/// so a bit flip moves it by the bit's cost weight while the energy moves by
/// the usual O(degree) delta. Returns `None` when no zero-penalty state
/// exists.
pub fn best_feasible(
    c: &CompiledQubo,
    inst: &crate::instance::UcpInstance,
) -> Result<Option<FeasibleOptimum>, SolveError> {
    let n = c.matrix.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(SolveError::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let weights = cost_weights(inst, &c.layout);
    let adj = Adjacency::new(&c.matrix);
    let mut mask = 0u64;
    // Offset-inclusive energy: the offset carries the constant part of the
    // demand penalty, so the zero test needs it.
    let mut energy = c.matrix.offset();
    let mut cost = 0.0;
    let mut best: Option<(f64, u64, usize)> = None;
    let mut consider = |mask: u64, energy: f64, cost: f64| {
        if energy - cost != 0.0 {
            return;
        }
        match &mut best {
            Some((e, m, ties)) => {
                if energy < *e {
                    *e = energy;
                    *m = mask;
                    *ties = 1;
                } else if energy == *e {
                    *ties += 1;
                    if lex_key(mask, n) < lex_key(*m, n) {
                        *m = mask;
                    }
                }
            }
            None => best = Some((energy, mask, 1)),
        }
    };
    consider(mask, energy, cost);
    for m in 1u64..(1u64 << n) {
        let bit = m.trailing_zeros() as usize;
        energy += adj.delta_mask(mask, bit);
        cost += if mask & (1u64 << bit) == 0 {
            weights[bit]
        } else {
            -weights[bit]
        };
        mask ^= 1u64 << bit;
        consider(mask, energy, cost);
    }
    Ok(best.map(|(e, m, ties)| FeasibleOptimum {
        bits: mask_to_bits(m, n),
        energy: e,
        ties,
    }))
}

fn restart_rng(seed: u64, restart: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&restart.to_le_bytes());
    key[16..23].copy_from_slice(b"ucpq-sa");
    ChaCha8Rng::from_seed(key)
}

fn geometric_schedule(t0: f64, tf: f64, sweeps: usize) -> Vec<f64> {
    if sweeps == 0 {
        return Vec::new();
    }
    if sweeps == 1 {
        return vec![t0];
    }
    let ratio = (tf / t0).powf(1.0 / (sweeps as f64 - 1.0));
    (0..sweeps).map(|s| t0 * ratio.powi(s as i32)).collect()
}

struct RestartOutcome {
    best_raw: f64,
    best_bits: Vec<u8>,
}

fn run_restart(
    q: &QuboMatrix,
    adj: &Adjacency,
    temps: &[f64],
    seed: u64,
    restart: u64,
) -> RestartOutcome {
    let n = q.n();
    let mut rng = restart_rng(seed, restart);
    let mut bits: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.5))).collect();
    let mut energy = q.raw_energy(&bits).expect("state sized to matrix");
    let mut best_raw = energy;
    let mut best_bits = bits.clone();
    for &temp in temps {
        for k in 0..n {
            let delta = adj.delta_bits(&bits, k);
            let accept = delta <= 0.0 || rng.gen::<f64>() < (-delta / temp).exp();
            if accept {
                bits[k] ^= 1;
                energy += delta;
                if energy < best_raw {
                    best_raw = energy;
                    best_bits.copy_from_slice(&bits);
                }
            }
        }
    }
    RestartOutcome { best_raw, best_bits }
}

/// Restart-based single-flip Metropolis annealing. Fully deterministic for
/// a given `(matrix, params)` pair, independent of the worker count.
pub fn simulated_annealing(
    c: &CompiledQubo,
    params: &AnnealParams,
) -> Result<SolveResult, SolveError> {
    params.validate()?;
    let started = Instant::now();
    let q = &c.matrix;
    let n = q.n();
    let adj = Adjacency::new(q);
    let temps = geometric_schedule(params.temp_initial, params.temp_final, params.sweeps_per_restart);

    let workers = worker_count().max(1).min(params.restarts);
    let mut outcomes: Vec<Option<RestartOutcome>> = Vec::new();
    outcomes.resize_with(params.restarts, || None);
    if workers == 1 {
        for (r, slot) in outcomes.iter_mut().enumerate() {
            *slot = Some(run_restart(q, &adj, &temps, params.seed, r as u64));
        }
    } else {
        let chunk = params.restarts.div_ceil(workers);
        std::thread::scope(|scope| {
            let mut rest: &mut [Option<RestartOutcome>] = &mut outcomes;
            let mut offset = 0usize;
            while !rest.is_empty() {
                let take = chunk.min(rest.len());
                let (head, tail) = rest.split_at_mut(take);
                let adj = &adj;
                let temps = &temps;
                let base = offset;
                scope.spawn(move || {
                    for (idx, slot) in head.iter_mut().enumerate() {
                        *slot = Some(run_restart(q, adj, temps, params.seed, (base + idx) as u64));
                    }
                });
                rest = tail;
                offset += take;
            }
        });
    }
    let outcomes: Vec<RestartOutcome> = outcomes.into_iter().map(Option::unwrap).collect();

    let best_raw = outcomes
        .iter()
        .map(|o| o.best_raw)
        .fold(f64::INFINITY, f64::min);
    let mut minimizers: Vec<Vec<u8>> = outcomes
        .iter()
        .filter(|o| o.best_raw == best_raw)
        .map(|o| o.best_bits.clone())
        .collect();
    minimizers.sort();
    minimizers.dedup();
    let restart_best_energies: Vec<f64> =
        outcomes.iter().map(|o| o.best_raw + q.offset()).collect();
    Ok(SolveResult {
        best_energy: best_raw + q.offset(),
        best_raw,
        minimizers,
        evaluations: params.restarts as u64 * (1 + params.sweeps_per_restart as u64 * n as u64),
        wall_time: started.elapsed(),
        solver: SolverKind::Anneal,
        seed: Some(params.seed),
        restart_best_energies,
        tie_overflow: false,
    })
}

/// How to minimize a compiled matrix.
#[derive(Debug, Clone)]
pub enum SolverConfig {
    Exhaustive,
    Anneal(AnnealParams),
}

/// A solver outcome decoded and verified against the reference semantics.
/// `penalty_part` is the best energy minus the decoded schedule's objective
/// value; it vanishes exactly on feasible, correctly wired solutions.
///
/// When the global minimizer decodes infeasible (possible whenever the
/// start-logic margin `B - D·max(min_down)` is below some start cost) and
/// the matrix is small enough, `feasible_optimum` carries the best
/// defensible state instead.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionReport {
    pub result: SolveResult,
    pub decoded: Schedule,
    pub violations: Vec<Violation>,
    pub true_cost: Option<f64>,
    pub penalty_part: f64,
    pub feasible_optimum: Option<FeasibleOptimum>,
}

/// Run a solver, decode its best minimizer, and verify it independently.
pub fn solve_and_report(
    c: &CompiledQubo,
    inst: &crate::instance::UcpInstance,
    config: &SolverConfig,
) -> Result<SolutionReport, SolveError> {
    let result = match config {
        SolverConfig::Exhaustive => brute_force(c)?,
        SolverConfig::Anneal(params) => simulated_annealing(c, params)?,
    };
    let decoded = decode(&result.minimizers[0], &c.layout, inst)
        .map_err(|e| SolveError::Internal(e.to_string()))?;
    let violations =
        check_feasible(inst, &decoded).map_err(|e| SolveError::Internal(e.to_string()))?;
    let cost = true_cost(inst, &decoded).map_err(|e| SolveError::Internal(e.to_string()))?;
    let penalty_part = result.best_energy - objective_value(inst, &decoded);
    let feasible_optimum = if !violations.is_empty() && c.matrix.n() <= BRUTE_FORCE_LIMIT {
        best_feasible(c, inst)?
    } else {
        None
    };
    Ok(SolutionReport {
        result,
        decoded,
        true_cost: violations.is_empty().then_some(cost),
        violations,
        penalty_part,
        feasible_optimum,
    })
}
