//! Monte Carlo engine.
//!
//! Replications are split into fixed chunks of [`CHUNK`] replications. Each
//! chunk is simulated sequentially and the chunk sums are merged in chunk
//! order, so results do not depend on how many threads run the chunks.

use rayon::prelude::*;

use crate::analysis::var_limit;
use crate::error::{Error, Result};
use crate::kalman::{alpha_schedule, AlphaSchedule};
use crate::model::{stretch_into, ModelConfig};
use crate::policy::{wstar_matc_shift, PolicyProfile, PolicySpec};
use crate::rng::{NoiseKind, ReplicationStreams};
use crate::Scalar;

/// Replications per work unit.
pub const CHUNK: usize = 256;

/// Which stretches enter the per-round statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StatScope {
    #[default]
    AllAgents,
    Agent(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan<T> {
    pub cfg: ModelConfig<T>,
    pub profile: PolicyProfile<T>,
    pub replications: usize,
    pub scope: StatScope,
    /// Record the mean center of mass per round.
    pub center_of_mass: bool,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub threads: Option<usize>,
}

impl<T: Scalar> RunPlan<T> {
    pub fn new(cfg: ModelConfig<T>, policy: PolicySpec<T>, replications: usize) -> Self {
        Self {
            cfg,
            profile: PolicyProfile::uniform(policy),
            replications,
            scope: StatScope::AllAgents,
            center_of_mass: false,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_common(&self.cfg, self.replications, self.scope)?;
        self.profile.validate(self.cfg.n, self.cfg.horizon)
    }
}

/// Statistics of the stretch at one round, across replications.
///
/// Every replication contributes the mean of `θ̄²` and of `|θ̄|` over the
/// agents in scope; the standard errors are taken across replications.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundStats {
    pub round: usize,
    /// Empirical `Var(θ̄)`. Stretches have mean zero, so this is the raw
    /// second moment.
    pub var_stretch: f64,
    pub mean_abs_stretch: f64,
    /// Standard error of `mean_abs_stretch`.
    pub std_error: f64,
    /// Standard error of `var_stretch`.
    pub var_std_error: f64,
    /// Pooled over every sample in scope.
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Largest `|Σ_i θ̄_i|` seen in any replication.
    pub max_abs_stretch_sum: f64,
    pub center_of_mass: Option<f64>,
    pub samples: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct RoundAcc {
    q: f64,
    qq: f64,
    a: f64,
    aa: f64,
    m: [f64; 4],
    max_sum: f64,
    com: f64,
}

impl RoundAcc {
    fn merge(&mut self, o: &Self) {
        self.q += o.q;
        self.qq += o.qq;
        self.a += o.a;
        self.aa += o.aa;
        for (x, y) in self.m.iter_mut().zip(&o.m) {
            *x += y;
        }
        self.max_sum = self.max_sum.max(o.max_sum);
        self.com += o.com;
    }

    fn finish(&self, round: usize, reps: usize, per_rep: usize, com: bool) -> RoundStats {
        let r = reps as f64;
        let samples = (reps * per_rep) as u64;
        let se = |s: f64, ss: f64| {
            if reps < 2 {
                return 0.0;
            }
            let mean = s / r;
            ((ss / r - mean * mean).max(0.0) * r / (r - 1.0) / r).sqrt()
        };
        let k = samples as f64;
        let [m1, m2, m3, m4] = self.m.map(|x| x / k);
        let var = m2 - m1 * m1;
        let c3 = m3 - 3.0 * m1 * m2 + 2.0 * m1.powi(3);
        let c4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
        let (skewness, excess_kurtosis) = if var > 0.0 {
            (c3 / var.powf(1.5), c4 / (var * var) - 3.0)
        } else {
            (0.0, 0.0)
        };
        RoundStats {
            round,
            var_stretch: self.q / r,
            mean_abs_stretch: self.a / r,
            std_error: se(self.a, self.aa),
            var_std_error: se(self.q, self.qq),
            skewness,
            excess_kurtosis,
            max_abs_stretch_sum: self.max_sum,
            center_of_mass: com.then(|| self.com / r),
            samples,
        }
    }
}

fn validate_common<T: Scalar>(cfg: &ModelConfig<T>, replications: usize, scope: StatScope) -> Result<()> {
    cfg.validate()?;
    if replications == 0 {
        return Err(Error::Config("at least one replication is required".into()));
    }
    if let StatScope::Agent(i) = scope {
        if i >= cfg.n {
            return Err(Error::Config(format!(
                "statistics agent {i} out of range for n = {}",
                cfg.n
            )));
        }
    }
    Ok(())
}

fn in_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Config("thread count must be at least 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::Config(format!("cannot start {k} worker threads: {e}"))),
    }
}

fn chunks(replications: usize) -> impl IndexedParallelIterator<Item = std::ops::Range<usize>> {
    (0..replications.div_ceil(CHUNK))
        .into_par_iter()
        .map(move |c| c * CHUNK..((c + 1) * CHUNK).min(replications))
}

/// Per-replication state of one profile.
struct Lane<T> {
    pos: Vec<T>,
    st: Vec<T>,
    y: Vec<T>,
    mv: Vec<T>,
}

/// Runs one policy profile and returns statistics for rounds `0..=horizon`.
pub fn run<T: Scalar>(plan: &RunPlan<T>) -> Result<Vec<RoundStats>> {
    plan.validate()?;
    let mut out = run_group(
        &plan.cfg,
        std::slice::from_ref(&plan.profile),
        plan.replications,
        plan.scope,
        plan.center_of_mass,
        plan.threads,
    )?;
    Ok(out.pop().expect("one profile"))
}

/// Runs several profiles against the same noise: replication `r` of every
/// profile sees the same initial positions, measurement noise and drift.
/// Returns one statistics table per profile.
pub fn run_group<T: Scalar>(
    cfg: &ModelConfig<T>,
    profiles: &[PolicyProfile<T>],
    replications: usize,
    scope: StatScope,
    center_of_mass: bool,
    threads: Option<usize>,
) -> Result<Vec<Vec<RoundStats>>> {
    validate_common(cfg, replications, scope)?;
    for p in profiles {
        p.validate(cfg.n, cfg.horizon)?;
    }
    let sched = alpha_schedule(cfg, cfg.horizon);
    let rounds = cfg.horizon + 1;
    let width = profiles.len() * rounds;

    let parts: Vec<Vec<RoundAcc>> = in_pool(threads, || {
        chunks(replications)
            .map(|reps| {
                let mut acc = vec![RoundAcc::default(); width];
                for rep in reps {
                    replicate(cfg, profiles, &sched, rep as u64, scope, &mut acc)?;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut total = vec![RoundAcc::default(); width];
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    let per_rep = match scope {
        StatScope::AllAgents => cfg.n,
        StatScope::Agent(_) => 1,
    };
    Ok(total
        .chunks(rounds)
        .map(|rows| {
            rows.iter()
                .enumerate()
                .map(|(t, a)| a.finish(t, replications, per_rep, center_of_mass))
                .collect()
        })
        .collect())
}

fn replicate<T: Scalar>(
    cfg: &ModelConfig<T>,
    profiles: &[PolicyProfile<T>],
    sched: &AlphaSchedule<T>,
    rep: u64,
    scope: StatScope,
    acc: &mut [RoundAcc],
) -> Result<()> {
    let n = cfg.n;
    let rounds = cfg.horizon + 1;
    let mut streams = ReplicationStreams::new(cfg.seed, rep, n);
    let mut zm = vec![T::zero(); n];
    let mut zd = vec![T::zero(); n];
    streams.fill(NoiseKind::Init, &mut zd);
    let start: Vec<T> = zd.iter().map(|&z| cfg.sigma0 * z).collect();
    let mut lanes: Vec<Lane<T>> = profiles
        .iter()
        .map(|_| Lane {
            pos: start.clone(),
            st: vec![T::zero(); n],
            y: vec![T::zero(); n],
            mv: vec![T::zero(); n],
        })
        .collect();
    let mut scratch = vec![T::zero(); n];

    for t in 0..rounds {
        for (k, lane) in lanes.iter_mut().enumerate() {
            stretch_into(&lane.pos, &mut lane.st);
            record(&mut acc[k * rounds + t], &lane.st, &lane.pos, scope);
        }
        if t == cfg.horizon {
            break;
        }
        streams.fill(NoiseKind::Measurement, &mut zm);
        streams.fill(NoiseKind::Drift, &mut zd);
        for (profile, lane) in profiles.iter().zip(lanes.iter_mut()) {
            for ((y, &s), &z) in lane.y.iter_mut().zip(&lane.st).zip(&zm) {
                *y = s + cfg.sigma_m * z;
            }
            profile.fill_moves(&lane.y, t, sched, &mut lane.mv, &mut scratch)?;
            for ((p, &m), &z) in lane.pos.iter_mut().zip(&lane.mv).zip(&zd) {
                *p = *p + m + cfg.sigma_d * z;
            }
        }
    }
    Ok(())
}

#[inline]
fn record<T: Scalar>(acc: &mut RoundAcc, st: &[T], pos: &[T], scope: StatScope) {
    let mut sum = 0.0;
    let (mut q, mut a) = (0.0, 0.0);
    let mut add = |x: f64, acc: &mut RoundAcc| {
        let x2 = x * x;
        q += x2;
        a += x.abs();
        acc.m[0] += x;
        acc.m[1] += x2;
        acc.m[2] += x2 * x;
        acc.m[3] += x2 * x2;
    };
    let count = match scope {
        StatScope::AllAgents => {
            for &s in st {
                let x = s.to_f64().unwrap_or(f64::NAN);
                sum += x;
                add(x, acc);
            }
            st.len() as f64
        }
        StatScope::Agent(i) => {
            sum = st.iter().map(|s| s.to_f64().unwrap_or(f64::NAN)).sum();
            add(st[i].to_f64().unwrap_or(f64::NAN), acc);
            1.0
        }
    };
    let (q, a) = (q / count, a / count);
    acc.q += q;
    acc.qq += q * q;
    acc.a += a;
    acc.aa += a * a;
    acc.max_sum = acc.max_sum.max(sum.abs());
    let com: f64 = pos.iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).sum::<f64>() / pos.len() as f64;
    acc.com += com;
}

/// One round of a paired run.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedRound {
    pub round: usize,
    /// Center of mass of replication 0 under each policy.
    pub com_a: f64,
    pub com_b: f64,
    /// Stretch vectors of replication 0.
    pub stretch_a: Vec<f64>,
    pub stretch_b: Vec<f64>,
    /// Largest entrywise stretch difference over all replications.
    pub max_stretch_diff: f64,
    /// Mean over agents of `moves_a − moves_b` in replication 0. Absent in
    /// the final row, where no move is made.
    pub move_shift: Option<f64>,
    /// Largest deviation of any agent's move difference from the mean move
    /// difference of its replication. Zero when the two policies differ by a
    /// common translation.
    pub max_shift_spread: Option<f64>,
    /// `λ_t = (1/n) ρ★(t) Σ Y_i` for replication 0, from policy `a`'s
    /// measurements.
    pub lambda: Option<f64>,
    /// Largest `|mean move difference − λ_t|` over all replications.
    pub max_lambda_error: Option<f64>,
}

#[derive(Debug, Clone, Default)]
struct PairedAcc {
    max_diff: f64,
    spread: f64,
    lambda_err: f64,
}

/// Runs two policies against identical noise, replication by replication.
/// Returns rows for rounds `0..=horizon`.
pub fn run_paired<T: Scalar>(
    cfg: &ModelConfig<T>,
    a: &PolicySpec<T>,
    b: &PolicySpec<T>,
    replications: usize,
    threads: Option<usize>,
) -> Result<Vec<PairedRound>> {
    validate_common(cfg, replications, StatScope::AllAgents)?;
    a.validate(cfg.horizon)?;
    b.validate(cfg.horizon)?;
    let sched = alpha_schedule(cfg, cfg.horizon);
    let rounds = cfg.horizon + 1;

    let parts: Vec<(Vec<PairedAcc>, Option<Vec<PairedRound>>)> = in_pool(threads, || {
        chunks(replications)
            .map(|reps| {
                let mut acc = vec![PairedAcc::default(); rounds];
                let mut first = None;
                for rep in reps {
                    let rows = paired_replicate(cfg, a, b, &sched, rep as u64, &mut acc)?;
                    if rep == 0 {
                        first = Some(rows);
                    }
                }
                Ok((acc, first))
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut rows = None;
    let mut total = vec![PairedAcc::default(); rounds];
    for (acc, first) in parts {
        rows = rows.or(first);
        for (t, p) in total.iter_mut().zip(&acc) {
            t.max_diff = t.max_diff.max(p.max_diff);
            t.spread = t.spread.max(p.spread);
            t.lambda_err = t.lambda_err.max(p.lambda_err);
        }
    }
    let mut rows = rows.expect("replication 0 always runs");
    for (row, acc) in rows.iter_mut().zip(&total) {
        row.max_stretch_diff = acc.max_diff;
        if row.move_shift.is_some() {
            row.max_shift_spread = Some(acc.spread);
            row.max_lambda_error = Some(acc.lambda_err);
        }
    }
    Ok(rows)
}

fn paired_replicate<T: Scalar>(
    cfg: &ModelConfig<T>,
    a: &PolicySpec<T>,
    b: &PolicySpec<T>,
    sched: &AlphaSchedule<T>,
    rep: u64,
    acc: &mut [PairedAcc],
) -> Result<Vec<PairedRound>> {
    let n = cfg.n;
    let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
    let mut streams = ReplicationStreams::new(cfg.seed, rep, n);
    let mut zm = vec![T::zero(); n];
    let mut zd = vec![T::zero(); n];
    streams.fill(NoiseKind::Init, &mut zd);
    let start: Vec<T> = zd.iter().map(|&z| cfg.sigma0 * z).collect();
    let new_lane = || Lane {
        pos: start.clone(),
        st: vec![T::zero(); n],
        y: vec![T::zero(); n],
        mv: vec![T::zero(); n],
    };
    let (mut la, mut lb) = (new_lane(), new_lane());
    let mut rows = Vec::with_capacity(if rep == 0 { cfg.horizon + 1 } else { 0 });

    for (t, acc) in acc.iter_mut().enumerate() {
        stretch_into(&la.pos, &mut la.st);
        stretch_into(&lb.pos, &mut lb.st);
        let diff = la
            .st
            .iter()
            .zip(&lb.st)
            .map(|(&x, &y)| f(x - y).abs())
            .fold(0.0, f64::max);
        acc.max_diff = acc.max_diff.max(diff);
        let mut row = (rep == 0).then(|| PairedRound {
            round: t,
            com_a: la.pos.iter().map(|&p| f(p)).sum::<f64>() / n as f64,
            com_b: lb.pos.iter().map(|&p| f(p)).sum::<f64>() / n as f64,
            stretch_a: la.st.iter().map(|&s| f(s)).collect(),
            stretch_b: lb.st.iter().map(|&s| f(s)).collect(),
            max_stretch_diff: 0.0,
            move_shift: None,
            max_shift_spread: None,
            lambda: None,
            max_lambda_error: None,
        });
        if t < cfg.horizon {
            streams.fill(NoiseKind::Measurement, &mut zm);
            streams.fill(NoiseKind::Drift, &mut zd);
            for (lane, policy) in [(&mut la, a), (&mut lb, b)] {
                for ((y, &s), &z) in lane.y.iter_mut().zip(&lane.st).zip(&zm) {
                    *y = s + cfg.sigma_m * z;
                }
                policy.fill_moves(&lane.y, t, sched, &mut lane.mv)?;
            }
            let d: Vec<f64> = la.mv.iter().zip(&lb.mv).map(|(&x, &y)| f(x - y)).collect();
            let shift = d.iter().sum::<f64>() / n as f64;
            let spread = d.iter().map(|x| (x - shift).abs()).fold(0.0, f64::max);
            let lambda = f(wstar_matc_shift(&la.y, t, sched));
            acc.spread = acc.spread.max(spread);
            acc.lambda_err = acc.lambda_err.max((shift - lambda).abs());
            if let Some(row) = row.as_mut() {
                row.move_shift = Some(shift);
                row.lambda = Some(lambda);
            }
            for lane in [&mut la, &mut lb] {
                for ((p, &m), &z) in lane.pos.iter_mut().zip(&lane.mv).zip(&zd) {
                    *p = *p + m + cfg.sigma_d * z;
                }
            }
        }
        rows.extend(row);
    }
    Ok(rows)
}

/// One grid point of a responsiveness sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    /// Mean empirical variance over the final 10% of rounds.
    pub var_empirical: f64,
    /// Mean per-round standard error over the same window.
    pub var_std_error: f64,
    pub var_closed_form: f64,
    /// No finite limit: either the closed form is infinite or the empirical
    /// variance still grows between the last two tail windows.
    pub divergent: bool,
}

/// Rounds averaged for the steady-state estimate at a given horizon.
pub fn tail_window(horizon: usize) -> usize {
    (horizon / 10).max(1)
}

/// Runs `W(ρ)` for every `ρ` in `grid` (all against the same noise) and
/// estimates each steady-state variance.
pub fn sweep_rho<T: Scalar>(
    cfg: &ModelConfig<T>,
    grid: &[T],
    replications: usize,
    threads: Option<usize>,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Argument("empty responsiveness grid".into()));
    }
    if let Some(bad) = grid.iter().find(|r| !(**r >= T::zero() && **r <= T::one())) {
        return Err(Error::Argument(format!("grid values must lie in [0,1], got {bad}")));
    }
    let profiles: Vec<_> = grid
        .iter()
        .map(|&r| PolicyProfile::uniform(PolicySpec::Weighted(r)))
        .collect();
    let tables = run_group(cfg, &profiles, replications, StatScope::AllAgents, false, threads)?;
    let h = cfg.horizon;
    let w = tail_window(h);
    let window = |rows: &[RoundStats], end: usize| {
        let slice = &rows[end + 1 - w.min(end + 1)..=end];
        let k = slice.len() as f64;
        (
            slice.iter().map(|r| r.var_stretch).sum::<f64>() / k,
            slice.iter().map(|r| r.var_std_error).sum::<f64>() / k,
        )
    };
    Ok(grid
        .iter()
        .zip(&tables)
        .map(|(&rho, rows)| {
            let (var, se) = window(rows, h);
            let closed = var_limit(rho, cfg).to_f64().unwrap_or(f64::NAN);
            let growing = h >= 2 * w && {
                let (prev, prev_se) = window(rows, h - w);
                var - prev > 5.0 * (se * se + prev_se * prev_se).sqrt()
            };
            SweepRow {
                rho: rho.to_f64().unwrap_or(f64::NAN),
                var_empirical: var,
                var_std_error: se,
                var_closed_form: closed,
                divergent: !closed.is_finite() || growing,
            }
        })
        .collect())
}

/// Grid point with the smallest finite empirical variance among
/// non-divergent rows.
pub fn sweep_argmin(rows: &[SweepRow]) -> Option<&SweepRow> {
    rows.iter()
        .filter(|r| !r.divergent && r.var_empirical.is_finite())
        .min_by(|a, b| a.var_empirical.total_cmp(&b.var_empirical))
}
