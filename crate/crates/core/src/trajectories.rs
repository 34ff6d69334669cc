//! Monte Carlo wave-function unraveling of the Lindblad generators.
//!
//! Each trajectory evolves an unnormalized state under the drift
//! `K = H_c − (i/2) Σ J†J` until its squared norm falls to a uniform random
//! threshold, then applies one jump `J_k` chosen with weight `‖J_k ψ‖²`.
//! Trajectory `n` draws from its own ChaCha stream `(seed, n)`, so results
//! do not depend on scheduling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{step_cap, EvolveOptions, Generator, GeneratorKind, Observable, TimeGrid};
use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix, CVector, I};

/// Relative precision of the bisected jump time.
pub const JUMP_TIME_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct TrajectoryConfig {
    pub n_traj: usize,
    pub seed: u64,
    pub grid: TimeGrid,
    pub observables: Vec<Observable>,
    /// Also average `|ψ⟩⟨ψ|` at every grid time.
    pub store_density: bool,
    pub max_step: Option<f64>,
}

impl TrajectoryConfig {
    pub fn new(n_traj: usize, seed: u64, grid: TimeGrid) -> Self {
        Self { n_traj, seed, grid, observables: Vec::new(), store_density: false, max_step: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    pub time: f64,
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    /// RNG stream id of this trajectory.
    pub stream: u64,
    pub jumps: Vec<Jump>,
    /// `‖ψ‖²` of the unnormalized state at each grid time; resets to 1 after
    /// every jump.
    pub norms: Vec<f64>,
    /// `values[obs][time]`, normalized expectation values.
    pub values: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSeries {
    pub name: String,
    pub mean: Vec<Complex64>,
    /// Standard error of the real and imaginary parts separately.
    pub stderr: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub seed: u64,
    pub observables: Vec<EnsembleSeries>,
    /// Total jumps per channel over the ensemble.
    pub jump_counts: Vec<u64>,
    pub records: Vec<TrajectoryRecord>,
    /// Ensemble-averaged `|ψ⟩⟨ψ|`, when requested.
    pub density: Option<Vec<CMatrix>>,
}

impl EnsembleResult {
    pub fn observable(&self, name: &str) -> Option<&EnsembleSeries> {
        self.observables.iter().find(|o| o.name == name)
    }

    pub fn n_traj(&self) -> usize {
        self.records.len()
    }
}

fn drift(gen: &Generator, t: f64, psi: &CVector, out: &mut CVector) {
    gen.apply_effective_into(t, psi, out);
    *out *= -I;
}

fn rk4(gen: &Generator, t: f64, h: f64, psi: &CVector, k: &mut [CVector; 4]) -> CVector {
    drift(gen, t, psi, &mut k[0]);
    let y = psi + &k[0] * c64(0.5 * h, 0.0);
    drift(gen, t + 0.5 * h, &y, &mut k[1]);
    let y = psi + &k[1] * c64(0.5 * h, 0.0);
    drift(gen, t + 0.5 * h, &y, &mut k[2]);
    let y = psi + &k[2] * c64(h, 0.0);
    drift(gen, t + h, &y, &mut k[3]);
    psi + (&k[0] + &k[1] * c64(2.0, 0.0) + &k[2] * c64(2.0, 0.0) + &k[3]) * c64(h / 6.0, 0.0)
}

struct Single {
    record: TrajectoryRecord,
    density: Vec<CMatrix>,
}

fn run_one(
    gen: &Generator,
    psi0: &CVector,
    cfg: &TrajectoryConfig,
    obs: &[CMatrix],
    h_cap: f64,
    stream: u64,
) -> Single {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let d = gen.dim();
    let mut k = [CVector::zeros(d), CVector::zeros(d), CVector::zeros(d), CVector::zeros(d)];
    let times = cfg.grid.times();
    let mut psi = psi0.clone();
    let mut threshold: f64 = rng.random();
    let mut jumps = Vec::new();
    let mut norms = Vec::with_capacity(times.len());
    let mut values = vec![Vec::with_capacity(times.len()); obs.len()];
    let mut density = Vec::new();

    let snapshot = |psi: &CVector, t: f64, norms: &mut Vec<f64>, values: &mut Vec<Vec<Complex64>>, density: &mut Vec<CMatrix>| {
        let n2 = psi.norm_squared();
        norms.push(n2);
        let phi = gen.state_to_schrodinger(psi, t) / c64(n2.sqrt(), 0.0);
        for (series, a) in values.iter_mut().zip(obs) {
            series.push(phi.dotc(&(a * &phi)));
        }
        if cfg.store_density {
            density.push(&phi * phi.adjoint());
        }
    };
    snapshot(&psi, times[0], &mut norms, &mut values, &mut density);

    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let n = ((t1 - t0) / h_cap).ceil().max(1.0) as usize;
        let h = (t1 - t0) / n as f64;
        for s in 0..n {
            let mut t = t0 + s as f64 * h;
            let t_end = if s + 1 == n { t1 } else { t0 + (s + 1) as f64 * h };
            while t < t_end {
                let remaining = t_end - t;
                let next = rk4(gen, t, remaining, &psi, &mut k);
                if next.norm_squared() > threshold {
                    psi = next;
                    break;
                }
                // Bisect for the time at which ‖ψ‖² crosses the threshold.
                let (mut lo, mut hi) = (0.0, remaining);
                let mut at_hi = next;
                let tol = JUMP_TIME_TOL * t_end.abs().max(h);
                while hi - lo > tol {
                    let mid = 0.5 * (lo + hi);
                    let trial = rk4(gen, t, mid, &psi, &mut k);
                    if trial.norm_squared() > threshold {
                        lo = mid;
                    } else {
                        hi = mid;
                        at_hi = trial;
                    }
                }
                t += hi;
                let weights: Vec<f64> = (0..gen.n_jumps())
                    .map(|c| {
                        let mut out = CVector::zeros(d);
                        gen.jump(c).mul_vec_acc(&at_hi, c64(1.0, 0.0), &mut out);
                        out.norm_squared()
                    })
                    .collect();
                let total: f64 = weights.iter().sum();
                let u = rng.random::<f64>() * total;
                let mut channel = weights.len().saturating_sub(1);
                let mut acc = 0.0;
                for (c, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        channel = c;
                        break;
                    }
                }
                if total > 0.0 {
                    let mut out = CVector::zeros(d);
                    gen.jump(channel).mul_vec_acc(&at_hi, c64(1.0, 0.0), &mut out);
                    psi = &out / c64(out.norm(), 0.0);
                    jumps.push(Jump { time: t, channel });
                } else {
                    psi = &at_hi / c64(at_hi.norm(), 0.0);
                }
                threshold = rng.random();
                if hi >= remaining {
                    break;
                }
            }
        }
        snapshot(&psi, t1, &mut norms, &mut values, &mut density);
    }

    Single { record: TrajectoryRecord { stream, jumps, norms, values }, density }
}

/// Deterministic pairwise sum with a fixed split order.
fn pairwise_sum<T: Clone>(xs: &[T], add: &impl Fn(&T, &T) -> T) -> T {
    match xs.len() {
        0 => panic!("pairwise sum of an empty slice"),
        1 => xs[0].clone(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            add(&pairwise_sum(a, add), &pairwise_sum(b, add))
        }
    }
}

fn mean_and_stderr(xs: &[Complex64]) -> (Complex64, Complex64) {
    let n = xs.len() as f64;
    let add = |a: &Complex64, b: &Complex64| a + b;
    let mean = pairwise_sum(xs, &add) / n;
    if xs.len() < 2 {
        return (mean, c64(0.0, 0.0));
    }
    let dev: Vec<Complex64> = xs
        .iter()
        .map(|x| c64((x.re - mean.re).powi(2), (x.im - mean.im).powi(2)))
        .collect();
    let var = pairwise_sum(&dev, &add) / (n - 1.0);
    (mean, c64((var.re / n).sqrt(), (var.im / n).sqrt()))
}

/// Runs `cfg.n_traj` trajectories from `ψ₀` (Schrödinger frame at `t = 0`).
pub fn mcwf_run(gen: &Generator, psi0: &CVector, cfg: &TrajectoryConfig) -> Result<EnsembleResult> {
    if gen.kind() == GeneratorKind::Pathological {
        return Err(Error::Refused(
            "the pathological generator has no valid unraveling: its jump probabilities can exceed unity".into(),
        ));
    }
    if cfg.n_traj == 0 {
        return Err(Error::Domain("n_traj must be >= 1".into()));
    }
    let d = gen.dim();
    if psi0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: psi0.len() });
    }
    if (psi0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("initial state has norm {}", psi0.norm())));
    }
    let obs: Vec<CMatrix> = cfg
        .observables
        .iter()
        .map(|o| o.matrix(gen.layout()))
        .collect::<Result<_>>()?;
    let opts = EvolveOptions { max_step: cfg.max_step, ..Default::default() };
    let h_cap = step_cap(gen, &opts);
    if !h_cap.is_finite() && cfg.grid.len() > 1 && gen.norm_estimate() > 0.0 {
        return Err(Error::StepUnderflow { step: h_cap, interval: cfg.grid.t_max() });
    }

    let runs: Vec<Single> = (0..cfg.n_traj as u64)
        .into_par_iter()
        .map(|n| run_one(gen, psi0, cfg, &obs, h_cap, n))
        .collect();

    let n_times = cfg.grid.len();
    let observables = cfg
        .observables
        .iter()
        .enumerate()
        .map(|(o, ob)| {
            let (mean, stderr): (Vec<_>, Vec<_>) = (0..n_times)
                .map(|t| {
                    let xs: Vec<Complex64> = runs.iter().map(|r| r.record.values[o][t]).collect();
                    mean_and_stderr(&xs)
                })
                .unzip();
            EnsembleSeries { name: ob.name.clone(), mean, stderr }
        })
        .collect();

    let mut jump_counts = vec![0u64; gen.n_jumps()];
    for r in &runs {
        for j in &r.record.jumps {
            jump_counts[j.channel] += 1;
        }
    }

    let density = cfg.store_density.then(|| {
        let scale = c64(1.0 / cfg.n_traj as f64, 0.0);
        let add = |a: &CMatrix, b: &CMatrix| a + b;
        (0..n_times)
            .map(|t| {
                let mats: Vec<CMatrix> = runs.iter().map(|r| r.density[t].clone()).collect();
                pairwise_sum(&mats, &add) * scale
            })
            .collect()
    });

    Ok(EnsembleResult {
        times: cfg.grid.times().to_vec(),
        seed: cfg.seed,
        observables,
        jump_counts,
        records: runs.into_iter().map(|r| r.record).collect(),
        density,
    })
}
