//! Two-layer particle filter over per-site phases and sharing length-scales.
//!
//! Alpha particles carry the full extended state (a phase map `f` and a
//! length-scale map `r`). At each step the observed bits are folded into
//! shared per-site tallies, the measured and message-receiving sites are
//! re-estimated via the `h1` rule, alpha particles are weighted by the
//! physical-bit likelihood `g1`, and a layer of beta particles per parent
//! scores candidate length-scales at the measured site via `g2`. Joint
//! resampling over the alpha/beta product returns `n_alpha` uniformly
//! weighted particles, with the surviving candidates averaged into each
//! parent's length-scale (`h2`).

use std::f64::consts::PI;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{NmqaError, Result};
use crate::lattice::QubitArray;
use crate::measurement::{MeasurementOutcome, NoiseParams, Origin, NOISE_HALF_WIDTH};
use crate::sharing::pow_count;

/// Full per-particle state: phase map `f` (radians, `[0, pi]`) and
/// length-scale map `r` (`[r_min, r_max]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedState {
    pub f: Vec<f64>,
    pub r: Vec<f64>,
}

/// A weighted hypothesis over the full extended state.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaParticle {
    pub state: ExtendedState,
    pub weight: f64,
}

/// A child hypothesis over the measured site's length-scale only.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaParticle {
    pub parent: usize,
    pub r_j: f64,
    pub weight: f64,
}

/// Per-site running averages and counts of observed bits, shared across the
/// whole ensemble: `kappa`/`tau` for physical bits, `gamma`/`phi` for
/// message bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedStateTally {
    kappa: Vec<f64>,
    gamma: Vec<f64>,
    tau: Vec<u64>,
    phi: Vec<u64>,
}

impl SharedStateTally {
    pub fn new(d: usize) -> Self {
        Self {
            kappa: vec![0.0; d],
            gamma: vec![0.0; d],
            tau: vec![0; d],
            phi: vec![0; d],
        }
    }

    /// Build a tally from explicit values, validating the invariants.
    pub fn from_parts(
        kappa: Vec<f64>,
        gamma: Vec<f64>,
        tau: Vec<u64>,
        phi: Vec<u64>,
    ) -> Result<Self> {
        let d = kappa.len();
        if gamma.len() != d || tau.len() != d || phi.len() != d {
            return Err(NmqaError::InvalidArgument(
                "tally component lengths differ".into(),
            ));
        }
        for (label, means, counts) in [("kappa", &kappa, &tau), ("gamma", &gamma, &phi)] {
            for (q, (&m, &c)) in means.iter().zip(counts.iter()).enumerate() {
                if !(0.0..=1.0).contains(&m) {
                    return Err(NmqaError::InvalidArgument(format!(
                        "{label}[{q}] = {m} outside [0, 1]"
                    )));
                }
                if c == 0 && m != 0.0 {
                    return Err(NmqaError::InvalidArgument(format!(
                        "{label}[{q}] nonzero with zero count"
                    )));
                }
            }
        }
        Ok(Self { kappa, gamma, tau, phi })
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    /// Fold one observed bit into the running averages: physical bits move
    /// `kappa`/`tau` at the site, message bits move `gamma`/`phi`.
    pub fn record(&mut self, outcome: &MeasurementOutcome) {
        let q = outcome.site;
        let bit = outcome.bit as f64;
        match outcome.origin {
            Origin::Physical => {
                self.tau[q] += 1;
                self.kappa[q] += (bit - self.kappa[q]) / self.tau[q] as f64;
            }
            Origin::Message => {
                self.phi[q] += 1;
                self.gamma[q] += (bit - self.gamma[q]) / self.phi[q] as f64;
            }
        }
    }

    pub fn kappa(&self, q: usize) -> f64 {
        self.kappa[q]
    }

    pub fn gamma(&self, q: usize) -> f64 {
        self.gamma[q]
    }

    pub fn tau(&self, q: usize) -> u64 {
        self.tau[q]
    }

    pub fn phi(&self, q: usize) -> u64 {
        self.phi[q]
    }

    /// Whether any bit (physical or message) has ever landed on `q`.
    pub fn is_touched(&self, q: usize) -> bool {
        self.tau[q] + self.phi[q] > 0
    }
}

/// Filter parameters. `lambda1` weights message bits in phase estimation,
/// `lambda2` weights extrapolated phases in length-scale scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub n_alpha: usize,
    pub n_beta: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub noise: NoiseParams,
    pub r_min: f64,
    pub r_max: f64,
    pub k0: f64,
}

impl FilterConfig {
    /// Defaults for a given array: length-scale prior from the inter-site
    /// spacing up to the array diameter, tuned sharing weights.
    pub fn for_array(array: &QubitArray) -> Self {
        let r_min = array.spacing();
        let r_max = array.diameter().max(r_min);
        Self {
            n_alpha: 100,
            n_beta: 25,
            lambda1: 0.89,
            lambda2: 0.97,
            noise: NoiseParams::default(),
            r_min,
            r_max,
            k0: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_alpha == 0 {
            return Err(NmqaError::InvalidArgument("n_alpha must be positive".into()));
        }
        if self.n_beta == 0 {
            return Err(NmqaError::InvalidArgument("n_beta must be positive".into()));
        }
        for (name, l) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(0.0..=1.0).contains(&l) {
                return Err(NmqaError::InvalidArgument(format!(
                    "{name} = {l} outside [0, 1]"
                )));
            }
        }
        self.noise.validate()?;
        if !(self.r_min > 0.0 && self.r_min.is_finite()) {
            return Err(NmqaError::InvalidArgument(format!(
                "r_min must be positive and finite, got {}",
                self.r_min
            )));
        }
        if !(self.r_max >= self.r_min && self.r_max.is_finite()) {
            return Err(NmqaError::InvalidArgument(format!(
                "r_max = {} must be finite and at least r_min = {}",
                self.r_max, self.r_min
            )));
        }
        if !(self.k0 >= 1.0 && self.k0.is_finite()) {
            return Err(NmqaError::InvalidArgument(format!(
                "k0 must be at least 1, got {}",
                self.k0
            )));
        }
        Ok(())
    }

    /// Likelihood constants implied by the noise parameters, computed once
    /// per run.
    pub fn consts(&self) -> Result<LikelihoodConsts> {
        self.validate()?;
        let rho0 = rho0(self.noise.sigma_v, NOISE_HALF_WIDTH)?;
        let k1 = k1(self.noise.mu_f, self.noise.sigma_f);
        let log_g2_norm = -(k1 * (2.0 * PI * self.noise.sigma_f).sqrt()).ln();
        Ok(LikelihoodConsts { rho0, k1, log_g2_norm })
    }
}

/// Cached likelihood constants: the `g1` normalizer `rho0`, the truncation
/// constant `k1`, and the log of the `g2` per-factor normalizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodConsts {
    pub rho0: f64,
    pub k1: f64,
    pub log_g2_norm: f64,
}

/// Total probability mass of the two-sided bit likelihood for truncated
/// Gaussian readout noise of variance `sigma_v` on `[-b, b]`:
/// `erf(2b/s) + (s/2b)(e^{-(2b/s)^2} - 1)/sqrt(pi)` with `s = sqrt(2 sigma_v)`.
pub fn rho0(sigma_v: f64, b: f64) -> Result<f64> {
    if !(sigma_v > 0.0 && sigma_v < 1.0) {
        return Err(NmqaError::InvalidArgument(format!(
            "sigma_v must lie in (0, 1), got {sigma_v}"
        )));
    }
    if !(b > 0.0) {
        return Err(NmqaError::InvalidArgument(format!(
            "noise half-width must be positive, got {b}"
        )));
    }
    let s = (2.0 * sigma_v).sqrt();
    let a = 2.0 * b / s;
    Ok(erf(a) + (s / (2.0 * b)) * ((-a * a).exp() - 1.0) / PI.sqrt())
}

/// Mass of a Gaussian `N(mu_f, sigma_f)` on `[-pi, pi]`, the normalizer of
/// each `g2` factor.
pub fn k1(mu_f: f64, sigma_f: f64) -> f64 {
    let s = (2.0 * sigma_f).sqrt();
    0.5 * (erf((PI + mu_f) / s) + erf((PI - mu_f) / s))
}

/// Likelihood of bit `y` at phase `f`: `rho0/2 +/- rho0 cos(f)/2`.
pub fn g1_weight(f: f64, y: u8, sigma_v: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&f) {
        return Err(NmqaError::InvalidArgument(format!(
            "phase {f} outside [0, pi]"
        )));
    }
    if y > 1 {
        return Err(NmqaError::InvalidArgument(format!("bit must be 0 or 1, got {y}")));
    }
    let rho0 = rho0(sigma_v, NOISE_HALF_WIDTH)?;
    Ok(g1_from_rho0(f, y, rho0))
}

fn g1_from_rho0(f: f64, y: u8, rho0: f64) -> f64 {
    let sign = if y == 1 { 1.0 } else { -1.0 };
    0.5 * rho0 + sign * 0.5 * rho0 * f.cos()
}

/// Length-scale likelihood for one beta particle: the product over the
/// candidate neighborhood of truncated-Gaussian densities comparing each
/// neighbor's phase to the blended extrapolation from the measured site.
/// An empty neighborhood scores 1.
pub fn g2_weight(
    beta: &BetaParticle,
    f: &[f64],
    j: usize,
    array: &QubitArray,
    tally: &SharedStateTally,
    config: &FilterConfig,
) -> Result<f64> {
    if !(config.r_min..=config.r_max).contains(&beta.r_j) {
        return Err(NmqaError::InvalidArgument(format!(
            "candidate length-scale {} outside [{}, {}]",
            beta.r_j, config.r_min, config.r_max
        )));
    }
    let consts = config.consts()?;
    Ok(log_g2(f, j, beta.r_j, array, tally, config, &consts)?.exp())
}

/// Log of `g2_weight`; the form used in stepping, where products over tight
/// Gaussian factors underflow ordinary floats. Walks the precomputed
/// distance-sorted neighbor list directly: this runs once per beta particle
/// and dominates the step cost.
fn log_g2(
    f: &[f64],
    j: usize,
    r_j: f64,
    array: &QubitArray,
    tally: &SharedStateTally,
    config: &FilterConfig,
    consts: &LikelihoodConsts,
) -> Result<f64> {
    if j >= array.len() {
        return Err(NmqaError::InvalidArgument(format!(
            "site {j} out of range for {}-site array",
            array.len()
        )));
    }
    let radius = config.k0 * r_j;
    let inv_r_sq = 1.0 / (r_j * r_j);
    let half_inv_sigma = 0.5 / config.noise.sigma_f;
    let mut log_w = 0.0;
    for &(q, nu) in array
        .neighbors_by_distance(j)
        .iter()
        .take_while(|&&(_, nu)| nu <= radius)
    {
        let f_bar = f[j] * (-nu * nu * inv_r_sq).exp();
        let w2 = pow_count(config.lambda2, tally.tau(q));
        let x_q = (1.0 - w2) * f[q] + w2 * f_bar;
        let dev = f[q] - x_q - config.noise.mu_f;
        log_w += consts.log_g2_norm - dev * dev * half_inv_sigma;
    }
    Ok(log_w)
}

/// Phase estimate at `site` from the tallied bit averages: the empirical
/// Born probability `P` blends physical and message means by `lambda1^tau`,
/// then `F = arccos(2P - 1)`.
pub fn update_map_h1(tally: &SharedStateTally, site: usize, lambda1: f64) -> Result<f64> {
    if site >= tally.len() {
        return Err(NmqaError::InvalidArgument(format!(
            "site {site} out of range for {}-site tally",
            tally.len()
        )));
    }
    if !(0.0..=1.0).contains(&lambda1) {
        return Err(NmqaError::InvalidArgument(format!(
            "lambda1 = {lambda1} outside [0, 1]"
        )));
    }
    let tau = tally.tau(site);
    let phi = tally.phi(site);
    let p = match (tau, phi) {
        (0, 0) => return Err(NmqaError::NoData(site)),
        (_, 0) => tally.kappa(site),
        (0, _) => tally.gamma(site),
        _ => {
            let w = pow_count(lambda1, tau);
            (1.0 - 0.5 * w) * tally.kappa(site) + 0.5 * w * tally.gamma(site)
        }
    };
    Ok((2.0 * p - 1.0).clamp(-1.0, 1.0).acos())
}

/// Draw `n_beta` candidate length-scales for one parent, uniform over the
/// prior range.
pub fn spawn_beta_layer<R: Rng + ?Sized>(
    parent: usize,
    n_beta: usize,
    config: &FilterConfig,
    rng: &mut R,
) -> Vec<BetaParticle> {
    (0..n_beta)
        .map(|_| BetaParticle {
            parent,
            r_j: rng.random_range(config.r_min..=config.r_max),
            weight: 1.0,
        })
        .collect()
}

/// Draw `count` items i.i.d. with probability proportional to weight, with
/// replacement.
pub fn resample_multinomial<T: Clone, R: Rng + ?Sized>(
    items: &[T],
    weights: &[f64],
    count: usize,
    rng: &mut R,
) -> Result<Vec<T>> {
    if items.len() != weights.len() {
        return Err(NmqaError::InvalidArgument(format!(
            "{} items but {} weights",
            items.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(NmqaError::InvalidArgument(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let dist = WeightedIndex::new(weights)
        .map_err(|e| NmqaError::DegenerateWeights(e.to_string()))?;
    Ok((0..count).map(|_| items[dist.sample(rng)].clone()).collect())
}

/// Mean of the surviving candidate length-scales of one parent's layer.
pub fn update_lengthscale_h2(surviving_r: &[f64]) -> Result<f64> {
    if surviving_r.is_empty() {
        return Err(NmqaError::InvalidArgument(
            "empty beta layer after resampling".into(),
        ));
    }
    Ok(surviving_r.iter().sum::<f64>() / surviving_r.len() as f64)
}

/// One iteration's observation: the physical bit at the measured site plus
/// the message bits queued by the previous iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    physical: MeasurementOutcome,
    messages: Vec<MeasurementOutcome>,
}

impl Observation {
    pub fn new(physical: MeasurementOutcome, messages: Vec<MeasurementOutcome>) -> Result<Self> {
        if physical.origin != Origin::Physical {
            return Err(NmqaError::InvalidArgument(
                "observation requires a physical outcome at the measured site".into(),
            ));
        }
        if let Some(m) = messages.iter().find(|m| m.origin != Origin::Message) {
            return Err(NmqaError::InvalidArgument(format!(
                "non-message outcome at site {} in message set",
                m.site
            )));
        }
        Ok(Self { physical, messages })
    }

    pub fn physical(&self) -> &MeasurementOutcome {
        &self.physical
    }

    pub fn messages(&self) -> &[MeasurementOutcome] {
        &self.messages
    }

    /// Sites whose tallies this observation moves, deduplicated.
    fn touched_sites(&self) -> Vec<usize> {
        let mut sites: Vec<usize> = std::iter::once(self.physical.site)
            .chain(self.messages.iter().map(|m| m.site))
            .collect();
        sites.sort_unstable();
        sites.dedup();
        sites
    }
}

/// Per-site posterior summaries: weighted mean and variance of the phase
/// map and weighted mean of the length-scale map.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub f_mean: Vec<f64>,
    pub f_var: Vec<f64>,
    pub r_mean: Vec<f64>,
}

/// The alpha-particle set for one run, with cached likelihood constants.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    config: FilterConfig,
    consts: LikelihoodConsts,
    particles: Vec<AlphaParticle>,
}

impl ParticleEnsemble {
    /// Uniform prior: per-site phases on `[0, pi]`, length-scales on
    /// `[r_min, r_max]`, uniform weights.
    pub fn init<R: Rng + ?Sized>(
        config: &FilterConfig,
        array: &QubitArray,
        rng: &mut R,
    ) -> Result<Self> {
        let consts = config.consts()?;
        let d = array.len();
        let w = 1.0 / config.n_alpha as f64;
        let particles = (0..config.n_alpha)
            .map(|_| AlphaParticle {
                state: ExtendedState {
                    f: (0..d).map(|_| rng.random_range(0.0..=PI)).collect(),
                    r: (0..d)
                        .map(|_| rng.random_range(config.r_min..=config.r_max))
                        .collect(),
                },
                weight: w,
            })
            .collect();
        Ok(Self { config: config.clone(), consts, particles })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[AlphaParticle] {
        &self.particles
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    /// One filter iteration: fold the observation into the tallies,
    /// re-estimate the measured site via `h1`, weight alphas by `g1`, score
    /// candidate length-scales via `g2` in each beta layer, resample the
    /// joint set, and collapse back to `n_alpha` uniform-weight particles.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        tally: &mut SharedStateTally,
        obs: &Observation,
        array: &QubitArray,
        rng: &mut R,
    ) -> Result<()> {
        let d = array.len();
        if tally.len() != d {
            return Err(NmqaError::InvalidArgument(format!(
                "tally covers {} sites but array has {d}",
                tally.len()
            )));
        }
        let j = obs.physical().site;
        if let Some(&s) = obs.touched_sites().iter().find(|&&s| s >= d) {
            return Err(NmqaError::InvalidArgument(format!(
                "observation touches site {s} outside {d}-site array"
            )));
        }

        tally.record(obs.physical());
        for m in obs.messages() {
            tally.record(m);
        }

        // h1 re-estimates the measured site only; message recipients keep
        // their per-particle phases until physically measured, with the
        // message bits waiting in the tallies. h1 is a function of the
        // shared tallies alone, so every particle receives the same phase.
        let f_new = update_map_h1(tally, j, self.config.lambda1)?;
        for p in &mut self.particles {
            p.state.f[j] = f_new;
        }

        let y = obs.physical().bit;
        let mut alpha_sum = 0.0;
        for p in &mut self.particles {
            p.weight = g1_from_rho0(p.state.f[j], y, self.consts.rho0);
            alpha_sum += p.weight;
        }
        if !(alpha_sum > 0.0) {
            return Err(NmqaError::DegenerateWeights(format!(
                "all alpha weights vanished at site {j}"
            )));
        }

        // Beta layers: per-parent log-likelihoods, normalized within each
        // layer before joining with the parent's weight.
        let n_alpha = self.particles.len();
        let n_beta = self.config.n_beta;
        let mut joint_w = vec![0.0; n_alpha * n_beta];
        let mut candidate_r = vec![0.0; n_alpha * n_beta];
        let mut logs = vec![0.0; n_beta];
        for (i, p) in self.particles.iter().enumerate() {
            let layer = spawn_beta_layer(i, n_beta, &self.config, rng);
            for (b, beta) in layer.iter().enumerate() {
                logs[b] = log_g2(
                    &p.state.f,
                    j,
                    beta.r_j,
                    array,
                    tally,
                    &self.config,
                    &self.consts,
                )?;
                candidate_r[i * n_beta + b] = beta.r_j;
            }
            let lse = log_sum_exp(&logs);
            if !lse.is_finite() {
                return Err(NmqaError::DegenerateWeights(format!(
                    "beta layer of parent {i} vanished at site {j}"
                )));
            }
            let alpha_w = p.weight / alpha_sum;
            for b in 0..n_beta {
                joint_w[i * n_beta + b] = alpha_w * (logs[b] - lse).exp();
            }
        }

        let flat: Vec<usize> = (0..n_alpha * n_beta).collect();
        let survivors = resample_multinomial(&flat, &joint_w, n_alpha, rng)?;

        // h2: each parent's offspring share the mean of its surviving
        // candidates.
        let mut survived_r: Vec<Vec<f64>> = vec![Vec::new(); n_alpha];
        for &s in &survivors {
            survived_r[s / n_beta].push(candidate_r[s]);
        }
        let mut r_new = vec![0.0; n_alpha];
        for (i, rs) in survived_r.iter().enumerate() {
            if !rs.is_empty() {
                r_new[i] = update_lengthscale_h2(rs)?;
            }
        }

        let w = 1.0 / n_alpha as f64;
        let offspring = survivors
            .iter()
            .map(|&s| {
                let i = s / n_beta;
                let mut state = self.particles[i].state.clone();
                state.r[j] = r_new[i];
                AlphaParticle { state, weight: w }
            })
            .collect();
        self.particles = offspring;
        Ok(())
    }

    /// Weighted per-site moments over the ensemble.
    pub fn posterior_summary(&self) -> PosteriorSummary {
        let d = self.particles[0].state.f.len();
        let w_sum: f64 = self.particles.iter().map(|p| p.weight).sum();
        let mut f_mean = vec![0.0; d];
        let mut r_mean = vec![0.0; d];
        for p in &self.particles {
            let w = p.weight / w_sum;
            for s in 0..d {
                f_mean[s] += w * p.state.f[s];
                r_mean[s] += w * p.state.r[s];
            }
        }
        let mut f_var = vec![0.0; d];
        for s in 0..d {
            // Sites where every particle agrees (e.g. h1-written sites) must
            // report exactly zero variance so the controller's tie-breaking
            // sees them as tied rather than ranked by accumulation roundoff.
            let f0 = self.particles[0].state.f[s];
            if self.particles.iter().all(|p| p.state.f[s] == f0) {
                f_mean[s] = f0;
                continue;
            }
            for p in &self.particles {
                let w = p.weight / w_sum;
                let dev = p.state.f[s] - f_mean[s];
                f_var[s] += w * dev * dev;
            }
        }
        PosteriorSummary { f_mean, f_var, r_mean }
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
