//! Neighborhood construction, Gaussian phase smearing, and data messages.
//!
//! A measurement at site `j` spreads information over the set of sites
//! within radius `k0 * r_j`. The smeared phase seen by a neighbor at
//! separation `nu` is `f_j * exp(-nu^2 / r_j^2)`, and messages are Bernoulli
//! bits drawn from the blended posterior estimate at each neighbor.

use rand::Rng;

use crate::error::{NmqaError, Result};
use crate::filter::{PosteriorSummary, SharedStateTally};
use crate::lattice::QubitArray;
use crate::measurement::MeasurementOutcome;

/// The sites within sharing range of a measured center site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub center: usize,
    /// Member sites ordered by increasing separation from the center.
    pub members: Vec<usize>,
}

impl Neighborhood {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }
}

/// Phase at separation `nu` from a site with phase `f_j` and length-scale
/// `r_j`: `f_j * exp(-nu^2 / r_j^2)`.
pub fn smeared_phase(f_j: f64, r_j: f64, nu: f64) -> Result<f64> {
    if !(r_j > 0.0) {
        return Err(NmqaError::InvalidArgument(format!(
            "length-scale must be positive, got {r_j}"
        )));
    }
    if nu < 0.0 {
        return Err(NmqaError::InvalidArgument(format!(
            "separation must be nonnegative, got {nu}"
        )));
    }
    Ok(f_j * (-(nu * nu) / (r_j * r_j)).exp())
}

/// Sites `q != j` with `distance(j, q) <= k0 * r_j`.
pub fn neighborhood(array: &QubitArray, j: usize, r_j: f64, k0: f64) -> Result<Neighborhood> {
    if j >= array.len() {
        return Err(NmqaError::InvalidArgument(format!(
            "site {j} out of range for {}-site array",
            array.len()
        )));
    }
    if !(r_j > 0.0) {
        return Err(NmqaError::InvalidArgument(format!(
            "length-scale must be positive, got {r_j}"
        )));
    }
    if !(k0 >= 1.0) {
        return Err(NmqaError::InvalidArgument(format!(
            "k0 must be at least 1, got {k0}"
        )));
    }
    let radius = k0 * r_j;
    let members = array
        .neighbors_by_distance(j)
        .iter()
        .take_while(|&&(_, nu)| nu <= radius)
        .map(|&(q, _)| q)
        .collect();
    Ok(Neighborhood { center: j, members })
}

/// Blend of a neighbor's own estimate and the smeared center estimate,
/// weighted by `lambda2^tau_q`. With `tau_q = 0` the smeared value is used
/// in full (`0^0 := 1`), since an unmeasured neighbor has no local evidence.
pub fn blended_estimate(
    f_q: f64,
    f_center_smeared: f64,
    lambda2: f64,
    tau_q: u64,
) -> f64 {
    let w = pow_count(lambda2, tau_q);
    (1.0 - w) * f_q + w * f_center_smeared
}

/// `lambda^tau` with the `0^0 := 1` convention.
pub(crate) fn pow_count(lambda: f64, tau: u64) -> f64 {
    if tau == 0 {
        1.0
    } else if lambda == 0.0 {
        0.0
    } else {
        lambda.powi(tau.min(i32::MAX as u64) as i32)
    }
}

/// Generate one data message per neighbor in the posterior neighborhood of
/// the measured site `j`: a Bernoulli bit with parameter
/// `cos(X_q)/2 + 1/2` where `X_q` blends the posterior map at `q` with the
/// posterior estimate at `j` smeared out to `q`.
pub fn generate_messages<R: Rng + ?Sized>(
    posterior: &PosteriorSummary,
    j: usize,
    array: &QubitArray,
    tally: &SharedStateTally,
    lambda2: f64,
    k0: f64,
    rng: &mut R,
) -> Result<Vec<MeasurementOutcome>> {
    let r_j = posterior.r_mean[j];
    let hood = neighborhood(array, j, r_j, k0)?;
    let f_j = posterior.f_mean[j];
    let mut messages = Vec::with_capacity(hood.len());
    for &q in &hood.members {
        let nu = array.distance(j, q)?;
        let smeared = smeared_phase(f_j, r_j, nu)?;
        let x_q = blended_estimate(posterior.f_mean[q], smeared, lambda2, tally.tau(q));
        let p = (0.5 * x_q.cos() + 0.5).clamp(0.0, 1.0);
        let bit = u8::from(rng.random::<f64>() < p);
        messages.push(MeasurementOutcome::message(q, bit));
    }
    Ok(messages)
}
