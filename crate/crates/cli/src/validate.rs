//! Fast numerical invariant suite behind `nmqa validate`: a deterministic
//! smoke test of the likelihood constants, update rules, resampler,
//! neighborhood geometry, and scoring oracle. Every seed is fixed, so the
//! report text is identical across reruns.

use std::f64::consts::PI;

use nmqa::filter::{g1_weight, resample_multinomial, rho0, update_map_h1, SharedStateTally};
use nmqa::lattice::build_grid;
use nmqa::measurement::NOISE_HALF_WIDTH;
use nmqa::metrics::ssim;
use nmqa::rng::stream_rng;
use nmqa::sharing::neighborhood;
use nmqa::NmqaError;
use rand::Rng;

/// Chi-square 0.999 quantile at 9 degrees of freedom.
const CHI2_9_999: f64 = 27.877;
/// Score of two constant maps at 0.25 pi and 0.75 pi, frozen from an
/// independent evaluation of the similarity formula.
const SSIM_CONST_MAPS: f64 = 0.399_352_593_959_829_63;

/// One validation check's outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Largest deviation of `g1(f,0) + g1(f,1)` from a claimed normalization
/// constant over `n` random phases. Passing a corrupted constant makes the
/// gap macroscopic, which is how the negative-control test exercises it.
pub fn g1_normalization_gap(
    sigma_v: f64,
    rho0_value: f64,
    n: usize,
    seed: u64,
) -> nmqa::Result<f64> {
    let mut rng = stream_rng(seed, 101);
    let mut max_gap = 0.0f64;
    for _ in 0..n {
        let f = rng.random_range(0.0..=PI);
        let sum = g1_weight(f, 0, sigma_v)? + g1_weight(f, 1, sigma_v)?;
        max_gap = max_gap.max((sum - rho0_value).abs());
    }
    Ok(max_gap)
}

fn check_g1_normalization() -> CheckResult {
    let body = || -> nmqa::Result<(bool, String)> {
        let mut gaps = Vec::new();
        for sigma_v in [1e-4, 1e-6] {
            let r = rho0(sigma_v, NOISE_HALF_WIDTH)?;
            gaps.push(g1_normalization_gap(sigma_v, r, 100_000, 29)?);
        }
        let passed = gaps.iter().all(|&g| g < 1e-12);
        let detail = format!(
            "max gap {:.3e} (sigma_v=1e-4), {:.3e} (sigma_v=1e-6); bound 1e-12",
            gaps[0], gaps[1]
        );
        Ok((passed, detail))
    };
    finish("g1-normalization", body())
}

fn check_h1_inversion() -> CheckResult {
    let body = || -> nmqa::Result<(bool, String)> {
        let mut max_gap = 0.0f64;
        let mut combos = 0usize;
        for &lambda1 in &[0.0, 0.3, 0.89, 1.0] {
            for &tau in &[0u64, 1, 2, 5] {
                for &phi in &[0u64, 1, 3] {
                    for &kappa in &[0.0, 0.25, 0.5, 0.75, 1.0] {
                        for &gamma in &[0.0, 0.3, 0.5, 0.9, 1.0] {
                            if (tau == 0 && kappa != 0.0) || (phi == 0 && gamma != 0.0) {
                                continue;
                            }
                            let tally = SharedStateTally::from_parts(
                                vec![kappa],
                                vec![gamma],
                                vec![tau],
                                vec![phi],
                            )?;
                            if tau == 0 && phi == 0 {
                                match update_map_h1(&tally, 0, lambda1) {
                                    Err(NmqaError::NoData(0)) => {
                                        combos += 1;
                                        continue;
                                    }
                                    other => {
                                        return Ok((
                                            false,
                                            format!("empty site gave {other:?} instead of NoData"),
                                        ))
                                    }
                                }
                            }
                            let p = if tau == 0 {
                                gamma
                            } else if phi == 0 {
                                kappa
                            } else {
                                let w = lambda1.powf(tau as f64) / 2.0;
                                (1.0 - w) * kappa + w * gamma
                            };
                            let f = update_map_h1(&tally, 0, lambda1)?;
                            let direct = (2.0 * p - 1.0).clamp(-1.0, 1.0).acos();
                            max_gap = max_gap.max((f - direct).abs());
                            // inversion: the estimate reproduces the blend
                            max_gap = max_gap.max((f.cos() - (2.0 * p - 1.0)).abs());
                            combos += 1;
                        }
                    }
                }
            }
        }
        Ok((max_gap < 1e-12, format!("{combos} tally combinations, max gap {max_gap:.3e}")))
    };
    finish("h1-inversion", body())
}

fn check_resampling_chi_square() -> CheckResult {
    let body = || -> nmqa::Result<(bool, String)> {
        let items: Vec<usize> = (0..10).collect();
        let weights: Vec<f64> = (1..=10).map(|w| w as f64).collect();
        let total: f64 = weights.iter().sum();
        let n = 200_000usize;
        let draws = resample_multinomial(&items, &weights, n, &mut stream_rng(31, 7))?;
        let mut counts = [0usize; 10];
        for d in draws {
            counts[d] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(&weights)
            .map(|(&c, &w)| {
                let expected = n as f64 * w / total;
                (c as f64 - expected).powi(2) / expected
            })
            .sum();
        Ok((
            chi2 < CHI2_9_999,
            format!("chi2 {chi2:.3} on 9 df, 0.999 quantile {CHI2_9_999}"),
        ))
    };
    finish("resampling-chi-square", body())
}

fn check_neighborhood_monotonicity() -> CheckResult {
    let body = || -> nmqa::Result<(bool, String)> {
        let array = build_grid(6, 7, 0.8)?;
        let center = 17;
        let mut previous: Vec<usize> = Vec::new();
        for &r in &[0.5, 0.8, 1.2, 1.7, 2.4, 3.2, 4.8, 6.4] {
            let hood = neighborhood(&array, center, r, 1.0)?;
            if hood.members.len() < previous.len()
                || hood.members[..previous.len()] != previous[..]
            {
                return Ok((
                    false,
                    format!("radius {r} dropped sites present at a smaller radius"),
                ));
            }
            previous = hood.members;
        }
        Ok((
            previous.len() == array.len() - 1,
            format!(
                "neighborhoods grow monotonically to {} of {} sites",
                previous.len(),
                array.len() - 1
            ),
        ))
    };
    finish("neighborhood-monotonicity", body())
}

fn check_ssim_oracle() -> CheckResult {
    let body = || -> nmqa::Result<(bool, String)> {
        let low = vec![0.25 * PI; 9];
        let high = vec![0.75 * PI; 9];
        let gap = (ssim(&low, &high)? - SSIM_CONST_MAPS).abs();
        let self_score = ssim(&high, &high)?;
        Ok((
            gap < 1e-12 && self_score <= 1e-15,
            format!("constant-map gap {gap:.3e}, self score {self_score:.3e}"),
        ))
    };
    finish("ssim-oracle", body())
}

fn finish(name: &'static str, outcome: nmqa::Result<(bool, String)>) -> CheckResult {
    match outcome {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult { name, passed: false, detail: format!("errored: {e}") },
    }
}

/// Run every check.
pub fn run_validation() -> Vec<CheckResult> {
    vec![
        check_g1_normalization(),
        check_h1_inversion(),
        check_resampling_chi_square(),
        check_neighborhood_monotonicity(),
        check_ssim_oracle(),
    ]
}

/// Render the deterministic report; the flag says whether everything passed.
pub fn validation_report(checks: &[CheckResult]) -> (String, bool) {
    let mut text = String::new();
    let mut all = true;
    for c in checks {
        all &= c.passed;
        text.push_str(&format!(
            "{:<26} {} ({})\n",
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            c.detail
        ));
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    text.push_str(&format!("{passed}/{} checks passed\n", checks.len()));
    (text, all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_build_passes_every_check() {
        let checks = run_validation();
        assert_eq!(checks.len(), 5);
        for c in &checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn report_text_is_deterministic() {
        let (a, ok_a) = validation_report(&run_validation());
        let (b, ok_b) = validation_report(&run_validation());
        assert_eq!(a, b);
        assert!(ok_a && ok_b);
        assert!(a.contains("5/5 checks passed"));
    }

    #[test]
    fn corrupted_normalization_constant_is_caught() {
        let true_rho0 = rho0(1e-4, NOISE_HALF_WIDTH).unwrap();
        let clean = g1_normalization_gap(1e-4, true_rho0, 1_000, 29).unwrap();
        let corrupted = g1_normalization_gap(1e-4, true_rho0 + 1e-6, 1_000, 29).unwrap();
        assert!(clean < 1e-12, "clean gap {clean}");
        assert!(corrupted > 9e-7, "corrupted gap {corrupted}");
    }
}
