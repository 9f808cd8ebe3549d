//! Transmit-power optimization for offloading users.
//!
//! Each user minimizes `η(p) = (a + b·p) / log2(1 + p·g)` over `(0, p_max]`
//! where `a = λt·α/B`, `b = λe·(α/ζ)/B` and `g = h/(n0 + I)`. The function is
//! quasiconvex, and the sign of its derivative equals the sign of `φ`.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::{Assignment, InterferenceModel, PowerAlloc, Scenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerProblem {
    pub lam_t: f64,
    pub lam_e: f64,
    pub alpha_bits: f64,
    /// `α/ζ`.
    pub u: f64,
    pub bandwidth: f64,
    /// Own channel gain.
    pub h: f64,
    /// Noise plus the interference assumed for this solve, Watts.
    pub noise_plus_i: f64,
    pub p_max: f64,
}

impl PowerProblem {
    /// Problem for user `n` at server `m` on subchannel `s` under `interference`.
    pub fn for_user(scn: &Scenario, n: usize, m: usize, s: usize, interference: f64) -> Self {
        let user = scn.user(n);
        PowerProblem {
            lam_t: user.lambda_t,
            lam_e: user.lambda_e,
            alpha_bits: user.task.alpha,
            u: user.task.alpha / user.zeta,
            bandwidth: scn.bandwidth(),
            h: scn.gain(n, m, s),
            noise_plus_i: scn.noise() + interference,
            p_max: user.p_max,
        }
    }

    fn g(&self) -> f64 {
        self.h / self.noise_plus_i
    }

    fn a(&self) -> f64 {
        self.lam_t * self.alpha_bits / self.bandwidth
    }

    fn b(&self) -> f64 {
        self.lam_e * self.u / self.bandwidth
    }
}

/// Overhead rate `η(p)`.
pub fn eta(prob: &PowerProblem, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::PowerDomain(p));
    }
    Ok((prob.a() + prob.b() * p) / (1.0 + p * prob.g()).log2())
}

/// Sign function of `η′`: negative where `η` decreases, positive where it grows.
pub fn phi(prob: &PowerProblem, p: f64) -> f64 {
    let g = prob.g();
    let x = 1.0 + p * g;
    prob.b() * x.log2() - (g / LN_2) * (prob.a() + prob.b() * p) / x
}

/// Derivative of `φ`; positive for every valid problem.
pub fn phi_prime(prob: &PowerProblem, p: f64) -> f64 {
    let g = prob.g();
    let x = 1.0 + p * g;
    (prob.a() + prob.b() * p) * g * g / (x * x * LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub power: f64,
    pub iterations: u32,
}

/// Upper bound on bisection steps, `⌈log2(p_max/eps)⌉` (at least zero).
pub fn iteration_bound(p_max: f64, eps: f64) -> u32 {
    (p_max / eps).log2().ceil().max(0.0) as u32
}

/// Minimizes `η` on `(0, p_max]` by bisecting on the sign of `φ`.
pub fn bisect_power(prob: &PowerProblem, eps: f64) -> Bisection {
    if phi(prob, prob.p_max) <= 0.0 {
        return Bisection {
            power: prob.p_max,
            iterations: 0,
        };
    }
    let (mut lo, mut hi) = (0.0, prob.p_max);
    let mut iterations = 0;
    while hi - lo > eps {
        let mid = 0.5 * (lo + hi);
        if phi(prob, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    Bisection {
        power: (0.5 * (lo + hi)).max(eps.min(prob.p_max)),
        iterations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerParams {
    pub eps: f64,
    /// Re-solves after the worst-case pass. The standard scheme uses one.
    pub refinements: usize,
}

impl Default for PowerParams {
    fn default() -> Self {
        PowerParams {
            eps: 1e-6,
            refinements: 1,
        }
    }
}

/// Powers for the users sharing subchannel `s`, given as `(server, user)`.
///
/// The first pass assumes every co-channel user transmits at `p_max`; each
/// refinement re-solves against the interference implied by the previous pass.
pub fn allocate_power_group(
    scn: &Scenario,
    s: usize,
    group: &[(usize, usize)],
    params: &PowerParams,
    model: InterferenceModel,
) -> Vec<f64> {
    let solve = |powers: &[f64]| -> Vec<f64> {
        group
            .iter()
            .map(|&(m, n)| {
                let i = match model {
                    InterferenceModel::Free => 0.0,
                    InterferenceModel::Full => group
                        .iter()
                        .zip(powers)
                        .filter(|((mk, k), _)| *k != n && *mk != m)
                        .map(|((_, k), p)| p * scn.gain(*k, m, s))
                        .sum(),
                };
                bisect_power(&PowerProblem::for_user(scn, n, m, s, i), params.eps).power
            })
            .collect()
    };
    let worst: Vec<f64> = group.iter().map(|&(_, n)| scn.user(n).p_max).collect();
    let mut powers = solve(&worst);
    for _ in 0..params.refinements {
        powers = solve(&powers);
    }
    powers
}

/// Powers for every offloader of `asg`.
pub fn allocate_power(
    scn: &Scenario,
    asg: &Assignment,
    params: &PowerParams,
    model: InterferenceModel,
) -> PowerAlloc {
    let mut pw = PowerAlloc::zeros(scn.num_users(), scn.num_subchannels());
    for s in 0..scn.num_subchannels() {
        let group = asg.group(s);
        let powers = allocate_power_group(scn, s, &group, params, model);
        for (&(_, n), p) in group.iter().zip(powers) {
            pw.set(n, s, p);
        }
    }
    pw
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::scenario;
    use crate::model::Link;

    fn problem(lam_t: f64, h: f64) -> PowerProblem {
        PowerProblem {
            lam_t,
            lam_e: 1.0 - lam_t,
            alpha_bits: 3.36e6,
            u: 3.36e6,
            bandwidth: 5e6,
            h,
            noise_plus_i: 1e-13,
            p_max: 0.1,
        }
    }

    #[test]
    fn eta_matches_formula() {
        let pr = problem(0.5, 1e-11);
        let expected = (0.5 * 3.36e6 / 5e6 + 0.5 * 3.36e6 / 5e6 * 0.1) / (1.0 + 0.1 * 1e-11 / 1e-13f64).log2();
        assert!((eta(&pr, 0.1).unwrap() / expected - 1.0).abs() < 1e-14);
        assert!(matches!(eta(&pr, 0.0), Err(Error::PowerDomain(_))));
    }

    #[test]
    fn time_only_user_transmits_at_full_power() {
        let pr = problem(1.0, 1e-12);
        assert!(phi(&pr, pr.p_max) < 0.0);
        assert_eq!(bisect_power(&pr, 1e-6), Bisection { power: 0.1, iterations: 0 });
    }

    #[test]
    fn phi_at_zero() {
        let pr = problem(0.3, 2e-12);
        let expected = -(2e-12 / LN_2) * (0.3 * 3.36e6 / 5e6) / 1e-13;
        assert!((phi(&pr, 0.0) / expected - 1.0).abs() < 1e-12);
        assert!(phi_prime(&pr, 0.05) > 0.0);
    }

    #[test]
    fn strong_channel_energy_user_backs_off() {
        let pr = problem(0.1, 1e-9);
        assert!(phi(&pr, pr.p_max) > 0.0);
        let b = bisect_power(&pr, 1e-6);
        assert!(b.power < pr.p_max);
        assert!(b.iterations <= iteration_bound(0.1, 1e-6));
        let e = eta(&pr, b.power).unwrap();
        assert!(e <= eta(&pr, b.power + 1e-6).unwrap());
        assert!(e <= eta(&pr, b.power - 1e-6).unwrap());
    }

    #[test]
    fn coarse_eps_bounds_steps() {
        let pr = problem(0.1, 1e-9);
        assert!(bisect_power(&pr, pr.p_max).iterations <= 1);
        assert_eq!(iteration_bound(0.1, 1e-6), 17);
    }

    #[test]
    fn singleton_group_sees_noise_only() {
        let scn = scenario(1, 1, 2, |_, _| 3e-10);
        let p = allocate_power_group(&scn, 1, &[(0, 0)], &PowerParams::default(), InterferenceModel::Full);
        let solo = bisect_power(&PowerProblem::for_user(&scn, 0, 0, 1, 0.0), 1e-6).power;
        assert_eq!(p, vec![solo]);
    }

    #[test]
    fn symmetric_pair_gets_equal_powers() {
        let scn = scenario(2, 2, 1, |n, m| if n == m { 1e-9 } else { 1e-12 });
        let p = allocate_power_group(&scn, 0, &[(0, 0), (1, 1)], &PowerParams::default(), InterferenceModel::Full);
        assert_eq!(p[0], p[1]);
        let mut asg = Assignment::all_local(2);
        asg.set(0, Some(Link { server: 0, subchannel: 0 }));
        asg.set(1, Some(Link { server: 1, subchannel: 0 }));
        let pw = allocate_power(&scn, &asg, &PowerParams::default(), InterferenceModel::Full);
        assert_eq!(pw.get(0, 0), p[0]);
    }

    #[test]
    fn free_model_ignores_cochannel_users() {
        let scn = scenario(2, 2, 1, |n, m| if n == m { 1e-9 } else { 1e-10 });
        let free = allocate_power_group(&scn, 0, &[(0, 0), (1, 1)], &PowerParams::default(), InterferenceModel::Free);
        let solo = bisect_power(&PowerProblem::for_user(&scn, 0, 0, 0, 0.0), 1e-6).power;
        assert_eq!(free[0], solo);
    }
}
