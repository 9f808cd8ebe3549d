//! The three-phase JCORAMS driver: screening, matching with resource
//! allocation, and removal of users that lose by offloading.

use crate::association::{deferred_acceptance, find_blocking_pair, AssocMatching, AssocPrefs, UaWeights};
use crate::compute::allocate_compute_all;
use crate::error::Result;
use crate::model::{
    local_overhead, offload_rate_with, user_overheads, Assignment, ComputeAlloc, InterferenceModel,
    Link, PowerAlloc, Scenario,
};
use crate::power::{allocate_power, PowerParams};
use crate::subchannel::{assign_subchannels, find_blocking_pair_cell, CaWeights};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub ua: UaWeights,
    pub ca: CaWeights,
    pub power: PowerParams,
    /// Screen users with the offloading condition before matching.
    pub pre_filter: bool,
    /// Remove users whose realized offloading cost exceeds local cost.
    pub post_filter: bool,
    /// Interference model used for power allocation and the post-filter.
    pub interference: InterferenceModel,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            ua: UaWeights::default(),
            ca: CaWeights::default(),
            power: PowerParams::default(),
            pre_filter: true,
            post_filter: true,
            interference: InterferenceModel::Full,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Users kept local by the pre-filter.
    pub pre_local: Vec<usize>,
    /// Users that survived the pre-filter.
    pub pof: Vec<usize>,
    /// Post-filter removals, in order.
    pub removed: Vec<usize>,
    /// The final association admits no blocking pair.
    pub association_stable: bool,
    /// Every cell's final subchannel matching admits no blocking pair.
    pub subchannel_stable: bool,
    /// Servers whose CPU fell back to an even split.
    pub equal_split_servers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub assignment: Assignment,
    pub power: PowerAlloc,
    pub compute: ComputeAlloc,
    pub per_user_overhead: Vec<f64>,
    pub total_overhead: f64,
    pub offloader_count: usize,
    /// Matching rounds run; zero when nobody was a candidate.
    pub iterations: usize,
    pub diagnostics: Diagnostics,
}

impl Solution {
    pub fn offloader_fraction(&self) -> f64 {
        if self.per_user_overhead.is_empty() {
            0.0
        } else {
            self.offloader_count as f64 / self.per_user_overhead.len() as f64
        }
    }
}

/// Allocates power and CPU for `asg` and scores the result.
pub fn evaluate(scn: &Scenario, asg: Assignment, params: &SolverParams) -> Result<Solution> {
    let power = allocate_power(scn, &asg, &params.power, params.interference);
    let (compute, flags) = allocate_compute_all(scn, &asg);
    score(scn, asg, power, compute, params.interference, flags)
}

/// Scores a fully specified allocation.
pub fn score(
    scn: &Scenario,
    asg: Assignment,
    power: PowerAlloc,
    compute: ComputeAlloc,
    model: InterferenceModel,
    equal_split: Vec<bool>,
) -> Result<Solution> {
    let per_user_overhead = user_overheads(scn, &asg, &power, &compute, model)?;
    let total_overhead = per_user_overhead.iter().sum();
    Ok(Solution {
        offloader_count: asg.offloader_count(),
        assignment: asg,
        power,
        compute,
        per_user_overhead,
        total_overhead,
        iterations: 0,
        diagnostics: Diagnostics {
            equal_split_servers: equal_split
                .iter()
                .enumerate()
                .filter_map(|(m, &f)| f.then_some(m))
                .collect(),
            ..Diagnostics::default()
        },
    })
}

/// Screening value `Υ_n` for every user: offloading at the lowest uniform
/// power over the best possible link to the fastest server, minus local cost.
pub fn upsilon(scn: &Scenario) -> Vec<f64> {
    let f0 = scn.servers().iter().map(|s| s.f_max).fold(0.0, f64::max);
    let s_count = scn.num_subchannels();
    (0..scn.num_users())
        .map(|n| {
            let u = scn.user(n);
            let h_best = (0..scn.num_servers())
                .flat_map(|m| (0..s_count).map(move |s| (m, s)))
                .map(|(m, s)| scn.gain(n, m, s))
                .fold(0.0, f64::max);
            let r_max = scn.bandwidth() * (1.0 + u.p_max * h_best / scn.noise()).log2();
            let p_min = u.p_max / s_count as f64;
            let tx = (u.lambda_t * u.task.alpha + u.lambda_e * p_min * u.task.alpha / u.zeta) / r_max;
            tx + u.lambda_t * u.task.beta / f0 - local_overhead(u).overhead
        })
        .collect()
}

/// Splits users into `(local, potential offloaders)`.
pub fn pre_filter(scn: &Scenario) -> (Vec<usize>, Vec<usize>) {
    let ups = upsilon(scn);
    (0..ups.len()).partition(|&n| ups[n] >= 0.0)
}

/// Realized `Υ*_n` of an offloader: its remote overhead minus local overhead.
pub fn upsilon_star(
    scn: &Scenario,
    asg: &Assignment,
    pw: &PowerAlloc,
    cmp: &ComputeAlloc,
    n: usize,
    model: InterferenceModel,
) -> Result<Option<f64>> {
    let Some(l) = asg.link(n) else {
        return Ok(None);
    };
    let u = scn.user(n);
    let rate = offload_rate_with(scn, asg, pw, n, l.server, l.subchannel, model)?;
    let tx = (u.lambda_t * u.task.alpha + u.lambda_e * pw.total(n) * u.task.alpha / u.zeta) / rate;
    let exe = if u.lambda_t == 0.0 {
        0.0
    } else {
        u.lambda_t * u.task.beta / cmp.get(n, l.server)
    };
    Ok(Some(tx + exe - local_overhead(u).overhead))
}

/// Picks the offloader to drop: among those with `Υ* > 0`, the one with the
/// lowest local overhead (ties to the lowest index).
pub fn post_filter(scn: &Scenario, sol: &Solution, model: InterferenceModel) -> Result<Option<usize>> {
    let mut pick: Option<(usize, f64)> = None;
    for (n, _) in sol.assignment.offloaders() {
        let ups = upsilon_star(scn, &sol.assignment, &sol.power, &sol.compute, n, model)?;
        if ups.is_some_and(|v| v > 0.0) {
            let zl = local_overhead(scn.user(n)).overhead;
            if pick.is_none_or(|(_, best)| zl < best) {
                pick = Some((n, zl));
            }
        }
    }
    Ok(pick.map(|(n, _)| n))
}

/// One matching round over `candidates`: association, then per-cell
/// subchannel matching. Returns the assignment and both stability verdicts.
pub fn match_round(
    scn: &Scenario,
    candidates: &[usize],
    params: &SolverParams,
) -> Result<(Assignment, bool, bool)> {
    let mut prefs = AssocPrefs::compute(scn, candidates, &params.ua);
    // A server cannot host more users than it has subchannels.
    for q in &mut prefs.quotas {
        *q = (*q).min(scn.num_subchannels());
    }
    let assoc: AssocMatching = deferred_acceptance(&prefs, scn.num_users()).matching;
    let ua_stable = find_blocking_pair(&prefs, &assoc).is_none();
    let cells = assign_subchannels(scn, &assoc, &params.ca)?;
    let mut asg = Assignment::all_local(scn.num_users());
    let mut ca_stable = true;
    for (m, (matching, prefs)) in cells.iter().enumerate() {
        ca_stable &= find_blocking_pair_cell(prefs, matching).is_none();
        for &(n, s) in matching.pairs() {
            asg.set(n, Some(Link { server: m, subchannel: s }));
        }
    }
    Ok((asg, ua_stable, ca_stable))
}

/// Runs the full algorithm.
pub fn solve(scn: &Scenario, params: &SolverParams) -> Result<Solution> {
    let (pre_local, pof) = if params.pre_filter {
        pre_filter(scn)
    } else {
        (Vec::new(), (0..scn.num_users()).collect())
    };
    let mut candidates = pof.clone();
    let mut removed = Vec::new();
    let mut iterations = 0;
    let mut sol = evaluate(scn, Assignment::all_local(scn.num_users()), params)?;
    let mut stable = (true, true);

    while !candidates.is_empty() {
        iterations += 1;
        let (asg, ua, ca) = match_round(scn, &candidates, params)?;
        sol = evaluate(scn, asg, params)?;
        stable = (ua, ca);
        let drop = if params.post_filter {
            post_filter(scn, &sol, params.interference)?
        } else {
            None
        };
        match drop {
            Some(n) => {
                candidates.retain(|&k| k != n);
                removed.push(n);
            }
            // The candidate set is unchanged, so another round would repeat this one.
            None => break,
        }
    }
    if candidates.is_empty() && !removed.is_empty() {
        sol = evaluate(scn, Assignment::all_local(scn.num_users()), params)?;
    }

    sol.iterations = iterations;
    sol.diagnostics.pre_local = pre_local;
    sol.diagnostics.pof = pof;
    sol.diagnostics.removed = removed;
    sol.diagnostics.association_stable = stable.0;
    sol.diagnostics.subchannel_stable = stable.1;
    Ok(sol)
}

fn rel_less(a: f64, b: f64) -> bool {
    a < b - 1e-12 * b.abs().max(1e-300)
}

/// Searches for a single-user move (to local or to a free server/subchannel
/// slot) that strictly lowers the mover's overhead without raising anyone
/// else's once power and CPU are re-optimized. Returns the first one found.
pub fn improving_single_move(
    scn: &Scenario,
    sol: &Solution,
    params: &SolverParams,
) -> Result<Option<(usize, Option<Link>)>> {
    let base = &sol.per_user_overhead;
    let s_count = scn.num_subchannels();
    for n in 0..scn.num_users() {
        let current = sol.assignment.link(n);
        let mut options: Vec<Option<Link>> = vec![None];
        for m in 0..scn.num_servers() {
            for s in 0..s_count {
                options.push(Some(Link { server: m, subchannel: s }));
            }
        }
        for opt in options {
            if opt == current {
                continue;
            }
            let mut asg = sol.assignment.clone();
            asg.set(n, opt);
            if asg.validate(scn).is_err() {
                continue;
            }
            let cand = evaluate(scn, asg, params)?;
            let z = &cand.per_user_overhead;
            let mover_better = rel_less(z[n], base[n]);
            let nobody_worse = (0..z.len()).all(|k| k == n || !rel_less(base[k], z[k]));
            if mover_better && nobody_worse {
                return Ok(Some((n, opt)));
            }
        }
    }
    Ok(None)
}

/// Searches for two offloaders on the same server whose subchannel swap
/// (or one moving to a free subchannel of its server) makes both no worse,
/// one strictly better, and leaves every other user no worse.
pub fn blocking_swap(
    scn: &Scenario,
    sol: &Solution,
    params: &SolverParams,
) -> Result<Option<(usize, Option<usize>)>> {
    let base = &sol.per_user_overhead;
    let offl: Vec<(usize, Link)> = sol.assignment.offloaders().collect();
    let check = |asg: Assignment, movers: &[usize]| -> Result<bool> {
        let z = evaluate(scn, asg, params)?.per_user_overhead;
        let some_better = movers.iter().any(|&k| rel_less(z[k], base[k]));
        let none_worse = (0..z.len()).all(|k| !rel_less(base[k], z[k]));
        Ok(some_better && none_worse)
    };
    for (i, &(a, la)) in offl.iter().enumerate() {
        for &(b, lb) in &offl[i + 1..] {
            if la.server != lb.server {
                continue;
            }
            let mut asg = sol.assignment.clone();
            asg.set(a, Some(lb));
            asg.set(b, Some(la));
            if check(asg, &[a, b])? {
                return Ok(Some((a, Some(b))));
            }
        }
        for s in 0..scn.num_subchannels() {
            let slot = Link { server: la.server, subchannel: s };
            if offl.iter().any(|&(_, l)| l == slot) {
                continue;
            }
            let mut asg = sol.assignment.clone();
            asg.set(a, Some(slot));
            if check(asg, &[a])? {
                return Ok(Some((a, None)));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{scenario, user};
    use crate::model::{system_overhead, MecServer};

    #[test]
    fn hostile_channels_keep_everyone_local() {
        let scn = scenario(3, 2, 2, |_, _| 1e-22);
        let sol = solve(&scn, &SolverParams::default()).unwrap();
        assert_eq!(sol.offloader_count, 0);
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.diagnostics.pre_local, vec![0, 1, 2]);
        let zl: f64 = scn.users().iter().map(|u| local_overhead(u).overhead).sum();
        assert!((sol.total_overhead - zl).abs() < 1e-12);
    }

    #[test]
    fn good_channel_single_user_offloads() {
        let scn = scenario(1, 1, 1, |_, _| 1e-9);
        let sol = solve(&scn, &SolverParams::default()).unwrap();
        assert_eq!(sol.offloader_count, 1);
        assert!(sol.total_overhead < local_overhead(scn.user(0)).overhead);
        assert_eq!(sol.iterations, 1);
    }

    #[test]
    fn equal_speed_free_local_stays_local() {
        let mut u = user(0, 4e9);
        u.kappa = 0.0;
        let srv = MecServer { id: 0, position: (0.0, 0.0), f_max: 4e9, quota: 1 };
        let scn = Scenario::new(vec![u], vec![srv], 1, 5e6, 1e-13, vec![1e-6]).unwrap();
        assert!(upsilon(&scn)[0] >= 0.0);
        assert_eq!(pre_filter(&scn), (vec![0], vec![]));
    }

    #[test]
    fn upsilon_hand_evaluation() {
        let scn = scenario(1, 2, 2, |_, m| [2e-11, 5e-11][m]);
        let r_max = 5e6 * (1.0 + 0.1 * 5e-11 / 1e-13f64).log2();
        let expected = (0.5 * 3.36e6 + 0.5 * 0.05 * 3.36e6) / r_max + 0.5 * 1e9 / 4e9 - 2.225;
        assert!((upsilon(&scn)[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn post_filter_drops_lowest_local_overhead() {
        // Two users offloading with poor links; user 1 has the cheaper local run.
        let mut u0 = user(0, 1.0e9);
        let u1 = user(1, 0.5e9);
        u0.id = 0;
        let srv = |id| MecServer { id, position: (0.0, 0.0), f_max: 4e9, quota: 2 };
        let scn = Scenario::new(vec![u0, u1], vec![srv(0)], 2, 5e6, 1e-13, vec![1e-15; 4]).unwrap();
        let zl: Vec<f64> = scn.users().iter().map(|u| local_overhead(u).overhead).collect();
        assert!(zl[1] < zl[0]);
        let asg = Assignment::from_links(vec![
            Some(Link { server: 0, subchannel: 0 }),
            Some(Link { server: 0, subchannel: 1 }),
        ]);
        let sol = evaluate(&scn, asg, &SolverParams::default()).unwrap();
        assert_eq!(post_filter(&scn, &sol, InterferenceModel::Full).unwrap(), Some(1));
    }

    #[test]
    fn final_offloaders_gain_and_stay_within_bound() {
        let scn = scenario(6, 2, 2, |n, m| 1e-12 * (1 + (5 * n + 3 * m) % 11) as f64);
        let sol = solve(&scn, &SolverParams::default()).unwrap();
        assert!(sol.iterations <= sol.diagnostics.pof.len() + 1);
        for (n, _) in sol.assignment.offloaders() {
            assert!(sol.diagnostics.pof.contains(&n));
            assert!(sol.per_user_overhead[n] <= local_overhead(scn.user(n)).overhead);
        }
        let z = system_overhead(&scn, &sol.assignment, &sol.power, &sol.compute).unwrap();
        assert!((z - sol.total_overhead).abs() <= 1e-12 * z);
        assert!(sol.diagnostics.association_stable && sol.diagnostics.subchannel_stable);
    }
}
