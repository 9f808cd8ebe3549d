//! Many-to-one user/server association by deferred acceptance.
//!
//! Preferences are evaluated once under the uniform assumptions
//! `p_n^s = p_n^max / S` and `f_nm = f_m^max / q_m`, with every other
//! candidate transmitting at that uniform power on every subchannel.
//! Ties break towards the lowest index on both sides.

use std::cmp::Ordering;

use crate::model::Scenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UaWeights {
    /// Weight on the rate term.
    pub phi_ua: f64,
    /// Weight on the compute term.
    pub eps_ua: f64,
}

impl Default for UaWeights {
    fn default() -> Self {
        UaWeights {
            phi_ua: 8e6,
            eps_ua: 0.2,
        }
    }
}

/// `Σ_s Γ_nm^s` with every candidate at uniform power on every subchannel.
pub fn uniform_sinr_sum(scn: &Scenario, candidates: &[usize], n: usize, m: usize) -> f64 {
    let s_count = scn.num_subchannels();
    let s_f = s_count as f64;
    let own_p = scn.user(n).p_max / s_f;
    (0..s_count)
        .map(|s| {
            let interference: f64 = candidates
                .iter()
                .filter(|&&k| k != n)
                .map(|&k| scn.user(k).p_max / s_f * scn.gain(k, m, s))
                .sum();
            own_p * scn.gain(n, m, s) / (scn.noise() + interference)
        })
        .sum()
}

/// User-side score of server `m`; higher is better.
pub fn user_pref_ua(
    scn: &Scenario,
    candidates: &[usize],
    n: usize,
    m: usize,
    weights: &UaWeights,
) -> f64 {
    let u = scn.user(n);
    let srv = scn.server(m);
    let f_nm = srv.f_max / srv.quota as f64;
    weights.phi_ua / u.task.alpha * (1.0 + uniform_sinr_sum(scn, candidates, n, m)).log2()
        + weights.eps_ua / u.task.beta * f_nm
}

/// Server-side cost of user `n`; lower is better.
pub fn server_pref_ua(scn: &Scenario, candidates: &[usize], m: usize, n: usize) -> f64 {
    let u = scn.user(n);
    let srv = scn.server(m);
    let f_nm = srv.f_max / srv.quota as f64;
    let rate = scn.bandwidth() * (1.0 + uniform_sinr_sum(scn, candidates, n, m)).log2();
    (u.lambda_t * u.task.alpha + u.lambda_e * u.p_max * u.task.alpha / u.zeta) / rate
        + u.lambda_t * u.task.beta / f_nm
}

/// Frozen preference tables over a candidate set, indexed by user id.
#[derive(Debug, Clone)]
pub struct AssocPrefs {
    pub candidates: Vec<usize>,
    pub quotas: Vec<usize>,
    /// `user_score[n][m]`, higher is better. Rows of non-candidates are empty.
    pub user_score: Vec<Vec<f64>>,
    /// `server_cost[m][n]`, lower is better. Non-candidates hold `+∞`.
    pub server_cost: Vec<Vec<f64>>,
}

impl AssocPrefs {
    pub fn compute(scn: &Scenario, candidates: &[usize], weights: &UaWeights) -> Self {
        let mut candidates = candidates.to_vec();
        candidates.sort_unstable();
        candidates.dedup();
        let (n_count, m_count) = (scn.num_users(), scn.num_servers());
        let mut user_score = vec![Vec::new(); n_count];
        let mut server_cost = vec![vec![f64::INFINITY; n_count]; m_count];
        for &n in &candidates {
            let u = scn.user(n);
            let mut row = Vec::with_capacity(m_count);
            for m in 0..m_count {
                let srv = scn.server(m);
                let f_nm = srv.f_max / srv.quota as f64;
                let sum = uniform_sinr_sum(scn, &candidates, n, m);
                let log = (1.0 + sum).log2();
                row.push(weights.phi_ua / u.task.alpha * log + weights.eps_ua / u.task.beta * f_nm);
                let rate = scn.bandwidth() * log;
                server_cost[m][n] = (u.lambda_t * u.task.alpha
                    + u.lambda_e * u.p_max * u.task.alpha / u.zeta)
                    / rate
                    + u.lambda_t * u.task.beta / f_nm;
            }
            user_score[n] = row;
        }
        AssocPrefs {
            candidates,
            quotas: scn.servers().iter().map(|s| s.quota).collect(),
            user_score,
            server_cost,
        }
    }

    pub fn num_servers(&self) -> usize {
        self.quotas.len()
    }

    /// Strict user preference `m1 ≻_n m2` after tie-breaking.
    fn user_order(&self, n: usize, m1: usize, m2: usize) -> Ordering {
        let (a, b) = (self.user_score[n][m1], self.user_score[n][m2]);
        b.total_cmp(&a).then(m1.cmp(&m2))
    }

    fn server_order(&self, m: usize, n1: usize, n2: usize) -> Ordering {
        let (a, b) = (self.server_cost[m][n1], self.server_cost[m][n2]);
        a.total_cmp(&b).then(n1.cmp(&n2))
    }

    /// User `n`'s servers from most to least preferred.
    pub fn ranking(&self, n: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.num_servers()).collect();
        order.sort_by(|&a, &b| self.user_order(n, a, b));
        order
    }
}

/// User/server association `Ψ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AssocMatching {
    server_of: Vec<Option<usize>>,
    users_of: Vec<Vec<usize>>,
}

impl AssocMatching {
    pub fn empty(num_users: usize, num_servers: usize) -> Self {
        AssocMatching {
            server_of: vec![None; num_users],
            users_of: vec![Vec::new(); num_servers],
        }
    }

    /// Builds a matching from a user → server map.
    pub fn from_server_of(server_of: Vec<Option<usize>>, num_servers: usize) -> Self {
        let mut users_of = vec![Vec::new(); num_servers];
        for (n, m) in server_of.iter().enumerate() {
            if let Some(m) = m {
                users_of[*m].push(n);
            }
        }
        AssocMatching { server_of, users_of }
    }

    pub fn server_of(&self, n: usize) -> Option<usize> {
        self.server_of[n]
    }

    /// Users held by server `m`, ascending.
    pub fn users_of(&self, m: usize) -> &[usize] {
        &self.users_of[m]
    }

    pub fn num_servers(&self) -> usize {
        self.users_of.len()
    }

    pub fn matched_count(&self) -> usize {
        self.server_of.iter().filter(|m| m.is_some()).count()
    }

    /// Mutual consistency and quota check.
    pub fn is_consistent(&self, quotas: &[usize]) -> bool {
        let forward = self
            .server_of
            .iter()
            .enumerate()
            .all(|(n, m)| m.is_none_or(|m| self.users_of[m].contains(&n)));
        let backward = self.users_of.iter().enumerate().all(|(m, us)| {
            us.len() <= quotas[m] && us.iter().all(|&n| self.server_of[n] == Some(m))
        });
        forward && backward
    }
}

#[derive(Debug, Clone)]
pub struct AssocOutcome {
    pub matching: AssocMatching,
    /// Total proposals sent; at most `|candidates| · M`.
    pub proposals: usize,
    pub rounds: usize,
}

/// User-proposing deferred acceptance on frozen preferences.
pub fn deferred_acceptance(prefs: &AssocPrefs, num_users: usize) -> AssocOutcome {
    let m_count = prefs.num_servers();
    let rankings: Vec<Vec<usize>> = (0..num_users)
        .map(|n| {
            if prefs.user_score[n].is_empty() {
                Vec::new()
            } else {
                prefs.ranking(n)
            }
        })
        .collect();
    let mut next = vec![0usize; num_users];
    let mut held: Vec<Vec<usize>> = vec![Vec::new(); m_count];
    let mut unmatched: Vec<usize> = prefs.candidates.clone();
    let (mut proposals, mut rounds) = (0, 0);

    loop {
        let mut requests: Vec<Vec<usize>> = vec![Vec::new(); m_count];
        let mut any = false;
        for &n in &unmatched {
            if let Some(&m) = rankings[n].get(next[n]) {
                requests[m].push(n);
                proposals += 1;
                any = true;
            }
        }
        if !any {
            break;
        }
        rounds += 1;
        let mut rejected = Vec::new();
        for m in 0..m_count {
            if requests[m].is_empty() {
                continue;
            }
            let mut pool = std::mem::take(&mut held[m]);
            pool.append(&mut requests[m]);
            pool.sort_by(|&a, &b| prefs.server_order(m, a, b));
            let q = prefs.quotas[m];
            if pool.len() > q {
                rejected.extend(pool.drain(q..));
            }
            held[m] = pool;
        }
        for &n in &rejected {
            next[n] += 1;
        }
        rejected.sort_unstable();
        unmatched = rejected;
    }

    let mut server_of = vec![None; num_users];
    for (m, us) in held.iter_mut().enumerate() {
        us.sort_unstable();
        for &n in us.iter() {
            server_of[n] = Some(m);
        }
    }
    AssocOutcome {
        matching: AssocMatching {
            server_of,
            users_of: held,
        },
        proposals,
        rounds,
    }
}

/// Associates `candidates` to servers.
pub fn match_users_servers(
    scn: &Scenario,
    candidates: &[usize],
    weights: &UaWeights,
) -> AssocMatching {
    let prefs = AssocPrefs::compute(scn, candidates, weights);
    deferred_acceptance(&prefs, scn.num_users()).matching
}

/// First pair `(user, server)` that blocks `matching`, scanning users then
/// servers in index order.
///
/// A pair blocks when the user strictly prefers the server to its current
/// match (any server beats being unmatched) and the server either has spare
/// quota or strictly prefers the user to one of its current users.
pub fn find_blocking_pair(prefs: &AssocPrefs, matching: &AssocMatching) -> Option<(usize, usize)> {
    for &n in &prefs.candidates {
        let current = matching.server_of(n);
        for m in 0..prefs.num_servers() {
            if current == Some(m) {
                continue;
            }
            let user_wants = match current {
                None => true,
                Some(c) => prefs.user_score[n][m] > prefs.user_score[n][c],
            };
            if !user_wants {
                continue;
            }
            let held = matching.users_of(m);
            let server_wants = held.len() < prefs.quotas[m]
                || held
                    .iter()
                    .any(|&k| prefs.server_cost[m][n] < prefs.server_cost[m][k]);
            if server_wants {
                return Some((n, m));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::scenario;

    /// Two users, two servers, quota 1, user 0 near server 0 and user 1 near
    /// server 1.
    fn crossed() -> Scenario {
        let mut scn = scenario(2, 2, 1, |n, m| if n == m { 1e-9 } else { 1e-12 });
        force_quota(&mut scn, 1);
        scn
    }

    fn force_quota(scn: &mut Scenario, q: usize) {
        let servers: Vec<_> = scn
            .servers()
            .iter()
            .map(|s| crate::model::MecServer { quota: q, ..s.clone() })
            .collect();
        *scn = Scenario::new(
            scn.users().to_vec(),
            servers,
            scn.num_subchannels(),
            scn.bandwidth(),
            scn.noise(),
            scn.gains().to_vec(),
        )
        .unwrap();
    }

    #[test]
    fn closer_server_scores_higher() {
        let scn = scenario(1, 2, 2, |_, m| if m == 0 { 1e-10 } else { 1e-12 });
        let w = UaWeights::default();
        assert!(user_pref_ua(&scn, &[0], 0, 0, &w) > user_pref_ua(&scn, &[0], 0, 1, &w));
    }

    #[test]
    fn zero_eps_ranks_by_sinr_only() {
        let scn = scenario(1, 2, 2, |_, m| if m == 0 { 1e-12 } else { 2e-12 });
        let w = UaWeights { phi_ua: 1.0, eps_ua: 0.0 };
        let s0 = uniform_sinr_sum(&scn, &[0], 0, 0);
        let s1 = uniform_sinr_sum(&scn, &[0], 0, 1);
        assert!(s1 > s0);
        assert!(user_pref_ua(&scn, &[0], 0, 1, &w) > user_pref_ua(&scn, &[0], 0, 0, &w));
        assert!((user_pref_ua(&scn, &[0], 0, 0, &w) - (1.0 + s0).log2() / 3.36e6).abs() < 1e-18);
    }

    #[test]
    fn user_pref_matches_hand_evaluation() {
        // 2 users, 2 servers, S = 2, both candidates.
        let scn = scenario(2, 2, 2, |n, m| [[4e-11, 1e-12], [2e-12, 8e-11]][n][m]);
        let w = UaWeights::default();
        // User 0 at server 0: per subchannel own 0.05·4e-11, interferer 0.05·2e-12.
        let gamma: f64 = 0.05 * 4e-11 / (1e-13 + 0.05 * 2e-12);
        let expected = 8e6 / 3.36e6 * (1.0 + 2.0 * gamma).log2() + 0.2 / 1e9 * (4e9 / 2.0);
        let got = user_pref_ua(&scn, &[0, 1], 0, 0, &w);
        assert!(((got - expected) / expected).abs() < 1e-12);
    }

    #[test]
    fn server_pref_matches_hand_evaluation() {
        let scn = scenario(2, 2, 2, |n, m| [[4e-11, 1e-12], [2e-12, 8e-11]][n][m]);
        let gamma: f64 = 0.05 * 8e-11 / (1e-13 + 0.05 * 1e-12);
        let rate = 5e6 * (1.0 + 2.0 * gamma).log2();
        let expected = (0.5 * 3.36e6 + 0.5 * 0.1 * 3.36e6) / rate + 0.5 * 1e9 / 2e9;
        let got = server_pref_ua(&scn, &[0, 1], 1, 1);
        assert!(((got - expected) / expected).abs() < 1e-12);
    }

    #[test]
    fn server_prefers_higher_rate_user() {
        let scn = scenario(2, 1, 2, |n, _| if n == 0 { 1e-10 } else { 1e-12 });
        assert!(server_pref_ua(&scn, &[0, 1], 0, 0) < server_pref_ua(&scn, &[0, 1], 0, 1));
    }

    #[test]
    fn zero_lambda_t_leaves_energy_term() {
        let mut scn = scenario(1, 1, 1, |_, _| 1e-11);
        let mut users = scn.users().to_vec();
        users[0].lambda_t = 0.0;
        users[0].lambda_e = 1.0;
        scn = Scenario::new(users, scn.servers().to_vec(), 1, 5e6, 1e-13, scn.gains().to_vec()).unwrap();
        let rate = 5e6 * (1.0 + 0.1 * 1e-11 / 1e-13f64).log2();
        let expected = 0.1 * 3.36e6 / rate;
        assert!(((server_pref_ua(&scn, &[0], 0, 0) - expected) / expected).abs() < 1e-12);
    }

    #[test]
    fn crossed_preferences_each_gets_favorite() {
        let scn = crossed();
        let m = match_users_servers(&scn, &[0, 1], &UaWeights::default());
        assert_eq!(m.server_of(0), Some(0));
        assert_eq!(m.server_of(1), Some(1));
    }

    #[test]
    fn swapped_crossed_matching_is_blocked() {
        let scn = crossed();
        let prefs = AssocPrefs::compute(&scn, &[0, 1], &UaWeights::default());
        let swapped = AssocMatching::from_server_of(vec![Some(1), Some(0)], 2);
        assert_eq!(find_blocking_pair(&prefs, &swapped), Some((0, 0)));
    }

    #[test]
    fn empty_candidates_give_empty_matching() {
        let scn = crossed();
        let m = match_users_servers(&scn, &[], &UaWeights::default());
        assert_eq!(m.matched_count(), 0);
    }

    #[test]
    fn empty_matching_with_candidates_is_blocked() {
        let scn = crossed();
        let prefs = AssocPrefs::compute(&scn, &[0, 1], &UaWeights::default());
        assert!(find_blocking_pair(&prefs, &AssocMatching::empty(2, 2)).is_some());
    }

    #[test]
    fn contested_server_keeps_cheaper_user() {
        // Both users prefer server 0; user 1 has the better channel to it.
        let mut scn = scenario(2, 2, 1, |n, m| [[1e-10, 1e-14], [1e-9, 1e-12]][n][m]);
        force_quota(&mut scn, 1);
        let prefs = AssocPrefs::compute(&scn, &[0, 1], &UaWeights::default());
        assert!(prefs.user_score[0][0] > prefs.user_score[0][1]);
        assert!(prefs.user_score[1][0] > prefs.user_score[1][1]);
        assert!(prefs.server_cost[0][1] < prefs.server_cost[0][0]);
        let out = deferred_acceptance(&prefs, 2);
        assert_eq!(out.matching.server_of(1), Some(0));
        assert_eq!(out.matching.server_of(0), Some(1));
        assert!(find_blocking_pair(&prefs, &out.matching).is_none());
    }

    #[test]
    fn quota_and_proposal_bound() {
        let scn = scenario(7, 2, 3, |n, m| 1e-12 * (1 + (n * 7 + m * 3) % 5) as f64);
        let cands: Vec<usize> = (0..7).collect();
        let prefs = AssocPrefs::compute(&scn, &cands, &UaWeights::default());
        let out = deferred_acceptance(&prefs, 7);
        assert!(out.matching.is_consistent(&prefs.quotas));
        assert_eq!(out.matching.matched_count(), 6);
        assert!(out.proposals <= 7 * 2);
        assert!(find_blocking_pair(&prefs, &out.matching).is_none());
    }

    #[test]
    fn deterministic() {
        let scn = scenario(6, 3, 2, |n, m| 1e-12 * (1 + (n + 2 * m) % 4) as f64);
        let c: Vec<usize> = (0..6).collect();
        let a = match_users_servers(&scn, &c, &UaWeights::default());
        let b = match_users_servers(&scn, &c, &UaWeights::default());
        assert_eq!(a, b);
    }
}
