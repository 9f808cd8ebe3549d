//! One-to-one matching between a cell's users and its subchannels.
//!
//! Cells are matched in server-index order. While cell `m` is matched, users
//! of cells already processed interfere only on their tentative subchannel;
//! users of cells not yet processed interfere on every subchannel. All powers
//! are the uniform `p_n^max / S`.

use std::cmp::Ordering;

use crate::association::AssocMatching;
use crate::error::{Error, Result};
use crate::model::{rate_from_sinr, Scenario};

/// Per-(server, subchannel) interference penalty `δ_m^s`.
#[derive(Debug, Clone, PartialEq)]
pub enum Delta {
    Uniform(f64),
    /// Row-major `server × subchannel`.
    Table(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaWeights {
    pub phi_ca: f64,
    pub delta: Delta,
}

impl Default for CaWeights {
    fn default() -> Self {
        CaWeights {
            phi_ca: 1.0,
            delta: Delta::Uniform(0.1),
        }
    }
}

impl CaWeights {
    pub fn delta(&self, m: usize, s: usize, subchannels: usize) -> f64 {
        match &self.delta {
            Delta::Uniform(d) => *d,
            Delta::Table(t) => t[m * subchannels + s],
        }
    }
}

/// A transmitter seen as interference by other cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emitter {
    pub user: usize,
    pub server: usize,
    pub power: f64,
}

/// Active transmitters per subchannel.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InterferenceState {
    active: Vec<Vec<Emitter>>,
}

impl InterferenceState {
    pub fn quiet(subchannels: usize) -> Self {
        InterferenceState {
            active: vec![Vec::new(); subchannels],
        }
    }

    pub fn add(&mut self, s: usize, e: Emitter) {
        self.active[s].push(e);
    }

    /// Removes every emission of `user`.
    pub fn silence(&mut self, user: usize) {
        for list in &mut self.active {
            list.retain(|e| e.user != user);
        }
    }

    /// Interference received at server `m` on subchannel `s` from other cells.
    pub fn at(&self, scn: &Scenario, m: usize, s: usize) -> f64 {
        self.active[s]
            .iter()
            .filter(|e| e.server != m)
            .map(|e| e.power * scn.gain(e.user, m, s))
            .sum()
    }
}

fn uniform_power(scn: &Scenario, n: usize) -> f64 {
    scn.user(n).p_max / scn.num_subchannels() as f64
}

/// User-side score of subchannel `s`: the achievable rate at uniform power.
pub fn user_pref_ca(
    scn: &Scenario,
    n: usize,
    m: usize,
    s: usize,
    state: &InterferenceState,
) -> f64 {
    let sinr = uniform_power(scn, n) * scn.gain(n, m, s) / (scn.noise() + state.at(scn, m, s));
    rate_from_sinr(scn.bandwidth(), sinr)
}

/// Subchannel-side score of user `n`: weighted rate minus weighted leakage
/// towards every other server.
pub fn subchannel_pref_ca(
    scn: &Scenario,
    m: usize,
    s: usize,
    n: usize,
    state: &InterferenceState,
    weights: &CaWeights,
) -> f64 {
    let p = uniform_power(scn, n);
    let leakage: f64 = (0..scn.num_servers())
        .filter(|&j| j != m)
        .map(|j| weights.delta(j, s, scn.num_subchannels()) * scn.gain(n, j, s) * p)
        .sum();
    weights.phi_ca * user_pref_ca(scn, n, m, s, state) - leakage
}

/// Frozen preference tables for one cell.
#[derive(Debug, Clone)]
pub struct SubchPrefs {
    /// The cell's users, ascending.
    pub users: Vec<usize>,
    /// `user_score[i][s]` for `users[i]`, higher is better.
    pub user_score: Vec<Vec<f64>>,
    /// `sub_score[s][i]` for `users[i]`, higher is better.
    pub sub_score: Vec<Vec<f64>>,
}

impl SubchPrefs {
    pub fn compute(
        scn: &Scenario,
        m: usize,
        users: &[usize],
        state: &InterferenceState,
        weights: &CaWeights,
    ) -> Self {
        let mut users = users.to_vec();
        users.sort_unstable();
        let s_count = scn.num_subchannels();
        let user_score = users
            .iter()
            .map(|&n| (0..s_count).map(|s| user_pref_ca(scn, n, m, s, state)).collect())
            .collect();
        let sub_score = (0..s_count)
            .map(|s| {
                users
                    .iter()
                    .map(|&n| subchannel_pref_ca(scn, m, s, n, state, weights))
                    .collect()
            })
            .collect();
        SubchPrefs {
            users,
            user_score,
            sub_score,
        }
    }

    pub fn num_subchannels(&self) -> usize {
        self.sub_score.len()
    }
}

/// Cell-local matching `Ω`, both directions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubchMatching {
    /// `(user, subchannel)` pairs, ascending by user.
    pairs: Vec<(usize, usize)>,
    user_of: Vec<Option<usize>>,
}

impl SubchMatching {
    pub fn empty(subchannels: usize) -> Self {
        SubchMatching {
            pairs: Vec::new(),
            user_of: vec![None; subchannels],
        }
    }

    pub fn from_pairs(mut pairs: Vec<(usize, usize)>, subchannels: usize) -> Self {
        pairs.sort_unstable();
        let mut user_of = vec![None; subchannels];
        for &(n, s) in &pairs {
            user_of[s] = Some(n);
        }
        SubchMatching { pairs, user_of }
    }

    pub fn subch_of(&self, n: usize) -> Option<usize> {
        self.pairs.iter().find(|(u, _)| *u == n).map(|(_, s)| *s)
    }

    pub fn user_of(&self, s: usize) -> Option<usize> {
        self.user_of[s]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Injective both ways and mutually consistent.
    pub fn is_consistent(&self) -> bool {
        let mut seen_users: Vec<usize> = self.pairs.iter().map(|p| p.0).collect();
        seen_users.dedup();
        seen_users.len() == self.pairs.len()
            && self.pairs.iter().all(|&(n, s)| self.user_of.get(s) == Some(&Some(n)))
            && self.user_of.iter().flatten().count() == self.pairs.len()
    }
}

#[derive(Debug, Clone)]
pub struct SubchOutcome {
    pub matching: SubchMatching,
    /// At most `|users| · S`.
    pub proposals: usize,
}

/// User-proposing deferred acceptance on one cell's frozen preferences.
pub fn deferred_acceptance_cell(prefs: &SubchPrefs) -> SubchOutcome {
    let s_count = prefs.num_subchannels();
    let k = prefs.users.len();
    let rankings: Vec<Vec<usize>> = (0..k)
        .map(|i| {
            let mut order: Vec<usize> = (0..s_count).collect();
            order.sort_by(|&a, &b| {
                prefs.user_score[i][b]
                    .total_cmp(&prefs.user_score[i][a])
                    .then(a.cmp(&b))
            });
            order
        })
        .collect();
    let sub_order = |s: usize, a: usize, b: usize| -> Ordering {
        prefs.sub_score[s][b]
            .total_cmp(&prefs.sub_score[s][a])
            .then(a.cmp(&b))
    };

    let mut next = vec![0usize; k];
    let mut holder: Vec<Option<usize>> = vec![None; s_count];
    let mut free: Vec<usize> = (0..k).collect();
    let mut proposals = 0;
    loop {
        let mut requests: Vec<Vec<usize>> = vec![Vec::new(); s_count];
        for &i in &free {
            if let Some(&s) = rankings[i].get(next[i]) {
                requests[s].push(i);
                proposals += 1;
            }
        }
        if requests.iter().all(Vec::is_empty) {
            break;
        }
        let mut rejected = Vec::new();
        for (s, reqs) in requests.into_iter().enumerate() {
            if reqs.is_empty() {
                continue;
            }
            let mut pool = reqs;
            pool.extend(holder[s]);
            pool.sort_by(|&a, &b| sub_order(s, a, b));
            holder[s] = Some(pool[0]);
            rejected.extend_from_slice(&pool[1..]);
        }
        for &i in &rejected {
            next[i] += 1;
        }
        rejected.sort_unstable();
        free = rejected;
    }

    let pairs = holder
        .iter()
        .enumerate()
        .filter_map(|(s, h)| h.map(|i| (prefs.users[i], s)))
        .collect();
    SubchOutcome {
        matching: SubchMatching::from_pairs(pairs, s_count),
        proposals,
    }
}

/// Matches the users of cell `m` to its subchannels.
pub fn match_users_subchannels(
    scn: &Scenario,
    m: usize,
    users: &[usize],
    state: &InterferenceState,
    weights: &CaWeights,
) -> Result<SubchMatching> {
    if users.len() > scn.num_subchannels() {
        return Err(Error::TooManyUsers {
            server: m,
            users: users.len(),
            subchannels: scn.num_subchannels(),
        });
    }
    let prefs = SubchPrefs::compute(scn, m, users, state, weights);
    Ok(deferred_acceptance_cell(&prefs).matching)
}

/// Runs the per-cell matching for every server in index order.
///
/// Returns one matching per server together with the preference tables each
/// cell was matched under.
pub fn assign_subchannels(
    scn: &Scenario,
    assoc: &AssocMatching,
    weights: &CaWeights,
) -> Result<Vec<(SubchMatching, SubchPrefs)>> {
    let s_count = scn.num_subchannels();
    let mut state = InterferenceState::quiet(s_count);
    for m in 0..scn.num_servers() {
        for &n in assoc.users_of(m) {
            for s in 0..s_count {
                state.add(s, Emitter { user: n, server: m, power: uniform_power(scn, n) });
            }
        }
    }
    let mut out = Vec::with_capacity(scn.num_servers());
    for m in 0..scn.num_servers() {
        let users = assoc.users_of(m);
        if users.len() > s_count {
            return Err(Error::TooManyUsers {
                server: m,
                users: users.len(),
                subchannels: s_count,
            });
        }
        let prefs = SubchPrefs::compute(scn, m, users, &state, weights);
        let matching = deferred_acceptance_cell(&prefs).matching;
        for &n in users {
            state.silence(n);
        }
        for &(n, s) in matching.pairs() {
            state.add(s, Emitter { user: n, server: m, power: uniform_power(scn, n) });
        }
        out.push((matching, prefs));
    }
    Ok(out)
}

/// First `(user, subchannel)` pair blocking a cell matching.
pub fn find_blocking_pair_cell(prefs: &SubchPrefs, matching: &SubchMatching) -> Option<(usize, usize)> {
    for (i, &n) in prefs.users.iter().enumerate() {
        let current = matching.subch_of(n);
        for s in 0..prefs.num_subchannels() {
            if current == Some(s) {
                continue;
            }
            let user_wants = match current {
                None => true,
                Some(c) => prefs.user_score[i][s] > prefs.user_score[i][c],
            };
            if !user_wants {
                continue;
            }
            let sub_wants = match matching.user_of(s) {
                None => true,
                Some(h) => {
                    let j = prefs.users.iter().position(|&u| u == h);
                    match j {
                        Some(j) => prefs.sub_score[s][i] > prefs.sub_score[s][j],
                        None => true,
                    }
                }
            };
            if sub_wants {
                return Some((n, s));
            }
        }
    }
    None
}
