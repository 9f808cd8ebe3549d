//! Comparison schemes and a common dispatcher.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Assignment, InterferenceModel, Link, Scenario};
use crate::solver::{evaluate, score, solve, Solution, SolverParams};

/// Every user computes locally.
pub fn local_only(scn: &Scenario) -> Result<Solution> {
    evaluate(scn, Assignment::all_local(scn.num_users()), &SolverParams::default())
}

/// Matching and resource allocation on all users, with both filters disabled.
/// Users rejected by either matching compute locally.
pub fn offloading_only(scn: &Scenario, params: &SolverParams) -> Result<Solution> {
    let params = SolverParams {
        pre_filter: false,
        post_filter: false,
        ..params.clone()
    };
    solve(scn, &params)
}

/// Index of the server with the strongest gain to `n` over all subchannels.
pub fn strongest_server(scn: &Scenario, n: usize) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for m in 0..scn.num_servers() {
        for s in 0..scn.num_subchannels() {
            let h = scn.gain(n, m, s);
            if h > best.1 {
                best = (m, h);
            }
        }
    }
    best.0
}

/// Per-cell heuristic: each user attaches to its strongest server and every
/// cell runs the full pipeline on its own, blind to other cells. The result
/// is scored under real interference.
pub fn hoda(scn: &Scenario, params: &SolverParams) -> Result<Solution> {
    let mut asg = Assignment::all_local(scn.num_users());
    let mut power = crate::model::PowerAlloc::zeros(scn.num_users(), scn.num_subchannels());
    let mut compute = crate::model::ComputeAlloc::zeros(scn.num_users(), scn.num_servers());
    let mut flags = vec![false; scn.num_servers()];
    let mut iterations = 0;
    for m in 0..scn.num_servers() {
        let members: Vec<usize> = (0..scn.num_users())
            .filter(|&n| strongest_server(scn, n) == m)
            .collect();
        if members.is_empty() {
            continue;
        }
        let cell = scn.restrict(&members, m)?;
        let sol = solve(&cell, params)?;
        iterations = iterations.max(sol.iterations);
        flags[m] = !sol.diagnostics.equal_split_servers.is_empty();
        for (local, l) in sol.assignment.offloaders() {
            let n = members[local];
            asg.set(n, Some(Link { server: m, subchannel: l.subchannel }));
            power.set(n, l.subchannel, sol.power.get(local, l.subchannel));
            compute.set(n, m, sol.compute.get(local, 0));
        }
    }
    let mut out = score(scn, asg, power, compute, params.interference, flags)?;
    out.iterations = iterations;
    Ok(out)
}

/// Centralized greedy search. From all-local, every single-user move (to a
/// free server/subchannel slot, or back to local) is scored with re-optimized
/// power and CPU; the best strictly improving move is applied until none is
/// left.
pub fn hjtora_greedy(scn: &Scenario, params: &SolverParams) -> Result<Solution> {
    let mut sol = evaluate(scn, Assignment::all_local(scn.num_users()), params)?;
    let s_count = scn.num_subchannels();
    let mut steps = 0;
    loop {
        let mut best: Option<Solution> = None;
        for n in 0..scn.num_users() {
            let current = sol.assignment.link(n);
            let options = std::iter::once(None).chain((0..scn.num_servers()).flat_map(|m| {
                (0..s_count).map(move |s| Some(Link { server: m, subchannel: s }))
            }));
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
                let bar = best.as_ref().map_or(sol.total_overhead, |b| b.total_overhead);
                if cand.total_overhead < bar - 1e-12 * bar.abs() {
                    best = Some(cand);
                }
            }
        }
        match best {
            Some(b) => {
                sol = b;
                steps += 1;
            }
            None => break,
        }
    }
    sol.iterations = steps;
    Ok(sol)
}

/// Recomputes the overheads of `sol` under another interference model.
pub fn rescore(scn: &Scenario, sol: &Solution, model: InterferenceModel) -> Result<Solution> {
    let flags = (0..scn.num_servers())
        .map(|m| sol.diagnostics.equal_split_servers.contains(&m))
        .collect();
    let mut out = score(
        scn,
        sol.assignment.clone(),
        sol.power.clone(),
        sol.compute.clone(),
        model,
        flags,
    )?;
    out.iterations = sol.iterations;
    out.diagnostics = sol.diagnostics.clone();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Jcorams,
    Local,
    Offload,
    Hoda,
    Hjtora,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Jcorams,
        Scheme::Local,
        Scheme::Offload,
        Scheme::Hoda,
        Scheme::Hjtora,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Jcorams => "jcorams",
            Scheme::Local => "local",
            Scheme::Offload => "offload",
            Scheme::Hoda => "hoda",
            Scheme::Hjtora => "hjtora",
        }
    }

    pub fn run(self, scn: &Scenario, params: &SolverParams) -> Result<Solution> {
        match self {
            Scheme::Jcorams => solve(scn, params),
            Scheme::Local => local_only(scn),
            Scheme::Offload => offloading_only(scn, params),
            Scheme::Hoda => hoda(scn, params),
            Scheme::Hjtora => hjtora_greedy(scn, params),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown scheme `{s}`")))
    }
}
