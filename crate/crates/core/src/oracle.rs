//! Brute-force and numerical reference implementations for tests.
//!
//! Nothing here calls into the solver, matching, power or compute modules;
//! formulas are re-derived from the scenario data directly.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::Scenario;

/// Grid points per user in [`exhaustive_best`].
pub const POWER_GRID: usize = 64;
/// Lowest grid power as a fraction of `p_max`.
pub const POWER_GRID_FLOOR: f64 = 1e-6;

/// A user's choice: `None` is local, otherwise `(server, subchannel)`.
pub type Choice = Option<(usize, usize)>;

fn local_cost(scn: &Scenario, n: usize) -> f64 {
    let u = scn.user(n);
    let t = u.task.beta / u.f_local;
    let e = u.kappa * u.task.beta * u.f_local.powi(2);
    u.lambda_t * t + u.lambda_e * e
}

/// Transmission part of the remote cost: `(λt α + λe p α/ζ) / R`.
fn tx_cost(scn: &Scenario, n: usize, p: f64, sinr: f64) -> f64 {
    let u = scn.user(n);
    let rate = scn.bandwidth() * (1.0 + sinr).ln() / std::f64::consts::LN_2;
    (u.lambda_t * u.task.alpha + u.lambda_e * p * u.task.alpha / u.zeta) / rate
}

/// `p_max · floor^(1 - k/(g-1))`, `k = 0..g`.
pub fn log_grid(p_max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![p_max];
    }
    (0..points)
        .map(|k| p_max * POWER_GRID_FLOOR.powf(1.0 - k as f64 / (points - 1) as f64))
        .collect()
}

/// Best summed transmission cost of a co-channel group, searching the grid
/// jointly. `members` are `(user, server)` on subchannel `s`.
fn best_group(scn: &Scenario, s: usize, members: &[(usize, usize)], grid: usize) -> (f64, Vec<f64>) {
    let grids: Vec<Vec<f64>> = members
        .iter()
        .map(|&(n, _)| log_grid(scn.user(n).p_max, grid))
        .collect();
    let mut idx = vec![0usize; members.len()];
    let mut best = (f64::INFINITY, Vec::new());
    loop {
        let powers: Vec<f64> = idx.iter().zip(&grids).map(|(&i, g)| g[i]).collect();
        let mut total = 0.0;
        for (a, &(n, m)) in members.iter().enumerate() {
            let mut interf = 0.0;
            for (b, &(k, mk)) in members.iter().enumerate() {
                if b != a && mk != m {
                    interf += powers[b] * scn.gain(k, m, s);
                }
            }
            let sinr = powers[a] * scn.gain(n, m, s) / (scn.noise() + interf);
            total += tx_cost(scn, n, powers[a], sinr);
        }
        if total < best.0 {
            best = (total, powers);
        }
        // Odometer increment.
        let mut d = 0;
        loop {
            if d == idx.len() {
                return best;
            }
            idx[d] += 1;
            if idx[d] < grid {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Execution part for one server: `Σ λt β / f` at the square-root split.
fn best_server(scn: &Scenario, m: usize, users: &[usize]) -> f64 {
    if users.is_empty() {
        return 0.0;
    }
    let roots: f64 = users
        .iter()
        .map(|&n| (scn.user(n).lambda_t * scn.user(n).task.beta).sqrt())
        .sum();
    if roots == 0.0 {
        return 0.0;
    }
    // With f_n = F·r_n/Σr, Σ r_n²/f_n = (Σ r)² / F.
    roots * roots / scn.server(m).f_max
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exhaustive {
    pub overhead: f64,
    pub choices: Vec<Choice>,
    /// Grid powers of offloaders, `0.0` for local users.
    pub powers: Vec<f64>,
    /// Assignments examined.
    pub examined: usize,
}

/// Global grid optimum over every feasible assignment of a micro-instance.
pub fn exhaustive_best(scn: &Scenario, grid: usize) -> Result<Exhaustive> {
    let (n_users, n_srv, n_sub) = (scn.num_users(), scn.num_servers(), scn.num_subchannels());
    if n_users > 4 || n_srv > 2 || n_sub > 2 {
        return Err(Error::TooLarge(format!(
            "{n_users} users, {n_srv} servers, {n_sub} subchannels"
        )));
    }
    let options: Vec<Choice> = std::iter::once(None)
        .chain((0..n_srv).flat_map(|m| (0..n_sub).map(move |s| Some((m, s)))))
        .collect();
    let mut memo: HashMap<(usize, Vec<(usize, usize)>), (f64, Vec<f64>)> = HashMap::new();
    let mut best: Option<Exhaustive> = None;
    let mut examined = 0;
    let mut idx = vec![0usize; n_users];
    'outer: loop {
        let choices: Vec<Choice> = idx.iter().map(|&i| options[i]).collect();
        if feasible(scn, &choices) {
            examined += 1;
            let mut z = 0.0;
            let mut powers = vec![0.0; n_users];
            for (n, c) in choices.iter().enumerate() {
                if c.is_none() {
                    z += local_cost(scn, n);
                }
            }
            for s in 0..n_sub {
                let members: Vec<(usize, usize)> = choices
                    .iter()
                    .enumerate()
                    .filter_map(|(n, c)| match c {
                        Some((m, cs)) if *cs == s => Some((n, *m)),
                        _ => None,
                    })
                    .collect();
                if members.is_empty() {
                    continue;
                }
                let (cost, ps) = memo
                    .entry((s, members.clone()))
                    .or_insert_with(|| best_group(scn, s, &members, grid))
                    .clone();
                z += cost;
                for (&(n, _), p) in members.iter().zip(ps) {
                    powers[n] = p;
                }
            }
            for m in 0..n_srv {
                let users: Vec<usize> = (0..n_users)
                    .filter(|&n| matches!(choices[n], Some((mm, _)) if mm == m))
                    .collect();
                z += best_server(scn, m, &users);
            }
            if best.as_ref().is_none_or(|b| z < b.overhead) {
                best = Some(Exhaustive {
                    overhead: z,
                    choices,
                    powers,
                    examined: 0,
                });
            }
        }
        let mut d = 0;
        loop {
            if d == n_users {
                break 'outer;
            }
            idx[d] += 1;
            if idx[d] < options.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
    let mut out = best.unwrap_or(Exhaustive {
        overhead: 0.0,
        choices: Vec::new(),
        powers: Vec::new(),
        examined: 0,
    });
    out.examined = examined;
    Ok(out)
}

fn feasible(scn: &Scenario, choices: &[Choice]) -> bool {
    for (a, ca) in choices.iter().enumerate() {
        if let Some(x) = ca {
            if choices[a + 1..].iter().any(|cb| cb.as_ref() == Some(x)) {
                return false;
            }
        }
    }
    (0..scn.num_servers()).all(|m| {
        choices.iter().filter(|c| matches!(c, Some((mm, _)) if *mm == m)).count()
            <= scn.server(m).quota
    })
}

/// Overhead rate of the single-user power problem, evaluated from scratch.
#[allow(clippy::too_many_arguments)]
pub fn eta_reference(
    lam_t: f64,
    lam_e: f64,
    alpha: f64,
    zeta: f64,
    bandwidth: f64,
    h: f64,
    noise_plus_i: f64,
    p: f64,
) -> f64 {
    let rate = (1.0 + p * h / noise_plus_i).ln() / std::f64::consts::LN_2;
    (lam_t * alpha / bandwidth + lam_e * alpha / zeta * p / bandwidth) / rate
}

/// Argmin of `f` over `points` evenly spaced samples of `(0, upper]`.
/// Returns `(argmin, step)`.
pub fn dense_grid_argmin(upper: f64, points: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let step = upper / points as f64;
    let mut best = (step, f(step));
    for k in 2..=points {
        let p = step * k as f64;
        let v = f(p);
        if v < best.1 {
            best = (p, v);
        }
    }
    (best.0, step)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericCra {
    pub shares: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `Σ w_k / f_k` over `Σ f = f_max`, `f ≥ 0` by projected gradient
/// with Barzilai-Borwein steps and backtracking. `offloaders` are `(λt, β)`.
pub fn numeric_cra(offloaders: &[(f64, f64)], f_max: f64) -> Result<NumericCra> {
    let k = offloaders.len();
    if k == 0 || k > 8 {
        return Err(Error::TooLarge(format!("{k} offloaders")));
    }
    let w: Vec<f64> = offloaders.iter().map(|&(l, b)| l * b).collect();
    let wmax = w.iter().cloned().fold(0.0, f64::max);
    if wmax == 0.0 {
        let shares = vec![f_max / k as f64; k];
        return Ok(NumericCra { shares, objective: 0.0, iterations: 0, converged: true });
    }
    // Work on x = f / f_max with weights scaled to at most one.
    let wn: Vec<f64> = w.iter().map(|v| v / wmax).collect();
    let lb: Vec<f64> = wn.iter().map(|&v| if v > 0.0 { 1e-12 } else { 0.0 }).collect();
    let obj = |x: &[f64]| -> f64 {
        wn.iter().zip(x).map(|(&v, &xi)| if v > 0.0 { v / xi } else { 0.0 }).sum()
    };
    let grad = |x: &[f64]| -> Vec<f64> {
        wn.iter().zip(x).map(|(&v, &xi)| if v > 0.0 { -v / (xi * xi) } else { 0.0 }).collect()
    };
    let mut x = vec![1.0 / k as f64; k];
    let mut fx = obj(&x);
    let mut g = grad(&x);
    let mut step = 1e-2;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..20_000 {
        iterations = it + 1;
        let mut t = step;
        let (xn, fxn) = loop {
            let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            let xn = project_simplex(&y, &lb);
            let fxn = obj(&xn);
            let decrease: f64 = g.iter().zip(&xn).zip(&x).map(|((gi, a), b)| gi * (a - b)).sum();
            if fxn <= fx + 1e-4 * decrease || t < 1e-30 {
                break (xn, fxn);
            }
            t *= 0.5;
        };
        let gn = grad(&xn);
        let sy: f64 = xn.iter().zip(&x).zip(gn.iter().zip(&g)).map(|((a, b), (c, d))| (a - b) * (c - d)).sum();
        let ss: f64 = xn.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum();
        let rel_change = (fx - fxn).abs() / fx.max(1e-300);
        x = xn;
        fx = fxn;
        g = gn;
        step = (if sy > 0.0 { ss / sy } else { step * 2.0 }).clamp(1e-20, 1e20);
        // Optimality: the marginal value w/x² is equal across users with w > 0.
        // A relative spread ε costs about ε² in the objective.
        let marg: Vec<f64> = wn.iter().zip(&x).filter(|(v, _)| **v > 0.0).map(|(v, xi)| v / (xi * xi)).collect();
        let hi = marg.iter().cloned().fold(f64::MIN, f64::max);
        let lo = marg.iter().cloned().fold(f64::MAX, f64::min);
        if (hi - lo) / hi < 1e-6 && rel_change < 1e-8 {
            converged = true;
            break;
        }
    }
    Ok(NumericCra {
        shares: x.iter().map(|v| v * f_max).collect(),
        objective: fx * wmax / f_max,
        iterations,
        converged,
    })
}

/// Euclidean projection onto `{x : Σx = 1, x ≥ lb}`.
fn project_simplex(y: &[f64], lb: &[f64]) -> Vec<f64> {
    let budget = 1.0 - lb.iter().sum::<f64>();
    let z: Vec<f64> = y.iter().zip(lb).map(|(a, b)| a - b).collect();
    let mut sorted = z.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        cum += v;
        let t = (cum - budget) / (i + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    z.iter().zip(lb).map(|(a, b)| (a - theta).max(0.0) + b).collect()
}

/// Association scores recomputed from the scenario: `(user_score[n][m],
/// server_cost[m][n])`, with every other candidate at `p_max/S` everywhere.
pub fn association_tables(
    scn: &Scenario,
    candidates: &[usize],
    phi_ua: f64,
    eps_ua: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (nu, ns, sc) = (scn.num_users(), scn.num_servers(), scn.num_subchannels());
    let mut user_score = vec![vec![f64::NEG_INFINITY; ns]; nu];
    let mut server_cost = vec![vec![f64::INFINITY; nu]; ns];
    for &n in candidates {
        let u = scn.user(n);
        for m in 0..ns {
            let mut gamma_sum = 0.0;
            for s in 0..sc {
                let mut interf = 0.0;
                for &k in candidates {
                    if k != n {
                        interf += scn.user(k).p_max / sc as f64 * scn.gain(k, m, s);
                    }
                }
                gamma_sum += u.p_max / sc as f64 * scn.gain(n, m, s) / (scn.noise() + interf);
            }
            let srv = scn.server(m);
            let f_nm = srv.f_max / srv.quota as f64;
            let lg = (1.0 + gamma_sum).ln() / std::f64::consts::LN_2;
            user_score[n][m] = phi_ua / u.task.alpha * lg + eps_ua / u.task.beta * f_nm;
            server_cost[m][n] = (u.lambda_t * u.task.alpha + u.lambda_e * u.p_max * u.task.alpha / u.zeta)
                / (scn.bandwidth() * lg)
                + u.lambda_t * u.task.beta / f_nm;
        }
    }
    (user_score, server_cost)
}

/// Every blocking `(user, server)` pair of an association, by full scan.
pub fn enumerate_assoc_blocking(
    scn: &Scenario,
    candidates: &[usize],
    quotas: &[usize],
    server_of: &[Option<usize>],
    phi_ua: f64,
    eps_ua: f64,
) -> Vec<(usize, usize)> {
    let (us, sc) = association_tables(scn, candidates, phi_ua, eps_ua);
    let mut out = Vec::new();
    for &n in candidates {
        for m in 0..scn.num_servers() {
            if server_of[n] == Some(m) {
                continue;
            }
            let user_wants = server_of[n].is_none_or(|c| us[n][m] > us[n][c]);
            if !user_wants {
                continue;
            }
            let members: Vec<usize> = (0..server_of.len()).filter(|&k| server_of[k] == Some(m)).collect();
            let server_wants = members.len() < quotas[m] || members.iter().any(|&k| sc[m][n] < sc[m][k]);
            if server_wants {
                out.push((n, m));
            }
        }
    }
    out
}

/// Every blocking `(server, user, subchannel)` triple of the per-cell
/// matchings. Cells are replayed in index order to rebuild the interference
/// each one was matched under.
pub fn enumerate_subch_blocking(
    scn: &Scenario,
    server_of: &[Option<usize>],
    links: &[Choice],
    phi_ca: f64,
    delta: f64,
) -> Vec<(usize, usize, usize)> {
    let (nu, ns, sc) = (scn.num_users(), scn.num_servers(), scn.num_subchannels());
    let pu = |n: usize| scn.user(n).p_max / sc as f64;
    let mut out = Vec::new();
    for m in 0..ns {
        // Interference at server m on s from users of other cells.
        let interf = |s: usize| -> f64 {
            (0..nu)
                .filter(|&k| matches!(server_of[k], Some(mk) if mk != m))
                .filter(|&k| {
                    let mk = server_of[k].unwrap_or(usize::MAX);
                    mk > m || matches!(links[k], Some((_, ks)) if ks == s)
                })
                .map(|k| pu(k) * scn.gain(k, m, s))
                .sum()
        };
        let rate = |n: usize, s: usize| -> f64 {
            let sinr = pu(n) * scn.gain(n, m, s) / (scn.noise() + interf(s));
            scn.bandwidth() * (1.0 + sinr).ln() / std::f64::consts::LN_2
        };
        let sub_score = |n: usize, s: usize| -> f64 {
            let leak: f64 = (0..ns).filter(|&j| j != m).map(|j| delta * scn.gain(n, j, s) * pu(n)).sum();
            phi_ca * rate(n, s) - leak
        };
        let cell: Vec<usize> = (0..nu).filter(|&n| server_of[n] == Some(m)).collect();
        let sub_of = |n: usize| links[n].map(|(_, s)| s);
        for &n in &cell {
            for s in 0..sc {
                if sub_of(n) == Some(s) {
                    continue;
                }
                let user_wants = sub_of(n).is_none_or(|c| rate(n, s) > rate(n, c));
                if !user_wants {
                    continue;
                }
                let holder = cell.iter().copied().find(|&k| sub_of(k) == Some(s));
                let sub_wants = holder.is_none_or(|h| sub_score(n, s) > sub_score(h, s));
                if sub_wants {
                    out.push((m, n, s));
                }
            }
        }
    }
    out
}

/// All stable associations of a tiny instance, by enumerating every
/// quota-feasible map from candidates to servers or unmatched.
pub fn stable_associations(
    scn: &Scenario,
    candidates: &[usize],
    quotas: &[usize],
    phi_ua: f64,
    eps_ua: f64,
) -> Result<Vec<Vec<Option<usize>>>> {
    let ns = scn.num_servers();
    if (ns as f64 + 1.0).powi(candidates.len() as i32) > 2e5 {
        return Err(Error::TooLarge(format!("{} candidates, {ns} servers", candidates.len())));
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; candidates.len()];
    loop {
        let mut server_of = vec![None; scn.num_users()];
        for (&n, &i) in candidates.iter().zip(&idx) {
            server_of[n] = if i == 0 { None } else { Some(i - 1) };
        }
        let within = (0..ns).all(|m| server_of.iter().filter(|&&x| x == Some(m)).count() <= quotas[m]);
        if within && enumerate_assoc_blocking(scn, candidates, quotas, &server_of, phi_ua, eps_ua).is_empty() {
            out.push(server_of);
        }
        let mut d = 0;
        loop {
            if d == idx.len() {
                return Ok(out);
            }
            idx[d] += 1;
            if idx[d] <= ns {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::scenario;

    #[test]
    fn refuses_large_instances() {
        let scn = scenario(5, 2, 2, |_, _| 1e-11);
        assert!(matches!(exhaustive_best(&scn, 8), Err(Error::TooLarge(_))));
    }

    #[test]
    fn hopeless_channels_give_local_optimum() {
        let scn = scenario(2, 2, 2, |_, _| 1e-25);
        let ex = exhaustive_best(&scn, 16).unwrap();
        assert!(ex.choices.iter().all(Option::is_none));
        assert!((ex.overhead - 2.0 * 2.225).abs() < 1e-12);
    }

    #[test]
    fn one_by_one_by_one_compares_two_candidates() {
        let scn = scenario(1, 1, 1, |_, _| 1e-10);
        let ex = exhaustive_best(&scn, POWER_GRID).unwrap();
        assert_eq!(ex.examined, 2);
        assert_eq!(ex.choices, vec![Some((0, 0))]);
    }

    #[test]
    fn grid_spans_floor_to_max() {
        let g = log_grid(0.1, POWER_GRID);
        assert_eq!(g.len(), 64);
        assert!((g[0] - 1e-7).abs() < 1e-20);
        assert_eq!(g[63], 0.1);
    }

    #[test]
    fn numeric_cra_simple_cases() {
        let one = numeric_cra(&[(0.5, 1e9)], 4e9).unwrap();
        assert!((one.shares[0] - 4e9).abs() < 1e-3);
        let eq = numeric_cra(&[(0.5, 1e9), (0.5, 1e9), (0.5, 1e9)], 3.0).unwrap();
        assert!(eq.converged);
        for s in eq.shares {
            assert!((s - 1.0).abs() < 1e-6);
        }
        let r = numeric_cra(&[(1.0, 1.0), (1.0, 4.0), (1.0, 9.0)], 6.0).unwrap();
        assert!(r.converged);
        assert!((r.objective - 6.0).abs() < 1e-6);
    }

    #[test]
    fn projection_is_feasible() {
        let p = project_simplex(&[0.9, 0.5, -0.3], &[0.0; 3]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn anti_stable_association_is_caught() {
        // Each user is best served by the server it is not matched to.
        let scn = scenario(2, 2, 1, |n, m| if n == m { 1e-10 } else { 1e-13 });
        let swapped = vec![Some(1), Some(0)];
        let pairs = enumerate_assoc_blocking(&scn, &[0, 1], &[1, 1], &swapped, 8e6, 0.2);
        assert!(!pairs.is_empty());
        let straight = vec![Some(0), Some(1)];
        assert!(enumerate_assoc_blocking(&scn, &[0, 1], &[1, 1], &straight, 8e6, 0.2).is_empty());
    }
}
