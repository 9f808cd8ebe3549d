//! Network model and overhead arithmetic.
//!
//! All quantities are SI base units: bits, Hz, W, cycles, cycles/s, s, J.
//! Unit conversions (dBm, dB) only happen when a configuration is parsed.

use crate::error::{Error, Result};

/// A computation task `(input bits, CPU cycles, output bits)`.
///
/// The output size is carried for completeness; result-return cost is not
/// part of the overhead model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskProfile {
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobileUser {
    pub id: usize,
    pub position: (f64, f64),
    pub task: TaskProfile,
    /// Local CPU speed, cycles/s.
    pub f_local: f64,
    /// Chip energy coefficient, J·s²/cycle³.
    pub kappa: f64,
    /// Maximum transmit power, W.
    pub p_max: f64,
    /// Power-amplifier efficiency in (0, 1].
    pub zeta: f64,
    pub lambda_t: f64,
    pub lambda_e: f64,
}

impl MobileUser {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::InvalidScenario(format!(
                "user {}: {what}",
                self.id
            )))
        };
        if !(self.task.alpha > 0.0 && self.task.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.task.beta > 0.0 && self.task.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if !(self.task.omega >= 0.0) {
            return bad("omega must be non-negative");
        }
        if !(self.f_local > 0.0 && self.f_local.is_finite()) {
            return bad("f_local must be positive");
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return bad("kappa must be non-negative");
        }
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return bad("p_max must be positive");
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return bad("zeta must lie in (0, 1]");
        }
        if !((0.0..=1.0).contains(&self.lambda_t) && (0.0..=1.0).contains(&self.lambda_e)) {
            return bad("weights must lie in [0, 1]");
        }
        if (self.lambda_t + self.lambda_e - 1.0).abs() > 1e-9 {
            return bad("lambda_t + lambda_e must equal 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MecServer {
    pub id: usize,
    pub position: (f64, f64),
    /// CPU capacity, cycles/s.
    pub f_max: f64,
    /// Maximum number of served users.
    pub quota: usize,
}

/// An immutable network instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    users: Vec<MobileUser>,
    servers: Vec<MecServer>,
    subchannels: usize,
    /// Bandwidth of one subchannel, Hz.
    bandwidth: f64,
    /// Noise power per subchannel, W.
    noise: f64,
    /// Linear gains, indexed `[user][server][subchannel]`.
    gains: Vec<f64>,
}

impl Scenario {
    /// `gains` is row-major `user × server × subchannel`.
    pub fn new(
        users: Vec<MobileUser>,
        servers: Vec<MecServer>,
        subchannels: usize,
        bandwidth: f64,
        noise: f64,
        gains: Vec<f64>,
    ) -> Result<Self> {
        if subchannels == 0 {
            return Err(Error::InvalidScenario("need at least one subchannel".into()));
        }
        if servers.is_empty() {
            return Err(Error::InvalidScenario("need at least one server".into()));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidScenario("bandwidth must be positive".into()));
        }
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(Error::InvalidScenario("noise must be positive".into()));
        }
        let expected = users.len() * servers.len() * subchannels;
        if gains.len() != expected {
            return Err(Error::InvalidScenario(format!(
                "gain table has {} entries, expected {expected}",
                gains.len()
            )));
        }
        if let Some(g) = gains.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidScenario(format!("non-positive gain {g}")));
        }
        for (i, u) in users.iter().enumerate() {
            if u.id != i {
                return Err(Error::InvalidScenario(format!("user at index {i} has id {}", u.id)));
            }
            u.validate()?;
        }
        for (i, srv) in servers.iter().enumerate() {
            if srv.id != i {
                return Err(Error::InvalidScenario(format!(
                    "server at index {i} has id {}",
                    srv.id
                )));
            }
            if !(srv.f_max > 0.0 && srv.f_max.is_finite()) || srv.quota == 0 {
                return Err(Error::InvalidScenario(format!(
                    "server {i} needs positive f_max and quota"
                )));
            }
        }
        Ok(Scenario {
            users,
            servers,
            subchannels,
            bandwidth,
            noise,
            gains,
        })
    }

    pub fn users(&self) -> &[MobileUser] {
        &self.users
    }

    pub fn user(&self, n: usize) -> &MobileUser {
        &self.users[n]
    }

    pub fn servers(&self) -> &[MecServer] {
        &self.servers
    }

    pub fn server(&self, m: usize) -> &MecServer {
        &self.servers[m]
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_servers(&self) -> usize {
        self.servers.len()
    }

    pub fn num_subchannels(&self) -> usize {
        self.subchannels
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Channel gain from user `n` to server `m` on subchannel `s`.
    #[inline]
    pub fn gain(&self, n: usize, m: usize, s: usize) -> f64 {
        self.gains[(n * self.servers.len() + m) * self.subchannels + s]
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// Sub-scenario keeping only the listed users and a single server.
    /// Users and the server are re-indexed from zero in the given order.
    pub fn restrict(&self, users: &[usize], server: usize) -> Result<Scenario> {
        let mut us = Vec::with_capacity(users.len());
        let mut gains = Vec::with_capacity(users.len() * self.subchannels);
        for (i, &n) in users.iter().enumerate() {
            let mut u = self.users[n].clone();
            u.id = i;
            us.push(u);
            for s in 0..self.subchannels {
                gains.push(self.gain(n, server, s));
            }
        }
        let mut srv = self.servers[server].clone();
        srv.id = 0;
        Scenario::new(us, vec![srv], self.subchannels, self.bandwidth, self.noise, gains)
    }
}

/// Server and subchannel carrying one offloaded task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Link {
    pub server: usize,
    pub subchannel: usize,
}

/// Binary offloading decision `a[n][m][s]`.
///
/// Stored as one optional link per user, so every user offloads on at most
/// one (server, subchannel) pair by construction. Per-subchannel exclusivity
/// and server quotas are checked by [`Assignment::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    links: Vec<Option<Link>>,
}

impl Assignment {
    pub fn all_local(num_users: usize) -> Self {
        Assignment {
            links: vec![None; num_users],
        }
    }

    pub fn from_links(links: Vec<Option<Link>>) -> Self {
        Assignment { links }
    }

    pub fn num_users(&self) -> usize {
        self.links.len()
    }

    pub fn link(&self, n: usize) -> Option<Link> {
        self.links[n]
    }

    pub fn links(&self) -> &[Option<Link>] {
        &self.links
    }

    pub fn set(&mut self, n: usize, link: Option<Link>) {
        self.links[n] = link;
    }

    /// `a_nm^s`.
    pub fn a(&self, n: usize, m: usize, s: usize) -> bool {
        self.links[n] == Some(Link { server: m, subchannel: s })
    }

    /// `a_nm`.
    pub fn a_nm(&self, n: usize, m: usize) -> bool {
        matches!(self.links[n], Some(l) if l.server == m)
    }

    /// `a_n`.
    pub fn a_n(&self, n: usize) -> bool {
        self.links[n].is_some()
    }

    pub fn offloaders(&self) -> impl Iterator<Item = (usize, Link)> + '_ {
        self.links
            .iter()
            .enumerate()
            .filter_map(|(n, l)| l.map(|l| (n, l)))
    }

    pub fn offloader_count(&self) -> usize {
        self.links.iter().filter(|l| l.is_some()).count()
    }

    pub fn users_of(&self, m: usize) -> Vec<usize> {
        self.offloaders()
            .filter(|(_, l)| l.server == m)
            .map(|(n, _)| n)
            .collect()
    }

    /// Offloaders transmitting on subchannel `s`, as `(server, user)` pairs.
    pub fn group(&self, s: usize) -> Vec<(usize, usize)> {
        self.offloaders()
            .filter(|(_, l)| l.subchannel == s)
            .map(|(n, l)| (l.server, n))
            .collect()
    }

    /// Checks indices, quotas and one user per (server, subchannel) slot.
    pub fn validate(&self, scn: &Scenario) -> Result<()> {
        if self.links.len() != scn.num_users() {
            return Err(Error::Inconsistent(format!(
                "assignment covers {} users, scenario has {}",
                self.links.len(),
                scn.num_users()
            )));
        }
        let (m_count, s_count) = (scn.num_servers(), scn.num_subchannels());
        let mut occupied = vec![false; m_count * s_count];
        let mut load = vec![0usize; m_count];
        for (n, l) in self.offloaders() {
            if l.server >= m_count || l.subchannel >= s_count {
                return Err(Error::Inconsistent(format!("user {n} has out-of-range link {l:?}")));
            }
            let slot = &mut occupied[l.server * s_count + l.subchannel];
            if *slot {
                return Err(Error::Inconsistent(format!(
                    "subchannel {} of server {} assigned twice",
                    l.subchannel, l.server
                )));
            }
            *slot = true;
            load[l.server] += 1;
        }
        for (m, &k) in load.iter().enumerate() {
            if k > scn.server(m).quota {
                return Err(Error::Inconsistent(format!(
                    "server {m} serves {k} users, quota {}",
                    scn.server(m).quota
                )));
            }
        }
        Ok(())
    }
}

/// Transmit power `p[n][s]`, W.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAlloc {
    subchannels: usize,
    p: Vec<f64>,
}

impl PowerAlloc {
    pub fn zeros(num_users: usize, subchannels: usize) -> Self {
        PowerAlloc {
            subchannels,
            p: vec![0.0; num_users * subchannels],
        }
    }

    #[inline]
    pub fn get(&self, n: usize, s: usize) -> f64 {
        self.p[n * self.subchannels + s]
    }

    pub fn set(&mut self, n: usize, s: usize, p: f64) {
        self.p[n * self.subchannels + s] = p;
    }

    /// `p_n`, summed over subchannels.
    pub fn total(&self, n: usize) -> f64 {
        self.p[n * self.subchannels..(n + 1) * self.subchannels]
            .iter()
            .sum()
    }

    pub fn clear_user(&mut self, n: usize) {
        self.p[n * self.subchannels..(n + 1) * self.subchannels].fill(0.0);
    }
}

/// CPU allocation `f[n][m]`, cycles/s.
#[derive(Debug, Clone, PartialEq)]
pub struct ComputeAlloc {
    servers: usize,
    f: Vec<f64>,
}

impl ComputeAlloc {
    pub fn zeros(num_users: usize, servers: usize) -> Self {
        ComputeAlloc {
            servers,
            f: vec![0.0; num_users * servers],
        }
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.f[n * self.servers + m]
    }

    pub fn set(&mut self, n: usize, m: usize, f: f64) {
        self.f[n * self.servers + m] = f;
    }

    pub fn server_load(&self, m: usize) -> f64 {
        self.f.chunks(self.servers).map(|row| row[m]).sum()
    }

    pub fn clear_user(&mut self, n: usize) {
        self.f[n * self.servers..(n + 1) * self.servers].fill(0.0);
    }
}

/// Whether inter-cell interference enters the SINR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterferenceModel {
    #[default]
    Full,
    /// Score as if every cell were isolated.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalOverhead {
    pub time: f64,
    pub energy: f64,
    pub overhead: f64,
}

pub fn local_overhead(user: &MobileUser) -> LocalOverhead {
    let time = user.task.beta / user.f_local;
    let energy = user.kappa * user.task.beta * user.f_local * user.f_local;
    LocalOverhead {
        time,
        energy,
        overhead: user.lambda_t * time + user.lambda_e * energy,
    }
}

/// Inter-cell interference at server `m` on subchannel `s`, excluding `n`.
pub fn interference(
    scn: &Scenario,
    asg: &Assignment,
    pw: &PowerAlloc,
    n: usize,
    m: usize,
    s: usize,
) -> f64 {
    asg.offloaders()
        .filter(|&(k, l)| k != n && l.subchannel == s && l.server != m)
        .map(|(k, _)| pw.get(k, s) * scn.gain(k, m, s))
        .sum()
}

/// SINR of user `n` at server `m` on subchannel `s`.
pub fn sinr(
    scn: &Scenario,
    asg: &Assignment,
    pw: &PowerAlloc,
    n: usize,
    m: usize,
    s: usize,
) -> f64 {
    sinr_with(scn, asg, pw, n, m, s, InterferenceModel::Full)
}

pub fn sinr_with(
    scn: &Scenario,
    asg: &Assignment,
    pw: &PowerAlloc,
    n: usize,
    m: usize,
    s: usize,
    model: InterferenceModel,
) -> f64 {
    let i = match model {
        InterferenceModel::Full => interference(scn, asg, pw, n, m, s),
        InterferenceModel::Free => 0.0,
    };
    pw.get(n, s) * scn.gain(n, m, s) / (scn.noise() + i)
}

#[inline]
pub fn rate_from_sinr(bandwidth: f64, sinr: f64) -> f64 {
    bandwidth * (1.0 + sinr).log2()
}

/// Uplink rate of an active offloader, bits/s.
pub fn offload_rate(
    scn: &Scenario,
    asg: &Assignment,
    pw: &PowerAlloc,
    n: usize,
    m: usize,
    s: usize,
) -> Result<f64> {
    offload_rate_with(scn, asg, pw, n, m, s, InterferenceModel::Full)
}

pub fn offload_rate_with(
    scn: &Scenario,
    asg: &Assignment,
    pw: &PowerAlloc,
    n: usize,
    m: usize,
    s: usize,
    model: InterferenceModel,
) -> Result<f64> {
    if !asg.a(n, m, s) {
        return Err(Error::Inconsistent(format!(
            "user {n} is not assigned to server {m} on subchannel {s}"
        )));
    }
    if pw.get(n, s) <= 0.0 {
        return Err(Error::ZeroPower { user: n });
    }
    Ok(rate_from_sinr(
        scn.bandwidth(),
        sinr_with(scn, asg, pw, n, m, s, model),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemoteOverhead {
    pub t_off: f64,
    pub t_exe: f64,
    pub e_off: f64,
    pub overhead: f64,
}

/// Offloading cost of `user` at the given rate, CPU share and total power.
///
/// A user with `lambda_t == 0` may receive no CPU; its execution time is then
/// infinite but contributes nothing to the weighted overhead.
pub fn remote_overhead(
    user: &MobileUser,
    rate: f64,
    f_assigned: f64,
    p_total: f64,
) -> Result<RemoteOverhead> {
    if !(rate > 0.0) {
        return Err(Error::ZeroRate { user: user.id, rate });
    }
    if !(f_assigned > 0.0) && user.lambda_t > 0.0 {
        return Err(Error::ZeroCompute { user: user.id });
    }
    let t_off = user.task.alpha / rate;
    let t_exe = user.task.beta / f_assigned;
    let e_off = p_total / user.zeta * t_off;
    let exe_term = if user.lambda_t == 0.0 { 0.0 } else { user.lambda_t * t_exe };
    Ok(RemoteOverhead {
        t_off,
        t_exe,
        e_off,
        overhead: user.lambda_t * t_off + exe_term + user.lambda_e * e_off,
    })
}

fn check_consistency(
    scn: &Scenario,
    asg: &Assignment,
    pw: &PowerAlloc,
    cmp: &ComputeAlloc,
) -> Result<()> {
    asg.validate(scn)?;
    for n in 0..scn.num_users() {
        let link = asg.link(n);
        let p_max = scn.user(n).p_max;
        for s in 0..scn.num_subchannels() {
            let p = pw.get(n, s);
            let active = matches!(link, Some(l) if l.subchannel == s);
            if p < 0.0 || p > p_max * (1.0 + 1e-12) || (!active && p != 0.0) {
                return Err(Error::Inconsistent(format!(
                    "user {n} has power {p} on subchannel {s}"
                )));
            }
        }
        for m in 0..scn.num_servers() {
            let f = cmp.get(n, m);
            if f < 0.0 || (f > 0.0 && !asg.a_nm(n, m)) {
                return Err(Error::Inconsistent(format!(
                    "user {n} has compute {f} at server {m}"
                )));
            }
        }
    }
    for m in 0..scn.num_servers() {
        let load = cmp.server_load(m);
        let cap = scn.server(m).f_max;
        if load > cap * (1.0 + 1e-9) {
            return Err(Error::Inconsistent(format!(
                "server {m} allocates {load} of {cap} cycles/s"
            )));
        }
    }
    Ok(())
}

/// Per-user overhead `Z_n` under the given interference model.
pub fn user_overheads(
    scn: &Scenario,
    asg: &Assignment,
    pw: &PowerAlloc,
    cmp: &ComputeAlloc,
    model: InterferenceModel,
) -> Result<Vec<f64>> {
    check_consistency(scn, asg, pw, cmp)?;
    (0..scn.num_users())
        .map(|n| {
            let user = scn.user(n);
            match asg.link(n) {
                None => Ok(local_overhead(user).overhead),
                Some(l) => {
                    let rate = offload_rate_with(scn, asg, pw, n, l.server, l.subchannel, model)?;
                    let r = remote_overhead(user, rate, cmp.get(n, l.server), pw.total(n))?;
                    Ok(r.overhead)
                }
            }
        })
        .collect()
}

/// System-wide overhead `Z = Σ_n [(1 − a_n) Z_n^l + a_n Z_n^r]`.
pub fn system_overhead(
    scn: &Scenario,
    asg: &Assignment,
    pw: &PowerAlloc,
    cmp: &ComputeAlloc,
) -> Result<f64> {
    Ok(user_overheads(scn, asg, pw, cmp, InterferenceModel::Full)?
        .iter()
        .sum())
}

/// The same objective written as local baseline plus per-offloader gain:
/// `Σ Z^l + Σ a_n [(λt α + λe p α/ζ)/R + λt β/f − Z^l]`.
pub fn system_overhead_rewritten(
    scn: &Scenario,
    asg: &Assignment,
    pw: &PowerAlloc,
    cmp: &ComputeAlloc,
) -> Result<f64> {
    check_consistency(scn, asg, pw, cmp)?;
    let base: f64 = scn.users().iter().map(|u| local_overhead(u).overhead).sum();
    let mut delta = 0.0;
    for (n, l) in asg.offloaders() {
        let u = scn.user(n);
        let rate = offload_rate(scn, asg, pw, n, l.server, l.subchannel)?;
        let f = cmp.get(n, l.server);
        let exe = if u.lambda_t == 0.0 { 0.0 } else { u.lambda_t * u.task.beta / f };
        let tx = (u.lambda_t * u.task.alpha + u.lambda_e * pw.total(n) * u.task.alpha / u.zeta) / rate;
        delta += tx + exe - local_overhead(u).overhead;
    }
    Ok(base + delta)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn local_overhead_face_recognition_user() {
        let lo = local_overhead(&user(0, 0.8e9));
        assert!(rel(lo.time, 1.25) < 1e-12);
        assert!(rel(lo.energy, 3.20) < 1e-12);
        assert!(rel(lo.overhead, 2.225) < 1e-12);
    }

    #[test]
    fn local_overhead_degenerate_unit_case() {
        let mut u = user(0, 1.0);
        u.task.beta = 1.0;
        u.kappa = 0.0;
        u.lambda_t = 0.3;
        u.lambda_e = 0.7;
        let lo = local_overhead(&u);
        assert_eq!(lo.time, 1.0);
        assert_eq!(lo.energy, 0.0);
        assert_eq!(lo.overhead, 0.3);
    }

    fn two_cell() -> (Scenario, Assignment, PowerAlloc) {
        let scn = scenario(2, 2, 2, |_, _| 1e-12);
        let asg = Assignment::from_links(vec![
            Some(Link { server: 0, subchannel: 0 }),
            Some(Link { server: 1, subchannel: 0 }),
        ]);
        let mut pw = PowerAlloc::zeros(2, 2);
        pw.set(0, 0, 0.1);
        pw.set(1, 0, 0.1);
        (scn, asg, pw)
    }

    #[test]
    fn sinr_single_offloader_is_snr() {
        let (scn, mut asg, mut pw) = two_cell();
        asg.set(1, None);
        pw.clear_user(1);
        assert!(rel(sinr(&scn, &asg, &pw, 0, 0, 0), 1.0) < 1e-12);
    }

    #[test]
    fn sinr_co_channel_interferer_halves() {
        let (scn, asg, pw) = two_cell();
        assert!(rel(sinr(&scn, &asg, &pw, 0, 0, 0), 0.5) < 1e-12);
    }

    #[test]
    fn sinr_other_subchannel_does_not_interfere() {
        let (scn, mut asg, mut pw) = two_cell();
        asg.set(1, Some(Link { server: 1, subchannel: 1 }));
        pw.clear_user(1);
        pw.set(1, 1, 0.1);
        assert!(rel(sinr(&scn, &asg, &pw, 0, 0, 0), 1.0) < 1e-12);
    }

    #[test]
    fn sinr_same_cell_does_not_interfere() {
        let (scn, mut asg, mut pw) = two_cell();
        // Both in cell 0 cannot share a subchannel; interference is
        // only ever counted from other servers.
        asg.set(1, Some(Link { server: 0, subchannel: 1 }));
        pw.clear_user(1);
        pw.set(1, 1, 0.1);
        assert_eq!(interference(&scn, &asg, &pw, 0, 0, 0), 0.0);
    }

    #[test]
    fn rate_examples() {
        assert!(rel(rate_from_sinr(5e6, 1.0), 5e6) < 1e-12);
        assert!(rel(rate_from_sinr(5e6, 3.0), 1e7) < 1e-12);
        assert!(rel(rate_from_sinr(5e6, 0.5), 2.924_812_503_605_78e6) < 1e-12);
    }

    #[test]
    fn offload_rate_rejects_zero_power() {
        let (scn, asg, mut pw) = two_cell();
        pw.set(0, 0, 0.0);
        assert!(matches!(
            offload_rate(&scn, &asg, &pw, 0, 0, 0),
            Err(Error::ZeroPower { user: 0 })
        ));
    }

    #[test]
    fn remote_overhead_hand_arithmetic() {
        let u = user(0, 0.8e9);
        let r = remote_overhead(&u, 5e6, 1e9, 0.1).unwrap();
        assert!(rel(r.t_off, 0.672) < 1e-12);
        assert!(rel(r.t_exe, 1.0) < 1e-12);
        assert!(rel(r.e_off, 0.0672) < 1e-12);
        assert!(rel(r.overhead, 0.8696) < 1e-12);
    }

    #[test]
    fn remote_overhead_zero_power_and_limits() {
        let u = user(0, 0.8e9);
        let r = remote_overhead(&u, 5e6, 1e9, 0.0).unwrap();
        assert_eq!(r.e_off, 0.0);
        assert!(rel(r.overhead, 0.5 * (r.t_off + r.t_exe)) < 1e-12);
        let r = remote_overhead(&u, 5e6, f64::INFINITY, 0.1).unwrap();
        assert_eq!(r.t_exe, 0.0);
        assert!(remote_overhead(&u, 0.0, 1e9, 0.1).is_err());
        assert!(remote_overhead(&u, 5e6, 0.0, 0.1).is_err());
    }

    #[test]
    fn remote_overhead_energy_only_user_without_cpu() {
        let mut u = user(0, 0.8e9);
        u.lambda_t = 0.0;
        u.lambda_e = 1.0;
        let r = remote_overhead(&u, 5e6, 0.0, 0.1).unwrap();
        assert!(r.t_exe.is_infinite());
        assert!(rel(r.overhead, r.e_off) < 1e-12);
    }

    #[test]
    fn all_local_system_overhead_is_sum_of_local() {
        let scn = scenario(3, 2, 2, |n, m| 1e-12 * (1 + n + m) as f64);
        let asg = Assignment::all_local(3);
        let z = system_overhead(
            &scn,
            &asg,
            &PowerAlloc::zeros(3, 2),
            &ComputeAlloc::zeros(3, 2),
        )
        .unwrap();
        assert!(rel(z, 3.0 * 2.225) < 1e-12);
    }

    #[test]
    fn system_overhead_rejects_inconsistent_tensors() {
        let (scn, asg, pw) = two_cell();
        // No CPU for offloaders.
        let cmp = ComputeAlloc::zeros(2, 2);
        assert!(system_overhead(&scn, &asg, &pw, &cmp).is_err());
        // Power on an unassigned subchannel.
        let mut cmp = ComputeAlloc::zeros(2, 2);
        cmp.set(0, 0, 1e9);
        cmp.set(1, 1, 1e9);
        let mut bad = pw.clone();
        bad.set(0, 1, 0.05);
        assert!(system_overhead(&scn, &asg, &bad, &cmp).is_err());
        // Compute at a server the user is not associated with.
        let mut bad = cmp.clone();
        bad.set(0, 1, 1e9);
        assert!(system_overhead(&scn, &asg, &pw, &bad).is_err());
        assert!(system_overhead(&scn, &asg, &pw, &cmp).is_ok());
    }

    #[test]
    fn assignment_validate_catches_c4_and_c5() {
        let mut scn = scenario(3, 1, 2, |_, _| 1e-12);
        let asg = Assignment::from_links(vec![
            Some(Link { server: 0, subchannel: 0 }),
            Some(Link { server: 0, subchannel: 0 }),
            None,
        ]);
        assert!(asg.validate(&scn).is_err());
        scn.servers[0].quota = 1;
        let asg = Assignment::from_links(vec![
            Some(Link { server: 0, subchannel: 0 }),
            Some(Link { server: 0, subchannel: 1 }),
            None,
        ]);
        assert!(asg.validate(&scn).is_err());
    }

    #[test]
    fn restrict_reindexes() {
        let scn = scenario(3, 2, 2, |n, m| 1e-12 * (1 + 10 * n + m) as f64);
        let sub = scn.restrict(&[2, 0], 1).unwrap();
        assert_eq!(sub.num_users(), 2);
        assert_eq!(sub.num_servers(), 1);
        assert_eq!(sub.gain(0, 0, 1), scn.gain(2, 1, 1));
        assert_eq!(sub.gain(1, 0, 0), scn.gain(0, 1, 0));
    }
}
