//! Closed-form split of a server's CPU among its offloaders.

use crate::error::{Error, Result};
use crate::model::{Assignment, ComputeAlloc, Scenario};

/// One offloader's demand as `(λt, β)`.
pub type Demand = (f64, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct ComputeShares {
    pub shares: Vec<f64>,
    /// Set when every `λt` was zero and the capacity was split evenly.
    pub equal_split: bool,
}

/// Splits `f_max` in proportion to `√(λt·β)`. The shares sum to `f_max`.
pub fn allocate_compute(f_max: f64, offloaders: &[Demand]) -> ComputeShares {
    if offloaders.is_empty() {
        return ComputeShares {
            shares: Vec::new(),
            equal_split: false,
        };
    }
    let weights: Vec<f64> = offloaders.iter().map(|&(l, b)| (l * b).sqrt()).collect();
    let total: f64 = weights.iter().sum();
    let equal_split = !(total > 0.0);
    let mut shares: Vec<f64> = if equal_split {
        vec![f_max / offloaders.len() as f64; offloaders.len()]
    } else {
        weights.iter().map(|w| f_max * w / total).collect()
    };
    fit_sum(&mut shares, f_max);
    ComputeShares {
        shares,
        equal_split,
    }
}

/// Makes the left-to-right sum of `shares` equal `f_max`. The last positive
/// share absorbs the residue; if every candidate sum is a rounding tie that
/// lands on the wrong neighbour, an earlier share is moved by a few ulps first.
fn fit_sum(shares: &mut [f64], f_max: f64) {
    let Some(j) = shares.iter().rposition(|&x| x > 0.0) else {
        return;
    };
    let settle = |shares: &mut [f64]| -> bool {
        let prefix: f64 = shares[..j].iter().sum();
        shares[j] = f_max - prefix;
        for _ in 0..8 {
            let sum: f64 = shares.iter().sum();
            if sum == f_max {
                return true;
            }
            shares[j] = if sum < f_max { shares[j].next_up() } else { shares[j].next_down() };
        }
        false
    };
    if settle(shares) {
        return;
    }
    for i in 0..j {
        let orig = shares[i];
        let ulp = orig.next_up() - orig;
        for k in 0..16 {
            let d = ulp * (1u32 << k) as f64;
            for moved in [orig + d, orig - d] {
                if moved > 0.0 {
                    shares[i] = moved;
                    if settle(shares) {
                        return;
                    }
                }
            }
        }
        shares[i] = orig;
    }
    settle(shares);
}

/// `Σ λt·β / f`.
pub fn cra_objective(offloaders: &[Demand], f: &[f64]) -> Result<f64> {
    if let Some(&bad) = f.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::ComputeDomain(bad));
    }
    Ok(offloaders
        .iter()
        .zip(f)
        .map(|(&(l, b), &x)| l * b / x)
        .sum())
}

/// Allocates every server's CPU among its offloaders. The returned flags mark
/// servers that fell back to an even split.
pub fn allocate_compute_all(scn: &Scenario, asg: &Assignment) -> (ComputeAlloc, Vec<bool>) {
    let mut cmp = ComputeAlloc::zeros(scn.num_users(), scn.num_servers());
    let mut flags = vec![false; scn.num_servers()];
    for (m, flag) in flags.iter_mut().enumerate() {
        let users = asg.users_of(m);
        let demand: Vec<Demand> = users
            .iter()
            .map(|&n| (scn.user(n).lambda_t, scn.user(n).task.beta))
            .collect();
        let out = allocate_compute(scn.server(m).f_max, &demand);
        for (&n, f) in users.iter().zip(out.shares) {
            cmp.set(n, m, f);
        }
        *flag = out.equal_split;
    }
    (cmp, flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_ratios() {
        let out = allocate_compute(6.0, &[(1.0, 1.0), (1.0, 4.0), (1.0, 9.0)]);
        for (got, want) in out.shares.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(!out.equal_split);
    }

    #[test]
    fn identical_and_single() {
        assert_eq!(allocate_compute(4e9, &[(0.5, 1e9), (0.5, 1e9)]).shares, vec![2e9, 2e9]);
        assert_eq!(allocate_compute(4e9, &[(0.3, 2e9)]).shares, vec![4e9]);
    }

    #[test]
    fn all_energy_users_split_evenly() {
        let out = allocate_compute(3.0, &[(0.0, 1.0), (0.0, 5.0), (0.0, 2.0)]);
        assert!(out.equal_split);
        assert_eq!(out.shares.iter().sum::<f64>(), 3.0);
    }

    #[test]
    fn sum_is_exact() {
        let d: Vec<Demand> = (1..8).map(|k| (0.1 * k as f64, 1e9 / k as f64)).collect();
        let out = allocate_compute(4e9, &d);
        assert_eq!(out.shares.iter().sum::<f64>(), 4e9);
    }

    #[test]
    fn objective_values() {
        assert_eq!(cra_objective(&[(1.0, 1.0)], &[1.0]).unwrap(), 1.0);
        let d = [(0.5, 2.0), (0.2, 3.0)];
        let z1 = cra_objective(&d, &[1.0, 2.0]).unwrap();
        let z2 = cra_objective(&d, &[2.0, 4.0]).unwrap();
        assert!((z1 - 2.0 * z2).abs() < 1e-15);
        assert!(matches!(cra_objective(&d, &[1.0, 0.0]), Err(Error::ComputeDomain(_))));
    }
}
