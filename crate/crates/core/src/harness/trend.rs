//! Qualitative checks over sweep results.

use crate::baselines::Scheme;
use crate::scenario::ScenarioConfig;
use crate::solver::SolverParams;

use super::{Axis, ResultRow, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    OffloadFrac,
    Overhead,
}

impl Metric {
    fn of(self, r: &ResultRow) -> f64 {
        match self {
            Metric::OffloadFrac => r.offload_frac_mean,
            Metric::Overhead => r.overhead_mean,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Metric::OffloadFrac => "offload fraction",
            Metric::Overhead => "overhead",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    NonIncreasing,
    NonDecreasing,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expectation {
    /// Consecutive points (axis value at least `from`) move in `direction`,
    /// allowing an absolute step of `tol` the wrong way.
    Monotone {
        scheme: Scheme,
        metric: Metric,
        direction: Direction,
        from: Option<f64>,
        tol: f64,
    },
    /// `scheme`'s mean overhead is at most each other scheme's at every
    /// point, up to relative slack `rel_tol`.
    AtOrBelow {
        scheme: Scheme,
        others: Vec<Scheme>,
        rel_tol: f64,
    },
    /// The last two points differ by at most `rel_tol` relative.
    Saturates {
        scheme: Scheme,
        metric: Metric,
        rel_tol: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrendReport {
    pub checks: Vec<CheckResult>,
}

impl TrendReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn series(rows: &[ResultRow], scheme: Scheme) -> Vec<&ResultRow> {
    let mut s: Vec<&ResultRow> = rows.iter().filter(|r| r.scheme == scheme).collect();
    s.sort_by(|a, b| a.value.total_cmp(&b.value));
    s
}

fn axis_label(rows: &[ResultRow]) -> &'static str {
    rows.first().map_or("?", |r| r.axis.name())
}

/// Evaluates each expectation against `rows`.
pub fn trend_check(rows: &[ResultRow], expectations: &[Expectation]) -> TrendReport {
    let axis = axis_label(rows);
    let checks = expectations
        .iter()
        .map(|e| match e {
            Expectation::Monotone { scheme, metric, direction, from, tol } => {
                let pts: Vec<&ResultRow> = series(rows, *scheme)
                    .into_iter()
                    .filter(|r| from.is_none_or(|f| r.value >= f))
                    .collect();
                let word = match direction {
                    Direction::NonIncreasing => "non-increasing",
                    Direction::NonDecreasing => "non-decreasing",
                };
                let bad: Vec<String> = pts
                    .windows(2)
                    .filter(|w| {
                        let step = metric.of(w[1]) - metric.of(w[0]);
                        match direction {
                            Direction::NonIncreasing => step > *tol,
                            Direction::NonDecreasing => step < -*tol,
                        }
                    })
                    .map(|w| format!("{}: {} -> {}", w[1].value, metric.of(w[0]), metric.of(w[1])))
                    .collect();
                CheckResult {
                    name: format!("{scheme} {} {word} in {axis}", metric.name()),
                    passed: pts.len() >= 2 && bad.is_empty(),
                    detail: if pts.len() < 2 {
                        "fewer than two points".into()
                    } else if bad.is_empty() {
                        format!("{} points", pts.len())
                    } else {
                        format!("violations at {}", bad.join("; "))
                    },
                }
            }
            Expectation::AtOrBelow { scheme, others, rel_tol } => {
                let mine = series(rows, *scheme);
                let mut bad = Vec::new();
                let mut compared = 0;
                for other in others {
                    for (a, b) in mine.iter().zip(series(rows, *other)) {
                        compared += 1;
                        if a.value != b.value || a.overhead_mean > b.overhead_mean * (1.0 + rel_tol) {
                            bad.push(format!("{other} at {}: {} > {}", a.value, a.overhead_mean, b.overhead_mean));
                        }
                    }
                }
                let names: Vec<&str> = others.iter().map(|s| s.name()).collect();
                CheckResult {
                    name: format!("{scheme} overhead at or below {} across {axis}", names.join(", ")),
                    passed: compared > 0 && bad.is_empty(),
                    detail: if bad.is_empty() {
                        format!("{compared} comparisons")
                    } else {
                        bad.join("; ")
                    },
                }
            }
            Expectation::Saturates { scheme, metric, rel_tol } => {
                let s = series(rows, *scheme);
                let (passed, detail) = match s.as_slice() {
                    [.., a, b] => {
                        let (x, y) = (metric.of(a), metric.of(b));
                        let rel = (y - x).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
                        (rel <= *rel_tol, format!("last two points {x} and {y}, relative change {rel:.4}"))
                    }
                    _ => (false, "fewer than two points".into()),
                };
                CheckResult {
                    name: format!("{scheme} {} saturates in {axis}", metric.name()),
                    passed,
                    detail,
                }
            }
        })
        .collect();
    TrendReport { checks }
}

fn range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|k| start + step * k as f64).collect()
}

/// The standard suite: one sweep per axis with its expected trends.
pub fn default_suite(
    base: &ScenarioConfig,
    params: &SolverParams,
    realizations: usize,
) -> Vec<(SweepSpec, Vec<Expectation>)> {
    use Direction::*;
    use Metric::*;
    use Scheme::*;
    let spec = |axis: Axis, values: Vec<f64>| SweepSpec {
        axis,
        values,
        realizations,
        base: base.clone(),
        schemes: vec![Jcorams, Local, Offload],
        params: params.clone(),
        interference_free_scoring: false,
    };
    let below = Expectation::AtOrBelow { scheme: Jcorams, others: vec![Local, Offload], rel_tol: 0.0 };
    let mono = |metric, direction, from| Expectation::Monotone { scheme: Jcorams, metric, direction, from, tol: 0.0 };
    let capacity = (base.servers * base.quota().min(base.subchannels)) as f64;
    vec![
        (
            spec(Axis::Users, range(10.0, 50.0, 4.0)),
            vec![mono(OffloadFrac, NonIncreasing, Some(capacity)), below.clone()],
        ),
        (
            spec(Axis::Alpha, range(0.8e6, 8.0e6, 0.8e6)),
            vec![mono(OffloadFrac, NonIncreasing, None), below.clone()],
        ),
        (
            spec(Axis::Beta, range(0.2e9, 2.0e9, 0.2e9)),
            vec![mono(OffloadFrac, NonDecreasing, None), below.clone()],
        ),
        (
            spec(Axis::LambdaT, range(0.1, 0.9, 0.1)),
            vec![below.clone()],
        ),
        (
            spec(Axis::PMax, vec![0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.55, 0.7, 0.85, 1.0]),
            vec![
                mono(OffloadFrac, NonDecreasing, None),
                Expectation::Saturates { scheme: Jcorams, metric: OffloadFrac, rel_tol: 0.02 },
                Expectation::Saturates { scheme: Jcorams, metric: Overhead, rel_tol: 0.02 },
                below.clone(),
            ],
        ),
        (
            spec(Axis::F0, range(0.5e9, 4.0e9, 0.5e9)),
            vec![mono(OffloadFrac, NonDecreasing, None), below],
        ),
    ]
}
