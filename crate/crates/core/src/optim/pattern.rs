use super::tol;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSearchOptions {
    pub step0: f64,
    pub step_min: f64,
    pub max_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Number of accepted moves.
    pub moves: usize,
    /// Objective after each accepted move, starting with the seed value.
    pub trace: Vec<f64>,
    /// Step size in force when the search stopped.
    pub final_step: f64,
    /// True when `max_evals` ran out before the step fell below `step_min`.
    pub truncated: bool,
}

/// Compass search that maximizes `objective` starting from `seed`.
///
/// Each poll tries `x ± step·e_k` for every coordinate and moves to the best
/// strictly improving candidate; a poll without improvement halves the step.
/// Terminates when the step drops below `step_min`, so the returned point has
/// no improving coordinate move at the last step size polled.
pub fn pattern_search<F>(
    mut objective: F,
    seed: &[f64],
    opts: PatternSearchOptions,
) -> Result<PatternSearchResult>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(opts.step0 > opts.step_min && opts.step_min > 0.0) {
        return Err(Error::invalid(
            "step",
            format!(
                "need step0 > step_min > 0, got step0={} step_min={}",
                opts.step0, opts.step_min
            ),
        ));
    }
    let mut x = seed.to_vec();
    let mut value = objective(&x);
    let mut evaluations = 1;
    let mut trace = vec![value];
    let mut moves = 0;
    let mut step = opts.step0;
    let mut candidate = x.clone();

    while step >= opts.step_min {
        if evaluations >= opts.max_evals {
            return Ok(PatternSearchResult {
                x,
                value,
                evaluations,
                moves,
                trace,
                final_step: step,
                truncated: true,
            });
        }
        let mut best: Option<(usize, f64, f64)> = None;
        let threshold = value + tol::PATTERN_IMPROVEMENT * (1.0 + value.abs());
        'poll: for k in 0..x.len() {
            for dir in [1.0, -1.0] {
                if evaluations >= opts.max_evals {
                    break 'poll;
                }
                candidate.copy_from_slice(&x);
                candidate[k] += dir * step;
                let v = objective(&candidate);
                evaluations += 1;
                let bar = best.map_or(threshold, |(_, _, b)| b);
                if v > bar {
                    best = Some((k, dir, v));
                }
            }
        }
        match best {
            Some((k, dir, v)) => {
                x[k] += dir * step;
                value = v;
                moves += 1;
                trace.push(v);
            }
            None if evaluations >= opts.max_evals => {}
            None => step *= 0.5,
        }
    }
    Ok(PatternSearchResult {
        x,
        value,
        evaluations,
        moves,
        trace,
        final_step: step,
        truncated: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> PatternSearchOptions {
        PatternSearchOptions {
            step0: 1.0,
            step_min: 1e-6,
            max_evals: 100_000,
        }
    }

    #[test]
    fn concave_quadratic_maximizer() {
        let target = [0.3, -1.7, 2.2];
        let f = |x: &[f64]| -x.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let r = pattern_search(f, &[5.0, 5.0, 5.0], opts()).unwrap();
        assert!(!r.truncated);
        for (a, b) in r.x.iter().zip(target) {
            assert!((a - b).abs() <= 1e-6);
        }
        assert!(r.trace.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn constant_objective_returns_seed() {
        let r = pattern_search(|_| 3.0, &[1.0, 2.0], opts()).unwrap();
        assert_eq!(r.x, vec![1.0, 2.0]);
        assert_eq!(r.value, 3.0);
        assert_eq!(r.moves, 0);
    }

    #[test]
    fn truncation_flag() {
        let o = PatternSearchOptions {
            max_evals: 10,
            ..opts()
        };
        let r = pattern_search(|x| -x[0].powi(2), &[100.0], o).unwrap();
        assert!(r.truncated);
        assert!(r.evaluations <= 10);
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| -(x[0] - 1.0).abs() - (x[1] + 0.25).powi(2);
        let a = pattern_search(f, &[0.0, 0.0], opts()).unwrap();
        let b = pattern_search(f, &[0.0, 0.0], opts()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_steps_rejected() {
        let o = PatternSearchOptions {
            step0: 1e-7,
            ..opts()
        };
        assert!(pattern_search(|_| 0.0, &[0.0], o).is_err());
    }
}
