use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("no reward series to aggregate")]
    NoSeries,
    #[error("reward series {0} is empty")]
    EmptySeries(usize),
}

/// Cumulative mean of `rewards` after each episode.
pub fn running_average(rewards: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    rewards
        .iter()
        .enumerate()
        .map(|(i, r)| {
            sum += r;
            sum / (i + 1) as f64
        })
        .collect()
}

/// Score of one run: its running average at the last episode, i.e. the
/// mean of the whole series.
pub fn series_score(rewards: &[f64]) -> Option<f64> {
    running_average(rewards).last().copied()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
    /// Population standard deviation.
    pub std: f64,
    /// Score of every run, in run order.
    pub per_seed: Vec<f64>,
}

impl RunStats {
    pub fn from_scores(scores: &[f64]) -> Result<RunStats, StatsError> {
        if scores.is_empty() {
            return Err(StatsError::NoSeries);
        }
        let n = scores.len() as f64;
        let avg = scores.iter().sum::<f64>() / n;
        let var = scores.iter().map(|s| (s - avg).powi(2)).sum::<f64>() / n;
        let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(RunStats {
            min,
            max,
            // summation rounding can push a constant column's mean past its bounds
            avg: avg.clamp(min, max),
            std: var.sqrt(),
            per_seed: scores.to_vec(),
        })
    }
}

pub fn aggregate_stats<S: AsRef<[f64]>>(series: &[S]) -> Result<RunStats, StatsError> {
    if series.is_empty() {
        return Err(StatsError::NoSeries);
    }
    let scores = series
        .iter()
        .enumerate()
        .map(|(i, s)| series_score(s.as_ref()).ok_or(StatsError::EmptySeries(i)))
        .collect::<Result<Vec<_>, _>>()?;
    RunStats::from_scores(&scores)
}

/// Index of the highest score; the earliest run wins ties.
pub fn best_index(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            Some(b) if s <= scores[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn running_average_examples() {
        assert_eq!(running_average(&[2.0, 4.0, 0.0]), vec![2.0, 3.0, 2.0]);
        assert!(running_average(&[]).is_empty());
        assert_eq!(series_score(&[1.0, 2.0, 6.0]), Some(3.0));
    }

    #[test]
    fn stats_of_one_two_three() {
        let s = aggregate_stats(&[vec![1.0], vec![2.0, 2.0], vec![3.0, 1.0, 5.0]]).unwrap();
        assert_eq!((s.min, s.max, s.avg), (1.0, 3.0, 2.0));
        // sqrt(((1-2)^2 + 0 + (3-2)^2) / 3) = sqrt(2/3)
        assert_abs_diff_eq!(s.std, (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.std, 0.8165, epsilon = 1e-4);
    }

    #[test]
    fn singleton_has_zero_spread() {
        let s = aggregate_stats(&[vec![4.0, 6.0]]).unwrap();
        assert_eq!((s.min, s.max, s.avg, s.std), (5.0, 5.0, 5.0, 0.0));
    }

    #[test]
    fn errors() {
        let none: [Vec<f64>; 0] = [];
        assert_eq!(aggregate_stats(&none), Err(StatsError::NoSeries));
        assert_eq!(aggregate_stats(&[vec![1.0], vec![]]), Err(StatsError::EmptySeries(1)));
    }

    #[test]
    fn best_index_examples() {
        assert_eq!(best_index(&[8.34, 12.39, 12.37]), Some(1));
        assert_eq!(best_index(&[3.0]), Some(0));
        assert_eq!(best_index(&[5.0, 5.0]), Some(0));
        assert_eq!(best_index(&[]), None);
    }
}
