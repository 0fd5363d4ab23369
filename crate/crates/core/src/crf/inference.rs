//! Log-space forward-backward and Viterbi over a linear chain.

/// Scores of one sentence: `emission[t][y]`, `transition[a][b]` for the
/// step `a -> b`, and the `start`/`end` scores of the first and last label.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    pub emission: Vec<Vec<f64>>,
    pub transition: Vec<Vec<f64>>,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

impl Potentials {
    pub fn zeros(len: usize, labels: usize) -> Self {
        Potentials {
            emission: vec![vec![0.0; labels]; len],
            transition: vec![vec![0.0; labels]; labels],
            start: vec![0.0; labels],
            end: vec![0.0; labels],
        }
    }

    pub fn len(&self) -> usize {
        self.emission.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emission.is_empty()
    }

    pub fn num_labels(&self) -> usize {
        self.start.len()
    }

    pub fn path_score(&self, path: &[usize]) -> f64 {
        assert_eq!(path.len(), self.len(), "path length");
        let (Some(&first), Some(&last)) = (path.first(), path.last()) else {
            return 0.0;
        };
        let mut score = self.start[first] + self.end[last];
        for (t, &y) in path.iter().enumerate() {
            score += self.emission[t][y];
            if t > 0 {
                score += self.transition[path[t - 1]][y];
            }
        }
        score
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub log_partition: f64,
    /// `unary[t][y] = P(y_t = y)`.
    pub unary: Vec<Vec<f64>>,
    /// `pairwise[t][a][b] = P(y_t = a, y_{t+1} = b)`.
    pub pairwise: Vec<Vec<Vec<f64>>>,
}

pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub fn forward_backward(p: &Potentials) -> Marginals {
    let n = p.len();
    let labels = p.num_labels();
    if n == 0 {
        return Marginals {
            log_partition: 0.0,
            unary: Vec::new(),
            pairwise: Vec::new(),
        };
    }
    let mut alpha = vec![vec![0.0; labels]; n];
    for y in 0..labels {
        alpha[0][y] = p.start[y] + p.emission[0][y];
    }
    for t in 1..n {
        for y in 0..labels {
            let prev = &alpha[t - 1];
            alpha[t][y] = p.emission[t][y] + log_sum_exp((0..labels).map(|a| prev[a] + p.transition[a][y]));
        }
    }
    let mut beta = vec![vec![0.0; labels]; n];
    beta[n - 1].clone_from(&p.end);
    for t in (0..n - 1).rev() {
        for a in 0..labels {
            let next = &beta[t + 1];
            beta[t][a] = log_sum_exp((0..labels).map(|b| p.transition[a][b] + p.emission[t + 1][b] + next[b]));
        }
    }
    let log_partition = log_sum_exp((0..labels).map(|y| alpha[n - 1][y] + p.end[y]));

    let unary = (0..n)
        .map(|t| {
            (0..labels)
                .map(|y| (alpha[t][y] + beta[t][y] - log_partition).exp())
                .collect()
        })
        .collect();
    let pairwise = (0..n - 1)
        .map(|t| {
            (0..labels)
                .map(|a| {
                    (0..labels)
                        .map(|b| {
                            (alpha[t][a] + p.transition[a][b] + p.emission[t + 1][b] + beta[t + 1][b] - log_partition)
                                .exp()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Marginals {
        log_partition,
        unary,
        pairwise,
    }
}

/// Highest-scoring label path and its score. Ties go to the lowest label
/// index, both in the backpointers and in the final choice.
pub fn viterbi(p: &Potentials) -> (Vec<usize>, f64) {
    let n = p.len();
    let labels = p.num_labels();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let mut delta: Vec<f64> = (0..labels).map(|y| p.start[y] + p.emission[0][y]).collect();
    let mut back = vec![vec![0usize; labels]; n];
    for t in 1..n {
        let mut next = vec![0.0; labels];
        for y in 0..labels {
            let (best_a, best) = argmax((0..labels).map(|a| delta[a] + p.transition[a][y]));
            back[t][y] = best_a;
            next[y] = best + p.emission[t][y];
        }
        delta = next;
    }
    let (mut y, score) = argmax((0..labels).map(|y| delta[y] + p.end[y]));
    let mut path = vec![0; n];
    for t in (0..n).rev() {
        path[t] = y;
        y = back[t][y];
    }
    (path, score)
}

fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_single_position() {
        let m = forward_backward(&Potentials::zeros(1, 9));
        assert!((m.log_partition - 9f64.ln()).abs() < 1e-12);
        for p in &m.unary[0] {
            assert!((p - 1.0 / 9.0).abs() < 1e-12);
        }
        assert!(m.pairwise.is_empty());
    }

    #[test]
    fn zero_potentials_decode_to_label_zero() {
        let (path, score) = viterbi(&Potentials::zeros(4, 9));
        assert_eq!(path, [0, 0, 0, 0]);
        assert_eq!(score, 0.0);
    }

    #[test]
    fn empty_sentence() {
        let p = Potentials::zeros(0, 9);
        assert_eq!(forward_backward(&p).log_partition, 0.0);
        assert!(viterbi(&p).0.is_empty());
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(v.iter().copied()) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let neg = [f64::NEG_INFINITY, f64::NEG_INFINITY];
        assert_eq!(log_sum_exp(neg.iter().copied()), f64::NEG_INFINITY);
    }
}
