/// Dense row-stochastic transition matrix.
#[derive(Clone, Debug)]
pub struct MarkovChain {
    n: usize,
    p: Vec<f64>,
}

impl MarkovChain {
    /// Normalizes each row of the non-negative weight matrix `w` (`n x n`).
    pub fn from_weights(n: usize, mut w: Vec<f64>) -> Self {
        assert_eq!(w.len(), n * n);
        for row in w.chunks_exact_mut(n) {
            let s: f64 = row.iter().sum();
            assert!(s > 0.0, "every node needs an outgoing edge");
            row.iter_mut().for_each(|v| *v /= s);
        }
        Self { n, p: w }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.p[from * self.n + to]
    }

    /// One step of the chain: `pi P`.
    pub fn step(&self, pi: &[f64]) -> Vec<f64> {
        let mut next = vec![0.0; self.n];
        for (i, row) in self.p.chunks_exact(self.n).enumerate() {
            let mass = pi[i];
            if mass == 0.0 {
                continue;
            }
            for (n, &pij) in next.iter_mut().zip(row) {
                *n += mass * pij;
            }
        }
        next
    }

    /// `max_j |(pi P)_j - pi_j|`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        self.step(pi).iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Power iteration from `init` until the residual drops below `tol`.
    /// Returns the distribution and the number of iterations taken.
    pub fn stationary(&self, init: Vec<f64>, tol: f64, max_iter: usize) -> (Vec<f64>, usize) {
        let mut pi = init;
        normalize(&mut pi);
        for it in 0..max_iter {
            let mut next = self.step(&pi);
            normalize(&mut next);
            let delta = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            pi = next;
            if delta < tol {
                return (pi, it + 1);
            }
        }
        (pi, max_iter)
    }
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_chain() {
        // P = [[0.9, 0.1], [0.5, 0.5]] has stationary (5/6, 1/6)
        let chain = MarkovChain::from_weights(2, vec![9.0, 1.0, 1.0, 1.0]);
        let (pi, _) = chain.stationary(vec![0.5, 0.5], 1e-13, 10_000);
        assert!((pi[0] - 5.0 / 6.0).abs() < 1e-10);
        assert!(chain.residual(&pi) < 1e-12);
    }
}
