use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::flow_env::Action;

/// Rolling history `[o_{t-n}, ..., o_t, a_{t-m}, ..., a_{t-1}]`.
///
/// The first push warm-starts the buffer: every observation slot repeats the
/// first observation and every action slot is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    n: usize,
    m: usize,
    dim: usize,
    obs: VecDeque<Vec<f64>>,
    actions: VecDeque<Action>,
}

impl ObservationWindow {
    pub fn new(n: usize, m: usize, dim: usize) -> Self {
        Self {
            n,
            m,
            dim,
            obs: VecDeque::with_capacity(n + 1),
            actions: VecDeque::with_capacity(m),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn width(&self) -> usize {
        (self.n + 1) * self.dim + 2 * self.m
    }

    pub fn clear(&mut self) {
        self.obs.clear();
        self.actions.clear();
    }

    /// Records the observation at `t` and the action taken at `t - 1`.
    pub fn push(&mut self, obs: &[f64], prev_action: Action) -> Result<()> {
        if obs.len() != self.dim {
            return Err(Error::shape("window observation", self.dim, obs.len()));
        }
        if self.obs.is_empty() {
            self.obs
                .extend(std::iter::repeat_n(obs.to_vec(), self.n + 1));
            self.actions.extend(std::iter::repeat_n([0.0; 2], self.m));
        } else {
            self.obs.pop_front();
            self.obs.push_back(obs.to_vec());
        }
        if self.m > 0 {
            self.actions.pop_front();
            self.actions.push_back(prev_action);
        }
        Ok(())
    }

    /// Concatenated history, oldest entries first.
    pub fn vector(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width());
        for o in &self.obs {
            out.extend_from_slice(o);
        }
        for a in &self.actions {
            out.extend_from_slice(a);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warm_start_then_rolls() {
        let mut w = ObservationWindow::new(2, 1, 1);
        w.push(&[5.0], [0.0; 2]).unwrap();
        assert_eq!(w.vector(), vec![5.0, 5.0, 5.0, 0.0, 0.0]);
        w.push(&[6.0], [0.1, 0.2]).unwrap();
        assert_eq!(w.vector(), vec![5.0, 5.0, 6.0, 0.1, 0.2]);
        w.push(&[7.0], [0.3, 0.4]).unwrap();
        w.push(&[8.0], [0.5, 0.6]).unwrap();
        assert_eq!(w.vector(), vec![6.0, 7.0, 8.0, 0.5, 0.6]);
        assert_eq!(w.vector().len(), w.width());
    }

    #[test]
    fn degenerate_window_is_current_observation() {
        let mut w = ObservationWindow::new(0, 0, 2);
        w.push(&[1.0, 2.0], [0.4, 0.4]).unwrap();
        w.push(&[3.0, 4.0], [0.4, 0.4]).unwrap();
        assert_eq!(w.vector(), vec![3.0, 4.0]);
    }

    #[test]
    fn clear_restarts_warm_start() {
        let mut w = ObservationWindow::new(1, 2, 1);
        w.push(&[1.0], [0.0; 2]).unwrap();
        w.push(&[2.0], [1.0, 1.0]).unwrap();
        w.clear();
        w.push(&[9.0], [0.0; 2]).unwrap();
        assert_eq!(w.vector(), vec![9.0, 9.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(w.push(&[1.0, 2.0], [0.0; 2]).is_err());
    }
}
