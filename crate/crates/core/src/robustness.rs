//! Per-ship smoothing of raw destination predictions based on runs of equal
//! consecutive values.

use std::collections::VecDeque;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShipHistory {
    pub ship_id: String,
    window: VecDeque<String>,
    capacity: usize,
}

/// A maximal run of equal consecutive predictions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Run<'a> {
    pub port: &'a str,
    pub len: usize,
    /// Index one past the run's last element; larger is more recent.
    pub end: usize,
}

impl ShipHistory {
    pub fn new(ship_id: impl Into<String>, capacity: usize) -> Self {
        ShipHistory {
            ship_id: ship_id.into(),
            window: VecDeque::with_capacity(capacity.max(1)),
            capacity: capacity.max(1),
        }
    }

    pub fn window(&self) -> impl Iterator<Item = &str> {
        self.window.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn reset(&mut self) {
        self.window.clear();
    }

    /// Runs ranked by length, longest first; equal lengths go to the most recent.
    pub fn ranked_runs(&self) -> Vec<Run<'_>> {
        let mut runs: Vec<Run<'_>> = Vec::new();
        for (i, port) in self.window.iter().enumerate() {
            match runs.last_mut() {
                Some(r) if r.port == port => {
                    r.len += 1;
                    r.end = i + 1;
                }
                _ => runs.push(Run {
                    port,
                    len: 1,
                    end: i + 1,
                }),
            }
        }
        runs.sort_by(|a, b| b.len.cmp(&a.len).then(b.end.cmp(&a.end)));
        runs
    }

    /// Appends `raw` and returns the port to report.
    ///
    /// `raw` is reported when it names the port of one of the `k` top-ranked
    /// runs; otherwise the port of the top run is reported instead.
    pub fn filter_prediction(&mut self, raw: &str, k: usize) -> String {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(raw.to_string());
        let runs = self.ranked_runs();
        if runs.iter().take(k.max(1)).any(|r| r.port == raw) {
            raw.to_string()
        } else {
            runs[0].port.to_string()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feed(h: &mut ShipHistory, seq: &[&str]) {
        for s in seq {
            h.filter_prediction(s, 1);
        }
    }

    #[test]
    fn long_run_suppresses_newcomer() {
        let mut h = ShipHistory::new("S", 64);
        feed(&mut h, &["A", "A", "A"]);
        assert_eq!(h.filter_prediction("B", 1), "A");
    }

    #[test]
    fn extending_run_is_reported() {
        let mut h = ShipHistory::new("S", 64);
        feed(&mut h, &["A", "B", "B"]);
        assert_eq!(h.filter_prediction("B", 1), "B");
    }

    #[test]
    fn first_prediction_passes() {
        let mut h = ShipHistory::new("S", 64);
        assert_eq!(h.filter_prediction("X", 1), "X");
    }

    #[test]
    fn equal_runs_prefer_recent() {
        let mut h = ShipHistory::new("S", 64);
        feed(&mut h, &["A", "A", "B"]);
        // A(2) and B(2): B is more recent
        assert_eq!(h.filter_prediction("B", 1), "B");
        // C(1) loses to B(2)
        assert_eq!(h.filter_prediction("C", 1), "B");
    }

    #[test]
    fn k_widens_acceptance() {
        let mut h = ShipHistory::new("S", 64);
        feed(&mut h, &["A", "A", "A", "A", "B"]);
        assert_eq!(h.clone().filter_prediction("B", 1), "A");
        assert_eq!(h.filter_prediction("B", 2), "B");
    }

    #[test]
    fn reset_semantics() {
        let mut h = ShipHistory::new("S", 64);
        feed(&mut h, &["A", "A"]);
        h.reset();
        assert!(h.is_empty());
        h.reset();
        assert!(h.is_empty());
        assert_eq!(h.filter_prediction("X", 1), "X");
        h.reset();
        feed(&mut h, &["A", "A", "A"]);
        assert_eq!(h.window().collect::<Vec<_>>(), vec!["A", "A", "A"]);
    }

    #[test]
    fn window_is_bounded() {
        let mut h = ShipHistory::new("S", 3);
        feed(&mut h, &["A", "A", "A", "B", "B"]);
        assert_eq!(h.window().collect::<Vec<_>>(), vec!["A", "B", "B"]);
        assert_eq!(h.filter_prediction("B", 1), "B");
    }
}
