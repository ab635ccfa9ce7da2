//! Outcome records for the acceptance runner.

use std::fmt;
use std::time::Duration;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:02} {} ({:.2?}): {}", self.id, self.name, self.elapsed, self.detail)
    }
}

/// Closing tally line; true when everything passed.
pub fn summarize(outcomes: &[Outcome]) -> (String, bool) {
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    (format!("{} passed, {} failed {:?}", outcomes.len() - failed.len(), failed.len(), failed), failed.is_empty())
}
