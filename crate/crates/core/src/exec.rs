// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

//! Trial-level execution: data-parallel under the `parallel` feature,
//! sequential otherwise. Results always come back in trial order.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Sequential,
    /// Falls back to sequential when built without `parallel`.
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

/// `(0..count).map(f)`, possibly on a thread pool.
pub fn map_trials<T, F>(count: u64, mode: ExecMode, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(f).collect()
        }
        _ => (0..count).map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let f = |i: u64| i.wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 7;
        let seq = map_trials(1000, ExecMode::Sequential, f);
        let par = map_trials(1000, ExecMode::Parallel, f);
        assert_eq!(seq, par);
        assert_eq!(seq[3], f(3));
    }

    #[test]
    fn zero_trials() {
        assert!(map_trials(0, ExecMode::Parallel, |i| i).is_empty());
    }
}
