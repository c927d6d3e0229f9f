use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub wall_s: f64,
    /// Process CPU time, summed over threads.
    pub cpu_s: f64,
}

impl Timings {
    pub fn since(wall: Instant, cpu: f64) -> Self {
        Timings {
            wall_s: wall.elapsed().as_secs_f64(),
            cpu_s: cpu_seconds() - cpu,
        }
    }
}

/// CPU time consumed by the process so far.
pub fn cpu_seconds() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid out-pointer for the duration of the call.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}
