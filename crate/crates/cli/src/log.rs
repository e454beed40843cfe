//! One machine-parsable stderr line per stage:
//! `stage=<name> wall_ms=<ms> peak_rss_kb=<kb>`.

use std::time::Instant;

pub struct Stage {
    name: &'static str,
    start: Instant,
}

impl Stage {
    pub fn new(name: &'static str) -> Stage {
        Stage {
            name,
            start: Instant::now(),
        }
    }
}

impl Drop for Stage {
    fn drop(&mut self) {
        if std::thread::panicking() {
            return;
        }
        eprintln!(
            "stage={} wall_ms={} peak_rss_kb={}",
            self.name,
            self.start.elapsed().as_millis(),
            peak_rss_kb().unwrap_or(0)
        );
    }
}

/// High-water resident set size of this process, where the OS reports it.
pub fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}
