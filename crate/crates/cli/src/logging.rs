//! Logger that echoes to stderr and keeps warnings for the run report.

use std::sync::Mutex;

use log::{Level, Log, Metadata, Record};

static WARNINGS: Mutex<Vec<String>> = Mutex::new(Vec::new());

struct Capture {
    echo: Level,
}

impl Log for Capture {
    fn enabled(&self, metadata: &Metadata<'_>) -> bool {
        metadata.level() <= self.echo
    }

    fn log(&self, record: &Record<'_>) {
        if record.level() <= Level::Warn {
            WARNINGS
                .lock()
                .expect("warning log")
                .push(record.args().to_string());
        }
        if record.level() <= self.echo {
            let tag = match record.level() {
                Level::Error => "error",
                Level::Warn => "warning",
                _ => "info",
            };
            eprintln!("{tag}: {}", record.args());
        }
    }

    fn flush(&self) {}
}

pub fn init(verbose: bool) {
    let echo = if verbose { Level::Info } else { Level::Warn };
    if log::set_boxed_logger(Box::new(Capture { echo })).is_ok() {
        log::set_max_level(echo.to_level_filter());
    }
}

/// Warnings seen so far, sorted with repeats folded, so that the list does
/// not depend on thread scheduling.
pub fn warnings() -> Vec<String> {
    let mut all = WARNINGS.lock().expect("warning log").clone();
    all.sort();
    let mut out: Vec<String> = Vec::new();
    let mut i = 0;
    while i < all.len() {
        let j = all[i..].iter().take_while(|w| **w == all[i]).count();
        out.push(if j > 1 {
            format!("{} ({j} times)", all[i])
        } else {
            all[i].clone()
        });
        i += j;
    }
    out
}
