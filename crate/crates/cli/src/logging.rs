//! Line-delimited JSON log records on standard error.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use log::{Level, LevelFilter, Log, Metadata, Record};
use serde::Serialize;

struct JsonLogger {
    level: LevelFilter,
}

#[derive(Serialize)]
struct Line<'a> {
    ts_ms: u128,
    level: &'a str,
    target: &'a str,
    message: String,
}

impl Log for JsonLogger {
    fn enabled(&self, metadata: &Metadata) -> bool {
        metadata.level() <= self.level
    }

    fn log(&self, record: &Record) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let ts_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis());
        let line = Line {
            ts_ms,
            level: &record.level().as_str().to_lowercase(),
            target: record.target(),
            message: record.args().to_string(),
        };
        if let Ok(s) = serde_json::to_string(&line) {
            let _ = writeln!(std::io::stderr().lock(), "{s}");
        }
    }

    fn flush(&self) {}
}

/// Installs the logger; `name` is a level such as `info` or `debug`.
pub fn init(name: Option<&str>) {
    let level = name
        .and_then(|s| s.parse::<Level>().ok())
        .map_or(LevelFilter::Info, |l| l.to_level_filter());
    if log::set_logger(Box::leak(Box::new(JsonLogger { level }))).is_ok() {
        log::set_max_level(level);
    }
}
