pub mod classify;
pub mod clean;
pub mod compare;
pub mod eval;
pub mod ingest;
pub mod url_scan;
pub mod watch;
