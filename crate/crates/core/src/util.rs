//! Small shared helpers: calendar-month arithmetic and atomic file writes.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use chrono::{Months, NaiveDate};

/// `date` plus `months` calendar months, clamping to the end of the target
/// month (Jan 31 + 1 month = Feb 28/29).
pub fn add_months_clamped(date: NaiveDate, months: u32) -> NaiveDate {
    date.checked_add_months(Months::new(months)).expect("date within chrono range")
}

/// Whole months from `from` to `to` under clamped month addition: the largest
/// k with `from + k months <= to`. None when `to` precedes `from`.
pub fn whole_months_between(from: NaiveDate, to: NaiveDate) -> Option<u32> {
    if to < from {
        return None;
    }
    let guess = (to.years_since(from).unwrap_or(0)) * 12;
    let mut k = guess;
    while add_months_clamped(from, k + 1) <= to {
        k += 1;
    }
    while k > 0 && add_months_clamped(from, k) > to {
        k -= 1;
    }
    Some(k)
}

/// Writes a file through a temporary sibling and renames it into place, so a
/// failed run leaves no partial output behind.
pub fn write_atomically(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        f(&mut w)?;
        w.flush()?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
