//! Pipe-tolerant stdout. A consumer like `solintent detect | head` closes
//! the pipe early; status output must not turn that into a panic.

use std::io::Write;

pub fn line(text: impl AsRef<str>) {
    let _ = writeln!(std::io::stdout(), "{}", text.as_ref());
}
