//! Flat key-value report, written atomically. Keys appear in insertion
//! order, values are plain `Display` text (floats round-trip through the
//! shortest exact representation), and absent quantities are stated with
//! their reason instead of being omitted. The report carries no timestamps
//! or machine identifiers, so identical inputs produce identical bytes.

use sha2::{Digest, Sha256};
use std::fmt::Display;
use std::io;
use std::path::Path;

#[derive(Debug, Default, Clone)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn push_absent(&mut self, key: &str, reason: &str) {
        self.entries.push((key.to_string(), format!("absent ({reason})")));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }

    pub fn write_atomic(&self, path: &Path) -> io::Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

/// Hex sha-256 of the canonical config text; lets a report be matched to the
/// exact configuration that produced it.
pub fn config_hash(canonical_text: &str) -> String {
    let mut h = Sha256::new();
    h.update(canonical_text.as_bytes());
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Write-to-temp-then-rename so a crash never leaves a half-written file
/// under the final name.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes)?;
    match std::fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering_preserves_insertion_order() {
        let mut r = Report::new();
        r.push("z.last", 1);
        r.push("a.first", 2.5);
        r.push_absent("mid.gap", "wrong regime");
        let text = r.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "z.last = 1");
        assert_eq!(lines[1], "a.first = 2.5");
        assert_eq!(lines[2], "mid.gap = absent (wrong regime)");
    }

    #[test]
    fn hash_is_stable_and_hex() {
        let h = config_hash("model.a = 1\n");
        assert_eq!(h.len(), 64);
        assert_eq!(h, config_hash("model.a = 1\n"));
        assert_ne!(h, config_hash("model.a = 2\n"));
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join(format!("platelab-report-{}", std::process::id()));
        let path = dir.join("r.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
