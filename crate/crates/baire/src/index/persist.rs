//! Index persistence, format v1.
//!
//! The file stores the canonical state only: one line per record with its id
//! and digit string, framed by a header and a CRC-32 trailer. The tree is not
//! serialized; loading rebuilds it in one linear scan of the stored codes.
//!
//! ```text
//! MADIC1 <base> <precision> <count>
//! <id>\t<digit-string>
//! ...
//! CRC <crc32 of all preceding bytes, 8 hex digits>
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::MadicIndex;
use crate::codec::DigitCode;
use crate::error::{Error, Result};

const MAGIC: &str = "MADIC1";

impl MadicIndex {
    /// Serializes the index in format v1.
    ///
    /// Record ids containing tabs or line breaks cannot be framed and are
    /// rejected.
    pub fn to_file_string(&self) -> Result<String> {
        let mut body = String::new();
        let _ = writeln!(
            body,
            "{MAGIC} {} {} {}",
            self.base,
            self.precision,
            self.count()
        );
        for (id, code) in self.records() {
            if id.contains(['\t', '\n', '\r']) {
                return Err(Error::UnpersistableId(id.to_string()));
            }
            let _ = writeln!(body, "{id}\t{code}");
        }
        let crc = crc32fast::hash(body.as_bytes());
        let _ = writeln!(body, "CRC {crc:08x}");
        Ok(body)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_file_string()?)?;
        Ok(())
    }

    /// Parses a v1 index file, verifying the checksum before anything else
    /// and rebuilding the tree from the stored codes.
    pub fn from_file_string(text: &str) -> Result<Self> {
        let framed = text
            .strip_suffix('\n')
            .ok_or_else(|| Error::Corrupt("missing final newline".into()))?;
        let (head, trailer) = framed
            .rsplit_once('\n')
            .map(|(h, t)| (format!("{h}\n"), t))
            .unwrap_or_else(|| (String::new(), framed));
        let stated = trailer
            .strip_prefix("CRC ")
            .and_then(|hex| u32::from_str_radix(hex, 16).ok())
            .ok_or_else(|| Error::Corrupt("missing checksum line".into()))?;
        let actual = crc32fast::hash(head.as_bytes());
        if stated != actual {
            return Err(Error::Corrupt(format!(
                "checksum mismatch: stated {stated:08x}, computed {actual:08x}"
            )));
        }

        let mut lines = head.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Corrupt("missing header".into()))?;
        let fields: Vec<&str> = header.split(' ').collect();
        if fields.first().copied() != Some(MAGIC) {
            return Err(Error::FormatVersion {
                expected: MAGIC,
                found: fields.first().unwrap_or(&"").to_string(),
            });
        }
        let [_, base, precision, count] = fields[..] else {
            return Err(Error::Corrupt(format!("malformed header {header:?}")));
        };
        let base: u32 = base
            .parse()
            .map_err(|_| Error::Corrupt(format!("bad base {base:?}")))?;
        let precision: usize = precision
            .parse()
            .map_err(|_| Error::Corrupt(format!("bad precision {precision:?}")))?;
        let count: usize = count
            .parse()
            .map_err(|_| Error::Corrupt(format!("bad count {count:?}")))?;

        let mut index = Self::new(base, precision)
            .map_err(|e| Error::Corrupt(format!("unusable header: {e}")))?;
        let mut records = 0usize;
        for line in lines {
            let (id, digit_str) = line
                .split_once('\t')
                .ok_or_else(|| Error::Corrupt(format!("record line without tab: {line:?}")))?;
            let code = DigitCode::parse(base, digit_str)
                .map_err(|e| Error::Corrupt(format!("bad digit string {digit_str:?}: {e}")))?;
            if code.precision() != precision {
                return Err(Error::Corrupt(format!(
                    "record {id:?} has {} digits, expected {precision}",
                    code.precision()
                )));
            }
            index
                .insert(id, code)
                .map_err(|e| Error::Corrupt(format!("bad record {id:?}: {e}")))?;
            records += 1;
        }
        if records != count {
            return Err(Error::Corrupt(format!(
                "header states {count} records, found {records}"
            )));
        }
        Ok(index)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = fs::read(path)?;
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::Corrupt("file is not valid UTF-8".into()))?;
        Self::from_file_string(&text)
    }
}
