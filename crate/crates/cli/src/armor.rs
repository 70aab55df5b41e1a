//! Hex armor for key and signature files.

use crate::error::{CliError, CliResult};

const LINE: usize = 64;

pub fn armor(kind: &str, bytes: &[u8]) -> String {
    let hex = hex::encode(bytes);
    let mut out = format!("-----BEGIN MQCHAIN {kind}-----\n");
    for chunk in hex.as_bytes().chunks(LINE) {
        out.push_str(std::str::from_utf8(chunk).expect("hex is ascii"));
        out.push('\n');
    }
    out.push_str(&format!("-----END MQCHAIN {kind}-----\n"));
    out
}

/// Inverse of [`armor`]; the label must match `kind`.
pub fn dearmor(kind: &str, text: &str) -> CliResult<Vec<u8>> {
    let begin = format!("-----BEGIN MQCHAIN {kind}-----");
    let end = format!("-----END MQCHAIN {kind}-----");
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    if lines.next() != Some(begin.as_str()) {
        return Err(CliError::Usage(format!("expected an armored {kind} file")));
    }
    let mut hex = String::new();
    for line in lines.by_ref() {
        if line == end {
            return hex::decode(&hex).map_err(|e| CliError::Verification(format!("corrupt {kind} armor: {e}")));
        }
        hex.push_str(line);
    }
    Err(CliError::Verification(format!("{kind} armor is missing its end line")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn roundtrip(bytes in proptest::collection::vec(any::<u8>(), 0..300)) {
            prop_assert_eq!(dearmor("KEY", &armor("KEY", &bytes)).unwrap(), bytes);
        }
    }

    #[test]
    fn wrong_label_or_truncation_fails() {
        let text = armor("MPK", &[1, 2, 3]);
        assert!(matches!(dearmor("MSK", &text), Err(CliError::Usage(_))));
        let cut: String = text.lines().take(2).collect::<Vec<_>>().join("\n");
        assert!(dearmor("MPK", &cut).is_err());
        assert!(dearmor("MPK", &text.replace("010203", "01020z")).is_err());
    }
}
