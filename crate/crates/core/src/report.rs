//! Named symbolic checks with residuals and sign metadata.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Informational entries carry context (observed signs, reference
    /// residuals) and never affect the verdict.
    Info,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub status: CheckStatus,
    /// Rendered residual; pass entries record the literal zero they reduced.
    pub residual: Option<String>,
    /// Sign metadata where a convention choice was exercised.
    pub sign: Option<i32>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckEntry>,
}

impl VerificationReport {
    pub fn new() -> Self {
        VerificationReport::default()
    }

    pub fn push(&mut self, entry: CheckEntry) {
        self.checks.push(entry);
    }

    pub fn pass(&mut self, name: impl Into<String>, detail: impl Into<String>) {
        self.push(CheckEntry {
            name: name.into(),
            status: CheckStatus::Pass,
            residual: Some("0".into()),
            sign: None,
            detail: detail.into(),
        });
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = match c.status {
                CheckStatus::Pass => "PASS",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Info => "INFO",
            };
            out.push_str(&format!("[{tag}] {}", c.name));
            if let Some(sign) = c.sign {
                out.push_str(&format!(" (sign {sign:+})"));
            }
            if !c.detail.is_empty() {
                out.push_str(&format!(" — {}", c.detail));
            }
            if c.status == CheckStatus::Fail {
                if let Some(r) = &c.residual {
                    out.push_str(&format!("\n       residual: {r}"));
                }
            }
            out.push('\n');
        }
        out
    }
}
