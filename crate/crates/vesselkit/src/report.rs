//! Labeled residual reports.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionEntry {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A list of named residuals; the report passes iff every residual is at
/// most its tolerance.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConditionReport {
    pub entries: Vec<ConditionEntry>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub fn new() -> Self {
        ConditionReport { entries: Vec::new(), pass: true, notes: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        self.push_entry(name, residual, tolerance, None);
    }

    pub fn push_with_note(&mut self, name: impl Into<String>, residual: f64, tolerance: f64, note: &str) {
        self.push_entry(name, residual, tolerance, Some(note.to_string()));
    }

    pub fn push_entry(&mut self, name: impl Into<String>, residual: f64, tolerance: f64, note: Option<String>) {
        let pass = residual <= tolerance;
        self.pass &= pass;
        self.entries.push(ConditionEntry { name: name.into(), residual, tolerance, pass, note });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn extend(&mut self, other: ConditionReport) {
        for e in other.entries {
            self.pass &= e.pass;
            self.entries.push(e);
        }
        self.notes.extend(other.notes);
    }

    pub fn get(&self, name: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Entries whose name starts with `prefix`.
    pub fn matching<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a ConditionEntry> + 'a {
        self.entries.iter().filter(move |e| e.name.starts_with(prefix))
    }

    pub fn max_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> Vec<&ConditionEntry> {
        self.entries.iter().filter(|e| !e.pass).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_flag_tracks_entries() {
        let mut r = ConditionReport::new();
        assert!(r.pass);
        r.push("a", 1e-12, 1e-10);
        assert!(r.pass);
        r.push("b", 1.0, 1e-10);
        assert!(!r.pass);
        assert_eq!(r.failures().len(), 1);
        assert_eq!(r.failures()[0].name, "b");
    }

    #[test]
    fn nan_residual_fails() {
        let mut r = ConditionReport::new();
        r.push("nan", f64::NAN, 1.0);
        assert!(!r.pass);
    }
}
