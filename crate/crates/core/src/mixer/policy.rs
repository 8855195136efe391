use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::expr::{AttrKind, Predicate};
use crate::content::PII_ATTRIBUTES;
use crate::error::{Result, SieveError};
use crate::taggers::{c4, gopher};

/// Shape of an attribute known to the taggers, or `None` if no tagger
/// emits it. `classify.NAME` is accepted for any non-empty name.
pub fn attribute_kind(name: &str) -> Option<AttrKind> {
    if name == "lang.thai_ratio"
        || name == "c4.line_count"
        || name == "dedup.url_duplicate"
        || name == "dedup.doc_duplicate"
        || name.strip_prefix("classify.").is_some_and(|n| !n.is_empty())
        || (name.starts_with("gopher.") && gopher::attribute_names().iter().any(|g| g == name))
    {
        return Some(AttrKind::WholeDocument);
    }
    if c4::ATTRIBUTE_NAMES.contains(&name) || PII_ATTRIBUTES.contains(&name) {
        return Some(AttrKind::SpanList);
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Drop,
    Mask,
}

/// One stage as written in a policy file.
///
/// A drop stage keeps documents for which `predicate` holds. A mask stage
/// replaces the spans of the listed attributes with `replacement`, only in
/// documents matching `predicate` when one is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub name: String,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicate: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spans: Vec<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub replacement: String,
}

impl StageConfig {
    pub fn drop(name: impl Into<String>, predicate: impl Into<String>) -> Self {
        StageConfig {
            name: name.into(),
            action: Action::Drop,
            predicate: Some(predicate.into()),
            spans: Vec::new(),
            replacement: String::new(),
        }
    }

    pub fn mask<S: Into<String>>(
        name: impl Into<String>,
        spans: impl IntoIterator<Item = S>,
        replacement: impl Into<String>,
    ) -> Self {
        StageConfig {
            name: name.into(),
            action: Action::Mask,
            predicate: None,
            spans: spans.into_iter().map(Into::into).collect(),
            replacement: replacement.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    #[serde(default)]
    pub stages: Vec<StageConfig>,
}

impl PolicyConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SieveError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| SieveError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone)]
pub struct Stage {
    pub name: String,
    pub action: Action,
    pub predicate: Option<Predicate>,
    pub spans: Vec<String>,
    pub replacement: String,
}

/// A validated policy, ready to run.
#[derive(Debug, Clone)]
pub struct FilterPolicy {
    stages: Vec<Stage>,
    config: PolicyConfig,
}

impl FilterPolicy {
    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Every attribute a stage reads, by its sidecar name.
    pub fn referenced_attributes(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for s in &self.stages {
            if let Some(p) = &s.predicate {
                out.extend(p.attributes().into_iter().map(|a| a.name.clone()));
            }
            out.extend(s.spans.iter().cloned());
        }
        out
    }
}

pub fn compile_policy(config: &PolicyConfig) -> Result<FilterPolicy> {
    let mut stages = Vec::with_capacity(config.stages.len());
    let mut unknown: Vec<String> = Vec::new();
    let mut seen_mask = None;
    for (i, sc) in config.stages.iter().enumerate() {
        if sc.name.is_empty() {
            return Err(SieveError::Config(format!("stage {i} has no name")));
        }
        if config.stages[..i].iter().any(|o| o.name == sc.name) {
            return Err(SieveError::Config(format!("duplicate stage name `{}`", sc.name)));
        }
        match sc.action {
            Action::Drop => {
                if let Some(m) = seen_mask {
                    return Err(SieveError::Config(format!(
                        "drop stage `{}` follows mask stage `{m}`; mask stages must come last",
                        sc.name
                    )));
                }
                if sc.predicate.is_none() {
                    return Err(SieveError::Config(format!("drop stage `{}` needs a predicate", sc.name)));
                }
                if !sc.spans.is_empty() {
                    return Err(SieveError::Config(format!("drop stage `{}` cannot list spans", sc.name)));
                }
            }
            Action::Mask => {
                seen_mask = Some(&sc.name);
                if sc.spans.is_empty() {
                    return Err(SieveError::Config(format!("mask stage `{}` lists no spans", sc.name)));
                }
                for a in &sc.spans {
                    match attribute_kind(a) {
                        Some(AttrKind::SpanList) => {}
                        Some(AttrKind::WholeDocument) => {
                            return Err(SieveError::Config(format!(
                                "mask stage `{}`: `{a}` is a whole-document attribute",
                                sc.name
                            )))
                        }
                        None if !unknown.contains(a) => unknown.push(a.clone()),
                        None => {}
                    }
                }
            }
        }
        let predicate = match &sc.predicate {
            None => None,
            Some(src) => match Predicate::parse(src, attribute_kind) {
                Ok(p) => Some(p),
                Err(SieveError::UnknownAttributes(names)) => {
                    for n in names {
                        if !unknown.contains(&n) {
                            unknown.push(n);
                        }
                    }
                    None
                }
                Err(SieveError::PolicySyntax { position, message }) => {
                    return Err(SieveError::PolicySyntax {
                        position,
                        message: format!("stage `{}`: {message}", sc.name),
                    })
                }
                Err(e) => return Err(e),
            },
        };
        stages.push(Stage {
            name: sc.name.clone(),
            action: sc.action,
            predicate,
            spans: sc.spans.clone(),
            replacement: sc.replacement.clone(),
        });
    }
    if !unknown.is_empty() {
        return Err(SieveError::UnknownAttributes(unknown));
    }
    Ok(FilterPolicy {
        stages,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(pred: &str) -> Result<FilterPolicy> {
        compile_policy(&PolicyConfig {
            stages: vec![StageConfig::drop("s", pred)],
        })
    }

    #[test]
    fn catalog() {
        assert_eq!(attribute_kind("lang.thai_ratio"), Some(AttrKind::WholeDocument));
        assert_eq!(attribute_kind("gopher.word_count"), Some(AttrKind::WholeDocument));
        assert_eq!(attribute_kind("classify.adult"), Some(AttrKind::WholeDocument));
        assert_eq!(attribute_kind("c4.corrupt_unicode"), Some(AttrKind::SpanList));
        assert_eq!(attribute_kind("pii.email"), Some(AttrKind::SpanList));
        assert_eq!(attribute_kind("classify."), None);
        assert_eq!(attribute_kind("gopher.nope"), None);
    }

    #[test]
    fn example_predicates_compile() {
        one("lang.thai_ratio >= 0.5").unwrap();
        one("gopher.word_count >= 200 and gopher.word_count <= 100000").unwrap();
        one("c4.has_curly_brace == 0 and pii.email.max_score < 1").unwrap();
        match one("bogus.attr > 1") {
            Err(SieveError::UnknownAttributes(n)) => assert_eq!(n, ["bogus.attr"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_names_collected_across_stages() {
        let cfg = PolicyConfig {
            stages: vec![
                StageConfig::drop("a", "x.one > 1"),
                StageConfig::drop("b", "lang.thai_ratio > 0 and x.two < 1"),
                StageConfig::mask("m", ["x.three"], ""),
            ],
        };
        match compile_policy(&cfg) {
            Err(SieveError::UnknownAttributes(n)) => assert_eq!(n, ["x.one", "x.two", "x.three"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        let dup = PolicyConfig {
            stages: vec![StageConfig::drop("a", "lang.thai_ratio > 0"), StageConfig::drop("a", "lang.thai_ratio > 0")],
        };
        assert!(matches!(compile_policy(&dup), Err(SieveError::Config(_))));
        let order = PolicyConfig {
            stages: vec![StageConfig::mask("m", ["pii.email"], "x"), StageConfig::drop("a", "lang.thai_ratio > 0")],
        };
        assert!(matches!(compile_policy(&order), Err(SieveError::Config(_))));
        let whole = PolicyConfig {
            stages: vec![StageConfig::mask("m", ["lang.thai_ratio"], "x")],
        };
        assert!(matches!(compile_policy(&whole), Err(SieveError::Config(_))));
        assert!(matches!(one("lang.thai_ratio >"), Err(SieveError::PolicySyntax { position: 17, .. })));
    }

    #[test]
    fn policy_json_round_trip() {
        let cfg = PolicyConfig {
            stages: vec![
                StageConfig::drop("language", "lang.thai_ratio >= 0.5"),
                StageConfig::mask("pii", PII_ATTRIBUTES, "||||"),
            ],
        };
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<PolicyConfig>(&json).unwrap(), cfg);
        let p = compile_policy(&cfg).unwrap();
        assert_eq!(
            p.referenced_attributes().into_iter().collect::<Vec<_>>(),
            ["lang.thai_ratio", "pii.email", "pii.ip", "pii.phone_th"]
        );
    }
}
