use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lang::MergeOp;

/// The bundled knowledge base.
pub const DEFAULT_KB: &str = include_str!("../../data/kb.json");

/// Environment variable naming a knowledge base file to use instead of the
/// bundled one.
pub const KB_ENV: &str = "DLCHECK_KB";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallClass {
    Source,
    Select,
    Merge,
    Normalize,
    Other,
    Train,
    Test,
    /// `train_test_split`: complementary row selects of every argument.
    Split,
    /// Constructor of a normalizing transformer.
    Scaler,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbEntry {
    pub namespace: String,
    pub function: String,
    pub class: CallClass,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "op_name")]
    pub op: Option<MergeOp>,
}

mod op_name {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::lang::MergeOp;

    pub fn serialize<S: Serializer>(op: &Option<MergeOp>, s: S) -> Result<S::Ok, S::Error> {
        match op {
            Some(MergeOp::Concat) => s.serialize_str("concat"),
            Some(MergeOp::Join) => s.serialize_str("join"),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<MergeOp>, D::Error> {
        match Option::<String>::deserialize(d)?.as_deref() {
            None => Ok(None),
            Some("concat") => Ok(Some(MergeOp::Concat)),
            Some("join") => Ok(Some(MergeOp::Join)),
            Some(other) => Err(serde::de::Error::custom(format!("unknown merge op `{other}`"))),
        }
    }
}

/// Maps `(namespace, function)` to the kind of statement a call stands for.
///
/// Namespaces used by the translator: `pandas` (module functions),
/// `pandas.DataFrame` (frame methods and accessors), `sklearn` (module
/// functions and classes), `sklearn.scaler` (methods of objects built by a
/// `scaler` constructor) and `sklearn.estimator` (methods of any other
/// object).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnowledgeBase {
    entries: Vec<KbEntry>,
}

impl Default for KnowledgeBase {
    fn default() -> Self {
        KnowledgeBase::from_json(DEFAULT_KB).expect("bundled knowledge base is valid")
    }
}

impl KnowledgeBase {
    pub fn new(entries: Vec<KbEntry>) -> Self {
        KnowledgeBase { entries }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(KnowledgeBase {
            entries: serde_json::from_str(text)?,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        KnowledgeBase::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// The knowledge base at `path`, else the one named by `DLCHECK_KB`,
    /// else the bundled default.
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        match path {
            Some(p) => KnowledgeBase::from_path(p),
            None => match std::env::var_os(KB_ENV) {
                Some(p) => KnowledgeBase::from_path(Path::new(&p)),
                None => Ok(KnowledgeBase::default()),
            },
        }
    }

    pub fn entries(&self) -> &[KbEntry] {
        &self.entries
    }

    pub fn get(&self, namespace: &str, function: &str) -> Option<&KbEntry> {
        self.entries
            .iter()
            .find(|e| e.namespace == namespace && e.function == function)
    }

    /// Lookup in the first namespace of `namespaces` that knows `function`.
    pub fn lookup(&self, namespaces: &[&str], function: &str) -> Option<&KbEntry> {
        namespaces.iter().find_map(|ns| self.get(ns, function))
    }

    pub fn class_of(&self, namespaces: &[&str], function: &str) -> CallClass {
        self.lookup(namespaces, function).map_or(CallClass::Unknown, |e| e.class)
    }
}
