//! Hate-speech corpus loading. One JSON document per line.

use std::collections::BTreeMap;
use std::path::Path;

use crate::domain::{HateSpeechInstance, InstanceId, Theme};
use crate::error::{Error, Result};

const BUNDLED: &str = include_str!("../data/corpus.jsonl");

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    instances: BTreeMap<InstanceId, HateSpeechInstance>,
}

impl Corpus {
    /// The corpus shipped with the crate (see `data/CORPUS.md` for gold-span provenance).
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled corpus is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(jsonl: &str) -> Result<Self> {
        let mut instances = Vec::new();
        for (n, line) in jsonl.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let inst: HateSpeechInstance = serde_json::from_str(line)
                .map_err(|e| Error::Corpus(format!("line {}: {e}", n + 1)))?;
            instances.push(inst);
        }
        Self::from_instances(instances)
    }

    pub fn from_instances(list: Vec<HateSpeechInstance>) -> Result<Self> {
        let mut instances = BTreeMap::new();
        for inst in list {
            inst.check().map_err(Error::Corpus)?;
            let id = inst.id.clone();
            if instances.insert(id.clone(), inst).is_some() {
                return Err(Error::Corpus(format!("duplicate instance id {id}")));
            }
        }
        Ok(Self { instances })
    }

    pub fn get(&self, id: &InstanceId) -> Option<&HateSpeechInstance> {
        self.instances.get(id)
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Instances in id order.
    pub fn iter(&self) -> impl Iterator<Item = &HateSpeechInstance> {
        self.instances.values()
    }

    pub fn by_theme(&self) -> BTreeMap<Theme, Vec<&HateSpeechInstance>> {
        let mut out: BTreeMap<Theme, Vec<&HateSpeechInstance>> = BTreeMap::new();
        for inst in self.iter() {
            out.entry(inst.theme).or_default().push(inst);
        }
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for inst in self.iter() {
            out.push_str(&serde_json::to_string(inst).expect("instance serializes"));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SpanKind;
    use crate::spans::span_text;

    #[test]
    fn bundled_corpus_is_valid_and_complete() {
        let c = Corpus::bundled();
        assert_eq!(c.len(), 19);
        let themes = c.by_theme();
        assert_eq!(themes.len(), 5);
        assert_eq!(themes[&Theme::Race].len(), 6);
    }

    #[test]
    fn worked_examples_carry_documented_gold() {
        let c = Corpus::bundled();
        let jog = c.get(&"hs-03".into()).unwrap();
        assert!(jog.text.starts_with("I saw a random black man jogging"));
        assert_eq!(span_text(&jog.text, &jog.gold_identity[0]).unwrap(), "black man");
        assert_eq!(span_text(&jog.text, &jog.gold_action[0]).unwrap(), "feel unsafe");

        let women = c.get(&"hs-19".into()).unwrap();
        assert_eq!(span_text(&women.text, &women.gold_identity[0]).unwrap(), "women");
        assert_eq!(
            span_text(&women.text, &women.gold_action[0]).unwrap(),
            "eventually settled down and got married. Your instinct will kick in soon"
        );
        assert!(women.gold(SpanKind::Action).len() == 1);
    }

    #[test]
    fn multibyte_item_offsets_are_codepoints() {
        let c = Corpus::bundled();
        let inst = c.get(&"hs-04".into()).unwrap();
        assert!(inst.text.contains('‘'));
        assert_eq!(
            span_text(&inst.text, &inst.gold_action[0]).unwrap(),
            "I get uncomfortable because they're not feminine at all"
        );
    }

    #[test]
    fn rejects_bad_lines_and_duplicates() {
        let line = r#"{"id":"a","text":"abc","theme":"race","gold_identity":[{"start":0,"end":1,"kind":"identity"}],"gold_action":[{"start":1,"end":4,"kind":"action"}]}"#;
        assert!(matches!(Corpus::parse(line), Err(Error::Corpus(_))));
        let good = line.replace("\"end\":4", "\"end\":3");
        let twice = format!("{good}\n{good}\n");
        assert!(Corpus::parse(&twice).is_err());
        assert_eq!(Corpus::parse(&good).unwrap().len(), 1);
        assert!(Corpus::parse("{not json").is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let c = Corpus::bundled();
        let again = Corpus::parse(&c.to_jsonl()).unwrap();
        assert!(c.iter().eq(again.iter()));
    }
}
