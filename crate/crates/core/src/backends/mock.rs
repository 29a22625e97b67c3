use std::collections::BTreeMap;
use std::sync::atomic::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{Backend, BackendKind, InferenceResponse, RecordContext};
use crate::dataset::QuestionRecord;
use crate::error::{Error, Result};

/// Script answering every question with its correct candidate.
pub fn oracle_script(records: &[QuestionRecord]) -> BTreeMap<String, String> {
    records
        .iter()
        .map(|r| (r.id.clone(), r.correct_answer().to_string()))
        .collect()
}

fn question_seed(seed: u64, id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

impl Backend {
    pub fn mock_infer(&self, _prompt: &str, record: RecordContext<'_>) -> Result<InferenceResponse> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let text = match self.config.kind {
            BackendKind::MockFixed => self.config.mock_text.clone().unwrap_or_default(),
            BackendKind::MockRandom => {
                if record.candidates.is_empty() {
                    return Err(Error::Precondition("mock_random needs candidates".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(question_seed(self.config.seed, record.id));
                record.candidates[rng.random_range(0..record.candidates.len())].clone()
            }
            BackendKind::MockScripted => self
                .script
                .get(record.id)
                .cloned()
                .ok_or_else(|| Error::Contract(format!("mock script has no entry for question {:?}", record.id)))?,
            kind => return Err(Error::Config(format!("{kind} is not a mock backend"))),
        };
        Ok(InferenceResponse {
            text,
            latency_secs: 0.0,
            attempt_count: 1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::BackendConfig;

    fn candidates() -> Vec<String> {
        ["The lid.", "The pot with handle.", "The egg.", "The pan.", "The glass bowl."]
            .map(String::from)
            .to_vec()
    }

    fn ctx<'a>(id: &'a str, c: &'a [String]) -> RecordContext<'a> {
        RecordContext { id, candidates: c }
    }

    #[test]
    fn fixed_always_returns_text() {
        let b = Backend::new(BackendConfig {
            mock_text: Some("The egg.".into()),
            ..BackendConfig::mock(BackendKind::MockFixed)
        })
        .unwrap();
        let c = candidates();
        for id in ["a", "b", "c"] {
            assert_eq!(b.mock_infer("p", ctx(id, &c)).unwrap().text, "The egg.");
        }
        assert_eq!(b.invocations(), 3);
    }

    #[test]
    fn random_is_uniform_and_deterministic() {
        let b = Backend::new(BackendConfig {
            seed: 11,
            ..BackendConfig::mock(BackendKind::MockRandom)
        })
        .unwrap();
        let c = candidates();
        let mut counts = [0usize; 5];
        for i in 0..1000 {
            let id = format!("q{i:05}");
            let text = b.mock_infer("p", ctx(&id, &c)).unwrap().text;
            assert_eq!(text, b.mock_infer("p", ctx(&id, &c)).unwrap().text);
            counts[c.iter().position(|x| *x == text).unwrap()] += 1;
        }
        for n in counts {
            let freq = n as f64 / 1000.0;
            assert!((freq - 0.2).abs() <= 0.05, "{counts:?}");
        }
    }

    #[test]
    fn scripted_requires_entries() {
        let mut script = BTreeMap::new();
        script.insert("q1".to_string(), "The pan.".to_string());
        let b = Backend::new(BackendConfig {
            mock_script: Some(script),
            ..BackendConfig::mock(BackendKind::MockScripted)
        })
        .unwrap();
        let c = candidates();
        assert_eq!(b.mock_infer("p", ctx("q1", &c)).unwrap().text, "The pan.");
        assert!(matches!(b.mock_infer("p", ctx("q2", &c)), Err(Error::Contract(_))));
    }

    #[test]
    fn scripted_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("script.json");
        std::fs::write(&path, r#"{"q9": "The lid."}"#).unwrap();
        let b = Backend::new(BackendConfig {
            mock_script_path: Some(path),
            ..BackendConfig::mock(BackendKind::MockScripted)
        })
        .unwrap();
        let c = candidates();
        assert_eq!(b.mock_infer("p", ctx("q9", &c)).unwrap().text, "The lid.");
    }
}
