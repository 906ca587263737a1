use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Corpus, OutputId, VoiceId};

/// Output → voices citing it. Every output of the corpus has an entry.
pub type CitationIndex = BTreeMap<OutputId, BTreeSet<VoiceId>>;

/// Inverts the voice-side citation edges.
pub fn citation_index(corpus: &Corpus) -> CitationIndex {
    let mut index: CitationIndex = corpus.outputs.iter().map(|o| (o.id.clone(), BTreeSet::new())).collect();
    for v in &corpus.voices {
        for o in &v.output_ids {
            if let Some(cited) = index.get_mut(o) {
                cited.insert(v.id.clone());
            }
        }
    }
    index
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_voices: usize,
    pub audio_voices: usize,
    pub cited_voices: usize,
    pub uncited_voices: usize,
    pub audio_fraction: f64,
    pub uncited_fraction: f64,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let total = corpus.voices.len();
    let audio = corpus.voices.iter().filter(|v| v.has_audio()).count();
    let cited = corpus.voices.iter().filter(|v| v.is_cited()).count();
    let ratio = |n: usize| if total == 0 { 0.0 } else { n as f64 / total as f64 };
    CorpusStats {
        total_voices: total,
        audio_voices: audio,
        cited_voices: cited,
        uncited_voices: total - cited,
        audio_fraction: ratio(audio),
        uncited_fraction: ratio(total - cited),
    }
}
