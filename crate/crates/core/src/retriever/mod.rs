//! Two-stage retrieval: web search, concurrent fetch, paragraph extraction,
//! then fine-grained ranking down to a handful of references.

pub mod encoder;
pub mod extract;
pub mod fetch;
pub mod labels;
pub mod rank;
pub mod search;

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::clock::{Clock, SystemClock};
use crate::error::RetrieveError;
use crate::model::{Question, Reference};

pub use encoder::{train_encoder, Encoder, EncoderTrainConfig};
pub use extract::{extract_paragraphs, HtmlExtractor, Paragraph, ParagraphExtractor};
pub use fetch::{fetch_all, FixturePageSource, HttpPageSource, PageSource, PageStatus, RawPage};
pub use labels::{build_retrieval_labels, RetrievalLabel};
pub use rank::{rank_paragraphs, Bm25Ranker, DenseRanker, Ranker, TfIdfRanker};
pub use search::{search, FixtureSearchProvider, HttpSearchProvider, SearchProvider};

/// Wall-clock seconds per retrieval stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub t_search: f64,
    pub t_fetch: f64,
    pub t_extract: f64,
    pub t_rank: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.t_search + self.t_fetch + self.t_extract + self.t_rank
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrieverConfig {
    pub max_results: usize,
    #[serde(with = "millis")]
    pub fetch_timeout: Duration,
    pub max_parallel: usize,
    pub top_k: usize,
}

impl Default for RetrieverConfig {
    fn default() -> Self {
        Self {
            max_results: search::DEFAULT_MAX_RESULTS,
            fetch_timeout: fetch::DEFAULT_FETCH_TIMEOUT,
            max_parallel: fetch::DEFAULT_MAX_PARALLEL,
            top_k: rank::DEFAULT_TOP_K,
        }
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[derive(Clone)]
pub struct Retriever {
    pub search: Arc<dyn SearchProvider>,
    pub pages: Arc<dyn PageSource>,
    pub extractor: Arc<dyn ParagraphExtractor>,
    pub ranker: Arc<dyn Ranker>,
    pub clock: Arc<dyn Clock>,
    pub config: RetrieverConfig,
}

impl Retriever {
    pub fn new(
        search: Arc<dyn SearchProvider>,
        pages: Arc<dyn PageSource>,
        ranker: Arc<dyn Ranker>,
        config: RetrieverConfig,
    ) -> Self {
        Self {
            search,
            pages,
            extractor: Arc::new(HtmlExtractor::default()),
            ranker,
            clock: Arc::new(SystemClock::new()),
            config,
        }
    }

    pub fn with_extractor(mut self, extractor: Arc<dyn ParagraphExtractor>) -> Self {
        self.extractor = extractor;
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    /// Paragraphs from every page that fetched successfully, in URL order.
    pub async fn gather(&self, question: &Question) -> Result<Vec<Paragraph>, RetrieveError> {
        Ok(self.gather_timed(question).await?.0)
    }

    async fn gather_timed(
        &self,
        question: &Question,
    ) -> Result<(Vec<Paragraph>, StageTimings), RetrieveError> {
        let mut t = StageTimings::default();
        let clock = &*self.clock;

        let start = clock.now();
        let urls = search(question, &*self.search, self.config.max_results).await?;
        t.t_search = clock.since(start);

        let start = clock.now();
        let pages = fetch_all(
            &urls,
            &*self.pages,
            self.config.fetch_timeout,
            self.config.max_parallel,
        )
        .await;
        t.t_fetch = clock.since(start);

        let start = clock.now();
        let paragraphs: Vec<Paragraph> =
            pages.iter().flat_map(|p| self.extractor.extract(p)).collect();
        t.t_extract = clock.since(start);
        Ok((paragraphs, t))
    }

    /// Search, fetch, extract and rank, timing each stage. Fetch and
    /// extraction failures only shrink the paragraph pool; an empty pool is
    /// an error.
    pub async fn timed_retrieve(
        &self,
        question: &Question,
    ) -> Result<(Vec<Reference>, StageTimings), RetrieveError> {
        let (paragraphs, mut t) = self.gather_timed(question).await?;
        if paragraphs.is_empty() {
            return Err(RetrieveError::NoParagraphs);
        }
        let start = self.clock.now();
        let refs = rank_paragraphs(question, &paragraphs, &*self.ranker, self.config.top_k);
        t.t_rank = self.clock.since(start);
        Ok((refs, t))
    }
}
