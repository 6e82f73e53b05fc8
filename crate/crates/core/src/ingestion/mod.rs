//! Crawler and extractor side of the engine: link discovery, shot
//! segmentation, keyframe selection, metadata records and storyboards.

mod crawl;
mod descriptor;
mod record;
mod shots;

pub use crawl::{crawl, glob_to_regex, Fetcher, LinkRecord, LinkStatus, LinkStore, StdFetcher};
pub use descriptor::{FrameFeature, TranscriptSegment, VideoDescriptor, HIST_DIM};
pub use record::{
    extract, summarize, ConceptScore, MediaInfo, MetadataRecord, ShotRecord, Storyboard, StoryboardFrame,
};
pub use shots::{detect_shots, l1_distance, Shot, DEFAULT_SHOT_THRESHOLD};
