//! Link categorization.
//!
//! Every original hyperlink is classified as an entity link, a non-entity link
//! or unknown, and tagged referential when its anchor text matches one of the
//! target's candidate names. Only referential entity links survive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link_stats::LinkStats;
use crate::model::{ci_equal, labels_in_scope, Anchor, Document, EntityId, KnowledgeBase, TokenSpan, TypeHierarchy};

/// Read-only inputs shared by all stages.
#[derive(Debug, Clone, Copy)]
pub struct LinkContext<'a> {
    pub kb: &'a KnowledgeBase,
    pub hierarchy: &'a TypeHierarchy,
    pub stats: &'a LinkStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkCategory {
    EntityLink,
    NonEntityLink,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Categorization {
    pub category: LinkCategory,
    pub referential: bool,
}

impl Categorization {
    pub fn keeps_link(&self) -> bool {
        self.category == LinkCategory::EntityLink && self.referential
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage1Config {
    /// Minimum corpus anchor count before a link can be called a non-entity.
    pub support_threshold: u64,
    /// Minimum share of lowercase anchors (inclusive) for a non-entity.
    pub confidence_threshold: f64,
}

impl Default for Stage1Config {
    fn default() -> Self {
        Stage1Config {
            support_threshold: 50,
            confidence_threshold: 0.5,
        }
    }
}

impl Stage1Config {
    pub fn validate(&self) -> Result<()> {
        if self.support_threshold < 1 {
            return Err(Error::Config("support threshold must be at least 1".into()));
        }
        if !(self.confidence_threshold > 0.0 && self.confidence_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "confidence threshold must lie in (0, 1], got {}",
                self.confidence_threshold
            )));
        }
        Ok(())
    }
}

/// Category of a link target; independent of the anchor text.
pub fn target_category(target: &EntityId, ctx: &LinkContext<'_>, cfg: &Stage1Config) -> LinkCategory {
    if !labels_in_scope(target, ctx.kb, ctx.hierarchy).is_empty() {
        return LinkCategory::EntityLink;
    }
    let counts = ctx.stats.get(target);
    if counts.total >= cfg.support_threshold
        && counts.lowercase as f64 >= cfg.confidence_threshold * counts.total as f64
    {
        LinkCategory::NonEntityLink
    } else {
        LinkCategory::Unknown
    }
}

/// The surface matches a candidate name of `target`, ignoring case.
pub fn is_referential(surface: &[String], target: &EntityId, kb: &KnowledgeBase) -> bool {
    kb.candidate_names(target).iter().any(|name| ci_equal(name, surface))
}

pub fn categorize(anchor: &Anchor, ctx: &LinkContext<'_>, cfg: &Stage1Config) -> Categorization {
    Categorization {
        category: target_category(&anchor.target, ctx, cfg),
        referential: is_referential(&anchor.surface, &anchor.target, ctx.kb),
    }
}

/// A link removed by Stage I.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnlinkRecord {
    pub doc_id: String,
    pub span: TokenSpan,
    pub target: EntityId,
    pub surface: Vec<String>,
    pub category: LinkCategory,
    pub referential: bool,
}

/// Keeps exactly the referential entity links; reports every removed link.
pub fn apply_stage1(doc: &Document, ctx: &LinkContext<'_>, cfg: &Stage1Config) -> (Document, Vec<UnlinkRecord>) {
    let mut kept = Vec::with_capacity(doc.anchors.len());
    let mut removed = Vec::new();
    for anchor in &doc.anchors {
        let c = categorize(anchor, ctx, cfg);
        if c.keeps_link() {
            kept.push(anchor.clone());
        } else {
            removed.push(UnlinkRecord {
                doc_id: doc.id.clone(),
                span: anchor.span,
                target: anchor.target.clone(),
                surface: anchor.surface.clone(),
                category: c.category,
                referential: c.referential,
            });
        }
    }
    let out = Document {
        anchors: kept,
        ..doc.clone()
    };
    (out, removed)
}
