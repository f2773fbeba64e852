//! Type hierarchies and coarse-class maps shipped with the crate.

use crate::analysis::RootsMap;
use crate::error::Result;
use crate::io::clean_entry;
use crate::model::TypeHierarchy;

pub const FIGER_TYPES: &str = include_str!("../data/figer.types");
pub const FIGER_ROOTS: &str = include_str!("../data/figer.roots.tsv");
pub const TYPENET_TYPES: &str = include_str!("../data/typenet.types");
pub const TYPENET_ROOTS: &str = include_str!("../data/typenet.roots.tsv");

fn hierarchy(text: &str) -> Result<TypeHierarchy> {
    TypeHierarchy::from_paths(text.lines().filter_map(clean_entry))
}

pub fn figer_hierarchy() -> TypeHierarchy {
    hierarchy(FIGER_TYPES).expect("bundled FIGER hierarchy is valid")
}

pub fn figer_roots() -> RootsMap {
    RootsMap::parse(FIGER_ROOTS, "figer.roots.tsv").expect("bundled FIGER roots are valid")
}

pub fn typenet_hierarchy() -> TypeHierarchy {
    hierarchy(TYPENET_TYPES).expect("bundled TypeNet hierarchy is valid")
}

pub fn typenet_roots() -> RootsMap {
    RootsMap::parse(TYPENET_ROOTS, "typenet.roots.tsv").expect("bundled TypeNet roots are valid")
}
