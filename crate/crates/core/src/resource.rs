//! Embedded resources and canonical-URI keyed resource sets.

use alloc::collections::btree_map::{self, BTreeMap};
use alloc::string::String;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::uri::UriR;

/// An embedded resource. Identity is the canonical URI; `mime` and
/// `size_bytes` are advisory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResourceRef {
    pub uri: UriR,
    pub mime: String,
    pub size_bytes: u64,
}

impl ResourceRef {
    pub fn new(uri: UriR, mime: impl Into<String>, size_bytes: u64) -> Self {
        Self {
            uri,
            mime: mime.into(),
            size_bytes,
        }
    }

    pub fn key(&self) -> &str {
        self.uri.canonical()
    }
}

impl PartialEq for ResourceRef {
    fn eq(&self, other: &Self) -> bool {
        self.uri == other.uri
    }
}

impl Eq for ResourceRef {}

/// Unordered set of resources keyed by canonical URI.
///
/// Iteration is in canonical-URI order. When two members share a key the
/// first-seen metadata is kept.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResourceSet {
    members: BTreeMap<String, ResourceRef>,
}

impl ResourceSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts unless the canonical URI is already present. Returns whether
    /// the resource was new.
    pub fn insert(&mut self, resource: ResourceRef) -> bool {
        match self.members.entry(String::from(resource.key())) {
            btree_map::Entry::Vacant(slot) => {
                slot.insert(resource);
                true
            }
            btree_map::Entry::Occupied(_) => false,
        }
    }

    pub fn contains_key(&self, canonical: &str) -> bool {
        self.members.contains_key(canonical)
    }

    pub fn contains(&self, resource: &ResourceRef) -> bool {
        self.contains_key(resource.key())
    }

    pub fn get(&self, canonical: &str) -> Option<&ResourceRef> {
        self.members.get(canonical)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ResourceRef> + '_ {
        self.members.values()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> + '_ {
        self.members.keys().map(String::as_str)
    }

    /// Adds every member of `other` not already present.
    pub fn extend_from(&mut self, other: &ResourceSet) {
        for resource in other.iter() {
            if !self.contains(resource) {
                self.insert(resource.clone());
            }
        }
    }

    pub fn union(&self, other: &ResourceSet) -> ResourceSet {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    /// Members of `self` whose key is absent from `other`.
    pub fn difference(&self, other: &ResourceSet) -> ResourceSet {
        self.iter()
            .filter(|r| !other.contains(r))
            .cloned()
            .collect()
    }

    pub fn intersection(&self, other: &ResourceSet) -> ResourceSet {
        self.iter().filter(|r| other.contains(r)).cloned().collect()
    }

    pub fn is_subset(&self, other: &ResourceSet) -> bool {
        self.len() <= other.len() && self.keys().all(|k| other.contains_key(k))
    }

    pub fn same_keys(&self, other: &ResourceSet) -> bool {
        self.len() == other.len() && self.keys().eq(other.keys())
    }
}

impl FromIterator<ResourceRef> for ResourceSet {
    fn from_iter<T: IntoIterator<Item = ResourceRef>>(iter: T) -> Self {
        let mut set = ResourceSet::new();
        for resource in iter {
            set.insert(resource);
        }
        set
    }
}

impl Extend<ResourceRef> for ResourceSet {
    fn extend<T: IntoIterator<Item = ResourceRef>>(&mut self, iter: T) {
        for resource in iter {
            self.insert(resource);
        }
    }
}

impl<'a> IntoIterator for &'a ResourceSet {
    type Item = &'a ResourceRef;
    type IntoIter = btree_map::Values<'a, String, ResourceRef>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.values()
    }
}

// Serialized as a list in canonical order.
impl Serialize for ResourceSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.members.values())
    }
}

impl<'de> Deserialize<'de> for ResourceSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let list = alloc::vec::Vec::<ResourceRef>::deserialize(deserializer)?;
        Ok(list.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uri::UriR;

    fn r(uri: &str, mime: &str, size: u64) -> ResourceRef {
        ResourceRef::new(UriR::new(uri).unwrap(), mime, size)
    }

    #[test]
    fn first_seen_metadata_wins() {
        let mut set = ResourceSet::new();
        assert!(set.insert(r("http://a.com/x.js#1", "text/javascript", 10)));
        assert!(!set.insert(r("http://A.com/x.js", "application/json", 99)));
        assert_eq!(set.len(), 1);
        let kept = set.get("http://a.com/x.js").unwrap();
        assert_eq!(kept.mime, "text/javascript");
        assert_eq!(kept.size_bytes, 10);
    }

    #[test]
    fn algebra() {
        let ab: ResourceSet = [r("http://a/1", "x", 1), r("http://a/2", "x", 1)].into_iter().collect();
        let bc: ResourceSet = [r("http://a/2", "y", 2), r("http://a/3", "y", 2)].into_iter().collect();
        assert_eq!(ab.union(&bc).len(), 3);
        assert_eq!(bc.difference(&ab).keys().collect::<alloc::vec::Vec<_>>(), ["http://a/3"]);
        assert_eq!(ab.intersection(&bc).len(), 1);
        assert!(ab.intersection(&bc).is_subset(&ab));
        assert!(!ab.same_keys(&bc));
        assert!(ab.same_keys(&ab.clone()));
    }
}
