use std::collections::{BTreeSet, HashSet};

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::http::ApiError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextMetadata {
    pub name: String,
    #[serde(rename = "type", default)]
    pub metadata_type: String,
    pub value: Value,
}

impl ContextMetadata {
    pub fn new(name: &str, metadata_type: &str, value: Value) -> Self {
        ContextMetadata {
            name: name.to_string(),
            metadata_type: metadata_type.to_string(),
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextAttribute {
    pub name: String,
    pub value: Value,
    #[serde(default)]
    pub metadata: Vec<ContextMetadata>,
}

impl ContextAttribute {
    pub fn new(name: &str, value: Value) -> Self {
        ContextAttribute {
            name: name.to_string(),
            value,
            metadata: Vec::new(),
        }
    }

    pub fn with_metadata(mut self, md: ContextMetadata) -> Self {
        self.metadata.push(md);
        self
    }

    pub fn metadata(&self, name: &str) -> Option<&ContextMetadata> {
        self.metadata.iter().find(|m| m.name == name)
    }

    /// The `location` metadata as `(lon, lat)`.
    pub fn location(&self) -> Option<(f64, f64)> {
        let pair = self.metadata("location")?.value.as_array()?;
        match pair.as_slice() {
            [lon, lat] => Some((lon.as_f64()?, lat.as_f64()?)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextEntity {
    pub id: String,
    #[serde(rename = "type", default)]
    pub entity_type: String,
    #[serde(default)]
    pub attributes: Vec<ContextAttribute>,
}

impl ContextEntity {
    pub fn new(id: &str, entity_type: &str) -> Self {
        ContextEntity {
            id: id.to_string(),
            entity_type: entity_type.to_string(),
            attributes: Vec::new(),
        }
    }

    pub fn with_attribute(mut self, attr: ContextAttribute) -> Self {
        self.attributes.push(attr);
        self
    }

    pub fn attribute(&self, name: &str) -> Option<&ContextAttribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    /// Replaces the attribute of the same name, or appends it.
    pub fn set_attribute(&mut self, attr: ContextAttribute) {
        match self.attributes.iter_mut().find(|a| a.name == attr.name) {
            Some(slot) => *slot = attr,
            None => self.attributes.push(attr),
        }
    }

    /// Keeps only the named attributes; an empty list keeps everything.
    pub fn project(&self, names: &[String]) -> ContextEntity {
        if names.is_empty() {
            return self.clone();
        }
        ContextEntity {
            id: self.id.clone(),
            entity_type: self.entity_type.clone(),
            attributes: self
                .attributes
                .iter()
                .filter(|a| names.contains(&a.name))
                .cloned()
                .collect(),
        }
    }

    pub fn locations(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.attributes.iter().filter_map(ContextAttribute::location)
    }

    /// Structural checks applied to every written entity.
    pub fn check(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("entity id must not be empty".into());
        }
        let mut names = HashSet::new();
        for attr in &self.attributes {
            if !names.insert(attr.name.as_str()) {
                return Err(format!("duplicate attribute {}", attr.name));
            }
            if !matches!(attr.value, Value::String(_) | Value::Number(_) | Value::Bool(_)) {
                return Err(format!("attribute {} must have a scalar value", attr.name));
            }
            let mut md_names = HashSet::new();
            for md in &attr.metadata {
                if !md_names.insert(md.name.as_str()) {
                    return Err(format!("duplicate metadata {} on {}", md.name, attr.name));
                }
            }
            if attr.metadata("location").is_some() && attr.location().is_none() {
                return Err(format!("location metadata on {} must be [lon, lat]", attr.name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EntityPattern {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id_pattern: Option<String>,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub entity_type: Option<String>,
}

impl EntityPattern {
    pub fn id(id: &str) -> Self {
        EntityPattern {
            id: Some(id.to_string()),
            ..Default::default()
        }
    }

    pub fn of_type(entity_type: &str) -> Self {
        EntityPattern {
            entity_type: Some(entity_type.to_string()),
            ..Default::default()
        }
    }

    pub fn id_pattern(pattern: &str) -> Self {
        EntityPattern {
            id_pattern: Some(pattern.to_string()),
            ..Default::default()
        }
    }

    pub fn with_type(mut self, entity_type: &str) -> Self {
        self.entity_type = Some(entity_type.to_string());
        self
    }
}

#[derive(Debug, Clone)]
pub enum IdMatch {
    Any,
    Exact(String),
    Pattern(Regex),
}

impl IdMatch {
    pub fn matches(&self, id: &str) -> bool {
        match self {
            IdMatch::Any => true,
            IdMatch::Exact(e) => e == id,
            IdMatch::Pattern(re) => re.is_match(id),
        }
    }
}

/// A pattern with its id regex compiled and its type expanded to all
/// subtypes.
#[derive(Debug, Clone)]
pub struct CompiledPattern {
    pub id: IdMatch,
    pub types: Option<BTreeSet<String>>,
}

impl CompiledPattern {
    pub fn matches(&self, entity: &ContextEntity) -> bool {
        self.id.matches(&entity.id) && self.types.as_ref().is_none_or(|t| t.contains(&entity.entity_type))
    }
}

/// Compiles the id part of a pattern. `idPattern` is anchored at both ends.
pub fn compile_id(p: &EntityPattern) -> Result<IdMatch, ApiError> {
    match (&p.id, &p.id_pattern) {
        (Some(_), Some(_)) => Err(ApiError::bad_request("a pattern takes id or idPattern, not both")),
        (Some(id), None) if id.is_empty() => Err(ApiError::bad_request("empty entity id")),
        (Some(id), None) => Ok(IdMatch::Exact(id.clone())),
        (None, Some(pat)) => Regex::new(&format!("^(?:{pat})$"))
            .map(IdMatch::Pattern)
            .map_err(|e| ApiError::bad_request(format!("invalid idPattern: {e}"))),
        (None, None) => Ok(IdMatch::Any),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundingBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl BoundingBox {
    pub fn contains(&self, (lon, lat): (f64, f64)) -> bool {
        self.min_lon <= lon && lon <= self.max_lon && self.min_lat <= lat && lat <= self.max_lat
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScopeRestriction {
    pub scope_type: String,
    pub value: BoundingBox,
}

impl ScopeRestriction {
    pub fn bbox(value: BoundingBox) -> Self {
        ScopeRestriction {
            scope_type: "bbox".into(),
            value,
        }
    }

    pub fn check(&self) -> Result<(), ApiError> {
        if self.scope_type != "bbox" {
            return Err(ApiError::bad_request(format!(
                "unsupported scopeType {:?}",
                self.scope_type
            )));
        }
        let b = &self.value;
        if !(b.min_lon <= b.max_lon && b.min_lat <= b.max_lat) {
            return Err(ApiError::bad_request("bbox minimum exceeds maximum"));
        }
        Ok(())
    }

    /// An entity is in scope when any attribute's location lies in the box.
    pub fn admits(&self, entity: &ContextEntity) -> bool {
        entity.locations().any(|p| self.value.contains(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum UpdateAction {
    Append,
    Update,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UpdateContextRequest {
    pub context_elements: Vec<ContextEntity>,
    pub update_action: UpdateAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StatusCode {
    pub code: u16,
    pub reason_phrase: String,
}

impl StatusCode {
    pub fn ok() -> Self {
        StatusCode {
            code: 200,
            reason_phrase: "OK".into(),
        }
    }

    pub fn new(code: u16, reason: impl Into<String>) -> Self {
        StatusCode {
            code,
            reason_phrase: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ContextElementResponse {
    pub context_element: ContextEntity,
    pub status_code: StatusCode,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ContextResponses {
    pub context_responses: Vec<ContextElementResponse>,
}

impl ContextResponses {
    pub fn entities(&self) -> impl Iterator<Item = &ContextEntity> {
        self.context_responses
            .iter()
            .filter(|r| r.status_code.code == 200)
            .map(|r| &r.context_element)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QueryContextRequest {
    pub entities: Vec<EntityPattern>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attributes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restriction: Option<ScopeRestriction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Registration {
    #[serde(default)]
    pub registration_id: String,
    pub entities: Vec<EntityPattern>,
    #[serde(default)]
    pub attributes: Vec<String>,
    pub providing_application: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiscoverRequest {
    pub entities: Vec<EntityPattern>,
    #[serde(default)]
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubscribeRequest {
    pub entities: Vec<EntityPattern>,
    #[serde(default)]
    pub attributes: Vec<String>,
    pub reference: String,
    #[serde(default)]
    pub throttling_millis: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NotifyContext {
    pub subscription_id: String,
    pub context_elements: Vec<ContextEntity>,
}

pub fn check_url(url: &str) -> Result<(), ApiError> {
    let parsed = url::Url::parse(url).map_err(|e| ApiError::bad_request(format!("invalid URL {url:?}: {e}")))?;
    if !matches!(parsed.scheme(), "http" | "https") || parsed.host().is_none() {
        return Err(ApiError::bad_request(format!("URL must be absolute http(s): {url:?}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn located(lon: f64, lat: f64) -> ContextEntity {
        ContextEntity::new("e", "T").with_attribute(
            ContextAttribute::new("t", json!(1)).with_metadata(ContextMetadata::new(
                "location",
                "point",
                json!([lon, lat]),
            )),
        )
    }

    #[test]
    fn entity_checks() {
        assert!(located(1.0, 2.0).check().is_ok());
        assert!(ContextEntity::new("", "T").check().is_err());
        let dup = ContextEntity::new("e", "T")
            .with_attribute(ContextAttribute::new("a", json!(1)))
            .with_attribute(ContextAttribute::new("a", json!(2)));
        assert!(dup.check().is_err());
        let nested = ContextEntity::new("e", "T").with_attribute(ContextAttribute::new("a", json!({"x": 1})));
        assert!(nested.check().is_err());
        let bad_loc = ContextEntity::new("e", "T").with_attribute(
            ContextAttribute::new("a", json!(1)).with_metadata(ContextMetadata::new("location", "point", json!("1,2"))),
        );
        assert!(bad_loc.check().is_err());
    }

    #[test]
    fn id_patterns_are_anchored() {
        let m = compile_id(&EntityPattern::id_pattern("room1[0-9]")).unwrap();
        assert!(m.matches("room12"));
        assert!(!m.matches("room123"));
        assert!(!m.matches("xroom12"));
        assert!(compile_id(&EntityPattern::id_pattern("(")).is_err());
        let both = EntityPattern {
            id: Some("a".into()),
            id_pattern: Some("a".into()),
            entity_type: None,
        };
        assert!(compile_id(&both).is_err());
    }

    #[test]
    fn bbox_scope() {
        let scope = ScopeRestriction::bbox(BoundingBox {
            min_lon: 0.0,
            min_lat: 0.0,
            max_lon: 10.0,
            max_lat: 10.0,
        });
        assert!(scope.check().is_ok());
        assert!(scope.admits(&located(10.0, 0.0)));
        assert!(!scope.admits(&located(10.5, 0.0)));
        assert!(!scope.admits(&ContextEntity::new("e", "T")));
        let inverted = ScopeRestriction::bbox(BoundingBox {
            min_lon: 5.0,
            min_lat: 0.0,
            max_lon: 1.0,
            max_lat: 1.0,
        });
        assert!(inverted.check().is_err());
    }

    #[test]
    fn wire_shape() {
        let req: UpdateContextRequest = serde_json::from_value(json!({
            "contextElements": [{"id": "room123", "type": "http://x/MeetingRoom",
                "attributes": [{"name": "occupancy", "value": 4}]}],
            "updateAction": "APPEND"
        }))
        .unwrap();
        assert_eq!(req.update_action, UpdateAction::Append);
        assert_eq!(req.context_elements[0].attribute("occupancy").unwrap().value, json!(4));
        let q = QueryContextRequest {
            entities: vec![EntityPattern::id("room123")],
            ..Default::default()
        };
        assert_eq!(
            serde_json::to_value(q).unwrap(),
            json!({"entities": [{"id": "room123"}]})
        );
    }
}
