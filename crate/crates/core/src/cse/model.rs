use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::{json, Map, Value};

use crate::rdf::{serialize_ntriples, Graph};

/// Resource types with their oneM2M `ty` codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResourceType {
    Ae,
    Container,
    ContentInstance,
    CseBase,
    Group,
    Subscription,
    SemanticDescriptor,
}

impl ResourceType {
    pub fn code(self) -> u16 {
        match self {
            ResourceType::Ae => 2,
            ResourceType::Container => 3,
            ResourceType::ContentInstance => 4,
            ResourceType::CseBase => 5,
            ResourceType::Group => 9,
            ResourceType::Subscription => 23,
            ResourceType::SemanticDescriptor => 24,
        }
    }

    pub fn from_code(code: u16) -> Option<Self> {
        Some(match code {
            2 => ResourceType::Ae,
            3 => ResourceType::Container,
            4 => ResourceType::ContentInstance,
            5 => ResourceType::CseBase,
            9 => ResourceType::Group,
            23 => ResourceType::Subscription,
            24 => ResourceType::SemanticDescriptor,
            _ => return None,
        })
    }

    pub fn id_prefix(self) -> &'static str {
        match self {
            ResourceType::Ae => "ae",
            ResourceType::Container => "cnt",
            ResourceType::ContentInstance => "cin",
            ResourceType::CseBase => "cb",
            ResourceType::Group => "grp",
            ResourceType::Subscription => "sub",
            ResourceType::SemanticDescriptor => "sd",
        }
    }

    /// Parent/child legality table.
    pub fn may_contain(self, child: ResourceType) -> bool {
        use ResourceType::*;
        match child {
            CseBase => false,
            Ae => self == CseBase,
            Container => matches!(self, CseBase | Ae | Container),
            ContentInstance => self == Container,
            SemanticDescriptor => matches!(self, Ae | Container | Group | ContentInstance),
            Subscription => matches!(self, CseBase | Ae | Container),
            Group => matches!(self, CseBase | Ae),
        }
    }
}

impl fmt::Display for ResourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResourceType::Ae => "AE",
            ResourceType::Container => "container",
            ResourceType::ContentInstance => "contentInstance",
            ResourceType::CseBase => "CSEBase",
            ResourceType::Group => "group",
            ResourceType::Subscription => "subscription",
            ResourceType::SemanticDescriptor => "semanticDescriptor",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    None,
    ContentInstance { content: Value, content_info: String },
    SemanticDescriptor { descriptor: Graph },
    Subscription { notification_uri: String },
    Group { member_ids: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resource {
    pub id: String,
    pub name: String,
    pub ty: ResourceType,
    pub parent_id: Option<String>,
    pub path: String,
    pub creation_time: DateTime<Utc>,
    pub labels: Vec<String>,
    pub payload: Payload,
}

pub fn format_time(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl Resource {
    /// `{"rn","ri","ty","ct","lbl","pi"}` plus `con`/`cnf`, `dsp`, `nu` or
    /// `mid` depending on the type.
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("rn".into(), json!(self.name));
        obj.insert("ri".into(), json!(self.id));
        obj.insert("ty".into(), json!(self.ty.code()));
        obj.insert("ct".into(), json!(format_time(&self.creation_time)));
        obj.insert("lbl".into(), json!(self.labels));
        obj.insert("pi".into(), json!(self.parent_id));
        match &self.payload {
            Payload::None => {}
            Payload::ContentInstance { content, content_info } => {
                obj.insert("con".into(), content.clone());
                obj.insert("cnf".into(), json!(content_info));
            }
            Payload::SemanticDescriptor { descriptor } => {
                obj.insert("dsp".into(), json!(serialize_ntriples(descriptor)));
            }
            Payload::Subscription { notification_uri } => {
                obj.insert("nu".into(), json!(notification_uri));
            }
            Payload::Group { member_ids } => {
                obj.insert("mid".into(), json!(member_ids));
            }
        }
        Value::Object(obj)
    }

    pub fn descriptor(&self) -> Option<&Graph> {
        match &self.payload {
            Payload::SemanticDescriptor { descriptor } => Some(descriptor),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_round_trip() {
        for ty in [
            ResourceType::Ae,
            ResourceType::Container,
            ResourceType::ContentInstance,
            ResourceType::CseBase,
            ResourceType::Group,
            ResourceType::Subscription,
            ResourceType::SemanticDescriptor,
        ] {
            assert_eq!(ResourceType::from_code(ty.code()), Some(ty));
        }
        assert_eq!(ResourceType::from_code(99), None);
    }

    #[test]
    fn legality() {
        use ResourceType::*;
        assert!(CseBase.may_contain(Ae));
        assert!(!Ae.may_contain(ContentInstance));
        assert!(Container.may_contain(ContentInstance));
        assert!(ContentInstance.may_contain(SemanticDescriptor));
        assert!(!ContentInstance.may_contain(Subscription));
        assert!(!Container.may_contain(Group));
        assert!(!Ae.may_contain(Ae));
    }
}
