//! Well-known IRIs.

pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const OWL: &str = "http://www.w3.org/2002/07/owl#";

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDF_PROPERTY: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#Property";
pub const RDFS_CLASS: &str = "http://www.w3.org/2000/01/rdf-schema#Class";
pub const RDFS_SUBCLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
pub const RDFS_DOMAIN: &str = "http://www.w3.org/2000/01/rdf-schema#domain";
pub const RDFS_RANGE: &str = "http://www.w3.org/2000/01/rdf-schema#range";
pub const RDFS_LITERAL: &str = "http://www.w3.org/2000/01/rdf-schema#Literal";
pub const OWL_CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
pub const OWL_FUNCTIONAL_PROPERTY: &str = "http://www.w3.org/2002/07/owl#FunctionalProperty";
pub const OWL_DISJOINT_WITH: &str = "http://www.w3.org/2002/07/owl#disjointWith";

/// Namespace for the mediation annotations read by the gateway.
pub const MED: &str = "http://wise-iot.example/mediation#";
pub const MED_DESCRIBES_ENTITY: &str = "http://wise-iot.example/mediation#describesEntity";
pub const MED_ENTITY_TYPE: &str = "http://wise-iot.example/mediation#entityType";
pub const MED_ATTRIBUTE_NAME: &str = "http://wise-iot.example/mediation#attributeName";
pub const MED_UNIT_OF_MEASURE: &str = "http://wise-iot.example/mediation#unitOfMeasure";
pub const MED_VALUE_PATH: &str = "http://wise-iot.example/mediation#valuePath";
pub const MED_CONVERSION: &str = "http://wise-iot.example/mediation#conversion";
pub const MED_LOCATION: &str = "http://wise-iot.example/mediation#location";

/// Namespace for context attributes in the agent's triple view.
pub const CTX: &str = "http://wise-iot.example/context#";
