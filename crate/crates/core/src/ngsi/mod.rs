//! NGSI-9/10 context broker: entities with attributes and metadata,
//! provider registrations, typed queries with scopes, and subscriptions.

mod broker;
mod client;
mod model;
mod service;

pub use broker::{Broker, BrokerStats, PULL_HEADER};
pub use client::NgsiClient;
pub use model::{
    check_url, compile_id, BoundingBox, CompiledPattern, ContextAttribute, ContextElementResponse, ContextEntity,
    ContextMetadata, ContextResponses, DiscoverRequest, EntityPattern, IdMatch, NotifyContext, QueryContextRequest,
    Registration, ScopeRestriction, StatusCode, SubscribeRequest, UpdateAction, UpdateContextRequest,
};
pub use service::{responses, router};
