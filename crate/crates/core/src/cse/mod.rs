//! oneM2M-style Common Service Entity: a resource tree with CRUDN,
//! subscriptions and semantic discovery.

mod client;
mod model;
mod notify;
mod service;
mod tree;

pub use client::{CseClient, CseClientError};
pub use model::{format_time, Payload, Resource, ResourceType};
pub use notify::{CaptureSink, HttpNotifier, NotificationSink};
pub use service::{discovery_filter, router, TYPE_HEADER};
pub use tree::{CreateRequest, Cse, CseError, DiscoveryFilter, UpdateRequest, BASE_NAME};
