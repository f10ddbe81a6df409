//! Semantic Mediation Gateway: discovers annotated oneM2M sources, selects a
//! transformation process per source and republishes converted items as
//! NGSI context, pushing to the broker or answering its pulls.

mod config;
mod convert;
mod gateway;
mod process;
mod reason;
mod service;

pub use config::{GatewayConfig, Mode};
pub use convert::{decimal_to_json, parse_decimal, ConversionError, Routine};
pub use gateway::{
    convert_item, start, Gateway, GatewayError, GatewayHandle, GatewayStats, ItemError, TransformationInstance,
};
pub use process::{default_library, load_library, select_process, Process, ProcessError, ProcessSpec};
pub use reason::{entity_id_for, entity_iri_for, resolve_targets, ReasoningError, ResolvedTarget, ENTITY_URN_PREFIX};
pub use service::router;
