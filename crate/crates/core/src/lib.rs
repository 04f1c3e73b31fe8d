//! Floor-plan navigation toolkit.
//!
//! * [`floorplan`]: structured maps, connectivity graphs, labeling and map doubling.
//! * [`grammar`]: the ApproachDoor/OpenDoor/GoThrough(/GoTo) plan grammar, parsers and the validator.
//! * [`sim`]: occupancy-grid rasterization, A*, and plan execution.
//! * [`vlm`]: prompt construction, HTTP and mock backends, transcript cache.
//! * [`bench`]: task sampling, experiment runs, success rates and hypothesis tests.

pub mod bench;
pub mod fixtures;
pub mod floorplan;
pub mod grammar;
pub mod ids;
pub mod sim;
pub mod stats;
pub mod vlm;
