pub mod dynamics;
pub mod metrics;
pub mod noise;
pub mod steering;
pub mod verify;
pub mod experiments;
