pub mod bounds;
pub mod compile;
pub mod sweep;
pub mod verify;
