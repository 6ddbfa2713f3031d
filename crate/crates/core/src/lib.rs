pub mod model;
pub mod query;
pub mod syntax;
pub mod analysis;
pub mod chase;
pub mod enumerate;
pub mod asp;
pub mod conditional;
pub mod rewrite;
