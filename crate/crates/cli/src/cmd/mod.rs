pub mod benchmark;
pub mod bounds;
pub mod oracle;
pub mod run;
pub mod shots;
