//! Controlled-English steady heat-conduction problems: parse a statement into
//! a PDE template, assemble components, and solve in closed form or with
//! adaptive finite elements.

pub mod component;
pub mod corpus;
pub mod expr;
pub mod fem;
pub mod figures;
pub mod genwall;
pub mod geometry;
pub mod parser;
pub mod quasi1d;
pub mod report;
pub mod template;
pub mod text;
