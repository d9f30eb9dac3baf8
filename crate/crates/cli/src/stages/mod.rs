pub mod corpus;
pub mod llm;
pub mod report;
pub mod review;
pub mod scoring;
