pub mod accountant;
pub mod cli;
pub mod dataset;
pub mod divergence;
pub mod mechanism;
pub mod oracle;
pub mod symmat;
