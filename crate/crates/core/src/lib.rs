pub mod contract;
pub mod mpc;
pub mod payment;
pub mod ro;
pub mod traders;
pub mod sim;
