pub mod diffusion;
pub mod error;
pub mod graph;
pub mod qnet;
pub mod rng;
pub mod synth;
pub mod agent;
pub mod baselines;
pub mod experiments;
