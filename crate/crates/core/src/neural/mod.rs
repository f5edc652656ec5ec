//! Recurrent network, its unrolled training loss, and supporting pieces.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod network;
pub mod unroll;

pub use adam::{adam_step, cosine_lr, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta};
pub use gradcheck::{grad_check, GradCheckReport};
pub use network::{Block, Dims, HeadKind, NetworkParams, RecurrentState};
pub use unroll::{backprop, frozen_objective, unroll_and_loss, UnrollTrace};
