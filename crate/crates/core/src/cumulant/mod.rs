//! Set partitions, joint cumulants, exact toral moments and the Leonov
//! statistic.

mod leonov;
mod partitions;
mod toral;

pub use leonov::{leonov_statistic, toral_cumulant_range, CumulantRange};
pub use partitions::{
    joint_cumulant, moments_from_cumulants, partitions, single_cumulant, MomentOracle, SetPartition,
    MAX_PARTITION_SIZE,
};
pub use toral::{exact_toral_moment, ToralMoments, MAX_TORAL_ORDER, MAX_TORAL_SUPPORT};
