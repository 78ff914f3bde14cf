//! Default seed lists. Every random choice in the crate is driven by one of
//! these (or a caller-supplied replacement).

/// Stratified-partitioning search.
pub const PARTITIONING: [u64; 10] = [
    2746317213, 478163327, 107420369, 3184935163, 1181241943, 1051802512, 958682846, 599310825, 3163119785,
    440213415,
];

/// Subsampling experiments.
pub const DOWNSAMPLING: [u64; 10] = [69, 1, 40, 7, 29, 48, 78, 34, 67, 84];

/// Repeated inference runs.
pub const EVALUATION: [u64; 5] = [37, 15, 96, 2, 28];
