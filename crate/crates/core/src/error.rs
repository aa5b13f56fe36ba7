use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("sequence is not strictly ascending: {0} is followed by {1}")]
    NotAscending(u64, u64),
    #[error("0 is not a valid generator")]
    ZeroGenerator,
    #[error("invalid horizon (bound {bound}, min_tail {min_tail}); both must be at least 1")]
    BadHorizon { bound: u64, min_tail: usize },
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("term `{term}` refers to `{target}`, which is not defined before it")]
    ForwardReference { term: String, target: String },
    #[error("unknown term `{0}`")]
    UnknownTerm(String),
    #[error("term `{0}` is defined twice")]
    DuplicateTerm(String),
    #[error("cyclic reference between terms: {0}")]
    CyclicReference(String),
    #[error("oracle argument inside term `{0}` must be a term application")]
    OracleArgNotTerm(String),

    #[error("no decision available for oracle argument {term}({param})")]
    UnresolvedOracle { term: String, param: u64 },
    #[error("filter leaves oracle argument {term}({param}) undecided")]
    UndecidedOracle { term: String, param: u64 },
    #[error("goal set is undecided by the final filter; add it to the program as a final term")]
    UndecidedGoal,

    #[error("no solution exists within the horizon")]
    NotFound,
    #[error("search budget of {nodes} nodes exhausted")]
    BudgetExhausted { nodes: u64 },
    #[error("coloring is undefined at reachable sum {0}")]
    ColoringPartial(u64),
    #[error("search space too large for exhaustive enumeration ({0} candidate blocks)")]
    SpaceTooLarge(u64),

    #[error("filter refinement failed at stage {stage}: {reason}")]
    RefinementFailed { stage: i64, reason: String },
    #[error("color class {0} is not decided In by the filter")]
    ClassNotDecided(usize),
    #[error("no admissible element for position {0} below the horizon")]
    EmptyIntersection(usize),
}
