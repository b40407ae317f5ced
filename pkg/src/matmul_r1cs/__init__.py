"""Rank-1 constraint synthesis for matrix multiplication and fixed-point nonlinearities."""

from .builder import PRIVATE, PUBLIC, CircuitBuilder, LinearCombination, Variable, Visibility, lc_eval
from .errors import (
    CircuitError,
    MalformedAssignment,
    ModulusMismatch,
    NotInvertible,
    OutOfRange,
    ParseError,
    ShapeError,
    SpecError,
    StateError,
    UnknownVariable,
    ValidationError,
    WitnessError,
)
from .field import (
    DEFAULT_MODULUS,
    MERSENNE_61,
    FieldElement,
    PrimeModulus,
    commit_then_challenge,
    fe_arith,
    fe_from_integer,
    fe_inverse,
    fe_pow,
    sample_challenge,
)
from .matmul import (
    Encoding,
    MatMulSpec,
    MappedPolynomial,
    SoundnessReport,
    check_prop1,
    eval_mapped,
    exhaustive_challenge_scan,
    generate_matmul_witness,
    map_w_row,
    map_x_column,
    map_y,
    negative_fixture_transforms,
    soundness_trial,
    synthesize_matmul,
)
from .nonlinear import (
    FixedPointParams,
    dequantize,
    quantize,
    synth_bit_decompose,
    synth_exp_neg,
    synth_geq,
    synth_gelu,
    synth_max,
    synth_rescale,
    synth_softmax,
)
from .r1cs import (
    Assignment,
    InstanceStats,
    R1CSInstance,
    SparseMatrix,
    deserialize_assignment,
    deserialize_instance,
    instance_stats,
    is_satisfied,
    serialize_assignment,
    serialize_instance,
)

__version__ = "0.1.0"
