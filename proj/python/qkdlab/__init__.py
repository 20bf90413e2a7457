"""Seeded simulation laboratory for quantum key distribution, eavesdropper
models, quantum bit commitment and the classical cipher companions.

The heavy lifting lives in the C++ extension module; this package re-exports
its public surface.
"""

from qkdlab._core import (  # noqa: F401
    Basis,
    BobHolding,
    ChannelConfig,
    CommitRecord,
    Commitment,
    EveLog,
    EveStrategy,
    InterceptPolicy,
    KeyExhausted,
    KeyMaterial,
    NegotiationError,
    NotSemiprime,
    Opening,
    Polarization,
    ProtocolConfig,
    ProtocolViolation,
    Pulse,
    PureState,
    Rng,
    SessionResult,
    SessionStats,
    SourceConfig,
    TransportError,
    TwoQubitState,
    VerifyResult,
    basis_of,
    binary_entropy,
    bit_of,
    bob_distinguish,
    caesar,
    change_basis,
    cheat_classical,
    cheat_epr_commit,
    cheat_epr_open,
    check_abort,
    chsh_value,
    commit,
    emit,
    estimate_qber,
    eve_apply,
    eve_finalize,
    fingerprint,
    key_to_hex,
    measure,
    measure_angle,
    measure_pair,
    measure_qubit,
    measure_via_ancilla,
    mod_pow,
    open_honest,
    otp_apply,
    pa_output_len,
    polarization_from,
    prepare,
    privacy_amplify,
    reconcile,
    reduced_density,
    rsa_crack,
    rsa_decrypt,
    rsa_encrypt,
    rsa_keygen,
    run_b92,
    run_bb84,
    run_epr,
    run_protocol,
    search_cost,
    sift,
    singlet,
    state_of,
    tensor,
    transmit,
    two_time_pad,
    verify,
    verify_equal,
)

__version__ = "0.1.0"
