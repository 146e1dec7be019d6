"""Renormalized multiple q-zeta values at integer arguments."""

from .constants import (
    QContext,
    euler_gamma,
    m_of_q,
    q_bracket,
    zeta_q_convergent,
    zeta_q_nonpos,
)
from .errors import (
    DomainError,
    InvalidShift,
    NonConvergentSum,
    QuadratureFailure,
    QZetaError,
    ResidualPole,
    TruncationOverflow,
)
from .indexalg import IndexedWord, WordSum, pair, parse_word, partitions, shift_expand, stuffle
from .regularize import (
    ZCache,
    z_depth1,
    z_nonpos,
    z_nonpos_alt,
    z_nonpos_auto,
    z_numeric,
    z_positive_const,
)
from .renorm import (
    RenormValue,
    ShiftVector,
    birkhoff_plus,
    depth2_closed_form,
    q_limit_probe,
    shifted_directions,
    verify_stuffle,
    zeta_directional,
    zeta_renorm,
    zeta_renorm_shifted,
)
from .series import AffineR, DeltaSeries, EpsSeries, TPoly

__all__ = [
    "AffineR", "DeltaSeries", "DomainError", "EpsSeries", "IndexedWord", "InvalidShift",
    "NonConvergentSum", "QContext", "QZetaError", "QuadratureFailure", "RenormValue",
    "ResidualPole", "ShiftVector", "TPoly", "TruncationOverflow", "WordSum", "ZCache",
    "birkhoff_plus", "depth2_closed_form", "euler_gamma", "m_of_q", "pair", "parse_word",
    "partitions", "q_bracket", "q_limit_probe", "shift_expand", "shifted_directions",
    "stuffle", "verify_stuffle", "z_depth1", "z_nonpos", "z_nonpos_alt", "z_nonpos_auto", "z_numeric",
    "z_positive_const", "zeta_directional", "zeta_q_convergent", "zeta_q_nonpos",
    "zeta_renorm", "zeta_renorm_shifted",
]
