"""Instruction-set table for the register-machine programs.

Each operation reads typed operands (scalar / vector / matrix / index banks),
writes exactly one output operand, and may carry embedded literal constants
and literal component indices. The table below is the single source of truth
for operand signatures, literal arities and the per-op FLOP cost class used
by the complexity accounting.

Cost classes (resolved against the memory layout's vec_dim / mat_dim):
    0       assignments, copies, broadcasts, extractions, zero-sets
    1       scalar unary/binary ops (incl. the uniform draw)
    2       fused multiply-adds
    V       component-wise vector ops
    2V      vector reductions (dot, norm, mean, std); partial dot worst case
    M       component-wise matrix ops (M = mat_dim^2)
    2M      matrix reductions and matrix-vector products
    2M3     matrix-matrix product (2 * mat_dim^3)
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum


class Bank(IntEnum):
    SCALAR = 0
    VECTOR = 1
    MATRIX = 2
    INDEX = 3


BANK_LETTER = {Bank.SCALAR: "s", Bank.VECTOR: "v", Bank.MATRIX: "m", Bank.INDEX: "i"}
LETTER_BANK = {v: k for k, v in BANK_LETTER.items()}

# cost classes
C0, C1, C2, CV, C2V, CM, C2M, C2M3 = "0", "1", "2", "V", "2V", "M", "2M", "2M3"


@dataclass(frozen=True)
class OpSpec:
    opcode: int
    name: str
    in_banks: tuple            # Bank of each input address, in order
    out_bank: 'Bank | None'    # None only for the no-op
    n_consts: int = 0
    idx_dims: tuple = ()       # per literal index: "v" (vec_dim) or "m" (mat_dim)
    cost: str = C1

    @property
    def n_idx(self) -> int:
        return len(self.idx_dims)

    def flops(self, vec_dim: int, mat_dim: int) -> int:
        m2 = mat_dim * mat_dim
        return {
            C0: 0, C1: 1, C2: 2,
            CV: vec_dim, C2V: 2 * vec_dim,
            CM: m2, C2M: 2 * m2, C2M3: 2 * mat_dim * m2,
        }[self.cost]


S, V, M, I = Bank.SCALAR, Bank.VECTOR, Bank.MATRIX, Bank.INDEX

OP_TABLE = [
    OpSpec(1, "OP1", (), None, cost=C0),                       # no_op
    OpSpec(2, "OP2", (S, S), S),                               # s+s
    OpSpec(3, "OP3", (S, S), S),                               # s-s
    OpSpec(4, "OP4", (S, S), S),                               # s*s
    OpSpec(5, "OP5", (S, S), S),                               # s/s
    OpSpec(6, "OP6", (S,), S),                                 # abs
    OpSpec(7, "OP7", (S,), S),                                 # 1/s
    OpSpec(8, "OP8", (S,), S),                                 # sin
    OpSpec(9, "OP9", (S,), S),                                 # cos
    OpSpec(10, "OP10", (S,), S),                               # tan
    OpSpec(11, "OP11", (S,), S),                               # arcsin
    OpSpec(12, "OP12", (S,), S),                               # arccos
    OpSpec(13, "OP13", (S,), S),                               # arctan
    OpSpec(14, "OP14", (S,), S),                               # exp
    OpSpec(15, "OP15", (S,), S),                               # log
    OpSpec(16, "OP16", (S,), S),                               # step indicator
    OpSpec(17, "OP17", (V,), V, cost=CV),                      # vector step indicator
    OpSpec(18, "OP18", (M,), M, cost=CM),                      # matrix step indicator
    OpSpec(19, "OP19", (S, V), V, cost=CV),                    # s*v
    OpSpec(20, "OP20", (S,), V, cost=C0),                      # broadcast s -> v
    OpSpec(21, "OP21", (V,), V, cost=CV),                      # 1/v
    OpSpec(22, "OP22", (V,), S, cost=C2V),                     # norm(v)
    OpSpec(23, "OP23", (V,), V, cost=CV),                      # abs(v)
    OpSpec(24, "OP24", (V, V), V, cost=CV),                    # v+v
    OpSpec(25, "OP25", (V, V), V, cost=CV),                    # v-v
    OpSpec(26, "OP26", (V, V), V, cost=CV),                    # v*v
    OpSpec(27, "OP27", (V, V), V, cost=CV),                    # v/v
    OpSpec(28, "OP28", (V, V), S, cost=C2V),                   # dot
    OpSpec(29, "OP29", (V, V), M, cost=CM),                    # outer
    OpSpec(30, "OP30", (S, M), M, cost=CM),                    # s*M
    OpSpec(31, "OP31", (M,), M, cost=CM),                      # 1/M
    OpSpec(32, "OP32", (M, V), V, cost=C2M),                   # M@v
    OpSpec(33, "OP33", (V,), M, cost=C0),                      # broadcast rows
    OpSpec(34, "OP34", (V,), M, cost=C0),                      # broadcast columns
    OpSpec(35, "OP35", (M,), S, cost=C2M),                     # norm(M)
    OpSpec(36, "OP36", (M,), V, cost=C2M),                     # row norms
    OpSpec(37, "OP37", (M,), V, cost=C2M),                     # column norms
    OpSpec(38, "OP38", (M,), M, cost=C0),                      # transpose
    OpSpec(39, "OP39", (M,), M, cost=CM),                      # abs(M)
    OpSpec(40, "OP40", (M, M), M, cost=CM),                    # M+M
    OpSpec(41, "OP41", (M, M), M, cost=CM),                    # M-M
    OpSpec(42, "OP42", (M, M), M, cost=CM),                    # M*M elementwise
    OpSpec(43, "OP43", (M, M), M, cost=CM),                    # M/M elementwise
    OpSpec(44, "OP44", (M, M), M, cost=C2M3),                  # matmul
    OpSpec(45, "OP45", (S, S), S),                             # min
    OpSpec(46, "OP46", (V, V), V, cost=CV),                    # min elementwise
    OpSpec(47, "OP47", (M, M), M, cost=CM),                    # min elementwise
    OpSpec(48, "OP48", (S, S), S),                             # max
    OpSpec(49, "OP49", (V, V), V, cost=CV),                    # max elementwise
    OpSpec(50, "OP50", (M, M), M, cost=CM),                    # max elementwise
    OpSpec(51, "OP51", (V,), S, cost=C2V),                     # mean(v)
    OpSpec(52, "OP52", (M,), S, cost=C2M),                     # mean(M)
    OpSpec(53, "OP53", (M,), V, cost=C2M),                     # row means
    OpSpec(54, "OP54", (M,), V, cost=C2M),                     # row stds
    OpSpec(55, "OP55", (V,), S, cost=C2V),                     # std(v)
    OpSpec(56, "OP56", (M,), S, cost=C2M),                     # std(M)
    OpSpec(57, "OP57", (), S, n_consts=1, cost=C0),            # s = const
    OpSpec(58, "OP58", (), V, n_consts=1, idx_dims=("v",), cost=C0),   # v[i] = const
    OpSpec(59, "OP59", (), M, n_consts=1, idx_dims=("m", "m"), cost=C0),  # M[i,j] = const
    OpSpec(60, "OP60", (), S, n_consts=2),                     # s = uniform(a, b)
    OpSpec(61, "OP61", (M,), M, cost=C0),                      # copy M
    OpSpec(62, "OP62", (V,), V, cost=C0),                      # copy v
    OpSpec(63, "OP63", (I,), I, cost=C0),                      # copy i
    OpSpec(64, "OP64", (V, V), V, cost=CV),                    # power elementwise
    OpSpec(65, "OP65", (M, I), V, cost=C0),                    # column extract
    OpSpec(66, "OP66", (M, I), V, cost=C0),                    # row extract
    OpSpec(67, "OP67", (M, I, I), S, cost=C0),                 # element extract
    OpSpec(68, "OP68", (V, I), S, cost=C0),                    # component extract
    OpSpec(69, "OP69", (), V, cost=C0),                        # v = 0
    OpSpec(70, "OP70", (), S, cost=C0),                        # s = 0
    OpSpec(71, "OP71", (), I, cost=C0),                        # i = 0
    OpSpec(72, "OP72", (V,), V, cost=CV),                      # sqrt elementwise
    OpSpec(73, "OP73", (V,), V, cost=CV),                      # square elementwise
    OpSpec(74, "OP74", (V,), S, cost=CV),                      # sum
    OpSpec(75, "OP75", (S,), S),                               # sqrt
    OpSpec(76, "OP76", (S, S, S), S, cost=C2),                 # fused s*s+s
    OpSpec(77, "OP77", (S,), S, n_consts=1),                   # s * const
    OpSpec(78, "OP78", (V,), M, idx_dims=("m",), cost=C0),     # set row
    OpSpec(79, "OP79", (V,), M, idx_dims=("m",), cost=C0),     # set column
    OpSpec(80, "OP80", (M,), I, cost=C0),                      # row count - 1
    OpSpec(81, "OP81", (M,), I, cost=C0),                      # column count - 1
    OpSpec(82, "OP82", (V,), I, cost=C0),                      # length - 1
    OpSpec(83, "OP83", (V, V, S, I), S, cost=C2),              # v[i]*w[i] + s
    OpSpec(84, "OP84", (V, V, I), S, cost=C2V),                # prefix dot
]

# Subroutine call pseudo-op: condition on the first two scalar arguments,
# fixed 8-input (4 scalars, 2 vectors, 2 indices) / 3-output (s, v, i) form.
CALL_OPCODE = 85
CALL_NAME = "CALL_CADF"
CALL_IN_BANKS = (S, S, S, S, V, V, I, I)
CALL_OUT_BANKS = (S, V, I)

OPS_BY_CODE = {spec.opcode: spec for spec in OP_TABLE}
OPS_BY_NAME = {spec.name: spec for spec in OP_TABLE}

ALL_OPCODES = tuple(spec.opcode for spec in OP_TABLE)

# Maximum operand arities across the table (the call pseudo-op sets the input
# bound); used by the packed kernel encoding.
MAX_INPUTS = 8
MAX_CONSTS = 2
MAX_IDX = 2


def op_name(opcode: int) -> str:
    if opcode == CALL_OPCODE:
        return CALL_NAME
    return OPS_BY_CODE[opcode].name
