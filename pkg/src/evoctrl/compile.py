"""Packs a Program into flat numpy tables consumed by the numba kernels.

The packed form is backend-neutral: instruction opcodes, operand slots,
literals and per-instruction FLOP costs as contiguous arrays, with function
boundaries as offsets (function 0 is the action function, then one entry per
cadf body).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ops import CALL_OPCODE, MAX_CONSTS, MAX_IDX, MAX_INPUTS, OPS_BY_CODE
from .program import Program


@dataclass
class ProgramTables:
    n_scalar: int
    n_vector: int
    n_matrix: int
    n_index: int
    vec_dim: int
    mat_dim: int
    n_cadfs: int
    ops: np.ndarray          # int32[n]
    callee: np.ndarray       # int32[n], -1 for non-calls
    ins: np.ndarray          # int32[n, MAX_INPUTS]
    outs: np.ndarray         # int32[n, 3]  (primary | call vector out | call index out)
    out_bank: np.ndarray     # int8[n], Bank value of the primary output, -1 for none
    consts: np.ndarray       # float64[n, MAX_CONSTS]
    lidx: np.ndarray         # int32[n, MAX_IDX]
    costs: np.ndarray        # int64[n]
    func_start: np.ndarray   # int32[n_cadfs + 2] offsets; func 0 = get_action
    init_s: np.ndarray
    init_v: np.ndarray
    init_m: np.ndarray

    def exec_args(self) -> tuple:
        """Argument tuple shared by the kernel entry points."""
        return (self.ops, self.callee, self.ins, self.outs, self.out_bank,
                self.consts, self.lidx, self.costs, self.func_start)


def pack_program(program: Program) -> ProgramTables:
    lay = program.layout
    bodies = [program.get_action] + [tuple(b) for b in program.cadfs]
    n = sum(len(b) for b in bodies)
    ops = np.zeros(n, dtype=np.int32)
    callee = np.full(n, -1, dtype=np.int32)
    ins = np.zeros((n, MAX_INPUTS), dtype=np.int32)
    outs = np.zeros((n, 3), dtype=np.int32)
    out_bank = np.full(n, -1, dtype=np.int8)
    consts = np.zeros((n, MAX_CONSTS), dtype=np.float64)
    lidx = np.zeros((n, MAX_IDX), dtype=np.int32)
    costs = np.zeros(n, dtype=np.int64)
    func_start = np.zeros(len(bodies) + 1, dtype=np.int32)

    pc = 0
    for f, body in enumerate(bodies):
        func_start[f] = pc
        for instr in body:
            ops[pc] = instr.op_id
            if instr.is_call:
                callee[pc] = instr.callee
                for j, addr in enumerate(instr.inputs):
                    ins[pc, j] = addr.slot
                for j, addr in enumerate(instr.outputs):
                    outs[pc, j] = addr.slot
                # call cost is the body cost, accounted when the body runs
            else:
                spec = OPS_BY_CODE[instr.op_id]
                for j, addr in enumerate(instr.inputs):
                    ins[pc, j] = addr.slot
                if instr.output is not None:
                    outs[pc, 0] = instr.output.slot
                    out_bank[pc] = int(instr.output.bank)
                for j, c in enumerate(instr.literal_consts):
                    consts[pc, j] = c
                for j, ix in enumerate(instr.literal_indices):
                    lidx[pc, j] = ix
                costs[pc] = spec.flops(lay.vec_dim, lay.mat_dim)
            pc += 1
    func_start[len(bodies)] = pc

    init_s, init_v, init_m = program.init_arrays()
    return ProgramTables(
        n_scalar=lay.n_scalar, n_vector=lay.n_vector, n_matrix=lay.n_matrix,
        n_index=lay.n_index, vec_dim=lay.vec_dim, mat_dim=lay.mat_dim,
        n_cadfs=len(program.cadfs),
        ops=ops, callee=callee, ins=ins, outs=outs, out_bank=out_bank,
        consts=consts, lidx=lidx, costs=costs, func_start=func_start,
        init_s=init_s, init_v=init_v, init_m=init_m,
    )


def worst_case_flops(program: Program) -> int:
    """Static per-step FLOP bound: every instruction executes, every call
    site runs its callee body."""
    lay = program.layout
    body_cost = []
    for body in program.cadfs:
        body_cost.append(sum(OPS_BY_CODE[i.op_id].flops(lay.vec_dim, lay.mat_dim) for i in body))
    total = 0
    for instr in program.get_action:
        if instr.is_call:
            total += body_cost[instr.callee] if 0 <= instr.callee < len(body_cost) else 0
        else:
            total += OPS_BY_CODE[instr.op_id].flops(lay.vec_dim, lay.mat_dim)
    return total
