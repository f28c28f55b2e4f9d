"""Instruction set model: RV32I + M + A + a double-precision D subset, the
``frep`` sequencer instruction and the CSRs that control stream registers.

Instructions are kept decoded (no binary encoding). ``classify`` derives the
issue class and the accounting flags used by the timing model and the
performance counters.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field

XREG_NAMES = (
    "zero ra sp gp tp t0 t1 t2 s0 s1 a0 a1 a2 a3 a4 a5 a6 a7 "
    "s2 s3 s4 s5 s6 s7 s8 s9 s10 s11 t3 t4 t5 t6"
).split()
FREG_NAMES = (
    "ft0 ft1 ft2 ft3 ft4 ft5 ft6 ft7 fs0 fs1 fa0 fa1 fa2 fa3 fa4 fa5 "
    "fa6 fa7 fs2 fs3 fs4 fs5 fs6 fs7 fs8 fs9 fs10 fs11 ft8 ft9 ft10 ft11"
).split()

XREGS: dict[str, int] = {name: i for i, name in enumerate(XREG_NAMES)}
XREGS.update({f"x{i}": i for i in range(32)})
XREGS["fp"] = 8
FREGS: dict[str, int] = {name: i for i, name in enumerate(FREG_NAMES)}
FREGS.update({f"f{i}": i for i in range(32)})

# CSR numbers. ``ssr`` enables stream semantics on ft0/ft1; ``region`` is the
# measurement marker (write 1 = region start, 0 = region end).
CSR_SSR = 0x7C0
CSR_REGION = 0x7C4
CSR_NAMES = {
    "ssr": CSR_SSR,
    "region": CSR_REGION,
    "mcycle": 0xB00,
    "minstret": 0xB02,
    "cycle": 0xC00,
    "instret": 0xC02,
    "mhartid": 0xF14,
}
CSR_BY_NUMBER = {v: k for k, v in CSR_NAMES.items()}

# Stagger mask bit positions.
STAGGER_RS1 = 0b0001
STAGGER_RS2 = 0b0010
STAGGER_RS3 = 0b0100
STAGGER_RD = 0b1000

FREP_MAX_INST = 15
FREP_MAX_STAGGER = 7
FREP_BUFFER_DEPTH = 16


class IssueClass(enum.Enum):
    LOCAL = "local-integer"
    MULDIV = "offloaded-muldiv"
    FPSS = "offloaded-fpss"


class UnsupportedInstruction(ValueError):
    """Raised by :func:`classify` for instructions the timing model rejects."""


@dataclass(frozen=True, slots=True)
class FrepFields:
    is_outer: bool
    max_inst: int
    max_rep_reg: int
    stagger_mask: int = 0
    stagger_count: int = 0

    def __post_init__(self):
        if not 0 <= self.max_inst <= FREP_MAX_INST:
            raise ValueError(f"frep max_inst {self.max_inst} outside [0, {FREP_MAX_INST}]")
        if not 0 <= self.stagger_count <= FREP_MAX_STAGGER:
            raise ValueError(f"frep stagger_count {self.stagger_count} outside [0, {FREP_MAX_STAGGER}]")
        if not 0 <= self.stagger_mask <= 0b1111:
            raise ValueError(f"frep stagger_mask {self.stagger_mask:#b} wider than 4 bits")
        if not 0 <= self.max_rep_reg < 32:
            raise ValueError(f"frep register x{self.max_rep_reg} out of range")


@dataclass(frozen=True, slots=True)
class Instruction:
    """A decoded instruction.

    Register fields hold indices; whether an index names an integer or a
    floating-point register follows from the mnemonic's operand format. For
    CSR instructions ``imm`` is the CSR number and the 5-bit immediate of the
    ``*i`` forms lives in ``rs1``. Branch and ``jal`` immediates are byte
    offsets relative to the instruction.
    """

    mnemonic: str
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    rs3: int = 0
    imm: int = 0
    frep: FrepFields | None = None

    @property
    def spec(self) -> "OpSpec":
        return OPS[self.mnemonic]

    @property
    def meta(self) -> "InstrMeta":
        return classify(self)


@dataclass(frozen=True, slots=True)
class OpSpec:
    fmt: tuple[str, ...]
    kind: str
    fpclass: str | None = None
    single: bool = False


@dataclass(frozen=True, slots=True)
class InstrMeta:
    kind: str
    issue_class: IssueClass
    writes_int_rf: bool
    writes_fp_rf: bool
    is_fp_arith: bool
    is_fp_mem: bool
    is_offloaded: bool
    is_sequenceable: bool
    fpclass: str | None = None
    int_srcs: tuple[int, ...] = field(default=())


OPS: dict[str, OpSpec] = {}


def _def(names: str, fmt: str, kind: str, fpclass: str | None = None, single: bool = False):
    for name in names.split():
        OPS[name] = OpSpec(tuple(fmt.split()), kind, fpclass, single)


_def("add sub sll slt sltu xor srl sra or and", "rd rs1 rs2", "alu")
_def("addi slti sltiu xori ori andi", "rd rs1 imm", "alu")
_def("slli srli srai", "rd rs1 shamt", "alu")
_def("lui auipc", "rd uimm20", "alu")
_def("mul mulh mulhsu mulhu div divu rem remu", "rd rs1 rs2", "muldiv")
_def("beq bne blt bge bltu bgeu", "rs1 rs2 target", "branch")
_def("jal", "rd target", "jal")
_def("jalr", "rd mem", "jalr")
_def("lb lh lw lbu lhu", "rd mem", "load")
_def("sb sh sw", "rs2 mem", "store")
_def("lr.w", "rd amo", "amo")
_def("sc.w amoswap.w amoadd.w amoand.w amoor.w amoxor.w amomin.w amomax.w amominu.w amomaxu.w",
     "rd rs2 amo", "amo")
_def("csrrw csrrs csrrc", "rd csr rs1", "csr")
_def("csrrwi csrrsi csrrci", "rd csr zimm", "csr")
_def("fence ecall ebreak wfi", "", "system")

_def("fld", "frd mem", "fp_load")
_def("fsd", "frs2 mem", "fp_store")
_def("fmadd.d fmsub.d fnmsub.d fnmadd.d", "frd frs1 frs2 frs3", "fp_arith", "fma")
_def("fadd.d fsub.d fmul.d", "frd frs1 frs2", "fp_arith", "fma")
_def("fsgnj.d fsgnjn.d fsgnjx.d", "frd frs1 frs2", "fp_arith", "sgnj")
_def("fmin.d fmax.d", "frd frs1 frs2", "fp_arith", "minmax")
_def("feq.d flt.d fle.d", "rd frs1 frs2", "fp_to_int", "cmp")
_def("fclass.d", "rd frs1", "fp_to_int", "cmp")
_def("fcvt.w.d fcvt.wu.d", "rd frs1", "fp_to_int", "cast")
_def("fcvt.d.w fcvt.d.wu", "frd rs1", "fp_from_int", "cast")
# RV32 has no 64-bit integer moves; these move the low word (see README).
_def("fmv.x.d", "rd frs1", "fp_to_int", "move")
_def("fmv.d.x", "frd rs1", "fp_from_int", "move")
_def("frep.o frep.i", "frep", "frep")

# Single precision: parsed, rejected by classify.
_def("flw", "frd mem", "fp_load", single=True)
_def("fsw", "frs2 mem", "fp_store", single=True)
_def("fmadd.s fmsub.s fnmsub.s fnmadd.s", "frd frs1 frs2 frs3", "fp_arith", "fma", single=True)
_def("fadd.s fsub.s fmul.s fsgnj.s fsgnjn.s fsgnjx.s fmin.s fmax.s", "frd frs1 frs2", "fp_arith",
     "fma", single=True)
_def("feq.s flt.s fle.s", "rd frs1 frs2", "fp_to_int", "cmp", single=True)
_def("fcvt.w.s fcvt.wu.s fmv.x.w", "rd frs1", "fp_to_int", "cast", single=True)
_def("fcvt.s.w fcvt.s.wu fmv.w.x", "frd rs1", "fp_from_int", "cast", single=True)
_def("fcvt.s.d fcvt.d.s", "frd frs1", "fp_arith", "cast", single=True)

# Recognised but unsupported by the FPU model.
REJECTED = {"fdiv.d", "fsqrt.d", "fdiv.s", "fsqrt.s"}

FMA_FAMILY = frozenset({"fmadd.d", "fmsub.d", "fnmsub.d", "fnmadd.d"})
FP_MNEMONICS = frozenset(m for m, s in OPS.items() if s.kind.startswith("fp") or s.kind == "frep")


def fp_sources(inst: Instruction) -> tuple[int, ...]:
    """FP register sources in operand-slot order (rs1, rs2, rs3)."""
    out = []
    for tok, reg in (("frs1", inst.rs1), ("frs2", inst.rs2), ("frs3", inst.rs3)):
        if tok in OPS[inst.mnemonic].fmt:
            out.append(reg)
    return tuple(out)


def int_sources(inst: Instruction) -> tuple[int, ...]:
    spec = OPS[inst.mnemonic]
    srcs = []
    fmt = spec.fmt
    if "rs1" in fmt or "mem" in fmt or "amo" in fmt:
        srcs.append(inst.rs1)
    if "rs2" in fmt:
        srcs.append(inst.rs2)
    if spec.kind == "frep":
        srcs.append(inst.rs1)
    return tuple(r for r in srcs if r != 0)


@functools.lru_cache(maxsize=None)
def classify(inst: Instruction) -> InstrMeta:
    """Derive issue class and accounting flags for a decoded instruction."""
    spec = OPS.get(inst.mnemonic)
    if spec is None:
        raise UnsupportedInstruction(f"unknown mnemonic {inst.mnemonic!r}")
    if spec.single:
        raise UnsupportedInstruction(
            f"{inst.mnemonic}: single-precision instructions are not supported by the FPU model"
        )
    kind = spec.kind
    fmt = spec.fmt
    writes_int = "rd" in fmt and inst.rd != 0
    writes_fp = "frd" in fmt
    is_arith = kind in ("fp_arith", "fp_to_int", "fp_from_int") and spec.fpclass != "move"
    is_mem = kind in ("fp_load", "fp_store")
    if kind == "muldiv":
        issue = IssueClass.MULDIV
    elif kind.startswith("fp") or kind == "frep":
        issue = IssueClass.FPSS
    else:
        issue = IssueClass.LOCAL
    offloaded = issue is not IssueClass.LOCAL
    sequenceable = kind == "fp_arith"
    return InstrMeta(
        kind=kind,
        issue_class=issue,
        writes_int_rf=writes_int,
        writes_fp_rf=writes_fp,
        is_fp_arith=is_arith,
        is_fp_mem=is_mem,
        is_offloaded=offloaded,
        is_sequenceable=sequenceable,
        fpclass=spec.fpclass,
        int_srcs=int_sources(inst),
    )


def stagger(inst: Instruction, fields: FrepFields, iteration: int) -> Instruction:
    """Return ``inst`` with the masked FP operands renamed for ``iteration``."""
    offset = iteration % (fields.stagger_count + 1)
    if offset == 0 or fields.stagger_mask == 0:
        return inst
    fmt = OPS[inst.mnemonic].fmt
    mask = fields.stagger_mask
    rd, rs1, rs2, rs3 = inst.rd, inst.rs1, inst.rs2, inst.rs3
    if mask & STAGGER_RS1 and "frs1" in fmt:
        rs1 = (rs1 + offset) % 32
    if mask & STAGGER_RS2 and "frs2" in fmt:
        rs2 = (rs2 + offset) % 32
    if mask & STAGGER_RS3 and "frs3" in fmt:
        rs3 = (rs3 + offset) % 32
    if mask & STAGGER_RD and "frd" in fmt:
        rd = (rd + offset) % 32
    return Instruction(inst.mnemonic, rd, rs1, rs2, rs3, inst.imm)


def frep_order(max_inst: int, rep: int, is_outer: bool) -> list[tuple[int, int]]:
    """Issue order of a captured block as (instruction index, stagger iteration)."""
    if is_outer:
        return [(j, i) for i in range(rep) for j in range(max_inst)]
    return [(j, i) for j in range(max_inst) for i in range(rep)]


@dataclass
class Program:
    instructions: list[Instruction]
    labels: dict[str, int] = field(default_factory=dict)
    data: bytes = b""
    data_base: int = 0
    symbols: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.instructions)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Program):
            return NotImplemented
        return (
            self.instructions == other.instructions
            and self.labels == other.labels
            and bytes(self.data) == bytes(other.data)
            and (self.data_base == other.data_base or not self.data)
            and self.symbols == other.symbols
        )
