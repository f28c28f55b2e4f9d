"""Two-pass text assembler and disassembler.

Grammar (one statement per line, ``#`` or ``//`` starts a comment)::

    label:                      # text labels name instruction indices
    mnemonic op, op, ...        # standard RISC-V operand order
    frep.o  rs1, max_inst, stagger_mask, stagger_count
    .data / .text               # switch section
    .dbase  ADDR                # data segment base (default TCDM base)
    .align N / .balign N        # pad data to 2**N / N bytes
    .double, .dword, .word, .half, .byte  EXPR, ...
    .space N / .zero N
    .equ NAME, EXPR             # constant symbol

Immediates accept integer expressions over symbols (``+ - * / % << >> & | ^ ~``)
plus ``%hi(x)`` / ``%lo(x)``. Branch targets are labels or byte offsets.

Pseudo-instructions expand to base instructions: ``nop li la mv not neg seqz
snez j jr ret call beqz bnez blez bgez bltz bgtz bgt ble bgtu bleu csrr csrw
csrs csrc csrwi csrsi csrci fmv.d fneg.d fabs.d`` and the stream-register
configuration helpers ``ssr.bound ssr.stride ssr.read ssr.write ssr.enable
ssr.disable`` (see :mod:`snitchsim.ssr` for the register map).
"""
from __future__ import annotations

import ast
import re
import struct
from dataclasses import dataclass

from .isa import (
    CSR_BY_NUMBER,
    CSR_NAMES,
    FREG_NAMES,
    FREGS,
    OPS,
    REJECTED,
    XREG_NAMES,
    XREGS,
    FrepFields,
    Instruction,
    Program,
)

TCDM_BASE = 0x1000_0000
TEXT_BASE = 0x8000_0000

# Per-lane SSR config window, reached with a negative offset from x0.
SSR_CFG_BASE = -1024
SSR_LANE_STRIDE = 0x80
SSR_REG_BOUND = 0x00
SSR_REG_STRIDE = 0x10
SSR_REG_RPTR = 0x40
SSR_REG_WPTR = 0x50


class AsmError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"line {line}:{col}: {msg}" if line else msg)
        self.msg = msg
        self.line = line
        self.col = col


def hi20(value: int) -> int:
    return ((value + 0x800) >> 12) & 0xFFFFF


def lo12(value: int) -> int:
    v = value & 0xFFF
    return v - 0x1000 if v & 0x800 else v


def _sext32(v: int) -> int:
    v &= 0xFFFFFFFF
    return v - (1 << 32) if v & 0x80000000 else v


_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: int(a / b) if b else _zero_div(),
    ast.FloorDiv: lambda a, b: a // b if b else _zero_div(),
    ast.Mod: lambda a, b: a % b if b else _zero_div(),
    ast.LShift: lambda a, b: a << b,
    ast.RShift: lambda a, b: a >> b,
    ast.BitAnd: lambda a, b: a & b,
    ast.BitOr: lambda a, b: a | b,
    ast.BitXor: lambda a, b: a ^ b,
}


def _zero_div():
    raise ValueError("division by zero in expression")


class _Undefined(Exception):
    pass


def evaluate(expr: str, symbols: dict[str, int]) -> int:
    """Evaluate an integer expression; raises ``_Undefined`` or ``ValueError``."""
    text = expr.strip().replace("%hi(", "__hi__(").replace("%lo(", "__lo__(")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"bad expression {expr!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
            return node.value
        if isinstance(node, ast.Name):
            if node.id not in symbols:
                raise _Undefined(node.id)
            return symbols[node.id]
        if isinstance(node, ast.UnaryOp):
            v = ev(node.operand)
            if isinstance(node.op, ast.USub):
                return -v
            if isinstance(node.op, ast.UAdd):
                return v
            if isinstance(node.op, ast.Invert):
                return ~v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in ("__hi__", "__lo__") and len(node.args) == 1 and not node.keywords):
            v = ev(node.args[0])
            return hi20(v) if node.func.id == "__hi__" else lo12(v)
        raise ValueError(f"unsupported expression {expr!r}")

    return ev(tree)


def _eval_float(expr: str, symbols: dict[str, int]) -> float:
    try:
        return float(expr)
    except ValueError:
        return float(evaluate(expr, symbols))


_LABEL_RE = re.compile(r"^\s*([A-Za-z_.$][\w.$]*)\s*:")
_MEM_RE = re.compile(r"^(.*)\((\s*[\w$]+\s*)\)\s*$")


@dataclass
class _Line:
    lineno: int
    mnemonic: str
    operands: list[tuple[str, int]]   # (text, column)
    col: int
    index: int = 0                    # first instruction index
    size: int = 1


def _split_operands(rest: str, base_col: int) -> list[tuple[str, int]]:
    out = []
    depth = 0
    start = 0
    for i, ch in enumerate(rest + ","):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            tok = rest[start:i]
            stripped = tok.strip()
            if stripped:
                out.append((stripped, base_col + start + (len(tok) - len(tok.lstrip()))))
            elif i < len(rest):
                raise AsmError("empty operand", 0, base_col + start)
            start = i + 1
    return out


def _strip_comment(line: str) -> str:
    for marker in ("#", "//"):
        pos = line.find(marker)
        if pos >= 0:
            line = line[:pos]
    return line


# Expansion sizes that do not depend on operand values.
_PSEUDO_SIZES = {
    "nop": 1, "la": 2, "mv": 1, "not": 1, "neg": 1, "seqz": 1, "snez": 1, "j": 1, "jr": 1,
    "ret": 1, "call": 1, "beqz": 1, "bnez": 1, "blez": 1, "bgez": 1, "bltz": 1, "bgtz": 1,
    "bgt": 1, "ble": 1, "bgtu": 1, "bleu": 1, "csrr": 1, "csrw": 1, "csrs": 1, "csrc": 1,
    "csrwi": 1, "csrsi": 1, "csrci": 1, "fmv.d": 1, "fneg.d": 1, "fabs.d": 1,
    "ssr.bound": 1, "ssr.stride": 1, "ssr.read": 1, "ssr.write": 1, "ssr.enable": 1,
    "ssr.disable": 1,
}


class Assembler:
    def __init__(self, data_base: int = TCDM_BASE, text_base: int = TEXT_BASE,
                 symbols: dict[str, int] | None = None):
        self.data_base = data_base
        self.text_base = text_base
        self.predefined = dict(symbols or {})

    # pass 1 -----------------------------------------------------------
    def _first_pass(self, source: str):
        labels: dict[str, int] = {}
        symbols: dict[str, int] = dict(self.predefined)
        data = bytearray()
        data_base = self.data_base
        data_started = False
        lines: list[_Line] = []
        section = "text"
        count = 0
        pending_data: list[tuple[int, int, str, list[tuple[str, int]]]] = []

        for lineno, raw in enumerate(source.splitlines(), 1):
            line = _strip_comment(raw)
            while True:
                m = _LABEL_RE.match(line)
                if not m:
                    break
                name = m.group(1)
                if name in labels or (name in symbols and name not in self.predefined):
                    raise AsmError(f"duplicate label {name!r}", lineno, m.start(1) + 1)
                if section == "text":
                    labels[name] = count
                else:
                    symbols[name] = data_base + len(data)
                line = line[: m.start()] + " " * (m.end() - m.start()) + line[m.end():]
            body = line.strip()
            if not body:
                continue
            col = len(line) - len(line.lstrip()) + 1
            parts = body.split(None, 1)
            mnem = parts[0].lower()
            rest = parts[1] if len(parts) > 1 else ""
            rest_start = line.index(parts[0]) + len(parts[0])
            try:
                ops = _split_operands(line[rest_start:], rest_start + 1)
            except AsmError as exc:
                raise AsmError(exc.msg, lineno, exc.col) from None
            if mnem.startswith("."):
                if mnem == ".text":
                    section = "text"
                elif mnem == ".data":
                    section = "data"
                elif mnem in (".globl", ".global", ".section", ".type", ".size", ".option"):
                    if mnem == ".section" and ops:
                        section = "data" if "data" in ops[0][0] or "bss" in ops[0][0] else "text"
                elif mnem in (".equ", ".set"):
                    if len(ops) != 2:
                        raise AsmError(f"{mnem} expects NAME, EXPR", lineno, col)
                    try:
                        symbols[ops[0][0]] = evaluate(ops[1][0], symbols)
                    except _Undefined as exc:
                        raise AsmError(f"undefined symbol {exc.args[0]!r}", lineno, ops[1][1]) from None
                    except ValueError as exc:
                        raise AsmError(str(exc), lineno, ops[1][1]) from None
                elif mnem == ".dbase":
                    if data_started:
                        raise AsmError(".dbase must precede data", lineno, col)
                    data_base = self._const(ops, 0, symbols, lineno)
                else:
                    if section != "data":
                        raise AsmError(f"data directive {mnem} in text section", lineno, col)
                    data_started = True
                    self._data_directive(mnem, ops, symbols, data, data_base, lineno, col, pending_data)
                continue
            if section != "text":
                raise AsmError("instruction in data section", lineno, col)
            size = self._size(mnem, ops, symbols, lineno, col)
            lines.append(_Line(lineno, mnem, ops, col, count, size))
            count += size
        return labels, symbols, data, data_base, lines, count, pending_data

    def _const(self, ops, i, symbols, lineno) -> int:
        if i >= len(ops):
            raise AsmError("missing operand", lineno, 0)
        try:
            return evaluate(ops[i][0], symbols)
        except _Undefined as exc:
            raise AsmError(f"undefined symbol {exc.args[0]!r}", lineno, ops[i][1]) from None
        except ValueError as exc:
            raise AsmError(str(exc), lineno, ops[i][1]) from None

    def _data_directive(self, mnem, ops, symbols, data, data_base, lineno, col, pending):
        widths = {".byte": 1, ".half": 2, ".short": 2, ".word": 4, ".dword": 8, ".quad": 8}
        if mnem in (".align", ".p2align", ".balign"):
            n = self._const(ops, 0, symbols, lineno)
            align = n if mnem == ".balign" else 1 << n
            if align <= 0:
                raise AsmError("bad alignment", lineno, col)
            while (data_base + len(data)) % align:
                data.append(0)
        elif mnem in (".space", ".zero", ".skip"):
            data.extend(bytes(self._const(ops, 0, symbols, lineno)))
        elif mnem == ".double":
            for text, c in ops:
                try:
                    data.extend(struct.pack("<d", _eval_float(text, symbols)))
                except (ValueError, _Undefined):
                    raise AsmError(f"bad double {text!r}", lineno, c) from None
        elif mnem in widths:
            w = widths[mnem]
            for text, c in ops:
                try:
                    v = evaluate(text, symbols)
                except _Undefined:
                    # forward reference to a later data label; patched after pass 1
                    pending.append((len(data), w, text, [(text, c), (str(lineno), 0)]))
                    v = 0
                except ValueError as exc:
                    raise AsmError(str(exc), lineno, c) from None
                data.extend((v & ((1 << (8 * w)) - 1)).to_bytes(w, "little"))
        else:
            raise AsmError(f"unknown directive {mnem}", lineno, col)

    def _size(self, mnem, ops, symbols, lineno, col) -> int:
        if mnem == "li":
            if len(ops) != 2:
                raise AsmError("li expects rd, imm", lineno, col)
            try:
                v = evaluate(ops[1][0], symbols)
            except _Undefined:
                return 2
            except ValueError as exc:
                raise AsmError(str(exc), lineno, ops[1][1]) from None
            return 1 if -2048 <= _sext32(v) < 2048 and -(1 << 31) <= v < (1 << 32) else 2
        if mnem in _PSEUDO_SIZES:
            return _PSEUDO_SIZES[mnem]
        if mnem in OPS:
            return 1
        if mnem in REJECTED:
            raise AsmError(f"{mnem} is not supported by the FPU model", lineno, col)
        raise AsmError(f"unknown mnemonic {mnem!r}", lineno, col)

    # pass 2 -----------------------------------------------------------
    def assemble(self, source: str) -> Program:
        labels, symbols, data, data_base, lines, count, pending = self._first_pass(source)
        for offset, width, text, meta in pending:
            try:
                v = evaluate(text, symbols)
            except _Undefined as exc:
                raise AsmError(f"undefined symbol {exc.args[0]!r}", int(meta[1][0]), meta[0][1]) from None
            data[offset:offset + width] = (v & ((1 << (8 * width)) - 1)).to_bytes(width, "little")
        # text labels resolve to their pc in immediate expressions
        expr_syms = dict(symbols)
        for name, idx in labels.items():
            expr_syms.setdefault(name, self.text_base + 4 * idx)
        insts: list[Instruction] = []
        for ln in lines:
            ctx = _Ctx(ln, expr_syms, labels, count)
            produced = ctx.expand()
            if len(produced) != ln.size:
                raise AsmError("internal: expansion size mismatch", ln.lineno, ln.col)
            insts.extend(produced)
        visible = {k: v for k, v in symbols.items() if k not in self.predefined}
        return Program(insts, labels, bytes(data), data_base, visible)


class _Ctx:
    """Operand decoding for one source line."""

    def __init__(self, line: _Line, symbols: dict[str, int], labels: dict[str, int], count: int):
        self.line = line
        self.symbols = symbols
        self.labels = labels
        self.count = count

    def err(self, msg: str, opi: int | None = None):
        col = self.line.col
        if opi is not None and opi < len(self.line.operands):
            col = self.line.operands[opi][1]
        raise AsmError(msg, self.line.lineno, col)

    def nops(self, n: int):
        if len(self.line.operands) != n:
            self.err(f"{self.line.mnemonic} expects {n} operand(s), got {len(self.line.operands)}")

    def op(self, i: int) -> str:
        return self.line.operands[i][0]

    def xreg(self, i: int) -> int:
        name = self.op(i).lower()
        if name in XREGS:
            return XREGS[name]
        if re.fullmatch(r"x\d+", name):
            self.err(f"register {name} out of range", i)
        self.err(f"expected integer register, got {self.op(i)!r}", i)

    def freg(self, i: int) -> int:
        name = self.op(i).lower()
        if name in FREGS:
            return FREGS[name]
        if re.fullmatch(r"f\d+", name):
            self.err(f"register {name} out of range", i)
        self.err(f"expected FP register, got {self.op(i)!r}", i)

    def imm(self, i: int, lo: int | None = None, hi: int | None = None, text: str | None = None) -> int:
        try:
            v = evaluate(self.op(i) if text is None else text, self.symbols)
        except _Undefined as exc:
            self.err(f"undefined symbol {exc.args[0]!r}", i)
        except ValueError as exc:
            self.err(str(exc), i)
        if lo is not None and not lo <= v <= hi:
            self.err(f"immediate {v} outside [{lo}, {hi}]", i)
        return v

    def mem(self, i: int) -> tuple[int, int]:
        m = _MEM_RE.match(self.op(i))
        if not m:
            self.err(f"expected offset(reg), got {self.op(i)!r}", i)
        base = m.group(2).strip().lower()
        if base not in XREGS:
            self.err(f"bad base register {base!r}", i)
        off_text = m.group(1).strip() or "0"
        return self.imm(i, -2048, 2047, text=off_text), XREGS[base]

    def amo_addr(self, i: int) -> int:
        m = _MEM_RE.match(self.op(i))
        if not m or m.group(1).strip() not in ("", "0"):
            self.err(f"expected (reg), got {self.op(i)!r}", i)
        base = m.group(2).strip().lower()
        if base not in XREGS:
            self.err(f"bad base register {base!r}", i)
        return XREGS[base]

    def target(self, i: int, bits: int) -> int:
        text = self.op(i)
        pc_index = self.line.index
        if text in self.labels:
            offset = (self.labels[text] - pc_index) * 4
        else:
            if re.fullmatch(r"[A-Za-z_.$][\w.$]*", text) and text not in self.symbols:
                self.err(f"undefined label {text!r}", i)
            offset = self.imm(i)
        if offset % 4:
            self.err(f"branch offset {offset} not a multiple of 4", i)
        limit = 1 << (bits - 1)
        if not -limit <= offset < limit:
            self.err(f"branch offset {offset} out of range", i)
        dest = pc_index + offset // 4
        if not 0 <= dest < self.count:
            self.err(f"branch target index {dest} outside program", i)
        return offset

    def csr(self, i: int) -> int:
        name = self.op(i).lower()
        if name in CSR_NAMES:
            return CSR_NAMES[name]
        return self.imm(i, 0, 0xFFF)

    # expansion ----------------------------------------------------------
    def expand(self) -> list[Instruction]:
        m = self.line.mnemonic
        pseudo = getattr(self, "p_" + m.replace(".", "_"), None)
        if pseudo is not None:
            return pseudo()
        return [self.base(m)]

    def base(self, m: str) -> Instruction:
        spec = OPS[m]
        fmt = spec.fmt
        if fmt == ("frep",):
            return self.frep(m)
        self.nops(len(fmt))
        f = dict(rd=0, rs1=0, rs2=0, rs3=0, imm=0)
        for i, tok in enumerate(fmt):
            if tok == "rd":
                f["rd"] = self.xreg(i)
            elif tok == "rs1":
                f["rs1"] = self.xreg(i)
            elif tok == "rs2":
                f["rs2"] = self.xreg(i)
            elif tok == "frd":
                f["rd"] = self.freg(i)
            elif tok == "frs1":
                f["rs1"] = self.freg(i)
            elif tok == "frs2":
                f["rs2"] = self.freg(i)
            elif tok == "frs3":
                f["rs3"] = self.freg(i)
            elif tok == "imm":
                f["imm"] = self.imm(i, -2048, 2047)
            elif tok == "shamt":
                f["imm"] = self.imm(i, 0, 31)
            elif tok == "uimm20":
                f["imm"] = self.imm(i, -(1 << 19), (1 << 20) - 1) & 0xFFFFF
            elif tok == "mem":
                f["imm"], f["rs1"] = self.mem(i)
            elif tok == "amo":
                f["rs1"] = self.amo_addr(i)
            elif tok == "target":
                f["imm"] = self.target(i, 21 if m == "jal" else 13)
            elif tok == "csr":
                f["imm"] = self.csr(i)
            elif tok == "zimm":
                f["rs1"] = self.imm(i, 0, 31)
        return Instruction(m, **f)

    def frep(self, m: str) -> Instruction:
        self.nops(4)
        reg = self.xreg(0)
        max_inst = self.imm(1)
        if not 0 <= max_inst <= 15:
            self.err(f"frep max_inst {max_inst} outside [0, 15]", 1)
        mask = self.imm(2)
        if not 0 <= mask <= 15:
            self.err(f"frep stagger_mask {mask} wider than 4 bits", 2)
        cnt = self.imm(3)
        if not 0 <= cnt <= 7:
            self.err(f"frep stagger_count {cnt} outside [0, 7]", 3)
        fields = FrepFields(m == "frep.o", max_inst, reg, mask, cnt)
        return Instruction(m, rs1=reg, frep=fields)

    # pseudo-instructions ---------------------------------------------------
    def p_nop(self):
        self.nops(0)
        return [Instruction("addi")]

    def p_li(self):
        self.nops(2)
        rd = self.xreg(0)
        v = self.imm(1, -(1 << 31), (1 << 32) - 1)
        v = _sext32(v)
        if self.line.size == 1:
            return [Instruction("addi", rd=rd, imm=v)]
        return [Instruction("lui", rd=rd, imm=hi20(v)), Instruction("addi", rd=rd, rs1=rd, imm=lo12(v))]

    def p_la(self):
        self.nops(2)
        rd = self.xreg(0)
        v = _sext32(self.imm(1))
        return [Instruction("lui", rd=rd, imm=hi20(v)), Instruction("addi", rd=rd, rs1=rd, imm=lo12(v))]

    def _rr(self, m, **kw):
        self.nops(2)
        return [Instruction(m, rd=self.xreg(0), **{k: (self.xreg(1) if v == "s" else v) for k, v in kw.items()})]

    def p_mv(self):
        return self._rr("addi", rs1="s")

    def p_not(self):
        return self._rr("xori", rs1="s", imm=-1)

    def p_neg(self):
        return self._rr("sub", rs2="s")

    def p_seqz(self):
        return self._rr("sltiu", rs1="s", imm=1)

    def p_snez(self):
        return self._rr("sltu", rs2="s")

    def p_j(self):
        self.nops(1)
        return [Instruction("jal", imm=self.target(0, 21))]

    def p_call(self):
        self.nops(1)
        return [Instruction("jal", rd=1, imm=self.target(0, 21))]

    def p_jr(self):
        self.nops(1)
        return [Instruction("jalr", rs1=self.xreg(0))]

    def p_ret(self):
        self.nops(0)
        return [Instruction("jalr", rs1=1)]

    def _bz(self, m, swap=False):
        self.nops(2)
        r = self.xreg(0)
        off = self.target(1, 13)
        if swap:
            return [Instruction(m, rs1=0, rs2=r, imm=off)]
        return [Instruction(m, rs1=r, rs2=0, imm=off)]

    def p_beqz(self):
        return self._bz("beq")

    def p_bnez(self):
        return self._bz("bne")

    def p_bgez(self):
        return self._bz("bge")

    def p_bltz(self):
        return self._bz("blt")

    def p_blez(self):
        return self._bz("bge", swap=True)

    def p_bgtz(self):
        return self._bz("blt", swap=True)

    def _bswap(self, m):
        self.nops(3)
        return [Instruction(m, rs1=self.xreg(1), rs2=self.xreg(0), imm=self.target(2, 13))]

    def p_bgt(self):
        return self._bswap("blt")

    def p_ble(self):
        return self._bswap("bge")

    def p_bgtu(self):
        return self._bswap("bltu")

    def p_bleu(self):
        return self._bswap("bgeu")

    def p_csrr(self):
        self.nops(2)
        return [Instruction("csrrs", rd=self.xreg(0), imm=self.csr(1))]

    def _csrw(self, m):
        self.nops(2)
        return [Instruction(m, imm=self.csr(0), rs1=self.xreg(1))]

    def p_csrw(self):
        return self._csrw("csrrw")

    def p_csrs(self):
        return self._csrw("csrrs")

    def p_csrc(self):
        return self._csrw("csrrc")

    def _csrwi(self, m):
        self.nops(2)
        return [Instruction(m, imm=self.csr(0), rs1=self.imm(1, 0, 31))]

    def p_csrwi(self):
        return self._csrwi("csrrwi")

    def p_csrsi(self):
        return self._csrwi("csrrsi")

    def p_csrci(self):
        return self._csrwi("csrrci")

    def _fsgn(self, m):
        self.nops(2)
        rs = self.freg(1)
        return [Instruction(m, rd=self.freg(0), rs1=rs, rs2=rs)]

    def p_fmv_d(self):
        return self._fsgn("fsgnj.d")

    def p_fneg_d(self):
        return self._fsgn("fsgnjn.d")

    def p_fabs_d(self):
        return self._fsgn("fsgnjx.d")

    def _ssr_store(self, reg_off: int, limit: int):
        self.nops(3)
        lane = self.imm(0, 0, 1)
        idx = self.imm(1, 0 if limit == 4 else 1, limit)
        if limit == 4 and idx > 3:
            self.err(f"dimension {idx} outside [0, 3]", 1)
        slot = idx if limit == 4 else idx - 1
        addr = SSR_CFG_BASE + lane * SSR_LANE_STRIDE + reg_off + 4 * slot
        return [Instruction("sw", rs2=self.xreg(2), rs1=0, imm=addr)]

    def p_ssr_bound(self):
        """``ssr.bound lane, dim, rs``: iteration count of dimension ``dim``."""
        return self._ssr_store(SSR_REG_BOUND, 4)

    def p_ssr_stride(self):
        """``ssr.stride lane, dim, rs``: byte stride of dimension ``dim``."""
        return self._ssr_store(SSR_REG_STRIDE, 4)

    def p_ssr_read(self):
        """``ssr.read lane, dims, rs``: launch a read stream at base ``rs``."""
        return self._ssr_store(SSR_REG_RPTR, 5)

    def p_ssr_write(self):
        """``ssr.write lane, dims, rs``: launch a write stream at base ``rs``."""
        return self._ssr_store(SSR_REG_WPTR, 5)

    def p_ssr_enable(self):
        self.nops(0)
        return [Instruction("csrrsi", imm=CSR_NAMES["ssr"], rs1=1)]

    def p_ssr_disable(self):
        self.nops(0)
        return [Instruction("csrrci", imm=CSR_NAMES["ssr"], rs1=1)]


def assemble(source: str, data_base: int = TCDM_BASE, symbols: dict[str, int] | None = None) -> Program:
    return Assembler(data_base=data_base, symbols=symbols).assemble(source)


# disassembly ------------------------------------------------------------------

def _x(i: int) -> str:
    return XREG_NAMES[i]


def _f(i: int) -> str:
    return FREG_NAMES[i]


def format_instruction(inst: Instruction, target_label: str | None = None) -> str:
    spec = OPS[inst.mnemonic]
    if spec.fmt == ("frep",):
        f = inst.frep
        return f"{inst.mnemonic} {_x(f.max_rep_reg)}, {f.max_inst}, {f.stagger_mask:#06b}, {f.stagger_count}"
    parts = []
    for tok in spec.fmt:
        if tok == "rd":
            parts.append(_x(inst.rd))
        elif tok == "rs1":
            parts.append(_x(inst.rs1))
        elif tok == "rs2":
            parts.append(_x(inst.rs2))
        elif tok == "frd":
            parts.append(_f(inst.rd))
        elif tok == "frs1":
            parts.append(_f(inst.rs1))
        elif tok == "frs2":
            parts.append(_f(inst.rs2))
        elif tok == "frs3":
            parts.append(_f(inst.rs3))
        elif tok in ("imm", "shamt"):
            parts.append(str(inst.imm))
        elif tok == "uimm20":
            parts.append(hex(inst.imm))
        elif tok == "mem":
            parts.append(f"{inst.imm}({_x(inst.rs1)})")
        elif tok == "amo":
            parts.append(f"({_x(inst.rs1)})")
        elif tok == "target":
            parts.append(target_label if target_label is not None else str(inst.imm))
        elif tok == "csr":
            parts.append(CSR_BY_NUMBER.get(inst.imm, hex(inst.imm)))
        elif tok == "zimm":
            parts.append(str(inst.rs1))
    return f"{inst.mnemonic} {', '.join(parts)}".rstrip()


def disassemble(program: Program) -> str:
    by_index: dict[int, list[str]] = {}
    for name, idx in program.labels.items():
        by_index.setdefault(idx, []).append(name)
    out = []
    if program.data:
        out.append(".data")
        out.append(f".dbase {program.data_base:#x}")
        data = bytes(program.data)
        full = len(data) // 8 * 8
        for off in range(0, full, 8):
            out.append(f"    .dword {int.from_bytes(data[off:off + 8], 'little'):#x}")
        for b in data[full:]:
            out.append(f"    .byte {b}")
    text_labels = set(program.labels)
    for name, value in sorted(program.symbols.items()):
        if name not in text_labels:
            out.append(f".equ {name}, {value}")
    out.append(".text")
    for i, inst in enumerate(program.instructions):
        for name in by_index.get(i, []):
            out.append(f"{name}:")
        label = None
        if "target" in OPS[inst.mnemonic].fmt:
            dest = i + inst.imm // 4
            names = by_index.get(dest)
            label = sorted(names)[0] if names else None
        out.append("    " + format_instruction(inst, label))
    for name in by_index.get(len(program.instructions), []):
        out.append(f"{name}:")
    return "\n".join(out) + "\n"
