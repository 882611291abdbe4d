"""The routine DSL: instructions, programs, static checks and JSON forms.

A program is a straight-line sequence of instructions writing named
registers (``r0``, ``r1``, ...). Registers hold one of three value types:
box lists, text lists and booleans. The last instruction must produce a
boolean; that register is the routine's answer.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any

from .errors import MalformedInput, StaticCheckError
from .geometry import RELATIONS
from .model import ErrorClass, Provenance

BOXES, TEXTS, BOOL = "boxes", "texts", "bool"

REGISTER = re.compile(r"^r\d+$")

# op -> (operand fields, result type)
OPS: dict[str, tuple[tuple[str, ...], str]] = {
    "DETECT": (("query",), BOXES),
    "READ_TEXT": (("src",), TEXTS),
    "ASSERT_RELATION": (("relation", "a", "b"), BOOL),
    "ASSERT_COUNT": (("src", "min"), BOOL),
    "ASSERT_TEXT_MATCH": (("src", "literal"), BOOL),
    "NONEMPTY": (("src",), BOOL),
    "AND": (("args",), BOOL),
    "OR": (("args",), BOOL),
    "CONST": (("value",), BOOL),
}
OPTIONAL = {"READ_TEXT": ("strict",), "ASSERT_COUNT": ("exact",)}

# expected type of each register operand
_OPERAND_TYPES = {
    ("READ_TEXT", "src"): BOXES,
    ("ASSERT_RELATION", "a"): BOXES,
    ("ASSERT_RELATION", "b"): BOXES,
    ("ASSERT_COUNT", "src"): BOXES,
    ("ASSERT_TEXT_MATCH", "src"): TEXTS,
    ("NONEMPTY", "src"): BOXES,
}


@dataclass(frozen=True)
class Instruction:
    op: str
    out: str
    query: str | None = None
    src: str | None = None
    a: str | None = None
    b: str | None = None
    relation: str | None = None
    min: int | None = None
    exact: bool = False
    literal: str | None = None
    args: tuple[str, ...] = ()
    value: bool | None = None
    strict: bool = False

    def reads(self) -> list[str]:
        regs = [r for r in (self.src, self.a, self.b) if r is not None]
        return regs + list(self.args)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"op": self.op}
        for name in OPS[self.op][0] + OPTIONAL.get(self.op, ()):
            value = getattr(self, name)
            if name == "args":
                d[name] = list(value)
            elif name in ("exact", "strict"):
                if value:
                    d[name] = True
            else:
                d[name] = value
        d["out"] = self.out
        return d

    def __str__(self) -> str:
        if self.op == "DETECT":
            body = repr(self.query)
        elif self.op in ("AND", "OR"):
            body = ", ".join(self.args)
        elif self.op == "ASSERT_RELATION":
            body = f"{self.relation}, {self.a}, {self.b}"
        elif self.op == "ASSERT_COUNT":
            body = f"{self.src} {'==' if self.exact else '>='} {self.min}"
        elif self.op == "ASSERT_TEXT_MATCH":
            body = f"{self.src}, {self.literal!r}"
        elif self.op == "CONST":
            body = str(self.value)
        else:
            body = str(self.src)
        return f"{self.out} = {self.op}({body})"


@dataclass(frozen=True)
class RoutineProgram:
    triplet_id: int
    instructions: tuple[Instruction, ...]
    provenance: Provenance = field(default=Provenance.SYNTHESIZED, compare=False)
    # set on placeholder programs standing in for a triplet or routine that
    # could not be compiled; executing one yields Violated with this class
    degenerate: ErrorClass | None = None

    @property
    def answer_register(self) -> str:
        return self.instructions[-1].out

    def listing(self) -> str:
        return "\n".join(str(i) for i in self.instructions)


def degenerate_program(triplet_id: int, error_class: ErrorClass) -> RoutineProgram:
    return RoutineProgram(
        triplet_id=triplet_id,
        instructions=(Instruction(op="CONST", out="r0", value=False),),
        degenerate=error_class,
    )


def check_program(program: RoutineProgram) -> None:
    """Raise :class:`StaticCheckError` unless the program is well-formed."""
    if not program.instructions:
        raise StaticCheckError("instruction list is empty")
    types: dict[str, str] = {}
    for n, ins in enumerate(program.instructions):
        where = f"instruction {n} ({ins.op})"
        if ins.op not in OPS:
            raise StaticCheckError(f"{where}: unknown op")
        if not REGISTER.match(ins.out or ""):
            raise StaticCheckError(f"{where}: bad output register {ins.out!r}")
        if ins.op == "DETECT" and not (isinstance(ins.query, str) and ins.query.strip()):
            raise StaticCheckError(f"{where}: empty query")
        if ins.op == "ASSERT_RELATION" and ins.relation not in RELATIONS:
            raise StaticCheckError(f"{where}: unknown relation {ins.relation!r}")
        if ins.op == "ASSERT_COUNT" and (isinstance(ins.min, bool) or not isinstance(ins.min, int) or ins.min < 0):
            raise StaticCheckError(f"{where}: count threshold must be a non-negative integer")
        if ins.op == "ASSERT_TEXT_MATCH" and not (isinstance(ins.literal, str) and ins.literal.strip()):
            raise StaticCheckError(f"{where}: empty literal")
        if ins.op in ("AND", "OR") and len(ins.args) < 2:
            raise StaticCheckError(f"{where}: needs at least two operands")
        if ins.op == "CONST" and not isinstance(ins.value, bool):
            raise StaticCheckError(f"{where}: value must be boolean")
        for name in ("src", "a", "b"):
            if name in OPS[ins.op][0] and getattr(ins, name) is None:
                raise StaticCheckError(f"{where}: missing operand {name}")
        for reg in ins.reads():
            if not REGISTER.match(reg):
                raise StaticCheckError(f"{where}: bad register name {reg!r}")
            if reg not in types:
                raise StaticCheckError(f"{where}: reads register {reg} before it is written")
        for name in ("src", "a", "b"):
            expected = _OPERAND_TYPES.get((ins.op, name))
            reg = getattr(ins, name)
            if expected and types[reg] != expected:
                raise StaticCheckError(f"{where}: {name}={reg} holds {types[reg]}, expected {expected}")
        for reg in ins.args:
            if types[reg] != BOOL:
                raise StaticCheckError(f"{where}: operand {reg} holds {types[reg]}, expected bool")
        types[ins.out] = OPS[ins.op][1]
    if OPS[program.instructions[-1].op][1] != BOOL:
        raise StaticCheckError("last instruction does not produce a boolean")


# -- JSON -------------------------------------------------------------------

def program_to_dict(program: RoutineProgram) -> dict:
    d: dict[str, Any] = {
        "triplet_id": program.triplet_id,
        "instructions": [i.to_dict() for i in program.instructions],
    }
    if program.degenerate is not None:
        d["degenerate"] = program.degenerate.value
    return d


def instruction_from_dict(d: Any, path: str) -> Instruction:
    if not isinstance(d, dict):
        raise MalformedInput("instruction must be an object", path)
    op = d.get("op")
    if op not in OPS:
        raise MalformedInput(f"unknown op {op!r}", f"{path}.op")
    allowed = {"op", "out", *OPS[op][0], *OPTIONAL.get(op, ())}
    unknown = set(d) - allowed
    if unknown:
        raise MalformedInput(f"unknown fields {sorted(unknown)} for {op}", path)
    if not isinstance(d.get("out"), str):
        raise MalformedInput("out must be a register name", f"{path}.out")
    kwargs: dict[str, Any] = {"op": op, "out": d["out"]}
    for name in OPS[op][0] + OPTIONAL.get(op, ()):
        if name not in d:
            if name in OPS[op][0]:
                raise MalformedInput(f"missing operand {name!r}", path)
            continue
        value = d[name]
        if name == "args":
            if not isinstance(value, list) or not all(isinstance(r, str) for r in value):
                raise MalformedInput("args must be a list of register names", f"{path}.args")
            value = tuple(value)
        elif name in ("exact", "strict", "value"):
            if not isinstance(value, bool):
                raise MalformedInput(f"{name} must be a boolean", f"{path}.{name}")
        elif name == "min":
            if isinstance(value, bool) or not isinstance(value, int):
                raise MalformedInput("min must be an integer", f"{path}.min")
        elif not isinstance(value, str):
            raise MalformedInput(f"{name} must be a string", f"{path}.{name}")
        kwargs[name] = value
    return Instruction(**kwargs)


def program_from_dict(d: Any, path: str = "$", provenance: Provenance = Provenance.EXTERNAL_CODE) -> RoutineProgram:
    if not isinstance(d, dict):
        raise MalformedInput("routine must be an object", path)
    tid = d.get("triplet_id")
    if isinstance(tid, bool) or not isinstance(tid, int):
        raise MalformedInput("triplet_id must be an integer", f"{path}.triplet_id")
    instructions = d.get("instructions")
    if not isinstance(instructions, list):
        raise MalformedInput("instructions must be a list", f"{path}.instructions")
    degenerate = d.get("degenerate")
    try:
        degenerate = ErrorClass(degenerate) if degenerate is not None else None
    except ValueError:
        raise MalformedInput(f"unknown degenerate class {degenerate!r}", f"{path}.degenerate") from None
    return RoutineProgram(
        triplet_id=tid,
        instructions=tuple(instruction_from_dict(x, f"{path}.instructions[{i}]") for i, x in enumerate(instructions)),
        provenance=provenance,
        degenerate=degenerate,
    )


def ingest_routine(data: bytes | str) -> RoutineProgram:
    """Parse and statically check an externally produced routine."""
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise MalformedInput(f"invalid JSON: {e}") from None
    program = program_from_dict(doc)
    check_program(program)
    return program
