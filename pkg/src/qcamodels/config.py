"""YAML model configurations: strict schema, loading, building and dumping.

A document has four sections: ``lattice``, ``model`` (tagged by ``kind``),
``initial_state`` and ``run``. Unknown keys are errors. Complex matrix
entries are ``[re, im]`` pairs in row-major order.

Schema problems (bad YAML, unknown keys, wrong shapes) raise
:class:`ConfigParseError` with the line and column of the offending key.
Physics problems (non-unitary gates, improper colourings, ...) raise
:class:`ConfigurationError` when the model is built.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Annotated, Any, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import AfterValidator, BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt, ValidationError, model_validator

from ._validation import check_hermitian, check_unitary
from .classical import BitRow, SecondOrderECA
from .cqca import Colouring, ColouredQCA, FieldCondition, FieldControlledUnitary
from .ctqca import ContinuousQCA, CouplingMap, PiecewiseCTQCA
from .exceptions import ConfigParseError, ConfigurationError
from .lattice import Lattice, NeighbourhoodScheme
from .mqca import MargolusQCA, Tiling
from .state import StateVector, basis_state, excitation_state

LOAD_TOL = 1e-8
PRESETS = ("walk-mqca", "walk-cqca", "flipflop-ctqca", "rule30")

Pair = tuple[float, float]


def _square(m: list) -> list:
    n = len(m)
    if n == 0:
        raise ValueError("matrix is empty")
    for i, row in enumerate(m):
        if len(row) != n:
            raise ValueError(f"row {i} has {len(row)} entries, expected {n} for a square matrix")
    return m


Matrix = Annotated[list[list[Pair]], AfterValidator(_square)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LatticeSchema(_Strict):
    dimension: Literal[1, 2]
    extents: list[PositiveInt]

    @model_validator(mode="after")
    def _dims(self):
        if len(self.extents) != self.dimension:
            raise ValueError(f"extents has {len(self.extents)} entries for dimension {self.dimension}")
        return self


class TilingSchema(_Strict):
    block_shape: list[PositiveInt]
    offset: list[int]


class NeighbourhoodSchema(_Strict):
    offsets: list[list[int]]


class ColouringSchema(_Strict):
    pattern: Union[list[NonNegativeInt], list[list[NonNegativeInt]]]
    palette_size: PositiveInt


class MQCASchema(_Strict):
    kind: Literal["mqca"]
    tiling_a: TilingSchema
    tiling_b: TilingSchema
    u_a: Matrix
    u_b: Matrix


class GateSchema(_Strict):
    target_colour: NonNegativeInt
    condition: Union[Literal["any"], dict[int, list[NonNegativeInt]]]
    gate: Matrix


class CQCASchema(_Strict):
    kind: Literal["cqca"]
    neighbourhood: Optional[Union[Literal["nearest"], NeighbourhoodSchema]] = None
    colouring: Optional[ColouringSchema] = None
    schedule: Optional[list[GateSchema]] = None
    sigma: Optional[Matrix] = None
    compiled_from: Optional[MQCASchema] = None

    @model_validator(mode="after")
    def _one_source(self):
        explicit = self.schedule is not None
        if explicit == (self.compiled_from is not None):
            raise ValueError("give exactly one of 'schedule' and 'compiled_from'")
        if explicit and (self.neighbourhood is None or self.colouring is None):
            raise ValueError("an explicit schedule needs 'neighbourhood' and 'colouring'")
        if not explicit and (self.neighbourhood is not None or self.colouring is not None or self.sigma is not None):
            raise ValueError("'compiled_from' derives neighbourhood, colouring and sigma itself")
        return self


class CouplingSchema(_Strict):
    colours: tuple[NonNegativeInt, NonNegativeInt]
    matrix: Matrix


class OnsiteSchema(_Strict):
    colour: NonNegativeInt
    matrix: Matrix


class SegmentSchema(_Strict):
    duration: float = Field(ge=0)
    couplings: list[CouplingSchema] = []
    onsite: list[OnsiteSchema] = []


class CTQCASchema(_Strict):
    kind: Literal["ctqca"]
    neighbourhood: Union[Literal["nearest"], NeighbourhoodSchema]
    colouring: ColouringSchema
    couplings: Optional[list[CouplingSchema]] = None
    onsite: Optional[list[OnsiteSchema]] = None
    method: Optional[Literal["trotter", "exact"]] = None
    segments: Optional[list[SegmentSchema]] = None

    @model_validator(mode="after")
    def _one_form(self):
        if self.segments is not None:
            if self.couplings is not None or self.onsite is not None or self.method is not None:
                raise ValueError("'segments' replaces 'couplings', 'onsite' and 'method'")
        else:
            if self.couplings is None or self.method is None:
                raise ValueError("a constant coupling map needs 'couplings' and 'method'")
        return self


class ECASchema(_Strict):
    kind: Literal["eca"]
    rule: int = Field(ge=0, le=255)


ModelSchema = Annotated[Union[MQCASchema, CQCASchema, CTQCASchema, ECASchema], Field(discriminator="kind")]


class InitialStateSchema(_Strict):
    bitstring: Optional[str] = None
    excitations: Optional[list[NonNegativeInt]] = None
    row: Optional[str] = None

    @model_validator(mode="after")
    def _one(self):
        given = [k for k in ("bitstring", "excitations", "row") if getattr(self, k) is not None]
        if len(given) != 1:
            raise ValueError("give exactly one of 'bitstring', 'excitations', 'row'")
        return self


class RunSchema(_Strict):
    steps: NonNegativeInt
    dt: Optional[float] = Field(default=None, gt=0)
    order: Optional[Literal[1, 2]] = None


class ModelConfig(_Strict):
    lattice: LatticeSchema
    model: ModelSchema
    initial_state: InitialStateSchema
    run: RunSchema


# ------------------------------------------------------------ loading

def _locate(node, loc) -> tuple[int, int] | None:
    """Line/column (1-based) of the deepest node along a validation path."""
    best = None
    for key in loc:
        if node is None:
            break
        best = (node.start_mark.line + 1, node.start_mark.column + 1)
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if str(k.value) == str(key):
                    best = (k.start_mark.line + 1, k.start_mark.column + 1)
                    nxt = v
                    break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
    return best


def _clean_loc(loc) -> list:
    # drop union-branch labels inserted by the validator
    return [p for p in loc if not (isinstance(p, str) and (p in ("mqca", "cqca", "ctqca", "eca")
                                                           or p.startswith(("list[", "tuple[", "dict[", "function-", "literal["))
                                                           or p == "NeighbourhoodSchema"))]


def parse_config(text: str, source: str = "<config>") -> ModelConfig:
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigParseError(f"{source}: YAML syntax error{where}: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(data, dict):
        raise ConfigParseError(f"{source}: top level must be a mapping")
    try:
        return ModelConfig.model_validate(data)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = _clean_loc(err["loc"])
            pos = _locate(root, loc)
            where = f" (line {pos[0]}, column {pos[1]})" if pos else ""
            lines.append(f"{'.'.join(map(str, loc)) or '<root>'}: {err['msg']}{where}")
        raise ConfigParseError(f"{source}: invalid configuration\n  " + "\n  ".join(lines)) from None


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigParseError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return resources.files("qcamodels.presets").joinpath(f"{name}.yaml").read_text()


def load_config(path_or_preset: str) -> ModelConfig:
    """Parse a YAML file, or a shipped preset given by name."""
    if path_or_preset in PRESETS and not Path(path_or_preset).exists():
        return parse_config(preset_text(path_or_preset), path_or_preset)
    p = Path(path_or_preset)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path_or_preset}: {exc.strerror}") from None
    return parse_config(text, str(p))


# ------------------------------------------------------------ building

def _matrix(m: Matrix) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in m], dtype=complex)


def _polar(u: np.ndarray) -> np.ndarray:
    """Nearest unitary, removing rounding left by decimal matrix entries."""
    w, _, vh = np.linalg.svd(u)
    return w @ vh


def _unitary(m: Matrix, name: str, arity=None, strict=True) -> np.ndarray:
    u = _matrix(m)
    if not strict:
        return u
    return _polar(check_unitary(u, name, LOAD_TOL, arity))


def _hermitian(m: Matrix, name: str, arity: int) -> np.ndarray:
    h = check_hermitian(_matrix(m), name, LOAD_TOL, arity)
    return (h + h.conj().T) / 2


def _neighbourhood(section, dimension: int) -> NeighbourhoodScheme:
    if section == "nearest":
        return NeighbourhoodScheme.nearest(dimension)
    return NeighbourhoodScheme(tuple(tuple(o) for o in section.offsets))


def _colouring(section: ColouringSchema) -> Colouring:
    return Colouring(np.array(section.pattern, dtype=int), section.palette_size)


def _coupling_map(colouring, nb, couplings, onsite) -> CouplingMap:
    return CouplingMap(
        colouring, nb,
        {tuple(c.colours): _hermitian(c.matrix, f"coupling {tuple(c.colours)}", 2) for c in couplings},
        {o.colour: _hermitian(o.matrix, f"on-site term {o.colour}", 1) for o in onsite},
    )


def _build_mqca(lat: Lattice, section: MQCASchema, strict=True) -> MargolusQCA:
    ta = Tiling(tuple(section.tiling_a.block_shape), tuple(section.tiling_a.offset))
    tb = Tiling(tuple(section.tiling_b.block_shape), tuple(section.tiling_b.offset))
    return MargolusQCA(lat, ta, tb, _unitary(section.u_a, "u_a", strict=strict),
                       _unitary(section.u_b, "u_b", strict=strict), strict=strict)


@dataclass
class BuiltConfig:
    config: ModelConfig
    lattice: Lattice
    model: Any
    kind: str

    @property
    def steps(self) -> int:
        return self.config.run.steps

    def initial_state(self) -> StateVector:
        init = self.config.initial_state
        lat = self.model.lattice_
        if self.kind == "eca":
            row = self.initial_row()
            # current values on odd sites, previous values zero
            bits = ["0"] * lat.n_sites
            for x, v in enumerate(row.bits):
                bits[2 * x + 1] = str(int(v))
            return basis_state(lat, "".join(reversed(bits)))
        if init.row is not None:
            raise ConfigurationError("'row' initial states are for eca models; use 'bitstring' or 'excitations'")
        if init.bitstring is not None:
            return basis_state(lat, init.bitstring)
        if any(s >= lat.n_sites for s in init.excitations):
            raise ConfigurationError(f"excitation sites must be below {lat.n_sites}")
        return excitation_state(lat, init.excitations)

    def initial_row(self) -> BitRow:
        init = self.config.initial_state
        if init.row is None:
            raise ConfigurationError("eca models need a 'row' initial state")
        row = BitRow.parse(init.row)
        if row.width != self.lattice.n_sites:
            raise ConfigurationError(f"row has {row.width} cells, lattice has {self.lattice.n_sites}")
        return row


def build(cfg: ModelConfig, strict: bool = True) -> BuiltConfig:
    """Construct and fit the model a configuration describes.

    ``strict=False`` skips unitarity enforcement for Margolus block
    matrices so that corrupted models can still be inspected.
    """
    lat = Lattice(tuple(cfg.lattice.extents))
    section = cfg.model
    run = cfg.run
    if section.kind == "mqca":
        model = _build_mqca(lat, section, strict)
    elif section.kind == "cqca":
        if section.compiled_from is not None:
            from .transpile import mqca_to_cqca
            model = mqca_to_cqca(_build_mqca(lat, section.compiled_from).fit())
        else:
            schedule = [
                FieldControlledUnitary(
                    g.target_colour,
                    FieldCondition.any() if g.condition == "any" else FieldCondition(g.condition),
                    _unitary(g.gate, f"schedule[{i}].gate", arity=1))
                for i, g in enumerate(section.schedule)]
            sigma = None if section.sigma is None else _hermitian(section.sigma, "sigma", 1)
            model = ColouredQCA(lat, _neighbourhood(section.neighbourhood, lat.dimension),
                                _colouring(section.colouring), schedule, sigma)
    elif section.kind == "ctqca":
        colouring = _colouring(section.colouring)
        nb = _neighbourhood(section.neighbourhood, lat.dimension)
        if section.segments is not None:
            segs = tuple((s.duration, _coupling_map(colouring, nb, s.couplings, s.onsite)) for s in section.segments)
            model = PiecewiseCTQCA(lat, segs)
        else:
            if run.dt is None or (section.method == "trotter" and run.order is None):
                raise ConfigurationError("ctqca models need run.dt (and run.order for Trotter evolution)")
            model = ContinuousQCA(lat, _coupling_map(colouring, nb, section.couplings, section.onsite or []),
                                  dt=run.dt, order=run.order or 1, method=section.method)
    else:
        if lat.dimension != 1:
            raise ConfigurationError("elementary automata are one-dimensional")
        model = SecondOrderECA(width=lat.n_sites, rule=section.rule)
    model.fit()
    return BuiltConfig(cfg, lat, model, section.kind)


# ------------------------------------------------------------ dumping

def _dump_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _dump_colouring(c: Colouring) -> dict:
    return {"pattern": c.pattern.tolist(), "palette_size": int(c.palette_size)}


def _dump_neighbourhood(nb: NeighbourhoodScheme) -> dict:
    return {"offsets": [list(o) for o in nb.offsets]}


def _dump_cmap_terms(cmap: CouplingMap) -> tuple[list, list]:
    couplings = [{"colours": list(k), "matrix": _dump_matrix(h)} for k, h in sorted(cmap.couplings.items())]
    onsite = [{"colour": int(c), "matrix": _dump_matrix(h)} for c, h in sorted(cmap.onsite.items())]
    return couplings, onsite


def model_to_dict(model) -> dict:
    """The ``model`` section describing a fitted model."""
    if isinstance(model, MargolusQCA):
        return {"kind": "mqca",
                "tiling_a": {"block_shape": list(model.tiling_a.block_shape), "offset": list(model.tiling_a.offset)},
                "tiling_b": {"block_shape": list(model.tiling_b.block_shape), "offset": list(model.tiling_b.offset)},
                "u_a": _dump_matrix(model.u_a), "u_b": _dump_matrix(model.u_b)}
    if isinstance(model, ColouredQCA):
        out = {"kind": "cqca", "neighbourhood": _dump_neighbourhood(model.neighbourhood),
               "colouring": _dump_colouring(model.colouring),
               "schedule": [{"target_colour": op.target_colour,
                             "condition": "any" if op.condition.is_any else
                             {int(c): sorted(v) for c, v in sorted(op.condition.predicates.items())},
                             "gate": _dump_matrix(op.gate)} for op in model.schedule]}
        if model.sigma is not None:
            out["sigma"] = _dump_matrix(model.sigma)
        return out
    if isinstance(model, ContinuousQCA):
        couplings, onsite = _dump_cmap_terms(model.coupling_map)
        out = {"kind": "ctqca", "neighbourhood": _dump_neighbourhood(model.coupling_map.neighbourhood),
               "colouring": _dump_colouring(model.coupling_map.colouring),
               "couplings": couplings, "method": model.method}
        if onsite:
            out["onsite"] = onsite
        return out
    if isinstance(model, PiecewiseCTQCA):
        first = model.segments[0][1] if model.segments else None
        segs = []
        for duration, cmap in model.segments:
            couplings, onsite = _dump_cmap_terms(cmap)
            segs.append({"duration": float(duration), "couplings": couplings, "onsite": onsite})
        return {"kind": "ctqca",
                "neighbourhood": _dump_neighbourhood(first.neighbourhood) if first else {"offsets": [[0]]},
                "colouring": _dump_colouring(first.colouring) if first else {"pattern": [0], "palette_size": 1},
                "segments": segs}
    if isinstance(model, SecondOrderECA):
        return {"kind": "eca", "rule": int(model.rule)}
    raise ConfigurationError(f"cannot serialise {type(model).__name__}")


def config_to_yaml(lattice: Lattice, model, initial_state: dict, run: dict, header: str = "") -> str:
    doc = {"lattice": {"dimension": lattice.dimension, "extents": list(lattice.extents)},
           "model": model_to_dict(model), "initial_state": initial_state, "run": run}
    body = yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, width=120)
    if header:
        body = "".join(f"# {line}\n" if line else "#\n" for line in header.splitlines()) + body
    return body
