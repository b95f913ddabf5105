"""Symbolic model descriptions and built-in presets.

A Hamiltonian is described by its modes (one per coordinate, each carrying the
kinetic and quadratic-potential coefficients and a basis kind) plus a list of
monomial interaction terms with complex coefficients.  One term may be flagged
as the coupling that scales with the sweep parameter g.  The closed-form 2x2
model used for validation lives here as well.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import asdict, dataclass

from .errors import DomainError, UnknownPresetError

OSCILLATOR = "oscillator"
FOURIER_SINE = "fourier-sine-periodic"
SINE_BOX = "sine-box"
BASIS_KINDS = (OSCILLATOR, FOURIER_SINE, SINE_BOX)


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeSpec:
    """One coordinate: kinetic_coeff * p^2 + quad_coeff * x^2 in basis `basis`.

    The kinetic coefficient defaults to 1/2 (the convention of the coupled
    oscillator models); the one-dimensional cubic model uses 1 instead, so the
    coefficient is stored per mode rather than fixed globally.
    """

    index: int
    quad_coeff: float
    basis: str = OSCILLATOR
    kinetic_coeff: float = 0.5
    half_width: float | None = None  # sine-box only: domain is [-L, L]

    def __post_init__(self):
        if self.basis not in BASIS_KINDS:
            raise DomainError(f"unknown basis kind {self.basis!r}")
        if self.index < 0:
            raise DomainError("mode index must be non-negative")
        if self.kinetic_coeff <= 0:
            raise DomainError("kinetic coefficient must be positive")
        if self.basis == OSCILLATOR and self.quad_coeff <= 0:
            raise DomainError("oscillator basis requires quad_coeff > 0")
        if self.quad_coeff < 0:
            raise DomainError("quad_coeff must be non-negative")
        if self.basis == SINE_BOX:
            if self.half_width is None or self.half_width <= 0:
                raise DomainError("sine-box basis requires half_width > 0")
        elif self.half_width is not None:
            raise DomainError("half_width only applies to the sine-box basis")


@dataclass(frozen=True)
class MonomialTerm:
    """Either c * prod_i x_i^(k_i) or c * p_j^2, never mixed.

    Momentum enters only squared; `momentum_mode` names the mode whose p^2
    this term is, and is mutually exclusive with position exponents.
    """

    coefficient: complex
    position_exponents: tuple[int, ...]
    momentum_mode: int | None = None
    scales_with_g: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coefficient", complex(self.coefficient))
        object.__setattr__(
            self, "position_exponents", tuple(int(k) for k in self.position_exponents)
        )
        if any(k < 0 for k in self.position_exponents):
            raise DomainError("position exponents must be non-negative")
        if self.momentum_mode is not None and any(self.position_exponents):
            raise DomainError("a term is either a position monomial or a p^2 term")

    @property
    def total_degree(self) -> int:
        return sum(self.position_exponents)


@dataclass(frozen=True)
class NativeTerm:
    """Basis-native interaction that is not a polynomial (cos of a periodic
    coordinate).  Kept separate from MonomialTerm so the polynomial invariants
    stay clean."""

    kind: str
    mode: int
    coefficient: complex
    scales_with_g: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coefficient", complex(self.coefficient))
        if self.kind != "cos":
            raise DomainError(f"unknown native term kind {self.kind!r}")


@dataclass(frozen=True)
class HamiltonianSpec:
    name: str
    modes: tuple[ModeSpec, ...]
    terms: tuple[MonomialTerm, ...]
    native_terms: tuple[NativeTerm, ...] = ()
    coupling_symbol: str = "g"

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "native_terms", tuple(self.native_terms))
        n = len(self.modes)
        if n == 0:
            raise DomainError("a Hamiltonian needs at least one mode")
        for i, mode in enumerate(self.modes):
            if mode.index != i:
                raise DomainError("mode indices must be 0..n-1 in order")
        for term in self.terms:
            if len(term.position_exponents) != n:
                raise DomainError("every term needs one exponent slot per mode")
            if term.momentum_mode is not None and not 0 <= term.momentum_mode < n:
                raise DomainError("momentum_mode out of range")
        for nat in self.native_terms:
            if not 0 <= nat.mode < n:
                raise DomainError("native term mode out of range")
        flagged = sum(t.scales_with_g for t in self.terms) + sum(
            t.scales_with_g for t in self.native_terms
        )
        if flagged > 1:
            raise DomainError("at most one term may scale with the coupling g")

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def uses_trig_basis(self) -> bool:
        return any(m.basis != OSCILLATOR for m in self.modes)


@dataclass(frozen=True)
class TwoByTwoSpec:
    """Parameters of the closed-form 2x2 model
    [[r e^{i theta}, s], [s, r e^{-i theta}]]."""

    r: float
    s: float
    theta: float


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def validate_pt(spec: HamiltonianSpec) -> bool:
    """True iff the spec is parity-time symmetric.

    Under x -> -x, i -> -i this requires even-degree position monomials to
    carry real coefficients, odd-degree ones purely imaginary coefficients,
    and p^2 terms real coefficients.  The native cos term of the periodic
    model is odd under reflection about the cosine zero and is treated like
    an odd monomial.
    """
    for term in spec.terms:
        c = term.coefficient
        if term.momentum_mode is not None:
            if c.imag != 0.0:
                return False
        elif term.total_degree % 2 == 0:
            if c.imag != 0.0:
                return False
        else:
            if c.real != 0.0:
                return False
    for nat in spec.native_terms:
        if nat.coefficient.real != 0.0:
            return False
    return True


def eigs_2x2(spec: TwoByTwoSpec) -> tuple[complex, complex]:
    """Closed-form eigenvalue pair r cos(theta) +/- sqrt(s^2 - r^2 sin^2 theta).

    The square root is the principal branch, so both values are real exactly
    when s^2 >= r^2 sin^2(theta).
    """
    disc = spec.s * spec.s - (spec.r * math.sin(spec.theta)) ** 2
    root = cmath.sqrt(complex(disc, 0.0))
    base = spec.r * math.cos(spec.theta)
    return (base + root, base - root)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _osc(i: int, alpha: float, kinetic: float = 0.5) -> ModeSpec:
    return ModeSpec(index=i, quad_coeff=alpha, kinetic_coeff=kinetic)


def _build_presets() -> dict[str, HamiltonianSpec]:
    presets = {}
    # Two coupled oscillators with an i*g*x^2*y interaction.
    presets["E1"] = HamiltonianSpec(
        name="E1",
        modes=(_osc(0, 0.5), _osc(1, 0.5)),
        terms=(MonomialTerm(1j, (2, 1), scales_with_g=True),),
    )
    presets["E2"] = HamiltonianSpec(
        name="E2",
        modes=(_osc(0, 0.5), _osc(1, 1.0)),
        terms=(MonomialTerm(1j, (2, 1), scales_with_g=True),),
    )
    # Three coupled oscillators with an i*g*x*y*z interaction.
    presets["E3"] = HamiltonianSpec(
        name="E3",
        modes=(_osc(0, 0.5), _osc(1, 0.5), _osc(2, 0.5)),
        terms=(MonomialTerm(1j, (1, 1, 1), scales_with_g=True),),
    )
    presets["E4"] = HamiltonianSpec(
        name="E4",
        modes=(_osc(0, 0.5), _osc(1, 1.0), _osc(2, 1.5)),
        terms=(MonomialTerm(1j, (1, 1, 1), scales_with_g=True),),
    )
    # Periodic model -d^2/dtheta^2 + i*g*cos(theta) on odd 2pi-periodic states.
    presets["E10"] = HamiltonianSpec(
        name="E10",
        modes=(ModeSpec(index=0, quad_coeff=0.0, basis=FOURIER_SINE, kinetic_coeff=1.0),),
        terms=(),
        native_terms=(NativeTerm("cos", 0, 1j, scales_with_g=True),),
    )
    # Box model -d^2/dx^2 - i*g*x on [-1, 1] with Dirichlet walls.
    presets["E11"] = HamiltonianSpec(
        name="E11",
        modes=(
            ModeSpec(index=0, quad_coeff=0.0, basis=SINE_BOX, kinetic_coeff=1.0, half_width=1.0),
        ),
        terms=(MonomialTerm(-1j, (1,), scales_with_g=True),),
    )
    # One-dimensional cubic model p^2 + x^2 + i*x^3 (unit kinetic coefficient).
    presets["E12"] = HamiltonianSpec(
        name="E12",
        modes=(_osc(0, 1.0, kinetic=1.0),),
        terms=(MonomialTerm(1j, (3,), scales_with_g=True),),
    )
    return presets


_PRESETS = _build_presets()
PRESET_NAMES = tuple(_PRESETS)


def preset(name: str) -> HamiltonianSpec:
    """Return the built-in model with the given identifier."""
    try:
        return _PRESETS[name]
    except KeyError:
        raise UnknownPresetError(
            f"unknown preset {name!r}; choose one of {', '.join(PRESET_NAMES)}"
        ) from None


# ---------------------------------------------------------------------------
# JSON serialization (complex numbers as [re, im] pairs)
# ---------------------------------------------------------------------------

def _cplx_out(c: complex) -> list[float]:
    return [c.real, c.imag]


def spec_to_dict(spec: HamiltonianSpec) -> dict:
    d = {
        "name": spec.name,
        "modes": [
            {k: v for k, v in asdict(m).items() if v is not None} for m in spec.modes
        ],
        "terms": [
            {
                "coefficient": _cplx_out(t.coefficient),
                "position_exponents": list(t.position_exponents),
                "momentum_mode": t.momentum_mode,
                "scales_with_g": t.scales_with_g,
            }
            for t in spec.terms
        ],
        "native_terms": [
            {
                "kind": t.kind,
                "mode": t.mode,
                "coefficient": _cplx_out(t.coefficient),
                "scales_with_g": t.scales_with_g,
            }
            for t in spec.native_terms
        ],
        "coupling_symbol": spec.coupling_symbol,
    }
    return d


def spec_from_dict(d: dict) -> HamiltonianSpec:
    modes = tuple(ModeSpec(**m) for m in d["modes"])
    terms = tuple(
        MonomialTerm(
            coefficient=complex(t["coefficient"][0], t["coefficient"][1]),
            position_exponents=tuple(t["position_exponents"]),
            momentum_mode=t.get("momentum_mode"),
            scales_with_g=t.get("scales_with_g", False),
        )
        for t in d["terms"]
    )
    native = tuple(
        NativeTerm(
            kind=t["kind"],
            mode=t["mode"],
            coefficient=complex(t["coefficient"][0], t["coefficient"][1]),
            scales_with_g=t.get("scales_with_g", False),
        )
        for t in d.get("native_terms", ())
    )
    return HamiltonianSpec(
        name=d["name"],
        modes=modes,
        terms=terms,
        native_terms=native,
        coupling_symbol=d.get("coupling_symbol", "g"),
    )


def spec_to_json(spec: HamiltonianSpec, indent: int | None = 2) -> str:
    return json.dumps(spec_to_dict(spec), indent=indent)


def spec_from_json(text: str) -> HamiltonianSpec:
    return spec_from_dict(json.loads(text))
