"""
Experiment configurations.

A config is either a JSON document or a plain Python file defining
UPPER_CASE names (`PLANT = {...}`, `FAMILY = {...}`), loaded the same way
as the settings and lowercased. Either way it is validated against
`ExperimentConfig`, whose JSON schema is what `shiftmpc schema` prints.
"""
import os
from typing import Any, Dict, List, Literal, Optional, Text

import numpy as np
import ujson
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from shiftmpc.admissible import AffineConstraintSet, AdmissibleSetError
from shiftmpc.basis import BasisError, BasisFamily, family_from_config, family_to_config
from shiftmpc.conf.loader import read_python_file
from shiftmpc.core import ShiftMpcError
from shiftmpc.lti import LtiProblem, MpcError, quadruple_integrator, zoh
from shiftmpc.nonlinear import (
    HANGING,
    PENDULUM_Q,
    PENDULUM_R,
    NlpError,
    PendulumParams,
    QuadraticCost,
    load_guess_csv,
    pendulum_constraints,
    pendulum_family,
)
from shiftmpc.sim import PendulumSetup, build_pendulum_setup

Matrix = List[List[float]]


class ConfigError(ShiftMpcError):
    """
    The experiment config is malformed. `path` locates the offending entry
    (dotted, as in the JSON schema).
    """

    def __init__(self, message: Text, path: Text = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PlantConfig(_Strict):
    kind: Literal["quadruple_integrator", "lti", "pendulum"] = "quadruple_integrator"
    ts: float = Field(0.02, gt=0)

    # Only for kind "lti". Continuous matrices get discretized with a
    # zero-order hold at `ts`.
    A: Optional[Matrix] = None
    B: Optional[Matrix] = None
    continuous: bool = False

    # Only for kind "pendulum", overrides of `PendulumParams`
    params: Dict[Text, float] = Field(default_factory=dict)


class CostConfig(_Strict):
    Q: Optional[Matrix] = None
    R: Optional[Matrix] = None


class ConstraintsConfig(_Strict):
    """
    Either symmetric bounds (index -> limit) or raw Cx, Cu, b rows.
    """

    x_bounds: Dict[int, float] = Field(default_factory=dict)
    u_bounds: Dict[int, float] = Field(default_factory=dict)
    Cx: Optional[Matrix] = None
    Cu: Optional[Matrix] = None
    b: Optional[List[float]] = None


class SweepConfig(_Strict):
    kind: Literal["nu", "s", "robustness"]
    grid: List[float] = Field(min_length=1)
    ics: int = Field(100, gt=0)
    runs: Optional[int] = Field(None, gt=0)
    s: int = Field(8, gt=0)
    nu: float = Field(1.0, gt=0)


class ExperimentConfig(_Strict):
    name: Text = "experiment"
    plant: PlantConfig = Field(default_factory=PlantConfig)
    family: Optional[Dict[Text, Any]] = None
    cost: CostConfig = Field(default_factory=CostConfig)
    constraints: Optional[ConstraintsConfig] = None
    nmax: Optional[int] = Field(None, ge=0)
    nmax_start: Optional[int] = Field(None, ge=0)
    nmax_couple_dynamics: bool = False
    x0: Optional[List[float]] = None
    steps: int = Field(2000, gt=0)
    disturbance: float = Field(0.0, ge=0)
    initial_guess: Optional[Text] = None
    sweep: Optional[SweepConfig] = None
    seed: int = Field(0, ge=0)
    output: Optional[Text] = None

    @property
    def is_pendulum(self) -> bool:
        return self.plant.kind == "pendulum"

    def dimensions(self):
        if self.is_pendulum:
            return 4, 1

        A, B = self.plant_matrices()
        return B.shape

    def plant_matrices(self):
        """
        (A, B) of a linear plant.
        """

        p = self.plant

        if p.kind == "quadruple_integrator":
            return quadruple_integrator(p.ts)

        if p.kind == "lti":
            if p.A is None or p.B is None:
                raise ConfigError("A and B are required for an LTI plant", "plant")

            A = np.array(p.A, dtype=float)
            B = np.array(p.B, dtype=float)

            if A.ndim != 2 or A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
                raise ConfigError(
                    f"A is {A.shape} and B is {B.shape}, they do not fit", "plant"
                )

            return zoh(A, B, p.ts) if p.continuous else (A, B)

        raise ConfigError("The pendulum is not a linear plant", "plant.kind")

    def basis_family(self) -> BasisFamily:
        if self.family is None:
            if self.is_pendulum:
                return pendulum_family(self.plant.ts)

            return family_from_config(
                {"kind": "laguerre", "s": 8, "nu": 0.8, "ts": self.plant.ts}
            )

        try:
            return family_from_config(self.family)
        except (BasisError, TypeError, ValueError) as e:
            raise ConfigError(str(e), "family")

    def constraint_set(self) -> AffineConstraintSet:
        n, m = self.dimensions()
        c = self.constraints

        if c is None:
            if self.is_pendulum:
                return pendulum_constraints()

            if self.plant.kind == "quadruple_integrator":
                return AffineConstraintSet.from_bounds(n, m, u_bounds={0: 0.5})

            return AffineConstraintSet.empty(n, m)

        try:
            if c.b is not None:
                rows = len(c.b)

                if not rows:
                    return AffineConstraintSet.empty(n, m)

                Cx = np.zeros((rows, n)) if c.Cx is None else np.array(c.Cx)
                Cu = np.zeros((rows, m)) if c.Cu is None else np.array(c.Cu)

                if Cx.shape != (rows, n) or Cu.shape != (rows, m):
                    raise ConfigError(
                        f"Cx must be {rows}x{n} and Cu {rows}x{m}", "constraints"
                    )

                return AffineConstraintSet(Cx=Cx, Cu=Cu, b=np.array(c.b))

            return AffineConstraintSet.from_bounds(n, m, c.x_bounds, c.u_bounds)
        except AdmissibleSetError as e:
            raise ConfigError(str(e), "constraints")

    def cost_matrices(self):
        n, m = self.dimensions()
        Q, R = self.cost.Q, self.cost.R

        if Q is None:
            Q = PENDULUM_Q if self.is_pendulum else np.eye(n)

        if R is None:
            if self.is_pendulum:
                R = PENDULUM_R
            elif self.plant.kind == "quadruple_integrator":
                R = 0.05 * np.eye(m)
            else:
                R = np.eye(m)

        return np.array(Q, dtype=float), np.array(R, dtype=float)

    def lti_problem(self) -> LtiProblem:
        A, B = self.plant_matrices()
        Q, R = self.cost_matrices()

        try:
            return LtiProblem(A, B, Q, R, self.constraint_set(), ts=self.plant.ts)
        except MpcError as e:
            raise ConfigError(str(e), "cost")

    def pendulum_setup(self) -> PendulumSetup:
        try:
            params = PendulumParams(**self.plant.params)
        except (TypeError, NlpError) as e:
            raise ConfigError(str(e), "plant.params")

        guess = None

        if self.initial_guess:
            U, X = load_guess_csv(self.initial_guess)
            guess = (X, U)

        setup = build_pendulum_setup(
            ts=self.plant.ts,
            params=params,
            family=self.basis_family(),
            nmax=self.nmax,
            nmax_start=0 if self.nmax_start is None else self.nmax_start,
            guess=guess,
        )

        Q, R = self.cost_matrices()

        if not (np.array_equal(Q, PENDULUM_Q) and np.array_equal(R, PENDULUM_R)):
            setup = PendulumSetup(
                plant=setup.plant,
                family=setup.family,
                cost=QuadraticCost(Q, R),
                cons=setup.cons,
                nmax=setup.nmax,
                guess=setup.guess,
            )

        return setup

    def initial_state(self) -> np.ndarray:
        n, _ = self.dimensions()

        if self.x0 is None:
            return HANGING.copy() if self.is_pendulum else np.full(n, 0.5)

        if len(self.x0) != n:
            raise ConfigError(f"Expected {n} values, got {len(self.x0)}", "x0")

        return np.array(self.x0, dtype=float)

    def resolved(self) -> Dict[Text, Any]:
        """
        The config with the family and constraints written out explicitly,
        so that it runs the same even if defaults change.
        """

        out = self.model_dump(mode="json")
        out["family"] = family_to_config(self.basis_family())

        cons = self.constraint_set()
        out["constraints"] = {
            "Cx": cons.Cx.tolist(),
            "Cu": cons.Cu.tolist(),
            "b": cons.b.tolist(),
            "x_bounds": {},
            "u_bounds": {},
        }

        return out


def _location(error: Dict) -> Text:
    return ".".join(str(part) for part in error.get("loc", ()))


def validate_config(data: Dict[Text, Any]) -> ExperimentConfig:
    """
    Validate raw data, turning pydantic's errors into a `ConfigError`
    pointing at the first offending entry.
    """

    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(first["msg"], _location(first) or "(root)")


def load_config(path: Text) -> ExperimentConfig:
    """
    Load an experiment config from a JSON file or a Python file.

    :raise ConfigError: unreadable or invalid file
    """

    try:
        if os.path.splitext(path)[1] == ".py":
            data = {k.lower(): v for k, v in read_python_file(path).items()}
        else:
            with open(path, encoding="utf-8") as f:
                data = ujson.load(f)
    except (OSError, ValueError, SyntaxError) as e:
        raise ConfigError(f"Cannot read {path}: {e}")

    if not isinstance(data, dict):
        raise ConfigError("A config must be a mapping", "(root)")

    return validate_config(data)


def config_schema() -> Dict[Text, Any]:
    return ExperimentConfig.model_json_schema()
