import csv
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Text

import numpy as np
import ujson

from shiftmpc.conf import settings
from shiftmpc.core import ShiftMpcError
from shiftmpc.utils import to_jsonable


class SimulationError(ShiftMpcError):
    """
    Closed-loop simulation cannot go on.
    """


class PlantDiverged(SimulationError):
    """
    The plant produced a non-finite state. The log up to that point is
    attached.
    """

    def __init__(self, message: Text, log: "ClosedLoopLog"):
        super().__init__(message)
        self.log = log


@dataclass
class StepRecord(object):
    """
    What happened at time k: state measured, input applied, optimal cost
    J(x(k)) and running cost l(x(k), u(k)).
    """

    k: int
    x: np.ndarray
    u: np.ndarray
    cost: float
    stage_cost: float
    feasible: bool
    iterations: int
    wall_time: float
    converged: bool = True
    warm: bool = False


# Column order of the CSV logs, see README
CSV_COLUMNS = [
    "k",
    "t",
    "x",
    "u",
    "cost",
    "stage_cost",
    "feasible",
    "iterations",
    "converged",
    "warm",
    "wall_time",
]


@dataclass
class ClosedLoopLog(object):
    """
    Records of one closed-loop run. The run stops early when the controller
    finds no feasible solution, `stop_reason` tells why.
    """

    ts: float = 0.0
    records: List[StepRecord] = field(default_factory=list)
    final_state: Optional[np.ndarray] = None
    stop_reason: Optional[Text] = None
    constraint_violation: float = 0.0
    metadata: Dict[Text, Any] = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def states(self) -> np.ndarray:
        """
        x(0) .. x(N), the final state included when the run completed.
        """

        rows = [r.x for r in self.records]

        if self.final_state is not None:
            rows.append(self.final_state)

        return np.array(rows)

    def inputs(self) -> np.ndarray:
        return np.array([r.u for r in self.records if r.feasible])

    @property
    def closed_loop_cost(self) -> float:
        return float(sum(r.stage_cost for r in self.records if r.feasible))

    @property
    def feasible(self) -> bool:
        return bool(self.records) and all(r.feasible for r in self.records)

    @property
    def converged(self) -> bool:
        return (
            self.final_state is not None
            and float(np.max(np.abs(self.final_state))) <= settings.CONVERGENCE_NORM
        )

    def summary(self) -> Dict[Text, Any]:
        walls = [r.wall_time for r in self.records]
        iterations = [r.iterations for r in self.records]

        return to_jsonable(
            {
                "schema_version": settings.SCHEMA_VERSION,
                "steps": len(self.records),
                "closed_loop_cost": self.closed_loop_cost,
                "feasible": self.feasible,
                "converged": self.converged,
                "stop_reason": self.stop_reason,
                "constraint_violation": self.constraint_violation,
                "max_wall_time": max(walls, default=0.0),
                "mean_wall_time": float(np.mean(walls)) if walls else 0.0,
                "max_iterations": max(iterations, default=0),
                "final_state": self.final_state,
                "metadata": self.metadata,
            }
        )

    def write_csv(self, path: Text) -> None:
        """
        One row per step. Vectors are spread over `x0`, `x1`, ... and `u0`,
        ... columns.
        """

        n = self.records[0].x.shape[0] if self.records else 0
        m = max((r.u.shape[0] for r in self.records), default=0)
        header = []

        for col in CSV_COLUMNS:
            if col == "x":
                header += [f"x{i}" for i in range(n)]
            elif col == "u":
                header += [f"u{j}" for j in range(m)]
            else:
                header.append(col)

        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(header)

            for r in self.records:
                u = list(r.u) if r.u.shape[0] else [float("nan")] * m
                writer.writerow(
                    [r.k, repr(r.k * self.ts)]
                    + [repr(float(v)) for v in r.x]
                    + [repr(float(v)) for v in u]
                    + [
                        repr(float(r.cost)),
                        repr(float(r.stage_cost)),
                        int(r.feasible),
                        r.iterations,
                        int(r.converged),
                        int(r.warm),
                        repr(float(r.wall_time)),
                    ]
                )

    def write_summary(self, path: Text) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(ujson.dumps(self.summary(), indent=2))
