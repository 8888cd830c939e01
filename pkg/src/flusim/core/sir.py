"""
Classical SIR baseline.

Normalized Kermack-McKendrick system

    s' = -beta * s * i
    i' =  beta * s * i - gamma * i
    r' =  gamma * i

integrated with fixed-step fourth-order Runge-Kutta, plus the analytic
oracles (epidemic peak, final size) used to check both the integrator and
the qualitative shape of agent-based runs.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from flusim.core.disease import HealthState
from flusim.core.engine import DailyCensus
from flusim.core.exceptions import IntegrationError, ParameterError

REMOVED_CODES = (HealthState.DEAD, HealthState.RECOVERED, HealthState.IMMUNIZED)


class SirParams(BaseModel):
    """Rates and initial fractions of the normalized SIR system."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    beta: float = Field(gt=0.0, description="Transmission rate per day")
    gamma: float = Field(gt=0.0, description="Recovery rate per day")
    i0: float = Field(default=1e-4, ge=0.0, le=1.0)
    m0: float = Field(default=0.0, ge=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_fractions(self) -> "SirParams":
        if self.i0 + self.m0 > 1.0:
            raise ValueError(f"i0 + m0 must not exceed 1, got {self.i0 + self.m0}")
        return self

    @classmethod
    def from_r0(
        cls, r0: float, duration: float, i0: float = 1e-4, m0: float = 0.0
    ) -> "SirParams":
        """Build from R0 and mean infectious duration (days): gamma = 1/duration."""
        if r0 <= 0 or duration <= 0:
            raise ParameterError(f"r0 and duration must be > 0, got r0={r0}, duration={duration}")
        gamma = 1.0 / duration
        return cls(beta=r0 * gamma, gamma=gamma, i0=i0, m0=m0)

    @property
    def r0(self) -> float:
        return self.beta / self.gamma

    @property
    def s0(self) -> float:
        return 1.0 - self.i0 - self.m0


@dataclass(frozen=True)
class SirTrajectory:
    """Samples of the integrated system at t = 0, dt, 2 dt, ..."""

    dt: float
    t: np.ndarray
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.t, "s": self.s, "i": self.i, "r": self.r})

    def to_csv(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, encoding="utf-8")
        return path

    def at_days(self, days: Sequence[int] | np.ndarray) -> "SirTrajectory":
        """Nearest samples to the given day indices (clipped to the horizon)."""
        idx = np.clip(np.rint(np.asarray(days, dtype=float) / self.dt), 0, len(self.t) - 1)
        idx = idx.astype(int)
        return SirTrajectory(self.dt, self.t[idx], self.s[idx], self.i[idx], self.r[idx])


def _derivative(beta: float, gamma: float, s: float, i: float) -> tuple[float, float, float]:
    infection = beta * s * i
    recovery = gamma * i
    return -infection, infection - recovery, recovery


def integrate(params: SirParams, t_end: float, dt: float) -> SirTrajectory:
    """Fixed-step RK4 from (s0, i0, m0) to ``t_end``.

    Raises:
        ParameterError: If ``dt <= 0`` or ``t_end < dt``.
        IntegrationError: If the state becomes non-finite.
    """
    if dt <= 0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    if t_end < dt:
        raise ParameterError(f"t_end ({t_end}) must be >= dt ({dt})")

    ratio = t_end / dt
    steps = round(ratio) if abs(ratio - round(ratio)) < 1e-6 else math.floor(ratio)
    t = np.arange(steps + 1, dtype=float) * dt
    s_out = np.empty(steps + 1)
    i_out = np.empty(steps + 1)
    r_out = np.empty(steps + 1)

    beta, gamma = params.beta, params.gamma
    s, i, r = params.s0, params.i0, params.m0
    s_out[0], i_out[0], r_out[0] = s, i, r
    half = dt / 2.0

    for n in range(1, steps + 1):
        k1 = _derivative(beta, gamma, s, i)
        k2 = _derivative(beta, gamma, s + half * k1[0], i + half * k1[1])
        k3 = _derivative(beta, gamma, s + half * k2[0], i + half * k2[1])
        k4 = _derivative(beta, gamma, s + dt * k3[0], i + dt * k3[1])
        s += dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        i += dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        r += dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if not (math.isfinite(s) and math.isfinite(i) and math.isfinite(r)):
            raise IntegrationError(
                f"non-finite state at step {n} (t={n * dt:g}); try a smaller dt than {dt:g}"
            )
        s_out[n], i_out[n], r_out[n] = s, i, r

    return SirTrajectory(dt=dt, t=t, s=s_out, i=i_out, r=r_out)


def peak_infected(traj: SirTrajectory) -> tuple[float, float]:
    """(t_peak, i_peak); ties go to the earliest sample."""
    if len(traj) == 0:
        raise ParameterError("empty trajectory")
    k = int(np.argmax(traj.i))
    return float(traj.t[k]), float(traj.i[k])


def final_size(
    r0: float, tol: float = 1e-10, damping: float = 0.5, max_iter: int = 1_000_000
) -> float:
    """Nonzero root of r = 1 - exp(-r0 r) for r0 > 1, else 0.

    Damped fixed-point iteration started from r = 1.
    """
    if r0 <= 0:
        raise ParameterError(f"r0 must be > 0, got {r0}")
    if r0 <= 1.0:
        return 0.0
    r = 1.0
    for _ in range(max_iter):
        nxt = (1.0 - damping) * r + damping * (1.0 - math.exp(-r0 * r))
        if abs(nxt - r) < tol:
            return nxt
        r = nxt
    return r


def analytic_peak(r0: float, s0: float = 1.0, i0: float = 0.0) -> float:
    """Peak infected fraction i0 + s0 - (1 + ln(r0 s0)) / r0 (i0 when r0 s0 <= 1)."""
    if r0 <= 0:
        raise ParameterError(f"r0 must be > 0, got {r0}")
    if r0 * s0 <= 1.0:
        return i0
    return i0 + s0 - (1.0 + math.log(r0 * s0)) / r0


def is_unimodal(
    series: Sequence[float] | np.ndarray, tolerance: float = 0.0, window: int = 1
) -> bool:
    """Rises to a single maximum then falls, ignoring wiggles up to ``tolerance``.

    With ``window > 1`` the test runs on a centred rolling mean of that width.
    """
    if window < 1:
        raise ParameterError(f"window must be >= 1, got {window}")
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        return True
    if window > 1:
        values = pd.Series(values).rolling(window, center=True, min_periods=1).mean().to_numpy()
    peak = int(np.argmax(values))
    rising = values[: peak + 1]
    if np.any(rising < np.maximum.accumulate(rising) - tolerance):
        return False
    falling = values[peak:]
    return not np.any(falling > np.minimum.accumulate(falling) + tolerance)


@dataclass(frozen=True)
class AlignmentReport:
    """ABM aggregate curves against the ODE, sampled on census days."""

    days: np.ndarray
    abm_s: np.ndarray
    abm_i: np.ndarray
    abm_r: np.ndarray
    ode_s: np.ndarray
    ode_i: np.ndarray
    ode_r: np.ndarray
    abm_peak_day: int
    ode_peak_day: int
    peak_day_delta: int
    peak_height_delta: float
    rmse: float
    unimodal: bool

    def curves_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "day": self.days,
                "abm_s": self.abm_s,
                "abm_i": self.abm_i,
                "abm_r": self.abm_r,
                "ode_s": self.ode_s,
                "ode_i": self.ode_i,
                "ode_r": self.ode_r,
            }
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "abm_peak_day": self.abm_peak_day,
            "ode_peak_day": self.ode_peak_day,
            "peak_day_delta": self.peak_day_delta,
            "abm_peak_fraction": float(self.abm_i.max()) if self.abm_i.size else 0.0,
            "ode_peak_fraction": float(self.ode_i.max()) if self.ode_i.size else 0.0,
            "peak_height_delta": self.peak_height_delta,
            "rmse": self.rmse,
            "unimodal": self.unimodal,
        }


def align_abm(
    census: Sequence[DailyCensus],
    traj: SirTrajectory,
    population: int | None = None,
    tolerance: float = 0.0,
    window: int = 1,
) -> AlignmentReport:
    """Compare one ABM run with an ODE trajectory.

    ABM classes map to SIR as S -> s, C+E+I+Q+NQ -> i, D+R+M -> r, each
    divided by the population. Census day d is taken after d + 1 daily steps,
    so it is matched with ODE time t = d + 1; the longer series is truncated.
    Peak days are reported on the census-day axis. ``tolerance`` and ``window``
    configure the unimodality test.
    """
    if not census:
        raise ParameterError("census series is empty")
    n = population or census[0].population
    horizon = int(math.floor(float(traj.t[-1]) + 1e-9))
    length = min(len(census), horizon)
    if length == 0:
        raise ParameterError(f"ODE horizon t = {float(traj.t[-1])} covers no census day")
    rows = census[:length]

    days = np.array([c.day for c in rows], dtype=int)
    abm_s = np.array([c.counts[HealthState.SUSCEPTIBLE] for c in rows], dtype=float) / n
    abm_i = np.array([c.infected for c in rows], dtype=float) / n
    abm_r = np.array([sum(c.counts[h] for h in REMOVED_CODES) for c in rows], dtype=float) / n
    ode = traj.at_days(days + 1)

    abm_peak = int(np.argmax(abm_i))
    ode_peak = int(np.argmax(ode.i))
    return AlignmentReport(
        days=days,
        abm_s=abm_s,
        abm_i=abm_i,
        abm_r=abm_r,
        ode_s=ode.s,
        ode_i=ode.i,
        ode_r=ode.r,
        abm_peak_day=int(days[abm_peak]),
        ode_peak_day=int(days[ode_peak]),
        peak_day_delta=int(days[abm_peak] - days[ode_peak]),
        peak_height_delta=float(abm_i[abm_peak] - ode.i[ode_peak]),
        rmse=float(np.sqrt(np.mean((abm_i - ode.i) ** 2))),
        unimodal=is_unimodal(abm_i, tolerance, window),
    )
