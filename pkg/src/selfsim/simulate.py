"""Time evolution of the self-similar wave equation ``u_tt = Lap u`` on a periodic grid.

Two integrators are provided.  The spectral one rotates every Fourier mode
exactly with its frequency ``omega(k h)``; it is the reference.  The real-space
one is velocity Verlet driven by the field Laplacian, which exercises the force
path independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .affine import ChainParams
from .errors import InstabilityError, SamplingError
from .laplacian import Field, FieldOperator, spectral_multiplier

#: cap on stored snapshots per run, whatever the step count
MAX_SNAPSHOTS = 1024
#: consecutive energy increases that, past the stable envelope, count as blow-up
INSTABILITY_RUN = 100


def _parseval_weights(n: int) -> np.ndarray:
    c = np.full(n // 2 + 1, 2.0)
    c[0] = 1.0
    if n % 2 == 0:
        c[-1] = 1.0
    return c


@dataclass
class SpectralState:
    """rfft amplitudes of displacement and velocity at time ``t``."""

    u_hat: np.ndarray
    v_hat: np.ndarray
    n: int
    dx: float
    params: ChainParams
    t: float = 0.0
    tol: float = 1e-13

    def __post_init__(self):
        m = self.n // 2 + 1
        self.u_hat = np.asarray(self.u_hat, dtype=complex)
        self.v_hat = np.asarray(self.v_hat, dtype=complex)
        if self.u_hat.shape != (m,) or self.v_hat.shape != (m,):
            raise ValueError(f"expected {m} rfft amplitudes for n={self.n}")

    @classmethod
    def from_fields(cls, u: Field, v: Field | None, params: ChainParams, t: float = 0.0,
                    tol: float = 1e-13) -> "SpectralState":
        v_samples = np.zeros(u.n) if v is None else v.samples
        if v is not None and (v.n != u.n or v.dx != u.dx):
            raise ValueError("velocity field must share the displacement grid")
        return cls(np.fft.rfft(u.samples), np.fft.rfft(v_samples), u.n, u.dx, params, t, tol)

    def omega2(self) -> np.ndarray:
        return spectral_multiplier(self.n, self.dx, self.params, self.tol)[0]

    def fields(self) -> tuple[Field, Field]:
        u = np.fft.irfft(self.u_hat, n=self.n)
        v = np.fft.irfft(self.v_hat, n=self.n)
        return Field(u, self.dx), Field(v, self.dx)

    def mode_energies(self) -> np.ndarray:
        """``e_m = (|v_m|**2 + omega2_m |u_m|**2) / 2``, scaled so they sum to the total energy."""
        e = 0.5 * (np.abs(self.v_hat) ** 2 + self.omega2() * np.abs(self.u_hat) ** 2)
        return e * _parseval_weights(self.n) * self.dx / self.n

    def energy(self) -> float:
        return math.fsum(self.mode_energies())


def evolve_spectral(state: SpectralState, t_target: float) -> SpectralState:
    """Advance every mode exactly to ``t_target`` (backwards is allowed)."""
    dt = float(t_target) - state.t
    w = np.sqrt(state.omega2())
    c = np.cos(w * dt)
    s = np.sin(w * dt)
    moving = w > 0
    sinc_dt = np.where(moving, s / np.where(moving, w, 1.0), dt)
    u = state.u_hat * c + state.v_hat * sinc_dt
    v = -state.u_hat * (w * s) + state.v_hat * c
    return replace(state, u_hat=u, v_hat=v, t=float(t_target))


# ---------------------------------------------------------------- runs


@dataclass
class Trajectory:
    """Stored snapshots of a run together with its energy bookkeeping."""

    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    energy: np.ndarray
    dx: float
    params: ChainParams
    method: str
    shadow: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def field(self, i: int) -> Field:
        return Field(self.u[i], self.dx)

    def energy_oscillation(self) -> float:
        """``(max - min) / |E(0)|`` of the stored energy series."""
        ref = abs(float(self.energy[0]))
        if ref == 0.0:
            return float(np.ptp(self.energy))
        return float(np.ptp(self.energy)) / ref


def _schedule(steps: int, snapshots: int) -> np.ndarray:
    count = min(steps + 1, snapshots)
    return np.unique(np.round(np.linspace(0, steps, count)).astype(np.int64))


@dataclass
class SimRun:
    """Initial data and stepping controls for one evolution."""

    u0: Field
    v0: Field | None
    dt: float
    steps: int
    method: str = "realspace"
    interp: str = "fourier"
    order: int = 5
    snapshots: int = MAX_SNAPSHOTS
    tol: float = 1e-12
    check_stability: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if int(self.steps) != self.steps or self.steps < 0:
            raise ValueError(f"steps must be a nonnegative integer, got {self.steps!r}")
        self.steps = int(self.steps)
        if not 2 <= self.snapshots <= MAX_SNAPSHOTS:
            raise ValueError(f"snapshots must lie in [2, {MAX_SNAPSHOTS}], got {self.snapshots}")
        if self.method not in ("realspace", "spectral"):
            raise ValueError(f"method must be 'realspace' or 'spectral', got {self.method!r}")
        if self.v0 is None:
            self.v0 = self.u0.like(np.zeros(self.u0.n))
        if self.v0.n != self.u0.n or self.v0.dx != self.u0.dx:
            raise ValueError("velocity field must share the displacement grid")

    def schedule(self) -> np.ndarray:
        return _schedule(self.steps, self.snapshots)


def stability_limit(params: ChainParams, n: int, dx: float, interp: str = "fourier",
                    order: int = 5, tol: float = 1e-12) -> float:
    """Largest stable explicit step ``2 / omega_max`` for the grid."""
    return 2.0 / FieldOperator(n, dx, params, tol, interp, order).max_frequency()


def spectral_trajectory(run: SimRun, params: ChainParams) -> Trajectory:
    """Exact solution sampled on the run's snapshot schedule."""
    state = SpectralState.from_fields(run.u0, run.v0, params, 0.0, min(run.tol, 1e-13))
    idx = run.schedule()
    times = idx * run.dt
    us, vs, es = [], [], []
    for t in times:
        st = evolve_spectral(state, float(t))
        u, v = st.fields()
        us.append(u.samples)
        vs.append(v.samples)
        es.append(st.energy())
    return Trajectory(times, np.array(us), np.array(vs), np.array(es), run.u0.dx, params,
                      "spectral", meta={"steps": run.steps, "dt": run.dt})


def evolve_realspace(run: SimRun, params: ChainParams) -> Trajectory:
    """Velocity-Verlet trajectory with the chain's energy at every snapshot.

    ``energy`` is the chain Hamiltonian ``|v|**2/2 + <u, -Lap u>/2`` (grid sums
    times ``dx``).  ``shadow`` is the quantity Verlet conserves exactly for a
    linear force, ``H - dt**2/8 |Lap u|**2``; the run's extremes over all steps
    are kept in ``meta``.  Raises :class:`InstabilityError` when the energy rises
    for 100 consecutive steps beyond the envelope a stable run can reach.
    """
    u0, dt = run.u0, run.dt
    op = FieldOperator(u0.n, u0.dx, params, run.tol, run.interp, run.order)
    w_max = op.max_frequency()
    q = (dt * w_max) ** 2 / 4.0
    if run.check_stability and q >= 1.0:
        raise ValueError(f"dt={dt!r} exceeds the stability limit {2.0 / w_max!r}")

    dx = u0.dx
    u = u0.samples.copy()
    v = run.v0.samples.copy()
    a = op(u)

    def energies(u, v, a):
        h = 0.5 * dx * (float(np.dot(v, v)) - float(np.dot(u, a)))
        return h, h - dt * dt / 8.0 * dx * float(np.dot(a, a))

    h0, s0 = energies(u, v, a)
    # a stable run keeps H within shadow / (1 - q) <= H(0) / (1 - q)
    envelope = 2.0 * abs(h0) / (1.0 - q) if q < 1.0 else 2.0 * abs(h0)
    schedule = run.schedule()
    want = set(schedule.tolist())
    us, vs, es, ss = [], [], [], []
    extremes = [h0, h0, s0, s0]
    rising, last = 0, h0

    for step in range(run.steps + 1):
        if step > 0:
            v += 0.5 * dt * a
            u += dt * v
            a = op(u)
            v += 0.5 * dt * a
            h, s = energies(u, v, a)
            extremes = [min(extremes[0], h), max(extremes[1], h), min(extremes[2], s), max(extremes[3], s)]
            rising = rising + 1 if h > last else 0
            last = h
            if (rising >= INSTABILITY_RUN and h > envelope) or not math.isfinite(h):
                raise InstabilityError(
                    f"energy rose for {rising} consecutive steps to {h:.6g} "
                    f"(start {h0:.6g}) at step {step}; dt*omega_max={dt * w_max:.4g}"
                )
        else:
            h, s = h0, s0
        if step in want:
            us.append(u.copy())
            vs.append(v.copy())
            es.append(h)
            ss.append(s)

    ref = abs(h0) if h0 != 0.0 else 1.0
    meta = {
        "steps": run.steps,
        "dt": dt,
        "omega_max": w_max,
        "interp": run.interp,
        "energy_oscillation": (extremes[1] - extremes[0]) / ref,
        "shadow_oscillation": (extremes[3] - extremes[2]) / (abs(s0) if s0 != 0.0 else 1.0),
    }
    return Trajectory(schedule * dt, np.array(us), np.array(vs), np.array(es), dx, params,
                      "realspace", shadow=np.array(ss), meta=meta)


def simulate(run: SimRun, params: ChainParams) -> Trajectory:
    """Dispatch on ``run.method``."""
    if run.method == "spectral":
        return spectral_trajectory(run, params)
    return evolve_realspace(run, params)


# ---------------------------------------------------------------- wave-equation residual


def dalembert_series(traj: Trajectory, params: ChainParams, tol: float = 1e-13) -> np.ndarray:
    """Grid L2 norm of ``Lap u - u_tt`` at each interior snapshot.

    ``u_tt`` is the centred second difference in time, so the snapshots must
    be equally spaced.
    """
    if len(traj) < 3:
        raise SamplingError("the residual needs at least 3 consecutive snapshots")
    steps = np.diff(traj.times)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0) or steps[0] <= 0:
        raise SamplingError("snapshots must be equally spaced in time")
    dt = float(steps[0])
    op = FieldOperator(traj.u.shape[1], traj.dx, params, tol)
    out = np.empty(len(traj) - 2)
    for k in range(1, len(traj) - 1):
        utt = (traj.u[k + 1] - 2.0 * traj.u[k] + traj.u[k - 1]) / dt**2
        r = op(traj.u[k]) - utt
        out[k - 1] = math.sqrt(float(np.dot(r, r)) * traj.dx)
    return out


def dalembert_residual(traj: Trajectory, params: ChainParams, tol: float = 1e-13) -> float:
    """Largest residual of the wave equation over the trajectory."""
    return float(np.max(dalembert_series(traj, params, tol)))


# ---------------------------------------------------------------- initial data


def preset_mode(n: int = 64, dx: float = 1.0, m: int = 1, amplitude: float = 1.0, seed=None):
    """Standing cosine wave on grid mode ``m``, at rest."""
    u = Field.mode(n, dx, m, amplitude)
    return u, u.like(np.zeros(n))


def preset_gaussian(n: int = 64, dx: float = 1.0, width: float | None = None, seed=None):
    """Gaussian bump at the centre of the domain, at rest."""
    width = width if width is not None else 4.0 * dx
    x = np.arange(n) * dx
    u = Field(np.exp(-(((x - 0.5 * n * dx) / width) ** 2)), dx)
    return u, u.like(np.zeros(n))


def preset_random(n: int = 64, dx: float = 1.0, amplitude: float = 1e-3, seed: int | None = 0):
    """Small random displacement and velocity, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    return Field(amplitude * rng.standard_normal(n), dx), Field(amplitude * rng.standard_normal(n), dx)


PRESETS = {"mode": preset_mode, "gaussian": preset_gaussian, "random": preset_random}
