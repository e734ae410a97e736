"""Analytic readout pulses: active four-tone readout (A4R) and the CLEAR baseline.

Both are sequences of constant segments.  Segment boundaries need not fall on
the sample grid; a straddling sample takes the time-weighted mean amplitude.
The assembled waveform is then band-limited with the same Gaussian filter
used for learned pulses.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .device import DeviceParams
from .errors import CalibrationError, InvalidParameterError
from .langevin import DT_NS, SUBSTEPS, DriveWaveform, decay_rates, simulate_batch
from .metrics import ReadoutMetrics, batch_metrics
from .neldermead import nelder_mead
from .pulses import SIGMA_NS, gaussian_smooth_array, steady_state_amplitude

MAX_DURATION_NS = 8000.0
KICKBACK_MAX_NS = 100.0


def a4r_tau1(mu: float, kappa: float) -> float:
    """Ring-up duration (ns) at drive mu*A0 to reach the steady-state population."""
    if not mu > 1:
        raise InvalidParameterError("ring-up needs mu > 1")
    return 2.0 / kappa * math.log(mu / (mu - 1)) * 1e3


def a4r_tau3(mu: float, kappa: float) -> float:
    """Depletion duration (ns) at drive -mu*A0 starting from steady state."""
    if not mu > 0:
        raise InvalidParameterError("depletion needs mu > 0")
    return 2.0 / kappa * math.log((mu + 1) / mu) * 1e3


# ---------------------------------------------------------------- waveforms

def sample_segments(segments, dt: float = DT_NS) -> np.ndarray:
    """Cell-averaged samples of consecutive (amplitude, duration_ns) segments."""
    amps = np.array([a for a, _ in segments], dtype=float)
    durs = np.array([d for _, d in segments], dtype=float)
    if np.any(durs < 0):
        raise InvalidParameterError("segment durations must be non-negative")
    total = durs.sum()
    n = max(1, int(math.ceil(total / dt - 1e-9)))
    lo = np.arange(n) * dt
    hi = lo + dt
    ends = np.cumsum(durs)
    starts = ends - durs
    overlap = np.clip(np.minimum(hi[:, None], ends[None]) - np.maximum(lo[:, None], starts[None]), 0, None)
    return overlap @ amps / dt


def build_segments(segments, dt: float = DT_NS, sigma_ns: float | None = SIGMA_NS,
                   max_duration_ns: float = MAX_DURATION_NS, pad_ns: float = 0.0) -> DriveWaveform:
    total = sum(d for _, d in segments)
    if total > max_duration_ns:
        raise InvalidParameterError(f"pulse duration {total:.1f} ns exceeds {max_duration_ns:.1f} ns")
    x = sample_segments(list(segments) + ([(0.0, pad_ns)] if pad_ns > 0 else []), dt)
    if sigma_ns:
        x = gaussian_smooth_array(x, sigma_ns, dt)
    return DriveWaveform(x, dt)


def _metrics_of(device: DeviceParams, wave: DriveWaveform) -> ReadoutMetrics:
    alpha = simulate_batch(device, wave.samples, wave.dt)
    b = batch_metrics(alpha, device, np.arange(alpha.shape[-1]) * wave.dt / SUBSTEPS)
    return ReadoutMetrics(**{k: float(b[k][0]) for k in
                             ("f_max", "t_f_max", "t_min_n", "n_max", "n_residual", "tau_r", "infidelity")})


def _photons(alpha: np.ndarray) -> np.ndarray:
    return np.maximum(np.abs(alpha[:, 0]) ** 2, np.abs(alpha[:, 1]) ** 2)


# ---------------------------------------------------------------- A4R

@dataclass(frozen=True)
class A4RParams:
    a1: float
    a2: float
    a3: float
    a4: float
    tau1: float
    tau2: float
    tau3: float
    tau4: float

    def __post_init__(self):
        if min(self.tau1, self.tau2, self.tau3, self.tau4) < 0:
            raise InvalidParameterError("A4R durations must be non-negative")

    def segments(self):
        return [(self.a1, self.tau1), (self.a2, self.tau2), (self.a3, self.tau3), (self.a4, self.tau4)]

    @property
    def duration(self) -> float:
        return self.tau1 + self.tau2 + self.tau3 + self.tau4

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _check_amplitudes(amps, device: DeviceParams):
    bound = device.mu * steady_state_amplitude(device) * (1 + 1e-9)
    if any(abs(a) > bound for a in amps):
        raise InvalidParameterError(f"segment amplitude exceeds mu*A0 = {bound:.3f}")


def build_a4r(params: A4RParams, device: DeviceParams, dt: float = DT_NS,
              max_duration_ns: float = MAX_DURATION_NS, sigma_ns: float | None = SIGMA_NS) -> DriveWaveform:
    _check_amplitudes([params.a1, params.a2, params.a3, params.a4], device)
    a0 = steady_state_amplitude(device)
    if not math.isclose(params.a2, a0, rel_tol=1e-6):
        raise InvalidParameterError("A4R readout amplitude must equal the steady-state amplitude")
    return build_segments(params.segments(), dt, sigma_ns, max_duration_ns)




def _shape(segments, dt: float, sigma_ns: float | None) -> np.ndarray:
    x = sample_segments(segments, dt)
    return gaussian_smooth_array(x, sigma_ns, dt) if sigma_ns else x


def _fields(device: DeviceParams, waves: list[np.ndarray], dt: float, chunk: int = 256) -> np.ndarray:
    """Fields for ragged waveforms, zero-padded to a common length."""
    n = max(w.size for w in waves)
    out = []
    for k in range(0, len(waves), chunk):
        part = waves[k:k + chunk]
        a = np.zeros((len(part), n))
        for i, w in enumerate(part):
            a[i, : w.size] = w
        out.append(simulate_batch(device, a, dt))
    return np.concatenate(out)


def _ragged_metrics(device: DeviceParams, fields: np.ndarray, lengths: np.ndarray, dt: float) -> dict:
    """batch_metrics where row i only runs until the end of its own waveform."""
    lengths = np.asarray(lengths)
    keys = ("f_max", "infidelity", "t_f_max", "t_min_n", "n_max", "n_residual", "tau_r")
    out = {k: np.empty(lengths.size) for k in keys}
    for n in np.unique(lengths):
        rows = np.nonzero(lengths == n)[0]
        t = np.arange(n * SUBSTEPS + 1) * dt / SUBSTEPS
        b = batch_metrics(fields[rows, :, : n * SUBSTEPS + 1], device, t)
        for k in keys:
            out[k][rows] = b[k]
    return out


@dataclass
class A4RCalibration:
    params: A4RParams
    metrics: ReadoutMetrics
    tau1_seed: float
    tau3_seed: float
    ringup_photons: float
    depletion_residual: float
    kickback_residual: float
    converged: bool


def _ringup_scan(device, amp, durations, hold_ns, dt, sigma_ns):
    """Population at the end of each ring-up and its peak during a following hold at A0."""
    a0 = steady_state_amplitude(device)
    waves = [_shape([(amp, d), (a0, hold_ns)], dt, sigma_ns) for d in durations]
    n = _photons(_fields(device, waves, dt))
    sub = dt / SUBSTEPS
    idx = np.rint(np.asarray(durations) / sub).astype(int)
    n_end = n[np.arange(len(waves)), idx]
    peak = np.array([n[i, : int((d + hold_ns) / sub) + 1].max() for i, d in enumerate(durations)])
    return n_end, peak


def _shortest_best_readout(device, head, tail, t_max, dt, sigma_ns, tol, fine_step):
    """Shortest hold at A0 whose max fidelity is within ``tol`` of the best over [0, t_max]."""
    a0 = steady_state_amplitude(device)

    def infid(holds):
        waves = [_shape(head + [(a0, h)] + tail, dt, sigma_ns) for h in holds]
        return _fields_metric(device, waves, dt)["infidelity"]

    coarse_step = max(fine_step, t_max / 200)
    coarse = np.arange(0.0, t_max + 1e-9, coarse_step)
    ic = infid(coarse)
    target = ic.min() + tol
    k = int(np.nonzero(ic <= target)[0][0])
    fine = np.arange(max(coarse[max(k - 1, 0)], 0.0), coarse[k] + 1e-9, fine_step)
    fi = infid(fine)
    best = min(ic.min(), fi.min())
    ok = np.nonzero(fi <= best + tol)[0]
    return float(fine[ok[0]] if ok.size else coarse[k])


def _fields_metric(device, waves, dt):
    lengths = np.array([w.size for w in waves])
    return _ragged_metrics(device, _fields(device, waves, dt), lengths, dt)


def _kick_scan(device, head, a3, t3s, t4s, dt, sigma_ns):
    """Least-squares kickback amplitude and resulting metrics for each (t3, t4).

    The field is linear in a4, so the amplitude that best empties the
    resonator at the pulse end is a projection; it is then clipped to the
    amplitude bound.
    """
    bound = device.mu * steady_state_amplitude(device)
    t_head = sum(d for _, d in head)
    base = [_shape(head + [(a3, t3), (0.0, t4)], dt, sigma_ns) for t3, t4 in zip(t3s, t4s)]
    unit = [_shape([(0.0, t_head + t3), (1.0, t4)], dt, sigma_ns) for t3, t4 in zip(t3s, t4s)]
    lengths = np.array([w.size for w in base])
    f = _fields(device, base + unit, dt)
    c, d = f[: len(base)], f[len(base):]
    rows = np.arange(len(base))
    ce, de = c[rows, :, lengths * SUBSTEPS], d[rows, :, lengths * SUBSTEPS]
    den = np.sum(np.abs(de) ** 2, axis=1)
    a4 = -np.sum((np.conj(de) * ce).real, axis=1) / np.where(den > 0, den, 1.0)
    a4 = np.clip(np.where(den > 0, a4, 0.0), -bound, bound)
    met = _ragged_metrics(device, c + a4[:, None, None] * d, lengths, dt)
    return a4, met


def calibrate_a4r(device: DeviceParams, dt: float = DT_NS, sigma_ns: float | None = SIGMA_NS, *,
                  tau1_range=(0.05, 1.5), tau1_points: int = 117, tau2_max_ns: float | None = None,
                  tau2_step_ns: float = 1.5, fidelity_tol: float = 1e-4, tau3_range=(0.3, 3.0),
                  tau3_points: int = 55, tau4_points: int = 51, residual_margin: float = 1.0,
                  polish: bool = True, strict: bool = True) -> A4RCalibration:
    """Three-step tune-up of the A4R parameters in simulation.

    1. ring-up at mu*A0; tau1 is swept around :func:`a4r_tau1` for the best
       match of the end-of-ring-up population to N0, penalising overshoot
       above N0 during a following hold at A0;
    2. readout at A0 for the shortest tau2 whose max fidelity is within
       ``fidelity_tol`` of the best one;
    3. depletion at -mu*A0 and a kickback: (tau3, tau4) on a grid around
       :func:`a4r_tau3` and [0, 100] ns, a4 by least squares, keeping the
       shortest reset time among points that leave at most
       ``residual_margin * N_I`` photons, then a simplex polish of (tau3, tau4).
       The margin leaves headroom for parameter drift: with m = 8 every
       e-fold of residual above N_I costs 8/kappa of modelled reset time.
    """
    a0 = steady_state_amplitude(device)
    mu, kappa = device.mu, device.kappa
    a1, a3 = mu * a0, -mu * a0
    tau1_0, tau3_0 = a4r_tau1(mu, kappa), a4r_tau3(mu, kappa)

    # 1. ring-up
    hold = 2.0 / kappa * 1e3
    cands = tau1_0 * np.linspace(*tau1_range, tau1_points)
    n_end, peak = _ringup_scan(device, a1, cands, hold, dt, sigma_ns)
    err = np.abs(n_end - device.n0) / device.n0 + np.maximum(peak - 1.02 * device.n0, 0.0) / device.n0
    k = int(np.argmin(err))
    tau1, ring_n = float(cands[k]), float(n_end[k])

    # 2. readout
    if tau2_max_ns is None:
        tau2_max_ns = min(max(12.0 / kappa * 1e3, 300.0), 3000.0)
    tau2 = _shortest_best_readout(device, [(a1, tau1)], [(a3, tau3_0)], tau2_max_ns, dt, sigma_ns,
                                  fidelity_tol, tau2_step_ns)
    head = [(a1, tau1), (a0, tau2)]

    # 3. depletion + kickback
    g3, g4 = np.meshgrid(tau3_0 * np.linspace(*tau3_range, tau3_points),
                         np.linspace(0.0, KICKBACK_MAX_NS, tau4_points))
    t3s, t4s = g3.ravel(), g4.ravel()
    a4s, met = _kick_scan(device, head, a3, t3s, t4s, dt, sigma_ns)
    n_ok = residual_margin * device.n_target
    feasible = met["n_residual"] <= n_ok
    if feasible.any():
        score = np.where(feasible, met["tau_r"] + 1e-6 * (t3s + t4s), np.inf)
    else:
        score = met["n_residual"]
    k = int(np.argmin(score))
    t3, t4, best = float(t3s[k]), float(t4s[k]), float(score[k])

    if polish and feasible.any():
        def clamp(x):
            return max(float(x[0]), 0.0), float(np.clip(x[1], 0.0, KICKBACK_MAX_NS))

        def objective(x):
            u3, u4 = clamp(x)
            _, m = _kick_scan(device, head, a3, [u3], [u4], dt, sigma_ns)
            excess = max(m["n_residual"][0] - n_ok, 0.0) / n_ok
            return m["tau_r"][0] + 1e-6 * (u3 + u4) + 1e4 * excess

        res = nelder_mead(objective, [t3, t4], step=[2 * dt, 2 * dt], xtol=0.1, maxiter=200)
        if res.fun < best:
            t3, t4 = clamp(res.x)

    a4 = float(_kick_scan(device, head, a3, [t3], [t4], dt, sigma_ns)[0][0])
    dep = _fields(device, [_shape(head + [(a3, t3)], dt, sigma_ns)], dt)
    dep_res = float(_photons(dep)[0, -1])
    params = A4RParams(a1, a0, a3, a4, tau1, tau2, t3, t4)
    m = _metrics_of(device, build_a4r(params, device, dt, sigma_ns=sigma_ns))
    ok = m.n_residual <= device.n_target
    cal = A4RCalibration(params, m, tau1_0, tau3_0, ring_n, dep_res, m.n_residual, ok)
    if strict and not ok:
        raise CalibrationError("A4R reset leaves too many photons",
                               {"n_residual": m.n_residual, "n_target": device.n_target,
                                "params": params.to_dict()})
    return cal


# ---------------------------------------------------------------- CLEAR

CLEAR_DURATIONS_NS = tuple(float(d) for d in range(20, 201, 20))
CLEAR_RESIDUAL_TARGET = 0.1


@dataclass(frozen=True)
class ClearParams:
    c1: float
    c2: float
    d_ring: float
    a_hold: float
    d_hold: float
    c3: float
    c4: float
    d_reset: float

    def __post_init__(self):
        if min(self.d_ring, self.d_hold, self.d_reset) < 0:
            raise InvalidParameterError("CLEAR durations must be non-negative")

    def segments(self):
        return [(self.c1, self.d_ring), (self.c2, self.d_ring), (self.a_hold, self.d_hold),
                (self.c3, self.d_reset), (self.c4, self.d_reset)]

    @property
    def duration(self) -> float:
        return 2 * self.d_ring + self.d_hold + 2 * self.d_reset

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def build_clear(params: ClearParams, device: DeviceParams, dt: float = DT_NS,
                max_duration_ns: float = MAX_DURATION_NS, sigma_ns: float | None = SIGMA_NS) -> DriveWaveform:
    _check_amplitudes([params.c1, params.c2, params.a_hold, params.c3, params.c4], device)
    return build_segments(params.segments(), dt, sigma_ns, max_duration_ns)


@dataclass
class ClearResult:
    params: ClearParams
    metrics: ReadoutMetrics
    ring_error: float
    reset_residual: float
    converged: bool
    message: str = ""


def steady_state_fields(device: DeviceParams, amplitude: float) -> np.ndarray:
    """Fixed points (g, e) of the field equation under a constant drive."""
    return -1j * amplitude / decay_rates(device)


def _end_fields(device, segs, dt, sigma_ns, t_end=None):
    w = _shape(segs, dt, sigma_ns)
    f = _fields(device, [w], dt)[0]
    k = w.size * SUBSTEPS if t_end is None else int(round(t_end / (dt / SUBSTEPS)))
    return f, k


def optimize_clear(device: DeviceParams, dt: float = DT_NS, sigma_ns: float | None = SIGMA_NS, *,
                   ring_durations=CLEAR_DURATIONS_NS, reset_durations=CLEAR_DURATIONS_NS,
                   residual_target: float = CLEAR_RESIDUAL_TARGET, ring_tol: float = 0.05,
                   hold_max_ns: float | None = None, maxiter: int = 300) -> ClearResult:
    """CLEAR-style pulse: a two-step ring-up, a square at A0 cut at the time of
    max fidelity, and a two-step reset.

    For each shared ring-up duration the two amplitudes are fitted by simplex
    to land on the steady-state fields, with a penalty for exceeding N0.
    For each shared reset duration the two reset amplitudes are fitted by
    simplex to bring the population down to ``residual_target``.  The
    combination with the shortest reset time wins, preferring points whose
    relative field mismatch after ring-up is at most ``ring_tol``.  Amplitudes are bounded by
    mu*A0; durations come from the outer grids.
    """
    a0 = steady_state_amplitude(device)
    mu, n0 = device.mu, device.n0
    alpha_ss = steady_state_fields(device, a0)
    if hold_max_ns is None:
        hold_max_ns = min(max(12.0 / device.kappa * 1e3, 300.0), 3000.0)

    def amps(x):
        return [float(v) for v in np.clip(np.asarray(x, dtype=float), -mu, mu) * a0]

    def cap_penalty(f):
        return max(float(_photons(f[None])[0].max()) - n0, 0.0) / n0

    best = None
    for d_ring in ring_durations:
        def ring_cost(x, d=d_ring):
            c1, c2 = amps(x)
            f, k = _end_fields(device, [(c1, d), (c2, d), (a0, 4 * d)], dt, sigma_ns, t_end=2 * d)
            mismatch = float(np.sum(np.abs(f[:, k] - alpha_ss) ** 2)) / n0
            return mismatch + 10 * cap_penalty(f[:, : k + 1])

        r = nelder_mead(ring_cost, [min(2.0, mu), 1.0], step=[0.25, 0.25], xtol=1e-5, maxiter=maxiter)
        c1, c2 = amps(r.x)
        head = [(c1, d_ring), (c2, d_ring)]
        # cut the square at the fidelity peak of the un-reset pulse
        probe = _fields_metric(device, [_shape(head + [(a0, hold_max_ns)], dt, sigma_ns)], dt)
        d_hold = max(float(probe["t_f_max"][0]) - 2 * d_ring, 0.0)
        head = head + [(a0, d_hold)]
        for d_reset in reset_durations:
            def reset_cost(x, d=d_reset):
                c3, c4 = amps(x)
                f, k = _end_fields(device, head + [(c3, d), (c4, d)], dt, sigma_ns)
                res = float(_photons(f[None])[0, k])
                return max(math.log(res / residual_target + 1e-300), 0.0) + 0.01 * res / residual_target \
                    + 10 * cap_penalty(f)

            s = nelder_mead(reset_cost, [-min(2.0, mu), 0.5], step=[0.25, 0.25], xtol=1e-5, maxiter=maxiter)
            c3, c4 = amps(s.x)
            params = ClearParams(c1, c2, d_ring, a0, d_hold, c3, c4, d_reset)
            m = _metrics_of(device, build_clear(params, device, dt, sigma_ns=sigma_ns))
            conv = r.converged and s.converged and r.fun <= ring_tol and m.n_residual <= residual_target * (1 + 1e-6)
            cand = ClearResult(params, m, float(r.fun), m.n_residual, conv)
            key = (not conv, m.tau_r)
            if best is None or key < best[0]:
                best = (key, cand)
    result = best[1]
    if not result.converged:
        result.message = "no grid point met the ring-up and residual targets"
    return result
