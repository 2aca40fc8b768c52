"""End-to-end verification suite.

Each check assembles operators, computes the matching closed-form
prediction, and returns a verdict dict {check_id, observed, predicted,
tolerance, pass, detail}.  A Lab instance caches assembled operators and
spectra so overlapping checks share work.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from . import asymptotics, hessian, spectral, states
from .assembly import (
    HermitianOperator,
    assemble_T,
    pair_trace_integral,
    scale_to_S,
)
from .fock import FockTruncation
from .manifold import (
    circle,
    classify,
    delta_n,
    frame_at,
    parabola_patch,
    quadrature,
    sphere3,
    torus_product,
)
from .spectral import eigensolve, entropy_function, schatten_sum, weyl_count

__all__ = ["Lab", "run_all", "CHECKS"]

CIRCLE_SWEEP = (25.0, 50.0, 100.0, 200.0)
# eigenvalue counts are integers, so the count error carries quantization
# jitter of one scaled unit ~ sqrt(2 pi / k) on top of the O(1/k) law; this
# sweep is one where the decay is monotone through the jitter
WEYL_SWEEP = (60.0, 100.0, 160.0, 400.0)
SPHERE_SWEEP = (4.0, 6.0, 8.0, 10.0)


def _verdict(check_id, observed, predicted, tolerance, passed, detail=None):
    out = {
        "check_id": check_id,
        "observed": float(observed),
        "predicted": float(predicted),
        "tolerance": float(tolerance),
        "pass": bool(passed),
    }
    if detail is not None:
        out["detail"] = detail
    return out


def _poisson_lambdas(k: float, M: int) -> np.ndarray:
    """Circle spectrum 2k k^n e^{-k} / n! for n = 0..M (radius 1)."""
    n = np.arange(M + 1)
    return 2.0 * k * np.exp(n * math.log(k) - k - gammaln(n + 1.0))


class Lab:
    """Shared operator/spectrum cache for the acceptance checks."""

    def __init__(self):
        self._cache = {}
        self.circle = circle(1.0)
        self.sphere = sphere3(1.0)

    def _get(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def circle_quad(self, k: float):
        M = int(round(4 * k))
        return self._get(("cq", k), lambda: quadrature(self.circle, 2 * M + 9))

    def circle_trunc(self, k: float) -> FockTruncation:
        return FockTruncation(ambient_dim=1, k=k, max_degree=int(round(4 * k)))

    def circle_op(self, k: float, amp_key: str = "one") -> HermitianOperator:
        def build():
            amp = None if amp_key == "one" else _CIRCLE_AMPS[amp_key]
            return assemble_T(self.circle_trunc(k), self.circle, amp,
                              self.circle_quad(k))
        return self._get(("cop", k, amp_key), build)

    def circle_eigs(self, k: float) -> np.ndarray:
        return self._get(("ceig", k),
                         lambda: eigensolve(self.circle_op(k)).eigenvalues)

    def sphere_op(self, k: float) -> HermitianOperator:
        def build():
            # 4k covers the Poisson tail to ~1e-8; the +4 pads the level
            # degeneracy of the sphere so the boundary trace share stays
            # below the truncation-warning threshold
            M = int(round(4 * k)) + 4
            quad = quadrature(self.sphere, [M // 2 + 1, M + 1, M + 1])
            trunc = FockTruncation(ambient_dim=2, k=k, max_degree=M)
            return assemble_T(trunc, self.sphere, None, quad)
        return self._get(("sop", k), build)


def _amp_cos(t):
    return 1.0 + np.cos(t[:, 0])


def _amp_complex(t):
    return np.exp(1j * t[:, 0]) * 0.5 * (1.0 + np.cos(t[:, 0]))


_CIRCLE_AMPS = {"one_plus_cos": _amp_cos, "complex": _amp_complex}


def _s_factor(k: float) -> float:
    """Circle scaling T -> S: 2^{-1/2} (pi/k)^{1/2} (N=1, d=d'=1)."""
    return 2.0 ** -0.5 * math.sqrt(math.pi / k)


def _scaled(k: float) -> float:
    """Szego normalization 2^{d'/2} (pi/k)^{d/2} on the circle."""
    return math.sqrt(2.0 * math.pi / k)


def check_circle_spectrum(lab: Lab):
    """1: assembled circle eigenvalues match the closed-form spectrum."""
    worst = 0.0
    for k in (10.0, 20.0, 40.0):
        M = int(round(4 * k))
        observed = lab.circle_eigs(k)
        predicted = np.sort(_poisson_lambdas(k, M))[::-1]
        mask = predicted >= 1e-10 * predicted[0]
        rel = np.abs(observed[mask] - predicted[mask]) / predicted[mask]
        worst = max(worst, float(rel.max()))
    return _verdict("circle_spectrum_oracle", worst, 0.0, 1e-6, worst <= 1e-6)


def check_trace_identity(lab: Lab):
    """2: Tr T = (k/pi)^N integral a dsigma on circle, torus, sphere."""
    from .assembly import exact_trace

    gaps = {}
    _, _, gaps["circle"] = exact_trace(lab.circle_op(20.0))
    torus = torus_product([1.0, 0.7])
    k = 8.0
    M = math.ceil(4 * k * (1.0 ** 2 + 0.7 ** 2))
    tq = quadrature(torus, 24)
    top = assemble_T(FockTruncation(2, k, M), torus, None, tq)
    _, _, gaps["torus"] = exact_trace(top)
    _, _, gaps["sphere3"] = exact_trace(lab.sphere_op(6.0))
    ok = gaps["circle"] <= 1e-8 and gaps["torus"] <= 1e-6 and gaps["sphere3"] <= 1e-6
    worst = max(gaps.values())
    return _verdict("trace_identity", worst, 0.0, 1e-6, ok, detail=gaps)


def check_pair_trace(lab: Lab):
    """3: trace(T_a T_b) from matrices vs the Gaussian double integral."""
    k = 20.0
    op_a = lab.circle_op(k)
    op_b = lab.circle_op(k, "one_plus_cos")
    observed = float(np.sum(op_a.matrix.T * op_b.matrix).real)
    predicted = pair_trace_integral(lab.circle, None, _amp_cos,
                                    lab.circle_quad(k), k)
    rel = abs(observed - predicted) / abs(predicted)
    return _verdict("pair_trace", observed, predicted, 1e-6, rel <= 1e-6,
                    detail={"relative_gap": rel})


def check_moment_asymptotics(lab: Lab):
    """4: scaled Tr(S^n) -> 2 pi / sqrt(n) with O(1/k) rate."""
    slopes = {}
    ok = True
    for n in (2, 3, 4):
        vals = []
        for k in CIRCLE_SWEEP:
            mu = _s_factor(k) * lab.circle_eigs(k)
            vals.append(_scaled(k) * float(np.sum(mu ** n)))
        target = 2.0 * math.pi / math.sqrt(n)
        fit = spectral.rate_regression(CIRCLE_SWEEP, vals, target)
        slopes[f"n={n}"] = fit.slope
        ok = ok and abs(fit.slope - (-1.0)) <= 0.25
    return _verdict("moment_asymptotics", min(slopes.values()), -1.0, 0.25,
                    ok, detail=slopes)


def check_szego_entropy_function(lab: Lab):
    """5: scaled Tr(phi(S)) for phi = s log s converges to F(phi)."""
    phi = entropy_function()
    pred = asymptotics.szego_functional(lab.circle, None, phi,
                                        lab.circle_quad(25.0))
    errors = []
    for k in CIRCLE_SWEEP:
        mu = _s_factor(k) * lab.circle_eigs(k)
        mu = mu[mu > 0]
        val = _scaled(k) * float(np.sum(mu * np.log(mu)))
        errors.append(abs(val - pred.value))
    decreasing = all(b < a for a, b in zip(errors, errors[1:]))
    final_rel = errors[-1] / abs(pred.value)
    return _verdict("szego_slogs", final_rel, 0.0, 0.02,
                    decreasing and final_rel <= 0.02,
                    detail={"errors": errors, "functional": pred.value})


def check_weyl_counts(lab: Lab):
    """6: scaled eigenvalue count in [0.2, 0.9] matches the Weyl law."""
    interval = (0.2, 0.9)
    pred = asymptotics.weyl_prediction(2.0 * math.pi, 1, interval)
    errors = []
    for k in WEYL_SWEEP:
        mu = _s_factor(k) * lab.circle_eigs(k)
        spec = spectral.SpectralSummary(eigenvalues=mu, k=k, ambient_dim=1,
                                        manifold_dim=1, d_prime=1,
                                        normalization="scaled_S")
        count = weyl_count(spec, interval)
        errors.append(abs(_scaled(k) * count - pred))
    decreasing = all(b <= a for a, b in zip(errors, errors[1:]))
    final_rel = errors[-1] / pred
    return _verdict("weyl_counts", final_rel, 0.0, 0.05,
                    decreasing and final_rel <= 0.05,
                    detail={"errors": errors, "prediction": pred})


def check_schatten(lab: Lab):
    """7: scaled Schatten sums for a complex amplitude."""
    detail = {}
    ok = True
    pred_quad = lab.circle_quad(25.0)
    for p in (1.0, 2.0):
        pred = asymptotics.schatten_prediction(lab.circle, _amp_complex, p,
                                               pred_quad)
        vals = []
        for k in CIRCLE_SWEEP:
            S = scale_to_S(lab.circle_op(k, "complex"), 1)
            vals.append(_scaled(k) * schatten_sum(S, p))
        rel = abs(vals[-1] - pred) / pred
        detail[f"p={p:g}"] = {"final_rel": rel, "prediction": pred}
        ok = ok and rel <= 0.02
    worst = max(v["final_rel"] for v in detail.values())
    return _verdict("schatten", worst, 0.0, 0.02, ok, detail=detail)


def check_entropy(lab: Lab):
    """8: density-matrix entropy limit with the Poisson cross-check."""
    sub = lab.circle
    quad = lab.circle_quad(25.0)
    pred, C_d = asymptotics.entropy_prediction(
        sub, lambda t: np.full(t.shape[0], 1.0 / (2.0 * math.pi)), quad)
    gaps = []
    cross_ok = True
    for k in CIRCLE_SWEEP:
        rho = lab.circle_eigs(k) / (2.0 * k)  # (pi/k) * (1/2pi) * T spectrum
        spec = spectral.SpectralSummary(eigenvalues=rho, k=k, ambient_dim=1)
        H = spectral.entropy(spec)
        n = np.arange(int(round(4 * k)) + 1)
        logp = n * math.log(k) - k - gammaln(n + 1.0)
        H_poisson = float(-np.sum(np.exp(logp) * logp))
        cross_ok = cross_ok and abs(H - H_poisson) <= 1e-8
        gaps.append(abs(H + math.log(C_d * k ** -0.5) - pred))
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    return _verdict("entropy_limit", gaps[-1], 0.0, 1e-2,
                    cross_ok and decreasing and gaps[-1] <= 1e-2,
                    detail={"gaps": gaps, "prediction": pred,
                            "poisson_cross_check": cross_ok})


def check_norm_scaling(lab: Lab):
    """9: log lambda_max vs log k has slope N - d/2 on circle and sphere."""
    detail = {}
    circ_max = [float(lab.circle_eigs(k)[0]) for k in CIRCLE_SWEEP]
    slope_c = float(np.polyfit(np.log(CIRCLE_SWEEP), np.log(circ_max), 1)[0])
    detail["circle"] = slope_c
    sph_max = [float(eigensolve(lab.sphere_op(k)).max) for k in SPHERE_SWEEP]
    slope_s = float(np.polyfit(np.log(SPHERE_SWEEP), np.log(sph_max), 1)[0])
    detail["sphere3"] = slope_s
    ok = abs(slope_c - 0.5) <= 0.05 and abs(slope_s - 0.5) <= 0.05
    worst = max(abs(slope_c - 0.5), abs(slope_s - 0.5))
    return _verdict("norm_scaling", worst, 0.0, 0.05, ok, detail=detail)


def check_hessian_oracle(lab: Lab):
    """10: determinant algebra on 200 random (G, H) plus the parabola."""
    rng = np.random.default_rng(20260823)
    worst = 0.0
    for trial in range(200):
        d = int(rng.integers(1, 5))
        q = int(rng.integers(1, 7))
        G, H = hessian.random_spd_skew(d, rng)
        rec = hessian.det_recursion(G, H, q).realize()
        W = np.linalg.solve(G, H)
        closed = hessian.det_closed_form(W, q).realize()
        scale = max(float(np.abs(rec).max()), 1e-300)
        worst = max(worst, float(np.abs(rec - closed).max()) / scale)
        rep = hessian.verify_sqrt_det(G, H, q)
        worst = max(worst, rep.rel_err_det, rep.rel_err_sqrt)
    parabola_ok = True
    sub = parabola_patch()
    for x1 in (0.0, 1.0):
        frame = frame_at(sub.charts[0], (x1, 0.3))
        lam2 = 1.0 / (1.0 + x1 ** 2)
        for n in range(2, 7):
            series = sum(math.comb(n, 2 * j + 1) * lam2 ** j
                         for j in range(n // 2 + 1))
            if abs(delta_n(frame, n) - series) > 1e-10 * series:
                parabola_ok = False
    return _verdict("hessian_oracle", worst, 0.0, 1e-8,
                    worst <= 1e-8 and parabola_ok,
                    detail={"parabola_delta_ok": parabola_ok})


def check_mellin_identity(lab: Lab):
    """11: O_{-alpha}(s^p)(t) = t^p / p^alpha across the test grid."""
    worst = 0.0
    for alpha in (0.5, 1.0, 1.5, 2.0):
        for p in (0.5, 1.0, 2.0, 3.0):
            phi = spectral.power_function(p)
            for t in (0.5, 1.0, 2.0):
                value = asymptotics.mellin_log(phi, alpha, t)
                exact = t ** p / p ** alpha
                worst = max(worst, abs(value - exact) / exact)
    return _verdict("mellin_identity", worst, 0.0, 1e-8, worst <= 1e-8)


def check_bohr_sommerfeld(lab: Lab):
    """12: Rayleigh quotients of Bohr-Sommerfeld states bound lambda_max."""
    bs = states.BohrSommerfeldData(theta=states.circle_theta(1.0),
                                   alpha=1.0 / math.sqrt(2.0 * math.pi))
    detail = {}
    ok = True
    for k in CIRCLE_SWEEP:
        psi = states.build_test_state(lab.circle_trunc(k), lab.circle, bs,
                                      lab.circle_quad(k))
        q = states.rayleigh_lower_bound(lab.circle_op(k), psi)
        lam_max = float(lab.circle_eigs(k)[0])
        ratio = q / math.sqrt(2.0 * k / math.pi)
        detail[f"k={k:g}"] = {"ratio": ratio, "rayleigh": q, "lambda_max": lam_max}
        ok = ok and (1.0 - 5.0 / k) <= ratio <= 1.0 + 1e-10
        ok = ok and q <= lam_max * (1.0 + 1e-10)
    final = detail[f"k={CIRCLE_SWEEP[-1]:g}"]["ratio"]
    return _verdict("bohr_sommerfeld_bound", final, 1.0,
                    5.0 / CIRCLE_SWEEP[-1], ok, detail=detail)


def _parabola_bump(t):
    x = np.clip(np.abs(t), 0.0, 1.0)
    vals = np.ones_like(x)
    mid = (x > 0.5) & (x < 1.0)
    u = (1.0 - x[mid]) / 0.5
    fu = np.exp(-1.0 / u)
    fc = np.exp(-1.0 / (1.0 - u + 1e-300)) * (u < 1.0)
    vals[mid] = fu / (fu + fc)
    vals[x >= 1.0] = 0.0
    return vals[:, 0] * vals[:, 1]


def check_parabola_moments(lab: Lab):
    """13: pair trace on the symplectic parabola vs the Delta_2 prediction."""
    sub = parabola_patch((-1.0, 1.0), (-1.0, 1.0))
    quad = quadrature(sub, 64)
    rels = []
    for k in (50.0, 100.0, 200.0):
        observed = pair_trace_integral(sub, _parabola_bump, _parabola_bump,
                                       quad, k)
        predicted = asymptotics.moment_prediction(
            sub, [_parabola_bump, _parabola_bump], 2, quad, k)
        rels.append(abs(observed - predicted) / abs(predicted))
    decreasing = all(b < a for a, b in zip(rels, rels[1:]))
    return _verdict("parabola_moments", rels[-1], 0.0, 0.05,
                    decreasing and rels[-1] <= 0.05,
                    detail={"relative_errors": rels})


CHECKS = [
    check_circle_spectrum,
    check_trace_identity,
    check_pair_trace,
    check_moment_asymptotics,
    check_szego_entropy_function,
    check_weyl_counts,
    check_schatten,
    check_entropy,
    check_norm_scaling,
    check_hessian_oracle,
    check_mellin_identity,
    check_bohr_sommerfeld,
    check_parabola_moments,
]


def run_all(lab: Lab = None, checks=None) -> list[dict]:
    """Run the full verification suite; returns one verdict per check."""
    lab = lab or Lab()
    out = []
    for fn in checks or CHECKS:
        out.append(fn(lab))
    return out
