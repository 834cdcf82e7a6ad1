"""Chi-Square wavelet filters on the graph frequency axis [0, 2].

The family is indexed by i >= 1.  Member i is the chi-square density with
n = 2i degrees of freedom, compressed onto [0, 2] by the scale change
u = w(i+1) and renormalized to unit mass on the truncated interval:

    f_i(w) = (1/S_i) (1/(2^i Gamma(i))) (w(i+1))^(i-1) exp(-w(i+1)/2)

S_i is the mass of the unnormalized response on [0, 2].  The mode sits at
2(i-1)/(i+1), so the family sweeps from pure low-pass (i=1) toward the top of
the spectrum as i grows, which is what lets a filter be matched to whichever
frequency band carries the most signal energy.

For application on a graph, the response is approximated by a least-squares
polynomial of total degree i-1+d; a degree-k polynomial of a shift operator
touches at most k-hop neighborhoods.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as ncheb
from numpy.polynomial import polynomial as npoly
from scipy import integrate
from scipy.special import gammaln

FREQ_MAX = 2.0


def _log_unnormalized(w, i):
    # log of (1/(2^i Gamma(i))) (w(i+1))^(i-1) exp(-w(i+1)/2); log-space keeps
    # i=128 finite where the direct power overflows
    w = np.asarray(w, dtype=np.float64)
    base = -i * np.log(2.0) - gammaln(i)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = (i - 1) * np.log(w * (i + 1.0)) - w * (i + 1.0) / 2.0 + base
    if i == 1:
        logs = np.where(w == 0.0, base, logs)
    else:
        logs = np.where(w == 0.0, -np.inf, logs)
    return logs


def _unnormalized(w, i):
    return np.exp(_log_unnormalized(w, i))


def _check_index(i) -> int:
    if int(i) != i or i < 1:
        raise ValueError(f"filter index must be an integer >= 1, got {i}")
    return int(i)


@functools.lru_cache(maxsize=None)
def normalization_constant(i: int) -> float:
    """Mass of the unnormalized response on [0, 2], adaptive quadrature."""
    i = _check_index(i)
    val, _ = integrate.quad(lambda w: float(_unnormalized(w, i)), 0.0, FREQ_MAX,
                            epsabs=1e-10, epsrel=1e-10, limit=200)
    return val


def chi_response(i: int, w):
    """Normalized response f_i at frequency w (scalar or array), w in [0, 2]."""
    i = _check_index(i)
    arr = np.asarray(w, dtype=np.float64)
    if arr.size and (arr.min() < 0.0 or arr.max() > FREQ_MAX):
        raise ValueError("frequency outside [0, 2]")
    out = _unnormalized(arr, i) / normalization_constant(i)
    return float(out) if np.isscalar(w) else out


def chi_mode(i: int) -> float:
    """Frequency of the response maximum: 2(i-1)/(i+1)."""
    i = _check_index(i)
    return float(np.clip(2.0 * (i - 1) / (i + 1.0), 0.0, FREQ_MAX))


def chi_moments(i: int) -> tuple[float, float]:
    """(expectation, variance) of the truncated density on [0, 2]."""
    i = _check_index(i)

    def moment(k):
        val, _ = integrate.quad(lambda w: w ** k * float(chi_response(i, w)),
                                0.0, FREQ_MAX, epsabs=1e-8, epsrel=1e-8, limit=200)
        return val

    e = moment(1)
    v = moment(2) - e * e
    return e, v


def admissibility_integral(i: int) -> float:
    """Quadrature value of the band-pass (admissibility) integral
    int_0^inf f_i(w)^2 / w dw over the untruncated response.

    i=1 has f_1(0) > 0, so the integral diverges and is rejected.
    """
    i = _check_index(i)
    if i == 1:
        raise ValueError("filter i=1 is not admissible: the integral diverges at w=0")
    s = normalization_constant(i)

    def integrand(w):
        if w == 0.0:
            return 0.0
        return float(np.exp(2.0 * _log_unnormalized(w, i) - np.log(w))) / (s * s)

    val, _ = integrate.quad(integrand, 0.0, np.inf,
                            epsabs=1e-12, epsrel=1e-10, limit=400)
    return val


def admissibility_closed_form(i: int) -> float:
    """Gamma(2(i-1)) / (S_i 2^i Gamma(i))^2, the analytic value of the
    admissibility integral (finite exactly when i >= 2)."""
    i = _check_index(i)
    if i == 1:
        raise ValueError("filter i=1 is not admissible: the integral diverges at w=0")
    s = normalization_constant(i)
    log_val = gammaln(2 * (i - 1)) - 2.0 * (i * np.log(2.0) + gammaln(i) + np.log(s))
    return float(np.exp(log_val))


@dataclass
class PolyFilter:
    """Monomial-basis polynomial approximation of a frequency response."""
    coeffs: np.ndarray  # ascending powers, length degree+1
    degree: int
    fit_error_linf: float

    def __call__(self, w):
        return npoly.polyval(np.asarray(w, dtype=np.float64), self.coeffs)


def fit_grid_polynomial(w: np.ndarray, y: np.ndarray, degree: int) -> PolyFilter:
    """Least-squares polynomial fit of sampled values, Chebyshev basis mapped
    onto the sample interval, returned in the monomial basis.

    The recorded L-inf error is evaluated in the Chebyshev basis: it measures
    the fitted polynomial itself, not the float damage the monomial conversion
    suffers at high degree.
    """
    if len(w) < degree + 1:
        raise ValueError("grid too small for the requested degree")
    cheb = ncheb.Chebyshev.fit(w, y, degree, domain=[w[0], w[-1]])
    mono = cheb.convert(kind=npoly.Polynomial, domain=[w[0], w[-1]], window=[w[0], w[-1]])
    coeffs = np.zeros(degree + 1)
    coeffs[: len(mono.coef)] = mono.coef
    err = float(np.max(np.abs(cheb(w) - y)))
    return PolyFilter(coeffs, degree, err)


def fit_polynomial(i: int, d: int = 3, grid_size: int | None = None) -> PolyFilter:
    """Degree i-1+d least-squares fit of f_i on a uniform grid over [0, 2]."""
    i = _check_index(i)
    if d < 1:
        raise ValueError("degree budget d must be >= 1")
    if grid_size is None:
        grid_size = max(1024, 4 * (i + d))
    if grid_size < 4 * (i + d):
        raise ValueError(f"grid_size must be >= 4(i+d) = {4 * (i + d)}")
    w = np.linspace(0.0, FREQ_MAX, grid_size)
    return fit_grid_polynomial(w, chi_response(i, w), i - 1 + d)


def apply_filter(coeffs, S, X: np.ndarray) -> np.ndarray:
    """Y = sum_k c_k S^k X by iterated sparse applications; no matrix powers."""
    if isinstance(coeffs, PolyFilter):
        coeffs = coeffs.coeffs
    coeffs = np.asarray(coeffs, dtype=np.float64)
    mat = getattr(S, "matrix", S)
    X = np.asarray(X, dtype=np.float64)
    squeeze = X.ndim == 1
    if squeeze:
        X = X[:, None]
    if mat.shape[0] != mat.shape[1]:
        raise ValueError("shift operator must be square")
    if X.shape[0] != mat.shape[0]:
        raise ValueError(
            f"signal rows {X.shape[0]} do not match operator dimension {mat.shape[0]}")
    acc = coeffs[0] * X
    power = X
    for c in coeffs[1:]:
        power = mat @ power
        if c != 0.0:
            acc = acc + c * power
    return acc.ravel() if squeeze else acc
