"""Reference values computed independently of the library.

Everything here is evaluated by truncated-series enumeration or closed form,
sharing nothing with the package beyond numpy/scipy, so agreement in the
tests is meaningful.  The frozen constants at the bottom were produced by
these very functions and are pinned so that a regression in an oracle itself
is also visible.
"""

import math

from scipy import stats


def ksat_rs0_pressure(beta, alpha, p=2, n_max=25):
    """Cavity pressure for K-sat when every cavity magnetisation is zero.

    With sigma-bar identically 0, averaging a clause factor over its p-1
    old coordinates gives 1 + b/2^(p-1) whenever the new spin matches the
    clause's forbidden sign and 1 otherwise, so the new-spin average is a
    finite sum over the Poisson clause count n and the Binomial(n, 1/2)
    number of matching clauses.  The series is truncated at n_max; the tail
    is far below 1e-12 for the parameter ranges used in tests.
    """
    b = math.exp(-beta) - 1.0
    B = 1.0 + b / 2.0 ** (p - 1)
    total = math.log(2.0)
    for n in range(n_max + 1):
        pn = stats.poisson.pmf(n, p * alpha)
        inner = 0.0
        for j in range(n + 1):
            inner += stats.binom.pmf(j, n, 0.5) * math.log(0.5 * (B**j + B ** (n - j)))
        total += pn * inner
    total -= (p - 1) * alpha * math.log(1.0 + b / 2.0**p)
    return total


def ksat_rs0_cavity_moment(beta, alpha, p=2, n_max=40):
    """E of the squared tilted cavity magnetisation <eps>^2 for K-sat, RS-0.

    Same reduction as ksat_rs0_pressure: under sigma-bar = 0 the reweighted
    average of the new spin is (B^j - B^(n-j)) / (B^j + B^(n-j)) given n
    attached clauses of which j forbid +1, and theta-hat factors carrying no
    new spin cancel between numerator and denominator.
    """
    b = math.exp(-beta) - 1.0
    B = 1.0 + b / 2.0 ** (p - 1)
    total = 0.0
    for n in range(n_max + 1):
        pn = stats.poisson.pmf(n, p * alpha)
        for j in range(n + 1):
            r = (B**j - B ** (n - j)) / (B**j + B ** (n - j))
            total += pn * stats.binom.pmf(j, n, 0.5) * r * r
    return total


def sk_rs0_pressure(beta2):
    """Pure 2-spin cavity pressure at sigma-bar = 0, in closed form.

    The cavity field is centered Gaussian with variance xi'(1) = 2 beta2^2,
    E cosh(z) = e^(var/2), and the correction term is theta(1)/2 = beta2^2/2,
    giving log 2 + beta2^2 / 2.
    """
    return math.log(2.0) + beta2**2 / 2.0


# Frozen outputs of the functions above (pinned, see module docstring).
KSAT_RS0_PRESSURE_B1_A05 = 0.6068439209309016  # ksat_rs0_pressure(1.0, 0.5)
KSAT_RS0_CAVITY_B1_A03 = 0.020330496569314155  # ksat_rs0_cavity_moment(1.0, 0.3)
SK_RS0_PRESSURE_B03 = 0.7381471805599453  # sk_rs0_pressure(0.3)
