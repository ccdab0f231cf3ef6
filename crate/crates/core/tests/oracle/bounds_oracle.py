"""Regenerates tests/data/bounds_oracle.csv.

Each bound formula is re-evaluated in 50-digit arithmetic from the exact
binary64 inputs written to the file. Run from crates/core:

    python3 tests/oracle/bounds_oracle.py > tests/data/bounds_oracle.csv
"""
import random

from mpmath import mp, mpf, sqrt, power, exp

mp.dps = 50
rng = random.Random(20240517)


def dfac(d):
    return max(d, sqrt(2 * d))


def row(kind, params, value):
    print(kind + "," + ";".join(repr(float(p)) for p in params) + "," + mp.nstr(value, 25))


print("kind,params,expected")
for _ in range(100):
    n = rng.randint(1, 10**6)
    delta = rng.uniform(0.01, 10.0)
    s = rng.uniform(0.01, 1.0)
    b = rng.uniform(0.0, 1.0)
    cs = rng.uniform(0.01, 20.0)
    db = rng.uniform(1.0, 20.0)
    m_delta, m_s, m_b, m_cs, m_db = map(mpf, (delta, s, b, cs, db))
    v = max(m_cs, 2 * m_db * dfac(m_delta)) * power(mpf(n), -m_s / (2 * m_s + m_b + 1))
    row("finite_sample", (n, delta, s, b, cs, db), v)

for _ in range(100):
    n = rng.randint(1, 10**6)
    lam = 10 ** rng.uniform(-8, 0)
    delta = rng.uniform(0.01, 10.0)
    nl = rng.uniform(0.01, 500.0)
    m_lam, m_delta, m_nl = map(mpf, (lam, delta, nl))
    v = m_delta / (n * m_lam) + sqrt(2 * m_delta * m_nl / (n * m_lam))
    row("sample_error", (n, lam, delta, nl), v)

for _ in range(100):
    lam = 10 ** rng.uniform(-10, 1)
    s = rng.uniform(0.01, 1.0)
    cs = rng.uniform(0.01, 20.0)
    v = power(mpf(lam), mpf(s)) * mpf(cs)
    row("approximation_error", (lam, s, cs), v)

for _ in range(100):
    length = rng.randint(1, 40)
    ratio = rng.uniform(0.05, 0.95)
    raw = [ratio**j for j in range(length)]
    total = sum(raw)
    spectrum = sorted((x / total for x in raw), reverse=True)
    lam = 10 ** rng.uniform(-10, 2)
    v = sum(mpf(x) / (mpf(x) + mpf(lam)) for x in spectrum)
    row("effective_dimension", [lam] + spectrum, v)

for _ in range(100):
    M = rng.uniform(0.01, 10.0)
    var = rng.uniform(0.001, 10.0)
    n = rng.randint(1, 10**6)
    delta = rng.uniform(0.01, 10.0)
    v = mpf(M) * mpf(delta) / n + sqrt(2 * mpf(var) * mpf(delta) / n)
    row("bernstein", (M, var, n, delta), v)
