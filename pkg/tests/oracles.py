"""Independent reference computations shared by the tests."""
from fractions import Fraction


def padic_brute_dist(f, u, v, depth=10):
    """min over units zeta mod p^depth of max_i |zeta u_i - v_i|, clipped at p^-depth.

    u, v are unit-norm representatives with entries in Z_p.
    """
    p = f.prime
    floor = Fraction(1, p ** depth)
    best = None
    for z in range(1, p ** depth):
        if z % p == 0:
            continue
        d = max(f.abs(z * a - b) for a, b in zip(u, v))
        d = max(d, floor)
        if best is None or d < best:
            best = d
            if best == floor:
                break
    return best


def random_admissible_pair(f, rng, n=None):
    """(C, C2, eps) with C diagonal, distinct entries and ||C - C2|| < theta(C, eps)."""
    from robustqi.matlin import Matrix, mat_norm
    from robustqi.spectral import theta_bound

    p = f.prime
    n = int(rng.integers(2, 5)) if n is None else n
    while True:
        entries = [Fraction(int(rng.integers(1, 200)), p ** int(rng.integers(0, 3))) for _ in range(n)]
        if len(set(entries)) < n:
            continue
        gap = min(f.abs(a - b) for i, a in enumerate(entries) for b in entries[i + 1:])
        # eps = largest power of p strictly below gap / 2 and below 1
        eps = Fraction(1, p)
        while not eps < gap / 2:
            eps /= p
        C = Matrix.diag(f, entries)
        theta = theta_bound(C, eps)
        k = 0
        while Fraction(p) ** (-k) >= theta:
            k += 1
        step = Fraction(p) ** (k + int(rng.integers(0, 4)))
        pert = [[Fraction(int(rng.integers(0, p ** 6))) * step for _ in range(n)] for _ in range(n)]
        C2 = C + Matrix.from_values(f, pert)
        assert mat_norm(C2 - C) < theta
        return C, C2, eps


def random_form(f, rng, n=3):
    """A random biproximal form with a well-conditioned conjugator, and a theta."""
    from robustqi.dynamics import BiproximalForm, GateError
    from robustqi.matlin import Matrix

    while True:
        if f.archimedean:
            h = Matrix(f, ((f.convert(float(rng.uniform(-1, 1))) + (2 if i == j else 0)
                            for j in range(n)) for i in range(n)))
            k1 = f.convert(float(rng.uniform(2, 50)))
            kn = f.convert(float(rng.uniform(0.02, 0.5)))
            A = Matrix.diag(f, [f.convert(float(rng.uniform(0.6, 1.5))) for _ in range(n - 2)])
            theta = f.convert(float(rng.uniform(0.01, 0.3)))
        else:
            p = f.prime
            h = Matrix(f, ((Fraction(int(rng.integers(0, 4 * p))) * (p if i != j else 1)
                            + (1 if i == j else 0) for j in range(n)) for i in range(n)))
            k1 = Fraction(int(rng.integers(1, p)) if p > 2 else 1, p ** int(rng.integers(1, 6)))
            kn = Fraction(p ** int(rng.integers(1, 6)))
            A = Matrix.diag(f, [Fraction(1 + p * int(rng.integers(0, 5))) for _ in range(n - 2)])
            theta = Fraction(1, p ** int(rng.integers(0, 4)))
        try:
            if f.abs(h.det()) == 0:
                continue
            return BiproximalForm(h, k1, A, kn), theta
        except GateError:
            continue
