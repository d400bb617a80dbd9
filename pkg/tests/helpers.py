from quasiortho.codeset import make_random_quasi


def random_sets(n, M=6, rho_max=0.3, mode="quasi_orthogonal", L=None):
    return [make_random_quasi(M, L, rho_max, seed=100 + k, mode=mode) for k in range(n)]
