"""Independent sympy/scipy reference computations used by the tests.

Nothing here imports lamelax: each helper rebuilds its quantity from the
textbook definition so that the package is checked against a separate
derivation rather than against itself.
"""

import itertools

import sympy as sp

u1, u2, u3, lam = sp.symbols("u1 u2 u3 lambda")
U = (u1, u2, u3)


def rotation(H):
    N = len(H)
    return [[sp.simplify(sp.diff(H[k], U[i]) / H[i]) if i != k else 0 for k in range(N)] for i in range(N)]


def christoffel(G):
    """Gamma^j_{sk} of a covariant metric matrix G (any, not only diagonal)."""
    N = G.shape[0]
    Ginv = G.inv()
    x = U[:N]
    return [[[sp.simplify(sum(Ginv[j, m] * (sp.diff(G[m, k], x[s]) + sp.diff(G[m, s], x[k])
                                            - sp.diff(G[s, k], x[m])) for m in range(N)) / 2)
              for k in range(N)] for s in range(N)] for j in range(N)]


def riemann_updown(G):
    """R^{ij}_{kl} = g^{jm} R^i_{mlk} with R^i_{mkl} = d_k Gamma^i_{lm} - d_l Gamma^i_{km} + ..."""
    N = G.shape[0]
    x = U[:N]
    Gam = christoffel(G)  # Gam[i][a][b] = Gamma^i_{ab}
    Ginv = G.inv()

    def R(i, m, k, l):
        out = sp.diff(Gam[i][l][m], x[k]) - sp.diff(Gam[i][k][m], x[l])
        out += sum(Gam[i][k][s] * Gam[s][l][m] - Gam[i][l][s] * Gam[s][k][m] for s in range(N))
        return out

    return {(i, j, k, l): sp.simplify(sum(Ginv[j, m] * R(i, m, l, k) for m in range(N)))
            for i, j, k, l in itertools.product(range(N), repeat=4)}


def resolved_rhs_n2():
    """Solve lamx2 and lam3 (N = 2, one nonlocal set each) for d_1 beta_12.

    Returns (rhs, symbols) where rhs is the value of d beta_12 / d u1.
    """
    e1, e2, a2, a1 = sp.symbols("e1 e2 a2 a1")  # eps^1, eps^2, eps_{2,alpha}, eps_{1,beta}
    f1, f2, df1, df2 = sp.symbols("f1 f2 df1 df2")
    b12, b21, d1b12, d2b21 = sp.symbols("b12 b21 d1b12 d2b21")
    h21, h22, h11, h12 = sp.symbols("h21 h22 h11 h12")  # H2_1, H2_2, H1_1, H1_2
    lamx2 = e1 * d1b12 + e2 * d2b21 + a2 * h21 * h22
    lam3 = (e1 * f1 * d1b12 + sp.Rational(1, 2) * e1 * df1 * b12
            + e2 * f2 * d2b21 + sp.Rational(1, 2) * e2 * df2 * b21 + a1 * h11 * h12)
    sol = sp.solve([lamx2, lam3], [d1b12, d2b21], dict=True)[0]
    syms = dict(e1=e1, e2=e2, a2=a2, a1=a1, f1=f1, f2=f2, df1=df1, df2=df2, b12=b12, b21=b21,
                h21=h21, h22=h22, h11=h11, h12=h12)
    return sp.simplify(sol[d1b12]), syms


def cc_connection(H, eps, K, beta=None):
    """A_1, A_2 of the constant-curvature linear problem for N = 2, by hand."""
    beta = beta or rotation(H)
    s = [sp.sqrt(e) for e in eps]
    A = []
    for k in range(2):
        M = sp.zeros(3, 3)
        i = 1 - k
        M[i, k] = s[i] / s[k] * beta[i][k]
        M[k, i] = -s[i] / s[k] * beta[i][k]
        M[k, 2] = sp.sqrt(K) / s[k] * H[k]
        M[2, k] = -sp.sqrt(K) / s[k] * H[k]
        A.append(M)
    return A


def zero_curvature(A):
    F = sp.diff(A[1], u1) - sp.diff(A[0], u2) + A[1] * A[0] - A[0] * A[1]
    return F.applyfunc(sp.simplify)
