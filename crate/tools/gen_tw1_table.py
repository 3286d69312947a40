"""Generate the embedded TW1 (GOE Tracy-Widom) table.

Primary source: Hastings-McLeod solution of Painleve II integrated with
mpmath's Taylor-series ODE solver at 40 significant digits, using

    ln F1(s) = -1/2 * int_s^inf q(x) dx - 1/2 * int_s^inf (x - s) q(x)^2 dx
    d/ds ln F1(s) = 1/2 * q(s) + 1/2 * int_s^inf q(x)^2 dx

Cross-check: Bornemann's Nystrom discretisation of the Fredholm
determinant F1(s) = det(I - K_s), K_s(x, y) = Ai((x + y) / 2) / 2 on
L^2(s, inf), evaluated with mpmath at every 50th grid point.

Output columns: x, ln_cdf, dln_cdf, ln_sf, dln_sf
"""
import sys
import mpmath as mp

mp.mp.dps = 40
LO, HI, STEP_DEN = -10, 12, 100  # grid step 0.01
S0 = mp.mpf(16)


def painleve_solution():
    q0 = mp.airyai(S0)
    p0 = mp.airyai(S0, derivative=1)
    u0 = mp.quad(mp.airyai, [S0, mp.inf])
    v0 = mp.quad(lambda x: mp.airyai(x) ** 2, [S0, mp.inf])
    w0 = mp.quad(lambda x: (x - S0) * mp.airyai(x) ** 2, [S0, mp.inf])

    # integrate in t = S0 - s so that t increases as s decreases
    def rhs(t, y):
        s = S0 - t
        q, p, u, v, w = y
        return [-p, -(s * q + 2 * q ** 3), q, q ** 2, v]

    return mp.odefun(rhs, 0, [q0, p0, u0, v0, w0])


def fredholm_cdf(s, m=120):
    s = mp.mpf(s)
    upper = max(s, 0) + 24
    nodes, weights = [], []
    # Gauss-Legendre on [s, upper]
    xs, ws = zip(*gauss_legendre(m))
    half = (upper - s) / 2
    mid = (upper + s) / 2
    for x, w in zip(xs, ws):
        nodes.append(mid + half * x)
        weights.append(half * w)
    sq = [mp.sqrt(w) for w in weights]
    mat = mp.matrix(m, m)
    for i in range(m):
        for j in range(i, m):
            k = sq[i] * mp.airyai((nodes[i] + nodes[j]) / 2) / 2 * sq[j]
            mat[i, j] = (1 if i == j else 0) - k
            mat[j, i] = mat[i, j]
    return mp.det(mat)


_GL = {}


def gauss_legendre(m):
    if m not in _GL:
        pts = []
        for k in range(1, m + 1):
            x = mp.cos(mp.pi * (k - mp.mpf(1) / 4) / (m + mp.mpf(1) / 2))
            for _ in range(100):
                p0, p1 = mp.mpf(1), x
                for n in range(2, m + 1):
                    p0, p1 = p1, ((2 * n - 1) * x * p1 - (n - 1) * p0) / n
                dp = m * (x * p1 - p0) / (x * x - 1)
                dx = p1 / dp
                x -= dx
                if abs(dx) < mp.mpf(10) ** (-mp.mp.dps + 5):
                    break
            w = 2 / ((1 - x * x) * dp * dp)
            pts.append((x, w))
        _GL[m] = pts
    return _GL[m]


def main(out_path, check_path):
    sol = painleve_solution()
    rows = []
    for i in range((HI - LO) * STEP_DEN + 1):
        s = mp.mpf(LO) + mp.mpf(i) / STEP_DEN
        q, p, u, v, w = sol(S0 - s)
        ln_cdf = -(u + w) / 2
        dln_cdf = (q + v) / 2
        cdf = mp.exp(ln_cdf)
        sf = -mp.expm1(ln_cdf)
        density = cdf * dln_cdf
        ln_sf = mp.log(sf)
        dln_sf = -density / sf
        rows.append((s, ln_cdf, dln_cdf, ln_sf, dln_sf))
    with open(out_path, "w") as fh:
        fh.write("# x,ln_cdf,dln_cdf,ln_sf,dln_sf\n")
        for r in rows:
            fh.write(",".join(mp.nstr(v, 17, min_fixed=-1, max_fixed=-1) if k else mp.nstr(v, 6) for k, v in enumerate(r)) + "\n")

    worst_rel = 0
    with open(check_path, "w") as fh:
        fh.write("# x,painleve_cdf,fredholm_cdf,rel_diff\n")
        for i in range(0, len(rows), 50):
            s = rows[i][0]
            a = mp.exp(rows[i][1])
            b = fredholm_cdf(s)
            # compare the smaller of cdf / sf in relative terms
            if a > 0.5:
                ra, rb = -mp.expm1(rows[i][1]), 1 - b
            else:
                ra, rb = a, b
            rel = abs(ra - rb) / abs(ra)
            worst_rel = max(worst_rel, rel)
            fh.write(f"{mp.nstr(s, 6)},{mp.nstr(a, 17)},{mp.nstr(b, 17)},{mp.nstr(rel, 3)}\n")
            print(mp.nstr(s, 6), mp.nstr(rel, 3), file=sys.stderr)
    print("worst relative disagreement:", mp.nstr(worst_rel, 3), file=sys.stderr)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
