#!/usr/bin/env python3
"""Generate the Nemenyi critical values q_alpha for k = 2..20.

q_alpha = Q^{-1}(1 - alpha; k, inf) / sqrt(2), where Q is the CDF of the
range of k independent standard normals:

    Q(q; k) = k * integral phi(z) * (Phi(z + q) - Phi(z))^(k - 1) dz

Writes src/stats/nemenyi_table.rs. Run from the crate root:

    python3 scripts/gen_nemenyi_table.py
"""

import math
import pathlib

from scipy import integrate, optimize, stats

ALPHAS = (0.05, 0.10)
K_MAX = 20


def range_cdf(q: float, k: int) -> float:
    f = lambda z: stats.norm.pdf(z) * (stats.norm.cdf(z + q) - stats.norm.cdf(z)) ** (k - 1)
    val, _ = integrate.quad(f, -12.0, 12.0, epsabs=1e-14, epsrel=1e-13, limit=500)
    return k * val


def q_alpha(k: int, alpha: float) -> float:
    root = optimize.brentq(lambda q: range_cdf(q, k) - (1.0 - alpha), 1e-6, 20.0, xtol=1e-14)
    return root / math.sqrt(2.0)


def main() -> None:
    rows = {a: [q_alpha(k, a) for k in range(2, K_MAX + 1)] for a in ALPHAS}
    out = pathlib.Path(__file__).resolve().parent.parent / "src" / "stats" / "nemenyi_table.rs"
    lines = [
        "// @generated by scripts/gen_nemenyi_table.py; do not edit by hand.",
        "",
        "/// Smallest number of methods in the table.",
        "pub const K_MIN: usize = 2;",
        "/// Largest number of methods in the table.",
        f"pub const K_MAX: usize = {K_MAX};",
        "",
    ]
    for a in ALPHAS:
        name = f"Q_{int(round(a * 100)):03d}"
        lines.append(f"/// Nemenyi q at alpha = {a:.2f}, indexed by `k - K_MIN`.")
        lines.append(f"pub const {name}: [f64; {K_MAX - 1}] = [")
        for v in rows[a]:
            lines.append(f"    {v:.10f},")
        lines.append("];")
        lines.append("")
    out.write_text("\n".join(lines))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
