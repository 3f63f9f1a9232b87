"""Independent numpy reference for the cs2 pipeline.

Reimplements simulation, whitening and envelope recovery with numpy/scipy
and records summary statistics in reference_values.json. The Rust
acceptance floors are derived from these numbers. Random streams differ from
the Rust implementation, so only statistics are comparable, not samples.

    python3 tools/reference/reference.py [--runs 100]
"""

import argparse
import json
from pathlib import Path

import numpy as np
from scipy.linalg import toeplitz

N = 24000
L = 2048
ORDER = 41
SPREAD = 4.0


def envelope(B, w, p, n):
    t = np.arange(n)
    return sum(1 + b * np.cos(om * t + ph) for b, om, ph in zip(B, w, p))


def poles_spaced(P, rho):
    off = 0.0 if P % 2 else np.pi / P
    return [rho * np.exp(1j * (2 * np.pi * k / P + off)) for k in range(P)]


def transfer_function(P, rho=0.9, energy=0.9999, unit=True):
    a = np.real(np.poly(poles_spaced(P, rho)))
    h = np.zeros(20000)
    for i in range(len(h)):
        acc = 1.0 if i == 0 else 0.0
        for k in range(1, min(i, P) + 1):
            acc -= a[k] * h[i - k]
        h[i] = acc
    e = np.cumsum(h**2)
    m = np.searchsorted(e, energy * e[-1]) + 1
    h = h[:m]
    if len(h) % 2 == 0:
        h = np.append(h, 0.0)
    return h / np.sqrt(np.sum(h**2)) if unit else h


def simulate(K, P, snr, rng):
    B = rng.uniform(0.3, 1.0, K)
    w = rng.uniform(-np.pi, np.pi, K)
    p = rng.uniform(-np.pi, np.pi, K)
    q = envelope(B, w, p, N)
    h = transfer_function(P)
    s2 = np.mean(q**2) / 10 ** (snr / 10)
    y = q * rng.standard_normal(N) + np.sqrt(s2) * rng.standard_normal(N)
    return np.convolve(y, h)[:N], q, h, s2


def on_bin(K, snr, rng):
    B = rng.uniform(0.3, 1.0, K)
    m = rng.choice(np.arange(5, 200), K, replace=False)
    p = rng.uniform(-np.pi, np.pi, K)
    q = envelope(B, 2 * np.pi * m / L, p, N)
    s2 = np.mean(q**2) / 10 ** (snr / 10)
    return q * rng.standard_normal(N) + np.sqrt(s2) * rng.standard_normal(N), q, s2


def whiten(x, n=ORDER):
    lags = np.array([x[t:] @ x[: len(x) - t] for t in range(n)]) / len(x)
    lam, V = np.linalg.eigh(toeplitz(lags))
    lam = np.maximum(lam, 1e-10 * lam.max())
    g = (np.sqrt(lags[0]) * (V * lam**-0.5) @ V.T)[:, n // 2]
    c = n // 2
    return np.convolve(x, g)[c : c + len(x)], g


def power(y2, gate=True, window="hann", overlap=0.5):
    n = len(y2)
    hop = int(round(L * (1 - overlap)))
    w = np.hanning(L + 1)[:L] if window == "hann" else np.ones(L)
    starts = range(0, n - L + 1, hop)
    X = np.array([np.fft.fft(w * y2[s : s + L]) for s in starts])
    A = np.abs(X).mean(0)
    if gate:
        floor = A[1:]
        med = np.median(floor)
        thr = med + SPREAD * 1.4826 * np.median(np.abs(floor - med))
        k = np.arange(1, L)
        peak = (A[k] > A[k - 1]) & (A[k] > A[(k + 1) % L]) & (A[k] > thr)
        keep = np.zeros(L, bool)
        keep[0] = True
        keep[k[peak]] = True
        keep[L - k[peak]] = True
        A = np.where(keep, A, 0.0)
    gain = w.mean()
    num = np.zeros(n)
    den = np.zeros(n)
    segs = []
    for f, s in enumerate(starts):
        seg = np.real(np.fft.ifft(A * np.exp(1j * np.angle(X[f]))))
        segs.append(seg)
        num[s : s + L] += w * seg / gain if gate else seg
        den[s : s + L] += w
    covered = den >= 0.1 * den.max()
    if gate:
        # A gated spectrum is a sum of lines: extend the nearest frame periodically.
        t = np.arange(n)
        centers = np.array(list(starts)) + L // 2
        near = np.argmin(np.abs(t[:, None] - centers[None, :]), axis=1)
        ext = np.array([segs[f][(i - starts[f]) % L] for i, f in zip(t, near)]) / gain
        out = np.where(covered, num / np.where(covered, den, 1.0), ext)
        return out
    idx = np.where(covered)[0]
    return np.interp(np.arange(n), idx, num[idx] / den[idx])


def r2(q, qh):
    return 1 - np.sum((q - qh) ** 2) / np.sum((q - q.mean()) ** 2)


def estimate(y, s2, **kw):
    return np.sqrt(np.maximum(power(y * y, **kw) - s2, 0.0))


def stats(v):
    v = np.asarray(v)
    return {
        "mean": float(v.mean()),
        "std": float(v.std(ddof=1)) if len(v) > 1 else 0.0,
        "min": float(v.min()),
        "max": float(v.max()),
        "n": int(len(v)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--out", default=str(Path(__file__).with_name("reference_values.json")))
    args = ap.parse_args()
    rng = np.random.default_rng(20240611)
    out = {"n_samples": N, "frame_length": L, "filter_order": ORDER, "gate_spread": SPREAD}

    h = transfer_function(8)
    out["tf_len_8_poles"] = len(h)
    phi = np.array([h[t:] @ h[: len(h) - t] for t in range(ORDER)])
    inv = {}
    for kappa in (0.1, 1.0, 10.0):
        lam, V = np.linalg.eigh(toeplitz(kappa * phi))
        g = (np.sqrt(kappa * phi[0]) * (V * lam**-0.5) @ V.T)[:, ORDER // 2]
        prod = np.abs(np.fft.fft(g, 4096)) * np.abs(np.fft.fft(h, 4096))
        inv[str(kappa)] = float(prod.std() / prod.mean())
    out["analytic_inverse_rel_std"] = inv

    white, fig3 = [], []
    for _ in range(20):
        x, q, _, s2 = simulate(6, 8, -5.0, rng)
        y, _ = whiten(x)
        r0 = y @ y / N
        white.append(max(abs(y[t:] @ y[: N - t] / N / r0) for t in range(1, ORDER + 1)))
        fig3.append(r2(q, estimate(y, s2)))
    out["whiteness_max_lag_corr"] = stats(white)
    out["fig3_r2"] = stats(fig3)

    gated, ungated = [], []
    for _ in range(20):
        y, q, s2 = on_bin(3, 10.0, rng)
        gated.append(r2(q, estimate(y, s2)))
        ungated.append(r2(q, estimate(y, s2, gate=False)))
    out["onbin_k3_10db_gated_r2"] = stats(gated)
    out["onbin_k3_10db_ungated_r2"] = stats(ungated)

    sweep = {}
    for snr in (-20, -10, -5, 0, 10, 20):
        v = []
        for _ in range(args.runs):
            K, P = rng.integers(5, 21, 2)
            x, q, _, s2 = simulate(K, P, float(snr), rng)
            v.append(r2(q, estimate(whiten(x)[0], s2)))
        sweep[str(snr)] = stats(v)
    out["sweep_r2"] = sweep

    cells = {}
    for P in (5, 20):
        for K in (5, 20):
            v = []
            for _ in range(50):
                x, q, _, s2 = simulate(K, P, 0.0, rng)
                v.append(r2(q, estimate(whiten(x)[0], s2)))
            cells[f"poles{P}_k{K}"] = stats(v)
    out["param_cells_0db_r2"] = cells

    Path(args.out).write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
