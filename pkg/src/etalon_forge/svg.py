"""Bare-bones SVG line plots: one polyline, two axes, labels."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=20, top=30, bottom=50)


def _ticks(lo, hi, count=5):
    return np.linspace(lo, hi, count)


def line_plot(x, y, *, title="", xlabel="", ylabel="", ylim=None) -> str:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = (float(y.min()), float(y.max())) if ylim is None else ylim
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    w = WIDTH - MARGIN["left"] - MARGIN["right"]
    h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * w

    def py(v):
        return MARGIN["top"] + (1.0 - (np.clip(v, y0, y1) - y0) / (y1 - y0)) * h

    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px(x), py(y)))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{w}" height="{h}" '
        'fill="none" stroke="black"/>',
    ]
    for v in _ticks(x0, x1):
        parts.append(f'<text x="{px(v):.2f}" y="{MARGIN["top"] + h + 16}" '
                     f'text-anchor="middle">{v:.6g}</text>')
    for v in _ticks(y0, y1):
        parts.append(f'<text x="{MARGIN["left"] - 6}" y="{py(v) + 4:.2f}" '
                     f'text-anchor="end">{v:.4g}</text>')
    parts.append(f'<polyline fill="none" stroke="#1f5fa8" stroke-width="1" points="{pts}"/>')
    parts.append(f'<text x="{WIDTH / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    parts.append(f'<text x="{MARGIN["left"] + w / 2}" y="{HEIGHT - 10}" '
                 f'text-anchor="middle">{escape(xlabel)}</text>')
    parts.append(f'<text x="16" y="{MARGIN["top"] + h / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 16 {MARGIN["top"] + h / 2})">{escape(ylabel)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_profile_svg(path, profile, title="", db=True) -> None:
    lam_nm = profile.wavelengths * 1e9
    if db:
        y, label, ylim = profile.db(1e-12), "transmission (dB)", None
    else:
        y, label, ylim = profile.intensity, "transmission", (0.0, max(1.0, float(profile.intensity.max())))
    svg = line_plot(lam_nm, y, title=title, xlabel="wavelength (nm)", ylabel=label, ylim=ylim)
    with open(path, "w") as fh:
        fh.write(svg)


def write_fit_svg(path, reports, title="fit vs model order") -> None:
    ok = [r for r in reports if r.error is None]
    svg = line_plot([r.order for r in ok], [r.fit_percent for r in ok], title=title,
                    xlabel="order", ylabel="fit (%)")
    with open(path, "w") as fh:
        fh.write(svg)
