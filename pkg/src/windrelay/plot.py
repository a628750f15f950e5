"""Self-contained SVG rendering of mho characteristics and impedance loci."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

CANVAS = 800
MARGIN = 70
ZONE_COLORS = {1: "#d62728", 2: "#ff7f0e", 3: "#1f77b4", 0: "#7f7f7f"}
ZONE_LABELS = {1: "zone 1", 2: "zone 2", 3: "zone 3", 0: "no zone"}


@dataclass(frozen=True)
class Circle:
    reach: complex
    id: str
    color: str
    dashed: bool = False
    width: float = 1.5


@dataclass(frozen=True)
class Frame:
    """Maps R-X coordinates (ohm) to pixels with equal scale on both axes."""

    r_min: float
    x_max: float
    scale: float

    def px(self, z: complex) -> tuple[float, float]:
        return (MARGIN + (z.real - self.r_min) * self.scale, MARGIN + (self.x_max - z.imag) * self.scale)


def _f(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def _nice_step(span: float) -> float:
    raw = span / 8.0
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 5, 10):
        if raw <= m * mag:
            return m * mag
    return 10 * mag


def _frame(r_lo: float, r_hi: float, x_lo: float, x_hi: float) -> Frame:
    span = max(r_hi - r_lo, x_hi - x_lo)
    plot = CANVAS - 2 * MARGIN
    scale = plot / span
    # center the shorter axis
    r_mid, x_mid = (r_lo + r_hi) / 2, (x_lo + x_hi) / 2
    return Frame(r_mid - span / 2, x_mid + span / 2, scale)


def render_rx_svg(
    circles: Sequence[Circle],
    points: Sequence[tuple[complex, int]],
    title: str = "",
    view: str = "full",
) -> str:
    """R-X diagram; ``view="locus"`` zooms on the impedance points."""
    if view == "locus" and points:
        rs = [z.real for z, _ in points]
        xs = [z.imag for z, _ in points]
        pad = max(max(rs) - min(rs), max(xs) - min(xs), 0.2) * 0.6
        r_lo, r_hi, x_lo, x_hi = min(rs) - pad, max(rs) + pad, min(xs) - pad, max(xs) + pad
    else:
        r_lo = x_lo = 0.0
        r_hi = x_hi = 0.0
        for c in circles:
            ctr, rad = c.reach / 2, abs(c.reach) / 2
            r_lo, r_hi = min(r_lo, ctr.real - rad), max(r_hi, ctr.real + rad)
            x_lo, x_hi = min(x_lo, ctr.imag - rad), max(x_hi, ctr.imag + rad)
        for z, _ in points:
            r_lo, r_hi = min(r_lo, z.real), max(r_hi, z.real)
            x_lo, x_hi = min(x_lo, z.imag), max(x_hi, z.imag)
        pad = 0.05 * max(r_hi - r_lo, x_hi - x_lo, 1.0)
        r_lo, r_hi, x_lo, x_hi = r_lo - pad, r_hi + pad, x_lo - pad, x_hi + pad
    fr = _frame(r_lo, r_hi, x_lo, x_hi)
    span = (CANVAS - 2 * MARGIN) / fr.scale
    lo_px, hi_px = MARGIN, CANVAS - MARGIN

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" '
        f'viewBox="0 0 {CANVAS} {CANVAS}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{CANVAS}" height="{CANVAS}" fill="white"/>',
        f'<defs><clipPath id="plot"><rect x="{lo_px}" y="{lo_px}" width="{hi_px - lo_px}" '
        f'height="{hi_px - lo_px}"/></clipPath></defs>',
        f'<text x="{CANVAS // 2}" y="30" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{lo_px}" y="{lo_px}" width="{hi_px - lo_px}" height="{hi_px - lo_px}" '
        'fill="none" stroke="#444"/>',
    ]

    step = _nice_step(span)
    out.append('<g id="grid" stroke="#e5e5e5" stroke-width="1">')
    ticks = []
    r0 = math.ceil(fr.r_min / step)
    for i in range(r0, r0 + 12):
        r = i * step
        x_px, _ = fr.px(complex(r, 0))
        if lo_px <= x_px <= hi_px:
            out.append(f'<line x1="{_f(x_px)}" y1="{lo_px}" x2="{_f(x_px)}" y2="{hi_px}"/>')
            ticks.append(f'<text x="{_f(x_px)}" y="{hi_px + 18}" text-anchor="middle">{round(r, 9):g}</text>')
    x_top = fr.x_max
    x0 = math.floor(x_top / step)
    for i in range(x0, x0 - 12, -1):
        x = i * step
        _, y_px = fr.px(complex(0, x))
        if lo_px <= y_px <= hi_px:
            out.append(f'<line x1="{lo_px}" y1="{_f(y_px)}" x2="{hi_px}" y2="{_f(y_px)}"/>')
            ticks.append(f'<text x="{lo_px - 8}" y="{_f(y_px + 4)}" text-anchor="end">{round(x, 9):g}</text>')
    out.append("</g>")
    out.extend(ticks)

    origin_x, origin_y = fr.px(0j)
    out.append('<g id="axes" stroke="#000" stroke-width="1" clip-path="url(#plot)">')
    out.append(f'<line x1="{lo_px}" y1="{_f(origin_y)}" x2="{hi_px}" y2="{_f(origin_y)}"/>')
    out.append(f'<line x1="{_f(origin_x)}" y1="{lo_px}" x2="{_f(origin_x)}" y2="{hi_px}"/>')
    out.append("</g>")
    out.append(f'<text x="{CANVAS // 2}" y="{CANVAS - 25}" text-anchor="middle">R (ohm)</text>')
    out.append(
        f'<text x="20" y="{CANVAS // 2}" text-anchor="middle" '
        f'transform="rotate(-90 20 {CANVAS // 2})">X (ohm)</text>'
    )

    out.append('<g id="characteristics" fill="none" clip-path="url(#plot)">')
    for c in circles:
        cx, cy = fr.px(c.reach / 2)
        dash = ' stroke-dasharray="6 4"' if c.dashed else ""
        out.append(
            f'<circle id="{escape(c.id)}" cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(abs(c.reach) / 2 * fr.scale)}" '
            f'stroke="{c.color}" stroke-width="{c.width}"{dash}/>'
        )
    out.append("</g>")

    out.append('<g id="locus" clip-path="url(#plot)">')
    for k, (z, zone) in enumerate(points):
        cx, cy = fr.px(z)
        out.append(
            f'<circle class="point zone{zone}" id="p{k}" cx="{_f(cx)}" cy="{_f(cy)}" r="3" '
            f'fill="{ZONE_COLORS.get(zone, "#000")}"/>'
        )
    out.append("</g>")

    out.append('<g id="legend">')
    for n, zone in enumerate((1, 2, 3, 0)):
        y = MARGIN + 16 + 18 * n
        out.append(f'<circle cx="{hi_px - 110}" cy="{y - 4}" r="4" fill="{ZONE_COLORS[zone]}"/>')
        out.append(f'<text x="{hi_px - 100}" y="{y}">{ZONE_LABELS[zone]}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
