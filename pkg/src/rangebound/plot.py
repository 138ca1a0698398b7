"""Deterministic two-panel SVG rendering of a planar localization result."""
from xml.sax.saxutils import escape

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .domgraph import assemble
from .errors import DimensionUnsupported, RangeBoundError
from .outer import vertex_images

PANEL = 400.0
MARGIN = 20.0
N_ARC = 128

_STYLE = """
.anchor{fill:#222}
.annulus-inner{fill:none;stroke:#7a9cc6;stroke-dasharray:4 3}
.annulus-outer{fill:none;stroke:#7a9cc6}
.xd-hull{fill:#e8e0c8;fill-opacity:0.6;stroke:#b0a070}
.box{fill:none;stroke:#c0392b;stroke-width:1.5}
.inner-ellipsoid{fill:none;stroke:#2e6fd1;stroke-width:1.5}
.outer-ellipsoid{fill:none;stroke:#27935a;stroke-width:1.5}
.truth{stroke:#000;stroke-width:1.5}
.estimate{fill:#c0392b}
.panel-frame{fill:none;stroke:#999}
text{font-family:sans-serif;font-size:11px}
""".strip()


_LEGEND = [("anchor", "anchors"), ("annulus-outer", "measurement annuli"),
           ("xd-hull", "X_d vertex hull"), ("box", "outer box"),
           ("inner-ellipsoid", "inner ellipsoid"), ("outer-ellipsoid", "outer ellipsoid"),
           ("truth", "true location"), ("estimate", "estimates")]
_SWATCH = {
    "anchor": "fill:#222", "annulus-outer": "fill:#7a9cc6", "xd-hull": "fill:#e8e0c8",
    "box": "fill:#c0392b", "inner-ellipsoid": "fill:#2e6fd1", "outer-ellipsoid": "fill:#27935a",
    "truth": "fill:#000", "estimate": "fill:#c0392b",
}


def _f(x):
    return f"{float(x):.6g}"


def _pts(P):
    return " ".join(f"{_f(x)},{_f(y)}" for x, y in P)


def _circle_dirs(k=N_ARC):
    t = 2 * np.pi * np.arange(k) / k
    return np.column_stack([np.cos(t), np.sin(t)])


def _sqrtm(P):
    w, V = np.linalg.eigh(0.5 * (P + P.T))
    return (V * np.sqrt(np.maximum(w, 0.0))) @ V.T


def _box_corners(box):
    V, lo, hi = np.asarray(box["basis"]), np.asarray(box["lo"]), np.asarray(box["hi"])
    g = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    return g @ V


def _hull(scenario, bounds):
    try:
        W = vertex_images(assemble(scenario), bounds)
        return W[ConvexHull(W).vertices]
    except (RangeBoundError, QhullError, ValueError):
        return None


class _View:
    def __init__(self, lo, hi, x0):
        span = np.maximum(hi - lo, 1e-12)
        self.s = (PANEL - 2 * MARGIN) / float(np.max(span))
        mid = 0.5 * (lo + hi)
        self.tx = x0 + PANEL / 2 - self.s * mid[0]
        self.ty = PANEL / 2 + self.s * mid[1]
        self.x0 = x0

    @property
    def transform(self):
        return f"matrix({_f(self.s)} 0 0 {_f(-self.s)} {_f(self.tx)} {_f(self.ty)})"


def render_svg(scenario, bounds, sets):
    """SVG text for a 2-D scenario.

    ``sets`` is a result document (or a subset of one): keys ``box``,
    ``inner_ellipsoid``, ``outer_ellipsoid`` and ``estimates`` are drawn when
    present.  The left panel shows all anchors and annuli, the right panel
    zooms onto the box.
    """
    if scenario.dim != 2:
        raise DimensionUnsupported(f"plotting needs n = 2, got n = {scenario.dim}")
    A = scenario.anchors
    r_in, r_out = np.sqrt(bounds.lo), np.sqrt(bounds.hi)
    box = sets.get("box")
    corners = _box_corners(box) if box else None
    est = sets.get("estimates") or {}
    truth = scenario.true_location

    lo = np.min(np.vstack([A - r_out[:, None], A + r_out[:, None]]), axis=0)
    hi = np.max(np.vstack([A - r_out[:, None], A + r_out[:, None]]), axis=0)
    full = _View(lo, hi, 0.0)
    if corners is not None:
        zl, zh = corners.min(axis=0), corners.max(axis=0)
        pad = 0.15 * np.max(zh - zl) + 1e-9
        zoom = _View(zl - pad, zh + pad, PANEL)
    else:
        zoom = _View(lo, hi, PANEL)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" '
        f'width="{_f(2 * PANEL)}" height="{_f(PANEL + 60)}" viewBox="0 0 {_f(2 * PANEL)} {_f(PANEL + 60)}">',
        f"<style>{_STYLE}</style>",
        "<defs>",
        '<clipPath id="clip-full"><rect x="0" y="0" width="400" height="400"/></clipPath>',
        '<clipPath id="clip-zoom"><rect x="400" y="0" width="400" height="400"/></clipPath>',
        '<g id="scene">',
    ]
    ns = 'vector-effect="non-scaling-stroke"'
    hull = _hull(scenario, bounds)
    if hull is not None:
        out.append(f'<polygon class="xd-hull" {ns} points="{_pts(hull)}"/>')
    for i, (a, ri, ro) in enumerate(zip(A, r_in, r_out)):
        out.append(f'<circle class="annulus-inner" data-anchor="{i}" {ns} cx="{_f(a[0])}" cy="{_f(a[1])}" r="{_f(ri)}"/>')
        out.append(f'<circle class="annulus-outer" data-anchor="{i}" {ns} cx="{_f(a[0])}" cy="{_f(a[1])}" r="{_f(ro)}"/>')
    if corners is not None:
        out.append(f'<polygon class="box" {ns} points="{_pts(corners)}"/>')
    D = _circle_dirs()
    if sets.get("inner_ellipsoid"):
        c = np.asarray(sets["inner_ellipsoid"]["center"])
        W = np.asarray(sets["inner_ellipsoid"]["shape"])
        out.append(f'<polygon class="inner-ellipsoid" {ns} points="{_pts(c + D @ W.T)}"/>')
    if sets.get("outer_ellipsoid"):
        c = np.asarray(sets["outer_ellipsoid"]["center"])
        R = _sqrtm(np.asarray(sets["outer_ellipsoid"]["shape"]))
        out.append(f'<polygon class="outer-ellipsoid" {ns} points="{_pts(c + D @ R.T)}"/>')
    out += ["</g>", "</defs>"]

    for name, view in (("full", full), ("zoom", zoom)):
        out.append(f'<g class="panel" id="panel-{name}" clip-path="url(#clip-{name})">')
        out.append(f'<rect class="panel-frame" x="{_f(view.x0)}" y="0" width="{_f(PANEL)}" height="{_f(PANEL)}"/>')
        out.append(f'<use xlink:href="#scene" href="#scene" transform="{view.transform}"/>')
        # markers are drawn in screen units so they stay readable at any zoom
        def screen(p):
            return view.tx + view.s * p[0], view.ty - view.s * p[1]

        for a in A:
            x, y = screen(a)
            out.append(f'<rect class="anchor" x="{_f(x - 3)}" y="{_f(y - 3)}" width="6" height="6"/>')
        if truth is not None:
            x, y = screen(truth)
            out.append(f'<path class="truth" d="M{_f(x - 5)} {_f(y - 5)}L{_f(x + 5)} {_f(y + 5)}'
                       f'M{_f(x - 5)} {_f(y + 5)}L{_f(x + 5)} {_f(y - 5)}"/>')
        for key in ("c_b", "x_hat"):
            if est.get(key) is not None:
                x, y = screen(est[key])
                out.append(f'<circle class="estimate" data-estimate="{key}" cx="{_f(x)}" cy="{_f(y)}" r="3"/>')
        out.append("</g>")

    drawn = {"xd-hull": hull is not None, "box": corners is not None,
             "inner-ellipsoid": bool(sets.get("inner_ellipsoid")),
             "outer-ellipsoid": bool(sets.get("outer_ellipsoid")),
             "truth": truth is not None, "estimate": bool(est)}
    legend = [(c, t) for c, t in _LEGEND if drawn.get(c, True)]
    out.append('<g class="legend">')
    for k, (cls, label) in enumerate(legend):
        x = 10 + 195 * (k % 4)
        y = PANEL + 18 + 22 * (k // 4)
        out.append(f'<rect class="swatch" style="{_SWATCH[cls]}" x="{_f(x)}" y="{_f(y - 8)}" width="12" height="8"/>')
        out.append(f'<text x="{_f(x + 18)}" y="{_f(y)}">{escape(label)}</text>')
    out += ["</g>", "</svg>", ""]
    return "\n".join(out)
