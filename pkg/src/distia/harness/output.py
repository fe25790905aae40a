"""CSV and SVG writers for sweep results."""

import csv
import io
from xml.sax.saxutils import escape

__all__ = ['emit_csv', 'emit_svg', 'csv_text', 'svg_text', 'line_chart_svg', 'write_text']

CSV_COLUMNS = ('snr_db', 'user', 'mean_rate', 'stderr', 'degenerate_fraction')
PALETTE = ('#1f77b4', '#d62728', '#2ca02c', '#ff7f0e', '#9467bd', '#8c564b')


def _fmt(x):
    return repr(float(x))


def csv_text(result):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(CSV_COLUMNS)
    for p, point in enumerate(result.points):
        deg = result.degenerate_fraction[p] if p < len(result.degenerate_fraction) else 0.0
        for i, rate in enumerate(point.per_user_rate):
            err = point.per_user_stderr[i] if i < len(point.per_user_stderr) else 0.0
            writer.writerow((_fmt(point.P_dB), i + 1, _fmt(rate), _fmt(err), _fmt(deg)))
    return buf.getvalue()


def emit_csv(result, path):
    """Write one row per (SNR, user), users numbered from 1."""
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(csv_text(result))


def _ticks(lo, hi, n=6):
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + k * step for k in range(n)]


def line_chart_svg(xs, series, title, xlabel, ylabel, width=640, height=420):
    """
    Self-contained SVG line chart.

    `series` is a list of ``(label, ys)`` pairs sharing the abscissae `xs`.
    """
    left, right, top, bottom = 60, 130, 40, 50
    pw, ph = width - left - right, height - top - bottom
    xs = [float(x) for x in xs]
    ys = [float(y) for _, col in series for y in col]
    x_lo, x_hi = (min(xs), max(xs)) if xs else (0.0, 1.0)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    y_lo = min(0.0, min(ys)) if ys else 0.0
    y_hi = max(ys) if ys else 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0

    def sx(x):
        return left + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y):
        return top + ph - (y - y_lo) / (y_hi - y_lo) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.2f}" y="22" text-anchor="middle" font-size="14">'
        f'{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for x in _ticks(x_lo, x_hi):
        out.append(f'<line x1="{sx(x):.2f}" y1="{top + ph}" x2="{sx(x):.2f}" '
                   f'y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(x):.2f}" y="{top + ph + 18}" text-anchor="middle">'
                   f'{x:g}</text>')
    for y in _ticks(y_lo, y_hi):
        out.append(f'<line x1="{left - 5}" y1="{sy(y):.2f}" x2="{left}" y2="{sy(y):.2f}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{sy(y) + 4:.2f}" text-anchor="end">{y:.1f}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 12}" text-anchor="middle">'
               f'{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.2f})">{escape(ylabel)}</text>')
    for n, (label, col) in enumerate(series):
        color = PALETTE[n % len(PALETTE)]
        pts = ' '.join(f'{sx(x):.2f},{sy(float(y)):.2f}' for x, y in zip(xs, col))
        out.append(f'<polyline class="series{n + 1}" fill="none" stroke="{color}" '
                   f'stroke-width="2" points="{pts}"/>')
        ly = top + 14 + 18 * n
        lx = left + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{escape(label)}</text>')
    out.append('</svg>')
    return '\n'.join(out) + '\n'


def svg_text(result, title='Average rate per user'):
    xs = [p.P_dB for p in result.points]
    K = len(result.points[0].per_user_rate) if result.points else 0
    series = [(f'User {i + 1}', [p.per_user_rate[i] for p in result.points]) for i in range(K)]
    return line_chart_svg(xs, series, title, 'SNR [dB]', 'Rate [bits/channel use]')


def write_text(text, path):
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)


def emit_svg(result, path, title='Average rate per user'):
    """Self-contained SVG line chart: rate against SNR, one polyline per user."""
    write_text(svg_text(result, title=title), path)
