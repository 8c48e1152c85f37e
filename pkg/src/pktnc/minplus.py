"""Exact min-plus algebra on nondecreasing piecewise-linear curves.

Curves live on [0, inf) and every coordinate is a `fractions.Fraction`, so
evaluation, convolution, deconvolution and the two deviation measures come
out exact, with no grid and no rounding. A curve is an ordered run of
segments; each segment starts at (start, value) and rises at a constant
slope until the next segment begins, the last one extending forever. An
upward gap between consecutive segments encodes a jump, the curve being
right-continuous at every breakpoint. That is enough to close the family
under the shapes that matter here:

* token bucket  alpha(t) = rho * t + sigma   (worth sigma already at t = 0)
* rate-latency  beta(t)  = R * (t - T)+
* their convolutions, deconvolutions and sums

The deviation measures are the usual bound extractors: the vertical
deviation sup_t {alpha(t) - beta(t)} is a backlog bound and the horizontal
deviation sup_t inf {tau >= 0 : alpha(t) <= beta(t + tau)} is a delay
bound, both computed by breakpoint enumeration.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction

from .errors import InstabilityError, ParameterError, UnsupportedCurveError
from .rationals import RationalLike, frac_json, frac_str, to_fraction

_ZERO = Fraction(0)


@dataclass(frozen=True)
class Segment:
    """One linear piece: f(x) = value + slope * (x - start) inside the piece."""

    start: Fraction
    value: Fraction
    slope: Fraction


@dataclass(frozen=True)
class TokenBucketParams:
    """Token bucket constraint: rate rho [bits/s], burst sigma [bits].

    Both parameters must be nonnegative; rho = 0 is a pure burst cap.
    """

    rho: Fraction
    sigma: Fraction

    def __init__(self, rho: RationalLike, sigma: RationalLike):
        object.__setattr__(self, "rho", to_fraction(rho, "rho"))
        object.__setattr__(self, "sigma", to_fraction(sigma, "sigma"))
        if self.rho < 0:
            raise ParameterError("token bucket rate rho must be >= 0")
        if self.sigma < 0:
            raise ParameterError("token bucket burst sigma must be >= 0")


@dataclass(frozen=True)
class RateLatencyParams:
    """Rate-latency service: rate R > 0 [bits/s], latency T >= 0 [s]."""

    rate: Fraction
    latency: Fraction

    def __init__(self, rate: RationalLike, latency: RationalLike):
        object.__setattr__(self, "rate", to_fraction(rate, "rate"))
        object.__setattr__(self, "latency", to_fraction(latency, "latency"))
        if self.rate <= 0:
            raise ParameterError("rate-latency rate must be > 0")
        if self.latency < 0:
            raise ParameterError("rate-latency latency must be >= 0")


@dataclass(frozen=True)
class Curve:
    """Nonnegative nondecreasing piecewise-linear function on [0, inf)."""

    segments: tuple[Segment, ...]

    def __init__(self, segments):
        segs = [
            Segment(to_fraction(s[0], "start"), to_fraction(s[1], "value"),
                    to_fraction(s[2], "slope"))
            if not isinstance(s, Segment) else s
            for s in segments
        ]
        if not segs:
            raise ParameterError("a curve needs at least one segment")
        if segs[0].start != 0:
            raise ParameterError("the first segment must start at x = 0")
        normalized: list[Segment] = []
        for seg in segs:
            if seg.slope < 0:
                raise ParameterError("segment slopes must be >= 0")
            if seg.value < 0:
                raise ParameterError("segment values must be >= 0")
            if not normalized:
                normalized.append(seg)
                continue
            prev = normalized[-1]
            if seg.start <= prev.start:
                raise ParameterError("segment starts must be strictly increasing")
            reach = prev.value + prev.slope * (seg.start - prev.start)
            if seg.value < reach:
                raise ParameterError("curve must be nondecreasing (downward jump)")
            if seg.value == reach and seg.slope == prev.slope:
                continue  # collinear continuation, merge
            normalized.append(seg)
        object.__setattr__(self, "segments", tuple(normalized))
        object.__setattr__(self, "_starts", [s.start for s in self.segments])

    # -- evaluation ---------------------------------------------------------

    def value(self, t: RationalLike) -> Fraction:
        """f(t); the curve is right-continuous at breakpoints."""
        t = to_fraction(t, "t")
        if t < 0:
            raise ParameterError("curves are defined on t >= 0")
        idx = bisect.bisect_right(self._starts, t) - 1
        seg = self.segments[idx]
        return seg.value + seg.slope * (t - seg.start)

    def value_left(self, t: RationalLike) -> Fraction:
        """Left limit f(t-); only defined for t > 0."""
        t = to_fraction(t, "t")
        if t <= 0:
            raise ParameterError("left limits require t > 0")
        idx = bisect.bisect_left(self._starts, t) - 1
        seg = self.segments[idx]
        return seg.value + seg.slope * (t - seg.start)

    # -- shape queries ------------------------------------------------------

    @property
    def breakpoints(self) -> tuple[Fraction, ...]:
        return tuple(s.start for s in self.segments)

    @property
    def last_breakpoint(self) -> Fraction:
        return self.segments[-1].start

    @property
    def terminal_slope(self) -> Fraction:
        return self.segments[-1].slope

    @property
    def terminal_value(self) -> Fraction:
        """Value at the last breakpoint (the eventual constant if flat)."""
        return self.segments[-1].value

    def is_f0(self) -> bool:
        """True when f(0) = 0, the admission test for service curves."""
        return self.segments[0].value == 0

    def has_interior_jump(self) -> bool:
        for prev, seg in zip(self.segments, self.segments[1:]):
            if seg.value != prev.value + prev.slope * (seg.start - prev.start):
                return True
        return False

    def is_convex(self) -> bool:
        """Convex as a function on [0, inf): no interior jump, slopes rising."""
        if self.has_interior_jump():
            return False
        slopes = [s.slope for s in self.segments]
        return all(a <= b for a, b in zip(slopes, slopes[1:]))

    def is_concave(self) -> bool:
        """Concave on [0, inf): no interior jump, slopes falling."""
        if self.has_interior_jump():
            return False
        slopes = [s.slope for s in self.segments]
        return all(a >= b for a, b in zip(slopes, slopes[1:]))

    # -- monotone inverses --------------------------------------------------

    def inverse_inf(self, y: Fraction) -> Fraction | None:
        """inf {x >= 0 : f(x) >= y}, or None when f never reaches y."""
        if y <= self.segments[0].value:
            return _ZERO
        for seg, end in self._pieces():
            if seg.value >= y:
                return seg.start
            if seg.slope > 0:
                x = seg.start + (y - seg.value) / seg.slope
                if end is None or x < end:
                    return x
                # value y is only approached inside this piece; the next
                # piece starts at or above it, handled next iteration
        return None

    def inverse_sup(self, y: Fraction) -> Fraction | None:
        """sup {x >= 0 : f(x) <= y}, or None when f stays <= y forever.

        For a nondecreasing f this equals inf {x : f(x) > y}, so it also
        serves as the strict inverse. Returns 0 when f(0) > y already
        (the supremum of an empty set is clamped to the domain edge).
        """
        if self.segments[0].value > y:
            return _ZERO
        best = _ZERO
        for seg, end in self._pieces():
            if seg.value > y:
                break
            if end is None:
                if seg.slope == 0:
                    return None  # <= y on the whole final ray
                return seg.start + (y - seg.value) / seg.slope
            reach = seg.value + seg.slope * (end - seg.start)
            if reach <= y:
                best = end
                continue
            return seg.start + (y - seg.value) / seg.slope
        return best

    def _pieces(self):
        """Yield (segment, end) with end None for the final ray."""
        for i, seg in enumerate(self.segments):
            end = self.segments[i + 1].start if i + 1 < len(self.segments) else None
            yield seg, end

    @classmethod
    def from_points(cls, points, terminal_slope: Fraction) -> "Curve":
        """Continuous interpolation through (x, y) points, sorted, x0 = 0."""
        segs = []
        for i, (x, y) in enumerate(points):
            if i + 1 < len(points):
                nx, ny = points[i + 1]
                if nx == x:
                    raise ParameterError("duplicate abscissa in from_points")
                segs.append(Segment(x, y, (ny - y) / (nx - x)))
            else:
                segs.append(Segment(x, y, terminal_slope))
        return cls(segs)


# -- constructors -----------------------------------------------------------


def make_token_bucket(params: TokenBucketParams) -> Curve:
    """alpha(t) = rho * t + sigma, worth sigma at t = 0 already."""
    return Curve([Segment(_ZERO, params.sigma, params.rho)])


def make_rate_latency(params: RateLatencyParams) -> Curve:
    """beta(t) = R * (t - T)+."""
    if params.latency == 0:
        return Curve([Segment(_ZERO, _ZERO, params.rate)])
    return Curve([
        Segment(_ZERO, _ZERO, _ZERO),
        Segment(params.latency, _ZERO, params.rate),
    ])


def zero_curve() -> Curve:
    return Curve([Segment(_ZERO, _ZERO, _ZERO)])


def evaluate(curve: Curve, t: RationalLike) -> Fraction:
    return curve.value(t)


def evaluate_left(curve: Curve, t: RationalLike) -> Fraction:
    return curve.value_left(t)


def add_constant(curve: Curve, amount: RationalLike) -> Curve:
    """Raise the whole curve by a nonnegative constant."""
    amount = to_fraction(amount, "amount")
    if amount < 0:
        raise ParameterError("can only raise a curve by a nonnegative amount")
    return Curve([Segment(s.start, s.value + amount, s.slope) for s in curve.segments])


# -- min-plus convolution ---------------------------------------------------


def convolve(first: Curve, second: Curve) -> Curve:
    """Min-plus convolution (f conv g)(t) = inf_{0<=s<=t} f(s) + g(t-s).

    For convex inputs (rate-latency curves and anything else with rising
    slopes) the result is exact: the infimum convolution of convex
    piecewise-linear functions is their epigraph sum, obtained by sorting
    all segments by slope and chaining them from f(0) + g(0). Two
    rate-latency curves therefore compose to the rate-latency curve with
    rate min(R1, R2) and latency T1 + T2.

    Inputs that are not both convex fall back to a sampled approximation
    (documented in `convolve_sampled`); exact results are only guaranteed
    on the convex family.
    """
    if first.is_convex() and second.is_convex():
        return _convolve_convex(first, second)
    return convolve_sampled(first, second)


def _convolve_convex(first: Curve, second: Curve) -> Curve:
    pieces = []  # (slope, length or None for the final ray)
    for curve in (first, second):
        for seg, end in curve._pieces():
            pieces.append((seg.slope, None if end is None else end - seg.start))
    # chain in slope order; a final ray absorbs every steeper piece behind it
    pieces.sort(key=lambda p: (p[0], p[1] is None))
    x = _ZERO
    y = first.value(_ZERO) + second.value(_ZERO)
    segs = []
    for slope, length in pieces:
        segs.append(Segment(x, y, slope))
        if length is None:
            break
        x += length
        y += slope * length
    return Curve(segs)


def convolve_sampled(first: Curve, second: Curve, samples: int = 256) -> Curve:
    """Sampled min-plus convolution for shapes outside the convex family.

    Evaluates the infimum over a regular grid spanning both curves'
    breakpoints and interpolates. The result is approximate: exact at grid
    points up to the grid-cell slope bound, linear in between. Use
    `convolve` for convex inputs, which are computed exactly.
    """
    if samples < 2:
        raise ParameterError("need at least 2 samples")
    horizon = first.last_breakpoint + second.last_breakpoint
    if horizon == 0:
        horizon = Fraction(1)
    step = horizon / samples
    grid = [step * k for k in range(samples + 1)]
    points = []
    prev = None
    for t in grid:
        best = first.value(t) + second.value(_ZERO)
        for s in grid:
            if s > t:
                break
            cand = first.value(s) + second.value(t - s)
            if cand < best:
                best = cand
        cand = first.value(_ZERO) + second.value(t)
        if cand < best:
            best = cand
        if prev is not None and best < prev:
            best = prev  # keep the sampled envelope monotone
        prev = best
        points.append((t, best))
    terminal = min(first.terminal_slope, second.terminal_slope)
    return Curve.from_points(points, terminal)


# -- min-plus deconvolution -------------------------------------------------


def deconvolve_at(alpha: Curve, beta: Curve, t: RationalLike) -> Fraction:
    """(alpha deconv beta)(t) = sup_{u>=0} alpha(t+u) - beta(u), pointwise.

    Exact for arbitrary piecewise-linear inputs: the difference is
    piecewise-linear in u with breakpoints where either curve breaks, so
    the supremum is attained at one of those (or approached at a left
    limit, which is also enumerated). Requires the supremum to be finite,
    i.e. alpha's long-run slope must not exceed beta's.
    """
    t = to_fraction(t, "t")
    if t < 0:
        raise ParameterError("deconvolution is evaluated at t >= 0")
    _require_stable(alpha, beta)
    candidates = {_ZERO}
    candidates.update(beta.breakpoints)
    for xa in alpha.breakpoints:
        if xa - t >= 0:
            candidates.add(xa - t)
    best = None
    for u in candidates:
        val = alpha.value(t + u) - beta.value(u)
        if best is None or val > best:
            best = val
        if u > 0:
            val = alpha.value_left(t + u) - beta.value_left(u)
            if val > best:
                best = val
    return best


def deconvolve(alpha: Curve, beta: Curve) -> Curve:
    """Output envelope alpha deconv beta, exact on concave/convex pairs.

    For concave alpha and convex beta the supremum is jointly concave in
    (t, u), so the result is concave piecewise-linear and its breakpoints
    sit among the pairwise breakpoint differences; evaluating there and
    interpolating is exact. A token bucket (rho, sigma) against a
    rate-latency (R, T) with rho <= R comes out as the token bucket
    (rho, sigma + rho * T).

    Raises InstabilityError when alpha's long-run slope exceeds beta's
    (the supremum diverges), and UnsupportedCurveError for shapes outside
    the concave/convex family; `deconvolve_at` still evaluates those
    pointwise.
    """
    if not beta.is_f0():
        raise ParameterError("deconvolution expects a service curve with beta(0) = 0")
    _require_stable(alpha, beta)
    if not (alpha.is_concave() and beta.is_convex()):
        raise UnsupportedCurveError(
            "exact deconvolution covers concave alpha against convex beta; "
            "use deconvolve_at for pointwise values of other shapes"
        )
    candidates = {_ZERO}
    for xa in alpha.breakpoints:
        for xb in beta.breakpoints:
            if xa - xb > 0:
                candidates.add(xa - xb)
    points = [(t, deconvolve_at(alpha, beta, t)) for t in sorted(candidates)]
    return Curve.from_points(points, alpha.terminal_slope)


def _require_stable(alpha: Curve, beta: Curve) -> None:
    if alpha.terminal_slope > beta.terminal_slope:
        raise InstabilityError(
            "input rate exceeds service rate "
            f"({frac_str(alpha.terminal_slope)} > {frac_str(beta.terminal_slope)}); "
            "the supremum is unbounded"
        )


# -- deviations -------------------------------------------------------------


def vertical_deviation(alpha: Curve, beta: Curve) -> Fraction:
    """sup_t {alpha(t) - beta(t)}: the backlog bound extractor.

    The difference is piecewise-linear, so the supremum sits at a
    breakpoint of either curve (values and left limits both checked) or
    diverges, which the terminal slopes decide.
    """
    _require_stable(alpha, beta)
    candidates = {_ZERO}
    candidates.update(alpha.breakpoints)
    candidates.update(beta.breakpoints)
    best = None
    for c in candidates:
        val = alpha.value(c) - beta.value(c)
        if best is None or val > best:
            best = val
        if c > 0:
            val = alpha.value_left(c) - beta.value_left(c)
            if val > best:
                best = val
    return best


def horizontal_deviation(alpha: Curve, beta: Curve) -> Fraction:
    """sup_t inf {tau >= 0 : alpha(t) <= beta(t + tau)}: the delay extractor.

    Writing I(y) = inf {x : beta(x) >= y}, the inner infimum is
    max(0, I(alpha(t)) - t). That function is piecewise-linear in t with
    kinks only where alpha breaks or where alpha crosses the level of a
    breakpoint of beta, so the supremum is found by evaluating there,
    including one-sided limits (beta plateaus make the inverse jump).
    """
    if alpha.terminal_slope > beta.terminal_slope:
        raise InstabilityError("input rate exceeds service rate; delay is unbounded")
    if beta.terminal_slope == 0 and alpha.terminal_value > beta.terminal_value:
        raise InstabilityError(
            "service flattens out below the input's eventual level; delay is unbounded"
        )

    levels = set()
    for xb in beta.breakpoints:
        levels.add(beta.value(xb))
        if xb > 0:
            levels.add(beta.value_left(xb))
    candidates = {_ZERO}
    candidates.update(alpha.breakpoints)
    for level in levels:
        for t in (alpha.inverse_inf(level), alpha.inverse_sup(level)):
            if t is not None:
                candidates.add(t)

    best = _ZERO
    for t in sorted(candidates):
        # at t
        lag = _lag(beta.inverse_inf(alpha.value(t)), t)
        if lag is None:
            raise InstabilityError("service never reaches the input level; delay is unbounded")
        best = max(best, lag)
        # just before t
        if t > 0:
            lag = _lag(beta.inverse_inf(alpha.value_left(t)), t)
            if lag is not None:
                best = max(best, lag)
        # just after t: when alpha keeps rising, the required level drops
        # toward alpha(t) from above, landing on beta's strict inverse
        if _rises_right_of(alpha, t):
            lag = _lag(beta.inverse_sup(alpha.value(t)), t)
            if lag is not None:
                best = max(best, lag)
    return best


def _lag(x: Fraction | None, t: Fraction) -> Fraction | None:
    if x is None:
        return None
    return max(_ZERO, x - t)


def _rises_right_of(curve: Curve, t: Fraction) -> bool:
    """True when the curve strictly increases on (t, t + eps).

    Only the segment governing the immediate right of t matters: on a
    flat stretch the level is unchanged just after t, so the strict
    inverse does not apply there even if the curve climbs again later
    (later rises are covered by their own candidate points).
    """
    idx = bisect.bisect_right(curve._starts, t) - 1
    return curve.segments[idx].slope > 0


# -- comparisons ------------------------------------------------------------


def pointwise_le(first: Curve, second: Curve) -> bool:
    """True when first(t) <= second(t) for every t >= 0 (exact)."""
    if first.terminal_slope > second.terminal_slope:
        return False
    candidates = {_ZERO}
    candidates.update(first.breakpoints)
    candidates.update(second.breakpoints)
    for c in candidates:
        if first.value(c) > second.value(c):
            return False
        if c > 0 and first.value_left(c) > second.value_left(c):
            return False
    return True


# -- serialization ----------------------------------------------------------


def curve_to_text(curve: Curve) -> str:
    """One line per segment: 'start value slope', exact fractions."""
    return "\n".join(
        f"{frac_str(s.start)} {frac_str(s.value)} {frac_str(s.slope)}"
        for s in curve.segments
    )


def curve_from_text(text: str) -> Curve:
    segs = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParameterError(
                f"curve line {line_no}: expected 'start value slope', got {line!r}"
            )
        segs.append(tuple(to_fraction(p, f"curve line {line_no}") for p in parts))
    if not segs:
        raise ParameterError("empty curve text")
    return Curve(segs)


def curve_json(curve: Curve) -> list:
    """Segments as JSON objects with exact and approximate fields."""
    return [
        {
            "start": frac_json(s.start),
            "value": frac_json(s.value),
            "slope": frac_json(s.slope),
        }
        for s in curve.segments
    ]
